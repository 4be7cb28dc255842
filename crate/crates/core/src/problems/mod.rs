//! Benchmark problems implementing the oracle interfaces.

pub mod data;
pub mod hyperclean;
pub mod hyperopt;
mod multinomial;
pub mod quadratic;
pub mod toy;
pub mod wshape;

pub use data::{synth_dataset, Dataset};
pub use hyperclean::{make_hyperclean, HypercleanParams, Hyperclean};
pub use hyperopt::{make_hyperopt, HyperoptParams, Hyperopt};
pub use quadratic::{make_quad_bilevel, random_quad_bilevel, QuadBilevel, QuadBilevelParams};
pub use toy::BilinearToy;
pub use wshape::{make_wshape_minimax, w_shape, w_shape_d1, w_shape_d2, WShapeMinimax, WShapeParams};
