//! Softmax cross-entropy kernels shared by the classification problems.
//!
//! Weights are stored row-major as `c x d`: entry `(j, k)` lives at `j * d + k`.

pub(crate) fn logits(w: &[f64], c: usize, d: usize, x: &[f64]) -> Vec<f64> {
    (0..c)
        .map(|j| w[j * d..(j + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(crate) fn cross_entropy(w: &[f64], c: usize, d: usize, x: &[f64], y: &[f64]) -> f64 {
    let z = logits(w, c, d, x);
    log_sum_exp(&z) - z.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
}

/// `out += scale * (p - y) x'`.
pub(crate) fn add_grad(w: &[f64], c: usize, d: usize, x: &[f64], y: &[f64], scale: f64, out: &mut [f64]) {
    let p = softmax(&logits(w, c, d, x));
    for j in 0..c {
        let r = scale * (p[j] - y[j]);
        for k in 0..d {
            out[j * d + k] += r * x[k];
        }
    }
}

/// `out += scale * (diag(p) - p p') (V x) x'`.
pub(crate) fn add_hvp(w: &[f64], c: usize, d: usize, x: &[f64], v: &[f64], scale: f64, out: &mut [f64]) {
    let p = softmax(&logits(w, c, d, x));
    let s = logits(v, c, d, x);
    let ps: f64 = p.iter().zip(&s).map(|(a, b)| a * b).sum();
    for j in 0..c {
        let q = scale * p[j] * (s[j] - ps);
        for k in 0..d {
            out[j * d + k] += q * x[k];
        }
    }
}

/// `<p - y, V x>`, the directional derivative of the cross-entropy along `V`.
pub(crate) fn grad_dot(w: &[f64], c: usize, d: usize, x: &[f64], y: &[f64], v: &[f64]) -> f64 {
    let p = softmax(&logits(w, c, d, x));
    let s = logits(v, c, d, x);
    (0..c).map(|j| (p[j] - y[j]) * s[j]).sum()
}
