//! Small dense-polynomial helpers (coefficients in ascending order).

use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn eval<T>(coeffs: &[f64], z: T) -> T
where
    T: Copy + std::ops::Mul<Output = T> + std::ops::Add<f64, Output = T> + From<f64>,
{
    let mut acc = T::from(0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + *c;
    }
    acc
}

pub fn eval_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub fn eval_complex_coeffs(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub fn trim(coeffs: &[f64]) -> &[f64] {
    let len = coeffs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    &coeffs[..len]
}

/// Roots via the companion matrix, polished by a few Newton steps.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = trim(coeffs);
    if c.len() <= 1 {
        return Vec::new();
    }
    let deg = c.len() - 1;
    let lead = c[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -c[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let dc: Vec<f64> = (1..c.len()).map(|k| k as f64 * c[k]).collect();
    let mut out: Vec<Complex64> = eig
        .iter()
        .map(|r| {
            let mut z = Complex64::new(r.re, r.im);
            for _ in 0..3 {
                let d = eval_complex(&dc, z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = eval_complex(c, z) / d;
                if !step.re.is_finite() || !step.im.is_finite() || step.norm() > 1e-6 * (1.0 + z.norm()) {
                    break;
                }
                z -= step;
            }
            z
        })
        .collect();
    out.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    out
}

/// Coefficients of `(1 - q u)^γ` up to `u^order`.
pub fn binomial_series(q: Complex64, gamma: f64, order: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut c = Complex64::new(1.0, 0.0);
    out.push(c);
    for i in 1..=order {
        let fi = i as f64;
        c = c * (fi - 1.0 - gamma) / fi * q;
        out.push(c);
    }
    out
}

/// Truncated product of two power series.
pub fn series_mul(a: &[Complex64], b: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    for (i, ai) in a.iter().enumerate().take(order + 1) {
        for (j, bj) in b.iter().enumerate().take(order + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Expands `Π (z - r_i)` into ascending coefficients.
pub fn from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= ck * r;
        }
        c = next;
    }
    c
}
