//! Christoffel–Darboux kernels at finite `n`, their double-scaled form near
//! a critical point, and the sine, Airy and Bessel limits.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{CriticalPoint, EdgeSide};
use crate::error::{KernelError, OrthoError};
use crate::io::{fmt17, CsvWriter};
use crate::orthopoly::{default_resolution, orthonormal_at, recurrence_for, QuadratureRule, Recurrence};
use crate::potential::Potential;
use crate::special::{airy, bessel_j};

/// Below `CONFLUENT_TOL · max(1, |x|, |y|)` the diagonal formula is used.
pub const CONFLUENT_TOL: f64 = 1e-8;

/// `K_n(x, y)` and whether either point lies outside `𝓘`.
pub fn cd_kernel_flagged(r: &Recurrence, p: &Potential, x: f64, y: f64) -> (f64, bool) {
    let n = p.n;
    assert!(r.m_max >= n, "recurrence holds degree {} but kernel needs {}", r.m_max, n);
    if !p.support.contains(x) || !p.support.contains(y) {
        return (0.0, true);
    }
    let sb = r.b[n].sqrt();
    let scale = 1f64.max(x.abs()).max(y.abs());
    if (x - y).abs() < CONFLUENT_TOL * scale {
        let m = 0.5 * (x + y);
        let f = orthonormal_at(r, n, m, p.log_weight(m));
        return (sb * (f.chi * f.psi_prev - f.chi_prev * f.psi), false);
    }
    let fx = orthonormal_at(r, n, x, p.log_weight(x));
    let fy = orthonormal_at(r, n, y, p.log_weight(y));
    (sb * (fx.psi * fy.psi_prev - fx.psi_prev * fy.psi) / (x - y), false)
}

/// `K_n(x, y) = h_{n−1}^{−1} √(w(x)w(y)) (p_n(x)p_{n−1}(y) − p_n(y)p_{n−1}(x))/(x − y)`,
/// zero outside `𝓘`.
pub fn cd_kernel(r: &Recurrence, p: &Potential, x: f64, y: f64) -> f64 {
    cd_kernel_flagged(r, p, x, y).0
}

/// `∫ K_n(x, x) dx` on the nodes of `q`.
pub fn trace(r: &Recurrence, p: &Potential, q: &QuadratureRule) -> f64 {
    q.nodes.par_iter().zip(&q.dx).map(|(x, dx)| dx * cd_kernel(r, p, *x, *x)).sum()
}

/// `max |∫ K(x, y) K(y, z) dy − K(x, z)|` over the probes, with `∫` taken on `q`.
pub fn projection_residual(r: &Recurrence, p: &Potential, q: &QuadratureRule, probes: &[(f64, f64)]) -> f64 {
    probes
        .par_iter()
        .map(|(x, z)| {
            let s: f64 = q
                .nodes
                .iter()
                .zip(&q.dx)
                .map(|(y, dy)| dy * cd_kernel(r, p, *x, *y) * cd_kernel(r, p, *y, *z))
                .sum();
            (s - cd_kernel(r, p, *x, *z)).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Point `x_* ± n^{−Δ} u`; left edges are read in the reflected variable.
pub fn unscale(cp: &CriticalPoint, n: usize, u: f64) -> f64 {
    let s = (n as f64).powf(-cp.delta());
    let dir = if cp.side == EdgeSide::Left { -1.0 } else { 1.0 };
    cp.x_star + dir * s * u
}

/// `n^{−Δ} K_n(x_* + n^{−Δ} u, x_* + n^{−Δ} v)`.
pub fn scaled_kernel(r: &Recurrence, p: &Potential, cp: &CriticalPoint, u: f64, v: f64) -> Result<f64, KernelError> {
    let (x, y) = (unscale(cp, p.n, u), unscale(cp, p.n, v));
    for (s, z) in [(u, x), (v, y)] {
        if !p.support.contains(z) {
            return Err(KernelError::Outside(s));
        }
    }
    Ok((p.n as f64).powf(-cp.delta()) * cd_kernel(r, p, x, y))
}

/// `sin(π(u − v))/(π(u − v))`.
pub fn sine_kernel(u: f64, v: f64) -> f64 {
    let d = PI * (u - v);
    if d.abs() < 1e-8 {
        1.0 - d * d / 6.0
    } else {
        d.sin() / d
    }
}

/// `(Ai(u)Ai'(v) − Ai(v)Ai'(u))/(u − v)`, with diagonal `Ai'(u)² − u Ai(u)²`.
pub fn airy_kernel(u: f64, v: f64) -> f64 {
    let (au, apu) = airy(u);
    if (u - v).abs() < CONFLUENT_TOL * 1f64.max(u.abs()) {
        return apu * apu - u * au * au;
    }
    let (av, apv) = airy(v);
    (au * apv - av * apu) / (u - v)
}

/// Hard-edge Bessel kernel on `u, v ≥ 0`:
/// `(J_α(√u)√v J_α'(√v) − J_α(√v)√u J_α'(√u))/(2(u − v))`, diagonal
/// `¼(J_α(√u)² − J_{α+1}(√u) J_{α−1}(√u))`.
pub fn bessel_kernel(alpha: f64, u: f64, v: f64) -> Result<f64, KernelError> {
    if !(alpha > -1.0) {
        return Err(KernelError::Domain(format!("bessel order {alpha} must exceed -1")));
    }
    if !(u >= 0.0) || !(v >= 0.0) {
        return Err(KernelError::Domain(format!("bessel kernel needs u, v >= 0, got ({u}, {v})")));
    }
    if (u - v).abs() < CONFLUENT_TOL * 1f64.max(u.abs()) {
        let m = 0.5 * (u + v);
        if m == 0.0 {
            return Ok(if alpha == 0.0 {
                0.25
            } else if alpha > 0.0 {
                0.0
            } else {
                f64::INFINITY
            });
        }
        let s = m.sqrt();
        let j = bessel_j(alpha, s);
        return Ok(0.25 * (j * j - bessel_j(alpha + 1.0, s) * bessel_j(alpha - 1.0, s)));
    }
    // x J_α'(x) = α J_α(x) − x J_{α+1}(x)
    let xj = |t: f64| {
        let s = t.sqrt();
        (bessel_j(alpha, s), alpha * bessel_j(alpha, s) - s * bessel_j(alpha + 1.0, s))
    };
    let (ju, dju) = xj(u);
    let (jv, djv) = xj(v);
    Ok((ju * djv - jv * dju) / (2.0 * (u - v)))
}

/// Limit kernel and the map `K(u, v) ≈ c · L(c u, c v)` fixed by `τ_∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// `c = E₁/π`.
    Sine { c: f64 },
    /// `c = E₁^{2/3}`.
    Airy { c: f64 },
    /// `c = 4 E₀²`, evaluated at `c|u|, c|v|` on `u, v ≤ 0`.
    Bessel { order: f64, c: f64 },
    /// Compare successive `n` with each other.
    SelfCollapse,
}

impl Reference {
    pub fn name(&self) -> &'static str {
        match self {
            Reference::Sine { .. } => "sine",
            Reference::Airy { .. } => "airy",
            Reference::Bessel { .. } => "bessel",
            Reference::SelfCollapse => "self",
        }
    }

    pub fn eval(&self, u: f64, v: f64) -> Result<f64, KernelError> {
        match *self {
            Reference::Sine { c } => Ok(c * sine_kernel(c * u, c * v)),
            Reference::Airy { c } => Ok(c * airy_kernel(c * u, c * v)),
            Reference::Bessel { order, c } => {
                if u > 0.0 || v > 0.0 {
                    return Err(KernelError::Domain(format!("hard-edge reference needs u, v <= 0, got ({u}, {v})")));
                }
                Ok(c * bessel_kernel(order, -c * u, -c * v)?)
            }
            Reference::SelfCollapse => Err(KernelError::Domain("self reference has no closed form".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub n: usize,
    pub x_star: Option<f64>,
    pub delta: Option<f64>,
    pub scaled: bool,
    /// Grid points outside `𝓘`, reported as zero.
    pub flagged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub u_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    /// `values[i][j] = K(u_i, v_j)`.
    pub values: Vec<Vec<f64>>,
    pub outside: Vec<Vec<bool>>,
    pub meta: KernelMeta,
}

impl KernelGrid {
    /// Largest `|K(u,v) − K(v,u)|`; requires `u_grid == v_grid`.
    pub fn asymmetry(&self) -> f64 {
        let m = self.values.len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..i {
                worst = worst.max((self.values[i][j] - self.values[j][i]).abs());
            }
        }
        worst
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.values.len().min(self.v_grid.len())).map(|i| self.values[i][i]).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_diff(&self, other: &KernelGrid) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new();
        w.meta("n", self.meta.n).meta("scaled", self.meta.scaled).meta("flagged", self.meta.flagged);
        if let (Some(x), Some(d)) = (self.meta.x_star, self.meta.delta) {
            w.meta("x_star", fmt17(x)).meta("delta", fmt17(d));
        }
        w.header(&["u", "v", "value", "outside"]);
        for (i, u) in self.u_grid.iter().enumerate() {
            for (j, v) in self.v_grid.iter().enumerate() {
                let flag = self.outside[i][j] as u8;
                w.row(&[fmt17(*u), fmt17(*v), fmt17(self.values[i][j]), flag.to_string()]);
            }
        }
        w.finish()
    }
}

/// Finite-`n` kernel with its rule and recurrence.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    pub potential: Potential,
    pub rule: QuadratureRule,
    pub rec: Recurrence,
}

impl FiniteKernel {
    pub fn new(p: &Potential) -> Result<Self, OrthoError> {
        Self::with_resolution(p, default_resolution(p.n))
    }

    pub fn with_resolution(p: &Potential, resolution: usize) -> Result<Self, OrthoError> {
        let (rule, rec) = recurrence_for(p, p.n, resolution)?;
        Ok(FiniteKernel { potential: p.clone(), rule, rec })
    }

    pub fn n(&self) -> usize {
        self.potential.n
    }

    pub fn eval(&self, x: f64, y: f64) -> (f64, bool) {
        cd_kernel_flagged(&self.rec, &self.potential, x, y)
    }

    pub fn scaled(&self, cp: &CriticalPoint, u: f64, v: f64) -> Result<f64, KernelError> {
        scaled_kernel(&self.rec, &self.potential, cp, u, v)
    }

    /// Kernel on `u × v`; with `cp` the grid is in scaled variables.
    pub fn grid(&self, cp: Option<&CriticalPoint>, u: &[f64], v: &[f64]) -> KernelGrid {
        let n = self.n();
        let rows: Vec<Vec<(f64, bool)>> = u
            .par_iter()
            .map(|&ui| {
                v.iter()
                    .map(|&vj| match cp {
                        Some(c) => {
                            let (x, y) = (unscale(c, n, ui), unscale(c, n, vj));
                            let (k, f) = self.eval(x, y);
                            ((n as f64).powf(-c.delta()) * k, f)
                        }
                        None => self.eval(ui, vj),
                    })
                    .collect()
            })
            .collect();
        let flagged = rows.iter().flatten().filter(|e| e.1).count();
        KernelGrid {
            u_grid: u.to_vec(),
            v_grid: v.to_vec(),
            values: rows.iter().map(|r| r.iter().map(|e| e.0).collect()).collect(),
            outside: rows.iter().map(|r| r.iter().map(|e| e.1).collect()).collect(),
            meta: KernelMeta { n, x_star: cp.map(|c| c.x_star), delta: cp.map(|c| c.delta()), scaled: cp.is_some(), flagged },
        }
    }
}

/// Reference kernel on `u × v`.
pub fn reference_grid(reference: &Reference, u: &[f64], v: &[f64]) -> Result<Vec<Vec<f64>>, KernelError> {
    u.iter().map(|&a| v.iter().map(|&b| reference.eval(a, b)).collect()).collect()
}

/// Least-squares slope of `log err` against `log n`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(n, e)| *n > 0.0 && *e > 0.0 && e.is_finite()).map(|(n, e)| (n.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
