//! Equilibrium measures of polynomial external fields, their spectral curves
//! `y = h √R`, and the `g` and `ξ` transforms.
//!
//! Three cut structures are solved: one soft-soft cut, one cut ending at a
//! hard wall of the domain, and two cuts placed symmetrically about the
//! origin. Endpoints come from the large-`z` expansion of `V'/√R`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::EquilibriumError;
use crate::interval::{Interval, IntervalSet};
use crate::io::{fmt17, CsvWriter};
use crate::poly;
use crate::potential::{eval_reg_coeffs, Potential};
use crate::quad::{integrate, Quadrand};

const QUAD_ABS: f64 = 1e-13;
const QUAD_REL: f64 = 1e-12;
/// Tolerance on the variational equality, on `𝓢` and at exterior points.
pub const VARIATIONAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    OneCut,
    SymmetricTwoCut,
    HardEdgeOneCut,
    /// Closed-form curve supplied directly.
    Given,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::OneCut => "one_cut",
            Structure::SymmetricTwoCut => "symmetric_two_cut",
            Structure::HardEdgeOneCut => "hard_edge_one_cut",
            Structure::Given => "given",
        })
    }
}

impl FromStr for Structure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "one_cut" => Ok(Structure::OneCut),
            "symmetric_two_cut" => Ok(Structure::SymmetricTwoCut),
            "hard_edge_one_cut" => Ok(Structure::HardEdgeOneCut),
            other => Err(format!("unknown structure '{other}'")),
        }
    }
}

/// `y(z) = leading_sign · h(z) · √R(z)` with `R = Π(z − zeros)/Π(z − poles)`
/// and principal square roots taken factor by factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub h_coeffs: Vec<f64>,
    pub r_zeros: Vec<f64>,
    pub r_poles: Vec<f64>,
    pub leading_sign: f64,
}

/// Exact distances to the ends of an integration segment, used to evaluate
/// square-root factors without cancellation near branch points.
#[derive(Clone, Copy)]
struct Offsets {
    lo: f64,
    dlo: f64,
    hi: f64,
    dhi: f64,
}

impl Offsets {
    fn diff(&self, x: f64, q: f64) -> f64 {
        if q == self.lo {
            self.dlo
        } else if q == self.hi {
            -self.dhi
        } else {
            x - q
        }
    }
}

fn sqrt_side(d: f64, side: Side) -> Complex64 {
    if d > 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else if d < 0.0 {
        Complex64::new(0.0, side.sign() * (-d).sqrt())
    } else {
        Complex64::new(0.0, 0.0)
    }
}

impl SpectralCurve {
    pub fn new(h_coeffs: Vec<f64>, mut r_zeros: Vec<f64>, mut r_poles: Vec<f64>) -> Self {
        r_zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
        r_poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        SpectralCurve { h_coeffs, r_zeros, r_poles, leading_sign: 1.0 }
    }

    /// Half the excess of zeros over poles: `√R ~ z^D` at infinity.
    pub fn half_degree(&self) -> i32 {
        (self.r_zeros.len() as i32 - self.r_poles.len() as i32) / 2
    }

    /// Sorted zeros and poles of `R`, i.e. the boundary of the support.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.r_zeros.iter().chain(&self.r_poles).copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    pub fn h(&self, z: Complex64) -> Complex64 {
        poly::eval_complex(&self.h_coeffs, z) * self.leading_sign
    }

    pub fn h_real(&self, x: f64) -> f64 {
        poly::eval::<f64>(&self.h_coeffs, x) * self.leading_sign
    }

    /// `√R` at `base + w` with each factor formed as `(base − q) + w`.
    fn sqrt_r_offset(&self, base: f64, w: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for q in &self.r_zeros {
            acc *= (Complex64::new(base - q, 0.0) + w).sqrt();
        }
        for p in &self.r_poles {
            acc /= (Complex64::new(base - p, 0.0) + w).sqrt();
        }
        acc
    }

    /// Principal-branch `√R(z)`. On the real axis use [`Self::sqrt_r_side`].
    pub fn sqrt_r(&self, z: Complex64) -> Complex64 {
        self.sqrt_r_offset(0.0, z)
    }

    /// Analytic continuation of `y` off the support.
    pub fn y(&self, z: Complex64) -> Complex64 {
        if z.im == 0.0 {
            return self.y_side(z.re, Side::Plus);
        }
        self.h(z) * self.sqrt_r(z)
    }

    fn y_offset(&self, base: f64, w: Complex64) -> Complex64 {
        self.h(Complex64::new(base, 0.0) + w) * self.sqrt_r_offset(base, w)
    }

    fn sqrt_r_real(&self, x: f64, side: Side, off: Option<Offsets>) -> Complex64 {
        let diff = |q: f64| off.map_or(x - q, |o| o.diff(x, q));
        let mut acc = Complex64::new(1.0, 0.0);
        for q in &self.r_zeros {
            acc *= sqrt_side(diff(*q), side);
        }
        for p in &self.r_poles {
            let s = sqrt_side(diff(*p), side);
            if s.norm() == 0.0 {
                return Complex64::new(f64::INFINITY, f64::INFINITY);
            }
            acc /= s;
        }
        acc
    }

    /// Boundary value `√R_±(x)` from the upper (`Plus`) or lower half-plane.
    pub fn sqrt_r_side(&self, x: f64, side: Side) -> Complex64 {
        self.sqrt_r_real(x, side, None)
    }

    /// Boundary value `y_±(x)`.
    pub fn y_side(&self, x: f64, side: Side) -> Complex64 {
        self.sqrt_r_real(x, side, None) * self.h_real(x)
    }

    fn y_side_off(&self, x: f64, side: Side, off: Offsets) -> Complex64 {
        self.sqrt_r_real(x, side, Some(off)) * self.h_real(x)
    }

    /// Curve of the reflected problem, `ỹ(z) = −y(−z)`.
    pub fn reflected(&self) -> Self {
        let d = self.half_degree();
        let h: Vec<f64> = self
            .h_coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let s = if (d + j as i32) % 2 == 0 { -1.0 } else { 1.0 };
                s * c
            })
            .collect();
        SpectralCurve {
            h_coeffs: h,
            r_zeros: self.r_zeros.iter().map(|q| -q).rev().collect(),
            r_poles: self.r_poles.iter().map(|p| -p).rev().collect(),
            leading_sign: self.leading_sign,
        }
    }

    /// Roots of `h`.
    pub fn h_roots(&self) -> Vec<Complex64> {
        poly::roots(&self.h_coeffs)
    }
}

/// Integrates `f(x, x − lo, hi − x)` over `[lo, hi]` with `x = c − r cos θ`,
/// passing exact distances to both ends.
fn segment_integral<T: Quadrand>(lo: f64, hi: f64, mut f: impl FnMut(f64, f64, f64) -> T) -> T {
    if hi <= lo {
        return T::zero();
    }
    let r = 0.5 * (hi - lo);
    integrate(
        |th: f64| {
            let (s, co) = (0.5 * th).sin_cos();
            let dlo = 2.0 * r * s * s;
            let dhi = 2.0 * r * co * co;
            let x = if dlo < dhi { lo + dlo } else { hi - dhi };
            f(x, dlo, dhi) * (r * th.sin())
        },
        0.0,
        PI,
        QUAD_ABS,
        QUAD_REL,
    )
    .0
}

/// Coefficients of `Π(1 − q u)^{-1/2} Π(1 − p u)^{1/2}` up to `u^order`.
fn sqrt_r_series(zeros: &[f64], poles: &[f64], order: usize) -> Vec<f64> {
    let mut s = vec![Complex64::new(1.0, 0.0)];
    for q in zeros {
        s = poly::series_mul(&s, &poly::binomial_series(Complex64::new(*q, 0.0), -0.5, order), order);
    }
    for p in poles {
        s = poly::series_mul(&s, &poly::binomial_series(Complex64::new(*p, 0.0), 0.5, order), order);
    }
    s.resize(order + 1, Complex64::new(0.0, 0.0));
    s.iter().map(|c| c.re).collect()
}

/// Expansion of `V'(z)/√R(z)` at infinity: the polynomial part `h` and the
/// coefficients `c_l` of `z^{-l}`, `l = 1..=lmax`.
pub fn laurent_at_infinity(reg: &[f64], zeros: &[f64], poles: &[f64], lmax: usize) -> (Vec<f64>, Vec<f64>) {
    let reg = poly::trim(reg);
    let d = reg.len().saturating_sub(1) as i64;
    let dd = (zeros.len() as i64 - poles.len() as i64) / 2;
    let order = (d + lmax as i64 + 1).max(0) as usize;
    let s = sqrt_r_series(zeros, poles, order);
    let coeff = |shift: i64| -> f64 {
        reg.iter()
            .enumerate()
            .filter_map(|(m, t)| {
                let k = m as i64 + shift;
                (k >= 0).then(|| t * s[k as usize])
            })
            .sum()
    };
    let c: Vec<f64> = (1..=lmax as i64).map(|l| coeff(l - dd)).collect();
    let h: Vec<f64> = if d >= dd { (0..=(d - dd)).map(|j| coeff(-dd - j)).collect() } else { Vec::new() };
    (h, c)
}

/// Damped Newton iteration with a finite-difference Jacobian.
fn newton<F>(f: F, mut x: Vec<f64>, max_iter: usize) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut fx = f(&x)?;
    let dim = x.len();
    for _ in 0..max_iter {
        let r = norm(&fx);
        if r < 1e-14 {
            return Some(x);
        }
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..dim {
            let h = 1e-7 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let (fp, fm) = (f(&xp)?, f(&xm)?);
            for i in 0..dim {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let step = jac.lu().solve(&DVector::from_vec(fx.clone()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - lambda * s).collect();
            if let Some(ft) = f(&trial) {
                if norm(&ft) < r || norm(&ft) < 1e-14 {
                    let small = step.iter().zip(&x).all(|(s, a)| (lambda * s).abs() <= 1e-15 * (1.0 + a.abs()));
                    x = trial;
                    fx = ft;
                    accepted = true;
                    if small {
                        return (norm(&fx) < 1e-10).then_some(x);
                    }
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return (r < 1e-10).then_some(x);
        }
    }
    (norm(&fx) < 1e-10).then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFraction {
    pub gap: Interval,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMeasure {
    pub support: IntervalSet,
    pub curve: SpectralCurve,
    pub ell: f64,
    pub gap_fractions: Vec<GapFraction>,
    pub exterior_points: Vec<f64>,
    pub p_sup: f64,
    /// `V_reg` coefficients the measure was solved for.
    pub reg: Vec<f64>,
    /// The domain `𝓘`.
    pub domain: IntervalSet,
    pub structure: Structure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Support,
    Exterior,
    Gap,
    Outside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalRow {
    pub x: f64,
    /// `2∫log|x−y|ρ(y)dy − V_reg(x) − ℓ`.
    pub value: f64,
    pub region: Region,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport {
    pub rows: Vec<VariationalRow>,
    pub max_equality_residual: f64,
    /// Largest value met off `𝓢 ∪ 𝓔` (must be negative).
    pub max_inequality_value: f64,
}

impl VariationalReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new();
        w.meta("max_equality_residual", fmt17(self.max_equality_residual))
            .meta("max_inequality_value", fmt17(self.max_inequality_value))
            .header(&["x", "residual", "region", "verdict"]);
        for r in &self.rows {
            let region = match r.region {
                Region::Support => "support",
                Region::Exterior => "exterior",
                Region::Gap => "gap",
                Region::Outside => "outside",
            };
            w.row(&[fmt17(r.x), fmt17(r.value), region.into(), if r.pass { "pass" } else { "fail" }.into()]);
        }
        w.finish()
    }
}

impl EquilibriumMeasure {
    /// Completes a measure from a known curve: computes `ℓ`, exterior
    /// points and filling fractions, and checks positivity and containment.
    pub fn from_curve(
        curve: SpectralCurve,
        reg: Vec<f64>,
        domain: IntervalSet,
        structure: Structure,
    ) -> Result<Self, EquilibriumError> {
        let name = structure.to_string();
        let ends = curve.endpoints();
        if ends.is_empty() || !ends.len().is_multiple_of(2) {
            return Err(EquilibriumError::Infeasible {
                structure: name,
                reason: format!("curve has {} branch points", ends.len()),
            });
        }
        let ivs: Vec<Interval> = ends.chunks(2).map(|c| Interval::new(c[0], c[1])).collect();
        let support = IntervalSet::new(ivs).map_err(|e| EquilibriumError::Infeasible {
            structure: name.clone(),
            reason: e.to_string(),
        })?;
        for iv in support.intervals() {
            let inside = domain.intervals().iter().any(|d| d.lo <= iv.lo && iv.hi <= d.hi);
            if !inside {
                return Err(EquilibriumError::Infeasible {
                    structure: name,
                    reason: format!("support interval {iv} leaves the domain {domain}"),
                });
            }
        }
        let mut em = EquilibriumMeasure {
            p_sup: support.sup(),
            support,
            curve,
            ell: 0.0,
            gap_fractions: Vec::new(),
            exterior_points: Vec::new(),
            reg,
            domain,
            structure,
        };
        em.check_positivity()?;
        let x0 = em.support.intervals()[0].midpoint();
        em.ell = 2.0 * em.log_potential(x0) - em.v_reg(x0);
        em.exterior_points = em.find_exterior_points();
        em.p_sup = em.exterior_points.iter().fold(em.support.sup(), |a, b| a.max(*b));
        em.gap_fractions = em.compute_fractions();
        Ok(em)
    }

    fn check_positivity(&self) -> Result<(), EquilibriumError> {
        let mut probes = Vec::new();
        for iv in self.support.intervals() {
            let m = 400;
            for i in 1..m {
                let th = PI * i as f64 / m as f64;
                probes.push(iv.midpoint() - 0.5 * iv.width() * th.cos());
            }
        }
        for r in self.curve.h_roots() {
            if r.im.abs() < 1e-9 && self.support.contains_interior(r.re) {
                for d in [-1e-6, 1e-6] {
                    probes.push(r.re + d * (1.0 + r.re.abs()));
                }
            }
        }
        let scale = probes.iter().map(|x| self.density(*x).abs()).fold(0.0, f64::max).max(1e-300);
        for x in probes {
            if !self.support.contains_interior(x) {
                continue;
            }
            let rho = self.density(x);
            if rho < -1e-12 * scale.max(1.0) {
                return Err(EquilibriumError::NegativeDensity { structure: self.structure.to_string(), x, rho });
            }
        }
        Ok(())
    }

    pub fn v_reg(&self, x: f64) -> f64 {
        eval_reg_coeffs(&self.reg, Complex64::new(x, 0.0), 0).re
    }

    /// `ρ(x)` and whether `x` lies in `𝓢`; zero outside.
    pub fn density_flagged(&self, x: f64) -> (f64, bool) {
        if !self.support.contains(x) {
            return (0.0, false);
        }
        (self.curve.y_side(x, Side::Plus).im / (2.0 * PI), true)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.density_flagged(x).0
    }

    fn density_off(&self, x: f64, off: Offsets) -> f64 {
        self.curve.y_side_off(x, Side::Plus, off).im / (2.0 * PI)
    }

    /// Masses of the support intervals.
    pub fn interval_masses(&self) -> Vec<f64> {
        self.support
            .intervals()
            .iter()
            .map(|iv| {
                segment_integral(iv.lo, iv.hi, |x, dlo, dhi| {
                    self.density_off(x, Offsets { lo: iv.lo, dlo, hi: iv.hi, dhi })
                })
            })
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.interval_masses().iter().sum()
    }

    /// `∫_x^∞ ρ`.
    pub fn mass_right_of(&self, x: f64) -> f64 {
        let mut m = 0.0;
        for iv in self.support.intervals() {
            if x <= iv.lo {
                m += segment_integral(iv.lo, iv.hi, |s, dlo, dhi| {
                    self.density_off(s, Offsets { lo: iv.lo, dlo, hi: iv.hi, dhi })
                });
            } else if x < iv.hi {
                m += segment_integral(x, iv.hi, |s, _, dhi| {
                    self.density_off(s, Offsets { lo: f64::NAN, dlo: 0.0, hi: iv.hi, dhi })
                });
            }
        }
        m
    }

    /// Logarithmic potential `U(x) = ∫ log|x − y| ρ(y) dy` for real `x`.
    pub fn log_potential(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for iv in self.support.intervals() {
            let (a, b) = (iv.lo, iv.hi);
            if x > a && x < b {
                acc += segment_integral(a, x, |y, dlo, dhi| {
                    dhi.ln() * self.density_off(y, Offsets { lo: a, dlo, hi: f64::NAN, dhi: 0.0 })
                });
                acc += segment_integral(x, b, |y, dlo, dhi| {
                    dlo.ln() * self.density_off(y, Offsets { lo: f64::NAN, dlo: 0.0, hi: b, dhi })
                });
            } else {
                acc += segment_integral(a, b, |y, dlo, dhi| {
                    let d = if x <= a { dlo + (a - x) } else { dhi + (x - b) };
                    d.ln() * self.density_off(y, Offsets { lo: a, dlo, hi: b, dhi })
                });
            }
        }
        acc
    }

    /// `2U(x) − V_reg(x) − ℓ`.
    pub fn variational_value(&self, x: f64) -> f64 {
        2.0 * self.log_potential(x) - self.v_reg(x) - self.ell
    }

    /// `g(z) = ∫ log(z − x) dμ(x)`. Real `z ≤ p` needs a side.
    pub fn g(&self, z: Complex64, side: Option<Side>) -> Result<Complex64, EquilibriumError> {
        if z.im == 0.0 && z.re <= self.p_sup {
            let side = side.ok_or_else(|| EquilibriumError::OnCut(z.to_string()))?;
            let re = self.log_potential(z.re);
            let im = side.sign() * PI * self.mass_right_of(z.re);
            return Ok(Complex64::new(re, im));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for iv in self.support.intervals() {
            acc += segment_integral(iv.lo, iv.hi, |y, dlo, dhi| {
                (z - y).ln() * self.density_off(y, Offsets { lo: iv.lo, dlo, hi: iv.hi, dhi })
            });
        }
        Ok(acc)
    }

    /// `ξ(z) = −½ ∫_p^z y(s) ds`. Real `z < p` needs a side.
    pub fn xi(&self, z: Complex64, side: Option<Side>) -> Result<Complex64, EquilibriumError> {
        let p = self.p_sup;
        if z.im == 0.0 {
            let x = z.re;
            if x == p {
                return Ok(Complex64::new(0.0, 0.0));
            }
            if x > p {
                let v = segment_integral(p, x, |s, dlo, dhi| {
                    self.curve.y_side_off(s, Side::Plus, Offsets { lo: p, dlo, hi: x, dhi })
                });
                return Ok(v * -0.5);
            }
            let side = side.ok_or_else(|| EquilibriumError::OnCut(z.to_string()))?;
            return Ok(self.xi_boundary(x, side));
        }
        let w = z - p;
        let (v, _) = integrate(
            |t: f64| self.curve.y_offset(p, w * (t * t)) * w * (2.0 * t),
            0.0,
            1.0,
            QUAD_ABS,
            QUAD_REL,
        );
        Ok(v * -0.5)
    }

    /// `ξ_±(x)` for real `x < p`, integrating along the real axis.
    fn xi_boundary(&self, x: f64, side: Side) -> Complex64 {
        let mut breaks: Vec<f64> = self
            .curve
            .endpoints()
            .into_iter()
            .chain(self.exterior_points.iter().copied())
            .filter(|e| *e > x && *e < self.p_sup)
            .collect();
        breaks.push(x);
        breaks.push(self.p_sup);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let mut acc = Complex64::new(0.0, 0.0);
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            acc += segment_integral(lo, hi, |s, dlo, dhi| {
                self.curve.y_side_off(s, side, Offsets { lo, dlo, hi, dhi })
            });
        }
        acc * 0.5
    }

    fn find_exterior_points(&self) -> Vec<f64> {
        let scale = 1.0 + self.support.intervals().iter().map(|iv| iv.lo.abs().max(iv.hi.abs())).fold(0.0, f64::max);
        let mut out = Vec::new();
        for r in self.curve.h_roots() {
            if r.im.abs() > 1e-7 * scale {
                continue;
            }
            let x = r.re;
            if self.support.distance(x) < 1e-9 * scale || !self.domain.contains(x) {
                continue;
            }
            if self.variational_value(x).abs() < VARIATIONAL_TOL {
                out.push(x);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-7 * scale);
        out
    }

    /// The set `𝓙 = 𝓢 ∪ 𝓔`.
    pub fn j_set(&self) -> IntervalSet {
        let mut ivs: Vec<Interval> = self.support.intervals().to_vec();
        for e in &self.exterior_points {
            ivs.push(Interval::new(*e, *e));
        }
        ivs.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        IntervalSet::new(ivs).expect("exterior points lie off the support")
    }

    fn compute_fractions(&self) -> Vec<GapFraction> {
        let masses = self.interval_masses();
        let total: f64 = masses.iter().sum();
        self.j_set()
            .gaps()
            .into_iter()
            .map(|gap| {
                let right: f64 = self
                    .support
                    .intervals()
                    .iter()
                    .zip(&masses)
                    .filter(|(iv, _)| iv.lo >= gap.hi)
                    .map(|(_, m)| m)
                    .sum();
                GapFraction { gap, epsilon: right / total }
            })
            .collect()
    }

    /// `ε` per gap of `𝓙`, left to right.
    pub fn filling_fractions(&self) -> &[GapFraction] {
        &self.gap_fractions
    }

    /// Variational equality on `𝓢 ∪ 𝓔` and strict inequality on the rest
    /// of `𝓘`, evaluated on `grid`. `V_reg` is taken from `p`.
    pub fn check_variational(&self, p: &Potential, grid: &[f64]) -> VariationalReport {
        let mut rows = Vec::with_capacity(grid.len());
        let mut max_eq: f64 = 0.0;
        let mut max_ineq = f64::NEG_INFINITY;
        for &x in grid {
            let value = 2.0 * self.log_potential(x) - eval_reg_coeffs(&p.reg, Complex64::new(x, 0.0), 0).re - self.ell;
            let region = if self.support.contains(x) {
                Region::Support
            } else if self.exterior_points.iter().any(|e| (e - x).abs() < 1e-12 * (1.0 + x.abs())) {
                Region::Exterior
            } else if p.support.contains(x) {
                Region::Gap
            } else {
                Region::Outside
            };
            let pass = match region {
                Region::Support | Region::Exterior => {
                    max_eq = max_eq.max(value.abs());
                    value.abs() < VARIATIONAL_TOL
                }
                Region::Gap => {
                    max_ineq = max_ineq.max(value);
                    value < 0.0
                }
                Region::Outside => true,
            };
            rows.push(VariationalRow { x, value, region, pass });
        }
        VariationalReport { rows, max_equality_residual: max_eq, max_inequality_value: max_ineq }
    }

    /// Measure of the reflected field `V(−x)`.
    pub fn reflected(&self) -> Self {
        let curve = self.curve.reflected();
        let reg = reflect_reg(&self.reg);
        let support = self.support.reflected();
        let mut exterior: Vec<f64> = self.exterior_points.iter().map(|e| -e).collect();
        exterior.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut em = EquilibriumMeasure {
            p_sup: 0.0,
            support,
            curve,
            ell: self.ell,
            gap_fractions: Vec::new(),
            exterior_points: exterior,
            reg,
            domain: self.domain.reflected(),
            structure: self.structure,
        };
        em.p_sup = em.exterior_points.iter().fold(em.support.sup(), |a, b| a.max(*b));
        em.gap_fractions = em.compute_fractions();
        em
    }

    /// CSV of `(x, rho)` over `grid`, with an `in_support` flag column.
    pub fn density_csv(&self, grid: &[f64]) -> String {
        let mut w = CsvWriter::new();
        w.meta("support", &self.support)
            .meta("structure", self.structure)
            .meta("ell", fmt17(self.ell))
            .meta("h_coeffs", format!("{:?}", self.curve.h_coeffs))
            .header(&["x", "rho", "in_support"]);
        for &x in grid {
            let (rho, inside) = self.density_flagged(x);
            w.row(&[fmt17(x), fmt17(rho), (inside as u8).to_string()]);
        }
        w.finish()
    }
}

/// Coefficients of `V_reg(−x)`.
pub fn reflect_reg(reg: &[f64]) -> Vec<f64> {
    reg.iter()
        .enumerate()
        .map(|(k, t)| if k % 2 == 0 { -t } else { *t })
        .collect()
}

fn infeasible(structure: Structure, reason: impl Into<String>) -> EquilibriumError {
    EquilibriumError::Infeasible { structure: structure.to_string(), reason: reason.into() }
}

/// Locates the minimiser of `V_reg` on a coarse window of `domain`.
fn coarse_minimum(reg: &[f64], domain: &IntervalSet) -> Option<(f64, f64)> {
    let v = |x: f64| eval_reg_coeffs(reg, Complex64::new(x, 0.0), 0).re;
    let mut best: Option<(f64, f64)> = None;
    for i in 0..=4000 {
        let x = -20.0 + 40.0 * i as f64 / 4000.0;
        if !domain.contains(x) {
            continue;
        }
        let vx = v(x);
        if best.is_none_or(|(_, b)| vx < b) {
            best = Some((x, vx));
        }
    }
    best
}

/// Sublevel window `{V ≤ min + level}` around the coarse minimiser.
fn sublevel(reg: &[f64], domain: &IntervalSet, level: f64) -> Option<(f64, f64)> {
    let (xm, vm) = coarse_minimum(reg, domain)?;
    let v = |x: f64| eval_reg_coeffs(reg, Complex64::new(x, 0.0), 0).re;
    let step = 1e-3;
    let mut lo = xm;
    while lo > -50.0 && domain.contains(lo - step) && v(lo - step) <= vm + level {
        lo -= step;
    }
    let mut hi = xm;
    while hi < 50.0 && domain.contains(hi + step) && v(hi + step) <= vm + level {
        hi += step;
    }
    Some((lo, hi))
}

/// Solves for the equilibrium measure of `V_reg` on `𝓘` with the requested
/// cut structure.
pub fn solve_support(p: &Potential, structure: Structure) -> Result<EquilibriumMeasure, EquilibriumError> {
    let reg = poly::trim(&p.reg).to_vec();
    if reg.is_empty() {
        return Err(infeasible(structure, "V_reg is constant"));
    }
    match structure {
        Structure::OneCut => solve_one_cut(&reg, &p.support),
        Structure::SymmetricTwoCut => solve_two_cut(&reg, &p.support),
        Structure::HardEdgeOneCut => solve_hard_edge(&reg, &p.support),
        Structure::Given => Err(infeasible(structure, "no solver for a given curve")),
    }
}

fn solve_one_cut(reg: &[f64], domain: &IntervalSet) -> Result<EquilibriumMeasure, EquilibriumError> {
    let st = Structure::OneCut;
    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        if !(x[1] > x[0]) {
            return None;
        }
        let (_, c) = laurent_at_infinity(reg, &[x[0], x[1]], &[], 2);
        Some(vec![c[0], c[1] - 2.0])
    };
    let (xm, _) = coarse_minimum(reg, domain).ok_or_else(|| infeasible(st, "domain misses the search window"))?;
    let curv = v_second(reg, xm);
    let mut guesses: Vec<(f64, f64)> = Vec::new();
    let r0 = if curv > 1e-3 { 2.0 / curv.sqrt() } else { 1.0 };
    for level in [1.0, 2.0, 4.0, 0.5] {
        if let Some((lo, hi)) = sublevel(reg, domain, level) {
            guesses.push((0.5 * (lo + hi), 0.5 * (hi - lo)));
        }
    }
    for r in [r0, 1.0, 2.0, 4.0, 0.5] {
        guesses.push((xm, r));
        guesses.push((0.0, r));
    }
    let mut first_err = None;
    for (c, r) in guesses {
        if r <= 0.0 {
            continue;
        }
        let Some(x) = newton(residual, vec![c - r, c + r], 100) else { continue };
        let (h, _) = laurent_at_infinity(reg, &x, &[], 2);
        let curve = SpectralCurve::new(h, x.clone(), Vec::new());
        match EquilibriumMeasure::from_curve(curve, reg.to_vec(), domain.clone(), st) {
            Ok(em) => return Ok(em),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or_else(|| EquilibriumError::NoConvergence("one_cut endpoint equations".into())))
}

/// `V''(x)` from the `V'` coefficients.
fn v_second(reg: &[f64], x: f64) -> f64 {
    let d: Vec<f64> = (1..reg.len()).map(|k| k as f64 * reg[k]).collect();
    poly::eval::<f64>(&d, x)
}

fn solve_two_cut(reg: &[f64], domain: &IntervalSet) -> Result<EquilibriumMeasure, EquilibriumError> {
    let st = Structure::SymmetricTwoCut;
    if reg.iter().enumerate().any(|(k, t)| k % 2 == 0 && *t != 0.0) {
        return Err(infeasible(st, "symmetric_two_cut requires an even V_reg"));
    }
    let zeros = |a2: f64, b2: f64| {
        let (a, b) = (a2.sqrt(), b2.sqrt());
        vec![-a, -b, b, a]
    };
    let residual = |x: &[f64]| -> Option<Vec<f64>> {
        if !(x[0] > x[1] && x[1] > 0.0) {
            return None;
        }
        let (_, c) = laurent_at_infinity(reg, &zeros(x[0], x[1]), &[], 3);
        Some(vec![c[0], c[2] - 2.0])
    };
    let positive = IntervalSet::new(vec![Interval::new(1e-9, f64::INFINITY)]).unwrap();
    let (xm, _) = coarse_minimum(reg, &positive).ok_or_else(|| infeasible(st, "no minimum on the positive axis"))?;
    if xm < 1e-3 {
        return Err(infeasible(st, "V_reg has a single well at the origin"));
    }
    let mut first_err = None;
    for centre in [xm, 0.9 * xm, 1.1 * xm] {
        for frac in [0.4, 0.2, 0.6, 0.8, 0.95] {
            let (outer, inner) = (centre * (1.0 + frac), centre * (1.0 - frac));
            let Some(x) = newton(residual, vec![outer * outer, inner * inner], 100) else { continue };
            let z = zeros(x[0], x[1]);
            let (h, _) = laurent_at_infinity(reg, &z, &[], 3);
            let curve = SpectralCurve::new(h, z, Vec::new());
            match EquilibriumMeasure::from_curve(curve, reg.to_vec(), domain.clone(), st) {
                Ok(em) => return Ok(em),
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
    }
    Err(first_err.unwrap_or_else(|| EquilibriumError::NoConvergence("symmetric_two_cut endpoint equations".into())))
}

/// Support `[s, e]` with a hard edge at the right end `e` of `domain`.
fn solve_right_hard_edge(reg: &[f64], domain: &IntervalSet) -> Result<EquilibriumMeasure, EquilibriumError> {
    let st = Structure::HardEdgeOneCut;
    let last = domain.intervals().last().ok_or_else(|| infeasible(st, "empty domain"))?;
    let e = last.hi;
    if !e.is_finite() {
        return Err(infeasible(st, "domain has no finite right end"));
    }
    let f = |s: f64| laurent_at_infinity(reg, &[s], &[e], 1).1[0] - 2.0;
    let mut d_prev = 0.0;
    let mut f_prev = f64::NAN;
    let mut bracket = None;
    let mut d = 1e-4;
    while d < 1e4 {
        let s = e - d;
        if s < last.lo {
            break;
        }
        let fs = f(s);
        if f_prev.is_finite() && f_prev.signum() != fs.signum() {
            bracket = Some((d_prev, d));
            break;
        }
        d_prev = d;
        f_prev = fs;
        d *= 1.25;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        EquilibriumError::NoConvergence("no sign change of the hard-edge mass condition".into())
    })?;
    let f_lo = f(e - lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(e - mid).signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = e - 0.5 * (lo + hi);
    let (h, _) = laurent_at_infinity(reg, &[s], &[e], 1);
    let curve = SpectralCurve::new(h, vec![s], vec![e]);
    EquilibriumMeasure::from_curve(curve, reg.to_vec(), domain.clone(), st)
}

fn solve_hard_edge(reg: &[f64], domain: &IntervalSet) -> Result<EquilibriumMeasure, EquilibriumError> {
    let right = solve_right_hard_edge(reg, domain);
    if right.is_ok() {
        return right;
    }
    let left = solve_right_hard_edge(&reflect_reg(reg), &domain.reflected()).map(|em| em.reflected());
    match left {
        Ok(mut em) => {
            // recompute ℓ on the original orientation
            let x0 = em.support.intervals()[0].midpoint();
            em.ell = 2.0 * em.log_potential(x0) - em.v_reg(x0);
            Ok(em)
        }
        Err(_) => right,
    }
}

/// Closed-form curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExampleCurve {
    /// `V = t x²/2 + x⁴/4` on the real line.
    Quartic { t: f64 },
    /// Same field with `t = −2 + δ`, keeping `δ` exact.
    QuarticShifted { delta: f64 },
    /// `V = −x` on `(−∞, 0]`.
    MarchenkoPastur,
}

/// Endpoint `a` and constant `c` of the one-cut quartic curve
/// `y = (x² + 2c)√(x² − a²)`, valid for `t ≥ −2`.
pub fn quartic_one_cut_params(delta: f64) -> (f64, f64) {
    let t = -2.0 + delta;
    let s = (0.25 * t * t + 3.0).sqrt();
    let a2 = 2.0 / 3.0 * (2.0 * s - t);
    let c = delta * (1.0 - 0.25 * delta) / (s - t);
    (a2.sqrt(), c)
}

pub fn example_curve(which: ExampleCurve) -> Result<EquilibriumMeasure, EquilibriumError> {
    match which {
        ExampleCurve::Quartic { t } => example_curve(ExampleCurve::QuarticShifted { delta: t + 2.0 }),
        ExampleCurve::QuarticShifted { delta } => {
            let t = -2.0 + delta;
            let reg = vec![0.0, t, 0.0, 1.0];
            if delta >= 0.0 {
                let (a, c) = quartic_one_cut_params(delta);
                let curve = SpectralCurve::new(vec![2.0 * c, 0.0, 1.0], vec![-a, a], Vec::new());
                EquilibriumMeasure::from_curve(curve, reg, IntervalSet::real_line(), Structure::Given)
            } else {
                let (a, b) = ((4.0 - delta).sqrt(), (-delta).sqrt());
                let curve = SpectralCurve::new(vec![0.0, 1.0], vec![-a, -b, b, a], Vec::new());
                EquilibriumMeasure::from_curve(curve, reg, IntervalSet::real_line(), Structure::Given)
            }
        }
        ExampleCurve::MarchenkoPastur => {
            let domain = IntervalSet::new(vec![Interval::new(f64::NEG_INFINITY, 0.0)]).unwrap();
            let curve = SpectralCurve::new(vec![-1.0], vec![-4.0], vec![0.0]);
            EquilibriumMeasure::from_curve(curve, vec![-1.0], domain, Structure::Given)
        }
    }
}
