//! Critical points of the spectral data, their double-scaling exponents,
//! scaled curves and the data of the local model problem.
//!
//! Left edges are handled by reflecting the problem (`x -> -x`,
//! `y(z) -> -y(-z)`) so that every edge is treated as a right edge.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{example_curve, EquilibriumMeasure, ExampleCurve, Side};
use crate::error::{ClassifyError, EquilibriumError};
use crate::interval::{Interval, IntervalSet};
use crate::poly;
use crate::potential::{Potential, Singularity};
use crate::quad::integrate;

/// Default half-width of the scaling disc, in units of `n^{-Δ}`.
pub const DISC_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Edge,
    Interior,
    Exterior,
}

impl fmt::Display for PointKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointKind::Edge => "edge",
            PointKind::Interior => "interior",
            PointKind::Exterior => "exterior",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSide {
    Left,
    Right,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `Δ = 2/(2k+3)` (edge), `1/(2k+1)` (interior), `1/(2k)` (exterior).
pub fn scaling_exponent(kind: PointKind, k: i32) -> Result<Rational, ClassifyError> {
    let valid = match kind {
        PointKind::Edge => k == -1 || (k >= 0 && k % 2 == 0),
        PointKind::Interior => k >= 0,
        PointKind::Exterior => k >= 1,
    };
    if !valid {
        return Err(ClassifyError::BadOrder { x: f64::NAN, kind: kind.to_string(), order: k });
    }
    let (num, den) = match kind {
        PointKind::Edge => (2, 2 * k as i64 + 3),
        PointKind::Interior => (1, 2 * k as i64 + 1),
        PointKind::Exterior => (1, 2 * k as i64),
    };
    let g = gcd(num, den);
    Ok(Rational { num: num / g, den: den / g })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x_star: f64,
    pub kind: PointKind,
    pub order_k: i32,
    pub delta: Rational,
    pub side: EdgeSide,
}

impl CriticalPoint {
    pub fn delta(&self) -> f64 {
        self.delta.value()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Tag {
    RZero,
    RPole,
    H,
    Sing,
    Ext,
}

struct Cluster {
    members: Vec<(Complex64, Tag)>,
}

impl Cluster {
    fn count(&self, tag: Tag) -> i32 {
        self.members.iter().filter(|m| m.1 == tag).count() as i32
    }

    /// Twice the vanishing exponent of `y` at the cluster.
    fn exponent2(&self) -> i32 {
        2 * self.count(Tag::H) + self.count(Tag::RZero) - self.count(Tag::RPole)
    }

    fn location(&self) -> f64 {
        let r: Vec<f64> = self
            .members
            .iter()
            .filter(|m| matches!(m.1, Tag::RZero | Tag::RPole))
            .map(|m| m.0.re)
            .collect();
        if r.len() == 1 {
            return r[0];
        }
        let core: Vec<f64> = self
            .members
            .iter()
            .filter(|m| matches!(m.1, Tag::RZero | Tag::RPole | Tag::H))
            .map(|m| m.0.re)
            .collect();
        let pool: Vec<f64> = if core.is_empty() { self.members.iter().map(|m| m.0.re).collect() } else { core };
        pool.iter().sum::<f64>() / pool.len() as f64
    }

    fn classify(&self, em: &EquilibriumMeasure) -> Result<CriticalPoint, ClassifyError> {
        let x = self.location();
        let e2 = self.exponent2();
        let r_count = self.count(Tag::RZero) + self.count(Tag::RPole);
        let (kind, k, side) = if e2.rem_euclid(2) == 1 {
            let mut rs: Vec<f64> = self
                .members
                .iter()
                .filter(|m| matches!(m.1, Tag::RZero | Tag::RPole))
                .map(|m| m.0.re)
                .collect();
            rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let top = *rs.last().unwrap();
            let right = em.support.intervals().iter().any(|iv| iv.hi == top);
            (PointKind::Edge, (e2 - 1) / 2, if right { EdgeSide::Right } else { EdgeSide::Left })
        } else if r_count > 0 || em.support.contains_interior(x) {
            if e2 % 4 != 0 || e2 < 0 {
                return Err(ClassifyError::BadOrder { x, kind: "interior".into(), order: e2 / 2 });
            }
            (PointKind::Interior, e2 / 4, EdgeSide::None)
        } else {
            if (e2 / 2) % 2 != 1 {
                return Err(ClassifyError::BadOrder { x, kind: "exterior".into(), order: e2 / 2 });
            }
            (PointKind::Exterior, (e2 / 2 + 1) / 2, EdgeSide::None)
        };
        let delta = scaling_exponent(kind, k).map_err(|_| ClassifyError::BadOrder {
            x,
            kind: kind.to_string(),
            order: k,
        })?;
        Ok(CriticalPoint { x_star: x, kind, order_k: k, delta, side })
    }
}

fn single_linkage(points: &[(Complex64, Tag)], tol: f64) -> Vec<Cluster> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i].0 - points[j].0).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<(Complex64, Tag)>> = Default::default();
    for (i, p) in points.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(*p);
    }
    groups.into_values().map(|members| Cluster { members }).collect()
}

/// Default clustering tolerance, `1e-7` times the size of the support.
pub fn default_tolerance(em: &EquilibriumMeasure) -> f64 {
    let scale = em.support.intervals().iter().map(|iv| iv.lo.abs().max(iv.hi.abs())).fold(1.0, f64::max);
    1e-7 * scale
}

/// Classifies every support endpoint, every zero of `h` within `tol` of
/// `𝓙`, every exterior point, and every singularity of `p` within `tol` of
/// `𝓙`. A zero of `h` at distance in `[tol, 4 tol)` is ambiguous.
pub fn find_critical_points(
    em: &EquilibriumMeasure,
    p: &Potential,
    tol: f64,
) -> Result<Vec<CriticalPoint>, ClassifyError> {
    let jset = em.j_set();
    let dist = |z: Complex64| (z.im * z.im + jset.distance(z.re).powi(2)).sqrt();
    let mut pts: Vec<(Complex64, Tag)> = Vec::new();
    for q in &em.curve.r_zeros {
        pts.push((Complex64::new(*q, 0.0), Tag::RZero));
    }
    for q in &em.curve.r_poles {
        pts.push((Complex64::new(*q, 0.0), Tag::RPole));
    }
    for e in &em.exterior_points {
        pts.push((Complex64::new(*e, 0.0), Tag::Ext));
    }
    let mut ambiguous = Vec::new();
    for r in em.curve.h_roots() {
        let d = dist(r);
        if d < tol {
            pts.push((r, Tag::H));
        } else if d < 4.0 * tol {
            ambiguous.push(r);
        }
    }
    for s in &p.singularities {
        if dist(s.b) < tol {
            pts.push((s.b, Tag::Sing));
        }
    }
    let clusters = single_linkage(&pts, tol);
    if let Some(r) = ambiguous.first() {
        let near = clusters
            .iter()
            .filter(|c| c.members.iter().any(|m| (m.0 - r).norm() < 4.0 * tol))
            .min_by(|a, b| {
                let da = a.members.iter().map(|m| (m.0 - r).norm()).fold(f64::INFINITY, f64::min);
                let db = b.members.iter().map(|m| (m.0 - r).norm()).fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).unwrap()
            });
        let without = near.map_or(0, |c| c.exponent2());
        let with = without + 2;
        return Err(ClassifyError::Ambiguous { x: r.re, first: without / 2, second: with / 2 });
    }
    let mut out = clusters.iter().map(|c| c.classify(em)).collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.x_star.partial_cmp(&b.x_star).unwrap());
    Ok(out)
}

/// `ŷ₁(σ) = C · Π(σ − r̂_i) · √(Π(σ − q̂)/Π(σ − p̂))` with principal roots;
/// the interior sign factor `θ` is absorbed by evaluating in the upper
/// half-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledCurve {
    pub x_star: f64,
    pub delta: f64,
    pub n: f64,
    pub prefactor: Complex64,
    pub h_roots: Vec<Complex64>,
    pub r_zeros: Vec<f64>,
    pub r_poles: Vec<f64>,
    pub reflected: bool,
}

impl ScaledCurve {
    /// Coefficients of `C·ĥ`, ascending.
    pub fn h_coeffs(&self) -> Vec<Complex64> {
        poly::from_roots(&self.h_roots).into_iter().map(|c| c * self.prefactor).collect()
    }

    /// `2m` where `ŷ ~ ζ^m`.
    pub fn exponent2(&self) -> i32 {
        2 * self.h_roots.len() as i32 + self.r_zeros.len() as i32 - self.r_poles.len() as i32
    }

    /// Right-most scaled zero or pole of `R̂`, else 0.
    pub fn p_hat(&self) -> f64 {
        self.r_zeros.iter().chain(&self.r_poles).copied().reduce(f64::max).unwrap_or(0.0)
    }

    fn eval_offset(&self, base: f64, w: Complex64) -> Complex64 {
        let z = Complex64::new(base, 0.0) + w;
        let mut acc = self.prefactor;
        for r in &self.h_roots {
            acc *= z - r;
        }
        for q in &self.r_zeros {
            acc *= (Complex64::new(base - q, 0.0) + w).sqrt();
        }
        for p in &self.r_poles {
            acc /= (Complex64::new(base - p, 0.0) + w).sqrt();
        }
        acc
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        self.eval_offset(0.0, zeta)
    }

    fn radius(&self) -> f64 {
        self.h_roots
            .iter()
            .map(|r| r.norm())
            .chain(self.r_zeros.iter().chain(&self.r_poles).map(|q| q.abs()))
            .fold(0.0, f64::max)
    }

    /// `ξ̂(ζ) = −½ ∫_{p̂}^ζ ŷ` along a straight path; `ζ` off the real axis.
    pub fn xi_hat(&self, zeta: Complex64) -> Complex64 {
        let p = self.p_hat();
        let w = zeta - p;
        let (v, _) = integrate(
            |t: f64| self.eval_offset(p, w * (t * t)) * w * (2.0 * t),
            0.0,
            1.0,
            1e-14,
            1e-13,
        );
        v * -0.5
    }
}

/// Coefficients `q̂_l` of `ŷ(ζ) = ζ^m Σ q̂_l ζ^{-l}`, `l = 0..=order`.
pub fn series_at_infinity(curve: &ScaledCurve, order: usize) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let mut s = vec![one];
    for q in &curve.r_zeros {
        s = poly::series_mul(&s, &poly::binomial_series(Complex64::new(*q, 0.0), 0.5, order), order);
    }
    for p in &curve.r_poles {
        s = poly::series_mul(&s, &poly::binomial_series(Complex64::new(*p, 0.0), -0.5, order), order);
    }
    s.resize(order + 1, Complex64::new(0.0, 0.0));
    // ĥ(ζ) = ζ^{m_h} Σ e_i ζ^{-i}
    let e: Vec<Complex64> = poly::from_roots(&curve.h_roots).into_iter().rev().collect();
    (0..=order)
        .map(|l| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, ei) in e.iter().enumerate().take(l + 1) {
                acc += ei * s[l - i];
            }
            acc * curve.prefactor
        })
        .collect()
}

/// Termwise antiderivative `−½ Σ q̂_l ζ^{m−l+1}/(m−l+1)` plus the log
/// term, without the integration constant.
fn xi_series_value(q: &[Complex64], m2: i32, zeta: Complex64) -> Complex64 {
    let lz = zeta.ln();
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, ql) in q.iter().enumerate() {
        let p2 = m2 - 2 * l as i32 + 2; // 2(m − l + 1)
        if p2 == 0 {
            acc += ql * lz;
        } else {
            let p = p2 as f64 / 2.0;
            acc += ql * (lz * p).exp() / p;
        }
    }
    acc * -0.5
}

/// Scaled curve at a critical point for a measure computed at size `n`.
pub fn scaled_curve(em: &EquilibriumMeasure, cp: &CriticalPoint, n: f64) -> Result<ScaledCurve, ClassifyError> {
    scaled_curve_with(em, cp, n, DISC_SCALE)
}

pub fn scaled_curve_with(
    em: &EquilibriumMeasure,
    cp: &CriticalPoint,
    n: f64,
    disc_scale: f64,
) -> Result<ScaledCurve, ClassifyError> {
    let reflected = cp.side == EdgeSide::Left;
    let owned;
    let (em, xs) = if reflected {
        owned = em.reflected();
        (&owned, -cp.x_star)
    } else {
        (em, cp.x_star)
    };
    let delta = cp.delta();
    let scale = n.powf(delta);
    let radius = disc_scale / scale;
    let near = |x: Complex64| (x - xs).norm() <= radius;
    let curve = &em.curve;
    let lead = poly::trim(&curve.h_coeffs).last().copied().unwrap_or(0.0) * curve.leading_sign;
    let mut prefactor = Complex64::new(lead, 0.0);
    let mut h_near = Vec::new();
    for r in curve.h_roots() {
        if near(r) {
            h_near.push((r - xs) * scale);
        } else {
            prefactor *= Complex64::new(xs, 0.0) - r;
        }
    }
    let sq = |d: f64| {
        if d > 0.0 {
            Complex64::new(d.sqrt(), 0.0)
        } else {
            Complex64::new(0.0, (-d).sqrt())
        }
    };
    let mut zeros = Vec::new();
    for q in &curve.r_zeros {
        if near(Complex64::new(*q, 0.0)) {
            zeros.push((q - xs) * scale);
        } else {
            prefactor *= sq(xs - q);
        }
    }
    let mut poles = Vec::new();
    for p in &curve.r_poles {
        if near(Complex64::new(*p, 0.0)) {
            poles.push((p - xs) * scale);
        } else {
            prefactor /= sq(xs - p);
        }
    }
    let balance = (h_near.len() as f64 + (zeros.len() as f64 - poles.len() as f64) / 2.0 + 1.0) * delta;
    if (balance - 1.0).abs() > 1e-12 {
        return Err(ClassifyError::ExponentBalance { value: balance });
    }
    Ok(ScaledCurve { x_star: xs, delta, n, prefactor, h_roots: h_near, r_zeros: zeros, r_poles: poles, reflected })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSingularity {
    pub b: Complex64,
    pub alpha: f64,
    pub tau: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelData {
    pub kind: PointKind,
    pub order_k: i32,
    pub delta: Rational,
    pub x_star: f64,
    pub n: f64,
    pub reflected: bool,
    #[serde(rename = "I")]
    pub scaled_domain: IntervalSet,
    #[serde(rename = "B")]
    pub scaled_singularities: Vec<ScaledSingularity>,
    pub tau_inf: Vec<f64>,
    pub c_hat: f64,
    pub e_series: Vec<f64>,
    pub p_hat: f64,
    /// Constant term of `ξ̂` at infinity.
    pub integration_constant: Complex64,
    /// Largest imaginary part discarded from `E_j` and `τ_∞`.
    pub imag_residual: f64,
    pub series: Vec<Complex64>,
    pub curve: ScaledCurve,
}

impl ModelData {
    /// Sign of the leading `τ_∞` entry required by the model problem.
    pub fn leading_sign_ok(&self) -> bool {
        let k = self.order_k;
        match self.kind {
            PointKind::Interior => self.tau_inf[(2 * k + 1) as usize] > 0.0,
            PointKind::Edge if k == -1 => self.tau_inf[0] < 0.0,
            PointKind::Edge => self.tau_inf[(k + 1) as usize] > 0.0,
            PointKind::Exterior => true,
        }
    }
}

/// Scaled image of `𝓘` near `x_*` with the paper's extension convention.
fn scaled_domain(domain: &IntervalSet, kind: PointKind, xs: f64, scale: f64, radius: f64, p_hat: f64) -> IntervalSet {
    let inside = |x: f64| x.is_finite() && (x - xs).abs() <= radius;
    let mut ivs: Vec<Interval> = Vec::new();
    for iv in domain.intervals() {
        if iv.hi < xs - radius || iv.lo > xs + radius {
            continue;
        }
        let lo = if inside(iv.lo) { (iv.lo - xs) * scale } else { f64::NEG_INFINITY };
        let hi = if inside(iv.hi) { (iv.hi - xs) * scale } else { f64::INFINITY };
        ivs.push(Interval::new(lo, hi));
    }
    if kind == PointKind::Edge {
        if let Some(last) = ivs.last_mut() {
            if last.hi == f64::INFINITY {
                last.hi = p_hat;
            }
        }
    }
    IntervalSet::new(ivs).unwrap_or_else(|_| IntervalSet::real_line())
}

/// Model-problem data at `cp` for a measure and potential at size `n`.
pub fn extract_model_data(
    em: &EquilibriumMeasure,
    p: &Potential,
    cp: &CriticalPoint,
    n: f64,
) -> Result<ModelData, ClassifyError> {
    let curve = scaled_curve(em, cp, n)?;
    let reflected = curve.reflected;
    let (em_r, p_r);
    let (em, p) = if reflected {
        em_r = em.reflected();
        p_r = p.reflected();
        (&em_r, &p_r)
    } else {
        (em, p)
    };
    let xs = curve.x_star;
    let k = cp.order_k;
    let scale = n.powf(cp.delta());
    let radius = DISC_SCALE / scale;
    let m2 = curve.exponent2();
    let order = ((2 * k + 6).max(0) as usize).max(48);
    let q = series_at_infinity(&curve, order);
    let p_hat = curve.p_hat();

    let r0 = (4.0 * curve.radius()).max(4.0);
    let zeta0 = Complex64::from_polar(r0, PI / 3.0);
    let kconst = curve.xi_hat(zeta0) - xi_series_value(&q, m2, zeta0);

    let i = Complex64::new(0.0, 1.0);
    let kf = k as f64;
    let mut c_hat = 0.0;
    let e: Vec<Complex64> = match cp.kind {
        PointKind::Edge => (0..=(k + 1))
            .map(|j| q[(k + 1 - j) as usize] * ((2.0 * kf + 3.0) / (4.0 * j as f64 + 2.0)))
            .collect(),
        PointKind::Interior => (0..=(2 * k + 1))
            .map(|j| {
                if j == 0 {
                    i * (2.0 * kf + 1.0) * kconst
                } else {
                    -i * (2.0 * kf + 1.0) * q[(2 * k + 1 - j) as usize] / (2.0 * j as f64)
                }
            })
            .collect(),
        PointKind::Exterior => {
            c_hat = (q[(2 * k) as usize] * 0.5).re;
            (0..=(2 * k))
                .map(|j| if j == 0 { kconst * (-2.0 * kf) } else { q[(2 * k - j) as usize] * kf / j as f64 })
                .collect()
        }
    };
    let mut tau = e.clone();
    if cp.kind == PointKind::Interior {
        let xi_plus = em.xi(Complex64::new(xs, 0.0), Some(Side::Plus))?;
        let alpha_plus = p.alpha_gamma(xs + radius);
        tau[0] += (2.0 * kf + 1.0) * (i * xi_plus * n + PI * alpha_plus);
    }
    let imag_residual = e.iter().chain(&tau).map(|c| c.im.abs()).fold(0.0, f64::max);

    let singular: Vec<ScaledSingularity> = p
        .singularities
        .iter()
        .filter(|s| (s.b - xs).norm() <= radius)
        .map(|s: &Singularity| ScaledSingularity {
            b: (s.b - xs) * scale,
            alpha: s.alpha,
            tau: s.pole_coeffs.iter().map(|t| t * scale).collect(),
        })
        .collect();

    Ok(ModelData {
        kind: cp.kind,
        order_k: k,
        delta: cp.delta,
        x_star: cp.x_star,
        n,
        reflected,
        scaled_domain: scaled_domain(&p.support, cp.kind, xs, scale, radius, p_hat),
        scaled_singularities: singular,
        tau_inf: tau.iter().map(|c| c.re).collect(),
        c_hat,
        e_series: e.iter().map(|c| c.re).collect(),
        p_hat,
        integration_constant: kconst,
        imag_residual,
        series: q.into_iter().take((2 * k + 7).max(1) as usize).collect(),
        curve,
    })
}

/// A potential and its equilibrium measure as functions of `n`, with the
/// `n → ∞` limit used for classification.
pub trait ScalingFamily {
    fn name(&self) -> String;
    fn potential_at(&self, n: f64) -> Potential;
    fn measure_at(&self, n: f64) -> Result<EquilibriumMeasure, EquilibriumError>;
    fn limit_potential(&self) -> Potential;
    fn limit_measure(&self) -> Result<EquilibriumMeasure, EquilibriumError>;
}

/// `n`-independent potential.
pub struct FixedFamily {
    pub potential: Potential,
    pub measure: EquilibriumMeasure,
}

impl ScalingFamily for FixedFamily {
    fn name(&self) -> String {
        "fixed".into()
    }
    fn potential_at(&self, n: f64) -> Potential {
        self.potential.with_n(n as usize)
    }
    fn measure_at(&self, _n: f64) -> Result<EquilibriumMeasure, EquilibriumError> {
        Ok(self.measure.clone())
    }
    fn limit_potential(&self) -> Potential {
        self.potential.clone()
    }
    fn limit_measure(&self) -> Result<EquilibriumMeasure, EquilibriumError> {
        Ok(self.measure.clone())
    }
}

/// `V = t x²/2 + x⁴/4` with `t = −2 + τ n^{−2/3}`.
pub struct QuarticMerge {
    pub tau: f64,
}

impl QuarticMerge {
    pub fn delta_at(&self, n: f64) -> f64 {
        self.tau * n.powf(-2.0 / 3.0)
    }
}

impl ScalingFamily for QuarticMerge {
    fn name(&self) -> String {
        format!("quartic-merge(tau={})", self.tau)
    }
    fn potential_at(&self, n: f64) -> Potential {
        Potential::quartic(-2.0 + self.delta_at(n), n as usize).expect("quartic potential")
    }
    fn measure_at(&self, n: f64) -> Result<EquilibriumMeasure, EquilibriumError> {
        example_curve(ExampleCurve::QuarticShifted { delta: self.delta_at(n) })
    }
    fn limit_potential(&self) -> Potential {
        Potential::quartic(-2.0, 1).expect("quartic potential")
    }
    fn limit_measure(&self) -> Result<EquilibriumMeasure, EquilibriumError> {
        example_curve(ExampleCurve::Quartic { t: -2.0 })
    }
}

/// Weight `|x|^{2α₁} |x − τ/n²|^{2α₂} e^{n x}` on `(−∞, 0]`.
pub struct HardEdgeTwoCharge {
    pub tau: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl HardEdgeTwoCharge {
    fn build(&self, b2: f64, n: usize) -> Potential {
        let domain = IntervalSet::new(vec![Interval::new(f64::NEG_INFINITY, 0.0)]).unwrap();
        let mut sing = Vec::new();
        if b2 == 0.0 {
            if self.alpha1 + self.alpha2 > 0.0 {
                sing.push(Singularity::log_charge(0.0, self.alpha1 + self.alpha2));
            }
        } else {
            if self.alpha1 > 0.0 {
                sing.push(Singularity::log_charge(0.0, self.alpha1));
            }
            if self.alpha2 > 0.0 {
                sing.push(Singularity::log_charge(b2, self.alpha2));
            }
        }
        Potential::new(vec![-1.0], sing, domain, n).expect("hard-edge potential")
    }
}

impl ScalingFamily for HardEdgeTwoCharge {
    fn name(&self) -> String {
        format!("hard-edge(tau={}, alpha=({}, {}))", self.tau, self.alpha1, self.alpha2)
    }
    fn potential_at(&self, n: f64) -> Potential {
        self.build(self.tau / (n * n), n as usize)
    }
    fn measure_at(&self, _n: f64) -> Result<EquilibriumMeasure, EquilibriumError> {
        example_curve(ExampleCurve::MarchenkoPastur)
    }
    fn limit_potential(&self) -> Potential {
        self.build(0.0, 1)
    }
    fn limit_measure(&self) -> Result<EquilibriumMeasure, EquilibriumError> {
        example_curve(ExampleCurve::MarchenkoPastur)
    }
}

/// Scaled distances `n^Δ |x − x_*|` of every root, pole and singularity in
/// the disc, sorted.
fn scaled_distances(em: &EquilibriumMeasure, p: &Potential, cp: &CriticalPoint, n: f64) -> Vec<f64> {
    let scale = n.powf(cp.delta());
    let radius = DISC_SCALE / scale;
    let xs = Complex64::new(cp.x_star, 0.0);
    let mut d: Vec<f64> = em
        .curve
        .h_roots()
        .into_iter()
        .chain(em.curve.endpoints().into_iter().map(|x| Complex64::new(x, 0.0)))
        .chain(p.singularities.iter().map(|s| s.b))
        .map(|z| (z - xs).norm())
        .filter(|d| *d <= radius)
        .map(|d| d * scale)
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

/// Checks that the points near `x_*` stay at distance `O(n^{-Δ})` by
/// comparing sizes `n` and `2n`: scaled distances must agree within a
/// factor of two.
pub fn check_scaling(family: &dyn ScalingFamily, cp: &CriticalPoint, n: f64) -> Result<(), ClassifyError> {
    let a = scaled_distances(&family.measure_at(n)?, &family.potential_at(n), cp, n);
    let b = scaled_distances(&family.measure_at(2.0 * n)?, &family.potential_at(2.0 * n), cp, 2.0 * n);
    if a.len() != b.len() {
        return Err(ClassifyError::NotScaling {
            point: format!("{} points near {}", a.len(), cp.x_star),
            at_n: a.len() as f64,
            at_2n: b.len() as f64,
        });
    }
    for (x, y) in a.iter().zip(&b) {
        let tiny = 1e-9;
        if *x < tiny && *y < tiny {
            continue;
        }
        if !(y / x <= 2.0 && x / y <= 2.0) {
            return Err(ClassifyError::NotScaling { point: format!("near {}", cp.x_star), at_n: *x, at_2n: *y });
        }
    }
    Ok(())
}

/// Classifies the limit measure of `family` and locates the point nearest
/// `near`.
pub fn limit_point(family: &dyn ScalingFamily, near: f64) -> Result<CriticalPoint, ClassifyError> {
    let em = family.limit_measure()?;
    let p = family.limit_potential();
    let pts = find_critical_points(&em, &p, default_tolerance(&em))?;
    pts.into_iter()
        .min_by(|a, b| (a.x_star - near).abs().partial_cmp(&(b.x_star - near).abs()).unwrap())
        .filter(|c| (c.x_star - near).abs() < 1e-6)
        .ok_or(ClassifyError::NotFound(near))
}

/// Scaling check at `n` and `2n`, then extraction at `n`.
pub fn extract_for_family(family: &dyn ScalingFamily, cp: &CriticalPoint, n: f64) -> Result<ModelData, ClassifyError> {
    check_scaling(family, cp, n)?;
    extract_model_data(&family.measure_at(n)?, &family.potential_at(n), cp, n)
}
