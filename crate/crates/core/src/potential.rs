//! Semi-classical potentials `V = V_reg + V_sing + V_br` and their weights.
//!
//! `V_reg(z) = Σ_j t_j z^j / j` (j = 1..), the rational part is
//! `V_sing(z) = -Σ_b Σ_j t_{b,j} (z-b)^{-j} / j`, and the logarithmic part is
//! `V_br(x) = -(2/n) Σ_b α_b log|x-b|`. The weight is `w = exp(-n V)` on the
//! support set and zero elsewhere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::PotentialError;
use crate::interval::{Interval, IntervalSet};

/// Largest `log w` that still fits in an `f64`.
pub const LOG_MAX_F64: f64 = 709.782712893384;

/// One point of the singular set together with its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub b: Complex64,
    pub alpha: f64,
    /// `t_{b,j}` for `j = 1..`; entry `j-1` multiplies `(z-b)^{-j}/j`.
    pub pole_coeffs: Vec<Complex64>,
}

impl Singularity {
    pub fn log_charge(b: f64, alpha: f64) -> Self {
        Singularity { b: Complex64::new(b, 0.0), alpha, pole_coeffs: Vec::new() }
    }

    pub fn is_real(&self) -> bool {
        self.b.im == 0.0
    }

    fn conj(&self) -> Self {
        Singularity {
            b: self.b.conj(),
            alpha: self.alpha,
            pole_coeffs: self.pole_coeffs.iter().map(|t| t.conj()).collect(),
        }
    }

    fn has_poles(&self) -> bool {
        self.pole_coeffs.iter().any(|t| *t != Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Full,
    Reg,
    Sing,
    Br,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    /// `t_{∞,j}` for `j = 1..=d+1`.
    pub reg: Vec<f64>,
    pub singularities: Vec<Singularity>,
    pub support: IntervalSet,
    pub n: usize,
}

impl Potential {
    /// Builds a potential, completing conjugate partners and checking the
    /// structural invariants. Growth and integrability are left to
    /// [`Potential::validate`].
    pub fn new(
        reg: Vec<f64>,
        singularities: Vec<Singularity>,
        support: IntervalSet,
        n: usize,
    ) -> Result<Self, PotentialError> {
        if n == 0 {
            return Err(PotentialError::Invariant("n: matrix size must be positive".into()));
        }
        if reg.iter().any(|t| !t.is_finite()) {
            return Err(PotentialError::Invariant("reg: non-finite coefficient".into()));
        }
        if support.is_empty() {
            return Err(PotentialError::Invariant("support: empty".into()));
        }
        let mut sings: Vec<Singularity> = Vec::with_capacity(singularities.len());
        for s in singularities {
            if !(s.alpha >= 0.0) || !s.alpha.is_finite() {
                return Err(PotentialError::Invariant(format!(
                    "alpha: log charge {} at b = {} must be nonnegative",
                    s.alpha, s.b
                )));
            }
            if s.alpha == 0.0 && !s.has_poles() {
                return Err(PotentialError::Invariant(format!(
                    "alpha: singularity at b = {} has zero charge and no pole terms",
                    s.b
                )));
            }
            if sings.iter().any(|o| o.b == s.b) {
                return Err(PotentialError::Invariant(format!("singularities: duplicate b = {}", s.b)));
            }
            sings.push(s);
        }
        // conjugate closure
        let mut extra = Vec::new();
        for s in &sings {
            if s.is_real() {
                if s.pole_coeffs.iter().any(|t| t.im != 0.0) {
                    return Err(PotentialError::Invariant(format!(
                        "conjugate: real b = {} with complex pole coefficients",
                        s.b.re
                    )));
                }
                continue;
            }
            match sings.iter().find(|o| o.b == s.b.conj()) {
                Some(o) if *o == s.conj() => {}
                Some(_) => {
                    return Err(PotentialError::Invariant(format!(
                        "conjugate: data at b = {} and its conjugate do not match",
                        s.b
                    )))
                }
                None => {
                    if !extra.iter().any(|e: &Singularity| e.b == s.b.conj()) {
                        extra.push(s.conj());
                    }
                }
            }
        }
        sings.extend(extra);
        sings.sort_by(|a, b| {
            a.b.re.partial_cmp(&b.b.re).unwrap().then(a.b.im.partial_cmp(&b.b.im).unwrap())
        });
        Ok(Potential { reg, singularities: sings, support, n })
    }

    /// Polynomial potential on the given support.
    pub fn polynomial(reg: Vec<f64>, support: IntervalSet, n: usize) -> Result<Self, PotentialError> {
        Potential::new(reg, Vec::new(), support, n)
    }

    /// `V(x) = x²/2` on the real line.
    pub fn gaussian(n: usize) -> Self {
        Potential::polynomial(vec![0.0, 1.0], IntervalSet::real_line(), n).unwrap()
    }

    /// `V(x) = t x²/2 + x⁴/4` on the real line.
    pub fn quartic(t: f64, n: usize) -> Result<Self, PotentialError> {
        Potential::polynomial(vec![0.0, t, 0.0, 1.0], IntervalSet::real_line(), n)
    }

    pub fn with_n(&self, n: usize) -> Self {
        Potential { n, ..self.clone() }
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn reg_degree(&self) -> usize {
        self.reg.iter().rposition(|t| *t != 0.0).map_or(0, |i| i + 1)
    }

    pub fn eval_reg(&self, z: Complex64, derivative: u8) -> Complex64 {
        eval_reg_coeffs(&self.reg, z, derivative)
    }

    fn eval_sing(&self, z: Complex64, derivative: u8) -> Result<Complex64, PotentialError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for s in &self.singularities {
            if !s.has_poles() {
                continue;
            }
            let d = z - s.b;
            if d == Complex64::new(0.0, 0.0) {
                return Err(PotentialError::AtPole(format!("{z}")));
            }
            let inv = d.inv();
            let mut pw = inv;
            for (k, t) in s.pole_coeffs.iter().enumerate() {
                let j = (k + 1) as f64;
                if derivative == 0 {
                    acc -= t * pw / j;
                } else {
                    acc += t * pw * inv;
                }
                pw *= inv;
            }
        }
        Ok(acc)
    }

    fn eval_br(&self, z: Complex64, derivative: u8) -> Result<Complex64, PotentialError> {
        if z.im != 0.0 {
            return Err(PotentialError::Branch(format!("{z}"), "V_br is defined on the real axis"));
        }
        let x = z.re;
        let mut acc = 0.0;
        for s in &self.singularities {
            if s.alpha == 0.0 {
                continue;
            }
            let d = Complex64::new(x, 0.0) - s.b;
            if d.norm() == 0.0 {
                return Err(PotentialError::Branch(format!("{z}"), "log|z-b| at z = b"));
            }
            if derivative == 0 {
                acc -= 2.0 / self.nf() * s.alpha * d.norm().ln();
            } else {
                acc -= 2.0 / self.nf() * s.alpha * d.re / d.norm_sqr();
            }
        }
        Ok(Complex64::new(acc, 0.0))
    }

    /// Value (`derivative = 0`) or first derivative (`derivative = 1`) of one part of `V`.
    pub fn eval(&self, z: Complex64, part: Part, derivative: u8) -> Result<Complex64, PotentialError> {
        if derivative > 1 {
            return Err(PotentialError::Schema("derivative must be 0 or 1".into()));
        }
        match part {
            Part::Reg => Ok(self.eval_reg(z, derivative)),
            Part::Sing => self.eval_sing(z, derivative),
            Part::Br => self.eval_br(z, derivative),
            Part::Full => Ok(self.eval_reg(z, derivative)
                + self.eval_sing(z, derivative)?
                + self.eval_br(z, derivative)?),
        }
    }

    pub fn eval_real(&self, x: f64, part: Part, derivative: u8) -> Result<f64, PotentialError> {
        self.eval(Complex64::new(x, 0.0), part, derivative).map(|v| v.re)
    }

    /// `log w(x)`, `-inf` where the weight vanishes.
    ///
    /// Evaluated factor by factor: the log charges enter as `2α log|x-b|` and
    /// never pass through `exp`.
    pub fn log_weight(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return f64::NEG_INFINITY;
        }
        let z = Complex64::new(x, 0.0);
        let mut lw = -self.nf() * self.eval_reg(z, 0).re;
        for s in &self.singularities {
            let d = z - s.b;
            if d.norm() == 0.0 {
                return f64::NEG_INFINITY;
            }
            if s.alpha > 0.0 {
                lw += 2.0 * s.alpha * d.norm().ln();
            }
        }
        match self.eval_sing(z, 0) {
            Ok(v) => lw - self.nf() * v.re,
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// `w(x) = exp(-n V(x)) χ(x)`; underflow flushes to zero, overflow is an error.
    pub fn weight(&self, x: f64) -> Result<f64, PotentialError> {
        let lw = self.log_weight(x);
        if lw > LOG_MAX_F64 {
            return Err(PotentialError::Overflow { x, log_w: lw });
        }
        Ok(lw.exp())
    }

    /// Image of the model under `x -> -x`.
    pub fn reflected(&self) -> Self {
        let reg = self
            .reg
            .iter()
            .enumerate()
            .map(|(k, t)| if (k + 1) % 2 == 1 { -t } else { *t })
            .collect();
        let mut singularities: Vec<Singularity> = self
            .singularities
            .iter()
            .map(|s| Singularity {
                b: -s.b,
                alpha: s.alpha,
                pole_coeffs: s
                    .pole_coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, t)| if (k + 1) % 2 == 1 { -t } else { *t })
                    .collect(),
            })
            .collect();
        singularities.sort_by(|a, b| {
            a.b.re.partial_cmp(&b.b.re).unwrap().then(a.b.im.partial_cmp(&b.b.im).unwrap())
        });
        Potential { reg, singularities, support: self.support.reflected(), n: self.n }
    }

    /// Growth, conjugate-closure and integrability checks.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        let closed = self
            .singularities
            .iter()
            .all(|s| self.singularities.iter().any(|o| o.b == s.b.conj() && *o == s.conj()));
        checks.push(Check::new("conjugate closure", closed, String::new()));

        let deg = self.reg_degree();
        let top = if deg > 0 { self.reg[deg - 1] } else { 0.0 };
        if self.support.sup() == f64::INFINITY {
            let ok = deg > 0 && top > 0.0;
            checks.push(Check::new(
                "growth at +inf",
                ok,
                format!("leading term t_{deg} = {top} of degree {deg}"),
            ));
        }
        if self.support.inf() == f64::NEG_INFINITY {
            let sign = if deg.is_multiple_of(2) { 1.0 } else { -1.0 };
            let ok = deg > 0 && sign * top > 0.0;
            checks.push(Check::new(
                "growth at -inf",
                ok,
                format!("leading term t_{deg} = {top} of degree {deg}"),
            ));
        }

        for s in self.singularities.iter().filter(|s| s.is_real() && s.has_poles()) {
            let b = s.b.re;
            let d = s.pole_coeffs.iter().rposition(|t| t.norm() != 0.0).unwrap() + 1;
            let lead = s.pole_coeffs[d - 1].re;
            for side in [-1.0f64, 1.0] {
                if !self.approached_from(b, side) {
                    continue;
                }
                // V_sing ≈ -(lead/d) (x-b)^{-d} must tend to +inf along the support
                let sign = -lead * side.powi(-(d as i32));
                let ok = sign > 0.0;
                checks.push(Check::new(
                    "integrability",
                    ok,
                    format!(
                        "pole of order {d} at b = {b} approached from the {}",
                        if side < 0.0 { "left" } else { "right" }
                    ),
                ));
            }
        }
        ValidationReport { checks }
    }

    fn approached_from(&self, b: f64, side: f64) -> bool {
        self.support.intervals().iter().any(|iv| {
            if side < 0.0 {
                iv.lo < b && b <= iv.hi
            } else {
                iv.lo <= b && b < iv.hi
            }
        })
    }

    /// Real points of the singular set.
    pub fn real_singular_points(&self) -> Vec<f64> {
        self.singularities.iter().filter(|s| s.is_real()).map(|s| s.b.re).collect()
    }

    /// Total charge of the singularities whose contour `Γ_b` passes through
    /// the real point `x`, i.e. those with `Re b > x`.
    pub fn alpha_gamma(&self, x: f64) -> f64 {
        self.singularities.iter().filter(|s| s.b.re > x).map(|s| s.alpha).sum()
    }
}

pub(crate) fn eval_reg_coeffs(reg: &[f64], z: Complex64, derivative: u8) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    // Horner on Σ t_j z^j / j or Σ t_j z^{j-1}
    for (k, t) in reg.iter().enumerate().rev() {
        let j = (k + 1) as f64;
        let c = if derivative == 0 { t / j } else { *t };
        acc = acc * z + c;
    }
    if derivative == 0 {
        acc * z
    } else {
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check { name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

// ---------------------------------------------------------------------------
// JSON configuration

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEndpoint {
    Num(f64),
    Text(String),
}

impl RawEndpoint {
    fn value(&self) -> Result<f64, PotentialError> {
        match self {
            RawEndpoint::Num(v) => Ok(*v),
            RawEndpoint::Text(s) => match s.trim() {
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                other => Err(PotentialError::Schema(format!("bad endpoint '{other}'"))),
            },
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCoeff {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSingularity {
    b: [f64; 2],
    #[serde(default)]
    alpha: f64,
    #[serde(default)]
    t: Vec<RawCoeff>,
}

#[derive(Deserialize)]
struct RawPotential {
    reg: Vec<f64>,
    #[serde(default)]
    singularities: Vec<RawSingularity>,
    support: Vec<[RawEndpoint; 2]>,
    #[serde(default = "default_n")]
    n: usize,
}

fn default_n() -> usize {
    1
}

/// Parses the JSON configuration document. Unknown top-level keys are
/// ignored so that configs can carry tool-specific extras.
pub fn parse_potential(doc: &str) -> Result<Potential, PotentialError> {
    let raw: RawPotential =
        serde_json::from_str(doc).map_err(|e| PotentialError::Schema(e.to_string()))?;
    let mut intervals = Vec::with_capacity(raw.support.len());
    for [lo, hi] in &raw.support {
        intervals.push(Interval::new(lo.value()?, hi.value()?));
    }
    let support = IntervalSet::new(intervals)?;
    let singularities = raw
        .singularities
        .into_iter()
        .map(|s| Singularity {
            b: Complex64::new(s.b[0], s.b[1]),
            alpha: s.alpha,
            pole_coeffs: s
                .t
                .into_iter()
                .map(|c| match c {
                    RawCoeff::Real(v) => Complex64::new(v, 0.0),
                    RawCoeff::Complex([re, im]) => Complex64::new(re, im),
                })
                .collect(),
        })
        .collect();
    Potential::new(raw.reg, singularities, support, raw.n)
}

/// Serializes a potential back into the configuration schema.
pub fn potential_to_json(p: &Potential) -> serde_json::Value {
    use serde_json::json;
    let endpoint = |v: f64| {
        if v == f64::INFINITY {
            json!("inf")
        } else if v == f64::NEG_INFINITY {
            json!("-inf")
        } else {
            json!(v)
        }
    };
    json!({
        "reg": p.reg,
        "singularities": p.singularities.iter().map(|s| json!({
            "b": [s.b.re, s.b.im],
            "alpha": s.alpha,
            "t": s.pole_coeffs.iter().map(|t| json!([t.re, t.im])).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "support": p.support.intervals().iter().map(|iv| json!([endpoint(iv.lo), endpoint(iv.hi)])).collect::<Vec<_>>(),
        "n": p.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn minimal_gaussian_config() {
        let p = parse_potential(r#"{"reg":[0,1],"support":[["-inf","inf"]]}"#).unwrap();
        assert_eq!(p.reg, vec![0.0, 1.0]);
        assert_eq!(p.support, IntervalSet::real_line());
        assert_eq!(p.eval(c(2.0), Part::Reg, 0).unwrap(), c(2.0));
        assert!(p.validate().all_passed());
    }

    #[test]
    fn conjugate_partner_is_completed() {
        let p = parse_potential(
            r#"{"reg":[0,1],"singularities":[{"b":[0,1],"alpha":0.5,"t":[[1,2]]}],"support":[["-inf","inf"]],"n":3}"#,
        )
        .unwrap();
        assert_eq!(p.singularities.len(), 2);
        let lower = p.singularities.iter().find(|s| s.b == Complex64::new(0.0, -1.0)).unwrap();
        assert_eq!(lower.pole_coeffs[0], Complex64::new(1.0, -2.0));
        assert!(p.validate().all_passed());
    }

    #[test]
    fn negative_alpha_is_rejected() {
        let err = parse_potential(
            r#"{"reg":[0,1],"singularities":[{"b":[0,0],"alpha":-0.5}],"support":[["-inf","inf"]]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().starts_with("invariant violation: alpha"), "{err}");
    }

    #[test]
    fn schema_violations() {
        assert!(matches!(parse_potential("{}"), Err(PotentialError::Schema(_))));
        assert!(matches!(
            parse_potential(r#"{"reg":[1],"support":[["-inf","nope"]]}"#),
            Err(PotentialError::Schema(_))
        ));
    }

    #[test]
    fn quartic_value_at_origin() {
        let p = Potential::quartic(-2.0, 1).unwrap();
        assert_eq!(p.eval(c(0.0), Part::Full, 0).unwrap(), c(0.0));
        assert_relative_eq!(p.eval_real(2.0, Part::Reg, 0).unwrap(), -4.0 + 4.0);
    }

    #[test]
    fn log_branch_value() {
        let n = 7;
        let p = Potential::new(
            vec![0.0, 1.0],
            vec![Singularity::log_charge(0.0, 0.5)],
            IntervalSet::real_line(),
            n,
        )
        .unwrap();
        let v = p.eval_real(-2.0, Part::Br, 0).unwrap();
        assert_relative_eq!(v, -(2.0 / n as f64) * 0.5 * 2f64.ln(), max_relative = 1e-15);
        assert!(p.eval(c(0.0), Part::Br, 0).is_err());
        assert!(p.eval(Complex64::new(1.0, 1.0), Part::Br, 0).is_err());
    }

    #[test]
    fn gaussian_weight_values() {
        let p = Potential::gaussian(1);
        assert_eq!(p.weight(0.0).unwrap(), 1.0);
        assert_relative_eq!(p.weight(2.0).unwrap(), (-2.0f64).exp(), max_relative = 1e-15);
        let half = Potential::polynomial(vec![0.0, 1.0], IntervalSet::single(f64::NEG_INFINITY, 0.0).unwrap(), 1)
            .unwrap();
        assert_eq!(half.weight(1.0).unwrap(), 0.0);
    }

    #[test]
    fn weight_overflow_is_reported() {
        let p = Potential::quartic(-2.0, 2000).unwrap();
        assert!(matches!(p.weight(1.4), Err(PotentialError::Overflow { .. })));
    }

    #[test]
    fn odd_degree_on_line_fails_growth() {
        let p = Potential::polynomial(vec![0.0, 0.0, 1.0], IntervalSet::real_line(), 1).unwrap();
        let r = p.validate();
        assert!(!r.all_passed());
        assert!(r.failures().any(|c| c.name == "growth at -inf"));
    }

    #[test]
    fn pole_at_hard_wall_integrability_sign() {
        // V_sing = -t/x with t = 1 on x <= 0: V_sing -> +inf as x -> 0-
        let good = Potential::new(
            vec![-1.0],
            vec![Singularity { b: c(0.0), alpha: 0.0, pole_coeffs: vec![c(1.0)] }],
            IntervalSet::single(f64::NEG_INFINITY, 0.0).unwrap(),
            1,
        )
        .unwrap();
        assert!(good.validate().all_passed());
        let bad = Potential::new(
            vec![-1.0],
            vec![Singularity { b: c(0.0), alpha: 0.0, pole_coeffs: vec![c(-1.0)] }],
            IntervalSet::single(f64::NEG_INFINITY, 0.0).unwrap(),
            1,
        )
        .unwrap();
        assert!(!bad.validate().all_passed());
    }

    #[test]
    fn reflection_is_an_involution() {
        let p = Potential::new(
            vec![0.3, 1.0, -0.2, 1.0],
            vec![Singularity { b: Complex64::new(0.5, 1.0), alpha: 0.25, pole_coeffs: vec![Complex64::new(0.1, 0.2)] }],
            IntervalSet::real_line(),
            5,
        )
        .unwrap();
        let r = p.reflected();
        assert_eq!(r.reflected(), p);
        for x in [-1.3, 0.2, 2.5] {
            let a = p.eval_real(x, Part::Full, 0).unwrap();
            let b = r.eval_real(-x, Part::Full, 0).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-13);
        }
    }

    #[test]
    fn json_round_trip() {
        let p = parse_potential(
            r#"{"reg":[-1],"singularities":[{"b":[0,0],"alpha":0.5},{"b":[0.01,0],"alpha":0.5}],"support":[["-inf",0]],"n":200}"#,
        )
        .unwrap();
        let q = parse_potential(&potential_to_json(&p).to_string()).unwrap();
        assert_eq!(p, q);
    }
}
