//! Monic orthogonal polynomials for `w = e^{-nV}` on `𝓘`.
//!
//! The measure is discretized by composite Gauss–Legendre panels, graded
//! toward hard walls and real singularities, and the recurrence is read off
//! by the Stieltjes procedure on the discrete measure. Weights are kept as
//! logarithms and every node carries its own exponent through the
//! recurrence, since `w` spans more than the `f64` range at large `n`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::OrthoError;
use crate::io::{fmt17, CsvWriter};
use crate::potential::{potential_to_json, Potential};
use crate::quad::gauss_legendre;

/// Relative mass agreement required between a rule and its refinement.
pub const SELF_CHECK_TOL: f64 = 1e-9;
/// Nodes whose weight, padded for polynomial growth and relative to the
/// peak, falls below this are dropped.
pub const DROP_BELOW: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureOptions {
    pub resolution: usize,
    pub nodes_per_panel: usize,
    /// Largest polynomial degree the rule must carry; sets the truncation
    /// margin of unbounded intervals. Defaults to `n + 10`.
    pub degree_hint: Option<usize>,
    pub grading_ratio: f64,
    /// Number of geometric levels toward each graded point. Defaults to
    /// `⌈log₂ resolution⌉`.
    pub grading_depth: Option<usize>,
    /// Decay, in units of `log w`, below the peak at which tails are cut.
    pub tail_margin: f64,
}

impl QuadratureOptions {
    pub fn new(resolution: usize) -> Self {
        QuadratureOptions {
            resolution,
            nodes_per_panel: 20,
            degree_hint: None,
            grading_ratio: 0.25,
            grading_depth: None,
            tail_margin: 100.0,
        }
    }

    pub fn degree_hint(mut self, m: usize) -> Self {
        self.degree_hint = Some(m);
        self
    }

    fn depth(&self) -> usize {
        self.grading_depth.unwrap_or_else(|| (self.resolution.max(2) as f64).log2().ceil() as usize)
    }
}

/// Resolution used when none is given: enough panels to resolve degree `n`
/// oscillations with margin.
pub fn default_resolution(n: usize) -> usize {
    (16 * (n + 10)).max(400)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    /// `log(w(x_k) dx_k)`.
    pub log_weights: Vec<f64>,
    /// Bare Gauss–Legendre weights `dx_k`.
    pub dx: Vec<f64>,
    /// Points where an unbounded or negligible tail was cut off.
    pub cuts: Vec<f64>,
    pub provenance: String,
    pub dropped: usize,
    /// Upper bound on the scaled mass of the dropped nodes.
    pub dropped_mass_bound: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `w(x_k) dx_k`; may underflow to zero far from the peak.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// `log ∫ w`.
    pub fn log_mass(&self) -> f64 {
        let top = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + self.log_weights.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
    }

    pub fn mass(&self) -> f64 {
        self.log_mass().exp()
    }
}

/// Panel endpoint that receives geometric refinement.
#[derive(Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    grade_lo: bool,
    grade_hi: bool,
}

/// Peak of `log w` on a sample grid, its location, and the distance over
/// which it first drops by `drop`.
impl Segment {
    /// Panel breakpoints cluster like `√distance` toward graded ends, which
    /// follows the oscillation of high-degree polynomials near a wall.
    fn breakpoint(&self, t: f64) -> f64 {
        let len = self.hi - self.lo;
        let half = std::f64::consts::FRAC_PI_2;
        match (self.grade_lo, self.grade_hi) {
            (true, true) => self.lo + 0.5 * len * (1.0 - (2.0 * half * t).cos()),
            (true, false) => self.lo + len * (1.0 - (half * t).cos()),
            (false, true) => self.hi - len * (1.0 - (half * (1.0 - t)).cos()),
            (false, false) => self.lo + len * t,
        }
    }
}

fn peak_log_weight(p: &Potential, drop: f64) -> (f64, f64, f64) {
    let mut reach: f64 = 50.0;
    for e in p.support.finite_endpoints() {
        reach = reach.max(2.0 * e.abs());
    }
    for b in p.real_singular_points() {
        reach = reach.max(2.0 * b.abs());
    }
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for iv in p.support.intervals() {
        let lo = iv.lo.max(-reach);
        let hi = iv.hi.min(reach);
        if hi <= lo {
            continue;
        }
        let m = 20000;
        for i in 0..=m {
            let x = lo + (hi - lo) * i as f64 / m as f64;
            samples.push((x, p.log_weight(x)));
        }
    }
    let (peak, argmax) = samples.iter().fold((f64::NEG_INFINITY, 0.0), |b, s| if s.1 > b.0 { (s.1, s.0) } else { b });
    let spacing = 2.0 * reach / 20000.0;
    let ell = samples
        .iter()
        .filter(|s| s.1 < peak - drop)
        .map(|s| (s.0 - argmax).abs())
        .fold(f64::INFINITY, f64::min)
        .clamp(spacing, reach);
    (peak, argmax, ell)
}

/// Bounds `log w + 2m log(1 + |x − x₀|/ℓ)`, a crude majorant of `log(p_m² w)`
/// relative to the peak.
#[derive(Clone, Copy)]
struct TailTest {
    peak: f64,
    center: f64,
    ell: f64,
    degree: usize,
    margin: f64,
}

impl TailTest {
    fn growth(&self, x: f64) -> f64 {
        2.0 * self.degree as f64 * (1.0 + (x - self.center).abs() / self.ell).ln()
    }

    fn negligible(&self, p: &Potential, x: f64) -> bool {
        p.log_weight(x) - self.peak + self.growth(x) + self.margin < 0.0
    }
}

/// Walks from `start` toward `end` until the weight, padded for polynomial
/// growth, has decayed below the margin; returns the cut point or `end`.
fn find_cut(p: &Potential, start: f64, end: f64, t: TailTest) -> (f64, bool) {
    let dir = if end > start { 1.0 } else { -1.0 };
    let negligible = |x: f64| t.negligible(p, x);
    // probe just inside `end` too, in case a log charge sits on it
    let inside_end = end - dir * 1e-9 * end.abs().max(1.0);
    if end.is_finite() && (!negligible(end) || !negligible(inside_end)) {
        return (end, true);
    }
    let mut step = 0.25 * t.ell;
    let mut inside = start;
    let mut out;
    loop {
        out = start + dir * step;
        if (end.is_finite() && dir * (out - end) >= 0.0) || step > 1e8 {
            out = end;
            break;
        }
        if negligible(out) {
            break;
        }
        inside = out;
        step *= 2.0;
    }
    if !out.is_finite() {
        return (inside, false);
    }
    if inside == start {
        // already negligible one step out; `start` may be a zero of w
        return (out, false);
    }
    for _ in 0..80 {
        let mid = 0.5 * (inside + out);
        if negligible(mid) {
            out = mid;
        } else {
            inside = mid;
        }
    }
    (out, false)
}

fn segments(p: &Potential, opts: &QuadratureOptions) -> (Vec<Segment>, TailTest) {
    let degree = opts.degree_hint.unwrap_or(p.n + 10);
    let (peak, argmax, ell) = peak_log_weight(p, degree.max(1) as f64);
    let t = TailTest { peak, center: argmax, ell, degree, margin: opts.tail_margin };
    let sing = p.real_singular_points();
    let mut out = Vec::new();
    for iv in p.support.intervals() {
        let start = argmax.clamp(iv.lo, iv.hi);
        let start = if start.is_finite() { start } else { iv.midpoint() };
        // walk outward from beyond the last interior zero of w
        let inner: Vec<f64> = sing.iter().copied().filter(|b| iv.contains_interior(*b)).collect();
        let s_lo = inner.iter().copied().fold(start, f64::min);
        let s_hi = inner.iter().copied().fold(start, f64::max);
        let (lo, glo) = find_cut(p, s_lo, iv.lo, t);
        let (hi, ghi) = find_cut(p, s_hi, iv.hi, t);
        if hi <= lo {
            continue;
        }
        let mut cuts = vec![(lo, glo)];
        for b in &sing {
            if *b > lo && *b < hi {
                cuts.push((*b, true));
            }
        }
        cuts.push((hi, ghi));
        cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in cuts.windows(2) {
            out.push(Segment { lo: w[0].0, hi: w[1].0, grade_lo: w[0].1, grade_hi: w[1].1 });
        }
    }
    (out, t)
}

/// Composite Gauss–Legendre rule with grading and tail truncation.
pub fn build_quadrature_with(p: &Potential, opts: &QuadratureOptions) -> Result<QuadratureRule, OrthoError> {
    if opts.nodes_per_panel == 0 || opts.resolution < opts.nodes_per_panel {
        return Err(OrthoError::Precondition(format!(
            "resolution {} below one panel of {} nodes",
            opts.resolution, opts.nodes_per_panel
        )));
    }
    let (segs, tail) = segments(p, opts);
    if segs.is_empty() {
        return Err(OrthoError::Precondition("weight vanishes on the whole support".into()));
    }
    let depth = opts.depth();
    let graded_ends: usize = segs.iter().map(|s| s.grade_lo as usize + s.grade_hi as usize).sum();
    let npp = opts.nodes_per_panel;
    let budget = opts.resolution.saturating_sub(graded_ends * depth * npp).max(segs.len() * npp);
    let total_len: f64 = segs.iter().map(|s| s.hi - s.lo).sum();
    let total_panels = (budget / npp).max(segs.len());

    let (gx, gw) = gauss_legendre(npp);
    let mut panels: Vec<(f64, f64)> = Vec::new();
    for s in &segs {
        let k = ((total_panels as f64 * (s.hi - s.lo) / total_len).round() as usize).max(1);
        let at = |i: usize| if i == k { s.hi } else { s.breakpoint(i as f64 / k as f64) };
        for i in 0..k {
            let (a, b) = (at(i), at(i + 1));
            let first = i == 0 && s.grade_lo;
            let last = i + 1 == k && s.grade_hi;
            if !first && !last {
                panels.push((a, b));
                continue;
            }
            // split the end panel geometrically toward the graded end(s)
            let mut pieces = vec![(a, b)];
            if first {
                pieces = grade(pieces[0].0, pieces[0].1, opts.grading_ratio, depth, false);
            }
            if last {
                let tail = pieces.pop().unwrap();
                let split = if first && k == 1 { 0.5 * (tail.0 + tail.1) } else { tail.0 };
                if split > tail.0 {
                    pieces.push((tail.0, split));
                }
                pieces.extend(grade(split, tail.1, opts.grading_ratio, depth, true));
            }
            panels.extend(pieces);
        }
    }

    let mut raw: Vec<(f64, f64, f64)> = Vec::with_capacity(panels.len() * npp);
    for (a, b) in &panels {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        for (x, w) in gx.iter().zip(&gw) {
            let node = c + r * x;
            raw.push((node, w * r, p.log_weight(node)));
        }
    }
    let mut nodes = Vec::with_capacity(raw.len());
    let mut log_weights = Vec::with_capacity(raw.len());
    let mut dxs = Vec::with_capacity(raw.len());
    let mut dropped = 0;
    let mut dropped_mass_bound = 0.0;
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let floor = DROP_BELOW.ln();
    for (x, dx, lw) in raw {
        let lwd = lw + dx.ln();
        if !(lwd.is_finite()) || lwd - tail.peak + tail.growth(x) < floor {
            dropped += 1;
            dropped_mass_bound += DROP_BELOW * tail.peak.exp();
            continue;
        }
        nodes.push(x);
        log_weights.push(lwd);
        dxs.push(dx);
    }
    if nodes.is_empty() {
        return Err(OrthoError::Precondition("weight vanishes at every node".into()));
    }
    let mut cuts = Vec::new();
    for (i, sg) in segs.iter().enumerate() {
        let joined_lo = i > 0 && segs[i - 1].hi == sg.lo;
        let joined_hi = i + 1 < segs.len() && segs[i + 1].lo == sg.hi;
        if !sg.grade_lo && !joined_lo {
            cuts.push(sg.lo);
        }
        if !sg.grade_hi && !joined_hi {
            cuts.push(sg.hi);
        }
    }
    let provenance = format!(
        "{} segments, {} panels x {} Gauss-Legendre nodes, grading ratio {} depth {}, tail margin {}",
        segs.len(),
        panels.len(),
        npp,
        opts.grading_ratio,
        depth,
        opts.tail_margin
    );
    Ok(QuadratureRule { nodes, log_weights, dx: dxs, cuts, provenance, dropped, dropped_mass_bound })
}

/// Subpanels of `[a, b]` shrinking by `ratio` toward `b` (`toward_hi`) or `a`.
fn grade(a: f64, b: f64, ratio: f64, depth: usize, toward_hi: bool) -> Vec<(f64, f64)> {
    let h = b - a;
    let mut cuts = Vec::with_capacity(depth + 2);
    let mut frac = 1.0;
    cuts.push(frac);
    for _ in 0..depth {
        frac *= ratio;
        cuts.push(frac);
    }
    cuts.push(0.0);
    let mut out: Vec<(f64, f64)> = cuts
        .windows(2)
        .map(|w| if toward_hi { (b - w[0] * h, b - w[1] * h) } else { (a + w[1] * h, a + w[0] * h) })
        .collect();
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    out
}

/// Builds the rule and checks its mass against the rule of doubled
/// resolution.
pub fn build_quadrature(p: &Potential, resolution: usize) -> Result<QuadratureRule, OrthoError> {
    build_checked(p, &QuadratureOptions::new(resolution))
}

pub fn build_checked(p: &Potential, opts: &QuadratureOptions) -> Result<QuadratureRule, OrthoError> {
    let rule = build_quadrature_with(p, opts)?;
    let mut fine = opts.clone();
    fine.resolution *= 2;
    let doubled = build_quadrature_with(p, &fine)?;
    let (lm, ld) = (rule.log_mass(), doubled.log_mass());
    let rel = (lm - ld).exp_m1().abs();
    if !(rel <= SELF_CHECK_TOL) {
        return Err(OrthoError::Resolution {
            resolution: opts.resolution,
            mass: lm.exp(),
            doubled: ld.exp(),
            rel,
        });
    }
    Ok(rule)
}

/// Three-term recurrence `p_{j+1} = (x − a_j) p_j − b_j p_{j−1}`.
///
/// `b[0]` holds `h_0`; `a`, `b`, `h`, `log_h` run over `j = 0..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recurrence {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub h: Vec<f64>,
    pub log_h: Vec<f64>,
    pub m_max: usize,
}

/// Per-node state of a three-term recurrence: the true values are
/// `cur·e^{exp}` and `prev·e^{exp}`, renormalized node by node.
struct NodeVectors {
    cur: Vec<f64>,
    prev: Vec<f64>,
    exp: Vec<f64>,
    /// `e^{2 exp}`, refreshed on renormalization.
    w2: Vec<f64>,
}

impl NodeVectors {
    /// Starts from `√(w_k dx_k / h_0)`.
    fn start(q: &QuadratureRule, log_h0: f64) -> Self {
        let exp: Vec<f64> = q.log_weights.iter().map(|l| 0.5 * (l - log_h0)).collect();
        let w2 = exp.iter().map(|e| (2.0 * e).exp()).collect();
        NodeVectors { cur: vec![1.0; q.len()], prev: vec![0.0; q.len()], exp, w2 }
    }

    fn dot_x(&self, x: &[f64]) -> f64 {
        self.cur.iter().zip(&self.w2).zip(x).map(|((c, w), x)| c * c * w * x).sum()
    }

    /// `cur ← ((x − a) cur − sb prev)`; returns the squared norm.
    fn advance(&mut self, x: &[f64], a: f64, sb: f64) -> f64 {
        let mut norm = 0.0;
        for k in 0..self.cur.len() {
            let next = (x[k] - a) * self.cur[k] - sb * self.prev[k];
            self.prev[k] = self.cur[k];
            self.cur[k] = next;
            norm += next * next * self.w2[k];
        }
        norm
    }

    fn scale(&mut self, s: f64) {
        for k in 0..self.cur.len() {
            self.cur[k] *= s;
            let big = self.cur[k].abs().max(self.prev[k].abs());
            if big > 1e100 || (big < 1e-100 && big > 0.0) {
                self.cur[k] /= big;
                self.prev[k] /= big;
                self.exp[k] += big.ln();
                self.w2[k] = (2.0 * self.exp[k]).exp();
            }
        }
    }

    fn values(&self) -> Vec<f64> {
        self.cur.iter().zip(&self.exp).map(|(c, e)| c * e.exp()).collect()
    }
}

/// Discretized Stieltjes procedure in orthonormal-vector form.
pub fn stieltjes_recurrence(q: &QuadratureRule, m_max: usize) -> Result<Recurrence, OrthoError> {
    let nn = q.len();
    if 4 * (m_max + 1) > nn {
        return Err(OrthoError::Precondition(format!(
            "degree {m_max} needs more than {} nodes, rule has {nn}",
            4 * (m_max + 1)
        )));
    }
    let lh0 = q.log_mass();
    let mut v = NodeVectors::start(q, lh0);
    let mut a = Vec::with_capacity(m_max + 1);
    let mut b = Vec::with_capacity(m_max + 1);
    let mut log_h = Vec::with_capacity(m_max + 1);
    b.push(lh0.exp());
    log_h.push(lh0);
    for j in 0..=m_max {
        let aj = v.dot_x(&q.nodes);
        a.push(aj);
        if j == m_max {
            break;
        }
        let sb = if j == 0 { 0.0 } else { b[j].sqrt() };
        let bj = v.advance(&q.nodes, aj, sb);
        if !(bj > 0.0) || !bj.is_finite() {
            return Err(OrthoError::Positivity { j: j + 1, value: bj });
        }
        v.scale(1.0 / bj.sqrt());
        b.push(bj);
        log_h.push(log_h[j] + bj.ln());
    }
    let h = log_h.iter().map(|l| l.exp()).collect();
    Ok(Recurrence { a, b, h, log_h, m_max })
}

impl Recurrence {
    /// `√(h_{n}/h_{n-1})`, the Christoffel–Darboux prefactor.
    pub fn sqrt_b(&self, j: usize) -> f64 {
        self.b[j].sqrt()
    }

    /// Zeros of `p_m`: eigenvalues of the `m × m` Jacobi matrix.
    pub fn jacobi_zeros(&self, m: usize) -> Vec<f64> {
        assert!(m <= self.m_max);
        if m == 0 {
            return Vec::new();
        }
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.a[i];
            if i + 1 < m {
                let s = self.b[i + 1].sqrt();
                t[(i, i + 1)] = s;
                t[(i + 1, i)] = s;
            }
        }
        let mut z: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        z
    }

    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new();
        w.meta("m_max", self.m_max).meta("b_0", "h_0").header(&["j", "a_j", "b_j", "h_j", "log_h_j"]);
        for j in 0..=self.m_max {
            w.row(&[j.to_string(), fmt17(self.a[j]), fmt17(self.b[j]), fmt17(self.h[j]), fmt17(self.log_h[j])]);
        }
        w.finish()
    }
}

/// `(p_j(x), p_{j−1}(x))` by the forward recurrence.
pub fn eval_poly(r: &Recurrence, j: usize, x: f64) -> (f64, f64) {
    assert!(j <= r.m_max + 1, "degree {j} beyond recurrence");
    let (mut p, mut pm) = (1.0, 0.0);
    for i in 0..j {
        let bi = if i == 0 { 0.0 } else { r.b[i] };
        let next = (x - r.a[i]) * p - bi * pm;
        pm = p;
        p = next;
    }
    (p, pm)
}

/// Orthonormal functions `ψ_j = p_j √w / √h_j` for `j = m−1, m` and their
/// polynomial-part derivatives, `χ_j = p_j' √w / √h_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthonormalPair {
    pub psi: f64,
    pub psi_prev: f64,
    pub chi: f64,
    pub chi_prev: f64,
}

/// Evaluates `ψ_m, ψ_{m−1}` (and derivatives) at `x` given `log w(x)`.
///
/// The recurrence runs on rescaled values, with the accumulated exponent
/// applied once at the end, so neither `w` nor `p_j` is formed.
pub fn orthonormal_at(r: &Recurrence, m: usize, x: f64, log_w: f64) -> OrthonormalPair {
    assert!(m >= 1 && m <= r.m_max);
    if log_w == f64::NEG_INFINITY {
        return OrthonormalPair { psi: 0.0, psi_prev: 0.0, chi: 0.0, chi_prev: 0.0 };
    }
    let (mut s, mut sp) = (1.0f64, 0.0f64);
    let (mut d, mut dp) = (0.0f64, 0.0f64);
    let mut log_off = 0.5 * (log_w - r.log_h[0]);
    for i in 0..m {
        let sb = if i == 0 { 0.0 } else { r.b[i].sqrt() };
        let sn = r.b[i + 1].sqrt();
        let next = ((x - r.a[i]) * s - sb * sp) / sn;
        let dnext = ((x - r.a[i]) * d + s - sb * dp) / sn;
        sp = s;
        s = next;
        dp = d;
        d = dnext;
        let big = s.abs().max(sp.abs()).max(d.abs()).max(dp.abs());
        if big > 1e150 || (big < 1e-150 && big > 0.0) {
            s /= big;
            sp /= big;
            d /= big;
            dp /= big;
            log_off += big.ln();
        }
    }
    let f = log_off.exp();
    OrthonormalPair { psi: s * f, psi_prev: sp * f, chi: d * f, chi_prev: dp * f }
}

/// `ψ_j(x_k) √(dx_k)` for `j < m` at the nodes of `q`, with the `a`, `b`
/// of `r` (which need not come from `q`).
pub fn weighted_basis(r: &Recurrence, q: &QuadratureRule, m: usize) -> Vec<Vec<f64>> {
    let mut v = NodeVectors::start(q, r.log_h[0]);
    let mut cols = Vec::with_capacity(m);
    for i in 0..m {
        cols.push(v.values());
        if i + 1 == m {
            break;
        }
        let sb = if i == 0 { 0.0 } else { r.b[i].sqrt() };
        v.advance(&q.nodes, r.a[i], sb);
        v.scale(1.0 / r.b[i + 1].sqrt());
    }
    cols
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    /// `max |⟨p_i,p_j⟩|/√(h_i h_j)` over `i ≠ j ≤ m`.
    pub max_offdiag: f64,
    /// `max |⟨p_j,p_j⟩/h_j − 1|`.
    pub max_norm_error: f64,
}

impl GramReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_offdiag <= tol && self.max_norm_error <= 1e-8
    }
}

/// Orthogonality of `p_0..p_m` from `r` measured with the rule `q`.
pub fn gram_check(r: &Recurrence, q: &QuadratureRule, m: usize) -> GramReport {
    let cols = weighted_basis(r, q, (m + 1).min(r.m_max + 1));
    let mut off: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for i in 0..cols.len() {
        for j in 0..=i {
            let g: f64 = cols[i].iter().zip(&cols[j]).map(|(u, v)| u * v).sum();
            if i == j {
                norm = norm.max((g - 1.0).abs());
            } else {
                off = off.max(g.abs());
            }
        }
    }
    GramReport { max_offdiag: off, max_norm_error: norm }
}

/// Largest `ψ_m² dx` over the nodes nearest each tail cut; small when the
/// discarded tails carry nothing of degree `m`.
pub fn tail_leakage(r: &Recurrence, q: &QuadratureRule, m: usize) -> f64 {
    let cols = weighted_basis(r, q, m + 1);
    let last = &cols[m];
    let mut worst: f64 = 0.0;
    for c in &q.cuts {
        let i = q.nodes.partition_point(|x| x < c);
        let lo = i.saturating_sub(20);
        let hi = (i + 20).min(last.len());
        worst = last[lo..hi].iter().map(|v| v * v).fold(worst, f64::max);
    }
    worst
}

/// Rule plus recurrence up to degree `m_max`, as used by the kernels. The
/// tail margin is widened until degree `m_max` no longer reaches the cuts.
pub fn recurrence_for(p: &Potential, m_max: usize, resolution: usize) -> Result<(QuadratureRule, Recurrence), OrthoError> {
    let mut opts = QuadratureOptions::new(resolution).degree_hint(m_max.max(p.n) + 10);
    loop {
        let rule = build_checked(p, &opts)?;
        let rec = stieltjes_recurrence(&rule, m_max)?;
        let leak = tail_leakage(&rec, &rule, m_max);
        if leak < 1e-24 || opts.tail_margin > 1000.0 {
            return Ok((rule, rec));
        }
        opts.tail_margin *= 2.0;
    }
}

/// Cache key: SHA-256 of the potential (which carries `n`) and the resolution.
pub fn cache_key(p: &Potential, resolution: usize) -> String {
    let mut hasher = Sha256::new();
    hasher.update(potential_to_json(p).to_string().as_bytes());
    hasher.update(p.n.to_le_bytes());
    hasher.update(resolution.to_le_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

const MAGIC: &[u8; 8] = b"SMMREC1\0";

pub fn write_cache(path: &Path, key: &str, r: &Recurrence) -> std::io::Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(key.len() as u64).to_le_bytes());
    buf.extend_from_slice(key.as_bytes());
    buf.extend_from_slice(&(r.m_max as u64).to_le_bytes());
    for v in [&r.a, &r.b, &r.log_h] {
        for x in v.iter() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)
}

/// Reads a cached recurrence; `None` if the file is missing, malformed or
/// was written for another key.
pub fn read_cache(path: &Path, key: &str) -> Option<Recurrence> {
    let mut buf = Vec::new();
    std::fs::File::open(path).ok()?.read_to_end(&mut buf).ok()?;
    let mut pos = 0usize;
    let mut take = |k: usize| -> Option<&[u8]> {
        let s = buf.get(pos..pos + k)?;
        pos += k;
        Some(s)
    };
    if take(8)? != MAGIC {
        return None;
    }
    let klen = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
    if take(klen)? != key.as_bytes() {
        return None;
    }
    let m_max = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
    let mut read_vec = || -> Option<Vec<f64>> {
        (0..=m_max).map(|_| Some(f64::from_le_bytes(take(8)?.try_into().ok()?))).collect()
    };
    let a = read_vec()?;
    let b = read_vec()?;
    let log_h = read_vec()?;
    let h = log_h.iter().map(|l| l.exp()).collect();
    Some(Recurrence { a, b, h, log_h, m_max })
}
