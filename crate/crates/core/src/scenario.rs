//! Named double-scaling scenarios and the kernel convergence scan.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classify::{
    default_tolerance, extract_model_data, find_critical_points, limit_point, scaling_exponent, CriticalPoint,
    EdgeSide, FixedFamily, HardEdgeTwoCharge, ModelData, PointKind, QuarticMerge, ScalingFamily,
};
use crate::equilibrium::{solve_support, Structure};
use crate::error::KernelError;
use crate::kernel::{fit_exponent, reference_grid, FiniteKernel, KernelGrid, Reference};
use crate::potential::Potential;

pub const PRESETS: [&str; 5] = ["gue-bulk", "gue-edge", "quartic-merge", "mp-hard-edge", "mp-two-charge"];

/// Size at which model data are extracted for the reference map.
const MAP_N: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub tau: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams { tau: 0.0, alpha1: 0.0, alpha2: 0.0 }
    }
}

pub struct Scenario {
    pub name: String,
    pub params: ScenarioParams,
    pub family: Box<dyn ScalingFamily + Send + Sync>,
    pub point: CriticalPoint,
    /// Whether the scan compares with a closed-form kernel.
    pub closed_form: bool,
    pub grid: Vec<f64>,
    pub n_list: Vec<usize>,
}

pub fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![lo];
    }
    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
}

fn stage<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> KernelError {
    move |e| KernelError::Stage { stage, message: e.to_string() }
}

impl Scenario {
    /// Looks up a preset. `mp-hard-edge` uses `alpha1` only; `mp-two-charge`
    /// defaults to `τ = 1`, `α₁ = α₂ = 1/2` when all parameters are zero.
    pub fn by_name(name: &str, params: ScenarioParams) -> Result<Scenario, KernelError> {
        let gue = || -> Result<FixedFamily, KernelError> {
            let p = Potential::gaussian(1);
            let em = solve_support(&p, Structure::OneCut).map_err(stage("equilibrium"))?;
            Ok(FixedFamily { potential: p, measure: em })
        };
        let s = match name {
            "gue-bulk" => {
                let point = CriticalPoint {
                    x_star: 0.0,
                    kind: PointKind::Interior,
                    order_k: 0,
                    delta: scaling_exponent(PointKind::Interior, 0).map_err(stage("classify"))?,
                    side: EdgeSide::None,
                };
                Scenario {
                    name: name.into(),
                    params,
                    family: Box::new(gue()?),
                    point,
                    closed_form: true,
                    grid: linspace(-2.0, 2.0, 9),
                    n_list: vec![40, 80, 160],
                }
            }
            "gue-edge" => {
                let fam = gue()?;
                let point = limit_point(&fam, 2.0).map_err(stage("classify"))?;
                Scenario {
                    name: name.into(),
                    params,
                    family: Box::new(fam),
                    point,
                    closed_form: true,
                    grid: linspace(-4.0, 1.0, 11),
                    n_list: vec![50, 100, 200],
                }
            }
            "quartic-merge" => {
                let fam = QuarticMerge { tau: params.tau };
                let point = limit_point(&fam, 0.0).map_err(stage("classify"))?;
                Scenario {
                    name: name.into(),
                    params,
                    family: Box::new(fam),
                    point,
                    closed_form: false,
                    grid: linspace(-2.0, 2.0, 9),
                    n_list: vec![30, 60, 120],
                }
            }
            "mp-hard-edge" => {
                let fam = HardEdgeTwoCharge { tau: 0.0, alpha1: params.alpha1, alpha2: 0.0 };
                let point = limit_point(&fam, 0.0).map_err(stage("classify"))?;
                Scenario {
                    name: name.into(),
                    params: ScenarioParams { tau: 0.0, alpha2: 0.0, ..params },
                    family: Box::new(fam),
                    point,
                    closed_form: true,
                    grid: linspace(-4.0, 0.0, 9),
                    n_list: vec![50, 100, 200],
                }
            }
            "mp-two-charge" => {
                let params = if params == ScenarioParams::default() {
                    ScenarioParams { tau: 1.0, alpha1: 0.5, alpha2: 0.5 }
                } else {
                    params
                };
                let fam = HardEdgeTwoCharge { tau: params.tau, alpha1: params.alpha1, alpha2: params.alpha2 };
                let point = limit_point(&fam, 0.0).map_err(stage("classify"))?;
                Scenario {
                    name: name.into(),
                    params,
                    family: Box::new(fam),
                    point,
                    closed_form: false,
                    grid: linspace(-4.0, 0.0, 9),
                    n_list: vec![30, 60, 120],
                }
            }
            other => return Err(KernelError::UnknownScenario(other.into())),
        };
        Ok(s)
    }

    pub fn potential_at(&self, n: usize) -> Potential {
        self.family.potential_at(n as f64)
    }

    /// Model data of the limit at `x_*`.
    pub fn model_data(&self) -> Result<ModelData, KernelError> {
        let em = self.family.limit_measure().map_err(stage("equilibrium"))?;
        let p = self.family.limit_potential();
        extract_model_data(&em, &p, &self.point, MAP_N).map_err(stage("model data"))
    }

    /// Reference kernel with the map fixed by the `E` coefficients.
    pub fn reference(&self) -> Result<Reference, KernelError> {
        if !self.closed_form {
            return Ok(Reference::SelfCollapse);
        }
        let md = self.model_data()?;
        let e = &md.e_series;
        Ok(match (self.point.kind, self.point.order_k) {
            (PointKind::Interior, 0) => Reference::Sine { c: e[1] / std::f64::consts::PI },
            (PointKind::Edge, 0) => Reference::Airy { c: e[1].powf(2.0 / 3.0) },
            (PointKind::Edge, -1) => {
                let alpha: f64 = md.scaled_singularities.iter().filter(|s| s.b.norm() == 0.0).map(|s| s.alpha).sum();
                Reference::Bessel { order: 2.0 * alpha, c: 4.0 * e[0] * e[0] }
            }
            (kind, k) => {
                return Err(KernelError::Stage {
                    stage: "reference",
                    message: format!("no closed-form kernel for {kind} point of order {k}"),
                })
            }
        })
    }

    pub fn kernel_at(&self, n: usize) -> Result<(FiniteKernel, KernelGrid), KernelError> {
        let p = self.potential_at(n);
        let fk = FiniteKernel::new(&p).map_err(stage("orthopoly"))?;
        let g = fk.grid(Some(&self.point), &self.grid, &self.grid);
        if g.meta.flagged > 0 {
            return Err(KernelError::Stage {
                stage: "kernel",
                message: format!("{} scaled grid points leave the support set at n = {n}", g.meta.flagged),
            });
        }
        Ok((fk, g))
    }
}

/// Critical points of a fixed potential, for callers that only have a config.
pub fn critical_points_of(p: &Potential, structure: Structure) -> Result<Vec<CriticalPoint>, KernelError> {
    let em = solve_support(p, structure).map_err(stage("equilibrium"))?;
    find_critical_points(&em, p, default_tolerance(&em)).map_err(stage("classify"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    /// Sup error against the reference, or against the previous `n` for a
    /// self-collapse scan (absent on the first row).
    pub sup_error: Option<f64>,
    pub min_diagonal: f64,
    pub asymmetry: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub scenario: String,
    pub params: ScenarioParams,
    pub x_star: f64,
    pub kind: PointKind,
    pub order_k: i32,
    pub delta: f64,
    pub reference: Reference,
    /// `E_j` of the limit, which fix the reference map.
    pub e_series: Vec<f64>,
    pub grid: Vec<f64>,
    pub rows: Vec<ScanRow>,
    pub fitted_exponent: Option<f64>,
    pub decreasing: bool,
}

impl ScanReport {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.sup_error).collect()
    }

    pub fn last_error(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.sup_error)
    }
}

/// Sup-norm error on `grid × grid` for each `n`, with a log-log fit.
pub fn convergence_scan(s: &Scenario, n_list: &[usize], grid: Option<&[f64]>) -> Result<ScanReport, KernelError> {
    let grid: Vec<f64> = grid.map(|g| g.to_vec()).unwrap_or_else(|| s.grid.clone());
    let reference = s.reference()?;
    let e_series = s.model_data().map(|m| m.e_series).unwrap_or_default();
    let ref_values = match reference {
        Reference::SelfCollapse => None,
        r => Some(reference_grid(&r, &grid, &grid)?),
    };
    let mut rows = Vec::new();
    let mut prev: Option<KernelGrid> = None;
    for &n in n_list {
        let t0 = Instant::now();
        let p = s.potential_at(n);
        let fk = FiniteKernel::new(&p).map_err(stage("orthopoly"))?;
        let g = fk.grid(Some(&s.point), &grid, &grid);
        if g.meta.flagged > 0 {
            return Err(KernelError::Stage {
                stage: "kernel",
                message: format!("{} scaled grid points leave the support set at n = {n}", g.meta.flagged),
            });
        }
        let err = match &ref_values {
            Some(rv) => Some(
                g.values.iter().flatten().zip(rv.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            ),
            None => prev.as_ref().map(|q| g.sup_diff(q)),
        };
        rows.push(ScanRow {
            n,
            sup_error: err,
            min_diagonal: g.min_diagonal(),
            asymmetry: g.asymmetry(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        prev = Some(g);
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.sup_error.map(|e| (r.n as f64, e))).collect();
    let errs: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Ok(ScanReport {
        scenario: s.name.clone(),
        params: s.params,
        x_star: s.point.x_star,
        kind: s.point.kind,
        order_k: s.point.order_k,
        delta: s.point.delta(),
        reference,
        e_series,
        grid,
        rows,
        fitted_exponent: fit_exponent(&pts),
        decreasing: errs.windows(2).all(|w| w[1] < w[0]),
    })
}
