use std::path::Path;

use serde_json::json;

use semiclassical::io::{fmt17, CsvWriter};
use semiclassical::classify::{default_tolerance, extract_model_data, find_critical_points, CriticalPoint};
use semiclassical::kernel::{trace, FiniteKernel};
use semiclassical::orthopoly::default_resolution;
use semiclassical::sampler::{compare_density, histogram_density, mcmc_chains, uniform_edges, SamplerConfig};
use semiclassical::scenario::{convergence_scan, linspace, Scenario, ScenarioParams};
use semiclassical::{parse_potential, solve_support, EquilibriumMeasure, Error, Potential, Structure};

use crate::manifest::Outputs;
use crate::{Cli, Command, ParamArgs, Source};

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

fn fail<E: Into<Error>>(e: E) -> Failure {
    let e: Error = e.into();
    if e.is_validation() {
        Failure::Validation(e.to_string())
    } else {
        Failure::Numerical(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

pub fn run(cli: &Cli) -> Res<()> {
    let name = match &cli.command {
        Command::Validate { .. } => "validate",
        Command::Equilibrium { .. } => "equilibrium",
        Command::Classify { .. } => "classify",
        Command::Kernel { .. } => "kernel",
        Command::Converge { .. } => "converge",
        Command::Sample { .. } => "sample",
    };
    let mut out = Outputs::create(&cli.out).map_err(|e| Failure::Validation(format!("output directory {}: {e}", cli.out.display())))?;
    let (config, overrides) = describe(&cli.command);
    let result = match &cli.command {
        Command::Validate { config } => validate(&mut out, config),
        Command::Equilibrium { config, structure, grid } => equilibrium(&mut out, config, structure.as_deref(), grid.as_deref()),
        Command::Classify { source, n, structure } => classify(&mut out, source, *n, structure.as_deref()),
        Command::Kernel { source, n, at, grid, structure } => kernel(&mut out, source, *n, at, grid.as_deref(), structure.as_deref()),
        Command::Converge { scenario, n_list, grid, params } => converge(&mut out, scenario, n_list.as_deref(), grid.as_deref(), params),
        Command::Sample { config, steps, seed, burn_in, thin, chains, bins, structure } => {
            let cfg = SamplerConfig { thin: *thin, ..SamplerConfig::new(*steps, burn_in.unwrap_or(steps / 10), *seed) };
            sample(&mut out, config, cfg, *chains, *bins, structure.as_deref())
        }
    };
    let code = result.as_ref().map(|_| 0).unwrap_or_else(|f| f.code() as i32);
    // A run that failed before writing anything leaves the previous
    // manifest for this command in place.
    if result.is_err() && out.is_empty() {
        return result;
    }
    let manifest = out.finish(name, config, overrides, code)?;
    if result.is_ok() {
        println!("{}", manifest.display());
    }
    result
}

fn describe(cmd: &Command) -> (Option<String>, Vec<(String, String)>) {
    let show = |p: &Path| Some(p.display().to_string());
    let mut o: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            o.push((k.to_string(), v));
        }
    };
    let config = match cmd {
        Command::Validate { config } => show(config),
        Command::Equilibrium { config, structure, grid } => {
            push("structure", structure.clone());
            push("grid", grid.clone());
            show(config)
        }
        Command::Classify { source, n, structure } => {
            push("scenario", source.scenario.clone());
            push("n", n.map(|v| v.to_string()));
            push("structure", structure.clone());
            push_params(&mut push, &source.params);
            source.config.as_deref().and_then(show)
        }
        Command::Kernel { source, n, at, grid, structure } => {
            push("scenario", source.scenario.clone());
            push("n", n.map(|v| v.to_string()));
            push("at", Some(at.clone()));
            push("grid", grid.clone());
            push("structure", structure.clone());
            push_params(&mut push, &source.params);
            source.config.as_deref().and_then(show)
        }
        Command::Converge { scenario, n_list, grid, params } => {
            push("scenario", Some(scenario.clone()));
            push("n_list", n_list.as_ref().map(|l| l.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")));
            push("grid", grid.clone());
            push_params(&mut push, params);
            None
        }
        Command::Sample { config, steps, seed, burn_in, thin, chains, bins, structure } => {
            push("steps", Some(steps.to_string()));
            push("seed", Some(seed.to_string()));
            push("burn_in", burn_in.map(|v| v.to_string()));
            push("thin", Some(thin.to_string()));
            push("chains", Some(chains.to_string()));
            push("bins", Some(bins.to_string()));
            push("structure", structure.clone());
            show(config)
        }
    };
    (config, o)
}

fn push_params(push: &mut impl FnMut(&str, Option<String>), p: &ParamArgs) {
    push("tau", p.tau.map(|v| v.to_string()));
    push("alpha1", p.alpha1.map(|v| v.to_string()));
    push("alpha2", p.alpha2.map(|v| v.to_string()));
}

fn load(path: &Path) -> Res<Potential> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_potential(&text).map_err(fail)
}

/// Hard-edge structure when the domain has a finite end, one cut otherwise.
fn structure_for(p: &Potential, flag: Option<&str>) -> Res<Structure> {
    match flag {
        Some(s) => s.parse().map_err(Failure::Validation),
        None if p.support.finite_endpoints().is_empty() => Ok(Structure::OneCut),
        None => Ok(Structure::HardEdgeOneCut),
    }
}

fn parse_grid(spec: &str) -> Res<Vec<f64>> {
    let bad = || Failure::Validation(format!("grid '{spec}' is not lo:hi:points"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let m: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if m == 0 || !lo.is_finite() || !hi.is_finite() || (m > 1 && hi <= lo) {
        return Err(bad());
    }
    Ok(linspace(lo, hi, m))
}

/// Support of `em` widened by a fifth of its length on each side and
/// clipped to the domain.
fn window(em: &EquilibriumMeasure) -> (f64, f64) {
    let (lo, hi) = (em.support.inf(), em.support.sup());
    let pad = 0.2 * (hi - lo).max(1e-3);
    ((lo - pad).max(em.domain.inf()), (hi + pad).min(em.domain.sup()))
}

fn params_of(p: &ParamArgs) -> ScenarioParams {
    ScenarioParams { tau: p.tau.unwrap_or(0.0), alpha1: p.alpha1.unwrap_or(0.0), alpha2: p.alpha2.unwrap_or(0.0) }
}

fn scenario(name: &str, p: &ParamArgs) -> Res<Scenario> {
    Scenario::by_name(name, params_of(p)).map_err(fail)
}

fn poly_string(coeffs: &[f64]) -> String {
    let mut terms = Vec::new();
    for (j, c) in coeffs.iter().enumerate().rev() {
        if c.abs() < 1e-12 {
            continue;
        }
        let mag = if (c.abs() - 1.0).abs() < 1e-12 && j > 0 { String::new() } else { format!("{}", c.abs()) };
        let var = match j {
            0 => String::new(),
            1 => "x".to_string(),
            _ => format!("x^{j}"),
        };
        let sign = if *c < 0.0 { "-" } else { "+" };
        terms.push((sign, format!("{mag}{var}")));
    }
    if terms.is_empty() {
        return "0".into();
    }
    let mut s = String::new();
    for (i, (sign, t)) in terms.iter().enumerate() {
        match (i, *sign) {
            (0, "-") => s.push('-'),
            (0, _) => {}
            (_, sg) => s.push_str(&format!(" {sg} ")),
        }
        s.push_str(t);
    }
    s
}

fn validate(out: &mut Outputs, config: &Path) -> Res<()> {
    let p = load(config)?;
    let report = p.validate();
    out.write_json("validate.json", &report)?;
    for c in &report.checks {
        println!("{:<6} {:<24} {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    if report.all_passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::Validation(format!("validation failed: {}", names.join(", "))))
    }
}

fn equilibrium(out: &mut Outputs, config: &Path, structure: Option<&str>, grid: Option<&str>) -> Res<()> {
    let p = load(config)?;
    let st = structure_for(&p, structure)?;
    let em = solve_support(&p, st).map_err(fail)?;
    let xs = match grid {
        Some(g) => parse_grid(g)?,
        None => {
            let (lo, hi) = window(&em);
            linspace(lo, hi, 201)
        }
    };
    out.write("density.csv", &em.density_csv(&xs))?;
    let (lo, hi) = window(&em);
    let report = em.check_variational(&p, &linspace(lo, hi, 200));
    out.write("variational.csv", &report.to_csv())?;
    out.write_json(
        "equilibrium.json",
        &json!({
            "structure": st,
            "h": poly_string(&em.curve.h_coeffs),
            "measure": em,
            "total_mass": em.total_mass(),
            "variational": {
                "max_equality_residual": report.max_equality_residual,
                "max_inequality_value": report.max_inequality_value,
                "pass": report.all_pass(),
            },
        }),
    )?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "variational conditions fail: equality residual {:e}, largest off-support value {:e}",
            report.max_equality_residual, report.max_inequality_value
        )))
    }
}

fn classify(out: &mut Outputs, source: &Source, n: Option<usize>, structure: Option<&str>) -> Res<()> {
    let doc = match (&source.config, &source.scenario) {
        (Some(path), _) => {
            let mut p = load(path)?;
            if let Some(n) = n {
                p = p.with_n(n);
            }
            let em = solve_support(&p, structure_for(&p, structure)?).map_err(fail)?;
            let points = find_critical_points(&em, &p, default_tolerance(&em)).map_err(fail)?;
            let models: Vec<serde_json::Value> = points
                .iter()
                .map(|cp| match extract_model_data(&em, &p, cp, p.n as f64) {
                    Ok(md) => json!(md),
                    Err(e) => json!({ "x_star": cp.x_star, "error": e.to_string() }),
                })
                .collect();
            json!({ "n": p.n, "critical_points": points, "model_data": models })
        }
        (None, Some(name)) => {
            let s = scenario(name, &source.params)?;
            let em = s.family.limit_measure().map_err(fail)?;
            let p = s.family.limit_potential();
            let points = find_critical_points(&em, &p, default_tolerance(&em)).map_err(fail)?;
            let md = s.model_data().map_err(fail)?;
            json!({
                "scenario": s.name,
                "params": s.params,
                "family": s.family.name(),
                "point": s.point,
                "critical_points": points,
                "model_data": [md],
            })
        }
        (None, None) => return Err(Failure::Validation("need a config or --scenario".into())),
    };
    if let Some(points) = doc["critical_points"].as_array() {
        for cp in points {
            let (num, den) = (&cp["delta"]["num"], &cp["delta"]["den"]);
            let delta = if den == 1 { num.to_string() } else { format!("{num}/{den}") };
            println!("{} {} k={} delta={delta}", cp["x_star"], cp["kind"].as_str().unwrap_or("?"), cp["order_k"]);
        }
    }
    out.write_json("classify.json", &doc)?;
    Ok(())
}

fn nearest(points: &[CriticalPoint], x: f64) -> Option<CriticalPoint> {
    points.iter().min_by(|a, b| (a.x_star - x).abs().total_cmp(&(b.x_star - x).abs())).cloned()
}

fn kernel(out: &mut Outputs, source: &Source, n: Option<usize>, at: &str, grid: Option<&str>, structure: Option<&str>) -> Res<()> {
    let (p, point, default_grid) = match (&source.config, &source.scenario) {
        (Some(path), _) => {
            let mut p = load(path)?;
            if let Some(n) = n {
                p = p.with_n(n);
            }
            let em = solve_support(&p, structure_for(&p, structure)?).map_err(fail)?;
            let point = if at == "raw" {
                None
            } else {
                let points = find_critical_points(&em, &p, default_tolerance(&em)).map_err(fail)?;
                let target = if at == "x_star" { em.support.sup() } else { parse_at(at)? };
                Some(nearest(&points, target).ok_or_else(|| Failure::Numerical("no critical points".into()))?)
            };
            let (lo, hi) = window(&em);
            let g = if point.is_some() { linspace(-2.0, 2.0, 9) } else { linspace(lo, hi, 21) };
            (p, point, g)
        }
        (None, Some(name)) => {
            let s = scenario(name, &source.params)?;
            let n = n.unwrap_or(*s.n_list.last().unwrap_or(&50));
            let p = s.potential_at(n);
            let point = match at {
                "raw" => None,
                "x_star" => Some(s.point.clone()),
                other => {
                    let em = s.family.limit_measure().map_err(fail)?;
                    let lp = s.family.limit_potential();
                    let points = find_critical_points(&em, &lp, default_tolerance(&em)).map_err(fail)?;
                    Some(nearest(&points, parse_at(other)?).ok_or_else(|| Failure::Numerical("no critical points".into()))?)
                }
            };
            let g = if point.is_some() { s.grid.clone() } else { linspace(-3.0, 3.0, 21) };
            (p, point, g)
        }
        (None, None) => return Err(Failure::Validation("need a config or --scenario".into())),
    };
    let g = match grid {
        Some(spec) => parse_grid(spec)?,
        None => default_grid,
    };
    let fk = FiniteKernel::with_resolution(&p, default_resolution(p.n)).map_err(fail)?;
    let kg = fk.grid(point.as_ref(), &g, &g);
    out.write("kernel.csv", &kg.to_csv())?;

    let mut w = CsvWriter::new();
    w.meta("n", p.n).header(&["x", "dx", "k_xx", "contribution"]);
    for (x, dx) in fk.rule.nodes.iter().zip(&fk.rule.dx) {
        let k = fk.eval(*x, *x).0;
        w.row(&[fmt17(*x), fmt17(*dx), fmt17(k), fmt17(dx * k)]);
    }
    out.write("kernel_trace.csv", &w.finish())?;
    let tr = trace(&fk.rec, &p, &fk.rule);
    out.write_json(
        "kernel.json",
        &json!({
            "n": p.n,
            "point": point,
            "trace": tr,
            "asymmetry": kg.asymmetry(),
            "flagged": kg.meta.flagged,
            "quadrature_nodes": fk.rule.len(),
        }),
    )?;
    println!("trace {tr:.12} (n = {}), asymmetry {:e}, flagged {}", p.n, kg.asymmetry(), kg.meta.flagged);
    Ok(())
}

fn parse_at(at: &str) -> Res<f64> {
    at.parse().map_err(|_| Failure::Validation(format!("--at must be raw, x_star or a number, got '{at}'")))
}

fn converge(out: &mut Outputs, name: &str, n_list: Option<&[usize]>, grid: Option<&str>, params: &ParamArgs) -> Res<()> {
    let s = scenario(name, params)?;
    let g = grid.map(parse_grid).transpose()?;
    let ns = n_list.map(|l| l.to_vec()).unwrap_or_else(|| s.n_list.clone());
    if ns.is_empty() || ns.contains(&0) {
        return Err(Failure::Validation("--n-list needs positive sizes".into()));
    }
    let report = convergence_scan(&s, &ns, g.as_deref()).map_err(fail)?;
    for r in &report.rows {
        println!("n={:<5} sup_error={}", r.n, r.sup_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()));
    }
    out.write_json("converge.json", &report)?;
    Ok(())
}

fn sample(out: &mut Outputs, config: &Path, cfg: SamplerConfig, chains: u64, bins: usize, structure: Option<&str>) -> Res<()> {
    let p = load(config)?;
    let report = p.validate();
    if !report.all_passed() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(Failure::Validation(format!("validation failed: {}", names.join(", "))));
    }
    if chains == 0 || bins == 0 {
        return Err(Failure::Validation("--chains and --bins must be positive".into()));
    }
    let runs = mcmc_chains(&p, &cfg, chains).map_err(fail)?;
    for run in &runs {
        let file = if chains == 1 { "samples.csv".to_string() } else { format!("samples-{}.csv", run.stats.stream) };
        out.write(&file, &run.to_csv())?;
    }
    let stats: Vec<_> = runs.iter().map(|r| &r.stats).collect();
    out.write_json("sample_meta.json", &json!({ "config": cfg, "generator": "chacha8", "chains": stats }))?;

    // The sampled density is that of eigenvalues of size-n matrices, compared
    // with the limit measure of the same potential.
    let em = solve_support(&p, structure_for(&p, structure)?).map_err(fail)?;
    let (lo, hi) = window(&em);
    let all: Vec<f64> = runs.iter().flat_map(|r| r.flat()).collect();
    let h = histogram_density(&all, &uniform_edges(lo, hi, bins)).map_err(fail)?;
    let cmp = compare_density(&h, &em);
    out.write("histogram.csv", &h.to_csv())?;
    out.write_json("comparison.json", &json!({ "bins": bins, "window": [lo, hi], "outside": h.outside, "deviation": cmp }))?;
    println!("sup_dev {:.4e} l1_dev {:.4e}", cmp.sup_dev, cmp.l1_dev);
    Ok(())
}
