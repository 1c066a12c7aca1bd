use semiclassical::classify::{default_tolerance, extract_model_data, find_critical_points, PointKind};
use semiclassical::kernel::{trace, FiniteKernel};
use semiclassical::orthopoly::{cache_key, default_resolution, read_cache, recurrence_for, write_cache};
use semiclassical::sampler::{compare_density, histogram_density, mcmc_chains, mcmc_sample, uniform_edges, SamplerConfig};
use semiclassical::{parse_potential, solve_support, Structure};

const MP_HALF: &str = r#"{"reg":[-1],"singularities":[{"b":[0,0],"alpha":0.5}],"support":[["-inf",0]],"n":60}"#;

#[test]
fn config_to_kernel() {
    let p = parse_potential(MP_HALF).unwrap();
    assert!(p.validate().all_passed());
    let em = solve_support(&p, Structure::HardEdgeOneCut).unwrap();
    assert!((em.total_mass() - 1.0).abs() < 1e-10);
    let pts = find_critical_points(&em, &p, default_tolerance(&em)).unwrap();
    let hard = pts.iter().find(|c| c.order_k == -1).expect("hard edge");
    assert_eq!(hard.kind, PointKind::Edge);
    let md = extract_model_data(&em, &p, hard, 1e8).unwrap();
    assert!(md.leading_sign_ok());
    assert_eq!(md.scaled_singularities.len(), 1);

    let fk = FiniteKernel::new(&p).unwrap();
    assert!((trace(&fk.rec, &p, &fk.rule) - 60.0).abs() < 1e-8 * 60.0);
    // K(x, x)/n approaches ρ away from the edges
    for x in [-3.0, -2.0, -1.0] {
        let k = fk.eval(x, x).0 / 60.0;
        assert!((k - em.density(x)).abs() < 0.02, "x={x}: {k} vs {}", em.density(x));
    }
    let grid = fk.grid(None, &[-1.0, -0.5, 0.5], &[-1.0, -0.5, 0.5]);
    assert_eq!(grid.meta.flagged, 5);
    assert!(grid.to_csv().lines().filter(|l| l.ends_with(",1")).count() == 5);
}

#[test]
fn recurrence_cache_through_a_file() {
    let p = parse_potential(MP_HALF).unwrap();
    let res = default_resolution(p.n);
    let (_, rec) = recurrence_for(&p, p.n, res).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.bin");
    let key = cache_key(&p, res);
    write_cache(&path, &key, &rec).unwrap();
    let back = read_cache(&path, &key).unwrap();
    assert_eq!(back.b, rec.b);
    assert_eq!(back.a, rec.a);
    assert!(read_cache(&path, &cache_key(&p.with_n(61), res)).is_none());
}

#[test]
fn gue_histogram_sup_deviation() {
    let p = parse_potential(r#"{"reg":[0,1],"support":[["-inf","inf"]],"n":40}"#).unwrap();
    let run = mcmc_sample(&p, &SamplerConfig::new(101_000, 1_000, 77)).unwrap();
    let em = solve_support(&p.with_n(1), Structure::OneCut).unwrap();
    let h = histogram_density(&run.flat(), &uniform_edges(-2.5, 2.5, 25)).unwrap();
    let d = compare_density(&h, &em);
    assert!(d.sup_dev < 0.05, "{d:?}");
    assert!(d.l1_dev < 0.08, "{d:?}");
}

#[test]
fn chains_are_independent_and_reproducible() {
    let p = parse_potential(MP_HALF).unwrap().with_n(10);
    let cfg = SamplerConfig::new(2_000, 200, 3);
    let a = mcmc_chains(&p, &cfg, 3).unwrap();
    let b = mcmc_chains(&p, &cfg, 3).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.configs, y.configs);
    }
    assert_ne!(a[0].configs, a[1].configs);
    assert_eq!(a[2].stats.stream, 2);
    assert_eq!(a[1].to_csv(), mcmc_sample(&p, &SamplerConfig { stream: 1, ..cfg }).unwrap().to_csv());
}
