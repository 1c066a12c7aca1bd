//! Cross-checks against independent implementations and exact one-particle laws.

use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal};
use statrs::function::gamma::gamma as statrs_gamma;

use semiclassical::orthopoly::{build_quadrature, recurrence_for};
use semiclassical::sampler::{histogram_density, mcmc_sample, uniform_edges, SamplerConfig};
use semiclassical::special::{bessel_j, gamma};
use semiclassical::{IntervalSet, Potential, Singularity};

#[test]
fn gamma_matches_statrs() {
    for x in [0.1, 0.5, 1.0 / 3.0, 2.0 / 3.0, 1.5, 4.25, 10.0, 30.5] {
        let (a, b) = (gamma(x), statrs_gamma(x));
        assert!(((a - b) / b).abs() < 1e-13, "x={x}: {a} vs {b}");
    }
}

#[test]
fn bessel_series_for_integer_order() {
    // J_n(x) = Σ (−1)^m (x/2)^{2m+n} / (m! (m+n)!) in extended sums
    for n in [0u32, 1, 3] {
        for x in [0.7f64, 3.0, 8.5] {
            let mut acc = 0.0;
            let mut term = (x / 2.0).powi(n as i32) / statrs_gamma(n as f64 + 1.0);
            for m in 0..60 {
                acc += term;
                term *= -(x * x / 4.0) / ((m + 1) as f64 * (m + 1 + n) as f64);
            }
            assert!((bessel_j(n as f64, x) - acc).abs() < 1e-13, "J_{n}({x})");
        }
    }
}

#[test]
fn weight_mass_matches_gamma_integrals() {
    // ∫_{−∞}^0 |x|^{2α} e^{n x} dx = Γ(2α+1) / n^{2α+1}
    for (alpha, n) in [(0.0, 1usize), (0.5, 3), (1.25, 10)] {
        // a zero charge is not a singularity
        let charges = if alpha > 0.0 { vec![Singularity::log_charge(0.0, alpha)] } else { vec![] };
        let p = Potential::new(vec![-1.0], charges, IntervalSet::single(f64::NEG_INFINITY, 0.0).unwrap(), n).unwrap();
        let q = build_quadrature(&p, 800).unwrap();
        let want = statrs_gamma(2.0 * alpha + 1.0) / (n as f64).powf(2.0 * alpha + 1.0);
        assert!(((q.mass() - want) / want).abs() < 1e-12, "alpha={alpha} n={n}: {} vs {want}", q.mass());
    }
}

#[test]
fn generalized_laguerre_recurrence() {
    // weight x^{2α} e^{-x} on [0, ∞): a_j = 2j + 2α + 1, b_j = j (j + 2α)
    let alpha = 0.75;
    let p = Potential::new(
        vec![1.0],
        vec![Singularity::log_charge(0.0, alpha)],
        IntervalSet::single(0.0, f64::INFINITY).unwrap(),
        1,
    )
    .unwrap();
    let (_, r) = recurrence_for(&p, 25, 4000).unwrap();
    let s = 2.0 * alpha;
    for j in 0..=25 {
        let jf = j as f64;
        assert!(((r.a[j] - (2.0 * jf + s + 1.0)) / (2.0 * jf + s + 1.0)).abs() < 1e-9, "a_{j} = {}", r.a[j]);
        if j > 0 {
            assert!(((r.b[j] - jf * (jf + s)) / (jf * (jf + s))).abs() < 1e-9, "b_{j} = {}", r.b[j]);
        }
    }
}

/// Kolmogorov distance between the sample and a continuous law.
fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn single_particle_laws() {
    // n = 1 with V = x²/2 is a standard normal; with V = −x on ℝ⁻ and a
    // charge α at 0, −x is Gamma(2α + 1, 1).
    let cfg = SamplerConfig { thin: 10, ..SamplerConfig::new(200_000, 2_000, 5) };
    let run = mcmc_sample(&Potential::gaussian(1), &cfg).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let d = ks(run.flat(), |x| normal.cdf(x));
    assert!(d < 0.02, "normal KS {d}");

    let p = Potential::new(
        vec![-1.0],
        vec![Singularity::log_charge(0.0, 0.5)],
        IntervalSet::single(f64::NEG_INFINITY, 0.0).unwrap(),
        1,
    )
    .unwrap();
    let run = mcmc_sample(&p, &cfg).unwrap();
    assert!(run.flat().iter().all(|x| *x < 0.0));
    let law = GammaDist::new(2.0, 1.0).unwrap();
    let d = ks(run.flat().iter().map(|x| -x).collect(), |y| law.cdf(y));
    assert!(d < 0.02, "gamma KS {d}");
}

#[test]
fn histogram_bins_against_normal_cdf() {
    let cfg = SamplerConfig { thin: 5, ..SamplerConfig::new(100_000, 1_000, 9) };
    let run = mcmc_sample(&Potential::gaussian(1), &cfg).unwrap();
    let edges = uniform_edges(-3.0, 3.0, 12);
    let h = histogram_density(&run.flat(), &edges).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let inside = normal.cdf(3.0) - normal.cdf(-3.0);
    for (i, d) in h.density.iter().enumerate() {
        let want = (normal.cdf(edges[i + 1]) - normal.cdf(edges[i])) / (inside * 0.5);
        assert!((d - want).abs() < 0.03, "bin {i}: {d} vs {want}");
    }
}
