use std::sync::OnceLock;

use proptest::prelude::*;

use semiclassical::kernel::{airy_kernel, bessel_kernel, sine_kernel, FiniteKernel};
use semiclassical::sampler::{histogram_density, log_density, log_ratio, uniform_edges};
use semiclassical::{parse_potential, potential::potential_to_json, IntervalSet, Potential};

fn gaussian_kernel() -> &'static FiniteKernel {
    static K: OnceLock<FiniteKernel> = OnceLock::new();
    K.get_or_init(|| FiniteKernel::new(&Potential::gaussian(12)).unwrap())
}

fn hard_wall() -> Potential {
    Potential::polynomial(vec![-1.0], IntervalSet::single(f64::NEG_INFINITY, 0.0).unwrap(), 6).unwrap()
}

fn distinct(xs: &[f64]) -> bool {
    xs.iter().enumerate().all(|(i, x)| xs[i + 1..].iter().all(|y| (x - y).abs() > 1e-6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn finite_kernel_is_symmetric(x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let k = gaussian_kernel();
        prop_assert_eq!(k.eval(x, y).0, k.eval(y, x).0);
    }

    #[test]
    fn finite_kernel_diagonal_is_positive(x in -4.0f64..4.0) {
        prop_assert!(gaussian_kernel().eval(x, x).0 > 0.0);
    }

    #[test]
    fn reference_kernels_are_symmetric(u in -6.0f64..3.0, v in -6.0f64..3.0) {
        prop_assert!((sine_kernel(u, v) - sine_kernel(v, u)).abs() < 1e-15);
        prop_assert!((airy_kernel(u, v) - airy_kernel(v, u)).abs() < 1e-13);
        let (a, b) = (u.abs(), v.abs());
        for order in [0.0, 1.0, 2.5] {
            let kab = bessel_kernel(order, a, b).unwrap();
            let kba = bessel_kernel(order, b, a).unwrap();
            prop_assert!((kab - kba).abs() < 1e-12, "order {order}: {kab} vs {kba}");
        }
    }

    #[test]
    fn moves_and_their_reverses_cancel(
        xs in prop::collection::vec(-3.0f64..-0.01, 6),
        i in 0usize..6,
        y in -3.0f64..-0.01,
    ) {
        prop_assume!(distinct(&xs) && xs.iter().all(|x| (x - y).abs() > 1e-6));
        let p = hard_wall();
        let fwd = log_ratio(&p, &xs, i, y).unwrap();
        let mut ys = xs.clone();
        ys[i] = y;
        let back = log_ratio(&p, &ys, i, xs[i]).unwrap();
        // acceptance ratios of a move and its reverse multiply to one
        prop_assert!((fwd.exp() * back.exp() - 1.0).abs() < 1e-9);
        let full = log_density(&p, &ys) - log_density(&p, &xs);
        prop_assert!((full - fwd).abs() < 1e-9 * (1.0 + full.abs()));
    }

    #[test]
    fn moves_off_the_domain_are_rejected(xs in prop::collection::vec(-3.0f64..-0.01, 6), i in 0usize..6, y in 0.0f64..3.0) {
        prop_assume!(y > 0.0);
        prop_assert_eq!(log_ratio(&hard_wall(), &xs, i, y), None);
    }

    #[test]
    fn histograms_are_normalized(samples in prop::collection::vec(-1.0f64..1.0, 1..300), bins in 1usize..30) {
        let h = histogram_density(&samples, &uniform_edges(-1.0, 1.0, bins)).unwrap();
        let total: f64 = h.density.iter().zip(h.widths()).map(|(d, w)| d * w).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(h.counted + h.outside, samples.len());
    }

    #[test]
    fn potential_json_round_trip(reg in prop::collection::vec(-3.0f64..3.0, 1..4), lead in 0.1f64..2.0, n in 1usize..200) {
        let mut reg = reg;
        // even degree with positive leading term keeps the weight integrable
        if reg.len() % 2 == 0 {
            reg.push(lead);
        } else {
            *reg.last_mut().unwrap() = lead;
        }
        let p = Potential::polynomial(reg, IntervalSet::real_line(), n).unwrap();
        let q = parse_potential(&potential_to_json(&p).to_string()).unwrap();
        prop_assert_eq!(p, q);
    }
}
