//! Gamma, Airy and Bessel-J functions on the real line.
//!
//! Airy: Maclaurin series on `[-8, 6]`, asymptotic expansions outside.
//! Bessel: ascending series for `x < 12`, Hankel's expansion beyond.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler's gamma function.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// `1/Γ(x)`, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// `Ai(0) = 3^{-2/3} / Γ(2/3)`.
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// `Ai'(0) = -3^{-1/3} / Γ(1/3)`.
pub const AIP0: f64 = -0.258_819_403_792_806_8;

/// `(Ai(x), Ai'(x))`.
pub fn airy(x: f64) -> (f64, f64) {
    if x > 6.0 {
        airy_asym_pos(x)
    } else if x < -8.0 {
        airy_asym_neg(-x)
    } else {
        airy_series(x)
    }
}

pub fn airy_ai(x: f64) -> f64 {
    airy(x).0
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy(x).1
}

fn airy_series(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f = Σ 3^k (1/3)_k x^{3k}/(3k)!,  g = Σ 3^k (2/3)_k x^{3k+1}/(3k+1)!
    let (mut f, mut fp) = (1.0, 0.0);
    let (mut g, mut gp) = (x, 1.0);
    let mut tf = 1.0;
    let mut tg = x;
    let mut k = 0.0;
    loop {
        let tf_next = tf * x3 / ((3.0 * k + 2.0) * (3.0 * k + 3.0));
        let tg_next = tg * x3 / ((3.0 * k + 3.0) * (3.0 * k + 4.0));
        tf = tf_next;
        tg = tg_next;
        f += tf;
        g += tg;
        if x != 0.0 {
            fp += tf * (3.0 * k + 3.0) / x;
            gp += tg * (3.0 * k + 4.0) / x;
        }
        k += 1.0;
        if tf.abs() < 1e-18 * f.abs().max(1.0) && tg.abs() < 1e-18 * g.abs().max(1.0) {
            break;
        }
        if k > 200.0 {
            break;
        }
    }
    (AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp)
}

fn airy_u_coeffs(count: usize) -> Vec<f64> {
    let mut u = vec![1.0];
    for k in 1..count {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf));
    }
    u
}

/// Sums `Σ (-1)^k c_k z^{-k}` over indices `start, start+2, ...` (sign alternating
/// per retained term), stopping at the smallest term.
fn asym_sum(c: &[f64], zeta: f64, start: usize, step: usize) -> f64 {
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    let mut sign = 1.0;
    let mut k = start;
    while k < c.len() {
        let term = c[k] / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        sum += sign * term;
        last = term.abs();
        if last < 1e-17 * sum.abs() {
            break;
        }
        sign = -sign;
        k += step;
    }
    sum
}

fn airy_asym_pos(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let u = airy_u_coeffs(40);
    let v: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(k, uk)| {
            let kf = k as f64;
            -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk
        })
        .collect();
    let pre = (-zeta).exp() / (2.0 * PI.sqrt());
    let ai = pre * x.powf(-0.25) * asym_sum(&u, zeta, 0, 1);
    let aip = -pre * x.powf(0.25) * asym_sum(&v, zeta, 0, 1);
    (ai, aip)
}

fn airy_asym_neg(t: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * t.powf(1.5);
    let u = airy_u_coeffs(40);
    let v: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(k, uk)| {
            let kf = k as f64;
            -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk
        })
        .collect();
    let phase = zeta - PI / 4.0;
    let (s, c) = phase.sin_cos();
    let u_even = asym_sum(&u, zeta, 0, 2);
    let u_odd = asym_sum(&u, zeta, 1, 2);
    let v_even = asym_sum(&v, zeta, 0, 2);
    let v_odd = asym_sum(&v, zeta, 1, 2);
    let ai = t.powf(-0.25) / PI.sqrt() * (c * u_even + s * u_odd);
    let aip = t.powf(0.25) / PI.sqrt() * (s * v_even - c * v_odd);
    (ai, aip)
}

/// Bessel function of the first kind `J_ν(x)` for real `ν` and `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_j requires x >= 0");
    if nu < 0.0 && nu == nu.floor() {
        let m = -nu;
        let sign = if (m as i64) % 2 == 0 { 1.0 } else { -1.0 };
        return sign * bessel_j(m, x);
    }
    if x == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if x < 12.0 + nu.abs() {
        bessel_j_series(nu, x)
    } else {
        bessel_j_hankel(nu, x)
    }
}

fn bessel_j_series(nu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let q = -h * h;
    let mut term = h.powf(nu) * rgamma(nu + 1.0);
    let mut sum = term;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && kf > h {
            break;
        }
    }
    sum
}

fn bessel_j_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    // a_k = Π_{j=1..k} (mu - (2j-1)^2) / (k! 8^k x^k)
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        if k > 0 {
            let kf = k as f64;
            term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        }
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if last < 1e-17 {
            break;
        }
    }
    let omega = x - 0.5 * nu * PI - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}

/// `J_ν'(x) = (ν/x) J_ν(x) - J_{ν+1}(x)`.
pub fn bessel_j_prime(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 1.0 {
            0.5
        } else if nu == 0.0 || nu > 1.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x)
}
