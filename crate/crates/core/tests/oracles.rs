//! Distribution functions and sample-size searches checked against
//! independent references: composite Simpson quadrature of the densities and
//! brute-force scans over n.

use pilot_core::distributions::{chisq_cdf, nct_cdf, norm_cdf, t_cdf, t_quantile};
use pilot_core::power::{size_for_effect_size, DesignKind, QuantileMode, TestDesign};
use pilot_core::variance::{pilot_n_exact, Side};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

// Γ(k/2) for a positive integer k by the half-integer recurrence.
fn gamma_half(k: u32) -> f64 {
    let mut g = if k.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut x = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < 0.5 * k as f64 - 1e-9 {
        g *= x;
        x += 1.0;
    }
    g
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

// Density of √(χ²_k), smooth at zero for every k >= 1.
fn chi_density(u: f64, k: u32) -> f64 {
    if u <= 0.0 {
        return if k == 1 { 2.0 * phi(0.0) } else { 0.0 };
    }
    let kf = k as f64;
    2.0 * u.powf(kf - 1.0) * (-0.5 * u * u).exp() / (2f64.powf(0.5 * kf) * gamma_half(k))
}

fn oracle_chisq_cdf(x: f64, k: u32) -> f64 {
    simpson(|u| chi_density(u, k), 0.0, x.sqrt(), 4000)
}

fn oracle_t_cdf(t: f64, k: u32) -> f64 {
    let kf = k as f64;
    let c = gamma_half(k + 1) / ((kf * std::f64::consts::PI).sqrt() * gamma_half(k));
    0.5 + simpson(
        |x| c * (1.0 + x * x / kf).powf(-0.5 * (kf + 1.0)),
        0.0,
        t,
        4000,
    )
}

// P(T <= t) with T = (Z + δ) / (U / √k), U ~ χ_k: condition on U.
fn oracle_nct_cdf(t: f64, k: u32, delta: f64) -> f64 {
    let kf = k as f64;
    let hi = kf.sqrt() + 14.0;
    simpson(
        |u| norm_cdf(t * u / kf.sqrt() - delta).unwrap() * chi_density(u, k),
        0.0,
        hi,
        8000,
    )
}

#[test]
fn normal_cdf_matches_quadrature() {
    for &x in &[-6.0, -3.1, -1.0, -0.2, 0.0, 0.4, 1.7, 2.5, 5.0] {
        let want = 0.5 + simpson(phi, 0.0, x, 4000);
        let got = norm_cdf(x).unwrap();
        assert!((got - want).abs() < 1e-13, "x={x}: {got} vs {want}");
    }
}

#[test]
fn chisq_cdf_matches_quadrature() {
    for &k in &[1u32, 2, 3, 5, 11, 24, 60] {
        for &q in &[0.05, 0.3, 0.8, 1.0, 1.6, 3.0] {
            let x = q * k as f64;
            let want = oracle_chisq_cdf(x, k);
            let got = chisq_cdf(x, k as f64).unwrap();
            assert!((got - want).abs() < 1e-11, "k={k} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn t_cdf_matches_quadrature() {
    for &k in &[1u32, 2, 5, 11, 24, 100] {
        for &t in &[-4.0, -1.96, -0.5, 0.3, 1.0, 2.7] {
            let want = oracle_t_cdf(t, k);
            let got = t_cdf(t, k as f64).unwrap();
            assert!((got - want).abs() < 1e-11, "k={k} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn noncentral_t_cdf_matches_quadrature() {
    for &k in &[2u32, 5, 14, 40, 150] {
        for &delta in &[-1.5, 0.0, 0.8, 2.8, 6.0] {
            for &t in &[-2.0, 0.0, 1.2, 1.96, 4.5] {
                let want = oracle_nct_cdf(t, k, delta);
                let got = nct_cdf(t, k as f64, delta).unwrap();
                assert!(
                    (got - want).abs() < 1e-9,
                    "k={k} δ={delta} t={t}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn exact_pilot_size_matches_brute_force_scan() {
    for &ratio in &[0.45, 0.62, 0.75] {
        for &p in &[0.1, 0.2, 0.3] {
            let want = (2u32..)
                .find(|&n| oracle_chisq_cdf((n - 1) as f64 * ratio, n - 1) < p)
                .unwrap();
            let got = pilot_n_exact(ratio, p, Side::Under, false).unwrap();
            assert_eq!(got, want as u64, "ratio={ratio} p={p}");
        }
    }
}

#[test]
fn main_size_matches_brute_force_scan() {
    let design = TestDesign::new(DesignKind::TwoSample, 0.05).unwrap();
    for &es in &[0.6, 0.9, 1.4] {
        for &target in &[0.6, 0.8] {
            let want = (2u32..)
                .find(|&n| {
                    let df = 2 * n - 2;
                    let crit = t_quantile(0.975, df as f64).unwrap();
                    let ncp = es * (n as f64 / 2.0).sqrt();
                    1.0 - oracle_nct_cdf(crit, df, ncp) >= target
                })
                .unwrap();
            let got = size_for_effect_size(es, &design, target, QuantileMode::TIterative).unwrap();
            assert_eq!(got.n, want as u64, "es={es} target={target}");
        }
    }
}
