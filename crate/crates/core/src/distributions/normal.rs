use super::special::gamma_q;
use super::{finite, Probability, QUANTILE_MAX_ITER, QUANTILE_TOLERANCE};
use crate::error::{domain, Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// The standard normal distribution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StandardNormal;

impl StandardNormal {
    pub fn cdf(&self, x: f64) -> Result<f64> {
        norm_cdf(x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        norm_pdf(x)
    }

    pub fn quantile(&self, p: Probability) -> Result<f64> {
        norm_quantile(p.get())
    }
}

pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x), evaluated through Q(1/2, x²/2) so both tails keep relative accuracy.
pub fn norm_cdf(x: f64) -> Result<f64> {
    let x = finite("x", x)?;
    if x == 0.0 {
        return Ok(0.5);
    }
    let tail = 0.5 * gamma_q(0.5, 0.5 * x * x)?;
    Ok(if x < 0.0 { tail } else { 1.0 - tail })
}

/// Φ⁻¹(p) for `0 < p < 1`.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p, "0 < p < 1"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower tail; 1 - p is exact for p >= 1/2.
    let (q, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let mut x = initial_lower_tail(q);
    let mut best = (f64::INFINITY, x);
    for _ in 0..QUANTILE_MAX_ITER {
        let resid = lower_tail(x)? - q;
        if resid.abs() < best.0 {
            best = (resid.abs(), x);
        }
        // Halley correction using φ'(x) = -x φ(x).
        let u = resid / norm_pdf(x);
        let step = u / (1.0 + 0.5 * x * u);
        // Steps this small are driven by rounding in Φ itself.
        if step.abs() <= 1e-14 * x.abs().max(1.0) {
            break;
        }
        x -= step;
    }
    let (resid, x) = best;
    // Relative to q so the deep tail is held to the same standard.
    if resid <= QUANTILE_TOLERANCE * q {
        return Ok(sign * x);
    }
    Err(Error::NoConvergence {
        routine: "normal quantile",
        cap: QUANTILE_MAX_ITER,
    })
}

// Φ(x) for x <= 0 without the final subtraction.
fn lower_tail(x: f64) -> Result<f64> {
    if x >= 0.0 {
        return norm_cdf(x);
    }
    Ok(0.5 * gamma_q(0.5, 0.5 * x * x)?)
}

// Acklam's rational approximation, relative error about 1e-9; used only as a
// starting point for the Halley iteration.
fn initial_lower_tail(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if q < 0.02425 {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else {
        let r = q - 0.5;
        let s = r * r;
        (((((A[0] * s + A[1]) * s + A[2]) * s + A[3]) * s + A[4]) * s + A[5]) * r
            / (((((B[0] * s + B[1]) * s + B[2]) * s + B[3]) * s + B[4]) * s + 1.0)
    }
}
