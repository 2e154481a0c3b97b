//! Hoeffding sample sizes and perturbation bounds for kernel estimation.
//!
//! Logarithms are natural. Ceilings are applied only to final sample sizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} must lie in (0, 1]")))
    }
}

/// Samples `M` with `P(‖p̂ - p‖_∞ ≥ ε) ≤ δ` for an `n`-point law:
/// `⌈ln(2n/δ) / (2ε²)⌉`.
pub fn sample_size_oneshot(eps: f64, delta: f64, n: usize) -> Result<u64> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let m = (2.0 * n as f64 / delta).ln() / (2.0 * eps * eps);
    Ok(saturating_ceil(m))
}

fn saturating_ceil(x: f64) -> u64 {
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x.ceil() as u64
    }
}

/// Per-row sample size for an ℓ1 target on the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPlan {
    /// Required `‖Q̂ - Q‖_∞`.
    pub eps_q: f64,
    /// `⌈M⌉`, saturating at `u64::MAX`.
    pub samples: u64,
    /// `M` before rounding.
    pub samples_raw: f64,
}

/// `ε_Q = min{r/2, r²/8n, ε_b r²/8n}` and
/// `M = ⌈n² ln(2n(n+1)/δ) / (2ε_Q²)⌉`.
pub fn sample_size_kernel_for_afc(eps_b: f64, delta: f64, n: usize, r_min: f64) -> Result<KernelPlan> {
    if !(eps_b > 0.0 && eps_b.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps_b = {eps_b} must be positive")));
    }
    check_unit("delta", delta)?;
    check_unit("r_min", r_min)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let nf = n as f64;
    let base = r_min * r_min / (8.0 * nf);
    let eps_q = (r_min / 2.0).min(base).min(eps_b * base);
    let samples_raw = nf * nf / (2.0 * eps_q * eps_q) * (2.0 * nf * (nf + 1.0) / delta).ln();
    Ok(KernelPlan { eps_q, samples: saturating_ceil(samples_raw), samples_raw })
}

/// Radius `ε` with `union · 2e^{-2Mε²} = δ`: every one of `union` empirical
/// frequencies from `m` samples is within `ε` with probability `1 - δ`.
pub fn hoeffding_radius(m: usize, delta: f64, union: usize) -> f64 {
    ((2.0 * union as f64 / delta).ln() / (2.0 * m as f64)).sqrt()
}

fn check_perturbation(q_err: f64, r_min: f64) -> Result<()> {
    check_unit("r_min", r_min)?;
    if !(q_err >= 0.0 && q_err <= r_min / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "‖Q̂ - Q‖∞ = {q_err} exceeds half the leak floor {r_min}"
        )));
    }
    Ok(())
}

/// `‖N̂ - N‖_∞ ≤ (2/r²) ‖Q̂ - Q‖_∞`, valid when `‖Q̂ - Q‖_∞ ≤ r/2`.
pub fn fundamental_perturbation_bound(q_err: f64, r_min: f64) -> Result<f64> {
    check_perturbation(q_err, r_min)?;
    Ok(2.0 / (r_min * r_min) * q_err)
}

/// `‖b̂ - b‖_1 ≤ (8n/r²) ‖Q̂ - Q‖_∞`, valid when `‖Q̂ - Q‖_∞ ≤ r/2`.
pub fn afc_perturbation_bound(q_err: f64, n: usize, r_min: f64) -> Result<f64> {
    check_perturbation(q_err, r_min)?;
    Ok(8.0 * n as f64 / (r_min * r_min) * q_err)
}
