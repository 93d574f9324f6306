//! Exact steady state of the coherently driven Kerr resonator.
//!
//! With `ε = Ω/(iχ)` and `x = (2Δc − iγ)/(2χ)` the amplitudes obey
//! `β_m = √(2/m) ε β_{m−1} / (x + m − 1)`, i.e.
//! `β_m = (√2 ε)^m / (√m! (x)_m)`, and the normal-ordered moments are
//!
//! ```text
//! ⟨a†^l a^k⟩ = ε*^l ε^k / ((x*)_l (x)_k) · ₀F₂(x*+l, x+k; 2|ε|²) / ₀F₂(x*, x; 2|ε|²)
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{derive_linear, ModelParams};
use crate::par::{self, Execution};
use crate::specfun::{hyp0f2, pochhammer};
use crate::wavefunction::{
    check_order, past_resonance, relative_gap, CorrelationResult, SteadyWavefunction,
    CROSS_CHECK_RTOL,
};

fn check_linear(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if !params.is_coherent_only() {
        return Err(Error::UnsupportedModel(
            "two-photon terms need the displaced solver".into(),
        ));
    }
    Ok(())
}

/// Normalized steady-state amplitudes with adaptive truncation.
pub fn wavefunction_linear(params: &ModelParams) -> Result<SteadyWavefunction> {
    check_linear(params)?;
    let d = derive_linear(params)?;
    let step = std::f64::consts::SQRT_2 * d.epsilon;
    let wf = SteadyWavefunction::grow(past_resonance(d.x), |m, beta| {
        let den = d.x + (m - 1) as f64;
        if den.norm() == 0.0 {
            return Err(Error::Pole { z: den });
        }
        Ok(step * beta[m - 1] / (den * (m as f64).sqrt()))
    })?;

    let series = hyp0f2(
        d.x.conj(),
        d.x,
        Complex64::new(2.0 * d.epsilon.norm_sqr(), 0.0),
    )?;
    let gap = (series.value.re - wf.norm_constant).abs() / wf.norm_constant;
    if gap > CROSS_CHECK_RTOL {
        log::warn!(
            "norm constant mismatch: series {} vs amplitudes {} (rel {gap:e})",
            series.value.re,
            wf.norm_constant
        );
    }
    Ok(wf)
}

/// Closed-form moment, also returning the series terms used.
fn closed_form_moment(params: &ModelParams, l: usize, k: usize) -> Result<(Complex64, usize)> {
    let d = derive_linear(params)?;
    let (eps, x) = (d.epsilon, d.x);
    let arg = Complex64::new(2.0 * eps.norm_sqr(), 0.0);
    let den = hyp0f2(x.conj(), x, arg)?;
    if l + k == 0 {
        return Ok((Complex64::new(1.0, 0.0), den.terms_used));
    }
    if eps.norm() == 0.0 {
        return Ok((Complex64::new(0.0, 0.0), 1));
    }
    let num = hyp0f2(x.conj() + l as f64, x + k as f64, arg)?;
    if !num.converged || !den.converged {
        return Err(Error::NonConvergence {
            what: "0F2 series",
            limit: num.terms_used.max(den.terms_used),
        });
    }
    let prefactor = eps.conj().powu(l as u32) * eps.powu(k as u32)
        / (pochhammer(x.conj(), l) * pochhammer(x, k));
    Ok((
        prefactor * num.value / den.value,
        num.terms_used.max(den.terms_used),
    ))
}

/// `⟨a†^l a^k⟩` from the closed form, cross-checked against the amplitude sum.
pub fn correlation_linear(params: &ModelParams, l: usize, k: usize) -> Result<CorrelationResult> {
    check_linear(params)?;
    check_order(l, k)?;
    let (closed_form, terms_used) = closed_form_moment(params, l, k)?;
    let wf = wavefunction_linear(params)?;
    let direct = wf.moment(l, k);
    let rel = relative_gap(closed_form, direct);
    if rel > CROSS_CHECK_RTOL {
        return Err(Error::CrossCheckFailure {
            what: "linear correlation",
            closed_form,
            direct,
            rel_err: rel,
        });
    }
    Ok(CorrelationResult {
        l,
        k,
        value: closed_form,
        closed_form,
        amplitude_sum: direct,
        rel_discrepancy: rel,
        truncation: wf.truncation,
        terms_used,
    })
}

/// Observables along a drive sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactPoint {
    pub omega: f64,
    pub photon_number: f64,
    pub amplitude: Complex64,
    /// `⟨a†²a²⟩ / ⟨a†a⟩²`; NaN in the vacuum.
    pub g2: f64,
    /// Optional extra moment requested by the caller.
    pub extra: Option<Complex64>,
    pub truncation: usize,
}

pub(crate) fn g2_of(n: f64, pair: Complex64) -> f64 {
    if n == 0.0 {
        f64::NAN
    } else {
        pair.re / (n * n)
    }
}

pub fn sweep_drive_exact(params: &ModelParams, omega_grid: &[f64]) -> Result<Vec<ExactPoint>> {
    sweep_drive_exact_with(params, omega_grid, None, Execution::default())
}

/// Sweep with an optional extra moment `(l, k)` and explicit execution mode.
pub fn sweep_drive_exact_with(
    params: &ModelParams,
    omega_grid: &[f64],
    extra: Option<(usize, usize)>,
    exec: Execution,
) -> Result<Vec<ExactPoint>> {
    check_linear(params)?;
    par::try_map_points(omega_grid, exec, |&omega| {
        let p = params.with_omega(omega);
        let n = correlation_linear(&p, 1, 1)?;
        let a = correlation_linear(&p, 0, 1)?;
        let pair = correlation_linear(&p, 2, 2)?;
        let extra = match extra {
            Some((l, k)) => Some(correlation_linear(&p, l, k)?.value),
            None => None,
        };
        Ok(ExactPoint {
            omega,
            photon_number: n.value.re,
            amplitude: a.value,
            g2: g2_of(n.value.re, pair.value),
            extra,
            truncation: n.truncation,
        })
    })
}
