//! Exact steady state with coherent and two-photon drive, one- and two-photon loss.
//!
//! In the classical-axis basis the amplitudes obey the three-term recursion
//!
//! ```text
//! √m [(2Δc − iγ) + (2χ − iκ)(m − 1)] β_m = −i2√2 Ω β_{m−1} − 2Λ √(m − 1) β_{m−2}
//! ```
//!
//! Displacing by `λ = i√(2Λ/(2χ − iκ))` reduces it to
//! `β_m = (−λ)^m / √m! · ₂F₁(−m, y; z; 2)`, which is what
//! [`wavefunction_twophoton`] evaluates.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_linear::{correlation_linear, g2_of, wavefunction_linear};
use crate::model::{derive_twophoton, ModelParams, TwoPhotonDerived};
use crate::par::{self, Execution};
use crate::specfun::hyp2f1_terminating;
use crate::wavefunction::{
    check_order, past_resonance, relative_gap, CorrelationResult, SteadyWavefunction,
    CROSS_CHECK_RTOL,
};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// How a parameter set is routed between the solvers.
enum Route {
    Linear,
    Displaced(TwoPhotonDerived),
}

fn route(params: &ModelParams) -> Result<Route> {
    params.validate()?;
    if params.lambda_2ph == zero() {
        if params.kappa == 0.0 {
            return Ok(Route::Linear);
        }
        return Err(Error::UnsupportedModel(
            "two-photon loss without two-photon drive has no displaced form; \
             use wavefunction_via_three_term or the Lindblad solver"
                .into(),
        ));
    }
    Ok(Route::Displaced(derive_twophoton(params)?))
}

/// Normalized amplitudes from the displaced closed form.
///
/// With `Λ = 0` and `κ = 0` this defers to the coherent solver.
pub fn wavefunction_twophoton(params: &ModelParams) -> Result<SteadyWavefunction> {
    match route(params)? {
        Route::Linear => wavefunction_linear(params),
        Route::Displaced(d) => wavefunction_from_derived(&d),
    }
}

/// Amplitudes for an explicit displacement branch.
pub fn wavefunction_from_derived(d: &TwoPhotonDerived) -> Result<SteadyWavefunction> {
    // running (−λ)^m / √m! keeps the prefactor finite for large m
    let mut pre = Complex64::new(1.0, 0.0);
    SteadyWavefunction::grow(past_resonance(d.z), |m, _| {
        pre *= -d.lambda_disp / (m as f64).sqrt();
        Ok(pre * hyp2f1_terminating(m, d.y, d.z)?)
    })
}

/// Normalized amplitudes straight from the three-term recursion.
///
/// Covers every parameter set, including two-photon loss without two-photon
/// drive.
pub fn wavefunction_via_three_term(params: &ModelParams) -> Result<SteadyWavefunction> {
    params.validate()?;
    let base = Complex64::new(2.0 * params.delta_c, -params.gamma);
    let slope = Complex64::new(2.0 * params.chi, -params.kappa);
    let drive = Complex64::new(0.0, -2.0 * std::f64::consts::SQRT_2 * params.omega);
    let lam = params.lambda_2ph;
    let m_min = if slope == zero() {
        0
    } else {
        past_resonance(base / slope)
    };
    SteadyWavefunction::grow(m_min, |m, beta| {
        let coef = (base + slope * (m - 1) as f64) * (m as f64).sqrt();
        if coef.norm() == 0.0 {
            return Err(Error::DenominatorPole {
                index: m,
                magnitude: 0.0,
            });
        }
        let older = if m >= 2 {
            2.0 * lam * ((m - 1) as f64).sqrt() * beta[m - 2]
        } else {
            zero()
        };
        Ok((drive * beta[m - 1] - older) / coef)
    })
}

/// `⟨a†^l a^k⟩` via the amplitude sum, cross-checked against the
/// hypergeometric-sum form
/// `Σ_m 𝓕*_{m+l} 𝓕_{m+k} / (m! N √2^{l+k})` with `𝓕_j = (−λ)^j ₂F₁(−j, y; z; 2)`.
///
/// The amplitude sum is the reported value.
pub fn correlation_twophoton(
    params: &ModelParams,
    l: usize,
    k: usize,
) -> Result<CorrelationResult> {
    check_order(l, k)?;
    let d = match route(params)? {
        Route::Linear => return correlation_linear(params, l, k),
        Route::Displaced(d) => d,
    };
    let wf = wavefunction_from_derived(&d)?;
    let direct = wf.moment(l, k);

    let top = wf.truncation;
    let mut f = Vec::with_capacity(top + 1);
    let mut power = Complex64::new(1.0, 0.0);
    for j in 0..=top {
        f.push(power * hyp2f1_terminating(j, d.y, d.z)?);
        power *= -d.lambda_disp;
    }
    let mut norm = 0.0;
    let mut acc = zero();
    let mut inv_fact = 1.0;
    for m in 0..=top {
        if m > 0 {
            inv_fact /= m as f64;
        }
        norm += inv_fact * f[m].norm_sqr();
        if m + l.max(k) <= top {
            acc += inv_fact * f[m + l].conj() * f[m + k];
        }
    }
    let closed_form = acc / (norm * 2f64.powf((l + k) as f64 / 2.0));

    let rel = relative_gap(closed_form, direct);
    if rel > CROSS_CHECK_RTOL {
        return Err(Error::CrossCheckFailure {
            what: "two-photon correlation",
            closed_form,
            direct,
            rel_err: rel,
        });
    }
    Ok(CorrelationResult {
        l,
        k,
        value: direct,
        closed_form,
        amplitude_sum: direct,
        rel_discrepancy: rel,
        truncation: wf.truncation,
        terms_used: top + 1,
    })
}

/// The `n`-photon resonance at `Δc/χ = −(n − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonancePrediction {
    pub order: usize,
    pub detuning_over_chi: f64,
    /// Whether the drive content can excite this order: any order with a
    /// coherent drive, only even orders with a pure two-photon drive.
    pub allowed: bool,
}

/// Resonance orders `1 ..= n_max` with their detunings and parity rule.
pub fn resonance_predictions(n_max: usize, params: &ModelParams) -> Vec<ResonancePrediction> {
    let coherent = params.omega != 0.0;
    let pairs = params.lambda_2ph != zero();
    (1..=n_max)
        .map(|n| ResonancePrediction {
            order: n,
            detuning_over_chi: -((n - 1) as f64),
            allowed: coherent || (pairs && n % 2 == 0),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub delta_c_over_chi: f64,
    pub photon_number: f64,
    pub g2: f64,
    pub is_peak: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceScan {
    pub points: Vec<ScanPoint>,
    /// Detunings (in units of `χ`) of strict three-point local maxima of `⟨n⟩`.
    pub peaks: Vec<f64>,
}

pub fn resonance_scan(params: &ModelParams, delta_over_chi: &[f64]) -> Result<ResonanceScan> {
    resonance_scan_with(params, delta_over_chi, Execution::default())
}

/// Photon number and `g²(0)` over a detuning grid given in units of `χ`.
pub fn resonance_scan_with(
    params: &ModelParams,
    delta_over_chi: &[f64],
    exec: Execution,
) -> Result<ResonanceScan> {
    if params.chi == 0.0 {
        return Err(Error::InvalidParams(
            "detuning in units of chi needs chi != 0".into(),
        ));
    }
    let mut points = par::try_map_points(delta_over_chi, exec, |&r| {
        let p = params.with_delta_c(r * params.chi);
        let n = correlation_twophoton(&p, 1, 1)?.value.re;
        let pair = correlation_twophoton(&p, 2, 2)?.value;
        Ok(ScanPoint {
            delta_c_over_chi: r,
            photon_number: n,
            g2: g2_of(n, pair),
            is_peak: false,
        })
    })?;
    let mut peaks = Vec::new();
    for i in 1..points.len().saturating_sub(1) {
        let n = points[i].photon_number;
        if n > points[i - 1].photon_number && n > points[i + 1].photon_number {
            points[i].is_peak = true;
            peaks.push(points[i].delta_c_over_chi);
        }
    }
    Ok(ResonanceScan { points, peaks })
}
