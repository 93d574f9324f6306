//! Steady-state amplitudes on the classical axis of the doubled space.
//!
//! The steady state is `|Ψ₀⟩ = Σ_m β_m |m⟩_cl |0⟩_q`. Normal-ordered moments
//! `⟨a†^l a^k⟩` follow from `⟨a_cl†^l a_cl^k⟩ / 2^{(l+k)/2}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A tail amplitude counts as negligible below this fraction of the norm.
pub const TAIL_RTOL: f64 = 1e-16;
/// Consecutive negligible amplitudes required before stopping.
pub const TAIL_QUIET: usize = 3;
pub const MAX_TRUNCATION: usize = 4096;
/// Converged wavefunctions carry at most this much estimated tail mass.
pub const TAIL_MASS_LIMIT: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyWavefunction {
    /// Normalized amplitudes `β_0 ..= β_M`.
    pub amplitudes: Vec<Complex64>,
    /// Largest retained index `M`.
    pub truncation: usize,
    /// Estimated norm fraction beyond `M`.
    pub tail_mass: f64,
    /// Sum of `|β_m|²` before normalization, with `β_0 = 1`.
    pub norm_constant: f64,
    pub converged: bool,
}

impl SteadyWavefunction {
    /// Grows amplitudes from `β_0 = 1` until the tail is negligible.
    ///
    /// `next(m, previous)` returns `β_m`. Stopping is only considered for
    /// `m ≥ m_min`, chosen past every resonance of the recursion so the tail
    /// decays monotonically from there on.
    pub(crate) fn grow<F>(m_min: usize, mut next: F) -> Result<Self>
    where
        F: FnMut(usize, &[Complex64]) -> Result<Complex64>,
    {
        let mut beta = vec![Complex64::new(1.0, 0.0)];
        let mut total = 1.0;
        let mut quiet = 0;
        for m in 1..=MAX_TRUNCATION {
            let b = next(m, &beta)?;
            if !b.is_finite() {
                return Err(Error::NonConvergence {
                    what: "steady-state amplitudes overflowed",
                    limit: m,
                });
            }
            beta.push(b);
            let w = b.norm_sqr();
            total += w;
            quiet = if w <= TAIL_RTOL * total { quiet + 1 } else { 0 };
            if m >= m_min.max(TAIL_QUIET) && quiet >= TAIL_QUIET {
                // compare consecutive pairs so parity-restricted recursions work
                let last = w + beta[m - 1].norm_sqr();
                let prev = beta[m - 2].norm_sqr() + beta[m - 3].norm_sqr();
                let r2 = if prev == 0.0 { 0.0 } else { last / prev };
                if r2 < 1.0 {
                    let tail = last * r2 / (1.0 - r2) / total;
                    return Ok(Self::finish(beta, total, tail, tail <= TAIL_MASS_LIMIT));
                }
            }
        }
        Err(Error::NonConvergence {
            what: "steady-state truncation",
            limit: MAX_TRUNCATION,
        })
    }

    fn finish(mut beta: Vec<Complex64>, total: f64, tail: f64, converged: bool) -> Self {
        let s = total.sqrt();
        for b in beta.iter_mut() {
            *b /= s;
        }
        SteadyWavefunction {
            truncation: beta.len() - 1,
            amplitudes: beta,
            tail_mass: tail,
            norm_constant: total,
            converged,
        }
    }

    /// `Σ|β_m|²` of the stored amplitudes.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|b| b.norm_sqr()).sum()
    }

    /// `⟨Ψ₀| a_cl†^l a_cl^k |Ψ₀⟩ = Σ_m β*_{m+l} β_{m+k} √((m+l)!(m+k)!)/m!`.
    pub fn classical_moment(&self, l: usize, k: usize) -> Complex64 {
        let beta = &self.amplitudes;
        let top = beta.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..top.saturating_sub(l.max(k)) {
            let fl: f64 = (1..=l).map(|j| (m + j) as f64).product();
            let fk: f64 = (1..=k).map(|j| (m + j) as f64).product();
            acc += beta[m + l].conj() * beta[m + k] * (fl * fk).sqrt();
        }
        acc
    }

    /// Normal-ordered physical moment `⟨a†^l a^k⟩`.
    pub fn moment(&self, l: usize, k: usize) -> Complex64 {
        self.classical_moment(l, k) / 2f64.powf((l + k) as f64 / 2.0)
    }
}

/// Outcome of a moment computed along two independent routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub l: usize,
    pub k: usize,
    /// The reported value of `⟨a†^l a^k⟩`.
    pub value: Complex64,
    pub closed_form: Complex64,
    pub amplitude_sum: Complex64,
    pub rel_discrepancy: f64,
    /// Wavefunction truncation used by the amplitude route.
    pub truncation: usize,
    /// Series terms used by the closed-form route.
    pub terms_used: usize,
}

/// Largest moment order accepted by the correlation functions.
pub const MAX_ORDER: usize = 16;
/// Closed form and amplitude sum must agree this well.
pub const CROSS_CHECK_RTOL: f64 = 1e-9;

pub(crate) fn check_order(l: usize, k: usize) -> Result<()> {
    if l > MAX_ORDER || k > MAX_ORDER {
        return Err(Error::InvalidParams(format!(
            "moment order ({l}, {k}) exceeds {MAX_ORDER}"
        )));
    }
    Ok(())
}

pub(crate) fn relative_gap(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// Index past which `|base + (m − 1)|` grows with `m`, plus a margin of two.
pub(crate) fn past_resonance(base: Complex64) -> usize {
    let edge = (-base.re).max(0.0).ceil();
    (edge as usize).saturating_add(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_amplitudes_stop_with_small_tail() {
        let wf = SteadyWavefunction::grow(0, |_, prev| Ok(prev[prev.len() - 1] * 0.5)).unwrap();
        assert!(wf.converged);
        assert!(wf.tail_mass <= TAIL_MASS_LIMIT);
        assert!((wf.norm() - 1.0).abs() < 1e-15);
        assert!((wf.norm_constant - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn growing_amplitudes_hit_the_cap() {
        let r = SteadyWavefunction::grow(0, |m, _| Ok(Complex64::new(1.0 / (m as f64), 0.0)));
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn vacuum_moments() {
        let wf = SteadyWavefunction::grow(0, |_, _| Ok(Complex64::new(0.0, 0.0))).unwrap();
        assert_eq!(wf.moment(0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(wf.moment(1, 1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn classical_number_state_moment() {
        // |1>_cl: <a_cl† a_cl> = 1 so the physical occupation is 1/2
        let wf = SteadyWavefunction {
            amplitudes: vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            truncation: 1,
            tail_mass: 0.0,
            norm_constant: 1.0,
            converged: true,
        };
        assert_eq!(wf.moment(1, 1), Complex64::new(0.5, 0.0));
    }
}
