//! Classical (coherent-state) steady states.
//!
//! Replacing `a` by a c-number `a₀` gives
//! `a₀ = −2iΩ / (2Δc − iγ + 4χn)` with `n = |a₀|²` a real root of
//! `16χ²n³ + 16χΔc n² + (4Δc² + γ²) n − 4Ω² = 0`.
//! Only the coherent model (no two-photon terms) is covered here.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::par::{self, Execution};

/// Two roots closer than this (relative) are flagged degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldBranch {
    pub n: f64,
    pub a0: Complex64,
    pub stable: bool,
    /// An eigenvalue sits on the imaginary axis (counted as unstable).
    pub marginal: bool,
    /// Coalesces with another branch within [`DEGENERACY_RTOL`].
    pub degenerate: bool,
    pub eigenvalues: [Complex64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldPoint {
    pub omega: f64,
    pub branches: Vec<MeanFieldBranch>,
}

/// Real nonnegative roots of `a3 n³ + a2 n² + a1 n + a0`, ascending.
fn cubic_real_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    if a3 == 0.0 {
        // χ = 0: linear in n with positive slope γ²
        return vec![-a0 / a1];
    }
    let a = a2 / a3;
    let b = a1 / a3;
    let c = a0 / a3;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;

    // a double root makes the discriminant vanish; rounding may leave it
    // slightly positive, which would otherwise drop two coalescing roots
    let disc = 4.0 * p * p * p + 27.0 * q * q;
    let disc_scale = 4.0 * (p * p * p).abs() + 27.0 * q * q;
    let mut roots = if p < 0.0 && disc <= 1e-12 * disc_scale {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect::<Vec<_>>()
    } else {
        let disc = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
        // pick the sign that avoids cancellation
        let u = (-q / 2.0 - q.signum() * disc).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![t + shift]
    };

    let poly = |n: f64| ((a3 * n + a2) * n + a1) * n + a0;
    let dpoly = |n: f64| (3.0 * a3 * n + 2.0 * a2) * n + a1;
    for n in roots.iter_mut() {
        for _ in 0..3 {
            let d = dpoly(*n);
            if d == 0.0 {
                break;
            }
            let next = *n - poly(*n) / d;
            if !next.is_finite() || poly(next).abs() >= poly(*n).abs() {
                break;
            }
            *n = next;
        }
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Jacobian of the linearized mean-field flow around `a₀` and its eigenvalues.
fn jacobian_eigenvalues(params: &ModelParams, n: f64, a0: Complex64) -> [Complex64; 2] {
    let i = Complex64::i();
    let shift = params.delta_c + 4.0 * params.chi * n;
    let j11 = -i * shift - params.gamma / 2.0;
    let j12 = -2.0 * i * params.chi * a0 * a0;
    let j21 = 2.0 * i * params.chi * (a0.conj() * a0.conj());
    let j22 = i * shift - params.gamma / 2.0;
    let half_tr = (j11 + j22) / 2.0;
    let half_diff = (j11 - j22) / 2.0;
    let root = (half_diff * half_diff + j12 * j21).sqrt();
    [half_tr + root, half_tr - root]
}

/// Fills the stability fields of a branch from the Jacobian of the classical
/// flow. Stable means both eigenvalues have strictly negative real part.
pub fn classify_stability(branch: MeanFieldBranch, params: &ModelParams) -> MeanFieldBranch {
    let ev = jacobian_eigenvalues(params, branch.n, branch.a0);
    let max_re = ev[0].re.max(ev[1].re);
    let scale = params
        .gamma
        .max(params.delta_c.abs())
        .max((params.chi * branch.n).abs());
    let marginal = max_re.abs() <= 1e-13 * scale;
    MeanFieldBranch {
        stable: max_re < 0.0 && !marginal,
        marginal,
        eigenvalues: ev,
        ..branch
    }
}

pub fn mean_field_amplitude(params: &ModelParams, n: f64) -> Complex64 {
    Complex64::new(0.0, -2.0 * params.omega)
        / Complex64::new(2.0 * params.delta_c + 4.0 * params.chi * n, -params.gamma)
}

/// All physical mean-field branches at the given parameters, ascending in `n`.
pub fn photon_number_branches(params: &ModelParams) -> Result<Vec<MeanFieldBranch>> {
    params.validate()?;
    if !params.is_coherent_only() {
        return Err(Error::UnsupportedModel(
            "mean field covers the coherently driven model only".into(),
        ));
    }
    let (chi, dc, g, om) = (params.chi, params.delta_c, params.gamma, params.omega);
    let roots = cubic_real_roots(
        16.0 * chi * chi,
        16.0 * chi * dc,
        4.0 * dc * dc + g * g,
        -4.0 * om * om,
    );
    let roots: Vec<f64> = roots
        .into_iter()
        .filter(|n| *n >= 0.0 || (om == 0.0 && n.abs() < 1e-300))
        .map(|n| n.max(0.0))
        .collect();
    if roots.is_empty() {
        return Err(Error::InvariantViolation {
            what: "mean-field cubic has no nonnegative root",
            value: om,
        });
    }

    let mut out: Vec<MeanFieldBranch> = roots
        .iter()
        .map(|&n| {
            let branch = MeanFieldBranch {
                n,
                a0: mean_field_amplitude(params, n),
                stable: false,
                marginal: false,
                degenerate: false,
                eigenvalues: [Complex64::new(0.0, 0.0); 2],
            };
            classify_stability(branch, params)
        })
        .collect();
    for k in 1..out.len() {
        let (lo, hi) = (out[k - 1].n, out[k].n);
        if hi - lo <= DEGENERACY_RTOL * hi.abs().max(lo.abs()) {
            out[k - 1].degenerate = true;
            out[k].degenerate = true;
        }
    }
    Ok(out)
}

pub fn sweep_drive(params: &ModelParams, omega_grid: &[f64]) -> Result<Vec<MeanFieldPoint>> {
    sweep_drive_with(params, omega_grid, Execution::default())
}

pub fn sweep_drive_with(
    params: &ModelParams,
    omega_grid: &[f64],
    exec: Execution,
) -> Result<Vec<MeanFieldPoint>> {
    par::try_map_points(omega_grid, exec, |&omega| {
        let p = params.with_omega(omega);
        Ok(MeanFieldPoint {
            omega,
            branches: photon_number_branches(&p)?,
        })
    })
}
