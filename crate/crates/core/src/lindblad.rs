//! Truncated-Fock Lindblad solver, used as an independent reference.
//!
//! `dρ/dt = −i[H, ρ] + γ D[a]ρ + κ D[a²]ρ` on `|0⟩ ..= |M⟩`. The density
//! matrix is column-stacked (`ρ_mn` at `n·(M+1) + m`), which makes the
//! Liouvillian banded with bandwidth `O(M)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::model::ModelParams;

type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const ADAPTIVE_START: usize = 16;
pub const ADAPTIVE_CAP: usize = 256;
/// Absolute floor added to the relative tolerance when comparing cutoffs.
pub const ADAPTIVE_ATOL: f64 = 1e-14;

/// Liouvillian superoperator on a truncated Fock space.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub cutoff: usize,
    band: BandMatrix,
}

/// Nonzero entries of the truncated Hamiltonian column `m`: `(m', ⟨m'|H|m⟩)`.
fn hamiltonian_column(p: &ModelParams, m: usize, d: usize) -> Vec<(usize, Complex64)> {
    let mf = m as f64;
    let mut out = vec![(m, c(p.delta_c * mf + p.chi * mf * (mf - 1.0), 0.0))];
    if m + 1 < d {
        out.push((m + 1, c(0.0, p.omega * (mf + 1.0).sqrt())));
    }
    if m >= 1 {
        out.push((m - 1, c(0.0, -p.omega * mf.sqrt())));
    }
    if p.lambda_2ph != c(0.0, 0.0) {
        if m + 2 < d {
            out.push((m + 2, 0.5 * p.lambda_2ph * ((mf + 1.0) * (mf + 2.0)).sqrt()));
        }
        if m >= 2 {
            out.push((m - 2, 0.5 * p.lambda_2ph.conj() * (mf * (mf - 1.0)).sqrt()));
        }
    }
    out
}

/// `(row, col, value)` entries of the column-stacked Liouvillian.
fn liouvillian_entries(p: &ModelParams, cutoff: usize) -> Vec<(usize, usize, Complex64)> {
    let d = cutoff + 1;
    let idx = |m: usize, n: usize| n * d + m;
    let i = Complex64::i();
    let cols: Vec<Vec<(usize, Complex64)>> = (0..d).map(|m| hamiltonian_column(p, m, d)).collect();
    let mut out = Vec::new();
    for n in 0..d {
        for m in 0..d {
            let col = idx(m, n);
            // −i H ρ
            for &(mp, h) in &cols[m] {
                out.push((idx(mp, n), col, -i * h));
            }
            // +i ρ H, with ⟨n|H|n'⟩ = conj(⟨n'|H|n⟩)
            for &(np, h) in &cols[n] {
                out.push((idx(m, np), col, i * h.conj()));
            }
            let (mf, nf) = (m as f64, n as f64);
            let mut diag = -0.5 * p.gamma * (mf + nf);
            if m >= 1 && n >= 1 {
                out.push((idx(m - 1, n - 1), col, c(p.gamma * (mf * nf).sqrt(), 0.0)));
            }
            if p.kappa != 0.0 {
                diag -= 0.5 * p.kappa * (mf * (mf - 1.0) + nf * (nf - 1.0));
                if m >= 2 && n >= 2 {
                    let w = (mf * (mf - 1.0) * nf * (nf - 1.0)).sqrt();
                    out.push((idx(m - 2, n - 2), col, c(p.kappa * w, 0.0)));
                }
            }
            out.push((col, col, c(diag, 0.0)));
        }
    }
    out
}

pub fn build_liouvillian(params: &ModelParams, cutoff: usize) -> Result<Liouvillian> {
    params.validate()?;
    if cutoff == 0 {
        return Err(Error::CutoffTooSmall { cutoff, needed: 1 });
    }
    let d = cutoff + 1;
    let entries = liouvillian_entries(params, cutoff);
    let (mut kl, mut ku) = (0, 0);
    for &(r, col, _) in &entries {
        kl = kl.max(r.saturating_sub(col));
        ku = ku.max(col.saturating_sub(r));
    }
    let mut band = BandMatrix::zeros(d * d, kl, ku);
    for (r, col, v) in entries {
        band.add(r, col, v);
    }
    Ok(Liouvillian { cutoff, band })
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        self.band.bandwidths()
    }

    /// `L` applied to a density matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.dim();
        let v: Vec<Complex64> = rho.iter().copied().collect();
        CMat::from_vec(d, d, self.band.mul_vec(&v))
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.band.dim();
        let (kl, ku) = self.band.bandwidths();
        let mut out = CMat::zeros(n, n);
        for r in 0..n {
            for col in r.saturating_sub(kl)..=(r + ku).min(n - 1) {
                out[(r, col)] = self.band.get(r, col);
            }
        }
        out
    }
}

/// A density matrix in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMat,
    /// Largest `|ρ − ρ†|` entry of the raw solve, before hermitization.
    pub raw_hermiticity_error: f64,
}

impl DensityMatrix {
    pub fn cutoff(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Largest entry of `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * c(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Unit trace and hermiticity within `1e-10`, eigenvalues above `−1e-8`.
    pub fn check_invariants(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - c(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvariantViolation {
                what: "density matrix trace",
                value: tr.re,
            });
        }
        let h = self.hermiticity_error().max(self.raw_hermiticity_error);
        if h > 1e-10 {
            return Err(Error::InvariantViolation {
                what: "density matrix hermiticity",
                value: h,
            });
        }
        let e = self.min_eigenvalue();
        if e < -1e-8 {
            return Err(Error::InvariantViolation {
                what: "density matrix positivity",
                value: e,
            });
        }
        Ok(())
    }

    /// `Tr(a†^l a^k ρ) = Σ_i √((i+l)!/i!) √((i+k)!/i!) ρ_{i+k, i+l}`.
    pub fn moment(&self, l: usize, k: usize) -> Complex64 {
        let d = self.matrix.nrows();
        let mut acc = c(0.0, 0.0);
        for i in 0..d.saturating_sub(l.max(k)) {
            let fl: f64 = (1..=l).map(|j| (i + j) as f64).product();
            let fk: f64 = (1..=k).map(|j| (i + j) as f64).product();
            acc += self.matrix[(i + k, i + l)] * (fl * fk).sqrt();
        }
        acc
    }

    /// Population beyond `cutoff − margin`, a truncation indicator.
    pub fn edge_population(&self, margin: usize) -> f64 {
        let d = self.matrix.nrows();
        (d.saturating_sub(margin)..d)
            .map(|m| self.matrix[(m, m)].re)
            .sum()
    }
}

/// `⟨a†^l a^k⟩`, refusing orders too close to the truncation.
pub fn correlation_from_rho(rho: &DensityMatrix, l: usize, k: usize) -> Result<Complex64> {
    let cutoff = rho.cutoff();
    if 2 * (l + k) > cutoff {
        return Err(Error::CutoffTooSmall {
            cutoff,
            needed: 2 * (l + k),
        });
    }
    Ok(rho.moment(l, k))
}

/// Normalizes a solved vector, hermitizes it and checks the invariants.
fn finish(mut v: Vec<Complex64>, d: usize) -> Result<DensityMatrix> {
    let tr: Complex64 = (0..d).map(|m| v[m * d + m]).sum();
    if tr.norm() == 0.0 || !tr.is_finite() {
        return Err(Error::SingularSystem { cutoff: d - 1 });
    }
    for x in v.iter_mut() {
        *x /= tr;
    }
    let raw = CMat::from_vec(d, d, v);
    let raw_err = (&raw - raw.adjoint())
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    let rho = DensityMatrix {
        matrix: (&raw + raw.adjoint()) * c(0.5, 0.0),
        raw_hermiticity_error: raw_err,
    };
    rho.check_invariants()?;
    Ok(rho)
}

/// Steady state from the banded Liouvillian.
///
/// The `ρ₀₀` equation is replaced by `ρ₀₀ = 1` and the solution divided by
/// its trace; this equals the trace-constrained solution whenever the steady
/// state is unique, and keeps the band structure intact.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.dim();
    let mut band = l.band.clone();
    band.set_row(0, &[(0, c(1.0, 0.0))]);
    let mut rhs = vec![c(0.0, 0.0); d * d];
    rhs[0] = c(1.0, 0.0);
    let v = band
        .solve(rhs)
        .map_err(|_| Error::SingularSystem { cutoff: l.cutoff })?;
    finish(v, d)
}

/// Builds the Liouvillian at `cutoff` and solves for its steady state.
pub fn solve_steady_state(params: &ModelParams, cutoff: usize) -> Result<DensityMatrix> {
    steady_state(&build_liouvillian(params, cutoff)?)
}

/// Steady state from the dense bordered system, with the first row replaced
/// by the trace functional. Only practical for small cutoffs.
pub fn steady_state_dense(l: &Liouvillian) -> Result<DensityMatrix> {
    let d = l.dim();
    let mut dense = l.to_dense();
    for col in 0..d * d {
        dense[(0, col)] = c(0.0, 0.0);
    }
    for m in 0..d {
        dense[(0, m * d + m)] = c(1.0, 0.0);
    }
    let mut rhs = nalgebra::DVector::zeros(d * d);
    rhs[0] = c(1.0, 0.0);
    let v = dense
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { cutoff: l.cutoff })?;
    finish(v.iter().copied().collect(), d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSolution {
    /// Steady state at the larger of the two agreeing cutoffs.
    pub rho: DensityMatrix,
    pub cutoff: usize,
    /// Smallest cutoff whose moments were confirmed by the next doubling.
    pub converged_at: usize,
    /// Requested moments at `cutoff`.
    pub values: Vec<Complex64>,
}

/// Doubles the cutoff from [`ADAPTIVE_START`] until every requested moment
/// changes by at most `rtol·|new| + ADAPTIVE_ATOL`.
pub fn adaptive_cutoff(
    params: &ModelParams,
    moments: &[(usize, usize)],
    rtol: f64,
) -> Result<LindbladSolution> {
    if rtol.is_nan() || rtol <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "tolerance must be > 0, got {rtol}"
        )));
    }
    let eval = |rho: &DensityMatrix| -> Vec<Complex64> {
        moments.iter().map(|&(l, k)| rho.moment(l, k)).collect()
    };
    let mut cutoff = ADAPTIVE_START;
    let mut values = eval(&solve_steady_state(params, cutoff)?);
    while cutoff < ADAPTIVE_CAP {
        let next = (cutoff * 2).min(ADAPTIVE_CAP);
        let rho = solve_steady_state(params, next)?;
        let next_values = eval(&rho);
        let settled = values
            .iter()
            .zip(&next_values)
            .all(|(a, b)| (a - b).norm() <= rtol * b.norm() + ADAPTIVE_ATOL);
        if settled {
            return Ok(LindbladSolution {
                rho,
                cutoff: next,
                converged_at: cutoff,
                values: next_values,
            });
        }
        cutoff = next;
        values = next_values;
    }
    Err(Error::NonConvergence {
        what: "Lindblad cutoff",
        limit: ADAPTIVE_CAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn damped(omega: f64) -> ModelParams {
        ModelParams::coherent(0.7, 0.0, omega, 1.3)
    }

    #[test]
    fn trace_is_preserved() {
        let p = ModelParams::coherent(-1.0, 1.0, 0.3, 0.1).with_two_photon(c(0.2, 0.05), 0.1);
        let l = build_liouvillian(&p, 6).unwrap().to_dense();
        let d = 7;
        for col in 0..d * d {
            let s: Complex64 = (0..d).map(|m| l[(m * d + m, col)]).sum();
            assert!(s.norm() < 1e-12, "column {col}: {s}");
        }
    }

    #[test]
    fn bandwidth_grows_with_two_photon_terms() {
        let lin = build_liouvillian(&damped(1.0), 10).unwrap();
        assert_eq!(lin.bandwidths(), (11, 12));
        let p = damped(1.0).with_two_photon(c(0.1, 0.0), 0.2);
        let two = build_liouvillian(&p, 10).unwrap();
        assert_eq!(two.bandwidths(), (22, 24));
    }

    #[test]
    fn harmonic_oscillator_relaxes_to_coherent_state() {
        // without Kerr the steady state is |α⟩ with α = −2iΩ/(2Δ − iγ)
        let p = damped(0.9);
        let alpha = c(0.0, -2.0 * p.omega) / c(2.0 * p.delta_c, -p.gamma);
        let rho = solve_steady_state(&p, 24).unwrap();
        assert!((rho.moment(0, 1) - alpha).norm() < 1e-12);
        assert!((rho.moment(1, 1).re - alpha.norm_sqr()).abs() < 1e-12);
        rho.check_invariants().unwrap();
    }

    #[test]
    fn banded_and_dense_agree() {
        let p = ModelParams::coherent(-1.0, 1.0, 0.3, 0.1).with_two_photon(c(0.2, 0.0), 0.1);
        let l = build_liouvillian(&p, 8).unwrap();
        let a = steady_state(&l).unwrap();
        let b = steady_state_dense(&l).unwrap();
        assert!((&a.matrix - &b.matrix).norm() < 1e-12);
    }

    #[test]
    fn vacuum_without_drive() {
        let rho = solve_steady_state(&ModelParams::coherent(1.0, 0.5, 0.0, 1.0), 5).unwrap();
        assert!((rho.matrix[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(rho.moment(1, 1).norm() < 1e-14);
    }

    #[test]
    fn adaptive_cutoff_settles() {
        let p = ModelParams::coherent(5.0, -0.25, 2.0, 1.0);
        let sol = adaptive_cutoff(&p, &[(1, 1)], 1e-10).unwrap();
        assert!(sol.cutoff >= 32);
        assert_eq!(sol.cutoff, 2 * sol.converged_at);
        sol.rho.check_invariants().unwrap();

        let dark = adaptive_cutoff(&p.with_omega(0.0), &[(1, 1)], 1e-10).unwrap();
        assert_eq!(dark.converged_at, ADAPTIVE_START);
        assert_eq!(dark.values[0], c(0.0, 0.0));
    }

    #[test]
    fn low_cutoff_moments_are_refused() {
        let rho = solve_steady_state(&damped(0.5), 4).unwrap();
        assert!(correlation_from_rho(&rho, 1, 1).is_ok());
        assert!(matches!(
            correlation_from_rho(&rho, 2, 1),
            Err(Error::CutoffTooSmall { .. })
        ));
    }
}
