//! Truncated matrices of the doubled-space generator `𝓗`.
//!
//! Two bases are used. The branch basis `|i⟩₊|j⟩₋` carries the forward and
//! backward contour modes, where
//!
//! ```text
//! 𝓗 = H₊ − H₋ + iγ a₊a₋† − iγ/2 (n₊ + n₋) + iκ a₊²a₋†² − iκ/2 (a₊†²a₊² + a₋†²a₋²)
//! ```
//!
//! The classical/quantum basis `|c⟩_cl|q⟩_q` uses `a_cl = (a₊ + a₋)/√2` and
//! `a_q = (a₊ − a₋)/√2`, where `𝓗 = 𝓗↑ + 𝓗↓`: `𝓗↑` raises the quantum
//! occupation by one and `𝓗↓` never raises it and annihilates the quantum
//! vacuum. The steady state `|0⟩_q Σ β_m |m⟩_cl` is a null vector of `𝓗`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_twophoton::{wavefunction_twophoton, wavefunction_via_three_term};
use crate::model::ModelParams;
use crate::wavefunction::SteadyWavefunction;

type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    /// `|c⟩_cl |q⟩_q` with `c ≤ cl`, `q ≤ q`; index `c·(q+1) + q`.
    ClassicalQuantum { cl: usize, q: usize },
    /// `|i⟩₊ |j⟩₋` with `i, j ≤ cutoff`; index `i·(cutoff+1) + j`.
    PlusMinus { cutoff: usize },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::ClassicalQuantum { cl, q } => (cl + 1) * (q + 1),
            Basis::PlusMinus { cutoff } => (cutoff + 1) * (cutoff + 1),
        }
    }
}

/// A square matrix tagged with the basis it acts in.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub basis: Basis,
    pub matrix: CMat,
}

impl OperatorMatrix {
    fn check(&self, other: &OperatorMatrix) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(format!(
                "{:?} vs {:?}",
                self.basis, other.basis
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(other)?;
        Ok(OperatorMatrix {
            basis: self.basis,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn try_mul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(other)?;
        Ok(OperatorMatrix {
            basis: self.basis,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if v.len() != self.basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "vector of length {} in a {}-dimensional basis",
                v.len(),
                self.basis.dim()
            )));
        }
        Ok(&self.matrix * v)
    }
}

/// Truncated annihilation operator on `|0⟩ ..= |cutoff⟩`.
pub fn annihilation(cutoff: usize) -> CMat {
    let d = cutoff + 1;
    let mut a = CMat::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = c((n as f64).sqrt(), 0.0);
    }
    a
}

/// A pair of commuting mode operators on a two-mode product space.
#[derive(Debug, Clone)]
pub struct ModePair {
    pub first: CMat,
    pub second: CMat,
}

/// `a ⊗ 1` and `1 ⊗ b` with the first mode's index most significant.
pub fn build_mode_operators(first_cutoff: usize, second_cutoff: usize) -> ModePair {
    let a = annihilation(first_cutoff);
    let b = annihilation(second_cutoff);
    ModePair {
        first: a.kronecker(&CMat::identity(second_cutoff + 1, second_cutoff + 1)),
        second: CMat::identity(first_cutoff + 1, first_cutoff + 1).kronecker(&b),
    }
}

fn dag(m: &CMat) -> CMat {
    m.adjoint()
}

/// Rising and lowering parts of `𝓗` in the classical/quantum basis.
#[derive(Debug, Clone)]
pub struct GeneratorParts {
    pub up: OperatorMatrix,
    pub down: OperatorMatrix,
}

impl GeneratorParts {
    pub fn total(&self) -> OperatorMatrix {
        self.up.try_add(&self.down).expect("parts share a basis")
    }
}

/// `𝓗↑` and `𝓗↓` truncated to `c ≤ cl_cutoff`, `q ≤ q_cutoff`.
pub fn generator_parts_clq(
    params: &ModelParams,
    cl_cutoff: usize,
    q_cutoff: usize,
) -> Result<GeneratorParts> {
    params.validate()?;
    let ModePair {
        first: a,
        second: b,
    } = build_mode_operators(cl_cutoff, q_cutoff);
    let (ad, bd) = (dag(&a), dag(&b));
    let dim = a.nrows();
    let one = CMat::identity(dim, dim);
    let n_cl = &ad * &a;
    let n_q = &bd * &b;
    let i = Complex64::i();
    let (dc, chi, om, g, k, lam) = (
        params.delta_c,
        params.chi,
        params.omega,
        params.gamma,
        params.kappa,
        params.lambda_2ph,
    );
    let sqrt2 = std::f64::consts::SQRT_2;

    let hop_up = &bd * &a; // a_q† a_cl
    let hop_down = &ad * &b; // a_cl† a_q
    let kerr_sum = &n_cl + &n_q - &one;
    let loss_up = &n_cl - &n_q + &one;
    let loss_down = &n_cl - &n_q - &one;

    let up = &bd * (i * sqrt2 * om)
        + &hop_up * (c(2.0 * dc, -g) / 2.0)
        + &kerr_sum * &hop_up * c(chi, 0.0)
        - &loss_up * &hop_up * (i * k / 2.0)
        + &bd * &ad * lam;
    let down = &b * (-i * sqrt2 * om)
        + &hop_down * (c(2.0 * dc, g) / 2.0)
        + &kerr_sum * &hop_down * c(chi, 0.0)
        + &loss_down * &hop_down * (i * k / 2.0)
        - (&one * (i * g) + &n_cl * (2.0 * i * k)) * &n_q
        + &a * &b * lam.conj();

    let basis = Basis::ClassicalQuantum {
        cl: cl_cutoff,
        q: q_cutoff,
    };
    Ok(GeneratorParts {
        up: OperatorMatrix { basis, matrix: up },
        down: OperatorMatrix {
            basis,
            matrix: down,
        },
    })
}

/// `𝓗 = 𝓗↑ + 𝓗↓` in the classical/quantum basis.
pub fn build_generalized_hamiltonian_clq(
    params: &ModelParams,
    cl_cutoff: usize,
    q_cutoff: usize,
) -> Result<OperatorMatrix> {
    Ok(generator_parts_clq(params, cl_cutoff, q_cutoff)?.total())
}

/// `𝓗` in the branch basis, each branch truncated at `cutoff`.
pub fn build_generalized_hamiltonian_pm(
    params: &ModelParams,
    cutoff: usize,
) -> Result<OperatorMatrix> {
    params.validate()?;
    let ModePair {
        first: ap,
        second: am,
    } = build_mode_operators(cutoff, cutoff);
    let i = Complex64::i();
    let hamiltonian = |a: &CMat| -> CMat {
        let ad = dag(a);
        let ad2 = &ad * &ad;
        let a2 = a * a;
        &ad * a * c(params.delta_c, 0.0)
            + &ad2 * &a2 * c(params.chi, 0.0)
            + (&ad - a) * (i * params.omega)
            + (&ad2 * params.lambda_2ph + &a2 * params.lambda_2ph.conj()) * c(0.5, 0.0)
    };
    let (apd, amd) = (dag(&ap), dag(&am));
    let ap2 = &ap * &ap;
    let amd2 = &amd * &amd;
    let pairs = &apd * &apd * &ap2 + &amd2 * &am * &am;
    let matrix = hamiltonian(&ap) - hamiltonian(&am) + &ap * &amd * (i * params.gamma)
        - (&apd * &ap + &amd * &am) * (i * params.gamma / 2.0)
        + &ap2 * &amd2 * (i * params.kappa)
        - pairs * (i * params.kappa / 2.0);
    Ok(OperatorMatrix {
        basis: Basis::PlusMinus { cutoff },
        matrix,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|j| j as f64).product()
}

/// Columns are the classical/quantum states `|c⟩_cl|q⟩_q` written in the
/// branch basis with per-branch cutoff `cl_cutoff + q_cutoff`, where the
/// embedding is exact.
pub fn mixing_isometry(cl_cutoff: usize, q_cutoff: usize) -> CMat {
    let p = cl_cutoff + q_cutoff;
    let bd = p + 1;
    let qd = q_cutoff + 1;
    let mut u = CMat::zeros(bd * bd, (cl_cutoff + 1) * qd);
    for cn in 0..=cl_cutoff {
        for qn in 0..=q_cutoff {
            let total = cn + qn;
            let norm = (2f64.powi(total as i32) * factorial(cn) * factorial(qn)).sqrt();
            for ip in 0..=total {
                let jm = total - ip;
                let mut s = 0.0;
                // a₊† powers: r from the classical factor, t from the quantum one
                for r in ip.saturating_sub(qn)..=ip.min(cn) {
                    let t = ip - r;
                    let sign = if (qn - t) % 2 == 0 { 1.0 } else { -1.0 };
                    s += binomial(cn, r) * binomial(qn, t) * sign;
                }
                let v = s * (factorial(ip) * factorial(jm)).sqrt() / norm;
                u[(ip * bd + jm, cn * qd + qn)] = c(v, 0.0);
            }
        }
    }
    u
}

/// Largest entry of `U†𝓗_pm U − 𝓗_clq` over columns with `c ≤ cl − 2`,
/// `q ≤ q − 2`, where neither truncation reaches.
pub fn basis_equivalence_error(
    params: &ModelParams,
    cl_cutoff: usize,
    q_cutoff: usize,
) -> Result<f64> {
    if cl_cutoff < 2 || q_cutoff < 2 {
        return Err(Error::CutoffTooSmall {
            cutoff: cl_cutoff.min(q_cutoff),
            needed: 2,
        });
    }
    let clq = build_generalized_hamiltonian_clq(params, cl_cutoff, q_cutoff)?;
    let pm = build_generalized_hamiltonian_pm(params, cl_cutoff + q_cutoff)?;
    let u = mixing_isometry(cl_cutoff, q_cutoff);
    let mapped = u.adjoint() * &pm.matrix * &u;
    let qd = q_cutoff + 1;
    let mut worst = 0.0f64;
    for col in 0..mapped.ncols() {
        if col / qd + 2 > cl_cutoff || col % qd + 2 > q_cutoff {
            continue;
        }
        for r in 0..mapped.nrows() {
            worst = worst.max((mapped[(r, col)] - clq.matrix[(r, col)]).norm());
        }
    }
    Ok(worst)
}

/// Steady state `|0⟩_q Σ β_m |m⟩_cl` as a vector in the classical/quantum basis.
pub fn steady_vector(
    wf: &SteadyWavefunction,
    cl_cutoff: usize,
    q_cutoff: usize,
) -> DVector<Complex64> {
    let qd = q_cutoff + 1;
    let mut v = DVector::zeros((cl_cutoff + 1) * qd);
    for (m, b) in wf.amplitudes.iter().enumerate().take(cl_cutoff + 1) {
        v[m * qd] = *b;
    }
    v
}

/// Closed-form steady state where one exists, the three-term recursion otherwise.
pub fn steady_wavefunction(params: &ModelParams) -> Result<SteadyWavefunction> {
    match wavefunction_twophoton(params) {
        Err(Error::UnsupportedModel(_)) => wavefunction_via_three_term(params),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `‖𝓗Ψ₀‖` over classical levels `≤ interior_cut`.
    pub residual_norm: f64,
    /// `‖𝓗Ψ₀‖` over the remaining levels, where truncation shows up.
    pub edge_norm: f64,
    pub interior_cut: usize,
    pub cutoffs: (usize, usize),
    /// Norm of the embedded, truncated `Ψ₀`.
    pub state_norm: f64,
}

/// How well `h` annihilates `|0⟩_q Σ β_m |m⟩_cl`.
///
/// `interior_cut` may be at most `cl − 3`, since two-photon terms couple
/// classical levels two apart.
pub fn steady_residual(
    h: &OperatorMatrix,
    psi: &SteadyWavefunction,
    interior_cut: usize,
) -> Result<ResidualReport> {
    let Basis::ClassicalQuantum { cl, q } = h.basis else {
        return Err(Error::BasisMismatch(
            "the steady state is embedded in the classical/quantum basis".into(),
        ));
    };
    if interior_cut + 3 > cl {
        return Err(Error::CutoffTooSmall {
            cutoff: cl,
            needed: interior_cut + 3,
        });
    }
    let v = steady_vector(psi, cl, q);
    let out = h.apply(&v)?;
    let qd = q + 1;
    let (mut inner, mut edge) = (0.0, 0.0);
    for (idx, x) in out.iter().enumerate() {
        if idx / qd <= interior_cut {
            inner += x.norm_sqr();
        } else {
            edge += x.norm_sqr();
        }
    }
    Ok(ResidualReport {
        residual_norm: inner.sqrt(),
        edge_norm: edge.sqrt(),
        interior_cut,
        cutoffs: (cl, q),
        state_norm: v.norm(),
    })
}

/// Builds the generator and the exact steady state, then reports the residual.
pub fn residual_for_params(
    params: &ModelParams,
    cl_cutoff: usize,
    q_cutoff: usize,
    interior_cut: usize,
) -> Result<ResidualReport> {
    let h = build_generalized_hamiltonian_clq(params, cl_cutoff, q_cutoff)?;
    steady_residual(&h, &steady_wavefunction(params)?, interior_cut)
}

/// Branch-basis coefficients `C_ij = ⟨i₊ j₋|Ψ₀⟩` over all retained amplitudes.
pub fn branch_coefficients(wf: &SteadyWavefunction) -> CMat {
    let top = wf.truncation;
    let mut coef = CMat::zeros(top + 1, top + 1);
    for (m, b) in wf.amplitudes.iter().enumerate() {
        let scale = 2f64.powi(-(m as i32));
        for i in 0..=m {
            let j = m - i;
            if i <= top && j <= top {
                coef[(i, j)] += *b * (binomial(m, i) * scale).sqrt();
            }
        }
    }
    coef
}

/// Comparison of the steady state against a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurificationCheck {
    /// Largest entry of `|C C†/Tr(C C†) − ρ|`.
    pub purified_max_err: f64,
    /// Largest entry of `|C/Tr C − ρ|` (reading `C` itself as a density matrix).
    pub direct_max_err: f64,
    pub compared_dim: usize,
}

/// Reads the steady state as a purification of `rho` and reports both readings.
pub fn purification_check(params: &ModelParams, rho: &CMat) -> Result<PurificationCheck> {
    let wf = steady_wavefunction(params)?;
    let coef = branch_coefficients(&wf);
    let cc = &coef * coef.adjoint();
    let cc = &cc / cc.trace();
    let direct = &coef / coef.trace();
    let d = rho.nrows().min(coef.nrows());
    let max_err = |m: &CMat| -> f64 {
        let mut worst = 0.0f64;
        for r in 0..d {
            for s in 0..d {
                worst = worst.max((m[(r, s)] - rho[(r, s)]).norm());
            }
        }
        worst
    };
    Ok(PurificationCheck {
        purified_max_err: max_err(&cc),
        direct_max_err: max_err(&direct),
        compared_dim: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_drive(omega: f64) -> ModelParams {
        ModelParams::coherent(-1.0, 1.0, omega, 0.1).with_two_photon(c(0.2, 0.05), 0.1)
    }

    #[test]
    fn commutators_hold_away_from_the_edge() {
        let ModePair {
            first: a,
            second: b,
        } = build_mode_operators(4, 3);
        let comm = &a * dag(&a) - dag(&a) * &a;
        let d = 4; // |c=1, q=0> lies inside the truncation
        assert!((comm[(d, d)] - c(1.0, 0.0)).norm() < 1e-15);
        let cross = &a * &b - &b * &a;
        assert!(cross.norm() < 1e-15);
    }

    #[test]
    fn mixing_columns_are_orthonormal() {
        let u = mixing_isometry(4, 3);
        let g = u.adjoint() * &u;
        assert!((g - CMat::identity(20, 20)).norm() < 1e-13);
    }

    #[test]
    fn mixing_maps_the_mode_operators() {
        let (mc, mq) = (4, 3);
        let p = mc + mq;
        let u = mixing_isometry(mc, mq);
        let branch = build_mode_operators(p, p);
        let cq = build_mode_operators(mc, mq);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let acl = (&branch.first + &branch.second) * c(s, 0.0);
        let aq = (&branch.first - &branch.second) * c(s, 0.0);
        let mapped_cl = u.adjoint() * &acl * &u;
        let mapped_q = u.adjoint() * &aq * &u;
        assert!((mapped_cl - &cq.first).norm() < 1e-12);
        assert!((mapped_q - &cq.second).norm() < 1e-12);
    }

    #[test]
    fn up_part_raises_quantum_number_by_one() {
        let (mc, mq) = (5, 3);
        let parts = generator_parts_clq(&pair_drive(0.2), mc, mq).unwrap();
        let qd = mq + 1;
        for (r, col, v) in triplets(&parts.up.matrix) {
            assert_eq!(r % qd, col % qd + 1, "up entry {v} at ({r},{col})");
        }
        for (r, col, _) in triplets(&parts.down.matrix) {
            let (qr, qc) = (r % qd, col % qd);
            assert!(qr == qc || qr + 1 == qc);
            assert!(qc > 0, "down part must annihilate the quantum vacuum");
        }
    }

    fn triplets(m: &CMat) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for r in 0..m.nrows() {
            for s in 0..m.ncols() {
                if m[(r, s)].norm() > 1e-14 {
                    out.push((r, s, m[(r, s)]));
                }
            }
        }
        out
    }

    #[test]
    fn basis_mismatch_is_an_error() {
        let a = generator_parts_clq(&pair_drive(0.1), 3, 2).unwrap().up;
        let b = build_generalized_hamiltonian_pm(&pair_drive(0.1), 3).unwrap();
        assert!(matches!(a.try_add(&b), Err(Error::BasisMismatch(_))));
        assert!(matches!(a.try_mul(&b), Err(Error::BasisMismatch(_))));
        let v = DVector::zeros(5);
        assert!(matches!(a.apply(&v), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn branch_coefficients_of_classical_one() {
        // |1>_cl = (|1,0> + |0,1>)/√2
        let wf = SteadyWavefunction {
            amplitudes: vec![c(0.0, 0.0), c(1.0, 0.0)],
            truncation: 1,
            tail_mass: 0.0,
            norm_constant: 1.0,
            converged: true,
        };
        let coef = branch_coefficients(&wf);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((coef[(1, 0)] - c(s, 0.0)).norm() < 1e-15);
        assert!((coef[(0, 1)] - c(s, 0.0)).norm() < 1e-15);
        assert_eq!(coef[(0, 0)], c(0.0, 0.0));
    }
}
