mod common;

use common::{f, read_csv};
use kerr_keldysh::keldysh_ops::{
    basis_equivalence_error, build_generalized_hamiltonian_clq, build_generalized_hamiltonian_pm,
    residual_for_params, steady_residual, steady_wavefunction,
};
use kerr_keldysh::{Error, ModelParams};
use nalgebra::DVector;
use num_complex::Complex64;

fn bistable() -> ModelParams {
    ModelParams::coherent(5.0, -0.25, 4.0, 1.0)
}

fn pair_drive() -> ModelParams {
    ModelParams::coherent(-1.0, 1.0, 0.1, 0.1).with_two_photon(Complex64::new(0.2, 0.05), 0.1)
}

#[test]
fn small_cutoff_matrix_matches_golden_entries() {
    let (_, rows) = read_csv("generator_clq_golden.csv");
    for (case, params) in [("linear", bistable()), ("twophoton", pair_drive())] {
        let h = build_generalized_hamiltonian_clq(&params, 3, 3)
            .unwrap()
            .matrix;
        let mut want = nalgebra::DMatrix::<Complex64>::zeros(16, 16);
        for r in rows.iter().filter(|r| r[0] == case) {
            let (i, j): (usize, usize) = (r[1].parse().unwrap(), r[2].parse().unwrap());
            want[(i, j)] = Complex64::new(f(&r[3]), f(&r[4]));
        }
        for i in 0..16 {
            for j in 0..16 {
                let gap = (h[(i, j)] - want[(i, j)]).norm();
                assert!(
                    gap < 1e-14,
                    "{case} ({i},{j}): {} vs {}",
                    h[(i, j)],
                    want[(i, j)]
                );
            }
        }
    }
}

#[test]
fn branch_and_classical_quantum_forms_agree() {
    for params in [bistable(), pair_drive()] {
        for (cl, q) in [(12, 4), (6, 3), (4, 2)] {
            let err = basis_equivalence_error(&params, cl, q).unwrap();
            assert!(err < 1e-10, "({cl},{q}): {err:e}");
        }
    }
}

#[test]
fn generator_is_not_hermitian_with_loss() {
    let h = build_generalized_hamiltonian_clq(&bistable(), 6, 3)
        .unwrap()
        .matrix;
    assert!((&h - h.adjoint()).norm() > 0.1);
    let pm = build_generalized_hamiltonian_pm(&bistable(), 5)
        .unwrap()
        .matrix;
    assert!((&pm - pm.adjoint()).norm() > 0.1);
}

#[test]
fn pure_loss_keeps_the_vacuum() {
    let p = ModelParams::coherent(0.0, 0.0, 0.0, 0.8);
    let h = build_generalized_hamiltonian_clq(&p, 5, 3).unwrap();
    let mut vac = DVector::zeros(24);
    vac[0] = Complex64::new(1.0, 0.0);
    assert!(h.apply(&vac).unwrap().norm() == 0.0);
}

#[test]
fn exact_state_is_annihilated_in_the_interior() {
    for params in [bistable(), pair_drive()] {
        let r = residual_for_params(&params, 60, 4, 50).unwrap();
        assert!(r.residual_norm / r.state_norm <= 1e-8, "{r:?}");
        assert_eq!(r.cutoffs, (60, 4));
    }
}

#[test]
fn perturbed_state_is_detected() {
    let params = bistable();
    let h = build_generalized_hamiltonian_clq(&params, 60, 4).unwrap();
    let mut wf = steady_wavefunction(&params).unwrap();
    wf.amplitudes[1] += 0.01;
    let r = steady_residual(&h, &wf, 50).unwrap();
    assert!(r.residual_norm > 1e-3, "{r:?}");
}

#[test]
fn residual_does_not_grow_with_cutoff() {
    let mut last = f64::INFINITY;
    for cl in [20, 40, 60, 80] {
        let r = residual_for_params(&bistable(), cl, 4, 17).unwrap();
        assert!(
            r.residual_norm <= last * 1.1,
            "cutoff {cl}: {} after {last}",
            r.residual_norm
        );
        last = r.residual_norm;
    }
}

#[test]
fn residual_arguments_are_checked() {
    assert!(matches!(
        residual_for_params(&bistable(), 20, 4, 18),
        Err(Error::CutoffTooSmall { .. })
    ));
    let pm = build_generalized_hamiltonian_pm(&bistable(), 8).unwrap();
    let wf = steady_wavefunction(&bistable()).unwrap();
    assert!(matches!(
        steady_residual(&pm, &wf, 2),
        Err(Error::BasisMismatch(_))
    ));
}
