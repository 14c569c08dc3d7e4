use std::f64::consts::PI;

use holonome::fock::{basis_state, max_abs_diff, partial_trace, CompositeSpace, ModeId, QState, C64};
use holonome::holonomy::{compose, gate_unitary, holonomy_connection, holonomy_exponential, GateSpec};
use holonome::model::{
    build_full_hamiltonian, couplings_from_angles, eigensystem, project_single_excitation, subspace_hamiltonian,
    BlochAngles,
};
use nalgebra::{DMatrix, Matrix2, Vector3};
use proptest::prelude::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `cos θ σz + sin θ (cos φ σx + sin φ σy)`
fn pauli_oracle(theta: f64, phi: f64) -> Matrix2<C64> {
    let sx = Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0));
    let sy = Matrix2::new(c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0));
    let sz = Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0));
    sz * c(theta.cos()) + (sx * c(phi.cos()) + sy * c(phi.sin())) * c(theta.sin())
}

fn max2(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn angles() -> impl Strategy<Value = (f64, f64)> {
    (0.0..=PI, 0.0..2.0 * PI)
}

fn random_density(space: &CompositeSpace, seed: &[f64]) -> QState {
    let d = space.dim();
    let a = DMatrix::from_fn(d, d, |i, j| C64::new(seed[(i * d + j) % seed.len()], seed[(i + 2 * j + 1) % seed.len()]));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    QState::density(space.clone(), rho / tr).unwrap()
}

proptest! {
    #[test]
    fn gate_unitary_matches_pauli_form((theta, phi) in angles()) {
        let u = gate_unitary(&GateSpec::from_angles(theta, phi).unwrap());
        prop_assert!(max2(&(u - pauli_oracle(theta, phi))) < 1e-12);
        prop_assert!(max2(&(u - u.adjoint())) < 1e-12);
        prop_assert!(max2(&(u * u - Matrix2::identity())) < 1e-12);
        prop_assert!((u.determinant() + c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn holonomy_exponential_is_reflection((theta, phi) in angles()) {
        // M = −|b⟩⟨b| is minus a projector, so exp(iπM) = I − 2|b⟩⟨b|
        let spec = GateSpec::from_angles(theta, phi).unwrap();
        let e = holonomy_exponential(&holonomy_connection(&spec)).unwrap();
        let (s, co) = ((theta / 2.0).sin(), (theta / 2.0).cos());
        let b = nalgebra::Vector2::new(C64::from_polar(s, -phi), c(-co));
        let oracle = Matrix2::identity() - b * b.adjoint() * c(2.0);
        prop_assert!(max2(&(e - oracle)) < 1e-10);
        prop_assert!(max2(&(e - gate_unitary(&spec))) < 1e-10);
    }

    #[test]
    fn dark_state_is_zero_mode((theta, phi) in angles(), g0 in 0.1f64..50.0) {
        let a = BlochAngles::new(theta, phi).unwrap();
        let h = subspace_hamiltonian(&a, g0).unwrap();
        let es = eigensystem(&a, g0).unwrap();
        let dark = Vector3::new(c((theta / 2.0).cos()), c(0.0), C64::from_polar((theta / 2.0).sin(), phi));
        prop_assert!((h * dark).norm() < 1e-12 * g0);
        prop_assert!((es.dark - dark).norm() < 1e-12);
        for (e, v) in es.energies.iter().zip(es.vectors.iter()) {
            prop_assert!((h * v - v * c(*e)).norm() < 1e-12 * g0);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        let mut spectrum = es.energies;
        spectrum.sort_by(f64::total_cmp);
        prop_assert!((spectrum[0] + g0).abs() < 1e-12 && spectrum[1].abs() < 1e-12 && (spectrum[2] - g0).abs() < 1e-12);
    }

    #[test]
    fn projection_of_full_hamiltonian((theta, phi) in angles(), g0 in 0.1f64..50.0, cav in 2usize..4, mech in 2usize..5) {
        let a = BlochAngles::new(theta, phi).unwrap();
        let space = CompositeSpace::optomechanical(cav, mech).unwrap();
        let h = build_full_hamiltonian(&couplings_from_angles(&a, g0).unwrap(), &space).unwrap();
        prop_assert!(h.is_hermitian(1e-12));
        let diff = project_single_excitation(&h).unwrap() - subspace_hamiltonian(&a, g0).unwrap();
        prop_assert!(diff.iter().all(|z| z.norm() < 1e-12 * g0));
    }

    #[test]
    fn composition_is_associative(a in angles(), b in angles(), d in angles()) {
        let g = |(t, p): (f64, f64)| GateSpec::from_angles(t, p).unwrap();
        let (ga, gb, gd) = (g(a), g(b), g(d));
        let whole = compose(&[ga.clone(), gb.clone(), gd.clone()]).unwrap();
        let split = compose(&[gb, gd]).unwrap() * compose(&[ga]).unwrap();
        prop_assert!(max2(&(whole - split)) < 1e-12);
    }

    #[test]
    fn flat_index_round_trip(dims in proptest::collection::vec(2usize..5, 1..4), pick in any::<u64>()) {
        let modes = dims.iter().enumerate().map(|(i, &d)| (ModeId::new(i, format!("m{i}")), d)).collect();
        let space = CompositeSpace::new(modes).unwrap();
        let flat = (pick % space.dim() as u64) as usize;
        let occ = space.occupations(flat);
        prop_assert_eq!(space.flat_index(&occ).unwrap(), flat);
    }

    #[test]
    fn partial_trace_preserves_trace(seed in proptest::collection::vec(-1.0f64..1.0, 7..20), keep_mech in any::<bool>()) {
        let space = CompositeSpace::optomechanical(2, 3).unwrap();
        let rho = random_density(&space, &seed);
        let keep = if keep_mech { vec![ModeId::mechanical()] } else { vec![ModeId::cavity1(), ModeId::cavity2()] };
        let reduced = partial_trace(&rho, &keep).unwrap();
        prop_assert!((reduced.trace() - c(1.0)).norm() < 1e-12);
        let m = reduced.density_matrix();
        prop_assert!(max_abs_diff(&m, &m.adjoint()) < 1e-12);
    }
}

#[test]
fn basis_state_partial_trace_is_product_factor() {
    let space = CompositeSpace::optomechanical(2, 4).unwrap();
    let reduced = partial_trace(&basis_state(&space, &[1, 2, 0]).unwrap(), &[ModeId::mechanical()]).unwrap();
    let m = reduced.density_matrix();
    assert_eq!(m[(2, 2)], c(1.0));
    assert!((m.trace() - c(1.0)).norm() < 1e-15);
}
