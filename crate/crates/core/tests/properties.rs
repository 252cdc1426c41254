use std::f64::consts::PI;

use daqs::evolution::{daqs_operator_error, daqs_step_unitary, trotter_error_bound};
use daqs::ion_chain::CouplingMatrix;
use daqs::spin_algebra::{
    global_rotation, max_abs, pauli_string_action, pauli_string_matrix, Axis, SpinState,
};
use daqs::spin_models::{build_model, ModelKind};
use daqs::C64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn couplings(n: usize) -> impl Strategy<Value = CouplingMatrix> {
    prop::collection::vec(0.1f64..2.0, n * (n - 1) / 2).prop_map(move |v| {
        let mut m = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                m[(i, j)] = v[k];
                m[(j, i)] = v[k];
                k += 1;
            }
        }
        CouplingMatrix::new(m).unwrap()
    })
}

fn state(n: usize) -> impl Strategy<Value = SpinState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n).prop_filter_map("zero", move |v| {
        let amps = DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b)));
        SpinState::normalized(amps, n).ok()
    })
}

fn axis() -> impl Strategy<Value = Axis> {
    prop_oneof![Just(Axis::X), Just(Axis::Y), Just(Axis::Z)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotations_compose_additively(
        a in -PI..PI,
        b in -PI..PI,
        ax in prop_oneof![Just(Axis::X), Just(Axis::Y)],
        n in 1usize..4,
    ) {
        let ra = global_rotation(ax, a, n).unwrap();
        let rb = global_rotation(ax, b, n).unwrap();
        let rab = global_rotation(ax, a + b, n).unwrap();
        let d = max_abs(&(ra.compose(&rb).unwrap().into_matrix() - rab.into_matrix()));
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn xx_rotates_into_zz(j in couplings(4)) {
        let r = global_rotation(Axis::Y, PI / 4.0, 4).unwrap();
        let xx = build_model(ModelKind::Xx, &j).unwrap();
        let zz = build_model(ModelKind::Zz, &j).unwrap();
        let d = max_abs(&(xx.conjugated_by(&r).unwrap().into_matrix() - zz.into_matrix()));
        prop_assert!(d < 1e-10);
    }

    #[test]
    fn daqs_step_preserves_norm(j in couplings(3), psi in state(3), t in 0.0f64..3.0, l in 1usize..6) {
        let u = daqs_step_unitary(&j, t, l).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-10);
        prop_assert!((u.apply(&psi).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bound_shrinks_with_steps(j in couplings(3), t in 0.01f64..2.0, l in 1usize..20) {
        let a = trotter_error_bound(&j, t, l).unwrap();
        let b = trotter_error_bound(&j, t, l + 1).unwrap();
        prop_assert!(b <= a);
        prop_assert!(trotter_error_bound(&j, t * 1.1, l).unwrap() >= a);
    }

    #[test]
    fn operator_error_stays_below_bound(j in couplings(3), t in 0.01f64..1.5, l in 1usize..10) {
        let bound = trotter_error_bound(&j, t, l).unwrap();
        prop_assert!(daqs_operator_error(&j, t, l).unwrap() <= bound + 1e-12);
    }

    #[test]
    fn pauli_action_matches_matrix(
        ops in prop::collection::vec((0usize..3, axis()), 1..4),
        b in 0usize..8,
    ) {
        let m = pauli_string_matrix(&ops, 3);
        let (row, phase) = pauli_string_action(&ops, b, 3);
        prop_assert!((m[(row, b)] - phase).norm() < 1e-14);
        prop_assert!((m.column(b).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn power_law_fit_recovers_exponent(alpha in 0.0f64..3.0, j0 in 0.1f64..10.0, n in 3usize..8) {
        let fit = CouplingMatrix::power_law(n, j0, alpha).unwrap().fit().unwrap();
        prop_assert!((fit.alpha - alpha).abs() < 1e-9);
        prop_assert!((fit.j - j0).abs() < 1e-9 * j0);
    }
}
