use g2forms::exterior::{KForm, Orientation};
use g2forms::sl3c::{self, analyze_definite, hitchin_lambda};
use g2forms::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

/// Matrices `I + 0.3 R` with `R` entries in [-1, 1], conditioned to det > 0.
fn near_identity(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n)
        .prop_map(move |c| DMatrix::identity(n, n) + DMatrix::from_vec(n, n, c) * 0.3)
        .prop_filter("orientation preserving", |a| a.determinant() > 0.1)
}

#[test]
fn standard_form_has_lambda_minus_four() {
    assert!((hitchin_lambda(&sl3c::rho0()).unwrap() + 4.0).abs() < 1e-12);
    let data = analyze_definite(&sl3c::rho0(), Orientation::Positive).unwrap();
    assert!((&data.complex_structure - sl3c::standard_complex_structure()).amax() < 1e-12);
    assert!(data.rho_tilde.distance(&sl3c::rho0_tilde()) < 1e-12);
    assert!((data.vol_coefficient() - 1.0).abs() < 1e-12);
}

#[test]
fn decomposable_form_is_not_definite() {
    let rho = KForm::basis(6, &[0, 1, 2]);
    assert!(matches!(analyze_definite(&rho, Orientation::Positive), Err(Error::Degenerate { .. })));
    let split = KForm::basis(6, &[0, 1, 2]) + KForm::basis(6, &[3, 4, 5]);
    assert!(matches!(analyze_definite(&split, Orientation::Positive), Err(Error::NotDefinite { .. })));
}

#[test]
fn wrong_shape_is_rejected() {
    assert!(analyze_definite(&KForm::basis(7, &[0, 1, 2]), Orientation::Positive).is_err());
    assert!(analyze_definite(&KForm::basis(6, &[0, 1]), Orientation::Positive).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_is_equivariant(a in near_identity(6)) {
        let rho = sl3c::rho0().pullback(&a).unwrap();
        let data = analyze_definite(&rho, Orientation::Positive).unwrap();
        let det = a.determinant();
        prop_assert!((data.lambda + 4.0 * det * det).abs() < 1e-9 * det * det);
        let a_inv = a.clone().try_inverse().unwrap();
        let expected_i = &a_inv * sl3c::standard_complex_structure() * &a;
        prop_assert!((&data.complex_structure - expected_i).amax() < 1e-9);
        prop_assert!(data.rho_tilde.distance(&sl3c::rho0_tilde().pullback(&a).unwrap()) < 1e-9);
        prop_assert!((data.vol_coefficient() - det).abs() < 1e-9);
    }

    #[test]
    fn complex_structure_squares_to_minus_one(a in near_identity(6)) {
        let rho = sl3c::rho0().pullback(&a).unwrap();
        let data = analyze_definite(&rho, Orientation::Positive).unwrap();
        let i2 = &data.complex_structure * &data.complex_structure;
        prop_assert!((i2 + DMatrix::identity(6, 6)).amax() < 1e-9);
        // rho~ pulled back by I is -rho.
        let back = data.rho_tilde.pullback(&data.complex_structure).unwrap();
        prop_assert!(back.distance(&rho.scale(-1.0)) < 1e-9);
    }

    #[test]
    fn lambda_is_quartic(a in near_identity(6), s in 0.2..3.0f64) {
        let rho = sl3c::rho0().pullback(&a).unwrap();
        let l1 = hitchin_lambda(&rho).unwrap();
        let l2 = hitchin_lambda(&rho.scale(s)).unwrap();
        prop_assert!((l2 - s.powi(4) * l1).abs() < 1e-9 * l2.abs());
    }
}
