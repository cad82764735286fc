use g2forms::exterior::{KForm, Orientation};
use g2forms::g2::{self, analyze_positive, split};
use g2forms::{sl3c, Error};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn near_identity(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, n * n)
        .prop_map(move |c| DMatrix::identity(n, n) + DMatrix::from_vec(n, n, c) * 0.3)
        .prop_filter("orientation preserving", |a| a.determinant() > 0.1)
}

#[test]
fn standard_form_induces_euclidean_metric() {
    let data = analyze_positive(&g2::phi0(), Orientation::Positive).unwrap();
    assert!((&data.metric - DMatrix::identity(7, 7)).amax() < 1e-12);
    assert!((data.norm_squared() - 7.0).abs() < 1e-12);
    let top = g2::phi0().wedge(&data.star_phi).unwrap().top();
    assert!((top - 7.0).abs() < 1e-12);
}

#[test]
fn standard_split_recovers_six_dimensional_pair() {
    let mut nu = [0.0; 7];
    nu[g2::T] = 1.0;
    let v = DMatrix::from_fn(7, 6, |r, c| if r == c { 1.0 } else { 0.0 });
    let s = split(&g2::phi0(), &nu, &v, Orientation::Positive).unwrap();
    assert!(s.omega.distance(&sl3c::omega0()) < 1e-12);
    assert!(s.rho.distance(&sl3c::rho0()) < 1e-12);
    assert!(s.orthogonality_defect < 1e-12);
    assert!(s.normalization_defect < 1e-12);
    assert!(s.taming_margin > 0.0);
}

#[test]
fn non_positive_forms_are_rejected() {
    assert!(matches!(analyze_positive(&KForm::basis(7, &[0, 1, 2]), Orientation::Positive), Err(Error::DegeneratePositive { .. } | Error::NotPositive { .. })));
    assert!(matches!(analyze_positive(&g2::phi0().scale(-1.0), Orientation::Positive), Err(Error::NotPositive { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structure_is_equivariant(a in near_identity(7)) {
        let phi = g2::phi0().pullback(&a).unwrap();
        let data = analyze_positive(&phi, Orientation::Positive).unwrap();
        prop_assert!((&data.metric - a.transpose() * &a).amax() < 1e-9);
        prop_assert!((data.norm_squared() - 7.0).abs() < 1e-9);
        let star0 = analyze_positive(&g2::phi0(), Orientation::Positive).unwrap().star_phi;
        prop_assert!(data.star_phi.distance(&star0.pullback(&a).unwrap()) < 1e-9);
        prop_assert!((data.vol.top() - a.determinant()).abs() < 1e-9);
    }

    #[test]
    fn phi_wedge_star_phi_is_seven_volumes(a in near_identity(7), s in 0.3..3.0f64) {
        let phi = g2::phi0().pullback(&a).unwrap().scale(s);
        let data = analyze_positive(&phi, Orientation::Positive).unwrap();
        let top = phi.wedge(&data.star_phi).unwrap().top();
        prop_assert!((top - 7.0 * data.vol.top()).abs() < 1e-8 * top.abs());
    }
}
