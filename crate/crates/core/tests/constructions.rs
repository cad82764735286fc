use g2forms::constructions::*;
use g2forms::exterior::{Chart, FormField, KForm, Orientation};
use g2forms::{reductions, sl3c, Error};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn times(ts: &[f64]) -> Vec<Vec<f64>> {
    let ys = [[0.3, 1.0, 2.0, 0.5, 0.1, 4.0], [2.0, 0.2, 0.3, 5.0, 1.0, 0.0], [4.5, 3.0, 1.0, 2.5, 6.0, 3.3]];
    ts.iter()
        .flat_map(|&t| {
            ys.iter().map(move |y| {
                let mut p = y.to_vec();
                p.push(t);
                p
            })
        })
        .collect()
}

#[test]
fn smooth_step_is_monotone_with_bounded_slope() {
    let mut prev = 0.0;
    for i in 0..=1000 {
        let x = -0.1 + 1.2 * i as f64 / 1000.0;
        let v = smooth_step(x);
        assert!(v >= prev && (0.0..=1.0).contains(&v));
        assert!((v - prev) <= 2.0 * 1.2 / 1000.0 + 1e-12);
        prev = v;
    }
    assert_eq!(smooth_step(0.0), 0.0);
    assert_eq!(smooth_step(1.0), 1.0);
    assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
}

#[test]
fn radial_primitive_inverts_d_on_constant_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut gamma = KForm::zero(6, 3);
    for a in 0..3 {
        for b in 0..6 {
            for c in (b + 1)..6 {
                if b != a && c != a {
                    gamma.add_term(rng.random_range(-1.0..1.0), &[a, b, c]);
                }
            }
        }
    }
    let g = gamma.clone();
    let chart = Chart::cube(6, -1.0, 1.0, 2).unwrap();
    let prim = FormField::new(chart, 2, move |x| radial_primitive(&g, &[0, 1, 2], x));
    for p in [[0.1, -0.2, 0.3, 0.4, 0.0, -0.5], [0.5, 0.5, -0.5, 0.0, 0.2, 0.1]] {
        assert!(prim.d_at(&p).unwrap().distance(&gamma) < 1e-9);
    }
    let pure = KForm::basis(6, &[3, 4, 5]);
    assert!(radial_primitive(&pure, &[0, 1, 2], &[0.0; 6]).is_err());
}

#[test]
fn doubling_jump_mollifies_to_convex_combination() {
    let field = flat_torus_jump(2.0, 0.0, 2).unwrap();
    let eps = 0.2;
    let out = mollify_closed(&field, eps).unwrap();
    let pts = times(&[-0.45, -0.3, -0.15, -0.05, 0.0, 0.03, 0.1, 0.2, 0.33, 0.45]);
    let report = out.check(&pts).unwrap();
    assert!(report.closedness() < 1e-8, "{report:?}");
    assert!(report.positivity_margin > 0.0 && report.taming_margin > 0.0);
    // Every averaged ω is c ω0 with c between the one-sided values.
    for p in &pts {
        let w = out.omega_at(&p[..6], p[6]).unwrap();
        let c = w.get(&[0, 1]);
        assert!((1.0 - 1e-12..=2.0 + 1e-12).contains(&c), "{c}");
        assert!(w.distance(&sl3c::omega0().scale(c)) < 1e-12);
        assert!(out.rho_at(&p[..6], p[6]).unwrap().distance(&sl3c::rho0()) < 1e-12);
    }
    let below = out.omega_at(&[0.0; 6], -0.05).unwrap().get(&[0, 1]);
    let above = out.omega_at(&[0.0; 6], 0.05).unwrap().get(&[0, 1]);
    assert!(1.0 < below && below < above && above < 2.0);
}

#[test]
fn mollified_jump_is_closed_and_confined_to_collar() {
    let field = flat_torus_jump(1.5, 0.1, 2).unwrap();
    let eps = 0.15;
    let out = mollify_closed(&field, eps).unwrap();
    let inside = times(&[-0.28, -0.2, -0.1, -0.04, 0.0, 0.02, 0.07, 0.12, 0.25, 0.29]);
    let report = out.check(&inside).unwrap();
    assert!(report.closedness() < 1e-8, "{report:?}");
    assert!(report.positivity_margin > 0.0);

    let outside = times(&[-0.9, -0.5, -0.31, 0.31, 0.6, 0.95]);
    for p in &outside {
        assert_eq!(out.phi_at(p).unwrap(), field.phi_at(p).unwrap());
    }
    let moved = inside.iter().map(|p| out.phi_at(p).unwrap().distance(&field.phi_at(p).unwrap())).fold(0.0, f64::max);
    assert!(moved > 1e-3);
}

#[test]
fn zero_jump_leaves_field_unchanged() {
    let field = flat_torus_jump(1.0, 0.0, 2).unwrap();
    let out = mollify_closed(&field, 0.2).unwrap();
    let pts = times(&[-0.9, -0.4, -0.1, 0.0, 0.1, 0.39, 0.8]);
    let dev = pts.iter().map(|p| out.phi_at(p).unwrap().distance(&field.phi_at(p).unwrap())).fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev}");
}

#[test]
fn jump_out_of_cone_loses_positivity_at_every_epsilon() {
    let field = flat_torus_jump(-1.0, 0.0, 2).unwrap();
    match mollify_closed(&field, 0.2) {
        Err(Error::PositivityLost { failing_epsilon, passing_epsilon, margin }) => {
            assert!(passing_epsilon.is_none());
            assert!(failing_epsilon < 0.2 && margin < 0.0);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(mollify_closed(&field, 0.6), Err(Error::Hypothesis(_))));
    let smooth = flat_torus_jump(2.0, 0.0, 2).unwrap();
    let no_jump = CollarField::new(smooth.base().clone(), (-1.0, 1.0), |_: &[f64], _| Ok(sl3c::rho0()), |_: &[f64], _| {
        Ok(sl3c::omega0())
    })
    .unwrap();
    assert!(matches!(mollify_closed(&no_jump, 0.1), Err(Error::Hypothesis(_))));
}

#[test]
fn phi_eps_degenerates_exactly_on_the_axis_at_zero_epsilon() {
    let r = phi_eps_family(0.5, 0.0, 0.0, 17, 9).unwrap();
    assert!(r.margin_at_origin.abs() <= 1e-10, "{r:?}");
    assert!(r.margin_off_origin > 0.0, "{r:?}");
    assert!(!r.admissible());
    assert!(r.closedness < 1e-8, "{r:?}");
    assert_eq!(r.boundary_mismatch, 0.0);
    assert_eq!(r.rho0_mismatch, 0.0);
}

#[test]
fn grid_search_finds_admissible_phi_eps_and_large_epsilon_fails() {
    let kappas = [1.0, 0.5, 0.25];
    let epsilons = [1e-1, 1e-2, 1e-3, 1e-4];
    let found = admissible_search(&kappas, &epsilons, 0.0, 17, 9).unwrap().expect("admissible pair");
    assert!(found.min_margin > 0.0);
    assert_eq!(found.boundary_mismatch, 0.0);
    assert_eq!(found.rho0_mismatch, 0.0);
    assert_eq!(found.outside_mismatch, 0.0);
    assert!(found.closedness < 1e-6, "{found:?}");
    let PhiEps { kappa, eps, .. } = found.params;
    let big = phi_eps_family(kappa, 1e3 * eps, 0.0, 17, 9).unwrap();
    assert!(big.min_margin < 0.0, "{big:?}");
    // A finer scan of the admissible pair stays positive.
    assert!(phi_eps_family(kappa, eps, 0.0, 33, 17).unwrap().min_margin > 0.0);
}

#[test]
fn phi_eps_margin_depends_only_on_radius_and_time() {
    let fam = PhiEps::new(0.5, 0.02, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let z: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        let r = rng.random_range(0.0..0.5);
        let t = rng.random_range(0.0..1.0);
        let mut p: Vec<f64> = z.iter().map(|x| x / norm * r).collect();
        p.push(t);
        let a = fam.margin(&p).unwrap();
        let b = fam.margin(&[r, 0.0, 0.0, 0.0, 0.0, 0.0, t]).unwrap();
        assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-6), "{a} vs {b}");
    }
}

#[test]
fn positive_lambda_makes_phi_positive_everywhere() {
    let r = phi_eps_family(0.5, 0.0, 0.1, 17, 9).unwrap();
    assert!(r.min_margin > 0.0, "{r:?}");
}

#[test]
fn already_taming_path_has_zero_threshold() {
    let (path, big) = constant_model_path(0.5, 2).unwrap();
    let r = taming_threshold(&path, &big, &path.sample_points(0.0, 1.0, 3)).unwrap();
    assert_eq!(r.a_star, 0.0);
    assert!(r.passes_above && r.fails_below.is_none());
}

#[test]
fn reversed_model_form_needs_threshold_one() {
    let (path, big) = constant_model_path(-1.0, 2).unwrap();
    let r = taming_threshold(&path, &big, &path.sample_points(0.0, 1.0, 5)).unwrap();
    assert!((r.a_star - 1.0).abs() < 1e-6, "{r:?}");
    assert!(r.passes_above);
    assert_eq!(r.fails_below, Some(true));
    let cob = assemble_cobordism(&path, &big, 2.0 * r.a_star).unwrap();
    let report = cob.check(&path.sample_points(0.1, 0.9, 3)).unwrap();
    assert!(report.flow_residual < 1e-5 && report.positivity_margin > 0.0, "{report:?}");
}

#[test]
fn non_taming_omega_is_reported_with_witness() {
    let (path, _) = constant_model_path(1.0, 2).unwrap();
    let bad = FormField::constant(path.base().clone(), sl3c::omega0().scale(-1.0));
    match taming_threshold(&path, &bad, &path.sample_points(0.0, 1.0, 2)) {
        Err(Error::OmegaNotTaming { point, margin }) => {
            assert_eq!(point.len(), 7);
            assert!(margin < 0.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn torus_interpolation_assembles_positive_cobordism() {
    let ea = Matrix3::identity();
    let eb = Matrix3::new(1.2, 0.1, 0.0, 0.0, 0.9, 0.2, 0.1, 0.0, 1.1);
    let (path, big) = torus_interpolation_path(&ea, &eb).unwrap();
    let coarse = path.sample_points(0.0, 1.0, 3);
    let fine = path.sample_points(0.0, 1.0, 9);
    let r = taming_threshold(&path, &big, &fine).unwrap();
    assert!(r.a_star.is_finite() && r.a_star > 0.0);
    assert!(r.passes_above && r.fails_below == Some(true));
    assert!(r.a_star >= taming_threshold(&path, &big, &coarse).unwrap().a_star);
    assert_eq!(r.curve.len(), 9);

    let interior = path.sample_points(0.1, 0.9, 5);
    assert!(path.check(&interior).unwrap().flow_residual < 1e-8);
    let cob = assemble_cobordism(&path, &big, 2.0 * r.a_star).unwrap();
    let report = cob.check(&interior).unwrap();
    assert!(report.closedness() < 1e-5, "{report:?}");
    assert!(report.positivity_margin > 0.0 && report.taming_margin > 0.0, "{report:?}");
    // Endpoints are the two reduction structures.
    let y = [0.2, -0.3, 0.5, 0.1, 0.2, 0.3];
    let end = path.rho_at(&y, 1.0).unwrap();
    let sb = reductions::sigma_from_eps(&eb);
    let mut expected = KForm::basis(6, &[3, 4, 5]);
    for i in 0..3 {
        expected = expected.try_add(&sb[i].embed(6, &[0, 1, 2]).wedge(&KForm::basis(6, &[3 + i])).unwrap().scale(-1.0)).unwrap();
    }
    assert!(end.distance(&expected) < 1e-14);
}

fn torus_pair(n: usize) -> (FormField, FormField) {
    let chart = flat_torus(2).unwrap().with_grid(vec![n, 2, 2, n, 2, 2]).unwrap();
    let rho = FormField::new(chart.clone(), 3, |y| sl3c::rho0().try_add(&KForm::basis(6, &[0, 2, 5]).scale(0.2 * y[0].cos())));
    let big = FormField::new(chart, 2, |y| sl3c::omega0().try_add(&KForm::basis(6, &[3, 4]).scale(-0.3 * y[3].sin())));
    (rho, big)
}

#[test]
fn closed_pairs_on_torus_have_vanishing_obstruction() {
    let (rho, big) = torus_pair(16);
    let v = taming_obstruction(&rho, &big, Orientation::Positive).unwrap();
    assert!(v.abs() < 1e-6, "{v}");
    let report = obstruction_report(&rho, &big, Orientation::Positive).unwrap();
    assert!(report.max_density > 1e-3 && report.min_density < -1e-3);
    let flat = FormField::constant(rho.chart().clone(), sl3c::rho0());
    assert_eq!(taming_obstruction(&flat, &big, Orientation::Positive).unwrap(), 0.0);
}

#[test]
fn obstruction_rejects_non_closed_input() {
    let (rho, _) = torus_pair(8);
    let open = FormField::new(rho.chart().clone(), 2, |y| Ok(sl3c::omega0().scale(1.0 + 0.1 * y[0].sin())));
    assert!(matches!(taming_obstruction(&rho, &open, Orientation::Positive), Err(Error::NotClosed(_))));
}

#[test]
fn strictly_mean_convex_structure_with_taming_form_has_positive_density() {
    // Left-invariant coframe of SU(2): S = -Id, strictly mean-convex.
    let chart = Chart::new(vec![0.6, -1.0, -1.0], vec![2.4, 1.0, 1.0], vec![3, 3, 3]).unwrap();
    let sigma: [FormField; 3] = std::array::from_fn(|i| {
        FormField::new(chart.clone(), 2, move |y| {
            let (th, ps) = (y[0], y[2]);
            let e = [
                KForm::one_form(&[ps.sin(), -ps.cos() * th.sin(), 0.0]),
                KForm::one_form(&[ps.cos(), ps.sin() * th.sin(), 0.0]),
                KForm::one_form(&[0.0, th.cos(), 1.0]),
            ];
            e[(i + 1) % 3].wedge(&e[(i + 2) % 3])
        })
    });
    let data = reductions::torus_reduction(sigma).unwrap();
    let rho = data.rho_field().unwrap();
    let eps = data.eps.clone();
    // Ω = Σ dθ_i ∧ ε_i tames but is not closed.
    let big = FormField::new(rho.chart().clone(), 2, move |p| {
        let mut w = KForm::zero(6, 2);
        for (i, e) in eps.iter().enumerate() {
            w = w.try_add(&KForm::basis(6, &[3 + i]).wedge(&e.eval(&p[..3])?.embed(6, &[0, 1, 2]))?)?;
        }
        Ok(w)
    });
    let p = [1.2, 0.3, -0.4, 0.5, 0.5, 0.5];
    let st = sl3c::analyze_definite(&rho.eval(&p).unwrap(), reductions::TORUS_ORIENTATION).unwrap();
    assert!(sl3c::taming_check(&big.eval(&p).unwrap(), &st).unwrap().tamed);
    let r = obstruction_report(&rho, &big, reductions::TORUS_ORIENTATION).unwrap();
    assert!(r.min_density > 0.0 && r.integral > 0.0, "{r:?}");
}
