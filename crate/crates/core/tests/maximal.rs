use g2forms::exterior::{Chart, FdConfig, SmoothMap};
use g2forms::maximal::*;
use g2forms::reductions::SpacelikeImmersion;
use g2forms::Error;
use nalgebra::{DMatrix, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn unit_box(p: usize, n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::uniform(Domain::Box { lo: vec![-1.0; p], hi: vec![1.0; p] }, n).unwrap())
}

fn ball(p: usize, n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::uniform(Domain::Ball { dim: p, radius: 1.0 }, n).unwrap())
}

fn sin_pattern(x: &[f64]) -> Vec<f64> {
    vec![0.1 * (PI * x[0]).sin() * (0.5 * PI * x[1]).cos(), 0.1 * (PI * (x[0] + x[1])).sin()]
}

fn solve(mesh: &Arc<Mesh>, q: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> MaximalSolution {
    let pr = MaximalProblem::new(mesh.clone(), q, f).unwrap();
    solve_maximal(&pr, Init::Harmonic, &SolverOptions::default()).unwrap()
}

#[test]
fn flat_volumes() {
    let g = SpacelikeGraph::from_fn(ball(3, 33), 3, |_| vec![0.0; 3]).unwrap();
    let v = g.volume().unwrap();
    assert!((v / (4.0 * PI / 3.0) - 1.0).abs() < 0.01, "{v}");
    let c = SpacelikeGraph::from_fn(ball(3, 33), 3, |_| vec![0.3, -1.0, 2.0]).unwrap();
    assert!((c.volume().unwrap() - v).abs() < 1e-12);
}

#[test]
fn affine_graph_volume_is_closed_form() {
    let l = Matrix2::new(0.3, -0.2, 0.1, 0.4);
    let mesh = unit_box(2, 9);
    let g = SpacelikeGraph::from_fn(mesh, 2, |x| vec![l[(0, 0)] * x[0] + l[(0, 1)] * x[1], l[(1, 0)] * x[0] + l[(1, 1)] * x[1]]).unwrap();
    let exact = (Matrix2::identity() - l.transpose() * l).determinant().sqrt() * 4.0;
    assert!((g.volume().unwrap() - exact).abs() < 1e-12);
    assert!(g.el_residual().unwrap() < 1e-12);
}

#[test]
fn el_residual_examples() {
    let mesh = unit_box(2, 33);
    let zero = SpacelikeGraph::from_fn(mesh.clone(), 1, |_| vec![0.0]).unwrap();
    assert_eq!(zero.el_residual().unwrap(), 0.0);
    // A harmonic function is maximal only to second order in its gradient.
    let harm = SpacelikeGraph::from_fn(mesh.clone(), 1, |x| vec![0.2 * (x[0] * x[0] - x[1] * x[1])]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut rough = harm.clone();
    rough.values_mut().iter_mut().zip(&noise).for_each(|(v, e)| *v += e);
    let (rh, rr) = (harm.el_residual().unwrap(), rough.el_residual().unwrap());
    assert!(rh > 1e-6 && rh < rr, "{rh} {rr}");
}

#[test]
fn timelike_data_is_rejected() {
    let pr = MaximalProblem::new(unit_box(2, 9), 1, |x| vec![1.5 * x[0]]).unwrap();
    let err = solve_maximal(&pr, Init::Harmonic, &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NotSpacelike { min_eigenvalue, .. } if min_eigenvalue < 0.0));
    let g = SpacelikeGraph::from_fn(unit_box(2, 9), 1, |x| vec![1.5 * x[0]]).unwrap();
    assert!(matches!(g.volume(), Err(Error::NotSpacelike { .. })));
}

#[test]
fn zero_boundary_is_already_solved() {
    let sol = solve(&unit_box(2, 17), 2, |_| vec![0.0; 2]);
    assert!(sol.iterations <= 1);
    assert!(sol.graph.el_residual().unwrap() < 1e-12);
    assert!(sol.graph.values().iter().all(|v| *v == 0.0));
}

#[test]
fn solver_increases_volume_monotonically() {
    let mesh = unit_box(2, 33);
    let pr = MaximalProblem::new(mesh, 2, sin_pattern).unwrap();
    let init = pr.harmonic_extension().unwrap();
    let sol = solve_maximal(&pr, Init::Harmonic, &SolverOptions::default()).unwrap();
    assert!(sol.graph.el_residual().unwrap() < 1e-8);
    assert!(sol.graph.volume().unwrap() > init.volume().unwrap());
    for w in sol.objectives.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{w:?}");
    }
    for w in sol.residuals.windows(2) {
        assert!(w[1] < w[0]);
    }
    // Deterministic given inputs.
    let again = solve_maximal(&pr, Init::Harmonic, &SolverOptions::default()).unwrap();
    assert_eq!(again.graph.values(), sol.graph.values());
}

#[test]
fn iteration_cap_is_reported() {
    let pr = MaximalProblem::new(unit_box(2, 17), 2, sin_pattern).unwrap();
    let opts = SolverOptions { max_iters: 1, ..Default::default() };
    assert!(matches!(solve_maximal(&pr, Init::Harmonic, &opts), Err(Error::MaxIters { residual }) if residual > 1e-8));
}

#[test]
fn solved_graph_is_a_local_volume_maximum() {
    let mesh = unit_box(2, 17);
    let sol = solve(&mesh, 2, sin_pattern);
    let v0 = sol.graph.volume().unwrap();
    let interior: Vec<usize> = mesh.interior_nodes().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let mut g = sol.graph.clone();
        for _ in 0..5 {
            let i = interior[rng.random_range(0..interior.len())];
            let a = rng.random_range(0..2);
            g.values_mut()[2 * i + a] += rng.random_range(-1e-3..1e-3);
        }
        assert!(g.volume().unwrap() < v0);
    }
}

#[test]
fn solution_is_equivariant_under_target_rotations() {
    let mesh = unit_box(2, 17);
    let (c, s) = (0.6f64, 0.8f64);
    let rot = move |v: Vec<f64>| vec![c * v[0] - s * v[1], s * v[0] + c * v[1]];
    let a = solve(&mesh, 2, sin_pattern);
    let b = solve(&mesh, 2, |x| rot(sin_pattern(x)));
    let mut rotated = a.graph.clone();
    for i in 0..mesh.num_nodes() {
        let v = rot(a.graph.value(i).to_vec());
        rotated.values_mut()[2 * i..2 * i + 2].copy_from_slice(&v);
    }
    assert!(rotated.sup_distance(&b.graph).unwrap() < 10.0 * DEFAULT_TOL);
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let ustar = |x: &[f64]| vec![0.3 * (x[0] + 0.5 * x[1]).sin(), 0.2 * x[0] * x[1] + 0.1 * x[1].cos()];
    let errs: Vec<f64> = [9, 17, 33]
        .iter()
        .map(|&n| {
            let mesh = unit_box(2, n);
            let pr = MaximalProblem::new(mesh.clone(), 2, ustar).unwrap().with_source(|x| el_operator(&ustar, x));
            let sol = solve_maximal(&pr, Init::Harmonic, &SolverOptions::default()).unwrap();
            sol.graph.sup_distance(&SpacelikeGraph::from_fn(mesh, 2, ustar).unwrap()).unwrap()
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.3, "{errs:?}");
    }
}

#[test]
fn sphere_boundary_curvature() {
    for p in [2, 3] {
        let sig = ball_boundary(p, 2, 1.0, |_| vec![0.0; 2], 17, 24).unwrap();
        let pts = sig.chart().interior_grid_points(0.3);
        let out = ball_outward(p, 2);
        let c = boundary_mean_curvature(&sig, &pts, Some(&out), 1e-9).unwrap();
        assert!(c.all_spacelike_outward);
        for r in &c.points {
            assert!((r.norm_sq.sqrt() - (p as f64 - 1.0)).abs() < 1e-6);
        }
    }
}

#[test]
fn boosted_sphere_keeps_its_curvature_norm() {
    // S² ⊂ R³ ⊂ R^{3,1}, boosted in the (x1, u) plane.
    let (ch, sh) = (0.5f64.cosh(), 0.5f64.sinh());
    let chart = sphere_chart(2, 17, 24).unwrap();
    let target = Chart::cube(4, -10.0, 10.0, 2).unwrap();
    let map = SmoothMap::new(chart.clone(), target, move |th| {
        let x = sphere_point(1.0, th);
        Ok(vec![ch * x[0], x[1], x[2], sh * x[0]])
    });
    let pts = chart.interior_grid_points(0.3);
    let sig = SpacelikeImmersion::in_signature(map, 3, &pts).unwrap();
    let outward = move |th: &[f64]| -> g2forms::Result<Vec<f64>> {
        let x = sphere_point(1.0, th);
        Ok(vec![ch * x[0], x[1], x[2], sh * x[0]])
    };
    let c = boundary_mean_curvature(&sig, &pts, Some(&outward), 1e-9).unwrap();
    assert!(c.all_spacelike_outward);
    for r in &c.points {
        assert!((r.norm_sq.sqrt() - 2.0).abs() < 1e-6);
    }
}

#[test]
fn straight_boundary_has_null_curvature() {
    let chart = Chart::new(vec![-1.0], vec![1.0], vec![9]).unwrap();
    let map = SmoothMap::new(chart.clone(), Chart::cube(3, -5.0, 5.0, 2).unwrap(), |t| Ok(vec![t[0], 0.5 * t[0], 0.2 * t[0]]));
    let pts = chart.interior_grid_points(0.1);
    let sig = SpacelikeImmersion::in_signature(map, 2, &pts).unwrap();
    let c = boundary_mean_curvature(&sig, &pts, None, 1e-9).unwrap();
    assert!(c.points.iter().all(|r| r.causal == CausalType::Null));
    assert!(!c.all_spacelike_outward);
}

#[test]
fn volume_bound_is_sharp_for_flat_balls() {
    for (p, n) in [(2, 65), (3, 33)] {
        let g = SpacelikeGraph::from_fn(ball(p, n), 3, |_| vec![0.0; 3]).unwrap();
        let sig = ball_boundary(p, 3, 1.0, |_| vec![0.0; 3], 33, 64).unwrap();
        let pts: Vec<_> = sig.chart().interior_grid_points(0.3).into_iter().step_by(7).collect();
        let r = maximal_volume_bound(&g, &sig, &pts).unwrap();
        let exact = if p == 2 { PI } else { 4.0 * PI / 3.0 };
        assert!((r.lhs / exact - 1.0).abs() < 0.01 && (r.rhs / exact - 1.0).abs() < 0.01, "{r:?}");
        assert!(r.slack.abs() < 0.01);
    }
}

#[test]
fn volume_bound_has_slack_for_curved_graphs() {
    let f = |x: &[f64]| vec![0.15 * (2.0 * x[0]).sin() * x[1], 0.1 * x[2] * x[2]];
    let sol = solve(&ball(3, 17), 2, f);
    let sig = ball_boundary(3, 2, 1.0, f, 33, 64).unwrap();
    let pts: Vec<_> = sig.chart().interior_grid_points(0.2).into_iter().step_by(5).collect();
    let r = maximal_volume_bound(&sol.graph, &sig, &pts).unwrap();
    assert!(r.slack > 0.0, "{r:?}");
}

#[test]
fn volume_bound_needs_spacelike_boundary_curvature() {
    let f = |x: &[f64]| {
        let th = x[1].atan2(x[0]);
        vec![0.3 * (3.0 * th).cos() * (x[0] * x[0] + x[1] * x[1]).powf(1.5)]
    };
    let sol = solve(&ball(2, 17), 1, f);
    let sig = ball_boundary(2, 1, 1.0, f, 3, 64).unwrap();
    let pts = sig.chart().grid_points();
    assert!(matches!(maximal_volume_bound(&sol.graph, &sig, &pts), Err(Error::Hypothesis(_))));
}

#[test]
fn cylinder_over_equal_ends_is_the_product() {
    let flat = SpacelikeGraph::from_fn(ball(2, 9), 1, |_| vec![0.0]).unwrap();
    let (r, _) = cylinder_experiment(&flat, &flat, 1.0, 5, &SolverOptions::default()).unwrap();
    assert!(r.product_deviation < 1e-8 && r.agreement == 0.0 && r.warning.is_none());

    let f = |x: &[f64]| vec![0.2 * x[0] * x[1], 0.1 * (3.0 * x[1]).sin()];
    let sol = solve(&ball(2, 17), 2, f);
    let (r, fill) = cylinder_experiment(&sol.graph, &sol.graph, 1.0, 9, &SolverOptions::default()).unwrap();
    assert!(r.product_deviation < 10.0 * DEFAULT_TOL, "{r:?}");
    assert!(fill.graph.el_residual().unwrap() < DEFAULT_TOL);
}

#[test]
fn cylinder_rejects_mismatched_boundaries() {
    let a = solve(&ball(2, 9), 1, |x| vec![0.1 * x[0]]);
    let b = solve(&ball(2, 9), 1, |x| vec![0.1 * x[1]]);
    assert!(matches!(cylinder_experiment(&a.graph, &b.graph, 1.0, 5, &SolverOptions::default()), Err(Error::Hypothesis(_))));
}

#[test]
fn maximal_graphs_have_nonnegative_ricci() {
    let f = |x: &[f64]| vec![0.3 * (x[0] * x[0] - x[1] * x[1]), 0.2 * (2.0 * x[1]).sin()];
    let sol = solve(&unit_box(2, 33), 2, f);
    let imm = graph_immersion(&sol.graph, 5).unwrap();
    let pts = vec![vec![0.0, 0.0], vec![0.3, -0.2], vec![-0.4, 0.5]];
    for r in ricci_report(&imm, &pts, FdConfig::richardson(1e-2)).unwrap() {
        assert!(r.min_eigenvalue > -1e-2 * r.scale.max(1e-3), "{r:?}");
    }
}

#[test]
fn spline_interpolates_and_differentiates() {
    let f = |x: &[f64]| vec![(x[0] + 2.0 * x[1]).sin() * 0.2];
    let g = SpacelikeGraph::from_fn(unit_box(2, 33), 1, f).unwrap();
    let s = TensorSpline::new(&g).unwrap();
    let x = [0.31, -0.27];
    assert!((s.eval(&x, None)[0] - f(&x)[0]).abs() < 1e-5);
    let dx = 0.2 * (x[0] + 2.0 * x[1]).cos();
    assert!((s.eval(&x, Some(0))[0] - dx).abs() < 1e-4);
    assert!((s.eval(&x, Some(1))[0] - 2.0 * dx).abs() < 1e-4);
    let j: DMatrix<f64> = graph_immersion(&g, 3).unwrap().map().jacobian(&x).unwrap();
    assert_eq!((j.nrows(), j.ncols()), (3, 2));
}
