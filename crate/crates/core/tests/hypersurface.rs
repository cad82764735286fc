use g2forms::exterior::{Chart, FdConfig, FormField, Orientation, SmoothMap};
use g2forms::g2::phi0;
use g2forms::hypersurface::*;
use g2forms::Error;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const BASE: [f64; 6] = [0.0, 0.0, 0.05, -0.1, 0.15, 0.07];

fn sphere_patch(upper: bool) -> (Hypersurface, Vec<Vec<f64>>) {
    let (map, co) = sphere_graph_patch(1.0, upper, 0.4);
    let pts = map.source().slice_points([0, 1], 5, &BASE);
    let h = Hypersurface::induce(flat_ambient(2.0), map, co).unwrap().assume_flat_ambient();
    (h, pts)
}

/// Random quadratic-plus-cubic graph `t = f(z)` over `[-0.4, 0.4]^6`.
fn random_graph(seed: u64) -> SmoothMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q: Vec<f64> = (0..36).map(|_| rng.random_range(-0.3..0.3)).collect();
    let c: Vec<f64> = (0..6).map(|_| rng.random_range(-0.2..0.2)).collect();
    let q2 = q.clone();
    let c2 = c.clone();
    let target = Chart::cube(7, -3.0, 3.0, 2).unwrap();
    graph(
        0.4,
        target,
        move |p| {
            let mut v = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    v += q[6 * i + j] * p[i] * p[j];
                }
                v += c[i] * p[i].powi(3);
            }
            v
        },
        move |p| {
            std::array::from_fn(|k| {
                let mut g = 3.0 * c2[k] * p[k] * p[k];
                for j in 0..6 {
                    g += (q2[6 * k + j] + q2[6 * j + k]) * p[j];
                }
                g
            })
        },
    )
}

fn angular_samples(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut p: Vec<f64> = (0..5).map(|_| rng.random_range(0.2..PI - 0.2)).collect();
            p.push(rng.random_range(0.0..2.0 * PI));
            p
        })
        .collect()
}

#[test]
fn sphere_curvature_identities_hold_on_both_patches() {
    for upper in [true, false] {
        let (h, pts) = sphere_patch(upper);
        let r = h.verify_curvature_identities(&pts).unwrap();
        assert!(r.id1_residual < 1e-6, "{upper}: {}", r.id1_residual);
        assert!(r.id2_residual < 1e-6, "{upper}: {}", r.id2_residual);
        for row in &r.rows {
            assert!((row.mu - 6.0).abs() < 1e-6);
        }
    }
}

#[test]
fn curvature_identity_residual_is_second_order_in_the_step() {
    let (h, pts) = sphere_patch(true);
    let coarse = h.clone().with_fd(FdConfig::central(1e-3)).verify_curvature_identities(&pts).unwrap();
    let fine = h.with_fd(FdConfig::central(5e-4)).verify_curvature_identities(&pts).unwrap();
    let ratio = coarse.id1_residual / fine.id1_residual;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn curvature_identities_hold_on_random_graphs() {
    for seed in 0..5 {
        let map = random_graph(seed);
        let pts = map.source().slice_points([0, 1], 3, &BASE);
        let h = Hypersurface::induce(flat_ambient(3.0), map, Orientation::Positive).unwrap().assume_flat_ambient();
        let r = h.verify_curvature_identities(&pts).unwrap();
        assert!(r.id1_residual < 1e-3 && r.id2_residual < 1e-3, "seed {seed}: {r:?}");
    }
}

#[test]
fn curvature_identities_hold_in_curved_coordinates() {
    // φ0 pulled back by a nonlinear diffeomorphism is torsion-free but not constant.
    let chart = Chart::cube(7, -1.5, 1.5, 2).unwrap();
    let big = Chart::cube(7, -3.0, 3.0, 2).unwrap();
    let warp = SmoothMap::new(chart.clone(), big.clone(), |p| {
        let mut y = p.to_vec();
        y[0] += 0.1 * p[6] * p[6];
        y[3] += 0.1 * (p[1]).sin();
        y[6] += 0.05 * p[2] * p[4];
        Ok(y)
    })
    .with_jacobian(|p| {
        let mut j = DMatrix::identity(7, 7);
        j[(0, 6)] = 0.2 * p[6];
        j[(3, 1)] = 0.1 * p[1].cos();
        j[(6, 2)] = 0.05 * p[4];
        j[(6, 4)] = 0.05 * p[2];
        Ok(j)
    });
    let ambient = FormField::constant(big, phi0()).pullback(&warp).unwrap();
    let map = random_graph(11);
    let pts = map.source().slice_points([0, 1], 3, &BASE);
    let h = Hypersurface::induce(ambient, map, Orientation::Positive).unwrap();
    let r = h.verify_curvature_identities(&pts).unwrap();
    assert!(r.id1_residual < 1e-3 && r.id2_residual < 1e-3, "{r:?}");
}

#[test]
fn flipping_the_co_orientation_negates_mean_curvature() {
    let (map, co) = sphere_graph_patch(1.0, true, 0.3);
    let p = [0.1, -0.05, 0.0, 0.1, 0.05, 0.0];
    let out = Hypersurface::induce(flat_ambient(2.0), map.clone(), co).unwrap().assume_flat_ambient();
    let inn = Hypersurface::induce(flat_ambient(2.0), map, co.flipped()).unwrap().assume_flat_ambient();
    let (a, b) = (out.mean_curvature(&p).unwrap(), inn.mean_curvature(&p).unwrap());
    assert!((a - 6.0).abs() < 1e-6 && (a + b).abs() < 1e-9);
    let pts = vec![p.to_vec()];
    assert!(inn.verify_mean_curvature_bound(&pts).is_err());
}

#[test]
fn sphere_saturates_the_mean_curvature_bound() {
    let (h, pts) = sphere_patch(false);
    let r = h.verify_mean_curvature_bound(&pts).unwrap();
    for row in &r.rows {
        assert!((row.mu - 6.0).abs() < 1e-6);
        assert!((row.det22 - 64.0).abs() < 1e-4);
    }
    assert!(r.max_slack.abs() < 1e-6 && r.min_slack.abs() < 1e-6);
}

#[test]
fn squashed_spheres_have_positive_slack() {
    let s = angular_samples(60, 3);
    for (axes, bound) in [([1.2, 1.2, 1.0, 1.0, 1.0, 1.0, 1.0], 0.0), ([2.0, 2.0, 1.0, 1.0, 0.5, 0.5, 1.0], 0.05)] {
        let map = hyperspherical_map(axes, [5, 5, 5, 5, 5, 4]);
        let co = outward_co_orientation(&map, &s[0]).unwrap();
        let h = Hypersurface::induce_on(flat_ambient(3.0), map, co, &s).unwrap().assume_flat_ambient();
        let r = h.verify_mean_curvature_bound(&s).unwrap();
        assert!(r.min_slack > bound, "{axes:?}: {}", r.min_slack);
    }
}

#[test]
fn hyperplane_is_not_strictly_mean_convex() {
    let target = Chart::cube(7, -2.0, 2.0, 2).unwrap();
    let map = graph(0.5, target, |_| 0.0, |_| [0.0; 6]);
    let pts = map.source().slice_points([0, 1], 3, &BASE);
    let h = Hypersurface::induce(flat_ambient(2.0), map, Orientation::Positive).unwrap().assume_flat_ambient();
    assert!(matches!(h.verify_mean_curvature_bound(&pts), Err(Error::NotStrictlyMeanConvex(_))));
    assert_eq!(h.verify_normal_variation(&pts).unwrap(), 0.0);
}

#[test]
fn normal_variation_holds_on_sphere_and_random_graphs() {
    let (h, pts) = sphere_patch(true);
    assert!(h.verify_normal_variation(&pts).unwrap() < 1e-3);
    for seed in 0..5 {
        let map = random_graph(seed);
        let pts = map.source().slice_points([0, 1], 3, &BASE);
        let h = Hypersurface::induce(flat_ambient(3.0), map, Orientation::Negative).unwrap().assume_flat_ambient();
        let r = h.verify_normal_variation(&pts).unwrap();
        assert!(r < 1e-3, "seed {seed}: {r}");
    }
}

#[test]
fn normal_variation_constant_is_reproduced_by_calibration() {
    let map = random_graph(21);
    let pts = map.source().slice_points([0, 1], 3, &BASE);
    let h = Hypersurface::induce(flat_ambient(3.0), map, Orientation::Positive).unwrap().assume_flat_ambient();
    let c = calibrate_normal_variation(&h, &pts).unwrap();
    assert!((c - NORMAL_VARIATION_CONSTANT).norm() < 1e-6, "{c}");
}

#[test]
fn coarse_ball_volume_bound() {
    // Unit ball: the bound is an equality with m = 4.
    let amb = flat_ambient(2.0);
    let ball = bulk_volume(&amb, &polar_ball_map([1.0; 7], [17, 7, 4, 7, 3, 13, 3]), Orientation::Positive).unwrap();
    let sphere = induced_volume(&amb, &hyperspherical_map([1.0; 7], [9, 5, 9, 5, 17, 4])).unwrap();
    let exact_ball = 16.0 * PI.powi(3) / 105.0;
    assert!((ball / exact_ball - 1.0).abs() < 0.02, "{ball}");
    assert!((sphere / (7.0 * exact_ball) - 1.0).abs() < 0.02, "{sphere}");
    let b = volume_bound(ball, sphere, 4.0).unwrap();
    assert!((b.rhs / b.lhs - 1.0).abs() < 0.03);
    assert!(matches!(volume_bound(ball, sphere, 0.0), Err(Error::NotStrictlyMeanConvex(_))));
}

#[test]
fn induced_measure_matches_the_area_density() {
    let (h, pts) = sphere_patch(true);
    for p in &pts {
        let geo = h.at(p).unwrap();
        assert!((geo.area_density() - geo.data.vol_coefficient().abs()).abs() < 1e-10);
        let cube = geo.omega.wedge(&geo.omega).unwrap().wedge(&geo.omega).unwrap().scale(1.0 / 6.0);
        assert!(cube.distance(&geo.data.vol) < 1e-10);
    }
}
