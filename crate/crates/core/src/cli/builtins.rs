//! Named scenarios, one per verification target.

use super::report::{Check, Table};
use super::scenario::Settings;
use crate::constructions::{self, PhiEps};
use crate::exterior::{C64, Chart, ComplexForm, FdConfig, FormField, KForm, Orientation, SmoothMap};
use crate::hypersurface::{self as hs, Hypersurface};
use crate::maximal::{self, Domain, Init, MaximalProblem, Mesh, SolverOptions, SpacelikeGraph};
use crate::reductions::{self, SpacelikeImmersion};
use crate::{g2, sl3c, Result};
use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, f64>,
    pub tables: BTreeMap<String, Table>,
}

impl Outcome {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.into(), v);
    }
}

pub struct Builtin {
    pub name: &'static str,
    pub summary: &'static str,
    /// Wall-clock budget in seconds for a default run, if any.
    pub budget: Option<f64>,
    pub run: fn(&Settings) -> Result<Outcome>,
}

pub const BUILTINS: [Builtin; 16] = [
    Builtin {
        name: "model-calibration",
        summary: "structures induced by the flat model forms rho0 and phi0",
        budget: Some(1.0),
        run: model_calibration,
    },
    Builtin {
        name: "variation-formulas",
        summary: "first variations of vol and rho~ against central differences",
        budget: Some(10.0),
        run: variation_formulas,
    },
    Builtin {
        name: "s6-curvature-identities",
        summary: "mean-curvature identities on two graph patches of the unit S^6",
        budget: Some(60.0),
        run: s6_curvature_identities,
    },
    Builtin {
        name: "s6-mean-curvature-bound",
        summary: "mu >= (3/2) det(d rho~)^(1/3): equality on S^6, slack on an ellipsoid",
        budget: Some(60.0),
        run: s6_mean_curvature_bound,
    },
    Builtin {
        name: "ball-volume-bound",
        summary: "Vol(M) <= 4 Vol(dM) / (7 m): equality on the unit 7-ball, slack on an ellipsoid",
        budget: Some(120.0),
        run: ball_volume_bound,
    },
    Builtin {
        name: "off-type-corpus",
        summary: "d rho~ of closed structures is of type (2,2)",
        budget: None,
        run: off_type_corpus,
    },
    Builtin {
        name: "s2-surface-identity",
        summary: "d rho~ = vol x mu for the lift of the unit S^2 in R^{3,3}",
        budget: None,
        run: s2_surface_identity,
    },
    Builtin {
        name: "torus-coframe",
        summary: "sigma <-> eps round trip, symmetric S and the closed form of rho~ for torus reductions",
        budget: None,
        run: torus_coframe,
    },
    Builtin {
        name: "maximal-solver",
        summary: "maximal graph solver: affine data, convergence order, local maximality",
        budget: Some(300.0),
        run: maximal_solver,
    },
    Builtin {
        name: "b3-maximal-volume",
        summary: "volume bound for the flat unit 3-ball in R^{3,3}",
        budget: None,
        run: b3_maximal_volume,
    },
    Builtin {
        name: "baraglia-torsion",
        summary: "torsion of the Baraglia G2 form of a solved maximal graph versus a perturbed one",
        budget: None,
        run: baraglia_torsion,
    },
    Builtin {
        name: "cylinder-product",
        summary: "maximal filling of a cylinder with equal ends is the product",
        budget: None,
        run: cylinder_product,
    },
    Builtin {
        name: "mollified-jump",
        summary: "closed mollification of a jump in a collar field",
        budget: None,
        run: mollified_jump,
    },
    Builtin {
        name: "phi-eps-family",
        summary: "admissible parameters for the modified degenerate family",
        budget: None,
        run: phi_eps_family,
    },
    Builtin {
        name: "taming-threshold",
        summary: "taming threshold and assembled cobordism for the reversed model path",
        budget: None,
        run: taming_threshold,
    },
    Builtin {
        name: "determinism",
        summary: "every other builtin produces byte-identical reports on a second run",
        budget: None,
        run: determinism,
    },
];

pub fn find(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

fn rng(s: &Settings, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(s.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ stream)
}

fn model_calibration(_: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let data = sl3c::analyze_definite(&sl3c::rho0(), Orientation::Positive)?;
    let dev_i = (&data.complex_structure - sl3c::standard_complex_structure()).amax();
    out.check(Check::below("complex_structure_deviation", dev_i, 1e-12));
    // dz1 dz2 dz3 with z_j = x_j + i y_j.
    let dz = |j: usize| {
        let mut c = vec![C64::new(0.0, 0.0); 6];
        c[2 * j] = C64::new(1.0, 0.0);
        c[2 * j + 1] = C64::new(0.0, 1.0);
        ComplexForm::one_form(&c)
    };
    let omega = dz(0).wedge(&dz(1))?.wedge(&dz(2))?;
    out.check(Check::below("rho0_vs_re_dz123", data.rho.distance(&omega.re), 1e-12));
    out.check(Check::below("rho_tilde_vs_im_dz123", data.rho_tilde.distance(&omega.im), 1e-12));
    let g = g2::analyze_positive(&g2::phi0(), Orientation::Positive)?;
    out.check(Check::below("metric_deviation", (&g.metric - DMatrix::<f64>::identity(7, 7)).amax(), 1e-12));
    out.check(Check::near("phi0_norm_squared", g.norm_squared(), 7.0, 1e-10));
    out.value("lambda", data.lambda);
    out.value("norm_squared", g.norm_squared());
    Ok(out)
}

fn random_three_form(rng: &mut ChaCha8Rng) -> KForm {
    let coeffs = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
    KForm::from_coeffs(6, 3, coeffs).expect("20 coefficients")
}

fn variation_formulas(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut rng = rng(s, 2);
    let eps = s.fd_or(1e-5);
    let mut a = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else { 0.0 } + 0.3 * rng.random_range(-1.0..1.0));
    if a.determinant() < 0.0 {
        a.swap_rows(0, 1);
    }
    let rho = sl3c::rho0().pullback(&a)?;
    let data = sl3c::analyze_definite(&rho, Orientation::Positive)?;
    let mut table = Table::new(&["direction", "vol_rel_error", "rho_tilde_rel_error"]);
    let (mut worst_vol, mut worst_rt) = (0.0f64, 0.0f64);
    for k in 0..50 {
        let d = random_three_form(&mut rng);
        let plus = sl3c::analyze_definite(&(&rho + &d.scale(eps)), Orientation::Positive)?;
        let minus = sl3c::analyze_definite(&(&rho - &d.scale(eps)), Orientation::Positive)?;
        let fd_vol = (&plus.vol - &minus.vol).scale(0.5 / eps);
        let fd_rt = (&plus.rho_tilde - &minus.rho_tilde).scale(0.5 / eps);
        let an_vol = sl3c::delta_vol(&data, &d)?;
        let an_rt = sl3c::delta_rho_tilde(&data, &d)?;
        let ev = fd_vol.distance(&an_vol) / an_vol.norm();
        let er = fd_rt.distance(&an_rt) / an_rt.norm();
        worst_vol = worst_vol.max(ev);
        worst_rt = worst_rt.max(er);
        table.push(vec![k as f64, ev, er]);
    }
    out.check(Check::below("delta_vol_max_rel_error", worst_vol, 1e-5));
    out.check(Check::below("delta_rho_tilde_max_rel_error", worst_rt, 1e-5));
    out.value("fd_step", eps);
    out.tables.insert("directions".into(), table);
    Ok(out)
}

/// Offset of the sample planes inside the graph patches.
const PATCH_BASE: [f64; 6] = [0.0, 0.0, 0.05, -0.1, 0.15, 0.07];

fn sphere_patch(upper: bool, fd: FdConfig) -> Result<Hypersurface> {
    let (map, co) = hs::sphere_graph_patch(1.0, upper, 0.4);
    Ok(Hypersurface::induce(hs::flat_ambient(2.0), map, co)?.assume_flat_ambient().with_fd(fd))
}

fn patch_points(h: &Hypersurface, n: usize) -> Vec<Vec<f64>> {
    h.chart().slice_points([0, 1], n, &PATCH_BASE)
}

fn s6_curvature_identities(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let n = s.grid_or(33);
    let h = s.fd_or(1e-3);
    let tol = 1e-3;
    let mut table = Table::new(&["upper", "z1", "z2", "mu", "id1_residual", "id2_residual"]);
    for (upper, label) in [(true, "upper"), (false, "lower")] {
        let coarse_h = sphere_patch(upper, FdConfig::central(h))?;
        let pts = patch_points(&coarse_h, n);
        let coarse = coarse_h.verify_curvature_identities(&pts)?;
        let fine = sphere_patch(upper, FdConfig::central(0.5 * h))?.verify_curvature_identities(&pts)?;
        out.check(Check::below(&format!("{label}_id1_residual"), coarse.id1_residual, tol));
        out.check(Check::below(&format!("{label}_id2_residual"), coarse.id2_residual, tol));
        let ratio = coarse.id1_residual.max(coarse.id2_residual) / fine.id1_residual.max(fine.id2_residual);
        out.check(Check::near(&format!("{label}_halving_ratio_minus_4"), ratio, 4.0, 0.5));
        out.value(&format!("{label}_halving_ratio"), ratio);
        for r in &coarse.rows {
            table.push(vec![upper as u8 as f64, r.point[0], r.point[1], r.mu, r.id1_residual, r.id2_residual]);
        }
    }
    out.value("grid", n as f64);
    out.value("fd_step", h);
    out.tables.insert("points".into(), table);
    Ok(out)
}

fn angular_samples(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut p: Vec<f64> = (0..5).map(|_| rng.random_range(0.2..PI - 0.2)).collect();
            p.push(rng.random_range(0.0..2.0 * PI));
            p
        })
        .collect()
}

const SQUASHED: [f64; 7] = [2.0, 2.0, 1.0, 1.0, 0.5, 0.5, 1.0];

fn ellipsoid(axes: [f64; 7], samples: &[Vec<f64>], fd: FdConfig) -> Result<Hypersurface> {
    let map = hs::hyperspherical_map(axes, [5, 5, 5, 5, 5, 4]);
    let co = hs::outward_co_orientation(&map, &samples[0])?;
    Ok(Hypersurface::induce_on(hs::flat_ambient(3.0), map, co, samples)?.assume_flat_ambient().with_fd(fd))
}

fn s6_mean_curvature_bound(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let fd = FdConfig::central(s.fd_or(1e-3));
    let n = s.grid_or(9);
    let mut table = Table::new(&["upper", "z1", "z2", "mu", "det22", "slack"]);
    let (mut mu_dev, mut det_dev, mut slack_dev) = (0.0f64, 0.0f64, 0.0f64);
    for upper in [true, false] {
        let h = sphere_patch(upper, fd)?;
        let r = h.verify_mean_curvature_bound(&patch_points(&h, n))?;
        for row in &r.rows {
            mu_dev = mu_dev.max((row.mu - 6.0).abs());
            det_dev = det_dev.max((row.det22 - 64.0).abs());
            slack_dev = slack_dev.max((row.mu - 1.5 * row.det22.cbrt()).abs());
            table.push(vec![upper as u8 as f64, row.point[0], row.point[1], row.mu, row.det22, row.slack]);
        }
    }
    out.check(Check::below("sphere_mu_deviation", mu_dev, 1e-3));
    out.check(Check::below("sphere_det22_deviation", det_dev, 0.5));
    out.check(Check::below("sphere_slack", slack_dev, 1e-3));
    let samples = angular_samples(150, &mut rng(s, 4));
    let squashed = ellipsoid(SQUASHED, &samples, fd)?.verify_mean_curvature_bound(&samples)?;
    out.check(Check::above("ellipsoid_min_slack", squashed.min_slack, 0.05));
    out.tables.insert("sphere".into(), table);
    Ok(out)
}

/// Bulk and boundary volume on a shared angular grid, with `m` sampled at `samples`.
fn volume_bound_for(axes: [f64; 7], nr: usize, samples: &[Vec<f64>], fd: FdConfig) -> Result<hs::VolumeBound> {
    let ang = [5, 5, 5, 5, 5, 4];
    let amb = hs::flat_ambient(3.0);
    let bulk = hs::bulk_volume(&amb, &hs::polar_ball_map(axes, [nr, ang[0], ang[1], ang[2], ang[3], ang[4], ang[5]]), Orientation::Positive)?;
    let boundary = hs::induced_volume(&amb, &hs::hyperspherical_map(axes, ang))?;
    let m = ellipsoid(axes, samples, fd)?.min_det_cuberoot(samples)?;
    hs::volume_bound(bulk, boundary, m)
}

fn ball_volume_bound(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let nr = s.grid_or(33);
    let fd = FdConfig::central(s.fd_or(1e-3));
    let samples = angular_samples(40, &mut rng(s, 5));
    let ball = volume_bound_for([1.0; 7], nr, &samples, fd)?;
    out.check(Check::near("ball_ratio_minus_1", ball.rhs / ball.lhs, 1.0, 0.01));
    let ell = volume_bound_for(SQUASHED, nr, &samples, fd)?;
    out.check(Check::above("ellipsoid_slack", ell.slack, 0.0));
    for (k, v) in [("ball", ball), ("ellipsoid", ell)] {
        out.value(&format!("{k}_lhs"), v.lhs);
        out.value(&format!("{k}_rhs"), v.rhs);
        out.value(&format!("{k}_slack"), v.slack);
    }
    out.value("ball_exact_volume", 16.0 * PI.powi(3) / 105.0);
    Ok(out)
}

/// Left-invariant coframe of SU(2) in Euler angles plus an exact perturbation
/// `t d(g dy_i)` of each `σ_i`.
pub fn su2_sigmas(t: f64) -> [FormField; 3] {
    let chart = Chart::new(vec![0.6, -1.0, -1.0], vec![2.4, 1.0, 1.0], vec![3, 3, 3]).expect("valid chart");
    std::array::from_fn(|i| {
        FormField::new(chart.clone(), 2, move |y| {
            let (th, ps) = (y[0], y[2]);
            let e = [
                KForm::one_form(&[ps.sin(), -ps.cos() * th.sin(), 0.0]),
                KForm::one_form(&[ps.cos(), ps.sin() * th.sin(), 0.0]),
                KForm::one_form(&[0.0, th.cos(), 1.0]),
            ];
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let phase = y[j] + 2.0 * y[k];
            let mut dg = [0.0; 3];
            dg[j] = phase.cos() / (i + 1) as f64;
            dg[k] = 2.0 * phase.cos() / (i + 1) as f64;
            let pert = KForm::one_form(&dg).wedge(&KForm::basis(3, &[i]))?;
            e[j].wedge(&e[k])?.try_add(&pert.scale(t))
        })
    })
}

const TORUS_POINTS: [[f64; 6]; 3] = [[1.1, 0.3, -0.4, 0.1, 0.5, 0.9], [1.6, -0.2, 0.25, 0.0, 0.0, 0.0], [0.9, 0.1, 0.05, 0.3, 0.2, 0.1]];

fn surface_target() -> Chart {
    Chart::cube(6, -10.0, 10.0, 2).expect("valid chart")
}

fn unit_s2() -> Result<(SpacelikeImmersion, Vec<Vec<f64>>)> {
    let chart = maximal::sphere_chart(2, 9, 12)?;
    let map = SmoothMap::new(chart.clone(), surface_target(), |th| {
        let mut x = maximal::sphere_point(1.0, th);
        x.extend([0.0; 3]);
        Ok(x)
    });
    let pts: Vec<Vec<f64>> = chart.interior_grid_points(0.5).into_iter().step_by(3).collect();
    Ok((SpacelikeImmersion::new_on(map, &pts)?, pts))
}

/// Largest off-(2,2) fraction of `dρ~` at `points`.
fn off_type(rho: &FormField, orientation: Orientation, points: &[Vec<f64>]) -> Result<f64> {
    let drt = sl3c::rho_tilde_field(rho, orientation).exterior_derivative()?;
    let mut worst = 0.0f64;
    for p in points {
        let data = sl3c::analyze_definite(&rho.eval(p)?, orientation)?;
        worst = worst.max(sl3c::type22_part(&drt.eval(p)?, &data)?.1);
    }
    Ok(worst)
}

fn off_type_corpus(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let tol = 1e-5;
    let fd = FdConfig::richardson(s.fd_or(1e-3));
    let pts: Vec<Vec<f64>> = TORUS_POINTS.iter().map(|p| p.to_vec()).collect();
    for (label, t) in [("torus_su2", 0.0), ("torus_su2_perturbed", 0.05)] {
        let rho = reductions::torus_reduction(su2_sigmas(t))?.with_fd(fd).rho_field()?;
        out.check(Check::below(&format!("{label}_off_type"), off_type(&rho, reductions::TORUS_ORIENTATION, &pts)?, tol));
    }
    let (sphere, s2_pts) = unit_s2()?;
    let lifted: Vec<Vec<f64>> = s2_pts.iter().map(|p| [p.as_slice(), &[0.1, 0.2, 0.3, 0.4]].concat()).collect();
    let rho = reductions::baraglia_rho(&sphere.with_fd(fd))?;
    out.check(Check::below("baraglia_s2_off_type", off_type(&rho, reductions::SURFACE_ORIENTATION, &lifted)?, tol));
    let mut worst = 0.0f64;
    for upper in [true, false] {
        let h = sphere_patch(upper, fd)?;
        for p in patch_points(&h, 5) {
            let data = h.at(&p)?.data;
            worst = worst.max(sl3c::type22_part(&h.d_rho_tilde(&p)?, &data)?.1);
        }
    }
    out.check(Check::below("s6_off_type", worst, tol));
    Ok(out)
}

fn s2_surface_identity(_: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (sigma, pts) = unit_s2()?;
    let r = reductions::surface_curvature_check(&sigma, &pts)?;
    out.check(Check::below("identity_residual", r.residual, 1e-3));
    out.check(Check::below("max_abs_det22", r.max_abs_det22, 1e-8));
    out.value("samples", r.rows.len() as f64);
    Ok(out)
}

fn torus_coframe(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut rng = rng(s, 8);
    let mut roundtrip = 0.0f64;
    for _ in 0..20 {
        let mut e = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if e.determinant() < 0.0 {
            e.swap_rows(0, 1);
        }
        let sigma = reductions::sigma_from_eps(&e);
        let again = reductions::sigma_from_eps(&reductions::solve_eps(&sigma, &[0.0])?);
        for i in 0..3 {
            roundtrip = roundtrip.max(again[i].distance(&sigma[i]));
        }
    }
    out.check(Check::below("sigma_roundtrip", roundtrip, 1e-12));
    let data = reductions::torus_reduction(su2_sigmas(0.05))?;
    let rho = data.rho_field()?;
    let (mut asym, mut closed_form) = (0.0f64, 0.0f64);
    for p in &TORUS_POINTS {
        asym = asym.max(data.inspect(&p[..3])?.asymmetry);
        let intrinsic = sl3c::analyze_definite(&rho.eval(p)?, reductions::TORUS_ORIENTATION)?.rho_tilde;
        closed_form = closed_form.max(intrinsic.distance(&data.rho_tilde_closed_form(p)?));
    }
    out.check(Check::below("s_asymmetry", asym, 1e-8));
    out.check(Check::below("rho_tilde_closed_form_mismatch", closed_form, 1e-8));
    Ok(out)
}

fn unit_box(p: usize, n: usize) -> Result<Arc<Mesh>> {
    Ok(Arc::new(Mesh::uniform(Domain::Box { lo: vec![-1.0; p], hi: vec![1.0; p] }, n)?))
}

fn unit_ball(p: usize, n: usize) -> Result<Arc<Mesh>> {
    Ok(Arc::new(Mesh::uniform(Domain::Ball { dim: p, radius: 1.0 }, n)?))
}

fn solver_options(s: &Settings) -> SolverOptions {
    SolverOptions { tol: s.solver_tol.unwrap_or(maximal::DEFAULT_TOL), ..Default::default() }
}

fn manufactured_2(x: &[f64]) -> Vec<f64> {
    vec![0.3 * (x[0] + 0.5 * x[1]).sin(), 0.2 * x[0] * x[1] + 0.1 * x[1].cos()]
}

fn manufactured_3(x: &[f64]) -> Vec<f64> {
    vec![0.2 * (x[0] - 0.5 * x[2]).sin() + 0.1 * x[1] * x[2], 0.15 * x[0] * x[1] + 0.1 * (x[2] + x[1]).cos()]
}

fn manufactured_errors(s: &Settings, p: usize, grids: &[usize], u: fn(&[f64]) -> Vec<f64>) -> Result<Vec<f64>> {
    grids
        .iter()
        .map(|&n| {
            let mesh = unit_box(p, n)?;
            let pr = MaximalProblem::new(mesh.clone(), 2, u)?.with_source(move |x| maximal::el_operator(&u, x));
            let sol = maximal::solve_maximal(&pr, Init::Harmonic, &solver_options(s))?;
            sol.graph.sup_distance(&SpacelikeGraph::from_fn(mesh, 2, u)?)
        })
        .collect()
}

fn maximal_solver(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let opts = solver_options(s);
    // Affine data: the discrete solution is the affine map itself.
    let affine = |x: &[f64]| vec![0.3 * x[0] - 0.2 * x[1], 0.1 * x[0] + 0.4 * x[1]];
    let mesh = unit_box(2, 17)?;
    let sol = maximal::solve_maximal(&MaximalProblem::new(mesh.clone(), 2, affine)?, Init::Harmonic, &opts)?;
    out.check(Check::below("affine_sup_error", sol.graph.sup_distance(&SpacelikeGraph::from_fn(mesh, 2, affine)?)?, 1e-10));

    let mut table = Table::new(&["p", "n", "sup_error"]);
    for (p, grids, u) in [(2usize, [17usize, 33, 65], manufactured_2 as fn(&[f64]) -> Vec<f64>), (3, [9, 17, 33], manufactured_3)] {
        let errs = manufactured_errors(s, p, &grids, u)?;
        for (n, e) in grids.iter().zip(&errs) {
            table.push(vec![p as f64, *n as f64, *e]);
        }
        for (k, w) in errs.windows(2).enumerate() {
            let order = (w[0] / w[1]).log2();
            out.check(Check::near(&format!("p{p}_order_{}_minus_2", grids[k + 1]), order, 2.0, 0.3));
            out.value(&format!("p{p}_order_{}", grids[k + 1]), order);
        }
    }
    out.tables.insert("convergence".into(), table);

    let mesh = unit_box(2, 17)?;
    let data = |x: &[f64]| vec![0.1 * (PI * x[0]).sin() * (0.5 * PI * x[1]).cos(), 0.1 * (PI * (x[0] + x[1])).sin()];
    let sol = maximal::solve_maximal(&MaximalProblem::new(mesh.clone(), 2, data)?, Init::Harmonic, &opts)?;
    let v0 = sol.graph.volume()?;
    let interior: Vec<usize> = mesh.interior_nodes().collect();
    let mut rng = rng(s, 9);
    let mut not_lower = 0;
    for _ in 0..100 {
        let mut g = sol.graph.clone();
        for _ in 0..5 {
            let i = interior[rng.random_range(0..interior.len())];
            let a = rng.random_range(0..2);
            g.values_mut()[2 * i + a] += rng.random_range(-1e-3..1e-3);
        }
        if g.volume()? >= v0 {
            not_lower += 1;
        }
    }
    out.check(Check::below("perturbations_not_decreasing_volume", not_lower as f64, 0.5));
    Ok(out)
}

fn b3_maximal_volume(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let n = s.grid_or(33);
    let g = SpacelikeGraph::from_fn(unit_ball(3, n)?, 3, |_| vec![0.0; 3])?;
    let sig = maximal::ball_boundary(3, 3, 1.0, |_| vec![0.0; 3], 33, 64)?;
    let pts: Vec<_> = sig.chart().interior_grid_points(0.3).into_iter().step_by(7).collect();
    let r = maximal::maximal_volume_bound(&g, &sig, &pts)?;
    let exact = 4.0 * PI / 3.0;
    out.check(Check::near("lhs_relative_error", r.lhs / exact, 1.0, 0.01));
    out.check(Check::near("rhs_relative_error", r.rhs / exact, 1.0, 0.01));
    out.value("lhs", r.lhs);
    out.value("rhs", r.rhs);
    out.value("slack", r.slack);
    Ok(out)
}

fn baraglia_torsion(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mesh = unit_box(3, s.grid_or(17))?;
    let f = |x: &[f64]| vec![0.1 * (x[0] + x[1]).sin(), 0.1 * x[1] * x[2], 0.05 * (x[2] - x[0]).cos()];
    let pr = MaximalProblem::new(mesh.clone(), 3, f)?;
    let sol = maximal::solve_maximal(&pr, Init::Harmonic, &solver_options(s))?;
    let pts = vec![vec![0.1, -0.2, 0.15], vec![-0.3, 0.25, 0.0]];
    let solved = reductions::baraglia_torsion(&maximal::graph_immersion(&sol.graph, 5)?, &pts)?;
    let mut bent = sol.graph.clone();
    for i in 0..mesh.num_nodes() {
        let x = mesh.node(i);
        bent.values_mut()[3 * i] += 0.05 * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]) * (1.0 - x[2] * x[2]);
    }
    let perturbed = reductions::baraglia_torsion(&maximal::graph_immersion(&bent, 5)?, &pts)?;
    let t_solved = solved.d_phi.max(solved.d_star_phi);
    let t_bent = perturbed.d_phi.max(perturbed.d_star_phi);
    out.check(Check::below("solved_torsion", t_solved, 1e-3));
    out.check(Check::above("perturbed_to_solved_ratio", t_bent / t_solved, 10.0));
    out.value("perturbed_torsion", t_bent);
    Ok(out)
}

fn cylinder_product(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let opts = solver_options(s);
    let mesh = unit_ball(2, s.grid_or(17))?;
    let data: [fn(&[f64]) -> Vec<f64>; 2] = [
        |x| vec![0.2 * x[0] * x[1], 0.1 * (3.0 * x[1]).sin()],
        |x| vec![0.15 * (2.0 * x[0]).cos() * x[1], -0.1 * x[0] * x[0] + 0.05 * x[1]],
    ];
    for (k, f) in data.into_iter().enumerate() {
        let sol = maximal::solve_maximal(&MaximalProblem::new(mesh.clone(), 2, f)?, Init::Harmonic, &opts)?;
        let (r, _) = maximal::cylinder_experiment(&sol.graph, &sol.graph, 1.0, 9, &opts)?;
        out.check(Check::below(&format!("data{}_product_deviation", k + 1), r.product_deviation, 10.0 * opts.tol));
        out.value(&format!("data{}_residual", k + 1), r.residual);
    }
    Ok(out)
}

fn mollified_jump(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let field = constructions::flat_torus_jump(1.5, 0.1, 2)?;
    let eps = 0.15;
    let moll = constructions::mollify_closed(&field, eps)?;
    let points = |ts: &[f64]| -> Vec<Vec<f64>> {
        let ys = [[0.3, 1.0, 2.0, 0.5, 0.1, 4.0], [2.0, 0.2, 0.3, 5.0, 1.0, 0.0], [4.5, 3.0, 1.0, 2.5, 6.0, 3.3]];
        ts.iter().flat_map(|&t| ys.iter().map(move |y| [y.as_slice(), &[t]].concat())).collect()
    };
    let nt = s.grid_or(11);
    let inside: Vec<f64> = (0..nt).map(|i| -0.29 + 0.58 * i as f64 / (nt - 1) as f64).collect();
    let report = moll.check(&points(&inside))?;
    out.check(Check::below("closedness", report.closedness(), 1e-8));
    out.check(Check::above("positivity_margin", report.positivity_margin, 0.0));
    let outside = points(&[-0.95, -0.6, -0.31, 0.31, 0.6, 0.95]);
    let mut leak = 0.0f64;
    for p in &outside {
        leak = leak.max(moll.phi_at(p)?.distance(&field.phi_at(p)?));
    }
    out.check(Check::below("deviation_outside_collar", leak, 1e-15));
    out.value("epsilon", eps);
    out.value("taming_margin", report.taming_margin);
    Ok(out)
}

fn phi_eps_family(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (nr, nt) = (s.grid_or(17), s.grid_or(17).div_ceil(2));
    let found = constructions::admissible_search(&[1.0, 0.5, 0.25], &[1e-1, 1e-2, 1e-3, 1e-4], 0.0, nr, nt)?;
    match found {
        Some(r) => {
            let PhiEps { kappa, eps, .. } = r.params;
            out.check(Check::above("admissible_min_margin", r.min_margin, 0.0));
            out.check(Check::below("boundary_mismatch", r.boundary_mismatch, 1e-15));
            out.check(Check::below("outside_mismatch", r.outside_mismatch, 1e-15));
            out.value("kappa", kappa);
            out.value("epsilon", eps);
            out.value("closedness", r.closedness);
            let degenerate = constructions::phi_eps_family(kappa, 0.0, 0.0, nr, nt)?;
            out.check(Check::below("zero_epsilon_margin_at_origin", degenerate.margin_at_origin.abs(), 1e-10));
        }
        None => out.check(Check::holds("admissible_pair_found", false)),
    }
    Ok(out)
}

fn taming_threshold(_: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let (path, big) = constructions::constant_model_path(-1.0, 2)?;
    let r = constructions::taming_threshold(&path, &big, &path.sample_points(0.0, 1.0, 5))?;
    out.check(Check::near("a_star_minus_1", r.a_star, 1.0, 1e-6));
    out.check(Check::holds("passes_above_threshold", r.passes_above));
    out.check(Check::holds("fails_below_threshold", r.fails_below == Some(true)));
    let cob = constructions::assemble_cobordism(&path, &big, 2.0 * r.a_star)?;
    let report = cob.check(&path.sample_points(0.1, 0.9, 3))?;
    out.check(Check::below("cobordism_flow_residual", report.flow_residual, 1e-5));
    out.check(Check::above("cobordism_positivity_margin", report.positivity_margin, 0.0));
    out.value("a_star", r.a_star);
    Ok(out)
}

fn determinism(s: &Settings) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut table = Table::new(&["builtin", "identical"]);
    let mut mismatches = 0;
    for (k, b) in BUILTINS.iter().enumerate().filter(|(_, b)| b.name != "determinism") {
        let first = super::run_builtin_json(b.name, s)?;
        let same = first == super::run_builtin_json(b.name, s)?;
        mismatches += !same as usize;
        table.push(vec![k as f64, same as u8 as f64]);
    }
    out.check(Check::below("mismatched_reports", mismatches as f64, 0.5));
    out.tables.insert("reruns".into(), table);
    Ok(out)
}
