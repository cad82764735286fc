//! Explicit closed G2-structures on collars `N × I`, written `φ = ρ_t + ω_t ∧ dt`.
//!
//! Three constructions are provided:
//! - smoothing of a glued collar whose `ω_t` jumps, by averaging pullbacks
//!   along a family of time reparametrizations;
//! - the family `Φ_ε = π*φ0 + ε d(χ η dt)` on `U_κ = {|z| ≤ κ, 0 ≤ t ≤ 1}`;
//! - the taming threshold `A*` making `ω~_t + A Ω` positive along a path `ρ_t`.
//!
//! The module also provides the Stokes obstruction `∫ dρ~ ∧ Ω` to taming forms.

use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::basis::indices;
use crate::exterior::{Chart, FdConfig, FormField, KForm, Orientation};
use crate::g2;
use crate::reductions;
use crate::sl3c;

/// `(y, t) -> form on N`.
pub type SliceFn = dyn Fn(&[f64], f64) -> Result<KForm> + Send + Sync;

/// Gauss-Legendre order used on each smooth piece of the time average.
const QUAD_ORDER: usize = 24;

/// Normalization of the kernel `(1 - s²)^4` on `[-1, 1]`.
const KERNEL_MASS: f64 = 256.0 / 315.0;

fn gauss_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(QUAD_ORDER).expect("nonzero")).as_node_weight_pairs().to_vec()
    })
}

fn kernel(s: f64) -> f64 {
    (1.0 - s * s).powi(4) / KERNEL_MASS
}

/// `C^∞` step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, slope at most 2.
pub fn smooth_step(x: f64) -> f64 {
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        f(x) / (f(x) + f(1.0 - x))
    }
}

fn smooth_step_derivative(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let (a, b) = ((-1.0 / x).exp(), (-1.0 / (1.0 - x)).exp());
    let (da, db) = (a / (x * x), -b / ((1.0 - x) * (1.0 - x)));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Collar chart `N × [t0, t1]` with `t` as the last axis.
fn collar_chart(base: &Chart, t_range: (f64, f64), nt: usize) -> Result<Chart> {
    let mut lo = base.lo().to_vec();
    let mut hi = base.hi().to_vec();
    let mut grid = base.grid().to_vec();
    lo.push(t_range.0);
    hi.push(t_range.1);
    grid.push(nt.max(2));
    let periodic: Vec<usize> = (0..base.dim()).filter(|&i| base.periodic()[i]).collect();
    Ok(Chart::new(lo, hi, grid)?.with_periodic(&periodic).with_orientation(base.orientation()))
}

/// `φ = ρ_t + ω_t ∧ dt` on `N × [t0, t1]` with `N` a 6-chart.
#[derive(Clone)]
pub struct CollarField {
    base: Chart,
    t_range: (f64, f64),
    rho: Arc<SliceFn>,
    omega: Arc<SliceFn>,
    jump: Option<f64>,
    fd: FdConfig,
}

impl std::fmt::Debug for CollarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CollarField")
            .field("base", &self.base)
            .field("t_range", &self.t_range)
            .field("jump", &self.jump)
            .finish()
    }
}

/// Closedness and positivity of a collar at sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarReport {
    /// Max of `|∂_t ρ_t - d_N ω_t|`.
    pub flow_residual: f64,
    /// Max of `|d_N ρ_t|`.
    pub spatial_residual: f64,
    /// Smallest eigenvalue of the positivity form of `φ`.
    pub positivity_margin: f64,
    /// Smallest taming margin of `ω_t` for the structure of `ρ_t`.
    pub taming_margin: f64,
    pub worst_point: Vec<f64>,
}

impl CollarReport {
    pub fn closedness(&self) -> f64 {
        self.flow_residual.max(self.spatial_residual)
    }
}

impl CollarField {
    pub fn new<R, W>(base: Chart, t_range: (f64, f64), rho: R, omega: W) -> Result<Self>
    where
        R: Fn(&[f64], f64) -> Result<KForm> + Send + Sync + 'static,
        W: Fn(&[f64], f64) -> Result<KForm> + Send + Sync + 'static,
    {
        if base.dim() != 6 {
            return Err(Error::DimensionMismatch(base.dim(), 6));
        }
        if !(t_range.0 < t_range.1) {
            return Err(Error::InvalidChart(format!("empty t range {t_range:?}")));
        }
        Ok(CollarField { base, t_range, rho: Arc::new(rho), omega: Arc::new(omega), jump: None, fd: FdConfig::default() })
    }

    /// Marks a discontinuity of `ω_t` at `t`.
    pub fn with_jump(mut self, t: f64) -> Self {
        self.jump = Some(t);
        self
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn base(&self) -> &Chart {
        &self.base
    }

    pub fn t_range(&self) -> (f64, f64) {
        self.t_range
    }

    pub fn jump(&self) -> Option<f64> {
        self.jump
    }

    pub fn orientation(&self) -> Orientation {
        self.base.orientation()
    }

    pub fn rho_at(&self, y: &[f64], t: f64) -> Result<KForm> {
        (self.rho)(y, t)
    }

    pub fn omega_at(&self, y: &[f64], t: f64) -> Result<KForm> {
        (self.omega)(y, t)
    }

    /// `φ` at `p = (y, t)`.
    pub fn phi_at(&self, p: &[f64]) -> Result<KForm> {
        if p.len() != 7 {
            return Err(Error::DimensionMismatch(p.len(), 7));
        }
        g2::assemble(&self.omega_at(&p[..6], p[6])?, &self.rho_at(&p[..6], p[6])?)
    }

    /// `φ` as a field on the 7-dimensional collar chart.
    pub fn phi_field(&self) -> Result<FormField> {
        let chart = collar_chart(&self.base, self.t_range, 5)?;
        let me = self.clone();
        Ok(FormField::new(chart, 3, move |p| me.phi_at(p)).with_fd(self.fd))
    }

    /// Base grid points times `nt` equispaced times in `[a, b]`.
    pub fn sample_points(&self, a: f64, b: f64, nt: usize) -> Vec<Vec<f64>> {
        let ts: Vec<f64> =
            if nt < 2 { vec![0.5 * (a + b)] } else { (0..nt).map(|i| a + (b - a) * i as f64 / (nt - 1) as f64).collect() };
        let base = self.base.grid_points();
        ts.iter()
            .flat_map(|&t| {
                base.iter().map(move |y| {
                    let mut p = y.clone();
                    p.push(t);
                    p
                })
            })
            .collect()
    }

    /// Closedness and positivity at `points`. Points straddling the jump
    /// within the finite-difference reach give meaningless closedness values.
    pub fn check(&self, points: &[Vec<f64>]) -> Result<CollarReport> {
        let field = self.phi_field()?;
        let orientation = self.orientation();
        let rows: Vec<(f64, f64, f64, f64)> = points
            .par_iter()
            .map(|p| {
                let dphi = field.d_at(p)?;
                let (mut flow, mut spatial) = (0.0f64, 0.0f64);
                for (mask, c) in dphi.terms() {
                    if mask & (1 << g2::T) != 0 {
                        flow = flow.max(c.abs());
                    } else {
                        spatial = spatial.max(c.abs());
                    }
                }
                let phi = self.phi_at(p)?;
                let positivity = g2::positivity_margin(&phi, orientation)?;
                let taming = match sl3c::analyze_definite(&self.rho_at(&p[..6], p[6])?, orientation) {
                    Ok(data) => sl3c::taming_check(&self.omega_at(&p[..6], p[6])?, &data)?.margin,
                    Err(Error::NotDefinite { .. } | Error::Degenerate { .. }) => f64::NEG_INFINITY,
                    Err(e) => return Err(e),
                };
                Ok((flow, spatial, positivity, taming))
            })
            .collect::<Result<_>>()?;
        let mut report = CollarReport {
            flow_residual: 0.0,
            spatial_residual: 0.0,
            positivity_margin: f64::INFINITY,
            taming_margin: f64::INFINITY,
            worst_point: Vec::new(),
        };
        for (p, &(flow, spatial, positivity, taming)) in points.iter().zip(&rows) {
            report.flow_residual = report.flow_residual.max(flow);
            report.spatial_residual = report.spatial_residual.max(spatial);
            report.taming_margin = report.taming_margin.min(taming);
            if positivity < report.positivity_margin {
                report.positivity_margin = positivity;
                report.worst_point = p.clone();
            }
        }
        Ok(report)
    }

    fn min_positivity(&self, points: &[Vec<f64>]) -> Result<f64> {
        let orientation = self.orientation();
        let m: Vec<f64> =
            points.par_iter().map(|p| g2::positivity_margin(&self.phi_at(p)?, orientation)).collect::<Result<_>>()?;
        Ok(m.into_iter().fold(f64::INFINITY, f64::min))
    }
}

/// Time reparametrization family `τ_s(t) = t - h b(t) s`, `s ∈ [-1, 1]`, used
/// by [`mollify_closed`]. `b = 1` within `ε/2` of the jump and vanishes beyond
/// `2ε`, so `dτ/dt = 1 - h b'(t) s` stays above `1/3`.
#[derive(Clone, Copy, Debug)]
struct Reparam {
    jump: f64,
    eps: f64,
}

impl Reparam {
    fn half_width(&self) -> f64 {
        0.5 * self.eps
    }

    fn b(&self, t: f64) -> (f64, f64) {
        let d = t - self.jump;
        let x = (d.abs() - 0.5 * self.eps) / (1.5 * self.eps);
        let b = 1.0 - smooth_step(x);
        let db = -smooth_step_derivative(x) / (1.5 * self.eps) * d.signum();
        (b, db)
    }

    /// Quadrature `(τ, weight for ρ, weight for ω)` for the average at `t`;
    /// empty when `t` is outside the smoothing region. `ω ∧ dt` pulls back
    /// with the extra factor `dτ/dt`.
    fn rule(&self, t: f64) -> Vec<(f64, f64, f64)> {
        let (b, db) = self.b(t);
        if b == 0.0 {
            return Vec::new();
        }
        let h = self.half_width();
        let reach = h * b;
        let s_jump = (t - self.jump) / reach;
        let pieces: Vec<(f64, f64)> =
            if s_jump > -1.0 && s_jump < 1.0 { vec![(-1.0, s_jump), (s_jump, 1.0)] } else { vec![(-1.0, 1.0)] };
        let mut out = Vec::with_capacity(pieces.len() * QUAD_ORDER);
        for (a, c) in pieces {
            let (mid, half) = (0.5 * (a + c), 0.5 * (c - a));
            for &(x, w) in gauss_nodes() {
                let s = mid + half * x;
                let wk = half * w * kernel(s);
                out.push((t - reach * s, wk, wk * (1.0 - h * db * s)));
            }
        }
        out
    }
}

fn average(f: &SliceFn, rule: &[(f64, f64, f64)], use_omega_weight: bool, y: &[f64]) -> Result<KForm> {
    let mut acc: Option<KForm> = None;
    for &(tau, w_rho, w_omega) in rule {
        let w = if use_omega_weight { w_omega } else { w_rho };
        let v = f(y, tau)?.scale(w);
        acc = Some(match acc {
            None => v,
            Some(a) => a.try_add(&v)?,
        });
    }
    acc.ok_or_else(|| Error::Numerical("empty quadrature rule".into()))
}

/// Smooths a collar whose `ω_t` jumps at `field.jump()`.
///
/// The output is `∫ Ψ_s* φ k(s) ds` for `Ψ_s(y, t) = (y, t - h b(t) s)`, a
/// positively weighted average of pullbacks, hence closed whenever the input
/// is. It agrees with the input outside `|t - jump| < 2ε`. Positivity is
/// checked on the base grid times 17 times across that window; on failure the
/// error brackets `ε` by successive halving.
pub fn mollify_closed(field: &CollarField, epsilon: f64) -> Result<CollarField> {
    let jump = field.jump.ok_or_else(|| Error::Hypothesis("collar has no jump to smooth".into()))?;
    let out = mollify_unchecked(field, jump, epsilon)?;
    let margin = out.min_positivity(&out.sample_points(jump - 2.0 * epsilon, jump + 2.0 * epsilon, 17))?;
    if margin > 0.0 {
        return Ok(out);
    }
    let mut failing = epsilon;
    let mut passing = None;
    let mut e = epsilon;
    for _ in 0..6 {
        e *= 0.5;
        let trial = mollify_unchecked(field, jump, e)?;
        if trial.min_positivity(&trial.sample_points(jump - 2.0 * e, jump + 2.0 * e, 17))? > 0.0 {
            passing = Some(e);
            break;
        }
        failing = e;
    }
    Err(Error::PositivityLost { failing_epsilon: failing, passing_epsilon: passing, margin })
}

fn mollify_unchecked(field: &CollarField, jump: f64, epsilon: f64) -> Result<CollarField> {
    if !(epsilon > 0.0) {
        return Err(Error::Hypothesis(format!("epsilon must be positive, got {epsilon}")));
    }
    let (t0, t1) = field.t_range;
    if jump - 2.5 * epsilon < t0 || jump + 2.5 * epsilon > t1 {
        return Err(Error::Hypothesis(format!("collar {:?} too short for epsilon {epsilon} at {jump}", field.t_range)));
    }
    let r = Reparam { jump, eps: epsilon };
    let (rho, omega) = (field.rho.clone(), field.omega.clone());
    let smoothed_rho = move |y: &[f64], t: f64| {
        let rule = r.rule(t);
        if rule.is_empty() {
            rho(y, t)
        } else {
            average(rho.as_ref(), &rule, false, y)
        }
    };
    let smoothed_omega = move |y: &[f64], t: f64| {
        let rule = r.rule(t);
        if rule.is_empty() {
            omega(y, t)
        } else {
            average(omega.as_ref(), &rule, true, y)
        }
    };
    Ok(CollarField::new(field.base.clone(), field.t_range, smoothed_rho, smoothed_omega)?.with_fd(field.fd))
}

/// A primitive of a constant-coefficient form: `Σ (c_M / m_M) i_X e_M` with
/// `X = Σ_{a ∈ axes} x_a ∂_a` and `m_M` the number of `axes` in `M`. Fails if a
/// nonzero term avoids `axes`.
pub fn radial_primitive(gamma: &KForm, axes: &[usize], x: &[f64]) -> Result<KForm> {
    let n = gamma.dim();
    if gamma.degree() == 0 {
        return Err(Error::ZeroDegreeContraction);
    }
    let axis_mask: u8 = axes.iter().fold(0, |m, &a| m | (1 << a));
    let mut v = vec![0.0; n];
    for &a in axes {
        v[a] = x[a];
    }
    let mut out = KForm::zero(n, gamma.degree() - 1);
    for (mask, c) in gamma.terms() {
        if c == 0.0 {
            continue;
        }
        let m = (mask & axis_mask).count_ones();
        if m == 0 {
            return Err(Error::Numerical(format!("term {mask:#b} has no radial primitive along {axes:?}")));
        }
        let idx: Vec<usize> = indices(mask).collect();
        let term = KForm::basis(n, &idx).contract(&v)?.scale(c / m as f64);
        out = out.try_add(&term)?;
    }
    Ok(out)
}

/// The family `Φ_ε` on `U_κ` with coordinates `(x1, y1, x2, y2, x3, y3, t)`.
///
/// `Φ = π_λ* φ0` for `π_λ(z, t) = (z, (|z|² + λ) t)`, so
/// `Φ = ρ0 + t d|z|² ∧ ω0 + (|z|² + λ) ω0 ∧ dt`, and
/// `Φ_ε = Φ + ε d(χ η dt)` with `η = ½ Σ (x_i dy_i - y_i dx_i)` and `χ(|z|)`
/// equal to 1 below `κ/4` and 0 above `κ/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiEps {
    pub kappa: f64,
    pub eps: f64,
    pub lambda: f64,
}

impl PhiEps {
    pub fn new(kappa: f64, eps: f64, lambda: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(eps >= 0.0) || !(lambda >= 0.0) {
            return Err(Error::Hypothesis(format!("need kappa > 0, eps >= 0, lambda >= 0; got {kappa}, {eps}, {lambda}")));
        }
        Ok(PhiEps { kappa, eps, lambda })
    }

    /// `(χ, χ'(r))`.
    pub fn cutoff(&self, r: f64) -> (f64, f64) {
        let q = 0.25 * self.kappa;
        let x = (r - q) / q;
        (1.0 - smooth_step(x), -smooth_step_derivative(x) / q)
    }

    /// The `t`-slice 3-form `ρ0 + t d|z|² ∧ ω0`.
    pub fn rho(&self, p: &[f64]) -> Result<KForm> {
        let dz2: Vec<f64> = p[..6].iter().map(|x| 2.0 * x).collect();
        sl3c::rho0().try_add(&KForm::one_form(&dz2).wedge(&sl3c::omega0())?.scale(p[6]))
    }

    /// The coefficient 2-form of `dt`.
    pub fn omega(&self, p: &[f64]) -> Result<KForm> {
        let z2: f64 = p[..6].iter().map(|x| x * x).sum();
        let r = z2.sqrt();
        let (chi, dchi) = self.cutoff(r);
        let mut w = sl3c::omega0().scale(z2 + self.lambda + self.eps * chi);
        if self.eps != 0.0 && dchi != 0.0 && r > 0.0 {
            let dr: Vec<f64> = p[..6].iter().map(|x| dchi * x / r).collect();
            w = w.try_add(&KForm::one_form(&dr).wedge(&eta(p)?)?.scale(self.eps))?;
        }
        Ok(w)
    }

    pub fn phi(&self, p: &[f64]) -> Result<KForm> {
        if p.len() != 7 {
            return Err(Error::DimensionMismatch(p.len(), 7));
        }
        g2::assemble(&self.omega(p)?, &self.rho(p)?)
    }

    /// `Φ_ε` as a field on `[-κ, κ]^6 × [0, 1]`.
    pub fn field(&self) -> Result<FormField> {
        let mut lo = vec![-self.kappa; 6];
        let mut hi = vec![self.kappa; 6];
        lo.push(0.0);
        hi.push(1.0);
        let chart = Chart::new(lo, hi, vec![3; 7])?;
        let me = *self;
        let fd = FdConfig::richardson(1e-3 * self.kappa.min(1.0));
        Ok(FormField::new(chart, 3, move |p| me.phi(p)).with_fd(fd))
    }

    pub fn margin(&self, p: &[f64]) -> Result<f64> {
        g2::positivity_margin(&self.phi(p)?, Orientation::Positive)
    }

    /// Restriction to the slice `{t = t0}`: drops every `dt` term.
    pub fn boundary_restriction(&self, y: &[f64], t0: f64) -> Result<KForm> {
        let mut p = y.to_vec();
        p.push(t0);
        let phi = self.phi(&p)?;
        let mut out = KForm::zero(6, 3);
        for (mask, c) in phi.terms() {
            if mask & (1 << g2::T) == 0 && c != 0.0 {
                let idx: Vec<usize> = indices(mask).collect();
                out.add_term(c, &idx);
            }
        }
        Ok(out)
    }
}

/// `η = ½ Σ (x_i dy_i - y_i dx_i)`, a primitive of `ω0`.
fn eta(p: &[f64]) -> Result<KForm> {
    let mut v = [0.0; 6];
    for i in 0..3 {
        v[2 * i] = -0.5 * p[2 * i + 1];
        v[2 * i + 1] = 0.5 * p[2 * i];
    }
    Ok(KForm::one_form(&v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiEpsReport {
    pub params: PhiEps,
    /// Minimum positivity margin over the `(|z|, t)` grid.
    pub min_margin: f64,
    /// `(|z|, t)` of the minimum.
    pub argmin: [f64; 2],
    /// Minimum margin on the locus `z = 0`.
    pub margin_at_origin: f64,
    /// Minimum margin over `z ≠ 0`.
    pub margin_off_origin: f64,
    /// Max `|dΦ_ε|` at interior sample points.
    pub closedness: f64,
    /// Max difference between the `t ∈ {0, 1}` restrictions of `Φ_ε` and `Φ`.
    pub boundary_mismatch: f64,
    /// Max difference between the `t = 0` restriction and `ρ0`.
    pub rho0_mismatch: f64,
    /// Max `|Φ_ε - Φ|` on `|z| ≥ κ/2`.
    pub outside_mismatch: f64,
}

impl PhiEpsReport {
    pub fn admissible(&self) -> bool {
        self.min_margin > 0.0
    }
}

/// Evaluates `Φ_ε` on `U_κ`. Every quantity is invariant under `SU(3)`, which
/// acts transitively on spheres in `C³`, so positivity is scanned on the slice
/// `z = (r, 0, 0)` with an `nr × nt` grid in `(r, t)`.
pub fn phi_eps_family(kappa: f64, eps: f64, lambda: f64, nr: usize, nt: usize) -> Result<PhiEpsReport> {
    let params = PhiEps::new(kappa, eps, lambda)?;
    let base = PhiEps { eps: 0.0, ..params };
    let (nr, nt) = (nr.max(2), nt.max(2));
    let grid: Vec<[f64; 2]> = (0..nr)
        .flat_map(|i| (0..nt).map(move |j| [kappa * i as f64 / (nr - 1) as f64, j as f64 / (nt - 1) as f64]))
        .collect();
    let margins: Vec<f64> = grid
        .par_iter()
        .map(|&[r, t]| params.margin(&[r, 0.0, 0.0, 0.0, 0.0, 0.0, t]))
        .collect::<Result<_>>()?;
    let mut report = PhiEpsReport {
        params,
        min_margin: f64::INFINITY,
        argmin: [0.0; 2],
        margin_at_origin: f64::INFINITY,
        margin_off_origin: f64::INFINITY,
        closedness: 0.0,
        boundary_mismatch: 0.0,
        rho0_mismatch: 0.0,
        outside_mismatch: 0.0,
    };
    for (&[r, t], &m) in grid.iter().zip(&margins) {
        if m < report.min_margin {
            report.min_margin = m;
            report.argmin = [r, t];
        }
        if r == 0.0 {
            report.margin_at_origin = report.margin_at_origin.min(m);
        } else {
            report.margin_off_origin = report.margin_off_origin.min(m);
        }
    }

    let field = params.field()?;
    let dirs = [
        [0.3, -0.2, 0.1, 0.25, -0.15, 0.05],
        [0.1, 0.1, -0.3, 0.2, 0.0, -0.1],
        [-0.05, 0.35, 0.2, -0.1, 0.3, 0.15],
    ];
    let mut interior = Vec::new();
    for d in &dirs {
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        for &frac in &[0.2, 0.35, 0.45, 0.6] {
            for &t in &[0.25, 0.5, 0.75] {
                let mut p: Vec<f64> = d.iter().map(|x| x / norm * frac * kappa).collect();
                p.push(t);
                interior.push(p);
            }
        }
    }
    let residuals: Vec<f64> =
        interior.par_iter().map(|p| Ok(field.d_at(p)?.max_abs())).collect::<Result<_>>()?;
    report.closedness = residuals.into_iter().fold(0.0, f64::max);

    let boundary_base: Vec<Vec<f64>> = interior.iter().map(|p| p[..6].to_vec()).collect();
    for y in &boundary_base {
        for t0 in [0.0, 1.0] {
            let diff = params.boundary_restriction(y, t0)?.distance(&base.boundary_restriction(y, t0)?);
            report.boundary_mismatch = report.boundary_mismatch.max(diff);
        }
        report.rho0_mismatch = report.rho0_mismatch.max(params.boundary_restriction(y, 0.0)?.distance(&sl3c::rho0()));
    }
    for d in &dirs {
        let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        for &frac in &[0.5, 0.75, 1.0] {
            let mut p: Vec<f64> = d.iter().map(|x| x / norm * frac * kappa).collect();
            p.push(0.5);
            report.outside_mismatch = report.outside_mismatch.max(params.phi(&p)?.distance(&base.phi(&p)?));
        }
    }
    Ok(report)
}

/// First `(κ, ε)` in the given orders (typically decreasing) whose `Φ_ε` has
/// strictly positive margin on the scan grid.
pub fn admissible_search(
    kappas: &[f64],
    epsilons: &[f64],
    lambda: f64,
    nr: usize,
    nt: usize,
) -> Result<Option<PhiEpsReport>> {
    for &kappa in kappas {
        for &eps in epsilons {
            let report = phi_eps_family(kappa, eps, lambda, nr, nt)?;
            if report.admissible() {
                return Ok(Some(report));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TamingThreshold {
    pub a_star: f64,
    /// `(t, max over N of the pointwise threshold)`, in sample order of `t`.
    pub curve: Vec<(f64, f64)>,
    /// All samples positive at `A* (1 + 1e-3)` (or at `1e-3` when `A* = 0`).
    pub passes_above: bool,
    /// Some sample fails at `A* (1 - 1e-3)`; `None` when `A* = 0`.
    pub fails_below: Option<bool>,
}

struct ThresholdSample {
    t: f64,
    a: f64,
    t_tilde: DMatrix<f64>,
    t_omega: DMatrix<f64>,
}

/// Smallest `A ≥ 0` for which `ω~_t + A Ω` tames `ρ_t` at every sample point.
///
/// Pointwise, with `T(·)` the Hermitian part in the complex structure of `ρ_t`,
/// the threshold is the largest generalized eigenvalue of `(-T(ω~), T(Ω))`.
pub fn taming_threshold(path: &CollarField, omega_form: &FormField, points: &[Vec<f64>]) -> Result<TamingThreshold> {
    if omega_form.degree() != 2 || omega_form.chart().dim() != 6 {
        return Err(Error::DegreeMismatch { expected: 2, found: omega_form.degree() });
    }
    let orientation = path.orientation();
    let samples: Vec<ThresholdSample> = points
        .par_iter()
        .map(|p| {
            let (y, t) = (&p[..6], p[6]);
            let data = sl3c::analyze_definite(&path.rho_at(y, t)?, orientation)?;
            let i = &data.complex_structure;
            let t_omega = sl3c::taming_matrix(&omega_form.eval(y)?, i);
            let chol = t_omega.clone().cholesky().ok_or_else(|| Error::OmegaNotTaming {
                point: p.clone(),
                margin: SymmetricEigen::new(t_omega.clone()).eigenvalues.min(),
            })?;
            let t_tilde = sl3c::taming_matrix(&path.omega_at(y, t)?, i);
            let l_inv = chol.l().try_inverse().ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
            let m = &l_inv * (-&t_tilde) * l_inv.transpose();
            let a = SymmetricEigen::new((&m + m.transpose()) * 0.5).eigenvalues.max();
            Ok(ThresholdSample { t, a, t_tilde, t_omega })
        })
        .collect::<Result<_>>()?;

    let a_star = samples.iter().map(|s| s.a).fold(0.0, f64::max);
    let mut curve: Vec<(f64, f64)> = Vec::new();
    for s in &samples {
        match curve.iter_mut().find(|(t, _)| *t == s.t) {
            Some(entry) => entry.1 = entry.1.max(s.a),
            None => curve.push((s.t, s.a)),
        }
    }
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let min_margin = |a: f64| {
        samples
            .iter()
            .map(|s| SymmetricEigen::new(&s.t_tilde + &s.t_omega * a).eigenvalues.min())
            .fold(f64::INFINITY, f64::min)
    };
    let above = if a_star > 0.0 { a_star * (1.0 + 1e-3) } else { 1e-3 };
    let passes_above = min_margin(above) > 0.0;
    let fails_below = (a_star > 0.0).then(|| min_margin(a_star * (1.0 - 1e-3)) < 0.0);
    Ok(TamingThreshold { a_star, curve, passes_above, fails_below })
}

/// The collar with `ω_t = ω~_t + A Ω`.
pub fn assemble_cobordism(path: &CollarField, omega_form: &FormField, a: f64) -> Result<CollarField> {
    let inner = path.omega.clone();
    let big = omega_form.clone();
    let omega = move |y: &[f64], t: f64| inner(y, t)?.try_add(&big.eval(y)?.scale(a));
    let rho = path.rho.clone();
    Ok(CollarField::new(path.base.clone(), path.t_range, move |y: &[f64], t: f64| rho(y, t), omega)?.with_fd(path.fd))
}

/// Pointwise data of `dρ~ ∧ Ω` relative to `vol_ρ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    /// `∫ dρ~ ∧ Ω` over the chart.
    pub integral: f64,
    /// Min and max over the grid of `(dρ~ ∧ Ω) / vol_ρ`.
    pub min_density: f64,
    pub max_density: f64,
}

/// `∫ dρ~ ∧ Ω` and its pointwise range, without closedness checks. For a
/// strictly mean-convex `ρ` and a taming `Ω` the density is positive.
pub fn obstruction_report(rho: &FormField, omega_form: &FormField, orientation: Orientation) -> Result<ObstructionReport> {
    if rho.chart().dim() != 6 || rho.degree() != 3 || omega_form.degree() != 2 {
        return Err(Error::DegreeMismatch { expected: 3, found: rho.degree() });
    }
    let d_tilde = sl3c::rho_tilde_field(rho, orientation).with_fd(rho.fd()).exterior_derivative()?;
    let integrand = d_tilde.wedge(omega_form)?;
    let integral = integrand.integrate()?;
    let points = rho.chart().grid_points();
    let dens: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let vol = sl3c::volume_density(&rho.eval(p)?, orientation)?;
            Ok(integrand.eval(p)?.top() / vol)
        })
        .collect::<Result<_>>()?;
    let min_density = dens.iter().copied().fold(f64::INFINITY, f64::min);
    let max_density = dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ObstructionReport { integral, min_density, max_density })
}

/// `∫ dρ~ ∧ Ω` for closed `ρ` and `Ω` on a closed (fully periodic) chart.
/// By Stokes it vanishes, so a strictly mean-convex `ρ` admits no closed
/// taming `Ω`.
pub fn taming_obstruction(rho: &FormField, omega_form: &FormField, orientation: Orientation) -> Result<f64> {
    let points = rho.chart().grid_points();
    for f in [rho, omega_form] {
        let r = f.exterior_derivative()?.max_norm_on(&points)?;
        if r > 1e-6 {
            return Err(Error::NotClosed(r));
        }
    }
    Ok(obstruction_report(rho, omega_form, orientation)?.integral)
}

/// The flat torus `T⁶ = [0, 2π)^6` as a base chart.
pub fn flat_torus(n: usize) -> Result<Chart> {
    Ok(Chart::cube(6, 0.0, 2.0 * std::f64::consts::PI, n)?.with_periodic(&[0, 1, 2, 3, 4, 5]))
}

/// Glued collar over the flat torus on `t ∈ [-1, 1]` with a jump at `t = 0`:
/// `ρ_t = ρ0 + δ|t| cos(x1) dx1 dy2 dy3`,
/// `ω_t = c(t) ω0 + δ sgn(t) sin(x1) dy2 dy3` with `c = 1` for `t < 0` and
/// `c = after` for `t ≥ 0`. Both sides are closed; `ρ_t` is continuous.
pub fn flat_torus_jump(after: f64, delta: f64, n: usize) -> Result<CollarField> {
    let rho = move |y: &[f64], t: f64| {
        sl3c::rho0().try_add(&KForm::basis(6, &[0, 3, 5]).scale(delta * t.abs() * y[0].cos()))
    };
    let omega = move |y: &[f64], t: f64| {
        let (c, s) = if t < 0.0 { (1.0, -1.0) } else { (after, 1.0) };
        sl3c::omega0().scale(c).try_add(&KForm::basis(6, &[3, 5]).scale(delta * s * y[0].sin()))
    };
    Ok(CollarField::new(flat_torus(n)?, (-1.0, 1.0), rho, omega)?.with_jump(0.0))
}

/// The constant path `ρ_t = ρ0` on `[0, 1]` over the flat torus with
/// `ω~_t = c ω0`, and `Ω = ω0`.
pub fn constant_model_path(c: f64, n: usize) -> Result<(CollarField, FormField)> {
    let base = flat_torus(n)?;
    let path = CollarField::new(base.clone(), (0.0, 1.0), |_: &[f64], _| Ok(sl3c::rho0()), move |_: &[f64], _| {
        Ok(sl3c::omega0().scale(c))
    })?;
    Ok((path, FormField::constant(base, sl3c::omega0())))
}

/// Linear interpolation `σ(t) = (1 - t) σ(E_a) + t σ(E_b)` of constant torus
/// reduction data on `[-1, 1]³ × T³`, with `ρ_t = dθ123 - Σ σ_i(t) dθ_i`, the
/// primitive `ω~ = `[`radial_primitive`]`(∂_t ρ)` along the `Y` axes, and
/// `Ω = Σ dθ_i ∧ dy_i`.
pub fn torus_interpolation_path(ea: &Matrix3<f64>, eb: &Matrix3<f64>) -> Result<(CollarField, FormField)> {
    let base = Chart::new(vec![-1.0, -1.0, -1.0, 0.0, 0.0, 0.0], vec![1.0; 6], vec![3, 3, 3, 2, 2, 2])?
        .with_periodic(&[3, 4, 5]);
    let (sa, sb) = (reductions::sigma_from_eps(ea), reductions::sigma_from_eps(eb));
    let rho_of = |sig: &[KForm]| -> Result<KForm> {
        let mut rho = KForm::basis(6, &[3, 4, 5]);
        for (i, s) in sig.iter().enumerate() {
            rho = rho.try_add(&s.embed(6, &[0, 1, 2]).wedge(&KForm::basis(6, &[3 + i]))?.scale(-1.0))?;
        }
        Ok(rho)
    };
    let diff: Vec<KForm> = (0..3).map(|i| sb[i].try_add(&sa[i].scale(-1.0))).collect::<Result<_>>()?;
    let mut drho = rho_of(&diff)?;
    drho = drho.try_add(&KForm::basis(6, &[3, 4, 5]).scale(-1.0))?;
    let rho = move |_: &[f64], t: f64| {
        let sig: Vec<KForm> = (0..3).map(|i| sa[i].scale(1.0 - t).try_add(&sb[i].scale(t))).collect::<Result<_>>()?;
        rho_of(&sig)
    };
    let omega = move |y: &[f64], _: f64| radial_primitive(&drho, &[0, 1, 2], y);
    let mut big = KForm::zero(6, 2);
    for i in 0..3 {
        big.add_term(1.0, &[3 + i, i]);
    }
    let path = CollarField::new(base.clone(), (0.0, 1.0), rho, omega)?;
    Ok((path, FormField::constant(base, big)))
}
