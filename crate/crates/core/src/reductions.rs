//! Torus reductions: 3-forms on `Σ × T⁴` and `Ξ × T⁴` built from spacelike
//! submanifolds of `R^{3,3}`, and the `Y × T³` reduction driven by three closed
//! 2-forms on a 3-manifold.
//!
//! `R^{3,3}` is identified with constant 2-forms on `T⁴` (coordinates `u1..u4`)
//! through the basis `E1 = du12 + du34`, `E2 = du13 - du24`, `E3 = du14 + du23`,
//! `F1 = du12 - du34`, `F2 = du13 + du24`, `F3 = du14 - du23`, for which
//! `a ∧ a = 2 Q(a) du1234` with `Q = diag(+,+,+,-,-,-)`.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{fd_partial, Chart, FdConfig, FormField, KForm, Orientation, SmoothMap};
use crate::g2::{self, TorsionReport};
use crate::sl3c::{self, Class22, Convexity};

/// The quadratic form of `R^{3,3}` in the `(E, F)` basis.
pub const SIGNATURE: [f64; 6] = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];

/// Orientation of the `(s, u)` chart on `Σ × T⁴` used for `ρ~_Σ`; with it
/// `dρ~_Σ = vol_Σ ∧ μ_Σ`.
pub const SURFACE_ORIENTATION: Orientation = Orientation::Positive;

/// Sign of `det(∂1 f, ∂2 f, μ_Σ)`, measured in the orientation of
/// `span(E1, E2, E3)`, at points where `ρ_Σ` is mean-convex (for spacelike `μ_Σ`).
pub const CONVEX_SIDE: f64 = -1.0;

/// Orientation of the `(s, u)` chart on `Ξ × T⁴` for which `φ_Ξ` is positive.
pub const BULK_ORIENTATION: Orientation = Orientation::Positive;

/// Orientation of the `(y, θ)` chart on `Y × T³` for which the intrinsic `ρ~`
/// takes the closed form `-ε1ε2ε3 + Σ εi dθj dθk`.
pub const TORUS_ORIENTATION: Orientation = Orientation::Positive;

const TORUS_TERMS: [[(f64, [usize; 2]); 2]; 6] = [
    [(1.0, [0, 1]), (1.0, [2, 3])],
    [(1.0, [0, 2]), (-1.0, [1, 3])],
    [(1.0, [0, 3]), (1.0, [1, 2])],
    [(1.0, [0, 1]), (-1.0, [2, 3])],
    [(1.0, [0, 2]), (1.0, [1, 3])],
    [(1.0, [0, 3]), (-1.0, [1, 2])],
];

/// `Q(a, b)` on `R^{3,3}`.
pub fn quadratic(a: &[f64], b: &[f64]) -> f64 {
    (0..6).map(|i| SIGNATURE[i] * a[i] * b[i]).sum()
}

/// Constant 2-form on `T⁴` for `v ∈ R^{3,3}`, placed on chart axes
/// `offset..offset + 4` of an `n`-dimensional chart.
pub fn torus_two_form(v: &[f64], n: usize, offset: usize) -> KForm {
    let mut out = KForm::zero(n, 2);
    for (c, terms) in v.iter().zip(TORUS_TERMS.iter()) {
        if *c == 0.0 {
            continue;
        }
        for (s, [a, b]) in terms {
            out.add_term(c * s, &[offset + a, offset + b]);
        }
    }
    out
}

/// A spacelike immersion of a chart into `R^{p,q}` (positive coordinates first).
#[derive(Clone, Debug)]
pub struct SpacelikeImmersion {
    map: SmoothMap,
    p: usize,
    fd: FdConfig,
}

impl SpacelikeImmersion {
    /// Immersion into `R^{3,3}`, checked for spacelikeness on the source grid.
    pub fn new(map: SmoothMap) -> Result<Self> {
        let points = map.source().grid_points();
        Self::new_on(map, &points)
    }

    /// Like [`SpacelikeImmersion::new`], checking only at `points`.
    pub fn new_on(map: SmoothMap, points: &[Vec<f64>]) -> Result<Self> {
        if map.target().dim() != 6 {
            return Err(Error::DimensionMismatch(map.target().dim(), 6));
        }
        Self::in_signature(map, 3, points)
    }

    /// Immersion into `R^{p,q}` with `q = target dim - p`, checked at `points`.
    pub fn in_signature(map: SmoothMap, p: usize, points: &[Vec<f64>]) -> Result<Self> {
        let k = map.source().dim();
        if k == 0 || k > p || map.target().dim() < p {
            return Err(Error::DimensionMismatch(k, p));
        }
        let s = SpacelikeImmersion { map, p, fd: FdConfig::default() };
        points.par_iter().try_for_each(|p| {
            let g = s.induced_metric(p)?;
            let min = SymmetricEigen::new(g).eigenvalues.min();
            if min <= 0.0 {
                return Err(Error::NotSpacelike { point: p.clone(), min_eigenvalue: min });
            }
            Ok(())
        })?;
        Ok(s)
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn chart(&self) -> &Chart {
        self.map.source()
    }

    pub fn dim(&self) -> usize {
        self.map.source().dim()
    }

    /// `(p, q)`.
    pub fn signature(&self) -> (usize, usize) {
        (self.p, self.map.target().dim() - self.p)
    }

    /// `Q(a, b)` in the target.
    pub fn quadratic(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).enumerate().map(|(i, (x, y))| if i < self.p { x * y } else { -x * y }).sum()
    }

    /// `JᵀQJ`.
    pub fn induced_metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let j = self.map.jacobian(p)?;
        let n = self.map.target().dim();
        let q = DMatrix::from_fn(n, n, |r, c| if r != c { 0.0 } else if r < self.p { 1.0 } else { -1.0 });
        Ok(j.transpose() * q * j)
    }

    pub fn area_density(&self, p: &[f64]) -> Result<f64> {
        Ok(self.induced_metric(p)?.determinant().max(0.0).sqrt())
    }

    /// Mean curvature vector `-Δf`, the negative Laplace-Beltrami operator of
    /// the induced metric applied to the embedding. For the unit sphere in a
    /// positive 3-space it is twice the outward radial vector.
    pub fn mean_curvature_vector(&self, p: &[f64]) -> Result<Vec<f64>> {
        let k = self.dim();
        let n = self.map.target().dim();
        let flux = |q: &[f64]| -> Result<Vec<f64>> {
            // √g g^{ab} ∂_b f, flattened over (a, component)
            let j = self.map.jacobian(q)?;
            let g = self.induced_metric(q)?;
            let sq = g.determinant().sqrt();
            let ginv = g.try_inverse().ok_or_else(|| Error::RankDeficient(q.to_vec()))?;
            let v = j * ginv * sq;
            Ok((0..k).flat_map(|a| (0..n).map(move |c| (a, c))).map(|(a, c)| v[(c, a)]).collect())
        };
        let mut lap = vec![0.0; n];
        for a in 0..k {
            let d = fd_partial(self.chart(), self.fd, p, a, &flux)?;
            for c in 0..n {
                lap[c] += d[n * a + c];
            }
        }
        let sq = self.area_density(p)?;
        Ok(lap.into_iter().map(|x| -x / sq).collect())
    }

    /// Sign of the orientation of `(∂1 f, .., ∂k f, extra..)`, `k + extra = p`,
    /// on a maximal positive subspace, measured by projecting to the positive
    /// coordinate axes.
    pub fn positive_orientation(&self, p: &[f64], extra: &[&[f64]]) -> Result<f64> {
        let j = self.map.jacobian(p)?;
        let k = self.dim();
        if k + extra.len() != self.p {
            return Err(Error::DimensionMismatch(k + extra.len(), self.p));
        }
        let m = DMatrix::from_fn(self.p, self.p, |r, c| if c < k { j[(r, c)] } else { extra[c - k][r] });
        Ok(m.determinant().signum())
    }

    /// Whether the mean curvature vector at `p` is spacelike, and the sign of
    /// `det(∂f, μ)` in the orientation of `span(E1, E2, E3)` (0 if timelike or null).
    pub fn mean_curvature_side(&self, p: &[f64]) -> Result<(bool, f64)> {
        let mu = self.mean_curvature_vector(p)?;
        let spacelike = self.quadratic(&mu, &mu) > 0.0;
        let side = if spacelike && self.dim() + 1 == self.p { self.positive_orientation(p, &[&mu])? } else { 0.0 };
        Ok((spacelike, side))
    }
}

fn product_chart(base: &Chart, torus_dim: usize) -> Result<Chart> {
    let k = base.dim();
    let mut lo = base.lo().to_vec();
    let mut hi = base.hi().to_vec();
    let mut grid = base.grid().to_vec();
    lo.extend(std::iter::repeat_n(0.0, torus_dim));
    hi.extend(std::iter::repeat_n(1.0, torus_dim));
    grid.extend(std::iter::repeat_n(2, torus_dim));
    let periodic: Vec<usize> = (k..k + torus_dim).collect();
    Ok(Chart::new(lo, hi, grid)?.with_periodic(&periodic).with_orientation(base.orientation()))
}

/// `-df` on the product chart, with `df = Σ ds_a ∧ (∂_a f as a 2-form on T⁴)`.
fn minus_df(imm: &SpacelikeImmersion, p: &[f64], n: usize) -> Result<KForm> {
    let k = imm.dim();
    let j = imm.map.jacobian(&p[..k])?;
    let mut out = KForm::zero(n, 3);
    for a in 0..k {
        let col: Vec<f64> = j.column(a).iter().copied().collect();
        let mut e = vec![0.0; n];
        e[a] = -1.0;
        out = out.try_add(&KForm::one_form(&e).wedge(&torus_two_form(&col, n, k))?)?;
    }
    Ok(out)
}

/// `ρ_Σ = -df` on `Σ × T⁴`, chart axes `(s1, s2, u1..u4)` with unit-period torus axes.
pub fn baraglia_rho(sigma: &SpacelikeImmersion) -> Result<FormField> {
    if sigma.dim() != 2 || sigma.signature() != (3, 3) {
        return Err(Error::DimensionMismatch(sigma.dim(), 2));
    }
    let chart = product_chart(sigma.chart(), 4)?;
    let imm = sigma.clone();
    Ok(FormField::new(chart, 3, move |p| minus_df(&imm, p, 6)))
}

/// `φ_Ξ = -dF + χ` on `Ξ × T⁴`, with `χ` the induced volume form for the
/// orientation `Ξ` inherits from the positive subspaces of `R^{3,3}`.
pub fn baraglia_phi(xi: &SpacelikeImmersion) -> Result<FormField> {
    if xi.dim() != 3 || xi.signature() != (3, 3) {
        return Err(Error::DimensionMismatch(xi.dim(), 3));
    }
    let chart = product_chart(xi.chart(), 4)?;
    let imm = xi.clone();
    Ok(FormField::new(chart, 3, move |p| {
        let s = &p[..3];
        let chi = imm.positive_orientation(s, &[])? * imm.area_density(s)?;
        minus_df(&imm, p, 7)?.try_add(&KForm::basis(7, &[0, 1, 2]).scale(chi))
    }))
}

/// Torsion of `φ_Ξ` at base points of `Ξ` (lifted to `u = 0`).
pub fn baraglia_torsion(xi: &SpacelikeImmersion, points: &[Vec<f64>]) -> Result<TorsionReport> {
    let phi = baraglia_phi(xi)?;
    let lifted = lift(points, 4);
    g2::torsion_residual(&phi, BULK_ORIENTATION, Some(&lifted))
}

fn lift(points: &[Vec<f64>], torus_dim: usize) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.extend(std::iter::repeat_n(0.0, torus_dim));
            q
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCurvatureRow {
    pub point: Vec<f64>,
    pub residual: f64,
    pub class: Class22,
    pub det22: f64,
    pub mu_spacelike: bool,
    /// Sign of `det(∂f, μ)` in the `E` orientation; 0 unless `μ` is spacelike.
    pub mu_side: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCurvatureReport {
    /// Max of `|dρ~_Σ - vol_Σ ⊗ μ_Σ|` over the samples.
    pub residual: f64,
    pub max_abs_det22: f64,
    /// Whether "mean-convex ⇔ μ spacelike on the [`CONVEX_SIDE`]" held at every sample.
    pub classification_agrees: bool,
    pub rows: Vec<SurfaceCurvatureRow>,
}

/// Compares `dρ~_Σ` with `vol_Σ ∧ μ_Σ` at base points of `Σ`.
pub fn surface_curvature_check(sigma: &SpacelikeImmersion, points: &[Vec<f64>]) -> Result<SurfaceCurvatureReport> {
    let rho = baraglia_rho(sigma)?;
    let drt = sl3c::rho_tilde_field(&rho, SURFACE_ORIENTATION).exterior_derivative()?;
    let lifted = lift(points, 4);
    let rows: Result<Vec<SurfaceCurvatureRow>> = lifted
        .par_iter()
        .map(|p| {
            let s = &p[..2];
            let sigma_form = drt.eval(p)?;
            let mu = sigma.mean_curvature_vector(s)?;
            let vol = KForm::basis(6, &[0, 1]).scale(sigma.area_density(s)?);
            let expected = vol.wedge(&torus_two_form(&mu, 6, 2))?;
            let residual = (&sigma_form - &expected).max_abs();
            let data = sl3c::analyze_definite(&rho.eval(p)?, SURFACE_ORIENTATION)?;
            let (part, _) = sl3c::type22_part(&sigma_form, &data)?;
            let h = sl3c::herm_of_22(&part, &data)?;
            let tol = 1e-6 * h.eigenvalues.iter().fold(1e-3f64, |m, e| m.max(e.abs()));
            let class = sl3c::classify_eigenvalues(&h.eigenvalues, tol);
            let (mu_spacelike, mu_side) = sigma.mean_curvature_side(s)?;
            Ok(SurfaceCurvatureRow { point: s.to_vec(), residual, class, det22: h.det22, mu_spacelike, mu_side })
        })
        .collect();
    let rows = rows?;
    let residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_abs_det22 = rows.iter().map(|r| r.det22.abs()).fold(0.0, f64::max);
    let classification_agrees = rows.iter().all(|r| {
        let convex = matches!(r.class, Class22::Positive | Class22::Semipositive);
        convex == (r.mu_spacelike && r.mu_side == CONVEX_SIDE)
    });
    Ok(SurfaceCurvatureReport { residual, max_abs_det22, classification_agrees, rows })
}

/// Coefficients `c` of a 2-form on a 3-space in the basis `(dy23, dy31, dy12)`.
fn dual_coeffs(s: &KForm) -> [f64; 3] {
    [s.get(&[1, 2]), -s.get(&[0, 2]), s.get(&[0, 1])]
}

fn from_dual(c: &[f64]) -> KForm {
    let mut out = KForm::zero(3, 2);
    out.add_term(c[0], &[1, 2]);
    out.add_term(-c[1], &[0, 2]);
    out.add_term(c[2], &[0, 1]);
    out
}

/// The unique `ε` with `σ_i = ε_j ∧ ε_k` (cyclic) and `ε1 ∧ ε2 ∧ ε3` positive,
/// as rows of a matrix in the `dy` basis.
pub fn solve_eps(sigma: &[KForm; 3], point: &[f64]) -> Result<Matrix3<f64>> {
    let c = Matrix3::from_fn(|i, a| dual_coeffs(&sigma[i])[a]);
    let det = c.determinant();
    let scale = c.norm().powi(3);
    if det.abs() <= 1e-12 * scale.max(1e-300) {
        return Err(Error::DependentSigmas(point.to_vec()));
    }
    if det < 0.0 {
        return Err(Error::SigmaOrientation(point.to_vec()));
    }
    // cof(E) = C, det C = det(E)^2, so E = sqrt(det C) C^{-T}
    let inv = c.try_inverse().ok_or_else(|| Error::DependentSigmas(point.to_vec()))?;
    Ok(inv.transpose() * det.sqrt())
}

/// `σ_i = ε_j ∧ ε_k` for cyclic `(ijk)`, from rows of `e`.
pub fn sigma_from_eps(e: &Matrix3<f64>) -> [KForm; 3] {
    let cof = e.try_inverse().map(|inv| inv.transpose() * e.determinant()).unwrap_or_else(|| {
        Matrix3::from_fn(|i, a| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            e[(j, b)] * e[(k, c)] - e[(j, c)] * e[(k, b)]
        })
    });
    std::array::from_fn(|i| from_dual(&[cof[(i, 0)], cof[(i, 1)], cof[(i, 2)]]))
}

/// Output of [`torus_reduction`].
#[derive(Clone)]
pub struct TorusReductionData {
    pub sigma: [FormField; 3],
    /// `ε_i` as 1-form fields on `Y`.
    pub eps: [FormField; 3],
    fd: FdConfig,
}

impl std::fmt::Debug for TorusReductionData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusReductionData").field("chart", self.chart()).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub point: Vec<f64>,
    pub s: [[f64; 3]; 3],
    pub asymmetry: f64,
    /// `|σ_i - ε_j ∧ ε_k|` summed over `i`.
    pub roundtrip: f64,
    pub convexity: Convexity,
}

impl TorusReductionData {
    pub fn chart(&self) -> &Chart {
        self.sigma[0].chart()
    }

    fn sigma_at(&self, p: &[f64]) -> Result<[KForm; 3]> {
        Ok([self.sigma[0].eval(p)?, self.sigma[1].eval(p)?, self.sigma[2].eval(p)?])
    }

    /// Rows `ε_i` in the `dy` basis.
    pub fn eps_at(&self, p: &[f64]) -> Result<Matrix3<f64>> {
        solve_eps(&self.sigma_at(p)?, p)
    }

    /// `S` with `dε_i = Σ_j S_ij σ_j`, by an exact solve in the σ basis.
    pub fn s_at(&self, p: &[f64]) -> Result<Matrix3<f64>> {
        let sig = self.sigma_at(p)?;
        let c = Matrix3::from_fn(|j, a| dual_coeffs(&sig[j])[a]);
        let mut d = Matrix3::zeros();
        for i in 0..3 {
            let de = self.eps[i].clone().with_fd(self.fd).d_at(p)?;
            let v = dual_coeffs(&de);
            for a in 0..3 {
                d[(i, a)] = v[a];
            }
        }
        let inv = c.try_inverse().ok_or_else(|| Error::DependentSigmas(p.to_vec()))?;
        Ok(d * inv)
    }

    /// Pointwise summary; fails with `NonSymmetricS` beyond `1e-6 |S|`.
    pub fn inspect(&self, p: &[f64]) -> Result<TorusPoint> {
        let s = self.s_at(p)?;
        let asymmetry = (s - s.transpose()).amax();
        if asymmetry > 1e-6 * s.amax().max(1.0) {
            return Err(Error::NonSymmetricS { asymmetry, point: p.to_vec() });
        }
        let e = self.eps_at(p)?;
        let back = sigma_from_eps(&e);
        let sig = self.sigma_at(p)?;
        let roundtrip = (0..3).map(|i| back[i].distance(&sig[i])).sum();
        let convexity = classify_s(&s);
        let s_rows = std::array::from_fn(|i| std::array::from_fn(|j| s[(i, j)]));
        Ok(TorusPoint { point: p.to_vec(), s: s_rows, asymmetry, roundtrip, convexity })
    }

    /// `ρ = dθ1 dθ2 dθ3 - Σ σ_i dθ_i` on `Y × T³`, axes `(y1, y2, y3, θ1, θ2, θ3)`.
    pub fn rho_field(&self) -> Result<FormField> {
        let chart = product_chart(self.chart(), 3)?;
        let sigma = self.sigma.clone();
        Ok(FormField::new(chart, 3, move |p| {
            let mut rho = KForm::basis(6, &[3, 4, 5]);
            for (i, s) in sigma.iter().enumerate() {
                let si = s.eval(&p[..3])?.embed(6, &[0, 1, 2]);
                rho = rho.try_add(&si.wedge(&KForm::basis(6, &[3 + i]))?.scale(-1.0))?;
            }
            Ok(rho)
        }))
    }

    /// `-ε1 ε2 ε3 + Σ_cyclic ε_i dθ_j dθ_k`.
    pub fn rho_tilde_closed_form(&self, p: &[f64]) -> Result<KForm> {
        let e = self.eps_at(&p[..3])?;
        let eps: Vec<KForm> = (0..3).map(|i| KForm::one_form(&[e[(i, 0)], e[(i, 1)], e[(i, 2)], 0.0, 0.0, 0.0])).collect();
        let mut out = eps[0].wedge(&eps[1])?.wedge(&eps[2])?.scale(-1.0);
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            out = out.try_add(&eps[i].wedge(&KForm::basis(6, &[3 + j, 3 + k]))?)?;
        }
        Ok(out)
    }

    /// `Σ S_ai σ_a ∧ dθ_j ∧ dθ_k`, the predicted `dρ~`.
    pub fn predicted_d_rho_tilde(&self, p: &[f64]) -> Result<KForm> {
        let s = self.s_at(&p[..3])?;
        let sig = self.sigma_at(&p[..3])?;
        let mut out = KForm::zero(6, 4);
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            for a in 0..3 {
                let term = sig[a].embed(6, &[0, 1, 2]).wedge(&KForm::basis(6, &[3 + j, 3 + k]))?;
                out = out.try_add(&term.scale(s[(a, i)]))?;
            }
        }
        Ok(out)
    }
}

/// Mean-convexity of the reduced structure from `S`. With `dρ~ = Σ S_ai σ_a dθ_j dθ_k`
/// and [`TORUS_ORIENTATION`], the structure is mean-convex exactly when `-S` is
/// semipositive and nonzero.
pub fn classify_s(s: &Matrix3<f64>) -> Convexity {
    let sym = (s + s.transpose()) * -0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let tol = 1e-9 * ev.amax().max(1.0);
    let class = sl3c::classify_eigenvalues(&[ev[0], ev[1], ev[2]], tol);
    match class {
        Class22::Positive => Convexity::StrictlyMeanConvex,
        Class22::Semipositive => Convexity::MeanConvex,
        Class22::Negative => Convexity::StrictlyMeanConcave,
        Class22::Seminegative => Convexity::MeanConcave,
        Class22::Zero => Convexity::Flat,
        Class22::Indefinite => Convexity::Mixed,
    }
}

/// Builds the reduction data from three closed 2-form fields on a 3-chart,
/// checking independence, closedness and orientation at the chart grid.
pub fn torus_reduction(sigma: [FormField; 3]) -> Result<TorusReductionData> {
    let chart = sigma[0].chart().clone();
    if chart.dim() != 3 || sigma.iter().any(|s| s.degree() != 2 || s.chart().dim() != 3) {
        return Err(Error::DegreeMismatch { expected: 2, found: sigma[0].degree() });
    }
    let points = chart.grid_points();
    for s in &sigma {
        let r = s.exterior_derivative()?.max_norm_on(&points)?;
        if r > 1e-6 {
            return Err(Error::NotClosed(r));
        }
    }
    points.par_iter().try_for_each(|p| {
        let sig = [sigma[0].eval(p)?, sigma[1].eval(p)?, sigma[2].eval(p)?];
        solve_eps(&sig, p).map(|_| ())
    })?;
    let eps = std::array::from_fn(|i| {
        let sig = sigma.clone();
        FormField::new(chart.clone(), 1, move |p| {
            let s = [sig[0].eval(p)?, sig[1].eval(p)?, sig[2].eval(p)?];
            let e = solve_eps(&s, p)?;
            Ok(KForm::one_form(&[e[(i, 0)], e[(i, 1)], e[(i, 2)]]))
        })
    });
    Ok(TorusReductionData { sigma, eps, fd: FdConfig::default() })
}

impl TorusReductionData {
    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }
}
