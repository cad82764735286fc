//! Hypersurfaces in seven-manifolds with closed G2-structure: the induced
//! SL(3,C)-structure, second fundamental form and mean curvature, and the
//! identities relating them.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{fd_partial, grid_sum, Chart, ComplexForm, FdConfig, FormField, KForm, Orientation, SmoothMap, C64};
use crate::g2::{self, phi0};
use crate::sl3c::{self, SL3CData};

/// Constant `c` in `β12 = c Σ g^{jk} (B_C(∂j,·))^{1,0} ∧ i_{∂k}(ρ - iρ~)`,
/// fixed by least squares on a graph hypersurface in flat space.
pub const NORMAL_VARIATION_CONSTANT: C64 = C64::new(-1.0, 0.0);

/// Everything the induced structure provides at one point.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub ambient_metric: DMatrix<f64>,
    /// Unit normal `n` for the ambient metric, on the co-oriented side.
    pub normal: DVector<f64>,
    pub induced_metric: DMatrix<f64>,
    pub rho: KForm,
    /// `ι*(i_ν φ)` for the opposite normal `ν = -n`.
    pub omega: KForm,
    pub data: SL3CData,
}

impl PointGeometry {
    /// Riemannian area density `sqrt(det h)`.
    pub fn area_density(&self) -> f64 {
        self.induced_metric.determinant().sqrt()
    }
}

/// A hypersurface `ι: N -> M` with its co-orientation.
///
/// The co-orientation selects the unit normal `n` (outward for boundaries).
/// The second fundamental form is `B(X, Y) = g(∇_X n, Y)`, so the unit sphere
/// with outward `n` has `B = h` and `μ = 6`. The induced 2-form is
/// `ω = ι*(i_ν φ)` with `ν = -n`, and `N` is oriented so that `(frame, ν)` is
/// positive in `M`. With these choices the induced structure on the round
/// sphere is strictly mean-convex and `μ vol = ½ ω ∧ dρ~`.
#[derive(Clone, Debug)]
pub struct Hypersurface {
    ambient: FormField,
    embedding: SmoothMap,
    co_orientation: Orientation,
    ambient_orientation: Orientation,
    fd: FdConfig,
    flat_ambient: bool,
}

/// Covector annihilating the columns of a 7x6 matrix, via signed 6x6 minors.
fn cofactor_normal(j: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(7, |i, _| {
        let minor = j.clone().remove_row(i);
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        s * minor.determinant()
    })
}

impl Hypersurface {
    /// Builds the hypersurface and validates it on the embedding chart grid.
    pub fn induce(ambient: FormField, embedding: SmoothMap, co_orientation: Orientation) -> Result<Self> {
        let points = embedding.source().grid_points();
        Self::induce_on(ambient, embedding, co_orientation, &points)
    }

    /// Like [`Hypersurface::induce`] but validates only at `points`, for charts
    /// whose grid meets degenerate points of the parametrization.
    pub fn induce_on(
        ambient: FormField,
        embedding: SmoothMap,
        co_orientation: Orientation,
        points: &[Vec<f64>],
    ) -> Result<Self> {
        if ambient.chart().dim() != 7 || ambient.degree() != 3 {
            return Err(Error::DegreeMismatch { expected: 3, found: ambient.degree() });
        }
        if embedding.source().dim() != 6 || embedding.target().dim() != 7 {
            return Err(Error::DimensionMismatch(embedding.source().dim(), 6));
        }
        let h = Hypersurface {
            ambient,
            embedding,
            co_orientation,
            ambient_orientation: Orientation::Positive,
            fd: FdConfig::default(),
            flat_ambient: false,
        };
        h.validate(points)?;
        Ok(h)
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    /// Skips the Christoffel terms; valid when the ambient metric is constant.
    pub fn assume_flat_ambient(mut self) -> Self {
        self.flat_ambient = true;
        self
    }

    pub fn with_ambient_orientation(mut self, o: Orientation) -> Self {
        self.ambient_orientation = o;
        self
    }

    pub fn chart(&self) -> &Chart {
        self.embedding.source()
    }
    pub fn embedding(&self) -> &SmoothMap {
        &self.embedding
    }
    pub fn ambient(&self) -> &FormField {
        &self.ambient
    }
    pub fn fd(&self) -> FdConfig {
        self.fd
    }

    /// Orientation of `N`: `(frame, ν)` is positive in `M`, `ν = -n`.
    pub fn orientation(&self) -> Orientation {
        self.co_orientation.flipped() * self.ambient_orientation
    }

    /// Checks immersion, positivity and the induced-structure invariants at `points`.
    pub fn validate(&self, points: &[Vec<f64>]) -> Result<()> {
        points.par_iter().try_for_each(|p| {
            let geo = self.at(p)?;
            let t = sl3c::taming_check(&geo.omega, &geo.data)?;
            if !t.tamed {
                return Err(Error::OmegaNotTaming { point: p.clone(), margin: t.margin });
            }
            Ok(())
        })
    }

    fn ambient_metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let phi = self.ambient.eval(x)?;
        g2::analyze_positive(&phi, self.ambient_orientation)
            .map(|d| d.metric)
            .map_err(|e| Error::PositivityFailure { point: x.to_vec(), reason: e.to_string() })
    }

    fn unit_normal(&self, p: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
        let x = self.embedding.eval(p)?;
        let j = self.embedding.jacobian(p)?;
        let g = self.ambient_metric(&x)?;
        let n = cofactor_normal(&j);
        let scale: f64 = j.column_iter().map(|c| c.norm()).product();
        if n.norm() <= 1e-12 * scale.max(1e-300) {
            return Err(Error::RankDeficient(p.to_vec()));
        }
        let ginv = g.clone().try_inverse().ok_or_else(|| Error::Numerical("singular ambient metric".into()))?;
        let raised = &ginv * &n;
        let len = n.dot(&raised).sqrt();
        let nu = raised * (self.co_orientation.sign() / len);
        Ok((x, j, g, nu))
    }

    /// Induced data at a chart point.
    pub fn at(&self, p: &[f64]) -> Result<PointGeometry> {
        let (x, j, g, nu) = self.unit_normal(p)?;
        let phi = self.ambient.eval(&x)?;
        let rho = phi.pullback(&j)?;
        let inner: Vec<f64> = nu.iter().map(|v| -v).collect();
        let omega = phi.contract(&inner)?.pullback(&j)?;
        let data = sl3c::analyze_definite(&rho, self.orientation())?;
        let induced_metric = j.transpose() * &g * &j;
        Ok(PointGeometry {
            point: p.to_vec(),
            image: x,
            jacobian: j,
            ambient_metric: g,
            normal: nu,
            induced_metric,
            rho,
            omega,
            data,
        })
    }

    /// Christoffel symbols `Γ^k_{ij}` of the ambient metric at `x`, indexed `[k][i][j]`.
    fn christoffel(&self, x: &[f64], g: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
        let mut dg = Vec::with_capacity(7);
        for l in 0..7 {
            let d = fd_partial(self.ambient.chart(), self.fd, x, l, &|q| {
                self.ambient_metric(q).map(|m| m.as_slice().to_vec())
            })?;
            dg.push(DMatrix::from_column_slice(7, 7, &d));
        }
        let ginv = g.clone().try_inverse().ok_or_else(|| Error::Numerical("singular ambient metric".into()))?;
        let mut gamma = vec![DMatrix::zeros(7, 7); 7];
        for k in 0..7 {
            for i in 0..7 {
                for j in 0..7 {
                    let mut acc = 0.0;
                    for l in 0..7 {
                        acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    gamma[k][(i, j)] = 0.5 * acc;
                }
            }
        }
        Ok(gamma)
    }

    /// `B(∂a, ∂b) = g(∇_a ν, ∂_b ι)` in chart coordinates, symmetrized.
    pub fn second_fundamental(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let (x, j, g, nu) = self.unit_normal(p)?;
        let mut dnu = DMatrix::zeros(7, 6);
        for a in 0..6 {
            let col = fd_partial(self.chart(), self.fd, p, a, &|q| self.unit_normal(q).map(|r| r.3.as_slice().to_vec()))?;
            for k in 0..7 {
                dnu[(k, a)] = col[k];
            }
        }
        if !self.flat_ambient {
            let gamma = self.christoffel(&x, &g)?;
            for a in 0..6 {
                for k in 0..7 {
                    let mut acc = 0.0;
                    for i in 0..7 {
                        for l in 0..7 {
                            acc += gamma[k][(i, l)] * j[(i, a)] * nu[l];
                        }
                    }
                    dnu[(k, a)] += acc;
                }
            }
        }
        let b = dnu.transpose() * &g * &j;
        Ok((&b + b.transpose()) * 0.5)
    }

    /// Mean curvature `tr(h^{-1} B)`.
    pub fn mean_curvature(&self, p: &[f64]) -> Result<f64> {
        let geo = self.at(p)?;
        let b = self.second_fundamental(p)?;
        mean_curvature_of(&geo, &b)
    }

    /// The induced 3-form `ι*φ` as a field on the chart.
    pub fn rho_field(&self) -> FormField {
        let h = self.clone();
        FormField::new(self.chart().clone(), 3, move |p| {
            let x = h.embedding.eval(p)?;
            h.ambient.eval(&x)?.pullback(&h.embedding.jacobian(p)?)
        })
        .with_fd(self.fd)
    }

    pub fn omega_field(&self) -> FormField {
        let h = self.clone();
        FormField::new(self.chart().clone(), 2, move |p| Ok(h.at(p)?.omega)).with_fd(self.fd)
    }

    pub fn rho_tilde_field(&self) -> FormField {
        let h = self.clone();
        FormField::new(self.chart().clone(), 3, move |p| Ok(h.at(p)?.data.rho_tilde)).with_fd(self.fd)
    }

    /// `dρ~` at a point, by finite differences.
    pub fn d_rho_tilde(&self, p: &[f64]) -> Result<KForm> {
        self.rho_tilde_field().d_at(p)
    }

    /// Residuals of `β11 ∧ ω = ½ dρ~` and `μ vol = ½ ω ∧ dρ~` at `points`.
    pub fn verify_curvature_identities(&self, points: &[Vec<f64>]) -> Result<CurvatureIdentityReport> {
        let rows: Result<Vec<CurvatureIdentityRow>> = points
            .par_iter()
            .map(|p| {
                let geo = self.at(p)?;
                let b = self.second_fundamental(p)?;
                let mu = mean_curvature_of(&geo, &b)?;
                let beta = beta11(&b, &geo.data.complex_structure);
                let drt = self.d_rho_tilde(p)?;
                let half = drt.scale(0.5);
                let id1 = (&beta.wedge(&geo.omega)? - &half).max_abs();
                let id2 = (mu * geo.data.vol_coefficient() - geo.omega.wedge(&half)?.top()).abs();
                Ok(CurvatureIdentityRow { point: p.clone(), mu, id1_residual: id1, id2_residual: id2 })
            })
            .collect();
        let rows = rows?;
        let id1_residual = rows.iter().map(|r| r.id1_residual).fold(0.0, f64::max);
        let id2_residual = rows.iter().map(|r| r.id2_residual).fold(0.0, f64::max);
        Ok(CurvatureIdentityReport { id1_residual, id2_residual, rows })
    }

    /// Slack `μ - (3/2) det(dρ~)^{1/3}` at `points`.
    pub fn verify_mean_curvature_bound(&self, points: &[Vec<f64>]) -> Result<MeanCurvatureBoundReport> {
        let rows: Result<Vec<MeanCurvatureBoundRow>> = points
            .par_iter()
            .map(|p| {
                let geo = self.at(p)?;
                let mu = mean_curvature_of(&geo, &self.second_fundamental(p)?)?;
                let (part, _) = sl3c::type22_part(&self.d_rho_tilde(p)?, &geo.data)?;
                let h = sl3c::herm_of_22_unchecked(&part, &geo.data)?;
                let zero_tol = 1e-6 * h.eigenvalues.iter().fold(1.0f64, |m, e| m.max(e.abs()));
                if sl3c::classify_eigenvalues(&h.eigenvalues, zero_tol) != sl3c::Class22::Positive {
                    return Err(Error::NotStrictlyMeanConvex(h.det22));
                }
                Ok(MeanCurvatureBoundRow { point: p.clone(), mu, det22: h.det22, slack: mu - 1.5 * h.det22.cbrt() })
            })
            .collect();
        let rows = rows?;
        let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        let max_slack = rows.iter().map(|r| r.slack).fold(f64::NEG_INFINITY, f64::max);
        Ok(MeanCurvatureBoundReport { min_slack, max_slack, rows })
    }

    /// `dω_n - ½ μ ρ` and the complex 3-form `Σ g^{jk} (B_C(∂j,·))^{1,0} ∧ i_{∂k}(ρ - iρ~)`,
    /// where `ω_n = ι*(i_n φ) = -ω` is the contraction with the co-oriented normal.
    pub fn normal_variation_terms(&self, p: &[f64]) -> Result<(KForm, ComplexForm)> {
        let geo = self.at(p)?;
        let b = self.second_fundamental(p)?;
        let mu = mean_curvature_of(&geo, &b)?;
        let d_omega = self.omega_field().d_at(p)?;
        let lhs = -(&d_omega + &geo.rho.scale(0.5 * mu));
        let i = &geo.data.complex_structure;
        let bc = (&b - i.transpose() * &b * i) * 0.5;
        let hinv = geo
            .induced_metric
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular induced metric".into()))?;
        let omega_bar = geo.data.omega_30().conj();
        let mut x = ComplexForm::zero(6, 3);
        for j in 0..6 {
            let xi = bc.row(j).clone_owned();
            let xi_i = &xi * i;
            let c: Vec<C64> = (0..6).map(|a| C64::new(0.5 * xi[a], -0.5 * xi_i[a])).collect();
            let xi10 = ComplexForm::one_form(&c);
            for k in 0..6 {
                if hinv[(j, k)] == 0.0 {
                    continue;
                }
                let mut e = [0.0; 6];
                e[k] = 1.0;
                let term = xi10.wedge(&omega_bar.contract(&e)?)?;
                x = &x + &term.scale(C64::from(hinv[(j, k)]));
            }
        }
        Ok((lhs, x))
    }

    /// Max over `points` of `|dω_n - ½μρ + ½β12 + ½ conj(β12)|` with `β12 = c X`.
    pub fn verify_normal_variation_with(&self, points: &[Vec<f64>], c: C64) -> Result<f64> {
        let r: Result<Vec<f64>> = points
            .par_iter()
            .map(|p| {
                let (lhs, x) = self.normal_variation_terms(p)?;
                let beta = x.scale(c);
                Ok((&lhs + &beta.re).max_abs())
            })
            .collect();
        Ok(r?.into_iter().fold(0.0, f64::max))
    }

    pub fn verify_normal_variation(&self, points: &[Vec<f64>]) -> Result<f64> {
        self.verify_normal_variation_with(points, NORMAL_VARIATION_CONSTANT)
    }

    /// `min det(dρ~)^{1/3}` over `points`.
    pub fn min_det_cuberoot(&self, points: &[Vec<f64>]) -> Result<f64> {
        Ok(self.verify_mean_curvature_bound(points)?.rows.iter().map(|r| r.det22.cbrt()).fold(f64::INFINITY, f64::min))
    }
}

/// Least-squares fit of the complex constant in the `β12` formula.
pub fn calibrate_normal_variation(h: &Hypersurface, points: &[Vec<f64>]) -> Result<C64> {
    // minimize |lhs + cr Re X - ci Im X|^2 over (cr, ci)
    let mut ata = nalgebra::Matrix2::<f64>::zeros();
    let mut atb = nalgebra::Vector2::<f64>::zeros();
    for p in points {
        let (lhs, x) = h.normal_variation_terms(p)?;
        for ((l, a), b) in lhs.coeffs().iter().zip(x.re.coeffs()).zip(x.im.coeffs()) {
            let row = nalgebra::Vector2::new(*a, -*b);
            ata += row * row.transpose();
            atb -= row * *l;
        }
    }
    let sol = ata.lu().solve(&atb).ok_or_else(|| Error::Numerical("singular calibration system".into()))?;
    Ok(C64::new(sol[0], sol[1]))
}

fn mean_curvature_of(geo: &PointGeometry, b: &DMatrix<f64>) -> Result<f64> {
    let hinv = geo
        .induced_metric
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular induced metric".into()))?;
    Ok((hinv * b).trace())
}

/// The (1,1)-form `β(x, y) = B11(Ix, y)` of the Hermitian part `B11 = ½(B + IᵀBI)`.
pub fn beta11(b: &DMatrix<f64>, i: &DMatrix<f64>) -> KForm {
    let b11 = (b + i.transpose() * b * i) * 0.5;
    KForm::from_matrix(&(i.transpose() * b11))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureIdentityRow {
    pub point: Vec<f64>,
    pub mu: f64,
    pub id1_residual: f64,
    pub id2_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureIdentityReport {
    pub id1_residual: f64,
    pub id2_residual: f64,
    pub rows: Vec<CurvatureIdentityRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureBoundRow {
    pub point: Vec<f64>,
    pub mu: f64,
    pub det22: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureBoundReport {
    pub min_slack: f64,
    pub max_slack: f64,
    pub rows: Vec<MeanCurvatureBoundRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeBound {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// `Vol(M) <= 4 Vol(∂M) / (7 m)` for a strictly mean-convex boundary.
pub fn volume_bound(ambient_volume: f64, boundary_volume: f64, m: f64) -> Result<VolumeBound> {
    if !(m > 0.0) {
        return Err(Error::NotStrictlyMeanConvex(m));
    }
    let rhs = 4.0 * boundary_volume / (7.0 * m);
    Ok(VolumeBound { lhs: ambient_volume, rhs, slack: rhs - ambient_volume })
}

/// `∫ |vol_ρ|` of the induced 3-form over the embedding chart. Chart points
/// where the parametrization degenerates contribute zero.
pub fn induced_volume(ambient: &FormField, embedding: &SmoothMap) -> Result<f64> {
    grid_sum(embedding.source(), |p| {
        let x = embedding.eval(p)?;
        let rho = ambient.eval(&x)?.pullback(&embedding.jacobian(p)?)?;
        Ok(sl3c::volume_density(&rho, Orientation::Positive)?.abs())
    })
}

/// `∫ |det J| sqrt(det g_φ)` over the source chart of a map into the ambient chart.
pub fn bulk_volume(ambient: &FormField, map: &SmoothMap, orientation: Orientation) -> Result<f64> {
    grid_sum(map.source(), |p| {
        let x = map.eval(p)?;
        let det_j = map.jacobian(p)?.determinant().abs();
        if det_j == 0.0 {
            return Ok(0.0);
        }
        let g = g2::analyze_positive(&ambient.eval(&x)?, orientation)?.metric;
        Ok(det_j * g.determinant().sqrt())
    })
}

/// Co-orientation whose normal points away from the origin at `p`, for
/// parametrizations of hypersurfaces star-shaped about the origin.
pub fn outward_co_orientation(map: &SmoothMap, p: &[f64]) -> Result<Orientation> {
    let x = map.eval(p)?;
    let n = cofactor_normal(&map.jacobian(p)?);
    let dot: f64 = n.iter().zip(&x).map(|(a, b)| a * b).sum();
    if dot == 0.0 {
        return Err(Error::DegenerateFrame);
    }
    Ok(Orientation::from_sign(dot))
}

/// Constant flat structure `φ0` on the box `[-half_width, half_width]^7`.
pub fn flat_ambient(half_width: f64) -> FormField {
    FormField::constant(Chart::cube(7, -half_width, half_width, 2).expect("valid chart"), phi0())
}

/// Graph `t = f(z)` over `[-w, w]^6` with analytic gradient.
pub fn graph<F, G>(half_width: f64, target: Chart, f: F, grad: G) -> SmoothMap
where
    F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    G: Fn(&[f64]) -> [f64; 6] + Send + Sync + 'static,
{
    let source = Chart::cube(6, -half_width, half_width, 2).expect("valid chart");
    SmoothMap::new(source, target, move |p| {
        let mut x = p.to_vec();
        x.push(f(p));
        Ok(x)
    })
    .with_jacobian(move |p| {
        let g = grad(p);
        Ok(DMatrix::from_fn(7, 6, |r, c| if r < 6 { if r == c { 1.0 } else { 0.0 } } else { g[c] }))
    })
}

/// Patch of the ellipsoid `Σ (x_i/a_i)^2 = 1` as the graph `t = ±a7 sqrt(1 - Σ (z_i/a_i)^2)`
/// over `[-w, w]^6`. Returns the map and the co-orientation of the outward normal.
pub fn ellipsoid_graph_patch(axes: [f64; 7], upper: bool, half_width: f64) -> (SmoothMap, Orientation) {
    let s = if upper { 1.0 } else { -1.0 };
    let reach = axes.iter().fold(0.0f64, |m, a| m.max(*a)) + 1.0;
    let target = Chart::cube(7, -reach, reach, 2).expect("valid chart");
    let q = move |p: &[f64]| 1.0 - (0..6).map(|i| (p[i] / axes[i]).powi(2)).sum::<f64>();
    let map = graph(
        half_width,
        target,
        move |p| s * axes[6] * q(p).max(0.0).sqrt(),
        move |p| {
            let root = q(p).max(1e-300).sqrt();
            std::array::from_fn(|i| -s * axes[6] * p[i] / (axes[i] * axes[i] * root))
        },
    );
    (map, if upper { Orientation::Positive } else { Orientation::Negative })
}

/// Unit-sphere patch; see [`ellipsoid_graph_patch`].
pub fn sphere_graph_patch(radius: f64, upper: bool, half_width: f64) -> (SmoothMap, Orientation) {
    ellipsoid_graph_patch([radius; 7], upper, half_width)
}

/// Hyperspherical angles `(θ1..θ6)` on `[0,π]^5 × [0,2π)` mapped onto the
/// ellipsoid with semi-axes `axes`.
pub fn hyperspherical_map(axes: [f64; 7], grid: [usize; 6]) -> SmoothMap {
    let mut hi = vec![PI; 6];
    hi[5] = 2.0 * PI;
    let source = Chart::new(vec![0.0; 6], hi, grid.to_vec()).expect("valid chart").with_periodic(&[5]);
    let reach = axes.iter().fold(0.0f64, |m, a| m.max(*a)) + 1.0;
    let target = Chart::cube(7, -reach, reach, 2).expect("valid chart");
    let (f, j) = (Arc::new(move |p: &[f64]| sphere_point(p, &axes)), Arc::new(move |p: &[f64]| sphere_jacobian(p, &axes)));
    SmoothMap::new(source, target, move |p| Ok(f(p))).with_jacobian(move |p| Ok(j(p)))
}

/// Solid ellipsoid in polar coordinates `(r, θ1..θ6)`, `r ∈ [0, 1]`.
pub fn polar_ball_map(axes: [f64; 7], grid: [usize; 7]) -> SmoothMap {
    let hi = vec![1.0, PI, PI, PI, PI, PI, 2.0 * PI];
    let source = Chart::new(vec![0.0; 7], hi, grid.to_vec()).expect("valid chart").with_periodic(&[6]);
    let reach = axes.iter().fold(0.0f64, |m, a| m.max(*a)) + 1.0;
    let target = Chart::cube(7, -reach, reach, 2).expect("valid chart");
    SmoothMap::new(source, target, move |p| Ok(sphere_point(&p[1..], &axes).into_iter().map(|x| p[0] * x).collect()))
        .with_jacobian(move |p| {
            let s = sphere_point(&p[1..], &axes);
            let js = sphere_jacobian(&p[1..], &axes);
            Ok(DMatrix::from_fn(7, 7, |r, c| if c == 0 { s[r] } else { p[0] * js[(r, c - 1)] }))
        })
}

fn sphere_point(theta: &[f64], axes: &[f64; 7]) -> Vec<f64> {
    // x_k = (Π_{m<k} sin θ_m) cos θ_k for k < 6, x_6 = Π_{m<6} sin θ_m
    let mut x = vec![0.0; 7];
    let mut prod = 1.0;
    for k in 0..6 {
        x[k] = axes[k] * prod * theta[k].cos();
        prod *= theta[k].sin();
    }
    x[6] = axes[6] * prod;
    x
}

fn sphere_jacobian(theta: &[f64], axes: &[f64; 7]) -> DMatrix<f64> {
    let (s, c): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| (t.sin(), t.cos())).unzip();
    let mut j = DMatrix::zeros(7, 6);
    let prod_except = |upto: usize, skip: usize| -> f64 { (0..upto).filter(|&m| m != skip).map(|m| s[m]).product() };
    for k in 0..7 {
        let (upto, last_factor, last_dfactor, last_idx) = if k < 6 {
            (k, c[k], -s[k], k)
        } else {
            (5, s[5], c[5], 5)
        };
        for a in 0..6 {
            let v = if a < upto {
                prod_except(upto, a) * c[a] * last_factor
            } else if a == last_idx {
                prod_except(upto, usize::MAX) * last_dfactor
            } else {
                0.0
            };
            j[(k, a)] = axes[k] * v;
        }
    }
    j
}
