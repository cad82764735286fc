//! Positive 3-forms on seven-dimensional spaces and the G2-structures they define.
//!
//! Coordinates are ordered `(x1, y1, x2, y2, x3, y3, t)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{FormField, KForm, Orientation};
use crate::sl3c::{self, SL3CData};

/// Index of the transverse coordinate `t`.
pub const T: usize = 6;

/// Coordinate inclusion of the 6-space into the 7-space at `t = 0`.
pub const INCLUSION: [usize; 6] = [0, 1, 2, 3, 4, 5];

/// `ω ∧ dt + ρ` for forms on the 6-space.
pub fn assemble(omega: &KForm, rho: &KForm) -> Result<KForm> {
    let w = omega.embed(7, &INCLUSION);
    let r = rho.embed(7, &INCLUSION);
    w.wedge(&KForm::basis(7, &[T]))?.try_add(&r)
}

/// `φ0 = ω0 ∧ dt + ρ0`.
pub fn phi0() -> KForm {
    assemble(&sl3c::omega0(), &sl3c::rho0()).expect("model form")
}

/// `dx1 dy1 dx2 dy2 dx3 dy3 dt`.
pub fn euclidean_volume() -> KForm {
    KForm::basis(7, &[0, 1, 2, 3, 4, 5, 6])
}

/// A positive 3-form with its induced metric, volume and coassociative 4-form.
#[derive(Clone, Debug, PartialEq)]
pub struct G2Data {
    pub phi: KForm,
    /// The bilinear form `b` with `b(u,v) e* = ⅙ i_uφ ∧ i_vφ ∧ φ`.
    pub b: DMatrix<f64>,
    pub metric: DMatrix<f64>,
    pub vol: KForm,
    pub star_phi: KForm,
    pub orientation: Orientation,
}

impl G2Data {
    /// `|φ|^2` in the induced metric; 7 for every positive form.
    pub fn norm_squared(&self) -> f64 {
        self.phi.inner(&self.phi, &self.metric).unwrap_or(f64::NAN)
    }

    /// Hodge star of the induced metric and orientation.
    pub fn star(&self, a: &KForm) -> Result<KForm> {
        a.hodge_star(&self.metric, self.orientation.sign())
    }
}

fn check_shape(phi: &KForm) -> Result<()> {
    if phi.dim() != 7 {
        return Err(Error::DimensionMismatch(phi.dim(), 7));
    }
    if phi.degree() != 3 {
        return Err(Error::DegreeMismatch { expected: 3, found: phi.degree() });
    }
    Ok(())
}

/// The symmetric form `b(u,v) = ⅙ (i_uφ ∧ i_vφ ∧ φ) / e*` with `e* = ±dx1..dt`.
pub fn bilinear_form(phi: &KForm, orientation: Orientation) -> Result<DMatrix<f64>> {
    check_shape(phi)?;
    let s = orientation.sign();
    let contractions: Vec<KForm> = (0..7)
        .map(|i| {
            let mut e = [0.0; 7];
            e[i] = 1.0;
            phi.contract(&e)
        })
        .collect::<Result<_>>()?;
    let mut b = DMatrix::zeros(7, 7);
    for i in 0..7 {
        let wi = contractions[i].wedge(phi)?;
        for j in i..7 {
            let v = s * contractions[j].wedge(&wi)?.top() / 6.0;
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    Ok(b)
}

/// Smallest eigenvalue of `b`: positive exactly when φ is positive for `orientation`.
pub fn positivity_margin(phi: &KForm, orientation: Orientation) -> Result<f64> {
    Ok(SymmetricEigen::new(bilinear_form(phi, orientation)?).eigenvalues.min())
}

/// Decides positivity and builds the induced structure.
pub fn analyze_positive(phi: &KForm, orientation: Orientation) -> Result<G2Data> {
    let b = bilinear_form(phi, orientation)?;
    let eig = SymmetricEigen::new(b.clone()).eigenvalues;
    let (min, max) = (eig.min(), eig.max());
    let scale = eig.amax();
    if scale == 0.0 || min <= -1e-10 * scale {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    if min < 1e-10 * max {
        return Err(Error::DegeneratePositive { ratio: min / max });
    }
    let metric = &b * b.determinant().powf(-1.0 / 9.0);
    let vol = euclidean_volume().scale(orientation.sign() * metric.determinant().sqrt());
    let star_phi = phi.hodge_star(&metric, orientation.sign())?;
    Ok(G2Data { phi: phi.clone(), b, metric, vol, star_phi, orientation })
}

/// Decomposition `φ = ω ∧ dt + ρ` in the frame `(V, ν)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub omega: KForm,
    pub rho: KForm,
    /// Induced SL(3,C) structure on `V`, oriented so that `(V, ν)` is positive.
    pub data: SL3CData,
    pub taming_margin: f64,
    /// `|ω ∧ ρ|`, zero when `ν` is orthogonal to `V`.
    pub orthogonality_defect: f64,
    /// `|⅙ ω^3 - vol_ρ|`, zero when additionally `|ν| = 1`.
    pub normalization_defect: f64,
}

/// Splits φ along a transverse vector `nu` and a basis `v` (7x6, columns) of a complement.
pub fn split(phi: &KForm, nu: &[f64], v: &DMatrix<f64>, orientation: Orientation) -> Result<Split> {
    check_shape(phi)?;
    if nu.len() != 7 || v.nrows() != 7 || v.ncols() != 6 {
        return Err(Error::DimensionMismatch(v.ncols(), 6));
    }
    let mut frame = DMatrix::zeros(7, 7);
    frame.view_mut((0, 0), (7, 6)).copy_from(v);
    for i in 0..7 {
        frame[(i, 6)] = nu[i];
    }
    let det = frame.determinant();
    let scale = frame.column_iter().map(|c| c.norm()).product::<f64>();
    if det.abs() <= 1e-12 * scale {
        return Err(Error::DegenerateFrame);
    }
    let adapted = phi.pullback(&frame)?;
    let mut e7 = [0.0; 7];
    e7[T] = 1.0;
    let restrict = DMatrix::from_fn(7, 6, |r, c| if r == c { 1.0 } else { 0.0 });
    let omega = adapted.contract(&e7)?.pullback(&restrict)?;
    let rho = adapted.pullback(&restrict)?;
    let induced = if det > 0.0 { orientation } else { orientation.flipped() };
    let data = sl3c::analyze_definite(&rho, induced)?;
    let taming_margin = sl3c::taming_check(&omega, &data)?.margin;
    let orthogonality_defect = omega.wedge(&rho)?.max_abs();
    let cube = omega.wedge(&omega)?.wedge(&omega)?.scale(1.0 / 6.0);
    let normalization_defect = (&cube - &data.vol).max_abs();
    Ok(Split { omega, rho, data, taming_margin, orthogonality_defect, normalization_defect })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub d_phi: f64,
    pub d_star_phi: f64,
}

/// Field of `*φ` for a positive 3-form field.
pub fn star_phi_field(phi: &FormField, orientation: Orientation) -> FormField {
    phi.map(4, move |_, f| Ok(analyze_positive(&f, orientation)?.star_phi))
}

/// Max norms of `dφ` and `d*φ` over `points` (default: the chart grid).
pub fn torsion_residual(phi: &FormField, orientation: Orientation, points: Option<&[Vec<f64>]>) -> Result<TorsionReport> {
    if phi.chart().dim() != 7 || phi.degree() != 3 {
        return Err(Error::DegreeMismatch { expected: 3, found: phi.degree() });
    }
    let owned;
    let points = match points {
        Some(p) => p,
        None => {
            owned = phi.chart().grid_points();
            &owned
        }
    };
    points.par_iter().try_for_each(|p| {
        let f = phi.eval(p)?;
        analyze_positive(&f, orientation)
            .map(|_| ())
            .map_err(|e| Error::PositivityFailure { point: p.clone(), reason: e.to_string() })
    })?;
    let d_phi = phi.exterior_derivative()?.max_norm_on(points)?;
    let d_star_phi = star_phi_field(phi, orientation).exterior_derivative()?.max_norm_on(points)?;
    Ok(TorsionReport { d_phi, d_star_phi })
}
