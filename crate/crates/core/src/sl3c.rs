//! Definite 3-forms on six-dimensional spaces and the SL(3,C)-structures they define.
//!
//! Coordinates are ordered `(x1, y1, x2, y2, x3, y3)`, with the standard complex
//! structure sending `∂x_j` to `∂y_j`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::basis::{masks, position};
use crate::exterior::{ComplexForm, FormField, KForm, Orientation, C64};

/// `Re(dz1 dz2 dz3)`.
pub fn rho0() -> KForm {
    let mut r = KForm::zero(6, 3);
    r.add_term(1.0, &[0, 2, 4]);
    r.add_term(-1.0, &[0, 3, 5]);
    r.add_term(-1.0, &[1, 2, 5]);
    r.add_term(-1.0, &[1, 3, 4]);
    r
}

/// `Im(dz1 dz2 dz3)`.
pub fn rho0_tilde() -> KForm {
    let mut r = KForm::zero(6, 3);
    r.add_term(1.0, &[0, 2, 5]);
    r.add_term(1.0, &[0, 3, 4]);
    r.add_term(1.0, &[1, 2, 4]);
    r.add_term(-1.0, &[1, 3, 5]);
    r
}

/// `dx1 dy1 + dx2 dy2 + dx3 dy3`.
pub fn omega0() -> KForm {
    let mut w = KForm::zero(6, 2);
    for j in 0..3 {
        w.add_term(1.0, &[2 * j, 2 * j + 1]);
    }
    w
}

/// The standard complex structure: `∂x_j -> ∂y_j`, `∂y_j -> -∂x_j`.
pub fn standard_complex_structure() -> DMatrix<f64> {
    let mut i = DMatrix::zeros(6, 6);
    for j in 0..3 {
        i[(2 * j + 1, 2 * j)] = 1.0;
        i[(2 * j, 2 * j + 1)] = -1.0;
    }
    i
}

/// `l1 dx2dy2dx3dy3 + l2 dx3dy3dx1dy1 + l3 dx1dy1dx2dy2`.
pub fn normal_form_22(l: [f64; 3]) -> KForm {
    let mut s = KForm::zero(6, 4);
    s.add_term(l[0], &[2, 3, 4, 5]);
    s.add_term(l[1], &[0, 1, 4, 5]);
    s.add_term(l[2], &[0, 1, 2, 3]);
    s
}

/// The 6-form `dx1 dy1 dx2 dy2 dx3 dy3`.
pub fn euclidean_volume() -> KForm {
    KForm::basis(6, &[0, 1, 2, 3, 4, 5])
}

// `I = SIGN * K / sqrt(-lambda)` sends ∂x1 to ∂y1 for rho0 in the positive orientation.
const COMPLEX_STRUCTURE_SIGN: f64 = -1.0;

fn check_shape(rho: &KForm) -> Result<()> {
    if rho.dim() != 6 {
        return Err(Error::DimensionMismatch(rho.dim(), 6));
    }
    if rho.degree() != 3 {
        return Err(Error::DegreeMismatch { expected: 3, found: rho.degree() });
    }
    Ok(())
}

/// The endomorphism `K(v) = A(i_v rho ^ rho)`, where `A` identifies 5-forms
/// with vectors through `i_w e* = alpha` and `e* = ±dx1..dy3` by orientation.
pub fn hitchin_endomorphism(rho: &KForm, orientation: Orientation) -> Result<DMatrix<f64>> {
    check_shape(rho)?;
    let s = orientation.sign();
    let mut k = DMatrix::zeros(6, 6);
    let mut e = [0.0; 6];
    for i in 0..6 {
        e.fill(0.0);
        e[i] = 1.0;
        let five = rho.contract(&e)?.wedge(rho)?;
        for j in 0..6 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            k[(j, i)] = s * sign * five.coeffs()[position(6, 0x3F & !(1u8 << j))];
        }
    }
    Ok(k)
}

/// The quartic invariant `lambda = tr(K^2) / 6`; negative exactly on definite forms.
pub fn hitchin_lambda(rho: &KForm) -> Result<f64> {
    let k = hitchin_endomorphism(rho, Orientation::Positive)?;
    Ok((&k * &k).trace() / 6.0)
}

fn lambda0() -> f64 {
    hitchin_lambda(&rho0()).expect("model form")
}

/// Coefficient of `vol_rho` against `dx1..dy3`, continued by zero where rho
/// fails to be definite. Coincides with `vol_rho` on definite forms.
pub fn volume_density(rho: &KForm, orientation: Orientation) -> Result<f64> {
    let l = hitchin_lambda(rho)?;
    Ok(orientation.sign() * (l.min(0.0) / lambda0()).sqrt())
}

/// A definite 3-form with its induced structure.
#[derive(Clone, Debug, PartialEq)]
pub struct SL3CData {
    pub rho: KForm,
    pub lambda: f64,
    /// Almost-complex structure acting on column vectors.
    pub complex_structure: DMatrix<f64>,
    pub rho_tilde: KForm,
    pub vol: KForm,
    pub orientation: Orientation,
}

impl SL3CData {
    /// `rho + i rho~`.
    pub fn omega_30(&self) -> ComplexForm {
        ComplexForm::new(self.rho.clone(), self.rho_tilde.clone())
    }

    /// Coefficient of `vol` against `dx1..dy3`.
    pub fn vol_coefficient(&self) -> f64 {
        self.vol.top()
    }
}

/// Decides definiteness and builds the induced structure.
pub fn analyze_definite(rho: &KForm, orientation: Orientation) -> Result<SL3CData> {
    check_shape(rho)?;
    let k = hitchin_endomorphism(rho, orientation)?;
    let lambda = (&k * &k).trace() / 6.0;
    let scale = rho.norm().powi(4);
    if lambda.abs() <= 1e-12 * scale || scale == 0.0 {
        return Err(Error::Degenerate { lambda });
    }
    if lambda > 0.0 {
        return Err(Error::NotDefinite { lambda });
    }
    let i = k * (COMPLEX_STRUCTURE_SIGN / (-lambda).sqrt());
    let rho_tilde = rho.pullback(&i)?;
    let vol = rho.wedge(&rho_tilde)?.scale(0.25);
    Ok(SL3CData { rho: rho.clone(), lambda, complex_structure: i, rho_tilde, vol, orientation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    pub min_rank: usize,
    pub max_rank: usize,
    pub samples: usize,
}

/// Rank of `i_v rho` over pseudo-random unit vectors `v`.
pub fn rank_test(rho: &KForm, samples: usize, seed: u64) -> Result<RankReport> {
    check_shape(rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_rank = usize::MAX;
    let mut max_rank = 0;
    for _ in 0..samples {
        let mut v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        v.iter_mut().for_each(|x| *x /= n);
        let sv = rho.contract(&v)?.to_matrix().singular_values();
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-9 * smax && s > 0.0).count();
        min_rank = min_rank.min(rank);
        max_rank = max_rank.max(rank);
    }
    if samples == 0 {
        min_rank = 0;
    }
    Ok(RankReport { min_rank, max_rank, samples })
}

fn check_complex_structure(i: &DMatrix<f64>) -> Result<()> {
    if i.nrows() != i.ncols() {
        return Err(Error::NotComplexStructure(f64::INFINITY));
    }
    let defect = (i * i + DMatrix::identity(i.nrows(), i.ncols())).amax();
    if defect > 1e-8 {
        return Err(Error::NotComplexStructure(defect));
    }
    Ok(())
}

/// The `(p, q)` component of `a` for the complex structure `i`, obtained by
/// averaging `e^{-i(p-q)θ} R_θ^* a` over `R_θ = cos θ + sin θ I`.
pub fn bitype_project(a: &KForm, i: &DMatrix<f64>, p: usize, q: usize) -> Result<ComplexForm> {
    check_complex_structure(i)?;
    if p + q != a.degree() {
        return Err(Error::DegreeMismatch { expected: a.degree(), found: p + q });
    }
    if i.nrows() != a.dim() {
        return Err(Error::DimensionMismatch(i.nrows(), a.dim()));
    }
    let n = a.dim();
    let m = 2 * a.degree() + 2;
    let weight = p as f64 - q as f64;
    let mut out = ComplexForm::zero(n, a.degree());
    let id = DMatrix::<f64>::identity(n, n);
    for j in 0..m {
        let theta = std::f64::consts::TAU * j as f64 / m as f64;
        let r = &id * theta.cos() + i * theta.sin();
        let rotated = ComplexForm::real(a.pullback(&r)?);
        let phase = C64::from_polar(1.0 / m as f64, -weight * theta);
        out = &out + &rotated.scale(phase);
    }
    Ok(out)
}

/// First variation of the volume form: `½ δρ ∧ ρ~`.
pub fn delta_vol(data: &SL3CData, drho: &KForm) -> Result<KForm> {
    Ok(drho.wedge(&data.rho_tilde)?.scale(0.5))
}

/// First variation of `ρ~`: `-i δρ30 - i δρ21 + i δρ12 + i δρ03`.
pub fn delta_rho_tilde(data: &SL3CData, drho: &KForm) -> Result<KForm> {
    let i = &data.complex_structure;
    let mut acc = ComplexForm::zero(6, 3);
    for (p, sign) in [(3usize, -1.0), (2, -1.0), (1, 1.0), (0, 1.0)] {
        let part = bitype_project(drho, i, p, 3 - p)?;
        acc = &acc + &part.scale(C64::new(0.0, sign));
    }
    let residue = acc.im.max_abs();
    if residue > 1e-8 * drho.max_abs().max(1.0) {
        return Err(Error::Numerical(format!("delta rho~ has imaginary residue {residue}")));
    }
    Ok(acc.re)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Taming {
    pub margin: f64,
    pub tamed: bool,
}

/// Symmetric matrix of `(ξ, η) -> ½(ω(ξ, Iη) + ω(η, Iξ))`.
pub fn taming_matrix(omega: &KForm, i: &DMatrix<f64>) -> DMatrix<f64> {
    let wi = omega.to_matrix() * i;
    (&wi + wi.transpose()) * 0.5
}

/// Whether `omega` tames the complex structure, with the smallest eigenvalue
/// of its symmetrized Hermitian part as margin.
pub fn taming_check(omega: &KForm, data: &SL3CData) -> Result<Taming> {
    if omega.degree() != 2 {
        return Err(Error::DegreeMismatch { expected: 2, found: omega.degree() });
    }
    let margin = SymmetricEigen::new(taming_matrix(omega, &data.complex_structure)).eigenvalues.min();
    Ok(Taming { margin, tamed: margin > 0.0 })
}

/// A (2,2)-form viewed as a Hermitian form on (1,0)-covectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Herm22 {
    /// Hermitian matrix in a unimodular (1,0)-frame (`α1 ∧ α2 ∧ α3 = ρ + iρ~`).
    pub matrix: DMatrix<C64>,
    /// Eigenvalues of `matrix`, ascending.
    pub eigenvalues: [f64; 3],
    /// Determinant computed from the dual bivector: `⅙ <σ♯^3, vol>`.
    pub det22: f64,
}

/// A unimodular frame of (1,0)-covectors: `α1 ∧ α2 ∧ α3 = ρ + iρ~`.
pub fn unimodular_frame(data: &SL3CData) -> Result<[ComplexForm; 3]> {
    let i = &data.complex_structure;
    let mut frame: Vec<DVector<C64>> = Vec::with_capacity(3);
    for j in 0..6 {
        // α = e^j - i e^j∘I
        let mut v = DVector::from_fn(6, |c, _| C64::new(if c == j { 1.0 } else { 0.0 }, -i[(j, c)]));
        for u in &frame {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let n = v.norm();
        if n > 1e-6 {
            frame.push(v / C64::from(n));
        }
        if frame.len() == 3 {
            break;
        }
    }
    if frame.len() < 3 {
        return Err(Error::DegenerateFrame);
    }
    let mut forms: Vec<ComplexForm> = frame.iter().map(|v| ComplexForm::one_form(v.as_slice())).collect();
    let triple = forms[0].wedge(&forms[1])?.wedge(&forms[2])?;
    let omega = data.omega_30();
    let slot = (0..triple.re.coeffs().len())
        .max_by(|&a, &b| triple.coeff(a).norm().total_cmp(&triple.coeff(b).norm()))
        .ok_or(Error::DegenerateFrame)?;
    let c = omega.coeff(slot) / triple.coeff(slot);
    let root = c.powf(1.0 / 3.0);
    for f in &mut forms {
        *f = f.scale(root);
    }
    Ok([forms[0].clone(), forms[1].clone(), forms[2].clone()])
}

/// Off-(2,2) fraction `|σ - σ22| / |σ|`, with the (2,2) part.
pub fn type22_part(sigma: &KForm, data: &SL3CData) -> Result<(KForm, f64)> {
    if sigma.degree() != 4 || sigma.dim() != 6 {
        return Err(Error::DegreeMismatch { expected: 4, found: sigma.degree() });
    }
    let part = bitype_project(sigma, &data.complex_structure, 2, 2)?.re;
    let n = sigma.norm();
    let frac = if n == 0.0 { 0.0 } else { (sigma - &part).norm() / n };
    Ok((part, frac))
}

/// Hermitian matrix and determinant of a (2,2)-form.
pub fn herm_of_22(sigma: &KForm, data: &SL3CData) -> Result<Herm22> {
    let (_, frac) = type22_part(sigma, data)?;
    if frac > 1e-8 {
        return Err(Error::NotType22(frac));
    }
    herm_of_22_unchecked(sigma, data)
}

pub(crate) fn herm_of_22_unchecked(sigma: &KForm, data: &SL3CData) -> Result<Herm22> {
    let frame = unimodular_frame(data)?;
    let vol = data.vol_coefficient();
    let mut h = DMatrix::<C64>::zeros(3, 3);
    for j in 0..3 {
        for k in 0..3 {
            let two = frame[j].wedge(&frame[k].conj())?.scale(C64::new(0.0, 1.0));
            h[(j, k)] = two.wedge_real(sigma)?.top() * 0.5 / vol;
        }
    }
    let h = (&h + h.adjoint()) * C64::from(0.5);
    let eigenvalues = hermitian_eigenvalues(&h);
    let det22 = det22_from_bivector(sigma, &data.vol)?;
    Ok(Herm22 { matrix: h, eigenvalues, det22 })
}

/// Eigenvalues of a 3x3 Hermitian matrix through its real 6x6 symmetric form.
fn hermitian_eigenvalues(h: &DMatrix<C64>) -> [f64; 3] {
    let n = h.nrows();
    let big = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(big).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    [ev[0], ev[2], ev[4]]
}

/// `⅙ <σ♯^3, vol>` where the bivector `σ♯` satisfies `i_{σ♯} vol = σ`
/// (with `i_{a∧b} = i_b i_a`).
pub fn det22_from_bivector(sigma: &KForm, vol: &KForm) -> Result<f64> {
    let bivectors = masks(6, 2);
    let n4 = masks(6, 4).len();
    let mut m = DMatrix::zeros(n4, bivectors.len());
    for (col, &b) in bivectors.iter().enumerate() {
        let idx: Vec<usize> = crate::exterior::basis::indices(b).collect();
        let mut ea = [0.0; 6];
        let mut eb = [0.0; 6];
        ea[idx[0]] = 1.0;
        eb[idx[1]] = 1.0;
        let four = vol.contract(&ea)?.contract(&eb)?;
        for (row, &c) in four.coeffs().iter().enumerate() {
            m[(row, col)] = c;
        }
    }
    let rhs = DVector::from_column_slice(sigma.coeffs());
    let sol = m.lu().solve(&rhs).ok_or(Error::Numerical("zero volume form".into()))?;
    let sharp = KForm::from_coeffs(6, 2, sol.as_slice().to_vec())?;
    let cube = sharp.wedge(&sharp)?.wedge(&sharp)?;
    Ok(cube.top() * vol.top() / 6.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class22 {
    Positive,
    Semipositive,
    Negative,
    Seminegative,
    Indefinite,
    Zero,
}

/// Sign pattern of the Hermitian form; eigenvalues within `zero_tol` of 0 count as zero.
pub fn classify_eigenvalues(ev: &[f64; 3], zero_tol: f64) -> Class22 {
    let pos = ev.iter().filter(|&&e| e > zero_tol).count();
    let neg = ev.iter().filter(|&&e| e < -zero_tol).count();
    match (pos, neg) {
        (0, 0) => Class22::Zero,
        (3, 0) => Class22::Positive,
        (_, 0) => Class22::Semipositive,
        (0, 3) => Class22::Negative,
        (0, _) => Class22::Seminegative,
        _ => Class22::Indefinite,
    }
}

/// Positivity class of a (2,2)-form.
pub fn classify_22(sigma: &KForm, data: &SL3CData) -> Result<Class22> {
    let h = herm_of_22(sigma, data)?;
    Ok(classify_eigenvalues(&h.eigenvalues, default_zero_tol(&h.eigenvalues)))
}

fn default_zero_tol(ev: &[f64; 3]) -> f64 {
    1e-9 * ev.iter().fold(1.0f64, |m, e| m.max(e.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convexity {
    StrictlyMeanConvex,
    MeanConvex,
    StrictlyMeanConcave,
    MeanConcave,
    /// `dρ~ = 0` everywhere.
    Flat,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointClass {
    pub point: Vec<f64>,
    pub class: Class22,
    pub eigenvalues: [f64; 3],
    pub det22: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanConvexity {
    pub points: Vec<PointClass>,
    pub convexity: Convexity,
    /// Minimum of `det22^(1/3)` over the samples; meaningful when strictly mean-convex.
    pub m: f64,
    /// Largest off-(2,2) fraction of `dρ~` seen.
    pub max_off_type: f64,
    pub closedness_residual: f64,
}

/// Field of `ρ~` for a definite 3-form field.
pub fn rho_tilde_field(rho: &FormField, orientation: Orientation) -> FormField {
    rho.map(3, move |_, r| Ok(analyze_definite(&r, orientation)?.rho_tilde))
}

/// Classifies `dρ~` at `points` (default: the chart grid) for a closed
/// definite field. Eigenvalues below `zero_tol` count as zero.
pub fn mean_convexity(
    rho: &FormField,
    orientation: Orientation,
    points: Option<&[Vec<f64>]>,
    zero_tol: f64,
) -> Result<MeanConvexity> {
    use rayon::prelude::*;
    let owned;
    let points = match points {
        Some(p) => p,
        None => {
            owned = rho.chart().grid_points();
            &owned
        }
    };
    let drho = rho.exterior_derivative()?;
    let closedness_residual = drho.max_norm_on(points)?;
    if closedness_residual > 1e-5 {
        return Err(Error::NotClosed(closedness_residual));
    }
    let drt = rho_tilde_field(rho, orientation).exterior_derivative()?;
    let results: Result<Vec<(PointClass, f64)>> = points
        .par_iter()
        .map(|p| {
            let data = analyze_definite(&rho.eval(p)?, orientation)?;
            let sigma = drt.eval(p)?;
            let scale = sigma.norm();
            let (part, frac) = type22_part(&sigma, &data)?;
            let frac = if scale <= zero_tol { 0.0 } else { frac };
            if frac > 1e-4 {
                return Err(Error::OffTypeDerivative { fraction: frac, point: p.clone() });
            }
            let h = herm_of_22_unchecked(&part, &data)?;
            let class = classify_eigenvalues(&h.eigenvalues, zero_tol);
            Ok((PointClass { point: p.clone(), class, eigenvalues: h.eigenvalues, det22: h.det22 }, frac))
        })
        .collect();
    let results = results?;
    let max_off_type = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let points: Vec<PointClass> = results.into_iter().map(|r| r.0).collect();
    let all = |f: &dyn Fn(Class22) -> bool| points.iter().all(|p| f(p.class));
    let convexity = if all(&|c| c == Class22::Zero) {
        Convexity::Flat
    } else if all(&|c| c == Class22::Positive) {
        Convexity::StrictlyMeanConvex
    } else if all(&|c| matches!(c, Class22::Positive | Class22::Semipositive)) {
        Convexity::MeanConvex
    } else if all(&|c| c == Class22::Negative) {
        Convexity::StrictlyMeanConcave
    } else if all(&|c| matches!(c, Class22::Negative | Class22::Seminegative)) {
        Convexity::MeanConcave
    } else {
        Convexity::Mixed
    };
    let m = points.iter().map(|p| p.det22.cbrt()).fold(f64::INFINITY, f64::min);
    Ok(MeanConvexity { points, convexity, m, max_off_type, closedness_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_structure() {
        let d = analyze_definite(&rho0(), Orientation::Positive).unwrap();
        assert!((&d.complex_structure - standard_complex_structure()).amax() < 1e-14);
        assert!(d.rho_tilde.distance(&rho0_tilde()) < 1e-14);
        assert!(d.vol.distance(&euclidean_volume()) < 1e-14);
        assert!((volume_density(&rho0(), Orientation::Positive).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orientation_reversal_flips_structure() {
        let d = analyze_definite(&rho0(), Orientation::Negative).unwrap();
        assert!((&d.complex_structure + standard_complex_structure()).amax() < 1e-14);
        assert!(d.vol.distance(&euclidean_volume().scale(-1.0)) < 1e-14);
    }

    #[test]
    fn decomposable_form_is_not_definite() {
        let r = KForm::basis(6, &[0, 1, 2]);
        assert!(matches!(analyze_definite(&r, Orientation::Positive), Err(Error::Degenerate { .. })));
        let mut r = KForm::basis(6, &[0, 2, 4]);
        r.add_term(1.0, &[1, 3, 5]);
        assert!(matches!(analyze_definite(&r, Orientation::Positive), Err(Error::NotDefinite { .. })));
        assert_eq!(rank_test(&KForm::basis(6, &[0, 1, 2]), 20, 1).unwrap().max_rank, 2);
    }

    #[test]
    fn type_decomposition_of_models() {
        let i = standard_complex_structure();
        let w11 = bitype_project(&omega0(), &i, 1, 1).unwrap();
        assert!(w11.re.distance(&omega0()) < 1e-14 && w11.im.max_abs() < 1e-14);
        assert!(bitype_project(&omega0(), &i, 2, 0).unwrap().norm() < 1e-14);
        let r30 = bitype_project(&rho0(), &i, 3, 0).unwrap();
        assert!(r30.re.distance(&rho0().scale(0.5)) < 1e-14);
        assert!(r30.im.distance(&rho0_tilde().scale(0.5)) < 1e-14);
        assert!(bitype_project(&rho0(), &i, 2, 1).unwrap().norm() < 1e-14);
    }

    #[test]
    fn taming_of_model() {
        let d = analyze_definite(&rho0(), Orientation::Positive).unwrap();
        let t = taming_check(&omega0(), &d).unwrap();
        assert!((t.margin - 1.0).abs() < 1e-12 && t.tamed);
        assert!((taming_check(&-omega0(), &d).unwrap().margin + 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_form_eigenvalues() {
        let d = analyze_definite(&rho0(), Orientation::Positive).unwrap();
        let h = herm_of_22(&normal_form_22([1.0, 2.0, 3.0]), &d).unwrap();
        assert!((h.eigenvalues[0] - 1.0).abs() < 1e-12 && (h.eigenvalues[2] - 3.0).abs() < 1e-12);
        assert!((h.det22 - 6.0).abs() < 1e-12);
        let w2 = omega0().wedge(&omega0()).unwrap();
        let h = herm_of_22(&w2, &d).unwrap();
        assert!(h.eigenvalues.iter().all(|e| (e - 2.0).abs() < 1e-12));
        assert!((h.det22 - 8.0).abs() < 1e-12);
    }

    #[test]
    fn classification_buckets() {
        let d = analyze_definite(&rho0(), Orientation::Positive).unwrap();
        let c = |l| classify_22(&normal_form_22(l), &d).unwrap();
        assert_eq!(c([1.0, 1.0, 0.0]), Class22::Semipositive);
        assert_eq!(c([1.0, -1.0, 1.0]), Class22::Indefinite);
        assert_eq!(c([-1.0, -1.0, -2.0]), Class22::Negative);
        assert_eq!(c([0.0, 0.0, 0.0]), Class22::Zero);
        let off = KForm::basis(6, &[0, 2, 4, 1]);
        assert!(matches!(classify_22(&off, &d), Err(Error::NotType22(_))));
    }
}
