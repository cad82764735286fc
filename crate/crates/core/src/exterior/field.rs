use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{masks, position, wedge_sign};
use super::form::KForm;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Orientation::Negative
        } else {
            Orientation::Positive
        }
    }
}

impl std::ops::Mul for Orientation {
    type Output = Orientation;
    fn mul(self, rhs: Orientation) -> Orientation {
        Orientation::from_sign(self.sign() * rhs.sign())
    }
}

/// Axis-aligned coordinate box with a sampling grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    lo: Vec<f64>,
    hi: Vec<f64>,
    grid: Vec<usize>,
    orientation: Orientation,
    periodic: Vec<bool>,
}

impl Chart {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, grid: Vec<usize>) -> Result<Self> {
        let dim = lo.len();
        if dim == 0 || dim > super::basis::MAX_DIM {
            return Err(Error::InvalidChart(format!("dimension {dim} outside 1..=8")));
        }
        if hi.len() != dim || grid.len() != dim {
            return Err(Error::InvalidChart("lo/hi/grid lengths differ".into()));
        }
        if let Some(i) = (0..dim).find(|&i| !(lo[i] < hi[i])) {
            return Err(Error::InvalidChart(format!("axis {i}: lo {} >= hi {}", lo[i], hi[i])));
        }
        if let Some(i) = grid.iter().position(|&g| g < 2) {
            return Err(Error::InvalidChart(format!("axis {i}: grid count below 2")));
        }
        Ok(Chart { lo, hi, grid, orientation: Orientation::Positive, periodic: vec![false; dim] })
    }

    /// `[lo, hi]^dim` with `n` samples per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Chart::new(vec![lo; dim], vec![hi; dim], vec![n; dim])
    }

    /// The unit cube `[0,1]^dim`.
    pub fn unit_cube(dim: usize, n: usize) -> Self {
        Chart::cube(dim, 0.0, 1.0, n).expect("valid unit cube")
    }

    pub fn with_periodic(mut self, axes: &[usize]) -> Self {
        for &a in axes {
            self.periodic[a] = true;
        }
        self
    }

    pub fn with_orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    pub fn with_grid(mut self, grid: Vec<usize>) -> Result<Self> {
        if grid.len() != self.dim() || grid.iter().any(|&g| g < 2) {
            return Err(Error::InvalidChart("bad grid override".into()));
        }
        self.grid = grid;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn grid(&self) -> &[usize] {
        &self.grid
    }
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }
    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn min_extent(&self) -> f64 {
        (0..self.dim()).map(|i| self.extent(i)).fold(f64::INFINITY, f64::min)
    }

    fn tol(&self, axis: usize) -> f64 {
        1e-12 * self.extent(axis).max(1.0)
    }

    /// Maps periodic coordinates into `[lo, hi)`.
    pub fn wrap(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(i, &x)| {
                if self.periodic[i] {
                    let w = self.extent(i);
                    self.lo[i] + (x - self.lo[i]).rem_euclid(w)
                } else {
                    x
                }
            })
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|i| {
                self.periodic[i] || (p[i] >= self.lo[i] - self.tol(i) && p[i] <= self.hi[i] + self.tol(i))
            })
    }

    /// Sample coordinates along `axis`: endpoints included, except on periodic
    /// axes where `hi` is identified with `lo`.
    pub fn nodes(&self, axis: usize) -> Vec<f64> {
        let n = self.grid[axis];
        let (lo, w) = (self.lo[axis], self.extent(axis));
        if self.periodic[axis] {
            (0..n).map(|i| lo + w * i as f64 / n as f64).collect()
        } else {
            (0..n).map(|i| lo + w * i as f64 / (n - 1) as f64).collect()
        }
    }

    /// Quadrature weights along `axis`: trapezoid, or rectangle on periodic axes.
    pub fn weights(&self, axis: usize) -> Vec<f64> {
        let n = self.grid[axis];
        let w = self.extent(axis);
        if self.periodic[axis] {
            vec![w / n as f64; n]
        } else {
            let h = w / (n - 1) as f64;
            (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect()
        }
    }

    pub fn num_points(&self) -> usize {
        self.grid.iter().product()
    }

    /// Grid point with flat index `idx` (last axis fastest) and its quadrature weight.
    pub fn point(&self, idx: usize, nodes: &[Vec<f64>], weights: &[Vec<f64>]) -> (Vec<f64>, f64) {
        let mut rem = idx;
        let mut p = vec![0.0; self.dim()];
        let mut w = 1.0;
        for axis in (0..self.dim()).rev() {
            let i = rem % self.grid[axis];
            rem /= self.grid[axis];
            p[axis] = nodes[axis][i];
            w *= weights[axis][i];
        }
        (p, w)
    }

    /// All grid points in flat order.
    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        let nodes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.nodes(a)).collect();
        let weights: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.weights(a)).collect();
        (0..self.num_points()).map(|i| self.point(i, &nodes, &weights).0).collect()
    }

    /// An `n x n` grid on the 2-plane spanned by `axes` through `base`, covering
    /// the chart extent along those axes.
    pub fn slice_points(&self, axes: [usize; 2], n: usize, base: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(n * n);
        let at = |axis: usize, i: usize| self.lo[axis] + self.extent(axis) * i as f64 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let mut p = base.to_vec();
                p[axes[0]] = at(axes[0], i);
                p[axes[1]] = at(axes[1], j);
                out.push(p);
            }
        }
        out
    }

    /// Grid points whose finite-difference stencils (step `h`) stay at least
    /// `h`-central in every non-periodic direction.
    pub fn interior_grid_points(&self, margin: f64) -> Vec<Vec<f64>> {
        self.grid_points()
            .into_iter()
            .filter(|p| {
                (0..self.dim()).all(|i| self.periodic[i] || (p[i] - self.lo[i] >= margin && self.hi[i] - p[i] >= margin))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FdScheme {
    /// Second-order differences combined over steps h and h/2.
    #[default]
    Richardson,
    /// Plain second-order differences with step h.
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub step: f64,
    pub scheme: FdScheme,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step: 1e-3, scheme: FdScheme::Richardson }
    }
}

impl FdConfig {
    pub fn central(step: f64) -> Self {
        FdConfig { step, scheme: FdScheme::Central }
    }
    pub fn richardson(step: f64) -> Self {
        FdConfig { step, scheme: FdScheme::Richardson }
    }
}

type VecFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a;

/// Partial derivative along `axis` of a vector-valued function on `chart`.
///
/// Interior points use central differences; within `h` of a non-periodic edge the
/// stencil switches to the one-sided second-order formula.
pub fn fd_partial(chart: &Chart, fd: FdConfig, p: &[f64], axis: usize, f: &VecFn<'_>) -> Result<Vec<f64>> {
    let h = fd.step;
    let lo = chart.lo[axis] - chart.tol(axis);
    let hi = chart.hi[axis] + chart.tol(axis);
    let x = p[axis];
    let shifted = |dx: f64| -> Result<Vec<f64>> {
        let mut q = p.to_vec();
        q[axis] = x + dx;
        f(&q)
    };
    enum Kind {
        Central,
        Forward,
        Backward,
    }
    let kind = if chart.periodic[axis] || (x - h >= lo && x + h <= hi) {
        Kind::Central
    } else if x + 2.0 * h <= hi {
        Kind::Forward
    } else {
        Kind::Backward
    };
    let f0 = match kind {
        Kind::Central => None,
        _ => Some(f(p)?),
    };
    let diff = |step: f64| -> Result<Vec<f64>> {
        Ok(match kind {
            Kind::Central => {
                let a = shifted(step)?;
                let b = shifted(-step)?;
                a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * step)).collect()
            }
            Kind::Forward | Kind::Backward => {
                let s = if matches!(kind, Kind::Forward) { step } else { -step };
                let a = shifted(s)?;
                let b = shifted(2.0 * s)?;
                let c = f0.as_ref().unwrap();
                c.iter()
                    .zip(a.iter().zip(&b))
                    .map(|(c, (a, b))| (-3.0 * c + 4.0 * a - b) / (2.0 * s))
                    .collect()
            }
        })
    };
    match fd.scheme {
        FdScheme::Central => diff(h),
        FdScheme::Richardson => {
            let coarse = diff(h)?;
            let fine = diff(0.5 * h)?;
            Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
        }
    }
}

pub type FieldFn = dyn Fn(&[f64]) -> Result<KForm> + Send + Sync;

/// A k-form field on a chart, given by an evaluation map.
#[derive(Clone)]
pub struct FormField {
    chart: Chart,
    degree: usize,
    eval: Arc<FieldFn>,
    fd: FdConfig,
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormField").field("chart", &self.chart).field("degree", &self.degree).field("fd", &self.fd).finish()
    }
}

impl FormField {
    pub fn new<F>(chart: Chart, degree: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<KForm> + Send + Sync + 'static,
    {
        assert!(degree <= chart.dim());
        FormField { chart, degree, eval: Arc::new(eval), fd: FdConfig::default() }
    }

    pub fn constant(chart: Chart, form: KForm) -> Self {
        assert_eq!(form.dim(), chart.dim());
        let k = form.degree();
        FormField::new(chart, k, move |_| Ok(form.clone()))
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        assert_eq!(chart.dim(), self.chart.dim());
        self.chart = chart;
        self
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn fd(&self) -> FdConfig {
        self.fd
    }

    pub fn eval(&self, p: &[f64]) -> Result<KForm> {
        if !self.chart.contains(p) {
            return Err(Error::OutsideDomain(p.to_vec()));
        }
        let q = self.chart.wrap(p);
        let form = (self.eval)(&q)?;
        if form.degree() != self.degree || form.dim() != self.chart.dim() {
            return Err(Error::DegreeMismatch { expected: self.degree, found: form.degree() });
        }
        Ok(form)
    }

    /// Derivative of the coefficients along `axis`.
    pub fn partial(&self, p: &[f64], axis: usize) -> Result<KForm> {
        let n = self.chart.dim();
        let k = self.degree;
        let coeffs = fd_partial(&self.chart, self.fd, p, axis, &|q| self.eval(q).map(KForm::into_coeffs))?;
        KForm::from_coeffs(n, k, coeffs)
    }

    /// Exterior derivative at a point.
    pub fn d_at(&self, p: &[f64]) -> Result<KForm> {
        let n = self.chart.dim();
        let k = self.degree;
        let mut out = KForm::zero(n, k + 1);
        let src = masks(n, k);
        for j in 0..n {
            let dj = self.partial(p, j)?;
            let bit = 1u8 << j;
            for (&m, &c) in src.iter().zip(dj.coeffs()) {
                if m & bit == 0 && c != 0.0 {
                    out.coeffs_mut()[position(n, m | bit)] += wedge_sign(bit, m) * c;
                }
            }
        }
        Ok(out)
    }

    fn check_step(&self) -> Result<()> {
        let limit = 0.25 * self.chart.min_extent();
        if self.fd.step > limit {
            return Err(Error::StepTooLarge { step: self.fd.step, limit });
        }
        Ok(())
    }

    /// The exterior derivative field, computed by finite differences.
    pub fn exterior_derivative(&self) -> Result<FormField> {
        if self.degree + 1 > self.chart.dim() {
            return Err(Error::DegreeOverflow { k_a: self.degree, k_b: 1, n: self.chart.dim() });
        }
        self.check_step()?;
        let inner = self.clone();
        Ok(FormField {
            chart: self.chart.clone(),
            degree: self.degree + 1,
            eval: Arc::new(move |p| inner.d_at(p)),
            fd: self.fd,
        })
    }

    /// Pointwise transformation of the field values.
    pub fn map<F>(&self, degree: usize, f: F) -> FormField
    where
        F: Fn(&[f64], KForm) -> Result<KForm> + Send + Sync + 'static,
    {
        let inner = self.clone();
        FormField {
            chart: self.chart.clone(),
            degree,
            eval: Arc::new(move |p| f(p, inner.eval(p)?)),
            fd: self.fd,
        }
    }

    pub fn wedge(&self, other: &FormField) -> Result<FormField> {
        if other.chart.dim() != self.chart.dim() {
            return Err(Error::DimensionMismatch(self.chart.dim(), other.chart.dim()));
        }
        if self.degree + other.degree > self.chart.dim() {
            return Err(Error::DegreeOverflow { k_a: self.degree, k_b: other.degree, n: self.chart.dim() });
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(FormField {
            chart: self.chart.clone(),
            degree: self.degree + other.degree,
            eval: Arc::new(move |p| a.eval(p)?.wedge(&b.eval(p)?)),
            fd: self.fd,
        })
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        if other.degree != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(FormField {
            chart: self.chart.clone(),
            degree: self.degree,
            eval: Arc::new(move |p| a.eval(p)?.try_add(&b.eval(p)?)),
            fd: self.fd,
        })
    }

    pub fn scale(&self, c: f64) -> FormField {
        self.map(self.degree, move |_, f| Ok(f.scale(c)))
    }

    /// Pullback along `m`, whose target must match this field's chart.
    pub fn pullback(&self, m: &SmoothMap) -> Result<FormField> {
        if m.target.dim() != self.chart.dim() {
            return Err(Error::DimensionMismatch(m.target.dim(), self.chart.dim()));
        }
        if self.degree > m.source.dim() {
            return Err(Error::DegreeOverflow { k_a: self.degree, k_b: 0, n: m.source.dim() });
        }
        let field = self.clone();
        let map = m.clone();
        Ok(FormField {
            chart: m.source.clone(),
            degree: self.degree,
            eval: Arc::new(move |p| {
                let y = map.eval(p)?;
                if !field.chart.contains(&y) {
                    return Err(Error::OutsideDomain(y));
                }
                let jac = map.jacobian(p)?;
                field.eval(&y)?.pullback(&jac)
            }),
            fd: self.fd,
        })
    }

    /// Integral of a top-degree field over the chart: tensor trapezoid rule
    /// (rectangle rule on periodic axes) times the chart orientation sign.
    pub fn integrate(&self) -> Result<f64> {
        let n = self.chart.dim();
        if self.degree != n {
            return Err(Error::DegreeMismatch { expected: n, found: self.degree });
        }
        let sum = grid_sum(&self.chart, |p| Ok(self.eval(p)?.top()))?;
        Ok(self.chart.orientation.sign() * sum)
    }

    /// Max over the chart grid of the coefficient max-norm.
    pub fn max_norm_on_grid(&self) -> Result<f64> {
        self.max_norm_on(&self.chart.grid_points())
    }

    pub fn max_norm_on(&self, points: &[Vec<f64>]) -> Result<f64> {
        let vals: Result<Vec<f64>> = points.par_iter().map(|p| Ok(self.eval(p)?.max_abs())).collect();
        Ok(vals?.into_iter().fold(0.0, f64::max))
    }
}

/// Weighted sum over the chart grid with a fixed reduction order.
pub fn grid_sum<F>(chart: &Chart, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let nodes: Vec<Vec<f64>> = (0..chart.dim()).map(|a| chart.nodes(a)).collect();
    let weights: Vec<Vec<f64>> = (0..chart.dim()).map(|a| chart.weights(a)).collect();
    let total = chart.num_points();
    let outer = chart.grid[0];
    let inner = total / outer;
    let partial: Result<Vec<f64>> = (0..outer)
        .into_par_iter()
        .map(|o| {
            let mut acc = 0.0;
            for i in 0..inner {
                let (p, w) = chart.point(o * inner + i, &nodes, &weights);
                if w != 0.0 {
                    acc += w * f(&p)?;
                }
            }
            Ok(acc)
        })
        .collect();
    Ok(partial?.into_iter().sum())
}

pub type PointFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
pub type JacobianFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// A smooth map between charts with an optional analytic Jacobian.
#[derive(Clone)]
pub struct SmoothMap {
    source: Chart,
    target: Chart,
    eval: Arc<PointFn>,
    jacobian: Option<Arc<JacobianFn>>,
    fd: FdConfig,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("source", &self.source)
            .field("target", &self.target)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(source: Chart, target: Chart, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        SmoothMap { source, target, eval: Arc::new(eval), jacobian: None, fd: FdConfig::richardson(1e-4) }
    }

    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self
    }

    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn identity(chart: Chart) -> Self {
        let n = chart.dim();
        SmoothMap::new(chart.clone(), chart, |p| Ok(p.to_vec())).with_jacobian(move |_| Ok(DMatrix::identity(n, n)))
    }

    /// `p -> a p + b`.
    pub fn affine(source: Chart, target: Chart, a: DMatrix<f64>, b: Vec<f64>) -> Self {
        assert_eq!((a.nrows(), a.ncols()), (target.dim(), source.dim()));
        let a2 = a.clone();
        SmoothMap::new(source, target, move |p| {
            let v = &a * nalgebra::DVector::from_column_slice(p);
            Ok(v.iter().zip(&b).map(|(x, y)| x + y).collect())
        })
        .with_jacobian(move |_| Ok(a2.clone()))
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }
    pub fn target(&self) -> &Chart {
        &self.target
    }
    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        let y = (self.eval)(p)?;
        if y.len() != self.target.dim() {
            return Err(Error::DimensionMismatch(y.len(), self.target.dim()));
        }
        Ok(y)
    }

    /// Jacobian (target-dim x source-dim), analytic when available.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &self.jacobian {
            Some(j) => j(p),
            None => self.fd_jacobian(p),
        }
    }

    pub fn fd_jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let (m, n) = (self.target.dim(), self.source.dim());
        let mut jac = DMatrix::zeros(m, n);
        for j in 0..n {
            let col = fd_partial(&self.source, self.fd, p, j, &|q| self.eval(q))?;
            for i in 0..m {
                jac[(i, j)] = col[i];
            }
        }
        Ok(jac)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SmoothMap) -> Result<SmoothMap> {
        if self.target.dim() != next.source.dim() {
            return Err(Error::DimensionMismatch(self.target.dim(), next.source.dim()));
        }
        let (f, g) = (self.clone(), next.clone());
        let (f2, g2) = (self.clone(), next.clone());
        Ok(SmoothMap::new(self.source.clone(), next.target.clone(), move |p| g.eval(&f.eval(p)?))
            .with_jacobian(move |p| {
                let y = f2.eval(p)?;
                Ok(g2.jacobian(&y)? * f2.jacobian(p)?)
            }))
    }
}

/// Integral of a 3-form field over the singular cube `cube: [0,1]^3 -> chart`.
pub fn chain_integral(field: &FormField, cube: &SmoothMap) -> Result<f64> {
    if field.degree() != 3 {
        return Err(Error::DegreeMismatch { expected: 3, found: field.degree() });
    }
    if cube.source().dim() != 3 {
        return Err(Error::DimensionMismatch(cube.source().dim(), 3));
    }
    field.pullback(cube)?.integrate()
}

#[cfg(test)]
mod tests {
    use super::*;

    // f = x y^2 dz on R^3
    fn sample_field(chart: Chart) -> FormField {
        FormField::new(chart, 1, |p| Ok(KForm::basis(3, &[2]).scale(p[0] * p[1] * p[1])))
    }

    #[test]
    fn derivative_of_polynomial_form() {
        let f = sample_field(Chart::cube(3, -1.0, 1.0, 5).unwrap());
        let df = f.exterior_derivative().unwrap();
        for p in [[0.3, -0.2, 0.1], [1.0, 1.0, -1.0], [-1.0, 0.5, 0.0]] {
            let got = df.eval(&p).unwrap();
            let mut want = KForm::basis(3, &[0, 2]).scale(p[1] * p[1]);
            want.add_term(2.0 * p[0] * p[1], &[1, 2]);
            assert!(got.distance(&want) < 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn second_derivative_vanishes() {
        let chart = Chart::cube(3, 0.0, 1.0, 4).unwrap();
        let f = FormField::new(chart, 1, |p| Ok(KForm::one_form(&[p[1].sin() * p[2], p[0].exp(), p[0] * p[1] * p[2]])))
            .with_fd(FdConfig::richardson(1e-2));
        let ddf = f.exterior_derivative().unwrap().exterior_derivative().unwrap();
        assert!(ddf.max_norm_on_grid().unwrap() < 1e-6);
    }

    #[test]
    fn central_scheme_is_second_order() {
        let chart = Chart::cube(1, 0.0, 2.0, 3).unwrap();
        let err = |h: f64| {
            let f = FormField::new(chart.clone(), 0, |p| Ok(KForm::scalar(1, p[0].sin()))).with_fd(FdConfig::central(h));
            (f.exterior_derivative().unwrap().eval(&[1.0]).unwrap().coeffs()[0] - 1f64.cos()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn step_limit() {
        let f = sample_field(Chart::cube(3, 0.0, 1.0, 3).unwrap()).with_fd(FdConfig::central(0.3));
        assert!(matches!(f.exterior_derivative(), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn volume_integral_and_orientation() {
        let chart = Chart::new(vec![0.0, 0.0], vec![2.0, 3.0], vec![3, 4]).unwrap();
        let vol = FormField::constant(chart.clone(), KForm::basis(2, &[0, 1]));
        assert!((vol.integrate().unwrap() - 6.0).abs() < 1e-12);
        let neg = vol.with_chart(chart.with_orientation(Orientation::Negative));
        assert!((neg.integrate().unwrap() + 6.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_rectangle_rule_is_spectral() {
        let tau = std::f64::consts::TAU;
        let chart = Chart::new(vec![0.0], vec![tau], vec![8]).unwrap().with_periodic(&[0]);
        let f = FormField::new(chart, 1, |p| Ok(KForm::one_form(&[p[0].cos().powi(2)])));
        assert!((f.integrate().unwrap() - std::f64::consts::PI).abs() < 1e-12);
        // Points outside the period are wrapped.
        assert!(f.eval(&[tau + 0.5]).is_ok());
    }

    #[test]
    fn pullback_functoriality() {
        let c2 = Chart::cube(2, -1.0, 1.0, 3).unwrap();
        let c3 = Chart::cube(3, -5.0, 5.0, 3).unwrap();
        let f = SmoothMap::new(c2.clone(), c3.clone(), |p| Ok(vec![p[0] + p[1], p[0] * p[1], p[0] - p[1] * p[1]]));
        let g = SmoothMap::new(c3.clone(), c3.clone(), |p| Ok(vec![p[0].sin(), p[1] + p[2], p[0] * p[2]]));
        let c3b = Chart::cube(3, -50.0, 50.0, 3).unwrap();
        let g = SmoothMap::new(c3, c3b.clone(), move |p| g.eval(p));
        let alpha = FormField::new(c3b, 2, |p| {
            let mut a = KForm::basis(3, &[0, 1]).scale(p[2]);
            a.add_term(p[0] * p[1], &[1, 2]);
            Ok(a)
        });
        let lhs = alpha.pullback(&f.then(&g).unwrap()).unwrap();
        let rhs = alpha.pullback(&g).unwrap().pullback(&f).unwrap();
        for p in c2.grid_points() {
            assert!(lhs.eval(&p).unwrap().distance(&rhs.eval(&p).unwrap()) < 1e-7);
        }
    }

    #[test]
    fn chain_integral_of_volume() {
        let c3 = Chart::cube(3, -2.0, 2.0, 3).unwrap();
        let vol = FormField::constant(c3.clone(), KForm::basis(3, &[0, 1, 2]));
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 2.0, 0.0, 0.3, 0.0, 0.5]);
        let cube = SmoothMap::affine(Chart::unit_cube(3, 3), c3, a, vec![-1.0, -1.0, -1.0]);
        assert!((chain_integral(&vol, &cube).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pullback_outside_target_is_rejected() {
        let c1 = Chart::cube(1, 0.0, 1.0, 3).unwrap();
        let m = SmoothMap::new(c1.clone(), c1.clone(), |p| Ok(vec![p[0] + 2.0]));
        let f = FormField::constant(c1, KForm::scalar(1, 1.0));
        assert!(matches!(f.pullback(&m).unwrap().eval(&[0.5]), Err(Error::OutsideDomain(_))));
    }
}
