//! Maximal spacelike graphs `x ↦ (x, u(x))` in `R^{p,q}` with Dirichlet data.
//!
//! The graph is discretized by piecewise-linear elements on the Kuhn
//! triangulation of a uniform grid (mapped onto a ball for disc domains). The
//! discrete volume is computed exactly for the interpolant, so Newton's method
//! maximizes an honest functional and local maximality can be tested by direct
//! perturbation. On uniform grids the gradient of the discrete volume divided
//! by the lumped nodal mass is a second-order stencil for
//! `∂ᵢ(√det g g^{ij} ∂ⱼu)`.

use crate::exterior::{fd_partial, grid_sum, Chart, FdConfig, SmoothMap};
use crate::reductions::SpacelikeImmersion;
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Step acceptance threshold on the smallest eigenvalue of `g`.
pub const SPACELIKE_EPS: f64 = 1e-6;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 50;

const CHUNK: usize = 32_768;

/// Grid domain in `R^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Ball of the given radius centred at the origin.
    Ball { dim: usize, radius: f64 },
    /// `[0, length] × B^dim(radius)`; coordinate 0 runs along the axis.
    CylinderOverBall { dim: usize, radius: f64, length: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { dim, .. } => *dim,
            Domain::CylinderOverBall { dim, .. } => dim + 1,
        }
    }

    /// Image of a reference point in `[0,1]^p`.
    ///
    /// The ball map `ξ ↦ R ξ |ξ|_∞ / |ξ|_2` sends the cube faces onto the sphere.
    fn place(&self, s: &[f64]) -> Vec<f64> {
        fn ball(s: &[f64], r: f64) -> Vec<f64> {
            let xi: Vec<f64> = s.iter().map(|v| 2.0 * v - 1.0).collect();
            let two = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if two == 0.0 {
                return xi;
            }
            let inf = xi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            xi.iter().map(|v| r * v * inf / two).collect()
        }
        match self {
            Domain::Box { lo, hi } => s.iter().enumerate().map(|(i, v)| lo[i] + v * (hi[i] - lo[i])).collect(),
            Domain::Ball { radius, .. } => ball(s, *radius),
            Domain::CylinderOverBall { radius, length, .. } => {
                let mut x = vec![s[0] * length];
                x.extend(ball(&s[1..], *radius));
                x
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Simplex {
    nodes: Vec<usize>,
    volume: f64,
    /// Row k is the gradient of the k-th barycentric coordinate.
    grad: DMatrix<f64>,
}

/// Structured mesh triangulated by Kuhn simplices (reflected per orthant on
/// ball-based domains).
#[derive(Clone, Debug)]
pub struct Mesh {
    domain: Domain,
    shape: Vec<usize>,
    nodes: Vec<Vec<f64>>,
    boundary: Vec<bool>,
    simplices: Vec<Simplex>,
    adjacency: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..n {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Mesh {
    /// Structured mesh with `shape[i]` nodes along axis `i` (last axis fastest).
    pub fn new(domain: Domain, shape: Vec<usize>) -> Result<Self> {
        let p = domain.dim();
        if shape.len() != p || p == 0 {
            return Err(Error::DimensionMismatch(shape.len(), p));
        }
        if shape.iter().any(|&n| n < 3) {
            return Err(Error::InvalidChart("mesh needs at least 3 nodes per axis".into()));
        }
        if let Domain::Box { lo, hi } = &domain {
            if hi.len() != p || (0..p).any(|i| !(lo[i] < hi[i])) {
                return Err(Error::InvalidChart("bad box".into()));
            }
        }
        let total: usize = shape.iter().product();
        let mut strides = vec![1usize; p];
        for i in (0..p - 1).rev() {
            strides[i] = strides[i + 1] * shape[i + 1];
        }
        let multi = |mut idx: usize| -> Vec<usize> {
            let mut m = vec![0; p];
            for i in (0..p).rev() {
                m[i] = idx % shape[i];
                idx /= shape[i];
            }
            m
        };
        let mut nodes = Vec::with_capacity(total);
        let mut boundary = Vec::with_capacity(total);
        for idx in 0..total {
            let m = multi(idx);
            let s: Vec<f64> = (0..p).map(|i| m[i] as f64 / (shape[i] - 1) as f64).collect();
            nodes.push(domain.place(&s));
            boundary.push((0..p).any(|i| m[i] == 0 || m[i] == shape[i] - 1));
        }

        let perms = permutations(p);
        let reflect = !matches!(domain, Domain::Box { .. });
        // The cylinder axis stays unreflected so that products are exact discrete solutions.
        let axial = usize::from(matches!(domain, Domain::CylinderOverBall { .. }));
        let fact = factorial(p);
        let mut simplices = Vec::new();
        for idx in 0..total {
            let m = multi(idx);
            if (0..p).any(|i| m[i] == shape[i] - 1) {
                continue;
            }
            // Each cell's diagonal runs away from the centre plane, so every
            // simplex keeps its innermost vertex off the ball boundary.
            // Box domains keep the plain triangulation, whose stencil is the
            // same at every interior node.
            let flip: Vec<bool> = (0..p).map(|i| reflect && i >= axial && 2 * m[i] + 1 < shape[i] - 1).collect();
            let start = idx + (0..p).filter(|&i| flip[i]).map(|i| strides[i]).sum::<usize>();
            for perm in &perms {
                let mut vs = vec![start];
                let mut cur = start;
                for &axis in perm {
                    if flip[axis] {
                        cur -= strides[axis];
                    } else {
                        cur += strides[axis];
                    }
                    vs.push(cur);
                }
                let x0 = &nodes[vs[0]];
                let edges = DMatrix::from_fn(p, p, |r, c| nodes[vs[c + 1]][r] - x0[r]);
                let det = edges.determinant();
                let inv = edges
                    .try_inverse()
                    .ok_or_else(|| Error::Numerical(format!("degenerate mesh simplex at node {idx}")))?;
                let mut grad = DMatrix::zeros(p + 1, p);
                for k in 0..p {
                    for i in 0..p {
                        grad[(k + 1, i)] = inv[(k, i)];
                        grad[(0, i)] -= inv[(k, i)];
                    }
                }
                simplices.push(Simplex { nodes: vs, volume: det.abs() / fact, grad });
            }
        }

        let mut adjacency = vec![Vec::new(); total];
        let mut weights = vec![0.0; total];
        for s in &simplices {
            for &a in &s.nodes {
                weights[a] += s.volume / (p + 1) as f64;
                adjacency[a].extend_from_slice(&s.nodes);
            }
        }
        for row in &mut adjacency {
            row.sort_unstable();
            row.dedup();
        }
        Ok(Mesh { domain, shape, nodes, boundary, simplices, adjacency, weights })
    }

    /// `n` nodes per axis.
    pub fn uniform(domain: Domain, n: usize) -> Result<Self> {
        let p = domain.dim();
        Mesh::new(domain, vec![n; p])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i]
    }
    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }
    pub fn num_simplices(&self) -> usize {
        self.simplices.len()
    }
    /// Lumped mass of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
    /// Volume of the triangulated domain.
    pub fn measure(&self) -> f64 {
        self.simplices.iter().map(|s| s.volume).sum()
    }
    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(|&i| !self.boundary[i])
    }
}

/// A graph over a mesh, values stored node-major (`u[node * q + a]`).
#[derive(Clone, Debug)]
pub struct SpacelikeGraph {
    mesh: Arc<Mesh>,
    q: usize,
    u: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Volume,
    /// The quadratic model `-½|Du|²` whose maximizer is the harmonic extension.
    Dirichlet,
}

struct Local {
    obj: f64,
    grad: Vec<f64>,
    hess: Option<DMatrix<f64>>,
}

fn local(s: &Simplex, u: &[f64], q: usize, mode: Mode, hess: bool, eps: f64) -> std::result::Result<Local, f64> {
    let p = s.grad.ncols();
    let m = p + 1;
    let d = DMatrix::from_fn(q, p, |a, i| (0..m).map(|k| u[s.nodes[k] * q + a] * s.grad[(k, i)]).sum());
    let vol = s.volume;
    // Derivatives of the integrand with respect to D, then chained through U = D Gᵀ.
    let (obj, grad_d, hess_d) = match mode {
        Mode::Dirichlet => {
            let h = hess.then(|| -DMatrix::identity(q * p, q * p) * vol);
            (-0.5 * vol * d.norm_squared(), -&d * vol, h)
        }
        Mode::Volume => {
            let a = DMatrix::identity(p, p) - d.transpose() * &d;
            let eig = SymmetricEigen::new(a.clone());
            let min = eig.eigenvalues.min();
            if !(min > eps) {
                return Err(min);
            }
            let e = eig.eigenvalues.iter().product::<f64>().sqrt();
            let ainv = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l))
                * eig.eigenvectors.transpose();
            let pm = &d * &ainv;
            let h = hess.then(|| {
                let pdt = &pm * d.transpose();
                DMatrix::from_fn(q * p, q * p, |r, c| {
                    let (a, i) = (r / p, r % p);
                    let (b, j) = (c / p, c % p);
                    let delta = if a == b { ainv[(i, j)] } else { 0.0 };
                    vol * e * (pm[(a, i)] * pm[(b, j)] - delta - pm[(b, i)] * pm[(a, j)] - pdt[(b, a)] * ainv[(i, j)])
                })
            });
            (vol * e, -pm * (vol * e), h)
        }
    };
    let mut grad = vec![0.0; m * q];
    for k in 0..m {
        for a in 0..q {
            grad[k * q + a] = (0..p).map(|i| grad_d[(a, i)] * s.grad[(k, i)]).sum();
        }
    }
    let hess = hess_d.map(|hd| {
        let kmat = DMatrix::from_fn(m * q, q * p, |r, c| {
            let (k, a) = (r / q, r % q);
            let (b, i) = (c / p, c % p);
            if a == b {
                s.grad[(k, i)]
            } else {
                0.0
            }
        });
        &kmat * hd * kmat.transpose()
    });
    Ok(Local { obj, grad, hess })
}

/// Block-sparse symmetric matrix on the mesh adjacency pattern.
struct BlockCsr {
    q: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl BlockCsr {
    fn zeros(adj: &[Vec<usize>], q: usize) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for row in adj {
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len() * q * q];
        BlockCsr { q, row_ptr, cols, vals }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        self.row_ptr[i] + row.binary_search(&j).expect("pattern contains simplex pairs")
    }

    /// `y = -A x` restricted to free dofs.
    fn neg_matvec(&self, x: &[f64], free: &[bool], y: &mut [f64]) {
        let q = self.q;
        y.par_chunks_mut(q).enumerate().for_each(|(i, yi)| {
            yi.iter_mut().for_each(|v| *v = 0.0);
            if !free[i] {
                return;
            }
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[s];
                if !free[j] {
                    continue;
                }
                let blk = &self.vals[s * q * q..(s + 1) * q * q];
                for a in 0..q {
                    for b in 0..q {
                        yi[a] -= blk[a * q + b] * x[j * q + b];
                    }
                }
            }
        });
    }

    fn neg_diagonal(&self) -> Vec<f64> {
        let q = self.q;
        let n = self.row_ptr.len() - 1;
        let mut out = vec![0.0; n * q];
        for i in 0..n {
            let s = self.slot(i, i);
            for a in 0..q {
                out[i * q + a] = -self.vals[s * q * q + a * q + a];
            }
        }
        out
    }
}

struct Assembly {
    obj: f64,
    grad: Vec<f64>,
    hess: Option<BlockCsr>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_chunks(4096).zip(b.par_chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum::<f64>()).collect::<Vec<_>>().iter().sum()
}

/// Jacobi-preconditioned CG for `(-H) x = b` on free nodes. Stops early on
/// negative curvature, returning the last iterate (or `b` scaled when none).
fn pcg(h: &BlockCsr, b: &[f64], free: &[bool], rtol: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    let q = h.q;
    let diag = h.neg_diagonal();
    let precond = |r: &[f64]| -> Vec<f64> {
        r.iter()
            .enumerate()
            .map(|(k, v)| if free[k / q] && diag[k] > 0.0 { v / diag[k] } else { 0.0 })
            .collect()
    };
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = b.iter().enumerate().map(|(k, v)| if free[k / q] { *v } else { 0.0 }).collect();
    let bnorm = dot(&r, &r).sqrt();
    if bnorm == 0.0 {
        return x;
    }
    let mut z = precond(&r);
    let mut d = z.clone();
    let mut rz = dot(&r, &z);
    let mut ad = vec![0.0; n];
    for it in 0..max_iter {
        h.neg_matvec(&d, free, &mut ad);
        let curv = dot(&d, &ad);
        if !(curv > 0.0) {
            if it == 0 {
                return z;
            }
            break;
        }
        let alpha = rz / curv;
        x.par_iter_mut().zip(&d).for_each(|(xi, di)| *xi += alpha * di);
        r.par_iter_mut().zip(&ad).for_each(|(ri, ai)| *ri -= alpha * ai);
        if dot(&r, &r).sqrt() <= rtol * bnorm {
            break;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        d.par_iter_mut().zip(&z).for_each(|(di, zi)| *di = zi + beta * *di);
    }
    x
}

impl SpacelikeGraph {
    pub fn new(mesh: Arc<Mesh>, q: usize, u: Vec<f64>) -> Result<Self> {
        if q == 0 || u.len() != mesh.num_nodes() * q {
            return Err(Error::DimensionMismatch(u.len(), mesh.num_nodes() * q));
        }
        Ok(SpacelikeGraph { mesh, q, u })
    }

    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64>>(mesh: Arc<Mesh>, q: usize, f: F) -> Result<Self> {
        let mut u = Vec::with_capacity(mesh.num_nodes() * q);
        for x in &mesh.nodes {
            let v = f(x);
            if v.len() != q {
                return Err(Error::DimensionMismatch(v.len(), q));
            }
            u.extend(v);
        }
        SpacelikeGraph::new(mesh, q, u)
    }

    pub fn p(&self) -> usize {
        self.mesh.dim()
    }
    pub fn q(&self) -> usize {
        self.q
    }
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn values(&self) -> &[f64] {
        &self.u
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }
    pub fn value(&self, node: usize) -> &[f64] {
        &self.u[node * self.q..(node + 1) * self.q]
    }

    fn assemble(&self, source: Option<&[f64]>, mode: Mode, hess: bool, eps: f64) -> Result<Assembly> {
        let mesh = &self.mesh;
        let q = self.q;
        let mut obj = 0.0;
        let mut grad = vec![0.0; self.u.len()];
        let mut h = hess.then(|| BlockCsr::zeros(&mesh.adjacency, q));
        for chunk in mesh.simplices.chunks(CHUNK) {
            let locals: Vec<std::result::Result<Local, f64>> =
                chunk.par_iter().map(|s| local(s, &self.u, q, mode, hess, eps)).collect();
            for (s, l) in chunk.iter().zip(locals) {
                let l = l.map_err(|min| Error::NotSpacelike { point: mesh.nodes[s.nodes[0]].clone(), min_eigenvalue: min })?;
                obj += l.obj;
                for (k, &nk) in s.nodes.iter().enumerate() {
                    for a in 0..q {
                        grad[nk * q + a] += l.grad[k * q + a];
                    }
                }
                if let (Some(h), Some(lh)) = (h.as_mut(), l.hess.as_ref()) {
                    for (k, &nk) in s.nodes.iter().enumerate() {
                        for (m, &nm) in s.nodes.iter().enumerate() {
                            let slot = h.slot(nk, nm);
                            let blk = &mut h.vals[slot * q * q..(slot + 1) * q * q];
                            for a in 0..q {
                                for b in 0..q {
                                    blk[a * q + b] += lh[(k * q + a, m * q + b)];
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some(src) = source {
            for i in 0..mesh.num_nodes() {
                let w = mesh.weights[i];
                for a in 0..q {
                    obj -= w * src[i * q + a] * self.u[i * q + a];
                    grad[i * q + a] -= w * src[i * q + a];
                }
            }
        }
        Ok(Assembly { obj, grad, hess: h })
    }

    fn scaled_residual(&self, grad: &[f64]) -> f64 {
        let q = self.q;
        self.mesh
            .interior_nodes()
            .flat_map(|i| (0..q).map(move |a| (i, a)))
            .map(|(i, a)| (grad[i * q + a] / self.mesh.weights[i]).abs())
            .fold(0.0, f64::max)
    }

    /// Induced volume of the piecewise-linear graph.
    pub fn volume(&self) -> Result<f64> {
        Ok(self.assemble(None, Mode::Volume, false, 0.0)?.obj)
    }

    /// Max-norm over interior nodes of the discrete `∂ᵢ(√det g g^{ij} ∂ⱼu)`.
    pub fn el_residual(&self) -> Result<f64> {
        let a = self.assemble(None, Mode::Volume, false, 0.0)?;
        Ok(self.scaled_residual(&a.grad))
    }

    /// Smallest eigenvalue of `g = Id - DuᵀDu` over all simplices, with the
    /// position of the simplex base node.
    pub fn spacelike_margin(&self) -> (f64, Vec<f64>) {
        let p = self.p();
        let q = self.q;
        let mins: Vec<f64> = self
            .mesh
            .simplices
            .par_iter()
            .map(|s| {
                let d = DMatrix::from_fn(q, p, |a, i| (0..=p).map(|k| self.u[s.nodes[k] * q + a] * s.grad[(k, i)]).sum::<f64>());
                let g: DMatrix<f64> = DMatrix::identity(p, p) - d.transpose() * d;
                SymmetricEigen::new(g).eigenvalues.min()
            })
            .collect();
        let (k, m) = mins.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        (m, self.mesh.nodes[self.mesh.simplices[k].nodes[0]].clone())
    }

    /// `sup |self - other|` over all nodes and components.
    pub fn sup_distance(&self, other: &SpacelikeGraph) -> Result<f64> {
        if self.u.len() != other.u.len() {
            return Err(Error::DimensionMismatch(self.u.len(), other.u.len()));
        }
        Ok(self.u.iter().zip(&other.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Dirichlet problem for the maximal graph equation, optionally with a
/// right-hand side `s` so that the discrete system reads `L(u) = s`.
#[derive(Clone, Debug)]
pub struct MaximalProblem {
    mesh: Arc<Mesh>,
    q: usize,
    boundary: Vec<f64>,
    source: Option<Vec<f64>>,
}

impl MaximalProblem {
    /// Boundary values taken from `f` at the boundary nodes.
    pub fn new<F: Fn(&[f64]) -> Vec<f64>>(mesh: Arc<Mesh>, q: usize, f: F) -> Result<Self> {
        let mut values = vec![0.0; mesh.num_nodes() * q];
        for i in 0..mesh.num_nodes() {
            if mesh.boundary[i] {
                let v = f(&mesh.nodes[i]);
                if v.len() != q {
                    return Err(Error::DimensionMismatch(v.len(), q));
                }
                values[i * q..(i + 1) * q].copy_from_slice(&v);
            }
        }
        Ok(MaximalProblem { mesh, q, boundary: values, source: None })
    }

    /// Boundary values from a full nodal array (interior entries are ignored).
    pub fn from_values(mesh: Arc<Mesh>, q: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() * q {
            return Err(Error::DimensionMismatch(values.len(), mesh.num_nodes() * q));
        }
        Ok(MaximalProblem { mesh, q, boundary: values, source: None })
    }

    pub fn with_source<F: Fn(&[f64]) -> Vec<f64> + Sync>(mut self, s: F) -> Self {
        let src: Vec<f64> = self.mesh.nodes.par_iter().flat_map_iter(|x| s(x)).collect();
        self.source = Some(src);
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn q(&self) -> usize {
        self.q
    }

    fn free(&self) -> Vec<bool> {
        self.mesh.boundary.iter().map(|b| !b).collect()
    }

    fn with_boundary(&self, mut u: Vec<f64>) -> Vec<f64> {
        let q = self.q;
        for i in 0..self.mesh.num_nodes() {
            if self.mesh.boundary[i] {
                u[i * q..(i + 1) * q].copy_from_slice(&self.boundary[i * q..(i + 1) * q]);
            }
        }
        u
    }

    /// Residual of `L(u) = s` in the same scaled max-norm as [`SpacelikeGraph::el_residual`].
    pub fn residual(&self, g: &SpacelikeGraph) -> Result<f64> {
        let a = g.assemble(self.source.as_deref(), Mode::Volume, false, 0.0)?;
        Ok(g.scaled_residual(&a.grad))
    }

    /// Volume minus the source pairing; the functional the solver maximizes.
    pub fn objective(&self, g: &SpacelikeGraph) -> Result<f64> {
        Ok(g.assemble(self.source.as_deref(), Mode::Volume, false, 0.0)?.obj)
    }

    /// Componentwise discrete harmonic extension of the boundary data.
    pub fn harmonic_extension(&self) -> Result<SpacelikeGraph> {
        let u = self.with_boundary(vec![0.0; self.boundary.len()]);
        let g = SpacelikeGraph::new(self.mesh.clone(), self.q, u)?;
        let a = g.assemble(None, Mode::Dirichlet, true, 0.0)?;
        let delta = pcg(a.hess.as_ref().unwrap(), &a.grad, &self.free(), 1e-13, 20_000);
        let u: Vec<f64> = g.u.iter().zip(&delta).map(|(x, d)| x + d).collect();
        SpacelikeGraph::new(self.mesh.clone(), self.q, u)
    }
}

/// Starting point for [`solve_maximal`].
#[derive(Clone, Debug)]
pub enum Init {
    Harmonic,
    /// Nodal values; boundary entries are overwritten by the data.
    Values(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub spacelike_eps: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS, spacelike_eps: SPACELIKE_EPS }
    }
}

#[derive(Clone, Debug)]
pub struct MaximalSolution {
    pub graph: SpacelikeGraph,
    pub iterations: usize,
    /// Residual after each accepted iterate, starting with the initializer.
    pub residuals: Vec<f64>,
    /// Objective (volume minus source pairing) of each accepted iterate.
    pub objectives: Vec<f64>,
}

/// Damped Newton iteration for the maximal graph equation.
///
/// Each step solves the Newton system by preconditioned CG and is halved until
/// the iterate stays spacelike (smallest eigenvalue of `g` above
/// `spacelike_eps`), the residual decreases and the objective does not.
pub fn solve_maximal(problem: &MaximalProblem, init: Init, opts: &SolverOptions) -> Result<MaximalSolution> {
    let mut graph = match init {
        Init::Harmonic => problem.harmonic_extension()?,
        Init::Values(v) => SpacelikeGraph::new(problem.mesh.clone(), problem.q, problem.with_boundary(v))?,
    };
    let src = problem.source.as_deref();
    let free = problem.free();
    let a = graph.assemble(src, Mode::Volume, false, 0.0)?;
    let (margin, point) = graph.spacelike_margin();
    if !(margin > opts.spacelike_eps) {
        return Err(Error::NotSpacelike { point, min_eigenvalue: margin });
    }
    let mut res = graph.scaled_residual(&a.grad);
    let mut obj = a.obj;
    let mut residuals = vec![res];
    let mut objectives = vec![obj];
    let mut iterations = 0;
    while res >= opts.tol {
        if iterations == opts.max_iters {
            return Err(Error::MaxIters { residual: res });
        }
        let a = graph.assemble(src, Mode::Volume, true, 0.0)?;
        let delta = pcg(a.hess.as_ref().unwrap(), &a.grad, &free, 1e-11, 20_000);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let u: Vec<f64> = graph.u.iter().zip(&delta).map(|(x, d)| x + alpha * d).collect();
            let trial = SpacelikeGraph { u, ..graph.clone() };
            if let Ok(t) = trial.assemble(src, Mode::Volume, false, opts.spacelike_eps) {
                let r = trial.scaled_residual(&t.grad);
                if r < res && t.obj >= obj - 1e-13 * obj.abs().max(1.0) {
                    accepted = Some((trial, r, t.obj));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((g, r, o)) = accepted else {
            return Err(Error::SpacelikeLost { residual: res });
        };
        graph = g;
        res = r;
        obj = o;
        residuals.push(res);
        objectives.push(obj);
        iterations += 1;
    }
    Ok(MaximalSolution { graph, iterations, residuals, objectives })
}

/// Continuous operator `∂ᵢ(√det g g^{ij} ∂ⱼu)` of a smooth `u: R^p -> R^q`,
/// by nested Richardson differences.
pub fn el_operator<F: Fn(&[f64]) -> Vec<f64>>(u: &F, x: &[f64]) -> Vec<f64> {
    let p = x.len();
    let rich = |f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], i: usize, h: f64| -> Vec<f64> {
        let cd = |h: f64| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            let (fa, fb) = (f(&a), f(&b));
            fa.iter().zip(&fb).map(|(s, t)| (s - t) / (2.0 * h)).collect::<Vec<f64>>()
        };
        let (c, f2) = (cd(h), cd(0.5 * h));
        f2.iter().zip(&c).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
    };
    let flux = |y: &[f64]| -> Vec<f64> {
        let cols: Vec<Vec<f64>> = (0..p).map(|i| rich(u, y, i, 1e-4)).collect();
        let q = cols[0].len();
        let d = DMatrix::from_fn(q, p, |a, i| cols[i][a]);
        let a = DMatrix::identity(p, p) - d.transpose() * &d;
        let e = a.determinant().max(0.0).sqrt();
        let pm = d * a.try_inverse().unwrap_or_else(|| DMatrix::zeros(p, p)) * e;
        pm.iter().copied().collect()
    };
    let mut out: Vec<f64> = Vec::new();
    for i in 0..p {
        let df = rich(&flux, x, i, 1e-3);
        let q = df.len() / p;
        if out.is_empty() {
            out = vec![0.0; q];
        }
        // column-major flux: entry (a, i) at i * q + a
        for a in 0..q {
            out[a] += df[i * q + a];
        }
    }
    out
}

/// Causal type of a vector in `R^{p,q}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalType {
    Spacelike,
    Timelike,
    Null,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: Vec<f64>,
    pub mu: Vec<f64>,
    /// `Q(μ, μ)`.
    pub norm_sq: f64,
    pub causal: CausalType,
    /// `None` when no outward direction was supplied or `μ` is not spacelike.
    pub outward: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryCurvature {
    pub points: Vec<BoundaryPoint>,
    /// Smallest `√Q(μ, μ)` over spacelike samples.
    pub min_norm: f64,
    pub all_spacelike_outward: bool,
}

/// Mean curvature vector of a codimension-one boundary immersion at `points`.
///
/// `outward(point)` gives a vector pointing out of the filled region; `μ` is
/// outward when it lies on the same side of the tangent space within a maximal
/// positive subspace. `null_tol` bounds `|Q(μ, μ)|` for the null class.
pub fn boundary_mean_curvature(
    sigma: &SpacelikeImmersion,
    points: &[Vec<f64>],
    outward: Option<&(dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync)>,
    null_tol: f64,
) -> Result<BoundaryCurvature> {
    let rows: Result<Vec<BoundaryPoint>> = points
        .par_iter()
        .map(|pt| {
            let g = sigma.induced_metric(pt)?;
            if !(g.determinant() > 1e-12) {
                return Err(Error::DegenerateBoundary(pt.clone()));
            }
            let mu = sigma.mean_curvature_vector(pt)?;
            let norm_sq = sigma.quadratic(&mu, &mu);
            let causal = if norm_sq.abs() <= null_tol {
                CausalType::Null
            } else if norm_sq > 0.0 {
                CausalType::Spacelike
            } else {
                CausalType::Timelike
            };
            let side = match (outward, causal) {
                (Some(f), CausalType::Spacelike) if sigma.dim() + 1 == sigma.signature().0 => {
                    let nu = f(pt)?;
                    let a = sigma.positive_orientation(pt, &[&mu])?;
                    let b = sigma.positive_orientation(pt, &[&nu])?;
                    Some(a * b > 0.0)
                }
                _ => None,
            };
            Ok(BoundaryPoint { point: pt.clone(), mu, norm_sq, causal, outward: side })
        })
        .collect();
    let points = rows?;
    let min_norm = points
        .iter()
        .filter(|r| r.causal == CausalType::Spacelike)
        .map(|r| r.norm_sq.sqrt())
        .fold(f64::INFINITY, f64::min);
    let all = points.iter().all(|r| r.causal == CausalType::Spacelike && r.outward == Some(true));
    Ok(BoundaryCurvature { points, min_norm, all_spacelike_outward: all })
}

/// Hyperspherical angle chart of `S^{k}`: polar angles in `[0, π]`, the last
/// angle periodic in `[0, 2π)`.
pub fn sphere_chart(k: usize, polar: usize, azimuthal: usize) -> Result<Chart> {
    let mut lo = vec![0.0; k];
    let mut hi = vec![std::f64::consts::PI; k];
    hi[k - 1] = 2.0 * std::f64::consts::PI;
    let mut grid = vec![polar; k];
    grid[k - 1] = azimuthal;
    lo[k - 1] = 0.0;
    Ok(Chart::new(lo, hi, grid)?.with_periodic(&[k - 1]))
}

/// Point of the radius-`r` sphere in `R^{k+1}` with the given angles.
pub fn sphere_point(r: f64, angles: &[f64]) -> Vec<f64> {
    let k = angles.len();
    let mut x = vec![0.0; k + 1];
    let mut s = r;
    for i in 0..k {
        x[i] = s * angles[i].cos();
        s *= angles[i].sin();
    }
    x[k] = s;
    x
}

/// The boundary `θ ↦ (x(θ), f(x(θ)))` of a graph over the ball of radius `r`
/// in `R^p`, as an immersion into `R^{p,q}`. Spacelikeness is checked on
/// chart samples away from the poles.
pub fn ball_boundary<F>(p: usize, q: usize, r: f64, f: F, polar: usize, azimuthal: usize) -> Result<SpacelikeImmersion>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
{
    if p < 2 {
        return Err(Error::DimensionMismatch(p, 2));
    }
    let chart = sphere_chart(p - 1, polar, azimuthal)?;
    let target = Chart::cube(p + q, -1e6, 1e6, 2)?;
    let map = SmoothMap::new(chart.clone(), target, move |th| {
        let mut x = sphere_point(r, th);
        let v = f(&x);
        if v.len() != q {
            return Err(Error::DimensionMismatch(v.len(), q));
        }
        x.extend(v);
        Ok(x)
    });
    let samples = chart.interior_grid_points(0.05);
    SpacelikeImmersion::in_signature(map, p, &samples)
}

/// Outward direction `(x/r, 0)` for [`ball_boundary`].
pub fn ball_outward(p: usize, q: usize) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync {
    move |th: &[f64]| {
        let mut v = sphere_point(1.0, th);
        v.extend(std::iter::repeat_n(0.0, q));
        debug_assert_eq!(v.len(), p + q);
        Ok(v)
    }
}

/// Induced `(p-1)`-volume of a boundary immersion by grid quadrature.
pub fn boundary_volume(sigma: &SpacelikeImmersion) -> Result<f64> {
    grid_sum(sigma.chart(), |pt| sigma.area_density(pt))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalVolumeReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs) / lhs`.
    pub slack: f64,
    pub boundary_volume: f64,
    pub min_mean_curvature: f64,
}

/// Volume bound `Vol(Ξ) ≤ ((p-1)/p) Vol(Σ) / min|μ_Σ|` for a solved graph and
/// its boundary immersion, with `μ_Σ` sampled at `points`.
pub fn maximal_volume_bound(graph: &SpacelikeGraph, sigma: &SpacelikeImmersion, points: &[Vec<f64>]) -> Result<MaximalVolumeReport> {
    let p = graph.p();
    if sigma.dim() + 1 != p {
        return Err(Error::DimensionMismatch(sigma.dim() + 1, p));
    }
    let outward = ball_outward(p, graph.q());
    let curv = boundary_mean_curvature(sigma, points, Some(&outward), 1e-9)?;
    if let Some(bad) = curv.points.iter().find(|r| r.causal != CausalType::Spacelike || r.outward != Some(true)) {
        return Err(Error::Hypothesis(format!(
            "boundary mean curvature is {:?} (outward {:?}) at {:?}",
            bad.causal, bad.outward, bad.point
        )));
    }
    let lhs = graph.volume()?;
    let area = boundary_volume(sigma)?;
    let rhs = (p as f64 - 1.0) / p as f64 * area / curv.min_norm;
    Ok(MaximalVolumeReport { lhs, rhs, slack: (rhs - lhs) / lhs, boundary_volume: area, min_mean_curvature: curv.min_norm })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderReport {
    /// `sup |Ξ₀ - Ξ₁|`.
    pub agreement: f64,
    /// `sup |U(t, x) - u₀(x)|` over the filling.
    pub product_deviation: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Set when distinct ends produced a small-residual filling.
    pub warning: Option<String>,
}

/// Solves the maximal problem over `[0, L] × B` with ends `Ξ₀`, `Ξ₁` and the
/// common boundary extended along the axis. Nodes on the end faces take the
/// end values, including the shared corner nodes.
pub fn cylinder_experiment(
    xi0: &SpacelikeGraph,
    xi1: &SpacelikeGraph,
    length: f64,
    axial_nodes: usize,
    opts: &SolverOptions,
) -> Result<(CylinderReport, MaximalSolution)> {
    let base = xi0.mesh();
    let Domain::Ball { dim, radius } = *base.domain() else {
        return Err(Error::Hypothesis("cylinder experiment needs ball domains".into()));
    };
    if xi1.mesh().domain() != base.domain() || xi1.mesh().shape() != base.shape() || xi0.q != xi1.q {
        return Err(Error::Hypothesis("ends live on different meshes".into()));
    }
    let q = xi0.q;
    let mismatch = (0..base.num_nodes())
        .filter(|&i| base.is_boundary(i))
        .flat_map(|i| xi0.value(i).iter().zip(xi1.value(i)).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    if mismatch > 1e-12 {
        return Err(Error::Hypothesis(format!("ends have different boundary values ({mismatch})")));
    }
    let mut shape = vec![axial_nodes];
    shape.extend_from_slice(base.shape());
    let mesh = Arc::new(Mesh::new(Domain::CylinderOverBall { dim, radius, length }, shape)?);
    let nb = base.num_nodes();
    let mut values = vec![0.0; mesh.num_nodes() * q];
    for i in 0..mesh.num_nodes() {
        let (t, j) = (i / nb, i % nb);
        let src = if t == axial_nodes - 1 { xi1.value(j) } else { xi0.value(j) };
        values[i * q..(i + 1) * q].copy_from_slice(src);
    }
    let problem = MaximalProblem::from_values(mesh.clone(), q, values)?;
    let sol = solve_maximal(&problem, Init::Harmonic, opts)?;
    let agreement = xi0.sup_distance(xi1)?;
    let mut dev = 0.0f64;
    for i in 0..mesh.num_nodes() {
        let j = i % nb;
        for a in 0..q {
            dev = dev.max((sol.graph.u[i * q + a] - xi0.u[j * q + a]).abs());
        }
    }
    let residual = *sol.residuals.last().unwrap();
    let warning = (agreement > 10.0 * opts.tol).then(|| {
        format!("distinct ends (sup distance {agreement:.3e}) admitted a filling with residual {residual:.3e}")
    });
    Ok((CylinderReport { agreement, product_deviation: dev, residual, iterations: sol.iterations, warning }, sol))
}

fn natural_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm for M[i-1] + 4 M[i] + M[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]) / h².
    let k = n - 2;
    let mut c = vec![0.0; k];
    let mut d = vec![0.0; k];
    for i in 0..k {
        let rhs = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (h * h);
        let denom = 4.0 - if i > 0 { c[i - 1] } else { 0.0 };
        c[i] = 1.0 / denom;
        d[i] = (rhs - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..k).rev() {
        m[i + 1] = d[i] - if i + 1 < k { c[i] * m[i + 2] } else { 0.0 };
    }
    m
}

fn spline_eval(y: &[f64], m: &[f64], lo: f64, h: f64, x: f64, deriv: bool) -> f64 {
    let n = y.len();
    let t = ((x - lo) / h).clamp(0.0, (n - 1) as f64);
    let i = (t.floor() as usize).min(n - 2);
    let a = (i + 1) as f64 - t;
    let b = 1.0 - a;
    if deriv {
        (y[i + 1] - y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m[i] + (3.0 * b * b - 1.0) / 6.0 * h * m[i + 1]
    } else {
        a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0
    }
}

/// Tensor-product natural cubic spline of a graph on a box mesh.
#[derive(Clone, Debug)]
pub struct TensorSpline {
    lo: Vec<f64>,
    h: Vec<f64>,
    shape: Vec<usize>,
    q: usize,
    data: Vec<f64>,
    last_m: Vec<f64>,
}

impl TensorSpline {
    pub fn new(graph: &SpacelikeGraph) -> Result<Self> {
        let Domain::Box { lo, hi } = graph.mesh().domain() else {
            return Err(Error::InvalidChart("spline interpolation needs a box domain".into()));
        };
        let shape = graph.mesh().shape().to_vec();
        let p = shape.len();
        let h: Vec<f64> = (0..p).map(|i| (hi[i] - lo[i]) / (shape[i] - 1) as f64).collect();
        let q = graph.q();
        let n = shape[p - 1];
        let lines = graph.u.len() / (n * q);
        let mut last_m = vec![0.0; graph.u.len()];
        for line in 0..lines {
            for a in 0..q {
                let y: Vec<f64> = (0..n).map(|j| graph.u[(line * n + j) * q + a]).collect();
                let m = natural_second_derivatives(&y, h[p - 1]);
                for j in 0..n {
                    last_m[(line * n + j) * q + a] = m[j];
                }
            }
        }
        Ok(TensorSpline { lo: lo.clone(), h, shape, q, data: graph.u.clone(), last_m })
    }

    /// Value, or the partial along `deriv` when given.
    pub fn eval(&self, x: &[f64], deriv: Option<usize>) -> Vec<f64> {
        let p = self.shape.len();
        let q = self.q;
        let mut cur = self.data.clone();
        for axis in (0..p).rev() {
            let n = self.shape[axis];
            let lines = cur.len() / (n * q);
            let mut next = vec![0.0; lines * q];
            let mut y = vec![0.0; n];
            for line in 0..lines {
                for a in 0..q {
                    for j in 0..n {
                        y[j] = cur[(line * n + j) * q + a];
                    }
                    let m = if axis == p - 1 {
                        (0..n).map(|j| self.last_m[(line * n + j) * q + a]).collect()
                    } else {
                        natural_second_derivatives(&y, self.h[axis])
                    };
                    next[line * q + a] = spline_eval(&y, &m, self.lo[axis], self.h[axis], x[axis], deriv == Some(axis));
                }
            }
            cur = next;
        }
        cur
    }
}

/// Smooth immersion `x ↦ (x, s(x))` of a box-domain graph via its tensor spline.
pub fn graph_immersion(graph: &SpacelikeGraph, check_grid: usize) -> Result<SpacelikeImmersion> {
    let spline = Arc::new(TensorSpline::new(graph)?);
    let Domain::Box { lo, hi } = graph.mesh().domain().clone() else { unreachable!() };
    let (p, q) = (graph.p(), graph.q());
    let chart = Chart::new(lo, hi, vec![check_grid; p])?;
    let target = Chart::cube(p + q, -1e6, 1e6, 2)?;
    let s1 = spline.clone();
    let map = SmoothMap::new(chart.clone(), target, move |x| {
        let mut y = x.to_vec();
        y.extend(s1.eval(x, None));
        Ok(y)
    })
    .with_jacobian(move |x| {
        let mut j = DMatrix::zeros(p + q, p);
        for i in 0..p {
            j[(i, i)] = 1.0;
            let d = spline.eval(x, Some(i));
            for a in 0..q {
                j[(p + a, i)] = d[a];
            }
        }
        Ok(j)
    });
    SpacelikeImmersion::in_signature(map, p, &chart.grid_points())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RicciPoint {
    pub point: Vec<f64>,
    /// Smallest eigenvalue of `g^{-1} Ric`.
    pub min_eigenvalue: f64,
    /// Largest absolute eigenvalue, the curvature scale.
    pub scale: f64,
}

/// Ricci curvature of the induced metric by nested finite differences.
pub fn ricci_report(imm: &SpacelikeImmersion, points: &[Vec<f64>], fd: FdConfig) -> Result<Vec<RicciPoint>> {
    let k = imm.dim();
    let chart = imm.chart().clone();
    let metric = |x: &[f64]| -> Result<Vec<f64>> { Ok(imm.induced_metric(x)?.iter().copied().collect()) };
    // Γ^i_{jk}, flattened as i * k² + j * k + l.
    let christoffel = |x: &[f64]| -> Result<Vec<f64>> {
        let g = DMatrix::from_column_slice(k, k, &metric(x)?);
        let ginv = g.try_inverse().ok_or(Error::DegenerateBoundary(x.to_vec()))?;
        let dg: Vec<DMatrix<f64>> = (0..k)
            .map(|a| Ok(DMatrix::from_column_slice(k, k, &fd_partial(&chart, fd, x, a, &metric)?)))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; k * k * k];
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    out[i * k * k + j * k + l] =
                        0.5 * (0..k).map(|m| ginv[(i, m)] * (dg[j][(m, l)] + dg[l][(m, j)] - dg[m][(j, l)])).sum::<f64>();
                }
            }
        }
        Ok(out)
    };
    points
        .par_iter()
        .map(|x| {
            let gam = christoffel(x)?;
            let dgam: Vec<Vec<f64>> = (0..k).map(|a| fd_partial(&chart, fd, x, a, &christoffel)).collect::<Result<_>>()?;
            let c = |i: usize, j: usize, l: usize| gam[i * k * k + j * k + l];
            let dc = |a: usize, i: usize, j: usize, l: usize| dgam[a][i * k * k + j * k + l];
            let ric = DMatrix::from_fn(k, k, |j, l| {
                (0..k)
                    .map(|i| {
                        dc(i, i, j, l) - dc(l, i, i, j)
                            + (0..k).map(|m| c(i, i, m) * c(m, j, l) - c(i, l, m) * c(m, i, j)).sum::<f64>()
                    })
                    .sum()
            });
            let ric = (&ric + ric.transpose()) * 0.5;
            let g = imm.induced_metric(x)?;
            let chol = g.clone().cholesky().ok_or(Error::DegenerateBoundary(x.clone()))?;
            let l_inv = chol.l().try_inverse().ok_or(Error::DegenerateBoundary(x.clone()))?;
            let sym = &l_inv * ric * l_inv.transpose();
            let ev = SymmetricEigen::new(sym).eigenvalues;
            Ok(RicciPoint { point: x.clone(), min_eigenvalue: ev.min(), scale: ev.amax() })
        })
        .collect()
}
