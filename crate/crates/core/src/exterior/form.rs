use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;

use super::basis::{self, binomial, contraction_sign, det_in_place, masks, position, wedge_sign};
use crate::error::{Error, Result};

/// A constant alternating k-form on R^n with dense coefficients over the
/// lexicographically ordered basis `dx^I`, `I = (i1 < ... < ik)`.
#[derive(Clone, PartialEq)]
pub struct KForm {
    n: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KForm(n={}, k={}; ", self.n, self.k)?;
        let mut first = true;
        for (c, &m) in self.coeffs.iter().zip(masks(self.n, self.k)) {
            if *c != 0.0 {
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                let idx: Vec<String> = basis::indices(m).map(|i| (i + 1).to_string()).collect();
                write!(f, "{c}*e{}", idx.join(""))?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl KForm {
    pub fn zero(n: usize, k: usize) -> Self {
        assert!(n <= basis::MAX_DIM && k <= n, "invalid form shape n={n}, k={k}");
        KForm { n, k, coeffs: vec![0.0; binomial(n, k)] }
    }

    pub fn from_coeffs(n: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        if n > basis::MAX_DIM || k > n {
            return Err(Error::DegreeOverflow { k_a: k, k_b: 0, n });
        }
        if coeffs.len() != binomial(n, k) {
            return Err(Error::DimensionMismatch(coeffs.len(), binomial(n, k)));
        }
        Ok(KForm { n, k, coeffs })
    }

    /// The 0-form with value `c`.
    pub fn scalar(n: usize, c: f64) -> Self {
        KForm { n, k: 0, coeffs: vec![c] }
    }

    /// `dx^{i1} ^ ... ^ dx^{ik}` for arbitrary (unsorted, 0-based) indices;
    /// repeated indices give the zero form.
    pub fn basis(n: usize, idx: &[usize]) -> Self {
        let mut out = KForm::zero(n, idx.len());
        out.add_term(1.0, idx);
        out
    }

    /// The 1-form with the given components.
    pub fn one_form(v: &[f64]) -> Self {
        KForm { n: v.len(), k: 1, coeffs: v.to_vec() }
    }

    /// Adds `c * dx^{i1} ^ ... ^ dx^{ik}` with arbitrary index order.
    pub fn add_term(&mut self, c: f64, idx: &[usize]) {
        assert_eq!(idx.len(), self.k);
        let mut sorted = idx.to_vec();
        let mut sign = 1.0;
        // insertion sort, tracking parity
        for i in 1..sorted.len() {
            let mut j = i;
            while j > 0 && sorted[j - 1] > sorted[j] {
                sorted.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return;
        }
        let mask = sorted.iter().fold(0u8, |m, &i| m | (1 << i));
        self.coeffs[position(self.n, mask)] += sign * c;
    }

    /// Coefficient of `dx^{i1} ^ ... ^ dx^{ik}` (indices in any order).
    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut probe = KForm::zero(self.n, self.k);
        probe.add_term(1.0, idx);
        // probe has a single +-1 entry
        probe.coeffs.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Iterates `(mask, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (u8, f64)> + '_ {
        masks(self.n, self.k).iter().copied().zip(self.coeffs.iter().copied())
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Coefficient of `dx^1 ^ ... ^ dx^n` for a top-degree form.
    pub fn top(&self) -> f64 {
        debug_assert_eq!(self.k, self.n);
        self.coeffs[0]
    }

    pub fn scale(&self, c: f64) -> KForm {
        KForm { n: self.n, k: self.k, coeffs: self.coeffs.iter().map(|x| c * x).collect() }
    }

    fn check_same_shape(&self, other: &KForm) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        if self.k != other.k {
            return Err(Error::DegreeMismatch { expected: self.k, found: other.k });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &KForm) -> Result<KForm> {
        self.check_same_shape(other)?;
        Ok(KForm {
            n: self.n,
            k: self.k,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    /// Exterior product.
    pub fn wedge(&self, other: &KForm) -> Result<KForm> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        let k = self.k + other.k;
        if k > self.n {
            return Err(Error::DegreeOverflow { k_a: self.k, k_b: other.k, n: self.n });
        }
        let mut out = KForm::zero(self.n, k);
        for (ma, ca) in self.terms() {
            if ca == 0.0 {
                continue;
            }
            for (mb, cb) in other.terms() {
                if cb == 0.0 || ma & mb != 0 {
                    continue;
                }
                out.coeffs[position(self.n, ma | mb)] += wedge_sign(ma, mb) * ca * cb;
            }
        }
        Ok(out)
    }

    /// Interior product `i_v(self)`.
    pub fn contract(&self, v: &[f64]) -> Result<KForm> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch(v.len(), self.n));
        }
        if self.k == 0 {
            return Err(Error::ZeroDegreeContraction);
        }
        let mut out = KForm::zero(self.n, self.k - 1);
        for (m, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for j in basis::indices(m) {
                if v[j] != 0.0 {
                    out.coeffs[position(self.n, m & !(1 << j))] += contraction_sign(m, j) * v[j] * c;
                }
            }
        }
        Ok(out)
    }

    /// Pullback along a linear map with matrix `jac` (rows: this form's space,
    /// columns: the source space): `(J^* a)(v_1..v_k) = a(J v_1, .., J v_k)`.
    pub fn pullback(&self, jac: &DMatrix<f64>) -> Result<KForm> {
        if jac.nrows() != self.n {
            return Err(Error::DimensionMismatch(jac.nrows(), self.n));
        }
        let m = jac.ncols();
        if self.k > m {
            return Err(Error::DegreeOverflow { k_a: self.k, k_b: 0, n: m });
        }
        let k = self.k;
        let mut out = KForm::zero(m, k);
        let src_masks = masks(m, k);
        let mut buf = [0.0f64; 64];
        let mut rows = [0usize; 8];
        let mut cols = [0usize; 8];
        for (mk, ck) in self.terms() {
            if ck == 0.0 {
                continue;
            }
            for (r, i) in basis::indices(mk).enumerate() {
                rows[r] = i;
            }
            for (slot, &mi) in src_masks.iter().enumerate() {
                for (c, j) in basis::indices(mi).enumerate() {
                    cols[c] = j;
                }
                for r in 0..k {
                    for c in 0..k {
                        buf[r * k + c] = jac[(rows[r], cols[c])];
                    }
                }
                out.coeffs[slot] += ck * det_in_place(&mut buf[..k * k], k);
            }
        }
        Ok(out)
    }

    /// Evaluates the form on `k` vectors.
    pub fn eval(&self, vectors: &[&[f64]]) -> Result<f64> {
        if vectors.len() != self.k {
            return Err(Error::DegreeMismatch { expected: self.k, found: vectors.len() });
        }
        let jac = DMatrix::from_fn(self.n, self.k, |r, c| vectors[c][r]);
        Ok(self.pullback(&jac)?.coeffs.first().copied().unwrap_or(0.0))
    }

    /// Hodge star for the metric `g` (symmetric positive definite) and the
    /// orientation sign `orientation` relative to `dx^1 ^ ... ^ dx^n`, so that
    /// `b ^ *a = <b, a>_g vol_g`.
    pub fn hodge_star(&self, g: &DMatrix<f64>, orientation: f64) -> Result<KForm> {
        let n = self.n;
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch(g.nrows(), n));
        }
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular metric".into()))?;
        let sqrt_det = g.determinant().sqrt();
        let full: u8 = ((1u16 << n) - 1) as u8;
        let mut out = KForm::zero(n, n - self.k);
        let raised = self.inner_products_against_basis(&ginv);
        for (i, &mk) in masks(n, self.k).iter().enumerate() {
            let comp = full & !mk;
            // e^K ^ e^{comp} = s e^{1..n}
            let s = wedge_sign(mk, comp);
            out.coeffs[position(n, comp)] = s * raised[i] * sqrt_det * orientation;
        }
        Ok(out)
    }

    /// `<e^K, self>` for every basis element `e^K`, using the inverse metric.
    fn inner_products_against_basis(&self, ginv: &DMatrix<f64>) -> Vec<f64> {
        let k = self.k;
        let bm = masks(self.n, k);
        let mut out = vec![0.0; bm.len()];
        let mut buf = [0.0f64; 64];
        for (i, &mk) in bm.iter().enumerate() {
            let rows: Vec<usize> = basis::indices(mk).collect();
            let mut acc = 0.0;
            for (mj, cj) in self.terms() {
                if cj == 0.0 {
                    continue;
                }
                let cols: Vec<usize> = basis::indices(mj).collect();
                for r in 0..k {
                    for c in 0..k {
                        buf[r * k + c] = ginv[(rows[r], cols[c])];
                    }
                }
                acc += cj * det_in_place(&mut buf[..k * k], k);
            }
            out[i] = acc;
        }
        out
    }

    /// Inner product induced by the metric `g`.
    pub fn inner(&self, other: &KForm, g: &DMatrix<f64>) -> Result<f64> {
        self.check_same_shape(other)?;
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular metric".into()))?;
        let raised = other.inner_products_against_basis(&ginv);
        Ok(self.coeffs.iter().zip(&raised).map(|(a, b)| a * b).sum())
    }

    /// Antisymmetric coefficient matrix of a 2-form: `w(u, v) = u^T W v`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.k, 2, "to_matrix needs a 2-form");
        let mut w = DMatrix::zeros(self.n, self.n);
        for (m, c) in self.terms() {
            let ij: Vec<usize> = basis::indices(m).collect();
            w[(ij[0], ij[1])] = c;
            w[(ij[1], ij[0])] = -c;
        }
        w
    }

    /// 2-form from the antisymmetric part of `w`: coefficient of `dx^i ^ dx^j` is `(w_ij - w_ji)/2`.
    pub fn from_matrix(w: &DMatrix<f64>) -> KForm {
        let n = w.nrows();
        let mut out = KForm::zero(n, 2);
        for (slot, &m) in masks(n, 2).iter().enumerate() {
            let ij: Vec<usize> = basis::indices(m).collect();
            out.coeffs[slot] = 0.5 * (w[(ij[0], ij[1])] - w[(ij[1], ij[0])]);
        }
        out
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &KForm) -> f64 {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        self.coeffs.iter().zip(&other.coeffs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Embeds a form on R^m into R^n (n >= m) through the coordinate inclusion
    /// `index_map[i]` (position of source axis i in the target).
    pub fn embed(&self, n: usize, index_map: &[usize]) -> KForm {
        assert_eq!(index_map.len(), self.n);
        let mut out = KForm::zero(n, self.k);
        for (m, c) in self.terms() {
            if c != 0.0 {
                let idx: Vec<usize> = basis::indices(m).map(|i| index_map[i]).collect();
                out.add_term(c, &idx);
            }
        }
        out
    }
}

impl Add for &KForm {
    type Output = KForm;
    fn add(self, rhs: &KForm) -> KForm {
        self.try_add(rhs).expect("KForm addition shape mismatch")
    }
}

impl Add for KForm {
    type Output = KForm;
    fn add(self, rhs: KForm) -> KForm {
        &self + &rhs
    }
}

impl AddAssign<&KForm> for KForm {
    fn add_assign(&mut self, rhs: &KForm) {
        assert_eq!((self.n, self.k), (rhs.n, rhs.k), "KForm addition shape mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Sub for &KForm {
    type Output = KForm;
    fn sub(self, rhs: &KForm) -> KForm {
        self + &(-rhs)
    }
}

impl Sub for KForm {
    type Output = KForm;
    fn sub(self, rhs: KForm) -> KForm {
        &self - &rhs
    }
}

impl Neg for &KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self.scale(-1.0)
    }
}

impl Neg for KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self.scale(-1.0)
    }
}

impl Mul<&KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: &KForm) -> KForm {
        rhs.scale(self)
    }
}

impl Mul<KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: KForm) -> KForm {
        rhs.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_basis_cases() {
        let dx1 = KForm::basis(2, &[0]);
        let dx2 = KForm::basis(2, &[1]);
        assert_eq!(dx1.wedge(&dx2).unwrap().coeffs(), &[1.0]);
        assert_eq!(dx2.wedge(&dx1).unwrap().coeffs(), &[-1.0]);
    }

    #[test]
    fn wedge_errors() {
        let a = KForm::basis(3, &[0, 1]);
        let b = KForm::basis(3, &[1, 2]);
        assert!(matches!(a.wedge(&b), Err(Error::DegreeOverflow { .. })));
        let c = KForm::basis(4, &[0]);
        assert!(matches!(a.wedge(&c), Err(Error::DimensionMismatch(3, 4))));
    }

    #[test]
    fn contraction_cases() {
        let e12 = KForm::basis(2, &[0, 1]);
        assert_eq!(e12.contract(&[1.0, 0.0]).unwrap(), KForm::basis(2, &[1]));
        assert_eq!(e12.contract(&[0.0, 1.0]).unwrap(), -KForm::basis(2, &[0]));
        assert_eq!(KForm::scalar(2, 1.0).contract(&[1.0, 0.0]), Err(Error::ZeroDegreeContraction));
    }

    #[test]
    fn basis_with_unsorted_indices() {
        let f = KForm::basis(4, &[2, 0, 1]);
        assert_eq!(f.get(&[0, 1, 2]), 1.0);
        assert_eq!(f.get(&[1, 0, 2]), -1.0);
        assert_eq!(KForm::basis(4, &[1, 1]).norm(), 0.0);
    }

    #[test]
    fn pullback_of_top_form_is_determinant() {
        let vol = KForm::basis(3, &[0, 1, 2]);
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 3.0, 1.0, 1.0, 0.0, 1.0]);
        let p = vol.pullback(&a).unwrap();
        assert!((p.top() - a.determinant()).abs() < 1e-14);
    }

    #[test]
    fn hodge_star_euclidean() {
        let g = DMatrix::identity(3, 3);
        let dx = KForm::basis(3, &[0]);
        assert_eq!(dx.hodge_star(&g, 1.0).unwrap(), KForm::basis(3, &[1, 2]));
        let dy = KForm::basis(3, &[1]);
        assert_eq!(dy.hodge_star(&g, 1.0).unwrap(), KForm::basis(3, &[2, 0]));
    }

    #[test]
    fn matrix_round_trip() {
        let mut w = KForm::zero(4, 2);
        w.add_term(2.0, &[0, 3]);
        w.add_term(-1.5, &[2, 1]);
        assert_eq!(KForm::from_matrix(&w.to_matrix()), w);
        let u = [1.0, 2.0, 0.0, -1.0];
        let v = [0.0, 1.0, 3.0, 2.0];
        let m = w.to_matrix();
        let direct: f64 = (0..4).map(|i| (0..4).map(|j| u[i] * m[(i, j)] * v[j]).sum::<f64>()).sum();
        assert!((w.eval(&[&u, &v]).unwrap() - direct).abs() < 1e-14);
    }
}
