use std::ops::{Add, Sub};

use nalgebra::Complex;

use super::form::KForm;
use crate::error::Result;

pub type C64 = Complex<f64>;

/// A complex-valued form `re + i im`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexForm {
    pub re: KForm,
    pub im: KForm,
}

impl ComplexForm {
    pub fn new(re: KForm, im: KForm) -> Self {
        assert_eq!((re.dim(), re.degree()), (im.dim(), im.degree()));
        ComplexForm { re, im }
    }

    pub fn real(re: KForm) -> Self {
        let im = KForm::zero(re.dim(), re.degree());
        ComplexForm { re, im }
    }

    pub fn zero(n: usize, k: usize) -> Self {
        ComplexForm { re: KForm::zero(n, k), im: KForm::zero(n, k) }
    }

    /// The complex 1-form with components `c`.
    pub fn one_form(c: &[C64]) -> Self {
        let re: Vec<f64> = c.iter().map(|z| z.re).collect();
        let im: Vec<f64> = c.iter().map(|z| z.im).collect();
        ComplexForm { re: KForm::one_form(&re), im: KForm::one_form(&im) }
    }

    pub fn dim(&self) -> usize {
        self.re.dim()
    }

    pub fn degree(&self) -> usize {
        self.re.degree()
    }

    pub fn conj(&self) -> Self {
        ComplexForm { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale(&self, c: C64) -> Self {
        ComplexForm {
            re: &self.re.scale(c.re) - &self.im.scale(c.im),
            im: &self.re.scale(c.im) + &self.im.scale(c.re),
        }
    }

    pub fn wedge(&self, other: &ComplexForm) -> Result<ComplexForm> {
        let rr = self.re.wedge(&other.re)?;
        let ii = self.im.wedge(&other.im)?;
        let ri = self.re.wedge(&other.im)?;
        let ir = self.im.wedge(&other.re)?;
        Ok(ComplexForm { re: &rr - &ii, im: &ri + &ir })
    }

    pub fn wedge_real(&self, other: &KForm) -> Result<ComplexForm> {
        Ok(ComplexForm { re: self.re.wedge(other)?, im: self.im.wedge(other)? })
    }

    pub fn contract(&self, v: &[f64]) -> Result<ComplexForm> {
        Ok(ComplexForm { re: self.re.contract(v)?, im: self.im.contract(v)? })
    }

    pub fn norm(&self) -> f64 {
        (self.re.norm().powi(2) + self.im.norm().powi(2)).sqrt()
    }

    /// Complex coefficient at basis slot `i`.
    pub fn coeff(&self, i: usize) -> C64 {
        C64::new(self.re.coeffs()[i], self.im.coeffs()[i])
    }

    pub fn top(&self) -> C64 {
        C64::new(self.re.top(), self.im.top())
    }
}

impl Add for &ComplexForm {
    type Output = ComplexForm;
    fn add(self, rhs: &ComplexForm) -> ComplexForm {
        ComplexForm { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl Sub for &ComplexForm {
    type Output = ComplexForm;
    fn sub(self, rhs: &ComplexForm) -> ComplexForm {
        ComplexForm { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}
