//! Forward-mode differentiation on dual numbers.
//!
//! Every simulator quantity is written generically over [`Scalar`], so the
//! same code runs on plain `f64`, on [`Dual<f64, D>`] carrying partials with
//! respect to `D` tagged directions, or on nested duals
//! (`Dual<Dual<f64, DI>, DO>`) when derivatives of derivatives are needed.
//!
//! Direction counts are compile-time constants; a [`SensitivityContext`]
//! carries the runtime label set and validates seeding indices.

use crate::error::{Result, SimError};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic closed under the primitives the simulator needs.
///
/// `ln`, `sqrt` and division do not error at invalid inputs; they produce
/// non-finite values which rollout-level finiteness checks convert into
/// structured errors, so optimizer line searches can back off.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn constant(v: f64) -> Self;
    /// Underlying real value (recurses through nesting).
    fn value(&self) -> f64;
    fn is_finite(&self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    /// log(1 + e^x), evaluated in overflow-safe form.
    fn softplus(self) -> Self;
    /// 1 / (1 + e^-x); the derivative of softplus.
    fn sigmoid(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn one() -> Self {
        Self::constant(1.0)
    }
    fn powi(self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn softplus(self) -> Self {
        if self > 0.0 {
            self + (-self).exp().ln_1p()
        } else {
            self.exp().ln_1p()
        }
    }
    fn sigmoid(self) -> Self {
        if self >= 0.0 {
            1.0 / (1.0 + (-self).exp())
        } else {
            let e = self.exp();
            e / (1.0 + e)
        }
    }
}

/// Value plus partials along `D` tagged directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<S: Scalar, const D: usize> {
    pub re: S,
    pub im: [S; D],
}

impl<S: Scalar, const D: usize> Dual<S, D> {
    pub fn new(re: S, im: [S; D]) -> Self {
        Dual { re, im }
    }

    /// Seed direction `i` with unit derivative.
    pub fn variable(re: S, i: usize) -> Self {
        let mut im = [S::zero(); D];
        im[i] = S::one();
        Dual { re, im }
    }

    /// Chain rule for a primitive with value `v` and local derivative `dv`.
    fn unary(self, v: S, dv: S) -> Self {
        let mut im = [S::zero(); D];
        for (o, i) in im.iter_mut().zip(self.im.iter()) {
            *o = dv * *i;
        }
        Dual { re: v, im }
    }
}

impl<S: Scalar, const D: usize> Add for Dual<S, D> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut im = self.im;
        for (a, b) in im.iter_mut().zip(rhs.im.iter()) {
            *a = *a + *b;
        }
        Dual { re: self.re + rhs.re, im }
    }
}

impl<S: Scalar, const D: usize> Sub for Dual<S, D> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut im = self.im;
        for (a, b) in im.iter_mut().zip(rhs.im.iter()) {
            *a = *a - *b;
        }
        Dual { re: self.re - rhs.re, im }
    }
}

impl<S: Scalar, const D: usize> Mul for Dual<S, D> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut im = [S::zero(); D];
        for ((o, a), b) in im.iter_mut().zip(self.im.iter()).zip(rhs.im.iter()) {
            *o = *a * rhs.re + self.re * *b;
        }
        Dual { re: self.re * rhs.re, im }
    }
}

impl<S: Scalar, const D: usize> Div for Dual<S, D> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = S::one() / rhs.re;
        let re = self.re * inv;
        let mut im = [S::zero(); D];
        for ((o, a), b) in im.iter_mut().zip(self.im.iter()).zip(rhs.im.iter()) {
            *o = (*a - re * *b) * inv;
        }
        Dual { re, im }
    }
}

impl<S: Scalar, const D: usize> Neg for Dual<S, D> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut im = self.im;
        for a in im.iter_mut() {
            *a = -*a;
        }
        Dual { re: -self.re, im }
    }
}

impl<S: Scalar, const D: usize> Scalar for Dual<S, D> {
    fn constant(v: f64) -> Self {
        Dual {
            re: S::constant(v),
            im: [S::zero(); D],
        }
    }
    fn value(&self) -> f64 {
        self.re.value()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.iter().all(|p| p.is_finite())
    }
    fn sin(self) -> Self {
        self.unary(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.unary(self.re.cos(), -self.re.sin())
    }
    fn exp(self) -> Self {
        let v = self.re.exp();
        self.unary(v, v)
    }
    fn ln(self) -> Self {
        self.unary(self.re.ln(), S::one() / self.re)
    }
    fn sqrt(self) -> Self {
        let v = self.re.sqrt();
        self.unary(v, S::constant(0.5) / v)
    }
    fn tanh(self) -> Self {
        let v = self.re.tanh();
        self.unary(v, S::one() - v * v)
    }
    fn softplus(self) -> Self {
        self.unary(self.re.softplus(), self.re.sigmoid())
    }
    fn sigmoid(self) -> Self {
        let s = self.re.sigmoid();
        self.unary(s, s * (S::one() - s))
    }
}

/// Shorthand for lifting an `f64` into any scalar type.
pub fn cst<S: Scalar>(v: f64) -> S {
    S::constant(v)
}

/// Runtime description of the tagged directions of one computation.
#[derive(Clone, Debug)]
pub struct SensitivityContext {
    direction_count: usize,
    tagged_names: Vec<String>,
}

impl SensitivityContext {
    pub fn new(tagged_names: Vec<String>) -> Result<Self> {
        if tagged_names.is_empty() {
            return Err(SimError::Config(
                "sensitivity context needs at least one tagged direction".into(),
            ));
        }
        let mut sorted = tagged_names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != tagged_names.len() {
            return Err(SimError::Config("tagged direction labels must be unique".into()));
        }
        Ok(SensitivityContext {
            direction_count: tagged_names.len(),
            tagged_names,
        })
    }

    pub fn direction_count(&self) -> usize {
        self.direction_count
    }

    pub fn tagged_names(&self) -> &[String] {
        &self.tagged_names
    }
}

/// Seed a tagged direction: unit partial along basis vector `index`.
pub fn lift_variable<const D: usize>(
    value: f64,
    index: usize,
    ctx: &SensitivityContext,
) -> Result<Dual<f64, D>> {
    if ctx.direction_count != D {
        return Err(SimError::Config(format!(
            "context has {} directions but dual carries {}",
            ctx.direction_count, D
        )));
    }
    if index >= ctx.direction_count {
        return Err(SimError::Config(format!(
            "direction index {} out of range for {} tagged directions",
            index, ctx.direction_count
        )));
    }
    Ok(Dual::variable(value, index))
}

/// Lift a constant: zero partials in every direction.
pub fn lift_constant<const D: usize>(value: f64) -> Dual<f64, D> {
    Dual::constant(value)
}

/// A scalar function evaluable at any scalar type, so it can be run both in
/// forward mode and at plain floats for finite differencing.
pub trait ScalarField {
    fn eval<S: Scalar>(&self, x: &[S]) -> S;
}

/// Maximum dimension handled by [`check_gradient`].
pub const CHECK_DIRS: usize = 8;

/// Compare forward-mode partials of `f` against central finite differences.
///
/// Returns the max over directions of
/// `|forward partial - central difference| / max(1, |central difference|)`.
pub fn check_gradient<F: ScalarField>(f: &F, point: &[f64], step: f64) -> Result<f64> {
    if step <= 0.0 {
        return Err(SimError::Config("finite-difference step must be positive".into()));
    }
    let n = point.len();
    if n > CHECK_DIRS {
        return Err(SimError::Config(format!(
            "check_gradient handles at most {CHECK_DIRS} directions, got {n}"
        )));
    }
    let lifted: Vec<Dual<f64, CHECK_DIRS>> = point
        .iter()
        .enumerate()
        .map(|(i, &v)| Dual::variable(v, i))
        .collect();
    let fwd = f.eval(&lifted);
    if !fwd.is_finite() {
        return Err(SimError::Evaluation("non-finite forward-mode evaluation".into()));
    }
    let mut worst = 0.0_f64;
    let mut x = point.to_vec();
    for i in 0..n {
        let base = point[i];
        x[i] = base + step;
        let hi = f.eval(&x).value();
        x[i] = base - step;
        let lo = f.eval(&x).value();
        x[i] = base;
        if !hi.is_finite() || !lo.is_finite() {
            return Err(SimError::Evaluation(format!(
                "non-finite finite-difference evaluation in direction {i}"
            )));
        }
        let fd = (hi - lo) / (2.0 * step);
        let err = (fwd.im[i] - fd).abs() / fd.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
