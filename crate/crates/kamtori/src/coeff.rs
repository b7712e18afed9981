//! Selectable coefficient arithmetic.
//!
//! One Hamiltonian uses one backend throughout: `C64` (64-bit complex
//! floats) for iteration runs, `CRat` (complex with exact big-rational
//! parts) for identity tests. Every run parameter enters as an `f64`,
//! and an `f64` is itself a rational number, so `from_re` embeds it
//! exactly in both backends.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::complex::Complex64;
use num::{FromPrimitive, ToPrimitive, Zero};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Float64,
    Rational,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Float64 => write!(f, "float64"),
            Backend::Rational => write!(f, "rational"),
        }
    }
}

/// Complex coefficient with backend-specific arithmetic.
pub trait Coeff: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;

    /// Embeds a real f64 exactly.
    fn from_re(x: f64) -> Self;
    fn from_re_im(re: f64, im: f64) -> Self;

    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    /// Division; caller guarantees `rhs != 0`.
    fn div(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplication by the imaginary unit.
    fn mul_i(&self) -> Self;
    fn scale_int(&self, k: i64) -> Self;
    /// Exact 1/n! in the rational backend, f64 otherwise.
    fn inv_factorial(n: u32) -> Self;

    /// |z| as f64 (approximate for the rational backend; norms are
    /// floating-point diagnostics in both).
    fn abs(&self) -> f64;
    fn to_c64(&self) -> Complex64;
}

/// 64-bit float backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C64(pub Complex64);

impl Coeff for C64 {
    const BACKEND: Backend = Backend::Float64;

    fn zero() -> Self {
        C64(Complex64::new(0.0, 0.0))
    }
    fn one() -> Self {
        C64(Complex64::new(1.0, 0.0))
    }
    fn is_zero(&self) -> bool {
        self.0.re == 0.0 && self.0.im == 0.0
    }
    fn from_re(x: f64) -> Self {
        C64(Complex64::new(x, 0.0))
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        C64(Complex64::new(re, im))
    }
    fn add(&self, rhs: &Self) -> Self {
        C64(self.0 + rhs.0)
    }
    fn sub(&self, rhs: &Self) -> Self {
        C64(self.0 - rhs.0)
    }
    fn mul(&self, rhs: &Self) -> Self {
        C64(self.0 * rhs.0)
    }
    fn div(&self, rhs: &Self) -> Self {
        C64(self.0 / rhs.0)
    }
    fn neg(&self) -> Self {
        C64(-self.0)
    }
    fn mul_i(&self) -> Self {
        C64(Complex64::new(-self.0.im, self.0.re))
    }
    fn scale_int(&self, k: i64) -> Self {
        C64(self.0 * k as f64)
    }
    fn inv_factorial(n: u32) -> Self {
        let mut f = 1.0f64;
        for i in 2..=n as u64 {
            f *= i as f64;
        }
        C64(Complex64::new(1.0 / f, 0.0))
    }
    fn abs(&self) -> f64 {
        self.0.norm()
    }
    fn to_c64(&self) -> Complex64 {
        self.0
    }
}

/// Exact complex-rational backend.
#[derive(Debug, Clone, PartialEq)]
pub struct CRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl CRat {
    fn rat_from_f64(x: f64) -> BigRational {
        BigRational::from_f64(x).expect("finite f64 embeds exactly as a rational")
    }
}

impl Coeff for CRat {
    const BACKEND: Backend = Backend::Rational;

    fn zero() -> Self {
        CRat {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }
    fn one() -> Self {
        CRat {
            re: BigRational::from_integer(BigInt::from(1)),
            im: BigRational::zero(),
        }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_re(x: f64) -> Self {
        CRat {
            re: Self::rat_from_f64(x),
            im: BigRational::zero(),
        }
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        CRat {
            re: Self::rat_from_f64(re),
            im: Self::rat_from_f64(im),
        }
    }
    fn add(&self, rhs: &Self) -> Self {
        CRat {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
    fn sub(&self, rhs: &Self) -> Self {
        CRat {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
    fn mul(&self, rhs: &Self) -> Self {
        CRat {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
    fn div(&self, rhs: &Self) -> Self {
        let d = &rhs.re * &rhs.re + &rhs.im * &rhs.im;
        CRat {
            re: (&self.re * &rhs.re + &self.im * &rhs.im) / &d,
            im: (&self.im * &rhs.re - &self.re * &rhs.im) / &d,
        }
    }
    fn neg(&self) -> Self {
        CRat {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
    fn mul_i(&self) -> Self {
        CRat {
            re: -self.im.clone(),
            im: self.re.clone(),
        }
    }
    fn scale_int(&self, k: i64) -> Self {
        let k = BigRational::from_integer(BigInt::from(k));
        CRat {
            re: &self.re * &k,
            im: &self.im * &k,
        }
    }
    fn inv_factorial(n: u32) -> Self {
        let mut f = BigInt::from(1);
        for i in 2..=n as u64 {
            f *= BigInt::from(i);
        }
        CRat {
            re: BigRational::new(BigInt::from(1), f),
            im: BigRational::zero(),
        }
    }
    fn abs(&self) -> f64 {
        let re = self.re.to_f64().unwrap_or(f64::INFINITY);
        let im = self.im.to_f64().unwrap_or(f64::INFINITY);
        re.hypot(im)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Decimal num/den string form used by the serialization layer.
pub fn rat_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rat_from_string(s: &str) -> Option<BigRational> {
    let (n, d) = s.split_once('/')?;
    let numer: BigInt = n.trim().parse().ok()?;
    let denom: BigInt = d.trim().parse().ok()?;
    if denom.is_zero() {
        return None;
    }
    Some(BigRational::new(numer, denom))
}
