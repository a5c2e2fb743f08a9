//! Exact arithmetic in the cyclotomic field Q(ζ_p) for a prime p.
//!
//! A [`CycNumber`] stores coefficients in the basis 1, ζ, …, ζ^{p−2} of
//! Q[x]/(Φ_p). Rational constants carry `p = 0` so they combine with elements
//! of any cyclotomic field; every result is normalized back to that form
//! whenever only the constant coefficient survives.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational numbers.
pub type Q = num_rational::BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycError {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot combine elements of Q(zeta_{0}) and Q(zeta_{1})")]
    FieldMismatch(u32, u32),
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Builds a rational from a numerator and denominator.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycNumber {
    p: u32,
    coeffs: Vec<Q>,
}

impl CycNumber {
    pub fn zero() -> Self {
        CycNumber { p: 0, coeffs: vec![Q::zero()] }
    }

    pub fn one() -> Self {
        Self::from_rational(Q::one())
    }

    pub fn from_rational(r: Q) -> Self {
        CycNumber { p: 0, coeffs: vec![r] }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(qi(n))
    }

    /// Builds an element of Q(ζ_p) from coefficients of 1, ζ, …, ζ^{p−2}.
    /// Shorter inputs are zero-padded; for p = 2 the single coefficient is
    /// the rational value.
    pub fn from_coeffs(p: u32, coeffs: Vec<Q>) -> Result<Self, CycError> {
        if !is_prime(p) {
            return Err(CycError::NotPrime(p));
        }
        let n = (p - 1) as usize;
        let mut c = coeffs;
        if c.len() > n {
            return Err(CycError::FieldMismatch(p, c.len() as u32 + 1));
        }
        c.resize(n, Q::zero());
        Ok(Self::normalized(p, c))
    }

    fn normalized(p: u32, coeffs: Vec<Q>) -> Self {
        if p <= 2 || coeffs[1..].iter().all(Zero::is_zero) {
            let c0 = coeffs.into_iter().next().unwrap_or_else(Q::zero);
            return CycNumber { p: 0, coeffs: vec![c0] };
        }
        CycNumber { p, coeffs }
    }

    /// The prime of the ambient field, or 0 for a rational constant.
    pub fn field_prime(&self) -> u32 {
        self.p
    }

    /// Coefficients in the basis 1, ζ, …, ζ^{p−2} (length p − 1), padding
    /// rational constants to the requested field.
    pub fn coeffs_in(&self, p: u32) -> Vec<Q> {
        let n = if p <= 1 { 1 } else { (p - 1) as usize };
        let mut c = self.coeffs.clone();
        c.resize(n.max(c.len()), Q::zero());
        c
    }

    pub fn is_zero(&self) -> bool {
        self.p == 0 && self.coeffs[0].is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.p == 0 && self.coeffs[0].is_one()
    }

    pub fn to_rational(&self) -> Option<Q> {
        (self.p == 0).then(|| self.coeffs[0].clone())
    }

    fn common_prime(&self, other: &Self) -> u32 {
        match (self.p, other.p) {
            (0, b) => b,
            (a, 0) => a,
            (a, b) if a == b => a,
            (a, b) => panic!("{}", CycError::FieldMismatch(a, b)),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, CycError> {
        self.check_field(other)?;
        Ok(self + other)
    }

    fn check_field(&self, other: &Self) -> Result<(), CycError> {
        if self.p != 0 && other.p != 0 && self.p != other.p {
            return Err(CycError::FieldMismatch(self.p, other.p));
        }
        Ok(())
    }

    pub fn scale(&self, r: &Q) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        CycNumber { p: self.p, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    /// Multiplies `coeffs` (length p, indices are powers of x) modulo Φ_p.
    fn reduce_full(p: u32, mut full: Vec<Q>) -> Self {
        let n = (p - 1) as usize;
        let top = std::mem::replace(&mut full[n], Q::zero());
        full.truncate(n);
        if !top.is_zero() {
            for c in full.iter_mut() {
                *c -= &top;
            }
        }
        Self::normalized(p, full)
    }

    fn mul_cyc(&self, other: &Self) -> Self {
        if let Some(r) = self.to_rational() {
            return other.scale(&r);
        }
        if let Some(r) = other.to_rational() {
            return self.scale(&r);
        }
        let p = self.common_prime(other);
        let pu = p as usize;
        let mut full = vec![Q::zero(); pu];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                full[(i + j) % pu] += a * b;
            }
        }
        Self::reduce_full(p, full)
    }

    /// The Galois automorphism ζ ↦ ζ^j.
    pub fn galois(&self, j: u32) -> Self {
        if self.p == 0 {
            return self.clone();
        }
        let pu = self.p as usize;
        let mut full = vec![Q::zero(); pu];
        for (k, c) in self.coeffs.iter().enumerate() {
            full[(k * j as usize) % pu] += c;
        }
        Self::reduce_full(self.p, full)
    }

    /// Complex conjugation ζ ↦ ζ^{−1}.
    pub fn conj(&self) -> Self {
        if self.p == 0 {
            return self.clone();
        }
        self.galois(self.p - 1)
    }

    /// Norm from Q(ζ_p) down to Q; a rational r has norm r^{p−1}.
    pub fn norm_in(&self, p: u32) -> Result<Q, CycError> {
        match self.to_rational() {
            Some(r) => Ok(num_traits::Pow::pow(r, p.saturating_sub(1))),
            None if self.p == p => Ok(self.norm()),
            None => Err(CycError::FieldMismatch(self.p, p)),
        }
    }

    /// Field norm from the smallest cyclotomic field containing `self`
    /// down to Q.
    pub fn norm(&self) -> Q {
        if self.p == 0 {
            return self.coeffs[0].clone();
        }
        let mut prod = self.clone();
        for j in 2..self.p {
            prod = prod.mul_cyc(&self.galois(j));
        }
        prod.to_rational().expect("norm is rational")
    }

    pub fn inv(&self) -> Result<Self, CycError> {
        if self.is_zero() {
            return Err(CycError::DivisionByZero);
        }
        if let Some(r) = self.to_rational() {
            return Ok(Self::from_rational(r.recip()));
        }
        let mut others = Self::one();
        for j in 2..self.p {
            others = others.mul_cyc(&self.galois(j));
        }
        let n = self.mul_cyc(&others).to_rational().expect("norm is rational");
        Ok(others.scale(&n.recip()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, CycError> {
        self.check_field(other)?;
        Ok(self.mul_cyc(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> Self {
        let base = if e < 0 { self.inv().expect("power of zero with negative exponent") } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one();
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_cyc(&b);
            }
            b = b.mul_cyc(&b);
            e >>= 1;
        }
        acc
    }
}

/// The primitive p-th root of unity ζ_p (the class of x).
pub fn zeta(p: u32) -> Result<CycNumber, CycError> {
    if !is_prime(p) {
        return Err(CycError::NotPrime(p));
    }
    if p == 2 {
        return Ok(CycNumber::from_int(-1));
    }
    let mut c = vec![Q::zero(); (p - 1) as usize];
    c[1] = Q::one();
    Ok(CycNumber { p, coeffs: c })
}

/// ζ_p^k for any integer k.
pub fn zeta_pow(p: u32, k: i64) -> Result<CycNumber, CycError> {
    let z = zeta(p)?;
    Ok(z.pow(k.rem_euclid(p as i64)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn cyc_arith(a: &CycNumber, b: &CycNumber, op: ArithOp) -> Result<CycNumber, CycError> {
    a.check_field(b)?;
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.checked_div(b)?,
    })
}

impl<'a> Add<&'a CycNumber> for &'a CycNumber {
    type Output = CycNumber;
    fn add(self, other: &CycNumber) -> CycNumber {
        let p = self.common_prime(other);
        if p == 0 {
            return CycNumber::from_rational(&self.coeffs[0] + &other.coeffs[0]);
        }
        let mut c = self.coeffs_in(p);
        for (i, b) in other.coeffs.iter().enumerate() {
            c[i] += b;
        }
        CycNumber::normalized(p, c)
    }
}

impl<'a> Sub<&'a CycNumber> for &'a CycNumber {
    type Output = CycNumber;
    fn sub(self, other: &CycNumber) -> CycNumber {
        self + &(-other)
    }
}

impl<'a> Mul<&'a CycNumber> for &'a CycNumber {
    type Output = CycNumber;
    fn mul(self, other: &CycNumber) -> CycNumber {
        self.mul_cyc(other)
    }
}

impl<'a> Div<&'a CycNumber> for &'a CycNumber {
    type Output = CycNumber;
    fn div(self, other: &CycNumber) -> CycNumber {
        self.checked_div(other).expect("cyclotomic division")
    }
}

impl Neg for &CycNumber {
    type Output = CycNumber;
    fn neg(self) -> CycNumber {
        CycNumber { p: self.p, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<CycNumber> for CycNumber {
            type Output = CycNumber;
            fn $m(self, other: CycNumber) -> CycNumber {
                (&self).$m(&other)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for CycNumber {
    type Output = CycNumber;
    fn neg(self) -> CycNumber {
        -&self
    }
}

fn fmt_rational(r: &Q) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for CycNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p == 0 {
            return write!(f, "{}", fmt_rational(&self.coeffs[0]));
        }
        let mut out = String::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mono = match k {
                0 => String::new(),
                1 => "z".to_string(),
                _ => format!("z^{k}"),
            };
            if k == 0 {
                out.push_str(&fmt_rational(&mag));
            } else if mag.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{}*{}", fmt_rational(&mag), mono));
            }
        }
        write!(f, "{out}")
    }
}

impl fmt::Debug for CycNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_two_is_minus_one() {
        assert_eq!(zeta(2).unwrap(), CycNumber::from_int(-1));
    }

    #[test]
    fn cube_root_relation() {
        let z = zeta(3).unwrap();
        let s = &(&z * &z) + &z;
        assert_eq!(&s + &CycNumber::one(), CycNumber::zero());
    }

    #[test]
    fn fifth_root_times_fourth_power() {
        let z = zeta(5).unwrap();
        assert!((&z * &z.pow(4)).is_one());
    }

    #[test]
    fn non_prime_rejected() {
        assert_eq!(zeta(4), Err(CycError::NotPrime(4)));
        assert_eq!(zeta(1), Err(CycError::NotPrime(1)));
    }

    #[test]
    fn primitive_order() {
        for p in [2u32, 3, 5, 7] {
            let z = zeta(p).unwrap();
            assert!(z.pow(p as i64).is_one());
            for k in 1..p {
                assert!(!z.pow(k as i64).is_one());
            }
        }
    }

    #[test]
    fn arith_examples() {
        let z = zeta(3).unwrap();
        let z2 = z.pow(2);
        assert!(cyc_arith(&z, &z2, ArithOp::Mul).unwrap().is_one());
        let s = cyc_arith(&(&CycNumber::one() + &z), &z2, ArithOp::Add).unwrap();
        assert!(s.is_zero());
        let z5 = zeta(5).unwrap();
        assert!(cyc_arith(&z5, &z5, ArithOp::Div).unwrap().is_one());
        assert_eq!(cyc_arith(&z5, &CycNumber::zero(), ArithOp::Div), Err(CycError::DivisionByZero));
    }

    #[test]
    fn mixed_fields_rejected() {
        let a = zeta(3).unwrap();
        let b = zeta(5).unwrap();
        assert_eq!(cyc_arith(&a, &b, ArithOp::Add), Err(CycError::FieldMismatch(3, 5)));
    }

    #[test]
    fn roots_sum_to_zero() {
        for p in [2u32, 3, 5, 7] {
            let mut s = CycNumber::zero();
            for k in 0..p {
                s = &s + &zeta_pow(p, k as i64).unwrap();
            }
            assert!(s.is_zero(), "p = {p}");
        }
    }

    #[test]
    fn inverse_of_one_plus_zeta() {
        let z = zeta(7).unwrap();
        let a = &CycNumber::one() + &z;
        assert!((&a * &a.inv().unwrap()).is_one());
        assert_eq!(a.norm(), qi(1));
    }

    #[test]
    fn display_forms() {
        let z = zeta(5).unwrap();
        let a = &(&z * &CycNumber::from_int(3)) - &CycNumber::from_rational(q(1, 2));
        assert_eq!(a.to_string(), "-1/2 + 3*z");
        assert_eq!(zeta(3).unwrap().pow(2).to_string(), "-1 - z");
    }
}
