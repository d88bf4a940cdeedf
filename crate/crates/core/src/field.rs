//! Arithmetic in a prime field GF(q) and the polynomial helpers used by the
//! Reed-Solomon style secret sharing.
//!
//! Elements carry their modulus so that the usual operator traits can be
//! implemented. Mixing elements of different fields is a logic error and is
//! caught by a debug assertion.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::Rng;

use crate::error::{Error, Result};

/// GF(q) for a prime `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    q: u64,
}

impl PrimeField {
    /// 2^31 - 1, used for the full-scale runs.
    pub const MERSENNE_31: u64 = 2_147_483_647;

    /// Builds the field, rejecting composite moduli. Products are taken in
    /// `u128` so any `q < 2^32` is safe.
    pub fn new(q: u64) -> Result<Self> {
        if q >= 1 << 32 || !is_prime(q) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self { q })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Reduces `value` into the field.
    pub fn element(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.q,
            q: self.q,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// Uniformly random element.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        self.element(rng.random_range(0..self.q))
    }

    /// Every element of the field in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |v| self.element(v))
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.q)
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    if q.is_multiple_of(2) {
        return q == 2;
    }
    let mut d = 3u64;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Canonical residue in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u64,
    q: u64,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        PrimeField { q: self.q }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn pow(self, mut exp: u64) -> Self {
        let mut base = self;
        let mut acc = self.field().one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero(self.q));
        }
        Ok(self.pow(self.q - 2))
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        Ok(self * rhs.inv()?)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FieldElement {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.q, rhs.q, "operands from different fields");
        let s = self.value + rhs.value;
        Self {
            value: if s >= self.q { s - self.q } else { s },
            q: self.q,
        }
    }
}

impl Sub for FieldElement {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        debug_assert_eq!(self.q, rhs.q, "operands from different fields");
        let value = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.q - (rhs.value - self.value)
        };
        Self { value, q: self.q }
    }
}

impl Mul for FieldElement {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        debug_assert_eq!(self.q, rhs.q, "operands from different fields");
        let p = (self.value as u128 * rhs.value as u128) % self.q as u128;
        Self {
            value: p as u64,
            q: self.q,
        }
    }
}

impl Neg for FieldElement {
    type Output = Self;

    fn neg(self) -> Self {
        let value = if self.value == 0 { 0 } else { self.q - self.value };
        Self { value, q: self.q }
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for FieldElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

/// Horner evaluation of `Σ coeffs[d] x^d`; `coeffs[0]` is the constant term.
pub fn poly_eval(coeffs: &[FieldElement], x: FieldElement) -> Result<FieldElement> {
    let (last, rest) = coeffs.split_last().ok_or(Error::EmptyPolynomial)?;
    Ok(rest.iter().rev().fold(*last, |acc, &c| acc * x + c))
}

/// Lagrange basis weights `w_i` such that `P(x0) = Σ w_i y_i` for the
/// polynomial of degree `< xs.len()` through `(xs[i], y_i)`.
pub fn lagrange_weights(xs: &[FieldElement], x0: FieldElement) -> Result<Vec<FieldElement>> {
    if xs.is_empty() {
        return Err(Error::NoPoints);
    }
    for (i, a) in xs.iter().enumerate() {
        if xs[..i].contains(a) {
            return Err(Error::DuplicatePoint(a.value()));
        }
    }
    let one = x0.field().one();
    xs.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let (num, den) = xs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold((one, one), |(num, den), (_, &xj)| {
                    (num * (x0 - xj), den * (xi - xj))
                });
            num.checked_div(den)
        })
        .collect()
}

/// Value at `x0` of the unique polynomial of degree `< points.len()` through
/// `points`.
pub fn lagrange_interpolate_at(
    points: &[(FieldElement, FieldElement)],
    x0: FieldElement,
) -> Result<FieldElement> {
    let xs: Vec<_> = points.iter().map(|&(x, _)| x).collect();
    let weights = lagrange_weights(&xs, x0)?;
    Ok(weights
        .iter()
        .zip(points)
        .fold(x0.field().zero(), |acc, (&w, &(_, y))| acc + w * y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(q: u64) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn rejects_composite_moduli() {
        for q in [0, 1, 4, 9, 15, 21, 91] {
            assert_eq!(PrimeField::new(q), Err(Error::NotPrime(q)));
        }
        for q in [2, 3, 7, 11, 13, 101, PrimeField::MERSENNE_31] {
            assert!(PrimeField::new(q).is_ok());
        }
    }

    #[test]
    fn small_examples() {
        let f = gf(7);
        assert_eq!((f.element(3) + f.element(5)).value(), 1);
        assert_eq!(f.element(3).inv().unwrap().value(), 5);
        assert_eq!((-f.element(3)).value(), 4);
        assert_eq!((f.element(2) - f.element(5)).value(), 4);
        assert_eq!(f.element(3).pow(6).value(), 1);
    }

    #[test]
    fn inverse_matches_brute_force_table() {
        for q in [2, 3, 5, 7, 11, 13] {
            let f = gf(q);
            for a in 1..q {
                let brute = (1..q).find(|b| (a * b) % q == 1).unwrap();
                assert_eq!(f.element(a).inv().unwrap().value(), brute);
            }
        }
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let f = gf(11);
        assert_eq!(f.zero().inv(), Err(Error::DivisionByZero(11)));
        assert_eq!(
            f.element(4).checked_div(f.zero()),
            Err(Error::DivisionByZero(11))
        );
    }

    #[test]
    fn field_axioms_exhaustive_small_q() {
        for q in [2, 3, 5, 7, 11, 13] {
            let f = gf(q);
            let all: Vec<_> = f.elements().collect();
            for &a in &all {
                assert_eq!(a + f.zero(), a);
                assert_eq!(a * f.one(), a);
                assert_eq!(a + (-a), f.zero());
                if !a.is_zero() {
                    assert_eq!(a * a.inv().unwrap(), f.one());
                }
                for &b in &all {
                    assert_eq!(a + b, b + a);
                    assert_eq!(a * b, b * a);
                    assert_eq!((a - b) + b, a);
                    for &c in &all {
                        assert_eq!((a + b) + c, a + (b + c));
                        assert_eq!((a * b) * c, a * (b * c));
                        assert_eq!(a * (b + c), a * b + a * c);
                    }
                }
            }
        }
    }

    #[test]
    fn poly_eval_examples() {
        let f = gf(7);
        let c = [f.element(2), f.element(3)];
        assert_eq!(poly_eval(&c, f.element(4)).unwrap().value(), 0);
        assert_eq!(poly_eval(&c, f.zero()).unwrap().value(), 2);
        assert_eq!(poly_eval(&[f.element(5)], f.element(6)).unwrap().value(), 5);
        assert_eq!(poly_eval(&[], f.element(1)), Err(Error::EmptyPolynomial));
    }

    #[test]
    fn interpolation_examples() {
        let f = gf(11);
        let pts = [(f.element(1), f.element(5)), (f.element(2), f.element(7))];
        assert_eq!(lagrange_interpolate_at(&pts, f.zero()).unwrap().value(), 3);
        let single = [(f.element(1), f.element(9))];
        for x in f.elements() {
            assert_eq!(lagrange_interpolate_at(&single, x).unwrap().value(), 9);
        }
        let dup = [(f.element(1), f.element(5)), (f.element(1), f.element(7))];
        assert_eq!(
            lagrange_interpolate_at(&dup, f.zero()),
            Err(Error::DuplicatePoint(1))
        );
        assert_eq!(lagrange_interpolate_at(&[], f.zero()), Err(Error::NoPoints));
    }

    proptest! {
        #[test]
        fn axioms_random_large_field(a in 0u64..PrimeField::MERSENNE_31, b in 0u64..PrimeField::MERSENNE_31, c in 0u64..PrimeField::MERSENNE_31) {
            let f = gf(PrimeField::MERSENNE_31);
            let (a, b, c) = (f.element(a), f.element(b), f.element(c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!((a * b) * c, a * (b * c));
            prop_assert_eq!((a - b) + b, a);
            if !a.is_zero() {
                prop_assert_eq!(a * a.inv().unwrap(), f.one());
            }
        }

        #[test]
        fn interpolation_recovers_polynomial(
            coeffs in proptest::collection::vec(0u64..11, 1..8),
            x in 0u64..11,
        ) {
            let f = gf(11);
            let coeffs: Vec<_> = coeffs.into_iter().map(|c| f.element(c)).collect();
            let pts: Vec<_> = (1..=coeffs.len() as u64)
                .map(|t| (f.element(t), poly_eval(&coeffs, f.element(t)).unwrap()))
                .collect();
            prop_assert_eq!(
                lagrange_interpolate_at(&pts, f.element(x)).unwrap(),
                poly_eval(&coeffs, f.element(x)).unwrap()
            );
        }
    }
}
