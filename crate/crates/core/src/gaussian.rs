//! Arithmetic in Z[i]: primary splitting of rational primes and quadratic /
//! quartic residue symbols modulo Gaussian primes.
//!
//! Symbols are evaluated in the residue field. For a split prime `π = a + bi`
//! of norm `p`, the map Z[i] → F_p sends `i` to `-a/b`, so a quartic symbol is
//! one modular exponentiation in F_p.

use std::fmt;
use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{inv_mod, is_prime_u64, mul_mod, pow_mod, reduce_i128, sqrt_mod_u64};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GaussError {
    #[error("{0} does not split in Z[i]")]
    NotSplit(u64),
    #[error("{0} is not prime")]
    NotPrime(String),
    #[error("{0} is not a Gaussian prime of odd norm")]
    BadModulus(GaussInt),
    #[error("{alpha} is divisible by {pi}")]
    NotCoprime { alpha: GaussInt, pi: GaussInt },
    #[error("arithmetic overflow in Z[i]")]
    Overflow,
}

pub type Result<T> = std::result::Result<T, GaussError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussInt {
    pub re: i64,
    pub im: i64,
}

impl GaussInt {
    pub const ONE: GaussInt = GaussInt { re: 1, im: 0 };
    pub const I: GaussInt = GaussInt { re: 0, im: 1 };

    pub const fn new(re: i64, im: i64) -> Self {
        Self { re, im }
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn norm(self) -> u128 {
        (self.re as i128 * self.re as i128 + self.im as i128 * self.im as i128) as u128
    }

    pub fn checked_mul(self, rhs: Self) -> Option<Self> {
        let (a, b, c, d) = (
            self.re as i128,
            self.im as i128,
            rhs.re as i128,
            rhs.im as i128,
        );
        let re = i64::try_from(a * c - b * d).ok()?;
        let im = i64::try_from(a * d + b * c).ok()?;
        Some(Self::new(re, im))
    }

    /// `self ≡ 1 (mod (1+i)^3)`, i.e. `re` odd, `im` even and `re + im ≡ 1 (mod 4)`.
    pub fn is_primary(self) -> bool {
        self.re.rem_euclid(2) == 1 && self.im.rem_euclid(2) == 0 && (self.re + self.im).rem_euclid(4) == 1
    }
}

impl From<i64> for GaussInt {
    fn from(n: i64) -> Self {
        Self::new(n, 0)
    }
}

impl Mul for GaussInt {
    type Output = GaussInt;

    fn mul(self, rhs: Self) -> Self {
        self.checked_mul(rhs).expect("Gaussian integer product overflows i64")
    }
}

impl Neg for GaussInt {
    type Output = GaussInt;

    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl fmt::Display for GaussInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0 {
            write!(f, "{}-{}i", self.re, -self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Which of the two conjugate primary primes above `p` to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub enum Labeling {
    /// `im > 0`.
    #[default]
    Canonical,
    /// The complex conjugate of the canonical choice.
    Conjugate,
}

/// A fourth root of unity `i^k`, stored as `k mod 4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct QuarticValue(u8);

impl QuarticValue {
    pub const ONE: QuarticValue = QuarticValue(0);
    pub const MINUS_ONE: QuarticValue = QuarticValue(2);

    pub fn from_exponent(k: i64) -> Self {
        Self(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn square(self) -> Self {
        Self((2 * self.0) % 4)
    }

    pub fn conj(self) -> Self {
        Self((4 - self.0) % 4)
    }

    /// `Some(±1)` when the value is real.
    pub fn to_sign(self) -> Option<i32> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn from_sign(s: i32) -> Self {
        if s == 1 {
            Self::ONE
        } else {
            Self::MINUS_ONE
        }
    }
}

impl Mul for QuarticValue {
    type Output = QuarticValue;

    fn mul(self, rhs: Self) -> Self {
        Self((self.0 + rhs.0) % 4)
    }
}

impl std::iter::Product for QuarticValue {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, |a, b| a * b)
    }
}

impl fmt::Display for QuarticValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["1", "i", "-1", "-i"][self.0 as usize])
    }
}

/// Writes a prime `p ≡ 1 (mod 4)` as `a² + b²` (Cornacchia).
fn two_squares(p: u64) -> (i64, i64) {
    let r = sqrt_mod_u64(p - 1, p).expect("-1 is a square modulo p = 1 (mod 4)");
    let mut pair = (p, r);
    while (pair.1 as u128) * (pair.1 as u128) > p as u128 {
        pair = (pair.1, pair.0 % pair.1);
    }
    let a = pair.1;
    let b2 = p - a * a;
    let mut b = (b2 as f64).sqrt() as u64;
    while b * b > b2 {
        b -= 1;
    }
    while (b + 1) * (b + 1) <= b2 {
        b += 1;
    }
    debug_assert_eq!(b * b, b2);
    (a as i64, b as i64)
}

/// The primary prime above `p`: `1+i` for `p = 2`, otherwise the unique
/// `a + bi` of norm `p` with `a` odd, `b` even, `a + b ≡ 1 (mod 4)` and `b > 0`.
pub fn split_primary(p: u64) -> Result<GaussInt> {
    split_primary_with(p, Labeling::Canonical)
}

pub fn split_primary_with(p: u64, labeling: Labeling) -> Result<GaussInt> {
    if !is_prime_u64(p) {
        return Err(GaussError::NotPrime(p.to_string()));
    }
    if p == 2 {
        return Ok(GaussInt::new(1, 1));
    }
    if p % 4 != 1 {
        return Err(GaussError::NotSplit(p));
    }
    let (mut a, mut b) = two_squares(p);
    if a % 2 == 0 {
        std::mem::swap(&mut a, &mut b);
    }
    if (a + b).rem_euclid(4) != 1 {
        a = -a;
        b = -b;
    }
    let pi = GaussInt::new(a, b.abs());
    Ok(match labeling {
        Labeling::Canonical => pi,
        Labeling::Conjugate => pi.conj(),
    })
}

/// Residue field of a Gaussian prime of odd norm.
#[derive(Debug, Clone, Copy)]
enum ResidueField {
    /// F_p with `i ↦ root`.
    Split { p: u64, root: u64 },
    /// F_q[i] for a rational prime `q ≡ 3 (mod 4)`.
    Inert { q: u64 },
}

fn residue_field(pi: GaussInt) -> Result<ResidueField> {
    let n = pi.norm();
    if n < 3 || n.is_multiple_of(2) || n > u64::MAX as u128 {
        return Err(GaussError::BadModulus(pi));
    }
    let n = n as u64;
    if pi.re != 0 && pi.im != 0 {
        if !is_prime_u64(n) {
            return Err(GaussError::BadModulus(pi));
        }
        let b_inv = inv_mod(reduce_i128(pi.im as i128, n), n).ok_or(GaussError::BadModulus(pi))?;
        let root = mul_mod(reduce_i128(-(pi.re as i128), n), b_inv, n);
        Ok(ResidueField::Split { p: n, root })
    } else {
        let q = pi.re.unsigned_abs().max(pi.im.unsigned_abs());
        if q % 4 != 3 || !is_prime_u64(q) {
            return Err(GaussError::BadModulus(pi));
        }
        Ok(ResidueField::Inert { q })
    }
}

fn fq2_mul(x: (u64, u64), y: (u64, u64), q: u64) -> (u64, u64) {
    let re = (mul_mod(x.0, y.0, q) + q - mul_mod(x.1, y.1, q)) % q;
    let im = (mul_mod(x.0, y.1, q) + mul_mod(x.1, y.0, q)) % q;
    (re, im)
}

/// The quartic residue symbol `(α/π)_4`, i.e. the `i^k` with
/// `α^((N(π)-1)/4) ≡ i^k (mod π)`.
pub fn quartic_symbol(alpha: GaussInt, pi: GaussInt) -> Result<QuarticValue> {
    match residue_field(pi)? {
        ResidueField::Split { p, root } => {
            let image = (reduce_i128(alpha.re as i128, p) + mul_mod(reduce_i128(alpha.im as i128, p), root, p)) % p;
            if image == 0 {
                return Err(GaussError::NotCoprime { alpha, pi });
            }
            let e = pow_mod(image, (p - 1) / 4, p);
            let k = if e == 1 {
                0
            } else if e == root {
                1
            } else if e == p - 1 {
                2
            } else if e == p - root {
                3
            } else {
                unreachable!("power map lands outside the fourth roots of unity")
            };
            Ok(QuarticValue(k))
        }
        ResidueField::Inert { q } => {
            let x = (reduce_i128(alpha.re as i128, q), reduce_i128(alpha.im as i128, q));
            if x == (0, 0) {
                return Err(GaussError::NotCoprime { alpha, pi });
            }
            let mut exp = ((q as u128 * q as u128 - 1) / 4) as u64;
            let (mut acc, mut base) = ((1u64, 0u64), x);
            while exp > 0 {
                if exp & 1 == 1 {
                    acc = fq2_mul(acc, base, q);
                }
                base = fq2_mul(base, base, q);
                exp >>= 1;
            }
            let k = match acc {
                (1, 0) => 0,
                (0, 1) => 1,
                (r, 0) if r == q - 1 => 2,
                (0, r) if r == q - 1 => 3,
                _ => unreachable!("power map lands outside the fourth roots of unity"),
            };
            Ok(QuarticValue(k))
        }
    }
}

/// The quadratic residue symbol `(α/π)_2 = ((α/π)_4)^2` as `±1`.
pub fn quad_symbol(alpha: GaussInt, pi: GaussInt) -> Result<i32> {
    Ok(quartic_symbol(alpha, pi)?.square().to_sign().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{jacobi_i64, primes_in_range};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct Gaussian exponentiation oracle: reduces in Z[i] by rounding
    /// division, never touching the residue-field map.
    fn gauss_rem(x: (i128, i128), m: (i128, i128)) -> (i128, i128) {
        let n = m.0 * m.0 + m.1 * m.1;
        // x * conj(m) / n
        let num_re = x.0 * m.0 + x.1 * m.1;
        let num_im = x.1 * m.0 - x.0 * m.1;
        let round = |v: i128| (2 * v + n).div_euclid(2 * n);
        let (q0, q1) = (round(num_re), round(num_im));
        (x.0 - (q0 * m.0 - q1 * m.1), x.1 - (q0 * m.1 + q1 * m.0))
    }

    fn gauss_mulmod(x: (i128, i128), y: (i128, i128), m: (i128, i128)) -> (i128, i128) {
        gauss_rem((x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0), m)
    }

    fn direct_quartic(alpha: GaussInt, pi: GaussInt) -> u8 {
        let m = (pi.re as i128, pi.im as i128);
        let n = pi.norm() as u64;
        let mut exp = (n - 1) / 4;
        let mut acc = (1i128, 0i128);
        let mut base = gauss_rem((alpha.re as i128, alpha.im as i128), m);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = gauss_mulmod(acc, base, m);
            }
            base = gauss_mulmod(base, base, m);
            exp >>= 1;
        }
        let units = [(1, 0), (0, 1), (-1, 0), (0, -1)];
        for (k, u) in units.iter().enumerate() {
            if gauss_rem((acc.0 - u.0, acc.1 - u.1), m) == (0, 0) {
                return k as u8;
            }
        }
        panic!("no unit matched");
    }

    #[test]
    fn split_primary_examples() {
        assert_eq!(split_primary(5).unwrap(), GaussInt::new(-1, 2));
        assert_eq!(split_primary(13).unwrap(), GaussInt::new(3, 2));
        assert_eq!(split_primary(2).unwrap(), GaussInt::new(1, 1));
        assert_eq!(split_primary(7), Err(GaussError::NotSplit(7)));
        assert!(matches!(split_primary(21), Err(GaussError::NotPrime(_))));
        assert_eq!(
            split_primary_with(13, Labeling::Conjugate).unwrap(),
            GaussInt::new(3, -2)
        );
    }

    #[test]
    fn primary_normal_form() {
        for p in primes_in_range(3, 200_000).filter(|p| p % 4 == 1) {
            let pi = split_primary(p).unwrap();
            assert_eq!(pi.norm(), p as u128);
            assert_eq!(pi * pi.conj(), GaussInt::from(p as i64));
            assert!(pi.is_primary(), "{pi} over {p}");
            assert!(pi.im > 0);
            // π - 1 divisible by (1+i)^3 = -2+2i
            let diff = (pi.re as i128 - 1, pi.im as i128);
            assert_eq!(gauss_rem(diff, (-2, 2)), (0, 0));
        }
    }

    #[test]
    fn quartic_symbol_examples() {
        let pi13 = GaussInt::new(3, 2);
        assert_eq!(quartic_symbol(GaussInt::ONE, pi13).unwrap(), QuarticValue::ONE);
        assert_eq!(
            quartic_symbol(GaussInt::from(2), pi13).unwrap(),
            QuarticValue::from_exponent(3)
        );
        assert_eq!(quad_symbol(GaussInt::from(2), pi13).unwrap(), -1);
        assert_eq!(quad_symbol(GaussInt::ONE, pi13).unwrap(), 1);
        // fourth powers have trivial symbol
        let beta = GaussInt::new(4, 5);
        let b4 = beta * beta * beta * beta;
        assert_eq!(quartic_symbol(b4, pi13).unwrap(), QuarticValue::ONE);
        assert_eq!(quad_symbol(beta * beta, pi13).unwrap(), 1);
    }

    #[test]
    fn quartic_symbol_errors() {
        let pi13 = GaussInt::new(3, 2);
        assert!(matches!(
            quartic_symbol(pi13 * GaussInt::new(5, 1), pi13),
            Err(GaussError::NotCoprime { .. })
        ));
        assert!(matches!(
            quartic_symbol(GaussInt::ONE, GaussInt::new(1, 1)),
            Err(GaussError::BadModulus(_))
        ));
        assert!(matches!(
            quartic_symbol(GaussInt::ONE, GaussInt::new(3, 3)),
            Err(GaussError::BadModulus(_))
        ));
    }

    #[test]
    fn inert_prime_symbols() {
        // n^((q²-1)/4) = (n^(q-1))^((q+1)/4) = 1 for rational n when q = 3 (mod 4).
        for q in [3i64, 7, 11, 19, 23] {
            for n in 1..q {
                assert_eq!(
                    quartic_symbol(GaussInt::from(n), GaussInt::from(q)).unwrap(),
                    QuarticValue::ONE
                );
            }
            assert_eq!(
                quartic_symbol(GaussInt::new(1, 1), GaussInt::from(q)).unwrap(),
                QuarticValue(direct_quartic(GaussInt::new(1, 1), GaussInt::from(q)))
            );
        }
    }

    #[test]
    fn residue_field_route_matches_direct_exponentiation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let primes: Vec<u64> = primes_in_range(5, 20_000).filter(|p| p % 4 == 1).collect();
        for _ in 0..3000 {
            let p = primes[rng.gen_range(0..primes.len())];
            let pi = split_primary_with(
                p,
                if rng.gen() { Labeling::Canonical } else { Labeling::Conjugate },
            )
            .unwrap();
            let alpha = GaussInt::new(rng.gen_range(-10_000..10_000), rng.gen_range(-10_000..10_000));
            match quartic_symbol(alpha, pi) {
                Ok(v) => assert_eq!(v.exponent(), direct_quartic(alpha, pi), "{alpha} mod {pi}"),
                Err(GaussError::NotCoprime { .. }) => {
                    assert_eq!(gauss_rem((alpha.re as i128, alpha.im as i128), (pi.re as i128, pi.im as i128)), (0, 0))
                }
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn quartic_reciprocity_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let primes: Vec<u64> = primes_in_range(5, 100_000).filter(|p| p % 4 == 1).collect();
        for _ in 0..2000 {
            let p = primes[rng.gen_range(0..primes.len())];
            let q = primes[rng.gen_range(0..primes.len())];
            if p == q {
                continue;
            }
            let (pi, rho) = (split_primary(p).unwrap(), split_primary(q).unwrap());
            let sign = if ((p - 1) / 4 * ((q - 1) / 4)).is_multiple_of(2) { 0 } else { 2 };
            assert_eq!(
                quartic_symbol(pi, rho).unwrap(),
                quartic_symbol(rho, pi).unwrap() * QuarticValue::from_exponent(sign)
            );
        }
    }

    #[test]
    fn rational_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let primes: Vec<u64> = primes_in_range(5, 50_000).filter(|p| p % 4 == 1).collect();
        for _ in 0..2000 {
            let p = primes[rng.gen_range(0..primes.len())];
            let n: i64 = rng.gen_range(-1_000_000..1_000_000);
            if n % p as i64 == 0 {
                continue;
            }
            let pi = split_primary(p).unwrap();
            assert_eq!(
                quad_symbol(GaussInt::from(n), pi).unwrap(),
                jacobi_i64(n, p).unwrap()
            );
        }
    }

    #[test]
    fn quartic_value_group_law() {
        let i = QuarticValue::from_exponent(1);
        assert_eq!(i * i, QuarticValue::MINUS_ONE);
        assert_eq!(i.square(), QuarticValue::MINUS_ONE);
        assert_eq!(i.conj(), QuarticValue::from_exponent(3));
        assert_eq!(i.to_sign(), None);
        assert_eq!(QuarticValue::from_exponent(-2).to_sign(), Some(-1));
        assert_eq!([i, i, i, i].into_iter().product::<QuarticValue>(), QuarticValue::ONE);
        assert_eq!(i.to_string(), "i");
    }
}
