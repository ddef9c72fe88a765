//! Rational fourth-power residue symbols, Hilbert symbols over Q and the
//! quartic invariant `δ(a, b)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize_u64, is_prime_u64, jacobi_i64, pow_mod, reduce_i128, ArithError};
use crate::gaussian::{quartic_symbol, split_primary_with, GaussError, GaussInt, Labeling, QuarticValue};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("hilbert symbol needs nonzero entries")]
    ZeroEntry,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("quartic product {0} is not real")]
    NotReal(QuarticValue),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

pub type Result<T> = std::result::Result<T, SymbolError>;

/// A place of Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Place {
    Odd(u64),
    Two,
    Infinity,
}

impl Place {
    /// The place above the rational prime `l`.
    pub fn prime(l: u64) -> Result<Self> {
        if l == 2 {
            Ok(Place::Two)
        } else if is_prime_u64(l) {
            Ok(Place::Odd(l))
        } else {
            Err(SymbolError::NotPrime(l))
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Odd(l) => write!(f, "{l}"),
            Place::Two => f.write_str("2"),
            Place::Infinity => f.write_str("inf"),
        }
    }
}

/// Fourth-power residue indicator `[a/ℓ]`: `+1` when `a` is a fourth power
/// modulo an odd prime `ℓ` with `(a/ℓ) = 1`; at `ℓ = 2`, defined for
/// `a ≡ 1 (mod 8)` as `+1` iff `a ≡ 1 (mod 16)`.
pub fn fpr(a: i64, place: Place) -> Result<i32> {
    match place {
        Place::Odd(l) => {
            if jacobi_i64(a, l)? != 1 {
                return Err(SymbolError::PreconditionViolated(format!(
                    "{a} is not a nonzero square modulo {l}"
                )));
            }
            if l % 4 == 3 {
                // squaring permutes the squares
                return Ok(1);
            }
            let r = pow_mod(reduce_i128(a as i128, l), (l - 1) / 4, l);
            Ok(if r == 1 { 1 } else { -1 })
        }
        Place::Two => match a.rem_euclid(16) {
            1 => Ok(1),
            9 => Ok(-1),
            _ => Err(SymbolError::PreconditionViolated(format!("{a} is not 1 modulo 8"))),
        },
        Place::Infinity => Err(SymbolError::PreconditionViolated(
            "no fourth-power symbol at the infinite place".into(),
        )),
    }
}

/// `[a/n] = ∏_{ℓ | n} [a/ℓ]` for squarefree `n >= 1`.
pub fn fpr_composite(a: i64, n: u64) -> Result<i32> {
    let mut s = 1;
    for (l, e) in factorize_u64(n)? {
        if e > 1 {
            return Err(SymbolError::PreconditionViolated(format!("{n} is not squarefree")));
        }
        s *= fpr(a, Place::prime(l)?)?;
    }
    Ok(s)
}

fn split_valuation(mut a: i64, l: i64) -> (u32, i64) {
    let mut v = 0;
    while a % l == 0 {
        a /= l;
        v += 1;
    }
    (v, a)
}

/// The Hilbert symbol `(a, b)_r` over Q.
pub fn hilbert(a: i64, b: i64, place: Place) -> Result<i32> {
    if a == 0 || b == 0 {
        return Err(SymbolError::ZeroEntry);
    }
    match place {
        Place::Infinity => Ok(if a < 0 && b < 0 { -1 } else { 1 }),
        Place::Odd(l) => {
            let (alpha, u) = split_valuation(a, l as i64);
            let (beta, v) = split_valuation(b, l as i64);
            let mut s = 1;
            if (alpha * beta) % 2 == 1 && l % 4 == 3 {
                s = -s;
            }
            if beta % 2 == 1 {
                s *= jacobi_i64(u, l)?;
            }
            if alpha % 2 == 1 {
                s *= jacobi_i64(v, l)?;
            }
            Ok(s)
        }
        Place::Two => {
            let (alpha, u) = split_valuation(a, 2);
            let (beta, v) = split_valuation(b, 2);
            let eps = |x: i64| (x.rem_euclid(4) == 3) as u32;
            let omega = |x: i64| matches!(x.rem_euclid(8), 3 | 5) as u32;
            let e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u);
            Ok(if e % 2 == 0 { 1 } else { -1 })
        }
    }
}

/// Places where `(a, b)_r` can be nontrivial: `∞`, `2` and the odd primes dividing `ab`.
pub fn hilbert_support(a: i64, b: i64) -> Result<Vec<Place>> {
    let mut places = vec![Place::Infinity, Place::Two];
    let mut odd: Vec<u64> = Vec::new();
    for n in [a, b] {
        for (l, _) in factorize_u64(n.unsigned_abs())? {
            if l != 2 && !odd.contains(&l) {
                odd.push(l);
            }
        }
    }
    odd.sort_unstable();
    places.extend(odd.into_iter().map(Place::Odd));
    Ok(places)
}

/// `∏_r (a, b)_r` over every place; equals `1` by Hilbert reciprocity.
pub fn hilbert_product(a: i64, b: i64) -> Result<i32> {
    hilbert_support(a, b)?
        .into_iter()
        .try_fold(1, |acc, r| Ok(acc * hilbert(a, b, r)?))
}

fn odd_prime_factors(n: u64) -> Result<Vec<u64>> {
    Ok(factorize_u64(n)?
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&p| p != 2)
        .collect())
}

fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

/// `δ(a, b)` with the canonical primary primes.
pub fn delta(a: u64, b: u64) -> Result<i32> {
    delta_with(a, b, Labeling::Canonical)
}

/// `δ(a, b) = ∏_{ρ|a} (b/ρ)_4 · ∏_{ρ|b} (a/ρ)_4` over primary `ρ`, with the
/// correction `(-1)^((1-b)/8) ∏_{ρ|b} (2/ρ)_4` when `a = 2a₀` is even.
///
/// The accumulated quartic value must be real; a non-real product is an error.
pub fn delta_with(a: u64, b: u64, labeling: Labeling) -> Result<i32> {
    let even = check_delta_args(a, b)?;
    if even && b % 8 != 1 {
        return Err(SymbolError::PreconditionViolated(format!(
            "δ({a}, {b}): b must be 1 mod 8 when a is even"
        )));
    }
    let mut value = delta_core(a, b, labeling)?;
    if even {
        value = value * QuarticValue::from_exponent(2 * ((1 - b as i64) / 8));
    }
    value.to_sign().ok_or(SymbolError::NotReal(value))
}

/// The sign `G` with `[d/p]·[bp/a]·[ap/b] = G · ∏_{ρ|d} (ρ/π)_2` for the
/// primary `π` above `p`. For odd `a`, or even `a` with `b ≡ 1 (mod 8)`, this
/// is `δ(a, b)`; for even `a` and `b ≡ p ≡ 5 (mod 8)` the factor
/// `(-1)^((1-b)/8)` is replaced by `(-i/π)_4 · [bp/2]`. Under the conjugate
/// labeling the prime above 2 is `1-i` and `-i` becomes `i`.
pub fn governing_delta(a: u64, b: u64, p: u64, labeling: Labeling) -> Result<i32> {
    if a % 2 == 1 || b % 8 == 1 {
        return delta_with(a, b, labeling);
    }
    check_delta_args(a, b)?;
    let pi = split_primary_with(p, labeling)?;
    let bp = (b as i64)
        .checked_mul(p as i64)
        .ok_or(SymbolError::PreconditionViolated("bp overflows".into()))?;
    // 2 = -i(1+i)², or i(1-i)² after conjugation
    let unit = match labeling {
        Labeling::Canonical => GaussInt::new(0, -1),
        Labeling::Conjugate => GaussInt::new(0, 1),
    };
    let value = delta_core(a, b, labeling)?
        * quartic_symbol(unit, pi)?
        * QuarticValue::from_sign(fpr(bp, Place::Two)?);
    value.to_sign().ok_or(SymbolError::NotReal(value))
}

/// Validates the arguments of `δ` and reports whether `a` is even.
fn check_delta_args(a: u64, b: u64) -> Result<bool> {
    if a == 0 || b == 0 || gcd(a, b) != 1 {
        return Err(SymbolError::PreconditionViolated(format!(
            "δ({a}, {b}) needs coprime positive arguments"
        )));
    }
    if b.is_multiple_of(2) {
        return Err(SymbolError::PreconditionViolated(format!(
            "δ({a}, {b}): the even entry must come first"
        )));
    }
    let fac = factorize_u64(a.checked_mul(b).ok_or(SymbolError::PreconditionViolated(
        "ab overflows".into(),
    ))?)?;
    if fac.iter().any(|&(p, e)| e > 1 || p % 4 == 3) {
        return Err(SymbolError::PreconditionViolated(format!(
            "δ({a}, {b}): ab must be squarefree with no prime factor 3 mod 4"
        )));
    }
    Ok(a.is_multiple_of(2))
}

/// `δ(a₀, b)`, times `∏_{ρ|b} (2/ρ)_4` when `a = 2a₀`.
fn delta_core(a: u64, b: u64, labeling: Labeling) -> Result<QuarticValue> {
    let even = a.is_multiple_of(2);
    let a0 = if even { a / 2 } else { a };
    let rho = |q: u64| split_primary_with(q, labeling);
    let mut value = QuarticValue::ONE;
    for q in odd_prime_factors(a0)? {
        value = value * quartic_symbol(GaussInt::from(b as i64), rho(q)?)?;
    }
    for q in odd_prime_factors(b)? {
        value = value * quartic_symbol(GaussInt::from(a0 as i64), rho(q)?)?;
        if even {
            value = value * quartic_symbol(GaussInt::from(2), rho(q)?)?;
        }
    }
    Ok(value)
}
