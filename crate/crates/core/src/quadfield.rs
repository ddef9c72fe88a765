//! Arithmetic in `Q(√p)` for a prime `p ≡ 1 (mod 4)`: the norm `-1` unit,
//! splitting of rational primes and quadratic residue symbols at primes of
//! the ring of integers.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{is_prime_u64, jacobi, jacobi_i64, sqrt_mod_u64, ArithError, Zint};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("x^2 - {0} y^2 = -1 has no solution")]
    NoNegativeNormUnit(u64),
    #[error("continued fraction of sqrt({p}) did not close within {cap} steps")]
    IterationCap { p: u64, cap: usize },
    #[error("{0}")]
    Domain(String),
    #[error("{alpha} has odd valuation {valuation} at a prime above {q}")]
    NotCoprime { alpha: String, q: u64, valuation: u32 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

pub type Result<T> = std::result::Result<T, QuadError>;

/// `u + v√p` with `u² - p v² = -1` and `v - u ≡ 1 (mod 4)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PellUnit {
    pub p: u64,
    pub u: Zint,
    pub v: Zint,
}

impl PellUnit {
    pub fn norm(&self) -> Zint {
        &self.u * &self.u - BigInt::from(self.p) * &self.v * &self.v
    }

    pub fn as_element(&self) -> KpElement {
        KpElement::new(self.u.clone(), self.v.clone(), self.p)
    }
}

/// `x + y√p`, or `(x + y√p)/2` when `halved` is set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KpElement {
    pub x: Zint,
    pub y: Zint,
    pub p: u64,
    pub halved: bool,
}

impl KpElement {
    pub fn new(x: impl Into<Zint>, y: impl Into<Zint>, p: u64) -> Self {
        KpElement { x: x.into(), y: y.into(), p, halved: false }
    }

    pub fn half(x: impl Into<Zint>, y: impl Into<Zint>, p: u64) -> Self {
        KpElement { x: x.into(), y: y.into(), p, halved: true }
    }

    pub fn rational(n: impl Into<Zint>, p: u64) -> Self {
        Self::new(n, 0, p)
    }

    pub fn conj(&self) -> Self {
        KpElement { x: self.x.clone(), y: -&self.y, p: self.p, halved: self.halved }
    }

    /// `x² - p y²`, before any halving.
    pub fn norm_numerator(&self) -> Zint {
        &self.x * &self.x - BigInt::from(self.p) * &self.y * &self.y
    }

    /// The field norm. Exact because halved elements are integral.
    pub fn norm(&self) -> Zint {
        let n = self.norm_numerator();
        if self.halved {
            n / 4
        } else {
            n
        }
    }

    pub fn is_integral(&self) -> bool {
        !self.halved || (self.x.is_odd() == self.y.is_odd() && self.p % 4 == 1)
    }
}

impl fmt::Display for KpElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.y.is_negative() { '-' } else { '+' };
        if self.halved {
            write!(f, "({} {} {}√{})/2", self.x, sign, self.y.abs(), self.p)
        } else {
            write!(f, "{} {} {}√{}", self.x, sign, self.y.abs(), self.p)
        }
    }
}

/// Continued-fraction steps allowed for `√p`; the period is `O(√p log p)`.
fn cf_cap(p: u64) -> usize {
    let s = (p as f64).sqrt();
    (2.0 * s * (s.ln() + 2.0)) as usize + 64
}

/// Fundamental solution of `u² - p v² = -1`, signed so that `v - u ≡ 1 (mod 4)`.
pub fn pell_negative_unit(p: u64) -> Result<PellUnit> {
    if p % 4 != 1 {
        return Err(QuadError::NoNegativeNormUnit(p));
    }
    let a0 = p.isqrt();
    if a0 * a0 == p {
        return Err(QuadError::Domain(format!("{p} is a square")));
    }
    let pb = BigInt::from(p);
    // h/k convergents; (m, q, a) the usual periodic recurrence
    let (mut h_prev, mut h) = (BigInt::one(), BigInt::from(a0));
    let (mut k_prev, mut k) = (BigInt::zero(), BigInt::one());
    let (mut m, mut q, mut a) = (0u64, 1u64, a0);
    let cap = cf_cap(p);
    for _ in 0..cap {
        let n = &h * &h - &pb * &k * &k;
        if n == BigInt::from(-1) {
            let mut v = k;
            if (&v - &h).mod_floor(&BigInt::from(4)) != BigInt::one() {
                v = -v;
            }
            return Ok(PellUnit { p, u: h, v });
        }
        if n.is_one() {
            return Err(QuadError::NoNegativeNormUnit(p));
        }
        m = q * a - m;
        q = (p - m * m) / q;
        a = (a0 + m) / q;
        let ab = BigInt::from(a);
        let h_next = &ab * &h + &h_prev;
        let k_next = &ab * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
    }
    Err(QuadError::IterationCap { p, cap })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Splitting {
    Split,
    Inert,
    Ramified,
}

/// How the rational prime `q` decomposes in `Q(√p)`.
pub fn splitting(q: u64, p: u64) -> Result<Splitting> {
    if q == p {
        return Err(QuadError::Domain(format!("{q} ramifies in Q(√{p}) by definition")));
    }
    if !is_prime_u64(q) || !is_prime_u64(p) {
        return Err(QuadError::Domain(format!("splitting({q}, {p}) needs primes")));
    }
    if q == 2 {
        return Ok(match p % 8 {
            _ if p % 4 == 3 => Splitting::Ramified,
            1 => Splitting::Split,
            _ => Splitting::Inert,
        });
    }
    Ok(if jacobi_i64(p as i64, q)? == 1 { Splitting::Split } else { Splitting::Inert })
}

/// Which of the two primes over a split `q` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    /// `x + y√p ↦ x + y s` with `s` the smaller square root of `p` mod `q`.
    First,
    Conjugate,
}

fn valuation(n: &Zint, q: &Zint) -> u32 {
    if n.is_zero() {
        return u32::MAX;
    }
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (d, r) = n.div_rem(q);
        if !r.is_zero() {
            return v;
        }
        n = d;
        v += 1;
    }
}

/// Lifts a root of `s² ≡ p (mod q)` to one modulo `q^e`.
fn hensel_lift(s: u64, p: u64, q: u64, e: u32) -> (Zint, Zint) {
    let qb = BigInt::from(q);
    let pb = BigInt::from(p);
    let mut modulus = qb.clone();
    let mut root = BigInt::from(s);
    let mut k = 1;
    while k < e {
        k = (2 * k).min(e);
        modulus = qb.pow(k);
        let f = (&root * &root - &pb).mod_floor(&modulus);
        let inv = (BigInt::from(2) * &root)
            .modinv(&modulus)
            .expect("q odd and q does not divide p");
        root = (&root - f * inv).mod_floor(&modulus);
    }
    (root, modulus)
}

/// `(α / 𝔮)` at the prime `𝔮 = (q, √p - s)` for an explicit root `s² ≡ p (mod q)`.
///
/// An even `𝔮`-valuation of `α` is removed first; odd valuations are errors.
pub fn residue_symbol_at_root(alpha: &KpElement, q: u64, s: u64) -> Result<i32> {
    let qb = BigInt::from(q);
    let nn = alpha.norm_numerator();
    let e = valuation(&nn, &qb) + 1;
    let (root, modulus) = hensel_lift(s, alpha.p, q, e);
    let w = (&alpha.x + &alpha.y * root).mod_floor(&modulus);
    let k = valuation(&w, &qb);
    debug_assert!(k < e);
    if k % 2 == 1 {
        return Err(QuadError::NotCoprime { alpha: alpha.to_string(), q, valuation: k });
    }
    let unit = (w / qb.pow(k)).mod_floor(&qb);
    let mut sym = jacobi(&unit, &qb)?;
    if alpha.halved {
        sym *= jacobi_i64(2, q)?;
    }
    Ok(sym)
}

/// The root of `p` modulo `q` defining the prime above `q` that contains `α`.
pub fn root_for_element(alpha: &KpElement, q: u64) -> Result<u64> {
    let qb = BigInt::from(q);
    let y = alpha.y.mod_floor(&qb);
    let inv = y.modinv(&qb).ok_or_else(|| QuadError::Domain(format!("{q} divides y of {alpha}")))?;
    let s = (-&alpha.x * inv).mod_floor(&qb).to_u64().unwrap();
    if (s as u128 * s as u128 % q as u128) as u64 != alpha.p % q {
        return Err(QuadError::Domain(format!("{alpha} lies in no prime above {q}")));
    }
    Ok(s)
}

/// Quadratic residue symbol of `α` at a prime of `Q(√p)` above the odd prime `q`.
pub fn residue_symbol(alpha: &KpElement, q: u64, which: Which) -> Result<i32> {
    if q.is_multiple_of(2) {
        return Err(QuadError::Domain("residue symbols need odd q".into()));
    }
    match splitting(q, alpha.p)? {
        Splitting::Split => {
            let s = sqrt_mod_u64(alpha.p % q, q)?;
            let s = match which {
                Which::First => s,
                Which::Conjugate => q - s,
            };
            residue_symbol_at_root(alpha, q, s)
        }
        Splitting::Inert => {
            // N(α)^((q-1)/2) ≡ α^((q²-1)/2) in F_{q²}
            let qb = BigInt::from(q);
            let k = valuation(&alpha.x, &qb).min(valuation(&alpha.y, &qb));
            if k % 2 == 1 {
                return Err(QuadError::NotCoprime { alpha: alpha.to_string(), q, valuation: k });
            }
            let scale = qb.pow(k);
            let n = (&alpha.x / &scale).pow(2) - BigInt::from(alpha.p) * (&alpha.y / &scale).pow(2);
            let sym = jacobi(&n, &qb)?;
            debug_assert!(sym != 0);
            Ok(sym)
        }
        Splitting::Ramified => Err(QuadError::Domain(format!("{q} ramifies"))),
    }
}
