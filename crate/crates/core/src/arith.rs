//! Exact integer primitives: primality, sieving, factorization, modular
//! arithmetic and rational residue symbols.
//!
//! Hot paths (prime scans, symbol evaluation) work on `u64` with `u128`
//! intermediates. Quantities that can outgrow a machine word (Pell
//! coordinates, ternary solutions) use [`Zint`].

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arbitrary-precision signed integer.
pub type Zint = BigInt;

/// Trial division bound used by [`factorize_u64`] before switching to Pollard rho.
pub const TRIAL_DIVISION_BOUND: u64 = 1_000_000;

/// Iteration budget for a single Pollard-rho attempt.
pub const RHO_ITERATIONS: u64 = 1 << 20;

/// Default Miller-Rabin rounds for inputs at or above 2^64.
pub const DEFAULT_MR_ROUNDS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("modulus {0} must be odd and positive")]
    InvalidModulus(String),
    #[error("{a} is not a square modulo {p}")]
    NoSquareRoot { a: String, p: String },
    #[error("{0} is not squarefree")]
    NotSquarefree(String),
    #[error("could not split composite factor {0} within the configured effort")]
    CompositeResidualFactor(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, ArithError>;

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Reduces a signed value into `[0, m)`.
#[inline]
pub fn reduce_i128(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    (r0 == 1).then(|| s0.rem_euclid(m as i128) as u64)
}

fn jacobi_core(mut a: u64, mut n: u64) -> i32 {
    let mut sign = 1;
    a %= n;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz & 1 == 1 && (n & 7 == 3 || n & 7 == 5) {
            sign = -sign;
        }
        if a & 3 == 3 && n & 3 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Jacobi symbol `(a/n)` for odd `n >= 1`.
pub fn jacobi_i64(a: i64, n: u64) -> Result<i32> {
    if n == 0 || n & 1 == 0 {
        return Err(ArithError::InvalidModulus(n.to_string()));
    }
    Ok(jacobi_core(reduce_i128(a as i128, n), n))
}

/// Jacobi symbol for arbitrary-precision inputs.
pub fn jacobi(a: &Zint, n: &Zint) -> Result<i32> {
    if !n.is_positive() || n.is_even() {
        return Err(ArithError::InvalidModulus(n.to_string()));
    }
    if let (Some(a), Some(n)) = (a.mod_floor(n).to_u64(), n.to_u64()) {
        return Ok(jacobi_core(a, n));
    }
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut sign = 1;
    let three = BigInt::from(3u8);
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        a >>= tz;
        let n8 = (&n % 8u8).to_u8().unwrap();
        if tz & 1 == 1 && (n8 == 3 || n8 == 5) {
            sign = -sign;
        }
        if (&a % 4u8) == three && (&n % 4u8) == three {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a = a.mod_floor(&n);
    }
    Ok(if n.is_one() { sign } else { 0 })
}

/// Kronecker symbol `(a/n)` for `n >= 1`; `(a/2)` is `0` for even `a`,
/// `+1` for `a = ±1 (mod 8)` and `-1` for `a = ±3 (mod 8)`.
pub fn kronecker(a: i64, n: u64) -> i32 {
    assert!(n >= 1, "kronecker modulus must be positive");
    let tz = n.trailing_zeros();
    let odd = n >> tz;
    let mut sign = 1;
    if tz > 0 {
        if a & 1 == 0 {
            return 0;
        }
        if tz & 1 == 1 {
            let r = a.rem_euclid(8);
            if r == 3 || r == 5 {
                sign = -1;
            }
        }
    }
    sign * jacobi_core(reduce_i128(a as i128, odd), odd)
}

/// Square root of `a` modulo an odd prime `p`; returns the smaller of the two
/// roots (`0` when `p | a`).
pub fn sqrt_mod_u64(a: u64, p: u64) -> Result<u64> {
    if p < 3 || p & 1 == 0 {
        return Err(ArithError::InvalidModulus(p.to_string()));
    }
    let a = a % p;
    if a == 0 {
        return Ok(0);
    }
    if jacobi_core(a, p) != 1 {
        return Err(ArithError::NoSquareRoot {
            a: a.to_string(),
            p: p.to_string(),
        });
    }
    let root = if p & 3 == 3 {
        pow_mod(a, (p + 1) / 4, p)
    } else {
        // Tonelli-Shanks with the least quadratic non-residue.
        let s = (p - 1).trailing_zeros();
        let q = (p - 1) >> s;
        let mut z = 2;
        while jacobi_core(z, p) != -1 {
            z += 1;
        }
        let mut m = s;
        let mut c = pow_mod(z, q, p);
        let mut t = pow_mod(a, q, p);
        let mut r = pow_mod(a, q.div_ceil(2), p);
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = mul_mod(t2, t2, p);
                i += 1;
            }
            let b = pow_mod(c, 1 << (m - i - 1), p);
            m = i;
            c = mul_mod(b, b, p);
            t = mul_mod(t, c, p);
            r = mul_mod(r, b, p);
        }
        r
    };
    Ok(root.min(p - root))
}

/// Arbitrary-precision [`sqrt_mod_u64`].
pub fn sqrt_mod(a: &Zint, p: &Zint) -> Result<Zint> {
    if let Some(pu) = p.to_u64() {
        let au = a.mod_floor(p).to_u64().unwrap();
        return sqrt_mod_u64(au, pu).map(BigInt::from);
    }
    if p.is_even() || !p.is_positive() {
        return Err(ArithError::InvalidModulus(p.to_string()));
    }
    let a = a.mod_floor(p);
    if a.is_zero() {
        return Ok(a);
    }
    if jacobi(&a, p)? != 1 {
        return Err(ArithError::NoSquareRoot {
            a: a.to_string(),
            p: p.to_string(),
        });
    }
    let pm1: BigInt = p - 1u8;
    let s = pm1.trailing_zeros().unwrap();
    let q = &pm1 >> s;
    let mut z = BigInt::from(2u8);
    while jacobi(&z, p)? != -1 {
        z += 1u8;
    }
    let mut m = s;
    let mut c = z.modpow(&q, p);
    let mut t = a.modpow(&q, p);
    let mut r = a.modpow(&((&q + 1u8) >> 1), p);
    while !t.is_one() {
        let mut i = 0;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = (&t2 * &t2) % p;
            i += 1;
        }
        let b = c.modpow(&(BigInt::one() << (m - i - 1)), p);
        m = i;
        c = (&b * &b) % p;
        t = (&t * &c) % p;
        r = (&r * &b) % p;
    }
    let other = p - &r;
    Ok(r.min(other))
}

const MR_BASES_U64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES_U64 {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES_U64 {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primality for arbitrary-precision integers: deterministic below 2^64,
/// Miller-Rabin with `rounds` fixed prime bases above.
pub fn is_probable_prime(n: &Zint, rounds: usize) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if n.is_negative() || n.is_even() {
        return false;
    }
    let nm1: BigInt = n - 1u8;
    let s = nm1.trailing_zeros().unwrap();
    let d = &nm1 >> s;
    'witness: for a in small_primes().iter().take(rounds.max(1)) {
        let mut x = BigInt::from(*a).modpow(&d, n);
        if x.is_one() || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes up to `n` by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::with_capacity(n / 10 + 8);
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i.saturating_mul(i);
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes below [`TRIAL_DIVISION_BOUND`], computed once.
pub fn small_primes() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| primes_up_to(TRIAL_DIVISION_BOUND))
}

fn isqrt_u64(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

const SEGMENT_LEN: u64 = 1 << 16;

/// Ascending stream of the primes in `[lo, hi]`, produced by a segmented sieve.
#[derive(Debug, Clone)]
pub struct PrimeRange {
    base: Vec<u64>,
    next_lo: u64,
    hi: u64,
    buffer: Vec<u64>,
    pos: usize,
}

impl PrimeRange {
    fn fill(&mut self) -> bool {
        while self.next_lo <= self.hi {
            let lo = self.next_lo;
            let hi = lo.saturating_add(SEGMENT_LEN - 1).min(self.hi);
            self.next_lo = hi + 1;
            let len = (hi - lo + 1) as usize;
            let mut composite = vec![false; len];
            for &p in &self.base {
                if p.saturating_mul(p) > hi {
                    break;
                }
                let mut start = (lo.div_ceil(p) * p).max(p * p);
                while start <= hi {
                    composite[(start - lo) as usize] = true;
                    start += p;
                }
            }
            self.buffer.clear();
            self.pos = 0;
            for (i, c) in composite.iter().enumerate() {
                let n = lo + i as u64;
                if !c && n >= 2 {
                    self.buffer.push(n);
                }
            }
            if !self.buffer.is_empty() {
                return true;
            }
        }
        false
    }
}

impl Iterator for PrimeRange {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.pos >= self.buffer.len() && !self.fill() {
            return None;
        }
        let p = self.buffer[self.pos];
        self.pos += 1;
        Some(p)
    }
}

/// Every prime in `[lo, hi]`, ascending. `hi` must stay below `u64::MAX`.
pub fn primes_in_range(lo: u64, hi: u64) -> PrimeRange {
    let lo = lo.max(2);
    PrimeRange {
        base: primes_up_to(isqrt_u64(hi)),
        next_lo: lo,
        hi,
        buffer: Vec::new(),
        pos: 0,
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Brent's variant of Pollard rho; `None` when the budget runs out.
fn pollard_rho(n: u64) -> Option<u64> {
    if n.is_multiple_of(2) {
        return Some(2);
    }
    for c in 1..=16u64 {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut q) = (2u64, 2u64, 1u64);
        let mut g = 1;
        let mut r = 1u64;
        let mut steps = 0u64;
        let mut ys = y;
        while g == 1 && steps < RHO_ITERATIONS {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(r - k).min(128) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd_u64(q, n);
                k += 128;
            }
            steps += r;
            r <<= 1;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd_u64(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g > 1 && g < n {
            return Some(g);
        }
    }
    None
}

fn split_rest(n: u64, out: &mut Vec<u64>) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    if is_prime_u64(n) {
        out.push(n);
        return Ok(());
    }
    let f = pollard_rho(n).ok_or_else(|| ArithError::CompositeResidualFactor(n.to_string()))?;
    split_rest(f, out)?;
    split_rest(n / f, out)
}

/// Full factorization `n = ∏ pᵢ^eᵢ`, primes ascending.
pub fn factorize_u64(mut n: u64) -> Result<Vec<(u64, u32)>> {
    if n == 0 {
        return Err(ArithError::Domain("cannot factor 0".into()));
    }
    let mut out: Vec<(u64, u32)> = Vec::new();
    for &p in small_primes() {
        if p.saturating_mul(p) > n {
            break;
        }
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        let mut rest = Vec::new();
        split_rest(n, &mut rest)?;
        rest.sort_unstable();
        for p in rest {
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
        out.sort_unstable();
    }
    Ok(out)
}

/// Positive squarefree integer with its prime factors `q_1 < … < q_t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SquarefreeD {
    pub d: u64,
    pub factors: Vec<u64>,
}

impl SquarefreeD {
    pub fn new(d: u64) -> Result<Self> {
        if d < 2 {
            return Err(ArithError::Domain(format!("d = {d} must be at least 2")));
        }
        let fac = factorize_u64(d)?;
        if fac.iter().any(|&(_, e)| e > 1) {
            return Err(ArithError::NotSquarefree(d.to_string()));
        }
        Ok(Self {
            d,
            factors: fac.into_iter().map(|(p, _)| p).collect(),
        })
    }

    pub fn t(&self) -> usize {
        self.factors.len()
    }

    /// No prime factor is `3 (mod 4)`.
    pub fn admissible(&self) -> bool {
        self.factors.iter().all(|&q| q % 4 != 3)
    }

    pub fn is_even(&self) -> bool {
        self.d.is_multiple_of(2)
    }
}

/// Factors a squarefree `d >= 2`.
pub fn factor_squarefree(d: &Zint) -> Result<SquarefreeD> {
    let d = d
        .to_u64()
        .ok_or_else(|| ArithError::Domain(format!("{d} is outside the supported range")))?;
    SquarefreeD::new(d)
}

/// Removes square factors: returns `(core, s)` with `n = core * s^2` and `core` squarefree.
pub fn squarefree_part(n: i64) -> Result<(i64, u64)> {
    if n == 0 {
        return Err(ArithError::Domain("squarefree part of 0".into()));
    }
    let mut core = 1i64;
    let mut s = 1u64;
    for (p, e) in factorize_u64(n.unsigned_abs())? {
        if e & 1 == 1 {
            core *= p as i64;
        }
        s *= p.pow(e / 2);
    }
    Ok((core * n.signum(), s))
}

/// Exact integer square root of a non-negative big integer, if it is a perfect square.
pub fn exact_sqrt(n: &Zint) -> Option<Zint> {
    if n.sign() == Sign::Minus {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}
