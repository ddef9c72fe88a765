//! Explicit solutions of the ternary quadratic equations behind the
//! unramified extensions: the elements `α_i`, the decomposition `d = a·b` and
//! the normalized solution of `p x² - a y² - b z² = 0`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{
    factorize_u64, is_prime_u64, jacobi_i64, sqrt_mod_u64, squarefree_part, ArithError,
    SquarefreeD, Zint,
};
use crate::quadfield::{splitting, KpElement, PellUnit, QuadError, Splitting};
use crate::redei::{build_b0, OrderedFactors, RedeiError};
use crate::symbols::{hilbert, hilbert_support, Place, SymbolError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("no rational solution: obstruction at {place}")]
    LocalObstruction { place: Place },
    #[error("no solution found up to height {height}")]
    HeightExceeded { height: u64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no decomposition of {d} validates for p = {p}")]
    NoDecomposition { d: u64, p: u64 },
    #[error("normalization failed: {0}")]
    NormalizationFailed(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Redei(#[from] RedeiError),
}

pub type Result<T> = std::result::Result<T, ConstructionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TernaryMode {
    /// `c1 x² + c2 y² + c3 z² = 0`
    General,
    /// `x² - p y² - q z² = 0`
    Alpha,
    /// `p x² - a y² - b z² = 0`
    Beta,
}

/// A solution of `c1 x² + c2 y² + c3 z² = 0`; the mode records which
/// specialised equation the coefficients came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TernarySolution {
    pub x: Zint,
    pub y: Zint,
    pub z: Zint,
    pub coeffs: [i64; 3],
    pub mode: TernaryMode,
    pub normalized: bool,
}

impl TernarySolution {
    pub fn residual(&self) -> Zint {
        let [c1, c2, c3] = self.coeffs;
        BigInt::from(c1) * &self.x * &self.x
            + BigInt::from(c2) * &self.y * &self.y
            + BigInt::from(c3) * &self.z * &self.z
    }

    pub fn is_primitive(&self) -> bool {
        self.x.gcd(&self.y).gcd(&self.z).is_one()
    }

    fn remove_gcd(&mut self) {
        let g = self.x.gcd(&self.y).gcd(&self.z);
        if !g.is_zero() && !g.is_one() {
            self.x /= &g;
            self.y /= &g;
            self.z /= &g;
        }
    }
}

impl fmt::Display for TernarySolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegendreConfig {
    /// Bound on `|x|` and `|z|` in the initial search.
    pub height: u64,
    /// Fall back to descent when the search finds nothing.
    pub descent: bool,
}

impl Default for LegendreConfig {
    fn default() -> Self {
        LegendreConfig { height: 100, descent: true }
    }
}

/// First place (odd primes ascending, then 2, then ∞) where
/// `c1 x² + c2 y² + c3 z² = 0` has no nontrivial local solution.
pub fn local_obstruction(c1: i64, c2: i64, c3: i64) -> Result<Option<Place>> {
    if c1 == 0 || c2 == 0 || c3 == 0 {
        return Err(ConstructionError::Precondition("zero coefficient".into()));
    }
    let a = checked(-(c1 as i128) * c3 as i128)?;
    let b = checked(-(c2 as i128) * c3 as i128)?;
    let mut places = hilbert_support(a, b)?;
    places.sort_by_key(|pl| match *pl {
        Place::Odd(l) => (0, l),
        Place::Two => (1, 0),
        Place::Infinity => (2, 0),
    });
    for pl in places {
        if hilbert(a, b, pl)? == -1 {
            return Ok(Some(pl));
        }
    }
    Ok(None)
}

fn checked(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| ConstructionError::Precondition("coefficient overflow".into()))
}

pub fn solve_legendre(c1: i64, c2: i64, c3: i64) -> Result<TernarySolution> {
    solve_legendre_with(c1, c2, c3, &LegendreConfig::default())
}

/// A primitive nonnegative solution of `c1 x² + c2 y² + c3 z² = 0`. The search
/// visits `x`, then `z`, and solves for `y`; if that fails and descent is
/// enabled the equation is reduced to `Z² = A X² + B Y²` and solved by
/// Legendre descent.
pub fn solve_legendre_with(
    c1: i64,
    c2: i64,
    c3: i64,
    cfg: &LegendreConfig,
) -> Result<TernarySolution> {
    if let Some(place) = local_obstruction(c1, c2, c3)? {
        return Err(ConstructionError::LocalObstruction { place });
    }
    let (x, y, z) = match search(c1, c2, c3, cfg.height) {
        Some(s) => s,
        None if cfg.descent => descend_general(c1, c2, c3)?,
        None => return Err(ConstructionError::HeightExceeded { height: cfg.height }),
    };
    let mut sol = TernarySolution {
        x,
        y,
        z,
        coeffs: [c1, c2, c3],
        mode: TernaryMode::General,
        normalized: false,
    };
    sol.remove_gcd();
    debug_assert!(sol.residual().is_zero());
    Ok(sol)
}

fn search(c1: i64, c2: i64, c3: i64, height: u64) -> Option<(Zint, Zint, Zint)> {
    let (c1, c2, c3) = (c1 as i128, c2 as i128, c3 as i128);
    let h = height as i128;
    for x in 0..=h {
        for z in 0..=h {
            if x == 0 && z == 0 {
                continue;
            }
            let rest = -(c1 * x * x + c3 * z * z);
            if rest % c2 != 0 {
                continue;
            }
            let y2 = rest / c2;
            if y2 < 0 {
                continue;
            }
            let y = (y2 as u128).isqrt() as i128;
            if y * y == y2 && x.gcd(&y).gcd(&z) == 1 {
                return Some((x.into(), y.into(), z.into()));
            }
        }
    }
    None
}

fn descend_general(c1: i64, c2: i64, c3: i64) -> Result<(Zint, Zint, Zint)> {
    // (c3 z)² = A x² + B y²
    let a = checked(-(c1 as i128) * c3 as i128)?;
    let b = checked(-(c2 as i128) * c3 as i128)?;
    let (ca, fa) = squarefree_part(a)?;
    let (cb, fb) = squarefree_part(b)?;
    let (xx, yy, zz) = descent(ca, cb)?;
    let x = BigInt::from(c3) * xx * fb;
    let y = BigInt::from(c3) * yy * fa;
    let z = BigInt::from(fa) * BigInt::from(fb) * zz;
    let g = x.gcd(&y).gcd(&z);
    Ok(((x / &g).abs(), (y / &g).abs(), (z / &g).abs()))
}

/// A nontrivial solution of `z² = a x² + b y²` for squarefree `a`, `b` that
/// are locally solvable everywhere.
fn descent(a: i64, b: i64) -> Result<(Zint, Zint, Zint)> {
    if a == 1 {
        return Ok((Zint::one(), Zint::zero(), Zint::one()));
    }
    if b == 1 {
        return Ok((Zint::zero(), Zint::one(), Zint::one()));
    }
    if a.abs() < b.abs() {
        let (x, y, z) = descent(b, a)?;
        return Ok((y, x, z));
    }
    if a.abs() == 1 {
        return Err(ConstructionError::LocalObstruction { place: Place::Infinity });
    }
    let t = sqrt_mod_composite(b, a.unsigned_abs())?;
    let k = (t * t - b as i128) / a as i128;
    let (kc, s) = squarefree_part(k as i64)?;
    let (xx, yy, zz) = descent(b, kc)?;
    let (t, b) = (BigInt::from(t), BigInt::from(b));
    let z = &zz * &t + &b * &xx;
    let y = &zz + &xx * &t;
    let x = BigInt::from(kc) * BigInt::from(s) * yy;
    let g = x.gcd(&y).gcd(&z);
    Ok((x / &g, y / &g, z / &g))
}

/// `t` with `t² ≡ b (mod n)` and `|t| <= n/2`, for squarefree `n`.
fn sqrt_mod_composite(b: i64, n: u64) -> Result<i128> {
    let (mut t, mut m) = (0i128, 1i128);
    for (r, _) in factorize_u64(n)? {
        let br = (b as i128).rem_euclid(r as i128) as u64;
        let tr = if r == 2 { br } else { sqrt_mod_u64(br, r)? } as i128;
        // t + m·k ≡ tr (mod r)
        let r = r as i128;
        let inv = modinv(m.rem_euclid(r), r);
        let k = ((tr - t).rem_euclid(r) * inv).rem_euclid(r);
        t += m * k;
        m *= r;
    }
    if t > m / 2 {
        t -= m;
    }
    Ok(t)
}

fn modinv(a: i128, m: i128) -> i128 {
    let e = a.extended_gcd(&m);
    e.x.rem_euclid(m)
}

/// A solution of `x² - p y² - q z² = 0` normalized so that `x², py², qz²`
/// are pairwise coprime, `y, z >= 0`, `x` is odd, and `x - y ≡ 1 (mod 4)`
/// when `y` is even or `x - z ≡ 1 (mod 4)` when `z` is even; together with
/// `α = x + y√p`, halved when `z` is even.
pub fn alpha_solution(p: u64, q: u64) -> Result<(TernarySolution, KpElement)> {
    alpha_solution_with(p, q, &LegendreConfig::default())
}

pub fn alpha_solution_with(
    p: u64,
    q: u64,
    cfg: &LegendreConfig,
) -> Result<(TernarySolution, KpElement)> {
    if !is_prime_u64(p) || !is_prime_u64(q) || p == q {
        return Err(ConstructionError::Precondition(format!("need distinct primes, got {p}, {q}")));
    }
    if splitting(q, p)? != Splitting::Split {
        return Err(ConstructionError::Precondition(format!("{q} does not split in Q(√{p})")));
    }
    let mut sol = solve_legendre_with(1, -(p as i64), -(q as i64), cfg)?;
    sol.mode = TernaryMode::Alpha;
    sol.x = sol.x.abs();
    sol.y = sol.y.abs();
    sol.z = sol.z.abs();
    if sol.x.is_even() || (sol.y.is_odd() && sol.z.is_odd()) {
        return Err(ConstructionError::NormalizationFailed(format!(
            "parity of {sol} for p = {p}, q = {q}"
        )));
    }
    let other = if sol.y.is_even() { &sol.y } else { &sol.z };
    if (&sol.x - other).mod_floor(&BigInt::from(4)) != BigInt::one() {
        sol.x = -&sol.x;
    }
    sol.normalized = true;
    let alpha = if sol.z.is_even() {
        KpElement::half(sol.x.clone(), sol.y.clone(), p)
    } else {
        KpElement::new(sol.x.clone(), sol.y.clone(), p)
    };
    Ok((sol, alpha))
}

/// `d = a·b` with the exponent vector of `a` over the ordered prime factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub a: u64,
    pub b: u64,
    pub mask: u64,
    pub factors: Vec<u64>,
}

impl Decomposition {
    pub fn exponents(&self) -> Vec<u8> {
        (0..self.factors.len()).map(|i| (self.mask >> i & 1) as u8).collect()
    }
}

/// Every `a | d`, `a ∉ {1, d}`, whose exponent vector lies in `ker B₀`, with
/// `(a/p) = (b/p) = -1` and `p x² - a y² - b z² = 0` solvable over Q; for
/// even `d`, `a` is taken even. Ordered by exponent mask with the first
/// ordered prime as the lowest bit.
pub fn all_decompositions(d: &SquarefreeD, p: u64) -> Result<Vec<Decomposition>> {
    let (b0, of) = build_b0(d, p)?;
    let t = of.t();
    if of.m + 2 != t {
        return Err(ConstructionError::Precondition(format!(
            "need m = t - 2, got m = {} with t = {t}",
            of.m
        )));
    }
    let full = (1u64 << t) - 1;
    let mut out = Vec::new();
    for mask in 1..full {
        if b0.mul_mask(mask) != 0 {
            continue;
        }
        let a = of.product(mask);
        let b = d.d / a;
        if d.is_even() && a % 2 == 1 {
            continue;
        }
        if validate(p, a, b)? {
            out.push(Decomposition { a, b, mask, factors: of.primes.clone() });
        }
    }
    Ok(out)
}

fn validate(p: u64, a: u64, b: u64) -> Result<bool> {
    let (pi, ai, bi) = (p as i64, a as i64, b as i64);
    if jacobi_i64(ai, p)? != -1 || jacobi_i64(bi, p)? != -1 {
        return Ok(false);
    }
    Ok(local_obstruction(pi, -ai, -bi)?.is_none())
}

pub fn find_decomposition(d: &SquarefreeD, p: u64) -> Result<Decomposition> {
    all_decompositions(d, p)?
        .into_iter()
        .next()
        .ok_or(ConstructionError::NoDecomposition { d: d.d, p })
}

/// Solves `p x² - a y² - b z² = 0` for the decomposition and normalizes it.
pub fn beta_solution(
    d: &SquarefreeD,
    p: u64,
    dec: &Decomposition,
    cfg: &LegendreConfig,
) -> Result<TernarySolution> {
    let mut sol = solve_legendre_with(p as i64, -(dec.a as i64), -(dec.b as i64), cfg)?;
    sol.mode = TernaryMode::Beta;
    normalize_beta_data(&sol, d)
}

/// Makes a solution of `p x² - a y² - b z² = 0` primitive with `x, z` odd
/// and `y` even, then fixes the sign of `x` so that `x - y ≡ 1 (mod 4)`.
pub fn normalize_beta_data(sol: &TernarySolution, d: &SquarefreeD) -> Result<TernarySolution> {
    let [p, na, nb] = sol.coeffs;
    let (a, b) = (-na, -nb);
    let fail = |msg: String| ConstructionError::NormalizationFailed(msg);
    if p <= 0 || a <= 0 || b <= 0 || (a as u64) * (b as u64) != d.d {
        return Err(fail(format!("coefficients {:?} do not match d = {}", sol.coeffs, d.d)));
    }
    let mut s = sol.clone();
    s.mode = TernaryMode::Beta;
    let (ha, hb) = (BigInt::from((a + b) / 2), BigInt::from((a - b) / 2));
    let (ba, bb) = (BigInt::from(a), BigInt::from(b));
    for _ in 0..64 {
        s.remove_gcd();
        if !(s.x.is_odd() && s.y.is_odd() && s.z.is_even()) || d.is_even() {
            break;
        }
        let x = &ha * &s.x;
        let y = &hb * &s.y + &bb * &s.z;
        let z = &hb * &s.z - &ba * &s.y;
        s.x = x;
        s.y = y;
        s.z = z;
    }
    if !s.residual().is_zero() {
        return Err(fail(format!("{s} does not solve the equation")));
    }
    if !(s.x.is_odd() && s.z.is_odd() && s.y.is_even()) {
        return Err(fail(format!("parity of {s}")));
    }
    let four = BigInt::from(4);
    if (&s.x - &s.y).mod_floor(&four) != BigInt::one() {
        s.x = -&s.x;
    }
    if !d.is_even() {
        let xr = s.x.mod_floor(&four).to_u8().unwrap();
        let yr = s.y.mod_floor(&four).to_u8().unwrap();
        let expected = match (b as i128 * p as i128).rem_euclid(8) {
            1 => (1, 0),
            5 => (3, 2),
            r => return Err(fail(format!("bp ≡ {r} (mod 8)"))),
        };
        if (xr, yr) != expected {
            return Err(fail(format!("{s} has residues ({xr}, {yr}) mod 4, expected {expected:?}")));
        }
    }
    s.normalized = true;
    Ok(s)
}

/// The field cut out by `√β`, `β = (x√p + y√a)(u + v√p)`, is totally real
/// exactly when `x v > 0`.
pub fn beta_totally_real(sol: &TernarySolution, unit: &PellUnit) -> bool {
    debug_assert!(sol.normalized);
    sol.x.sign() * unit.v.sign() == num_bigint::Sign::Plus
}

/// Ordered factors for `(d, p)`, re-exported for callers that build
/// decompositions by hand.
pub fn ordered_factors(d: &SquarefreeD, p: u64) -> Result<OrderedFactors> {
    Ok(OrderedFactors::new(d, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::primes_in_range;
    use crate::quadfield::pell_negative_unit;
    use crate::symbols::fpr_composite;
    use proptest::prelude::*;

    fn sf(d: u64) -> SquarefreeD {
        SquarefreeD::new(d).unwrap()
    }

    fn triple(s: &TernarySolution) -> (i64, i64, i64) {
        (s.x.to_i64().unwrap(), s.y.to_i64().unwrap(), s.z.to_i64().unwrap())
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(triple(&solve_legendre(37, -5, -13).unwrap()), (3, 8, 1));
        assert_eq!(triple(&solve_legendre(1, -29, -5).unwrap()), (7, 1, 2));
        assert_eq!(
            solve_legendre(5, -3, -7),
            Err(ConstructionError::LocalObstruction { place: Place::Odd(3) })
        );
        assert_eq!(
            solve_legendre(1, 1, 1),
            Err(ConstructionError::LocalObstruction { place: Place::Two })
        );
        let no_descent = LegendreConfig { height: 2, descent: false };
        assert_eq!(
            solve_legendre_with(37, -5, -13, &no_descent),
            Err(ConstructionError::HeightExceeded { height: 2 })
        );
    }

    #[test]
    fn descent_only() {
        let cfg = LegendreConfig { height: 0, descent: true };
        for (c1, c2, c3) in [(37, -5, -13), (1, -29, -5), (3, -5, -7), (1, 1, -2), (-6, 5, 1)] {
            let s = solve_legendre_with(c1, c2, c3, &cfg).unwrap();
            assert!(s.residual().is_zero() && s.is_primitive(), "{c1} {c2} {c3}: {s}");
            assert!(!(s.x.is_zero() && s.y.is_zero() && s.z.is_zero()));
        }
        // large coefficients
        let p = 999_961;
        assert_eq!(p % 4, 1);
        let s = solve_legendre_with(1, -p, -13, &cfg);
        if jacobi_i64(13, p as u64).unwrap() == 1 {
            assert!(s.unwrap().residual().is_zero());
        }
        for p in primes_in_range(990_000, 991_000).filter(|p| p % 8 == 1) {
            let s = solve_legendre_with(p as i64, -5, -13 * 17, &cfg);
            match s {
                Ok(s) => assert!(s.residual().is_zero()),
                Err(ConstructionError::LocalObstruction { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    proptest! {
        #[test]
        fn solver_agrees_with_local_test(c1 in -40i64..40, c2 in -40i64..40, c3 in -40i64..40) {
            prop_assume!(c1 != 0 && c2 != 0 && c3 != 0);
            let found = search(c1, c2, c3, 25);
            match solve_legendre_with(c1, c2, c3, &LegendreConfig { height: 10, descent: true }) {
                Ok(s) => prop_assert!(s.residual().is_zero() && s.is_primitive()),
                Err(ConstructionError::LocalObstruction { .. }) => prop_assert!(found.is_none()),
                Err(e) => prop_assert!(false, "{}", e),
            }
        }
    }

    #[test]
    fn alpha_examples() {
        let (sol, alpha) = alpha_solution(29, 5).unwrap();
        assert_eq!(triple(&sol), (7, 1, 2));
        assert_eq!(alpha, KpElement::half(7, 1, 29));
        assert!(matches!(alpha_solution(29, 3), Err(ConstructionError::Precondition(_))));
        assert!(matches!(alpha_solution(13, 5), Err(ConstructionError::Precondition(_))));
    }

    #[test]
    fn alpha_conditions() {
        let four = BigInt::from(4);
        for p in primes_in_range(5, 3000).filter(|p| p % 4 == 1) {
            for q in [2u64, 5, 13, 17, 29, 37, 41] {
                if q == p || splitting(q, p).unwrap() != Splitting::Split {
                    continue;
                }
                let (s, alpha) = alpha_solution(p, q).unwrap();
                assert!(s.residual().is_zero());
                let (x2, py2, qz2) = (&s.x * &s.x, &s.y * &s.y * p, &s.z * &s.z * q);
                assert!(x2.gcd(&py2).is_one() && x2.gcd(&qz2).is_one() && py2.gcd(&qz2).is_one());
                assert!(!s.y.is_negative() && !s.z.is_negative());
                assert!(s.x.is_odd() && (s.y.is_even() || s.z.is_even()));
                if s.y.is_even() {
                    assert_eq!((&s.x - &s.y).mod_floor(&four), BigInt::one());
                }
                if s.z.is_even() {
                    assert_eq!((&s.x - &s.z).mod_floor(&four), BigInt::one());
                    assert!(alpha.halved);
                }
                assert!(alpha.is_integral());
                // N(α) = q z² or q z²/4
                let n = if alpha.halved { &qz2 / 4 } else { qz2.clone() };
                assert_eq!(alpha.norm(), n);
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let d = sf(65);
        let dec = find_decomposition(&d, 37).unwrap();
        assert_eq!((dec.a, dec.b), (5, 13));
        assert_eq!(dec.exponents(), vec![1, 0]);
        assert!(matches!(find_decomposition(&d, 17), Err(ConstructionError::Precondition(_))));
        assert!(matches!(find_decomposition(&d, 53), Err(ConstructionError::Precondition(_))));
    }

    #[test]
    fn decompositions_are_quadratic_nonresidues() {
        for dd in [65u64, 85, 1105, 130, 170] {
            let d = sf(dd);
            for p in primes_in_range(5, 4000).filter(|p| p % 4 == 1 && dd % p != 0) {
                let Ok(of) = ordered_factors(&d, p) else { continue };
                if of.m + 2 != of.t() {
                    continue;
                }
                for dec in all_decompositions(&d, p).unwrap() {
                    assert_eq!(dec.a * dec.b, dd);
                    assert_eq!(jacobi_i64(dec.a as i64, p).unwrap(), -1);
                    assert_eq!(jacobi_i64(dec.b as i64, p).unwrap(), -1);
                    if d.is_even() {
                        assert_eq!(dec.a % 2, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let d = sf(65);
        let raw = solve_legendre(37, -5, -13).unwrap();
        let n = normalize_beta_data(&raw, &d).unwrap();
        assert_eq!(triple(&n), (-3, 8, 1));
        assert!(n.normalized);
        assert_eq!(normalize_beta_data(&n, &d).unwrap(), n);
        let scaled = TernarySolution { x: 6.into(), y: 16.into(), z: 2.into(), ..raw };
        assert_eq!(normalize_beta_data(&scaled, &d).unwrap(), n);
    }

    #[test]
    fn parity_repair() {
        // find inputs with x, y odd and z even and check the repair path
        let mut hits = 0;
        for p in primes_in_range(5, 2000).filter(|p| p % 4 == 1) {
            for (a, b) in [(5i64, 13i64), (13, 5), (5, 17), (17, 5), (13, 17), (17, 13)] {
                let d = sf((a * b) as u64);
                let (pi, a, b) = (p as i64, a, b);
                let Some((x, y, z)) = search(pi, -a, -b, 40) else { continue };
                let raw = TernarySolution {
                    x,
                    y,
                    z,
                    coeffs: [pi, -a, -b],
                    mode: TernaryMode::Beta,
                    normalized: false,
                };
                if raw.x.is_odd() && raw.y.is_odd() && raw.z.is_even() {
                    hits += 1;
                }
                let n = normalize_beta_data(&raw, &d).unwrap();
                assert!(n.residual().is_zero() && n.is_primitive());
                assert_eq!(normalize_beta_data(&n, &d).unwrap(), n);
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn sign_test() {
        let unit = pell_negative_unit(37).unwrap();
        assert_eq!(unit.v, BigInt::from(-1));
        let d = sf(65);
        let n = beta_solution(&d, 37, &find_decomposition(&d, 37).unwrap(), &Default::default())
            .unwrap();
        assert!(beta_totally_real(&n, &unit));
        let flipped = TernarySolution { x: -n.x.clone(), ..n.clone() };
        assert!(!beta_totally_real(&flipped, &unit));
    }

    #[test]
    fn sign_matches_symbols_small() {
        for dd in [65u64, 85, 1105] {
            let d = sf(dd);
            for p in primes_in_range(5, 3000).filter(|p| p % 4 == 1 && dd % p != 0) {
                let of = ordered_factors(&d, p).unwrap();
                if of.m + 2 != of.t() {
                    continue;
                }
                let Ok(dec) = find_decomposition(&d, p) else { continue };
                let (a, b) = (dec.a as i64, dec.b as i64);
                let pi = p as i64;
                let sym = fpr_composite(a * b, p).unwrap()
                    * fpr_composite(a * pi, dec.b).unwrap()
                    * fpr_composite(b * pi, dec.a).unwrap();
                let sol = beta_solution(&d, p, &dec, &Default::default()).unwrap();
                let unit = pell_negative_unit(p).unwrap();
                assert_eq!(beta_totally_real(&sol, &unit), sym == -1, "d={dd} p={p}");
            }
        }
    }
}
