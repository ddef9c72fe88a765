//! Narrow class groups of real quadratic fields from indefinite binary
//! quadratic forms: reduced forms are grouped into cycles under the
//! reduction operator, each cycle being one proper equivalence class, and the
//! group law is Gauss composition followed by reduction.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize_u64, ArithError, SquarefreeD};
use crate::redei::{fundamental_discriminant, prime_discriminants, redei_rank4, RedeiError};

pub const DEFAULT_DISC_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QfError {
    #[error("{0} is not squarefree")]
    NotSquarefree(u64),
    #[error("discriminant {disc} exceeds the enumeration cap {cap}")]
    DiscriminantTooLarge { disc: u64, cap: u64 },
    #[error("form {0} failed to reduce")]
    ReductionFailed(IndefiniteForm),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

pub type Result<T> = std::result::Result<T, QfError>;

/// `a x² + b xy + c y²` of positive nonsquare discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndefiniteForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl IndefiniteForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        IndefiniteForm { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd(self.a, self.b), self.c) == 1
    }

    /// `0 < b < √Δ` and `√Δ - b < 2|a| < √Δ + b`, with `s0 = ⌊√Δ⌋`.
    fn is_reduced_with(&self, s0: i64) -> bool {
        let a2 = 2 * self.a.abs();
        self.b > 0 && self.b <= s0 && a2 + self.b > s0 && a2 - self.b <= s0
    }

    pub fn is_reduced(&self) -> bool {
        self.is_reduced_with(isqrt(self.disc()))
    }

    /// One step `(a, b, c) ↦ (c, b', a')` with `b' ≡ -b (mod 2c)`.
    fn rho_with(&self, s0: i64) -> Self {
        let disc = self.disc();
        let c = self.c;
        let m = 2 * c.abs();
        let lo = if c.abs() > s0 { -c.abs() + 1 } else { s0 + 1 - m };
        let b = lo + (-self.b - lo).rem_euclid(m);
        let a = (b * b - disc) / (4 * c);
        IndefiniteForm { a: c, b, c: a }
    }

    pub fn rho(&self) -> Self {
        self.rho_with(isqrt(self.disc()))
    }

    /// A reduced form properly equivalent to `self`.
    pub fn reduce(&self) -> Result<Self> {
        let s0 = isqrt(self.disc());
        let mut f = *self;
        for _ in 0..10_000 {
            if f.is_reduced_with(s0) {
                return Ok(f);
            }
            f = f.rho_with(s0);
        }
        Err(QfError::ReductionFailed(*self))
    }
}

impl fmt::Display for IndefiniteForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    num_integer::gcd(a, b)
}

fn isqrt(n: i64) -> i64 {
    (n as u64).isqrt() as i64
}

/// `(g, x, y)` with `x a + y b = g = gcd(a, b) >= 0`.
fn xgcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut x0, mut x1) = (1i128, 0i128);
    let (mut y0, mut y1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (x0, x1) = (x1, x0 - q * x1);
        (y0, y1) = (y1, y0 - q * y1);
    }
    if r0 < 0 {
        (-r0, -x0, -y0)
    } else {
        (r0, x0, y0)
    }
}

/// Dirichlet composition of two forms of the same discriminant with `a > 0`.
pub fn compose(f: &IndefiniteForm, g: &IndefiniteForm) -> IndefiniteForm {
    debug_assert_eq!(f.disc(), g.disc());
    let disc = f.disc() as i128;
    let (a1, b1) = (f.a as i128, f.b as i128);
    let (a2, b2, c2) = (g.a as i128, g.b as i128, g.c as i128);
    let s = (b1 + b2) / 2;
    let (d1, _, v1) = xgcd(a1, a2);
    let (e, u2, w) = xgcd(d1, s);
    let v = u2 * v1;
    let a1e = a1 / e;
    let a3 = a1e * (a2 / e);
    let r = (v * (b1 - b2) / 2 - w * c2).rem_euclid(a1e);
    let b3 = b2 + 2 * (a2 / e) * r;
    let c3 = (b3 * b3 - disc) / (4 * a3);
    IndefiniteForm { a: a3 as i64, b: b3 as i64, c: c3 as i64 }
}

/// The narrow class group as a set of cycles of reduced forms with the
/// induced multiplication.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    pub disc: i64,
    cycles: Vec<Vec<IndefiniteForm>>,
    index: HashMap<IndefiniteForm, usize>,
    reps: Vec<IndefiniteForm>,
    identity: usize,
}

impl ClassGroup {
    pub fn new(d: u64) -> Result<Self> {
        Self::with_cap(d, DEFAULT_DISC_CAP)
    }

    pub fn with_cap(d: u64, cap: u64) -> Result<Self> {
        if d < 2 || factorize_u64(d)?.iter().any(|&(_, e)| e > 1) {
            return Err(QfError::NotSquarefree(d));
        }
        let disc = fundamental_discriminant(d);
        if disc as u64 > cap {
            return Err(QfError::DiscriminantTooLarge { disc: disc as u64, cap });
        }
        let s0 = isqrt(disc);
        let mut reduced = Vec::new();
        let mut b = if disc % 2 == 0 { 2 } else { 1 };
        while b <= s0 {
            let n = (disc - b * b) / 4;
            let lo = ((s0 + 2 - b) / 2).max(1);
            let hi = (s0 + b) / 2;
            for aa in lo..=hi {
                if n % aa != 0 {
                    continue;
                }
                for a in [aa, -aa] {
                    let f = IndefiniteForm::new(a, b, -n / a);
                    if f.is_primitive() && f.is_reduced_with(s0) {
                        reduced.push(f);
                    }
                }
            }
            b += 2;
        }

        let mut index = HashMap::with_capacity(reduced.len());
        let mut cycles: Vec<Vec<IndefiniteForm>> = Vec::new();
        for &f in &reduced {
            if index.contains_key(&f) {
                continue;
            }
            let id = cycles.len();
            let mut cycle = Vec::new();
            let mut g = f;
            loop {
                index.insert(g, id);
                cycle.push(g);
                g = g.rho_with(s0);
                if g == f {
                    break;
                }
                debug_assert!(g.is_reduced_with(s0));
            }
            cycles.push(cycle);
        }
        let reps = cycles
            .iter()
            .map(|c| *c.iter().find(|f| f.a > 0).expect("cycles alternate signs"))
            .collect();
        let principal = if disc % 4 == 0 {
            IndefiniteForm::new(1, 0, -disc / 4)
        } else {
            IndefiniteForm::new(1, 1, (1 - disc) / 4)
        };
        let mut cg = ClassGroup { disc, cycles, index, reps, identity: 0 };
        cg.identity = cg.class_of(&principal)?;
        Ok(cg)
    }

    pub fn h_plus(&self) -> usize {
        self.cycles.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn cycle(&self, i: usize) -> &[IndefiniteForm] {
        &self.cycles[i]
    }

    pub fn class_of(&self, f: &IndefiniteForm) -> Result<usize> {
        let r = f.reduce()?;
        self.index.get(&r).copied().ok_or(QfError::ReductionFailed(*f))
    }

    pub fn mul(&self, i: usize, j: usize) -> usize {
        let f = compose(&self.reps[i], &self.reps[j]);
        self.class_of(&f).expect("composition stays in the discriminant")
    }

    pub fn inverse(&self, i: usize) -> usize {
        let f = self.reps[i];
        self.class_of(&IndefiniteForm::new(f.a, -f.b, f.c)).unwrap()
    }

    /// Classes modulo the involution `(a, b, c) ↦ (-a, b, -c)`, i.e. the
    /// class number in the wide sense.
    pub fn wide_class_number(&self) -> usize {
        let mut seen = vec![false; self.h_plus()];
        let mut orbits = 0;
        for i in 0..self.h_plus() {
            if seen[i] {
                continue;
            }
            orbits += 1;
            seen[i] = true;
            let f = self.cycles[i][0];
            seen[self.index[&IndefiniteForm::new(-f.a, f.b, -f.c)]] = true;
        }
        orbits
    }

    pub fn two_sylow(&self) -> ClassGroup2Sylow {
        let sq: Vec<usize> = (0..self.h_plus()).map(|i| self.mul(i, i)).collect();
        let mut layer: HashSet<usize> = (0..self.h_plus()).collect();
        let mut sizes = vec![layer.len()];
        loop {
            let next: HashSet<usize> = layer.iter().map(|&i| sq[i]).collect();
            if next.len() == layer.len() {
                break;
            }
            sizes.push(next.len());
            layer = next;
        }
        let rank = |k: usize| -> usize {
            match (sizes.get(k - 1), sizes.get(k)) {
                (Some(a), Some(b)) => (a / b).trailing_zeros() as usize,
                _ => 0,
            }
        };
        let h = self.h_plus() as u64;
        ClassGroup2Sylow {
            rk2: rank(1),
            rk4: rank(2),
            rk8: rank(3),
            two_part_order: h / *sizes.last().unwrap() as u64,
            h_plus: h,
        }
    }
}

/// 2-ranks `rk_{2^k} = dim 2^{k-1}G / 2^k G` of the narrow class group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroup2Sylow {
    pub rk2: usize,
    pub rk4: usize,
    pub rk8: usize,
    pub two_part_order: u64,
    pub h_plus: u64,
}

pub fn narrow_class_group(d: u64) -> Result<ClassGroup2Sylow> {
    Ok(ClassGroup::new(d)?.two_sylow())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub d: u64,
    pub admissible: bool,
    pub rk4_redei: Option<usize>,
    pub rk4_oracle: Option<usize>,
    pub agreement: bool,
    pub failures: Vec<String>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks that `d` has no prime factor `3 (mod 4)` and that the narrow
/// class group of `Q(√d)` has trivial 4-rank, by both methods when the
/// discriminant is within reach of the forms oracle.
pub fn verify_hypotheses(d: &SquarefreeD) -> HypothesisReport {
    let mut failures = Vec::new();
    let admissible = d.admissible();
    if !admissible {
        let bad: Vec<String> =
            d.factors.iter().filter(|&&q| q % 4 == 3).map(|q| q.to_string()).collect();
        failures.push(format!("prime factors 3 mod 4: {}", bad.join(",")));
    }
    let rk4_redei = match redei_rank4(d.d) {
        Ok(r) => Some(r),
        Err(RedeiError::TooWide(_)) | Err(_) => None,
    };
    let rk4_oracle = match narrow_class_group(d.d) {
        Ok(g) => Some(g.rk4),
        Err(QfError::DiscriminantTooLarge { .. }) => None,
        Err(e) => {
            failures.push(format!("forms oracle: {e}"));
            None
        }
    };
    let agreement = match (rk4_redei, rk4_oracle) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    };
    match rk4_redei.or(rk4_oracle) {
        Some(0) => {}
        Some(r) => failures.push(format!("4-rank of the narrow class group is {r}")),
        None => failures.push("4-rank unavailable".into()),
    }
    if !agreement {
        failures.push(format!("Rédei {rk4_redei:?} vs forms {rk4_oracle:?}"));
    }
    HypothesisReport { d: d.d, admissible, rk4_redei, rk4_oracle, agreement, failures }
}

/// Number of prime discriminants dividing the discriminant of `Q(√d)`.
pub fn genus_count(d: u64) -> usize {
    prime_discriminants(d).map(|v| v.len()).unwrap_or(0)
}
