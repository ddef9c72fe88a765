//! Per-prime evaluation: membership in the family, reality of the genus-type
//! field `E`, and the unit index `Q ∈ {1, 2}` of the biquadratic field
//! `Q(√d, √p)`, computed along independent routes.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{is_prime_u64, ArithError, SquarefreeD};
use crate::construction::{
    all_decompositions, beta_solution, beta_totally_real, ConstructionError, Decomposition,
    LegendreConfig,
};
use crate::gaussian::{quad_symbol, split_primary_with, GaussError, GaussInt, Labeling};
use crate::quadfield::{pell_negative_unit, splitting, QuadError, Splitting};
use crate::redei::{redei_rank4, RedeiError};
use crate::symbols::{fpr, fpr_composite, governing_delta, Place, SymbolError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CriterionError {
    #[error("p = {p} is outside the family: {reason}")]
    NotInFamily { p: u64, reason: Membership },
    #[error("Q is only determined for m = t-1 or m = t-2 (m = {m}, t = {t})")]
    OutOfScopeM { m: usize, t: usize },
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Redei(#[from] RedeiError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

pub type Result<T> = std::result::Result<T, CriterionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    NotPrime,
    PNotOneModFour,
    PDividesD,
    Rk4DpPositive,
    MEqualsT,
}

impl Membership {
    pub fn as_str(self) -> &'static str {
        match self {
            Membership::Member => "member",
            Membership::NotPrime => "not_prime",
            Membership::PNotOneModFour => "p_not_1_mod_4",
            Membership::PDividesD => "p_divides_d",
            Membership::Rk4DpPositive => "rk4_dp_positive",
            Membership::MEqualsT => "m_equals_t",
        }
    }
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Predicted invariants of the narrow class group of `Q(√d, √p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedStructure {
    pub rk2: usize,
    pub rk4: usize,
    pub rk8: usize,
    pub h_plus: u64,
    /// `Q · 2^(2t-3)`, when `Q` is known.
    pub h: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeVerdict {
    pub p: u64,
    pub m: usize,
    pub t: usize,
    pub in_p: bool,
    pub reason: Membership,
    pub e_totally_real: Option<bool>,
    pub q_direct: Option<u8>,
    pub q_governing: Option<u8>,
    pub structure: Option<PredictedStructure>,
    pub decomposition: Option<Decomposition>,
    pub alarms: Vec<String>,
}

/// Number of prime factors of `d` that split in `Q(√p)`.
pub fn split_count(d: &SquarefreeD, p: u64) -> usize {
    d.factors
        .iter()
        .filter(|&&q| q != p && splitting(q, p) == Ok(Splitting::Split))
        .count()
}

/// Membership of `p` in the family attached to `d`, and `m`.
pub fn classify(d: &SquarefreeD, p: u64) -> PrimeVerdict {
    let t = d.t();
    let m = if is_prime_u64(p) { split_count(d, p) } else { 0 };
    let reason = if !is_prime_u64(p) {
        Membership::NotPrime
    } else if p % 4 != 1 {
        Membership::PNotOneModFour
    } else if d.d.is_multiple_of(p) {
        Membership::PDividesD
    } else if d.d.checked_mul(p).is_none_or(|dp| redei_rank4(dp) != Ok(0)) {
        Membership::Rk4DpPositive
    } else if m == t {
        Membership::MEqualsT
    } else {
        Membership::Member
    };
    PrimeVerdict {
        p,
        m,
        t,
        in_p: reason == Membership::Member,
        reason,
        e_totally_real: None,
        q_direct: None,
        q_governing: None,
        structure: None,
        decomposition: None,
        alarms: Vec::new(),
    }
}

fn check_base(d: &SquarefreeD, p: u64) -> Result<()> {
    if !is_prime_u64(p) || p % 4 != 1 || d.d.is_multiple_of(p) {
        return Err(CriterionError::Precondition(format!(
            "need a prime p ≡ 1 (mod 4) not dividing {}, got {p}",
            d.d
        )));
    }
    Ok(())
}

/// `E` is totally real iff `[p/q][q/p] = 1` for every split `q | d`.
pub fn e_totally_real(d: &SquarefreeD, p: u64) -> Result<bool> {
    check_base(d, p)?;
    let pi = p as i64;
    for &q in &d.factors {
        if splitting(q, p)? != Splitting::Split {
            continue;
        }
        let s = fpr(pi, Place::prime(q)?)? * fpr(q as i64, Place::prime(p)?)?;
        if s != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn in_scope(d: &SquarefreeD, p: u64) -> Result<PrimeVerdict> {
    let v = classify(d, p);
    if !v.in_p {
        return Err(CriterionError::NotInFamily { p, reason: v.reason });
    }
    if v.m + 2 < v.t {
        return Err(CriterionError::OutOfScopeM { m: v.m, t: v.t });
    }
    Ok(v)
}

/// `[ab/p]·[ap/b]·[bp/a]`, the composite symbols taken prime by prime.
pub fn key_symbol(p: u64, dec: &Decomposition) -> Result<i32> {
    let (a, b, pi) = (dec.a as i64, dec.b as i64, p as i64);
    Ok(fpr_composite(a * b, p)? * fpr_composite(a * pi, dec.b)? * fpr_composite(b * pi, dec.a)?)
}

fn q_from(real: bool) -> u8 {
    if real {
        2
    } else {
        1
    }
}

/// `Q` from rational fourth-power symbols.
pub fn q_value(d: &SquarefreeD, p: u64) -> Result<u8> {
    let v = in_scope(d, p)?;
    let e = e_totally_real(d, p)?;
    if v.m + 1 == v.t || !e {
        return Ok(q_from(e));
    }
    let dec = first_decomposition(d, p)?;
    Ok(q_from(key_symbol(p, &dec)? == -1))
}

fn first_decomposition(d: &SquarefreeD, p: u64) -> Result<Decomposition> {
    all_decompositions(d, p)?
        .into_iter()
        .next()
        .ok_or(CriterionError::Construction(ConstructionError::NoDecomposition { d: d.d, p }))
}

/// The primary prime above `q | d`, with `1 ± i` above 2.
pub fn rho(q: u64, labeling: Labeling) -> Result<GaussInt> {
    Ok(match (q, labeling) {
        (2, Labeling::Canonical) => GaussInt::new(1, 1),
        (2, Labeling::Conjugate) => GaussInt::new(1, -1),
        _ => split_primary_with(q, labeling)?,
    })
}

/// `E` real as complete splitting of `p` in `Q(i, √q_i, √ρ_i)`: every split
/// `ρ_i` is a square modulo `π`.
pub fn e_real_governing(d: &SquarefreeD, p: u64, labeling: Labeling) -> Result<bool> {
    check_base(d, p)?;
    let pi = split_primary_with(p, labeling)?;
    for &q in &d.factors {
        if splitting(q, p)? == Splitting::Split && quad_symbol(rho(q, labeling)?, pi)? != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn q_value_via_governing(d: &SquarefreeD, p: u64) -> Result<u8> {
    q_value_via_governing_with(d, p, Labeling::Canonical)
}

/// `Q` through Gaussian symbols: for `m = t-2`, `Q = 2` iff `E` is real and
/// `(ρ_1⋯ρ_t / π)_2 = -δ(a, b)`.
pub fn q_value_via_governing_with(d: &SquarefreeD, p: u64, labeling: Labeling) -> Result<u8> {
    let v = in_scope(d, p)?;
    let e = e_real_governing(d, p, labeling)?;
    if v.m + 1 == v.t || !e {
        return Ok(q_from(e));
    }
    let dec = first_decomposition(d, p)?;
    let pi = split_primary_with(p, labeling)?;
    let mut rho_all = 1;
    for &q in &d.factors {
        rho_all *= quad_symbol(rho(q, labeling)?, pi)?;
    }
    let g = governing_delta(dec.a, dec.b, p, labeling)?;
    Ok(q_from(rho_all == -g))
}

/// `Q` from the explicit element `β`: for `m = t-2`, `Q = 2` iff `E` is real
/// and `x v > 0`. `None` for `m = t-1`, where there is no `β`.
pub fn q_value_via_construction(
    d: &SquarefreeD,
    p: u64,
    cfg: &LegendreConfig,
) -> Result<Option<u8>> {
    let v = in_scope(d, p)?;
    if v.m + 1 == v.t {
        return Ok(None);
    }
    let dec = first_decomposition(d, p)?;
    let sol = beta_solution(d, p, &dec, cfg)?;
    let unit = pell_negative_unit(p)?;
    Ok(Some(q_from(e_totally_real(d, p)? && beta_totally_real(&sol, &unit))))
}

pub fn predicted_structure(t: usize, m: usize, q: Option<u8>) -> PredictedStructure {
    let h_plus = 1u64 << (2 * t - 2);
    PredictedStructure {
        rk2: t + m - 1,
        rk4: t - m - 1,
        rk8: 0,
        h_plus,
        h: q.and_then(|q| {
            let n = q as u64 * h_plus;
            n.is_multiple_of(2).then_some(n / 2)
        }),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub labeling: Labeling,
    /// Evaluate the direct verdict for every validating decomposition.
    pub all_decompositions: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { labeling: Labeling::Canonical, all_decompositions: true }
    }
}

/// Full verdict for one prime. Failures of lower layers become alarms.
pub fn evaluate(d: &SquarefreeD, p: u64, opts: &EvalOptions) -> PrimeVerdict {
    let mut v = classify(d, p);
    if matches!(
        v.reason,
        Membership::NotPrime | Membership::PNotOneModFour | Membership::PDividesD
    ) {
        return v;
    }
    let e = match e_totally_real(d, p) {
        Ok(e) => e,
        Err(err) => {
            v.alarms.push(format!("e_real: {err}"));
            return v;
        }
    };
    v.e_totally_real = Some(e);
    match e_real_governing(d, p, opts.labeling) {
        Ok(g) if g != e => v.alarms.push("E reality disagrees between symbol routes".into()),
        Ok(_) => {}
        Err(err) => v.alarms.push(format!("e_real_governing: {err}")),
    }
    if !v.in_p || v.m + 2 < v.t {
        return v;
    }
    if v.m + 2 == v.t {
        match all_decompositions(d, p) {
            Ok(decs) if decs.is_empty() => {
                v.alarms.push("no decomposition validates".into());
                return v;
            }
            Ok(decs) => {
                if opts.all_decompositions && e {
                    let verdicts: Vec<Result<i32>> =
                        decs.iter().map(|dec| key_symbol(p, dec)).collect();
                    if verdicts.iter().any(|r| r.is_err())
                        || verdicts.windows(2).any(|w| w[0] != w[1])
                    {
                        v.alarms.push(format!(
                            "verdict depends on the decomposition ({} candidates)",
                            decs.len()
                        ));
                    }
                }
                v.decomposition = decs.into_iter().next();
            }
            Err(err) => {
                v.alarms.push(format!("decomposition: {err}"));
                return v;
            }
        }
    }
    let direct = if v.m + 1 == v.t || !e {
        Ok(q_from(e))
    } else {
        key_symbol(p, v.decomposition.as_ref().unwrap()).map(|s| q_from(s == -1))
    };
    match direct {
        Ok(q) => v.q_direct = Some(q),
        Err(err) => v.alarms.push(format!("q_direct: {err}")),
    }
    match q_value_via_governing_with(d, p, opts.labeling) {
        Ok(q) => v.q_governing = Some(q),
        Err(err) => v.alarms.push(format!("q_governing: {err}")),
    }
    if let (Some(a), Some(b)) = (v.q_direct, v.q_governing) {
        if a != b {
            v.alarms.push(format!("Q disagrees: direct {a}, governing {b}"));
        }
    }
    v.structure = Some(predicted_structure(v.t, v.m, v.q_direct.or(v.q_governing)));
    v
}
