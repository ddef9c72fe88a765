//! Linear algebra over F₂ and the Rédei-type matrices: the classical 4-rank
//! matrix of a real quadratic field, the rational matrix `B₀` for
//! `Q(√p, √d)`, and the generalized matrix built from the `α_i`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{factorize_u64, kronecker, ArithError, SquarefreeD};
use crate::quadfield::{self, residue_symbol_at_root, root_for_element, KpElement, QuadError, Splitting};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RedeiError {
    #[error("{0} is not squarefree")]
    NotSquarefree(u64),
    #[error("matrices wider than 64 columns are not supported ({0})")]
    TooWide(usize),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

pub type Result<T> = std::result::Result<T, RedeiError>;

/// Dense matrix over F₂ with at most 64 columns; row `i` is a word whose bit
/// `j` is the entry in column `j`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct F2Matrix {
    rows: Vec<u64>,
    cols: usize,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(cols <= 64, "F2Matrix supports at most 64 columns");
        F2Matrix { rows: vec![0; rows], cols }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Parses rows written as `0`/`1` strings, column 0 first.
    pub fn from_strs(rows: &[&str]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols);
            for (j, c) in r.bytes().enumerate() {
                m.set(i, j, c == b'1');
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        debug_assert!(j < self.cols);
        if v {
            self.rows[i] |= 1 << j;
        } else {
            self.rows[i] &= !(1 << j);
        }
    }

    pub fn row_word(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.nrows(), |i, j| self.get(j, i))
    }

    /// `M v` for a column vector packed as a mask.
    pub fn mul_mask(&self, v: u64) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |acc, (i, r)| acc | (((r & v).count_ones() as u64) & 1) << i)
    }

    pub fn add_row(&mut self, dst: usize, src: usize) {
        self.rows[dst] ^= self.rows[src];
    }

    pub fn add_col(&mut self, dst: usize, src: usize) {
        for r in &mut self.rows {
            *r ^= (*r >> src & 1) << dst;
        }
    }

    /// The submatrix on rows `r0..r1` and columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j))
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn rank(&self) -> usize {
        rank_and_kernel(self).0
    }
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "F2Matrix {}x{}", self.nrows(), self.cols)?;
        for i in 0..self.nrows() {
            let s: String = (0..self.cols).map(|j| if self.get(i, j) { '1' } else { '0' }).collect();
            writeln!(f, "  {s}")?;
        }
        Ok(())
    }
}

/// Rank and a kernel basis read off the reduced row echelon form: one vector
/// per free column, with that column set and the pivot columns solved for.
pub fn rank_and_kernel(m: &F2Matrix) -> (usize, Vec<u64>) {
    let mut rows = m.rows.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        let bit = 1u64 << c;
        let Some(k) = (r..rows.len()).find(|&k| rows[k] & bit != 0) else {
            continue;
        };
        rows.swap(r, k);
        for k in 0..rows.len() {
            if k != r && rows[k] & bit != 0 {
                rows[k] ^= rows[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    let pivot_mask = pivots.iter().fold(0u64, |a, &c| a | 1 << c);
    let kernel = (0..m.cols)
        .filter(|c| pivot_mask >> c & 1 == 0)
        .map(|f| {
            let mut v = 1u64 << f;
            for (i, &pc) in pivots.iter().enumerate() {
                if rows[i] >> f & 1 == 1 {
                    v |= 1 << pc;
                }
            }
            v
        })
        .collect();
    (pivots.len(), kernel)
}

/// Every vector of the span of `basis`.
pub fn span(basis: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64];
    for &b in basis {
        let n = out.len();
        for i in 0..n {
            out.push(out[i] ^ b);
        }
    }
    out.sort_unstable();
    out
}

fn bit(sym: i32) -> bool {
    debug_assert!(sym == 1 || sym == -1, "symbol {sym}");
    sym == -1
}

/// Prime discriminants `(d_i, ℓ_i)` whose product is the discriminant of `Q(√D)`.
pub fn prime_discriminants(d: u64) -> Result<Vec<(i64, u64)>> {
    let fac = factorize_u64(d)?;
    if d < 2 || fac.iter().any(|&(_, e)| e > 1) {
        return Err(RedeiError::NotSquarefree(d));
    }
    let mut out = Vec::new();
    let mut odd_product = 1i64;
    for &(q, _) in &fac {
        if q != 2 {
            let star = if q % 4 == 1 { q as i64 } else { -(q as i64) };
            odd_product *= star;
            out.push((star, q));
        }
    }
    let disc = fundamental_discriminant(d);
    let two_part = disc / odd_product;
    if two_part != 1 {
        out.push((two_part, 2));
    }
    out.sort_by_key(|&(_, q)| q);
    Ok(out)
}

pub fn fundamental_discriminant(d: u64) -> i64 {
    if d % 4 == 1 {
        d as i64
    } else {
        4 * d as i64
    }
}

/// The classical Rédei matrix: entry `(i, j)` is `(d_j / ℓ_i)` off the
/// diagonal, and the diagonal makes every row sum to zero.
pub fn redei_matrix(d: u64) -> Result<F2Matrix> {
    let pd = prime_discriminants(d)?;
    let n = pd.len();
    if n > 64 {
        return Err(RedeiError::TooWide(n));
    }
    let mut m = F2Matrix::zeros(n, n);
    for (i, &(_, li)) in pd.iter().enumerate() {
        let mut row_sum = false;
        for (j, &(dj, _)) in pd.iter().enumerate() {
            if i != j {
                let b = bit(kronecker(dj, li));
                m.set(i, j, b);
                row_sum ^= b;
            }
        }
        m.set(i, i, row_sum);
    }
    Ok(m)
}

/// 4-rank of the narrow class group of `Q(√D)`.
pub fn redei_rank4(d: u64) -> Result<usize> {
    let m = redei_matrix(d)?;
    Ok(m.nrows() - 1 - m.rank())
}

/// Prime factors of `d` ordered with the primes split in `Q(√p)` first, each
/// group ascending; `m` counts the split ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderedFactors {
    pub primes: Vec<u64>,
    pub m: usize,
}

impl OrderedFactors {
    pub fn new(d: &SquarefreeD, p: u64) -> Result<Self> {
        let mut split = Vec::new();
        let mut inert = Vec::new();
        for &q in &d.factors {
            match quadfield::splitting(q, p)? {
                Splitting::Split => split.push(q),
                Splitting::Inert => inert.push(q),
                Splitting::Ramified => {
                    return Err(RedeiError::Domain(format!("{q} ramifies in Q(√{p})")))
                }
            }
        }
        let m = split.len();
        split.extend(inert);
        Ok(OrderedFactors { primes: split, m })
    }

    pub fn t(&self) -> usize {
        self.primes.len()
    }

    pub fn split(&self) -> &[u64] {
        &self.primes[..self.m]
    }

    pub fn inert(&self) -> &[u64] {
        &self.primes[self.m..]
    }

    /// Product of the primes selected by `mask`.
    pub fn product(&self, mask: u64) -> u64 {
        self.primes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &q)| q)
            .product()
    }
}

/// `B₀`: one row per split `q_i`, with `(d/q_i / q_i)` on the diagonal and
/// `(q_j / q_i)` elsewhere.
pub fn build_b0(d: &SquarefreeD, p: u64) -> Result<(F2Matrix, OrderedFactors)> {
    let of = OrderedFactors::new(d, p)?;
    Ok((b0_from_factors(d, &of)?, of))
}

fn b0_from_factors(d: &SquarefreeD, of: &OrderedFactors) -> Result<F2Matrix> {
    let t = of.t();
    if t > 64 {
        return Err(RedeiError::TooWide(t));
    }
    Ok(F2Matrix::from_fn(of.m, t, |i, j| {
        let qi = of.primes[i];
        let top = if i == j { d.d / qi } else { of.primes[j] };
        bit(kronecker(top as i64, qi))
    }))
}

/// The generalized Rédei matrix for odd `d`: `raw` is the block matrix `A`
/// indexed by `(𝔮_1..𝔮_m, 𝔮̃_1..𝔮̃_m, q_{m+1}..q_t)` against
/// `(α_1..α_m, α̃_1..α̃_m, q_{m+1}..q_t)`, and `reduced` is `A` after adding the
/// first block row and column to the second.
#[derive(Debug, Clone)]
pub struct GeneralizedRedei {
    pub factors: OrderedFactors,
    pub raw: F2Matrix,
    pub reduced: F2Matrix,
    pub b0: F2Matrix,
}

impl GeneralizedRedei {
    /// `[[A₁₁, B₀], [B₀ᵀ, 0]]`.
    pub fn closed_form(&self) -> F2Matrix {
        let m = self.factors.m;
        let t = self.factors.t();
        let b0t = self.b0.transpose();
        F2Matrix::from_fn(t + m, t + m, |i, j| match (i < m, j < m) {
            (true, true) => self.raw.get(i, j),
            (true, false) => self.b0.get(i, j - m),
            (false, true) => b0t.get(i - m, j),
            (false, false) => false,
        })
    }

    pub fn kernel_dim(&self) -> usize {
        self.reduced.ncols() - self.reduced.rank()
    }
}

/// Builds `A` and its reduction. `alphas[i]` belongs to the `i`-th split prime
/// of [`OrderedFactors`]; `𝔮_i` is taken to be the prime above `q_i`
/// containing `α_i`.
pub fn build_generalized_b(
    d: &SquarefreeD,
    p: u64,
    alphas: &[KpElement],
) -> Result<GeneralizedRedei> {
    if d.is_even() {
        return Err(RedeiError::Domain("the generalized matrix needs odd d".into()));
    }
    let (b0, of) = build_b0(d, p)?;
    let (m, t) = (of.m, of.t());
    if alphas.len() != m {
        return Err(RedeiError::Domain(format!("expected {m} elements, got {}", alphas.len())));
    }
    if t + m > 64 {
        return Err(RedeiError::TooWide(t + m));
    }
    let mut roots = Vec::with_capacity(m);
    for (a, &q) in alphas.iter().zip(of.split()) {
        roots.push(root_for_element(a, q)?);
    }

    #[derive(Clone, Copy)]
    enum Prime {
        Split { q: u64, root: u64 },
        Inert(u64),
    }
    let primes: Vec<Prime> = (0..m)
        .map(|i| Prime::Split { q: of.primes[i], root: roots[i] })
        .chain((0..m).map(|i| Prime::Split { q: of.primes[i], root: of.primes[i] - roots[i] }))
        .chain(of.inert().iter().map(|&q| Prime::Inert(q)))
        .collect();
    let gens: Vec<KpElement> = alphas
        .iter()
        .cloned()
        .chain(alphas.iter().map(|a| a.conj()))
        .chain(of.inert().iter().map(|&q| KpElement::rational(q, p)))
        .collect();

    let symbol = |g: &KpElement, pr: Prime| -> Result<i32> {
        Ok(match pr {
            Prime::Split { q, root } => residue_symbol_at_root(g, q, root)?,
            Prime::Inert(q) => quadfield::residue_symbol(g, q, quadfield::Which::First)?,
        })
    };

    let n = t + m;
    let mut raw = F2Matrix::zeros(n, n);
    for (r, &pr) in primes.iter().enumerate() {
        for (c, g) in gens.iter().enumerate() {
            let s = match (r == c, pr) {
                // d/g at the prime dividing g to odd order is d/q times the
                // conjugate of g, up to squares
                (true, Prime::Split { q, .. }) => {
                    kronecker((d.d / q) as i64, q) * symbol(&g.conj(), pr)?
                }
                (true, Prime::Inert(q)) => {
                    symbol(&KpElement::rational(d.d / q, p), Prime::Inert(q))?
                }
                (false, _) => symbol(g, pr)?,
            };
            raw.set(r, c, bit(s));
        }
    }

    let mut reduced = raw.clone();
    for i in 0..m {
        reduced.add_col(m + i, i);
    }
    for i in 0..m {
        reduced.add_row(m + i, i);
    }
    Ok(GeneralizedRedei { factors: of, raw, reduced, b0 })
}
