//! Truncated free Fock space over `C^d`.
//!
//! The basis consists of all words of length `0..=depth` over the alphabet
//! `0..d`, ordered by length and then lexicographically; index 0 is the
//! empty word, the vacuum. Operators are kept as expression trees over the
//! three elementary operators (plus explicit matrices) and act on sparse
//! vectors graded by word length. They can be materialized into exact
//! matrices when the basis is small enough.
//!
//! Truncation: creation maps words of length `depth` to zero. A vacuum
//! expectation is only evaluated when no intermediate vector can reach that
//! length, so results never depend on the truncation.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::ComplexFloat;
use rustc_hash::FxHashMap;

use crate::{Error, Result, C64};

/// Default cap on the number of basis words of a materialized space.
pub const DEFAULT_MAX_BASIS: usize = 200_000;

/// Environment variable overriding [`DEFAULT_MAX_BASIS`].
pub const MAX_BASIS_ENV: &str = "NCP_MAX_BASIS";

/// Spaces with fewer basis words than this materialize to dense matrices.
pub const DENSE_BELOW: usize = 512;

/// Current basis cap, honoring `NCP_MAX_BASIS`.
pub fn max_basis() -> usize {
    std::env::var(MAX_BASIS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_BASIS)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    dim: usize,
    depth: usize,
    /// `dim^n` for `n <= depth`.
    powers: Vec<u64>,
    /// Index of the first word of length `n`, for `n <= depth + 1`.
    offsets: Vec<u64>,
}

impl FockSpace {
    /// A space with one-particle dimension `dim` truncated at word length
    /// `depth`. Nothing is allocated per basis word, so only overflow of the
    /// index arithmetic is checked here.
    pub fn new(dim: usize, depth: usize) -> Result<Arc<Self>> {
        let overflow = || Error::SizeLimit {
            what: "Fock basis index",
            got: usize::MAX,
            limit: u64::MAX as usize,
        };
        let mut powers = vec![1u64];
        let mut offsets = vec![0u64, 1u64];
        for n in 1..=depth {
            let p = powers[n - 1]
                .checked_mul(dim as u64)
                .ok_or_else(overflow)?;
            powers.push(p);
            offsets.push(offsets[n].checked_add(p).ok_or_else(overflow)?);
        }
        Ok(Arc::new(Self {
            dim,
            depth,
            powers,
            offsets,
        }))
    }

    /// Like [`FockSpace::new`] but enforces the basis cap.
    pub fn bounded(dim: usize, depth: usize) -> Result<Arc<Self>> {
        let space = Self::new(dim, depth)?;
        space.check_cap()?;
        Ok(space)
    }

    fn check_cap(&self) -> Result<()> {
        let limit = max_basis();
        let total = self.total_dim_u64();
        if total > limit as u64 {
            return Err(Error::SizeLimit {
                what: "Fock basis size",
                got: usize::try_from(total).unwrap_or(usize::MAX),
                limit,
            });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn total_dim_u64(&self) -> u64 {
        self.offsets[self.depth + 1]
    }

    /// Number of basis words, `sum_{n <= depth} d^n`.
    pub fn total_dim(&self) -> usize {
        self.total_dim_u64() as usize
    }

    /// Number of words of length `n`.
    pub fn level_size(&self, n: usize) -> u64 {
        self.powers[n]
    }

    pub fn index_of(&self, word: &[usize]) -> Option<usize> {
        if word.len() > self.depth || word.iter().any(|&l| l >= self.dim) {
            return None;
        }
        let rank = word
            .iter()
            .fold(0u64, |acc, &l| acc * self.dim as u64 + l as u64);
        Some((self.offsets[word.len()] + rank) as usize)
    }

    pub fn word_of(&self, index: usize) -> Option<Vec<usize>> {
        let (n, mut rank) = self.split_index(index as u64)?;
        let mut word = vec![0; n];
        for slot in word.iter_mut().rev() {
            *slot = (rank % self.dim as u64) as usize;
            rank /= self.dim as u64;
        }
        Some(word)
    }

    /// (length, rank within length) of a global index.
    fn split_index(&self, index: u64) -> Option<(usize, u64)> {
        if index >= self.total_dim_u64() {
            return None;
        }
        let n = self.offsets.partition_point(|&o| o <= index) - 1;
        Some((n, index - self.offsets[n]))
    }
}

type Level = FxHashMap<u64, C64>;

/// A vector in a truncated Fock space, stored sparsely per word length.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    levels: Vec<Level>,
}

impl FockVector {
    pub fn zero(space: &FockSpace) -> Self {
        Self {
            levels: vec![Level::default(); space.depth + 1],
        }
    }

    pub fn vacuum(space: &FockSpace) -> Self {
        let mut v = Self::zero(space);
        v.levels[0].insert(0, C64::new(1.0, 0.0));
        v
    }

    pub fn basis(space: &FockSpace, index: usize) -> Result<Self> {
        let (n, rank) = space
            .split_index(index as u64)
            .ok_or_else(|| Error::Shape(format!("basis index {index} out of range")))?;
        let mut v = Self::zero(space);
        v.levels[n].insert(rank, C64::new(1.0, 0.0));
        Ok(v)
    }

    /// Amplitude of the basis word `word`.
    pub fn amplitude(&self, word: &[usize], space: &FockSpace) -> C64 {
        match space.index_of(word) {
            Some(i) => {
                let (n, rank) = space.split_index(i as u64).expect("valid index");
                self.levels[n].get(&rank).copied().unwrap_or_default()
            }
            None => C64::default(),
        }
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| {
                a.iter()
                    .filter_map(|(k, x)| b.get(k).map(|y| x.conj() * y))
                    .sum::<C64>()
            })
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.levels
            .iter()
            .flat_map(|l| l.values())
            .map(|x| x.norm_sqr())
            .sum()
    }

    /// Number of stored amplitudes.
    pub fn support_len(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    /// Entries as (global basis index, amplitude), sorted by index.
    pub fn entries(&self, space: &FockSpace) -> Vec<(usize, C64)> {
        let mut out: Vec<(usize, C64)> = self
            .levels
            .iter()
            .enumerate()
            .flat_map(|(n, l)| {
                l.iter()
                    .map(move |(&rank, &x)| ((space.offsets[n] + rank) as usize, x))
            })
            .collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    fn add_assign(&mut self, other: Self) {
        for (mine, theirs) in self.levels.iter_mut().zip(other.levels) {
            if mine.is_empty() {
                *mine = theirs;
                continue;
            }
            for (k, x) in theirs {
                *mine.entry(k).or_default() += x;
            }
        }
    }

    fn scale(&mut self, c: C64) {
        for level in &mut self.levels {
            for x in level.values_mut() {
                *x *= c;
            }
        }
    }

    /// Drops every component of length greater than `max_len`.
    fn prune(&mut self, max_len: usize) {
        for level in self.levels.iter_mut().skip(max_len + 1) {
            level.clear();
        }
    }
}

/// An exact operator matrix in the word basis.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorMatrix {
    Dense(DMatrix<C64>),
    Sparse(CscMatrix),
}

/// Compressed sparse columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CscMatrix {
    fn from_columns(n: usize, columns: Vec<Vec<(usize, C64)>>) -> Self {
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in columns {
            for (r, x) in col {
                row_idx.push(r);
                values.push(x);
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

impl OperatorMatrix {
    fn from_columns(n: usize, columns: Vec<Vec<(usize, C64)>>) -> Self {
        if n < DENSE_BELOW {
            let mut m = DMatrix::zeros(n, n);
            for (j, col) in columns.into_iter().enumerate() {
                for (i, x) in col {
                    m[(i, j)] += x;
                }
            }
            OperatorMatrix::Dense(m)
        } else {
            OperatorMatrix::Sparse(CscMatrix::from_columns(n, columns))
        }
    }

    pub fn size(&self) -> usize {
        match self {
            OperatorMatrix::Dense(m) => m.nrows(),
            OperatorMatrix::Sparse(s) => s.n,
        }
    }

    /// Nonzero entries of column `j` as (row, value).
    pub fn column(&self, j: usize) -> Vec<(usize, C64)> {
        match self {
            OperatorMatrix::Dense(m) => m
                .column(j)
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != C64::default())
                .map(|(i, x)| (i, *x))
                .collect(),
            OperatorMatrix::Sparse(s) => s.column(j).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            OperatorMatrix::Dense(m) => m.clone(),
            OperatorMatrix::Sparse(s) => {
                let mut m = DMatrix::zeros(s.n, s.n);
                for j in 0..s.n {
                    for (i, x) in s.column(j) {
                        m[(i, j)] += x;
                    }
                }
                m
            }
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        match self {
            OperatorMatrix::Dense(m) => OperatorMatrix::Dense(m.adjoint()),
            OperatorMatrix::Sparse(s) => {
                let mut columns = vec![Vec::new(); s.n];
                for j in 0..s.n {
                    for (i, x) in s.column(j) {
                        columns[i].push((j, x.conj()));
                    }
                }
                OperatorMatrix::Sparse(CscMatrix::from_columns(s.n, columns))
            }
        }
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.size(), other.size(), "matrix sizes differ");
        let mut worst = 0.0f64;
        for j in 0..self.size() {
            let mut col: FxHashMap<usize, C64> = FxHashMap::default();
            for (i, x) in self.column(j) {
                *col.entry(i).or_default() += x;
            }
            for (i, x) in other.column(j) {
                *col.entry(i).or_default() -= x;
            }
            worst = col.values().map(|x| x.abs()).fold(worst, f64::max);
        }
        worst
    }
}

/// Creation vector, annihilation vector or conservation matrix restricted to
/// its nonzero pattern.
#[derive(Debug)]
struct SparseVector {
    dense: Vec<C64>,
    nonzero: Vec<(usize, C64)>,
}

impl SparseVector {
    fn new(dense: Vec<C64>) -> Self {
        let nonzero = dense
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != C64::default())
            .map(|(i, x)| (i, *x))
            .collect();
        Self { dense, nonzero }
    }
}

#[derive(Debug)]
struct SparseSquare {
    dense: DMatrix<C64>,
    /// For each column `f`, the nonzero `(i, X[i, f])`.
    columns: Vec<Vec<(usize, C64)>>,
}

impl SparseSquare {
    fn new(dense: DMatrix<C64>) -> Self {
        let columns = (0..dense.ncols())
            .map(|f| {
                dense
                    .column(f)
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| **x != C64::default())
                    .map(|(i, x)| (i, *x))
                    .collect()
            })
            .collect();
        Self { dense, columns }
    }
}

#[derive(Debug)]
enum Kind {
    /// `c * Id`.
    Scalar(C64),
    Creation(SparseVector),
    Annihilation(SparseVector),
    Conservation(SparseSquare),
    Matrix(OperatorMatrix),
    Sum(Vec<Arc<Node>>),
    /// Factors in written order; the rightmost acts first.
    Product(Vec<Arc<Node>>),
    Scaled(C64, Arc<Node>),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    /// Upper bound on how much the operator can increase word length.
    raise: usize,
    /// Upper bound on how much it can decrease word length.
    lower: usize,
}

impl Node {
    fn new(kind: Kind, space: &FockSpace) -> Arc<Self> {
        let (raise, lower) = match &kind {
            Kind::Scalar(_) | Kind::Conservation(_) => (0, 0),
            Kind::Creation(_) => (1, 0),
            Kind::Annihilation(_) => (0, 1),
            Kind::Matrix(m) => matrix_degree_bounds(m, space),
            Kind::Sum(terms) => terms
                .iter()
                .fold((0, 0), |(r, l), t| (r.max(t.raise), l.max(t.lower))),
            Kind::Product(factors) => factors
                .iter()
                .fold((0, 0), |(r, l), t| (r + t.raise, l + t.lower)),
            Kind::Scaled(_, inner) => (inner.raise, inner.lower),
        };
        Arc::new(Self { kind, raise, lower })
    }
}

fn matrix_degree_bounds(m: &OperatorMatrix, space: &FockSpace) -> (usize, usize) {
    let (mut raise, mut lower) = (0, 0);
    for j in 0..m.size() {
        let (cn, _) = space.split_index(j as u64).expect("valid index");
        for (i, _) in m.column(j) {
            let (rn, _) = space.split_index(i as u64).expect("valid index");
            raise = raise.max(rn.saturating_sub(cn));
            lower = lower.max(cn.saturating_sub(rn));
        }
    }
    (raise, lower)
}

/// A linear operator on a truncated free Fock space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    space: Arc<FockSpace>,
    node: Arc<Node>,
}

fn check_vector(space: &FockSpace, u: &[C64], what: &str) -> Result<()> {
    if u.len() != space.dim {
        return Err(Error::Shape(format!(
            "{what} vector has length {}, one-particle dimension is {}",
            u.len(),
            space.dim
        )));
    }
    Ok(())
}

/// `a+(u)`: prepends `u` to every word. Words of maximal length map to zero.
pub fn creation(space: &Arc<FockSpace>, u: &[C64]) -> Result<FockOperator> {
    check_vector(space, u, "creation")?;
    Ok(FockOperator::from_kind(
        space,
        Kind::Creation(SparseVector::new(u.to_vec())),
    ))
}

/// `a-(v)`: strips the first letter `x` with amplitude `<v, x>`
/// (conjugate-linear in `v`) and kills the vacuum.
pub fn annihilation(space: &Arc<FockSpace>, v: &[C64]) -> Result<FockOperator> {
    check_vector(space, v, "annihilation")?;
    Ok(FockOperator::from_kind(
        space,
        Kind::Annihilation(SparseVector::new(v.to_vec())),
    ))
}

/// `Lambda(X)`: applies `X` to the first letter and kills the vacuum.
pub fn conservation(space: &Arc<FockSpace>, x: &DMatrix<C64>) -> Result<FockOperator> {
    if x.nrows() != space.dim || x.ncols() != space.dim {
        return Err(Error::Shape(format!(
            "conservation matrix is {}x{}, one-particle dimension is {}",
            x.nrows(),
            x.ncols(),
            space.dim
        )));
    }
    Ok(FockOperator::from_kind(
        space,
        Kind::Conservation(SparseSquare::new(x.clone())),
    ))
}

impl FockOperator {
    fn from_kind(space: &Arc<FockSpace>, kind: Kind) -> Self {
        Self {
            node: Node::new(kind, space),
            space: Arc::clone(space),
        }
    }

    fn from_node(space: &Arc<FockSpace>, node: Arc<Node>) -> Self {
        Self {
            space: Arc::clone(space),
            node,
        }
    }

    pub fn identity(space: &Arc<FockSpace>) -> Self {
        Self::scalar(space, C64::new(1.0, 0.0))
    }

    pub fn zero(space: &Arc<FockSpace>) -> Self {
        Self::scalar(space, C64::default())
    }

    /// `c` times the identity.
    pub fn scalar(space: &Arc<FockSpace>, c: C64) -> Self {
        Self::from_kind(space, Kind::Scalar(c))
    }

    /// Wraps an explicit `M x M` matrix in the word basis.
    pub fn from_matrix(space: &Arc<FockSpace>, m: &DMatrix<C64>) -> Result<Self> {
        space.check_cap()?;
        let n = space.total_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, space has {n} basis words",
                m.nrows(),
                m.ncols()
            )));
        }
        let columns = (0..n)
            .map(|j| {
                m.column(j)
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| **x != C64::default())
                    .map(|(i, x)| (i, *x))
                    .collect()
            })
            .collect();
        Ok(Self::from_kind(
            space,
            Kind::Matrix(OperatorMatrix::from_columns(n, columns)),
        ))
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    /// Upper bound on the increase of word length under this operator.
    pub fn raise_bound(&self) -> usize {
        self.node.raise
    }

    /// Upper bound on the decrease of word length under this operator.
    pub fn lower_bound(&self) -> usize {
        self.node.lower
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::MixedSpace);
        }
        Ok(())
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        Self::sum(&[self, other])
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.plus(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// `self * other`; `other` acts first.
    pub fn then_after(&self, other: &Self) -> Result<Self> {
        Self::product(&[self, other])
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_kind(&self.space, Kind::Scaled(c, Arc::clone(&self.node)))
    }

    pub fn sum(terms: &[&Self]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Shape("empty operator sum".into()))?;
        for t in terms {
            first.same_space(t)?;
        }
        let nodes = terms.iter().map(|t| Arc::clone(&t.node)).collect();
        Ok(Self::from_kind(&first.space, Kind::Sum(nodes)))
    }

    /// `factors[0] * factors[1] * ...`; the last factor acts first.
    pub fn product(factors: &[&Self]) -> Result<Self> {
        let first = factors
            .first()
            .ok_or_else(|| Error::Shape("empty operator product".into()))?;
        for f in factors {
            first.same_space(f)?;
        }
        let nodes = factors.iter().map(|f| Arc::clone(&f.node)).collect();
        Ok(Self::from_kind(&first.space, Kind::Product(nodes)))
    }

    /// `self^k`, with `self^0` the identity.
    pub fn power(&self, k: usize) -> Self {
        if k == 0 {
            return Self::identity(&self.space);
        }
        let nodes = vec![Arc::clone(&self.node); k];
        Self::from_kind(&self.space, Kind::Product(nodes))
    }

    /// Hilbert space adjoint, computed structurally:
    /// `a+(u)* = a-(u)`, `Lambda(X)* = Lambda(X*)`, products reverse.
    pub fn adjoint(&self) -> Self {
        Self::from_node(&self.space, adjoint_node(&self.node, &self.space))
    }

    /// Applies the operator to `v` (within the truncated space).
    pub fn apply(&self, v: &FockVector) -> FockVector {
        apply(&self.node, v.clone(), self.space.depth, &self.space)
    }

    /// Exact matrix in the word basis; dense below [`DENSE_BELOW`] words.
    pub fn matrix(&self) -> Result<OperatorMatrix> {
        self.space.check_cap()?;
        let n = self.space.total_dim();
        let mut columns = Vec::with_capacity(n);
        for j in 0..n {
            let image = self.apply(&FockVector::basis(&self.space, j)?);
            columns.push(image.entries(&self.space));
        }
        Ok(OperatorMatrix::from_columns(n, columns))
    }
}

fn adjoint_node(node: &Arc<Node>, space: &FockSpace) -> Arc<Node> {
    let kind = match &node.kind {
        Kind::Scalar(c) => Kind::Scalar(c.conj()),
        Kind::Creation(u) => Kind::Annihilation(SparseVector::new(u.dense.clone())),
        Kind::Annihilation(v) => Kind::Creation(SparseVector::new(v.dense.clone())),
        Kind::Conservation(x) => Kind::Conservation(SparseSquare::new(x.dense.adjoint())),
        Kind::Matrix(m) => Kind::Matrix(m.adjoint()),
        Kind::Sum(terms) => Kind::Sum(terms.iter().map(|t| adjoint_node(t, space)).collect()),
        Kind::Product(factors) => Kind::Product(
            factors
                .iter()
                .rev()
                .map(|f| adjoint_node(f, space))
                .collect(),
        ),
        Kind::Scaled(c, inner) => Kind::Scaled(c.conj(), adjoint_node(inner, space)),
    };
    Node::new(kind, space)
}

/// Applies `node` to `v`. Operators still to be applied afterwards (to the
/// left) can lower word length by at most `budget`, so components longer than
/// that can no longer reach the vacuum and are dropped. Pass the depth for an
/// exact, unpruned application.
fn apply(node: &Node, v: FockVector, budget: usize, space: &FockSpace) -> FockVector {
    let depth = space.depth;
    let top = budget.min(depth);
    let mut out = match &node.kind {
        Kind::Scalar(c) => {
            if *c == C64::default() {
                FockVector::zero(space)
            } else {
                let mut v = v;
                v.scale(*c);
                v
            }
        }
        Kind::Creation(u) => {
            let mut out = FockVector::zero(space);
            for n in 0..depth.min(top) {
                let shift = space.powers[n];
                let target = &mut out.levels[n + 1];
                for (&rank, &x) in &v.levels[n] {
                    for &(i, ui) in &u.nonzero {
                        *target.entry(i as u64 * shift + rank).or_default() += ui * x;
                    }
                }
            }
            out
        }
        Kind::Annihilation(w) => {
            let mut out = FockVector::zero(space);
            for n in 1..=depth.min(top + 1) {
                let rest = space.powers[n - 1];
                let target = &mut out.levels[n - 1];
                for (&rank, &x) in &v.levels[n] {
                    let first = (rank / rest) as usize;
                    let coef = w.dense[first].conj();
                    if coef != C64::default() {
                        *target.entry(rank % rest).or_default() += coef * x;
                    }
                }
            }
            out
        }
        Kind::Conservation(xm) => {
            let mut out = FockVector::zero(space);
            for n in 1..=top {
                let rest = space.powers[n - 1];
                let target = &mut out.levels[n];
                for (&rank, &x) in &v.levels[n] {
                    let first = (rank / rest) as usize;
                    for &(i, xi) in &xm.columns[first] {
                        *target.entry(i as u64 * rest + rank % rest).or_default() += xi * x;
                    }
                }
            }
            out
        }
        Kind::Matrix(m) => {
            let mut out = FockVector::zero(space);
            for (n, level) in v.levels.iter().enumerate() {
                for (&rank, &x) in level {
                    let j = (space.offsets[n] + rank) as usize;
                    for (i, mij) in m.column(j) {
                        let (rn, rrank) = space.split_index(i as u64).expect("valid row");
                        if rn <= top {
                            *out.levels[rn].entry(rrank).or_default() += mij * x;
                        }
                    }
                }
            }
            out
        }
        Kind::Sum(terms) => {
            let mut out = FockVector::zero(space);
            for t in terms {
                out.add_assign(apply(t, v.clone(), budget, space));
            }
            out
        }
        Kind::Product(factors) => {
            let mut budgets = Vec::with_capacity(factors.len());
            let mut acc = budget;
            for f in factors {
                budgets.push(acc);
                acc = acc.saturating_add(f.lower);
            }
            let mut cur = v;
            for (f, b) in factors.iter().zip(budgets).rev() {
                cur = apply(f, cur, b, space);
            }
            cur
        }
        Kind::Scaled(c, inner) => {
            let mut out = apply(inner, v, budget, space);
            out.scale(*c);
            out
        }
    };
    out.prune(top);
    out
}

/// Largest word length any intermediate vector can reach when the operators
/// act on the vacuum from right to left.
fn reachable_length(ops: &[&FockOperator]) -> usize {
    ops.iter().map(|o| o.raise_bound()).sum()
}

/// `<Omega, O_1 O_2 ... O_r Omega>`, applying the operators right to left.
///
/// Fails with [`Error::DepthExceeded`] when the word could reach beyond the
/// truncation depth, where truncation would bias the result.
pub fn vacuum_expectation(ops: &[&FockOperator]) -> Result<C64> {
    let Some(first) = ops.first() else {
        return Ok(C64::new(1.0, 0.0));
    };
    for op in ops {
        first.same_space(op)?;
    }
    let space = &first.space;
    let needed = reachable_length(ops);
    if needed > space.depth {
        return Err(Error::DepthExceeded {
            needed,
            depth: space.depth,
        });
    }
    let mut budgets = Vec::with_capacity(ops.len());
    let mut acc = 0usize;
    for op in ops {
        budgets.push(acc);
        acc += op.lower_bound();
    }
    let mut v = FockVector::vacuum(space);
    for (op, b) in ops.iter().zip(budgets).rev() {
        v = apply(&op.node, v, b, space);
    }
    Ok(v.levels[0].get(&0).copied().unwrap_or_default())
}

/// `<Omega, X^k Omega>` for `k = 1..=order`.
pub fn vacuum_moments(x: &FockOperator, order: usize) -> Result<Vec<C64>> {
    (1..=order)
        .map(|k| vacuum_expectation(&vec![x; k]))
        .collect()
}

/// Places one factor's one-particle space as an orthogonal block inside the
/// direct sum built by [`free_embedding`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Injection {
    offset: usize,
    dim: usize,
    total: usize,
}

impl Injection {
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, u: &[C64]) -> Result<Vec<C64>> {
        if u.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector has length {}, block dimension is {}",
                u.len(),
                self.dim
            )));
        }
        let mut out = vec![C64::default(); self.total];
        out[self.offset..self.offset + self.dim].copy_from_slice(u);
        Ok(out)
    }

    /// The `i`-th unit vector of this block.
    pub fn unit(&self, i: usize) -> Vec<C64> {
        assert!(i < self.dim, "unit vector index out of block");
        let mut out = vec![C64::default(); self.total];
        out[self.offset + i] = C64::new(1.0, 0.0);
        out
    }

    pub fn matrix(&self, x: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, block dimension is {}",
                x.nrows(),
                x.ncols(),
                self.dim
            )));
        }
        let mut out = DMatrix::zeros(self.total, self.total);
        out.view_mut((self.offset, self.offset), (self.dim, self.dim))
            .copy_from(x);
        Ok(out)
    }
}

/// One Fock space over the direct sum `C^{d_1} + ... + C^{d_r}`. Operators
/// built from vectors and matrices of distinct blocks are free with respect
/// to the vacuum.
pub fn free_embedding(dims: &[usize], depth: usize) -> Result<(Arc<FockSpace>, Vec<Injection>)> {
    if dims.is_empty() {
        return Err(Error::Shape("free embedding needs at least one block".into()));
    }
    let total: usize = dims.iter().sum();
    let space = FockSpace::bounded(total, depth)?;
    let mut offset = 0;
    let injections = dims
        .iter()
        .map(|&dim| {
            let inj = Injection { offset, dim, total };
            offset += dim;
            inj
        })
        .collect();
    Ok((space, injections))
}
