//! Entry patterns: which positions of an `n x m` grid are unspecified.
//!
//! Pairs are 1-based in the public API, matching the usual `(row, col)`
//! notation. The pattern is also read as a bipartite graph whose vertices are
//! rows and columns and whose edges are the unspecified entries.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern dimensions must be positive, got {rows}x{cols}")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("entry ({row},{col}) outside the {rows}x{cols} grid")]
    OutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("invalid family parameters: {0}")]
    Parameter(String),
    #[error("cannot parse family descriptor {0:?}")]
    Descriptor(String),
}

/// Unspecified entries `U` inside `[rows] x [cols]`, stored sorted and
/// deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawPattern")]
pub struct EntryPattern {
    rows: usize,
    cols: usize,
    unspecified: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawPattern {
    rows: usize,
    cols: usize,
    unspecified: Vec<(usize, usize)>,
}

impl TryFrom<RawPattern> for EntryPattern {
    type Error = PatternError;

    fn try_from(raw: RawPattern) -> Result<Self, PatternError> {
        EntryPattern::new(raw.rows, raw.cols, raw.unspecified)
    }
}

impl EntryPattern {
    pub fn new(
        rows: usize,
        cols: usize,
        unspecified: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, PatternError> {
        if rows == 0 || cols == 0 {
            return Err(PatternError::EmptyGrid { rows, cols });
        }
        let mut pairs: Vec<(usize, usize)> = unspecified.into_iter().collect();
        for &(row, col) in &pairs {
            if row == 0 || col == 0 || row > rows || col > cols {
                return Err(PatternError::OutOfRange { row, col, rows, cols });
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self { rows, cols, unspecified: pairs })
    }

    /// Pattern with nothing unspecified.
    pub fn full(rows: usize, cols: usize) -> Result<Self, PatternError> {
        Self::new(rows, cols, [])
    }

    /// Builds from 0-based pairs known to be in range.
    pub(crate) fn from_zero_based(
        rows: usize,
        cols: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut unspecified: Vec<(usize, usize)> =
            pairs.into_iter().map(|(i, j)| (i + 1, j + 1)).collect();
        unspecified.sort_unstable();
        unspecified.dedup();
        debug_assert!(unspecified.iter().all(|&(i, j)| i <= rows && j <= cols));
        Self { rows, cols, unspecified }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn min_dim(&self) -> usize {
        self.rows.min(self.cols)
    }

    /// Sorted 1-based unspecified pairs.
    pub fn unspecified(&self) -> &[(usize, usize)] {
        &self.unspecified
    }

    /// Sorted 1-based specified pairs.
    pub fn specified(&self) -> Vec<(usize, usize)> {
        let mask = self.mask();
        let mut out = Vec::with_capacity(self.specified_count());
        for i in 0..self.rows {
            for j in 0..self.cols {
                if !mask[i * self.cols + j] {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    pub fn unspecified_count(&self) -> usize {
        self.unspecified.len()
    }

    pub fn specified_count(&self) -> usize {
        self.rows * self.cols - self.unspecified.len()
    }

    /// 1-based membership test.
    pub fn is_unspecified(&self, row: usize, col: usize) -> bool {
        self.unspecified.binary_search(&(row, col)).is_ok()
    }

    /// Row-major 0-based mask, `true` at unspecified positions.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.rows * self.cols];
        for &(i, j) in &self.unspecified {
            mask[(i - 1) * self.cols + (j - 1)] = true;
        }
        mask
    }

    /// 0-based unspecified pairs.
    pub fn unspecified_zero_based(&self) -> Vec<(usize, usize)> {
        self.unspecified.iter().map(|&(i, j)| (i - 1, j - 1)).collect()
    }

    /// 0-based specified pairs, row-major.
    pub fn specified_zero_based(&self) -> Vec<(usize, usize)> {
        self.specified().into_iter().map(|(i, j)| (i - 1, j - 1)).collect()
    }

    pub fn complement(&self) -> Self {
        let mut out = self.specified();
        out.shrink_to_fit();
        Self { rows: self.rows, cols: self.cols, unspecified: out }
    }

    pub fn transpose(&self) -> Self {
        let mut pairs: Vec<(usize, usize)> = self.unspecified.iter().map(|&(i, j)| (j, i)).collect();
        pairs.sort_unstable();
        Self { rows: self.cols, cols: self.rows, unspecified: pairs }
    }

    /// Moves old row `i` to `row_map[i]` and old column `j` to `col_map[j]`
    /// (0-based maps). Panics unless both maps are permutations.
    pub fn permute(&self, row_map: &[usize], col_map: &[usize]) -> Self {
        assert!(is_permutation(row_map, self.rows), "row map is not a permutation");
        assert!(is_permutation(col_map, self.cols), "column map is not a permutation");
        Self::from_zero_based(
            self.rows,
            self.cols,
            self.unspecified.iter().map(|&(i, j)| (row_map[i - 1], col_map[j - 1])),
        )
    }

    /// Same unspecified set inside a larger grid (top-left aligned).
    pub fn embed(&self, rows: usize, cols: usize) -> Result<Self, PatternError> {
        Self::new(rows, cols, self.unspecified.iter().copied())
    }

    /// Number of unspecified entries in each row (0-based index).
    pub fn row_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.rows];
        for &(i, _) in &self.unspecified {
            d[i - 1] += 1;
        }
        d
    }

    pub fn col_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.cols];
        for &(_, j) in &self.unspecified {
            d[j - 1] += 1;
        }
        d
    }
}

fn is_permutation(map: &[usize], n: usize) -> bool {
    if map.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in map {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

impl fmt::Display for EntryPattern {
    /// Grid picture: `?` unspecified, `*` specified.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mask = self.mask();
        for i in 0..self.rows {
            for j in 0..self.cols {
                f.write_str(if mask[i * self.cols + j] { "?" } else { "*" })?;
            }
            if i + 1 < self.rows {
                f.write_str("\n")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoTypicalKind {
    Corank,
    Rank,
}

/// Named pattern families. Each instantiates to an [`EntryPattern`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternFamily {
    /// `G(n,k)`: entries `(i, i+j mod n)`, `j < k`.
    Circulant { n: usize, k: usize },
    /// `G'(n,k)`: entries `i <= j < i+k`.
    PrimeCirculant { n: usize, k: usize },
    /// Complement of the anti-diagonal strip `n-k+1 < i+j <= n+k+1`.
    DiagStrip { n: usize, k: usize },
    /// `(n+k) x n` grid whose first `r+k` rows miss their first `r` entries.
    CodimBlock { n: usize, k: usize, r: usize },
    TwoTypical { kind: TwoTypicalKind, n: usize },
}

impl PatternFamily {
    pub fn instantiate(&self) -> Result<EntryPattern, PatternError> {
        match *self {
            Self::Circulant { n, k } => circulant(n, k),
            Self::PrimeCirculant { n, k } => prime_circulant(n, k),
            Self::DiagStrip { n, k } => diag_strip(n, k),
            Self::CodimBlock { n, k, r } => codim_block(n, k, r),
            Self::TwoTypical { kind, n } => two_typical_family(kind, n),
        }
    }

    /// Parses `G(7,3)`, `G'(6,2)`, `S(6,2)`, `K(6,0,4)`, `Tc(3)` or `Tr(3)`.
    pub fn parse(s: &str) -> Result<Self, PatternError> {
        let bad = || PatternError::Descriptor(s.to_string());
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim();
        let args: Vec<usize> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (name, args.as_slice()) {
            ("G", &[n, k]) => Ok(Self::Circulant { n, k }),
            ("G'", &[n, k]) => Ok(Self::PrimeCirculant { n, k }),
            ("S", &[n, k]) => Ok(Self::DiagStrip { n, k }),
            ("K", &[n, k, r]) => Ok(Self::CodimBlock { n, k, r }),
            ("Tc", &[n]) => Ok(Self::TwoTypical { kind: TwoTypicalKind::Corank, n }),
            ("Tr", &[n]) => Ok(Self::TwoTypical { kind: TwoTypicalKind::Rank, n }),
            _ => Err(bad()),
        }
    }

    pub fn descriptor(&self) -> String {
        match *self {
            Self::Circulant { n, k } => format!("G({n},{k})"),
            Self::PrimeCirculant { n, k } => format!("G'({n},{k})"),
            Self::DiagStrip { n, k } => format!("S({n},{k})"),
            Self::CodimBlock { n, k, r } => format!("K({n},{k},{r})"),
            Self::TwoTypical { kind: TwoTypicalKind::Corank, n } => format!("Tc({n})"),
            Self::TwoTypical { kind: TwoTypicalKind::Rank, n } => format!("Tr({n})"),
        }
    }
}

impl fmt::Display for PatternFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

pub fn circulant(n: usize, k: usize) -> Result<EntryPattern, PatternError> {
    if n == 0 || k > n {
        return Err(PatternError::Parameter(format!("G({n},{k}) needs 0 <= k <= n, n >= 1")));
    }
    Ok(EntryPattern::from_zero_based(n, n, (0..n).flat_map(|i| (0..k).map(move |j| (i, (i + j) % n)))))
}

pub fn prime_circulant(n: usize, k: usize) -> Result<EntryPattern, PatternError> {
    if n == 0 || k == 0 || k > n + 1 {
        return Err(PatternError::Parameter(format!("G'({n},{k}) needs 0 < k <= n+1")));
    }
    Ok(EntryPattern::from_zero_based(
        n,
        n,
        (0..n).flat_map(|i| (i..(i + k).min(n)).map(move |j| (i, j))),
    ))
}

pub fn diag_strip(n: usize, k: usize) -> Result<EntryPattern, PatternError> {
    if n == 0 || k > n {
        return Err(PatternError::Parameter(format!("S({n},{k}) needs k <= n, n >= 1")));
    }
    let mut pairs = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            let s = i + j;
            if !(s + k > n + 1 && s <= n + k + 1) {
                pairs.push((i, j));
            }
        }
    }
    EntryPattern::new(n, n, pairs)
}

pub fn codim_block(n: usize, k: usize, r: usize) -> Result<EntryPattern, PatternError> {
    if n == 0 || r > n {
        return Err(PatternError::Parameter(format!("K({n},{k},{r}) needs r <= n, n >= 1")));
    }
    Ok(EntryPattern::from_zero_based(n + k, n, (0..r + k).flat_map(|i| (0..r).map(move |j| (i, j)))))
}

pub fn two_typical_family(kind: TwoTypicalKind, n: usize) -> Result<EntryPattern, PatternError> {
    if n == 0 {
        return Err(PatternError::Parameter("two-typical families need n >= 1".into()));
    }
    let diag = (1..=4).map(|i| (i, i));
    match kind {
        TwoTypicalKind::Corank => EntryPattern::new(n + 4, n + 4, diag),
        TwoTypicalKind::Rank => {
            let size = n + 3;
            let block = (3..=size)
                .flat_map(move |i| (3..=size).map(move |j| (i, j)))
                .filter(|&(i, j)| !(i <= 4 && j <= 4));
            EntryPattern::new(size, size, diag.chain(block))
        }
    }
}

/// Connected components of the `k`-core of the unspecified graph.
pub fn k_core(p: &EntryPattern, k: usize) -> Vec<EntryPattern> {
    let (n, m) = p.shape();
    // Vertices 0..n are rows, n..n+m are columns.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
    for &(i, j) in p.unspecified() {
        adj[i - 1].push(n + j - 1);
        adj[n + j - 1].push(i - 1);
    }
    let mut alive = vec![true; n + m];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut queue: VecDeque<usize> = (0..n + m).filter(|&v| degree[v] < k).collect();
    for &v in &queue {
        alive[v] = false;
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if alive[w] {
                degree[w] -= 1;
                if degree[w] < k {
                    alive[w] = false;
                    queue.push_back(w);
                }
            }
        }
    }
    let mut component = vec![usize::MAX; n + m];
    let mut out = Vec::new();
    for start in 0..n + m {
        if !alive[start] || component[start] != usize::MAX || adj[start].is_empty() {
            continue;
        }
        let id = out.len();
        let mut pairs = Vec::new();
        let mut stack = vec![start];
        component[start] = id;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !alive[w] {
                    continue;
                }
                if v < n {
                    pairs.push((v, w - n));
                }
                if component[w] == usize::MAX {
                    component[w] = id;
                    stack.push(w);
                }
            }
        }
        out.push(EntryPattern::from_zero_based(n, m, pairs));
    }
    out
}

/// Which clause of the corank-one characterization a square pattern meets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorankOneCase {
    /// Nonempty and inside the union of one row and one column.
    RowColUnion,
    /// `G(3,1)` up to row and column permutation.
    G31,
    /// `G(4,1)` up to row and column permutation.
    G41,
    None,
}

/// Whether corank 1 is a typical corank of the complement of `u`, together
/// with the matching clause. Non-square patterns report `None`.
pub fn has_typical_corank_one(u: &EntryPattern) -> (bool, CorankOneCase) {
    let case = corank_one_case(u);
    (case != CorankOneCase::None, case)
}

fn corank_one_case(u: &EntryPattern) -> CorankOneCase {
    if !u.is_square() || u.unspecified_count() == 0 {
        return CorankOneCase::None;
    }
    if covered_by_row_and_col(u) {
        return CorankOneCase::RowColUnion;
    }
    let rows_distinct = u.row_degrees().iter().all(|&d| d <= 1);
    let cols_distinct = u.col_degrees().iter().all(|&d| d <= 1);
    if rows_distinct && cols_distinct {
        match u.unspecified_count() {
            3 => return CorankOneCase::G31,
            4 => return CorankOneCase::G41,
            _ => {}
        }
    }
    CorankOneCase::None
}

fn covered_by_row_and_col(u: &EntryPattern) -> bool {
    (1..=u.rows()).any(|a| {
        let rest: Vec<usize> = u.unspecified().iter().filter(|&&(i, _)| i != a).map(|&(_, j)| j).collect();
        rest.windows(2).all(|w| w[0] == w[1])
    })
}

/// Canonical representatives of all unspecified sets with at most
/// `max_unknowns` entries in an `rows x cols` grid, grouped by size and
/// sorted. Built by extending each representative of size `s` by one entry.
pub fn enumerate_canonical(rows: usize, cols: usize, max_unknowns: usize) -> Result<Vec<EntryPattern>, PatternError> {
    let empty = EntryPattern::full(rows, cols)?;
    let mut out = vec![empty.clone()];
    let mut layer = BTreeSet::from([empty]);
    for _ in 0..max_unknowns.min(rows * cols) {
        let mut next = BTreeSet::new();
        for p in &layer {
            for i in 1..=rows {
                for j in 1..=cols {
                    if !p.is_unspecified(i, j) {
                        let mut pairs = p.unspecified().to_vec();
                        pairs.push((i, j));
                        next.insert(canonical_form(&EntryPattern::new(rows, cols, pairs)?));
                    }
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    Ok(out)
}

/// Exhaustive canonicalization runs while the smaller side is at most this.
pub const EXACT_CANONICAL_LIMIT: usize = 8;

/// Representative of the orbit of `p` under row and column permutations,
/// and transposition when square.
///
/// Exact when `min(rows, cols) <= EXACT_CANONICAL_LIMIT`. Above that a
/// degree-refinement ordering is used, which is a normal form but may split
/// an orbit into several representatives.
pub fn canonical_form(p: &EntryPattern) -> EntryPattern {
    if p.rows() > p.cols() {
        return canonical_wide(&p.transpose()).0.transpose();
    }
    let (best, key) = canonical_wide(p);
    if p.is_square() {
        let (alt, alt_key) = canonical_wide(&p.transpose());
        if alt_key > key {
            return alt;
        }
    }
    best
}

type Code = Vec<u8>;

/// Canonicalizes with `rows <= cols` by permuting rows and sorting the
/// column codes under each permutation; the lexicographically largest
/// sorted code list wins.
fn canonical_wide(p: &EntryPattern) -> (EntryPattern, Vec<Code>) {
    let (n, m) = p.shape();
    let mask = p.mask();
    let mut best: Option<(Vec<Code>, Vec<usize>)> = None;
    let mut consider = |perm: &[usize]| {
        let mut codes: Vec<Code> = (0..m).map(|j| perm.iter().map(|&i| mask[i * m + j] as u8).collect()).collect();
        codes.sort_unstable_by(|a, b| b.cmp(a));
        if best.as_ref().is_none_or(|(k, _)| codes > *k) {
            best = Some((codes, perm.to_vec()));
        }
    };
    if n <= EXACT_CANONICAL_LIMIT {
        let mut perm: Vec<usize> = (0..n).collect();
        heap_permutations(&mut perm, n, &mut consider);
    } else {
        let perm = refined_row_order(p);
        consider(&perm);
    }
    let (codes, _) = best.expect("at least one permutation");
    let pairs = codes
        .iter()
        .enumerate()
        .flat_map(|(j, code)| code.iter().enumerate().filter(|(_, &b)| b == 1).map(move |(i, _)| (i, j)))
        .collect::<Vec<_>>();
    (EntryPattern::from_zero_based(n, m, pairs), codes)
}

fn heap_permutations(perm: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        visit(perm);
        return;
    }
    for i in 0..k - 1 {
        heap_permutations(perm, k - 1, visit);
        if k.is_multiple_of(2) {
            perm.swap(i, k - 1);
        } else {
            perm.swap(0, k - 1);
        }
    }
    heap_permutations(perm, k - 1, visit);
}

/// Rows ordered by degree, then by the sorted degrees of their columns.
fn refined_row_order(p: &EntryPattern) -> Vec<usize> {
    let col_deg = p.col_degrees();
    let row_deg = p.row_degrees();
    let mut signature: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new()); p.rows()];
    for (i, sig) in signature.iter_mut().enumerate() {
        sig.0 = row_deg[i];
    }
    for &(i, j) in p.unspecified() {
        signature[i - 1].1.push(col_deg[j - 1]);
    }
    for sig in &mut signature {
        sig.1.sort_unstable_by(|a, b| b.cmp(a));
    }
    let mut order: Vec<usize> = (0..p.rows()).collect();
    order.sort_by(|&a, &b| signature[b].cmp(&signature[a]));
    order
}
