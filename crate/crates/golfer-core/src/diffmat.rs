//! Difference matrices and quasi-difference matrices over Z_t, their
//! development into orthogonal arrays and incomplete transversal designs, and
//! block grids whose rows and selected columns are parallel.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::designs::{Allocation, Block, GroupedDesign};
use crate::error::invalid;
use crate::{Error, Result};

/// A k × tλ matrix over Z_t.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffMatrix {
    pub t: u32,
    pub lambda: u32,
    /// `cells[row][col]`.
    pub cells: Vec<Vec<u32>>,
}

impl DiffMatrix {
    pub fn new(t: u32, lambda: u32, cells: Vec<Vec<u32>>) -> Result<Self> {
        if t == 0
            || cells
                .iter()
                .any(|r| r.len() != (t * lambda) as usize || r.iter().any(|&x| x >= t))
        {
            return Err(invalid!("rows must have {} entries in Z_{t}", t * lambda));
        }
        Ok(DiffMatrix { t, lambda, cells })
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn columns(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }

    /// Subtracts row 0 from every row, column by column.
    pub fn normalized(&self) -> DiffMatrix {
        let t = self.t;
        let base = self.cells.first().cloned().unwrap_or_default();
        let cells = self
            .cells
            .iter()
            .map(|r| r.iter().zip(&base).map(|(&x, &b)| (x + t - b) % t).collect())
            .collect();
        DiffMatrix {
            t,
            lambda: self.lambda,
            cells,
        }
    }

    /// Whether permuting rows by `perm` (row i goes to perm[i]) leaves the
    /// multiset of columns unchanged.
    pub fn row_permutation_preserves_columns(&self, perm: &[usize]) -> bool {
        if perm.len() != self.k() {
            return false;
        }
        let cols = |m: &Vec<Vec<u32>>| {
            let mut c: Vec<Vec<u32>> = (0..self.columns()).map(|j| m.iter().map(|r| r[j]).collect()).collect();
            c.sort();
            c
        };
        let mut permuted = self.cells.clone();
        for (i, &p) in perm.iter().enumerate() {
            permuted[p] = self.cells[i].clone();
        }
        cols(&self.cells) == cols(&permuted)
    }
}

/// First failure for a row pair: the element and how often it occurred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFailure {
    pub rows: (usize, usize),
    pub element: u32,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DmReport {
    pub valid: bool,
    pub failures: Vec<PairFailure>,
}

/// Checks every row pair's difference list for λ-uniformity.
pub fn verify_dm(d: &DiffMatrix) -> DmReport {
    let t = d.t as usize;
    let mut failures = Vec::new();
    for i in 0..d.k() {
        for j in i + 1..d.k() {
            let mut hist = vec![0u32; t];
            for (a, b) in d.cells[i].iter().zip(&d.cells[j]) {
                hist[(*a as usize + t - *b as usize) % t] += 1;
            }
            if let Some((e, &c)) = hist.iter().enumerate().find(|(_, &c)| c != d.lambda) {
                failures.push(PairFailure {
                    rows: (i, j),
                    element: e as u32,
                    count: c,
                });
            }
        }
    }
    DmReport {
        valid: failures.is_empty(),
        failures,
    }
}

/// The (p, k; 1) matrix with rows `i·j mod p`, i < k. Requires a prime p.
pub fn multiplication_dm(p: u32, k: usize) -> Result<DiffMatrix> {
    if !crate::gf::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if k > p as usize {
        return Err(invalid!("at most {p} rows over Z_{p}"));
    }
    let cells = (0..k as u32).map(|i| (0..p).map(|j| i * j % p).collect()).collect();
    DiffMatrix::new(p, 1, cells)
}

#[rustfmt::skip]
const DM35_FIRST: [u32; 7] = [0, 22, 22, 11, 11, 4, 4];

#[rustfmt::skip]
const DM35_BLOCK: [[u32; 17]; 7] = [
    [ 0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0,  0],
    [ 4, 21,  3, 20,  2, 19,  1, 18,  0, 17, 34, 16, 33, 15, 32, 14, 31],
    [ 5, 23,  6, 24,  7, 25,  8, 26,  9, 27, 10, 28, 11, 29, 12, 30, 13],
    [19, 34, 15,  1, 13, 33, 18, 12, 27,  8, 29,  6, 26, 25,  5, 20,  0],
    [ 3, 23,  7, 21,  9, 24,  4, 10, 30, 14, 28, 16, 31, 32, 17,  2, 22],
    [23,  7, 33, 32, 13, 21,  9, 28, 29,  2,  0, 16,  5, 24, 25, 17, 12],
    [20,  1, 10, 11, 30, 22, 34, 15, 14,  6,  8, 27,  3, 19, 18, 26, 31],
];

/// Row swaps (0-based) turning the middle block into the last one.
pub const DM35_SWAPS: [(usize, usize); 3] = [(1, 2), (3, 4), (5, 6)];

/// The (35, 7; 1) difference matrix `[D₁ | D₂ | D₃]` over Z₃₅, where D₃ is
/// D₂ with rows 1↔2, 3↔4 and 5↔6 (0-based) interchanged.
pub fn build_dm_35_7() -> DiffMatrix {
    let mut cells: Vec<Vec<u32>> = (0..7).map(|i| vec![DM35_FIRST[i]]).collect();
    for (i, row) in cells.iter_mut().enumerate() {
        row.extend_from_slice(&DM35_BLOCK[i]);
    }
    let mut swapped: Vec<usize> = (0..7).collect();
    for (a, b) in DM35_SWAPS {
        swapped.swap(a, b);
    }
    for (i, row) in cells.iter_mut().enumerate() {
        row.extend_from_slice(&DM35_BLOCK[swapped[i]]);
    }
    DiffMatrix {
        t: 35,
        lambda: 1,
        cells,
    }
}

/// A k × s² array in which every row pair shows each ordered symbol pair once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthArray {
    pub k: usize,
    pub s: u32,
    pub cells: Vec<Vec<u32>>,
}

impl OrthArray {
    pub fn columns(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }
}

/// Pair-uniqueness scan over every row pair. Returns the number of pair
/// slots checked, or the first failing row pair.
pub fn verify_oa(a: &OrthArray) -> core::result::Result<usize, (usize, usize)> {
    let s = a.s as usize;
    if a.cells
        .iter()
        .any(|r| r.len() != s * s || r.iter().any(|&x| x as usize >= s))
    {
        return Err((0, 0));
    }
    let mut slots = 0;
    for i in 0..a.k {
        for j in i + 1..a.k {
            let mut seen = vec![false; s * s];
            for (x, y) in a.cells[i].iter().zip(&a.cells[j]) {
                if core::mem::replace(&mut seen[*x as usize * s + *y as usize], true) {
                    return Err((i, j));
                }
            }
            slots += s * s;
        }
    }
    Ok(slots)
}

/// Develops every column over Z_t; column `c + g` lands at index `c·t + g`.
pub fn dm_to_oa(d: &DiffMatrix) -> Result<OrthArray> {
    if d.lambda != 1 {
        return Err(invalid!("only λ=1 matrices develop into orthogonal arrays"));
    }
    let t = d.t;
    let cells = d
        .cells
        .iter()
        .map(|row| row.iter().flat_map(|&x| (0..t).map(move |g| (x + g) % t)).collect())
        .collect();
    Ok(OrthArray { k: d.k(), s: t, cells })
}

/// Rows × columns of blocks. Every row is a parallel class; listed columns
/// consist of pairwise disjoint blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    pub v: u32,
    pub k: u32,
    /// `cells[row][col]`.
    pub cells: Vec<Vec<Block>>,
    pub parallel_cols: Vec<usize>,
}

impl BlockGrid {
    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }

    /// Rows become rounds; the parallel columns become column metadata.
    pub fn to_allocation(&self) -> Allocation {
        let mut a = Allocation::from_rounds(self.cells.clone());
        // from_rounds reorders blocks; rebuild the column indices against the sorted rounds
        a.columns = self
            .parallel_cols
            .iter()
            .map(|&c| {
                (0..self.rows())
                    .map(|r| {
                        let mut b = self.cells[r][c].clone();
                        b.sort_unstable();
                        a.rounds[r].iter().position(|x| *x == b).expect("block present")
                    })
                    .collect()
            })
            .collect();
        a
    }
}

/// Rows whose blocks fail to partition the points, and listed columns whose
/// blocks intersect.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GridReport {
    pub bad_rows: Vec<usize>,
    pub bad_cols: Vec<usize>,
}

impl GridReport {
    pub fn ok(&self) -> bool {
        self.bad_rows.is_empty() && self.bad_cols.is_empty()
    }
}

pub fn check_grid(g: &BlockGrid) -> GridReport {
    let v = g.v as usize;
    let disjoint = |blocks: &mut dyn Iterator<Item = &Block>, full: bool| {
        let mut seen = vec![false; v];
        for b in blocks {
            for &p in b {
                match seen.get_mut(p as usize) {
                    Some(s) if !*s => *s = true,
                    _ => return false,
                }
            }
        }
        !full || seen.iter().all(|&s| s)
    };
    GridReport {
        bad_rows: (0..g.rows())
            .filter(|&r| !disjoint(&mut g.cells[r].iter(), true))
            .collect(),
        bad_cols: g
            .parallel_cols
            .iter()
            .copied()
            .filter(|&c| !disjoint(&mut g.cells.iter().map(|row| &row[c]), false))
            .collect(),
    }
}

/// Whether every column covers all points (true for DM grids).
pub fn columns_cover_all(g: &BlockGrid) -> bool {
    (0..g.cols()).all(|c| {
        let mut pts: Vec<u32> = g.cells.iter().flat_map(|row| row[c].iter().copied()).collect();
        pts.sort_unstable();
        pts.iter().copied().eq(0..g.v)
    })
}

/// t × t grid of (k−1)-blocks over (k−1)·t points from a λ=1 matrix, after
/// normalizing row 0 to zero. Block (g, c) is {(s−1)·t + d_{s,c} + g}.
/// Every row and every column is a parallel class.
pub fn dm_grid(d: &DiffMatrix) -> Result<BlockGrid> {
    if d.lambda != 1 || d.k() < 2 {
        return Err(invalid!("need a λ=1 matrix with at least two rows"));
    }
    let n = d.normalized();
    let t = n.t;
    let cells = (0..t)
        .map(|g| {
            (0..n.columns())
                .map(|c| {
                    (1..n.k())
                        .map(|s| (s as u32 - 1) * t + (n.cells[s][c] + g) % t)
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(BlockGrid {
        v: (n.k() as u32 - 1) * t,
        k: n.k() as u32 - 1,
        cells,
        parallel_cols: (0..t as usize).collect(),
    })
}

/// A k × (λ(n−1+2u)+μ) matrix over Z_n with `None` for empty cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiDiffMatrix {
    pub n: u32,
    pub lambda: u32,
    pub mu: u32,
    pub u: u32,
    pub cells: Vec<Vec<Option<u32>>>,
}

impl QuasiDiffMatrix {
    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn columns(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }

    pub fn expected_columns(&self) -> usize {
        (self.lambda * (self.n - 1 + 2 * self.u) + self.mu) as usize
    }

    pub fn from_dm(d: &DiffMatrix) -> Self {
        QuasiDiffMatrix {
            n: d.t,
            lambda: d.lambda,
            mu: d.lambda,
            u: 0,
            cells: d.cells.iter().map(|r| r.iter().map(|&x| Some(x)).collect()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QdmReport {
    pub valid: bool,
    pub issues: Vec<String>,
}

/// Column count, empties per row, at most one empty per column, and the
/// difference multiset of every row pair.
pub fn verify_qdm(q: &QuasiDiffMatrix) -> QdmReport {
    let mut issues = Vec::new();
    let n = q.n as usize;
    let cols = q.expected_columns();
    if q.cells.iter().any(|r| r.len() != cols) {
        issues.push(format!("rows must have {cols} entries"));
    }
    if q.cells.iter().flatten().flatten().any(|&x| x >= q.n) {
        issues.push(format!("entry outside Z_{n}"));
    }
    for (i, row) in q.cells.iter().enumerate() {
        let e = row.iter().filter(|x| x.is_none()).count() as u32;
        if e != q.lambda * q.u {
            issues.push(format!("row {i} has {e} empty cells, expected {}", q.lambda * q.u));
        }
    }
    for c in 0..q.columns() {
        if q.cells.iter().filter(|r| r.get(c).is_some_and(|x| x.is_none())).count() > 1 {
            issues.push(format!("column {c} has more than one empty cell"));
        }
    }
    if issues.is_empty() {
        for i in 0..q.k() {
            for j in i + 1..q.k() {
                let mut hist = vec![0u32; n];
                for (a, b) in q.cells[i].iter().zip(&q.cells[j]) {
                    if let (Some(a), Some(b)) = (a, b) {
                        hist[(*a as usize + n - *b as usize) % n] += 1;
                    }
                }
                let bad = hist
                    .iter()
                    .enumerate()
                    .find(|(e, &c)| c != if *e == 0 { q.mu } else { q.lambda });
                if let Some((e, c)) = bad {
                    issues.push(format!("rows {i},{j}: difference {e} occurs {c} times"));
                }
            }
        }
    }
    QdmReport {
        valid: issues.is_empty(),
        issues,
    }
}

/// The QDM completed with 1−μ zero columns, each empty cell replaced by an
/// infinite point n..n+u−1 assigned per row in column order.
fn filled_columns(q: &QuasiDiffMatrix) -> Result<Vec<Vec<u32>>> {
    if q.lambda != 1 || q.mu > 1 {
        return Err(invalid!("need λ = 1 and μ ≤ 1, got λ={} μ={}", q.lambda, q.mu));
    }
    let rep = verify_qdm(q);
    if !rep.valid {
        return Err(invalid!("invalid quasi-difference matrix: {}", rep.issues.join("; ")));
    }
    let mut cols: Vec<Vec<u32>> = vec![Vec::with_capacity(q.k()); q.columns()];
    for row in &q.cells {
        let mut next_inf = q.n;
        for (c, x) in row.iter().enumerate() {
            cols[c].push(x.unwrap_or_else(|| {
                next_inf += 1;
                next_inf - 1
            }));
        }
    }
    if q.mu == 0 {
        cols.push(vec![0; q.k()]);
    }
    Ok(cols)
}

fn develop(x: u32, g: u32, n: u32) -> u32 {
    if x >= n {
        x
    } else {
        (x + g) % n
    }
}

/// ITD(n+u, u; k) from an (n, k; 1, μ; u) QDM with μ ≤ 1. Point (i, x) is
/// labelled i·(n+u) + x; the hole is the infinite points of every group.
pub fn itd_from_qdm(q: &QuasiDiffMatrix) -> Result<GroupedDesign> {
    let cols = filled_columns(q)?;
    let (n, k, m) = (q.n, q.k() as u32, q.n + q.u);
    let mut blocks = Vec::new();
    for col in &cols {
        for g in 0..n {
            blocks.push(
                col.iter()
                    .enumerate()
                    .map(|(i, &x)| i as u32 * m + develop(x, g, n))
                    .collect(),
            );
        }
    }
    let groups = (0..k).map(|i| (i * m..(i + 1) * m).collect()).collect();
    let hole = (0..k).flat_map(|i| (n..m).map(move |x| i * m + x)).collect();
    Ok(GroupedDesign {
        v: k * m,
        k,
        blocks,
        groups,
        hole,
        resolution: None,
    })
}

/// Columns ordered so those with an infinite point in row i sit at
/// [i·u, (i+1)·u), followed by the remaining columns in their original order.
fn ordered_columns(q: &QuasiDiffMatrix, cols: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let row_of_inf = |c: &Vec<u32>| c.iter().position(|&x| x >= q.n);
    let mut out = Vec::with_capacity(cols.len());
    for i in 0..q.k() {
        out.extend(cols.iter().filter(|c| row_of_inf(c) == Some(i)).cloned());
    }
    out.extend(cols.into_iter().filter(|c| row_of_inf(c).is_none()));
    out
}

/// n × (n+u) grid of k-blocks over k(n+u) points from an (n, k+1; 1, μ; u)
/// QDM. Row 0 of the matrix indexes the grid rows and is dropped; point
/// (s, x) for s ≥ 1 is labelled (s−1)(n+u) + x. The last n − (k−1)u columns
/// are free of infinite points and flagged parallel.
pub fn qdm_grid(q: &QuasiDiffMatrix) -> Result<BlockGrid> {
    let (n, u) = (q.n, q.u as usize);
    if q.k() < 2 {
        return Err(invalid!("need at least two rows"));
    }
    let cols = ordered_columns(q, filled_columns(q)?);
    let k = q.k() - 1;
    let m = n + q.u;
    let cells = (0..n)
        .map(|i| {
            cols[u..]
                .iter()
                .map(|col| {
                    let g = (i + n - col[0]) % n;
                    (1..=k).map(|s| (s as u32 - 1) * m + develop(col[s], g, n)).collect()
                })
                .collect()
        })
        .collect();
    let width = cols.len() - u;
    Ok(BlockGrid {
        v: k as u32 * m,
        k: k as u32,
        cells,
        parallel_cols: (k * u..width).collect(),
    })
}

/// [`qdm_grid`] plus one row: the developments of the column with the first
/// infinite point in matrix row 0, completed by u blocks each holding one
/// infinite point from every group. Those u blocks occupy grid columns
/// k·u .. (k+1)·u, which stay parallel; no other column does.
pub fn qdm_grid_extended(q: &QuasiDiffMatrix) -> Result<BlockGrid> {
    let mut grid = qdm_grid(q)?;
    let u = q.u as usize;
    if u == 0 {
        return Ok(grid);
    }
    let (n, m, k) = (q.n, q.n + q.u, grid.k);
    let cols = ordered_columns(q, filled_columns(q)?);
    let first = &cols[0];
    let developed: Vec<Block> = (0..n)
        .map(|g| {
            (1..=k as usize)
                .map(|s| (s as u32 - 1) * m + develop(first[s], g, n))
                .collect()
        })
        .collect();
    let hole_blocks: Vec<Block> = (0..q.u).map(|a| (0..k).map(|s| s * m + n + a).collect()).collect();
    let hole_cols: Vec<usize> = (k as usize * u..(k as usize + 1) * u).collect();
    let mut row = Vec::with_capacity(grid.cols());
    let (mut dev, mut hole) = (developed.into_iter(), hole_blocks.into_iter());
    for c in 0..grid.cols() {
        row.push(
            if hole_cols.contains(&c) {
                hole.next()
            } else {
                dev.next()
            }
            .expect("block counts match"),
        );
    }
    grid.cells.push(row);
    grid.parallel_cols = hole_cols;
    Ok(grid)
}

/// Backtracking search for an (n, k; 1, μ; u) QDM with row i's empty cells
/// in columns i·u .. (i+1)·u, each column's first filled entry fixed to 0.
/// Gives up after `budget` nodes.
pub fn search_qdm(n: u32, k: usize, mu: u32, u: u32, budget: u64) -> Option<QuasiDiffMatrix> {
    let cols = (n - 1 + 2 * u + mu) as usize;
    if k * u as usize > cols || mu > 1 {
        return None;
    }
    let mut cells = vec![vec![Some(0u32); cols]; k];
    for (i, row) in cells.iter_mut().enumerate() {
        row[i * u as usize..(i + 1) * u as usize].fill(None);
    }
    let mut s = QdmSearch {
        n,
        k,
        mu,
        cells,
        used: vec![vec![0u32; n as usize]; k * k],
        nodes: 0,
        budget,
    };
    s.solve(0, 0).then_some(QuasiDiffMatrix {
        n,
        lambda: 1,
        mu,
        u,
        cells: s.cells,
    })
}

struct QdmSearch {
    n: u32,
    k: usize,
    mu: u32,
    cells: Vec<Vec<Option<u32>>>,
    used: Vec<Vec<u32>>,
    nodes: u64,
    budget: u64,
}

impl QdmSearch {
    fn cap(&self, d: u32) -> u32 {
        if d == 0 {
            self.mu
        } else {
            1
        }
    }

    fn solve(&mut self, c: usize, r: usize) -> bool {
        let cols = self.cells[0].len();
        if c == cols {
            return true;
        }
        if r == self.k {
            return self.solve(c + 1, 0);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if self.cells[r][c].is_none() {
            return self.solve(c, r + 1);
        }
        let first_filled = (0..r).all(|i| self.cells[i][c].is_none());
        let choices: Vec<u32> = if first_filled { vec![0] } else { (0..self.n).collect() };
        for x in choices {
            let mut diffs = Vec::new();
            let mut ok = true;
            for i in 0..r {
                if let Some(y) = self.cells[i][c] {
                    let d = (y + self.n - x) % self.n;
                    let slot = i * self.k + r;
                    if self.used[slot][d as usize] >= self.cap(d) {
                        ok = false;
                        break;
                    }
                    self.used[slot][d as usize] += 1;
                    diffs.push((slot, d));
                }
            }
            if ok {
                self.cells[r][c] = Some(x);
                if self.solve(c, r + 1) {
                    return true;
                }
            }
            for (slot, d) in diffs {
                self.used[slot][d as usize] -= 1;
            }
            if self.nodes > self.budget {
                return false;
            }
        }
        self.cells[r][c] = Some(0);
        false
    }
}
