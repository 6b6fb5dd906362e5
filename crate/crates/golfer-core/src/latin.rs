//! Latin squares, MOLS sets, MacNeish products and the N(n) lower-bound table.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::invalid;
use crate::gf::{self, Field};
use crate::{Error, Result};

/// An order-n Latin square over symbols `0..n`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatinSquare {
    n: usize,
    cells: Vec<u32>,
}

impl LatinSquare {
    /// Validates the Latin property.
    pub fn new(n: usize, cells: Vec<u32>) -> Result<Self> {
        if cells.len() != n * n {
            return Err(invalid!("expected {} cells, got {}", n * n, cells.len()));
        }
        let s = LatinSquare { n, cells };
        if !s.is_latin() {
            return Err(invalid!("not a Latin square of order {n}"));
        }
        Ok(s)
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid!("rows of a Latin square must all have length {n}"));
        }
        Self::new(n, rows.concat())
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.cells[r * self.n + c]
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.cells[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.cells.chunks(self.n.max(1))
    }

    fn is_latin(&self) -> bool {
        let n = self.n;
        let mut row = vec![0u32; n];
        let mut col = vec![0u32; n];
        for i in 0..n {
            let stamp = i as u32 + 1;
            for j in 0..n {
                let (a, b) = (self.get(i, j) as usize, self.get(j, i) as usize);
                if a >= n || b >= n || row[a] == stamp || col[b] == stamp {
                    return false;
                }
                row[a] = stamp;
                col[b] = stamp;
            }
        }
        true
    }
}

/// Pairwise orthogonal Latin squares of a common order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MolsSet {
    n: usize,
    squares: Vec<LatinSquare>,
}

impl MolsSet {
    /// Checks orders and full pairwise orthogonality.
    pub fn new(n: usize, squares: Vec<LatinSquare>) -> Result<Self> {
        let s = MolsSet { n, squares };
        if s.squares.iter().any(|x| x.order() != n) {
            return Err(invalid!("all squares must have order {n}"));
        }
        if !verify_mols(&s.squares) {
            return Err(invalid!("squares are not mutually orthogonal"));
        }
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn squares(&self) -> &[LatinSquare] {
        &self.squares
    }

    pub fn truncated(mut self, count: usize) -> Self {
        self.squares.truncate(count);
        self
    }
}

/// True iff the superimposed pairs of `a` and `b` are all distinct.
pub fn verify_orthogonal(a: &LatinSquare, b: &LatinSquare) -> Result<bool> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch(a.order(), b.order()));
    }
    let n = a.order();
    let mut seen = vec![false; n * n];
    for (x, y) in a.cells.iter().zip(&b.cells) {
        let slot = &mut seen[*x as usize * n + *y as usize];
        if *slot {
            return Ok(false);
        }
        *slot = true;
    }
    Ok(true)
}

/// Full pairwise scan. Squares of differing order fail.
pub fn verify_mols(squares: &[LatinSquare]) -> bool {
    squares
        .iter()
        .enumerate()
        .all(|(i, a)| a.is_latin() && squares[i + 1..].iter().all(|b| verify_orthogonal(a, b) == Ok(true)))
}

/// The q−1 squares `L_α(a,b) = α·a + b` for α = 1..q−1 in encoded order.
/// GF(2) yields its single square.
pub fn mols_from_field(f: &Field) -> MolsSet {
    let q = f.order() as usize;
    let squares = (1..f.order())
        .map(|alpha| {
            let cells = (0..q * q)
                .map(|i| f.add(f.mul(alpha, (i / q) as u32), (i % q) as u32))
                .collect();
            LatinSquare { n: q, cells }
        })
        .collect();
    MolsSet { n: q, squares }
}

/// Direct product: row `r1·m + r2`, column `c1·m + c2`, symbol `A·m + B`
/// where `m` is the order of `b`. Keeps min(|a|, |b|) squares.
pub fn macneish_product(a: &MolsSet, b: &MolsSet) -> Result<MolsSet> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid!("MacNeish product needs nonempty inputs"));
    }
    let (n, m) = (a.order(), b.order());
    let nm = n * m;
    let squares = a
        .squares
        .iter()
        .zip(&b.squares)
        .map(|(sa, sb)| {
            let mut cells = vec![0u32; nm * nm];
            for r in 0..nm {
                for c in 0..nm {
                    cells[r * nm + c] = sa.get(r / m, c / m) * m as u32 + sb.get(r % m, c % m);
                }
            }
            LatinSquare { n: nm, cells }
        })
        .collect();
    Ok(MolsSet { n: nm, squares })
}

/// Number of MOLS(n) obtainable in-repo: min(p^e − 1) over the prime power
/// factors of n. Unbounded (`usize::MAX`) for n = 1.
pub fn constructible_count(n: u32) -> usize {
    gf::factorize(n)
        .iter()
        .map(|&(p, e)| p.pow(e) as usize - 1)
        .min()
        .unwrap_or(usize::MAX)
}

/// Up to `want` MOLS(n) from fields and MacNeish products, or None when fewer
/// than `want` are constructible. Factors are folded largest first.
pub fn constructible_mols(n: u32, want: usize) -> Option<MolsSet> {
    if n < 2 || constructible_count(n) < want {
        return None;
    }
    let mut factors: Vec<u32> = gf::factorize(n).iter().map(|&(p, e)| p.pow(e)).collect();
    factors.sort_unstable_by(|a, b| b.cmp(a));
    let mut acc: Option<MolsSet> = None;
    for q in factors {
        let f = Field::of_order(q).expect("prime power");
        let next = mols_from_field(&f).truncated(want.max(1));
        acc = Some(match acc {
            None => next,
            Some(a) => macneish_product(&a, &next).expect("nonempty"),
        });
    }
    acc.map(|s| s.truncated(want))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    Literature,
    MacNeish,
    PrimePower,
}

/// Known lower bounds on N(n) for non-prime-power n ≤ 100.
#[rustfmt::skip]
pub const N_BOUND_TABLE: &[(u32, usize, BoundSource)] = &[
    (6, 1, BoundSource::Literature),
    (10, 2, BoundSource::Literature),
    (12, 5, BoundSource::Literature),
    (14, 4, BoundSource::Literature),
    (15, 4, BoundSource::Literature),
    (18, 5, BoundSource::Literature),
    (20, 4, BoundSource::Literature),
    (21, 5, BoundSource::Literature),
    (22, 3, BoundSource::Literature),
    (24, 7, BoundSource::Literature),
    (26, 4, BoundSource::Literature),
    (28, 5, BoundSource::Literature),
    (30, 4, BoundSource::Literature),
    (33, 5, BoundSource::Literature),
    (34, 4, BoundSource::Literature),
    (35, 6, BoundSource::Literature),
    (36, 8, BoundSource::Literature),
    (38, 4, BoundSource::Literature),
    (39, 5, BoundSource::Literature),
    (40, 7, BoundSource::Literature),
    (42, 5, BoundSource::Literature),
    (44, 5, BoundSource::Literature),
    (45, 6, BoundSource::Literature),
    (46, 4, BoundSource::Literature),
    (48, 10, BoundSource::Literature),
    (50, 6, BoundSource::Literature),
    (51, 5, BoundSource::Literature),
    (52, 5, BoundSource::Literature),
    (54, 8, BoundSource::Literature),
    (55, 6, BoundSource::Literature),
    (56, 7, BoundSource::Literature),
    (57, 7, BoundSource::Literature),
    (58, 5, BoundSource::Literature),
    (60, 5, BoundSource::Literature),
    (62, 5, BoundSource::Literature),
    (63, 8, BoundSource::Literature),
    (65, 7, BoundSource::Literature),
    (66, 5, BoundSource::Literature),
    (68, 5, BoundSource::Literature),
    (69, 6, BoundSource::Literature),
    (70, 6, BoundSource::Literature),
    (72, 7, BoundSource::MacNeish),
    (74, 5, BoundSource::Literature),
    (75, 7, BoundSource::Literature),
    (76, 6, BoundSource::Literature),
    (77, 6, BoundSource::MacNeish),
    (78, 6, BoundSource::Literature),
    (80, 9, BoundSource::Literature),
    (82, 8, BoundSource::Literature),
    (84, 6, BoundSource::Literature),
    (85, 6, BoundSource::Literature),
    (86, 6, BoundSource::Literature),
    (87, 6, BoundSource::Literature),
    (88, 7, BoundSource::MacNeish),
    (90, 6, BoundSource::Literature),
    (91, 7, BoundSource::Literature),
    (92, 6, BoundSource::Literature),
    (93, 6, BoundSource::Literature),
    (94, 6, BoundSource::Literature),
    (95, 6, BoundSource::Literature),
    (96, 10, BoundSource::Literature),
    (98, 6, BoundSource::Literature),
    (99, 8, BoundSource::MacNeish),
    (100, 8, BoundSource::Literature),
];

/// Lookup over the bundled bound table with prime-power and MacNeish fallbacks.
#[derive(Debug, Clone, Default)]
pub struct NBoundTable {
    extra: Vec<(u32, usize, BoundSource)>,
}

impl NBoundTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or improves an entry. Lower values than the current bound are ignored.
    pub fn improve(&mut self, n: u32, bound: usize, source: BoundSource) {
        self.extra.push((n, bound, source));
    }

    pub fn entry(&self, n: u32) -> Option<(usize, BoundSource)> {
        N_BOUND_TABLE
            .iter()
            .chain(&self.extra)
            .filter(|e| e.0 == n)
            .map(|e| (e.1, e.2))
            .max_by_key(|e| e.0)
    }

    /// max(table, n−1 for prime powers, MacNeish bound). Zero for n < 2.
    pub fn lower_bound(&self, n: u32) -> usize {
        if n < 2 {
            return 0;
        }
        let pp = if gf::prime_power(n).is_some() {
            n as usize - 1
        } else {
            0
        };
        let table = self.entry(n).map_or(0, |e| e.0);
        pp.max(table).max(constructible_count(n))
    }
}

/// `NBoundTable::new().lower_bound(n)`.
pub fn n_lower_bound(n: u32) -> usize {
    NBoundTable::new().lower_bound(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_mols(q: u32) -> MolsSet {
        mols_from_field(&Field::of_order(q).unwrap())
    }

    #[test]
    fn field_mols_counts_and_validity() {
        for q in [2u32, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
            let m = field_mols(q);
            assert_eq!(m.len(), q as usize - 1);
            assert!(verify_mols(m.squares()), "q={q}");
        }
    }

    #[test]
    fn self_orthogonality_fails() {
        let m = field_mols(3);
        assert_eq!(verify_orthogonal(&m.squares()[0], &m.squares()[1]), Ok(true));
        assert_eq!(verify_orthogonal(&m.squares()[0], &m.squares()[0]), Ok(false));
        let six = constructible_mols(6, 1).unwrap();
        assert_eq!(verify_orthogonal(&six.squares()[0], &six.squares()[0]), Ok(false));
        assert_eq!(
            verify_orthogonal(&m.squares()[0], &field_mols(4).squares()[0]),
            Err(Error::OrderMismatch(3, 4))
        );
    }

    #[test]
    fn order_six_square_is_the_product_of_gf3_and_gf2() {
        let l0 = constructible_mols(6, 1).unwrap();
        let expected: [[u32; 6]; 6] = [
            [0, 1, 2, 3, 4, 5],
            [1, 0, 3, 2, 5, 4],
            [2, 3, 4, 5, 0, 1],
            [3, 2, 5, 4, 1, 0],
            [4, 5, 0, 1, 2, 3],
            [5, 4, 1, 0, 3, 2],
        ];
        for (r, row) in expected.iter().enumerate() {
            assert_eq!(l0.squares()[0].row(r), row);
        }
    }

    #[test]
    fn macneish_examples() {
        let twelve = macneish_product(&field_mols(4), &field_mols(3)).unwrap();
        assert_eq!((twelve.order(), twelve.len()), (12, 2));
        assert!(verify_mols(twelve.squares()));
        let sq = macneish_product(&field_mols(5), &field_mols(5)).unwrap();
        assert_eq!((sq.order(), sq.len()), (25, 4));
        assert!(verify_mols(sq.squares()));
        let one = field_mols(3).truncated(1);
        let nine = macneish_product(&one, &one).unwrap();
        assert_eq!(nine.len(), 1);
        assert!(verify_mols(nine.squares()));
        let empty = field_mols(3).truncated(0);
        assert!(macneish_product(&empty, &one).is_err());
    }

    #[test]
    fn bounds() {
        assert_eq!(n_lower_bound(14), 4);
        assert_eq!(n_lower_bound(8), 7);
        assert_eq!(n_lower_bound(12), 5);
        assert_eq!(n_lower_bound(6), 1);
        assert_eq!(n_lower_bound(10), 2);
        assert_eq!(constructible_count(12), 2);
        assert_eq!(constructible_count(35), 4);
        for n in 2..=100u32 {
            let b = n_lower_bound(n);
            if gf::prime_power(n).is_some() {
                assert_eq!(b, n as usize - 1);
            } else if n != 2 && n != 6 {
                assert!(b >= 1, "n={n}");
            }
            assert!(b >= constructible_count(n));
        }
    }

    #[test]
    fn table_improvements_only_raise() {
        let mut t = NBoundTable::new();
        t.improve(10, 1, BoundSource::Literature);
        assert_eq!(t.lower_bound(10), 2);
        t.improve(10, 3, BoundSource::Literature);
        assert_eq!(t.lower_bound(10), 3);
    }

    #[test]
    fn rejects_non_latin() {
        assert!(LatinSquare::from_rows(&[vec![0, 1], vec![0, 1]]).is_err());
        assert!(LatinSquare::from_rows(&[vec![0, 1], vec![1, 0]]).is_ok());
    }

    proptest::proptest! {
        #[test]
        fn constructible_sets_verify(n in 2u32..40) {
            let c = constructible_count(n).min(4);
            if let Some(m) = constructible_mols(n, c) {
                proptest::prop_assert_eq!(m.len(), c);
                proptest::prop_assert!(verify_mols(m.squares()));
            }
        }
    }
}
