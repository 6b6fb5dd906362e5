//! Direct allocation constructions: mutually orthogonal Latin rectangles,
//! starter-block expansion, and extra rounds from splitting groups.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::designs::{Allocation, Block, Round};
use crate::error::invalid;
use crate::latin::LatinSquare;
use crate::{Error, Result};

/// Supplies a (n, k) allocation on points `0..n`, used to split groups of
/// size n into extra rounds.
pub trait SplitProvider {
    fn split(&self, n: u32, k: u32) -> Option<Allocation>;
}

/// One round of consecutive blocks. Optimal when n = k or n/k < k, since a
/// second round would need two points of some block to meet again.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrivialSplit;

impl SplitProvider for TrivialSplit {
    fn split(&self, n: u32, k: u32) -> Option<Allocation> {
        single_round(n, k)
    }
}

/// Whether a single round is optimal for (n, k).
pub fn single_round_is_optimal(n: u32, k: u32) -> bool {
    k > 0 && n.is_multiple_of(k) && (n == k || n / k < k)
}

/// `{0..k}, {k..2k}, …` as one round.
pub fn single_round(n: u32, k: u32) -> Option<Allocation> {
    if k == 0 || !n.is_multiple_of(k) || n == 0 {
        return None;
    }
    let round: Round = (0..n / k).map(|b| (b * k..(b + 1) * k).collect()).collect();
    Some(Allocation::from_rounds(vec![round]))
}

/// Appends one round per round of `split`, mapping split point i to the i-th
/// point of every group. Groups must share a size g with k | g, and `split`
/// must be a (g, k) allocation.
pub fn augment_group_rounds(a: &Allocation, split: &Allocation) -> Result<Allocation> {
    let g = a
        .groups
        .first()
        .map(|x| x.len())
        .ok_or_else(|| invalid!("allocation has no groups"))?;
    if a.groups.iter().any(|x| x.len() != g) {
        return Err(invalid!("groups differ in size"));
    }
    let k = split.k1() as usize;
    if k == 0 || g % k != 0 || split.v as usize != g || split.sizes.len() != 1 {
        return Err(invalid!("need a ({g}, k) allocation with k dividing {g}"));
    }
    let labels = split.points();
    let pos = |p: u32| labels.binary_search(&p).expect("split point");
    let mut out = a.clone();
    for round in &split.rounds {
        let new_round: Round = a
            .groups
            .iter()
            .flat_map(|grp| {
                round
                    .iter()
                    .map(move |b| b.iter().map(|&p| grp[pos(p)]).collect::<Block>())
            })
            .collect();
        out.rounds.push(new_round);
    }
    out.group_rounds += split.rounds.len();
    out.columns.clear();
    out.canonicalize();
    Ok(out)
}

fn split_groups(a: Allocation, n: u32, k: u32, provider: &dyn SplitProvider) -> Result<Allocation> {
    if !n.is_multiple_of(k) {
        return Ok(a);
    }
    let split = provider
        .split(n, k)
        .ok_or_else(|| Error::DataRequired(format!("({n},{k}) allocation")))?;
    augment_group_rounds(&a, &split)
}

/// Sharma–Das rounds on the k × n array G[i][j] = n·i + j: the columns of
/// G, then one round per square whose blocks collect the cells of the first
/// k rows carrying each symbol. The rows of G are the groups; when k | n
/// they are split into extra rounds by `provider`.
pub fn molrs(k: u32, n: u32, squares: &[LatinSquare], provider: &dyn SplitProvider) -> Result<Allocation> {
    if k == 0 || k > n {
        return Err(invalid!("need 1 ≤ k ≤ n, got k={k} n={n}"));
    }
    if let Some(s) = squares.iter().find(|s| s.order() != n as usize) {
        return Err(Error::OrderMismatch(s.order(), n as usize));
    }
    let cell = |i: u32, j: u32| n * i + j;
    let mut rounds: Vec<Round> = vec![(0..n).map(|j| (0..k).map(|i| cell(i, j)).collect()).collect()];
    for sq in squares {
        let mut blocks: Round = vec![Vec::with_capacity(k as usize); n as usize];
        for i in 0..k {
            for j in 0..n {
                blocks[sq.get(i as usize, j as usize) as usize].push(cell(i, j));
            }
        }
        rounds.push(blocks);
    }
    let mut a = Allocation::from_rounds(rounds);
    a.groups = (0..k).map(|i| (0..n).map(|j| cell(i, j)).collect()).collect();
    split_groups(a, n, k, provider)
}

/// Starter blocks through 0 in Z_v.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarterSet {
    pub v: u32,
    pub k: u32,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StarterCertificate {
    pub valid: bool,
    pub issues: Vec<String>,
}

/// Checks the three starter conditions exhaustively: every block holds 0 and
/// has distinct residues mod k; blocks meet only in 0; and for any two
/// blocks a cross difference a_i − b_j (mod v) that is a multiple of k
/// arises from only one pair.
pub fn ownsg_verify(s: &StarterSet) -> StarterCertificate {
    let (v, k) = (s.v, s.k);
    let mut issues = Vec::new();
    if k == 0 || v % k != 0 {
        issues.push(format!("k={k} does not divide v={v}"));
        return StarterCertificate { valid: false, issues };
    }
    for (i, b) in s.blocks.iter().enumerate() {
        if b.len() != k as usize || b.iter().any(|&x| x >= v) {
            issues.push(format!("block {i} is not a {k}-subset of Z_{v}"));
            continue;
        }
        if !b.contains(&0) {
            issues.push(format!("block {i} does not contain 0"));
        }
        let mut res: Vec<u32> = b.iter().map(|x| x % k).collect();
        res.sort_unstable();
        res.dedup();
        if res.len() != b.len() {
            issues.push(format!("block {i} has a difference divisible by {k}"));
        }
    }
    for i in 0..s.blocks.len() {
        for j in i + 1..s.blocks.len() {
            let (a, b) = (&s.blocks[i], &s.blocks[j]);
            if a.iter().any(|x| *x != 0 && b.contains(x)) {
                issues.push(format!("blocks {i} and {j} meet outside 0"));
            }
            let mut diffs: Vec<u32> = a
                .iter()
                .flat_map(|&x| b.iter().map(move |&y| (x + v - y) % v))
                .filter(|d| d % k == 0)
                .collect();
            diffs.sort_unstable();
            if diffs.windows(2).any(|w| w[0] == w[1]) {
                issues.push(format!("blocks {i} and {j} repeat a cross difference divisible by {k}"));
            }
        }
    }
    StarterCertificate {
        valid: issues.is_empty(),
        issues,
    }
}

/// Round i develops starter block i by multiples of k modulo v. The residue
/// classes mod k are the groups; when k | v/k they are split into extra
/// rounds by `provider`.
pub fn ownsg_expand(s: &StarterSet, provider: &dyn SplitProvider) -> Result<Allocation> {
    let cert = ownsg_verify(s);
    if !cert.valid {
        return Err(invalid!("starter set fails: {}", cert.issues.join("; ")));
    }
    let (v, k) = (s.v, s.k);
    let g = v / k;
    let rounds: Vec<Round> = s
        .blocks
        .iter()
        .map(|b| (0..g).map(|m| b.iter().map(|&x| (x + k * m) % v).collect()).collect())
        .collect();
    let mut a = if rounds.is_empty() {
        Allocation::empty(v, vec![k], vec![g])
    } else {
        Allocation::from_rounds(rounds)
    };
    a.groups = (0..k).map(|i| (0..g).map(|j| i + j * k).collect()).collect();
    let a = split_groups(a, g, k, provider)?;
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::verify_allocation;
    use crate::latin::constructible_mols;

    #[test]
    fn molrs_36_6_has_three_rounds() {
        let l = constructible_mols(6, 1).unwrap();
        let a = molrs(6, 6, l.squares(), &TrivialSplit).unwrap();
        let c = verify_allocation(&a);
        assert!(c.valid);
        assert_eq!(c.rounds, 3);
        assert_eq!(a.rounds[1][0], vec![0, 7, 16, 23, 26, 33]);
        assert_eq!(a.rounds[2][0], vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(a.group_rounds, 1);
    }

    #[test]
    fn molrs_without_extra_rounds() {
        let l = constructible_mols(5, 4).unwrap();
        let a = molrs(4, 5, l.squares(), &TrivialSplit).unwrap();
        let c = verify_allocation(&a);
        assert!(c.valid && c.rounds == 5 && a.group_rounds == 0);
        let b = molrs(2, 2, &[], &TrivialSplit).unwrap();
        assert_eq!(verify_allocation(&b).rounds, 2);
        let none = molrs(2, 3, &[], &TrivialSplit).unwrap();
        assert_eq!(none.num_rounds(), 1);
    }

    #[test]
    fn starter_conditions() {
        let ok = StarterSet {
            v: 12,
            k: 3,
            blocks: vec![vec![0, 1, 2], vec![0, 4, 8]],
        };
        assert!(ownsg_verify(&ok).valid);
        let a = ownsg_expand(&ok, &TrivialSplit).unwrap();
        assert!(verify_allocation(&a).valid && a.num_rounds() == 2);
        // 1−0 and 2−4 are both 9 mod 12, so {1,2} would meet twice
        let repeat = StarterSet {
            v: 12,
            k: 3,
            blocks: vec![vec![0, 1, 2], vec![0, 4, 5]],
        };
        assert!(ownsg_verify(&repeat)
            .issues
            .iter()
            .any(|i| i.contains("cross difference")));
        let shared = StarterSet {
            v: 12,
            k: 3,
            blocks: vec![vec![0, 1, 5], vec![0, 1, 8]],
        };
        assert!(ownsg_verify(&shared)
            .issues
            .iter()
            .any(|i| i.contains("meet outside 0")));
        let same_residue = StarterSet {
            v: 12,
            k: 3,
            blocks: vec![vec![0, 3, 5]],
        };
        assert!(!ownsg_verify(&same_residue).valid);
    }

    #[test]
    fn augmentation_requires_divisibility() {
        let l = constructible_mols(5, 1).unwrap();
        let a = molrs(3, 5, l.squares(), &TrivialSplit).unwrap();
        let split = single_round(6, 3).unwrap();
        assert!(augment_group_rounds(&a, &split).is_err());
    }

    proptest::proptest! {
        #[test]
        fn molrs_round_count(ni in 0usize..6, k in 2u32..8) {
            let n = [5u32, 7, 8, 9, 12, 16][ni];
            proptest::prop_assume!(k <= n);
            let c = crate::latin::constructible_count(n).min(k as usize);
            let l = constructible_mols(n, c).unwrap();
            let a = molrs(k, n, l.squares(), &TrivialSplit).unwrap();
            let extra = usize::from(n.is_multiple_of(k));
            proptest::prop_assert_eq!(a.num_rounds(), c + 1 + extra);
            proptest::prop_assert!(verify_allocation(&a).valid);
        }
    }
}
