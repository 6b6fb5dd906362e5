//! Allocations and grouped designs, their verifiers, and conversions between
//! MOLS, orthogonal arrays, transversal designs and rounds.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::diffmat::OrthArray;
use crate::error::invalid;
use crate::gf::{self, Field};
use crate::latin::LatinSquare;
use crate::{Error, Result};

pub type Block = Vec<u32>;
pub type Round = Vec<Block>;

/// Rounds of disjoint blocks over `v` points.
///
/// Labels need not be contiguous; the point set is whatever round 0 covers.
/// The metadata fields describe structure that transformations rely on:
/// `groups` are cliques never co-blocked by the base rounds, `group_rounds`
/// counts trailing rounds built from those groups, and `columns[c][r]` is the
/// index of the block in round `r` belonging to parallel column `c`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    pub v: u32,
    pub sizes: Vec<u32>,
    pub counts: Vec<u32>,
    pub rounds: Vec<Round>,
    pub groups: Vec<Vec<u32>>,
    pub group_rounds: usize,
    pub columns: Vec<Vec<usize>>,
}

impl Allocation {
    /// Header inferred from round 0. Panics on an empty round list; use
    /// [`Allocation::empty`] for that.
    pub fn from_rounds(rounds: Vec<Round>) -> Self {
        let first = rounds.first().expect("at least one round");
        let v = first.iter().map(|b| b.len() as u32).sum();
        let mut sizes: Vec<u32> = first.iter().map(|b| b.len() as u32).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let counts = sizes
            .iter()
            .map(|&s| first.iter().filter(|b| b.len() as u32 == s).count() as u32)
            .collect();
        let mut a = Allocation {
            v,
            sizes,
            counts,
            rounds,
            ..Default::default()
        };
        a.canonicalize();
        a
    }

    pub fn empty(v: u32, sizes: Vec<u32>, counts: Vec<u32>) -> Self {
        Allocation {
            v,
            sizes,
            counts,
            ..Default::default()
        }
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Smallest block size.
    pub fn k1(&self) -> u32 {
        self.sizes.first().copied().unwrap_or(0)
    }

    /// Rounds not built from the groups.
    pub fn base_rounds(&self) -> usize {
        self.rounds.len().saturating_sub(self.group_rounds)
    }

    /// Sorted point labels of round 0, or `0..v` when there are no rounds.
    pub fn points(&self) -> Vec<u32> {
        match self.rounds.first() {
            Some(r) => {
                let mut p: Vec<u32> = r.iter().flatten().copied().collect();
                p.sort_unstable();
                p
            }
            None => (0..self.v).collect(),
        }
    }

    /// Sorts points within blocks and blocks by first point, keeping round
    /// order. Column block indices follow their blocks.
    pub fn canonicalize(&mut self) {
        for (r, round) in self.rounds.iter_mut().enumerate() {
            for b in round.iter_mut() {
                b.sort_unstable();
            }
            let mut order: Vec<usize> = (0..round.len()).collect();
            order.sort_by(|&x, &y| round[x].cmp(&round[y]));
            let mut new_pos = vec![0; round.len()];
            for (new, &old) in order.iter().enumerate() {
                new_pos[old] = new;
            }
            let sorted: Round = order.iter().map(|&i| core::mem::take(&mut round[i])).collect();
            *round = sorted;
            for col in self.columns.iter_mut() {
                if let Some(slot) = col.get_mut(r) {
                    *slot = new_pos[*slot];
                }
            }
        }
        for g in self.groups.iter_mut() {
            g.sort_unstable();
        }
    }

    /// Relabels every point through `f`, then canonicalizes.
    pub fn relabel(&self, f: impl Fn(u32) -> u32) -> Allocation {
        let mut out = self.clone();
        for round in out.rounds.iter_mut() {
            for b in round.iter_mut() {
                b.iter_mut().for_each(|p| *p = f(*p));
            }
        }
        for g in out.groups.iter_mut() {
            g.iter_mut().for_each(|p| *p = f(*p));
        }
        out.canonicalize();
        out
    }
}

/// ⌊(v−1)/(k−1)⌋.
pub fn max_rounds(v: u32, k: u32) -> Result<u32> {
    if k < 2 {
        return Err(invalid!("block size must be at least 2, got {k}"));
    }
    Ok(v.saturating_sub(1) / (k - 1))
}

/// First `r` rounds. Group rounds and columns are trimmed to match.
pub fn truncate(a: &Allocation, r: usize) -> Result<Allocation> {
    if r > a.rounds.len() {
        return Err(invalid!("cannot keep {r} of {} rounds", a.rounds.len()));
    }
    let mut out = a.clone();
    out.rounds.truncate(r);
    out.group_rounds = r.saturating_sub(a.base_rounds());
    for c in out.columns.iter_mut() {
        c.truncate(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Header(String),
    /// A round misses or repeats points relative to round 0.
    Coverage {
        round: usize,
        detail: String,
    },
    BlockSizes {
        round: usize,
    },
    RepeatedPair {
        a: u32,
        b: u32,
        first_round: usize,
        round: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Header(s) => write!(f, "header: {s}"),
            Violation::Coverage { round, detail } => write!(f, "round {round}: {detail}"),
            Violation::BlockSizes { round } => write!(f, "round {round}: block sizes do not match the header"),
            Violation::RepeatedPair {
                a,
                b,
                first_round,
                round,
            } => {
                write!(
                    f,
                    "pair {{{a},{b}}} meets in round {first_round} and again in round {round}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationCertificate {
    pub valid: bool,
    pub rounds: usize,
    pub max_bound: u32,
    pub is_maximal: bool,
    pub pairs_covered: usize,
    pub total_pairs: usize,
    pub missing_pairs: Vec<(u32, u32)>,
    pub violations: Vec<Violation>,
}

/// Triangular table of pair slots over sorted labels.
struct PairTable {
    labels: Vec<u32>,
    slots: Vec<u32>,
}

impl PairTable {
    fn new(labels: Vec<u32>) -> Self {
        let n = labels.len();
        PairTable {
            labels,
            slots: vec![0; n * n.saturating_sub(1) / 2],
        }
    }

    fn idx(&self, p: u32) -> Option<usize> {
        self.labels.binary_search(&p).ok()
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        j * (j - 1) / 2 + i
    }

    /// Marks the pair with `tag` (nonzero) and returns the previous tag.
    fn mark(&mut self, i: usize, j: usize, tag: u32) -> u32 {
        let s = self.slot(i, j);
        core::mem::replace(&mut self.slots[s], tag)
    }

    fn get(&self, i: usize, j: usize) -> u32 {
        self.slots[self.slot(i, j)]
    }
}

/// Exhaustive check of an allocation against its header and the
/// pair-at-most-once rule. The bound uses the smaller block size.
pub fn verify_allocation(a: &Allocation) -> AllocationCertificate {
    let mut violations = Vec::new();
    let points = a.points();
    let mut uniq = points.clone();
    uniq.dedup();
    if uniq.len() != points.len() {
        violations.push(Violation::Coverage {
            round: 0,
            detail: "a point appears twice".into(),
        });
    }
    if uniq.len() != a.v as usize {
        violations.push(Violation::Header(format!(
            "v={} but rounds cover {} points",
            a.v,
            uniq.len()
        )));
    }
    let header_ok = match (a.sizes.as_slice(), a.counts.as_slice()) {
        ([k], [m]) => k * m == a.v,
        ([k1, k2], [m1, m2]) => *k2 == k1 + 1 && k1 * m1 + k2 * m2 == a.v,
        _ => false,
    };
    if !header_ok || a.k1() < 2 {
        violations.push(Violation::Header("sizes and counts do not account for v".into()));
    }
    let mut want_sizes: Vec<u32> = Vec::new();
    for (s, c) in a.sizes.iter().zip(&a.counts) {
        want_sizes.extend(core::iter::repeat_n(*s, *c as usize));
    }
    let mut table = PairTable::new(uniq.clone());
    for (r, round) in a.rounds.iter().enumerate() {
        let mut got: Vec<u32> = round.iter().map(|b| b.len() as u32).collect();
        got.sort_unstable();
        if got != want_sizes {
            violations.push(Violation::BlockSizes { round: r });
        }
        let mut covered: Vec<u32> = round.iter().flatten().copied().collect();
        covered.sort_unstable();
        if covered != points {
            violations.push(Violation::Coverage {
                round: r,
                detail: "blocks do not partition the point set".into(),
            });
        }
        for b in round {
            let idx: Vec<Option<usize>> = b.iter().map(|&p| table.idx(p)).collect();
            for x in 0..b.len() {
                for y in x + 1..b.len() {
                    let (Some(i), Some(j)) = (idx[x], idx[y]) else { continue };
                    if i == j {
                        continue;
                    }
                    let prev = table.mark(i, j, r as u32 + 1);
                    if prev != 0 {
                        let (p, q) = (b[x].min(b[y]), b[x].max(b[y]));
                        violations.push(Violation::RepeatedPair {
                            a: p,
                            b: q,
                            first_round: prev as usize - 1,
                            round: r,
                        });
                    }
                }
            }
        }
    }
    let n = uniq.len();
    let mut missing = Vec::new();
    for j in 1..n {
        for i in 0..j {
            if table.get(i, j) == 0 {
                missing.push((uniq[i], uniq[j]));
            }
        }
    }
    let total = n * n.saturating_sub(1) / 2;
    let max_bound = max_rounds(a.v, a.k1().max(2)).unwrap_or(0);
    let valid = violations.is_empty();
    AllocationCertificate {
        valid,
        rounds: a.rounds.len(),
        max_bound,
        is_maximal: valid && a.rounds.len() as u32 == max_bound,
        pairs_covered: total - missing.len(),
        total_pairs: total,
        missing_pairs: missing,
        violations,
    }
}

/// Blocks plus a partition of the points into groups, an optional hole and an
/// optional resolution into parallel classes. Points are `0..v`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupedDesign {
    pub v: u32,
    pub k: u32,
    pub blocks: Vec<Block>,
    pub groups: Vec<Vec<u32>>,
    pub hole: Vec<u32>,
    pub resolution: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BibdDesign {
    pub v: u32,
    pub k: u32,
    pub blocks: Vec<Block>,
    pub resolution: Option<Vec<Vec<usize>>>,
}

/// Parallel classes whose blocks have a common size within each class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrdDesign {
    pub v: u32,
    pub classes: Vec<Vec<Block>>,
}

impl UrdDesign {
    pub fn class_sizes(&self) -> Vec<u32> {
        self.classes
            .iter()
            .map(|c| c.first().map_or(0, |b| b.len() as u32))
            .collect()
    }
}

/// Outcome of a design verifier. `issues` is empty exactly when valid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DesignCertificate {
    pub valid: bool,
    pub issues: Vec<String>,
}

impl DesignCertificate {
    fn from_issues(issues: Vec<String>) -> Self {
        DesignCertificate {
            valid: issues.is_empty(),
            issues,
        }
    }
}

/// Dense pair counts over `0..v`.
fn pair_counts(v: u32, blocks: &[Block], issues: &mut Vec<String>) -> Vec<u16> {
    let v = v as usize;
    let mut counts = vec![0u16; v * v];
    for b in blocks {
        for (x, &p) in b.iter().enumerate() {
            if p as usize >= v {
                issues.push(format!("point {p} out of range"));
                continue;
            }
            for &q in &b[x + 1..] {
                if q as usize >= v || p == q {
                    continue;
                }
                let (i, j) = (p.min(q) as usize, p.max(q) as usize);
                counts[i * v + j] = counts[i * v + j].saturating_add(1);
            }
        }
    }
    counts
}

fn check_partition(v: u32, parts: &[Vec<u32>], what: &str, issues: &mut Vec<String>) -> Vec<usize> {
    let mut owner = vec![usize::MAX; v as usize];
    for (g, part) in parts.iter().enumerate() {
        for &p in part {
            match owner.get_mut(p as usize) {
                None => issues.push(format!("{what} {g} has out-of-range point {p}")),
                Some(o) if *o != usize::MAX => issues.push(format!("point {p} lies in two {what}s")),
                Some(o) => *o = g,
            }
        }
    }
    if owner.contains(&usize::MAX) {
        issues.push(format!("{what}s do not cover every point"));
    }
    owner
}

fn check_resolution(v: u32, blocks: &[Block], res: &[Vec<usize>], issues: &mut Vec<String>) {
    let mut used = vec![false; blocks.len()];
    for (c, class) in res.iter().enumerate() {
        let mut seen = vec![false; v as usize];
        for &bi in class {
            let Some(b) = blocks.get(bi) else {
                issues.push(format!("class {c} names missing block {bi}"));
                continue;
            };
            if core::mem::replace(&mut used[bi], true) {
                issues.push(format!("block {bi} lies in two classes"));
            }
            for &p in b {
                if let Some(s) = seen.get_mut(p as usize) {
                    if core::mem::replace(s, true) {
                        issues.push(format!("class {c} covers point {p} twice"));
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            issues.push(format!("class {c} is not a parallel class"));
        }
    }
    if used.iter().any(|u| !u) {
        issues.push("resolution omits some blocks".into());
    }
}

fn check_block_sizes(k: u32, blocks: &[Block], issues: &mut Vec<String>) {
    if let Some(b) = blocks.iter().find(|b| b.len() as u32 != k) {
        issues.push(format!("block {b:?} does not have size {k}"));
    }
}

/// Every pair in exactly one block or one group, never both. With a
/// resolution, classes must be parallel and groups of equal size.
pub fn verify_gdd(d: &GroupedDesign) -> DesignCertificate {
    let mut issues = Vec::new();
    check_block_sizes(d.k, &d.blocks, &mut issues);
    let owner = check_partition(d.v, &d.groups, "group", &mut issues);
    let counts = pair_counts(d.v, &d.blocks, &mut issues);
    let v = d.v as usize;
    for i in 0..v {
        for j in i + 1..v {
            let same = owner[i] != usize::MAX && owner[i] == owner[j];
            let c = counts[i * v + j];
            if c != u16::from(!same) {
                issues.push(format!(
                    "pair {{{i},{j}}} lies in {c} blocks{}",
                    if same { " and a group" } else { "" }
                ));
                break;
            }
        }
    }
    if let Some(res) = &d.resolution {
        check_resolution(d.v, &d.blocks, res, &mut issues);
        if d.groups.windows(2).any(|w| w[0].len() != w[1].len()) {
            issues.push("resolvable design with groups of unequal size".into());
        }
    }
    DesignCertificate::from_issues(issues)
}

/// A GDD with k groups of size v/k.
pub fn verify_td(d: &GroupedDesign) -> DesignCertificate {
    let mut cert = verify_gdd(d);
    if d.k == 0 || d.groups.len() != d.k as usize || d.groups.iter().any(|g| g.len() as u32 * d.k != d.v) {
        cert.issues
            .push(format!("expected {} groups of size {}", d.k, d.v / d.k.max(1)));
    }
    if !d.hole.is_empty() {
        cert.issues.push("a transversal design has no hole".into());
    }
    cert.valid = cert.issues.is_empty();
    cert
}

/// ITD(n₁, n₂; k): k groups of size n₁, a hole meeting each group in n₂
/// points; pairs inside a group or inside the hole are in no block, all other
/// pairs in exactly one.
pub fn verify_itd(d: &GroupedDesign) -> DesignCertificate {
    let mut issues = Vec::new();
    let k = d.k as usize;
    check_block_sizes(d.k, &d.blocks, &mut issues);
    let owner = check_partition(d.v, &d.groups, "group", &mut issues);
    if d.groups.len() != k || d.groups.iter().any(|g| g.len() * k != d.v as usize) {
        issues.push(format!("expected {k} groups of equal size"));
    }
    let v = d.v as usize;
    let mut in_hole = vec![false; v];
    for &h in &d.hole {
        match in_hole.get_mut(h as usize) {
            Some(x) => *x = true,
            None => issues.push(format!("hole point {h} out of range")),
        }
    }
    if !d.groups.is_empty() {
        let per: Vec<usize> = d
            .groups
            .iter()
            .map(|g| g.iter().filter(|&&p| in_hole[p as usize]).count())
            .collect();
        if per.windows(2).any(|w| w[0] != w[1]) || per[0] * k != d.hole.len() {
            issues.push("hole does not meet every group equally".into());
        }
    }
    let counts = pair_counts(d.v, &d.blocks, &mut issues);
    'outer: for i in 0..v {
        for j in i + 1..v {
            let same = owner[i] != usize::MAX && owner[i] == owner[j];
            let want = u16::from(!same && !(in_hole[i] && in_hole[j]));
            if counts[i * v + j] != want {
                issues.push(format!(
                    "pair {{{i},{j}}} lies in {} blocks, expected {want}",
                    counts[i * v + j]
                ));
                break 'outer;
            }
        }
    }
    DesignCertificate::from_issues(issues)
}

/// BIBD with λ=1, checking r=(v−1)/(k−1) and b=vr/k, plus the resolution.
pub fn verify_bibd(d: &BibdDesign) -> DesignCertificate {
    let mut issues = Vec::new();
    check_block_sizes(d.k, &d.blocks, &mut issues);
    let (v, k) = (d.v as u64, d.k as u64);
    if k < 2 || (v - 1) % (k - 1) != 0 {
        issues.push(format!("k-1 does not divide v-1 for v={v}, k={k}"));
    } else {
        let r = (v - 1) / (k - 1);
        if (v * r) % k != 0 || d.blocks.len() as u64 != v * r / k {
            issues.push(format!(
                "expected {} blocks, found {}",
                v * r / k.max(1),
                d.blocks.len()
            ));
        }
    }
    let counts = pair_counts(d.v, &d.blocks, &mut issues);
    let n = d.v as usize;
    'outer: for i in 0..n {
        for j in i + 1..n {
            if counts[i * n + j] != 1 {
                issues.push(format!("pair {{{i},{j}}} lies in {} blocks", counts[i * n + j]));
                break 'outer;
            }
        }
    }
    if let Some(res) = &d.resolution {
        check_resolution(d.v, &d.blocks, res, &mut issues);
    }
    DesignCertificate::from_issues(issues)
}

/// Each class uniform and parallel; every pair at most once overall.
/// Returns the certificate and whether every pair is covered (a PBD).
pub fn verify_urd(d: &UrdDesign) -> (DesignCertificate, bool) {
    let mut issues = Vec::new();
    for (c, class) in d.classes.iter().enumerate() {
        let s = class.first().map_or(0, |b| b.len());
        if class.iter().any(|b| b.len() != s) {
            issues.push(format!("class {c} mixes block sizes"));
        }
        let mut seen = vec![false; d.v as usize];
        for &p in class.iter().flatten() {
            match seen.get_mut(p as usize) {
                Some(x) if !*x => *x = true,
                _ => issues.push(format!("class {c}: point {p} repeated or out of range")),
            }
        }
        if seen.iter().any(|x| !x) {
            issues.push(format!("class {c} is not parallel"));
        }
    }
    let blocks: Vec<Block> = d.classes.iter().flatten().cloned().collect();
    let counts = pair_counts(d.v, &blocks, &mut issues);
    let over = counts.iter().any(|&c| c > 1);
    if over {
        issues.push("some pair is covered twice".into());
    }
    let n = d.v as usize;
    let pbd = (0..n).all(|i| (i + 1..n).all(|j| counts[i * n + j] == 1));
    (DesignCertificate::from_issues(issues), pbd)
}

/// TD(g+2, n) from g MOLS(n): block (r, c) is {r, n + c, 2n + L₁(r,c), …}.
pub fn td_from_mols(n: u32, squares: &[LatinSquare]) -> Result<GroupedDesign> {
    if let Some(s) = squares.iter().find(|s| s.order() != n as usize) {
        return Err(Error::OrderMismatch(s.order(), n as usize));
    }
    let k = squares.len() as u32 + 2;
    let mut blocks = Vec::with_capacity((n * n) as usize);
    for r in 0..n {
        for c in 0..n {
            let mut b = vec![r, n + c];
            for (i, s) in squares.iter().enumerate() {
                b.push((i as u32 + 2) * n + s.get(r as usize, c as usize));
            }
            blocks.push(b);
        }
    }
    let groups = (0..k).map(|i| (i * n..(i + 1) * n).collect()).collect();
    Ok(GroupedDesign {
        v: k * n,
        k,
        blocks,
        groups,
        hole: Vec::new(),
        resolution: None,
    })
}

/// RTD(k, n) from TD(k+1, n): drops the last group and classes each block by
/// the point it lost, in group order.
pub fn rtd_from_td(t: &GroupedDesign) -> Result<GroupedDesign> {
    let cert = verify_td(t);
    if !cert.valid {
        return Err(invalid!("not a transversal design: {}", cert.issues.join("; ")));
    }
    let split = split_last_group(t);
    let n = t.v / t.k;
    let mut blocks = Vec::new();
    let mut classes = Vec::new();
    for class in split.classes {
        let start = blocks.len();
        blocks.extend(class);
        classes.push((start..blocks.len()).collect());
    }
    Ok(GroupedDesign {
        v: (t.k - 1) * n,
        k: t.k - 1,
        blocks,
        groups: relabel_groups(&t.groups[..t.groups.len() - 1], &split.relabel),
        hole: Vec::new(),
        resolution: Some(classes),
    })
}

struct LastGroupSplit {
    /// One class per removed point, in the removed group's order.
    classes: Vec<Vec<Block>>,
    /// Maps old labels to `0..v'` over the remaining points, order preserving.
    relabel: Vec<u32>,
}

fn split_last_group(d: &GroupedDesign) -> LastGroupSplit {
    let last = d.groups.last().cloned().unwrap_or_default();
    let mut removed = vec![usize::MAX; d.v as usize];
    for (i, &p) in last.iter().enumerate() {
        removed[p as usize] = i;
    }
    let mut relabel = vec![u32::MAX; d.v as usize];
    let mut next = 0;
    for p in 0..d.v as usize {
        if removed[p] == usize::MAX {
            relabel[p] = next;
            next += 1;
        }
    }
    let mut classes = vec![Vec::new(); last.len()];
    for b in &d.blocks {
        let Some(&cut) = b.iter().find(|&&p| removed[p as usize] != usize::MAX) else {
            continue;
        };
        let mut nb: Block = b.iter().filter(|&&p| p != cut).map(|&p| relabel[p as usize]).collect();
        nb.sort_unstable();
        classes[removed[cut as usize]].push(nb);
    }
    for c in classes.iter_mut() {
        c.sort();
    }
    LastGroupSplit { classes, relabel }
}

fn relabel_groups(groups: &[Vec<u32>], relabel: &[u32]) -> Vec<Vec<u32>> {
    groups
        .iter()
        .map(|g| g.iter().map(|&p| relabel[p as usize]).collect())
        .collect()
}

/// Complete and partial classes of an RITD, with points relabelled to `0..v'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItdRounds {
    pub v: u32,
    pub complete: Vec<Round>,
    pub partial: Vec<Round>,
    pub groups: Vec<Vec<u32>>,
    pub hole: Vec<u32>,
}

impl ItdRounds {
    /// The complete classes as an allocation with the groups as unused cliques.
    pub fn allocation(&self) -> Allocation {
        let k = self
            .complete
            .first()
            .and_then(|r| r.first())
            .map_or(0, |b| b.len() as u32);
        let mut a = if self.complete.is_empty() {
            Allocation::empty(self.v, vec![k], vec![0])
        } else {
            Allocation::from_rounds(self.complete.clone())
        };
        a.groups = self.groups.clone();
        a.canonicalize();
        a
    }
}

/// Removes the last group of an ITD(n₁, n₂; k+1). Classes of removed points
/// outside the hole are complete; those inside are partial.
pub fn rounds_from_itd(d: &GroupedDesign) -> Result<ItdRounds> {
    let cert = verify_itd(d);
    if !cert.valid {
        return Err(invalid!(
            "not an incomplete transversal design: {}",
            cert.issues.join("; ")
        ));
    }
    let last = d.groups.last().cloned().unwrap_or_default();
    let split = split_last_group(d);
    let hole: BTreeSet<u32> = d.hole.iter().copied().collect();
    let (mut complete, mut partial) = (Vec::new(), Vec::new());
    for (p, class) in last.iter().zip(split.classes) {
        if hole.contains(p) {
            partial.push(class);
        } else {
            complete.push(class);
        }
    }
    let new_hole = d
        .hole
        .iter()
        .filter(|p| !last.contains(p))
        .map(|&p| split.relabel[p as usize])
        .collect();
    Ok(ItdRounds {
        v: d.v - last.len() as u32,
        complete,
        partial,
        groups: relabel_groups(&d.groups[..d.groups.len() - 1], &split.relabel),
        hole: new_hole,
    })
}

/// TD(k, s) with point (a_ij, i) labelled i·s + a_ij and groups X×{i}.
pub fn td_from_oa(oa: &OrthArray) -> GroupedDesign {
    let (k, s) = (oa.k as u32, oa.s);
    let blocks = (0..oa.columns())
        .map(|j| (0..oa.k).map(|i| i as u32 * s + oa.cells[i][j]).collect())
        .collect();
    let groups = (0..k).map(|i| (i * s..(i + 1) * s).collect()).collect();
    GroupedDesign {
        v: k * s,
        k,
        blocks,
        groups,
        hole: Vec::new(),
        resolution: None,
    }
}

/// Inverse of [`td_from_oa`]: group index gives the row, the position inside
/// the group gives the symbol. Columns follow block order.
pub fn oa_from_td(t: &GroupedDesign) -> Result<OrthArray> {
    let cert = verify_td(t);
    if !cert.valid {
        return Err(invalid!("not a transversal design: {}", cert.issues.join("; ")));
    }
    let k = t.k as usize;
    let s = t.v / t.k;
    let mut place = vec![(0usize, 0u32); t.v as usize];
    for (g, grp) in t.groups.iter().enumerate() {
        for (x, &p) in grp.iter().enumerate() {
            place[p as usize] = (g, x as u32);
        }
    }
    let mut cells = vec![vec![0u32; t.blocks.len()]; k];
    for (j, b) in t.blocks.iter().enumerate() {
        for &p in b {
            let (g, x) = place[p as usize];
            cells[g][j] = x;
        }
    }
    Ok(OrthArray { k, s, cells })
}

/// Selects which classes of a design become rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector {
    /// Every class of a resolved design.
    All,
    /// URD classes whose blocks have this size.
    BlockSize(u32),
}

pub enum DesignRef<'a> {
    Grouped(&'a GroupedDesign),
    Bibd(&'a BibdDesign),
    Urd(&'a UrdDesign),
}

/// Parallel classes as rounds. Grouped designs pass their groups on as
/// unused cliques; a URD passes on the blocks of its first class of another
/// block size.
pub fn allocation_from_design(d: DesignRef<'_>, sel: Selector) -> Result<Allocation> {
    let classes_of = |blocks: &[Block], res: &Option<Vec<Vec<usize>>>| -> Result<Vec<Round>> {
        let res = res.as_ref().ok_or_else(|| invalid!("design has no resolution"))?;
        Ok(res
            .iter()
            .map(|c| c.iter().map(|&i| blocks[i].clone()).collect())
            .collect())
    };
    let (rounds, groups) = match d {
        DesignRef::Grouped(g) => (classes_of(&g.blocks, &g.resolution)?, g.groups.clone()),
        DesignRef::Bibd(b) => (classes_of(&b.blocks, &b.resolution)?, Vec::new()),
        DesignRef::Urd(u) => {
            let Selector::BlockSize(k) = sel else {
                return Err(invalid!("a URD needs a block-size selector"));
            };
            let sizes = u.class_sizes();
            let rounds: Vec<Round> = u
                .classes
                .iter()
                .zip(&sizes)
                .filter(|(_, &s)| s == k)
                .map(|(c, _)| c.clone())
                .collect();
            let cliques = u
                .classes
                .iter()
                .zip(&sizes)
                .find(|(_, &s)| s != k)
                .map(|(c, _)| c.clone())
                .unwrap_or_default();
            (rounds, cliques)
        }
    };
    if rounds.is_empty() {
        return Err(invalid!("no classes selected"));
    }
    let mut a = Allocation::from_rounds(rounds);
    a.groups = groups;
    a.canonicalize();
    Ok(a)
}

/// The literal necessary condition `v ≡ 1 (mod k−1)` together with integral
/// replication and block counts. The source states the congruence twice; the
/// block-count condition is checked here as the standard intended one.
pub fn bibd_necessary(v: u32, k: u32) -> bool {
    if k < 2 || v < k {
        return false;
    }
    let (v, k) = (v as u64, k as u64);
    (v - 1) % (k - 1) == 0 && (v * (v - 1)) % (k * (k - 1)) == 0
}

/// Pairwise disjoint k-subsets of GF(q)* whose differences cover every
/// nonzero element once. Lexicographic backtracking over encoded elements.
pub fn search_disjoint_df(q: u32, k: u32) -> Result<Vec<Block>> {
    search_disjoint_df_bounded(q, k, u64::MAX)
}

/// [`search_disjoint_df`] giving up with NotFound after `budget` candidate
/// placements.
pub fn search_disjoint_df_bounded(q: u32, k: u32, budget: u64) -> Result<Vec<Block>> {
    let f = Field::of_order(q)?;
    if q.is_multiple_of(2) || q > 200 {
        return Err(invalid!("q must be an odd prime power at most 200"));
    }
    if k < 2 || !(q - 1).is_multiple_of(k * (k - 1)) {
        return Err(invalid!(
            "k(k-1) = {} does not divide q-1 = {}",
            k * (k.saturating_sub(1)),
            q - 1
        ));
    }
    let t = ((q - 1) / (k * (k - 1))) as usize;
    let mut st = DfSearch {
        f: &f,
        k: k as usize,
        t,
        used_pts: vec![false; q as usize],
        used_diff: vec![false; q as usize],
        blocks: Vec::new(),
        budget,
    };
    if st.extend(Vec::new(), 1) {
        Ok(st.blocks)
    } else if st.budget == 0 {
        Err(Error::NotFound(format!(
            "({q},{k},1) difference family search exceeded its budget"
        )))
    } else {
        Err(Error::NotFound(format!("no disjoint ({q},{k},1) difference family")))
    }
}

struct DfSearch<'a> {
    f: &'a Field,
    k: usize,
    t: usize,
    used_pts: Vec<bool>,
    used_diff: Vec<bool>,
    blocks: Vec<Block>,
    budget: u64,
}

impl DfSearch<'_> {
    fn extend(&mut self, cur: Block, from: u32) -> bool {
        if cur.len() == self.k {
            self.blocks.push(cur);
            if self.blocks.len() == self.t {
                return true;
            }
            // next block starts from its own smallest element, above the previous block's first
            let start = self.blocks.last().map_or(1, |b| b[0] + 1);
            if self.extend(Vec::new(), start) {
                return true;
            }
            self.blocks.pop();
            return false;
        }
        for x in from..self.f.order() {
            if self.used_pts[x as usize] {
                continue;
            }
            if self.budget == 0 {
                return false;
            }
            self.budget -= 1;
            let diffs: Vec<u32> = cur.iter().flat_map(|&y| [self.f.sub(x, y), self.f.sub(y, x)]).collect();
            let mut ok = true;
            let mut marked = Vec::new();
            for &d in &diffs {
                if self.used_diff[d as usize] {
                    ok = false;
                    break;
                }
                self.used_diff[d as usize] = true;
                marked.push(d);
            }
            if ok {
                self.used_pts[x as usize] = true;
                let mut next = cur.clone();
                next.push(x);
                if self.extend(next, x + 1) {
                    return true;
                }
                self.used_pts[x as usize] = false;
            }
            for d in marked {
                self.used_diff[d as usize] = false;
            }
        }
        false
    }
}

/// Attempts an RBIBD(kq, k) from a disjoint difference family on the points
/// GF(q) × Z_k, labelled j·q + x. Class g takes the family blocks in every
/// copy, the block {(g, j)}, and transversals {(c_j·x + g, j) : x ∈ R} where R
/// is the set of nonzero elements outside the family. A further
/// (q−1)/(k−1) classes develop the tuples y·c for y in the family's union.
/// This needs k distinct multipliers c_j with c_j·R = R. Without them, or when
/// the result fails verification, the attempt reports ConstructionFailed.
pub fn rbibd_from_disjoint_df(q: u32, k: u32, blocks: &[Block]) -> Result<BibdDesign> {
    let f = Field::of_order(q)?;
    let mut union: Vec<u32> = blocks.iter().flatten().copied().collect();
    union.sort_unstable();
    let before = union.len();
    union.dedup();
    if union.len() != before || blocks.iter().any(|b| b.len() != k as usize) || union.iter().any(|&x| x == 0 || x >= q)
    {
        return Err(invalid!(
            "base blocks must be disjoint {k}-subsets of the nonzero field elements"
        ));
    }
    let rest: Vec<u32> = (1..q).filter(|x| union.binary_search(x).is_err()).collect();
    let stabilizer: Vec<u32> = (1..q)
        .filter(|&c| {
            let mut img: Vec<u32> = rest.iter().map(|&x| f.mul(c, x)).collect();
            img.sort_unstable();
            img == rest
        })
        .collect();
    if stabilizer.len() < k as usize {
        return Err(Error::ConstructionFailed(format!(
            "only {} multipliers fix the complement of the family; {k} needed",
            stabilizer.len()
        )));
    }
    let c = &stabilizer[..k as usize];
    let label = |x: u32, j: usize| j as u32 * q + x;
    let mut out: Vec<Block> = Vec::new();
    let mut res: Vec<Vec<usize>> = Vec::new();
    for g in 0..q {
        let start = out.len();
        for b in blocks {
            for j in 0..k as usize {
                out.push(b.iter().map(|&x| label(f.add(x, g), j)).collect());
            }
        }
        out.push((0..k as usize).map(|j| label(g, j)).collect());
        for &x in &rest {
            out.push(
                c.iter()
                    .enumerate()
                    .map(|(j, &cj)| label(f.add(f.mul(cj, x), g), j))
                    .collect(),
            );
        }
        res.push((start..out.len()).collect());
    }
    for &y in &union {
        let start = out.len();
        for g in 0..q {
            out.push(
                c.iter()
                    .enumerate()
                    .map(|(j, &cj)| label(f.add(f.mul(cj, y), g), j))
                    .collect(),
            );
        }
        res.push((start..out.len()).collect());
    }
    for b in out.iter_mut() {
        b.sort_unstable();
    }
    let d = BibdDesign {
        v: k * q,
        k,
        blocks: out,
        resolution: Some(res),
    };
    let cert = verify_bibd(&d);
    if cert.valid {
        Ok(d)
    } else {
        Err(Error::ConstructionFailed(cert.issues.join("; ")))
    }
}

/// Is `q` an odd prime power, as the difference-family route requires.
pub fn odd_prime_power(q: u32) -> bool {
    q % 2 == 1 && gf::prime_power(q).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latin::{constructible_mols, mols_from_field};

    fn rtd(k: u32, n: u32) -> GroupedDesign {
        let m = constructible_mols(n, k as usize - 1).unwrap();
        rtd_from_td(&td_from_mols(n, m.squares()).unwrap()).unwrap()
    }

    #[test]
    fn max_rounds_examples() {
        assert_eq!(max_rounds(28, 4), Ok(9));
        assert_eq!(max_rounds(24, 4), Ok(7));
        assert_eq!(max_rounds(5, 5), Ok(1));
        assert!(max_rounds(5, 1).is_err());
    }

    #[test]
    fn td_from_mols_sizes() {
        let f5 = mols_from_field(&Field::of_order(5).unwrap());
        let t = td_from_mols(5, f5.squares()).unwrap();
        assert_eq!((t.k, t.blocks.len()), (6, 25));
        assert!(verify_td(&t).valid);
        let t2 = td_from_mols(4, &[]).unwrap();
        assert!(verify_td(&t2).valid);
        assert_eq!(t2.blocks.len(), 16);
        let f3 = mols_from_field(&Field::of_order(3).unwrap());
        assert!(verify_td(&td_from_mols(3, f3.squares()).unwrap()).valid);
        assert!(td_from_mols(4, f3.squares()).is_err());
    }

    #[test]
    fn rtd_resolution() {
        for (k, n) in [(4u32, 7u32), (2, 2), (5, 5), (3, 4)] {
            let r = rtd(k, n);
            assert!(verify_gdd(&r).valid, "({k},{n})");
            assert_eq!(r.resolution.as_ref().unwrap().len(), n as usize);
            let a = allocation_from_design(DesignRef::Grouped(&r), Selector::All).unwrap();
            let c = verify_allocation(&a);
            assert!(c.valid && c.rounds == n as usize);
            assert_eq!(a.groups.len(), k as usize);
        }
    }

    #[test]
    fn verifier_reports_repeated_pair() {
        let a = allocation_from_design(DesignRef::Grouped(&rtd(4, 7)), Selector::All).unwrap();
        let mut bad = a.clone();
        let (x, y) = (a.rounds[0][0][0], a.rounds[0][0][1]);
        let hx = bad.rounds[1].iter().position(|b| b.contains(&x)).unwrap();
        let hy = bad.rounds[1].iter().position(|b| b.contains(&y)).unwrap();
        let z = *bad.rounds[1][hx].iter().find(|&&p| p != x).unwrap();
        bad.rounds[1][hx].iter_mut().for_each(|p| {
            if *p == z {
                *p = y
            }
        });
        bad.rounds[1][hy].iter_mut().for_each(|p| {
            if *p == y {
                *p = z
            }
        });
        let c = verify_allocation(&bad);
        assert!(!c.valid);
        assert!(c
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RepeatedPair { a, b, .. } if (*a, *b) == (x.min(y), x.max(y)))));
    }

    #[test]
    fn truncation() {
        let a = allocation_from_design(DesignRef::Grouped(&rtd(4, 7)), Selector::All).unwrap();
        for r in 0..=7 {
            let t = truncate(&a, r).unwrap();
            assert!(verify_allocation(&t).valid);
            assert_eq!(t.num_rounds(), r);
        }
        assert!(truncate(&a, 8).is_err());
    }

    #[test]
    fn oa_round_trip() {
        let dm = crate::diffmat::multiplication_dm(5, 5).unwrap();
        let oa = crate::diffmat::dm_to_oa(&dm).unwrap();
        let td = td_from_oa(&oa);
        assert!(verify_td(&td).valid);
        let back = oa_from_td(&td).unwrap();
        let cols = |o: &OrthArray| {
            let mut c: Vec<Vec<u32>> = (0..o.columns())
                .map(|j| o.cells.iter().map(|r| r[j]).collect())
                .collect();
            c.sort();
            c
        };
        assert_eq!(cols(&oa), cols(&back));
    }

    #[test]
    fn itd_from_td_has_no_partial_classes() {
        let m = constructible_mols(5, 3).unwrap();
        let td = td_from_mols(5, m.squares()).unwrap();
        assert!(verify_itd(&td).valid);
        let r = rounds_from_itd(&td).unwrap();
        assert_eq!((r.complete.len(), r.partial.len()), (5, 0));
    }

    #[test]
    fn disjoint_df_search() {
        assert_eq!(search_disjoint_df(7, 3).unwrap(), vec![vec![1, 2, 4]]);
        assert!(search_disjoint_df(5, 3).is_err());
        let b = search_disjoint_df(13, 4).unwrap();
        assert_eq!(b.len(), 1);
        let mut d: Vec<u32> = b[0]
            .iter()
            .flat_map(|&x| b[0].iter().filter(move |&&y| y != x).map(move |&y| (x + 13 - y) % 13))
            .collect();
        d.sort_unstable();
        assert_eq!(d, (1..13).collect::<Vec<_>>());
        assert_eq!(search_disjoint_df(19, 3).unwrap().len(), 3);
    }

    #[test]
    fn rcw_attempts_are_guarded() {
        let d = rbibd_from_disjoint_df(7, 3, &search_disjoint_df(7, 3).unwrap()).unwrap();
        assert!(verify_bibd(&d).valid);
        assert_eq!(d.resolution.as_ref().unwrap().len(), 10);
        match rbibd_from_disjoint_df(13, 4, &search_disjoint_df(13, 4).unwrap()) {
            Ok(d) => assert!(verify_bibd(&d).valid),
            Err(e) => assert!(matches!(e, Error::ConstructionFailed(_))),
        }
        assert!(matches!(
            rbibd_from_disjoint_df(7, 3, &[vec![1, 2, 4], vec![1, 3, 5]]),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn necessary_conditions() {
        assert!(bibd_necessary(28, 4));
        assert!(bibd_necessary(21, 3));
        assert!(!bibd_necessary(22, 4));
        // v ≡ 1 mod k−1 holds but b is fractional
        assert!(!bibd_necessary(11, 3));
    }

    proptest::proptest! {
        #[test]
        fn single_point_moves_are_detected(seed in 0usize..10_000) {
            let a = allocation_from_design(DesignRef::Grouped(&rtd(4, 7)), Selector::All).unwrap();
            let mut bad = a.clone();
            let r = seed % 7;
            let b1 = (seed / 7) % 7;
            let b2 = (b1 + 1 + (seed / 49) % 6) % 7;
            let p = bad.rounds[r][b1].remove(seed % 4);
            bad.rounds[r][b2].push(p);
            proptest::prop_assert!(!verify_allocation(&bad).valid);
        }
    }
}
