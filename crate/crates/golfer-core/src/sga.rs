//! Adjacent block sizes: removing points from a superior allocation, adding
//! points to an inferior one, and relabelling.

use alloc::vec;
use alloc::vec::Vec;

use crate::designs::{truncate, Allocation};
use crate::error::invalid;
use crate::{Error, Result};

/// An (v, k₁, k₁+1, m₁, m₂) problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SgaParams {
    pub v: u32,
    pub k1: u32,
    pub m1: u32,
    pub m2: u32,
}

impl SgaParams {
    pub fn new(v: u32, k1: u32, m1: u32, m2: u32) -> Result<Self> {
        if k1 < 2 || k1 * m1 + (k1 + 1) * m2 != v {
            return Err(invalid!("{k1}*{m1} + {}*{m2} != {v}", k1 + 1));
        }
        Ok(SgaParams { v, k1, m1, m2 })
    }

    pub fn k2(&self) -> u32 {
        self.k1 + 1
    }
}

/// The superior (v+m₁, k₂) and inferior (v−m₂, k₁) problems.
pub fn superior_inferior(p: &SgaParams) -> ((u32, u32), (u32, u32)) {
    ((p.v + p.m1, p.k2()), (p.v - p.m2, p.k1))
}

fn single_size(a: &Allocation) -> Result<u32> {
    match a.sizes.as_slice() {
        [k] => Ok(*k),
        _ => Err(invalid!("expected a single block size")),
    }
}

/// Whether no two of `pts` share a block anywhere in `a`.
pub fn pairwise_unmet(a: &Allocation, pts: &[u32]) -> bool {
    a.rounds
        .iter()
        .flatten()
        .all(|b| b.iter().filter(|p| pts.contains(p)).count() <= 1)
}

/// Deletes `pts` from every block. The points must be pairwise unmet, so each
/// block loses at most one of them. Labels are kept.
pub fn remove_points(a: &Allocation, pts: &[u32]) -> Result<Allocation> {
    let k = single_size(a)?;
    if pts.is_empty() {
        return Ok(a.clone());
    }
    let points = a.points();
    if let Some(p) = pts.iter().find(|p| points.binary_search(p).is_err()) {
        return Err(invalid!("point {p} is not in the allocation"));
    }
    let mut sorted = pts.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != pts.len() || !pairwise_unmet(a, &sorted) {
        return Err(invalid!("points to remove must be distinct and never share a block"));
    }
    let t = sorted.len() as u32;
    let n = a.counts[0];
    let mut out = a.clone();
    for b in out.rounds.iter_mut().flatten() {
        b.retain(|p| sorted.binary_search(p).is_err());
    }
    for g in out.groups.iter_mut() {
        g.retain(|p| sorted.binary_search(p).is_err());
    }
    out.groups.retain(|g| !g.is_empty());
    out.v -= t;
    (out.sizes, out.counts) = if t == n {
        (vec![k - 1], vec![n])
    } else {
        (vec![k - 1, k], vec![t, n - t])
    };
    out.canonicalize();
    Ok(out)
}

/// Order-preserving relabel onto `0..v`.
pub fn renumber(a: &Allocation) -> Allocation {
    let pts = a.points();
    a.relabel(|p| pts.binary_search(&p).map_or(p, |i| i as u32))
}

/// Adds `m2` new points, the i-th joining every block of column i. New labels
/// follow the largest existing label.
pub fn add_points(a: &Allocation, m2: usize) -> Result<Allocation> {
    let k = single_size(a)?;
    if m2 == 0 {
        return Ok(a.clone());
    }
    if m2 > a.columns.len() {
        return Err(invalid!(
            "{m2} points requested but only {} parallel columns",
            a.columns.len()
        ));
    }
    let base = a.points().last().map_or(0, |&p| p + 1);
    let mut out = a.clone();
    for (i, col) in a.columns[..m2].iter().enumerate() {
        if col.len() != a.rounds.len() {
            return Err(invalid!("column {i} does not have one block per round"));
        }
        let mut seen = Vec::new();
        for (r, &bi) in col.iter().enumerate() {
            let b = a.rounds[r]
                .get(bi)
                .ok_or_else(|| invalid!("column {i} names a missing block"))?;
            seen.extend_from_slice(b);
            out.rounds[r][bi].push(base + i as u32);
        }
        let before = seen.len();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != before {
            return Err(invalid!("column {i} has intersecting blocks"));
        }
    }
    let (n, t) = (a.counts[0], m2 as u32);
    out.v += t;
    (out.sizes, out.counts) = if t == n {
        (vec![k + 1], vec![n])
    } else {
        (vec![k, k + 1], vec![n - t, t])
    };
    out.columns.drain(..m2);
    out.canonicalize();
    Ok(out)
}

/// The first `t` points, in label order, of a clique unmet in every round.
/// Depth-first over label order; None when no such clique exists.
pub fn find_unused_clique(a: &Allocation, t: usize) -> Option<Vec<u32>> {
    let pts = a.points();
    let n = pts.len();
    let idx = |p: u32| pts.binary_search(&p).expect("point");
    let mut met = vec![false; n * n];
    for b in a.rounds.iter().flatten() {
        for &x in b {
            for &y in b {
                met[idx(x) * n + idx(y)] = true;
            }
        }
    }
    fn go(met: &[bool], n: usize, cur: &mut Vec<usize>, from: usize, t: usize) -> bool {
        if cur.len() == t {
            return true;
        }
        for c in from..n {
            if cur.iter().all(|&x| !met[x * n + c]) {
                cur.push(c);
                if go(met, n, cur, c + 1, t) {
                    return true;
                }
                cur.pop();
            }
        }
        false
    }
    let mut cur = Vec::new();
    go(&met, n, &mut cur, 0, t).then(|| cur.into_iter().map(|i| pts[i]).collect())
}

/// Removal for allocations that carry group metadata, dispatching on m₁.
/// Without group rounds, m₁ points of the first group go. With them:
/// m₁ = 1 takes the first point of the final block of the final round;
/// 1 < m₁ ≤ k drops the final round and takes m₁ points of its final block;
/// m₁ > k drops all group rounds and takes m₁ points of the first group.
pub fn remove_policy(a: &Allocation, m1: usize) -> Result<Allocation> {
    let k = single_size(a)? as usize;
    if a.group_rounds == 0 || m1 > k {
        let base = truncate(a, a.base_rounds())?;
        let g = base
            .groups
            .first()
            .filter(|g| g.len() >= m1)
            .ok_or_else(|| invalid!("no group with {m1} points"))?;
        return remove_points(&base, &g[..m1]);
    }
    apply_removal(a, m1, m1 > 1)
}

/// Removal as written in method names: `−t,B` (`drop_round`) drops the final
/// round and removes t points of its final block. Plain `−t` removes one
/// point of the final block when t = 1, otherwise t points of the first group
/// when no group rounds were added, otherwise the first unused t-clique.
pub fn apply_removal(a: &Allocation, t: usize, drop_round: bool) -> Result<Allocation> {
    let last_block = |x: &Allocation| x.rounds.last().and_then(|r| r.last()).cloned();
    if drop_round {
        let block = last_block(a).ok_or_else(|| invalid!("no rounds to drop"))?;
        if block.len() < t {
            return Err(invalid!("final block has fewer than {t} points"));
        }
        let mut shorter = truncate(a, a.num_rounds() - 1)?;
        shorter.groups = vec![block.clone()];
        return remove_points(&shorter, &block[..t]);
    }
    if t == 1 {
        let block = last_block(a).ok_or_else(|| invalid!("no rounds"))?;
        return remove_points(a, &block[..1]);
    }
    if a.group_rounds == 0 {
        if let Some(g) = a.groups.iter().find(|g| g.len() >= t && pairwise_unmet(a, &g[..t])) {
            return remove_points(a, &g[..t]);
        }
    }
    let clique = find_unused_clique(a, t).ok_or_else(|| Error::NotFound(alloc::format!("unused {t}-clique")))?;
    remove_points(a, &clique)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{allocation_from_design, rtd_from_td, td_from_mols, verify_allocation, DesignRef, Selector};
    use crate::diffmat::{dm_grid, multiplication_dm};
    use crate::latin::constructible_mols;

    fn rtd_alloc(k: u32, n: u32) -> Allocation {
        let m = constructible_mols(n, k as usize - 1).unwrap();
        let t = rtd_from_td(&td_from_mols(n, m.squares()).unwrap()).unwrap();
        allocation_from_design(DesignRef::Grouped(&t), Selector::All).unwrap()
    }

    #[test]
    fn bracketing_problems() {
        let p = SgaParams::new(22, 3, 2, 4).unwrap();
        assert_eq!(superior_inferior(&p), ((24, 4), (18, 3)));
        let p = SgaParams::new(41, 5, 7, 1).unwrap();
        assert_eq!(superior_inferior(&p), ((48, 6), (40, 5)));
        let p = SgaParams::new(12, 3, 4, 0).unwrap();
        assert_eq!(superior_inferior(&p).1, (12, 3));
        assert!(SgaParams::new(41, 5, 9, 1).is_err());
    }

    #[test]
    fn group_removal() {
        let a = rtd_alloc(4, 7);
        let g = a.groups[0][..3].to_vec();
        let b = remove_points(&a, &g).unwrap();
        let c = verify_allocation(&b);
        assert!(c.valid);
        assert_eq!(
            (b.v, b.sizes.clone(), b.counts.clone(), c.rounds),
            (25, vec![3, 4], vec![3, 4], 7)
        );
        assert_eq!(remove_points(&a, &[]).unwrap(), a);
        let met = a.rounds[0][0][..2].to_vec();
        assert!(remove_points(&a, &met).is_err());
        assert!(remove_points(&a, &[99]).is_err());
    }

    #[test]
    fn rtd57_minus_six_then_renumber() {
        let a = rtd_alloc(5, 7);
        let g = a.groups[0][..6].to_vec();
        let b = renumber(&remove_points(&a, &g).unwrap());
        let c = verify_allocation(&b);
        assert!(c.valid);
        assert_eq!(
            (b.v, b.sizes.clone(), b.counts.clone(), c.rounds),
            (29, vec![4, 5], vec![6, 1], 7)
        );
        assert_eq!(b.points(), (0..29).collect::<Vec<_>>());
    }

    #[test]
    fn grid_addition_matches_removal_route() {
        let a = dm_grid(&multiplication_dm(7, 5).unwrap()).unwrap().to_allocation();
        assert_eq!(a.columns.len(), 7);
        let b = add_points(&a, 1).unwrap();
        let c = verify_allocation(&b);
        assert!(c.valid);
        assert_eq!((b.v, b.counts.clone(), c.rounds), (29, vec![6, 1], 7));
        assert_eq!(add_points(&a, 0).unwrap(), a);
        assert!(add_points(&a, 8).is_err());
    }

    #[test]
    fn drop_round_removal() {
        let a = rtd_alloc(4, 5);
        let b = apply_removal(&a, 3, true).unwrap();
        let c = verify_allocation(&b);
        assert!(c.valid && c.rounds == 4);
        let single = apply_removal(&a, 1, false).unwrap();
        assert_eq!(verify_allocation(&single).rounds, 5);
    }

    proptest::proptest! {
        #[test]
        fn remove_then_renumber_is_valid(ni in 0usize..4, k in 3u32..6, t in 1usize..8) {
            let n = [5u32, 7, 8, 9][ni];
            proptest::prop_assume!(k < n && t <= n as usize);
            let a = rtd_alloc(k, n);
            let pts = a.groups[(t + k as usize) % k as usize][..t].to_vec();
            let b = remove_points(&a, &pts).unwrap();
            for round in &b.rounds {
                let small = round.iter().filter(|x| x.len() as u32 == k - 1).count();
                proptest::prop_assert_eq!(small, t);
            }
            let r = renumber(&b);
            let c = verify_allocation(&r);
            proptest::prop_assert!(c.valid);
            proptest::prop_assert_eq!(c.rounds, a.num_rounds());
            // renumbering preserves co-block relations
            let pts_sorted = b.points();
            for (rb, rr) in b.rounds.iter().zip(&r.rounds) {
                let mut mapped: Vec<Vec<u32>> = rb.iter().map(|x| x.iter().map(|p| pts_sorted.binary_search(p).unwrap() as u32).collect()).collect();
                mapped.sort();
                proptest::prop_assert_eq!(&mapped, rr);
            }
        }
    }
}
