//! Method selection for optimal (v, k) allocations and for the adjacent block
//! size variant, with construction wherever an in-repo path or supplied data
//! allows it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::constructions::{augment_group_rounds, molrs, ownsg_expand, single_round, SplitProvider, StarterSet};
use crate::designs::{
    allocation_from_design, max_rounds, rbibd_from_disjoint_df, rounds_from_itd, rtd_from_td,
    search_disjoint_df_bounded, td_from_mols, td_from_oa, truncate, verify_allocation, Allocation, DesignRef,
    GroupedDesign, Round, Selector, UrdDesign,
};
use crate::diffmat::{build_dm_35_7, dm_to_oa, qdm_grid, qdm_grid_extended, verify_qdm, OrthArray, QuasiDiffMatrix};
use crate::error::invalid;
use crate::gf;
use crate::latin::{constructible_count, constructible_mols, n_lower_bound, LatinSquare, MolsSet};
use crate::sga::{add_points, apply_removal, renumber, SgaParams};
use crate::{Error, Result};

/// Placement budget for the difference-family search behind KTS(3q). Larger
/// fields exhaust it and fall back to supplied data.
const DF_SEARCH_BUDGET: u64 = 1_000_000;

/// Design family named at the start of a method string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Kts,
    Nkts,
    Rbibd,
    Rtd,
    Rgdd,
    Urd,
    Ritd,
    Molrs,
    OwnSg,
}

impl Family {
    const NAMES: [(Family, &'static str); 9] = [
        (Family::Kts, "KTS"),
        (Family::Nkts, "NKTS"),
        (Family::Rbibd, "RBIBD"),
        (Family::Rtd, "RTD"),
        (Family::Rgdd, "RGDD"),
        (Family::Urd, "URD"),
        (Family::Ritd, "RITD"),
        (Family::Molrs, "MOLRs"),
        (Family::OwnSg, "ownSG"),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES
            .iter()
            .find(|(f, _)| *f == self)
            .map(|(_, n)| *n)
            .expect("named")
    }
}

/// Trailing operation applied to the base design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modifier {
    /// `-t`, or `-t,B` when the final round is dropped first.
    Remove { t: u32, drop_round: bool },
    /// `+t`: t new points along parallel columns.
    Add(u32),
    /// `_D+t`: points added to a grid from a difference matrix.
    Dm(u32),
    /// `_Q(g,u)+t`: points added to a grid from a quasi-difference matrix.
    Qdm { g: u32, u: u32, t: u32 },
}

/// A parsed method string such as `RTD(5,30)+G(6)-2,B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Method {
    pub family: Family,
    pub args: Vec<u32>,
    /// URD arguments written inside braces.
    pub braced: bool,
    pub group_rounds: Option<u32>,
    pub modifier: Option<Modifier>,
}

impl Method {
    pub fn new(family: Family, args: &[u32]) -> Self {
        Method {
            family,
            args: args.to_vec(),
            braced: false,
            group_rounds: None,
            modifier: None,
        }
    }

    pub fn with_groups(mut self, t: u32) -> Self {
        self.group_rounds = Some(t);
        self
    }

    /// The base design without `+G` or trailing modifier.
    pub fn base(&self) -> Method {
        Method {
            group_rounds: None,
            modifier: None,
            ..self.clone()
        }
    }

    fn arg(&self, i: usize) -> Result<u32> {
        self.args
            .get(i)
            .copied()
            .ok_or_else(|| invalid!("{self} lacks argument {}", i + 1))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family.name())?;
        f.write_str("(")?;
        if self.braced {
            f.write_str("{")?;
        }
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                let sep = if self.family == Family::Ritd && i + 1 == self.args.len() {
                    ";"
                } else {
                    ","
                };
                f.write_str(sep)?;
            }
            write!(f, "{a}")?;
        }
        if self.braced {
            f.write_str("}")?;
        }
        f.write_str(")")?;
        if let Some(t) = self.group_rounds {
            write!(f, "+G({t})")?;
        }
        match self.modifier {
            None => Ok(()),
            Some(Modifier::Remove { t, drop_round: false }) => write!(f, "-{t}"),
            Some(Modifier::Remove { t, drop_round: true }) => write!(f, "-{t},B"),
            Some(Modifier::Add(t)) => write!(f, "+{t}"),
            Some(Modifier::Dm(t)) => write!(f, "_D+{t}"),
            Some(Modifier::Qdm { g, u, t }) => write!(f, "_Q({g},{u})+{t}"),
        }
    }
}

struct Cursor<'a> {
    s: &'a str,
}

impl<'a> Cursor<'a> {
    fn eat(&mut self, tok: &str) -> bool {
        match self.s.strip_prefix(tok) {
            Some(rest) => {
                self.s = rest;
                true
            }
            None => false,
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(invalid!("expected `{tok}` at `{}`", self.s))
        }
    }

    fn num(&mut self) -> Result<u32> {
        let end = self.s.find(|c: char| !c.is_ascii_digit()).unwrap_or(self.s.len());
        let (d, rest) = self.s.split_at(end);
        let n = d.parse().map_err(|_| invalid!("expected a number at `{}`", self.s))?;
        self.s = rest;
        Ok(n)
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Whitespace is ignored.
    fn from_str(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut c = Cursor { s: &compact };
        // longest names first so NKTS is not read as KTS
        let mut names = Family::NAMES;
        names.sort_by_key(|(_, n)| core::cmp::Reverse(n.len()));
        let family = names
            .iter()
            .find(|(_, n)| c.eat(n))
            .map(|(f, _)| *f)
            .ok_or_else(|| invalid!("unknown method `{text}`"))?;
        c.expect("(")?;
        let braced = c.eat("{");
        let mut args = vec![c.num()?];
        while c.eat(",") || (family == Family::Ritd && c.eat(";")) {
            args.push(c.num()?);
        }
        if braced {
            c.expect("}")?;
        }
        c.expect(")")?;
        let group_rounds = if c.eat("+G(") {
            let t = c.num()?;
            c.expect(")")?;
            Some(t)
        } else {
            None
        };
        let modifier = if c.eat("-") {
            let t = c.num()?;
            Some(Modifier::Remove {
                t,
                drop_round: c.eat(",B"),
            })
        } else if c.eat("_D+") {
            Some(Modifier::Dm(c.num()?))
        } else if c.eat("_Q(") {
            let g = c.num()?;
            c.expect(",")?;
            let u = c.num()?;
            c.expect(")+")?;
            Some(Modifier::Qdm { g, u, t: c.num()? })
        } else if c.eat("+") {
            Some(Modifier::Add(c.num()?))
        } else {
            None
        };
        if !c.s.is_empty() {
            return Err(invalid!("trailing `{}` in `{text}`", c.s));
        }
        Ok(Method {
            family,
            args,
            braced,
            group_rounds,
            modifier,
        })
    }
}

/// Existence facts the selection algorithms consult.
pub struct ExistenceTables;

impl ExistenceTables {
    /// v ≡ 8 (mod 12) routed to a URD instead of a 4-RGDD with groups of size 2.
    pub const EXCEPTIONS_A: [u32; 11] = [8, 20, 92, 140, 164, 188, 200, 236, 260, 404, 428];
    /// u = v/2 for which a 4-RGDD of type 2^u is unknown or impossible.
    pub const RGDD4_TYPE2_MISSING: [u32; 11] = [4, 10, 46, 70, 82, 94, 100, 118, 130, 202, 214];
    /// u = v/3 for which no 4-RGDD of type 3^u exists.
    pub const RGDD4_TYPE3_MISSING: [u32; 1] = [4];
    /// n for which a URD({2,4}; 2n) with r₂ = 4 is known.
    pub const URD_24: [u32; 9] = [46, 70, 82, 94, 100, 118, 130, 202, 214];
    /// v ≡ 5 (mod 20) without an RBIBD(v,5).
    pub const RBIBD5_MISSING: [u32; 4] = [45, 345, 465, 645];
    pub const NKTS_MISSING: [u32; 2] = [6, 12];
    /// Known RBIBD(v,k) for k ≥ 6 beyond affine planes.
    pub const RBIBD_KNOWN: [(u32, u32); 3] = [(126, 6), (120, 8), (169, 13)];
    /// Known k-RGDDs (v, k, g) with g < v/k and k ≥ 5, besides 5-RGDDs of type g⁶ with 20 | g.
    pub const RGDD_KNOWN: [(u32, u32, u32); 2] = [(120, 5, 4), (99, 9, 3)];
    /// URD({k₁,k}; v): (v, k, k₁, rounds of blocks of size k).
    pub const URD_KNOWN: [(u32, u32, u32, u32); 1] = [(30, 5, 2, 6)];
    /// ITD(n₁, n₂; k) known to exist.
    pub const ITD_KNOWN: [(u32, u32, u32); 2] = [(10, 2, 6), (22, 3, 6)];
    /// (v, k, r) for which starter blocks give r rounds, before any G rounds.
    pub const OWNSG_ROUNDS: [(u32, u32, u32); 17] = [
        (60, 6, 7),
        (70, 7, 7),
        (80, 8, 5),
        (84, 6, 9),
        (84, 7, 7),
        (90, 6, 10),
        (90, 9, 5),
        (96, 8, 6),
        (98, 7, 8),
        (105, 7, 9),
        (112, 8, 8),
        (120, 6, 13),
        (126, 7, 10),
        (126, 9, 7),
        (132, 6, 14),
        (135, 9, 7),
        (156, 6, 15),
    ];

    pub fn rbibd_exists(v: u32, k: u32) -> bool {
        match k {
            2 => v.is_multiple_of(2),
            3 => v % 6 == 3,
            4 => v % 12 == 4,
            5 => v % 20 == 5 && !Self::RBIBD5_MISSING.contains(&v),
            _ => v == k || (v == k * k && gf::prime_power(k).is_some()) || Self::RBIBD_KNOWN.contains(&(v, k)),
        }
    }

    pub fn rtd_exists(k: u32, n: u32) -> bool {
        n >= 2 && n_lower_bound(n) + 1 >= k as usize
    }

    /// k-RGDD of type g^(v/g), for k ≥ 5.
    pub fn rgdd_exists(v: u32, k: u32, g: u32) -> bool {
        if g == 0 || !v.is_multiple_of(g) {
            return false;
        }
        if g * k == v {
            return Self::rtd_exists(k, g);
        }
        Self::RGDD_KNOWN.contains(&(v, k, g)) || (k == 5 && v == 6 * g && g.is_multiple_of(20))
    }

    pub fn ownsg_rounds(v: u32, k: u32) -> Option<u32> {
        Self::OWNSG_ROUNDS.iter().find(|e| e.0 == v && e.1 == k).map(|e| e.2)
    }
}

/// One row of the solution catalog. `k2` and `m2` are zero for single block
/// sizes, where `m1` is the number of blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogRow {
    pub v: u32,
    pub k1: u32,
    pub k2: u32,
    pub m1: u32,
    pub m2: u32,
    pub max: u32,
    pub method: String,
    pub r: u32,
}

impl CatalogRow {
    pub fn is_single(&self) -> bool {
        self.k2 == 0
    }

    pub fn sizes(&self) -> Vec<u32> {
        if self.is_single() {
            vec![self.k1]
        } else {
            vec![self.k1, self.k2]
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    rows: Vec<CatalogRow>,
}

impl Catalog {
    /// Rejects rows with r > MAX or a method string that does not parse.
    pub fn new(rows: Vec<CatalogRow>) -> Result<Self> {
        for row in &rows {
            if row.r > row.max {
                return Err(invalid!(
                    "row v={} {}: r={} exceeds MAX={}",
                    row.v,
                    row.method,
                    row.r,
                    row.max
                ));
            }
            row.method.parse::<Method>()?;
        }
        Ok(Catalog { rows })
    }

    pub fn rows(&self) -> &[CatalogRow] {
        &self.rows
    }

    /// Every row for v, in catalog order.
    pub fn lookup(&self, v: u32) -> Vec<&CatalogRow> {
        self.rows.iter().filter(|r| r.v == v).collect()
    }

    pub fn single(&self, v: u32, k: u32) -> Option<&CatalogRow> {
        self.rows.iter().find(|r| r.v == v && r.k1 == k && r.is_single())
    }

    pub fn sga(&self, p: &SgaParams) -> Option<&CatalogRow> {
        self.rows
            .iter()
            .find(|r| r.v == p.v && r.k1 == p.k1 && r.k2 == p.k2() && r.m1 == p.m1 && r.m2 == p.m2)
    }
}

/// Ingredients the repository cannot build itself. Every method defaults to
/// "unavailable"; errors report malformed data. Whatever is supplied is
/// verified before use.
pub trait DesignSource {
    /// Resolved KTS, NKTS, RBIBD or RGDD as rounds, keyed by its method
    /// string, e.g. `RBIBD(28,4)`.
    fn resolved(&self, _base: &str) -> Result<Option<Allocation>> {
        Ok(None)
    }
    fn urd(&self, _v: u32, _k: u32, _k1: u32) -> Result<Option<UrdDesign>> {
        Ok(None)
    }
    fn itd(&self, _n1: u32, _n2: u32, _k: u32) -> Result<Option<GroupedDesign>> {
        Ok(None)
    }
    fn starters(&self, _v: u32, _k: u32) -> Result<Option<StarterSet>> {
        Ok(None)
    }
    fn mols(&self, _n: u32) -> Result<Option<Vec<LatinSquare>>> {
        Ok(None)
    }
    fn qdm(&self, _n: u32, _k: u32, _u: u32) -> Result<Option<QuasiDiffMatrix>> {
        Ok(None)
    }
}

/// A source with nothing in it.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoData;

impl DesignSource for NoData {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Constructed,
    DataRequired,
    SingleRound,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Constructed => "Constructed",
            Status::DataRequired => "DataRequired",
            Status::SingleRound => "SingleRound",
        })
    }
}

/// Planner output. `allocation` is present exactly when the status is not
/// DataRequired, and then passes the verifier with `r` rounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanNode {
    pub v: u32,
    pub sizes: Vec<u32>,
    pub counts: Vec<u32>,
    /// None for a single round.
    pub method: Option<Method>,
    pub method_text: String,
    pub r: u32,
    pub max: u32,
    pub status: Status,
    /// Why construction stopped, for DataRequired nodes.
    pub missing: Option<String>,
    pub allocation: Option<Allocation>,
}

/// Where an optR value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundsSource {
    Catalog,
    Constructed,
    /// Predicted by the method's round count; no allocation in hand.
    Method,
    /// ⌊(v−1)/(k−1)⌋ only; nothing achieves it here.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptRounds {
    pub r: u32,
    pub source: RoundsSource,
}

/// Rounds a method yields, from the sizes of the designs it names. None when
/// the count is not determined by the method alone.
pub fn method_rounds(m: &Method) -> Option<u32> {
    let a = |i: usize| m.args.get(i).copied();
    let base = match m.family {
        Family::Kts => (a(0)? - 1) / 2,
        Family::Nkts => (a(0)? - 2) / 2,
        Family::Rbibd => (a(0)? - 1) / (a(1)? - 1),
        Family::Rgdd => (a(0)? - a(2)?) / (a(1)? - 1),
        Family::Rtd => a(1)?,
        Family::Urd => {
            let (v, k, k1) = (a(0)?, a(1)?, a(2)?);
            match ExistenceTables::URD_KNOWN
                .iter()
                .find(|e| (e.0, e.1, e.2) == (v, k, k1))
            {
                Some(e) => e.3,
                None if k == 4 && k1 == 2 => (v - 5) / 3,
                None => return None,
            }
        }
        Family::Ritd => a(0)? - a(1)?,
        Family::Molrs => n_lower_bound(a(1)?) as u32 + 1,
        Family::OwnSg => ExistenceTables::ownsg_rounds(a(0)?, a(1)?)?,
    };
    let with_groups = base + m.group_rounds.unwrap_or(0);
    Some(match m.modifier {
        None | Some(Modifier::Add(_)) | Some(Modifier::Remove { drop_round: false, .. }) => with_groups,
        Some(Modifier::Remove { drop_round: true, .. }) => with_groups.checked_sub(1)?,
        Some(Modifier::Dm(_)) => a(1)?,
        Some(Modifier::Qdm { g, u, t }) => g + u32::from(t <= u),
    })
}

/// Splits groups with the planner's own optimal allocations.
struct PlannerSplit<'p, 'a>(&'p Planner<'a>);

impl SplitProvider for PlannerSplit<'_, '_> {
    fn split(&self, n: u32, k: u32) -> Option<Allocation> {
        self.0.optimal(n, k).ok()?.allocation
    }
}

/// Contributes no rounds, so group splitting stays under the planner's control.
struct NoSplit;

impl SplitProvider for NoSplit {
    fn split(&self, n: u32, k: u32) -> Option<Allocation> {
        Some(Allocation::empty(n, vec![k], vec![n / k]))
    }
}

fn data_required(what: impl Into<String>) -> Error {
    Error::DataRequired(what.into())
}

/// Method selection and construction over a catalog and a data source.
pub struct Planner<'a> {
    catalog: Option<&'a Catalog>,
    source: &'a dyn DesignSource,
}

impl<'a> Planner<'a> {
    pub fn new(catalog: Option<&'a Catalog>, source: &'a dyn DesignSource) -> Self {
        Planner { catalog, source }
    }

    pub fn catalog(&self) -> Option<&'a Catalog> {
        self.catalog
    }

    /// Catalog rows for v, optionally narrowed to block sizes and counts.
    pub fn catalog_lookup(&self, v: u32, sizes: &[u32], counts: Option<(u32, u32)>) -> Result<Vec<&'a CatalogRow>> {
        let cat = self
            .catalog
            .ok_or_else(|| Error::NotFound("no catalog loaded".into()))?;
        let rows: Vec<&CatalogRow> = cat
            .lookup(v)
            .into_iter()
            .filter(|r| sizes.is_empty() || r.sizes() == sizes)
            .filter(|r| counts.is_none_or(|(m1, m2)| r.m1 == m1 && r.m2 == m2))
            .collect();
        if rows.is_empty() {
            return Err(Error::NotFound(format!("no catalog row for v={v} sizes={sizes:?}")));
        }
        Ok(rows)
    }

    /// Catalog row when present, otherwise [`Planner::optimal`].
    pub fn plan(&self, v: u32, k: u32) -> Result<PlanNode> {
        if k < 2 || !v.is_multiple_of(k) {
            return Err(invalid!("block size {k} does not divide {v}"));
        }
        match self.catalog.and_then(|c| c.single(v, k)) {
            Some(row) => Ok(self.node_from_row(row)),
            None => self.optimal(v, k),
        }
    }

    /// Method for a (v, k) allocation by the selection algorithm alone, then
    /// built when possible.
    pub fn optimal(&self, v: u32, k: u32) -> Result<PlanNode> {
        if k < 2 || !v.is_multiple_of(k) {
            return Err(invalid!("block size {k} does not divide {v}"));
        }
        let max = max_rounds(v, k)?;
        match self.select(v, k) {
            Some(m) => {
                let r = method_rounds(&m).unwrap_or(max);
                Ok(self.build_node(v, vec![k], vec![v / k], m, r, max, None))
            }
            None => Ok(self.single_round_node(v, k)),
        }
    }

    fn single_round_node(&self, v: u32, k: u32) -> PlanNode {
        let a = single_round(v, k).expect("k divides v");
        PlanNode {
            v,
            sizes: vec![k],
            counts: vec![v / k],
            method: None,
            method_text: "single round".into(),
            r: 1,
            max: max_rounds(v, k).unwrap_or(1),
            status: Status::SingleRound,
            missing: None,
            allocation: Some(a),
        }
    }

    /// Branch structure of the selection algorithm. None means one round.
    pub fn select(&self, v: u32, k: u32) -> Option<Method> {
        let n = v / k;
        if n < k {
            return None;
        }
        match k {
            3 => {
                if v % 6 == 3 {
                    Some(Method::new(Family::Kts, &[v]))
                } else if v >= 18 {
                    Some(Method::new(Family::Nkts, &[v]))
                } else if v == 12 {
                    Some(Method::new(Family::Rtd, &[3, 4]))
                } else {
                    None
                }
            }
            4 => {
                if v % 12 == 4 {
                    Some(Method::new(Family::Rbibd, &[v, 4]))
                } else if v.is_multiple_of(12) && v > 12 {
                    Some(Method::new(Family::Rgdd, &[v, 4, 3]))
                } else if v == 20 {
                    // no URD({2,4};20) is known; four MOLS(5) give five rounds
                    Some(Method::new(Family::Rtd, &[4, 5]))
                } else if v % 12 == 8 && v > 8 {
                    if ExistenceTables::EXCEPTIONS_A.contains(&v) {
                        Some(Method::new(Family::Urd, &[v, 4, 2]))
                    } else {
                        Some(Method::new(Family::Rgdd, &[v, 4, 2]))
                    }
                } else {
                    None
                }
            }
            _ => {
                if v % (k * (k - 1)) == k % (k * (k - 1)) && ExistenceTables::rbibd_exists(v, k) {
                    return Some(Method::new(Family::Rbibd, &[v, k]));
                }
                if let Some(g) = (2..=n).find(|&g| ExistenceTables::rgdd_exists(v, k, g)) {
                    let m = if g == n {
                        Method::new(Family::Rtd, &[k, n])
                    } else {
                        Method::new(Family::Rgdd, &[v, k, g])
                    };
                    return Some(self.with_group_rounds(m, g, k));
                }
                self.special(v, k)
            }
        }
    }

    fn with_group_rounds(&self, m: Method, g: u32, k: u32) -> Method {
        if g.is_multiple_of(k) {
            let t = self.opt_rounds(g, k).r;
            m.with_groups(t)
        } else {
            m
        }
    }

    /// Best of the special choices: MOLRs, starter blocks, URD, then RITD.
    /// Ties go to the earliest choice. None when no choice applies.
    pub fn special(&self, v: u32, k: u32) -> Option<Method> {
        let n = v / k;
        let mut choices: Vec<Method> = Vec::new();
        if k <= n && n_lower_bound(n) >= 1 {
            choices.push(self.with_group_rounds(Method::new(Family::Molrs, &[k, n]), n, k));
        }
        if ExistenceTables::ownsg_rounds(v, k).is_some() {
            choices.push(self.with_group_rounds(Method::new(Family::OwnSg, &[v, k]), n, k));
        }
        for &(uv, uk, k1, _) in &ExistenceTables::URD_KNOWN {
            if (uv, uk) == (v, k) {
                let mut m = Method::new(Family::Urd, &[v, k, k1]);
                m.braced = true;
                choices.push(m);
            }
        }
        for &(n1, n2, kk) in &ExistenceTables::ITD_KNOWN {
            if n1 == n && kk == k + 1 {
                choices.push(self.with_group_rounds(Method::new(Family::Ritd, &[n1, n2, k]), n, k));
            }
        }
        let best = choices.iter().filter_map(method_rounds).max()?;
        choices.into_iter().find(|m| method_rounds(m) == Some(best))
    }

    /// optR(v, k): catalog, then construction, then the method's count, then
    /// the bound.
    pub fn opt_rounds(&self, v: u32, k: u32) -> OptRounds {
        if let Some(row) = self.catalog.and_then(|c| c.single(v, k)) {
            return OptRounds {
                r: row.r,
                source: RoundsSource::Catalog,
            };
        }
        if k >= 2 && v.is_multiple_of(k) && v / k < k {
            return OptRounds {
                r: 1,
                source: RoundsSource::Constructed,
            };
        }
        match self.optimal(v, k) {
            Ok(node) if node.allocation.is_some() => OptRounds {
                r: node.r,
                source: RoundsSource::Constructed,
            },
            Ok(node) if node.method.as_ref().and_then(method_rounds).is_some() => OptRounds {
                r: node.r,
                source: RoundsSource::Method,
            },
            _ => OptRounds {
                r: max_rounds(v, k).unwrap_or(0),
                source: RoundsSource::Bound,
            },
        }
    }

    /// Plan for the adjacent-size problem, from its catalog row.
    pub fn plan_sga(&self, p: &SgaParams) -> Result<PlanNode> {
        let row = self.catalog.and_then(|c| c.sga(p)).ok_or_else(|| {
            Error::NotFound(format!(
                "no catalog row for ({}, {{{},{}}}, {}, {})",
                p.v,
                p.k1,
                p.k2(),
                p.m1,
                p.m2
            ))
        })?;
        Ok(self.node_from_row(row))
    }

    /// Builds the method of a catalog row, keeping its string, r and MAX.
    pub fn node_from_row(&self, row: &CatalogRow) -> PlanNode {
        let m: Method = row.method.parse().expect("catalog methods parse");
        let target = (!row.is_single()).then_some(row.m1);
        let counts = if row.is_single() {
            vec![row.m1]
        } else {
            vec![row.m1, row.m2]
        };
        let mut node = self.build_node(row.v, row.sizes(), counts, m, row.r, row.max, target);
        node.method_text = row.method.clone();
        node
    }

    #[allow(clippy::too_many_arguments)]
    fn build_node(
        &self,
        v: u32,
        sizes: Vec<u32>,
        counts: Vec<u32>,
        m: Method,
        r: u32,
        max: u32,
        removed: Option<u32>,
    ) -> PlanNode {
        let mut node = PlanNode {
            v,
            sizes,
            counts,
            method_text: m.to_string(),
            method: Some(m.clone()),
            r,
            max,
            status: Status::DataRequired,
            missing: None,
            allocation: None,
        };
        match self.construct(&m, removed) {
            Ok(a) => {
                let cert = verify_allocation(&a);
                let header_ok = a.v == node.v && a.sizes == node.sizes;
                if cert.valid && header_ok {
                    node.r = a.num_rounds() as u32;
                    node.status = Status::Constructed;
                    node.allocation = Some(a);
                } else {
                    node.missing = Some(format!("construction of {m} failed verification"));
                }
            }
            Err(e) => node.missing = Some(e.to_string()),
        }
        node
    }

    /// The allocation a method describes, relabelled onto `0..v`. `removed`
    /// overrides the count of a `-t` modifier.
    pub fn construct(&self, m: &Method, removed: Option<u32>) -> Result<Allocation> {
        let a = match m.modifier {
            Some(Modifier::Dm(_)) => return Err(data_required(format!("difference matrix grid for {}", m.base()))),
            Some(Modifier::Qdm { g, u, t }) => return self.qdm_allocation(m, g, u, t).map(|a| renumber(&a)),
            _ => self.base_allocation(m)?,
        };
        let a = match m.group_rounds {
            Some(t) => self.add_group_rounds(a, t)?,
            None => a,
        };
        let a = match m.modifier {
            Some(Modifier::Remove { t, drop_round }) => apply_removal(&a, removed.unwrap_or(t) as usize, drop_round)?,
            Some(Modifier::Add(t)) if !a.columns.is_empty() => add_points(&a, t as usize)?,
            Some(Modifier::Add(_)) => return Err(data_required(format!("parallel columns for {}", m.base()))),
            _ => a,
        };
        Ok(renumber(&a))
    }

    fn add_group_rounds(&self, a: Allocation, t: u32) -> Result<Allocation> {
        let k = a.k1();
        let g = a.groups.first().map_or(0, |x| x.len() as u32);
        let split = PlannerSplit(self)
            .split(g, k)
            .ok_or_else(|| data_required(format!("({g},{k}) allocation for group rounds")))?;
        if split.num_rounds() < t as usize {
            return Err(data_required(format!("{t} rounds of a ({g},{k}) allocation")));
        }
        augment_group_rounds(&a, &truncate(&split, t as usize)?)
    }

    fn base_allocation(&self, m: &Method) -> Result<Allocation> {
        let base = m.base();
        match m.family {
            Family::Rtd => self.rtd(m.arg(0)?, m.arg(1)?),
            Family::Molrs => {
                let (k, n) = (m.arg(0)?, m.arg(1)?);
                let want = n_lower_bound(n);
                let squares = self
                    .squares(n, want)?
                    .ok_or_else(|| data_required(format!("{want} MOLS({n})")))?;
                molrs(k, n, &squares, &NoSplit)
            }
            Family::OwnSg => {
                let (v, k) = (m.arg(0)?, m.arg(1)?);
                let s = self
                    .source
                    .starters(v, k)?
                    .ok_or_else(|| data_required(format!("starter blocks for {base}")))?;
                ownsg_expand(&s, &NoSplit)
            }
            Family::Ritd => {
                let (n1, n2, k) = (m.arg(0)?, m.arg(1)?, m.arg(2)?);
                let d = self
                    .source
                    .itd(n1, n2, k + 1)?
                    .ok_or_else(|| data_required(format!("ITD({n1},{n2};{})", k + 1)))?;
                let itd = rounds_from_itd(&d)?;
                if itd.v != n1 * k || itd.complete.len() as u32 != n1 - n2 {
                    return Err(invalid!(
                        "ITD({n1},{n2};{}) gave {} complete classes",
                        k + 1,
                        itd.complete.len()
                    ));
                }
                Ok(itd.allocation())
            }
            Family::Urd => {
                let (v, k, k1) = (m.arg(0)?, m.arg(1)?, m.arg(2)?);
                let d = self
                    .source
                    .urd(v, k, k1)?
                    .ok_or_else(|| data_required(base.to_string()))?;
                allocation_from_design(DesignRef::Urd(&d), Selector::BlockSize(k))
            }
            Family::Rbibd | Family::Kts => self.rbibd(m).or_else(|e| match e {
                Error::DataRequired(_) | Error::ConstructionFailed(_) | Error::NotFound(_) => self.resolved(&base),
                other => Err(other),
            }),
            Family::Nkts | Family::Rgdd => self.resolved(&base),
        }
    }

    fn resolved(&self, base: &Method) -> Result<Allocation> {
        self.source
            .resolved(&base.to_string())?
            .ok_or_else(|| data_required(base.to_string()))
    }

    /// `want` MOLS(n), built when possible, otherwise from the source after
    /// checking orthogonality.
    fn squares(&self, n: u32, want: usize) -> Result<Option<Vec<LatinSquare>>> {
        if want == 0 {
            return Ok(Some(Vec::new()));
        }
        if let Some(s) = constructible_mols(n, want) {
            return Ok(Some(s.squares().to_vec()));
        }
        let Some(mut s) = self.source.mols(n)? else {
            return Ok(None);
        };
        if s.len() < want {
            return Ok(None);
        }
        s.truncate(want);
        MolsSet::new(n as usize, s).map(|m| Some(m.squares().to_vec()))
    }

    /// RTD(k, n) from MOLS, or from the order-35 difference matrix.
    fn rtd(&self, k: u32, n: u32) -> Result<Allocation> {
        if k < 2 || k > n + 1 {
            return Err(invalid!("RTD({k},{n}) needs 2 ≤ k ≤ n+1"));
        }
        let td = if let Some(sq) = self.squares(n, k as usize - 1)? {
            td_from_mols(n, &sq)?
        } else if n == 35 && k <= 6 {
            let oa = dm_to_oa(&build_dm_35_7())?;
            td_from_oa(&OrthArray {
                k: k as usize + 1,
                s: oa.s,
                cells: oa.cells[..k as usize + 1].to_vec(),
            })
        } else {
            return Err(data_required(format!(
                "{} MOLS({n}); {} constructible",
                k - 1,
                constructible_count(n).min(n as usize)
            )));
        };
        let rtd = rtd_from_td(&td)?;
        allocation_from_design(DesignRef::Grouped(&rtd), Selector::All)
    }

    /// RBIBD(v, k) by direct construction: one block, a round robin for
    /// k = 2, an affine plane for v = k² with k a prime power, or the
    /// difference-family route for k = 3.
    fn rbibd(&self, m: &Method) -> Result<Allocation> {
        let (v, k) = match m.family {
            Family::Kts => (m.arg(0)?, 3),
            _ => (m.arg(0)?, m.arg(1)?),
        };
        if v == k {
            return single_round(v, k).ok_or_else(|| invalid!("empty design"));
        }
        if k == 2 && v % 2 == 0 {
            return Ok(round_robin(v));
        }
        if v == k * k && gf::prime_power(k).is_some() {
            let a = self.rtd(k, k)?;
            return augment_group_rounds(&a, &single_round(k, k).expect("k divides k"));
        }
        if k == 3 && v % 3 == 0 && (v / 3) % 6 == 1 && gf::prime_power(v / 3).is_some() {
            let q = v / 3;
            let df = search_disjoint_df_bounded(q, 3, DF_SEARCH_BUDGET)?;
            let d = rbibd_from_disjoint_df(q, 3, &df)?;
            return allocation_from_design(DesignRef::Bibd(&d), Selector::All);
        }
        Err(data_required(m.base().to_string()))
    }

    fn qdm_allocation(&self, m: &Method, g: u32, u: u32, t: u32) -> Result<Allocation> {
        let (k, n) = (m.arg(0)?, m.arg(1)?);
        if g + u != n {
            return Err(invalid!("{m}: g + u must equal {n}"));
        }
        let q = self
            .source
            .qdm(g, k + 1, u)?
            .ok_or_else(|| data_required(format!("({g},{};1,μ;{u}) quasi-difference matrix", k + 1)))?;
        let report = verify_qdm(&q);
        if !report.valid {
            return Err(Error::ConstructionFailed(format!(
                "supplied ({g},{};1,μ;{u}) QDM fails verification",
                k + 1
            )));
        }
        let grid = if t <= u { qdm_grid_extended(&q)? } else { qdm_grid(&q)? };
        add_points(&grid.to_allocation(), t as usize)
    }
}

/// The circle method: v−1 rounds of pairs.
fn round_robin(v: u32) -> Allocation {
    let n = v - 1;
    let rounds: Vec<Round> = (0..n)
        .map(|r| {
            let mut round = vec![vec![r, n]];
            for i in 1..v / 2 {
                round.push(vec![(r + i) % n, (r + n - i) % n]);
            }
            round
        })
        .collect();
    Allocation::from_rounds(rounds)
}
