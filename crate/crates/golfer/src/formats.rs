//! Plain-text formats. Every format starts with a header line
//! `<kind> key=value …` followed by named sections; blank lines and lines
//! starting with `#` are ignored. Writers emit the canonical form, so
//! write∘parse is the identity on canonical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use golfer_core::constructions::StarterSet;
use golfer_core::designs::{Allocation, Block, GroupedDesign, Round, UrdDesign};
use golfer_core::diffmat::QuasiDiffMatrix;
use golfer_core::latin::LatinSquare;
use golfer_core::planner::{Catalog, CatalogRow};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(FormatError { line, msg: msg.into() })
}

/// Non-empty, non-comment lines with 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

struct Header {
    line: usize,
    fields: BTreeMap<String, String>,
}

impl Header {
    fn parse(kind: &str, line: usize, text: &str) -> Result<Self> {
        let mut toks = text.split_whitespace();
        if toks.next() != Some(kind) {
            return err(line, format!("expected a `{kind}` header"));
        }
        let mut fields = BTreeMap::new();
        for t in toks {
            let Some((k, v)) = t.split_once('=') else {
                return err(line, format!("expected key=value, got `{t}`"));
            };
            fields.insert(k.to_string(), v.to_string());
        }
        Ok(Header { line, fields })
    }

    fn num(&self, key: &str) -> Result<u32> {
        let Some(v) = self.fields.get(key) else {
            return err(self.line, format!("missing `{key}`"));
        };
        v.parse()
            .or_else(|_| err(self.line, format!("`{key}` is not a number")))
    }

    fn opt_num(&self, key: &str) -> Result<Option<u32>> {
        if self.fields.contains_key(key) {
            self.num(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn list(&self, key: &str) -> Result<Vec<u32>> {
        let Some(v) = self.fields.get(key) else {
            return err(self.line, format!("missing `{key}`"));
        };
        v.split(',')
            .map(|x| x.parse().or_else(|_| err(self.line, format!("bad entry in `{key}`"))))
            .collect()
    }
}

fn nums(line: usize, text: &str, sep: char) -> Result<Vec<u32>> {
    text.split(sep)
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().or_else(|_| err(line, format!("`{t}` is not a number"))))
        .collect()
}

fn join(xs: &[u32], sep: &str) -> String {
    xs.iter().map(u32::to_string).collect::<Vec<_>>().join(sep)
}

/// Header line, then the remaining lines grouped under section keywords.
/// A section line is a keyword with optional trailing tokens.
struct Sections<'a> {
    header: Header,
    parts: Vec<Part<'a>>,
}

/// (keyword, trailing tokens, line, body lines).
type Part<'a> = (&'a str, Vec<&'a str>, usize, Vec<(usize, &'a str)>);

fn sections<'a>(text: &'a str, kind: &str, keywords: &[&str]) -> Result<Sections<'a>> {
    let mut it = lines(text);
    let Some((hl, ht)) = it.next() else {
        return err(1, "empty input");
    };
    let header = Header::parse(kind, hl, ht)?;
    let mut parts: Vec<Part> = Vec::new();
    for (n, l) in it {
        let mut toks = l.split_whitespace();
        let first = toks.next().unwrap_or("");
        if keywords.contains(&first) {
            parts.push((first, toks.collect(), n, Vec::new()));
        } else if let Some(last) = parts.last_mut() {
            last.3.push((n, l));
        } else {
            return err(n, "data before the first section");
        }
    }
    Ok(Sections { header, parts })
}

/// ```text
/// allocation v=22 sizes=3,4 counts=2,4 rounds=7
/// round 0
/// 1 3 14
/// …
/// groups rounds=1      (optional; `rounds` counts trailing group rounds)
/// 0 1 2
/// columns              (optional; one line per column of round,block pairs)
/// 0,2 1,0 2,5
/// ```
///
/// The header is taken as declared; the verifier checks it against the rounds.
pub fn parse_allocation(text: &str) -> Result<Allocation> {
    let s = sections(text, "allocation", &["round", "groups", "columns"])?;
    let h = &s.header;
    let mut a = Allocation::empty(h.num("v")?, h.list("sizes")?, h.list("counts")?);
    if a.sizes.len() != a.counts.len() {
        return err(h.line, "sizes and counts differ in length");
    }
    for (kw, extra, line, body) in &s.parts {
        match *kw {
            "round" => {
                let idx: usize = extra
                    .first()
                    .and_then(|x| x.parse().ok())
                    .map_or_else(|| err(*line, "round needs an index"), Ok)?;
                if idx != a.rounds.len() {
                    return err(*line, format!("expected round {}, found {idx}", a.rounds.len()));
                }
                let round: Round = body.iter().map(|(n, l)| nums(*n, l, ' ')).collect::<Result<_>>()?;
                a.rounds.push(round);
            }
            "groups" => {
                for t in extra {
                    match t.split_once('=') {
                        Some(("rounds", r)) => {
                            a.group_rounds = r.parse().or_else(|_| err(*line, "bad group round count"))?
                        }
                        _ => return err(*line, format!("unexpected `{t}`")),
                    }
                }
                a.groups = body.iter().map(|(n, l)| nums(*n, l, ' ')).collect::<Result<_>>()?;
            }
            _ => {
                for (n, l) in body {
                    let mut col = Vec::new();
                    for (r, pair) in l.split_whitespace().enumerate() {
                        let p = nums(*n, pair, ',')?;
                        match p.as_slice() {
                            [round, block] if *round as usize == r => col.push(*block as usize),
                            _ => return err(*n, format!("expected `{r},<block>`, got `{pair}`")),
                        }
                    }
                    a.columns.push(col);
                }
            }
        }
    }
    if let Some(r) = h.opt_num("rounds")? {
        if r as usize != a.rounds.len() {
            return err(h.line, format!("header says {r} rounds, found {}", a.rounds.len()));
        }
    }
    if a.group_rounds > a.rounds.len() {
        return err(h.line, "more group rounds than rounds");
    }
    a.canonicalize();
    Ok(a)
}

pub fn write_allocation(a: &Allocation) -> String {
    let mut out = format!(
        "allocation v={} sizes={} counts={} rounds={}\n",
        a.v,
        join(&a.sizes, ","),
        join(&a.counts, ","),
        a.rounds.len()
    );
    for (i, round) in a.rounds.iter().enumerate() {
        let _ = writeln!(out, "round {i}");
        for b in round {
            let _ = writeln!(out, "{}", join(b, " "));
        }
    }
    if !a.groups.is_empty() || a.group_rounds > 0 {
        if a.group_rounds > 0 {
            let _ = writeln!(out, "groups rounds={}", a.group_rounds);
        } else {
            out.push_str("groups\n");
        }
        for g in &a.groups {
            let _ = writeln!(out, "{}", join(g, " "));
        }
    }
    if !a.columns.is_empty() {
        out.push_str("columns\n");
        for col in &a.columns {
            let pairs: Vec<String> = col.iter().enumerate().map(|(r, b)| format!("{r},{b}")).collect();
            let _ = writeln!(out, "{}", pairs.join(" "));
        }
    }
    out
}

/// ```text
/// design v=60 k=6 blocks=96
/// blocks
/// 0 12 24 35 46 58
/// groups
/// hole            (optional, one line)
/// resolution      (optional; one line of block indices per class)
/// ```
pub fn parse_design(text: &str) -> Result<GroupedDesign> {
    let s = sections(text, "design", &["blocks", "groups", "hole", "resolution"])?;
    let h = &s.header;
    let mut d = GroupedDesign {
        v: h.num("v")?,
        k: h.num("k")?,
        ..Default::default()
    };
    let mut resolution: Option<Vec<Vec<usize>>> = None;
    for (kw, _, line, body) in &s.parts {
        let rows: Vec<Vec<u32>> = body.iter().map(|(n, l)| nums(*n, l, ' ')).collect::<Result<_>>()?;
        match *kw {
            "blocks" => d.blocks = rows,
            "groups" => d.groups = rows,
            "hole" => {
                if rows.len() > 1 {
                    return err(*line, "hole must be a single line");
                }
                d.hole = rows.into_iter().flatten().collect();
            }
            _ => {
                resolution = Some(
                    rows.into_iter()
                        .map(|r| r.into_iter().map(|x| x as usize).collect())
                        .collect(),
                )
            }
        }
    }
    if let Some(b) = h.opt_num("blocks")? {
        if b as usize != d.blocks.len() {
            return err(h.line, format!("header says {b} blocks, found {}", d.blocks.len()));
        }
    }
    if let Some(res) = &resolution {
        if res.iter().flatten().any(|&i| i >= d.blocks.len()) {
            return err(h.line, "resolution names a missing block");
        }
    }
    d.resolution = resolution;
    Ok(d)
}

pub fn write_design(d: &GroupedDesign) -> String {
    let mut out = format!("design v={} k={} blocks={}\n", d.v, d.k, d.blocks.len());
    let mut section = |name: &str, rows: &[Vec<u32>]| {
        let _ = writeln!(out, "{name}");
        for r in rows {
            let _ = writeln!(out, "{}", join(r, " "));
        }
    };
    section("blocks", &d.blocks);
    if !d.groups.is_empty() {
        section("groups", &d.groups);
    }
    if !d.hole.is_empty() {
        section("hole", std::slice::from_ref(&d.hole));
    }
    if let Some(res) = &d.resolution {
        let res: Vec<Vec<u32>> = res.iter().map(|c| c.iter().map(|&i| i as u32).collect()).collect();
        section("resolution", &res);
    }
    out
}

/// ```text
/// urd v=30 classes=11
/// class 0
/// 0 1 2 3 4
/// ```
pub fn parse_urd(text: &str) -> Result<UrdDesign> {
    let s = sections(text, "urd", &["class"])?;
    let v = s.header.num("v")?;
    let mut classes = Vec::new();
    for (_, _, _, body) in &s.parts {
        classes.push(
            body.iter()
                .map(|(n, l)| nums(*n, l, ' '))
                .collect::<Result<Vec<Block>>>()?,
        );
    }
    if let Some(c) = s.header.opt_num("classes")? {
        if c as usize != classes.len() {
            return err(
                s.header.line,
                format!("header says {c} classes, found {}", classes.len()),
            );
        }
    }
    Ok(UrdDesign { v, classes })
}

pub fn write_urd(d: &UrdDesign) -> String {
    let mut out = format!("urd v={} classes={}\n", d.v, d.classes.len());
    for (i, c) in d.classes.iter().enumerate() {
        let _ = writeln!(out, "class {i}");
        for b in c {
            let _ = writeln!(out, "{}", join(b, " "));
        }
    }
    out
}

/// ```text
/// starters v=60 k=6 r=7
/// 0,1,2,3,4,5
/// ```
/// `r` is informational.
pub fn parse_starters(text: &str) -> Result<StarterSet> {
    let mut it = lines(text);
    let Some((hl, ht)) = it.next() else {
        return err(1, "empty input");
    };
    let h = Header::parse("starters", hl, ht)?;
    let blocks = it.map(|(n, l)| nums(n, l, ',')).collect::<Result<_>>()?;
    Ok(StarterSet {
        v: h.num("v")?,
        k: h.num("k")?,
        blocks,
    })
}

pub fn write_starters(s: &StarterSet) -> String {
    let mut out = format!("starters v={} k={} r={}\n", s.v, s.k, s.blocks.len());
    for b in &s.blocks {
        let _ = writeln!(out, "{}", join(b, ","));
    }
    out
}

/// ```text
/// mols n=4 count=3
/// square 0
/// 0 1 2 3
/// ```
pub fn parse_mols(text: &str) -> Result<Vec<LatinSquare>> {
    let s = sections(text, "mols", &["square"])?;
    let n = s.header.num("n")? as usize;
    let mut out = Vec::new();
    for (_, _, line, body) in &s.parts {
        let rows: Vec<Vec<u32>> = body.iter().map(|(n, l)| nums(*n, l, ' ')).collect::<Result<_>>()?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return err(*line, format!("square is not {n} × {n}"));
        }
        out.push(LatinSquare::from_rows(&rows).or_else(|e| err(*line, e.to_string()))?);
    }
    if let Some(c) = s.header.opt_num("count")? {
        if c as usize != out.len() {
            return err(s.header.line, format!("header says {c} squares, found {}", out.len()));
        }
    }
    Ok(out)
}

pub fn write_mols(n: usize, squares: &[LatinSquare]) -> String {
    let mut out = format!("mols n={n} count={}\n", squares.len());
    for (i, sq) in squares.iter().enumerate() {
        let _ = writeln!(out, "square {i}");
        for r in sq.rows() {
            let _ = writeln!(out, "{}", join(r, " "));
        }
    }
    out
}

/// ```text
/// qdm n=14 k=6 lambda=1 mu=0 u=1
/// - 0 0 0 …      (one line per row; `-` marks an empty cell)
/// ```
pub fn parse_qdm(text: &str) -> Result<QuasiDiffMatrix> {
    let mut it = lines(text);
    let Some((hl, ht)) = it.next() else {
        return err(1, "empty input");
    };
    let h = Header::parse("qdm", hl, ht)?;
    let cells: Vec<Vec<Option<u32>>> = it
        .map(|(n, l)| {
            l.split_whitespace()
                .map(|t| {
                    if t == "-" {
                        Ok(None)
                    } else {
                        t.parse().map(Some).or_else(|_| err(n, format!("bad cell `{t}`")))
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let q = QuasiDiffMatrix {
        n: h.num("n")?,
        lambda: h.num("lambda")?,
        mu: h.num("mu")?,
        u: h.num("u")?,
        cells,
    };
    if q.k() as u32 != h.num("k")? {
        return err(h.line, format!("header says k={}, found {} rows", h.num("k")?, q.k()));
    }
    if q.cells.iter().any(|r| r.len() != q.columns()) {
        return err(h.line, "rows differ in length");
    }
    Ok(q)
}

pub fn write_qdm(q: &QuasiDiffMatrix) -> String {
    let mut out = format!("qdm n={} k={} lambda={} mu={} u={}\n", q.n, q.k(), q.lambda, q.mu, q.u);
    for row in &q.cells {
        let cells: Vec<String> = row
            .iter()
            .map(|c| c.map_or_else(|| "-".to_string(), |x| x.to_string()))
            .collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

/// Tab-separated `v k1 k2 m1 m2 max method r`, one row per line; `#` lines
/// are comments.
pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let mut rows = Vec::new();
    for (n, l) in lines(text) {
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 8 {
            return err(n, format!("expected 8 tab-separated fields, found {}", f.len()));
        }
        let num = |i: usize| {
            f[i].trim()
                .parse::<u32>()
                .or_else(|_| err(n, format!("field {} is not a number", i + 1)))
        };
        rows.push(CatalogRow {
            v: num(0)?,
            k1: num(1)?,
            k2: num(2)?,
            m1: num(3)?,
            m2: num(4)?,
            max: num(5)?,
            method: f[6].trim().to_string(),
            r: num(7)?,
        });
    }
    Catalog::new(rows).or_else(|e| err(0, e.to_string()))
}

pub fn write_catalog_row(r: &CatalogRow) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.v, r.k1, r.k2, r.m1, r.m2, r.max, r.method, r.r
    )
}
