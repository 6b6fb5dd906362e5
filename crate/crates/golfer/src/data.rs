//! Bundled data files and the design source backed by them.
//!
//! Lookups try the override directory first, then the copies compiled into
//! the binary. File names follow the method notation:
//!
//! | ingredient            | path                         |
//! |-----------------------|------------------------------|
//! | resolved `RBIBD(28,4)`| `designs/RBIBD_28_4.txt`     |
//! | URD(v,k,k₁)           | `designs/URD_v_k_k1.txt`     |
//! | ITD(n₁,n₂;k)          | `designs/ITD_n1_n2_k.txt`    |
//! | starter blocks        | `starters/ownsg_v_k.txt`     |
//! | MOLS(n)               | `mols/MOLS_n.txt`            |
//! | (n,k;1,μ;u) QDM       | `qdm/QDM_n_k_u.txt`          |

use std::path::{Path, PathBuf};

use golfer_core::constructions::StarterSet;
use golfer_core::designs::{Allocation, GroupedDesign, UrdDesign};
use golfer_core::diffmat::QuasiDiffMatrix;
use golfer_core::latin::{BoundSource, LatinSquare};
use golfer_core::planner::{Catalog, DesignSource};

use crate::formats::{self, FormatError};

macro_rules! bundle {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../data/", $path)))),*]
    };
}

/// Every bundled file as (relative path, contents).
pub static BUNDLED: &[(&str, &str)] = bundle![
    "catalog.tsv",
    "mols_bounds.tsv",
    "designs/ITD_10_2_6.txt",
    "designs/RBIBD_16_4.txt",
    "designs/RBIBD_28_4.txt",
    "designs/RGDD_24_4_3.txt",
    "designs/URD_30_5_2.txt",
    "samples/sgp_28_4.txt",
    "samples/sgp_24_4.txt",
    "samples/sga_24_4_removed.txt",
    "samples/sga_22_3_4.txt",
    "samples/molrs_36_6.txt",
    "samples/rbibd_16_4.txt",
    "samples/rtd_4_7.txt",
    "starters/ownsg_60_6.txt",
    "starters/ownsg_70_7.txt",
    "starters/ownsg_80_8.txt",
    "starters/ownsg_84_6.txt",
    "starters/ownsg_84_7.txt",
    "starters/ownsg_90_6.txt",
    "starters/ownsg_90_9.txt",
    "starters/ownsg_96_8.txt",
    "starters/ownsg_98_7.txt",
    "starters/ownsg_105_7.txt",
    "starters/ownsg_112_8.txt",
    "starters/ownsg_120_6.txt",
    "starters/ownsg_126_7.txt",
    "starters/ownsg_126_9.txt",
    "starters/ownsg_132_6.txt",
    "starters/ownsg_135_9.txt",
    "starters/ownsg_156_6.txt",
];

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("no data file `{0}`")]
    Missing(String),
}

/// Bundled files, optionally shadowed by a directory with the same layout.
#[derive(Debug, Clone, Default)]
pub struct DataStore {
    dir: Option<PathBuf>,
}

impl DataStore {
    pub fn bundled() -> Self {
        DataStore { dir: None }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        DataStore { dir: Some(dir.into()) }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Contents of `rel`, or None when neither the directory nor the bundle
    /// has it.
    pub fn read(&self, rel: &str) -> Result<Option<String>, DataError> {
        if let Some(dir) = &self.dir {
            let p = dir.join(rel);
            match std::fs::read_to_string(&p) {
                Ok(s) => return Ok(Some(s)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => {
                    return Err(DataError::Io {
                        path: p.display().to_string(),
                        source: e,
                    })
                }
            }
        }
        Ok(BUNDLED.iter().find(|(p, _)| *p == rel).map(|(_, s)| s.to_string()))
    }

    /// Relative paths available, override directory entries first.
    pub fn list(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        if let Some(dir) = &self.dir {
            collect_files(dir, dir, &mut out);
        }
        for (p, _) in BUNDLED {
            if !out.iter().any(|x| x == p) {
                out.push(p.to_string());
            }
        }
        out
    }

    fn parse<T>(&self, rel: &str, f: impl Fn(&str) -> Result<T, FormatError>) -> Result<Option<T>, DataError> {
        match self.read(rel)? {
            Some(text) => f(&text).map(Some).map_err(|source| DataError::Format {
                path: rel.to_string(),
                source,
            }),
            None => Ok(None),
        }
    }

    pub fn catalog(&self) -> Result<Catalog, DataError> {
        self.parse("catalog.tsv", formats::parse_catalog)?
            .ok_or_else(|| DataError::Missing("catalog.tsv".into()))
    }

    /// The MOLS bound table shipped alongside the catalog: (n, N(n) ≥, source).
    pub fn mols_bounds(&self) -> Result<Vec<(u32, usize, BoundSource)>, DataError> {
        let text = self
            .read("mols_bounds.tsv")?
            .ok_or_else(|| DataError::Missing("mols_bounds.tsv".into()))?;
        let bad = |line: usize, msg: &str| DataError::Format {
            path: "mols_bounds.tsv".into(),
            source: FormatError {
                line,
                msg: msg.to_string(),
            },
        };
        let mut out = Vec::new();
        for (i, l) in text.lines().enumerate() {
            if l.trim().is_empty() || l.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = l.split('\t').collect();
            let [n, b, s] = f.as_slice() else {
                return Err(bad(i + 1, "expected 3 fields"));
            };
            let source = match *s {
                "literature" => BoundSource::Literature,
                "macneish" => BoundSource::MacNeish,
                "prime_power" => BoundSource::PrimePower,
                _ => return Err(bad(i + 1, "unknown source")),
            };
            out.push((
                n.parse().map_err(|_| bad(i + 1, "bad n"))?,
                b.parse().map_err(|_| bad(i + 1, "bad bound"))?,
                source,
            ));
        }
        Ok(out)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) {
    let Ok(entries) = std::fs::read_dir(dir) else { return };
    let mut entries: Vec<_> = entries.flatten().map(|e| e.path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out);
        } else if let Ok(rel) = p.strip_prefix(root) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
}

/// `RBIBD(28,4)` → `RBIBD_28_4`.
pub fn file_stem(method: &str) -> String {
    let mut out = String::new();
    for c in method.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}

fn core_err(e: DataError) -> golfer_core::Error {
    golfer_core::Error::Invalid(e.to_string())
}

impl DesignSource for DataStore {
    fn resolved(&self, base: &str) -> golfer_core::Result<Option<Allocation>> {
        self.parse(&format!("designs/{}.txt", file_stem(base)), formats::parse_allocation)
            .map_err(core_err)
    }

    fn urd(&self, v: u32, k: u32, k1: u32) -> golfer_core::Result<Option<UrdDesign>> {
        self.parse(&format!("designs/URD_{v}_{k}_{k1}.txt"), formats::parse_urd)
            .map_err(core_err)
    }

    fn itd(&self, n1: u32, n2: u32, k: u32) -> golfer_core::Result<Option<GroupedDesign>> {
        self.parse(&format!("designs/ITD_{n1}_{n2}_{k}.txt"), formats::parse_design)
            .map_err(core_err)
    }

    fn starters(&self, v: u32, k: u32) -> golfer_core::Result<Option<StarterSet>> {
        self.parse(&format!("starters/ownsg_{v}_{k}.txt"), formats::parse_starters)
            .map_err(core_err)
    }

    fn mols(&self, n: u32) -> golfer_core::Result<Option<Vec<LatinSquare>>> {
        self.parse(&format!("mols/MOLS_{n}.txt"), formats::parse_mols)
            .map_err(core_err)
    }

    fn qdm(&self, n: u32, k: u32, u: u32) -> golfer_core::Result<Option<QuasiDiffMatrix>> {
        self.parse(&format!("qdm/QDM_{n}_{k}_{u}.txt"), formats::parse_qdm)
            .map_err(core_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(file_stem("RBIBD(28,4)"), "RBIBD_28_4");
        assert_eq!(file_stem("URD({30,5,2})"), "URD_30_5_2");
        assert_eq!(file_stem("RITD(10,2;5)"), "RITD_10_2_5");
    }

    #[test]
    fn every_bundled_file_is_listed_once() {
        let l = DataStore::bundled().list();
        assert_eq!(l.len(), BUNDLED.len());
        assert!(DataStore::bundled().read("nope.txt").unwrap().is_none());
    }
}
