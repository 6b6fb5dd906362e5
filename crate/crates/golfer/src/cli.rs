//! Command dispatch. [`run`] takes arguments and output streams so the tool
//! can be driven in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use golfer_core::designs::{truncate, verify_allocation, AllocationCertificate};
use golfer_core::planner::{CatalogRow, PlanNode, Planner, Status};
use golfer_core::sga::SgaParams;

use crate::data::DataStore;
use crate::formats::{self, write_catalog_row};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 1;
pub const EXIT_DATA_REQUIRED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Tsv,
}

#[derive(Debug, Parser)]
#[command(
    name = "golfer",
    version,
    about = "Social golfer allocations: generate, verify, plan, look up"
)]
pub struct Cli {
    /// Directory shadowing the bundled data files
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Problem {
    /// Number of players v
    #[arg(short = 'v', long = "players")]
    pub players: u32,
    /// Single block size k
    #[arg(
        short = 'k',
        long = "size",
        conflicts_with = "sizes",
        required_unless_present = "sizes"
    )]
    pub size: Option<u32>,
    /// Adjacent block sizes k1,k2
    #[arg(long, value_delimiter = ',', num_args = 1, requires = "counts")]
    pub sizes: Option<Vec<u32>>,
    /// Block counts m1,m2 for the two sizes
    #[arg(long, value_delimiter = ',', num_args = 1, requires = "sizes")]
    pub counts: Option<Vec<u32>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an allocation and write it in the canonical format
    Generate {
        #[command(flatten)]
        problem: Problem,
        /// Keep only the first R rounds
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check an allocation file
    Verify { path: PathBuf },
    /// Select a method and report whether it can be built here
    Plan {
        #[command(flatten)]
        problem: Problem,
    },
    /// Print catalog rows for v, optionally narrowed to one block size
    Lookup { players: u32, size: Option<u32> },
    /// List or print the data files
    Data {
        #[command(subcommand)]
        action: DataAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum DataAction {
    List,
    Show { path: String },
}

/// Exit code of a command that ran to completion.
struct Outcome(i32);

fn sga_params(p: &Problem) -> anyhow::Result<Option<SgaParams>> {
    let (Some(sizes), Some(counts)) = (&p.sizes, &p.counts) else {
        return Ok(None);
    };
    let ([k1, k2], [m1, m2]) = (sizes.as_slice(), counts.as_slice()) else {
        anyhow::bail!("--sizes and --counts take exactly two values each");
    };
    if *k2 != k1 + 1 {
        anyhow::bail!("block sizes must be adjacent, got {k1},{k2}");
    }
    Ok(Some(SgaParams::new(p.players, *k1, *m1, *m2)?))
}

fn plan_for(planner: &Planner<'_>, p: &Problem) -> anyhow::Result<PlanNode> {
    match sga_params(p)? {
        Some(params) => Ok(planner.plan_sga(&params)?),
        None => {
            let k = p.size.context("--size or --sizes is required")?;
            Ok(planner.plan(p.players, k)?)
        }
    }
}

fn plan_line(node: &PlanNode, fmt: OutputFormat) -> String {
    let join = |xs: &[u32]| xs.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
    match fmt {
        OutputFormat::Text => {
            format!(
                "{} r={} max={} status={}",
                node.method_text, node.r, node.max, node.status
            )
        }
        OutputFormat::Tsv => format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            node.v,
            join(&node.sizes),
            join(&node.counts),
            node.method_text,
            node.r,
            node.max,
            node.status
        ),
    }
}

fn certificate_lines(c: &AllocationCertificate, fmt: OutputFormat) -> Vec<String> {
    match fmt {
        OutputFormat::Text => {
            let mut out = vec![format!(
                "rounds={} valid={} maximal={} bound={} covered={}/{} missing={}",
                c.rounds,
                c.valid,
                c.is_maximal,
                c.max_bound,
                c.pairs_covered,
                c.total_pairs,
                c.missing_pairs.len()
            )];
            out.extend(c.violations.iter().map(|v| format!("violation: {v}")));
            out
        }
        OutputFormat::Tsv => vec![format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            c.rounds,
            c.valid,
            c.is_maximal,
            c.max_bound,
            c.pairs_covered,
            c.total_pairs,
            c.missing_pairs.len()
        )],
    }
}

fn catalog_line(r: &CatalogRow, fmt: OutputFormat) -> String {
    match fmt {
        OutputFormat::Tsv => write_catalog_row(r),
        OutputFormat::Text if r.is_single() => {
            format!(
                "v={} k={} blocks={} max={} method={} r={}",
                r.v, r.k1, r.m1, r.max, r.method, r.r
            )
        }
        OutputFormat::Text => format!(
            "v={} k={},{} counts={},{} max={} method={} r={}",
            r.v, r.k1, r.k2, r.m1, r.m2, r.max, r.method, r.r
        ),
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<Outcome> {
    let store = match &cli.data_dir {
        Some(d) => DataStore::with_dir(d),
        None => DataStore::bundled(),
    };
    let fmt = cli.format;
    match cli.command {
        Command::Generate {
            problem,
            rounds,
            output,
        } => {
            let catalog = store.catalog()?;
            let planner = Planner::new(Some(&catalog), &store);
            let node = plan_for(&planner, &problem)?;
            let Some(mut a) = node.allocation.clone() else {
                writeln!(err, "{}", plan_line(&node, fmt))?;
                if let Some(m) = &node.missing {
                    writeln!(err, "reason: {m}")?;
                }
                return Ok(Outcome(EXIT_DATA_REQUIRED));
            };
            if let Some(r) = rounds {
                if r > a.num_rounds() {
                    anyhow::bail!("{r} rounds requested but the plan has {}", a.num_rounds());
                }
                a = truncate(&a, r)?;
            }
            let cert = verify_allocation(&a);
            let text = formats::write_allocation(&a);
            let summary: &mut dyn Write = match &output {
                Some(path) => {
                    std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
                    out
                }
                None => {
                    out.write_all(text.as_bytes())?;
                    err
                }
            };
            writeln!(summary, "{}", plan_line(&node, fmt))?;
            for l in certificate_lines(&cert, fmt) {
                writeln!(summary, "{l}")?;
            }
            Ok(Outcome(if cert.valid { EXIT_OK } else { EXIT_VERIFY_FAILED }))
        }
        Command::Verify { path } => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let a = formats::parse_allocation(&text).with_context(|| path.display().to_string())?;
            let cert = verify_allocation(&a);
            for l in certificate_lines(&cert, fmt) {
                writeln!(out, "{l}")?;
            }
            if fmt == OutputFormat::Text {
                writeln!(
                    out,
                    "sizes={}",
                    a.sizes.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
                )?;
            }
            Ok(Outcome(if cert.valid { EXIT_OK } else { EXIT_VERIFY_FAILED }))
        }
        Command::Plan { problem } => {
            let catalog = store.catalog()?;
            let planner = Planner::new(Some(&catalog), &store);
            let node = plan_for(&planner, &problem)?;
            writeln!(out, "{}", plan_line(&node, fmt))?;
            if let (Some(m), OutputFormat::Text) = (&node.missing, fmt) {
                writeln!(out, "reason: {m}")?;
            }
            Ok(Outcome(if node.status == Status::DataRequired {
                EXIT_DATA_REQUIRED
            } else {
                EXIT_OK
            }))
        }
        Command::Lookup { players, size } => {
            let catalog = store.catalog()?;
            let planner = Planner::new(Some(&catalog), &store);
            let rows = match size {
                Some(k) => planner
                    .catalog_lookup(players, &[], None)?
                    .into_iter()
                    .filter(|r| r.k1 == k || r.k2 == k)
                    .collect::<Vec<_>>(),
                None => planner.catalog_lookup(players, &[], None)?,
            };
            if rows.is_empty() {
                anyhow::bail!("no catalog row for v={players} with block size {}", size.unwrap_or(0));
            }
            for r in rows {
                writeln!(out, "{}", catalog_line(r, fmt))?;
            }
            Ok(Outcome(EXIT_OK))
        }
        Command::Data { action } => {
            match action {
                DataAction::List => {
                    for p in store.list() {
                        writeln!(out, "{p}")?;
                    }
                }
                DataAction::Show { path } => {
                    let text = store.read(&path)?.with_context(|| format!("no data file `{path}`"))?;
                    out.write_all(text.as_bytes())?;
                }
            }
            Ok(Outcome(EXIT_OK))
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// exit code: 0 success, 1 invalid input, 2 data required, 3 verification
/// failure.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_INVALID_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli, out, err) {
        Ok(Outcome(code)) => code,
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_INVALID_INPUT
        }
    }
}
