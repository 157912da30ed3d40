//! Command-line front end.
//!
//! Exit codes: 0 success, 1 unknown variety / invalid surface / failed
//! validation / table mismatch, 2 usage or atlas parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::atlas::{self, AtlasDatabase, RecordReport, VarietyRecord, PAPER_TABLE};
use crate::chern::{Ch2Report, Classification, Intersections};
use crate::fan::Cone;

#[derive(Debug, Parser)]
#[command(
    name = "toric-ch2",
    version,
    about = "Second Chern character of smooth toric Fano 4-folds"
)]
struct Args {
    /// Atlas file to load instead of the built-in database
    #[arg(long, global = true)]
    db: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    /// Worker threads (default: available cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List varieties with ray and collection counts
    List,
    /// Print one record in atlas format
    Show { name: String },
    /// ch2(T_X) on one surface, or on every invariant surface
    Ch2 {
        name: String,
        /// Surface V(i,j) as `i,j` (1-based ray indices)
        #[arg(long)]
        surface: Option<String>,
    },
    /// Minimum of ch2 over invariant surfaces and the resulting class
    Classify {
        names: Vec<String>,
        #[arg(long, conflicts_with = "names")]
        all: bool,
    },
    /// Recompute every row of the published results table
    PaperTable,
    /// Check smoothness, completeness, collections and the Fano condition
    Validate { file: Option<PathBuf> },
}

/// A value of ch2 on one surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRow {
    pub variety: String,
    pub surface: String,
    pub value: String,
    pub classification: String,
}

#[derive(Debug, Serialize)]
struct TableOutputRow {
    variety: String,
    surface: String,
    value: String,
    classification: String,
    expected: String,
    matches: bool,
}

#[derive(Debug, Serialize)]
struct ListRow<'a> {
    variety: &'a str,
    rays: usize,
    collections: usize,
    derived: bool,
}

#[derive(Debug, Serialize)]
struct ValidateRow<'a> {
    variety: &'a str,
    smooth: bool,
    complete: bool,
    round_trip: bool,
    fano: bool,
    passed: bool,
    failures: &'a [String],
}

#[derive(Debug, Serialize)]
struct ShowRecord<'a> {
    variety: &'a str,
    rays: Vec<Vec<String>>,
    collections: Vec<&'a [usize]>,
    derived: bool,
}

/// A failed command: exit code plus message for stderr.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new(2, format!("write error: {e}"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker threads: {e}");
            return 2;
        }
    };
    // Commands buffer their output; the sink need not be Send.
    let mut buf = Vec::new();
    let result = pool.install(|| dispatch(&args, &mut buf));
    if let Err(e) = out.write_all(&buf) {
        let _ = writeln!(err, "error: write error: {e}");
        return 2;
    }
    match result {
        Ok(()) => 0,
        Err(f) => {
            if !f.message.is_empty() {
                let _ = writeln!(err, "error: {}", f.message);
            }
            f.code
        }
    }
}

fn load(path: Option<&PathBuf>) -> Result<AtlasDatabase, Failure> {
    match path {
        None => Ok(atlas::shipped_database()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::new(2, format!("{}: {e}", p.display())))?;
            atlas::parse(&text).map_err(|e| Failure::new(2, format!("{}: {e}", p.display())))
        }
    }
}

fn dispatch(args: &Args, out: &mut dyn Write) -> CmdResult {
    match &args.command {
        Command::List => cmd_list(&load(args.db.as_ref())?, args.format, out),
        Command::Show { name } => cmd_show(&load(args.db.as_ref())?, name, args.format, out),
        Command::Ch2 { name, surface } => {
            let surface = surface.as_deref().map(parse_surface).transpose()?;
            cmd_ch2(&load(args.db.as_ref())?, name, surface, args.format, out)
        }
        Command::Classify { names, all } => {
            if names.is_empty() && !all {
                return Err(Failure::new(2, "classify needs variety names or --all"));
            }
            cmd_classify(&load(args.db.as_ref())?, names, args.format, out)
        }
        Command::PaperTable => cmd_paper_table(&load(args.db.as_ref())?, args.format, out),
        Command::Validate { file } => {
            let db = load(file.as_ref().or(args.db.as_ref()))?;
            cmd_validate(&db, args.format, out)
        }
    }
}

fn parse_surface(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::new(2, format!("invalid surface `{s}`, expected `i,j`"));
    let (i, j) = s.split_once(',').ok_or_else(bad)?;
    let i = i.trim().parse().map_err(|_| bad())?;
    let j = j.trim().parse().map_err(|_| bad())?;
    Ok((i, j))
}

fn write_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::new(2, format!("serialization failed: {e}")))?;
    writeln!(out, "{text}").map_err(io_failure)
}

fn write_tsv(out: &mut dyn Write, header: &[&str], rows: &[Vec<String>]) -> CmdResult {
    writeln!(out, "{}", header.join("\t")).map_err(io_failure)?;
    for row in rows {
        writeln!(out, "{}", row.join("\t")).map_err(io_failure)?;
    }
    Ok(())
}

fn lookup<'a>(db: &'a AtlasDatabase, name: &str) -> Result<&'a VarietyRecord, Failure> {
    db.lookup(name)
        .ok_or_else(|| Failure::new(1, format!("unknown variety `{name}`")))
}

/// Validates the record, then computes its full ch2 report.
fn report_for(rec: &VarietyRecord) -> Result<Ch2Report, Failure> {
    let validation = atlas::validate_record(rec);
    if !validation.passed() {
        return Err(Failure::new(
            1,
            format!(
                "variety {} failed validation: {}",
                rec.name,
                validation.failures.join("; ")
            ),
        ));
    }
    let fan = rec
        .build_fan()
        .map_err(|e| Failure::new(1, format!("variety {}: {e}", rec.name)))?;
    Intersections::new(&fan)
        .classify()
        .map_err(|e| Failure::new(1, format!("variety {}: {e}", rec.name)))
}

fn cmd_list(db: &AtlasDatabase, format: Format, out: &mut dyn Write) -> CmdResult {
    let rows: Vec<ListRow> = db
        .records
        .iter()
        .map(|r| ListRow {
            variety: &r.name,
            rays: r.rays.len(),
            collections: r.collections.len(),
            derived: r.derived,
        })
        .collect();
    match format {
        Format::Json => write_json(out, &rows),
        Format::Tsv => {
            for r in rows {
                let note = if r.derived { "\tderived" } else { "" };
                writeln!(out, "{}\t{}\t{}{note}", r.variety, r.rays, r.collections)
                    .map_err(io_failure)?;
            }
            Ok(())
        }
    }
}

fn cmd_show(db: &AtlasDatabase, name: &str, format: Format, out: &mut dyn Write) -> CmdResult {
    let rec = lookup(db, name)?;
    match format {
        Format::Tsv => write!(out, "{}", rec.render()).map_err(io_failure),
        Format::Json => write_json(
            out,
            &ShowRecord {
                variety: &rec.name,
                rays: rec
                    .rays
                    .iter()
                    .map(|r| r.0.iter().map(ToString::to_string).collect())
                    .collect(),
                collections: rec.collections.iter().map(|c| c.indices()).collect(),
                derived: rec.derived,
            },
        ),
    }
}

fn cmd_ch2(
    db: &AtlasDatabase,
    name: &str,
    surface: Option<(usize, usize)>,
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let rec = lookup(db, name)?;
    let report = report_for(rec)?;
    let row = |cone: &Cone| OutputRow {
        variety: rec.name.clone(),
        surface: cone.to_string(),
        value: report.values[cone].to_string(),
        classification: report.classification.to_string(),
    };
    if let Some((i, j)) = surface {
        let cone = Cone::try_new([i, j], rec.rays.len())
            .ok()
            .filter(|c| c.dim() == 2 && report.values.contains_key(c))
            .ok_or_else(|| {
                Failure::new(
                    1,
                    format!("V({i},{j}) is not a cone of variety {}", rec.name),
                )
            })?;
        let row = row(&cone);
        return match format {
            Format::Tsv => writeln!(out, "{}", row.value).map_err(io_failure),
            Format::Json => write_json(out, &row),
        };
    }
    let rows: Vec<OutputRow> = report.values.keys().map(row).collect();
    match format {
        Format::Json => write_json(out, &rows),
        Format::Tsv => {
            write_tsv(
                out,
                &["variety", "surface", "value", "classification"],
                &rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.variety.clone(),
                            r.surface.clone(),
                            r.value.clone(),
                            r.classification.clone(),
                        ]
                    })
                    .collect_vec(),
            )?;
            writeln!(
                out,
                "# min {} at {}: {}",
                report.min, report.witness, report.classification
            )
            .map_err(io_failure)
        }
    }
}

fn cmd_classify(
    db: &AtlasDatabase,
    names: &[String],
    format: Format,
    out: &mut dyn Write,
) -> CmdResult {
    let records: Vec<&VarietyRecord> = if names.is_empty() {
        db.records.iter().collect()
    } else {
        names
            .iter()
            .map(|n| lookup(db, n))
            .collect::<Result<_, _>>()?
    };
    let reports: Vec<Result<Ch2Report, Failure>> =
        records.par_iter().map(|r| report_for(r)).collect();
    let mut rows = Vec::with_capacity(records.len());
    for (rec, report) in records.iter().zip(reports) {
        let report = report?;
        rows.push(OutputRow {
            variety: rec.name.clone(),
            surface: report.witness.to_string(),
            value: report.min.to_string(),
            classification: report.classification.to_string(),
        });
    }
    match format {
        Format::Json => write_json(out, &rows),
        Format::Tsv => {
            write_tsv(
                out,
                &["variety", "surface", "value", "classification"],
                &rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.variety.clone(),
                            r.surface.clone(),
                            r.value.clone(),
                            r.classification.clone(),
                        ]
                    })
                    .collect_vec(),
            )?;
            let two_fano = rows
                .iter()
                .filter(|r| r.classification == Classification::TwoFano.as_str())
                .map(|r| r.variety.as_str())
                .collect_vec();
            writeln!(
                out,
                "# two_fano: {} of {} ({})",
                two_fano.len(),
                rows.len(),
                two_fano.join(", ")
            )
            .map_err(io_failure)
        }
    }
}

fn cmd_paper_table(db: &AtlasDatabase, format: Format, out: &mut dyn Write) -> CmdResult {
    let computed: Vec<Result<(String, String), String>> = PAPER_TABLE
        .par_iter()
        .map(|row| {
            let rec = db
                .lookup(row.variety)
                .ok_or_else(|| "variety missing from database".to_string())?;
            let report = report_for(rec).map_err(|f| f.message)?;
            let value = report
                .values
                .get(&row.cone())
                .ok_or_else(|| format!("{} is not a cone", row.cone()))?;
            Ok((value.to_string(), report.classification.to_string()))
        })
        .collect();

    let mut rows = Vec::with_capacity(PAPER_TABLE.len());
    let mut mismatches = Vec::new();
    for (row, result) in PAPER_TABLE.iter().zip(computed) {
        let expected = row.expected().to_string();
        let (value, classification) = match result {
            Ok(v) => v,
            Err(reason) => (format!("error: {reason}"), String::new()),
        };
        let matches = value == expected;
        if !matches {
            mismatches.push(format!(
                "{} {}: expected {expected}, computed {value}",
                row.variety,
                row.cone()
            ));
        }
        rows.push(TableOutputRow {
            variety: row.variety.to_string(),
            surface: row.cone().to_string(),
            value,
            classification,
            expected,
            matches,
        });
    }
    match format {
        Format::Json => write_json(out, &rows)?,
        Format::Tsv => write_tsv(
            out,
            &[
                "variety",
                "surface",
                "value",
                "classification",
                "expected",
                "status",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.variety.clone(),
                        r.surface.clone(),
                        r.value.clone(),
                        r.classification.clone(),
                        r.expected.clone(),
                        if r.matches { "ok" } else { "MISMATCH" }.to_string(),
                    ]
                })
                .collect_vec(),
        )?,
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            1,
            format!(
                "{} of {} rows differ from the table:\n{}",
                mismatches.len(),
                rows.len(),
                mismatches.join("\n")
            ),
        ))
    }
}

fn cmd_validate(db: &AtlasDatabase, format: Format, out: &mut dyn Write) -> CmdResult {
    let reports: Vec<RecordReport> = db.records.par_iter().map(atlas::validate_record).collect();
    match format {
        Format::Json => write_json(
            out,
            &reports
                .iter()
                .map(|r| ValidateRow {
                    variety: &r.name,
                    smooth: r.smooth,
                    complete: r.complete,
                    round_trip: r.round_trip,
                    fano: r.fano,
                    passed: r.passed(),
                    failures: &r.failures,
                })
                .collect_vec(),
        )?,
        Format::Tsv => write_tsv(
            out,
            &[
                "variety",
                "smooth",
                "complete",
                "round_trip",
                "fano",
                "status",
            ],
            &reports
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        r.smooth.to_string(),
                        r.complete.to_string(),
                        r.round_trip.to_string(),
                        r.fano.to_string(),
                        if r.passed() { "pass" } else { "FAIL" }.to_string(),
                    ]
                })
                .collect_vec(),
        )?,
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{}: {}", r.name, r.failures.join("; ")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            1,
            format!(
                "{} record(s) failed validation:\n{}",
                failed.len(),
                failed.join("\n")
            ),
        ))
    }
}
