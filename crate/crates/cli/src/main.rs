//! `excomp`: batch front end for the completion engine.
//!
//! Exit codes: 0 pass, 1 law violation, 2 input error, 3 resource limit.
//! The JSON report goes to standard output and a one-line summary to
//! standard error.

mod commands;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use excomp::error::{input, violation};
use excomp::io::read_json;
use excomp::Result;

use commands::{Common, CqArgs, Suite};
use report::{Recorder, RunReport};

#[derive(Parser, Debug)]
#[command(name = "excomp", version, about = "Existential completion of finite doctrines")]
struct Cli {
    /// Seed for randomised suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Enumeration budget; each command has its own default.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Where to write the command's dump, if it has one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Re-run the command recorded in a report and compare the outcome.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check the category and the doctrine laws of a descriptor.
    Check {
        doctrine: PathBuf,
        #[arg(long)]
        primary: bool,
        #[arg(long)]
        existential: bool,
        #[arg(long)]
        elementary: bool,
    },
    /// Build the existential completion, check it and optionally dump it.
    Complete {
        doctrine: PathBuf,
        /// `projections`, `identities` or a JSON list of generating arrows.
        #[arg(long)]
        lambda: Option<String>,
        /// Also complete the completion.
        #[arg(long)]
        twice: bool,
        /// Accept classes whose meet has no pullback witness.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Run a law suite end to end.
    Laws {
        /// Doctrine descriptor, action file (algebra) or pair file (kz).
        file: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Conjunctive query containment.
    Cq {
        signature: PathBuf,
        query: Option<PathBuf>,
        /// Compare with the completion on the fragment CONTEXT,BOUND,ATOMS.
        #[arg(long, value_name = "BOUNDS")]
        compare_completion: Option<String>,
        /// Cross-check this many seeded random pairs against small models.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 3)]
        max_model: usize,
    },
    /// Objects and morphisms of the exact completion.
    Exact {
        doctrine: PathBuf,
        candidates: PathBuf,
        /// Enumerate morphism classes and check the category laws.
        #[arg(long)]
        verify_laws: bool,
    },
}

fn dispatch(cli: &Cli, rec: &mut Recorder) -> Result<()> {
    let common = Common { seed: cli.seed, budget: cli.budget, out: cli.out.clone() };
    match cli.cmd.as_ref().ok_or_else(|| input("no command given"))? {
        Cmd::Check { doctrine, primary, existential, elementary } => {
            commands::check(rec, doctrine, *primary, *existential, *elementary)
        }
        Cmd::Complete { doctrine, lambda, twice, allow_partial } => {
            commands::complete_cmd(rec, &common, doctrine, lambda.as_deref(), *twice, *allow_partial)
        }
        Cmd::Laws { file, suite } => commands::laws(rec, &common, file, *suite),
        Cmd::Cq { signature, query, compare_completion, sample, max_model } => commands::cq(
            rec,
            &common,
            CqArgs {
                signature,
                query: query.as_deref(),
                compare: compare_completion.as_deref(),
                sample: *sample,
                max_model: *max_model,
            },
        ),
        Cmd::Exact { doctrine, candidates, verify_laws } => {
            commands::exact(rec, &common, doctrine, candidates, *verify_laws)
        }
    }
}

fn run(cli: &Cli, argv: Vec<String>) -> RunReport {
    let mut rec = Recorder::default();
    let outcome = dispatch(cli, &mut rec);
    rec.finish(argv, outcome)
}

/// Re-runs a recorded command; the outcome must match status and counterexample.
fn replay(path: &Path) -> RunReport {
    let recorded: Value = match read_json(path) {
        Ok(v) => v,
        Err(e) => return Recorder::default().finish(vec!["--replay".into(), path.display().to_string()], Err(e)),
    };
    let argv: Vec<String> = recorded["command"]
        .as_array()
        .map(|a| a.iter().filter_map(|s| s.as_str().map(String::from)).collect())
        .unwrap_or_default();
    let cli = match Cli::try_parse_from(std::iter::once("excomp".to_string()).chain(argv.iter().cloned())) {
        Ok(c) if c.replay.is_none() => c,
        _ => {
            let err = input(format!("{} does not record a runnable command", path.display()));
            return Recorder::default().finish(argv, Err(err));
        }
    };
    let mut report = run(&cli, argv);
    let same = json!(report.status) == recorded["status"]
        && serde_json::to_value(&report.counterexample).ok().as_ref() == Some(&recorded["counterexample"]);
    report.data.insert("replay".into(), json!({ "source": path.display().to_string(), "reproduced": same }));
    if !same {
        let v = violation(
            "replay-mismatch",
            format!("outcome differs from {}", path.display()),
            json!({ "recorded": recorded["status"], "now": report.status }),
        );
        report.status = "violation";
        report.exit_code = 1;
        report.counterexample = v.violation().cloned();
    }
    report
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let report = match &cli.replay {
        Some(path) => replay(path),
        None => run(&cli, argv),
    };
    let text = serde_json::to_string_pretty(&report).expect("serialisable report");
    // A closed pipe downstream is not the command's failure.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    let what = match (&report.counterexample, &report.error) {
        (Some(v), _) => format!(": {v}"),
        (None, Some(e)) => format!(": {e}"),
        _ => match report.data.get("verdict").and_then(Value::as_str) {
            Some(v) => format!(": {v}"),
            None => String::new(),
        },
    };
    eprintln!(
        "excomp: {} ({} checks, {} ms){}",
        report.status,
        report.checks.len(),
        start.elapsed().as_millis(),
        what
    );
    ExitCode::from(report.exit_code as u8)
}
