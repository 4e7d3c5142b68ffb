// SPDX-License-Identifier: Apache-2.0

//! `til`: check, emit, test and dump TIL projects.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use til_core::check::check_project;
use til_core::db::{Database, Project};
use til_core::diagnostic::{codes, has_errors};
use til_core::syntax::ast::TestFile;
use til_core::syntax::{parse_tests, parse_til, pretty_print};
use til_core::transactions::{plan_violations, render_transfer, resolve_test, tested_streamlets, Role, TestPlan};
use til_core::vhdl::{plan_output, write_output, EmitOptions};
use til_core::{Diagnostic, Identifier};

#[derive(Parser)]
#[command(name = "til", version, about = "Compiler for the TIL streaming-interface language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a project.
    Check(Common),
    /// Check a project and write VHDL.
    Emit {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Escape names containing `__` as extended identifiers.
        #[arg(long)]
        extended_identifiers: bool,
    },
    /// Check a project and plan the transfers of its `.til-test` files.
    Test {
        #[command(flatten)]
        common: Common,
        /// Print every transfer as a lane grid.
        #[arg(long)]
        transfers: bool,
    },
    /// Print the project in canonical form.
    Dump(Common),
}

#[derive(Args)]
struct Common {
    /// `.til` sources; `.til-test` files are read as tests.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Project name (default: the first file's stem).
    #[arg(long)]
    project: Option<String>,
    /// Report query counters on standard error.
    #[arg(long)]
    stats: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Exit statuses.
const OK: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;

struct Loaded {
    db: Database,
    tests: Vec<(PathBuf, TestFile)>,
    root: PathBuf,
}

fn report(diags: &[Diagnostic], format: Format) {
    for d in diags {
        match format {
            Format::Text => eprintln!("{d}"),
            Format::Json => eprintln!("{}", serde_json::to_string(d).expect("diagnostics serialize")),
        }
    }
}

/// Reads and parses every input. `Err` carries the exit status.
fn load(common: &Common) -> Result<(Loaded, Vec<Diagnostic>), u8> {
    let sources: Vec<&PathBuf> = common.inputs.iter().filter(|p| !is_test(p)).collect();
    let name = match &common.project {
        Some(n) => n.clone(),
        None => sources
            .first()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".into()),
    };
    let name = Identifier::new(name).map_err(|e| {
        eprintln!("error: invalid project name: {e} (use --project)");
        USAGE
    })?;
    let root = sources
        .first()
        .and_then(|p| p.parent())
        .map(Path::to_path_buf)
        .unwrap_or_default();

    let mut project = Project::new(name);
    let mut diags = Vec::new();
    let mut tests = Vec::new();
    for path in &common.inputs {
        let text = std::fs::read_to_string(path).map_err(|e| {
            report(
                &[Diagnostic::error(codes::IO, e.to_string()).with_path(path.display().to_string())],
                common.format,
            );
            USAGE
        })?;
        let label = path.display().to_string();
        if is_test(path) {
            let (file, d) = parse_tests(&label, &text);
            diags.extend(d);
            tests.push((path.clone(), file));
        } else {
            let (file, d) = parse_til(&label, &text);
            diags.extend(d);
            diags.extend(project.add_source(&file));
        }
    }
    Ok((Loaded { db: Database::new(project), tests, root }, diags))
}

fn is_test(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "til-test")
}

/// Load and check; stops with an exit status on any error.
fn checked(common: &Common) -> Result<Loaded, u8> {
    let (loaded, mut diags) = load(common)?;
    if !has_errors(&diags) {
        diags.extend(check_project(&loaded.db));
    }
    report(&diags, common.format);
    if has_errors(&diags) {
        Err(FAILED)
    } else {
        Ok(loaded)
    }
}

fn stats(db: &Database, common: &Common) {
    if !common.stats {
        return;
    }
    match common.format {
        Format::Json => eprintln!("{}", serde_json::to_string(&db.stats()).expect("stats serialize")),
        Format::Text => {
            for (kind, s) in db.stats() {
                eprintln!("query {kind}: {} computed, {} cached", s.computed, s.hits);
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), u8> {
    match cli.command {
        Command::Check(common) => {
            let loaded = checked(&common)?;
            stats(&loaded.db, &common);
        }
        Command::Emit { common, out, extended_identifiers } => {
            let loaded = checked(&common)?;
            let opts = EmitOptions { extended_identifiers };
            let files = plan_output(&loaded.db, &loaded.root, &out, &opts).map_err(|d| {
                report(&d, common.format);
                FAILED
            })?;
            write_output(&files).map_err(|d| {
                report(&[d], common.format);
                USAGE
            })?;
            for f in &files {
                println!("{:<9} {}", f.note, f.path.display());
            }
            stats(&loaded.db, &common);
        }
        Command::Test { common, transfers } => {
            let loaded = checked(&common)?;
            let failed = run_tests(&loaded, &common, transfers)?;
            stats(&loaded.db, &common);
            if failed {
                return Err(FAILED);
            }
        }
        Command::Dump(common) => {
            let (loaded, diags) = load(&common)?;
            let parse_errors: Vec<_> = diags.into_iter().filter(|d| d.code == codes::SYNTAX).collect();
            report(&parse_errors, common.format);
            if has_errors(&parse_errors) {
                return Err(FAILED);
            }
            print!("{}", pretty_print(&loaded.db.project().to_source()));
        }
    }
    Ok(())
}

/// Returns whether any test reported a violation.
fn run_tests(loaded: &Loaded, common: &Common, show_transfers: bool) -> Result<bool, u8> {
    let all = loaded.db.all_streamlets();
    let mut failed = false;
    let mut json = Vec::new();
    for (path, file) in &loaded.tests {
        for name in tested_streamlets(file) {
            let candidates: Vec<_> = all.iter().filter(|(_, s)| s.name == name).collect();
            let [(ns, s)] = candidates.as_slice() else {
                let msg = if candidates.is_empty() {
                    format!("no streamlet named `{name}`")
                } else {
                    format!("streamlet name `{name}` is ambiguous across namespaces")
                };
                report(
                    &[Diagnostic::error(codes::UNRESOLVED, msg).with_path(path.display().to_string())],
                    common.format,
                );
                failed = true;
                continue;
            };
            let ports = loaded.db.lowered(ns, &s.name).map_err(|d| {
                report(&d, common.format);
                FAILED
            })?;
            let plan = match resolve_test(file, s, &ports) {
                Ok(p) => p,
                Err(d) => {
                    report(&d, common.format);
                    failed = true;
                    continue;
                }
            };
            let violations = plan_violations(&plan);
            failed |= !violations.is_empty();
            match common.format {
                Format::Text => print_plan(path, &plan, &violations, show_transfers),
                Format::Json => json.push(serde_json::json!({
                    "file": path.display().to_string(),
                    "plan": plan,
                    "violations": violations
                        .iter()
                        .map(|(stream, v)| serde_json::json!({ "stream": stream, "violations": v }))
                        .collect::<Vec<_>>(),
                })),
            }
        }
    }
    if common.format == Format::Json {
        println!("{}", serde_json::to_string_pretty(&json).expect("plans serialize"));
    }
    Ok(failed)
}

fn print_plan(
    path: &Path,
    plan: &TestPlan,
    violations: &[(String, Vec<til_core::transactions::Violation>)],
    show_transfers: bool,
) {
    println!("{}: streamlet {}", path.display(), plan.streamlet);
    for seq in &plan.sequences {
        let indent = match &seq.name {
            Some(n) => {
                println!("  sequence {n}");
                "    "
            }
            None => "  ",
        };
        for (i, stage) in seq.stages.iter().enumerate() {
            println!("{indent}stage {} {}", i + 1, stage.name);
            for s in &stage.streams {
                let role = match s.role {
                    Role::Drive => "drive",
                    Role::Compare => "compare",
                };
                println!(
                    "{indent}  {:<7} {} ({} values, {} transfers, {} lanes, C={})",
                    role,
                    s.stream,
                    s.values,
                    s.transfers.len(),
                    s.physical.lanes,
                    s.physical.complexity
                );
                if show_transfers {
                    for (k, t) in s.transfers.iter().enumerate() {
                        for line in render_transfer(k, t).lines() {
                            println!("{indent}    {line}");
                        }
                    }
                }
            }
        }
    }
    let count: usize = violations.iter().map(|(_, v)| v.len()).sum();
    for (stream, vs) in violations {
        for v in vs {
            println!("  violation {} at transfer {} of {stream}", v.rule.code(), v.transfer);
        }
    }
    println!("  {count} violations");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(OK),
        Err(code) => ExitCode::from(code),
    }
}
