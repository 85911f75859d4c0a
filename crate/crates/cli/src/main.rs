//! `fusa` command-line front end: compile, validate, simulate.
//!
//! Exit codes: 0 success, 1 validation or contract errors, 2 I/O, format
//! or usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fusa_core::compiler::{compile_supervisor_with, CompileError, CompileOptions};
use fusa_core::fault_tree::{parse_fault_tree, FaultTreeDoc, FaultTreeError};
use fusa_core::hara::{parse_hara, validate_cross, Diagnostic, HaraError, HaraTable, Severity};
use fusa_core::harness::{bundled, load_scenario, run_campaign_detailed, HarnessError, Scenario};
use fusa_core::{emit_xml, parse_xml, BtDocument};

#[derive(Parser)]
#[command(name = "fusa", version, about = "Compile fault trees and HARA tables into behavior-tree safety supervisors and simulate them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile one supervisor per fault-tree file into <item>.xml.
    Compile(CompileArgs),
    /// Check a fault tree and HARA table for consistency.
    Validate(ValidateArgs),
    /// Run fault-injection scenarios and write a campaign report.
    Simulate(SimulateArgs),
    /// Write the bundled reference inputs and scenarios to a directory.
    Bundle(BundleArgs),
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, required = true, num_args = 1..)]
    fta: Vec<PathBuf>,
    #[arg(long)]
    hara: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write <item>.dot.
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    fta: PathBuf,
    #[arg(long)]
    hara: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Compiled supervisor document.
    #[arg(long, conflicts_with_all = ["fta", "hara"], required_unless_present = "fta")]
    bt: Option<PathBuf>,
    #[arg(long, requires = "hara")]
    fta: Option<PathBuf>,
    #[arg(long, requires = "fta")]
    hara: Option<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    scenario: Vec<PathBuf>,
    /// Campaign report JSON. Trace logs go to <report stem>_traces/ next to it.
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct BundleArgs {
    #[arg(long)]
    out: PathBuf,
}

/// Failure with its exit code; diagnostics were already printed.
enum Failure {
    Content(String),
    Format(String),
    Reported(u8),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Content(_) => 1,
            Failure::Format(_) => 2,
            Failure::Reported(c) => *c,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile(a) => compile(&a),
        Command::Validate(a) => validate(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Bundle(a) => bundle(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Content(m) | Failure::Format(m) => eprintln!("error: {m}"),
                Failure::Reported(_) => {}
            }
            ExitCode::from(f.code())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Format(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Format(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Format(format!("{}: {e}", path.display())))
}

fn load_fault_tree(path: &Path) -> Result<FaultTreeDoc, Failure> {
    parse_fault_tree(&read(path)?).map_err(|e| fault_tree_failure(path, &e))
}

fn fault_tree_failure(path: &Path, e: &FaultTreeError) -> Failure {
    let m = format!("{}: {e}", path.display());
    if e.is_validation() {
        Failure::Content(m)
    } else {
        Failure::Format(m)
    }
}

fn load_hara(path: &Path) -> Result<HaraTable, Failure> {
    parse_hara(&read(path)?).map_err(|e| hara_failure(path, &e))
}

fn hara_failure(path: &Path, e: &HaraError) -> Failure {
    let m = format!("{}: {e}", path.display());
    if e.is_validation() {
        Failure::Content(m)
    } else {
        Failure::Format(m)
    }
}

fn print_diagnostics(diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        eprintln!("{d}");
    }
}

fn compile(args: &CompileArgs) -> Result<(), Failure> {
    let table = load_hara(&args.hara)?;
    let options = CompileOptions { include_dot: args.dot };
    let mut compiled = Vec::new();
    for path in &args.fta {
        let doc = load_fault_tree(path)?;
        match compile_supervisor_with(&doc, &table, &options) {
            Ok(c) => {
                print_diagnostics(&c.warnings);
                compiled.push((doc, c));
            }
            Err(CompileError::Validation(d)) => {
                print_diagnostics(&d);
                return Err(Failure::Reported(1));
            }
            Err(e) => return Err(Failure::Content(format!("{}: {e}", path.display()))),
        }
    }
    for (doc, c) in &compiled {
        let item = &doc.item_id;
        write(&args.out.join(format!("{item}.xml")), &emit_xml(&c.document))?;
        if let Some(dot) = &c.dot {
            write(&args.out.join(format!("{item}.dot")), dot)?;
        }
        let hazards = c.document.definitions().len() - 1 - table.scenarios(item).len();
        println!(
            "{item}: {hazards} hazards, {} operating scenarios -> {}",
            table.scenarios(item).len(),
            args.out.join(format!("{item}.xml")).display()
        );
    }
    println!("{} item(s) compiled", compiled.len());
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let text = read(&args.fta)?;
    let table = load_hara(&args.hara)?;
    let diagnostics = match parse_fault_tree(&text) {
        Ok(doc) => validate_cross(&table, &doc),
        Err(e) if e.is_validation() => vec![Diagnostic {
            severity: Severity::Error,
            message: format!("{}: {e}", args.fta.display()),
        }],
        Err(e) => return Err(fault_tree_failure(&args.fta, &e)),
    };
    print_diagnostics(&diagnostics);
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    let warnings = diagnostics.len() - errors;
    println!("{errors} {}, {warnings} {}", plural(errors, "error"), plural(warnings, "warning"));
    if errors > 0 {
        Err(Failure::Reported(1))
    } else {
        Ok(())
    }
}

fn plural(n: usize, word: &str) -> String {
    if n == 1 {
        word.to_string()
    } else {
        format!("{word}s")
    }
}

fn load_supervisor(args: &SimulateArgs) -> Result<BtDocument, Failure> {
    if let Some(bt) = &args.bt {
        return parse_xml(&read(bt)?).map_err(|e| Failure::Format(format!("{}: {e}", bt.display())));
    }
    let (Some(fta), Some(hara)) = (&args.fta, &args.hara) else {
        return Err(Failure::Format("either --bt or both --fta and --hara are required".into()));
    };
    let doc = load_fault_tree(fta)?;
    let table = load_hara(hara)?;
    match compile_supervisor_with(&doc, &table, &CompileOptions::default()) {
        Ok(c) => Ok(c.document),
        Err(CompileError::Validation(d)) => {
            print_diagnostics(&d);
            Err(Failure::Reported(1))
        }
        Err(e) => Err(Failure::Content(e.to_string())),
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    if args.scenario.is_empty() {
        return Err(Failure::Format("no scenarios given".into()));
    }
    let doc = load_supervisor(args)?;
    let mut scenarios: Vec<Scenario> = Vec::with_capacity(args.scenario.len());
    let mut stems = Vec::with_capacity(args.scenario.len());
    for path in &args.scenario {
        let mut s = load_scenario(&read(path)?).map_err(|e| Failure::Format(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
        s.name.get_or_insert_with(|| stem.clone());
        if stems.contains(&stem) {
            return Err(Failure::Format(format!("duplicate scenario file name `{stem}`")));
        }
        stems.push(stem);
        scenarios.push(s);
    }
    let (report, runs) = run_campaign_detailed(&doc, &scenarios).map_err(|e| match e {
        HarnessError::Json { .. } | HarnessError::Invalid { .. } => Failure::Format(e.to_string()),
        _ => Failure::Content(e.to_string()),
    })?;

    write(&args.report, &report.to_json())?;
    let trace_dir = traces_dir(&args.report);
    for (stem, run) in stems.iter().zip(&runs) {
        write(&trace_dir.join(format!("{stem}.csv")), &run.trace.to_log())?;
    }

    print!("{}", report.confusion_matrix.to_table());
    for (event, mean) in &report.latency_means_s {
        println!("mean latency {event}: {mean:.4} s");
    }
    println!(
        "{} scenario(s) -> {} (traces in {})",
        runs.len(),
        args.report.display(),
        trace_dir.display()
    );
    Ok(())
}

fn traces_dir(report: &Path) -> PathBuf {
    let stem = report.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    report.with_file_name(format!("{stem}_traces"))
}

fn bundle(args: &BundleArgs) -> Result<(), Failure> {
    write(&args.out.join("i01_fault_tree.xml"), bundled::FAULT_TREE_XML)?;
    write(&args.out.join("i01_hara.csv"), bundled::HARA_CSV)?;
    let scenarios = bundled::all_scenarios();
    for s in &scenarios {
        let mut json = s.to_json();
        json.push('\n');
        write(&args.out.join("scenarios").join(format!("{}.json", s.label())), &json)?;
    }
    println!("wrote 2 inputs and {} scenarios to {}", scenarios.len(), args.out.display());
    Ok(())
}
