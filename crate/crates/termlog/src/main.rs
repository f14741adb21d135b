//! Command-line front end: analyze a program for termination, run a query
//! under the bounded interpreter, or check a corpus against its manifest.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use termlog::interpreter::{ld_explore_opts, Outcome};
use termlog::pipeline::{
    analyze, verify_certificate, AnalysisMode, AnalysisOptions, Verdict,
};
use termlog::solver::{CandidatePolicy, DEFAULT_BUDGET};
use termlog::syntax::{parse_program, Program};

#[derive(Parser)]
#[command(name = "termlog", version, about = "Termination prover for definite logic programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Rigid,
    Wellmoded,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    /// Try the list-length norm, the term-size norm, then path orderings.
    Auto,
    /// Path orderings only.
    Rpo,
    /// List-length norm only.
    Listlen,
    /// Term-size norm only.
    Termsize,
}

impl OrderArg {
    fn policy(self) -> CandidatePolicy {
        match self {
            OrderArg::Auto => CandidatePolicy::default(),
            OrderArg::Rpo => CandidatePolicy { list_length: false, term_size: false, rpo: true },
            OrderArg::Listlen => {
                CandidatePolicy { list_length: true, term_size: false, rpo: false }
            }
            OrderArg::Termsize => {
                CandidatePolicy { list_length: false, term_size: true, rpo: false }
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Prove that every query matching the program's directives terminates.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "rigid")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "auto")]
        order: OrderArg,
        /// Write the proof certificate as JSON.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Verify a previously emitted certificate instead of analyzing.
        #[arg(long)]
        check: Option<PathBuf>,
        /// Candidate budget for the ordering search (or TERMLOG_BUDGET).
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Explore the derivation tree of a query, bounded by depth.
    Run {
        file: PathBuf,
        query: String,
        #[arg(long, default_value_t = 500)]
        depth: usize,
        /// Print one line per resolution step.
        #[arg(long)]
        trace: bool,
    },
    /// Analyze every program in a directory against its manifest.
    Corpus { dir: PathBuf },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Analyze { file, mode, order, emit, check, budget, verbose } => {
            cmd_analyze(&file, mode, order, emit.as_deref(), check.as_deref(), budget, verbose)
        }
        Command::Run { file, query, depth, trace } => cmd_run(&file, &query, depth, trace),
        Command::Corpus { dir } => cmd_corpus(&dir),
    }
}

fn load_program(path: &Path) -> Result<Program, String> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_program(&src).map_err(|e| format!("{}: {e}", path.display()))
}

fn budget_from(cli: Option<usize>) -> usize {
    cli.or_else(|| std::env::var("TERMLOG_BUDGET").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_BUDGET)
}

fn cmd_analyze(
    file: &Path,
    mode: ModeArg,
    order: OrderArg,
    emit: Option<&Path>,
    check: Option<&Path>,
    budget: Option<usize>,
    verbose: bool,
) -> ExitCode {
    let program = match load_program(file) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(cert_path) = check {
        return cmd_check(&program, cert_path);
    }
    let opts = AnalysisOptions {
        mode: match mode {
            ModeArg::Rigid => AnalysisMode::Rigid,
            ModeArg::Wellmoded => AnalysisMode::WellModed,
        },
        budget: budget_from(budget),
        policy: order.policy(),
    };
    let report = match analyze(&program, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match &report.verdict {
        Verdict::Terminating(cert) => {
            println!("terminating: {}", cert.order.describe());
            if verbose {
                print_certificate(cert);
            }
            if let Some(path) = emit {
                match serde_json::to_string_pretty(cert.as_ref()) {
                    Ok(json) => {
                        if let Err(e) = std::fs::write(path, json + "\n") {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return ExitCode::from(2);
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Verdict::Unknown { reason } => {
            println!("unknown: {reason}");
            ExitCode::from(1)
        }
    }
}

fn print_certificate(cert: &termlog::pipeline::ProofCertificate) {
    if let Some(cs) = &cert.call_set {
        println!("call set:");
        for (pred, vals) in &cs.calls {
            println!("  {} {:?}", pred, vals);
        }
    }
    println!("constraints:");
    for r in &cert.constraints {
        println!("  {}", r.constraint);
        println!("    [{}]", r.justification);
        for d in &r.demands {
            println!("    requires {d}");
        }
    }
    for r in &cert.relations {
        println!("relation {}", r.relation);
        for d in &r.demands {
            println!("    requires {d}");
        }
    }
    for r in &cert.conjunctions {
        println!("conjunction obligation over:");
        for g in &r.generalized {
            println!("  {g}");
        }
        for d in &r.demands {
            println!("    requires {d}");
        }
    }
    println!("candidates tried: {}", cert.candidates_tried);
}

fn cmd_check(program: &Program, cert_path: &Path) -> ExitCode {
    let json = match std::fs::read_to_string(cert_path) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cert_path.display());
            return ExitCode::from(2);
        }
    };
    let cert: termlog::pipeline::ProofCertificate = match serde_json::from_str(&json) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: malformed certificate: {e}");
            return ExitCode::from(2);
        }
    };
    match verify_certificate(program, &cert) {
        Ok(()) => {
            println!("certificate verified");
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("certificate rejected: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(file: &Path, query: &str, depth: usize, trace: bool) -> ExitCode {
    let program = match load_program(file) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let goal = match termlog::syntax::parse_atom(query) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: bad query: {e}");
            return ExitCode::from(2);
        }
    };
    let e = ld_explore_opts(&program, &[goal], depth, trace);
    if trace {
        for step in &e.trace {
            println!(
                "{:>4}  {}  clause {}  {}",
                step.depth,
                step.selected,
                step.clause.map_or("-".to_string(), |c| c.to_string()),
                step.bindings
            );
        }
    }
    match e.outcome {
        Outcome::FiniteTree => {
            println!(
                "finite: {} answers, {} nodes, max depth {}",
                e.answers, e.nodes, e.max_depth
            );
            ExitCode::SUCCESS
        }
        Outcome::DepthLimit => {
            println!("depth limit {depth} hit ({} answers so far)", e.answers);
            if let Some(ev) = &e.loop_evidence {
                println!("possible loop (variant repetition on a directed chain):");
                for a in ev {
                    println!("  {a}");
                }
            }
            ExitCode::from(1)
        }
    }
}

fn cmd_corpus(dir: &Path) -> ExitCode {
    let manifest = dir.join("manifest.txt");
    let text = match std::fs::read_to_string(&manifest) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", manifest.display());
            return ExitCode::from(2);
        }
    };
    let mut failures = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [file, mode, expected] = fields[..] else {
            eprintln!("error: malformed manifest line: {line}");
            return ExitCode::from(2);
        };
        let program = match load_program(&dir.join(file)) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
        let opts = AnalysisOptions {
            mode: match mode {
                "rigid" => AnalysisMode::Rigid,
                "wellmoded" => AnalysisMode::WellModed,
                other => {
                    eprintln!("error: unknown mode {other} in manifest");
                    return ExitCode::from(2);
                }
            },
            budget: budget_from(None),
            policy: CandidatePolicy::default(),
        };
        let got = match analyze(&program, &opts) {
            Ok(report) => match report.verdict {
                Verdict::Terminating(_) => "terminating",
                Verdict::Unknown { .. } => "unknown",
            },
            Err(e) => {
                eprintln!("error: {file}: {e}");
                return ExitCode::from(2);
            }
        };
        let ok = match expected {
            "terminating" | "unknown" => got == expected,
            "unknown-or-terminating" => true,
            other => {
                eprintln!("error: unknown expectation {other} in manifest");
                return ExitCode::from(2);
            }
        };
        println!("{} {file}: {got} (expected {expected})", if ok { "ok  " } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
