use clap::Parser;
use llor::cli::{run, RunConfig};
use llor::engine::Strategy;
use std::path::PathBuf;

/// Repair data races in MiniMP programs by learning where synchronization
/// must go.
#[derive(Parser)]
#[command(name = "llor", version, arg_required_else_help = true)]
struct Args {
    /// MiniMP source files to repair.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    /// Placement search strategy.
    #[arg(long, value_enum, default_value = "mhs")]
    solver: Strategy,

    /// Wall-clock budget per input, in seconds.
    #[arg(long, default_value_t = 300)]
    timeout: u64,

    /// Log each verification iteration to stderr.
    #[arg(long)]
    verbose: bool,

    /// Write the per-file category report (or comparison CSV) here.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Time both solvers on every input and emit a CSV instead of verdicts.
    #[arg(long)]
    compare_solvers: bool,

    /// Print each input's learned clause set in DIMACS form.
    #[arg(long)]
    dump_clauses: bool,
}

fn main() {
    let args = Args::parse();
    let cfg = RunConfig {
        inputs: args.inputs,
        strategy: args.solver,
        timeout_secs: args.timeout,
        verbose: args.verbose,
        report: args.report,
        compare_solvers: args.compare_solvers,
        dump_clauses: args.dump_clauses,
    };
    let code = run(&cfg, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
