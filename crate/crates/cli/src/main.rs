use clap::{Args, Parser, Subcommand, ValueEnum};
use pmsched::instgen::{Complexity, Layout};
use pmsched::report::Method;
use pmsched_cli::{
    cmd_bench, cmd_generate, cmd_solve, cmd_validate, limits, status_exit_code, summary_line, GenArgs, SolveArgs,
    EXIT_ERROR, EXIT_OK, EXIT_VIOLATIONS,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Production and maintenance scheduling for fleets of multi-component
/// machines.
///
/// Exit codes: 0 optimal or success, 1 violations found, 2 error,
/// 3 infeasible, 4 limit reached.
#[derive(Parser)]
#[command(name = "pmsched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instances and a manifest.
    #[command(alias = "gen")]
    Generate(GenerateCmd),
    /// Solve one instance file.
    Solve(SolveCmd),
    /// Check a schedule against an instance.
    Validate {
        instance: PathBuf,
        schedule: PathBuf,
    },
    /// Run both methods on every instance of a directory.
    Bench(BenchCmd),
}

#[derive(Args)]
struct GenerateCmd {
    /// First seed; instances use seed, seed + 1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instances per combination of periods, layout and complexity.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Horizon lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    periods: Vec<usize>,
    /// one-group-20, two-groups-10 or custom:<m1>,<m2>,...; separate several
    /// layouts with ';'.
    #[arg(long, value_delimiter = ';', default_value = "one-group-20")]
    layout: Vec<Layout>,
    /// low or high, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "low")]
    complexity: Vec<Complexity>,
    /// Demand load relative to aggregate capacity.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Wear multiplier.
    #[arg(long, default_value_t = 1.0)]
    wear: f64,
    /// Component-count range `lo,hi` overriding the complexity's range.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    components: Option<Vec<usize>>,
    #[arg(long, default_value = "instances")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Compact,
    Dw,
}

#[derive(Args)]
struct SolverFlags {
    /// Seconds; 0 disables the limit.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    /// Worker threads for pricing; 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    #[arg(long)]
    no_early_branching: bool,
    #[arg(long)]
    no_rmp_heuristic: bool,
    #[arg(long)]
    no_farley: bool,
}

impl SolverFlags {
    fn to_args(&self, method: Method) -> SolveArgs {
        SolveArgs {
            method,
            limits: limits(self.time_limit, self.node_limit, self.gap_tol),
            early_branching: !self.no_early_branching,
            rmp_heuristic: !self.no_rmp_heuristic,
            farley: !self.no_farley,
            threads: self.parallel.max(1),
        }
    }
}

#[derive(Args)]
struct SolveCmd {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "dw")]
    method: MethodArg,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    flags: SolverFlags,
}

#[derive(Args)]
struct BenchCmd {
    dir: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    flags: SolverFlags,
}

fn run(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Generate(g) => {
            let components = g.components.map(|v| (v[0], v[1]));
            let n = cmd_generate(&GenArgs {
                seed: g.seed,
                count: g.count,
                periods: g.periods,
                layouts: g.layout,
                complexities: g.complexity,
                rho: g.rho,
                wear: g.wear,
                components,
                out: g.out.clone(),
            })?;
            println!("wrote {n} instances to {}", g.out.display());
            Ok(EXIT_OK)
        }
        Command::Solve(s) => {
            let method = match s.method {
                MethodArg::Compact => Method::Compact,
                MethodArg::Dw => Method::Dw,
            };
            let outcome = cmd_solve(&s.instance, &s.out, &s.flags.to_args(method))?;
            println!("{}", summary_line(&outcome));
            Ok(status_exit_code(outcome.report.status))
        }
        Command::Validate { instance, schedule } => {
            let v = cmd_validate(&instance, &schedule)?;
            if v.is_empty() {
                println!("schedule is feasible");
                Ok(EXIT_OK)
            } else {
                for line in &v {
                    println!("{line}");
                }
                Ok(EXIT_VIOLATIONS)
            }
        }
        Command::Bench(b) => {
            let out = cmd_bench(&b.dir, &b.out, &b.flags.to_args(Method::Dw))?;
            println!("{}\n{}", out.table, out.breakdown);
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
