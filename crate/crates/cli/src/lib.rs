//! Command implementations behind the `pmsched` binary.
//!
//! Exit codes: 0 success or optimal, 1 schedule has violations (`validate`),
//! 2 usage or input error, 3 proven infeasible, 4 limit reached.

pub mod bench;

use bench::{aggregate, classify, feasible, render_breakdown, render_table, BenchRecord, Class};
use pmsched::branch_price::{solve_bp, BpConfig};
use pmsched::compact::solve_compact;
use pmsched::instgen::{generate, Complexity, GenConfig, Layout};
use pmsched::model::{validate_schedule, Instance, Schedule};
use pmsched::report::{Method, SolveLimits, SolveOutcome, SolveStatus};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_LIMIT: i32 = 4;

pub type CliResult<T> = Result<T, String>;

pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Limit => EXIT_LIMIT,
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

pub fn load_instance(path: &Path) -> CliResult<Instance> {
    Instance::from_json(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".into())
}

// ---------------------------------------------------------------- generate

#[derive(Clone, Debug)]
pub struct GenArgs {
    pub seed: u64,
    pub count: usize,
    pub periods: Vec<usize>,
    pub layouts: Vec<Layout>,
    pub complexities: Vec<Complexity>,
    pub rho: f64,
    pub wear: f64,
    pub components: Option<(usize, usize)>,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    config: GenConfig,
}

fn instance_file_name(cfg: &GenConfig) -> String {
    let layout: String = cfg
        .layout
        .to_string()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '-' })
        .collect();
    format!("{layout}_{}_t{}_s{}.json", cfg.complexity, cfg.periods, cfg.seed)
}

/// Writes `count` instances per (periods, layout, complexity) combination
/// with seeds `seed..seed + count`, plus `manifest.json`. Returns the number
/// of files written.
pub fn cmd_generate(args: &GenArgs) -> CliResult<usize> {
    fs::create_dir_all(&args.out).map_err(|e| format!("cannot create {}: {e}", args.out.display()))?;
    let mut manifest = Vec::new();
    for &periods in &args.periods {
        for layout in &args.layouts {
            for &complexity in &args.complexities {
                for i in 0..args.count as u64 {
                    let cfg = GenConfig {
                        rho: args.rho,
                        wear: args.wear,
                        components: args.components,
                        ..GenConfig::new(args.seed + i, periods, layout.clone(), complexity)
                    };
                    let inst = generate(&cfg)?;
                    let file = instance_file_name(&cfg);
                    write_file(&args.out.join(&file), &inst.to_json())?;
                    manifest.push(ManifestEntry { file, config: cfg });
                }
            }
        }
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| e.to_string())?;
    write_file(&args.out.join("manifest.json"), &json)?;
    Ok(manifest.len())
}

// ------------------------------------------------------------------- solve

#[derive(Clone, Debug)]
pub struct SolveArgs {
    pub method: Method,
    pub limits: SolveLimits,
    pub early_branching: bool,
    pub rmp_heuristic: bool,
    pub farley: bool,
    /// Worker threads; 1 runs sequentially.
    pub threads: usize,
}

impl Default for SolveArgs {
    fn default() -> Self {
        SolveArgs {
            method: Method::Dw,
            limits: SolveLimits::default(),
            early_branching: true,
            rmp_heuristic: true,
            farley: true,
            threads: 1,
        }
    }
}

fn solve_with(instance: &Instance, args: &SolveArgs) -> CliResult<SolveOutcome> {
    let run = || match args.method {
        Method::Compact => solve_compact(instance, &args.limits),
        Method::Dw => {
            let cfg = BpConfig {
                early_branching: args.early_branching,
                rmp_heuristic: args.rmp_heuristic,
                farley: args.farley,
                parallel: args.threads > 1,
                ..BpConfig::default()
            };
            solve_bp(instance, &args.limits, &cfg)
        }
    };
    in_pool(args.threads, run).map_err(|e| e.to_string())
}

#[cfg(feature = "parallel")]
fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads <= 1 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    if threads > 1 {
        eprintln!("built without the parallel feature; running sequentially");
    }
    f()
}

/// Solves one instance file, writing `<stem>.report.json` and, when an
/// incumbent exists, `<stem>.schedule.json` into `out`.
pub fn cmd_solve(instance_path: &Path, out: &Path, args: &SolveArgs) -> CliResult<SolveOutcome> {
    let inst = load_instance(instance_path)?;
    let outcome = solve_with(&inst, args)?;
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let stem = file_stem(instance_path);
    write_file(&out.join(format!("{stem}.report.json")), &outcome.report.to_json())?;
    if let Some(s) = &outcome.schedule {
        write_file(&out.join(format!("{stem}.schedule.json")), &s.to_json())?;
    }
    Ok(outcome)
}

pub fn summary_line(outcome: &SolveOutcome) -> String {
    let r = &outcome.report;
    let num = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x}"));
    format!(
        "{} {:?}: primal {} dual {} gap {} nodes {} pricing rounds {} time {:.3}s",
        r.method.name(),
        r.status,
        num(r.primal_bound),
        num(r.dual_bound),
        num(r.gap),
        r.nodes,
        r.pricing_rounds,
        r.wall_time
    )
}

// ---------------------------------------------------------------- validate

/// Violations of `schedule_path` against `instance_path`, one per line.
pub fn cmd_validate(instance_path: &Path, schedule_path: &Path) -> CliResult<Vec<String>> {
    let inst = load_instance(instance_path)?;
    let sched = Schedule::from_json(&read_file(schedule_path)?)
        .map_err(|e| format!("{}: {e}", schedule_path.display()))?;
    let v = validate_schedule(&inst, &sched).map_err(|e| e.to_string())?;
    Ok(v.iter().map(|x| x.to_string()).collect())
}

// ------------------------------------------------------------------- bench

pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub table: String,
    pub breakdown: String,
}

/// Instance files of `dir` in name order, skipping the manifest.
pub fn instance_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| format!("cannot read {}: {e}", dir.display()))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n != "manifest.json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no instance files in {}", dir.display()));
    }
    Ok(files)
}

/// Runs both methods on every instance of `dir`, writes `bench.csv` and
/// `bench.txt` into `out`.
pub fn cmd_bench(dir: &Path, out: &Path, args: &SolveArgs) -> CliResult<BenchOutput> {
    let files = instance_files(dir)?;
    let mut records = Vec::new();
    let (mut fast, mut none) = (0, 0);
    for path in &files {
        let inst = load_instance(path)?;
        let c = solve_with(&inst, &SolveArgs { method: Method::Compact, ..args.clone() })?;
        let d = solve_with(&inst, &SolveArgs { method: Method::Dw, ..args.clone() })?;
        let class = classify(&c.report, &d.report);
        match class {
            Class::ExcludedFast => fast += 1,
            Class::ExcludedNoIncumbent => none += 1,
            _ => {}
        }
        let feas = feasible(&c.report, &d.report);
        let id = file_stem(path);
        records.push(BenchRecord::new(&id, &c.report, class, feas));
        records.push(BenchRecord::new(&id, &d.report, class, feas));
    }
    let table = render_table(&aggregate(&records), fast, none);
    let breakdown = render_breakdown(&records);

    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let mut w = csv::Writer::from_path(out.join("bench.csv")).map_err(|e| e.to_string())?;
    for r in &records {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    write_file(&out.join("bench.txt"), &format!("{table}\n{breakdown}"))?;
    Ok(BenchOutput { records, table, breakdown })
}

pub fn limits(time_limit: f64, node_limit: Option<usize>, gap_tol: f64) -> SolveLimits {
    SolveLimits {
        time_limit: (time_limit > 0.0).then(|| Duration::from_secs_f64(time_limit)),
        node_limit,
        gap_tol,
    }
}
