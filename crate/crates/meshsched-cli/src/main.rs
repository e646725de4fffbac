//! Command-line front end: generate networks, solve instances, emit and
//! check schedules, run sweeps.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage or file-format
//! error, 3 instance rejected by the filters, 4 budget exceeded,
//! 5 internal invariant violation.

use clap::{Parser, Subcommand, ValueEnum};
use meshsched::budget::Deadline;
use meshsched::chromatic::{
    classify_from, solve_dual_cutgen, solve_fractional_with, solve_integer_with,
    SeparationMode, SolveError, Verdict,
};
use meshsched::exact::{format_rat, Dec, Int, Rat};
use meshsched::matching::{
    screen_instance, EnumError, FilterReason, InstanceScreen, Limits, MatchingFamily,
};
use meshsched::net::{generate_network, Network, PhysParams};
use meshsched::schedule::{build_schedule, verify_schedule, Schedule};
use meshsched::sweep::{run_sweep, write_instances_csv, write_sweep_csv, SweepConfig};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

#[derive(Parser)]
#[command(
    name = "meshsched",
    version,
    about = "Exact fractional link scheduling under the physical interference model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random network and write it as JSON.
    Gen(GenArgs),
    /// Solve one instance and write the result as JSON.
    Solve(SolveArgs),
    /// Build, verify, and write the optimal fractional schedule.
    Schedule(ScheduleArgs),
    /// Run a reproducible sweep over a grid of instance cells.
    Sweep(SweepArgs),
    /// Check a schedule file against a network; exits 1 on violation.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    /// Number of nodes (at least 2).
    #[arg(long)]
    nodes: u32,
    /// Deployment square side in km (exact decimal).
    #[arg(long)]
    side_km: Dec,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Transmit power in mW.
    #[arg(long)]
    power_mw: Option<Dec>,
    /// Noise floor in mW.
    #[arg(long)]
    noise_mw: Option<Dec>,
    /// SINR threshold as a plain ratio.
    #[arg(long)]
    beta: Option<Dec>,
    /// Path-loss exponent.
    #[arg(long)]
    alpha: Option<Dec>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Fractional optimum by column generation.
    Frac,
    /// Integral optimum by branch and bound.
    Int,
    /// Both, with the strict-improvement verdict.
    Classify,
    /// Fractional optimum through the dual cutting-plane loop.
    Dual,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    network: PathBuf,
    /// Explicit matching family; bypasses enumeration and the filters.
    #[arg(long)]
    family: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    out: PathBuf,
    /// Wall-clock budget in seconds; unbounded when absent.
    #[arg(long)]
    budget_s: Option<u64>,
    /// Record wall-clock stage timings in the result.
    #[arg(long)]
    timings: bool,
}

#[derive(clap::Args)]
struct ScheduleArgs {
    #[arg(long)]
    network: PathBuf,
    /// Explicit matching family; bypasses enumeration and the filters.
    #[arg(long)]
    family: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Wall-clock budget in seconds; unbounded when absent.
    #[arg(long)]
    budget_s: Option<u64>,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',', required_unless_present = "full_grid")]
    nodes: Vec<u32>,
    /// Comma-separated square sides in km.
    #[arg(long, value_delimiter = ',', required_unless_present = "full_grid")]
    sides_km: Vec<Dec>,
    /// Instances per cell.
    #[arg(long, required_unless_present = "full_grid")]
    instances: Option<u32>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// The full protocol grid: 10..100 nodes by 1..10 km, 1000 instances
    /// per cell. Overrides --nodes, --sides-km, and --instances.
    #[arg(long)]
    full_grid: bool,
    #[arg(long, default_value_t = 128)]
    max_links: u32,
    #[arg(long, default_value_t = 50_000_000)]
    max_matchings: u64,
    /// Per-instance wall-clock budget in seconds.
    #[arg(long, default_value_t = 300)]
    budget_s: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write one CSV row per instance.
    #[arg(long)]
    instances_csv: bool,
    /// Record mean stage timings in sweep.csv.
    #[arg(long)]
    timings: bool,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
}

enum Failure {
    Violation(String),
    Usage(String),
    Filtered(String),
    Budget,
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Filtered(_) => 3,
            Failure::Budget => 4,
            Failure::Internal(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Violation(m) => format!("schedule invalid: {m}"),
            Failure::Usage(m) => format!("error: {m}"),
            Failure::Filtered(m) => format!("instance filtered: {m}"),
            Failure::Budget => "budget exceeded".into(),
            Failure::Internal(m) => format!("internal error: {m}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Schedule(a) => cmd_schedule(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn tool_version() -> String {
    format!("meshsched {}", env!("CARGO_PKG_VERSION"))
}

fn flag_string() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn provenance_json(seed: Option<u64>) -> serde_json::Value {
    let mut v = json!({ "tool": tool_version(), "args": flag_string() });
    if let Some(s) = seed {
        v["seed"] = json!(s);
    }
    v
}

fn provenance_comments() -> Vec<String> {
    vec![tool_version(), format!("args: {}", flag_string())]
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), Failure> {
    std::fs::write(path, content)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<Network, Failure> {
    Network::from_json(&read_file(path)?)
        .map_err(|e| Failure::Usage(format!("bad network file {}: {e}", path.display())))
}

fn load_family(path: &Path) -> Result<MatchingFamily, Failure> {
    MatchingFamily::from_text(&read_file(path)?)
        .map_err(|e| Failure::Usage(format!("bad family file {}: {e}", path.display())))
}

fn deadline_from(budget_s: Option<u64>) -> Deadline {
    match budget_s {
        Some(s) => Deadline::after(Duration::from_secs(s)),
        None => Deadline::none(),
    }
}

fn filter_reason(r: &FilterReason) -> String {
    match r {
        FilterReason::NoLinks => "empty".into(),
        FilterReason::TooManyLinks { n_links } => format!("too many links ({n_links})"),
        FilterReason::TooManyMatchings => "too many matchings".into(),
    }
}

/// The instance's matching family: the explicit file when given, else
/// enumeration behind the default filters.
fn obtain_family(
    net: &Network,
    family: Option<&Path>,
    deadline: Deadline,
) -> Result<MatchingFamily, Failure> {
    if let Some(path) = family {
        return load_family(path);
    }
    match screen_instance(net, &Limits::default(), deadline) {
        Ok(InstanceScreen::Admitted(f)) => Ok(f),
        Ok(InstanceScreen::Rejected(r)) => Err(Failure::Filtered(filter_reason(&r))),
        Err(EnumError::Budget) => Err(Failure::Budget),
        Err(e) => Err(Failure::Internal(e.to_string())),
    }
}

fn solve_failure(e: SolveError) -> Failure {
    match e {
        SolveError::Budget => Failure::Budget,
        other => Failure::Internal(other.to_string()),
    }
}

fn cmd_gen(a: &GenArgs) -> Result<(), Failure> {
    let defaults = PhysParams::default();
    let params = PhysParams {
        power_mw: a.power_mw.unwrap_or(defaults.power_mw),
        noise_mw: a.noise_mw.unwrap_or(defaults.noise_mw),
        beta: a.beta.unwrap_or(defaults.beta),
        alpha: a.alpha.unwrap_or(defaults.alpha),
    };
    let side_m = a.side_km.scale_pow10(3);
    let net = generate_network(a.nodes, &side_m, &params, a.seed)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    write_file(&a.out, &net.to_json(Some(provenance_json(Some(a.seed)))))?;
    println!("links {}", net.n_links());
    println!("radius_m {:.4}", net.params().connection_radius_m());
    Ok(())
}

fn support_json(family: &MatchingFamily, support: &[(u32, Rat)]) -> serde_json::Value {
    serde_json::Value::Array(
        support
            .iter()
            .map(|(pos, x)| {
                json!({
                    "matching": family.get(*pos).iter().collect::<Vec<u32>>(),
                    "x": format_rat(x),
                })
            })
            .collect(),
    )
}

struct SolveOutput {
    chi_star: Option<Rat>,
    chi_int: Option<u32>,
    verdict: Option<Verdict>,
    support: serde_json::Value,
    timings_ms: serde_json::Value,
    ilp_solved: bool,
}

fn result_json(out: &SolveOutput) -> String {
    let obj = json!({
        "chi_star": out.chi_star.as_ref().map(format_rat),
        "chi_int": out.chi_int,
        "verdict": out.verdict.map(|v| v.to_string()),
        "support": out.support,
        "timings_ms": out.timings_ms,
        "ilp_solved": out.ilp_solved,
        "provenance": provenance_json(None),
    });
    let mut text = serde_json::to_string_pretty(&obj).expect("result serializes");
    text.push('\n');
    text
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    let deadline = deadline_from(a.budget_s);
    let net = load_network(&a.network)?;

    if a.mode == Mode::Dual {
        let family;
        let separation = match &a.family {
            Some(path) => {
                family = load_family(path)?;
                SeparationMode::FamilyScan(&family)
            }
            None => {
                let n_links = net.n_links();
                if n_links == 0 {
                    return Err(Failure::Filtered("empty".into()));
                }
                if n_links > usize::try_from(Limits::default().max_links).unwrap() {
                    return Err(Failure::Filtered(format!("too many links ({n_links})")));
                }
                SeparationMode::NetworkSearch(&net)
            }
        };
        let start = Instant::now();
        let dual = solve_dual_cutgen(&separation, deadline).map_err(solve_failure)?;
        let timings_ms = if a.timings {
            json!({ "dual_ms": ms_since(start) })
        } else {
            serde_json::Value::Null
        };
        write_file(
            &a.out,
            &result_json(&SolveOutput {
                chi_star: Some(dual.z_star.clone()),
                chi_int: None,
                verdict: None,
                support: json!([]),
                timings_ms,
                ilp_solved: false,
            }),
        )?;
        println!("z_star {}", format_rat(&dual.z_star));
        println!("cuts {}", dual.cuts_added);
        return Ok(());
    }

    let enum_start = Instant::now();
    let family = obtain_family(&net, a.family.as_deref(), deadline)?;
    let enum_ms = ms_since(enum_start);

    let output = match a.mode {
        Mode::Frac => {
            let lp_start = Instant::now();
            let frac = solve_fractional_with(&family, deadline).map_err(solve_failure)?;
            let timings_ms = if a.timings {
                json!({ "enum_ms": enum_ms, "lp_ms": ms_since(lp_start) })
            } else {
                serde_json::Value::Null
            };
            println!("chi_star {}", format_rat(&frac.chi_star));
            SolveOutput {
                support: support_json(&family, &frac.support),
                chi_star: Some(frac.chi_star),
                chi_int: None,
                verdict: None,
                timings_ms,
                ilp_solved: false,
            }
        }
        Mode::Int => {
            let ilp_start = Instant::now();
            let int = solve_integer_with(&family, None, deadline).map_err(solve_failure)?;
            let timings_ms = if a.timings {
                json!({ "enum_ms": enum_ms, "ilp_ms": ms_since(ilp_start) })
            } else {
                serde_json::Value::Null
            };
            println!("chi_int {}", int.chi_int);
            let unit: Vec<(u32, Rat)> = int
                .partition
                .iter()
                .map(|&pos| (pos, Rat::from_integer(1.into())))
                .collect();
            SolveOutput {
                support: support_json(&family, &unit),
                chi_star: None,
                chi_int: Some(int.chi_int),
                verdict: None,
                timings_ms,
                ilp_solved: true,
            }
        }
        Mode::Classify => {
            let lp_start = Instant::now();
            let frac = solve_fractional_with(&family, deadline).map_err(solve_failure)?;
            let lp_ms = ms_since(lp_start);
            let ilp_start = Instant::now();
            let c = classify_from(&frac, &family, deadline).map_err(solve_failure)?;
            let timings_ms = if a.timings {
                json!({
                    "enum_ms": enum_ms,
                    "lp_ms": lp_ms,
                    "ilp_ms": c.ilp_solved.then(|| ms_since(ilp_start)),
                })
            } else {
                serde_json::Value::Null
            };
            println!("chi_star {}", format_rat(&c.chi_star));
            match c.chi_int {
                Some(v) => println!("chi_int {v}"),
                None => println!("chi_int {} (integral vertex)", c.chi_star),
            }
            println!("verdict {}", c.verdict);
            SolveOutput {
                support: support_json(&family, &frac.support),
                chi_star: Some(c.chi_star),
                chi_int: c.chi_int,
                verdict: Some(c.verdict),
                timings_ms,
                ilp_solved: c.ilp_solved,
            }
        }
        Mode::Dual => unreachable!("handled above"),
    };
    write_file(&a.out, &result_json(&output))
}

/// Membership, per-link count, and ratio checks for a schedule built
/// from an explicit family, where no geometry exists to verify against.
fn verify_family_schedule(s: &Schedule, family: &MatchingFamily) -> Result<(), String> {
    let slots = s.slots().map_err(|e| e.to_string())?;
    let mut counts = vec![Int::from(0u32); family.n_links() as usize];
    for (i, slot) in slots.iter().enumerate() {
        if family.position_of(*slot).is_none() {
            return Err(format!("slot {i} is not a family matching"));
        }
        for e in slot.iter() {
            counts[e as usize] += 1;
        }
    }
    for (e, count) in counts.iter().enumerate() {
        if count != s.q_star() {
            return Err(format!(
                "link {e} appears {count} times, expected {}",
                s.q_star()
            ));
        }
    }
    let ratio = Rat::new(s.t_star().clone(), s.q_star().clone());
    if &ratio != s.chi_star() {
        return Err(format!(
            "slot total {} over q {} does not match {}",
            s.t_star(),
            s.q_star(),
            format_rat(s.chi_star())
        ));
    }
    Ok(())
}

fn cmd_schedule(a: &ScheduleArgs) -> Result<(), Failure> {
    let deadline = deadline_from(a.budget_s);
    let net = load_network(&a.network)?;
    let family = obtain_family(&net, a.family.as_deref(), deadline)?;

    let frac = solve_fractional_with(&family, deadline).map_err(solve_failure)?;
    let classification = classify_from(&frac, &family, deadline).map_err(solve_failure)?;
    let schedule = build_schedule(&frac, &family).map_err(|e| Failure::Internal(e.to_string()))?;

    match &a.family {
        Some(_) => verify_family_schedule(&schedule, &family)
            .map_err(|m| Failure::Internal(format!("schedule failed verification: {m}")))?,
        None => verify_schedule(&schedule, &net)
            .map_err(|v| Failure::Internal(format!("schedule failed verification: {v}")))?,
    }

    let text = schedule
        .to_text(&provenance_comments())
        .map_err(|e| Failure::Internal(e.to_string()))?;
    write_file(&a.out, &text)?;

    let chi_prime = match classification.chi_int {
        Some(v) => Int::from(v),
        // The integral-vertex shortcut: the optimum is integral, so the
        // integral index equals it.
        None => classification.chi_star.to_integer(),
    };
    let t1_times_qstar = chi_prime * schedule.q_star();
    println!("T_star {}", schedule.t_star());
    println!("q_star {}", schedule.q_star());
    println!("T1_times_q_star {t1_times_qstar}");
    println!("preferable {}", schedule.t_star() < &t1_times_qstar);
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let (node_counts, sides_km, instances_per_cell) = if a.full_grid {
        (
            (1..=10).map(|i| i * 10).collect(),
            (1..=10).map(Dec::from_int).collect(),
            1000,
        )
    } else {
        (
            a.nodes.clone(),
            a.sides_km.clone(),
            a.instances.expect("clap enforces --instances without --full-grid"),
        )
    };
    let config = SweepConfig {
        node_counts,
        sides_km,
        instances_per_cell,
        master_seed: a.seed,
        limits: Limits {
            max_links: a.max_links,
            max_matchings: a.max_matchings,
        },
        params: PhysParams::default(),
        budget: Some(Duration::from_secs(a.budget_s)),
        collect_timings: a.timings,
    };

    let result = match a.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Failure::Internal(e.to_string()))?
            .install(|| run_sweep(&config)),
        None => run_sweep(&config),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;

    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let sweep_path = a.out_dir.join("sweep.csv");
    write_file(&sweep_path, &write_sweep_csv(&result))?;
    if a.instances_csv {
        write_file(&a.out_dir.join("instances.csv"), &write_instances_csv(&result))?;
    }

    for c in &result.cells {
        println!(
            "cell nodes={} side_km={} pass={}/{} strict={}",
            c.n_nodes, c.side_km, c.n_pass, c.n_instances, c.n_strict
        );
    }
    println!("wrote {}", sweep_path.display());
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let net = load_network(&a.network)?;
    let text = read_file(&a.schedule)?;
    let schedule = Schedule::from_text(&text)
        .map_err(|e| Failure::Usage(format!("bad schedule file {}: {e}", a.schedule.display())))?;
    match verify_schedule(&schedule, &net) {
        Ok(()) => {
            println!("valid");
            Ok(())
        }
        Err(v) => Err(Failure::Violation(v.to_string())),
    }
}
