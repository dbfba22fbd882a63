//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 condition not satisfied (`check`
//! only).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, Config};
use crate::design_tuning::{
    epochs_per_month_exact, individual_challenge_period, per_epoch_cost, run_sweep, CostModel,
    SweepRow, SweepSpec,
};
use crate::economics::{StrategyProfile, ThreatModel};
use crate::equilibrium::{check_ideal_security, find_symmetric_equilibria, verify_equilibrium};
use crate::montecarlo::{simulate_observed, SimConfig};
use crate::protocol_engine::RewardSplit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNSATISFIED: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ratsim",
    version,
    about = "Randomized attention test simulator and analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the ideal security conditions for a configuration.
    Check(Source),
    /// Minimum attention test probability over a penalty grid, as CSV.
    Sweep(SweepArgs),
    /// Convert a monthly operating cost into a per-epoch cost.
    Cost(CostArgs),
    /// Monte Carlo simulation of the protocol.
    Simulate(SimulateArgs),
    /// Search for symmetric equilibria.
    Equilibrium(EquilibriumArgs),
}

#[derive(Debug, Args)]
struct Source {
    /// Configuration file (`key = value` lines).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration: paper_600 or paper_200.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Config, String> {
        match (&self.config, &self.preset) {
            (Some(path), _) => Config::load(path).map_err(|e| format!("{}: {e}", path.display())),
            (None, Some(name)) => {
                let text =
                    config::preset(name).ok_or_else(|| format!("unknown preset `{name}`"))?;
                Config::parse(text).map_err(|e| format!("preset {name}: {e}"))
            }
            (None, None) => Err("either --config or --preset is required".into()),
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 10.0)]
    c_off_min: f64,
    #[arg(long, default_value_t = 10_000.0)]
    c_off_max: f64,
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Log-spaced penalty grid (the default).
    #[arg(long, conflicts_with = "linear")]
    log: bool,
    /// Evenly spaced penalty grid.
    #[arg(long)]
    linear: bool,
    /// Validator counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [5u32, 10, 50, 100])]
    n: Vec<u32>,
    /// Per-epoch marginal cost of attentiveness.
    #[arg(long, default_value_t = 0.139)]
    c_m: f64,
    /// Extra penalty values to include in the grid.
    #[arg(long = "at", value_delimiter = ',')]
    at: Vec<f64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// Monthly operating cost of one validator.
    #[arg(long, default_value_t = 600.0, allow_negative_numbers = true)]
    monthly: f64,
    #[arg(long, default_value_t = 30)]
    days: u32,
    #[arg(long, default_value_t = 10)]
    epoch_minutes: u32,
    /// Penalty for the challenge-period estimate.
    #[arg(long, allow_negative_numbers = true)]
    c_off: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    epochs: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// baseline or evasion
    #[arg(long)]
    model: Option<String>,
    /// paper-expected or equal-realized
    #[arg(long)]
    reward_split: Option<String>,
    /// Per-epoch event log path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the report as a CSV header and row to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EquilibriumArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    resolution: Option<usize>,
    /// baseline or evasion
    #[arg(long)]
    model: Option<String>,
}

/// Formats `x` with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new digit, e.g. 9.999996 -> 10.00000
    let rounded: f64 = s.parse().unwrap();
    if rounded != 0.0 && (rounded.abs().log10().floor() as i32) > magnitude && decimals > 0 {
        return format!("{x:.prec$}", prec = decimals - 1);
    }
    s
}

pub fn sweep_csv(rows: &[SweepRow<f64>]) -> String {
    let mut out = String::from("n,c_off,min_pi_a_percent,feasible\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.2},{},{}\n",
            row.n,
            row.c_off,
            format_sig6(row.min_pi_a * 100.0),
            u8::from(row.feasible)
        ));
    }
    out
}

fn write_output(path: Option<&PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn cmd_check(source: &Source, stdout: &mut dyn Write) -> Result<i32, String> {
    let config = source.load()?;
    let check = check_ideal_security(&config.params, config.model);
    let text = format!(
        "lhs = {}\nrhs = {}\nsatisfied = {}\nmargin = {}\nproposer_condition_satisfied = {}\n",
        check.lhs, check.rhs, check.satisfied, check.margin, check.proposer_condition_satisfied
    );
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| e.to_string())?;
    Ok(if check.satisfied {
        EXIT_OK
    } else {
        EXIT_UNSATISFIED
    })
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<i32, String> {
    let spec = SweepSpec {
        c_off_min: args.c_off_min,
        c_off_max: args.c_off_max,
        points: args.points,
        log_scale: !args.linear,
        n_values: args.n.clone(),
        c_m: args.c_m,
        extra_c_off: args.at.clone(),
    };
    let rows = run_sweep(&spec).map_err(|e| e.to_string())?;
    write_output(args.out.as_ref(), &sweep_csv(&rows), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_cost(args: &CostArgs, stdout: &mut dyn Write) -> Result<i32, String> {
    let cost =
        CostModel::new(args.monthly, args.days, args.epoch_minutes).map_err(|e| e.to_string())?;
    let epochs = epochs_per_month_exact(&cost);
    let c_m = per_epoch_cost(&cost);
    let mut text = if epochs.is_integer() {
        format!("epochs_per_month = {}\n", epochs.numer())
    } else {
        format!(
            "epochs_per_month = {}/{} ({:.6})\n",
            epochs.numer(),
            epochs.denom(),
            *epochs.numer() as f64 / *epochs.denom() as f64
        )
    };
    text.push_str(&format!("c_m = {c_m:.6}\n"));
    if let Some(c_off) = args.c_off {
        if !(c_off > 0.0 && c_off.is_finite()) {
            return Err("--c-off must be positive".into());
        }
        let period = individual_challenge_period(c_off, c_m, args.epoch_minutes)
            .map_err(|e| e.to_string())?;
        text.push_str(&format!(
            "challenge_period_epochs = {:.1}\nchallenge_period_days = {:.1}\n",
            period.epochs, period.days
        ));
    }
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

fn parse_model(flag: &Option<String>, default: ThreatModel) -> Result<ThreatModel, String> {
    flag.as_deref().map_or(Ok(default), |m| {
        m.parse().map_err(|e: crate::Error| e.to_string())
    })
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32, String> {
    let config = args.source.load()?;
    let reward_split = match args.reward_split.as_deref() {
        Some(s) => s.parse::<RewardSplit>().map_err(|e| e.to_string())?,
        None => config.reward_split,
    };
    let sim = SimConfig {
        params: config.params,
        profile: config.profile,
        epochs: args.epochs.unwrap_or(config.epochs),
        seed: args.seed.unwrap_or(config.seed),
        model: parse_model(&args.model, config.model)?,
        reward_split,
        hash: config.hash,
    };

    let mut log = match &args.out {
        Some(path) => Some(BufWriter::new(
            File::create(path).map_err(|e| format!("{}: {e}", path.display()))?,
        )),
        None => None,
    };
    let mut log_error: Option<io::Error> = None;
    let report = simulate_observed(&sim, |epoch| {
        if let (Some(w), None) = (log.as_mut(), log_error.as_ref()) {
            if let Err(e) = writeln!(w, "{}", epoch.log_line()) {
                log_error = Some(e);
            }
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(mut w) = log {
        if let Some(e) = log_error {
            return Err(format!("event log: {e}"));
        }
        w.flush().map_err(|e| format!("event log: {e}"))?;
    }

    stdout
        .write_all(report.to_text().as_bytes())
        .map_err(|e| e.to_string())?;
    if let Some(path) = &args.csv {
        let csv = format!(
            "{}\n{}\n",
            crate::montecarlo::SimReport::csv_header(),
            report.csv_row()
        );
        std::fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(EXIT_OK)
}

fn cmd_equilibrium(args: &EquilibriumArgs, stdout: &mut dyn Write) -> Result<i32, String> {
    let config = args.source.load()?;
    let model = parse_model(&args.model, config.model)?;
    let resolution = args.resolution.unwrap_or(config.resolution);
    if resolution < 10 {
        return Err("--resolution must be at least 10".into());
    }
    let params = &config.params;

    let mut text = format!("model = {model}\nresolution = {resolution}\n");
    match verify_equilibrium(params, StrategyProfile::ideal(), model, resolution) {
        Ok(_) => text.push_str("ideal_profile = equilibrium\n"),
        Err(r) => text.push_str(&format!(
            "ideal_profile = rejected validator_gain={} proposer_gain={}\n",
            r.validator_deviation_gain, r.proposer_deviation_gain
        )),
    }
    text.push_str("pi_p\tpi_v\tkind\tvalidator_gain\tproposer_gain\n");
    for point in find_symmetric_equilibria(params, model, resolution) {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            point.pi_p,
            point.pi_v,
            point.kind.name(),
            point.validator_deviation_gain,
            point.proposer_deviation_gain
        ));
    }
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| e.to_string())?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Check(source) => cmd_check(source, stdout),
        Command::Sweep(args) => cmd_sweep(args, stdout),
        Command::Cost(args) => cmd_cost(args, stdout),
        Command::Simulate(args) => cmd_simulate(args, stdout),
        Command::Equilibrium(args) => cmd_equilibrium(args, stdout),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(stderr, "error: {message}");
            EXIT_INPUT
        }
    }
}
