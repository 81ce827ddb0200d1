//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numeric failure.
//! Every error is a single line on stderr, prefixed `error[usage]:`,
//! `error[numeric]:` or `error[io]:`.

pub mod format;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{find_threshold, q_grid, reference_thresholds, sweep, Config, ThresholdResult, Variant};
use crate::attack::verify_algebra;
use crate::channel::{MubConvention, Scenario};
use crate::error::Error;
use crate::keyrate::{supported_mubs, BoundReading, EigenEntropy, OverlapReading};
use crate::mub::{mubs_for, verify_unbiased};
use crate::sim::{run_protocol, ProtocolConfig};

use format::{num, sweep_csv, threshold_csv};
use svg::{line_chart, Series};

/// Tolerance, as a fraction, for agreement with published thresholds.
pub const TABLE_TOLERANCE: f64 = 0.005;

#[derive(Debug, Parser)]
#[command(name = "sqkd", version, about = "Key-rate bounds and simulation for qutrit/ququart semi-quantum key distribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the key-rate bound at one noise level and print the breakdown.
    Keyrate {
        #[command(flatten)]
        model: ModelArgs,
        /// Noise parameter Q.
        #[arg(long)]
        q: f64,
    },
    /// Key rate over a grid of Q values.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// start:stop:step, or a single value.
        #[arg(long, default_value = "0:0.1:0.001")]
        q: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Noise threshold where the bound first reaches zero.
    Threshold {
        #[command(flatten)]
        model: ModelArgs,
        /// Every supported configuration, laid out like the published tables.
        #[arg(long)]
        all: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo run of the protocol.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1_000_000)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability that Bob reflects.
        #[arg(long, default_value_t = 0.5)]
        prob_reflect: f64,
        /// Write the count tensor as CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Unbiasedness deviation for every pair of bases.
    MubCheck,
    /// Residual tables for the explicit-attack checks.
    VerifyAlgebra {
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regenerate every table and figure into a directory.
    Reproduce {
        #[arg(long, default_value = "results")]
        output: PathBuf,
        #[command(flatten)]
        reading: ReadingArgs,
        #[arg(long, value_enum, default_value_t = ConventionArg::PerOutcome)]
        convention: ConventionArg,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Number of bases, computational included.
    #[arg(long, default_value_t = 3)]
    mubs: usize,
    #[arg(long, value_enum, default_value_t = ScenarioArg::Dependent)]
    scenario: ScenarioArg,
    #[arg(long, value_enum, default_value_t = ConventionArg::PerOutcome)]
    convention: ConventionArg,
    #[command(flatten)]
    reading: ReadingArgs,
}

#[derive(Debug, Args)]
struct ReadingArgs {
    /// How the clamped overlap bound enters the eigenvalue formula.
    #[arg(long, value_enum, default_value_t = OverlapArg::Direct)]
    overlap: OverlapArg,
    /// How the eigenvalue entropy enters the S(EC) bound.
    #[arg(long, value_enum, default_value_t = EigenArg::SummedBinary)]
    eigen_entropy: EigenArg,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Dependent,
    Independent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConventionArg {
    PerOutcome,
    TotalSplit,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OverlapArg {
    Direct,
    PerPair,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EigenArg {
    SummedBinary,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Dependent => Scenario::Dependent,
            ScenarioArg::Independent => Scenario::Independent,
        }
    }
}

impl From<ConventionArg> for MubConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::PerOutcome => MubConvention::PerOutcome,
            ConventionArg::TotalSplit => MubConvention::TotalSplit,
        }
    }
}

impl ReadingArgs {
    fn reading(&self) -> BoundReading {
        BoundReading {
            overlap: match self.overlap {
                OverlapArg::Direct => OverlapReading::Direct,
                OverlapArg::PerPair => OverlapReading::PerPair,
            },
            eigen_entropy: match self.eigen_entropy {
                EigenArg::SummedBinary => EigenEntropy::SummedBinary,
                EigenArg::Pair => EigenEntropy::Pair,
            },
        }
    }
}

impl ModelArgs {
    fn config(&self) -> Result<Config, Failure> {
        Ok(Config::new(self.d, self.mubs, self.scenario.into())?
            .with_convention(self.convention.into())
            .with_reading(self.reading.reading()))
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn report(&self) -> i32 {
        let (tag, msg, code) = match self {
            Failure::Usage(m) => ("usage", m, 1),
            Failure::Numeric(m) => ("numeric", m, 2),
            Failure::Io(m) => ("io", m, 1),
        };
        eprintln!("error[{tag}]: {}", one_line(msg));
        code
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `argv` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = e.print();
                return 1;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return Failure::Usage(first.to_string()).report();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => f.report(),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn parse_q_spec(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Failure::Usage(format!("invalid number '{s}' in --q")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [a, b, c] => Ok(q_grid(parse(a)?, parse(b)?, parse(c)?)?),
        _ => Err(Failure::Usage(format!("--q expects a value or start:stop:step, got '{spec}'"))),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Keyrate { model, q } => cmd_keyrate(&model, q),
        Command::Sweep { model, q, out } => cmd_sweep(&model, &q, &out),
        Command::Threshold { model, all, output } => cmd_threshold(&model, all, output.as_deref()),
        Command::Simulate {
            model,
            q,
            rounds,
            seed,
            prob_reflect,
            output,
        } => cmd_simulate(&model, q, rounds, seed, prob_reflect, output.as_deref()),
        Command::MubCheck => cmd_mub_check(),
        Command::VerifyAlgebra { output } => cmd_verify_algebra(output.as_deref()),
        Command::Reproduce {
            output,
            reading,
            convention,
        } => reproduce(&output, reading.reading(), convention.into()).map(|_| ()),
    }
}

fn cmd_keyrate(model: &ModelArgs, q: f64) -> Result<(), Failure> {
    let config = model.config()?;
    let b = config.evaluate(q)?;
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
    line("d", config.d.to_string());
    line("n_mubs", config.n_mubs.to_string());
    line("scenario", config.scenario.to_string());
    line("convention", config.convention.to_string());
    line("reading", config.reading.to_string());
    line("Q", num(q));
    for (i, t) in b.t.as_array().iter().enumerate() {
        line(&format!("t{}", i + 1), format!("{t:.6}"));
    }
    line(if config.d == 3 { "X" } else { "W" }, format!("{:.6}", b.overlap.x_or_w));
    line("S", format!("{:.6}", b.overlap.s));
    line("p_eig", format!("{:.6}", b.overlap.p_eig));
    line("lambda1", format!("{:.6}", b.lambda1));
    line("lambda2", format!("{:.6}", b.lambda2));
    line("S(BEC)", format!("{:.6}", b.s_bec));
    line("S(EC)_upper", format!("{:.6}", b.s_ec_upper));
    line("H(B|A)", format!("{:.6}", b.h_b_given_a));
    line("r", format!("{:.6}", b.r));
    for w in &b.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    emit(None, &s)
}

fn cmd_sweep(model: &ModelArgs, q: &str, out: &OutputArgs) -> Result<(), Failure> {
    let config = model.config()?;
    let rows = sweep(&config, &parse_q_spec(q)?)?;
    let text = match out.format {
        FormatArg::Csv => sweep_csv(&rows),
        FormatArg::Svg => line_chart(
            &format!("d={} {} {}", config.d, config.scenario, config.convention),
            "Q",
            "r (bits)",
            &[Series {
                label: format!("{} bases", config.n_mubs),
                points: rows.iter().map(|r| (r.q, r.r)).collect(),
            }],
        ),
    };
    emit(out.output.as_deref(), &text)
}

fn all_configs(reading: BoundReading, convention: MubConvention) -> Vec<Config> {
    Config::all()
        .into_iter()
        .map(|c| c.with_reading(reading).with_convention(convention))
        .collect()
}

fn thresholds(configs: &[Config]) -> Result<Vec<ThresholdResult>, Failure> {
    configs
        .iter()
        .map(|c| find_threshold(c).map_err(Failure::from))
        .collect()
}

fn cmd_threshold(model: &ModelArgs, all: bool, output: Option<&Path>) -> Result<(), Failure> {
    let results = if all {
        thresholds(&all_configs(model.reading.reading(), model.convention.into()))?
    } else {
        vec![find_threshold(&model.config()?)?]
    };
    for t in results.iter().filter(|t| t.open) {
        let c = &t.config;
        eprintln!(
            "note: d={} n_mubs={} {}: rate stays positive on [0, 1/d]; q_star reported as 1/d",
            c.d, c.n_mubs, c.scenario
        );
    }
    emit(output, &threshold_csv(&results))
}

fn cmd_simulate(
    model: &ModelArgs,
    q: f64,
    rounds: u64,
    seed: u64,
    prob_reflect: f64,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let mut config = ProtocolConfig::new(model.d, model.mubs, q, model.scenario.into(), rounds, seed)?;
    config.prob_reflect = prob_reflect;
    config.reading = model.reading.reading();
    let res = run_protocol(&config)?;
    let e = &res.empirical;
    let mut s = String::new();
    s.push_str(&format!("rounds = {rounds}\nseed = {seed}\n"));
    s.push_str(&format!("measure_resend_rounds = {}\n", e.measure_resend_rounds));
    s.push_str(&format!("reflect_rounds = {}\n", e.reflect_rounds));
    s.push_str(&format!("analytic_convention = {}\n", config.matching_convention()));
    s.push_str(&format!("r_empirical = {:.6}\n", res.breakdown.r));
    s.push_str(&format!("r_analytic = {:.6}\n", res.analytic.r));
    emit(None, &s)?;
    if let Some(path) = output {
        let stats = e.to_stats()?;
        let d = config.d;
        let mut csv = String::from("a,b,c,count,frequency\n");
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    csv.push_str(&format!("{a},{b},{c},{},{}\n", e.count(a, b, c), num(stats.p(a, b, c))));
                }
            }
        }
        emit(Some(path), &csv)?;
    }
    Ok(())
}

fn cmd_mub_check() -> Result<(), Failure> {
    let mut s = String::from("d,basis_a,basis_b,deviation\n");
    let mut worst = 0.0_f64;
    for d in [3, 4] {
        let fam = mubs_for(d)?;
        for (i, b1) in fam.bases.iter().enumerate() {
            for b2 in &fam.bases[i + 1..] {
                let dev = verify_unbiased(b1, b2)?;
                worst = worst.max(dev);
                s.push_str(&format!("{d},{},{},{}\n", b1.label, b2.label, num(dev)));
            }
        }
    }
    emit(None, &s)?;
    if worst > 1e-12 {
        return Err(Failure::Numeric(format!("bases not unbiased: max deviation {worst:e}")));
    }
    Ok(())
}

pub const ALGEBRA_QS: [f64; 5] = [0.0, 0.01, 0.02, 0.03, 0.05];

fn algebra_csv() -> Result<String, Failure> {
    let mut s = String::from(
        "d,n_mubs,Q,isometry_residual,unitarity_residual,symmetry_spread,max_vanishing,t_identity_residual,bound_rhs,x_true,bound_slack\n",
    );
    for d in [3, 4] {
        for &n in supported_mubs(d) {
            for q in ALGEBRA_QS {
                let c = verify_algebra(d, n, q)?;
                s.push_str(&format!(
                    "{d},{n},{},{},{},{},{},{},{},{},{}\n",
                    num(q),
                    num(c.isometry_residual),
                    num(c.unitarity_residual),
                    num(c.symmetry_spread),
                    num(c.max_vanishing),
                    num(c.t_residual),
                    num(c.bound.rhs),
                    num(c.bound.x_true),
                    num(c.bound.slack)
                ));
            }
        }
    }
    Ok(s)
}

fn cmd_verify_algebra(output: Option<&Path>) -> Result<(), Failure> {
    emit(output, &algebra_csv()?)
}

/// Files written by `reproduce`, relative to the output directory.
pub const REPRODUCE_FILES: [&str; 9] = [
    "table1.csv",
    "table3.csv",
    "fig1_dependent.csv",
    "fig1_independent.csv",
    "fig2_dependent.csv",
    "fig2_independent.csv",
    "fig1.svg",
    "fig2.svg",
    "conformance.csv",
];

fn figure_range(d: usize) -> (f64, f64) {
    if d == 3 {
        (0.15, 0.001)
    } else {
        (0.10, 0.001)
    }
}

fn reproduce(dir: &Path, reading: BoundReading, convention: MubConvention) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut write = |name: &str, text: &str| -> Result<(), Failure> {
        let path = dir.join(name);
        emit(Some(&path), text)?;
        written.push(path);
        Ok(())
    };

    let configs = all_configs(reading, convention);
    let results = thresholds(&configs)?;
    let table = |d: usize| -> Vec<ThresholdResult> { results.iter().filter(|t| t.config.d == d).cloned().collect() };
    write("table1.csv", &threshold_csv(&table(3)))?;
    write("table3.csv", &threshold_csv(&table(4)))?;

    for (fig, d) in [("fig1", 3), ("fig2", 4)] {
        let (stop, step) = figure_range(d);
        let grid = q_grid(0.0, stop, step)?;
        let mut series = Vec::new();
        for scenario in Scenario::ALL {
            let mut rows = Vec::new();
            for c in configs.iter().filter(|c| c.d == d && c.scenario == scenario) {
                let part = sweep(c, &grid)?;
                series.push(Series {
                    label: format!("{} bases, {}", c.n_mubs, scenario),
                    points: part.iter().map(|r| (r.q, r.r)).collect(),
                });
                rows.extend(part);
            }
            write(&format!("{fig}_{scenario}.csv"), &sweep_csv(&rows))?;
        }
        let title = format!("Key rate vs Q, d={d} ({reading}, {convention})");
        write(&format!("{fig}.svg"), &line_chart(&title, "Q", "r (bits)", &series))?;
    }

    let mut conf = String::from(
        "d,n_mubs,scenario,convention,reading,q_star,paper_reference,abs_diff,tolerance,within_tolerance,open,reentrant\n",
    );
    for t in &results {
        let c = &t.config;
        let (reference, diff) = format::reference_for(t).expect("evaluated configs have references");
        conf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.d,
            c.n_mubs,
            c.scenario,
            c.convention,
            c.reading,
            num(t.q_star),
            num(reference),
            num(diff),
            num(TABLE_TOLERANCE),
            diff <= TABLE_TOLERANCE,
            t.open,
            t.reentrant
        ));
    }
    for r in reference_thresholds().iter().filter(|r| !r.evaluated) {
        let variant = match r.variant {
            Variant::Mubs(n) => n.to_string(),
            Variant::CompPlusB => "comp+B".to_string(),
        };
        conf.push_str(&format!(
            "{},{},{},{},{},,{},,,reference-only,,\n",
            r.d,
            variant,
            r.scenario,
            convention,
            reading,
            num(r.q)
        ));
    }
    write("conformance.csv", &conf)?;
    Ok(written)
}
