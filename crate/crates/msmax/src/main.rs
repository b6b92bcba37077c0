//! `msmax` command line: runs verification scenarios against the maximal
//! operator, embedding, and weight-constant machinery in the library and
//! prints a deterministic report.
//!
//! Exit status: 0 when every check line passes, 1 when the scenario ran but
//! some check failed, 2 on configuration or usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use msmax::harness::{
    run_scenario, CorpusSpec, Params, ProfileSpec, Scenario, Tolerances, WeightsBlock, CHECK_IDS,
};

#[derive(Parser)]
#[command(
    name = "msmax",
    version,
    about = "Numerical verification of multilinear strong maximal operators, \
             fractional averages, and weighted-norm constants on dyadic grids"
)]
struct Cli {
    /// Override the scenario seed (reports echo it for reproducibility).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the report to this file; a `.tsv` table of the named constants
    /// is written next to it.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Cap the worker thread pool (defaults to all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML file.
    Run {
        /// Path to the scenario file.
        scenario: PathBuf,
    },
    /// Run a built-in check by identifier (see `checks`), optionally
    /// overriding scenario fields.
    Verify {
        /// One of the identifiers printed by `msmax checks`.
        check: String,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// List the built-in check identifiers.
    Checks,
    /// Survey weight constants for a system given entirely on the command
    /// line, without writing a scenario file.
    Constants(ConstantsArgs),
}

/// Scenario-field overrides layered on top of a built-in check's defaults;
/// anything left unset keeps the default.
#[derive(Args)]
struct OverrideArgs {
    /// Ambient dimension.
    #[arg(long)]
    n: Option<usize>,

    /// Fractional order of the averages.
    #[arg(long)]
    alpha: Option<f64>,

    /// Integrability exponents, one per slot, comma separated.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,

    /// Target exponent.
    #[arg(long, conflicts_with = "one_weight")]
    q: Option<f64>,

    /// Derive the target exponent from the scaling relation.
    #[arg(long)]
    one_weight: bool,

    /// Weight spec per slot, repeatable; replaces the default weights.
    #[arg(long = "weight", value_name = "SPEC")]
    weights: Vec<String>,

    /// Target-side weight spec.
    #[arg(long, value_name = "SPEC")]
    nu: Option<String>,

    /// Rectangle family: `all` or `dyadic`.
    #[arg(long)]
    family: Option<String>,

    /// Dyadic resolution levels, comma separated and ascending.
    #[arg(short = 'L', long = "levels", value_delimiter = ',')]
    levels: Option<Vec<u8>>,

    /// Corpus size.
    #[arg(long)]
    count: Option<usize>,
}

impl OverrideArgs {
    fn apply(self, scenario: &mut Scenario) {
        if let Some(n) = self.n {
            scenario.profile.n = n;
        }
        if let Some(alpha) = self.alpha {
            scenario.profile.alpha = alpha;
        }
        if let Some(p) = self.p {
            scenario.profile.p = p;
        }
        if let Some(q) = self.q {
            scenario.profile.q = Some(q);
            scenario.profile.one_weight = false;
        } else if self.one_weight {
            scenario.profile.q = None;
            scenario.profile.one_weight = true;
        }
        if !self.weights.is_empty() {
            scenario.weights.omega = self.weights;
        }
        if let Some(nu) = self.nu {
            scenario.weights.nu = Some(nu);
        }
        if let Some(family) = self.family {
            scenario.family = family;
        }
        if let Some(levels) = self.levels {
            scenario.resolutions = levels;
        }
        if let Some(count) = self.count {
            scenario.corpus.count = count;
        }
    }
}

#[derive(Args)]
struct ConstantsArgs {
    /// Weight spec for each function slot, repeatable; `const:c=1`,
    /// `power:a=0.5,anchor=0.25`, and `martingale:seed=3,amp=0.4,decay=0.7`
    /// are all understood. Omitted slots default to the constant weight.
    #[arg(long = "weight", value_name = "SPEC")]
    weights: Vec<String>,

    /// Target-side weight spec; defaults to the product of the slot weights.
    #[arg(long, value_name = "SPEC")]
    nu: Option<String>,

    /// Ambient dimension.
    #[arg(long, default_value_t = 1)]
    n: usize,

    /// Fractional order of the averages.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,

    /// Integrability exponents, one per slot, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    p: Vec<f64>,

    /// Target exponent.
    #[arg(long, conflicts_with = "one_weight")]
    q: Option<f64>,

    /// Derive the target exponent from the scaling relation instead of
    /// passing `--q`.
    #[arg(long)]
    one_weight: bool,

    /// Rectangle family the constants range over: `all` or `dyadic`.
    #[arg(long, default_value = "all")]
    family: String,

    /// Dyadic resolution levels, comma separated and ascending.
    #[arg(
        short = 'L',
        long = "levels",
        value_delimiter = ',',
        default_value = "4"
    )]
    levels: Vec<u8>,
}

impl ConstantsArgs {
    fn into_scenario(self) -> Result<Scenario> {
        if self.q.is_none() && !self.one_weight {
            bail!("pass either --q or --one-weight");
        }
        let mut scenario =
            Scenario::default_for("constants").context("building the base scenario")?;
        scenario.profile = ProfileSpec {
            n: self.n,
            alpha: self.alpha,
            p: self.p,
            q: self.q,
            one_weight: self.one_weight,
        };
        scenario.weights = WeightsBlock {
            omega: self.weights,
            nu: self.nu,
        };
        scenario.corpus = CorpusSpec::default();
        scenario.resolutions = self.levels;
        scenario.family = self.family;
        scenario.tolerances = Tolerances::default();
        scenario.params = Params::default();
        Ok(scenario)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }

    let mut scenario = match cli.command {
        Command::Run { scenario } => Scenario::load(&scenario)
            .with_context(|| format!("loading scenario {}", scenario.display()))?,
        Command::Verify { check, overrides } => {
            let mut s = Scenario::default_for(&check)?;
            overrides.apply(&mut s);
            s
        }
        Command::Checks => {
            for id in CHECK_IDS {
                println!("{id}");
            }
            return Ok(true);
        }
        Command::Constants(args) => args.into_scenario()?,
    };
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }

    let report = run_scenario(&scenario)?;
    let rendered = report.render();
    print!("{rendered}");

    if let Some(out) = &cli.out {
        std::fs::write(out, &rendered)
            .with_context(|| format!("writing report to {}", out.display()))?;
        let table = out.with_extension("tsv");
        std::fs::write(&table, report.constants_tsv())
            .with_context(|| format!("writing constants to {}", table.display()))?;
    }

    Ok(report.passed())
}
