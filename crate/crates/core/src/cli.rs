//! Command-line front end. [`run`] parses arguments, dispatches to the
//! library and returns the process exit code.
//!
//! Results go to `--out`, or to `$VARHARDY_OUTPUT_DIR/<command>.<ext>` when
//! that variable is set, or to standard output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bmo::{bmo_norm, lipschitz_norm, SupMode, DEFAULT_SAMPLE_COUNT};
use crate::error::{Error, Result};
use crate::experiments::{
    self, ConstantReport, ExpJnOptions, ExponentLaw, ExponentSpec, MartingaleLaw, SpaceSpec, TrialConfig,
};
use crate::hardy::atomic_decompose;
use crate::io::{csv_string, format_sig, read_json, to_json_string, MartingaleFile, ValuesFile, CSV_DIGITS};
use crate::martingale::DEFAULT_ENUMERATION_CAP;
use crate::space::{aoyama_c, build_dyadic_space, build_regular_tree, condition_k, ConditionKMode, FilteredSpace};
use crate::varlp::luxemburg_norm;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_VAR: &str = "VARHARDY_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "varhardy", version, about = "Variable-exponent martingale Hardy spaces on finite filtrations")]
struct Cli {
    /// Output file (default: $VARHARDY_OUTPUT_DIR/<command>.<ext>, else stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate filtered spaces.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Luxemburg norm of a function.
    Norm {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        exponent: PathBuf,
        #[arg(long)]
        function: PathBuf,
    },
    /// Stopping-time atomic decomposition of a martingale.
    Decompose {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        exponent: PathBuf,
        #[arg(long)]
        martingale: PathBuf,
    },
    /// Exponent constants and the block-average inequality.
    #[command(subcommand)]
    Check(CheckCmd),
    /// BMO norm over stopping times.
    Bmo {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        exponent: PathBuf,
        #[arg(long)]
        martingale: PathBuf,
        #[command(flatten)]
        sup: SupArgs,
    },
    /// Lipschitz norm over stopping times.
    Lipschitz {
        #[arg(long)]
        space: PathBuf,
        /// File with the exponent `alpha` (`{"values": [...]}`), entries >= 0.
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        martingale: PathBuf,
        #[command(flatten)]
        sup: SupArgs,
    },
    /// Seeded experiments.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Debug, Subcommand)]
enum SpaceCmd {
    /// Uniform dyadic tree of the given depth.
    GenDyadic {
        #[arg(long)]
        depth: usize,
    },
    /// Uniform tree with `arity` children per node.
    GenRegular {
        #[arg(long)]
        arity: usize,
        #[arg(long)]
        depth: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KMode {
    Exact,
    BruteForce,
    Block,
}

#[derive(Debug, Subcommand)]
enum CheckCmd {
    /// Smallest K with P(A)^(p_-(A) - p_+(A)) <= K
    ConditionK {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        exponent: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: KMode,
    },
    /// Minimal C with 1/p <= C E(1/p | F_n)
    Aoyama {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        exponent: PathBuf,
    },
    /// Block-average inequality for ||f||_p <= 1/2
    Lemma34 {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        exponent: PathBuf,
        #[arg(long)]
        function: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SupArgs {
    /// Enumerate every stopping time (resource error above the cap).
    #[arg(long, conflicts_with = "sampled")]
    exhaustive: bool,
    /// Use a seeded sample of stopping times (values are lower bounds).
    #[arg(long)]
    sampled: bool,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_COUNT)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SupArgs {
    fn mode(&self) -> SupMode {
        if self.exhaustive {
            SupMode::Exhaustive { cap: self.cap }
        } else if self.sampled {
            SupMode::Sampled { count: self.samples, seed: self.seed }
        } else {
            SupMode::Auto { cap: self.cap, count: self.samples, seed: self.seed }
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Constant,
    TwoBlock,
    IidUniform,
    BlockStructured,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MartingaleLawArg {
    Normal,
    Uniform,
    TwoPoint,
}

/// Trial configuration flags; `--config` replaces the space, exponent and
/// law, and explicit `--seed` / `--trials` still override it.
#[derive(Debug, Args)]
struct TrialArgs {
    /// Master seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials (default 100).
    #[arg(long)]
    trials: Option<usize>,
    /// TrialConfig JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
    /// Tree arity; 2 gives the dyadic tree.
    #[arg(long, default_value_t = 2)]
    arity: usize,
    #[arg(long, value_enum, default_value = "iid-uniform")]
    law: LawArg,
    #[arg(long, default_value_t = 1.1)]
    p_min: f64,
    #[arg(long, default_value_t = 3.0)]
    p_max: f64,
    #[arg(long, value_enum, default_value = "normal")]
    martingale_law: MartingaleLawArg,
}

impl TrialArgs {
    fn config(&self, default_depth: usize) -> Result<TrialConfig> {
        let mut config = match &self.config {
            Some(path) => read_json::<TrialConfig>(path)?,
            None => {
                let depth = self.depth.unwrap_or(default_depth);
                let space = if self.arity == 2 {
                    SpaceSpec::Dyadic { depth }
                } else {
                    SpaceSpec::Regular { arity: self.arity, depth }
                };
                let law = match self.law {
                    LawArg::Constant => ExponentLaw::Constant,
                    LawArg::TwoBlock => ExponentLaw::TwoBlock,
                    LawArg::IidUniform => ExponentLaw::IidUniform,
                    LawArg::BlockStructured => ExponentLaw::BlockStructured,
                };
                let m = match self.martingale_law {
                    MartingaleLawArg::Normal => MartingaleLaw::Normal,
                    MartingaleLawArg::Uniform => MartingaleLaw::Uniform,
                    MartingaleLawArg::TwoPoint => MartingaleLaw::TwoPoint,
                };
                TrialConfig::new(space, ExponentSpec { law, p_min: self.p_min, p_max: self.p_max }).with_law(m)
            }
        };
        if let Some(s) = self.seed {
            config.seed = s;
        } else if self.config.is_none() {
            config.seed = 0;
        }
        if let Some(t) = self.trials {
            config.trials = t;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
enum ExperimentCmd {
    /// Weak-type ratios on first-passage lambda grids.
    WeakType(#[command(flatten)] TrialArgs),
    /// Doob strong-type ratios.
    Doob(#[command(flatten)] TrialArgs),
    /// BMO_p / BMO_1 over all stopping times.
    Jn(#[command(flatten)] TrialArgs),
    /// Exponential tail curves for the first trial martingale.
    ExpJn {
        #[command(flatten)]
        trial: TrialArgs,
        /// Number of t intervals on [0, 1.1 max|d|].
        #[arg(long, default_value_t = 40)]
        steps: usize,
    },
    /// Oscillating exponent on dyadic annuli.
    NakaiSadasue {
        #[arg(long, default_value_t = 20)]
        max_n: usize,
        /// Accepted for uniformity; the experiment is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Search for large |E_n f|^p / E_n(|f|^p).
    #[command(name = "violation-33")]
    Violation33(#[command(flatten)] TrialArgs),
}

/// An emitted result: JSON value plus its CSV rendering.
struct Output {
    name: &'static str,
    json: String,
    csv: String,
}

impl Output {
    fn new<T: Serialize>(name: &'static str, value: &T, header: &[&str], rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Output { name, json: to_json_string(value)?, csv: csv_string(header, rows)? })
    }

    fn report(name: &'static str, r: &ConstantReport) -> Result<Self> {
        let csv = if r.points.is_empty() {
            let (header, rows) = r.ratio_rows();
            csv_string(&header, &rows)?
        } else {
            let mut wr = csv::Writer::from_writer(Vec::new());
            wr.write_record(["series", "x", "y"])?;
            for p in &r.points {
                wr.write_record([p.series.clone(), format_sig(p.x, CSV_DIGITS), format_sig(p.y, CSV_DIGITS)])?;
            }
            String::from_utf8(wr.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("ASCII output")
        };
        Ok(Output { name, json: to_json_string(r)?, csv })
    }
}

fn load_space(path: &Path) -> Result<FilteredSpace> {
    read_json(path)
}

fn dispatch(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Space(cmd) => {
            let s = match cmd {
                SpaceCmd::GenDyadic { depth } => build_dyadic_space(*depth)?,
                SpaceCmd::GenRegular { arity, depth } => build_regular_tree(*arity, *depth)?,
            };
            let rows: Vec<Vec<f64>> = s.leaf_probs().iter().enumerate().map(|(i, p)| vec![i as f64, *p]).collect();
            Output::new("space", &s, &["leaf", "prob"], &rows)
        }
        Command::Norm { space, exponent, function } => {
            let s = load_space(space)?;
            let p = read_json::<ValuesFile>(exponent)?.exponent()?;
            let f = read_json::<ValuesFile>(function)?.function();
            let r = luxemburg_norm(&s, &f, &p)?;
            Output::new("norm", &r, &["norm", "iterations", "residual"], &[vec![r.norm, r.iterations as f64, r.residual]])
        }
        Command::Decompose { space, exponent, martingale } => {
            let s = load_space(space)?;
            let p = read_json::<ValuesFile>(exponent)?.exponent()?;
            let f = read_json::<MartingaleFile>(martingale)?.into_martingale(&s)?;
            let dec = atomic_decompose(&f, &p)?;
            let rows: Vec<Vec<f64>> = dec.terms.iter().map(|t| vec![t.k as f64, t.mu]).collect();
            Output::new("decomposition", &dec.terms, &["k", "mu"], &rows)
        }
        Command::Check(cmd) => match cmd {
            CheckCmd::ConditionK { space, exponent, mode } => {
                let s = load_space(space)?;
                let p = read_json::<ValuesFile>(exponent)?.exponent()?;
                let mode = match mode {
                    KMode::Exact => ConditionKMode::ExactPairwise,
                    KMode::BruteForce => ConditionKMode::BruteForce,
                    KMode::Block => ConditionKMode::BlockRestricted,
                };
                let k = condition_k(&s, &p, mode)?;
                Output::new("condition-k", &k, &["k"], &[vec![k.k]])
            }
            CheckCmd::Aoyama { space, exponent } => {
                #[derive(Serialize)]
                struct Aoyama {
                    c: f64,
                }
                let s = load_space(space)?;
                let p = read_json::<ValuesFile>(exponent)?.exponent()?;
                let c = aoyama_c(&s, &p)?;
                Output::new("aoyama", &Aoyama { c }, &["c"], &[vec![c]])
            }
            CheckCmd::Lemma34 { space, exponent, function } => {
                let s = load_space(space)?;
                let p = read_json::<ValuesFile>(exponent)?.exponent()?;
                let f = read_json::<ValuesFile>(function)?.function();
                Output::report("lemma34", &experiments::lemma34_check(&f, &p, &s)?)
            }
        },
        Command::Bmo { space, exponent, martingale, sup } => {
            let s = load_space(space)?;
            let p = read_json::<ValuesFile>(exponent)?.exponent()?;
            let f = read_json::<MartingaleFile>(martingale)?.into_martingale(&s)?;
            let r = bmo_norm(&f, &p, sup.mode())?;
            Output::new("bmo", &r, &["value", "candidates"], &[vec![r.value, r.candidates as f64]])
        }
        Command::Lipschitz { space, alpha, q, martingale, sup } => {
            let s = load_space(space)?;
            let a = read_json::<ValuesFile>(alpha)?.values;
            let f = read_json::<MartingaleFile>(martingale)?.into_martingale(&s)?;
            let r = lipschitz_norm(&f, *q, &a, sup.mode())?;
            Output::new("lipschitz", &r, &["value", "candidates"], &[vec![r.value, r.candidates as f64]])
        }
        Command::Experiment(cmd) => match cmd {
            ExperimentCmd::WeakType(t) => Output::report("weak-type", &experiments::weak_type_sweep(&t.config(4)?)?),
            ExperimentCmd::Doob(t) => Output::report("doob", &experiments::doob_strong_sweep(&t.config(4)?)?),
            ExperimentCmd::Jn(t) => Output::report("jn", &experiments::jn_equivalence_sweep(&t.config(3)?)?),
            ExperimentCmd::ExpJn { trial, steps } => {
                let config = trial.config(2)?;
                let space = config.space.build()?;
                let p = experiments::config_exponent(&space, &config)?;
                let f = experiments::generate_trial(&config, &space, 0)?;
                let opts = ExpJnOptions { grid_steps: (*steps).max(1), ..ExpJnOptions::default() };
                Output::report("exp-jn", &experiments::exp_jn_curve(&f, &p, None, opts)?)
            }
            ExperimentCmd::NakaiSadasue { max_n, .. } => {
                Output::report("nakai-sadasue", &experiments::nakai_sadasue(*max_n)?)
            }
            ExperimentCmd::Violation33(t) => {
                Output::report("violation-33", &experiments::violation_33_search(&t.config(3)?)?)
            }
        },
    }
}

fn emit(cli: &Cli, out: Output) -> Result<()> {
    let (text, ext) = match cli.format {
        Format::Json => (out.json, "json"),
        Format::Csv => (out.csv, "csv"),
    };
    let target = match (&cli.out, std::env::var_os(OUTPUT_DIR_VAR)) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) if !dir.is_empty() => {
            std::fs::create_dir_all(&dir)?;
            Some(Path::new(&dir).join(format!("{}.{ext}", out.name)))
        }
        _ => None,
    };
    match target {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Runs the CLI on `argv` (including the program name); returns the exit
/// code: 0 success, 1 validation, domain or usage error, 2 resource limit,
/// 3 numerical failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli).and_then(|out| emit(&cli, out)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("varhardy: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn parser_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["varhardy", "--bogus"]), 1);
        assert_eq!(run(["varhardy", "space", "gen-dyadic"]), 1);
        assert_eq!(run(["varhardy", "--help"]), 0);
    }

    #[test]
    fn trial_defaults() {
        let cli = Cli::try_parse_from(["varhardy", "experiment", "doob", "--trials", "7"]).unwrap();
        let Command::Experiment(ExperimentCmd::Doob(t)) = &cli.command else { panic!() };
        let c = t.config(4).unwrap();
        assert_eq!((c.seed, c.trials), (0, 7));
        assert_eq!(c.space, SpaceSpec::Dyadic { depth: 4 });
    }
}
