use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ri_reservoir::benchmarks::{enumerate_rules, Task};
use ri_reservoir::runner::{self, ExperimentConfig, RunOptions};
use ri_reservoir::{Error, Result};

/// Recurrent-infomax reservoirs: training, evaluation and reports.
#[derive(Parser)]
#[command(name = "ri-reservoir", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every (K, trial) job, resuming an existing run.
    Run(RunArgs),
    /// Evaluate one checkpoint with frozen weights.
    Eval(EvalArgs),
    /// Aggregate a run directory into mean/s.d. tables.
    Report(ReportArgs),
    /// List every Boolean rule of an arity with its separability.
    Rules(RulesArgs),
}

#[derive(Args)]
#[command(rename_all = "snake_case")]
struct ConfigArgs {
    /// TOML configuration file; replaces the profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in profile: `reduced` or `full`.
    #[arg(long, default_value = "reduced")]
    profile: String,
    #[arg(long)]
    n_neurons: Option<usize>,
    #[arg(long)]
    sigma2_init: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    p_bar: Option<f64>,
    #[arg(long)]
    p0_bar: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    block_steps: Option<usize>,
    #[arg(long)]
    settle_steps: Option<usize>,
    #[arg(long)]
    n_blocks: Option<usize>,
    #[arg(long)]
    washout: Option<usize>,
    #[arg(long)]
    learning: Option<usize>,
    #[arg(long)]
    testing: Option<usize>,
    #[arg(long)]
    adapt_bias_in_washout: Option<bool>,
    #[arg(long)]
    tau_max: Option<usize>,
    #[arg(long)]
    mi_probe: Option<usize>,
    /// Comma-separated subset of memory, bool2, bool3.
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<Task>>,
    /// Comma-separated input multiplicities.
    #[arg(long, value_delimiter = ',')]
    k_sweep: Option<Vec<u32>>,
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Also settable through RI_OUT_DIR.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

macro_rules! set {
    ($($src:expr => $dst:expr),* $(,)?) => {
        $(if let Some(v) = $src.clone() { $dst = v; })*
    };
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::profile(&self.profile)?,
        };
        cfg.apply_env();
        let (n, r, b, e) = (&mut cfg.network, &mut cfg.ri, &mut cfg.benchmark, &mut cfg.experiment);
        set! {
            self.n_neurons => n.n_neurons, self.sigma2_init => n.sigma2_init, self.p_max => n.p_max,
            self.p_bar => n.p_bar, self.p0_bar => n.p0_bar, self.epsilon => n.epsilon,
            self.eta => r.eta, self.block_steps => r.block_steps, self.settle_steps => r.settle_steps,
            self.n_blocks => r.n_blocks,
            self.washout => b.washout, self.learning => b.learning, self.testing => b.testing,
            self.adapt_bias_in_washout => b.adapt_bias_in_washout, self.tau_max => b.tau_max,
            self.mi_probe => b.mi_probe, self.tasks => b.tasks,
            self.k_sweep => e.k_sweep, self.n_trials => e.n_trials, self.eval_every => e.eval_every,
            self.checkpoint_every => e.checkpoint_every, self.master_seed => e.master_seed,
            self.out_dir => e.out_dir,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
    /// Stop every job on reaching this block (for interruption drills).
    #[arg(long, hide = true)]
    halt_at_block: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint directory holding manifest.json.
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory; defaults to RI_OUT_DIR.
    run_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RulesArgs {
    #[arg(long, default_value_t = 2)]
    arity: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_out(path: Option<&PathBuf>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| io_error(p.clone(), e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| io_error("stdout".into(), e)),
    }
}

fn io_error(path: PathBuf, source: std::io::Error) -> Error {
    Error::Io { path, source }
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.3}"))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let cfg = args.config.resolve()?;
            if args.print_config {
                return write_out(None, cfg.to_toml_string().as_bytes());
            }
            let opts = RunOptions {
                halt_at_block: args.halt_at_block,
                progress: !args.quiet,
            };
            let trace = runner::run_experiment_with(&cfg, &opts)?;
            eprintln!(
                "{} jobs done in {} ({} skipped blocks)",
                trace.jobs.len(),
                cfg.experiment.out_dir.display(),
                trace.skipped_blocks()
            );
            Ok(())
        }
        Command::Eval(args) => {
            let cfg = args.config.resolve()?;
            let eval = runner::evaluate_checkpoint(&args.snapshot, &cfg.benchmark, args.seed)?;
            eprintln!(
                "block {} K={} MC={} BC2={} BC3={}",
                eval.block,
                eval.k_multiplicity,
                fmt(eval.mc()),
                fmt(eval.bc(2)),
                fmt(eval.bc(3))
            );
            let json = serde_json::to_string_pretty(&eval).map_err(|e| Error::Parse {
                field: "evaluation".into(),
                reason: e.to_string(),
            })?;
            write_out(args.out.as_ref(), json.as_bytes())
        }
        Command::Report(args) => {
            let dir = match args.run_dir {
                Some(d) => d,
                None => {
                    let mut cfg = ExperimentConfig::reduced();
                    cfg.apply_env();
                    cfg.experiment.out_dir
                }
            };
            let report = runner::sweep_report(&dir)?;
            let out = runner::write_report(&dir, &report)?;
            println!("{:>3} {:>6} {:>3} {:>14} {:>14} {:>14}", "K", "block", "n", "MC", "BC2", "BC3");
            for r in &report.scores {
                println!(
                    "{:>3} {:>6} {:>3} {:>6}±{:<7} {:>6}±{:<7} {:>6}±{:<7}",
                    r.k_multiplicity,
                    r.block,
                    r.n,
                    fmt(r.mc_mean),
                    fmt(r.mc_sd),
                    fmt(r.bc2_mean),
                    fmt(r.bc2_sd),
                    fmt(r.bc3_mean),
                    fmt(r.bc3_sd)
                );
            }
            eprintln!("tables written to {}", out.display());
            Ok(())
        }
        Command::Rules(args) => {
            let rules = enumerate_rules(args.arity)?;
            let mut text = String::from("arity,rule_id,truth_table,separable,memory_rule\n");
            for r in &rules {
                let table: String = r.truth_table.iter().map(|b| char::from(b'0' + b)).collect();
                text += &format!("{},{},{table},{},{}\n", r.arity, r.rule_id, r.separable, r.is_memory_rule());
            }
            write_out(args.out.as_ref(), text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
