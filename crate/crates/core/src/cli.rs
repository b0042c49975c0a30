//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors, 2 when a
//! run fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::stats::{batch_means_se, mean, sample_variance};
use crate::diagnostics::{bic_select, unfold_ranks, waic_all, write_waic, ClusterResult};
use crate::error::{Error, Result};
use crate::identify::{identify_output, read_summaries, summarize_paths, write_summaries, ReflectionPlan};
use crate::mcmc::{generate_synthetic, layout_for, run_chain, run_chains, ChainOutput, SynthSpec};
use crate::process::{simulate_prior_betas, ProcessHyper};
use crate::votes_io::{chain_dir, load_config, parse_votes, read_chains, write_draws, write_votes, RunConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CIRC_DFM_THREADS";
pub const SUMMARIES_FILE: &str = "summaries.csv";

#[derive(Debug, Parser)]
#[command(name = "circdfm", version, about = "Circular dynamic factor model for binary votes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the model by MCMC and write raw draw tables.
    Fit {
        #[arg(long)]
        votes: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Independent chains, written to chain-k subdirectories when above 1.
        #[arg(long, default_value_t = 1)]
        chains: usize,
    },
    /// Draw ideal points from the process prior, one angle per row.
    PriorSim {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-period WAIC from raw draws.
    Waic {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        votes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Wrap and reflect draws by the config anchors, then summarize paths.
    Postprocess {
        #[arg(long)]
        draws: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster one period's posterior means with a von Mises mixture.
    Cluster {
        #[arg(long)]
        summaries: PathBuf,
        #[arg(long)]
        period: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print hyperparameter summaries and acceptance rates.
    Summarize {
        #[arg(long)]
        draws: PathBuf,
    },
    /// Simulate a vote table from a JSON or TOML spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    let missing_input = matches!(e, Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound);
    if e.is_validation() || missing_input {
        1
    } else {
        2
    }
}

fn configure_threads() {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
                warn!("thread pool already initialised; ignoring {THREADS_ENV}");
            }
        }
        _ => warn!("ignoring {THREADS_ENV}={v:?}; expected a positive integer"),
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Fit { votes, config, out, chains } => fit(&votes, &config, &out, chains),
        Command::PriorSim { config, n, out } => prior_sim(&config, n, &out),
        Command::Waic { draws, votes, out } => waic(&draws, &votes, &out),
        Command::Postprocess { draws, config, out } => postprocess(&draws, &config, &out),
        Command::Cluster { summaries, period, seed } => cluster(&summaries, &period, seed),
        Command::Summarize { draws } => summarize(&draws),
        Command::Synth { spec, out, seed } => synth(&spec, &out, seed),
    }
}

fn read_config(path: &Path) -> Result<RunConfig> {
    let config = load_config(path)?;
    config.validate()?;
    Ok(config)
}

fn fit(votes: &Path, config: &Path, out: &Path, chains: usize) -> Result<()> {
    if chains == 0 {
        return Err(Error::InvalidInput("--chains must be at least 1".into()));
    }
    let data = parse_votes(votes)?;
    let config = read_config(config)?;
    ReflectionPlan::new(&layout_for(&data), &config.anchors)?;
    info!(
        "fitting {} units, {} periods, {} votes",
        data.n_units(),
        data.n_periods(),
        data.n_votes()
    );
    if chains == 1 {
        write_draws(&run_chain(&data, &config)?, out)
    } else {
        for (k, chain) in run_chains(&data, &config, chains)?.iter().enumerate() {
            write_draws(chain, chain_dir(out, k))?;
        }
        Ok(())
    }
}

fn prior_sim(config: &Path, n: usize, out: &Path) -> Result<()> {
    let config = read_config(config)?;
    let p = config
        .prior_sim
        .ok_or_else(|| Error::Config("prior-sim needs a [prior_sim] section".into()))?;
    let hyper = ProcessHyper::from_sds(p.mu, p.rho, p.tau1, p.tau2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let betas = simulate_prior_betas(&hyper, p.periods, n, &mut rng);
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["beta"])?;
    for b in betas {
        w.write_record([b.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn pooled(draws: &Path) -> Result<ChainOutput> {
    ChainOutput::pool(read_chains(draws)?)
}

fn waic(draws: &Path, votes: &Path, out: &Path) -> Result<()> {
    let data = parse_votes(votes)?;
    let results = waic_all(&pooled(draws)?, &data)?;
    write_waic(&results, out)
}

fn postprocess(draws: &Path, config: &Path, out: &Path) -> Result<()> {
    let config = read_config(config)?;
    let chains = read_chains(draws)?;
    let identified = chains
        .iter()
        .map(|c| identify_output(c, &config.anchors))
        .collect::<Result<Vec<_>>>()?;
    if identified.len() == 1 {
        write_draws(&identified[0], out)?;
    } else {
        for (k, c) in identified.iter().enumerate() {
            write_draws(c, chain_dir(out, k))?;
        }
    }
    let summaries = summarize_paths(&ChainOutput::pool(identified)?)?;
    write_summaries(&summaries, out.join(SUMMARIES_FILE))
}

#[derive(Debug, Serialize)]
struct ClusterReport {
    period: String,
    units: Vec<String>,
    means: Vec<f64>,
    ranks: Vec<usize>,
    clusters: ClusterResult,
}

fn cluster(summaries: &Path, period: &str, seed: u64) -> Result<()> {
    let rows: Vec<_> = read_summaries(summaries)?
        .into_iter()
        .filter(|s| s.period == period)
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("no summaries for period {period:?}")));
    }
    let entries: Vec<(String, Option<f64>)> = rows.iter().map(|s| (s.unit.clone(), s.mean)).collect();
    let ranks = unfold_ranks(&entries)?;
    let means: Vec<f64> = rows.iter().map(|s| s.mean.expect("checked by ranking")).collect();
    let clusters = bic_select(&means, 2, 5, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let report = ClusterReport {
        period: period.to_string(),
        units: rows.into_iter().map(|s| s.unit).collect(),
        means,
        ranks,
        clusters,
    };
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &report)?;
    writeln!(stdout)?;
    Ok(())
}

fn summarize(draws: &Path) -> Result<()> {
    let chains = read_chains(draws)?;
    let mut stdout = std::io::stdout().lock();
    for c in &chains {
        let m = &c.manifest;
        let a = &m.acceptance.sampling;
        writeln!(
            stdout,
            "chain {}: {} draws (iterations {}, burn-in {}, thin {}), identified: {}",
            m.chain, m.draws, m.iterations, m.burnin, m.thin, m.identified
        )?;
        writeln!(
            stdout,
            "  acceptance: hmc {:.3}, kappa {:.3}, hyper {:.3}, rho {:.3}; slice shrinks {:.2}; divergent {}",
            a.hmc, a.kappa, a.hyper, a.rho, a.ess_shrinks, a.hmc_divergent
        )?;
    }
    let pooled = ChainOutput::pool(chains)?;
    if pooled.n_draws() < 2 {
        writeln!(stdout, "fewer than two draws; no posterior summaries")?;
        return Ok(());
    }
    writeln!(stdout, "{:<10}{:>14}{:>14}{:>14}", "parameter", "mean", "sd", "mcse")?;
    type Getter = fn(&crate::mcmc::HyperDraw) -> f64;
    let columns: [(&str, Getter); 5] = [
        ("mu", |h| h.mu),
        ("rho", |h| h.rho),
        ("tau2", |h| h.tau2),
        ("varsigma", |h| h.varsigma),
        ("lambda", |h| h.lambda),
    ];
    for (name, get) in columns {
        let x: Vec<f64> = pooled.hyper.iter().map(get).collect();
        let mcse = if x.len() >= 40 {
            format!("{:>14.6}", batch_means_se(&x, 20))
        } else {
            format!("{:>14}", "NA")
        };
        writeln!(
            stdout,
            "{name:<10}{:>14.6}{:>14.6}{mcse}",
            mean(&x),
            sample_variance(&x).sqrt()
        )?;
    }
    Ok(())
}

fn read_spec(path: &Path) -> Result<SynthSpec> {
    let text = fs::read_to_string(path)?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    let spec: SynthSpec = if is_toml {
        toml::from_str(&text).map_err(|e| Error::InvalidInput(format!("bad synth spec: {e}")))?
    } else {
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("bad synth spec: {e}")))?
    };
    spec.validate()?;
    Ok(spec)
}

/// Path of the ground-truth file written next to a synthetic vote table.
pub fn truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "votes".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.truth.json"))
}

fn synth(spec: &Path, out: &Path, seed: u64) -> Result<()> {
    let spec = read_spec(spec)?;
    let (data, truth) = generate_synthetic(&spec, &mut ChaCha8Rng::seed_from_u64(seed))?;
    write_votes(&data, out)?;
    fs::write(truth_path(out), serde_json::to_string_pretty(&truth)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["circdfm"]), 1);
        assert_eq!(run(["circdfm", "fit", "--bogus"]), 1);
        assert_eq!(run(["circdfm", "teleport"]), 1);
        assert_eq!(run(["circdfm", "--help"]), 0);
    }

    #[test]
    fn missing_inputs_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("d");
        let code = run([
            "circdfm",
            "fit",
            "--votes",
            "/nonexistent/votes.csv",
            "--config",
            "/nonexistent/c.toml",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn truth_sits_beside_votes() {
        assert_eq!(truth_path(Path::new("/a/b/v.csv")), Path::new("/a/b/v.truth.json"));
    }
}
