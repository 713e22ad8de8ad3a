//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for configuration, input and usage errors,
//! 2 when a numerical evaluation produced NaN.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dist::{FunctionalKind, GaussianSpec, Point};
use crate::error::{Error, Result};
use crate::experiments::{
    check_disintegration, read_forecast, run_evaluation, run_simulation_study, write_file,
    ExperimentConfig, ForecastFile,
};
use crate::levelsets::{contour_grid, GridAxis};
use crate::rng::stream_seed;
use crate::scores::{Candidate, Profile};
use crate::weight::WeightMeasure;

/// Environment variable consulted when `--out-dir` is not given.
pub const OUT_DIR_ENV: &str = "LEVELSCORE_OUT";
pub const DEFAULT_OUT_DIR: &str = "levelscore-out";

#[derive(Debug, Parser)]
#[command(name = "levelscore", version, about = "Level-set and L² scores for multivariate forecasts")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the configuration's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: $LEVELSCORE_OUT, then ./levelscore-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulation study: tables of mean scores per candidate.
    Simstudy {
        #[arg(long)]
        config: PathBuf,
    },
    /// Scores per-period forecast files against realizations.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Directory with one subdirectory of forecast files per method.
        #[arg(long)]
        forecasts: PathBuf,
        /// Sample-pool file with one realization per period.
        #[arg(long)]
        realizations: PathBuf,
    },
    /// Ψ of one configured candidate on a bivariate grid.
    Contours {
        #[arg(long)]
        config: PathBuf,
        /// density, cdf or lpm.
        #[arg(long)]
        functional: String,
        /// LPM order.
        #[arg(long)]
        k: Option<u32>,
        /// Candidate label from the configuration.
        #[arg(long)]
        candidate: String,
        /// `xmin:xmax:nx,ymin:ymax:ny`.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Output file (default: contours_<label>_<functional>.csv in the output directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Disintegration and reduction identity checks.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// One score for one forecast file and one realization.
    Score {
        /// Pool or Gaussian forecast file.
        #[arg(long)]
        candidate: PathBuf,
        /// Realization as comma-separated reals.
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        /// dqs, mcrps, lpms, density_level, cdf_level or lpm_level.
        #[arg(long)]
        score: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        /// Level for the level-set scores.
        #[arg(long)]
        alpha: Option<f64>,
        /// Weight mean (default: origin).
        #[arg(long, allow_hyphen_values = true)]
        weight_mean: Option<String>,
        /// Weight covariance, row-major (default: identity).
        #[arg(long, allow_hyphen_values = true)]
        weight_cov: Option<String>,
        #[arg(long, default_value_t = 20_000)]
        weight_pool_size: usize,
        #[arg(long)]
        weight_seed: Option<u64>,
        /// Draws sampled from a Gaussian forecast file when a pool is needed.
        #[arg(long, default_value_t = 20_000)]
        pool_size: usize,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<Vec<String>> {
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(Error::config("--threads", "must be positive"));
    }
    let seed = cli.seed;
    let command = cli.command;
    let job = move || execute(command, seed, &out_dir);
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("--threads", e.to_string()))?
            .install(job),
        None => job(),
    }
}

fn require_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::ingest(path, "does not exist"))
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    require_exists(path)?;
    let mut cfg = ExperimentConfig::read_file(path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn summaries(written: Vec<(PathBuf, String)>) -> Vec<String> {
    written
        .into_iter()
        .map(|(p, s)| format!("wrote {}: {s}", p.display()))
        .collect()
}

fn parse_reals(flag: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(flag, format!("`{v}` is not a number")))
        })
        .collect()
}

fn execute(command: Command, seed: Option<u64>, out_dir: &Path) -> Result<Vec<String>> {
    match command {
        Command::Simstudy { config } => {
            let cfg = load_config(&config, seed)?;
            let out = run_simulation_study(&cfg)?;
            Ok(summaries(out.write(out_dir)?))
        }
        Command::Evaluate {
            config,
            forecasts,
            realizations,
        } => {
            require_exists(&forecasts)?;
            require_exists(&realizations)?;
            let cfg = load_config(&config, seed)?;
            let out = run_evaluation(&cfg, &forecasts, &realizations)?;
            Ok(summaries(out.write(out_dir)?))
        }
        Command::Contours {
            config,
            functional,
            k,
            candidate,
            grid,
            out,
        } => {
            let cfg = load_config(&config, seed)?;
            let mut f: FunctionalKind = functional
                .parse()
                .map_err(|e: Error| Error::config("--functional", e.to_string()))?;
            if let (FunctionalKind::Lpm(_), Some(k)) = (f, k) {
                f = FunctionalKind::Lpm(k);
            }
            let axes = GridAxis::parse_grid(&grid)
                .map_err(|e| Error::config("--grid", e.to_string()))?;
            let candidates = cfg.build_candidates(f != FunctionalKind::Density)?;
            let c = candidates
                .iter()
                .find(|c| c.label() == candidate)
                .ok_or_else(|| Error::config("--candidate", format!("no candidate labelled `{candidate}`")))?;
            let g = contour_grid(f, c, &axes)?;
            let summary = format!("{} grid {}x{}", f, g.axes[0].len(), g.axes[1].len());
            let written = match out {
                Some(path) => {
                    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                    let name = path.file_name().ok_or_else(|| Error::config("--out", "not a file path"))?;
                    write_file(dir, &name.to_string_lossy(), &g.to_csv(), summary)?
                }
                None => {
                    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
                    write_file(out_dir, &format!("contours_{candidate}_{f}.csv"), &g.to_csv(), summary)?
                }
            };
            Ok(summaries(vec![written]))
        }
        Command::Check { config } => {
            let cfg = load_config(&config, seed)?;
            let report = check_disintegration(&cfg)?;
            std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
            let status = if report.passed() { "pass" } else { "fail" };
            let written = write_file(
                out_dir,
                "report_disintegration.txt",
                &report.to_text(),
                format!("{} checks, status {status}", report.lines.len()),
            )?;
            Ok(summaries(vec![written]))
        }
        Command::Score {
            candidate,
            y,
            score,
            k,
            alpha,
            weight_mean,
            weight_cov,
            weight_pool_size,
            weight_seed,
            pool_size,
        } => {
            require_exists(&candidate)?;
            let y = Point::new(parse_reals("--y", &y)?)
                .map_err(|e| Error::config("--y", e.to_string()))?;
            let d = y.dim();
            let (functional, level) = match score.as_str() {
                "dqs" => (FunctionalKind::Density, false),
                "mcrps" => (FunctionalKind::Cdf, false),
                "lpms" => (FunctionalKind::Lpm(k), false),
                "density_level" => (FunctionalKind::Density, true),
                "cdf_level" => (FunctionalKind::Cdf, true),
                "lpm_level" => (FunctionalKind::Lpm(k), true),
                other => return Err(Error::config("--score", format!("unknown score `{other}`"))),
            };
            let mean = match weight_mean {
                Some(m) => parse_reals("--weight-mean", &m)?,
                None => vec![0.0; d],
            };
            let cov = match weight_cov {
                Some(c) => parse_reals("--weight-cov", &c)?,
                None => GaussianSpec::standard(d)?.covariance().to_vec(),
            };
            let spec = GaussianSpec::new(mean, cov).map_err(|e| Error::config("--weight-cov", e.to_string()))?;
            let master = seed.unwrap_or(0);
            let w = WeightMeasure::sample(
                spec,
                weight_pool_size,
                weight_seed.unwrap_or_else(|| stream_seed(master, crate::rng::streams::WEIGHT)),
            )?;
            let c = match read_forecast(&candidate)? {
                ForecastFile::Pool(p) => Candidate::from_pool("candidate", p),
                ForecastFile::Gaussian(g) if functional != FunctionalKind::Density => {
                    Candidate::gaussian("candidate", g, pool_size, stream_seed(master, crate::rng::streams::candidate(0)))?
                }
                ForecastFile::Gaussian(g) => Candidate::from_density("candidate", g),
            };
            let profile = Profile::new(functional, &c, &w)?;
            let v = if level {
                let a = alpha.ok_or_else(|| Error::config("--alpha", "required for level-set scores"))?;
                profile.level(a, &y)?
            } else {
                profile.l2(&y)?
            };
            Ok(vec![format!(
                "{score} value={} std_error={} n_weight_draws={}",
                crate::csv::float(v.value),
                crate::csv::float(v.std_error),
                v.n_weight_draws
            )])
        }
    }
}
