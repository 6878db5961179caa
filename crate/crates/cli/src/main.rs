//! Command-line front end: density grids, sampling, fitting, hypothesis
//! tests, and the simulation harness.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use smallsphere::fit::FitOptions;
use smallsphere::lrt::{lr_test, Hypothesis, ModelKind};
use smallsphere::sample::{sample_model, GibbsConfig};
use smallsphere::sim::{
    self, ModelSpec, PowerConfig, Scenario, TableConfig,
};
use smallsphere::{Error, RngStream, UnitVec};

#[derive(Parser)]
#[command(
    name = "smallsphere",
    about = "Small-sphere distributions on (S^{p-1})^K: density evaluation, sampling, fitting, testing, simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model family: vmf | bm | s1 | s2 | ims1 | ims2 | ms2
    #[arg(long)]
    model: String,
    /// Ambient dimension p (observations live on S^{p-1})
    #[arg(long, default_value_t = 3)]
    p: usize,
    /// vMF concentration
    #[arg(long)]
    kappa: Option<f64>,
    /// Vertical concentration(s), comma-separated per marginal
    #[arg(long, value_delimiter = ',')]
    kappa0: Option<Vec<f64>>,
    /// Horizontal/mode concentration(s), comma-separated per marginal
    #[arg(long, value_delimiter = ',')]
    kappa1: Option<Vec<f64>>,
    /// Latitude cosine(s) nu, comma-separated per marginal
    #[arg(long, value_delimiter = ',')]
    nu: Option<Vec<f64>>,
    /// MS2 coupling, upper-triangle entries lambda_{kl} (k < l), comma-separated
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Axis mu0 as comma-separated coordinates (default: north pole)
    #[arg(long, value_delimiter = ',')]
    mu0: Option<Vec<f64>>,
    /// Mode directions mu1, semicolon-separated vectors of comma-separated coords
    #[arg(long, value_parser = parse_vectors)]
    mu1: Option<Vectors>,
}

#[derive(Clone, Debug)]
struct Vectors(Vec<Vec<f64>>);

fn parse_vectors(s: &str) -> Result<Vectors, String> {
    s.split(';')
        .map(|v| {
            v.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Vectors)
}

impl ModelArgs {
    fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            model: self.model.clone(),
            p: self.p,
            kappa: self.kappa,
            kappa0: self.kappa0.clone(),
            kappa1: self.kappa1.clone(),
            nu: self.nu.clone(),
            lambda: self.lambda.clone(),
            mu0: self.mu0.clone(),
            mu1: self.mu1.as_ref().map(|v| v.0.clone()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a log-density grid over an S^2 latitude/longitude mesh (CSV)
    Density {
        #[command(flatten)]
        model: ModelArgs,
        /// Mesh resolution (latitude cells; longitude uses twice as many)
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Output CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a pseudo-random sample from a model (CSV dataset)
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gibbs burn-in (S1/iMS1/MS2 horizontal block)
        #[arg(long, default_value_t = 500)]
        burn_in: usize,
        /// Gibbs thinning
        #[arg(long, default_value_t = 5)]
        thin: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model to a dataset (JSON result)
    Fit {
        /// Model to fit: vmf | bm | s1 | s2 | ims1 | ims2 | ms2
        #[arg(long)]
        model: String,
        /// Dataset CSV (as produced by `sample`)
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a likelihood-ratio hypothesis test (JSON result)
    Test {
        /// Alternative model family: s1 | s2 | ims1 | ims2 | ms2
        #[arg(long)]
        model: String,
        /// Hypothesis: association | axis | great-sphere | vmf | bingham-mardia
        #[arg(long)]
        hypothesis: String,
        /// Null axis for the axis test, comma-separated coordinates
        #[arg(long, value_delimiter = ',')]
        mu0_star: Option<Vec<f64>>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario config or one of the built-in studies (CSV report)
    Simulate {
        /// Scenario JSON config
        #[arg(long, conflicts_with_all = ["table", "power"])]
        scenario: Option<PathBuf>,
        /// Built-in table reproduction: 2, 3 or 4
        #[arg(long)]
        table: Option<u8>,
        /// Built-in isotropy power study
        #[arg(long, default_value_t = false)]
        power: bool,
        /// Replicates override
        #[arg(long)]
        reps: Option<usize>,
        /// Sample size override
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 20240)]
        seed: u64,
        /// Significance level for the power study
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, content.as_bytes())?,
        None => print!("{content}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Density { model, grid, out } => {
            let params = model.to_spec().build()?;
            let rows = sim::density_grid(&params, grid)?;
            let mut csv = String::from("colatitude,longitude,logDensity\n");
            for (theta, phi, logf) in rows {
                csv.push_str(&format!("{theta:.16e},{phi:.16e},{logf:.16e}\n"));
            }
            emit(&out, &csv)?;
        }
        Command::Sample { model, n, seed, burn_in, thin, out } => {
            let params = model.to_spec().build()?;
            let cfg = GibbsConfig::new(burn_in, thin)?;
            let mut rng = RngStream::new(seed);
            let sample = sample_model(&mut rng, &params, n, &cfg)?;
            sim::write_csv(&out, &sample)?;
        }
        Command::Fit { model, data, out } => {
            let sample = sim::read_csv(&data)?;
            let fit = sim::fit_by_name(&model, &sample, &FitOptions::default())?;
            let json = serde_json::to_string_pretty(&fit.to_report())
                .map_err(|e| Error::Data(e.to_string()))?;
            emit(&out, &format!("{json}\n"))?;
        }
        Command::Test { model, hypothesis, mu0_star, data, out } => {
            let sample = sim::read_csv(&data)?;
            let alt = ModelKind::parse(&model)?;
            let hyp = match hypothesis.to_ascii_lowercase().as_str() {
                "association" => Hypothesis::Association,
                "axis" => {
                    let coords = mu0_star.ok_or_else(|| {
                        Error::InvalidParameter("the axis test needs --mu0-star".into())
                    })?;
                    Hypothesis::Axis(UnitVec::from_slice(&coords)?)
                }
                "great-sphere" | "greatsphere" => Hypothesis::GreatSphere,
                "vmf" | "von-mises-fisher" => Hypothesis::VonMisesFisher,
                "bingham-mardia" | "bm" => Hypothesis::BinghamMardia,
                other => {
                    return Err(Error::InvalidParameter(format!("unknown hypothesis '{other}'")))
                }
            };
            let result = lr_test(&hyp, alt, &sample, &FitOptions::default())?;
            let json = serde_json::to_string_pretty(&result.to_report())
                .map_err(|e| Error::Data(e.to_string()))?;
            emit(&out, &format!("{json}\n"))?;
        }
        Command::Simulate { scenario, table, power, reps, n, seed, alpha, out } => {
            if let Some(path) = scenario {
                let text = std::fs::read_to_string(&path)?;
                let mut sc: Scenario =
                    serde_json::from_str(&text).map_err(|e| Error::Data(e.to_string()))?;
                if let Some(r) = reps {
                    sc.replicates = r;
                }
                if let Some(n) = n {
                    sc.n = n;
                }
                let rep = sim::run_scenario(&sc)?;
                let mut csv = format!(
                    "# scenario={} seed={} replicates={} n={}\nestimator,mean,sd\n",
                    rep.name, rep.seed, rep.replicates, rep.n
                );
                for (est, ms) in &rep.errors {
                    csv.push_str(&format!("{est},{:.4},{:.4}\n", ms.mean, ms.sd));
                }
                emit(&out, &csv)?;
            } else if let Some(which) = table {
                let cfg = TableConfig {
                    n: n.unwrap_or(50),
                    replicates: reps.unwrap_or(100),
                    seed,
                };
                let report = match which {
                    2 => sim::run_table2(&cfg)?,
                    3 => sim::run_table3(&cfg, &[0, 1, 2, 3, 4, 5])?,
                    4 => sim::run_table4(&cfg, &[50, 200], &[2, 5])?,
                    other => {
                        return Err(Error::InvalidParameter(format!(
                            "no built-in table {other}; use 2, 3 or 4"
                        )))
                    }
                };
                emit(&out, &report.to_csv())?;
            } else if power {
                let cfg = PowerConfig {
                    n: n.unwrap_or(50),
                    replicates: reps.unwrap_or(200),
                    alpha,
                    seed,
                };
                let report = sim::run_power_study(&cfg)?;
                let mut csv = format!(
                    "# power study | alpha={} seed={} replicates={} n={} criticalW={:.3} \
                     chiSquareSize={:.4}\nscenario,rejectionRate\n",
                    report.alpha,
                    report.seed,
                    report.replicates,
                    report.n,
                    report.critical_w,
                    report.chi_square_size
                );
                csv.push_str(&format!("null vMF(10),{:.4}\n", report.size));
                for ((k0, k1), p) in &report.powers {
                    csv.push_str(&format!("S2({k0},{k1}),{p:.4}\n"));
                }
                emit(&out, &csv)?;
            } else {
                return Err(Error::InvalidParameter(
                    "simulate needs --scenario, --table or --power".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits with code 2 on usage errors
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::InvalidParameter(msg)) | Err(Error::Unsupported(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
