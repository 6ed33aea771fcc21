//! `outstat` — evaluate closed-form MIMO block-fading output densities,
//! validate them against Monte-Carlo oracles, and tabulate eigenvalue
//! densities and mutual-information curves as CSV.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 numerical
//! failure.

mod config;
mod csvio;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use csvio::{fmt, CsvWriter};
use outstat_core::eigdist::EnsembleParams;
use outstat_core::infometrics::{self, MiConfig};
use outstat_core::linalg::Spectrum;
use outstat_core::outpdf::{bstm_logpdf, gaussian_input_logpdf, ustm_logpdf, EvalOptions};
use outstat_core::sampling::{self, InputScheme, RngStream};

#[derive(Parser)]
#[command(name = "outstat", version, about = "Output statistics of MIMO block-fading channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// JSON configuration file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel model: rayleigh | rician | lms | il-rayleigh | il-rician
    /// (eig-density also accepts ensemble names, see --help there)
    #[arg(long)]
    model: Option<String>,
    /// Input scheme: gaussian | ustm | bstm
    #[arg(long)]
    scheme: Option<String>,
    /// Receive antennas
    #[arg(short = 'm')]
    m: Option<usize>,
    /// Transmit antennas
    #[arg(short = 'n')]
    n: Option<usize>,
    /// Coherence length
    #[arg(short = 'b')]
    b: Option<usize>,
    /// Single SNR point in dB (sets start = stop)
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    snr_start: Option<f64>,
    #[arg(long)]
    snr_stop: Option<f64>,
    #[arg(long)]
    snr_step: Option<f64>,
    /// Rician factor
    #[arg(long)]
    kappa: Option<f64>,
    /// Scalar LOS Gramian level (H Hbar^H = h I)
    #[arg(long)]
    h: Option<f64>,
    /// LMS shape parameter
    #[arg(long)]
    alpha: Option<f64>,
    /// Scale parameter (LMS / interference covariance ratio)
    #[arg(long)]
    omega: Option<f64>,
    /// Number of interferers L
    #[arg(long)]
    interferers: Option<usize>,
    /// Interference-limited Rician covariance level
    #[arg(long)]
    theta: Option<f64>,
    /// Monte-Carlo samples
    #[arg(long)]
    mc_samples: Option<usize>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate log2 p(Y) for a Y from file or sampled internally
    EvalPdf {
        #[command(flatten)]
        common: CommonOpts,
        /// CSV of Y entries as re,im column pairs (m rows, 2b columns)
        #[arg(long)]
        y_file: Option<PathBuf>,
    },
    /// Run a named validation suite
    Validate {
        #[command(flatten)]
        common: CommonOpts,
        /// normalization | eig-histograms | reductions | bstm-consistency | detint-identity
        #[arg(long)]
        suite: String,
    },
    /// Mutual-information curve over the SNR grid
    MiCurve {
        #[command(flatten)]
        common: CommonOpts,
        /// Also tabulate the perfect-CSI baseline columns
        #[arg(long)]
        baseline: bool,
    },
    /// Tabulate an eigenvalue density on a grid
    EigDensity {
        #[command(flatten)]
        common: CommonOpts,
        /// Grid points per dimension
        #[arg(long, default_value_t = 200)]
        grid: usize,
        /// Upper grid edge for unbounded supports
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        /// Non-centrality level for the non-central ensembles
        #[arg(long)]
        mu: Option<f64>,
    },
}

fn resolve_config(common: &CommonOpts) -> Result<RunConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {path:?}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("bad config JSON: {e}"))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &common.model {
        cfg.model = v.clone();
    }
    if let Some(v) = &common.scheme {
        cfg.scheme = v.clone();
    }
    if let Some(v) = common.m {
        cfg.m = v;
    }
    if let Some(v) = common.n {
        cfg.n = v;
    }
    if let Some(v) = common.b {
        cfg.b = v;
    }
    if let Some(v) = common.snr_db {
        cfg.snr_start_db = v;
        cfg.snr_stop_db = v;
    }
    if let Some(v) = common.snr_start {
        cfg.snr_start_db = v;
    }
    if let Some(v) = common.snr_stop {
        cfg.snr_stop_db = v;
    }
    if let Some(v) = common.snr_step {
        cfg.snr_step_db = v;
    }
    if let Some(v) = common.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = common.h {
        cfg.h = v;
    }
    if let Some(v) = common.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = common.omega {
        cfg.omega = v;
    }
    if let Some(v) = common.interferers {
        cfg.interferers = v;
    }
    if let Some(v) = common.theta {
        cfg.theta = v;
    }
    if let Some(v) = common.mc_samples {
        cfg.mc_samples = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    Ok(cfg)
}

fn init_threads() {
    if let Ok(v) = std::env::var("OUTSTAT_THREADS") {
        if let Ok(k) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's help/version on stdout with success, usage errors on 2
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::EvalPdf { common, y_file } => cmd_eval_pdf(common, y_file.as_deref()),
        Command::Validate { common, suite } => cmd_validate(common, suite),
        Command::MiCurve { common, baseline } => cmd_mi_curve(common, *baseline),
        Command::EigDensity { common, grid, x_max, mu } => {
            cmd_eig_density(common, *grid, *x_max, *mu)
        }
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(3)
        }
        Err(CliError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Usage(String),
    Numeric(outstat_core::Error),
    Io(std::io::Error),
}

impl From<outstat_core::Error> for CliError {
    fn from(e: outstat_core::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn cmd_eval_pdf(common: &CommonOpts, y_file: Option<&std::path::Path>) -> CmdResult {
    let cfg = resolve_config(common).map_err(CliError::Usage)?;
    let scheme = cfg.input_scheme().map_err(CliError::Usage)?;
    let model = cfg.channel_model().map_err(CliError::Usage)?;
    let dims = cfg.dims_at_db(cfg.snr_start_db)?;
    let y = match y_file {
        Some(path) => csvio::read_complex_csv(path, cfg.m, cfg.b).map_err(CliError::Usage)?,
        None => {
            let mut rng = RngStream::new(cfg.seed, 0).rng();
            sampling::sample_output(&mut rng, &model, scheme, &dims)?
        }
    };
    let opts = EvalOptions { seed: cfg.seed, mc_samples: cfg.mc_samples, ..Default::default() };
    let res = match scheme {
        InputScheme::IidGaussian => gaussian_input_logpdf(&model, &dims, &y, &opts)?,
        InputScheme::Ustm => ustm_logpdf(&dims, &y)?,
        InputScheme::Bstm => bstm_logpdf(&dims, &y, &opts)?,
    };
    println!(
        "log2_pdf={:.12e} quad_error={:.3e} mc_std_error={:.3e} min_gap={:.3e}",
        res.log2(),
        res.diagnostics.quad_error,
        res.diagnostics.mc_std_error,
        res.diagnostics.min_gap
    );
    let mut w = CsvWriter::new(&cfg.echo_json(), &cfg.hash());
    w.header(&["snr_db", "log2_pdf", "quad_error", "mc_std_error", "min_gap", "config_hash"]);
    w.row(&[
        fmt(cfg.snr_start_db),
        fmt(res.log2()),
        fmt(res.diagnostics.quad_error),
        fmt(res.diagnostics.mc_std_error),
        fmt(res.diagnostics.min_gap),
        cfg.hash(),
    ]);
    if common.out.is_some() {
        w.finish(common.out.as_deref())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(common: &CommonOpts, suite: &str) -> CmdResult {
    let cfg = resolve_config(common).map_err(CliError::Usage)?;
    let report = match suite {
        "detint-identity" => suites::detint_identity(cfg.seed)?,
        "reductions" => suites::reductions(cfg.seed)?,
        "normalization" => {
            let model = cfg.channel_model().map_err(CliError::Usage)?;
            let scheme = cfg.input_scheme().map_err(CliError::Usage)?;
            let dims = cfg.dims_at_db(cfg.snr_start_db)?;
            suites::normalization(&model, scheme, &dims, cfg.mc_samples, cfg.seed)?
        }
        "eig-histograms" => suites::eig_histograms(cfg.mc_samples, cfg.seed)?,
        "bstm-consistency" => suites::bstm_consistency(cfg.mc_samples, cfg.seed)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown suite '{other}' (expected normalization, eig-histograms, reductions, \
                 bstm-consistency, detint-identity)"
            )))
        }
    };
    println!("{} checks, {} failures", report.checks, report.failures);
    Ok(if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_mi_curve(common: &CommonOpts, baseline: bool) -> CmdResult {
    let cfg = resolve_config(common).map_err(CliError::Usage)?;
    let scheme = cfg.input_scheme().map_err(CliError::Usage)?;
    let model = cfg.channel_model().map_err(CliError::Usage)?;
    let mi_config = match scheme {
        InputScheme::IidGaussian => MiConfig::Gaussian(model),
        InputScheme::Ustm => MiConfig::Ustm,
        InputScheme::Bstm => MiConfig::Bstm,
    };
    let dims = cfg.dims_at_db(cfg.snr_start_db)?;
    let grid = cfg.snr_grid();
    let opts = EvalOptions { seed: cfg.seed, ..Default::default() };
    let points = infometrics::mutual_information(
        &mi_config,
        &dims,
        &grid,
        cfg.mc_samples,
        RngStream::new(cfg.seed, 0),
        &opts,
    )?;
    let mut w = CsvWriter::new(&cfg.echo_json(), &cfg.hash());
    let mut cols = vec!["snr_db", "mi_bits", "stderr", "h_y", "h_y_given_x", "config_hash"];
    if baseline {
        cols.push("csi_bits");
        cols.push("csi_stderr");
    }
    w.header(&cols);
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![
            fmt(p.snr_db),
            fmt(p.mi_bits),
            fmt(p.stderr),
            fmt(p.h_y),
            fmt(p.h_y_given_x),
            cfg.hash(),
        ];
        if baseline {
            let d = cfg.dims_at_db(grid[i])?;
            let (csi, se) = infometrics::perfect_csi_mi(
                &model,
                &d,
                cfg.mc_samples,
                RngStream::new(cfg.seed ^ 0x515, (i as u64) << 32),
            )?;
            row.push(fmt(csi));
            row.push(fmt(se));
        }
        w.row(&row);
    }
    w.finish(common.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn ensemble_from(cfg: &RunConfig, mu: Option<f64>) -> Result<EnsembleParams, String> {
    let p = cfg.interferers * cfg.n;
    Ok(match cfg.model.as_str() {
        "wishart" => EnsembleParams::Wishart { m: cfg.m, n: cfg.n },
        "noncentral-wishart" => EnsembleParams::NoncentralWishartScalar {
            m: cfg.m,
            n: cfg.n,
            mu: mu.unwrap_or(1.0),
        },
        "central-f" => EnsembleParams::CentralF { m: cfg.m, n: cfg.n, p, omega: cfg.omega },
        "noncentral-f" => EnsembleParams::NoncentralF {
            m: cfg.m,
            n: cfg.n,
            p,
            mu: mu.unwrap_or(1.0),
            theta: cfg.theta,
            omega: cfg.omega,
        },
        "lms" => EnsembleParams::Lms { m: cfg.m, n: cfg.n, alpha: cfg.alpha, omega: cfg.omega },
        "rician" => EnsembleParams::Rician { m: cfg.m, n: cfg.n, kappa: cfg.kappa, h: cfg.h },
        "beta" | "beta-single" => {
            if cfg.b >= cfg.m + cfg.n || cfg.b <= cfg.n {
                return Err(format!(
                    "beta ensembles take p = b - n, q = m + n - b and need n < b < m + n \
                     (got m={}, n={}, b={})",
                    cfg.m, cfg.n, cfg.b
                ));
            }
            EnsembleParams::MatrixBeta { n: cfg.n, p: cfg.b - cfg.n, q: cfg.m + cfg.n - cfg.b }
        }
        other => return Err(format!("unknown ensemble '{other}'")),
    })
}

fn cmd_eig_density(common: &CommonOpts, grid: usize, x_max: f64, mu: Option<f64>) -> CmdResult {
    let cfg = resolve_config(common).map_err(CliError::Usage)?;
    if grid < 2 {
        return Err(CliError::Usage("grid must have at least 2 points".into()));
    }
    let params = ensemble_from(&cfg, mu).map_err(CliError::Usage)?;
    let single = cfg.model == "beta-single";
    let bounded = matches!(params, EnsembleParams::MatrixBeta { .. });
    let hi = if bounded { 1.0 } else { x_max };
    let mut w = CsvWriter::new(&cfg.echo_json(), &cfg.hash());
    let k = params.spectrum_len();
    if single || k == 1 {
        w.header(&["lambda", "density"]);
        for i in 0..grid {
            let x = hi * (i as f64 + 0.5) / grid as f64;
            let v = if single {
                let EnsembleParams::MatrixBeta { n, p, q } = params else { unreachable!() };
                outstat_core::eigdist::beta_single_eig_pdf(n, p, q, x)?
            } else {
                let s = Spectrum::new(vec![x])?;
                params.logpdf(&s)?.to_f64()
            };
            w.row(&[fmt(x), fmt(v)]);
        }
    } else if k == 2 {
        w.header(&["lambda1", "lambda2", "density"]);
        for i in 0..grid {
            let x1 = hi * (i as f64 + 0.5) / grid as f64;
            for j in 0..grid {
                let x2 = hi * (j as f64 + 0.5) / grid as f64;
                // ordered law: zero above the diagonal
                let v = if x1 > x2 {
                    let s = Spectrum::new(vec![x1, x2])?;
                    match params.logpdf(&s) {
                        Ok(v) => v.to_f64(),
                        Err(outstat_core::Error::DegenerateSpectrum { .. }) => 0.0,
                        Err(e) => return Err(e.into()),
                    }
                } else {
                    0.0
                };
                w.row(&[fmt(x1), fmt(x2), fmt(v)]);
            }
        }
    } else {
        return Err(CliError::Usage(format!(
            "eigenvalue-density tabulation supports k <= 2 eigenvalues, got k = {k}"
        )));
    }
    w.finish(common.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
