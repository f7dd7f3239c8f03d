use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use relaynet::capacity::{
    matrix_bound_search, thm1_optimize, thm1_phase_fading, Allocation, CapacityResult, GridSpec, MatrixSearchSpec,
};
use relaynet::channel::{load_config, ChannelConfig, CsiMode, Topology};
use relaynet::error::Error;
use relaynet::matrix::{HermitianMatrix, EXACT_PSD_TOL};
use relaynet::region::{
    beamforming_sweep, broadcast_sweep, mac_region_point, min_power, write_samples_csv, AntennaBudgets, BroadcastSweep,
    MacCorrelation, RegionSample,
};
use relaynet::repro::run_counterexample;
use relaynet::wideband::{
    aligned_covariance, check_limit_constant_phase, check_limit_phase_fading, LimitCheckReport, DEFAULT_BANDWIDTHS,
    DEFAULT_REL_TOL,
};

#[derive(Parser)]
#[command(
    name = "relaynet",
    version,
    about = "Low-power relay network bounds and rate regions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity of the single-relay network.
    Capacity {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the configuration's CSI mode.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Points per simplex edge of the closed-form optimizer.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Sweep one cut of the diamond network's rate region to CSV.
    Region {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        cut: Cut,
        /// `rho` for the MAC cut; `common` or `private_split` for the broadcast cut.
        #[arg(long)]
        sweep: String,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least common/private power for a rate triple.
    MinPower {
        #[arg(long)]
        r2: f64,
        #[arg(long)]
        r3: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        c2sq: f64,
        #[arg(long)]
        c3sq: f64,
        #[arg(long)]
        c0sq: f64,
    },
    /// Recompute the two-relay worked example and compare with the published table.
    Counterexample {
        #[arg(long)]
        csv: bool,
    },
    /// Check the wideband limit of every link in a configuration.
    VerifyLimits {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated ascending bandwidths.
        #[arg(long, value_delimiter = ',')]
        bandwidths: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Phase draws per bandwidth under phase fading.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Eigenvalues and definiteness of a Hermitian matrix read from JSON.
    MatrixCheck {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = EXACT_PSD_TOL)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Thm1,
    Phase,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cut {
    Mac,
    Broadcast,
}

enum Failure {
    Lib(Error),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn read_config(path: &Path) -> Result<ChannelConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(load_config(&text)?)
}

fn print_json(v: &Value) -> Outcome {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn capacity_json(r: &CapacityResult) -> Value {
    let allocation = match &r.allocation {
        Allocation::Closed(a) => json!({"p21": a.p21, "p31": a.p31, "pb1": a.pb1, "theta": a.theta}),
        Allocation::Matrix(m) => json!({"beta": m.beta, "trace_a": m.a.trace(), "trace_b": m.b.trace()}),
    };
    json!({
        "rate": r.rate,
        "binding_bound": r.binding_bound.name(),
        "bounds": {"relay": r.bounds.0, "combine": r.bounds.1},
        "alpha": r.alpha,
        "allocation": allocation,
    })
}

fn capacity(config: &Path, mode: Option<Mode>, grid: Option<usize>) -> Outcome {
    let cfg = read_config(config)?;
    let mode = mode.unwrap_or(match cfg.csi() {
        CsiMode::Synchronous => Mode::Thm1,
        CsiMode::PhaseFading => Mode::Phase,
    });
    match mode {
        Mode::Phase => {
            let cfg = cfg.with_csi(CsiMode::PhaseFading);
            print_json(&json!({"mode": "phase", "rate": thm1_phase_fading(&cfg)?}))
        }
        Mode::Thm1 => {
            let cfg = cfg.with_csi(CsiMode::Synchronous);
            let mut spec = GridSpec::default();
            if let Some(n) = grid {
                spec.simplex_points = n;
            }
            let closed = thm1_optimize(&cfg, &spec)?;
            let search = matrix_bound_search(&cfg, &MatrixSearchSpec::default())?;
            let mut v = capacity_json(&closed);
            v["mode"] = json!("thm1");
            v["matrix_search"] = json!({
                "rate": search.rate,
                "dual_bound": search.diagnostics.as_ref().map(|d| d.dual_bound),
                "discrepancy": (closed.rate - search.rate).abs(),
            });
            print_json(&v)
        }
    }
}

fn region(config: &Path, cut: Cut, sweep: &str, steps: usize, out: Option<&Path>) -> Outcome {
    let cfg = read_config(config)?;
    let rows: Vec<RegionSample> = match cut {
        Cut::Mac => {
            if sweep != "rho" {
                return Err(Error::validation("sweep", format!("the mac cut sweeps `rho`, got `{sweep}`")).into());
            }
            if steps == 0 {
                return Err(Error::validation("steps", "must be >= 1").into());
            }
            (0..steps)
                .map(|i| {
                    let rho = if steps == 1 { 0.0 } else { i as f64 / (steps - 1) as f64 };
                    let m = mac_region_point(&cfg, MacCorrelation::new(rho)?)?;
                    Ok(RegionSample {
                        params: vec![("rho".into(), rho)],
                        rates: vec![
                            ("r23".into(), m.r23_max),
                            ("r32".into(), m.r32_max),
                            ("r_sum".into(), m.r_max),
                        ],
                        feasible: true,
                    })
                })
                .collect::<Result<_, Error>>()?
        }
        Cut::Broadcast => match (cfg.csi(), sweep) {
            (CsiMode::PhaseFading, "common" | "private_split") => {
                let family = if sweep == "common" {
                    BroadcastSweep::Common
                } else {
                    BroadcastSweep::PrivateSplit
                };
                broadcast_sweep(&cfg, &AntennaBudgets::even_split(&cfg)?, family, steps)?
            }
            (CsiMode::Synchronous, "common") => beamforming_sweep(&cfg, steps)?,
            (csi, _) => {
                return Err(Error::validation(
                    "sweep",
                    format!("broadcast cut with {} CSI has no sweep `{sweep}`", csi.name()),
                )
                .into())
            }
        },
    };
    match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            write_samples_csv(&rows, BufWriter::new(f))?;
        }
        None => write_samples_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn counterexample(csv: bool) -> Outcome {
    let report = run_counterexample()?;
    if csv {
        report.write_csv(io::stdout().lock())?;
    } else {
        print!("{}", report.render_table());
    }
    if report.all_match_published {
        Ok(())
    } else {
        Err(Failure::Assertion(
            "worked example does not match the published values".into(),
        ))
    }
}

fn limit_json(link: &str, r: &LimitCheckReport) -> Value {
    json!({
        "link": link,
        "target": r.target,
        "bandwidths": r.bandwidths,
        "scaled_mi": r.scaled_mi,
        "std_err": r.std_err,
        "abs_err": r.abs_errors(),
        "tolerance": r.tolerance,
        "converged": r.converged,
    })
}

fn transmitter(topology: Topology, link: &str) -> &'static str {
    match (topology, link) {
        (_, "c21" | "c31") => "P1",
        (Topology::SingleRelay, _) | (_, "c42") => "P2",
        _ => "P3",
    }
}

fn verify_limits(config: &Path, bandwidths: Option<Vec<f64>>, seed: u64, samples: usize) -> Outcome {
    let cfg = read_config(config)?;
    let bws = bandwidths.unwrap_or_else(|| DEFAULT_BANDWIDTHS.to_vec());
    let n0 = cfg.noise_psd();
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for (name, c) in cfg.gains() {
        let power = cfg.raw_power(transmitter(cfg.topology(), name)).unwrap_or(0.0);
        let report = match cfg.csi() {
            CsiMode::Synchronous => {
                check_limit_constant_phase(c, &aligned_covariance(c, power), n0, &bws, DEFAULT_REL_TOL)?
            }
            CsiMode::PhaseFading => {
                let cov = HermitianMatrix::identity(c.dim()).scale(power / c.dim() as f64);
                let mags: Vec<f64> = c.entries().iter().map(|z| z.norm()).collect();
                check_limit_phase_fading(&mags, &cov, n0, &bws, samples, seed, DEFAULT_REL_TOL)?
            }
        };
        if !report.converged {
            failed.push(name.to_string());
        }
        reports.push(limit_json(name, &report));
    }
    print_json(&json!({"csi": cfg.csi().name(), "links": reports}))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "limit not reached on {}",
            failed.join(", ")
        )))
    }
}

fn parse_entry(v: &Value) -> Result<Complex64, Error> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|re| Complex64::new(re, 0.0))
            .ok_or_else(|| Error::Parse(format!("bad number {n}"))),
        Value::Array(pair) if pair.len() == 2 => match (pair[0].as_f64(), pair[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(Error::Parse(format!("bad [re, im] pair {v}"))),
        },
        _ => Err(Error::Parse(format!(
            "matrix entry must be a number or [re, im], got {v}"
        ))),
    }
}

fn parse_matrix(text: &str) -> Result<HermitianMatrix, Error> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix must be a JSON array of rows".into()))?;
    let n = rows.len();
    let mut entries = Vec::with_capacity(n * n);
    for row in rows {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse("each row must be an array".into()))?;
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: row.len(),
            });
        }
        for e in row {
            entries.push(parse_entry(e)?);
        }
    }
    HermitianMatrix::new(n, entries)
}

fn matrix_check(path: &Path, tol: f64) -> Outcome {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let m = parse_matrix(&text)?;
    let eigs = m.eigenvalues();
    let min = eigs.first().copied().unwrap_or(0.0);
    print_json(&json!({
        "dim": m.dim(),
        "eigenvalues": eigs,
        "min_eigenvalue": min,
        "tolerance": tol,
        "psd": min >= -tol,
        "positive_definite": min > tol,
    }))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Capacity { config, mode, grid } => capacity(&config, mode, grid),
        Command::Region {
            config,
            cut,
            sweep,
            steps,
            out,
        } => region(&config, cut, &sweep, steps, out.as_deref()),
        Command::MinPower {
            r2,
            r3,
            r,
            c2sq,
            c3sq,
            c0sq,
        } => {
            let m = min_power(r2, r3, r, c2sq, c3sq, c0sq)?;
            print_json(&json!({
                "p_total": m.p_total,
                "r0": m.r0,
                "r2_private": m.r2_private,
                "r3_private": m.r3_private,
            }))
        }
        Command::Counterexample { csv } => counterexample(csv),
        Command::VerifyLimits {
            config,
            bandwidths,
            seed,
            samples,
        } => verify_limits(&config, bandwidths, seed, samples),
        Command::MatrixCheck { matrix, tol } => matrix_check(&matrix, tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let reason = rendered.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {reason}");
            eprint!("{rendered}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {}: {e}", e.kind());
            ExitCode::from(1)
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("error: assertion: {msg}");
            ExitCode::from(2)
        }
    }
}
