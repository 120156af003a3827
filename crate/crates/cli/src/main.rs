//! Command-line driver: isolate clusters, sample region contours, check
//! regularity, run the normalization stages, certify upper bounds, and
//! re-verify certificates.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 sound "cannot certify".

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zcluster::ball::BallC;
use zcluster::bounds::Strategy;
use zcluster::certify::{self, PipelineOptions};
use zcluster::error::Error;
use zcluster::hilbert;
use zcluster::inflation::{self, InflationMap};
use zcluster::io;
use zcluster::irregular;
use zcluster::preinflate;
use zcluster::region::{self, RegionPredicate};
use zcluster::spectral;

#[derive(Parser)]
#[command(
    name = "zcluster",
    about = "Certified isolation and counting of zero clusters of polynomial systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonInputs {
    /// System file (JSON: {"n": ..., "polys": [[[exps], re, im], ...]})
    #[arg(long)]
    system: PathBuf,
    /// Point file (JSON: {"z": [[re, im], ...]}); defaults to the origin
    #[arg(long)]
    point: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify isolating regions for the cluster near the given point.
    Isolate {
        #[command(flatten)]
        inputs: CommonInputs,
        /// Order of the singularity; searched in 2..=d-max when omitted
        #[arg(long)]
        d: Option<u32>,
        #[arg(long, default_value_t = 6)]
        d_max: u32,
        /// Relative threshold for small singular values
        #[arg(long, default_value_t = 1e-4)]
        tau: f64,
        /// Lower-bound strategy: diag, subdiv, or auto
        #[arg(long, default_value = "auto")]
        strategy: String,
        /// Working precision in bits (this build supports 53)
        #[arg(long, default_value_t = 53)]
        precision: u32,
        /// Output certificate file
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the region boundary of a certificate into CSV polylines.
    Region {
        /// Certificate file produced by `isolate`
        #[arg(long)]
        certificate: PathBuf,
        /// Radius inside the certified window [eps_minus, eps_plus]
        #[arg(long)]
        epsilon: f64,
        /// Plot window as x0,x1,y0,y1
        #[arg(long, default_value = "-1.5,1.5,-1.5,1.5", allow_hyphen_values = true)]
        window: String,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report the local Hilbert function and test a (kappa, d) regularity claim.
    CheckRegular {
        #[command(flatten)]
        inputs: CommonInputs,
        #[arg(long)]
        kappa: usize,
        #[arg(long)]
        d: u32,
    },
    /// Run the normalization stages and write the transformed system and log.
    Preinflate {
        #[command(flatten)]
        inputs: CommonInputs,
        #[arg(long)]
        kappa: Option<usize>,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        ell: u32,
        #[arg(long, default_value_t = 1e-4)]
        tau: f64,
        /// Output file for the transformed system
        #[arg(long)]
        out: PathBuf,
        /// Optional output file for the replayable transform log
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
    /// Apply an inflation map (explicit weights or a standard kappa/d pair).
    Inflate {
        #[command(flatten)]
        inputs: CommonInputs,
        /// Comma-separated per-variable weights, e.g. 1,3
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        kappa: Option<usize>,
        #[arg(long)]
        d: Option<u32>,
        /// Search weights up to this bound when none are given
        #[arg(long, default_value_t = 8)]
        w_max: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Certify a multiplicity upper bound through a supplied matrix transform.
    UpperBound {
        #[command(flatten)]
        inputs: CommonInputs,
        /// Matrix transform file
        #[arg(long)]
        transform: PathBuf,
        /// Optional perturbed system; bounds are computed on its transform
        #[arg(long)]
        perturbed: Option<PathBuf>,
        #[arg(long, default_value = "auto")]
        strategy: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify a certificate against the original system from scratch.
    Verify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        certificate: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

/// 1 for input/usage problems, 2 for sound certification failures.
fn classify(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) | Error::DimensionMismatch { .. } => 1,
        _ => 2,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(std::fs::read_to_string(path)?)
}

fn load_inputs(inputs: &CommonInputs) -> Result<(zcluster::PolySystem, Vec<BallC>), Error> {
    let system = io::system_from_json(&read(&inputs.system)?)?;
    let z = match &inputs.point {
        Some(p) => io::point_from_json(&read(p)?)?,
        None => vec![BallC::ZERO; system.n],
    };
    if z.len() != system.n {
        return Err(Error::DimensionMismatch { expected: system.n, got: z.len() });
    }
    Ok((system, z))
}

fn parse_strategy(s: &str) -> Result<Strategy, Error> {
    match s {
        "diag" => Ok(Strategy::DominantDiagonal),
        "subdiv" => Ok(Strategy::Subdivision),
        "auto" => Ok(Strategy::Auto),
        other => Err(Error::Parse(format!(
            "unknown strategy '{other}' (expected diag, subdiv, or auto)"
        ))),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Isolate { inputs, d, d_max, tau, strategy, precision, out } => {
            if precision != 53 {
                return Err(Error::Parse(format!(
                    "this build computes at 53-bit precision; got --precision {precision}"
                )));
            }
            let (system, z) = load_inputs(&inputs)?;
            let opts = PipelineOptions {
                tau_rel: tau,
                d,
                d_max,
                strategy: parse_strategy(&strategy)?,
            };
            // exact singular zero: every component value contains zero
            let vals = system.evaluate(&z)?;
            let exactly_zero = vals.iter().all(|v| v.contains_zero() && v.abs().hi < 1e-14);
            let cert = if exactly_zero {
                certify::isolate_singular(&system, &z, &opts)?
            } else {
                certify::isolate_cluster(&system, &z, &opts)?
            };
            std::fs::write(&out, io::certificate_to_json(&cert))?;
            println!(
                "certified: mode {:?}, kappa {}, d {}, window [{:.6}, {:.6}], cluster count {}{}",
                cert.mode,
                cert.kappa,
                cert.d,
                cert.eps_minus,
                cert.eps_plus,
                cert.cluster_count,
                if cert.count_is_upper_bound { " (upper bound)" } else { "" },
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Region { certificate, epsilon, window, resolution, out } => {
            let cert = io::certificate_from_json(&read(&certificate)?)?;
            if epsilon < cert.eps_minus || epsilon > cert.eps_plus {
                return Err(Error::Degenerate(format!(
                    "epsilon {epsilon} is outside the certified window [{:.6}, {:.6}]",
                    cert.eps_minus, cert.eps_plus
                )));
            }
            let parts: Vec<f64> = window
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Parse(format!("bad window: {e}")))?;
            if parts.len() != 4 {
                return Err(Error::Parse("window must be x0,x1,y0,y1".into()));
            }
            let pred = RegionPredicate::from_log(&cert.log, epsilon)?;
            let lines =
                region::contour_sample(&pred, ((parts[0], parts[1]), (parts[2], parts[3])), resolution)?;
            let csv = io::contours_to_csv(&lines, &certificate.display().to_string());
            std::fs::write(&out, csv)?;
            println!("wrote {} polylines", lines.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckRegular { inputs, kappa, d } => {
            let (system, z) = load_inputs(&inputs)?;
            let d_top = kappa as u32 * (d - 1) + 1;
            let profile = hilbert::hilbert_profile(&system, &z, d_top)?;
            println!(
                "hilbert function: {:?}{}",
                profile.values,
                if profile.terminated { " (terminated)" } else { "" }
            );
            let ok = hilbert::is_regular_zero(&system, &z, kappa, d)?;
            if ok {
                println!(
                    "regular zero of breadth {kappa} and order {d}: multiplicity {}",
                    (d as u64).pow(kappa as u32)
                );
                Ok(ExitCode::SUCCESS)
            } else {
                println!("not a regular zero of breadth {kappa} and order {d}");
                Ok(ExitCode::from(2))
            }
        }
        Command::Preinflate { inputs, kappa, k, ell, tau, out, log_out } => {
            let (system, z) = load_inputs(&inputs)?;
            let kappa = match kappa {
                Some(k) => k,
                None => {
                    let jd = spectral::jacobian_at(&system, &z)?;
                    spectral::detect_breadth_rel(&jd, tau)?.kappa
                }
            };
            let (p, log) = preinflate::preinflate(&system, &z, kappa, k, ell)?;
            let check = preinflate::check_preinflatable(&p, kappa, k, ell)?;
            std::fs::write(&out, io::system_to_json(&p))?;
            if let Some(path) = log_out {
                std::fs::write(&path, io::transform_log_to_json(&log))?;
            }
            println!(
                "pre-inflatable: {} (indeterminate slots: {}, max radius {:.3e})",
                check.is_preinflatable,
                check.indeterminate_terms.len(),
                check.max_indeterminate_radius
            );
            Ok(if check.is_preinflatable {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Inflate { inputs, weights, kappa, d, w_max, out } => {
            let (system, _z) = load_inputs(&inputs)?;
            let map = match (weights, kappa, d) {
                (Some(w), _, _) => {
                    let ws = w
                        .split(',')
                        .map(|x| x.trim().parse::<u32>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| Error::Parse(format!("bad weights: {e}")))?;
                    if ws.len() != system.n {
                        return Err(Error::DimensionMismatch { expected: system.n, got: ws.len() });
                    }
                    InflationMap { weights: ws }
                }
                (None, Some(kappa), Some(d)) => InflationMap::standard(system.n, kappa, d),
                (None, _, _) => match inflation::uneven_weights_search(&system, w_max) {
                    Some((map, degree)) => {
                        println!("found weights {:?} with common degree {degree}", map.weights);
                        map
                    }
                    None => {
                        return Err(Error::Degenerate(
                            "no admissible inflation weights exist up to the bound".into(),
                        ))
                    }
                },
            };
            let inflated = map.apply(&system);
            std::fs::write(&out, io::system_to_json(&inflated))?;
            println!("cover degree {}", map.cover_degree());
            Ok(ExitCode::SUCCESS)
        }
        Command::UpperBound { inputs, transform, perturbed, strategy, out } => {
            let (system, _z) = load_inputs(&inputs)?;
            let t = io::transform_from_json(&read(&transform)?)?;
            let f = match perturbed {
                Some(p) => Some(io::system_from_json(&read(&p)?)?),
                None => None,
            };
            let report =
                irregular::certify_upper_bound(&system, &t, f.as_ref(), parse_strategy(&strategy)?)?;
            std::fs::write(&out, io::certificate_to_json(&report.certificate))?;
            println!(
                "multiplicity bound {} (reduced initial degrees {:?}); transformed count {}; locally invertible: {}",
                report.bound, report.reduced_degrees, report.transformed_count, report.locally_invertible
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { system, certificate } => {
            let sys = io::system_from_json(&read(&system)?)?;
            let cert = io::certificate_from_json(&read(&certificate)?)?;
            match certify::verify_certificate(&cert, &sys) {
                Ok(()) => {
                    println!("certificate verified");
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("verification failed: {e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
    }
}
