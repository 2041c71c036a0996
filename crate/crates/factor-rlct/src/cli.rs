//! Command-line surface: tables, monomial RLCTs, volume-oracle runs,
//! evidence experiments and sBIC simulations.
//!
//! Every artifact-producing run accepts `--out DIR` and writes a
//! `manifest.json` next to its outputs; `rerun --manifest FILE` replays the
//! recorded argument vector (optionally into a fresh directory) and
//! reproduces the outputs bit-identically apart from the recorded wall
//! clock. Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
//! parse error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evidence::{
    evidence_experiment, fit_learning_coefficient, sbic_experiment, sbic_scores, EvidenceRow,
    PriorSpec,
};
use crate::factor::FactorModelPoint;
use crate::io::{fmt_f64, read_covariance, RunManifest};
use crate::newton::{rlct_monomial, AmplitudeExponent, IdealFile};
use crate::plot::scatter_with_fit;
use crate::scenarios::Scenario;
use crate::table::{half_dimension_table, sbic_penalty_matrix};
use crate::volume::{calibrate_eps_grid, default_box_radius, estimate_fiber_rlct, VolumeConfig};

#[derive(Parser)]
#[command(
    name = "factor-rlct",
    version,
    about = "Learning coefficients for factor analysis: exact tables, Newton-polyhedron RLCTs, and Monte-Carlo oracles"
)]
struct Cli {
    /// Worker threads for Monte-Carlo sampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the learning-coefficient table l_{sr} used by sBIC.
    Table {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        kmax: usize,
        /// csv or json
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// RLCT of a monomial ideal described by an ideal file.
    Monomial {
        /// JSON file: {"dim": d, "generators": [[..],..], "tau": [..]?}
        #[arg(long)]
        ideal: PathBuf,
        /// Comma-separated override of the amplitude exponent tau.
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo level-set volume run; fits the scaling exponent.
    Volume {
        /// Built-in scenario: diag3, two3 or generic3.
        #[arg(long, conflicts_with = "sigma")]
        scenario: Option<String>,
        /// Covariance file (.json structured or header-free CSV).
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Box radius (default: 2 sqrt(max diagonal)).
        #[arg(long)]
        box_radius: Option<f64>,
        /// Explicit comma-separated threshold grid (default: calibrated).
        #[arg(long)]
        eps: Option<String>,
        /// Calibration target for the largest level-set fraction.
        #[arg(long, default_value_t = 0.1)]
        target_fraction: f64,
        #[arg(long, default_value_t = 6)]
        eps_points: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evidence experiment: F_n against log n with the fitted slope.
    Evidence {
        #[arg(long, conflicts_with = "sigma")]
        scenario: Option<String>,
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Comma-separated sample sizes.
        #[arg(long, default_value = "50,100,200,400,800")]
        n_grid: String,
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
        #[arg(long, default_value_t = 1.0)]
        psi_rate: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_sd: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noiseless self-test: fit synthetic F_n = ell log n + 1 exactly.
        #[arg(long)]
        self_test: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// sBIC vs BIC selection frequencies on simulated data.
    Sbic {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = 0)]
        true_r: usize,
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Force every penalty to (d_k/2, 1); sBIC must then equal BIC.
        #[arg(long)]
        self_test_reduction: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a recorded manifest (optionally into a fresh directory).
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn main() -> std::process::ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::ExitCode::from(run_from_args(&args))
}

/// Parses and runs an argument vector; returns the process exit code.
pub fn run_from_args(args: &[String]) -> u8 {
    let full: Vec<String> = std::iter::once("factor-rlct".to_string())
        .chain(args.iter().cloned())
        .collect();
    let cli = match Cli::try_parse_from(&full) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(threads) = cli.threads {
        // Ignore failure: the global pool may already exist (tests, rerun).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    if let Command::Rerun { manifest, out } = &cli.command {
        return rerun(manifest, out.as_deref(), args);
    }
    match execute(&cli.command, args) {
        Ok(()) => 0,
        Err(Error::Parse(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn rerun(manifest_path: &Path, out: Option<&Path>, _args: &[String]) -> u8 {
    let manifest = match RunManifest::read(manifest_path) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut argv = manifest.argv.clone();
    if let Some(new_out) = out {
        let mut replaced = false;
        for i in 0..argv.len() {
            if argv[i] == "--out" && i + 1 < argv.len() {
                argv[i + 1] = new_out.display().to_string();
                replaced = true;
            }
        }
        if !replaced {
            argv.push("--out".into());
            argv.push(new_out.display().to_string());
        }
    }
    run_from_args(&argv)
}

fn execute(command: &Command, argv: &[String]) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Table { p, kmax, format, out } => {
            let table = sbic_penalty_matrix(*p, *kmax)?;
            let (content, file_name) = match format.as_str() {
                "csv" => (table.to_csv(), "table.csv"),
                "json" => (table.to_json(), "table.json"),
                other => {
                    return Err(Error::Parse(format!(
                        "unknown format '{other}' (expected csv or json)"
                    )))
                }
            };
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    std::fs::write(dir.join(file_name), &content)?;
                    let config = json!({"p": p, "kmax": kmax, "format": format});
                    RunManifest::new("table", argv, None, config, started.elapsed().as_millis())
                        .write(dir)?;
                }
                None => print!("{content}"),
            }
            Ok(())
        }
        Command::Monomial { ideal, tau, out } => {
            let text = std::fs::read_to_string(ideal)?;
            let (ideal_parsed, tau_from_file) = IdealFile::parse(&text)?;
            let tau_used = match tau {
                Some(list) => {
                    let v = parse_list::<u32>(list)?;
                    if v.len() != ideal_parsed.dim() {
                        return Err(Error::Parse(format!(
                            "tau override has length {}, expected {}",
                            v.len(),
                            ideal_parsed.dim()
                        )));
                    }
                    AmplitudeExponent(v)
                }
                None => tau_from_file,
            };
            let pair = rlct_monomial(&ideal_parsed, &tau_used)?;
            let rendered = serde_json::to_string(&pair).expect("pair serializes");
            println!("{rendered}");
            if let Some(dir) = out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("rlct.json"), format!("{rendered}\n"))?;
                let config = json!({"ideal": ideal.display().to_string(), "tau": tau});
                RunManifest::new("monomial", argv, None, config, started.elapsed().as_millis())
                    .write(dir)?;
            }
            Ok(())
        }
        Command::Volume {
            scenario,
            sigma,
            k,
            box_radius,
            eps,
            target_fraction,
            eps_points,
            samples,
            seed,
            out,
        } => {
            let (point, scenario_name) = resolve_point(scenario.as_deref(), sigma.as_deref())?;
            let radius = box_radius.unwrap_or_else(|| default_box_radius(&point));
            let eps_grid = match eps {
                Some(list) => parse_list::<f64>(list)?,
                None => calibrate_eps_grid(&point, *k, radius, *target_fraction, *eps_points, *seed)?,
            };
            let cfg = VolumeConfig {
                box_radius: radius,
                eps_grid,
                samples: *samples,
                seed: *seed,
            };
            let est = estimate_fiber_rlct(&point, *k, &cfg)?;
            std::fs::create_dir_all(out)?;
            let mut csv = String::from("epsilon,count,samples,fraction,stderr\n");
            for i in 0..est.volumes.eps.len() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(est.volumes.eps[i]),
                    est.volumes.counts[i],
                    est.volumes.samples,
                    fmt_f64(est.volumes.fractions[i]),
                    fmt_f64(est.volumes.stderrs[i]),
                ));
            }
            std::fs::write(out.join("volumes.csv"), csv)?;
            let summary = json!({
                "scenario": scenario_name,
                "k": k,
                "ell_hat": est.fit.ell_hat,
                "stderr": est.fit.stderr,
                "intercept": est.fit.intercept,
                "residual": est.fit.residual,
                "points_used": est.fit.points_used,
                "learning_coefficient_hat": est.learning_coefficient_hat,
                "learning_coefficient_stderr": est.learning_coefficient_stderr,
                "config": &cfg,
            });
            std::fs::write(
                out.join("summary.json"),
                serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
            )?;
            let config = json!({
                "scenario": scenario_name, "k": k, "config": &cfg,
            });
            RunManifest::new("volume", argv, Some(*seed), config, started.elapsed().as_millis())
                .write(out)?;
            println!(
                "ell_hat = {:.4} +- {:.4} (learning coefficient {:.4})",
                est.fit.ell_hat, est.fit.stderr, est.learning_coefficient_hat
            );
            Ok(())
        }
        Command::Evidence {
            scenario,
            sigma,
            k,
            n_grid,
            replicates,
            draws,
            psi_rate,
            lambda_sd,
            seed,
            self_test,
            out,
        } => {
            let n_values = parse_list::<usize>(n_grid)?;
            let prior = PriorSpec {
                psi_rate: *psi_rate,
                lambda_sd: *lambda_sd,
            };
            let (point, scenario_name) = resolve_point(scenario.as_deref(), sigma.as_deref())?;
            std::fs::create_dir_all(out)?;

            let (rows, fits): (Vec<EvidenceRow>, Vec<(f64, f64, f64)>) = if *self_test {
                // noiseless synthetic F_n: the fit must recover the slope exactly
                let target = scenario
                    .as_deref()
                    .map(|s| Scenario::parse(s).map(|sc| sc.learning_coefficient()))
                    .transpose()?
                    .unwrap_or(2.25);
                let rows: Vec<EvidenceRow> = n_values
                    .iter()
                    .map(|&n| EvidenceRow {
                        replicate: 0,
                        n,
                        k: *k,
                        log_marginal: f64::NAN,
                        mc_stderr: 0.0,
                        f_n: target * (n as f64).ln() + 1.0,
                    })
                    .collect();
                let points: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, r.f_n)).collect();
                let fit = fit_learning_coefficient(&points)?;
                if (fit.0 - target).abs() > 1e-9 {
                    return Err(Error::DegenerateFit(format!(
                        "self-test slope {} differs from target {target}",
                        fit.0
                    )));
                }
                (rows, vec![fit])
            } else {
                let exp = evidence_experiment(
                    &point, *k, &n_values, *replicates, *draws, &prior, *seed,
                )?;
                (exp.rows, exp.fits)
            };

            let mut csv = String::from("replicate,n,k,log_marginal,stderr,f_n\n");
            for r in &rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.replicate,
                    r.n,
                    r.k,
                    fmt_f64(r.log_marginal),
                    fmt_f64(r.mc_stderr),
                    fmt_f64(r.f_n),
                ));
            }
            std::fs::write(out.join("evidence.csv"), csv)?;
            let mean_slope = fits.iter().map(|f| f.0).sum::<f64>() / fits.len() as f64;
            let mean_intercept = fits.iter().map(|f| f.1).sum::<f64>() / fits.len() as f64;
            let summary = json!({
                "scenario": scenario_name,
                "k": k,
                "n_grid": n_values,
                "replicates": replicates,
                "draws": draws,
                "prior": &prior,
                "self_test": self_test,
                "fits": fits,
                "mean_slope": mean_slope,
            });
            std::fs::write(
                out.join("fit.json"),
                serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
            )?;
            let points: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| ((r.n as f64).ln(), r.f_n))
                .collect();
            let svg = scatter_with_fit(
                &points,
                mean_slope,
                mean_intercept,
                "log n",
                "F_n",
                "Watanabe deviation vs log n",
            );
            std::fs::write(out.join("fit.svg"), svg)?;
            let config = json!({
                "scenario": scenario_name, "k": k, "n_grid": n_values,
                "replicates": replicates, "draws": draws, "prior": &prior,
                "self_test": self_test,
            });
            RunManifest::new("evidence", argv, Some(*seed), config, started.elapsed().as_millis())
                .write(out)?;
            println!("mean slope = {mean_slope:.4}");
            Ok(())
        }
        Command::Sbic {
            p,
            kmax,
            true_r,
            n,
            replicates,
            seed,
            self_test_reduction,
            out,
        } => {
            std::fs::create_dir_all(out)?;
            if *self_test_reduction {
                // seeded random log-likelihoods; forced penalties must make
                // the two criteria agree to 1e-9
                let mut rng = crate::seeds::chunk_rng(*seed, &[0x5e1f]);
                use rand::Rng;
                let logliks: Vec<f64> = (0..=*kmax)
                    .map(|_| -500.0 + 100.0 * rng.random::<f64>())
                    .collect();
                let table = half_dimension_table(*p, *kmax)?;
                let sbic = sbic_scores(&logliks, *p, *n, &table)?;
                let mut csv = String::from("k,sbic,bic\n");
                for k in 0..=*kmax {
                    let bic = crate::evidence::bic_score(logliks[k], *p, k, *n)?;
                    if (sbic[k] - bic).abs() > 1e-9 {
                        return Err(Error::DegenerateEstimate(format!(
                            "reduction self-test failed at k = {k}: sbic {} vs bic {bic}",
                            sbic[k]
                        )));
                    }
                    csv.push_str(&format!("{k},{},{}\n", fmt_f64(sbic[k]), fmt_f64(bic)));
                }
                std::fs::write(out.join("sbic_vs_bic.csv"), csv)?;
            } else {
                let exp = sbic_experiment(*p, *kmax, *true_r, *n, *replicates, *seed)?;
                let mut csv = String::from("method");
                for k in 0..=*kmax {
                    csv.push_str(&format!(",select_{k}"));
                }
                csv.push('\n');
                for (name, freqs) in [("sbic", &exp.sbic_freq), ("bic", &exp.bic_freq)] {
                    csv.push_str(name);
                    for f in freqs {
                        csv.push_str(&format!(",{}", fmt_f64(*f)));
                    }
                    csv.push('\n');
                }
                std::fs::write(out.join("selection.csv"), csv)?;
                std::fs::write(
                    out.join("summary.json"),
                    serde_json::to_string_pretty(&exp).expect("summary serializes") + "\n",
                )?;
                println!(
                    "sBIC selects true model with frequency {:.3}, BIC {:.3}",
                    exp.sbic_freq[*true_r], exp.bic_freq[*true_r]
                );
            }
            let config = json!({
                "p": p, "kmax": kmax, "true_r": true_r, "n": n,
                "replicates": replicates, "self_test_reduction": self_test_reduction,
            });
            RunManifest::new("sbic", argv, Some(*seed), config, started.elapsed().as_millis())
                .write(out)?;
            Ok(())
        }
        Command::Rerun { .. } => unreachable!("handled by the caller"),
    }
}

fn resolve_point(
    scenario: Option<&str>,
    sigma: Option<&Path>,
) -> Result<(FactorModelPoint, Option<String>)> {
    match (scenario, sigma) {
        (Some(name), None) => {
            let sc = Scenario::parse(name)?;
            Ok((sc.point(), Some(sc.name().to_string())))
        }
        (None, Some(path)) => Ok((read_covariance(path)?, None)),
        (None, None) => Err(Error::Parse(
            "either --scenario or --sigma is required".into(),
        )),
        (Some(_), Some(_)) => unreachable!("clap forbids this combination"),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<T>()
                .map_err(|e| Error::Parse(format!("bad list entry '{}': {e}", tok.trim())))
        })
        .collect()
}
