//! Config-driven experiment pipeline: runs the requested estimators and
//! asymptotics, cross-checks every estimator pair at `3 sigma + bias
//! budgets`, and writes machine-readable reports.
//!
//! Outputs under the chosen directory:
//! * `estimates.csv` — `x,y,estimator,value,stderr,bias_budget,reps,seed`;
//! * `summary.json` — resolved config, stability report, estimates, Cramér
//!   root, rate fit, heavy-series values, agreement verdicts;
//! * `grid.csv` / `grid.bin` — the exact grid when requested.
//!
//! With equal config and seed the bytes of all outputs are identical across
//! runs and thread counts (wall-clock timings never enter the files).

use crate::asympt::{extract_rate, heavy_series, solve_cramer, CramerRoot, RateFit};
use crate::config::{AsymptoticKind, EstimatorKind, ExperimentConfig};
use crate::exact::{balance_residual, stationary, TruncatedGrid};
use crate::mc;
use crate::model::StabilityReport;
use crate::{Error, Result};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Which slice of the pipeline a CLI subcommand requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Exact solver only (plus grid export).
    Exact,
    /// The Monte Carlo estimators listed in the config.
    Simulate,
    /// Cramér root (plus the rate fit when a direction grid is present).
    Cramer,
    /// Heavy-tail series along the direction grid.
    Heavy,
    /// Everything the config requests, with agreement verdicts.
    Compare,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: RunMode,
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    /// Thread-pool size; results are bitwise independent of it.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub x: u64,
    pub y: u64,
    pub estimator: &'static str,
    pub value: f64,
    pub stderr: f64,
    pub bias_budget: f64,
    pub reps: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementRow {
    pub x: u64,
    pub y: u64,
    pub estimator_a: &'static str,
    pub estimator_b: &'static str,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub n1: usize,
    pub n2: usize,
    pub deficit: f64,
    pub iterations: u64,
    pub residual: f64,
    pub balance_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeavySeriesRow {
    pub n: u64,
    pub x: u64,
    pub y: u64,
    pub value: f64,
    pub truncation_bound: f64,
    pub k_used: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFitSummary {
    #[serde(flatten)]
    pub fit: RateFit,
    /// (n, H(n eta)) pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
    /// Relative gap between the fitted rate and `<gamma, eta>`.
    pub rate_vs_cramer: Option<f64>,
}

/// Everything `summary.json` holds. Field order is fixed by this struct,
/// which is what makes the byte-identity guarantee practical.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// The full resolved configuration (model expanded from any preset).
    pub config: ResolvedConfigEcho,
    /// The increment-MGF reading of the exponent function: phi is the MGF
    /// of one step (A - S^1, A - S^2) of the free walk.
    pub phi_convention: &'static str,
    pub stability: StabilityEcho,
    pub estimates: Vec<EstimateRow>,
    pub grid_info: Option<GridInfo>,
    pub cramer: Option<CramerRoot>,
    pub rate_fit: Option<RateFitSummary>,
    /// Heavy-series rows; `es_convention` records that E S_i means the two
    /// per-queue service means.
    pub es_convention: &'static str,
    pub heavy_series: Vec<HeavySeriesRow>,
    pub agreements: Vec<AgreementRow>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityEcho {
    pub stable: bool,
    pub mean_arrival: f64,
    pub mean_service1: f64,
    pub mean_service2: f64,
}

impl From<StabilityReport> for StabilityEcho {
    fn from(r: StabilityReport) -> Self {
        StabilityEcho {
            stable: r.stable,
            mean_arrival: r.mean_arrival,
            mean_service1: r.mean_service1,
            mean_service2: r.mean_service2,
        }
    }
}

/// Resolved config as echoed into the summary.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfigEcho {
    pub model: crate::config::ModelSpec,
    pub points: Vec<(u64, u64)>,
    pub direction: Option<([f64; 2], Vec<u64>)>,
    pub estimators: Vec<&'static str>,
    pub asymptotics: Vec<String>,
    pub tolerances: crate::config::Tolerances,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    pub max_iter: u64,
    pub mc: crate::config::McParams,
    pub seed: u64,
}

/// Run the pipeline and write reports into `opts.out_dir`.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    match opts.threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_inner(config, opts))
        }
        None => run_inner(config, opts),
    }
}

fn run_inner(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    let mut resolved = config.resolve()?;
    if let Some(seed) = opts.seed_override {
        resolved.seed = seed;
    }

    // Mode filtering: which estimators and asymptotics actually run.
    let estimators: Vec<EstimatorKind> = match opts.mode {
        RunMode::Exact => vec![EstimatorKind::Exact],
        RunMode::Simulate => resolved
            .estimators
            .iter()
            .copied()
            .filter(|e| *e != EstimatorKind::Exact)
            .collect(),
        RunMode::Cramer | RunMode::Heavy => Vec::new(),
        RunMode::Compare => resolved.estimators.clone(),
    };
    let asymptotics: Vec<AsymptoticKind> = match opts.mode {
        RunMode::Exact | RunMode::Simulate => Vec::new(),
        RunMode::Cramer => vec![AsymptoticKind::Cramer],
        RunMode::Heavy => vec![AsymptoticKind::HeavySeries],
        RunMode::Compare => resolved.asymptotics.clone(),
    };
    if estimators.is_empty() && asymptotics.is_empty() {
        return Err(Error::Config(
            "nothing to run: no estimators or asymptotics requested".into(),
        ));
    }
    if matches!(opts.mode, RunMode::Simulate) && estimators.is_empty() {
        return Err(Error::Config(
            "simulate: the config lists no Monte Carlo estimators".into(),
        ));
    }

    let model = &resolved.model;
    let seed = resolved.seed;
    let points = resolved.points.clone();
    let needs_points = !estimators.is_empty();
    if needs_points && points.is_empty() {
        return Err(Error::Config("estimators need a grid of points".into()));
    }

    // Solve the Cramér root first: if the direction has no root the run
    // should fail with that error class, not with a downstream one.
    let eta_for_tilt = resolved
        .direction
        .as_ref()
        .map(|(eta, _)| *eta)
        .unwrap_or([0.5, 0.5]);
    let cramer = if asymptotics.contains(&AsymptoticKind::Cramer) {
        Some(solve_cramer(model, eta_for_tilt)?)
    } else {
        None
    };

    // The exact grid: needed by the exact estimator and by the rate fit.
    let wants_rate_fit = cramer.is_some() && resolved.direction.is_some();
    let need_grid = estimators.contains(&EstimatorKind::Exact) || wants_rate_fit;
    let grid: Option<TruncatedGrid> = if need_grid {
        let (n1, n2) = resolved.grid_dims()?;
        Some(stationary(
            model,
            n1,
            n2,
            resolved.tolerances.grid_tol,
            resolved.max_iter,
        )?)
    } else {
        None
    };

    // Estimates, point-major, estimator order fixed.
    let mut rows: Vec<EstimateRow> = Vec::new();
    let order = [
        EstimatorKind::Exact,
        EstimatorKind::QueueMc,
        EstimatorKind::FirstPassage,
        EstimatorKind::Tilted,
        EstimatorKind::HeavyMc,
    ];
    let queue_mc = if estimators.contains(&EstimatorKind::QueueMc) {
        Some(mc::simulate_queue_tail(
            model,
            &points,
            resolved.mc.horizon,
            resolved.mc.burnin,
            resolved.mc.queue_reps,
            seed,
        )?)
    } else {
        None
    };
    for (pi, &(x, y)) in points.iter().enumerate() {
        for kind in order {
            if !estimators.contains(&kind) {
                continue;
            }
            let row = match kind {
                EstimatorKind::Exact => {
                    let g = grid.as_ref().expect("grid solved above");
                    let h = g.h(x, y);
                    EstimateRow {
                        x,
                        y,
                        estimator: kind.name(),
                        value: h.value,
                        stderr: 0.0,
                        bias_budget: g.deficit(),
                        reps: 0,
                        seed,
                    }
                }
                EstimatorKind::QueueMc => {
                    let est = &queue_mc.as_ref().unwrap()[pi].1;
                    estimate_row(x, y, kind, est, seed)
                }
                EstimatorKind::FirstPassage => {
                    let est = mc::first_passage_prob(
                        model,
                        x,
                        y,
                        resolved.mc.fp_reps,
                        seed,
                        resolved.tolerances.eps_stop,
                    )?;
                    estimate_row(x, y, kind, &est, seed)
                }
                EstimatorKind::Tilted => {
                    let est = mc::first_passage_tilted(
                        model,
                        x,
                        y,
                        eta_for_tilt,
                        resolved.mc.tilted_reps,
                        seed,
                        resolved.tolerances.eps_stop,
                    )?;
                    estimate_row(x, y, kind, &est, seed)
                }
                EstimatorKind::HeavyMc => {
                    let est = mc::heavy_first_passage(
                        model,
                        x,
                        y,
                        resolved.mc.heavy_reps,
                        resolved.mc.horizon_cap,
                        seed,
                    )?;
                    estimate_row(x, y, kind, &est, seed)
                }
            };
            rows.push(row);
        }
    }

    let rate_fit = match (&cramer, &resolved.direction, wants_rate_fit) {
        (Some(root), Some((_, n_values)), true) => {
            let g = grid.as_ref().expect("grid solved above");
            let pts: Vec<(f64, f64)> = n_values
                .iter()
                .zip(points.iter())
                .map(|(&n, &(x, y))| (n as f64, g.h(x, y).value))
                .collect();
            let fit = extract_rate(&pts)?;
            let rate_gap = (fit.rate - root.decay_rate()).abs() / root.decay_rate();
            Some(RateFitSummary {
                fit,
                points: pts,
                rate_vs_cramer: Some(rate_gap),
            })
        }
        _ => None,
    };
    let mut heavy_rows = Vec::new();
    if asymptotics.contains(&AsymptoticKind::HeavySeries) {
        let (eta, n_values) = resolved.direction.clone().ok_or_else(|| {
            Error::Config("heavy-series needs a direction grid ({eta, n_values})".into())
        })?;
        for (&n, &(x, y)) in n_values.iter().zip(points.iter()) {
            let s = heavy_series(model, eta, n, resolved.tolerances.series_rel_tol)?;
            heavy_rows.push(HeavySeriesRow {
                n,
                x,
                y,
                value: s.value,
                truncation_bound: s.truncation_bound,
                k_used: s.k_used,
            });
        }
    }

    // Pairwise agreement verdicts at 3 sigma + bias budgets.
    let mut agreements = Vec::new();
    for &(x, y) in &points {
        let here: Vec<&EstimateRow> = rows.iter().filter(|r| r.x == x && r.y == y).collect();
        for i in 0..here.len() {
            for j in (i + 1)..here.len() {
                let (a, b) = (here[i], here[j]);
                let delta = (a.value - b.value).abs();
                let tolerance = 3.0 * (a.stderr + b.stderr) + a.bias_budget + b.bias_budget;
                agreements.push(AgreementRow {
                    x,
                    y,
                    estimator_a: a.estimator,
                    estimator_b: b.estimator,
                    delta,
                    tolerance,
                    pass: delta <= tolerance,
                });
            }
        }
    }
    let all_pass = agreements.iter().all(|a| a.pass);

    let summary = RunSummary {
        config: ResolvedConfigEcho {
            model: resolved.model_spec.clone(),
            points: points.clone(),
            direction: resolved.direction,
            estimators: estimators.iter().map(|e| e.name()).collect(),
            asymptotics: asymptotics
                .iter()
                .map(|a| {
                    match a {
                        AsymptoticKind::Cramer => "cramer",
                        AsymptoticKind::HeavySeries => "heavy-series",
                    }
                    .to_string()
                })
                .collect(),
            tolerances: resolved.tolerances,
            n1: resolved.n1,
            n2: resolved.n2,
            max_iter: resolved.max_iter,
            mc: resolved.mc,
            seed,
        },
        phi_convention: "increment-mgf",
        stability: model.stability().into(),
        estimates: rows,
        grid_info: grid.as_ref().map(|g| GridInfo {
            n1: g.n1(),
            n2: g.n2(),
            deficit: g.deficit(),
            iterations: g.iterations(),
            residual: g.residual(),
            balance_residual: balance_residual(g, model),
        }),
        cramer,
        rate_fit,
        es_convention: "per-queue-service-means",
        heavy_series: heavy_rows,
        agreements,
        all_pass,
    };

    write_reports(&summary, grid.as_ref(), &opts.out_dir)?;
    Ok(summary)
}

fn estimate_row(
    x: u64,
    y: u64,
    kind: EstimatorKind,
    est: &mc::Estimate,
    seed: u64,
) -> EstimateRow {
    EstimateRow {
        x,
        y,
        estimator: kind.name(),
        value: est.value,
        stderr: est.stderr,
        bias_budget: est.bias_budget,
        reps: est.reps,
        seed,
    }
}

fn write_reports(summary: &RunSummary, grid: Option<&TruncatedGrid>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut csv = String::from("x,y,estimator,value,stderr,bias_budget,reps,seed\n");
    for r in &summary.estimates {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.x, r.y, r.estimator, r.value, r.stderr, r.bias_budget, r.reps, r.seed
        ));
    }
    fs::write(dir.join("estimates.csv"), csv)?;

    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Io(format!("summary serialization: {e}")))?;
    fs::write(dir.join("summary.json"), json + "\n")?;

    if let Some(g) = grid {
        let mut f = fs::File::create(dir.join("grid.csv"))?;
        let mut buf = Vec::new();
        g.write_csv(&mut buf)?;
        f.write_all(&buf)?;
        let mut f = fs::File::create(dir.join("grid.bin"))?;
        let mut buf = Vec::new();
        g.write_snapshot(&mut buf)?;
        f.write_all(&buf)?;
    }
    Ok(())
}
