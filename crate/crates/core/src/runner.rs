//! Single-run and ensemble execution with reproducible seed streams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::engine;
use crate::error::StepError;
use crate::rng::stream_rng;
use crate::state::{SimState, TrajectoryFrame};
use crate::stylized::{analyze_series, AnalysisOptions, AnalysisReport, TrajectorySeries};

/// Relative clearing-residual budget checked on every step.
pub const CLEARING_TOLERANCE: f64 = 1e-9;

/// Frames recorded from one run plus the exact terminal state.
///
/// Frames are thinned by `record_every`, but the terminal frame is always
/// present and the clearing-identity check runs on every step regardless.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub run_index: u64,
    pub frames: Vec<TrajectoryFrame>,
    pub terminal: SimState,
    /// Largest |sum of excess demands| / total wealth seen along the run.
    pub max_clearing_residual: f64,
}

impl Trajectory {
    /// Column view of a recorded quantity.
    pub fn column(&self, f: impl Fn(&TrajectoryFrame) -> f64) -> Vec<f64> {
        self.frames.iter().map(f).collect()
    }

    /// Diagnostics over this trajectory's series.
    pub fn analyze(
        &self,
        p: f64,
        options: &AnalysisOptions,
    ) -> Result<AnalysisReport, crate::error::StatsError> {
        analyze_series(
            TrajectorySeries {
                prices: &self.column(|f| f.price),
                kappas: &self.column(|f| f.kappa),
                w_rational: &self.column(|f| f.w_rational),
                w_noise: &self.column(|f| f.w_noise),
                p,
            },
            options,
        )
    }
}

/// Why a run stopped before `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAbort {
    pub run_index: u64,
    /// Step at which the failure occurred.
    pub step: u64,
    /// Human-readable cause.
    pub cause: String,
    /// State just before the failing step.
    #[serde(skip)]
    pub last_state: Option<SimState>,
}

/// One full simulation with RNG stream `(config.seed, run_index)`.
pub fn run_simulation(config: &RunConfig, run_index: u64) -> Result<Trajectory, RunAbort> {
    let params = &config.params;
    let mut rng = stream_rng(config.seed, run_index);
    let mut state = SimState::initial(params);
    let mut frames =
        Vec::with_capacity((params.t_max / config.record_every.max(1)) as usize + 2);
    let mut max_residual = 0.0f64;

    for t in 1..=params.t_max {
        let prev = state;
        let (next, frame) = engine::step(&state, params, &mut rng).map_err(|e| RunAbort {
            run_index,
            step: t,
            cause: e.to_string(),
            last_state: Some(prev),
        })?;
        let residual = clearing_residual(&prev, &frame, params);
        max_residual = max_residual.max(residual);
        if residual > CLEARING_TOLERANCE {
            return Err(RunAbort {
                run_index,
                step: t,
                cause: format!(
                    "clearing identity violated: relative residual {residual:.3e}"
                ),
                last_state: Some(prev),
            });
        }
        if t % config.record_every == 0 || t == params.t_max {
            frames.push(frame);
        }
        state = next;
    }
    Ok(Trajectory {
        run_index,
        frames,
        terminal: state,
        max_clearing_residual: max_residual,
    })
}

/// Relative clearing residual of a step: |dd_rational + dd_noise| scaled by
/// the total wealth entering the step.
pub fn clearing_residual(prev: &SimState, frame: &TrajectoryFrame, params: &crate::params::ModelParams) -> f64 {
    let ratio = 1.0 + frame.ret;
    let dd_r = engine::excess_demand_rational(ratio, frame.div_ratio, prev.w_rational, params);
    let dd_n = engine::excess_demand_noise(
        frame.s,
        prev.s,
        ratio,
        frame.div_ratio,
        prev.w_noise,
        params,
    );
    (dd_r + dd_n).abs() / (prev.w_rational + prev.w_noise)
}

/// Digest of one run for the ensemble summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDigest {
    pub run_index: u64,
    pub tail_alpha: f64,
    pub episode_count: usize,
    pub wealth_ratio_end: f64,
}

/// Median and quartiles of a per-run statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl QuartileSummary {
    fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(QuartileSummary {
            median: quantile_sorted(&sorted, 0.5),
            q1: quantile_sorted(&sorted, 0.25),
            q3: quantile_sorted(&sorted, 0.75),
        })
    }
}

/// Linear-interpolation quantile of an already sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Aggregate view of an ensemble; medians and quartiles are computed only
/// from runs that completed and analyzed successfully.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub runs: u64,
    pub completed: u64,
    pub failures: Vec<RunAbort>,
    pub digests: Vec<RunDigest>,
    pub tail_alpha: Option<QuartileSummary>,
    pub episode_count: Option<QuartileSummary>,
    pub wealth_ratio_end: Option<QuartileSummary>,
}

/// Per-run output of an ensemble.
pub type RunOutcome = Result<(Trajectory, AnalysisReport), RunAbort>;

/// Runs the ensemble on a bounded worker pool and aggregates digests.
///
/// `parallelism = 0` uses the default pool width. Results depend only on
/// `(config, seed)`; the pool width changes scheduling, never output.
pub fn run_ensemble(
    config: &RunConfig,
    parallelism: usize,
) -> (EnsembleSummary, Vec<RunOutcome>) {
    let options = AnalysisOptions::default();
    let execute = |run_index: u64| -> RunOutcome {
        let trajectory = run_simulation(config, run_index)?;
        let report = trajectory
            .analyze(config.params.p, &options)
            .map_err(|e| RunAbort {
                run_index,
                step: config.params.t_max,
                cause: format!("analysis failed: {e}"),
                last_state: Some(trajectory.terminal),
            })?;
        Ok((trajectory, report))
    };

    let outcomes: Vec<RunOutcome> = if parallelism == 1 {
        (0..config.runs).map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .expect("worker pool");
        pool.install(|| (0..config.runs).into_par_iter().map(execute).collect())
    };

    let mut digests = Vec::new();
    let mut failures = Vec::new();
    for outcome in &outcomes {
        match outcome {
            Ok((trajectory, report)) => digests.push(RunDigest {
                run_index: trajectory.run_index,
                tail_alpha: report.tail_alpha,
                episode_count: report.episodes.len(),
                wealth_ratio_end: report.wealth_ratio_end,
            }),
            Err(abort) => failures.push(abort.clone()),
        }
    }

    let collect = |f: fn(&RunDigest) -> f64| -> Vec<f64> { digests.iter().map(f).collect() };
    let summary = EnsembleSummary {
        runs: config.runs,
        completed: digests.len() as u64,
        tail_alpha: QuartileSummary::from_values(&collect(|d| d.tail_alpha)),
        episode_count: QuartileSummary::from_values(&collect(|d| d.episode_count as f64)),
        wealth_ratio_end: QuartileSummary::from_values(&collect(|d| d.wealth_ratio_end)),
        digests,
        failures,
    };
    (summary, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;

    fn small_config() -> RunConfig {
        let mut config = load_config(r#"{"seed": 42, "t_max": 400}"#).unwrap();
        config.runs = 4;
        config
    }

    #[test]
    fn identical_seed_and_index_reproduce_bitwise() {
        let config = small_config();
        let a = run_simulation(&config, 0).unwrap();
        let b = run_simulation(&config, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let config = small_config();
        let a = run_simulation(&config, 0).unwrap();
        let b = run_simulation(&config, 1).unwrap();
        assert_ne!(a.frames, b.frames);
    }

    #[test]
    fn thinning_keeps_terminal_state() {
        let mut config = small_config();
        config.record_every = 7; // does not divide 400
        let full = run_simulation(&config, 0).unwrap();
        config.record_every = 1;
        let dense = run_simulation(&config, 0).unwrap();
        // Same underlying path: terminal states agree exactly.
        assert_eq!(full.terminal, dense.terminal);
        let last = full.frames.last().unwrap();
        assert_eq!(last.t, 400);
        // Thinned frames are a subsequence of the dense ones.
        for frame in &full.frames {
            assert!(dense.frames.contains(frame));
        }
        assert!(full.frames.len() < dense.frames.len());
        assert!(full.max_clearing_residual <= CLEARING_TOLERANCE);
    }

    #[test]
    fn ensemble_of_one_matches_single_run() {
        let mut config = small_config();
        config.runs = 1;
        let (summary, outcomes) = run_ensemble(&config, 1);
        assert_eq!(summary.completed, 1);
        let (trajectory, report) = outcomes[0].as_ref().unwrap();
        let direct = run_simulation(&config, 0).unwrap();
        assert_eq!(trajectory, &direct);
        assert_eq!(summary.tail_alpha.unwrap().median, report.tail_alpha);
        assert_eq!(
            summary.wealth_ratio_end.unwrap().median,
            report.wealth_ratio_end
        );
    }

    #[test]
    fn parallelism_does_not_change_the_summary() {
        let config = small_config();
        let (s1, o1) = run_ensemble(&config, 1);
        let (s4, o4) = run_ensemble(&config, 4);
        let (s8, o8) = run_ensemble(&config, 8);
        assert_eq!(s1, s4);
        assert_eq!(s1, s8);
        for (a, b) in o1.iter().zip(o4.iter()) {
            assert_eq!(a.as_ref().unwrap().0, b.as_ref().unwrap().0);
        }
        for (a, b) in o1.iter().zip(o8.iter()) {
            assert_eq!(a.as_ref().unwrap().0, b.as_ref().unwrap().0);
        }
    }

    #[test]
    fn aborted_runs_are_reported_not_fatal() {
        // A huge dividend volatility makes negative clearing prices likely.
        let mut config = small_config();
        config.params.sigma_r = 2.0;
        config.runs = 6;
        let (summary, _) = run_ensemble(&config, 2);
        assert!(summary.completed < summary.runs);
        assert_eq!(
            summary.failures.len() as u64,
            summary.runs - summary.completed
        );
        for failure in &summary.failures {
            assert!(failure.step >= 1);
            assert!(!failure.cause.is_empty());
        }
    }

    #[test]
    fn quantiles_interpolate() {
        let s = QuartileSummary::from_values(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
    }
}
