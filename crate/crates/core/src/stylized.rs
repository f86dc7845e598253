//! Statistical diagnostics of simulated price series: heavy-tail estimation,
//! autocorrelations, bubble-episode detection and super-exponential fitting.

use serde::{Deserialize, Serialize};

use crate::error::StatsError;

/// Simple returns `P_{t+1}/P_t - 1`.
pub fn returns_from_prices(prices: &[f64]) -> Result<Vec<f64>, StatsError> {
    if prices.len() < 2 {
        return Err(StatsError::TooShort {
            len: prices.len(),
            min: 2,
        });
    }
    debug_assert!(prices.iter().all(|&p| p > 0.0));
    Ok(prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
}

/// Log returns `ln(P_{t+1}/P_t)`, offered as an alternative return
/// definition for the diagnostics.
pub fn log_returns_from_prices(prices: &[f64]) -> Result<Vec<f64>, StatsError> {
    if prices.len() < 2 {
        return Err(StatsError::TooShort {
            len: prices.len(),
            min: 2,
        });
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Hill estimator of the tail exponent over the top-k order statistics,
/// `alpha = k / sum_{i=1..k} ln(x_(i) / x_(k+1))` with `k = ceil(frac * n)`.
///
/// Scale-invariant by construction. `tail_fraction` must lie in (0, 0.5].
pub fn hill_tail_exponent(values: &[f64], tail_fraction: f64) -> Result<f64, StatsError> {
    assert!(
        tail_fraction > 0.0 && tail_fraction <= 0.5,
        "tail_fraction must lie in (0, 0.5]"
    );
    if values.len() < 50 {
        return Err(StatsError::TooShort {
            len: values.len(),
            min: 50,
        });
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    let k = ((tail_fraction * n as f64).ceil() as usize).max(1).min(n - 1);
    let threshold = sorted[k]; // x_(k+1) in 1-based order statistics
    if threshold <= 0.0 {
        return Err(StatsError::DegenerateTail {
            reason: format!("order statistic x_(k+1) = {threshold} is not positive"),
        });
    }
    let log_sum: f64 = sorted[..k].iter().map(|&x| (x / threshold).ln()).sum();
    if log_sum <= 0.0 {
        return Err(StatsError::DegenerateTail {
            reason: "all tail values equal".to_string(),
        });
    }
    Ok(k as f64 / log_sum)
}

/// Sample autocorrelation at lags 1..=max_lag, normalized by the lag-0
/// variance.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>, StatsError> {
    if series.len() < max_lag + 2 {
        return Err(StatsError::TooShort {
            len: series.len(),
            min: max_lag + 2,
        });
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let var: f64 = centered.iter().map(|x| x * x).sum();
    if var <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((1..=max_lag)
        .map(|lag| {
            centered[..n - lag]
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / var
        })
        .collect())
}

/// A maximal supercritical excursion of the coupling process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleEpisode {
    /// First step index with `kappa > p` (indices into the input series).
    pub t_start: u64,
    /// Last step index of the excursion.
    pub t_end: u64,
    /// Maximum price inside the window.
    pub peak_price: f64,
    /// Peak-to-trough relative loss after the episode ends, in [0, 1].
    pub drawdown: f64,
    /// Super-exponential fit over the episode window, when one is meaningful.
    pub superexp: Option<SuperExpFit>,
}

/// Fitted parameters of the super-exponential log-price law
/// `log P(t) = b1 * s1 * (alpha1^t - 1) + log P(t1)`.
///
/// Only the product `b1 * s1` is identifiable from a price series alone, so
/// fits report the amplitude in `s1` and set `b1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperExpFit {
    /// Amplitude of the opinion growth term.
    pub s1: f64,
    /// Per-step multiplicative factor of the opinion index, > 1 for
    /// supercritical windows.
    pub alpha1: f64,
    /// Price-coupling constant.
    pub b1: f64,
    /// Window start index.
    pub t1: usize,
    /// Window length in steps.
    pub window: usize,
    /// Root-mean-square residual of the fit in log-price units.
    pub residual_rms: f64,
}

/// Default minimum episode length; suppresses one-step threshold crossings.
pub const DEFAULT_MIN_EPISODE_LEN: usize = 5;

/// Maximal runs of `kappa > p` of at least `min_len` steps, annotated with
/// the peak price inside the run and the drawdown realized after it.
///
/// `kappa_series` and `price_series` must be aligned step by step.
pub fn detect_bubbles(
    kappa_series: &[f64],
    p: f64,
    price_series: &[f64],
    min_len: usize,
) -> Vec<BubbleEpisode> {
    assert_eq!(
        kappa_series.len(),
        price_series.len(),
        "kappa and price series must be aligned"
    );
    let n = kappa_series.len();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for t in 0..n {
        if kappa_series[t] > p {
            start.get_or_insert(t);
        } else if let Some(s) = start.take() {
            runs.push((s, t - 1));
        }
    }
    if let Some(s) = start {
        runs.push((s, n - 1));
    }
    runs.retain(|(s, e)| e - s + 1 >= min_len.max(1));

    let mut episodes = Vec::with_capacity(runs.len());
    for (idx, &(s, e)) in runs.iter().enumerate() {
        let peak_price = price_series[s..=e].iter().cloned().fold(f64::MIN, f64::max);
        // Trough window: after the episode, up to the next episode (or the
        // end of the series).
        let trough_end = runs.get(idx + 1).map_or(n, |&(ns, _)| ns);
        let trough = price_series[e..trough_end]
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        let drawdown = ((peak_price - trough) / peak_price).clamp(0.0, 1.0);
        let superexp = if e - s + 1 >= 10 {
            let log_prices: Vec<f64> = price_series.iter().map(|p| p.ln()).collect();
            fit_superexponential(&log_prices, s..e + 1).ok()
        } else {
            None
        };
        episodes.push(BubbleEpisode {
            t_start: s as u64,
            t_end: e as u64,
            peak_price,
            drawdown,
            superexp,
        });
    }
    episodes
}

/// Grid bounds for the per-step opinion growth factor.
const ALPHA_GRID_LO: f64 = 1.0005;
const ALPHA_GRID_HI: f64 = 1.5;
const ALPHA_GRID_POINTS: usize = 512;

/// Least-squares fit of the super-exponential log-price law on a window.
///
/// The model is separable: for each candidate `alpha1` on a log-spaced grid
/// the amplitude follows by linear least squares; the best grid cell is then
/// refined by a finer local grid. Errors with `NoConvexity` when the second
/// difference of the log price is non-positive on more than half the window,
/// where the fit would be meaningless.
pub fn fit_superexponential(
    log_prices: &[f64],
    window: std::ops::Range<usize>,
) -> Result<SuperExpFit, StatsError> {
    let len = window.len();
    if len < 10 || window.end > log_prices.len() {
        return Err(StatsError::TooShort { len, min: 10 });
    }
    let y: Vec<f64> = log_prices[window.clone()]
        .iter()
        .map(|v| v - log_prices[window.start])
        .collect();

    let second_diffs = len - 2;
    let nonconvex = (0..second_diffs)
        .filter(|&t| y[t + 2] - 2.0 * y[t + 1] + y[t] <= 0.0)
        .count();
    let frac = nonconvex as f64 / second_diffs as f64;
    if frac > 0.5 {
        return Err(StatsError::NoConvexity { frac: frac * 100.0 });
    }

    let (log_lo, log_hi) = (ALPHA_GRID_LO.ln(), ALPHA_GRID_HI.ln());
    let coarse = |i: usize| {
        (log_lo + (log_hi - log_lo) * i as f64 / (ALPHA_GRID_POINTS - 1) as f64).exp()
    };
    let mut best = (f64::INFINITY, ALPHA_GRID_LO, 0.0);
    for i in 0..ALPHA_GRID_POINTS {
        let alpha = coarse(i);
        let (sse, amp) = amplitude_least_squares(&y, alpha);
        if sse < best.0 {
            best = (sse, alpha, amp);
        }
    }
    // Local refinement around the best coarse cell.
    let step = (log_hi - log_lo) / (ALPHA_GRID_POINTS - 1) as f64;
    let center = best.1.ln();
    for i in 0..129 {
        let alpha = (center - step + 2.0 * step * i as f64 / 128.0).exp();
        if !(ALPHA_GRID_LO..=ALPHA_GRID_HI).contains(&alpha) {
            continue;
        }
        let (sse, amp) = amplitude_least_squares(&y, alpha);
        if sse < best.0 {
            best = (sse, alpha, amp);
        }
    }

    let (sse, alpha1, amplitude) = best;
    Ok(SuperExpFit {
        s1: amplitude,
        alpha1,
        b1: 1.0,
        t1: window.start,
        window: len,
        residual_rms: (sse / len as f64).sqrt(),
    })
}

/// For fixed alpha, the best amplitude and its sum of squared residuals.
fn amplitude_least_squares(y: &[f64], alpha: f64) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut pow = 1.0;
    let basis: Vec<f64> = (0..y.len())
        .map(|_| {
            let g = pow - 1.0;
            pow *= alpha;
            g
        })
        .collect();
    for (yt, g) in y.iter().zip(&basis) {
        num += yt * g;
        den += g * g;
    }
    let amp = if den > 0.0 { num / den } else { 0.0 };
    let sse = y
        .iter()
        .zip(&basis)
        .map(|(yt, g)| {
            let e = yt - amp * g;
            e * e
        })
        .sum();
    (sse, amp)
}

/// Cumulative return of each disjoint window of `window_len` steps.
pub fn window_returns(prices: &[f64], window_len: usize) -> Result<Vec<f64>, StatsError> {
    assert!(window_len >= 1, "window length must be at least 1");
    if prices.len() < window_len + 1 {
        return Err(StatsError::TooShort {
            len: prices.len(),
            min: window_len + 1,
        });
    }
    let windows = (prices.len() - 1) / window_len;
    Ok((0..windows)
        .map(|k| prices[(k + 1) * window_len] / prices[k * window_len] - 1.0)
        .collect())
}

/// Elementwise noise-to-rational wealth ratio.
pub fn wealth_ratio_series(w_noise: &[f64], w_rational: &[f64]) -> Vec<f64> {
    assert_eq!(w_noise.len(), w_rational.len(), "series must be aligned");
    w_noise
        .iter()
        .zip(w_rational)
        .map(|(n, r)| n / r)
        .collect()
}

/// Knobs of the trajectory diagnostics. Defaults: 5% Hill tail, ACF out to
/// lag 100, episodes of at least 5 steps, simple returns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub tail_fraction: f64,
    pub max_lag: usize,
    pub min_episode_len: usize,
    pub use_log_returns: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            tail_fraction: 0.05,
            max_lag: 100,
            min_episode_len: DEFAULT_MIN_EPISODE_LEN,
            use_log_returns: false,
        }
    }
}

/// Stylized-fact estimates for one simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Hill estimate of the return-tail exponent over absolute returns.
    pub tail_alpha: f64,
    /// Autocorrelation of signed returns at lags 1..=max_lag.
    pub acf_signed: Vec<f64>,
    /// Autocorrelation of absolute returns at lags 1..=max_lag.
    pub acf_abs: Vec<f64>,
    /// Supercritical coupling excursions.
    pub episodes: Vec<BubbleEpisode>,
    /// Terminal noise-to-rational wealth ratio.
    pub wealth_ratio_end: f64,
}

/// Series inputs for [`analyze_series`]; all aligned step by step.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySeries<'a> {
    pub prices: &'a [f64],
    pub kappas: &'a [f64],
    pub w_rational: &'a [f64],
    pub w_noise: &'a [f64],
    /// Baseline flip probability, the supercritical threshold for kappa.
    pub p: f64,
}

/// Full diagnostics of one trajectory.
pub fn analyze_series(
    series: TrajectorySeries<'_>,
    options: &AnalysisOptions,
) -> Result<AnalysisReport, StatsError> {
    let returns = if options.use_log_returns {
        log_returns_from_prices(series.prices)?
    } else {
        returns_from_prices(series.prices)?
    };
    let abs_returns: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    let tail_alpha = hill_tail_exponent(&abs_returns, options.tail_fraction)?;
    let acf_signed = autocorrelation(&returns, options.max_lag)?;
    let acf_abs = autocorrelation(&abs_returns, options.max_lag)?;
    let episodes = detect_bubbles(
        series.kappas,
        series.p,
        series.prices,
        options.min_episode_len,
    );
    let wealth_ratio_end = series.w_noise.last().unwrap() / series.w_rational.last().unwrap();
    Ok(AnalysisReport {
        tail_alpha,
        acf_signed,
        acf_abs,
        episodes,
        wealth_ratio_end,
    })
}
