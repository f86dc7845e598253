//! Deterministic reduction of the market system and its analysis.
//!
//! Dropping the dividend and coupling shocks and replacing the sampled
//! opinion by its expectation yields a five-variable deterministic system.
//! Holding the wealth ratio constant further reduces it to a planar
//! (opinion, momentum) map whose fixed points and stability are computed
//! here. These routines serve as an analytical oracle for the stochastic
//! engine and are deliberately implemented independently of it.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{AnalysisError, Group, StepError};
use crate::params::ModelParams;
use crate::state::{SimState, TrajectoryFrame};

/// Expected opinion update with clamped transition probabilities.
///
/// Inside the clamping region this is exactly the linear law
/// `(1 + kappa - p) s + kappa h`; outside it saturates, which is what keeps
/// supercritical growth bounded.
fn expected_opinion_update(s: f64, h: f64, kappa: f64, p: f64) -> f64 {
    let signal = kappa * (s + h);
    let p_sell = (0.5 * (p - signal)).clamp(0.0, 1.0);
    let p_buy = (0.5 * (p + signal)).clamp(0.0, 1.0);
    s + p_buy * (1.0 - s) - p_sell * (1.0 + s)
}

/// Deterministic clearing ratio with the dividend shock removed.
fn deterministic_price_ratio(
    s_new: f64,
    s_old: f64,
    w_rational: f64,
    w_noise: f64,
    params: &ModelParams,
) -> f64 {
    let x = params.x;
    let gross_rf = 1.0 + params.r_f;
    let r = params.r;
    ((1.0 + s_new) * (gross_rf * (1.0 - s_old) + r * (1.0 + s_old)) * w_noise
        + 4.0 * x * (gross_rf * (1.0 - x) + r * x) * w_rational)
        / ((1.0 + s_old) * (1.0 - s_new) * w_noise + 4.0 * x * (1.0 - x) * w_rational)
}

/// One step of the full deterministic system at fixed coupling.
///
/// The opinion index is tracked continuously here; `n_plus` in the returned
/// state is the nearest trader count and is informational only.
pub fn deterministic_step(
    state: &SimState,
    params: &ModelParams,
) -> Result<(SimState, TrajectoryFrame), StepError> {
    let kappa = state.kappa;
    let s_new = expected_opinion_update(state.s, state.h, kappa, params.p);
    let ratio = deterministic_price_ratio(s_new, state.s, state.w_rational, state.w_noise, params);
    if ratio <= 0.0 || !ratio.is_finite() {
        return Err(StepError::NonPositivePrice { ratio });
    }
    let r = params.r;
    let gross_rf = 1.0 + params.r_f;
    let rational_factor = params.x * (ratio + r) + (1.0 - params.x) * gross_rf;
    if rational_factor <= 0.0 {
        return Err(StepError::NonPositiveWealth {
            factor: rational_factor,
            group: Group::Rational,
        });
    }
    let invested = 0.5 * (1.0 + state.s);
    let noise_factor = invested * (ratio + r) + (1.0 - invested) * gross_rf;
    if noise_factor <= 0.0 {
        return Err(StepError::NonPositiveWealth {
            factor: noise_factor,
            group: Group::Noise,
        });
    }
    let h = params.theta * state.h + (1.0 - params.theta) * (ratio - 1.0);

    let signal = kappa * (state.s + state.h);
    let p_plus = (0.5 * (params.p - signal)).clamp(0.0, 1.0);
    let p_minus = (0.5 * (params.p + signal)).clamp(0.0, 1.0);

    let next = SimState {
        t: state.t + 1,
        price: state.price * ratio,
        s: s_new,
        h,
        kappa,
        w_rational: state.w_rational * rational_factor,
        w_noise: state.w_noise * noise_factor,
        n_plus: (0.5 * (1.0 + s_new) * params.n_noise as f64).round() as u64,
    };
    let frame = TrajectoryFrame {
        t: next.t,
        price: next.price,
        s: next.s,
        kappa: next.kappa,
        h: next.h,
        w_rational: next.w_rational,
        w_noise: next.w_noise,
        ret: ratio - 1.0,
        div_ratio: r,
        p_plus,
        p_minus,
        n_plus: next.n_plus,
    };
    Ok((next, frame))
}

/// State of the constant-wealth-ratio reduction: just opinion and momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub s: f64,
    pub h: f64,
}

/// One step of the planar (s, H) map with the wealth ratio pinned.
///
/// `wealth_ratio` is the noise-to-rational wealth ratio held constant; the
/// fixed-point analysis uses 1 (equal wealths).
pub fn reduced_step(
    state: ReducedState,
    kappa: f64,
    wealth_ratio: f64,
    params: &ModelParams,
) -> ReducedState {
    let s_new = expected_opinion_update(state.s, state.h, kappa, params.p);
    let ratio = deterministic_price_ratio(s_new, state.s, 1.0, wealth_ratio, params);
    ReducedState {
        s: s_new,
        h: params.theta * state.h + (1.0 - params.theta) * (ratio - 1.0),
    }
}

/// Stability class of a fixed point of the reduced map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// Spectral radii within this distance of 1 classify as marginal.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// A fixed point of the reduced (opinion, momentum) map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    /// Opinion index at the fixed point.
    pub s_star: f64,
    /// Momentum at the fixed point.
    pub h_star: f64,
    /// True iff `s_star` lies in the admissible domain [-1, 1].
    pub admissible: bool,
    /// Stability class; only computed for admissible fixed points.
    pub stability: Option<Stability>,
    /// Magnitude of the dominant eigenvalue of the linearized map.
    pub spectral_radius: Option<f64>,
}

/// Momentum level consistent with a stationary opinion `s` under equal
/// wealths: `H = R_f + r ((1+s)^2 + 4x^2) / ((1+s)(1-s) + 4x(1-x))`.
pub fn stationary_momentum(s: f64, params: &ModelParams) -> f64 {
    let x = params.x;
    params.r_f
        + params.r * ((1.0 + s) * (1.0 + s) + 4.0 * x * x)
            / ((1.0 + s) * (1.0 - s) + 4.0 * x * (1.0 - x))
}

/// All fixed points of the reduced map at the given fixed coupling.
///
/// The stationarity conditions combine into a cubic in `s`, solved
/// numerically through the companion matrix of its monic form; the
/// closed-form cubic is ill-conditioned as `kappa` approaches `p`. Real
/// roots are polished by Newton iteration and sorted by |s|.
pub fn find_fixed_points(
    params: &ModelParams,
    kappa: f64,
) -> Result<Vec<FixedPoint>, AnalysisError> {
    let p = params.p;
    if (p - kappa).abs() < 1e-12 {
        return Err(AnalysisError::DegenerateCoupling { kappa, p });
    }
    let x = params.x;
    let r = params.r;
    let r_f = params.r_f;
    let q = 1.0 + 4.0 * x - 4.0 * x * x; // (1+s)(1-s) + 4x(1-x) at s = 0
    let lead = kappa - p;
    // Monic cubic s^3 + a2 s^2 + a1 s + a0 = 0.
    let a2 = kappa * (r_f - r) / lead;
    let a1 = -q - 2.0 * kappa * r / lead;
    let a0 = -kappa * (r_f * q + r * (1.0 + 4.0 * x * x)) / lead;

    let mut roots: Vec<f64> = companion_real_roots(a2, a1, a0)
        .into_iter()
        .map(|root| polish_cubic_root(root, a2, a1, a0))
        .collect();
    roots.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    Ok(roots
        .into_iter()
        .map(|s_star| {
            let h_star = stationary_momentum(s_star, params);
            let admissible = s_star.abs() <= 1.0;
            let (stability, spectral_radius) = if admissible {
                let (st, radius) = classify_stability_at(s_star, params, kappa);
                (Some(st), Some(radius))
            } else {
                (None, None)
            };
            FixedPoint {
                s_star,
                h_star,
                admissible,
                stability,
                spectral_radius,
            }
        })
        .collect())
}

fn companion_real_roots(a2: f64, a1: f64, a0: f64) -> Vec<f64> {
    let companion = Matrix3::new(
        0.0, 0.0, -a0, //
        1.0, 0.0, -a1, //
        0.0, 1.0, -a2,
    );
    let eigen = companion.complex_eigenvalues();
    let scale = 1.0 + a2.abs().max(a1.abs()).max(a0.abs());
    eigen
        .iter()
        .filter(|ev| ev.im.abs() <= 1e-9 * scale)
        .map(|ev| ev.re)
        .collect()
}

fn polish_cubic_root(mut s: f64, a2: f64, a1: f64, a0: f64) -> f64 {
    for _ in 0..4 {
        let f = ((s + a2) * s + a1) * s + a0;
        let df = (3.0 * s + 2.0 * a2) * s + a1;
        if df.abs() < f64::MIN_POSITIVE {
            break;
        }
        let delta = f / df;
        s -= delta;
        if delta.abs() <= 1e-16 * (1.0 + s.abs()) {
            break;
        }
    }
    s
}

/// Stability of an admissible fixed point, from the analytic Jacobian of the
/// reduced map at equal wealths.
pub fn classify_stability(
    fp: &FixedPoint,
    params: &ModelParams,
    kappa: f64,
) -> (Stability, f64) {
    classify_stability_at(fp.s_star, params, kappa)
}

fn classify_stability_at(s_star: f64, params: &ModelParams, kappa: f64) -> (Stability, f64) {
    let jac = reduced_jacobian(s_star, params, kappa, 1.0);
    let radius = spectral_radius_2x2(jac);
    let stability = if (radius - 1.0).abs() <= MARGINAL_TOLERANCE {
        Stability::Marginal
    } else if radius < 1.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    (stability, radius)
}

/// Analytic Jacobian of the reduced map at a stationary point, with the
/// wealth ratio held at `omega`.
pub fn reduced_jacobian(s_star: f64, params: &ModelParams, kappa: f64, omega: f64) -> [[f64; 2]; 2] {
    let x = params.x;
    let r = params.r;
    let gross_rf = 1.0 + params.r_f;
    // ratio(a, b) = n(a, b) / d(a, b) with a the new and b the old opinion.
    let g = gross_rf * (1.0 - s_star) + r * (1.0 + s_star);
    let n = (1.0 + s_star) * g * omega + 4.0 * x * (gross_rf * (1.0 - x) + r * x);
    let d = (1.0 + s_star) * (1.0 - s_star) * omega + 4.0 * x * (1.0 - x);
    let dratio_da = (g * omega * d + n * (1.0 + s_star) * omega) / (d * d);
    let dratio_db = ((1.0 + s_star) * (r - gross_rf) * omega * d - n * (1.0 - s_star) * omega)
        / (d * d);

    let a_ss = 1.0 + kappa - params.p;
    let one_minus_theta = 1.0 - params.theta;
    [
        [a_ss, kappa],
        [
            one_minus_theta * (dratio_da * a_ss + dratio_db),
            params.theta + one_minus_theta * dratio_da * kappa,
        ],
    ]
}

fn spectral_radius_2x2(m: [[f64; 2]; 2]) -> f64 {
    let trace = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        (0.5 * (trace + root)).abs().max((0.5 * (trace - root)).abs())
    } else {
        // Complex conjugate pair: |lambda|^2 = det.
        det.sqrt()
    }
}

/// Log-price trajectory implied by exponentially growing opinion:
/// `log P(t) = b1 * s1 * (alpha1^t - 1) + log P0` for t = 0..=steps.
pub fn predict_superexp_logprice(
    s1: f64,
    alpha1: f64,
    b1: f64,
    p0: f64,
    steps: usize,
) -> Vec<f64> {
    let log_p0 = p0.ln();
    (0..=steps)
        .map(|t| b1 * s1 * (alpha1.powi(t as i32) - 1.0) + log_p0)
        .collect()
}

/// Stationary mean and standard deviation of the coupling process,
/// `(mu_kappa, sigma_kappa / sqrt(2 eta))`.
pub fn ou_stationary_moments(params: &ModelParams) -> (f64, f64) {
    (
        params.mu_kappa,
        params.sigma_kappa / (2.0 * params.eta).sqrt(),
    )
}

/// Expected number of steps for a supercritical coupling `kappa0 > p` to
/// revert below `p`: `(1/eta) ln((kappa0 - mu)/(p - mu))`.
pub fn ou_reversion_time(kappa0: f64, params: &ModelParams) -> Result<f64, AnalysisError> {
    let p = params.p;
    let mu = params.mu_kappa;
    if kappa0 < p || p <= mu {
        return Err(AnalysisError::NotSupercritical {
            kappa0,
            p,
            mu_kappa: mu,
        });
    }
    Ok(((kappa0 - mu) / (p - mu)).ln() / params.eta)
}

/// Clearing price with no noise traders in the market:
/// `P_t = (1 + R_f) P_{t-1} + x/(1-x) d_t`.
pub fn rational_only_price(p_prev: f64, dividend: f64, params: &ModelParams) -> f64 {
    (1.0 + params.r_f) * p_prev + params.x / (1.0 - params.x) * dividend
}
