//! The stochastic market engine.
//!
//! One step advances the system in a fixed causal order: the social coupling
//! moves first, the noise traders reconsider their positions given yesterday's
//! opinion and momentum, the dividend shock realizes, the market clears so
//! that the two groups' excess demands cancel, wealths compound, and finally
//! the momentum average absorbs the new return.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Group, StepError};
use crate::params::ModelParams;
use crate::state::{opinion_index, SimState, StepDraws, TrajectoryFrame};

/// Buy/sell probabilities for one step, after clamping to [0, 1].
///
/// `p_minus` applies to traders currently out of the risky asset (buy side),
/// `p_plus` to invested traders (sell side). A positive combined signal
/// `s + h` encourages buying and discourages selling.
pub fn transition_probs(s: f64, h: f64, kappa: f64, p: f64) -> (f64, f64) {
    let signal = kappa * (s + h);
    let p_plus = 0.5 * (p - signal);
    let p_minus = 0.5 * (p + signal);
    (p_plus.clamp(0.0, 1.0), p_minus.clamp(0.0, 1.0))
}

/// Outcome of the aggregated opinion update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpinionUpdate {
    pub flips_out: u64,
    pub flips_in: u64,
    pub n_plus: u64,
    pub s: f64,
}

/// Samples every noise trader's decision exactly and aggregates.
///
/// Sell decisions among the `n_plus` invested traders are Binomial(n_plus,
/// p_plus); buy decisions among the rest are Binomial(n_noise - n_plus,
/// p_minus). Sampling is exact (no Gaussian approximation) so the master
/// equation semantics hold at small trader counts.
pub fn sample_opinion<R: Rng + ?Sized>(
    n_plus: u64,
    n_noise: u64,
    p_plus: f64,
    p_minus: f64,
    rng: &mut R,
) -> OpinionUpdate {
    let flips_out = sample_binomial(n_plus, p_plus, rng);
    let flips_in = sample_binomial(n_noise - n_plus, p_minus, rng);
    apply_flips(n_plus, n_noise, flips_out, flips_in)
}

fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p)
        .expect("probability already clamped to [0, 1]")
        .sample(rng)
}

fn apply_flips(n_plus: u64, n_noise: u64, flips_out: u64, flips_in: u64) -> OpinionUpdate {
    debug_assert!(flips_out <= n_plus);
    debug_assert!(flips_in <= n_noise - n_plus);
    let new_n_plus = n_plus - flips_out + flips_in;
    OpinionUpdate {
        flips_out,
        flips_in,
        n_plus: new_n_plus,
        s: opinion_index(new_n_plus, n_noise),
    }
}

/// Exact mean of the next opinion index given today's probabilities.
pub fn expected_opinion(s: f64, p_plus: f64, p_minus: f64) -> f64 {
    s + p_minus * (1.0 - s) - p_plus * (1.0 + s)
}

/// Dividend-price ratio for the step, `r + sigma_r * u` with `u ~ N(0,1)`.
/// The dividend paid is `d_t = price_{t-1} * div_ratio`.
pub fn draw_dividend_ratio<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.sample(StandardNormal);
    (dividend_ratio(params, u), u)
}

/// Dividend-price ratio for a given shock.
pub fn dividend_ratio(params: &ModelParams, u: f64) -> f64 {
    params.r + params.sigma_r * u
}

/// Price ratio `P_t / P_{t-1}` that clears the market.
///
/// At the returned ratio the excess demands of the two groups cancel
/// exactly; the denominator is positive whenever x is interior and wealths
/// are positive.
pub fn clearing_price(
    s_new: f64,
    s_old: f64,
    div_ratio: f64,
    w_rational: f64,
    w_noise: f64,
    params: &ModelParams,
) -> Result<f64, StepError> {
    let x = params.x;
    let gross_rf = 1.0 + params.r_f;
    let numerator = (1.0 + s_new) * (gross_rf * (1.0 - s_old) + div_ratio * (1.0 + s_old)) * w_noise
        + 4.0 * x * (gross_rf * (1.0 - x) + div_ratio * x) * w_rational;
    let denominator = (1.0 + s_old) * (1.0 - s_new) * w_noise + 4.0 * x * (1.0 - x) * w_rational;
    let ratio = numerator / denominator;
    if ratio <= 0.0 || !ratio.is_finite() {
        return Err(StepError::NonPositivePrice { ratio });
    }
    Ok(ratio)
}

/// Mean-reverting excess demand of the rational group, in currency units:
/// `x * W_{t-1} * [(1-x)((1+R_f) - ratio) + x * div_ratio]`.
pub fn excess_demand_rational(
    price_ratio: f64,
    div_ratio: f64,
    w_rational_prev: f64,
    params: &ModelParams,
) -> f64 {
    let x = params.x;
    x * w_rational_prev * ((1.0 - x) * ((1.0 + params.r_f) - price_ratio) + x * div_ratio)
}

/// Excess demand of the noise group, in currency units.
pub fn excess_demand_noise(
    s_new: f64,
    s_old: f64,
    price_ratio: f64,
    div_ratio: f64,
    w_noise_prev: f64,
    params: &ModelParams,
) -> f64 {
    let gross_rf = 1.0 + params.r_f;
    w_noise_prev / 4.0
        * ((1.0 + s_new) * (1.0 - s_old) * gross_rf - (1.0 - s_new) * (1.0 + s_old) * price_ratio
            + (1.0 + s_new) * (1.0 + s_old) * div_ratio)
}

/// Rational wealth update: constant fraction x in the risky asset.
pub fn update_wealth_rational(
    price_ratio: f64,
    div_ratio: f64,
    w_prev: f64,
    params: &ModelParams,
) -> Result<f64, StepError> {
    let x = params.x;
    let factor = x * (price_ratio + div_ratio) + (1.0 - x) * (1.0 + params.r_f);
    if factor <= 0.0 || !factor.is_finite() {
        return Err(StepError::NonPositiveWealth {
            factor,
            group: Group::Rational,
        });
    }
    Ok(w_prev * factor)
}

/// Noise wealth update: the invested fraction is yesterday's bullish share
/// `(1 + s_old) / 2`.
pub fn update_wealth_noise(
    s_old: f64,
    price_ratio: f64,
    div_ratio: f64,
    w_prev: f64,
    params: &ModelParams,
) -> Result<f64, StepError> {
    let invested = 0.5 * (1.0 + s_old);
    let factor = invested * (price_ratio + div_ratio) + (1.0 - invested) * (1.0 + params.r_f);
    if factor <= 0.0 || !factor.is_finite() {
        return Err(StepError::NonPositiveWealth {
            factor,
            group: Group::Noise,
        });
    }
    Ok(w_prev * factor)
}

/// Exponential moving average of simple returns.
pub fn update_momentum(h_prev: f64, price_ratio: f64, theta: f64) -> f64 {
    theta * h_prev + (1.0 - theta) * (price_ratio - 1.0)
}

/// One Euler step of the mean-reverting coupling process, clamped to [0, 1].
///
/// Only non-negative couplings are meaningful here (imitative traders); the
/// clamped upper range is absorbed by the probability clamping downstream.
pub fn ou_step_kappa(kappa_prev: f64, params: &ModelParams, v: f64) -> f64 {
    let kappa = kappa_prev + params.eta * (params.mu_kappa - kappa_prev) + params.sigma_kappa * v;
    kappa.clamp(0.0, 1.0)
}

/// Advances the state one step, sampling all shocks from `rng`.
pub fn step<R: Rng + ?Sized>(
    state: &SimState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<(SimState, TrajectoryFrame), StepError> {
    let v: f64 = rng.sample(StandardNormal);
    let kappa = ou_step_kappa(state.kappa, params, v);
    let (p_plus, p_minus) = transition_probs(state.s, state.h, kappa, params.p);
    let opinion = sample_opinion(state.n_plus, params.n_noise, p_plus, p_minus, rng);
    let (div_ratio, _u) = draw_dividend_ratio(params, rng);
    advance(state, params, kappa, p_plus, p_minus, opinion, div_ratio)
}

/// Advances the state one step with every random draw supplied by the
/// caller. `step` is this function driven by freshly sampled draws; tests
/// use it to replay or force specific shock paths.
pub fn step_with_draws(
    state: &SimState,
    params: &ModelParams,
    draws: StepDraws,
) -> Result<(SimState, TrajectoryFrame), StepError> {
    let kappa = ou_step_kappa(state.kappa, params, draws.v);
    let (p_plus, p_minus) = transition_probs(state.s, state.h, kappa, params.p);
    assert!(
        draws.flips_out <= state.n_plus && draws.flips_in <= params.n_noise - state.n_plus,
        "forced flip counts exceed group sizes"
    );
    let opinion = apply_flips(state.n_plus, params.n_noise, draws.flips_out, draws.flips_in);
    let div_ratio = dividend_ratio(params, draws.u);
    advance(state, params, kappa, p_plus, p_minus, opinion, div_ratio)
}

fn advance(
    state: &SimState,
    params: &ModelParams,
    kappa: f64,
    p_plus: f64,
    p_minus: f64,
    opinion: OpinionUpdate,
    div_ratio: f64,
) -> Result<(SimState, TrajectoryFrame), StepError> {
    let ratio = clearing_price(
        opinion.s,
        state.s,
        div_ratio,
        state.w_rational,
        state.w_noise,
        params,
    )?;
    let w_rational = update_wealth_rational(ratio, div_ratio, state.w_rational, params)?;
    let w_noise = update_wealth_noise(state.s, ratio, div_ratio, state.w_noise, params)?;
    let h = update_momentum(state.h, ratio, params.theta);

    let next = SimState {
        t: state.t + 1,
        price: state.price * ratio,
        s: opinion.s,
        h,
        kappa,
        w_rational,
        w_noise,
        n_plus: opinion.n_plus,
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
        div_ratio,
        p_plus,
        p_minus,
        n_plus: next.n_plus,
    };
    Ok((next, frame))
}
