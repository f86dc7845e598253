//! Per-step simulation state and recording types.

use serde::{Deserialize, Serialize};

use crate::params::ModelParams;

/// Full market state after step `t`.
///
/// The opinion index is kept exactly on its lattice: `s = 2*n_plus/n_noise - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    /// Step index.
    pub t: u64,
    /// Risky-asset price, strictly positive.
    pub price: f64,
    /// Opinion index of the noise traders, in [-1, 1].
    pub s: f64,
    /// Momentum, an exponential moving average of past simple returns.
    pub h: f64,
    /// Current social-coupling strength.
    pub kappa: f64,
    /// Total wealth of the rational group, strictly positive.
    pub w_rational: f64,
    /// Total wealth of the noise group, strictly positive.
    pub w_noise: f64,
    /// Count of noise traders invested in the risky asset.
    pub n_plus: u64,
}

impl SimState {
    /// Initial state: unit price, balanced book (n_plus = n_noise/2 rounded
    /// down), zero momentum, coupling at its reversion level, unit rational
    /// wealth and noise wealth `nu`.
    pub fn initial(params: &ModelParams) -> Self {
        let n_plus = params.n_noise / 2;
        SimState {
            t: 0,
            price: 1.0,
            s: opinion_index(n_plus, params.n_noise),
            h: 0.0,
            kappa: params.mu_kappa,
            w_rational: 1.0,
            w_noise: params.nu,
            n_plus,
        }
    }
}

/// Opinion index on its exact lattice, `2*n_plus/n_noise - 1`.
pub fn opinion_index(n_plus: u64, n_noise: u64) -> f64 {
    2.0 * (n_plus as f64) / (n_noise as f64) - 1.0
}

/// The random draws consumed by one step, in consumption order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDraws {
    /// Standard normal shock of the coupling process.
    pub v: f64,
    /// Count of sell decisions among the invested noise traders.
    pub flips_out: u64,
    /// Count of buy decisions among the uninvested noise traders.
    pub flips_in: u64,
    /// Standard normal dividend shock.
    pub u: f64,
}

/// One recorded time step: the advanced state plus step-local quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub t: u64,
    pub price: f64,
    pub s: f64,
    pub kappa: f64,
    pub h: f64,
    pub w_rational: f64,
    pub w_noise: f64,
    /// Simple return over the step, `price_t / price_{t-1} - 1`, always > -1.
    pub ret: f64,
    /// Dividend-price ratio applied this step.
    pub div_ratio: f64,
    /// Applied buy probability (clamped).
    pub p_plus: f64,
    /// Applied sell probability (clamped).
    pub p_minus: f64,
    #[serde(skip)]
    pub n_plus: u64,
}

impl TrajectoryFrame {
    pub fn state(&self) -> SimState {
        SimState {
            t: self.t,
            price: self.price,
            s: self.s,
            h: self.h,
            kappa: self.kappa,
            w_rational: self.w_rational,
            w_noise: self.w_noise,
            n_plus: self.n_plus,
        }
    }
}
