//! Model parameters and their validation.

use serde::{Deserialize, Serialize};

use crate::error::ValidationError;

/// Momentum memory horizon in steps, `T_H = 1/(1 - theta)`.
pub const MOMENTUM_HORIZON: f64 = 20.0;

/// All exogenous constants of the market system.
///
/// Field names double as the keys of the flat JSON config document, so they
/// are kept short and stable. Defaults reproduce the daily calibration used
/// throughout: one step is one trading day and a simulation covers 20 trading
/// years (`t_max = 5000`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Fraction of rational wealth held in the risky asset, in (0, 1).
    pub x: f64,
    /// Momentum memory factor in [0, 1); memory length is 1/(1-theta) steps.
    pub theta: f64,
    /// Number of noise traders.
    pub n_noise: u64,
    /// Baseline flip probability per step, in (0, 1). Positions held for
    /// about 2/p steps absent any social or momentum signal.
    pub p: f64,
    /// Mean dividend-price ratio per step.
    pub r: f64,
    /// Standard deviation of the dividend-price ratio per step.
    pub sigma_r: f64,
    /// Risk-free rate per step.
    pub r_f: f64,
    /// Mean-reversion level of the social-coupling process.
    pub mu_kappa: f64,
    /// Step size of the social-coupling process, >= 0.
    pub sigma_kappa: f64,
    /// Mean-reversion rate of the social-coupling process, > 0.
    pub eta: f64,
    /// Initial wealth ratio of noise traders to rational investors, > 0.
    pub nu: f64,
    /// Number of steps to simulate.
    pub t_max: u64,
}

impl Default for ModelParams {
    /// Daily calibration: 2% annualized risk-free rate, dividend-price ratio
    /// from Engsted-Pedersen country averages, momentum memory of one month,
    /// and a social-coupling process parked 2% below its critical value.
    fn default() -> Self {
        ModelParams {
            x: 0.3,
            theta: 0.95,
            n_noise: 1000,
            p: 0.2,
            r: 1.6e-4,
            sigma_r: 9.5e-4,
            r_f: 8e-5,
            mu_kappa: 0.196,
            // 0.1 * p * sqrt(2 * eta) with eta rounded to 0.11, so that the
            // stationary std of kappa is close to 0.1 * p.
            sigma_kappa: 0.00938,
            eta: DEFAULT_ETA,
            nu: 1.0,
            t_max: 5000,
        }
    }
}

/// Mean-reversion rate such that a 2-sigma supercritical excursion reverts
/// within the momentum horizon: `ln(10) / 20`.
pub const DEFAULT_ETA: f64 = 0.11512925464970229;

impl ModelParams {
    /// Checks every parameter bound, reporting the first offending field.
    pub fn validate(&self) -> Result<(), ValidationError> {
        fn fail(key: &str, reason: &str) -> Result<(), ValidationError> {
            Err(ValidationError {
                key: key.to_string(),
                reason: reason.to_string(),
            })
        }
        if !(self.x > 0.0 && self.x < 1.0) {
            return fail("x", "must lie strictly inside (0, 1)");
        }
        if !(self.theta >= 0.0 && self.theta < 1.0) {
            return fail("theta", "must lie in [0, 1)");
        }
        if self.n_noise < 1 {
            return fail("n_noise", "must be at least 1");
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return fail("p", "must lie strictly inside (0, 1)");
        }
        if !self.r.is_finite() {
            return fail("r", "must be finite");
        }
        if !(self.sigma_r >= 0.0) {
            return fail("sigma_r", "must be non-negative");
        }
        if !self.r_f.is_finite() {
            return fail("r_f", "must be finite");
        }
        if !(self.mu_kappa > 0.0 && self.mu_kappa < 1.0) {
            return fail("mu_kappa", "must lie strictly inside (0, 1)");
        }
        if !(self.sigma_kappa >= 0.0) {
            return fail("sigma_kappa", "must be non-negative");
        }
        if !(self.eta > 0.0) {
            return fail("eta", "must be positive");
        }
        if !(self.nu > 0.0) {
            return fail("nu", "must be positive");
        }
        if self.t_max == 0 {
            return fail("t_max", "must be at least 1");
        }
        Ok(())
    }

    /// Momentum memory length in steps, `1/(1-theta)`.
    pub fn momentum_memory(&self) -> f64 {
        1.0 / (1.0 - self.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelParams::default().validate().unwrap();
    }

    #[test]
    fn default_values_match_daily_calibration() {
        let p = ModelParams::default();
        assert_eq!(p.theta, 0.95);
        assert_eq!(p.r, 1.6e-4);
        assert_eq!(p.sigma_r, 9.5e-4);
        assert_eq!(p.r_f, 8e-5);
        assert_eq!(p.x, 0.3);
        assert_eq!(p.p, 0.2);
        assert_eq!(p.mu_kappa, 0.196);
        assert_eq!(p.nu, 1.0);
        assert_eq!(p.t_max, 5000);
        assert!((p.eta - (10f64).ln() / 20.0).abs() < 1e-15);
        // Momentum memory of one month of trading days.
        assert!((p.momentum_memory() - MOMENTUM_HORIZON).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_fields_are_named() {
        let mut p = ModelParams {
            x: 1.5,
            ..Default::default()
        };
        let err = p.validate().unwrap_err();
        assert_eq!(err.key, "x");

        p = ModelParams {
            theta: 1.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "theta");

        p = ModelParams {
            n_noise: 0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "n_noise");

        p = ModelParams {
            eta: 0.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "eta");

        p = ModelParams {
            nu: -1.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "nu");

        p = ModelParams {
            mu_kappa: 1.2,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().key, "mu_kappa");
    }
}
