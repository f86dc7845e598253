//! Simulator and analysis toolkit for a two-asset market populated by
//! rational investors and herding noise traders.
//!
//! Rational investors hold a constant fraction of wealth in the risky asset;
//! noise traders move in and out of it under social imitation and price
//! momentum, with a slowly mean-reverting coupling strength that sweeps the
//! system across its instability threshold. Market clearing matches the two
//! groups' excess demands each step. The crate provides:
//!
//! - [`engine`]: the exact stochastic update (opinion sampling, clearing,
//!   wealth, momentum, coupling process);
//! - [`deterministic`]: the shock-free reduction, its fixed points, their
//!   stability, and the super-exponential price law, used as an analytical
//!   oracle for the engine;
//! - [`stylized`]: heavy-tail, autocorrelation and bubble-episode
//!   diagnostics of simulated trajectories;
//! - [`runner`] / [`config`] / [`io`]: reproducible single runs and
//!   ensembles with flat-JSON configuration, CSV trajectories and JSON
//!   reports.
//!
//! Determinism contract: run `i` under master seed `S` draws from stream
//! `(S, i)`; outputs are a pure function of `(config, seed)` and never
//! depend on thread count or completion order.

pub mod config;
pub mod deterministic;
pub mod engine;
pub mod error;
pub mod io;
pub mod params;
pub mod rng;
pub mod runner;
pub mod state;
pub mod stylized;

pub use config::{load_config, load_config_file, serialize_config, ConfigError, RunConfig};
pub use deterministic::{FixedPoint, Stability};
pub use error::{AnalysisError, StatsError, StepError, ValidationError};
pub use params::ModelParams;
pub use runner::{run_ensemble, run_simulation, EnsembleSummary, RunAbort, Trajectory};
pub use state::{SimState, StepDraws, TrajectoryFrame};
pub use stylized::{AnalysisOptions, AnalysisReport, BubbleEpisode, SuperExpFit};
