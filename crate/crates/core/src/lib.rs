//! Simulation and closed-form analysis of a BD-RIS assisted cell-free
//! massive MIMO network with simultaneous wireless information and power
//! transfer.
//!
//! Access points run in one of two modes: information APs serve the
//! information users with partial zero-forcing, energy APs beam power to the
//! energy users with protective MRT. A beyond-diagonal RIS near the energy
//! users adds a cascaded path to every AP-to-EU channel.
//!
//! The crate is layered bottom-up:
//!
//! - [`config`] and [`topology`]: scalar parameters, geometry, large-scale fading.
//! - [`ris_channel`]: RIS correlation, small-scale channel sampling, aggregated EU channels.
//! - [`estimation`]: uplink pilot training and estimate variances.
//! - [`scattering`]: random, heuristic and absent scattering matrices.
//! - [`precoding`]: PZF / PMRT precoders and power control.
//! - [`metrics`]: closed-form SINR, SE and harvested energy.
//! - [`oracles`]: Monte Carlo estimators that check every closed form.
//! - [`experiment`] and [`report`]: parameter sweeps and CSV/JSON output.

pub mod config;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod oracles;
pub mod precoding;
pub mod report;
pub mod ris_channel;
pub mod rng;
pub mod scattering;
pub mod topology;

pub use config::{apply_overrides, build_config, PowerRule, RisLinkModel, SystemConfig};
pub use error::{Error, Result};
pub use estimation::{gamma_coefficient, run_pilot_phase, EstimateSet, LargeScaleStats};
pub use experiment::{run_sweep, Design, ResultRow, SweepParam, SweepSpec};
pub use linalg::{CMat, CVec, C64};
pub use metrics::{MetricsReport, NetworkStatistics};
pub use precoding::{PowerCoefficients, PrecoderSet};
pub use report::{emit_report, read_json, ReportDocument, ReportFormat};
pub use ris_channel::{ChannelSet, CorrelationModel};
pub use scattering::ScatteringMatrix;
pub use topology::NetworkRealization;
