//! Quantum-jump Monte Carlo over the five-level model, click streams and
//! pulsed second-order correlations.

mod config;
mod engine;
mod g2;
mod stream;

pub use config::{PulseRole, SequencePulse, TrajectoryConfig};
pub use engine::{run_trajectories, run_trajectories_with_populations, PopulationCheckpoints};
pub use g2::{
    g2_histogram, g2_zero, g2_zero_with_error, gamma_t_sweep, CorrelationHistogram, SweepPoint,
};
pub use stream::{ClickChannel, ClickRecord, ClickStream, FreqLabel, StreamMeta};
