//! Benchmark fixtures shared by the bench targets.

use bipoisson::{ProcessParams, SimulationConfig};

/// Parameters benchmarked: a heavy-tailed, a central and a light-tailed case.
pub const THETAS: [f64; 3] = [0.5, 1.0, 2.0];

pub fn params(theta: f64) -> ProcessParams {
    ProcessParams::new(theta).expect("positive theta")
}

/// The unresolved window used by the Monte Carlo checks, and the tight
/// default used by the CLI.
pub fn simulation(window: f64) -> SimulationConfig {
    SimulationConfig {
        horizon: 3.0,
        window,
        k_max: 1_000_000,
    }
}
