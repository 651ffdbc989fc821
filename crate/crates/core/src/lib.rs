//! Exact simulation and verification of the classical bi-Poisson process.
//!
//! The process `(X_t)` is the quadratic harness with parameters `η = θ > 0`
//! and `q = 1`. It is built from an integer-valued Markov process `(Z_t)`
//! through the affine map
//!
//! ```text
//! X_t = θ(1-t) Z_t - t/θ    0 <= t < 1
//! X_1 = θ Z_1 - 1/θ
//! X_t = θ(t-1) Z_t - 1/θ    t > 1
//! ```
//!
//! where `Z` is a linear pure birth process with immigration on `[0, 1)`,
//! takes a gamma-distributed real value at `t = 1`, and is a pure death
//! process with a Poisson entrance law on `(1, ∞)`.
//!
//! The crate is organised around the pieces of that construction:
//!
//! * [`dists`]: the four laws that appear as transition probabilities.
//! * [`kernel`]: marginals, forward kernels, conditional MGFs and
//!   Chapman–Kolmogorov checks.
//! * [`bridge`]: two-sided conditional laws `L(Z_t | Z_s, Z_u)`.
//! * [`trajectory`]: exact path simulation and jump-time laws.
//! * [`verify`]: reproducible checks of every distributional identity.

pub mod bridge;
pub mod dists;
pub mod kernel;
pub mod numerics;
pub mod report;
pub mod rng;
pub mod trajectory;
pub mod verify;

pub use bridge::{BridgeCase, BridgeError, BridgeLaw, BridgeQuery, Orientation};
pub use dists::{LawError, State, TransitionLaw};
pub use kernel::{
    forward_kernel, kernel_log_mass, marginal, reduce_params, verify_ck, Kernel, KernelCase,
    KernelError, KernelQuery, ProcessParams, Reduction, Tolerances,
};
pub use report::{Diagnostics, Method, VerificationReport};
pub use rng::SimRng;
pub use trajectory::{SimulationConfig, Trajectory, XPoint};
