//! Binary streaming codes for burst-erasure channels and three-node relay
//! networks.
//!
//! The library builds `(b, T')` point-to-point streaming codes from two
//! parity-matrix families, wires them into a source-relay-destination
//! pipeline with a decode-and-forward relay, and verifies the resulting
//! delay guarantees both by simulation and by an independent brute-force
//! oracle.

// Loop indices here are time steps and 1-based coordinates, not positions
// in a slice; enumerate() would obscure that.
#![allow(clippy::needless_range_loop)]

pub mod constructions;
pub mod error;
pub mod gf2;
pub mod oracle;
pub mod relay;
pub mod streaming_code;

pub use constructions::{
    build_tbsc, build_type_a, build_type_b, feasibility, predicted_profile_a, predicted_profile_b,
    rate_bound, reduced_p0_matrix, ConstructionPath, FeasibilityReport, Rational, TypeAParams,
    TypeBParams,
};
pub use error::{Error, Result};
pub use gf2::{BinMatrix, IncrementalSolver};
pub use oracle::{
    enumerate_schedules, oracle_recovery_times, recovery_matrix, verify_tbsc, VerificationReport,
    VerifyMode,
};
pub use relay::{
    default_horizon, relay_lag, simulate_network, simulate_with_random_source, worst_case_delays,
    Relay, RelayNetworkSpec, SimulationReport,
};
pub use streaming_code::{
    measure_delay_profile, Decoder, DelayProfile, Encoder, ErasureSchedule, Packet, StreamCodeSpec,
};
