//! Shared fixtures for the benchmarks.

use qdot_core::DoubleDotSpec;

/// One level per dot at 1, wire `2 - L/5`, L = 3.
pub fn three_state(v: f64) -> DoubleDotSpec {
    DoubleDotSpec::three_state(1.0, 2.0, -0.2, 3.0, 0.25, v)
}

/// Five levels per dot (11 states total), wire `1 - L/8` at L = 1.5.
pub fn eleven_state(v: f64) -> DoubleDotSpec {
    DoubleDotSpec::symmetric(
        vec![0.25, 1.0 / 3.0, 0.5, 0.75, 1.0],
        1.0,
        -0.125,
        1.5,
        0.2,
        v,
    )
}
