//! Closed-form pressure of a ring of circumferential fibers at rest in a square box.

use std::f64::consts::PI;

/// Pressure at distance `r` from the ring center, normalized to zero mean
/// over the `l x l` box.
///
/// Inside the ring the pressure is the constant `p_i`, across the ring it
/// drops logarithmically, and outside it is the constant `p_o`.
pub fn analytic_ring_pressure(r: f64, inner_radius: f64, width: f64, edge_length: f64, modulus: f64) -> f64 {
    let outer = inner_radius + width;
    let shift = PI * modulus / (2.0 * edge_length * edge_length) * (outer * outer - inner_radius * inner_radius);
    if r <= inner_radius {
        modulus * (outer / inner_radius).ln() - shift
    } else if r < outer {
        modulus * (outer / r).ln() - shift
    } else {
        -shift
    }
}
