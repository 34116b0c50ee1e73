//! Deterministic generators for compactly supported radial test data.

use crate::field::{RadialField, StatePair};
use crate::grid::RadialGrid;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Smooth compactly supported bump (1 - x²)⁴ on |x| < 1.
pub fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let y = 1.0 - x * x;
        y * y * y * y
    } else {
        0.0
    }
}

/// A random smooth field supported in [lo, hi]: a few bumps with random
/// centers, widths and amplitudes.
pub fn random_field(
    grid: &Arc<RadialGrid>,
    rng: &mut ChaCha8Rng,
    lo: f64,
    hi: f64,
    n_bumps: usize,
) -> RadialField {
    let mut terms = Vec::with_capacity(n_bumps);
    for _ in 0..n_bumps {
        let width = rng.gen_range(0.12..0.35) * (hi - lo);
        let center = rng.gen_range(lo + width..hi - width);
        let amp = rng.gen_range(-1.0..1.0);
        terms.push((center, width, amp));
    }
    RadialField::from_fn(grid.clone(), move |r| {
        terms
            .iter()
            .map(|&(c, w, a)| a * bump((r - c) / w))
            .sum()
    })
}

/// A random compactly supported state (both components in [lo, hi]).
pub fn random_state(
    grid: &Arc<RadialGrid>,
    rng: &mut ChaCha8Rng,
    lo: f64,
    hi: f64,
) -> StatePair {
    let pos = random_field(grid, rng, lo, hi, 3);
    let vel = random_field(grid, rng, lo, hi, 3);
    StatePair::new(pos, vel).expect("shared grid")
}
