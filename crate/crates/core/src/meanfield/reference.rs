//! Empirical stand-in for the limit law: one run with many particles.

use super::quantize;
use crate::empirical::{empirical_measure, AtomicMeasure, Configuration};
use crate::error::{invalid, Result};
use crate::processes::TransitionKernel;
use crate::stream::RandomStream;

/// Stream tag for the initial draws. The draws use a fixed stream so that
/// deterministic kernels give seed-independent references; `seed` drives
/// the dynamics only.
const INITIAL_DRAW_SEED: u64 = 0x5EED_1A17;

/// Runs `kernel` for time `t` from `big_n` i.i.d. draws of `initial` and
/// returns the final empirical measure, quantized to at most `cap` atoms.
pub fn reference_limit_by_large_n(
    kernel: &TransitionKernel,
    initial: &AtomicMeasure,
    t: f64,
    big_n: usize,
    seed: u64,
    cap: usize,
) -> Result<AtomicMeasure> {
    if big_n < 2 {
        return invalid("reference runs need at least two particles");
    }
    let mut draw = RandomStream::derived(INITIAL_DRAW_SEED, &[big_n as u64]);
    let start = Configuration::new(initial.sample(big_n, &mut draw))?;
    let mut rng = RandomStream::derived(seed, &[big_n as u64, 0x4C_494D_4954]);
    let out = kernel.run(&start, t, &mut rng)?;
    quantize(&empirical_measure(&out.config), cap)
}
