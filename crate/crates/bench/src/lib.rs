//! Seeded inputs shared by the benchmarks.

use cobisim_core::fuzz::{self, Preset};
use cobisim_core::{Coalgebra, SituationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A system of the given preset with exactly `n` states.
pub fn system(preset: Preset, n: usize, seed: u64) -> (SituationConfig, Coalgebra) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let (cfg, c) = fuzz::system(&mut rng, preset, n, 2);
        if c.size() == n {
            return (cfg, c);
        }
    }
}

/// A subdistribution pair over `0..n` with weights in sixteenths.
pub fn dist_pair(n: usize, seed: u64) -> (Vec<(usize, cobisim_core::Rational)>, Vec<(usize, cobisim_core::Rational)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut one = || {
        let mut left = 16i64;
        let mut out = Vec::new();
        for t in 0..n {
            let w = rng.gen_range(0..=left);
            left -= w;
            if w > 0 {
                out.push((t, cobisim_core::Rational::new(w, 16)));
            }
        }
        out
    };
    (one(), one())
}
