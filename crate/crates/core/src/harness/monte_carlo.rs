use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poisson::{sample_max, Rate};

/// Trials are split into this many chunks, each with its own stream of one
/// seeded generator. The chunking is fixed so the estimate does not depend
/// on the thread count.
const CHUNKS: u64 = 64;

/// Sample mean of `max_j Poi(μ_j)` over `trials` draws and its standard
/// error. Deterministic per `seed`.
pub fn monte_carlo_emax(loads: &[f64], trials: u64, seed: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let rates: Vec<Rate> = loads.iter().map(|&x| Rate::new(x)).collect::<Result<_>>()?;
    let chunks = CHUNKS.min(trials);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = trials / chunks + u64::from(c < trials % chunks);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let x = sample_max(&rates, &mut rng) as f64;
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = parts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let n = trials as f64;
    let mean = s / n;
    let se = if trials > 1 { ((s2 - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt() } else { 0.0 };
    Ok((mean, se))
}
