use rand::Rng;

use super::Rate;

/// Below this mean, sample by sequential inversion; above, by PTRS.
const INVERSION_LIMIT: f64 = 30.0;

/// Draws one exact `Poi(rate)` variate.
pub fn sample_poisson<R: Rng + ?Sized>(rate: Rate, rng: &mut R) -> u64 {
    let lambda = rate.get();
    if lambda == 0.0 {
        0
    } else if lambda <= INVERSION_LIMIT {
        inversion(lambda, rng)
    } else {
        ptrs(lambda, rng)
    }
}

/// `max_j Poi(loads[j])`; 0 for an empty list.
pub fn sample_max<R: Rng + ?Sized>(loads: &[Rate], rng: &mut R) -> u64 {
    loads.iter().map(|&l| sample_poisson(l, rng)).max().unwrap_or(0)
}

fn inversion<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-lambda).exp();
    let mut cum = p;
    while u > cum {
        k += 1;
        p *= lambda / k as f64;
        let next = cum + p;
        if next == cum {
            // Remaining mass is below rounding; u fell in the last ulp.
            break;
        }
        cum = next;
    }
    k
}

/// Hörmann's transformed rejection with squeeze (PTRS).
fn ptrs<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -lambda + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::survival;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_is_always_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| sample_poisson(Rate::ZERO, &mut rng) == 0));
    }

    #[test]
    fn inversion_mean_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let rate = Rate::new(5.0).unwrap();
        let mean = (0..n).map(|_| sample_poisson(rate, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 5.0).abs() < 3.0 * (5.0f64 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn rejection_tail_frequency_matches_survival() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let rate = Rate::new(50.0).unwrap();
        let hits = (0..n).filter(|_| sample_poisson(rate, &mut rng) >= 60).count();
        let p = survival(rate, 60);
        let freq = hits as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * sigma, "{freq} vs {p}");
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample_poisson(Rate::new(42.0).unwrap(), &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }
}
