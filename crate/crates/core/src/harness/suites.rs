//! Fixed batteries of checks, in a fixed row order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::poisson::{cdf, expected_max, survival, Rate};

use super::appendix::{appendix_counterexample, sandwich_pass_fraction, BETA};
use super::lemmas::{perturbed_profile, t2_vs_largest_load, verify_case_lemma, CheckRow, EXACT_TOL};

/// `Σ_k k P[max = k]` with each CDF built by summing pmf terms in linear
/// space. Independent of the tail-sum engine; meant for loads below ~500.
pub fn series_oracle_emax(loads: &[f64]) -> f64 {
    let top = loads.iter().copied().fold(0.0, f64::max);
    let kmax = (top + 14.0 * top.sqrt() + 40.0).ceil() as usize;
    let cdfs: Vec<Vec<f64>> = loads
        .iter()
        .map(|&l| {
            let mut acc = 0.0;
            (0..=kmax)
                .map(|k| {
                    let ln_p = if l == 0.0 {
                        if k == 0 { 0.0 } else { f64::NEG_INFINITY }
                    } else {
                        k as f64 * l.ln() - l - libm::lgamma(k as f64 + 1.0)
                    };
                    acc += ln_p.exp();
                    acc.min(1.0)
                })
                .collect()
        })
        .collect();
    let mut prev = 0.0;
    let mut sum = 0.0;
    for k in 0..=kmax {
        let f: f64 = cdfs.iter().map(|c| c[k]).product();
        sum += k as f64 * (f - prev);
        prev = f;
    }
    sum
}

/// Tail-sum identity and CDF complement identity on a grid of rates.
pub fn identity_suite() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let vectors: [&[f64]; 6] = [&[1.0, 1.0], &[2.0, 2.0], &[0.5], &[5.0, 1.0], &[0.25, 3.0, 8.0, 8.0], &[40.0, 38.5, 12.0]];
    for v in vectors {
        let e = expected_max(v, EXACT_TOL)?;
        let s = series_oracle_emax(v);
        rows.push(CheckRow::new("tail_sum_identity", &format!("loads={v:?}"), (e - s).abs(), 1e-9, true));
    }
    for &l in &[0.01, 0.3, 1.0, 2.5, 10.0, 100.0, 1000.0] {
        let rate = Rate::new(l)?;
        let worst = (0..=(3.0 * l + 30.0) as i64)
            .map(|k| (cdf(rate, k) + survival(rate, k + 1) - 1.0).abs())
            .fold(0.0, f64::max);
        rows.push(CheckRow::new("cdf_complement", &format!("rate={l}"), worst, 1e-12, true));
    }
    Ok(rows)
}

/// Case 1 and Case 5 asserted on their reference profiles, the `t2`
/// lower bound on random profiles, and Cases 2 to 4 reported.
pub fn lemma_suite() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut case1 = vec![vec![3000.0; 100]];
    for seed in 0..10 {
        case1.push(perturbed_profile(100, 3000.0, 0.5, seed)?);
    }
    for p in &case1 {
        rows.extend(verify_case_lemma(1, p, 0.1)?.rows);
    }
    rows.extend(verify_case_lemma(5, &vec![1e-4; 200_000], 0.1)?.rows);
    for p in t2_profiles(50, 7) {
        rows.push(t2_vs_largest_load(&p)?);
    }
    for (case, mu) in [(2u8, 20.0), (3, 0.5), (4, 0.02)] {
        let p = perturbed_profile(1000, mu, 0.5, u64::from(case))?;
        rows.extend(verify_case_lemma(case, &p, 0.1)?.rows);
    }
    Ok(rows)
}

/// Random profiles whose largest load is 400, 1000 or 5000 in turn.
pub fn t2_profiles(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let mu1 = [400.0, 1000.0, 5000.0][i % 3];
            let m = rng.random_range(1..=40usize);
            let mut p: Vec<f64> = (1..m).map(|_| rng.random::<f64>() * mu1).collect();
            p.insert(rng.random_range(0..m), mu1);
            p
        })
        .collect()
}

/// Machine counts `10^k + 1` of the counterexample sweep.
pub const APPENDIX_EXPONENTS: [u32; 7] = [3, 4, 5, 6, 7, 8, 9];

/// Machine counts of the sandwich sweep.
pub const SANDWICH_MS: [u64; 4] = [1_000, 10_000, 100_000, 1_000_000];

pub const SANDWICH_POINTS: usize = 12;

/// The counterexample at `β = 1/1024`, asserted from `10^5 + 1` machines
/// on, and the sandwich reported across machine counts.
pub fn appendix_suite() -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    for k in APPENDIX_EXPONENTS {
        let m = 10u64.pow(k) + 1;
        let c = appendix_counterexample(m, BETA, std::f64::consts::E)?;
        let params = format!("m={m};beta={BETA};lambda={}", c.lambda);
        rows.push(CheckRow::new("lopsided_below_balanced", &params, c.lopsided, c.balanced, m > 100_000));
    }
    let mut prev = f64::NEG_INFINITY;
    for m in SANDWICH_MS {
        let (frac, reports) = sandwich_pass_fraction(m, SANDWICH_POINTS, 0.5)?;
        for r in &reports {
            let params = format!("m={m};lambda={};delta=0.5", r.lambda);
            rows.push(CheckRow::new("sandwich_lower", &params, r.lower, r.expected_max, false));
            rows.push(CheckRow::new("sandwich_upper", &params, r.expected_max, r.upper, false));
            let drift = (r.midpoint - r.midpoint_identity).abs();
            rows.push(CheckRow::new("midpoint_identity", &params, drift, 1e-9 * r.midpoint, true));
        }
        // non-decreasing pass fraction, as `prev <= frac`
        rows.push(CheckRow::new("sandwich_fraction_monotone", &format!("m={m}"), prev.max(0.0), frac, false));
        prev = frac;
    }
    Ok(rows)
}

/// Loads for exact-versus-sampled comparisons: mixed magnitudes.
pub fn monte_carlo_profiles(count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=8usize);
            (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..1.5))).collect()
        })
        .collect()
}

/// Asserted rows that do not hold.
pub fn failures(rows: &[CheckRow]) -> Vec<&CheckRow> {
    rows.iter().filter(|r| r.failed()).collect()
}
