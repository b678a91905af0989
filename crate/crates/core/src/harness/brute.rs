//! Exhaustive optimum over assignments up to machine relabeling.
//!
//! An assignment is canonical when machine blocks appear in order of their
//! smallest job index, i.e. its machine map is a restricted growth string:
//! `a[0] = 0` and `a[i] <= 1 + max(a[..i])`. Every set partition of the jobs
//! into at most `m` blocks appears exactly once.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::{Assignment, JobInstance};
use crate::poisson::{check_tol, LoadTables, TableCache};

pub const MAX_JOBS: usize = 12;
pub const MAX_MACHINES: usize = 4;

fn check_size(n: usize, m: usize) -> Result<()> {
    if n > MAX_JOBS || m > MAX_MACHINES {
        return Err(Error::SizeGuard(format!(
            "exhaustive search needs n <= {MAX_JOBS} and m <= {MAX_MACHINES}, got n = {n}, m = {m}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("at least one machine is required".into()));
    }
    Ok(())
}

/// Calls `visit` with every restricted growth string of length `n` using at
/// most `m` blocks, in lexicographic order, along with the block loads.
fn for_each_canonical(sizes: &[f64], m: usize, mut visit: impl FnMut(&[usize], &[f64])) {
    let n = sizes.len();
    let mut a = vec![0usize; n];
    let mut loads = vec![0.0f64; m];
    fn rec(
        i: usize,
        used: usize,
        sizes: &[f64],
        m: usize,
        a: &mut [usize],
        loads: &mut [f64],
        visit: &mut dyn FnMut(&[usize], &[f64]),
    ) {
        if i == sizes.len() {
            visit(a, loads);
            return;
        }
        for b in 0..(used + 1).min(m) {
            a[i] = b;
            let before = loads[b];
            loads[b] += sizes[i];
            rec(i + 1, used.max(b + 1), sizes, m, a, loads, visit);
            loads[b] = before;
        }
    }
    rec(0, 0, sizes, m, &mut a, &mut loads, &mut visit);
}

/// Number of canonical assignments of `n` jobs onto at most `m` machines.
pub fn count_canonical(n: usize, m: usize) -> u64 {
    let mut count = 0u64;
    if m == 0 {
        return u64::from(n == 0);
    }
    for_each_canonical(&vec![0.0; n], m, |_, _| count += 1);
    count
}

/// `S(n, k)` by `S(n, k) = k S(n-1, k) + S(n-1, k-1)`.
pub fn stirling2(n: usize, k: usize) -> u64 {
    let mut row = vec![0u64; k + 1];
    row[0] = 1;
    for _ in 0..n {
        for j in (1..=k).rev() {
            row[j] = j as u64 * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    row[k]
}

/// Sorted nonzero loads as a hashable key.
fn load_key(loads: &[f64]) -> Vec<u64> {
    let mut key: Vec<u64> = loads.iter().filter(|&&x| x != 0.0).map(|x| x.to_bits()).collect();
    key.sort_unstable();
    key
}

/// A minimizer of the exact expected maximum load and its value. Ties keep
/// the lexicographically first canonical assignment.
pub fn brute_force_opt(instance: &JobInstance, tail_tol: f64) -> Result<(Assignment, f64)> {
    check_tol(tail_tol)?;
    let (sizes, m) = (instance.sizes(), instance.machines());
    check_size(sizes.len(), m)?;
    let mut cache = TableCache::new();
    let mut memo: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_canonical(sizes, m, |a, loads| {
        let value = *memo
            .entry(load_key(loads))
            .or_insert_with(|| LoadTables::from_loads_cached(loads, &mut cache).expected_max(tail_tol));
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((a.to_vec(), value));
        }
    });
    let (mapping, value) = best.expect("at least one assignment exists");
    Ok((Assignment::new(sizes, m, mapping)?, value))
}

/// A minimizer of the deterministic makespan with the sizes as job lengths.
pub fn brute_force_makespan(sizes: &[f64], machines: usize) -> Result<(Assignment, f64)> {
    check_size(sizes.len(), machines)?;
    JobInstance::new(machines, sizes.to_vec())?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_canonical(sizes, machines, |a, loads| {
        let value = loads.iter().copied().fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(_, b)| value < *b) {
            best = Some((a.to_vec(), value));
        }
    });
    let (mapping, value) = best.expect("at least one assignment exists");
    Ok((Assignment::new(sizes, machines, mapping)?, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poisson::expected_max;

    #[test]
    fn canonical_count_matches_stirling_numbers() {
        for n in 0..=8 {
            for m in 1..=4 {
                let expect: u64 = (0..=m).map(|k| stirling2(n, k)).sum();
                assert_eq!(count_canonical(n, m), expect, "n = {n}, m = {m}");
            }
        }
        assert_eq!(stirling2(8, 3), 966);
    }

    #[test]
    fn single_job_runs_alone() {
        let inst = JobInstance::new(3, vec![2.5]).unwrap();
        let (_, v) = brute_force_opt(&inst, 1e-12).unwrap();
        assert!((v - 2.5).abs() < 1e-9);
    }

    #[test]
    fn four_unit_jobs_balance() {
        let inst = JobInstance::new(2, vec![1.0; 4]).unwrap();
        let (a, v) = brute_force_opt(&inst, 1e-12).unwrap();
        assert_eq!(a.loads(), &[2.0, 2.0]);
        assert!((v - 2.771505521452844).abs() < 1e-9);
    }

    #[test]
    fn two_jobs_split() {
        let inst = JobInstance::new(2, vec![5.0, 1.0]).unwrap();
        let (a, v) = brute_force_opt(&inst, 1e-12).unwrap();
        assert_eq!(a.mapping(), &[0, 1]);
        assert!((v - expected_max(&[5.0, 1.0], 1e-12).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        let inst = JobInstance::new(5, vec![1.0; 3]).unwrap();
        assert!(matches!(brute_force_opt(&inst, 1e-9), Err(Error::SizeGuard(_))));
        let inst = JobInstance::new(2, vec![1.0; 13]).unwrap();
        assert!(matches!(brute_force_opt(&inst, 1e-9), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn makespan_search() {
        let (_, v) = brute_force_makespan(&[3.0, 3.0, 2.0, 2.0, 2.0], 2).unwrap();
        assert_eq!(v, 6.0);
    }
}
