//! Configuration integer programs over rounded job sizes, solved exactly by
//! dynamic programming over job profiles.
//!
//! A configuration is a vector `c` counting how many jobs of each distinct
//! size one machine receives. The program picks `m` configurations (the zero
//! configuration allowed) that together use every job exactly once and
//! minimize `Σ f(cᵀπ)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::instance::Assignment;

pub const DEFAULT_CONFIG_LIMIT: usize = 10_000_000;

const CAP_TOL: f64 = 1e-12;

/// Mixed-radix indexing of profiles `0 <= p <= n`, first component fastest.
/// Adding a nonzero vector always increases the index.
#[derive(Debug, Clone)]
pub(crate) struct ProfileSpace {
    counts: Vec<u32>,
    strides: Vec<usize>,
    size: usize,
}

impl ProfileSpace {
    pub(crate) fn new(counts: &[u32], limit: usize) -> Result<Self> {
        let mut strides = Vec::with_capacity(counts.len());
        let mut size: usize = 1;
        for &c in counts {
            strides.push(size);
            size = size
                .checked_mul(c as usize + 1)
                .filter(|&s| s <= limit)
                .ok_or(Error::StateBudget { limit })?;
        }
        Ok(ProfileSpace { counts: counts.to_vec(), strides, size })
    }

    pub(crate) fn size(&self) -> usize {
        self.size
    }

    pub(crate) fn full(&self) -> usize {
        self.size - 1
    }

    pub(crate) fn offset(&self, c: &[u32]) -> usize {
        c.iter().zip(&self.strides).map(|(&x, &s)| x as usize * s).sum()
    }

    pub(crate) fn decode(&self, mut index: usize) -> Vec<u32> {
        self.counts
            .iter()
            .map(|&c| {
                let r = c as usize + 1;
                let digit = index % r;
                index /= r;
                digit as u32
            })
            .collect()
    }

    /// Whether `p + c <= n` componentwise, for `p` given by its index.
    pub(crate) fn fits(&self, p: usize, c: &[u32]) -> bool {
        let mut index = p;
        for (k, &n) in self.counts.iter().enumerate() {
            let r = n as usize + 1;
            if (index % r) as u32 + c[k] > n {
                return false;
            }
            index /= r;
        }
        true
    }
}

/// Every `c >= 0` with `c <= n` and `cᵀπ <= cap`, with the first component
/// varying fastest.
pub fn enumerate_configs(pi: &[f64], n: &[u32], cap: f64) -> Result<Vec<Vec<u32>>> {
    enumerate_configs_limited(pi, n, cap, DEFAULT_CONFIG_LIMIT)
}

pub fn enumerate_configs_limited(pi: &[f64], n: &[u32], cap: f64, limit: usize) -> Result<Vec<Vec<u32>>> {
    if pi.len() != n.len() {
        return Err(Error::InvalidArgument("size and count vectors differ in length".into()));
    }
    if pi.iter().any(|&p| !(p > 0.0 && p.is_finite())) || pi.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("sizes must be positive and strictly increasing".into()));
    }
    let bound = cap * (1.0 + CAP_TOL);
    let d = pi.len();
    let mut out = Vec::new();
    let mut c = vec![0u32; d];
    let load = |c: &[u32]| c.iter().zip(pi).map(|(&x, &p)| x as f64 * p).sum::<f64>();
    if bound < 0.0 {
        return Ok(out);
    }
    loop {
        if out.len() == limit {
            return Err(Error::ConfigExplosion { limit });
        }
        out.push(c.clone());
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            c[i] += 1;
            if c[i] <= n[i] && load(&c) <= bound {
                break;
            }
            c[i] = 0;
            i += 1;
        }
    }
}

/// Distinct sizes, their multiplicities, the machine count, and the
/// configuration set under a per-machine load cap.
#[derive(Debug, Clone)]
pub struct ConfigModel {
    distinct_sizes: Vec<f64>,
    counts: Vec<u32>,
    machines: usize,
    cap: f64,
    configs: Vec<Vec<u32>>,
    loads: Vec<f64>,
}

impl ConfigModel {
    pub fn new(distinct_sizes: Vec<f64>, counts: Vec<u32>, machines: usize, cap: f64) -> Result<Self> {
        if machines == 0 {
            return Err(Error::InvalidArgument("at least one machine is required".into()));
        }
        let configs = enumerate_configs(&distinct_sizes, &counts, cap)?;
        let loads = configs
            .iter()
            .map(|c| c.iter().zip(&distinct_sizes).map(|(&x, &p)| x as f64 * p).sum())
            .collect();
        Ok(ConfigModel { distinct_sizes, counts, machines, cap, configs, loads })
    }

    /// Groups equal sizes of a job list into a model.
    pub fn from_sizes(sizes: &[f64], machines: usize, cap: f64) -> Result<Self> {
        let groups = crate::poisson::group_loads(sizes);
        if groups.first().is_some_and(|g| g.0 <= 0.0) {
            return Err(Error::InvalidArgument("configuration sizes must be positive".into()));
        }
        let (pi, n) = groups.into_iter().map(|(s, c)| (s, c as u32)).unzip();
        Self::new(pi, n, machines, cap)
    }

    pub fn distinct_sizes(&self) -> &[f64] {
        &self.distinct_sizes
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn configs(&self) -> &[Vec<u32>] {
        &self.configs
    }

    /// `cᵀπ` for each configuration.
    pub fn config_loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn job_count(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Multiplicities `x_c` of an optimal solution, one entry per configuration
/// of the model in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct IpSolution {
    pub objective: f64,
    pub multiplicities: Vec<u64>,
    /// Configuration index for each machine, nonzero configurations first.
    pub machine_configs: Vec<usize>,
}

impl IpSolution {
    /// Checks `Σ x_c = m` and `Σ x_c c = n`.
    pub fn check(&self, model: &ConfigModel) -> Result<()> {
        let total: u64 = self.multiplicities.iter().sum();
        if total != model.machines as u64 || self.machine_configs.len() != model.machines {
            return Err(Error::Inconsistent(format!("{total} configurations for {} machines", model.machines)));
        }
        let mut used = vec![0u64; model.counts.len()];
        for (c, &x) in model.configs.iter().zip(&self.multiplicities) {
            for (u, &ck) in used.iter_mut().zip(c) {
                *u += x * ck as u64;
            }
        }
        if used.iter().zip(&model.counts).any(|(&u, &n)| u != n as u64) {
            return Err(Error::Inconsistent("solution does not use every job exactly once".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Combine {
    Sum,
    Max,
}

impl Combine {
    fn apply(self, acc: f64, cost: f64) -> f64 {
        match self {
            Combine::Sum => acc + cost,
            Combine::Max => acc.max(cost),
        }
    }
}

/// Exact DP over `(nonzero configurations used, profile)`. Only strict
/// improvements replace a stored value, so the first optimum in iteration
/// order wins and results are deterministic.
pub(crate) fn solve_profile_dp(model: &ConfigModel, costs: &[f64], combine: Combine) -> Result<IpSolution> {
    let space = ProfileSpace::new(&model.counts, usize::MAX / 2)?;
    let total_jobs = model.job_count() as usize;
    let layers = model.machines.min(total_jobs);
    let zero_cost = costs[0];
    let nonzero: Vec<usize> = (1..model.configs.len()).collect();
    let offsets: Vec<usize> = model.configs.iter().map(|c| space.offset(c)).collect();

    // best[j][p] = (value, config added last) using j nonzero configurations
    let mut best: Vec<Vec<Option<(f64, u32)>>> = vec![vec![None; space.size()]; layers + 1];
    best[0][0] = Some((match combine {
        Combine::Sum => 0.0,
        Combine::Max => f64::NEG_INFINITY,
    }, 0));
    for j in 0..layers {
        let (done, rest) = best.split_at_mut(j + 1);
        let cur = &done[j];
        let next = &mut rest[0];
        for p in 0..space.size() {
            let Some((v, _)) = cur[p] else { continue };
            for &ci in &nonzero {
                if !space.fits(p, &model.configs[ci]) {
                    continue;
                }
                let q = p + offsets[ci];
                let nv = combine.apply(v, costs[ci]);
                if next[q].is_none_or(|(old, _)| nv < old) {
                    next[q] = Some((nv, ci as u32));
                }
            }
        }
    }
    let full = space.full();
    let mut choice: Option<(f64, usize)> = None;
    for (j, layer) in best.iter().enumerate() {
        let Some((v, _)) = layer[full] else { continue };
        let empty = model.machines - j;
        let total = match combine {
            Combine::Sum => v + empty as f64 * zero_cost,
            Combine::Max if empty > 0 => v.max(zero_cost),
            Combine::Max => v,
        };
        if choice.is_none_or(|(old, _)| total < old) {
            choice = Some((total, j));
        }
    }
    let (objective, used) =
        choice.ok_or_else(|| Error::Infeasible("no choice of configurations covers every job".into()))?;
    let mut machine_configs = Vec::with_capacity(model.machines);
    let mut p = full;
    for j in (1..=used).rev() {
        let (_, ci) = best[j][p].expect("trace follows stored states");
        machine_configs.push(ci as usize);
        p -= offsets[ci as usize];
    }
    debug_assert_eq!(p, 0);
    machine_configs.reverse();
    machine_configs.resize(model.machines, 0);
    let mut multiplicities = vec![0u64; model.configs.len()];
    for &c in &machine_configs {
        multiplicities[c] += 1;
    }
    let objective = if combine == Combine::Max && objective == f64::NEG_INFINITY { zero_cost } else { objective };
    let sol = IpSolution { objective, multiplicities, machine_configs };
    sol.check(model)?;
    Ok(sol)
}

/// Exact minimum of `Σ_c x_c f(cᵀπ)` over `Σ x_c = m`, `Σ x_c c = n`.
/// `f` is evaluated once per distinct configuration load.
pub fn solve_config_ip(model: &ConfigModel, f: impl Fn(f64) -> f64) -> Result<IpSolution> {
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let costs: Vec<f64> = model.loads.iter().map(|&l| *memo.entry(l.to_bits()).or_insert_with(|| f(l))).collect();
    if let Some(bad) = costs.iter().find(|c| c.is_nan()) {
        return Err(Error::InvalidArgument(format!("cost function returned {bad}")));
    }
    solve_profile_dp(model, &costs, Combine::Sum)
}

/// Expands a solution into an assignment of concrete jobs: machines take
/// their configurations in order and each slot of size `π_k` takes the
/// lowest-indexed unused job of that size.
pub fn extract_assignment(model: &ConfigModel, solution: &IpSolution, sizes: &[f64]) -> Result<Assignment> {
    let class_of = |s: f64| -> Option<usize> {
        let k = model.distinct_sizes.partition_point(|&p| p < s * (1.0 - CAP_TOL));
        (k < model.distinct_sizes.len() && (model.distinct_sizes[k] - s).abs() <= CAP_TOL * s.abs())
            .then_some(k)
    };
    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); model.distinct_sizes.len()];
    for (i, &s) in sizes.iter().enumerate() {
        let k = class_of(s).ok_or_else(|| Error::Inconsistent(format!("job {i} of size {s} matches no size class")))?;
        pools[k].push(i);
    }
    if pools.iter().zip(&model.counts).any(|(p, &n)| p.len() != n as usize) {
        return Err(Error::Inconsistent("job list does not match the model's multiplicities".into()));
    }
    let mut next = vec![0usize; pools.len()];
    let mut mapping = vec![0usize; sizes.len()];
    for (machine, &ci) in solution.machine_configs.iter().enumerate() {
        for (k, &count) in model.configs[ci].iter().enumerate() {
            for _ in 0..count {
                let job = *pools[k]
                    .get(next[k])
                    .ok_or_else(|| Error::Inconsistent("configurations use more jobs than exist".into()))?;
                mapping[job] = machine;
                next[k] += 1;
            }
        }
    }
    if next.iter().zip(&pools).any(|(&u, p)| u != p.len()) {
        return Err(Error::Inconsistent("configurations leave jobs unassigned".into()));
    }
    Assignment::new(sizes, model.machines, mapping)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_order_and_count() {
        let q = enumerate_configs(&[1.0, 2.0], &[4, 2], 4.0).unwrap();
        let expect: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![1, 0],
            vec![2, 0],
            vec![3, 0],
            vec![4, 0],
            vec![0, 1],
            vec![1, 1],
            vec![2, 1],
            vec![0, 2],
        ];
        assert_eq!(q, expect);
        assert_eq!(enumerate_configs(&[1.0, 2.0], &[4, 2], 0.5).unwrap(), vec![vec![0, 0]]);
        assert!(matches!(
            enumerate_configs_limited(&[1.0], &[100], 100.0, 10),
            Err(Error::ConfigExplosion { limit: 10 })
        ));
        assert!(enumerate_configs(&[2.0, 1.0], &[1, 1], 4.0).is_err());
    }

    #[test]
    fn squared_costs_pick_the_even_split() {
        let model = ConfigModel::new(vec![1.0, 2.0], vec![2, 1], 2, 4.0).unwrap();
        let sol = solve_config_ip(&model, |x| x * x).unwrap();
        assert!((sol.objective - 8.0).abs() < 1e-12);
        let a = extract_assignment(&model, &sol, &[1.0, 2.0, 1.0]).unwrap();
        let mut loads = a.loads().to_vec();
        loads.sort_by(f64::total_cmp);
        assert_eq!(loads, vec![2.0, 2.0]);
    }

    #[test]
    fn linear_costs_conserve_mass() {
        let model = ConfigModel::new(vec![0.5, 1.5, 2.0], vec![3, 2, 1], 3, 6.0).unwrap();
        let sol = solve_config_ip(&model, |x| x).unwrap();
        assert!((sol.objective - 6.5).abs() < 1e-12);
        assert_eq!(sol.multiplicities.iter().sum::<u64>(), 3);
    }

    #[test]
    fn infeasible_when_a_job_exceeds_the_cap() {
        let model = ConfigModel::new(vec![1.0, 5.0], vec![1, 1], 2, 4.0).unwrap();
        assert!(matches!(solve_config_ip(&model, |x| x), Err(Error::Infeasible(_))));
        let crowded = ConfigModel::new(vec![3.0], vec![3], 2, 4.0).unwrap();
        assert!(solve_config_ip(&crowded, |_| 0.0).is_err());
    }

    #[test]
    fn single_machine_takes_everything() {
        let model = ConfigModel::new(vec![1.0, 2.0], vec![2, 1], 1, 4.0).unwrap();
        let sol = solve_config_ip(&model, |x| x).unwrap();
        let a = extract_assignment(&model, &sol, &[2.0, 1.0, 1.0]).unwrap();
        assert_eq!(a.mapping(), &[0, 0, 0]);
    }

    #[test]
    fn repeated_configuration_spreads_jobs() {
        let model = ConfigModel::new(vec![1.0], vec![3], 3, 1.0).unwrap();
        let sol = solve_config_ip(&model, |x| x * x).unwrap();
        let a = extract_assignment(&model, &sol, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(a.mapping(), &[0, 1, 2]);
    }

    #[test]
    fn max_combination_minimizes_the_largest_load() {
        let model = ConfigModel::from_sizes(&[3.0, 3.0, 2.0, 2.0, 2.0], 2, 12.0).unwrap();
        let sol = solve_profile_dp(&model, model.config_loads(), Combine::Max).unwrap();
        assert_eq!(sol.objective, 6.0);
    }

    #[test]
    fn profile_space_roundtrip() {
        let s = ProfileSpace::new(&[2, 0, 3], 100).unwrap();
        assert_eq!(s.size(), 12);
        for i in 0..s.size() {
            assert_eq!(s.offset(&s.decode(i)), i);
        }
        assert!(s.fits(0, &[2, 0, 3]));
        assert!(!s.fits(s.offset(&[1, 0, 0]), &[2, 0, 0]));
    }
}
