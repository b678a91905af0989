//! Dynamic program over job profiles and discretized machine-load profiles,
//! used when the machine count is too small for any concentration case.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config_ip::{extract_assignment, ConfigModel, IpSolution, ProfileSpace};
use crate::error::{Error, Result};
use crate::det_sched::merge_peeled;
use crate::instance::{peel_big_jobs, Assignment, JobInstance};
use crate::poisson::{log_thr, DiscreteDist, LoadTables, NeumaierSum, TableCache};
use crate::rounding::{round_instance, unround_assignment};

pub const DEFAULT_STATE_BUDGET: usize = 100_000_000;

/// Smallest `log2 δ` used; the second term of `δ`'s definition is far below
/// this for every practical `ε`.
const LOG2_DELTA_FLOOR: f64 = -60.0;

const LEVEL_TOL: f64 = 1e-12;

/// Inputs of the dynamic program: jobs that sit alone (all above the
/// average `μ` of the others) and the jobs to be distributed.
#[derive(Debug, Clone, PartialEq)]
pub struct DpParams {
    pub big_sizes: Vec<f64>,
    pub small_sizes: Vec<f64>,
    pub machines: usize,
    pub epsilon: f64,
    pub state_budget: usize,
}

impl DpParams {
    pub fn new(big_sizes: Vec<f64>, small_sizes: Vec<f64>, machines: usize, epsilon: f64) -> Self {
        DpParams { big_sizes, small_sizes, machines, epsilon, state_budget: DEFAULT_STATE_BUDGET }
    }

    pub fn m1(&self) -> usize {
        self.machines.saturating_sub(self.big_sizes.len())
    }

    pub fn mu(&self) -> f64 {
        let m1 = self.m1();
        if m1 == 0 {
            return 0.0;
        }
        self.small_sizes.iter().copied().collect::<NeumaierSum>().total() / m1 as f64
    }

    /// `max(ε/(1000 m1), 2^{-10⁹/ε²})`, with the exponent floored at -60.
    pub fn delta(&self) -> f64 {
        let m1 = self.m1().max(1) as f64;
        let log2_second = (-1e9 / (self.epsilon * self.epsilon)).max(LOG2_DELTA_FLOOR);
        (self.epsilon / (1000.0 * m1)).max(log2_second.exp2())
    }

    /// `⌈1000 ε⁻² log(m1) max(μ, 1)⌉`, at least 1.
    pub fn u(&self) -> u64 {
        let m1 = self.m1().max(1) as f64;
        let raw = 1000.0 / (self.epsilon * self.epsilon) * log_thr(m1) * self.mu().max(1.0);
        (raw.ceil() as u64).max(1)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {}", self.epsilon)));
        }
        crate::poisson::check_loads(&self.big_sizes)?;
        crate::poisson::check_loads(&self.small_sizes)?;
        if self.big_sizes.len() > self.machines {
            return Err(Error::MachinesExhausted(format!(
                "{} lone jobs for {} machines",
                self.big_sizes.len(),
                self.machines
            )));
        }
        if self.m1() == 0 && !self.small_sizes.is_empty() {
            return Err(Error::MachinesExhausted("no machine left for the remaining jobs".into()));
        }
        let mu = self.mu();
        let slack = mu * (1.0 + 1e-12);
        if let Some(s) = self.small_sizes.iter().find(|&&s| s > slack) {
            return Err(Error::HypothesesViolated(format!("job {s} exceeds the average load {mu}")));
        }
        if let Some(s) = self.big_sizes.iter().find(|&&s| s <= mu) {
            return Err(Error::HypothesesViolated(format!("lone job {s} does not exceed the average load {mu}")));
        }
        let m1 = self.m1();
        let bound = 6_000_000.0 / (self.epsilon * self.epsilon) * log_thr(m1 as f64);
        if m1 >= 2 && mu > bound {
            return Err(Error::HypothesesViolated(format!("average load {mu} exceeds {bound}")));
        }
        Ok(())
    }
}

/// Geometric load levels `l_i = (μ/2)(1+δ)^i` for `i = 0..e`, the last one
/// the first to reach `4μ`. Levels are computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadGrid {
    base: f64,
    log_ratio: f64,
    count: usize,
}

impl LoadGrid {
    pub fn new(mu: f64, delta: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("load grid needs μ > 0 and δ in (0, 1), got {mu}, {delta}")));
        }
        let mut g = LoadGrid { base: mu / 2.0, log_ratio: delta.ln_1p(), count: usize::MAX };
        g.count = g.level_of(4.0 * mu) + 1;
        Ok(g)
    }

    pub fn level(&self, i: usize) -> f64 {
        self.base * (i as f64 * self.log_ratio).exp()
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Smallest `i` with `x <= l_i`.
    pub fn level_of(&self, x: f64) -> usize {
        let target = x * (1.0 - LEVEL_TOL);
        if target <= self.base {
            return 0;
        }
        let mut i = ((target / self.base).ln() / self.log_ratio).ceil().max(0.0) as usize;
        while i > 0 && self.level(i - 1) >= target {
            i -= 1;
        }
        while self.level(i) < target {
            i += 1;
        }
        i
    }
}

/// Sizes of the reachability computation, for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DpStats {
    pub levels: usize,
    pub size_classes: usize,
    pub configs: usize,
    pub job_profiles: usize,
    pub states: usize,
    pub complete_profiles: usize,
}

#[derive(Debug, Clone)]
pub struct DpOutcome {
    /// Lone jobs first (job `i` on machine `m1 + i`), then the others.
    pub assignment: Assignment,
    /// Truncated objective of the chosen load profile.
    pub objective: f64,
    pub stats: DpStats,
}

/// Evaluates the truncated objective for many load profiles that share the
/// lone jobs and the grid.
struct ProfileObjective<'a> {
    grid: &'a LoadGrid,
    extra: DiscreteDist,
    u: u64,
    cache: TableCache,
}

impl ProfileObjective<'_> {
    fn eval(&mut self, levels: &[u32]) -> f64 {
        let loads: Vec<f64> = levels.iter().map(|&i| self.grid.level(i as usize)).collect();
        LoadTables::from_loads_cached(&loads, &mut self.cache).mixed(&self.extra, self.u)
    }
}

/// `Σ_{x<u} P[X=x] (x + Σ_{y=x+1}^{u} P[max_i Poi(l_{k_i}) >= y])` with
/// `X` the maximum of the lone jobs (a point mass at 0 when there are none)
/// and `levels` the level index of every machine.
pub fn truncated_objective(levels: &[u32], grid: &LoadGrid, big_sizes: &[f64], u: u64) -> Result<f64> {
    if u < 1 {
        return Err(Error::InvalidArgument("truncation point u must be at least 1".into()));
    }
    if let Some(&bad) = levels.iter().find(|&&i| i as usize >= grid.len()) {
        return Err(Error::InvalidArgument(format!("level {bad} outside the grid of {} levels", grid.len())));
    }
    let extra = DiscreteDist::max_of_poissons(big_sizes)?;
    Ok(ProfileObjective { grid, extra, u, cache: TableCache::new() }.eval(levels))
}

pub fn run_dp(params: &DpParams) -> Result<Assignment> {
    Ok(run_dp_detailed(params)?.assignment)
}

/// Peels the instance and runs the DP on the remainder alone, for every
/// instance regardless of which branch the full scheme would take.
pub fn dp_solve(instance: &JobInstance, epsilon: f64) -> Result<Assignment> {
    let peel = peel_big_jobs(instance)?;
    let params = DpParams::new(peel.big_sizes.clone(), peel.remaining_sizes.clone(), instance.machines(), epsilon);
    let a = run_dp(&params)?;
    let map = &a.mapping()[peel.big_sizes.len()..];
    merge_peeled(instance.sizes(), instance.machines(), &peel.remaining_jobs, map, &peel.big_jobs)
}

fn lone_and_rest(params: &DpParams, small_map: &[usize]) -> Result<Assignment> {
    let m1 = params.m1();
    let mut sizes = params.big_sizes.clone();
    sizes.extend_from_slice(&params.small_sizes);
    let mut mapping: Vec<usize> = (0..params.big_sizes.len()).map(|i| m1 + i).collect();
    mapping.extend_from_slice(small_map);
    Assignment::new(&sizes, params.machines, mapping)
}

type Reached = Vec<BTreeMap<Vec<u32>, u32>>;

/// For each job profile index, the reachable sorted level multisets of the
/// nonempty machines, each with the configuration that first reached it.
fn reach(
    model: &ConfigModel,
    space: &ProfileSpace,
    level_of: &[u32],
    offsets: &[usize],
    m1: usize,
    budget: usize,
) -> Result<Reached> {
    let mut states: Reached = vec![BTreeMap::new(); space.size()];
    states[0].insert(Vec::new(), u32::MAX);
    let mut total_states = 1usize;
    for p in 0..space.size() {
        let here = std::mem::take(&mut states[p]);
        for key in here.keys() {
            if key.len() >= m1 {
                continue;
            }
            for ci in 1..model.configs().len() {
                if !space.fits(p, &model.configs()[ci]) {
                    continue;
                }
                let level = level_of[ci];
                let mut next = key.clone();
                let at = next.partition_point(|&x| x <= level);
                next.insert(at, level);
                let slot = &mut states[p + offsets[ci]];
                if !slot.contains_key(&next) {
                    slot.insert(next, ci as u32);
                    total_states += 1;
                    if total_states > budget {
                        return Err(Error::StateBudget { limit: budget });
                    }
                }
            }
        }
        states[p] = here;
    }
    Ok(states)
}

/// The rounded small jobs and every reachable `(job profile, level multiset)`
/// pair of the DP. Exposed for testing reachability against enumeration.
#[doc(hidden)]
#[derive(Debug, Clone)]
pub struct Reachability {
    pub distinct_sizes: Vec<f64>,
    pub counts: Vec<u32>,
    pub grid: LoadGrid,
    pub cap: f64,
    pub states: Vec<(Vec<u32>, Vec<u32>)>,
}

#[doc(hidden)]
pub fn reachable_states(params: &DpParams) -> Result<Reachability> {
    params.validate()?;
    let (m1, mu, delta) = (params.m1(), params.mu(), params.delta());
    if params.small_sizes.is_empty() || mu == 0.0 {
        return Err(Error::InvalidArgument("reachability needs small jobs of positive total size".into()));
    }
    let rounded = round_instance(&params.small_sizes, mu, delta)?;
    let (pi, counts) = rounded.size_classes();
    let counts: Vec<u32> = counts.into_iter().map(|c| c as u32).collect();
    let model = ConfigModel::new(pi, counts, m1, 4.0 * mu)?;
    let grid = LoadGrid::new(mu, delta)?;
    let space = ProfileSpace::new(model.counts(), params.state_budget)?;
    let level_of: Vec<u32> = model.config_loads().iter().map(|&l| grid.level_of(l) as u32).collect();
    let offsets: Vec<usize> = model.configs().iter().map(|c| space.offset(c)).collect();
    let reached = reach(&model, &space, &level_of, &offsets, m1, params.state_budget)?;
    let mut states = Vec::new();
    for (p, keys) in reached.iter().enumerate() {
        let profile = space.decode(p);
        states.extend(keys.keys().map(|k| (profile.clone(), k.clone())));
    }
    Ok(Reachability { distinct_sizes: model.distinct_sizes().to_vec(), counts: model.counts().to_vec(), grid, cap: model.cap(), states })
}

/// Runs the reachability DP over `(job profile, load profile)` pairs, picks
/// the complete load profile with the smallest truncated objective, and
/// converts the traced assignment of rounded jobs back to the originals.
pub fn run_dp_detailed(params: &DpParams) -> Result<DpOutcome> {
    params.validate()?;
    let m1 = params.m1();
    let mu = params.mu();
    let mut stats = DpStats::default();
    if params.small_sizes.is_empty() || mu == 0.0 {
        let assignment = lone_and_rest(params, &vec![0; params.small_sizes.len()])?;
        return Ok(DpOutcome { assignment, objective: f64::NAN, stats });
    }
    let delta = params.delta();
    let rounded = round_instance(&params.small_sizes, mu, delta)?;
    let (pi, counts) = rounded.size_classes();
    let counts: Vec<u32> = counts.into_iter().map(|c| c as u32).collect();
    let model = ConfigModel::new(pi, counts, m1, 4.0 * mu)?;
    let grid = LoadGrid::new(mu, delta)?;
    let space = ProfileSpace::new(model.counts(), params.state_budget)?;
    let level_of: Vec<u32> = model.config_loads().iter().map(|&l| grid.level_of(l) as u32).collect();
    let offsets: Vec<usize> = model.configs().iter().map(|c| space.offset(c)).collect();
    stats.levels = grid.len();
    stats.size_classes = model.distinct_sizes().len();
    stats.configs = model.configs().len();
    stats.job_profiles = space.size();

    let states = reach(&model, &space, &level_of, &offsets, m1, params.state_budget)?;
    let total_states: usize = states.iter().map(BTreeMap::len).sum();
    stats.states = total_states;

    let full = space.full();
    let mut objective = ProfileObjective {
        grid: &grid,
        extra: DiscreteDist::max_of_poissons(&params.big_sizes)?,
        u: params.u(),
        cache: TableCache::new(),
    };
    let mut best: Option<(f64, &Vec<u32>)> = None;
    for key in states[full].keys().filter(|k| k.len() == m1) {
        stats.complete_profiles += 1;
        let v = objective.eval(key);
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, key));
        }
    }
    let (value, key) = best.ok_or_else(|| Error::Inconsistent("no complete load profile is reachable".into()))?;

    let mut machine_configs = Vec::with_capacity(m1);
    let mut key = key.clone();
    let mut p = full;
    while p != 0 {
        let ci = states[p][&key] as usize;
        machine_configs.push(ci);
        let at = key.iter().position(|&x| x == level_of[ci]).expect("traced level is present");
        key.remove(at);
        p -= offsets[ci];
    }
    machine_configs.reverse();
    let mut multiplicities = vec![0u64; model.configs().len()];
    for &c in &machine_configs {
        multiplicities[c] += 1;
    }
    let sol = IpSolution { objective: value, multiplicities, machine_configs };
    sol.check(&model)?;
    let on_rounded = extract_assignment(&model, &sol, rounded.rounded_sizes())?;
    let back = unround_assignment(&rounded, &on_rounded)?;
    let assignment = lone_and_rest(params, back.mapping())?;
    Ok(DpOutcome { assignment, objective: value, stats })
}
