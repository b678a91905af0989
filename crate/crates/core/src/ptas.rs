//! The end-to-end approximation scheme: peel, round, classify, dispatch to
//! the case solver, convert back, and merge with the peeled jobs.

use serde::Serialize;

use crate::config_ip::{extract_assignment, solve_config_ip, ConfigModel, IpSolution};
use crate::det_sched::{det_schedule, merge_peeled};
use crate::dp_solver::{run_dp_detailed, DpParams, DpStats};
use crate::error::{Error, Result};
use crate::instance::{peel_big_jobs, Assignment, JobInstance, PeelResult};
use crate::poisson::{self, log_thr, Rate};
use crate::rounding::{round_instance, unround_assignment, RoundedInstance};
use crate::transition::{self, CaseTag, TransitionKind, TransitionPoint};

/// Solver statistics of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolverStats {
    pub rounded_jobs: usize,
    pub size_classes: usize,
    pub configs: usize,
    pub ip_solves: usize,
    pub dp: Option<DpStats>,
}

/// Which branch ran and the quantities that decided it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub branch: CaseTag,
    pub forced: bool,
    pub mu: f64,
    pub m1: usize,
    pub big_jobs: usize,
    pub delta: f64,
    pub transition: Option<TransitionPoint>,
    pub stats: SolverStats,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// Assignment whose expected maximum load is within `1+ε` of optimal.
pub fn ptas_solve(instance: &JobInstance, epsilon: f64) -> Result<Assignment> {
    Ok(run(instance, epsilon, None)?.0)
}

/// Diagnostic companion of [`ptas_solve`] with identical control flow.
pub fn describe_run(instance: &JobInstance, epsilon: f64) -> Result<RunReport> {
    Ok(run(instance, epsilon, None)?.1)
}

/// Dispatches to `branch` regardless of the guards. Test hook for branches
/// whose guards need astronomically many machines.
#[doc(hidden)]
pub fn ptas_solve_forced(instance: &JobInstance, epsilon: f64, branch: CaseTag) -> Result<(Assignment, RunReport)> {
    run(instance, epsilon, Some(branch))
}

struct Context<'a> {
    peel: &'a PeelResult,
    rounded: &'a RoundedInstance,
    epsilon: f64,
    delta: f64,
    stats: SolverStats,
    transition: Option<TransitionPoint>,
}

fn run(instance: &JobInstance, epsilon: f64, forced: Option<CaseTag>) -> Result<(Assignment, RunReport)> {
    check_epsilon(epsilon)?;
    let peel = peel_big_jobs(instance)?;
    let delta = epsilon / 1000.0;
    let mut report = RunReport {
        branch: CaseTag::AllPeeled,
        forced: forced.is_some(),
        mu: peel.mu,
        m1: peel.m1,
        big_jobs: peel.big_jobs.len(),
        delta,
        transition: None,
        stats: SolverStats::default(),
    };
    if peel.remaining_jobs.is_empty() && forced.is_none() {
        let a = merge_peeled(instance.sizes(), instance.machines(), &[], &[], &peel.big_jobs)?;
        return Ok((a, report));
    }
    let rounded = round_instance(&peel.remaining_sizes, peel.mu, delta)?;
    let branch = match forced {
        Some(b) => b,
        None => transition::classify(peel.mu, peel.m1, delta)?.tag,
    };
    report.branch = branch;
    report.stats.rounded_jobs = rounded.len();
    let mut ctx = Context { peel: &peel, rounded: &rounded, epsilon, delta, stats: report.stats.clone(), transition: None };
    let remaining_map = match branch {
        CaseTag::AllPeeled => {
            if !peel.remaining_jobs.is_empty() {
                return Err(Error::InvalidArgument("jobs remain after peeling".into()));
            }
            Vec::new()
        }
        CaseTag::Case1 | CaseTag::Case3 => {
            det_schedule(&peel.remaining_sizes, peel.m1, epsilon / 5.0)?.mapping().to_vec()
        }
        CaseTag::Case2 => case2(&mut ctx)?,
        CaseTag::Case4 => case4(&mut ctx, forced.is_none())?,
        CaseTag::Case5 => ip_on_rounded(&mut ctx, |x| x)?,
        CaseTag::Dp => dp(instance, &mut ctx)?,
    };
    report.stats = ctx.stats;
    report.transition = ctx.transition;
    let a = merge_peeled(instance.sizes(), instance.machines(), &peel.remaining_jobs, &remaining_map, &peel.big_jobs)?;
    Ok((a, report))
}

fn model_for(ctx: &mut Context) -> Result<ConfigModel> {
    let (pi, counts) = ctx.rounded.size_classes();
    let counts: Vec<u32> = counts.into_iter().map(|c| c as u32).collect();
    let model = ConfigModel::new(pi, counts, ctx.peel.m1, 4.0 * ctx.peel.mu)?;
    ctx.stats.size_classes = model.distinct_sizes().len();
    ctx.stats.configs = model.configs().len();
    Ok(model)
}

/// Machine map over the remaining jobs from an IP solution on rounded jobs.
fn unround(ctx: &Context, model: &ConfigModel, sol: &IpSolution) -> Result<Vec<usize>> {
    let on_rounded = extract_assignment(model, sol, ctx.rounded.rounded_sizes())?;
    let back = unround_assignment(ctx.rounded, &on_rounded)?;
    Ok(back.mapping().to_vec())
}

/// Everything on the first machine when all remaining jobs have size zero.
fn trivial_map(ctx: &Context) -> Option<Vec<usize>> {
    (ctx.peel.mu == 0.0).then(|| vec![0; ctx.peel.remaining_jobs.len()])
}

fn ip_on_rounded(ctx: &mut Context, f: impl Fn(f64) -> f64) -> Result<Vec<usize>> {
    if let Some(map) = trivial_map(ctx) {
        return Ok(map);
    }
    let model = model_for(ctx)?;
    let sol = solve_config_ip(&model, f)?;
    ctx.stats.ip_solves += 1;
    unround(ctx, &model, &sol)
}

/// Smallest integer `t` in `[⌊μ⌋, ⌈100 μ log m1⌉]` for which some
/// assignment has `Σ_j P[Poi(μ_j) > t] < 1/3`, then the solve at that `t`.
/// If no `t` in the range qualifies the upper end is used.
fn case2(ctx: &mut Context) -> Result<Vec<usize>> {
    if let Some(map) = trivial_map(ctx) {
        return Ok(map);
    }
    let mu = ctx.peel.mu;
    let model = model_for(ctx)?;
    let lo = mu.floor() as i64;
    let hi = ((100.0 * mu * log_thr(ctx.peel.m1 as f64)).ceil() as i64).max(lo);
    let mut solves = 0usize;
    let mut probe = |t: i64| -> Result<(bool, IpSolution)> {
        solves += 1;
        let sol = solve_config_ip(&model, |x| poisson::survival(Rate::new(x).unwrap(), t + 1))?;
        Ok((sol.objective < 1.0 / 3.0, sol))
    };
    let (mut a, mut b) = (lo, hi);
    if probe(a)?.0 {
        b = a;
    } else {
        // invariant: predicate fails at a; b is the candidate
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if probe(mid)?.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
    }
    let t2 = b;
    let (ok, sol) = probe(t2)?;
    if ok && t2 > lo && probe(t2 - 1)?.0 {
        return Err(Error::Inconsistent(format!("probe predicate is not monotone at t = {t2}")));
    }
    ctx.stats.ip_solves += solves;
    ctx.transition = Some(TransitionPoint { kind: TransitionKind::T2, value: t2 as f64 });
    unround(ctx, &model, &sol)
}

fn case4(ctx: &mut Context, guarded: bool) -> Result<Vec<usize>> {
    if let Some(map) = trivial_map(ctx) {
        return Ok(map);
    }
    let t4 = transition::t4_of(ctx.peel.m1 as u64, ctx.peel.mu)?;
    if guarded {
        transition::check_t4_bounds(t4, ctx.delta)?;
    }
    ctx.transition = Some(TransitionPoint { kind: TransitionKind::T4, value: t4 as f64 });
    ip_on_rounded(ctx, |x| -poisson::ln_cdf(Rate::new(x).unwrap(), t4 - 1))
}

fn dp(instance: &JobInstance, ctx: &mut Context) -> Result<Vec<usize>> {
    let params = DpParams::new(ctx.peel.big_sizes.clone(), ctx.peel.remaining_sizes.clone(), instance.machines(), ctx.epsilon);
    let out = run_dp_detailed(&params)?;
    ctx.stats.dp = Some(out.stats);
    let nb = ctx.peel.big_sizes.len();
    Ok(out.assignment.mapping()[nb..].to_vec())
}
