//! Deterministic makespan minimization: an approximation scheme built on
//! peeling, rounding and an exact min-max profile DP, plus Graham's greedy.

use crate::config_ip::{extract_assignment, solve_profile_dp, Combine, ConfigModel};
use crate::error::{Error, Result};
use crate::instance::{peel_sizes, Assignment, JobInstance};
use crate::rounding::{round_instance, unround_assignment};

/// Places the remaining jobs' machine map and the peeled jobs into one
/// assignment: remaining machines come first, peeled job `i` (largest
/// first) gets machine `m1 + i`.
pub(crate) fn merge_peeled(
    sizes: &[f64],
    machines: usize,
    remaining_jobs: &[usize],
    remaining_map: &[usize],
    big_jobs: &[usize],
) -> Result<Assignment> {
    let m1 = machines - big_jobs.len();
    let mut mapping = vec![usize::MAX; sizes.len()];
    for (&job, &machine) in remaining_jobs.iter().zip(remaining_map) {
        if machine >= m1 {
            return Err(Error::MachineOutOfRange { index: machine, machines: m1 });
        }
        mapping[job] = machine;
    }
    for (i, &job) in big_jobs.iter().enumerate() {
        mapping[job] = m1 + i;
    }
    if mapping.contains(&usize::MAX) {
        return Err(Error::Inconsistent("a job was left unassigned".into()));
    }
    Assignment::new(sizes, machines, mapping)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// Assignment whose makespan is at most `(1+ε)` times the deterministic
/// optimum for the given sizes.
///
/// Jobs above the remaining average are peeled onto their own machines; the
/// rest are rounded with `δ = ε/10` and scheduled by an exact DP that
/// minimizes the largest configuration load under a cap of `4μ`, then
/// converted back to the original sizes. The two transfers cost factors
/// `1+3δ` and `1+5δ`, and `(1+3δ)(1+5δ) <= 1+ε` for `ε < 1`.
pub fn det_schedule(sizes: &[f64], machines: usize, epsilon: f64) -> Result<Assignment> {
    check_epsilon(epsilon)?;
    let inst = JobInstance::new(machines, sizes.to_vec())?;
    let peel = peel_sizes(inst.sizes(), machines)?;
    let remaining_map = schedule_remaining(&peel.remaining_sizes, peel.m1, peel.mu, epsilon / 10.0)?;
    merge_peeled(sizes, machines, &peel.remaining_jobs, &remaining_map, &peel.big_jobs)
}

/// Machine map over `sizes` (all at most `mu`, with `mu` their average over
/// `m1` machines) from the min-max profile DP.
fn schedule_remaining(sizes: &[f64], m1: usize, mu: f64, delta: f64) -> Result<Vec<usize>> {
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    if mu == 0.0 {
        return Ok(vec![0; sizes.len()]);
    }
    let rounded = round_instance(sizes, mu, delta)?;
    let (pi, counts) = rounded.size_classes();
    let counts: Vec<u32> = counts.into_iter().map(|c| c as u32).collect();
    let model = ConfigModel::new(pi, counts, m1, 4.0 * mu)?;
    let sol = solve_profile_dp(&model, model.config_loads(), Combine::Max)?;
    let on_rounded = extract_assignment(&model, &sol, rounded.rounded_sizes())?;
    let back = unround_assignment(&rounded, &on_rounded)?;
    Ok(back.mapping().to_vec())
}

/// Job order for [`graham_greedy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyOrder {
    /// Nonincreasing size, ties by job index.
    Lpt,
    /// Input order.
    Given,
}

/// Each job in turn goes to the currently least-loaded machine, ties to the
/// lowest machine index.
pub fn graham_greedy(sizes: &[f64], machines: usize, order: GreedyOrder) -> Result<Assignment> {
    JobInstance::new(machines, sizes.to_vec())?;
    let jobs: Vec<usize> = match order {
        GreedyOrder::Given => (0..sizes.len()).collect(),
        GreedyOrder::Lpt => {
            let mut o: Vec<usize> = (0..sizes.len()).collect();
            o.sort_by(|&a, &b| sizes[b].total_cmp(&sizes[a]).then(a.cmp(&b)));
            o
        }
    };
    let mut loads = vec![0.0f64; machines];
    let mut mapping = vec![0; sizes.len()];
    for j in jobs {
        let target = (0..machines).min_by(|&a, &b| loads[a].total_cmp(&loads[b]).then(a.cmp(&b))).unwrap();
        mapping[j] = target;
        loads[target] += sizes[j];
    }
    Assignment::new(sizes, machines, mapping)
}

/// Treats every Poisson job as a deterministic job of size equal to its
/// mean and schedules it with [`det_schedule`].
pub fn mean_substitution_solve(instance: &JobInstance, epsilon: f64) -> Result<Assignment> {
    det_schedule(instance.sizes(), instance.machines(), epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn few_jobs_run_alone() {
        let a = det_schedule(&[3.0, 1.0, 2.0], 4, 0.1).unwrap();
        assert_eq!(a.makespan(), 3.0);
        let mut used: Vec<usize> = a.mapping().to_vec();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), 3);
    }

    #[test]
    fn splits_threes_from_twos() {
        let a = det_schedule(&[3.0, 3.0, 2.0, 2.0, 2.0], 2, 0.1).unwrap();
        assert_eq!(a.makespan(), 6.0);
    }

    #[test]
    fn equal_sizes_balance_exactly() {
        let a = det_schedule(&[1.5; 9], 3, 0.2).unwrap();
        assert_eq!(a.loads(), &[4.5, 4.5, 4.5]);
    }

    #[test]
    fn greedy_examples() {
        let a = graham_greedy(&[3.0, 3.0, 2.0, 2.0, 2.0], 2, GreedyOrder::Lpt).unwrap();
        assert_eq!(a.loads(), &[7.0, 5.0]);
        let b = graham_greedy(&[2.0, 3.0, 1.0], 1, GreedyOrder::Given).unwrap();
        assert_eq!(b.loads(), &[6.0]);
        let c = graham_greedy(&[1.0, 5.0, 1.0], 2, GreedyOrder::Given).unwrap();
        assert_eq!(c.mapping(), &[0, 1, 0]);
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(det_schedule(&[1.0], 1, 0.0).is_err());
        assert!(det_schedule(&[1.0], 1, 1.0).is_err());
    }

    #[test]
    fn zero_sized_jobs_are_placed() {
        let a = det_schedule(&[0.0, 0.0, 0.0], 2, 0.5).unwrap();
        assert_eq!(a.loads(), &[0.0, 0.0]);
        let single = mean_substitution_solve(&JobInstance::new(3, vec![2.0]).unwrap(), 0.5).unwrap();
        assert_eq!(single.makespan(), 2.0);
    }
}
