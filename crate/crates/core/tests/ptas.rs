use std::collections::HashMap;

use pbalance::harness::brute_force_opt;
use pbalance::instance::{peel_big_jobs, JobInstance};
use pbalance::ptas::{describe_run, ptas_solve, ptas_solve_forced};
use pbalance::transition::CaseTag;

fn suite() -> Vec<JobInstance> {
    let pool = [0.25, 1.0, 2.0, 6.0];
    let mut out = Vec::new();
    for n in 1..=5usize {
        for code in 0..pool.len().pow(n as u32) {
            let sizes: Vec<f64> = (0..n).map(|i| pool[code / pool.len().pow(i as u32) % pool.len()]).collect();
            if sizes.windows(2).any(|w| w[0] > w[1]) {
                continue;
            }
            for m in 1..=3 {
                out.push(JobInstance::new(m, sizes.clone()).unwrap());
            }
        }
    }
    out
}

#[test]
fn within_one_plus_epsilon_of_optimum() {
    let instances = suite();
    let opts: Vec<f64> = instances.iter().map(|i| brute_force_opt(i, 1e-12).unwrap().1).collect();
    for eps in [0.3, 0.5, 0.99] {
        for (inst, &opt) in instances.iter().zip(&opts) {
            let got = ptas_solve(inst, eps).unwrap().expected_max(1e-12).unwrap();
            assert!(got <= (1.0 + eps) * opt + 1e-9, "eps {eps}, {:?} on {}: {got} vs {opt}", inst.sizes(), inst.machines());
        }
    }
}

#[test]
fn peeled_jobs_keep_their_own_machine() {
    for inst in suite() {
        let a = ptas_solve(&inst, 0.5).unwrap();
        assert_eq!(a.mapping().len(), inst.len());
        let peel = peel_big_jobs(&inst).unwrap();
        let mut per_machine: HashMap<usize, usize> = HashMap::new();
        for &t in a.mapping() {
            *per_machine.entry(t).or_default() += 1;
        }
        for &j in &peel.big_jobs {
            assert_eq!(per_machine[&a.mapping()[j]], 1, "{:?} on {}", inst.sizes(), inst.machines());
        }
    }
}

#[test]
fn reports_describe_the_dispatch() {
    let inst = JobInstance::new(3, vec![10.0, 1.0, 1.0, 1.0]).unwrap();
    let r = describe_run(&inst, 0.5).unwrap();
    assert_eq!(r.big_jobs, 1);
    assert_eq!(r.m1, 2);
    assert!((r.mu - 1.5).abs() < 1e-15);
    assert!(!r.forced);
    assert_eq!(r.branch, CaseTag::Dp);

    let all = describe_run(&JobInstance::new(3, vec![1.0, 5.0]).unwrap(), 0.5).unwrap();
    assert_eq!(all.branch, CaseTag::AllPeeled);
}

#[test]
fn forced_branches_return_valid_assignments() {
    let inst = JobInstance::new(4, vec![0.5, 1.0, 1.0, 2.0, 0.25, 1.5, 0.75]).unwrap();
    let baseline = ptas_solve(&inst, 0.5).unwrap().expected_max(1e-12).unwrap();
    for branch in [CaseTag::Case1, CaseTag::Case2, CaseTag::Case3, CaseTag::Case4, CaseTag::Case5, CaseTag::Dp] {
        let (a, report) = match ptas_solve_forced(&inst, 0.5, branch) {
            Ok(x) => x,
            // a forced branch may refuse when its hypotheses fail
            Err(e) => {
                assert!(!e.is_input_error(), "{branch}: {e}");
                continue;
            }
        };
        assert!(report.forced);
        assert_eq!(report.branch, branch);
        assert_eq!(a.mapping().len(), inst.len());
        let total: f64 = a.loads().iter().sum();
        assert!((total - 7.0).abs() < 1e-12);
        assert!(a.expected_max(1e-12).unwrap() >= baseline * 0.5);
    }
}

#[test]
fn invalid_epsilon_is_rejected() {
    let inst = JobInstance::new(2, vec![1.0]).unwrap();
    assert!(ptas_solve(&inst, 0.0).is_err());
    assert!(ptas_solve(&inst, 1.0).is_err());
}
