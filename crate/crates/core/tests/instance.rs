use std::collections::HashMap;

use pbalance::instance::{peel_big_jobs, Assignment, AssignmentDocument, JobInstance};
use pbalance::poisson::expected_max;
use proptest::prelude::*;

/// Minimum over all maps of the expected max, with and without the
/// constraint that each job in `alone` has a machine to itself.
fn optimum(sizes: &[f64], m: usize, alone: &[usize]) -> (f64, f64) {
    let n = sizes.len();
    let mut memo: HashMap<Vec<u64>, f64> = HashMap::new();
    let mut eval = |loads: &[f64]| -> f64 {
        let mut key: Vec<u64> = loads.iter().filter(|&&x| x > 0.0).map(|x| x.to_bits()).collect();
        key.sort_unstable();
        *memo.entry(key).or_insert_with(|| expected_max(loads, 1e-12).unwrap())
    };
    let (mut free, mut constrained) = (f64::INFINITY, f64::INFINITY);
    let mut map = vec![0usize; n];
    loop {
        let mut loads = vec![0.0; m];
        let mut count = vec![0usize; m];
        for (j, &k) in map.iter().enumerate() {
            loads[k] += sizes[j];
            count[k] += 1;
        }
        let v = eval(&loads);
        free = free.min(v);
        if alone.iter().all(|&j| count[map[j]] == 1) {
            constrained = constrained.min(v);
        }
        let mut i = 0;
        while i < n && map[i] == m - 1 {
            map[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        map[i] += 1;
    }
    (free, constrained)
}

fn multisets(pool: &[f64], n: usize, start: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
    if cur.len() == n {
        out.push(cur.clone());
        return;
    }
    for i in start..pool.len() {
        cur.push(pool[i]);
        multisets(pool, n, i, cur, out);
        cur.pop();
    }
}

#[test]
fn peeled_jobs_alone_are_optimal() {
    let pool = [0.5, 1.0, 2.0, 5.0, 10.0];
    let mut all = Vec::new();
    for n in 1..=7 {
        multisets(&pool, n, 0, &mut Vec::new(), &mut all);
    }
    let mut checked = 0;
    for m in 2..=3 {
        for sizes in &all {
            let inst = JobInstance::new(m, sizes.clone()).unwrap();
            let peel = peel_big_jobs(&inst).unwrap();
            if peel.big_jobs.is_empty() {
                continue;
            }
            let (free, constrained) = optimum(sizes, m, &peel.big_jobs);
            assert!(constrained <= free + 1e-12, "{sizes:?} on {m}: {constrained} vs {free}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn peel_examples() {
    let p = peel_big_jobs(&JobInstance::new(3, vec![10.0, 1.0, 1.0, 1.0]).unwrap()).unwrap();
    assert_eq!(p.big_jobs, vec![0]);
    assert_eq!(p.m1, 2);
    assert!((p.mu - 1.5).abs() < 1e-15);
    let none = peel_big_jobs(&JobInstance::new(2, vec![1.0; 4]).unwrap()).unwrap();
    assert!(none.big_jobs.is_empty());
}

#[test]
fn invalid_instances() {
    assert!(JobInstance::new(0, vec![1.0]).is_err());
    assert!(JobInstance::new(2, vec![f64::NAN]).is_err());
    assert!(JobInstance::from_json(r#"{"machines": 2}"#).is_err());
    assert!(Assignment::new(&[1.0, 2.0], 2, vec![0, 2]).is_err());
    assert!(Assignment::new(&[1.0, 2.0], 2, vec![0]).is_err());
}

proptest! {
    #[test]
    fn peeling_is_idempotent(sizes in prop::collection::vec(0.0f64..100.0, 1..30), m in 1usize..8) {
        let inst = JobInstance::new(m, sizes).unwrap();
        let p = peel_big_jobs(&inst).unwrap();
        prop_assume!(p.m1 >= 1);
        let again = peel_big_jobs(&JobInstance::new(p.m1, p.remaining_sizes.clone()).unwrap()).unwrap();
        prop_assert!(again.big_jobs.is_empty());
        prop_assert!(p.remaining_sizes.iter().all(|&x| x <= p.mu));
    }

    #[test]
    fn document_round_trip(sizes in prop::collection::vec(0.0f64..10.0, 1..20), m in 1usize..5, seed in any::<u64>()) {
        let inst = JobInstance::new(m, sizes).unwrap();
        let mapping: Vec<usize> = (0..inst.len()).map(|i| ((seed >> (i % 60)) as usize + i) % m).collect();
        let a = Assignment::new(inst.sizes(), m, mapping).unwrap();
        let doc = AssignmentDocument::new(&a, a.expected_max(1e-9).unwrap(), "ptas", 0.5);
        let back = AssignmentDocument::from_json(&doc.to_json()).unwrap().to_assignment(&inst).unwrap();
        prop_assert_eq!(back.mapping(), a.mapping());
        prop_assert_eq!(back.loads(), a.loads());
        let inst2 = JobInstance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(inst2, inst);
    }
}
