use pbalance::config_ip::{enumerate_configs, extract_assignment, solve_config_ip, ConfigModel};
use proptest::prelude::*;

fn costs() -> [fn(f64) -> f64; 3] {
    [|x| x * x, |x| (x - 2.0).max(0.0), |x| x.exp()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_use_every_job_once(
        sizes in prop::collection::vec(prop_oneof![Just(0.5), Just(1.0), Just(1.5), Just(2.5)], 1..9),
        m in 1usize..5,
        which in 0usize..3,
    ) {
        let total: f64 = sizes.iter().sum();
        let cap = (4.0 * total / m as f64).max(2.5);
        let model = ConfigModel::from_sizes(&sizes, m, cap).unwrap();
        let f = costs()[which];
        let sol = solve_config_ip(&model, f).unwrap();
        sol.check(&model).unwrap();
        prop_assert_eq!(sol.multiplicities.iter().sum::<u64>(), m as u64);

        let a = extract_assignment(&model, &sol, &sizes).unwrap();
        prop_assert_eq!(a.mapping().len(), sizes.len());
        let value: f64 = a.loads().iter().map(|&l| f(l)).sum();
        prop_assert!((value - sol.objective).abs() <= 1e-9 * sol.objective.abs().max(1.0));
        prop_assert!(a.loads().iter().all(|&l| l <= cap * (1.0 + 1e-12)));

        prop_assert_eq!(solve_config_ip(&model, f).unwrap(), sol);
    }

    #[test]
    fn configurations_respect_counts_and_cap(
        counts in prop::collection::vec(0u32..4, 1..4),
        cap in 0.5f64..6.0,
    ) {
        let pi: Vec<f64> = (0..counts.len()).map(|k| 0.5 + k as f64).collect();
        let configs = enumerate_configs(&pi, &counts, cap).unwrap();
        prop_assert!(configs[0].iter().all(|&c| c == 0));
        for c in &configs {
            prop_assert!(c.iter().zip(&counts).all(|(a, b)| a <= b));
            let load: f64 = c.iter().zip(&pi).map(|(&a, &p)| a as f64 * p).sum();
            prop_assert!(load <= cap * (1.0 + 1e-12));
        }
        let mut sorted = configs.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), configs.len());
    }
}

#[test]
fn infeasible_caps_are_reported() {
    let model = ConfigModel::from_sizes(&[2.0, 2.0, 2.0], 2, 3.0).unwrap();
    assert!(solve_config_ip(&model, |x| x).is_err());
}

#[test]
fn nan_costs_are_rejected() {
    let model = ConfigModel::from_sizes(&[1.0, 1.0], 2, 4.0).unwrap();
    assert!(solve_config_ip(&model, |_| f64::NAN).is_err());
}
