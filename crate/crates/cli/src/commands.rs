use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pbalance::det_sched::{graham_greedy, mean_substitution_solve, GreedyOrder};
use pbalance::dp_solver::dp_solve;
use pbalance::harness::brute::{brute_force_opt, MAX_JOBS, MAX_MACHINES};
use pbalance::harness::monte_carlo_emax;
use pbalance::harness::suites::{appendix_suite, identity_suite, lemma_suite};
use pbalance::instance::{Assignment, AssignmentDocument, JobInstance};
use pbalance::ptas::ptas_solve;
use serde::Serialize;

use crate::{Algorithm, CliError};

pub struct SolveOptions {
    pub input: PathBuf,
    pub epsilon: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub tail_tol: f64,
    pub output: Option<PathBuf>,
}

pub struct CompareOptions {
    pub input: PathBuf,
    pub epsilon: f64,
    pub seed: u64,
    pub trials: u64,
    pub tail_tol: f64,
}

pub enum VerifySuite {
    Lemmas,
    Appendix,
    Identities,
}

fn read_instance(path: &Path) -> Result<JobInstance, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    JobInstance::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn check_epsilon(epsilon: f64) -> Result<(), CliError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Input(e.to_string()))
        }
    }
}

/// Runs one algorithm on `instance`.
pub fn run_algorithm(algorithm: Algorithm, instance: &JobInstance, epsilon: f64, tail_tol: f64) -> Result<Assignment, CliError> {
    Ok(match algorithm {
        Algorithm::Ptas => ptas_solve(instance, epsilon)?,
        Algorithm::Greedy => graham_greedy(instance.sizes(), instance.machines(), GreedyOrder::Lpt)?,
        Algorithm::DetMean => mean_substitution_solve(instance, epsilon)?,
        Algorithm::Dp => dp_solve(instance, epsilon)?,
        Algorithm::Brute => brute_force_opt(instance, tail_tol)?.0,
    })
}

fn non_empty_loads(a: &Assignment) -> Vec<f64> {
    let loads: Vec<f64> = a.loads().iter().copied().filter(|&x| x > 0.0).collect();
    if loads.is_empty() { vec![0.0] } else { loads }
}

pub fn solve(opts: SolveOptions) -> Result<(), CliError> {
    check_epsilon(opts.epsilon)?;
    let instance = read_instance(&opts.input)?;
    let a = run_algorithm(opts.algorithm, &instance, opts.epsilon, opts.tail_tol)?;
    // exact evaluation, with a seeded estimate if it cannot be certified
    let em = match a.expected_max(opts.tail_tol) {
        Ok(v) => v,
        Err(e) if e.is_input_error() => return Err(e.into()),
        Err(_) => monte_carlo_emax(&non_empty_loads(&a), crate::config::TRIALS, opts.seed)?.0,
    };
    let doc = AssignmentDocument::new(&a, em, opts.algorithm.name(), opts.epsilon);
    write_out(opts.output.as_deref(), &(doc.to_json() + "\n"))
}

#[derive(Serialize)]
struct CompareRow {
    algorithm: &'static str,
    expected_max: Option<f64>,
    mc_estimate: f64,
    mc_se: f64,
    makespan: f64,
    wall_ms: f64,
}

pub fn compare(opts: CompareOptions) -> Result<(), CliError> {
    check_epsilon(opts.epsilon)?;
    let instance = read_instance(&opts.input)?;
    let mut algorithms = vec![Algorithm::Ptas, Algorithm::Greedy, Algorithm::DetMean];
    if instance.len() <= MAX_JOBS && instance.machines() <= MAX_MACHINES {
        algorithms.push(Algorithm::Brute);
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for alg in algorithms {
        let start = Instant::now();
        let a = run_algorithm(alg, &instance, opts.epsilon, opts.tail_tol)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let (mc_estimate, mc_se) = monte_carlo_emax(&non_empty_loads(&a), opts.trials.max(1), opts.seed)?;
        wtr.serialize(CompareRow {
            algorithm: alg.name(),
            expected_max: a.expected_max(opts.tail_tol).ok(),
            mc_estimate,
            mc_se,
            makespan: a.makespan(),
            wall_ms,
        })
        .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    write_out(None, &String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn verify(suite: VerifySuite, out: Option<PathBuf>) -> Result<(), CliError> {
    let rows = match suite {
        VerifySuite::Lemmas => lemma_suite()?,
        VerifySuite::Appendix => appendix_suite()?,
        VerifySuite::Identities => identity_suite()?,
    };
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        wtr.serialize(r).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    write_out(out.as_deref(), &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    let asserted = rows.iter().filter(|r| r.guard_ok).count();
    let failed: Vec<_> = rows.iter().filter(|r| r.failed()).collect();
    eprintln!("{} rows, {asserted} asserted, {} failed", rows.len(), failed.len());
    if let Some(first) = failed.first() {
        return Err(CliError::Solver(format!("asserted check {} failed at {}", first.lemma, first.params)));
    }
    Ok(())
}
