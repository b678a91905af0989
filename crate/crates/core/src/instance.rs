//! Instances, assignments, big-job peeling, and the JSON file formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::{self, Rate};

/// `m` identical machines and a multiset of Poisson job sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct JobInstance {
    machines: usize,
    sizes: Vec<f64>,
}

impl JobInstance {
    pub fn new(machines: usize, sizes: Vec<f64>) -> Result<Self> {
        if machines == 0 {
            return Err(Error::InvalidArgument("at least one machine is required".into()));
        }
        for &s in &sizes {
            Rate::new(s)?;
        }
        Ok(JobInstance { machines, sizes })
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.sizes.iter().sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        JobInstance::new(file.machines, file.jobs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceFile { machines: self.machines, jobs: self.sizes.clone() })
            .expect("instance serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    machines: usize,
    jobs: Vec<f64>,
}

/// Job-to-machine map (0-based) with per-machine loads.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    mapping: Vec<usize>,
    loads: Vec<f64>,
}

impl Assignment {
    pub fn new(sizes: &[f64], machines: usize, mapping: Vec<usize>) -> Result<Self> {
        let loads = loads_of(sizes, machines, &mapping)?;
        Ok(Assignment { mapping, loads })
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn machines(&self) -> usize {
        self.loads.len()
    }

    pub fn makespan(&self) -> f64 {
        self.loads.iter().copied().fold(0.0, f64::max)
    }

    /// Jobs on each machine, in increasing job index.
    pub fn jobs_by_machine(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.machines()];
        for (job, &m) in self.mapping.iter().enumerate() {
            out[m].push(job);
        }
        out
    }

    pub fn expected_max(&self, tail_tol: f64) -> Result<f64> {
        exact_expected_max_of(self, tail_tol)
    }
}

/// Per-machine sums of `sizes` under `mapping`.
pub fn loads_of(sizes: &[f64], machines: usize, mapping: &[usize]) -> Result<Vec<f64>> {
    if mapping.len() != sizes.len() {
        return Err(Error::Inconsistent(format!(
            "mapping covers {} jobs but the instance has {}",
            mapping.len(),
            sizes.len()
        )));
    }
    let mut loads = vec![0.0; machines];
    for (&s, &m) in sizes.iter().zip(mapping) {
        if m >= machines {
            return Err(Error::MachineOutOfRange { index: m, machines });
        }
        loads[m] += s;
    }
    Ok(loads)
}

/// `E[max_j Poi(μ_j)]` over all machine loads of the assignment.
pub fn exact_expected_max_of(assignment: &Assignment, tail_tol: f64) -> Result<f64> {
    if assignment.loads.is_empty() {
        return Ok(0.0);
    }
    poisson::expected_max(&assignment.loads, tail_tol)
}

/// Output of [`peel_big_jobs`].
#[derive(Debug, Clone, PartialEq)]
pub struct PeelResult {
    /// Original indices of peeled jobs, largest first.
    pub big_jobs: Vec<usize>,
    pub big_sizes: Vec<f64>,
    /// Original indices of the remaining jobs, in nondecreasing size order.
    pub remaining_jobs: Vec<usize>,
    pub remaining_sizes: Vec<f64>,
    /// Machines left for the remaining jobs.
    pub m1: usize,
    /// Average remaining load `Σ remaining / m1`.
    pub mu: f64,
}

/// Indices of `sizes` sorted by nondecreasing size, ties by index.
pub(crate) fn sorted_order(sizes: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[a].total_cmp(&sizes[b]).then(a.cmp(&b)));
    order
}

/// Repeatedly removes the largest job while it strictly exceeds the average
/// load of what remains; each removed job takes a machine of its own.
pub fn peel_big_jobs(instance: &JobInstance) -> Result<PeelResult> {
    peel_sizes(instance.sizes(), instance.machines())
}

pub(crate) fn peel_sizes(sizes: &[f64], machines: usize) -> Result<PeelResult> {
    let order = sorted_order(sizes);
    // prefix[i] = sum of the i smallest sizes
    let mut prefix = Vec::with_capacity(order.len() + 1);
    let mut acc = poisson::NeumaierSum::new();
    prefix.push(0.0);
    for &j in &order {
        acc += sizes[j];
        prefix.push(acc.total());
    }
    let mut n1 = order.len();
    let mut m1 = machines;
    let mut big_jobs = Vec::new();
    while n1 > 0 {
        if m1 == 0 {
            return Err(Error::MachinesExhausted(format!("{n1} jobs remain with no machine left")));
        }
        let mu = prefix[n1] / m1 as f64;
        let largest = sizes[order[n1 - 1]];
        if largest > mu {
            big_jobs.push(order[n1 - 1]);
            n1 -= 1;
            m1 -= 1;
        } else {
            break;
        }
    }
    let mu = if n1 == 0 || m1 == 0 { 0.0 } else { prefix[n1] / m1 as f64 };
    let remaining_jobs: Vec<usize> = order[..n1].to_vec();
    Ok(PeelResult {
        big_sizes: big_jobs.iter().map(|&j| sizes[j]).collect(),
        big_jobs,
        remaining_sizes: remaining_jobs.iter().map(|&j| sizes[j]).collect(),
        remaining_jobs,
        m1,
        mu,
    })
}

/// The assignment output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentDocument {
    pub assignment: Vec<usize>,
    pub loads: Vec<f64>,
    pub expected_max: f64,
    pub algorithm: String,
    pub epsilon: f64,
}

impl AssignmentDocument {
    pub fn new(assignment: &Assignment, expected_max: f64, algorithm: &str, epsilon: f64) -> Self {
        AssignmentDocument {
            assignment: assignment.mapping().to_vec(),
            loads: assignment.loads().to_vec(),
            expected_max,
            algorithm: algorithm.to_string(),
            epsilon,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Rebuilds the assignment against `instance`, checking the stored loads.
    pub fn to_assignment(&self, instance: &JobInstance) -> Result<Assignment> {
        let a = Assignment::new(instance.sizes(), instance.machines(), self.assignment.clone())?;
        let agree = a.loads.len() == self.loads.len()
            && a.loads.iter().zip(&self.loads).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
        if !agree {
            return Err(Error::Inconsistent("stored loads disagree with the mapping".into()));
        }
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_instances() {
        assert!(JobInstance::new(0, vec![1.0]).is_err());
        assert!(JobInstance::new(2, vec![-1.0]).is_err());
        assert!(JobInstance::new(2, vec![f64::NAN]).is_err());
        assert!(JobInstance::from_json(r#"{"machines": 2, "jobs": [1.0, -0.5]}"#).is_err());
        assert!(matches!(JobInstance::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn parses_instance_file() {
        let inst = JobInstance::from_json(r#"{"machines": 4, "jobs": [1.5, 2.0, 0.25]}"#).unwrap();
        assert_eq!(inst.machines(), 4);
        assert_eq!(inst.sizes(), &[1.5, 2.0, 0.25]);
        assert_eq!(JobInstance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn peel_single_big_job() {
        let inst = JobInstance::new(3, vec![10.0, 1.0, 1.0, 1.0]).unwrap();
        let p = peel_big_jobs(&inst).unwrap();
        assert_eq!(p.big_jobs, vec![0]);
        assert_eq!(p.m1, 2);
        assert!((p.mu - 1.5).abs() < 1e-15);
    }

    #[test]
    fn peel_ties_stay() {
        let inst = JobInstance::new(4, vec![2.0, 2.0, 2.0]).unwrap();
        let p = peel_big_jobs(&inst).unwrap();
        // 2 > 6/4, then 2 > 4/3, then 2 > 2/2
        assert_eq!(p.big_jobs.len(), 3);
        assert_eq!(p.m1, 1);
        let inst = JobInstance::new(3, vec![2.0, 2.0, 2.0]).unwrap();
        assert!(peel_big_jobs(&inst).unwrap().big_jobs.is_empty());
    }

    #[test]
    fn peel_two_steps() {
        let inst = JobInstance::new(3, vec![8.0, 7.0, 1.0, 1.0, 1.0]).unwrap();
        let p = peel_big_jobs(&inst).unwrap();
        assert_eq!(p.big_sizes, vec![8.0, 7.0]);
        assert_eq!(p.m1, 1);
        assert!((p.mu - 3.0).abs() < 1e-15);
        let again = peel_sizes(&p.remaining_sizes, p.m1).unwrap();
        assert!(again.big_jobs.is_empty());
    }

    #[test]
    fn peel_everything_when_jobs_are_few() {
        let inst = JobInstance::new(3, vec![1.0, 1.0]).unwrap();
        let p = peel_big_jobs(&inst).unwrap();
        assert_eq!(p.big_jobs.len(), 2);
        assert!(p.remaining_jobs.is_empty());
        assert_eq!(p.m1, 1);
    }

    #[test]
    fn loads_and_expected_max() {
        let sizes = [1.0, 1.0, 1.0, 1.0];
        let a = Assignment::new(&sizes, 2, vec![0, 0, 1, 1]).unwrap();
        assert_eq!(a.loads(), &[2.0, 2.0]);
        // Σ_{k>=1} (1 - cdf(2, k-1)^2) at 50 digits
        assert!((a.expected_max(1e-10).unwrap() - 2.771_505_521_452_844_049_8).abs() < 1e-9);
        assert_eq!(
            Assignment::new(&sizes, 2, vec![0, 0, 2, 1]),
            Err(Error::MachineOutOfRange { index: 2, machines: 2 })
        );
        let empty = Assignment::new(&[], 3, vec![]).unwrap();
        assert_eq!(empty.expected_max(1e-9).unwrap(), 0.0);
        let alone = Assignment::new(&[0.5, 2.0, 1.0], 3, vec![0, 1, 2]).unwrap();
        assert_eq!(alone.loads(), &[0.5, 2.0, 1.0]);
    }

    #[test]
    fn document_roundtrip() {
        let inst = JobInstance::new(2, vec![1.0, 2.0, 3.0]).unwrap();
        let a = Assignment::new(inst.sizes(), 2, vec![1, 1, 0]).unwrap();
        let doc = AssignmentDocument::new(&a, 3.5, "ptas", 0.5);
        let back = AssignmentDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_assignment(&inst).unwrap(), a);
    }
}
