//! Geometric-then-arithmetic rounding of job sizes with bundling of small
//! jobs, and the two assignment transfers between original and rounded jobs.

use crate::error::{Error, Result};
use crate::instance::{loads_of, sorted_order, Assignment};

/// Relative slack for grid comparisons, so values that sit on a grid point
/// up to rounding error are treated as on it.
const GRID_TOL: f64 = 1e-12;

/// Origin of a rounded job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Rounded from the original job with this index.
    Original(usize),
    /// One of the `δμ` jobs standing in for the summed small jobs.
    Bundle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundedInstance {
    rounded_sizes: Vec<f64>,
    grid_index: Vec<u64>,
    provenance: Vec<Provenance>,
    original_sizes: Vec<f64>,
    small_jobs: Vec<usize>,
    delta: f64,
    mu: f64,
    bundle_count: usize,
}

impl RoundedInstance {
    /// Rounded sizes; originals first in nondecreasing order, bundles last.
    pub fn rounded_sizes(&self) -> &[f64] {
        &self.rounded_sizes
    }

    /// `k` with `λ' = δμ + k δ²μ` for each rounded job.
    pub fn grid_index(&self) -> &[u64] {
        &self.grid_index
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn original_sizes(&self) -> &[f64] {
        &self.original_sizes
    }

    /// Original jobs below `δμ`, which are represented by bundles.
    pub fn small_jobs(&self) -> &[usize] {
        &self.small_jobs
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn bundle_count(&self) -> usize {
        self.bundle_count
    }

    pub fn len(&self) -> usize {
        self.rounded_sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounded_sizes.is_empty()
    }

    /// Distinct rounded sizes in increasing order with their multiplicities.
    pub fn size_classes(&self) -> (Vec<f64>, Vec<u64>) {
        let mut pairs: Vec<(u64, f64)> = self.grid_index.iter().copied().zip(self.rounded_sizes.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        let mut sizes = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        let mut last = None;
        for (k, s) in pairs {
            if last == Some(k) {
                *counts.last_mut().unwrap() += 1;
            } else {
                sizes.push(s);
                counts.push(1);
                last = Some(k);
            }
        }
        (sizes, counts)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")))
    }
}

/// Smallest `k >= 0` with `δμ (1+δ)^k >= λ`; requires `λ >= δμ`.
fn geometric_step(lambda: f64, base: f64, delta: f64) -> f64 {
    let g = |k: i32| base * (1.0 + delta).powi(k);
    let target = lambda * (1.0 - GRID_TOL);
    let mut k = ((lambda / base).ln() / delta.ln_1p()).ceil().max(0.0) as i32;
    while k > 0 && g(k - 1) >= target {
        k -= 1;
    }
    while g(k) < target {
        k += 1;
    }
    g(k)
}

/// Smallest `j >= 0` with `δμ + j δ²μ >= ν`.
fn arithmetic_step(nu: f64, base: f64, step: f64) -> u64 {
    let a = |j: u64| base + j as f64 * step;
    let target = nu * (1.0 - GRID_TOL);
    let mut j = ((nu - base) / step).ceil().max(0.0) as u64;
    while j > 0 && a(j - 1) >= target {
        j -= 1;
    }
    while a(j) < target {
        j += 1;
    }
    j
}

/// Rounds every job of size at least `δμ` up to the geometric grid
/// `δμ(1+δ)^k` and then up to the arithmetic grid `δμ + jδ²μ`; jobs below
/// `δμ` are summed and replaced by `⌈S/(δμ)⌉` jobs of size exactly `δμ`.
pub fn round_instance(sizes: &[f64], mu: f64, delta: f64) -> Result<RoundedInstance> {
    check_delta(delta)?;
    crate::poisson::check_loads(sizes)?;
    crate::poisson::Rate::new(mu)?;
    if let Some(&big) = sizes.iter().find(|&&s| s > mu * (1.0 + GRID_TOL)) {
        return Err(Error::InvalidArgument(format!("size {big} exceeds the average load {mu}")));
    }
    let order = sorted_order(sizes);
    if mu == 0.0 {
        return Ok(RoundedInstance {
            rounded_sizes: Vec::new(),
            grid_index: Vec::new(),
            provenance: Vec::new(),
            original_sizes: sizes.to_vec(),
            small_jobs: order,
            delta,
            mu,
            bundle_count: 0,
        });
    }
    let base = delta * mu;
    let step = delta * delta * mu;
    let mut rounded_sizes = Vec::new();
    let mut grid_index = Vec::new();
    let mut provenance = Vec::new();
    let mut small_jobs = Vec::new();
    let mut small_total = crate::poisson::NeumaierSum::new();
    for &i in &order {
        let lambda = sizes[i];
        if lambda >= base {
            let nu = geometric_step(lambda, base, delta);
            let j = arithmetic_step(nu, base, step);
            rounded_sizes.push(base + j as f64 * step);
            grid_index.push(j);
            provenance.push(Provenance::Original(i));
        } else {
            small_total += lambda;
            small_jobs.push(i);
        }
    }
    let s = small_total.total();
    let bundle_count = if s == 0.0 { 0 } else { arithmetic_step(s, 0.0, base) as usize };
    for _ in 0..bundle_count {
        rounded_sizes.push(base);
        grid_index.push(0);
        provenance.push(Provenance::Bundle);
    }
    Ok(RoundedInstance {
        rounded_sizes,
        grid_index,
        provenance,
        original_sizes: sizes.to_vec(),
        small_jobs,
        delta,
        mu,
        bundle_count,
    })
}

fn bound_holds(load: f64, reference: f64, delta: f64) -> bool {
    load <= (1.0 + 5.0 * delta) * reference * (1.0 + 1e-9) + 1e-12
}

/// Converts an assignment of the rounded jobs into one of the originals
/// with every machine load at most `(1+5δ)` times its rounded load.
///
/// Rounded jobs that came from an original job hand it back on the same
/// machine. Small originals are then placed largest first on the first
/// machine whose remaining room under `(1+5δ)μ'_j` holds them; this always
/// succeeds when the rounded loads sum to at least `mμ/5`, which holds
/// whenever `μ` is the average load over the same machines.
pub fn unround_assignment(rounded: &RoundedInstance, rounded_assignment: &Assignment) -> Result<Assignment> {
    let machines = rounded_assignment.machines();
    let map = rounded_assignment.mapping();
    if map.len() != rounded.len() {
        return Err(Error::Inconsistent(format!(
            "assignment covers {} jobs but {} rounded jobs exist",
            map.len(),
            rounded.len()
        )));
    }
    let n = rounded.original_sizes.len();
    let mut target = vec![usize::MAX; n];
    let mut load = vec![0.0; machines];
    for (r, prov) in rounded.provenance.iter().enumerate() {
        if let Provenance::Original(i) = *prov {
            target[i] = map[r];
            load[map[r]] += rounded.original_sizes[i];
        }
    }
    let rounded_loads = rounded_assignment.loads();
    let caps: Vec<f64> = rounded_loads.iter().map(|&l| (1.0 + 5.0 * rounded.delta) * l).collect();
    let mut small = rounded.small_jobs.clone();
    small.sort_by(|&a, &b| rounded.original_sizes[b].total_cmp(&rounded.original_sizes[a]).then(a.cmp(&b)));
    for i in small {
        let s = rounded.original_sizes[i];
        let slot = (0..machines)
            .find(|&j| load[j] + s <= caps[j] * (1.0 + 1e-12))
            .ok_or_else(|| Error::Inconsistent(format!("small job {i} of size {s} fits on no machine")))?;
        target[i] = slot;
        load[slot] += s;
    }
    if let Some(i) = target.iter().position(|&t| t == usize::MAX) {
        return Err(Error::Inconsistent(format!("original job {i} is not covered by the rounding")));
    }
    let out = Assignment::new(&rounded.original_sizes, machines, target)?;
    for (j, (&l, &r)) in out.loads().iter().zip(rounded_loads).enumerate() {
        if !bound_holds(l, r, rounded.delta) {
            return Err(Error::Inconsistent(format!("machine {j} load {l} exceeds (1+5δ)·{r}")));
        }
    }
    Ok(out)
}

/// Converts an assignment of the originals into one of the rounded jobs
/// with every machine load at most `(1+5δ)` times its original load.
///
/// Each rounded job follows its original; bundles go one at a time to the
/// machine with the most room left under `(1+5δ)μ_j`. This succeeds when
/// `μ` is the average original load over the machines.
pub fn round_assignment_forward(rounded: &RoundedInstance, original: &Assignment) -> Result<Assignment> {
    let machines = original.machines();
    let map = original.mapping();
    if map.len() != rounded.original_sizes.len() {
        return Err(Error::Inconsistent("assignment does not match the rounded instance".into()));
    }
    let caps: Vec<f64> = original.loads().iter().map(|&l| (1.0 + 5.0 * rounded.delta) * l).collect();
    let mut load = vec![0.0; machines];
    let mut target = vec![usize::MAX; rounded.len()];
    for (r, prov) in rounded.provenance.iter().enumerate() {
        if let Provenance::Original(i) = *prov {
            target[r] = map[i];
            load[map[i]] += rounded.rounded_sizes[r];
        }
    }
    let base = rounded.delta * rounded.mu;
    for (r, prov) in rounded.provenance.iter().enumerate() {
        if *prov == Provenance::Bundle {
            let j = (0..machines)
                .max_by(|&a, &b| (caps[a] - load[a]).total_cmp(&(caps[b] - load[b])).then(b.cmp(&a)))
                .ok_or_else(|| Error::Inconsistent("no machines".into()))?;
            if load[j] + base > caps[j] * (1.0 + 1e-12) {
                return Err(Error::Inconsistent(format!("bundle {r} fits on no machine")));
            }
            target[r] = j;
            load[j] += base;
        }
    }
    let loads = loads_of(&rounded.rounded_sizes, machines, &target)?;
    debug_assert!(loads.iter().zip(original.loads()).all(|(&a, &b)| bound_holds(a, b, rounded.delta)));
    Assignment::new(&rounded.rounded_sizes, machines, target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_arguments() {
        assert!(round_instance(&[1.0], 2.0, 0.0).is_err());
        assert!(round_instance(&[1.0], 2.0, 1.0).is_err());
        assert!(round_instance(&[3.0], 2.0, 0.1).is_err());
    }

    #[test]
    fn geometric_then_arithmetic() {
        let r = round_instance(&[1.05], 10.0, 0.1).unwrap();
        assert!((r.rounded_sizes()[0] - 1.1).abs() < 1e-12);
        assert_eq!(r.grid_index(), &[1]);
    }

    #[test]
    fn bundles_small_jobs() {
        let r = round_instance(&[0.4, 0.5], 10.0, 0.1).unwrap();
        assert_eq!(r.bundle_count(), 1);
        assert_eq!(r.rounded_sizes(), &[1.0]);
        assert_eq!(r.provenance(), &[Provenance::Bundle]);
    }

    #[test]
    fn grid_point_ties_stay() {
        // 1.21 = 1.1² is on the geometric grid; the arithmetic step lifts it to 1.3
        let r = round_instance(&[1.0, 1.21], 10.0, 0.1).unwrap();
        assert!((r.rounded_sizes()[0] - 1.0).abs() < 1e-12);
        assert!((r.rounded_sizes()[1] - 1.3).abs() < 1e-12, "{:?}", r.rounded_sizes());
    }

    #[test]
    fn no_bundle_without_small_mass() {
        let r = round_instance(&[0.0, 2.0, 3.0], 5.0, 0.1).unwrap();
        assert_eq!(r.bundle_count(), 0);
        assert_eq!(r.small_jobs(), &[0]);
    }

    #[test]
    fn zero_average_gives_empty_rounding() {
        let r = round_instance(&[0.0, 0.0], 0.0, 0.1).unwrap();
        assert!(r.is_empty());
        let a = Assignment::new(&[], 2, vec![]).unwrap();
        let back = unround_assignment(&r, &a).unwrap();
        assert_eq!(back.loads(), &[0.0, 0.0]);
    }

    #[test]
    fn single_machine_unrounds_to_everything() {
        let sizes = [0.1, 0.2, 2.0, 3.0, 4.7];
        let mu = sizes.iter().sum::<f64>();
        let r = round_instance(&sizes, mu, 0.1).unwrap();
        let a = Assignment::new(r.rounded_sizes(), 1, vec![0; r.len()]).unwrap();
        let back = unround_assignment(&r, &a).unwrap();
        assert_eq!(back.mapping(), &[0; 5]);
    }

    #[test]
    fn identity_when_already_on_grid() {
        // δμ = 1, δ²μ = 0.1; 1.0 and 1.1 lie on both grids
        let sizes = [1.1, 1.0, 1.1, 1.0];
        let mu = 10.0;
        let r = round_instance(&sizes, mu, 0.1).unwrap();
        for (s, p) in r.rounded_sizes().iter().zip(r.provenance()) {
            let Provenance::Original(i) = *p else { panic!() };
            assert!((s - sizes[i]).abs() < 1e-12);
        }
        let original = Assignment::new(&sizes, 2, vec![0, 1, 1, 0]).unwrap();
        let fwd = round_assignment_forward(&r, &original).unwrap();
        let back = unround_assignment(&r, &fwd).unwrap();
        assert_eq!(back.mapping(), original.mapping());
    }

    #[test]
    fn size_classes_group_by_grid_index() {
        let r = round_instance(&[1.0, 1.05, 1.1, 0.3, 0.4], 10.0, 0.1).unwrap();
        let (sizes, counts) = r.size_classes();
        assert_eq!(counts, vec![2, 2]);
        assert!((sizes[0] - 1.0).abs() < 1e-12 && (sizes[1] - 1.1).abs() < 1e-12);
    }
}
