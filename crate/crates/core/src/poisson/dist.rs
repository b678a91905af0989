use super::table::LoadTables;
use super::check_loads;
use crate::error::{Error, Result};

/// A finitely supported distribution on the integers
/// `offset, offset + 1, ..., offset + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    offset: i64,
    probs: Vec<f64>,
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl DiscreteDist {
    pub fn new(offset: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("distribution has empty support".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidArgument(format!("invalid probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscreteDist { offset, probs })
    }

    pub fn point_mass(value: i64) -> Self {
        DiscreteDist { offset: value, probs: vec![1.0] }
    }

    /// `low` with probability `p_low`, `low + 1` otherwise.
    pub fn two_point(low: i64, p_low: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_low) {
            return Err(Error::InvalidArgument(format!("probability {p_low} outside [0, 1]")));
        }
        Ok(DiscreteDist { offset: low, probs: vec![p_low, 1.0 - p_low] })
    }

    /// Distribution of `max_i Poi(rates[i])`, truncated where the remaining
    /// mass is below `1e-13`. An empty rate list gives a point mass at 0.
    pub fn max_of_poissons(rates: &[f64]) -> Result<Self> {
        check_loads(rates)?;
        let tables = LoadTables::from_loads(rates);
        if tables.max_rate() == 0.0 {
            return Ok(Self::point_mass(0));
        }
        let kmax = tables.certified_cut(1e-13);
        let mut probs = Vec::with_capacity(kmax as usize + 1);
        let mut prev = 0.0;
        for x in 0..=kmax as i64 {
            let f = tables.ln_max_cdf(x).exp();
            probs.push((f - prev).max(0.0));
            prev = f;
        }
        DiscreteDist::new(0, probs)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn max_support(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self, x: i64) -> f64 {
        if x < self.offset {
            return 0.0;
        }
        self.probs.get((x - self.offset) as usize).copied().unwrap_or(0.0)
    }

    /// `P[X >= x]`.
    pub fn survival(&self, x: i64) -> f64 {
        (x.max(self.offset)..=self.max_support()).map(|k| self.pmf(k)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.offset + i as i64, p))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }

    /// Distribution of `max(X, Y)` for independent `X = self`, `Y = other`.
    pub fn max_with(&self, other: &DiscreteDist) -> DiscreteDist {
        let lo = self.offset.max(other.offset);
        let hi = self.max_support().max(other.max_support());
        let cdf = |d: &DiscreteDist, x: i64| -> f64 {
            (d.offset..=x.min(d.max_support())).map(|k| d.pmf(k)).sum()
        };
        let mut probs = Vec::with_capacity((hi - lo + 1) as usize);
        let mut prev = 0.0;
        for x in lo..=hi {
            let f = cdf(self, x) * cdf(other, x);
            probs.push((f - prev).max(0.0));
            prev = f;
        }
        DiscreteDist { offset: lo, probs }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unnormalized() {
        assert!(DiscreteDist::new(0, vec![0.5, 0.4]).is_err());
        assert!(DiscreteDist::new(0, vec![]).is_err());
        assert!(DiscreteDist::new(0, vec![1.5, -0.5]).is_err());
        assert!(DiscreteDist::new(2, vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn max_with_of_two_point_masses() {
        let a = DiscreteDist::point_mass(2);
        let b = DiscreteDist::two_point(1, 0.5).unwrap();
        let m = a.max_with(&b);
        assert_eq!(m.pmf(2), 1.0);
        assert!((b.mean() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn max_of_poissons_is_normalized() {
        let d = DiscreteDist::max_of_poissons(&[3.0, 0.5]).unwrap();
        let s: f64 = d.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(DiscreteDist::max_of_poissons(&[]).unwrap(), DiscreteDist::point_mass(0));
    }
}
