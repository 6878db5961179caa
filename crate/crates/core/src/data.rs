//! Observation container: n rows of K unit vectors on S^{p-1}.

use crate::error::{Error, Result};
use crate::sphere::UnitVec;

/// n x K array of unit vectors, one row per observation, one column per
/// marginal sphere.
#[derive(Debug, Clone)]
pub struct DirectionalSample {
    p: usize,
    k: usize,
    rows: Vec<Vec<UnitVec>>,
}

impl DirectionalSample {
    pub fn new(rows: Vec<Vec<UnitVec>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Data("sample must contain at least one row".into()));
        };
        let k = first.len();
        if k == 0 {
            return Err(Error::Data("sample rows must contain at least one marginal".into()));
        }
        let p = first[0].dim();
        if p < 3 {
            return Err(Error::Data(format!("sphere observations need p >= 3, got {p}")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Data(format!(
                    "row {i} has {} marginals, expected {k}",
                    row.len()
                )));
            }
            for v in row {
                if v.dim() != p {
                    return Err(Error::Data(format!(
                        "row {i} has dimension {}, expected {p}",
                        v.dim()
                    )));
                }
            }
        }
        Ok(Self { p, k, rows })
    }

    /// Univariate sample from a flat list of points.
    pub fn univariate(points: Vec<UnitVec>) -> Result<Self> {
        Self::new(points.into_iter().map(|v| vec![v]).collect())
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<UnitVec>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[UnitVec] {
        &self.rows[i]
    }

    /// Points of marginal `k` across observations.
    pub fn marginal(&self, k: usize) -> impl Iterator<Item = &UnitVec> {
        self.rows.iter().map(move |row| &row[k])
    }

    /// View a single marginal as a univariate sample.
    pub fn select_marginal(&self, k: usize) -> DirectionalSample {
        DirectionalSample {
            p: self.p,
            k: 1,
            rows: self.rows.iter().map(|row| vec![row[k].clone()]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape() {
        let a = UnitVec::from_slice(&[1.0, 0.0, 0.0]).unwrap();
        let b = UnitVec::from_slice(&[0.0, 1.0, 0.0]).unwrap();
        let s = DirectionalSample::new(vec![vec![a.clone(), b.clone()], vec![b.clone(), a.clone()]])
            .unwrap();
        assert_eq!((s.n(), s.p(), s.k()), (2, 3, 2));
        assert!(DirectionalSample::new(vec![vec![a.clone()], vec![a.clone(), b.clone()]]).is_err());
        assert!(DirectionalSample::new(vec![]).is_err());
        let m = s.select_marginal(1);
        assert_eq!((m.n(), m.k()), (2, 1));
    }
}
