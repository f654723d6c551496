use serde::{Deserialize, Serialize};

use crate::error::DckError;
use crate::Result;

/// A planar coordinate. Coordinates are plain reals; no CRS handling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(DckError::invalid(format!(
                "location coordinates must be finite, got ({x}, {y})"
            )));
        }
        Ok(Location { x, y })
    }

    pub fn dist(&self, other: &Location) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Observations of one variable at a set of locations, with optional
/// covariates (one row per location).
#[derive(Debug, Clone, Default)]
pub struct UniDataset {
    pub locations: Vec<Location>,
    pub values: Vec<f64>,
    pub covariates: Option<Vec<Vec<f64>>>,
}

impl UniDataset {
    pub fn new(
        locations: Vec<Location>,
        values: Vec<f64>,
        covariates: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if locations.len() != values.len() {
            return Err(DckError::shape(format!(
                "{} locations but {} values",
                locations.len(),
                values.len()
            )));
        }
        if let Some(cov) = &covariates {
            if cov.len() != locations.len() {
                return Err(DckError::shape(format!(
                    "{} locations but {} covariate rows",
                    locations.len(),
                    cov.len()
                )));
            }
            if let Some(first) = cov.first() {
                let w = first.len();
                if cov.iter().any(|row| row.len() != w) {
                    return Err(DckError::shape("ragged covariate rows"));
                }
            }
        }
        Ok(UniDataset {
            locations,
            values,
            covariates,
        })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Covariate row for index `i`, empty when the dataset has none.
    pub fn covariate_row(&self, i: usize) -> &[f64] {
        match &self.covariates {
            Some(c) => &c[i],
            None => &[],
        }
    }
}

/// Two variables observed at (possibly disjoint) location sets.
///
/// Fusion requires `set2` to be the denser variable (`N2 > N1`); the sets may
/// be stored in either order and swapped by the caller.
#[derive(Debug, Clone)]
pub struct BiSampleSets {
    pub set1: UniDataset,
    pub set2: UniDataset,
}

impl BiSampleSets {
    pub fn new(set1: UniDataset, set2: UniDataset) -> Self {
        BiSampleSets { set1, set2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn location_rejects_non_finite() {
        assert!(Location::new(f64::NAN, 0.0).is_err());
        assert!(Location::new(0.0, f64::INFINITY).is_err());
        assert!(Location::new(1.5, -2.0).is_ok());
    }

    #[test]
    fn dataset_checks_lengths() {
        let locs = vec![Location { x: 0.0, y: 0.0 }];
        assert!(UniDataset::new(locs.clone(), vec![1.0, 2.0], None).is_err());
        assert!(UniDataset::new(locs.clone(), vec![1.0], Some(vec![])).is_err());
        let d = UniDataset::new(locs, vec![1.0], Some(vec![vec![0.1, 0.2]])).unwrap();
        assert_eq!(d.covariate_row(0), &[0.1, 0.2]);
    }
}
