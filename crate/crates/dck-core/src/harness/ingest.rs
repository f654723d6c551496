//! Validated ingestion of external bivariate CSVs: NaN rows dropped with a
//! count, duplicate coordinates rejected with both row indices, and optional
//! convex-hull subsampling of the dense variable.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;

use crate::csvio::CsvTable;
use crate::error::DckError;
use crate::types::{BiSampleSets, Location, UniDataset};
use crate::Result;

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub n1: usize,
    pub n2: usize,
    pub dropped_nan_z1: usize,
    pub dropped_nan_z2: usize,
}

fn load_side(path: &Path, value_col: &str) -> Result<(UniDataset, usize)> {
    let table = CsvTable::read(path)?;
    for required in ["x", "y", value_col] {
        if !table.header.iter().any(|h| h == required) {
            return Err(DckError::invalid(format!(
                "{}: missing column '{required}'",
                path.display()
            )));
        }
    }
    let xs = table.numeric_column("x")?;
    let ys = table.numeric_column("y")?;
    let zs = table.numeric_column(value_col)?;

    let mut locations = Vec::new();
    let mut values = Vec::new();
    let mut dropped = 0usize;
    let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
    for i in 0..xs.len() {
        if !xs[i].is_finite() || !ys[i].is_finite() || !zs[i].is_finite() {
            dropped += 1;
            continue;
        }
        let key = (xs[i].to_bits(), ys[i].to_bits());
        if let Some(&first) = seen.get(&key) {
            return Err(DckError::invalid(format!(
                "{}: duplicate coordinate ({}, {}) at rows {} and {}",
                path.display(),
                xs[i],
                ys[i],
                first + 1,
                i + 1
            )));
        }
        seen.insert(key, i);
        locations.push(Location::new(xs[i], ys[i])?);
        values.push(zs[i]);
    }
    Ok((UniDataset::new(locations, values, None)?, dropped))
}

/// Parses and validates a pair of `x,y,z1` / `x,y,z2` CSVs.
pub fn ingest(z1_path: &Path, z2_path: &Path) -> Result<(BiSampleSets, IngestReport)> {
    let (set1, dropped1) = load_side(z1_path, "z1")?;
    let (set2, dropped2) = load_side(z2_path, "z2")?;
    if set1.is_empty() || set2.is_empty() {
        return Err(DckError::invalid("ingested dataset is empty"));
    }
    let report = IngestReport {
        n1: set1.len(),
        n2: set2.len(),
        dropped_nan_z1: dropped1,
        dropped_nan_z2: dropped2,
    };
    Ok((BiSampleSets::new(set1, set2), report))
}

fn cross(o: &Location, a: &Location, b: &Location) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Andrew's monotone-chain convex hull.
fn convex_hull(points: &[Location]) -> Vec<Location> {
    let mut pts: Vec<Location> = points.to_vec();
    pts.sort_by(|p, q| {
        p.x.partial_cmp(&q.x)
            .unwrap()
            .then(p.y.partial_cmp(&q.y).unwrap())
    });
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Location> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

fn inside_hull(hull: &[Location], p: &Location) -> bool {
    if hull.len() < 3 {
        return false;
    }
    for i in 0..hull.len() {
        let j = (i + 1) % hull.len();
        if cross(&hull[i], &hull[j], p) < 0.0 {
            return false;
        }
    }
    true
}

/// Keeps at most `target` dense-variable sites sampled uniformly from within
/// the convex hull of the sparse-variable network.
pub fn hull_subsample(
    data: &BiSampleSets,
    target: usize,
    rng: &mut ChaCha12Rng,
) -> Result<BiSampleSets> {
    if target == 0 {
        return Err(DckError::invalid("subsample target must be >= 1"));
    }
    let hull = convex_hull(&data.set1.locations);
    let mut inside: Vec<usize> = (0..data.set2.len())
        .filter(|&i| inside_hull(&hull, &data.set2.locations[i]))
        .collect();
    if inside.is_empty() {
        return Err(DckError::invalid(
            "no dense-variable sites inside the sparse network's convex hull",
        ));
    }
    inside.shuffle(rng);
    inside.truncate(target);
    inside.sort_unstable();
    let set2 = UniDataset::new(
        inside.iter().map(|&i| data.set2.locations[i]).collect(),
        inside.iter().map(|&i| data.set2.values[i]).collect(),
        None,
    )?;
    Ok(BiSampleSets::new(data.set1.clone(), set2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedPolicy;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("dck-ingest-test");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn well_formed_files_are_ingested_with_nan_drops() {
        let z1 = tmp("a_z1.csv");
        let z2 = tmp("a_z2.csv");
        std::fs::write(&z1, "x,y,z1\n0.0,0.0,1.0\n0.5,0.5,NaN\n1.0,1.0,2.0\n").unwrap();
        std::fs::write(&z2, "x,y,z2\n0.1,0.1,5.0\n0.2,0.2,6.0\n0.3,0.3,7.0\n").unwrap();
        let (data, report) = ingest(&z1, &z2).unwrap();
        assert_eq!(report.n1, 2);
        assert_eq!(report.n2, 3);
        assert_eq!(report.dropped_nan_z1, 1);
        assert_eq!(report.dropped_nan_z2, 0);
        assert_eq!(data.set1.values, vec![1.0, 2.0]);
    }

    #[test]
    fn missing_column_is_named() {
        let z1 = tmp("b_z1.csv");
        let z2 = tmp("b_z2.csv");
        std::fs::write(&z1, "x,y,value\n0.0,0.0,1.0\n").unwrap();
        std::fs::write(&z2, "x,y,z2\n0.1,0.1,5.0\n").unwrap();
        let err = ingest(&z1, &z2).unwrap_err().to_string();
        assert!(err.contains("'z1'"), "{err}");
    }

    #[test]
    fn duplicate_coordinates_report_both_rows() {
        let z1 = tmp("c_z1.csv");
        let z2 = tmp("c_z2.csv");
        std::fs::write(&z1, "x,y,z1\n0.0,0.0,1.0\n0.5,0.5,2.0\n0.0,0.0,3.0\n").unwrap();
        std::fs::write(&z2, "x,y,z2\n0.1,0.1,5.0\n").unwrap();
        let err = ingest(&z1, &z2).unwrap_err().to_string();
        assert!(err.contains("rows 1 and 3"), "{err}");
    }

    #[test]
    fn hull_subsample_keeps_interior_points() {
        // Sparse square, dense points inside and far outside.
        let set1 = UniDataset::new(
            vec![
                Location { x: 0.0, y: 0.0 },
                Location { x: 1.0, y: 0.0 },
                Location { x: 1.0, y: 1.0 },
                Location { x: 0.0, y: 1.0 },
            ],
            vec![1.0; 4],
            None,
        )
        .unwrap();
        let mut locs2 = Vec::new();
        let mut vals2 = Vec::new();
        for i in 0..50 {
            let t = i as f64 / 49.0;
            locs2.push(Location {
                x: 0.05 + 0.9 * t,
                y: 0.5,
            });
            vals2.push(t);
            locs2.push(Location {
                x: 10.0 + t,
                y: 10.0,
            });
            vals2.push(-t);
        }
        let data = BiSampleSets::new(set1, UniDataset::new(locs2, vals2, None).unwrap());
        let mut rng = SeedPolicy::new(2).stream("hull-test");
        let sub = hull_subsample(&data, 30, &mut rng).unwrap();
        assert_eq!(sub.set2.len(), 30);
        assert!(sub.set2.locations.iter().all(|l| l.x <= 1.0 && l.y <= 1.0));
    }
}
