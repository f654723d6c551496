//! Indicator class construction: univariate quantile thresholds and bivariate
//! per-line interval classes with node points.

use serde::{Deserialize, Serialize};

use crate::error::DckError;
use crate::fusion::{nearest_line, FusedPoint, QuantileLine};
use crate::types::Location;
use crate::Result;

/// One univariate class: the response interval (lo, hi] (open ends encoded as
/// None), its node, and the training member count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniClass {
    pub q_lo: Option<f64>,
    pub q_hi: Option<f64>,
    /// Median of the training members.
    pub node: f64,
    pub count: usize,
}

/// One bivariate class: a contiguous along-line interval on quantile line `k`
/// with its node point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiClass {
    pub k: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub z1_node: f64,
    pub z2_node: f64,
    pub count: usize,
}

/// The n indicator classes for either response dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "p")]
pub enum ClassPartition {
    #[serde(rename = "1")]
    Univariate { classes: Vec<UniClass> },
    #[serde(rename = "2")]
    Bivariate { classes: Vec<BiClass> },
}

impl ClassPartition {
    pub fn len(&self) -> usize {
        match self {
            ClassPartition::Univariate { classes } => classes.len(),
            ClassPartition::Bivariate { classes } => classes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn response_dim(&self) -> usize {
        match self {
            ClassPartition::Univariate { .. } => 1,
            ClassPartition::Bivariate { .. } => 2,
        }
    }

    /// Node points as (z1, z2) pairs; univariate nodes have z2 = node.
    pub fn nodes(&self) -> (Vec<f64>, Option<Vec<f64>>) {
        match self {
            ClassPartition::Univariate { classes } => {
                (classes.iter().map(|c| c.node).collect(), None)
            }
            ClassPartition::Bivariate { classes } => (
                classes.iter().map(|c| c.z1_node).collect(),
                Some(classes.iter().map(|c| c.z2_node).collect()),
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(DckError::invalid("partition needs at least 2 classes"));
        }
        match self {
            ClassPartition::Univariate { classes } => {
                for c in classes {
                    if !c.node.is_finite() || c.count == 0 {
                        return Err(DckError::invalid("univariate class with bad node/count"));
                    }
                }
            }
            ClassPartition::Bivariate { classes } => {
                for c in classes {
                    if !c.z1_node.is_finite() || !c.z2_node.is_finite() || c.count == 0 {
                        return Err(DckError::invalid("bivariate class with bad node/count"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Class indices per row, aligned with the fused locations.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub locations: Vec<Location>,
    pub covariates: Option<Vec<Vec<f64>>>,
    pub labels: Vec<usize>,
    /// Rows whose value fell outside all classes and were clamped to an end
    /// class (possible only for data the partition was not built from).
    pub clamped: usize,
}

/// Linear-interpolation empirical quantile (same convention as numpy's
/// default) over already sorted values.
fn sorted_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let pos = level * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Builds n threshold classes from n-1 interior cuts at empirical quantiles
/// with levels evenly spaced on [0.01, 0.99]. Nodes are member medians.
pub fn univariate_partition(values: &[f64], n: usize) -> Result<ClassPartition> {
    if n < 2 {
        return Err(DckError::invalid("need at least 2 classes"));
    }
    if values.len() < n {
        return Err(DckError::invalid(format!(
            "{} values cannot fill {n} classes",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let n_cuts = n - 1;
    let cuts: Vec<f64> = (0..n_cuts)
        .map(|j| {
            let level = if n_cuts == 1 {
                0.5
            } else {
                0.01 + 0.98 * j as f64 / (n_cuts - 1) as f64
            };
            sorted_quantile(&sorted, level)
        })
        .collect();
    if cuts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DckError::invalid(format!(
            "duplicate quantile cut points collapse classes; reduce n below {n}"
        )));
    }

    // Membership by (q_{j-1}, q_j]: values at a cut go left.
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n];
    for &v in values {
        let j = cuts.partition_point(|&c| c < v);
        members[j].push(v);
    }
    let mut classes = Vec::with_capacity(n);
    for (j, mut m) in members.into_iter().enumerate() {
        if m.is_empty() {
            return Err(DckError::invalid(format!(
                "class {j} is empty; reduce n below {n}"
            )));
        }
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        classes.push(UniClass {
            q_lo: if j == 0 { None } else { Some(cuts[j - 1]) },
            q_hi: if j == n - 1 { None } else { Some(cuts[j]) },
            node: median_sorted(&m),
            count: m.len(),
        });
    }
    Ok(ClassPartition::Univariate { classes })
}

/// Builds the bivariate partition: per anchor line, members sorted by the
/// along-line coordinate are split into floor(count/delta) contiguous
/// intervals (remainder merged into the last one); each node is the line point
/// at the middle of the interval's coordinate range.
pub fn bivariate_partition(
    points: &[FusedPoint],
    lines: &[QuantileLine],
    delta: usize,
) -> Result<ClassPartition> {
    if delta < 1 {
        return Err(DckError::invalid("delta must be >= 1"));
    }
    let mut per_line: Vec<Vec<(f64, usize)>> = vec![Vec::new(); lines.len()];
    for (i, p) in points.iter().enumerate() {
        if p.line >= lines.len() {
            return Err(DckError::invalid(format!(
                "fused point {i} references line {} of {}",
                p.line,
                lines.len()
            )));
        }
        let t = lines[p.line].along_line(p.z1, p.z2);
        per_line[p.line].push((t, i));
    }

    let mut classes = Vec::new();
    for (k, mut ts) in per_line.into_iter().enumerate() {
        if ts.len() < delta {
            return Err(DckError::invalid(format!(
                "line {k} has {} points, fewer than delta = {delta}",
                ts.len()
            )));
        }
        ts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let m2k = ts.len() / delta;
        for c in 0..m2k {
            let start = c * delta;
            let end = if c == m2k - 1 { ts.len() } else { start + delta };
            let slice = &ts[start..end];
            let t_min = slice.first().unwrap().0;
            let t_max = slice.last().unwrap().0;
            // Assignment cuts fall halfway between adjacent intervals.
            let t_lo = if c == 0 {
                t_min
            } else {
                0.5 * (ts[start - 1].0 + t_min)
            };
            let t_hi = if c == m2k - 1 {
                t_max
            } else {
                0.5 * (t_max + ts[end].0)
            };
            let (z1_node, z2_node) = lines[k].point_at(0.5 * (t_min + t_max));
            classes.push(BiClass {
                k,
                t_lo,
                t_hi,
                z1_node,
                z2_node,
                count: slice.len(),
            });
        }
    }
    Ok(ClassPartition::Bivariate { classes })
}

/// Univariate class index for one value; boundary values go left.
pub fn assign_univariate(classes: &[UniClass], value: f64) -> usize {
    classes
        .iter()
        .position(|c| match c.q_hi {
            Some(hi) => value <= hi,
            None => true,
        })
        .expect("last class is unbounded")
}

/// Bivariate class index for one (z1, z2) pair given the partition's lines.
/// Coordinates beyond a line's covered range clamp to the end class; returns
/// whether clamping occurred.
pub fn assign_bivariate(
    classes: &[BiClass],
    lines: &[QuantileLine],
    z1: f64,
    z2: f64,
) -> (usize, bool) {
    let k = nearest_line(lines, z1, z2);
    let t = lines[k].along_line(z1, z2);
    let line_classes: Vec<(usize, &BiClass)> = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.k == k)
        .collect();
    debug_assert!(!line_classes.is_empty());
    let first = line_classes.first().unwrap();
    let last = line_classes.last().unwrap();
    if t < first.1.t_lo {
        return (first.0, true);
    }
    if t > last.1.t_hi {
        return (last.0, true);
    }
    // Boundary t exactly at a cut goes to the left interval.
    for (idx, c) in &line_classes {
        let is_last = idx == &last.0;
        if t <= c.t_hi || is_last {
            return (*idx, false);
        }
    }
    unreachable!()
}

/// Labels each fused point with its class, preserving input order.
pub fn assign_labels_bivariate(
    partition: &ClassPartition,
    lines: &[QuantileLine],
    points: &[FusedPoint],
) -> Result<LabeledDataset> {
    let ClassPartition::Bivariate { classes } = partition else {
        return Err(DckError::invalid("expected a bivariate partition"));
    };
    let mut labels = Vec::with_capacity(points.len());
    let mut clamped = 0;
    for p in points {
        let (label, was_clamped) = assign_bivariate(classes, lines, p.z1, p.z2);
        if was_clamped {
            clamped += 1;
        }
        labels.push(label);
    }
    Ok(LabeledDataset {
        locations: points.iter().map(|p| p.location).collect(),
        covariates: None,
        labels,
        clamped,
    })
}

/// Labels univariate observations with their threshold class.
pub fn assign_labels_univariate(
    partition: &ClassPartition,
    values: &[f64],
    locations: &[Location],
    covariates: Option<Vec<Vec<f64>>>,
) -> Result<LabeledDataset> {
    let ClassPartition::Univariate { classes } = partition else {
        return Err(DckError::invalid("expected a univariate partition"));
    };
    if values.len() != locations.len() {
        return Err(DckError::shape("values/locations length mismatch"));
    }
    let labels = values
        .iter()
        .map(|&v| assign_univariate(classes, v))
        .collect();
    Ok(LabeledDataset {
        locations: locations.to_vec(),
        covariates,
        labels,
        clamped: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::FusedSource;

    #[test]
    fn two_class_split_of_1_to_100() {
        let values: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let part = univariate_partition(&values, 2).unwrap();
        let ClassPartition::Univariate { classes } = &part else {
            panic!()
        };
        assert_eq!(classes.len(), 2);
        // Single interior cut at the 0.5-level quantile (50.5 under linear
        // interpolation) splits 50/50.
        assert_eq!(classes[0].count, 50);
        assert_eq!(classes[1].count, 50);
        assert_eq!(classes[0].q_hi, Some(50.5));
        assert_eq!(classes[0].q_lo, None);
        assert_eq!(classes[1].q_hi, None);
    }

    #[test]
    fn constant_values_are_rejected() {
        let values = vec![2.0; 50];
        assert!(univariate_partition(&values, 3).is_err());
    }

    #[test]
    fn thirty_classes_on_gaussian_draws() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..1600)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let part = univariate_partition(&values, 30).unwrap();
        assert_eq!(part.len(), 30);
        let ClassPartition::Univariate { classes } = &part else {
            panic!()
        };
        assert!(classes.iter().all(|c| c.count >= 1));
        assert_eq!(classes.iter().map(|c| c.count).sum::<usize>(), 1600);
    }

    fn line(intercept: f64, slope: f64, tau: f64) -> QuantileLine {
        QuantileLine {
            tau,
            intercept,
            slope,
        }
    }

    fn on_line_points(l: &QuantileLine, z2s: &[f64], k: usize) -> Vec<FusedPoint> {
        z2s.iter()
            .map(|&z2| FusedPoint {
                z1: l.predict(z2),
                z2,
                location: Location { x: z2, y: 0.0 },
                source: FusedSource::Projected,
                line: k,
            })
            .collect()
    }

    #[test]
    fn floor_division_and_remainder_merge() {
        let l = line(0.3, 1.2, 0.5);
        let z2s: Vec<f64> = (0..45).map(|i| i as f64 * 0.1).collect();
        let part = bivariate_partition(&on_line_points(&l, &z2s, 0), &[l], 15).unwrap();
        let ClassPartition::Bivariate { classes } = &part else {
            panic!()
        };
        assert_eq!(classes.len(), 3);
        assert!(classes.iter().all(|c| c.count == 15));

        let z2s: Vec<f64> = (0..47).map(|i| i as f64 * 0.1).collect();
        let part = bivariate_partition(&on_line_points(&l, &z2s, 0), &[l], 15).unwrap();
        let ClassPartition::Bivariate { classes } = &part else {
            panic!()
        };
        let counts: Vec<usize> = classes.iter().map(|c| c.count).collect();
        assert_eq!(counts, vec![15, 15, 17]);
    }

    #[test]
    fn too_few_points_on_a_line_errors() {
        let l = line(0.0, 1.0, 0.5);
        let z2s: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(bivariate_partition(&on_line_points(&l, &z2s, 0), &[l], 15).is_err());
    }

    #[test]
    fn nodes_lie_on_their_lines() {
        let lines = vec![line(-1.0, 0.8, 0.25), line(1.0, 1.4, 0.75)];
        let mut points = on_line_points(&lines[0], &(0..40).map(|i| i as f64 * 0.2).collect::<Vec<_>>(), 0);
        points.extend(on_line_points(
            &lines[1],
            &(0..33).map(|i| 1.0 + i as f64 * 0.15).collect::<Vec<_>>(),
            1,
        ));
        let part = bivariate_partition(&points, &lines, 10).unwrap();
        let ClassPartition::Bivariate { classes } = &part else {
            panic!()
        };
        assert_eq!(classes.len(), 4 + 3);
        for c in classes {
            let expect = lines[c.k].predict(c.z2_node);
            assert!(
                (c.z1_node - expect).abs() < 1e-10,
                "node off line: {} vs {expect}",
                c.z1_node
            );
        }
    }

    #[test]
    fn assignment_reproduces_construction_membership() {
        let lines = vec![line(0.0, 1.0, 0.25), line(3.0, 0.5, 0.75)];
        let mut points = on_line_points(&lines[0], &(0..31).map(|i| i as f64 * 0.3).collect::<Vec<_>>(), 0);
        points.extend(on_line_points(
            &lines[1],
            &(0..25).map(|i| i as f64 * 0.4).collect::<Vec<_>>(),
            1,
        ));
        let part = bivariate_partition(&points, &lines, 7).unwrap();
        let labeled = assign_labels_bivariate(&part, &lines, &points).unwrap();
        assert_eq!(labeled.clamped, 0);
        // Recompute memberships from counts: every class receives exactly its
        // construction count.
        let ClassPartition::Bivariate { classes } = &part else {
            panic!()
        };
        let mut seen = vec![0usize; classes.len()];
        for &l in &labeled.labels {
            seen[l] += 1;
        }
        let expected: Vec<usize> = classes.iter().map(|c| c.count).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn univariate_assignment_edges() {
        let values: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let part = univariate_partition(&values, 4).unwrap();
        let ClassPartition::Univariate { classes } = &part else {
            panic!()
        };
        assert_eq!(assign_univariate(classes, -1000.0), 0);
        assert_eq!(assign_univariate(classes, 1000.0), 3);
        // Exactly at a cut goes left.
        let cut = classes[0].q_hi.unwrap();
        assert_eq!(assign_univariate(classes, cut), 0);
        // Self-consistency with construction counts.
        let mut seen = vec![0usize; 4];
        for &v in &values {
            seen[assign_univariate(classes, v)] += 1;
        }
        let expected: Vec<usize> = classes.iter().map(|c| c.count).collect();
        assert_eq!(seen, expected);
    }
}
