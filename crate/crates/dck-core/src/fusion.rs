//! Data fusion for non-collocated bivariate observations: kappa-NN collocation,
//! quantile-line fitting by iteratively reweighted least squares on the check
//! loss, orthogonal projection onto the nearest line, and soft-NN augmentation
//! of the sites observed only for the dense variable.

use serde::{Deserialize, Serialize};

use crate::error::DckError;
use crate::types::{BiSampleSets, Location, UniDataset};
use crate::Result;

/// How the augmentation step compares the neighbor vector to a scalar line
/// prediction when selecting the anchor line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NeighborDistance {
    /// Mean absolute deviation of the neighbors from the candidate.
    #[default]
    Mean,
    /// Minimum absolute deviation.
    Min,
    /// Median absolute deviation.
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Quantile levels, strictly increasing in (0,1); m1 = taus.len().
    pub taus: Vec<f64>,
    /// Neighbors used to collocate each sparse-variable site.
    pub kappa: usize,
    /// Neighbors used by the augmentation step.
    pub kappa2: usize,
    /// Small positive constant guarding the softmax temperature.
    pub epsilon: f64,
    #[serde(default)]
    pub neighbor_distance: NeighborDistance,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            taus: vec![0.05, 0.275, 0.5, 0.725, 0.95],
            kappa: 1,
            kappa2: 5,
            epsilon: 1e-8,
            neighbor_distance: NeighborDistance::Mean,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(DckError::invalid("at least one quantile level required"));
        }
        if self
            .taus
            .windows(2)
            .any(|w| w[1] <= w[0])
            || self.taus.iter().any(|t| !(0.0 < *t && *t < 1.0))
        {
            return Err(DckError::invalid(
                "quantile levels must be strictly increasing within (0,1)",
            ));
        }
        if self.kappa < 1 || self.kappa2 < 1 {
            return Err(DckError::invalid("kappa and kappa2 must be >= 1"));
        }
        if self.epsilon <= 0.0 {
            return Err(DckError::invalid("epsilon must be positive"));
        }
        Ok(())
    }
}

/// A fitted conditional-quantile line z1 = intercept + slope * z2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileLine {
    pub tau: f64,
    pub intercept: f64,
    pub slope: f64,
}

impl QuantileLine {
    pub fn predict(&self, z2: f64) -> f64 {
        self.intercept + self.slope * z2
    }

    /// Arc-length coordinate of a point's orthogonal projection onto the line.
    pub fn along_line(&self, z1: f64, z2: f64) -> f64 {
        (z2 + self.slope * (z1 - self.intercept)) / (1.0 + self.slope * self.slope).sqrt()
    }

    /// Point on the line at arc-length coordinate `t`.
    pub fn point_at(&self, t: f64) -> (f64, f64) {
        let z2 = t / (1.0 + self.slope * self.slope).sqrt();
        (self.predict(z2), z2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusedSource {
    Projected,
    Augmented,
}

/// One fused (z1, z2) pair located at a dense-variable site.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedPoint {
    pub z1: f64,
    pub z2: f64,
    pub location: Location,
    pub source: FusedSource,
    /// Index of the anchor quantile line (0-based).
    pub line: usize,
}

/// One collocated pair: the sparse observation and the mean of its kappa
/// nearest dense-variable neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocatedPair {
    pub z1: f64,
    pub z2bar: f64,
    /// Index of this pair's site in the sparse set.
    pub s1_index: usize,
    /// Index (into the dense set) of the single nearest neighbor; its location
    /// represents the pair downstream.
    pub nearest_s2: usize,
}

/// Output of the full fusion pass: the combined point set with aligned
/// locations, plus the fitted lines and the collocated pairs.
#[derive(Debug, Clone)]
pub struct Fused {
    pub points: Vec<FusedPoint>,
    pub lines: Vec<QuantileLine>,
    pub collocated: Vec<CollocatedPair>,
}

impl Fused {
    pub fn locations(&self) -> Vec<Location> {
        self.points.iter().map(|p| p.location).collect()
    }
}

/// Indices of the k nearest `candidates` to `target` by Euclidean distance,
/// ties broken by index order.
fn k_nearest(target: &Location, candidates: &[Location], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let da = target.dist(&candidates[a]);
        let db = target.dist(&candidates[b]);
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Pairs each sparse-variable site with the mean of the dense variable over
/// its kappa nearest sites (set U).
pub fn collocate(data: &BiSampleSets, kappa: usize) -> Result<Vec<CollocatedPair>> {
    if data.set1.is_empty() || data.set2.is_empty() {
        return Err(DckError::invalid("collocation needs nonempty sets"));
    }
    if data.set2.len() < kappa {
        return Err(DckError::invalid(format!(
            "kappa = {kappa} exceeds the {} dense-variable sites",
            data.set2.len()
        )));
    }
    let mut pairs = Vec::with_capacity(data.set1.len());
    for (i, s1) in data.set1.locations.iter().enumerate() {
        let nn = k_nearest(s1, &data.set2.locations, kappa);
        let z2bar = nn.iter().map(|&j| data.set2.values[j]).sum::<f64>() / kappa as f64;
        pairs.push(CollocatedPair {
            z1: data.set1.values[i],
            z2bar,
            s1_index: i,
            nearest_s2: nn[0],
        });
    }
    Ok(pairs)
}

/// Total check loss of a candidate line on (z2, z1) pairs.
pub fn pinball_loss(pairs: &[(f64, f64)], tau: f64, intercept: f64, slope: f64) -> f64 {
    pairs
        .iter()
        .map(|&(z2, z1)| {
            let r = z1 - intercept - slope * z2;
            if r >= 0.0 {
                tau * r
            } else {
                (tau - 1.0) * r
            }
        })
        .sum()
}

/// Fits z1 = a + b z2 minimizing the tau check loss, by IRLS on an
/// epsilon-smoothed check function. `pairs` are (z2, z1).
pub fn fit_quantile_line(pairs: &[(f64, f64)], tau: f64) -> Result<QuantileLine> {
    const SMOOTHING: f64 = 1e-6;
    const TOL: f64 = 1e-8;
    const MAX_ITER: usize = 200;

    if pairs.len() < 3 {
        return Err(DckError::invalid(format!(
            "quantile fit needs >= 3 pairs, got {}",
            pairs.len()
        )));
    }
    if !(0.0 < tau && tau < 1.0) {
        return Err(DckError::invalid(format!("tau = {tau} outside (0,1)")));
    }
    let z2_min = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let z2_max = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if z2_max - z2_min <= 0.0 {
        return Err(DckError::invalid(
            "degenerate predictor: all z2 values identical",
        ));
    }

    // Least-squares start.
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let mut slope = sxy / sxx;
    let mut intercept = mean_y - slope * mean_x;

    let y_scale = pairs
        .iter()
        .map(|p| p.1.abs())
        .fold(0.0f64, f64::max)
        .max(1.0);

    for _ in 0..MAX_ITER {
        // Weighted normal equations for sum w_i (y - a - b x)^2 with
        // w_i = |tau - 1{r<0}| / max(|r|, eps).
        let mut sw = 0.0;
        let mut swx = 0.0;
        let mut swxx = 0.0;
        let mut swy = 0.0;
        let mut swxy = 0.0;
        for &(x, y) in pairs {
            let r = y - intercept - slope * x;
            let grad = if r >= 0.0 { tau } else { 1.0 - tau };
            let w = grad / r.abs().max(SMOOTHING * y_scale);
            sw += w;
            swx += w * x;
            swxx += w * x * x;
            swy += w * y;
            swxy += w * x * y;
        }
        let det = sw * swxx - swx * swx;
        if det.abs() < 1e-300 {
            return Err(DckError::numeric("singular IRLS system in quantile fit"));
        }
        let new_intercept = (swy * swxx - swx * swxy) / det;
        let new_slope = (sw * swxy - swx * swy) / det;
        let delta = (new_intercept - intercept)
            .abs()
            .max((new_slope - slope).abs());
        intercept = new_intercept;
        slope = new_slope;
        if delta < TOL * (1.0 + intercept.abs() + slope.abs()) {
            if !intercept.is_finite() || !slope.is_finite() {
                return Err(DckError::numeric("quantile fit diverged"));
            }
            return Ok(QuantileLine {
                tau,
                intercept,
                slope,
            });
        }
    }
    if !intercept.is_finite() || !slope.is_finite() {
        return Err(DckError::numeric("quantile fit diverged"));
    }
    // IRLS may keep cycling within the smoothing radius; the final iterate is
    // still a valid minimizer to within the advertised tolerance.
    Ok(QuantileLine {
        tau,
        intercept,
        slope,
    })
}

/// Index of the line with the smallest vertical residual |z1 - a - b z2|,
/// ties toward the smaller index.
pub fn nearest_line(lines: &[QuantileLine], z1: f64, z2: f64) -> usize {
    let mut best = 0;
    let mut best_res = f64::INFINITY;
    for (k, line) in lines.iter().enumerate() {
        let r = (z1 - line.predict(z2)).abs();
        if r < best_res {
            best_res = r;
            best = k;
        }
    }
    best
}

/// Projects each collocated pair orthogonally onto its nearest quantile line
/// (set V1). Locations come from each pair's matched dense-variable site.
pub fn project_to_lines(
    pairs: &[CollocatedPair],
    lines: &[QuantileLine],
    s2_locations: &[Location],
) -> Result<Vec<FusedPoint>> {
    if lines.is_empty() {
        return Err(DckError::invalid("no quantile lines"));
    }
    Ok(pairs
        .iter()
        .map(|pair| {
            let k = nearest_line(lines, pair.z1, pair.z2bar);
            let line = &lines[k];
            let b = line.slope;
            let z2_proj = (pair.z2bar + b * (pair.z1 - line.intercept)) / (1.0 + b * b);
            FusedPoint {
                z1: line.predict(z2_proj),
                z2: z2_proj,
                location: s2_locations[pair.nearest_s2],
                source: FusedSource::Projected,
                line: k,
            }
        })
        .collect())
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Soft-NN augmentation of dense-only sites (set V2): each site receives the
/// expected sparse value under softmax weights over the per-line candidates.
pub fn augment(
    z2_only: &UniDataset,
    lines: &[QuantileLine],
    z1_train: &UniDataset,
    kappa2: usize,
    epsilon: f64,
    neighbor_distance: NeighborDistance,
) -> Result<Vec<FusedPoint>> {
    if z1_train.len() < kappa2 {
        return Err(DckError::invalid(format!(
            "kappa2 = {kappa2} exceeds the {} sparse observations",
            z1_train.len()
        )));
    }
    let mut out = Vec::with_capacity(z2_only.len());
    for (i, site) in z2_only.locations.iter().enumerate() {
        let z2 = z2_only.values[i];
        let candidates: Vec<f64> = lines.iter().map(|l| l.predict(z2)).collect();

        let nn = k_nearest(site, &z1_train.locations, kappa2);
        let neighbors: Vec<f64> = nn.iter().map(|&j| z1_train.values[j]).collect();
        let mut k_star = 0;
        let mut best = f64::INFINITY;
        for (k, &q) in candidates.iter().enumerate() {
            let mut devs: Vec<f64> = neighbors.iter().map(|&z| (z - q).abs()).collect();
            let dist = match neighbor_distance {
                NeighborDistance::Mean => devs.iter().sum::<f64>() / devs.len() as f64,
                NeighborDistance::Min => devs.iter().cloned().fold(f64::INFINITY, f64::min),
                NeighborDistance::Median => median_of(&mut devs),
            };
            if dist < best {
                best = dist;
                k_star = k;
            }
        }

        let r: Vec<f64> = candidates
            .iter()
            .map(|&q| (q - candidates[k_star]).abs())
            .collect();
        let mut r_sorted = r.clone();
        let med = median_of(&mut r_sorted);
        let temp = med + epsilon;
        let mut weights: Vec<f64> = r.iter().map(|&rk| (-rk / temp).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let z1_exp: f64 = weights
            .iter()
            .zip(&candidates)
            .map(|(p, q)| p * q)
            .sum();
        out.push(FusedPoint {
            z1: z1_exp,
            z2,
            location: *site,
            source: FusedSource::Augmented,
            line: k_star,
        });
    }
    Ok(out)
}

/// Runs the full fusion pass: collocation, quantile fits, projection of the
/// collocated pairs, and augmentation of the unmatched dense sites.
pub fn fuse(data: &BiSampleSets, config: &FusionConfig) -> Result<Fused> {
    config.validate()?;
    let n1 = data.set1.len();
    let n2 = data.set2.len();
    if !(n2 > n1 && n1 >= 3) {
        return Err(DckError::invalid(format!(
            "fusion requires N2 > N1 >= 3, got N1 = {n1}, N2 = {n2}"
        )));
    }

    let collocated = collocate(data, config.kappa)?;
    let u_pairs: Vec<(f64, f64)> = collocated.iter().map(|p| (p.z2bar, p.z1)).collect();
    let lines: Vec<QuantileLine> = config
        .taus
        .iter()
        .map(|&tau| fit_quantile_line(&u_pairs, tau))
        .collect::<Result<_>>()?;

    let mut points = project_to_lines(&collocated, &lines, &data.set2.locations)?;

    // Dense sites already consumed by the projection keep their fused point;
    // the rest are augmented.
    let mut used = vec![false; n2];
    for pair in &collocated {
        used[pair.nearest_s2] = true;
    }
    let rest: Vec<usize> = (0..n2).filter(|&j| !used[j]).collect();
    let z2_only = UniDataset::new(
        rest.iter().map(|&j| data.set2.locations[j]).collect(),
        rest.iter().map(|&j| data.set2.values[j]).collect(),
        None,
    )?;
    if !z2_only.is_empty() {
        points.extend(augment(
            &z2_only,
            &lines,
            &data.set1,
            config.kappa2,
            config.epsilon,
            config.neighbor_distance,
        )?);
    }

    Ok(Fused {
        points,
        lines,
        collocated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(x: f64, y: f64) -> Location {
        Location { x, y }
    }

    fn grid_data() -> BiSampleSets {
        // Dense set: 5x5 grid with z2 = x + y; sparse set: 3 interior sites.
        let mut locs2 = Vec::new();
        let mut z2 = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let (x, y) = (i as f64 / 4.0, j as f64 / 4.0);
                locs2.push(loc(x, y));
                z2.push(x + y);
            }
        }
        let locs1 = vec![loc(0.26, 0.26), loc(0.51, 0.51), loc(0.76, 0.76)];
        let z1 = vec![1.0, 2.0, 3.0];
        BiSampleSets::new(
            UniDataset::new(locs1, z1, None).unwrap(),
            UniDataset::new(locs2, z2, None).unwrap(),
        )
    }

    #[test]
    fn collocate_zero_distance_neighbor() {
        let s2 = UniDataset::new(vec![loc(0.0, 0.0), loc(1.0, 1.0)], vec![5.0, 9.0], None).unwrap();
        let s1 = UniDataset::new(vec![loc(1.0, 1.0)], vec![2.0], None).unwrap();
        let pairs = collocate(&BiSampleSets::new(s1, s2), 1).unwrap();
        assert_eq!(pairs[0].z2bar, 9.0);
        assert_eq!(pairs[0].nearest_s2, 1);
    }

    #[test]
    fn collocate_constant_field_and_mean() {
        let s2 = UniDataset::new(
            vec![loc(0.0, 0.0), loc(0.1, 0.0), loc(0.2, 0.0), loc(5.0, 5.0)],
            vec![3.0, 3.0, 3.0, 100.0],
            None,
        )
        .unwrap();
        let s1 = UniDataset::new(vec![loc(0.05, 0.0)], vec![1.0], None).unwrap();
        let pairs = collocate(&BiSampleSets::new(s1.clone(), s2), 3).unwrap();
        assert_eq!(pairs[0].z2bar, 3.0);

        let s2b = UniDataset::new(
            vec![loc(0.0, 0.0), loc(0.1, 0.0), loc(9.0, 9.0)],
            vec![1.0, 3.0, 50.0],
            None,
        )
        .unwrap();
        let pairs = collocate(&BiSampleSets::new(s1, s2b), 2).unwrap();
        assert_eq!(pairs[0].z2bar, 2.0);
    }

    #[test]
    fn quantile_fit_recovers_exact_line() {
        let pairs: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let x = i as f64 * 0.3;
                (x, 2.0 * x + 1.0)
            })
            .collect();
        for tau in [0.1, 0.5, 0.9] {
            let line = fit_quantile_line(&pairs, tau).unwrap();
            assert!((line.intercept - 1.0).abs() < 1e-6, "a = {}", line.intercept);
            assert!((line.slope - 2.0).abs() < 1e-6, "b = {}", line.slope);
        }
    }

    #[test]
    fn median_fit_balances_residual_signs() {
        // Symmetric vertical offsets about z1 = z2.
        let mut pairs = Vec::new();
        for i in 0..25 {
            let x = i as f64 * 0.17;
            pairs.push((x, x + 1.0 + 0.03 * (i % 5) as f64));
            pairs.push((x, x - 1.0 - 0.03 * (i % 7) as f64));
        }
        let line = fit_quantile_line(&pairs, 0.5).unwrap();
        let (mut pos, mut neg) = (0i32, 0i32);
        for &(x, y) in &pairs {
            let r = y - line.predict(x);
            if r > 1e-9 {
                pos += 1;
            } else if r < -1e-9 {
                neg += 1;
            }
        }
        assert!((pos - neg).abs() <= 2, "pos {pos} neg {neg}");
    }

    #[test]
    fn degenerate_predictor_is_rejected() {
        let pairs = vec![(1.0, 0.0), (1.0, 1.0), (1.0, 2.0)];
        assert!(fit_quantile_line(&pairs, 0.5).is_err());
        assert!(fit_quantile_line(&pairs[..2], 0.5).is_err());
    }

    #[test]
    fn projection_of_reference_points() {
        let line45 = QuantileLine {
            tau: 0.5,
            intercept: 0.0,
            slope: 1.0,
        };
        let pair = CollocatedPair {
            z1: 0.0,
            z2bar: 1.0,
            s1_index: 0,
            nearest_s2: 0,
        };
        let locs = [loc(0.0, 0.0)];
        let v1 = project_to_lines(&[pair], &[line45], &locs).unwrap();
        assert!((v1[0].z2 - 0.5).abs() < 1e-12);
        assert!((v1[0].z1 - 0.5).abs() < 1e-12);

        let flat = QuantileLine {
            tau: 0.5,
            intercept: 2.0,
            slope: 0.0,
        };
        let pair = CollocatedPair {
            z1: 5.0,
            z2bar: 3.0,
            s1_index: 0,
            nearest_s2: 0,
        };
        let v1 = project_to_lines(&[pair], &[flat], &locs).unwrap();
        assert_eq!((v1[0].z2, v1[0].z1), (3.0, 2.0));
    }

    #[test]
    fn projection_is_idempotent_on_line_points() {
        let lines: Vec<QuantileLine> = (0..5)
            .map(|k| QuantileLine {
                tau: 0.1 + 0.2 * k as f64,
                intercept: k as f64,
                slope: 1.5,
            })
            .collect();
        // A point exactly on line k = 2.
        let z2 = 0.7;
        let z1 = lines[2].predict(z2);
        let pair = CollocatedPair {
            z1,
            z2bar: z2,
            s1_index: 0,
            nearest_s2: 0,
        };
        let v1 = project_to_lines(&[pair], &lines, &[loc(0.0, 0.0)]).unwrap();
        assert_eq!(v1[0].line, 2);
        assert!((v1[0].z1 - z1).abs() < 1e-12);
        assert!((v1[0].z2 - z2).abs() < 1e-12);
    }

    #[test]
    fn augment_softmax_hand_case() {
        // m1 = 2 candidate lines producing q = (0, 10) at z2 = 0; neighbors
        // all near zero anchor the first line.
        let lines = vec![
            QuantileLine {
                tau: 0.25,
                intercept: 0.0,
                slope: 1.0,
            },
            QuantileLine {
                tau: 0.75,
                intercept: 10.0,
                slope: 1.0,
            },
        ];
        let z2_only =
            UniDataset::new(vec![loc(0.0, 0.0)], vec![0.0], None).unwrap();
        let z1_train = UniDataset::new(
            vec![loc(0.0, 0.1), loc(0.1, 0.0), loc(0.1, 0.1)],
            vec![1e-9, -1e-9, 0.0],
            None,
        )
        .unwrap();
        let v2 = augment(&z2_only, &lines, &z1_train, 3, 1e-12, NeighborDistance::Mean).unwrap();
        assert_eq!(v2[0].line, 0);
        // p = softmax(0, -2) => z1_exp = 10 * e^-2 / (1 + e^-2)
        let expected = 10.0 * (-2.0f64).exp() / (1.0 + (-2.0f64).exp());
        assert!(
            (v2[0].z1 - expected).abs() < 1e-6,
            "z1_exp = {}, expected {expected}",
            v2[0].z1
        );
    }

    #[test]
    fn augment_equal_candidates_gives_uniform_weights() {
        let lines = vec![
            QuantileLine {
                tau: 0.3,
                intercept: 4.0,
                slope: 0.0,
            },
            QuantileLine {
                tau: 0.7,
                intercept: 4.0,
                slope: 0.0,
            },
        ];
        let z2_only = UniDataset::new(vec![loc(0.5, 0.5)], vec![2.0], None).unwrap();
        let z1_train =
            UniDataset::new(vec![loc(0.0, 0.0), loc(1.0, 1.0)], vec![0.0, 8.0], None).unwrap();
        let v2 = augment(&z2_only, &lines, &z1_train, 2, 1e-8, NeighborDistance::Mean).unwrap();
        assert!((v2[0].z1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fuse_covers_every_dense_site() {
        let data = grid_data();
        let config = FusionConfig {
            taus: vec![0.25, 0.5, 0.75],
            kappa: 1,
            kappa2: 2,
            ..FusionConfig::default()
        };
        let fused = fuse(&data, &config).unwrap();
        // Distinct nearest cells for the 3 sparse sites -> |V| = N2.
        assert_eq!(fused.points.len(), 25);
        let projected = fused
            .points
            .iter()
            .filter(|p| p.source == FusedSource::Projected)
            .count();
        assert_eq!(projected, 3);
        // Every projected point lies on its line.
        for p in &fused.points {
            if p.source == FusedSource::Projected {
                let line = &fused.lines[p.line];
                assert!((p.z1 - line.predict(p.z2)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fuse_requires_denser_second_set() {
        let data = grid_data();
        let swapped = BiSampleSets::new(data.set2.clone(), data.set1.clone());
        assert!(fuse(&swapped, &FusionConfig::default()).is_err());
    }
}
