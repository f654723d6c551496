//! Evaluation metrics: point error, interval coverage and length, multivariate
//! proper scoring rules on predictive samples, and the probability integral
//! transform.

use serde::{Deserialize, Serialize};

use crate::cdf::PredictiveCdf;
use crate::error::DckError;
use crate::Result;

/// Mean absolute error of point predictions. (The replication tables label
/// this MAE for "median absolute error" but average plain absolute errors;
/// this is the plain mean.)
pub fn mae(predicted: &[f64], truths: &[f64]) -> Result<f64> {
    if predicted.len() != truths.len() || predicted.is_empty() {
        return Err(DckError::shape(format!(
            "mae needs equal nonempty lengths, got {} and {}",
            predicted.len(),
            truths.len()
        )));
    }
    Ok(predicted
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / truths.len() as f64)
}

/// Coverage of closed intervals [lower, upper] and their average length.
/// A truth exactly on a bound counts as covered.
pub fn picp_al(lowers: &[f64], uppers: &[f64], truths: &[f64]) -> Result<(f64, f64)> {
    let n = truths.len();
    if lowers.len() != n || uppers.len() != n || n == 0 {
        return Err(DckError::shape("picp_al needs equal nonempty lengths"));
    }
    if lowers.iter().zip(uppers).any(|(l, u)| l > u) {
        return Err(DckError::invalid("interval with lower > upper"));
    }
    let mut covered = 0usize;
    let mut length = 0.0;
    for i in 0..n {
        if truths[i] >= lowers[i] && truths[i] <= uppers[i] {
            covered += 1;
        }
        length += uppers[i] - lowers[i];
    }
    Ok((covered as f64 / n as f64, length / n as f64))
}

fn euclid(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Energy score: mean over locations of
/// (1/M) sum_m ||Y_m - Z|| - (1/2M^2) sum_{m,m'} ||Y_m - Y_m'||.
pub fn energy_score(samples: &[Vec<(f64, f64)>], observations: &[(f64, f64)]) -> Result<f64> {
    if samples.len() != observations.len() || samples.is_empty() {
        return Err(DckError::shape(
            "energy score needs one sample set per observation",
        ));
    }
    let mut total = 0.0;
    for (draws, &obs) in samples.iter().zip(observations) {
        let m = draws.len();
        if m == 0 {
            return Err(DckError::invalid("empty sample set"));
        }
        let to_obs: f64 = draws.iter().map(|&d| euclid(d, obs)).sum::<f64>() / m as f64;
        let mut pairwise = 0.0;
        for a in draws {
            for b in draws {
                pairwise += euclid(*a, *b);
            }
        }
        total += to_obs - pairwise / (2.0 * (m * m) as f64);
    }
    Ok(total / samples.len() as f64)
}

/// Variogram score of order beta: mean over locations of
/// (|Z1 - Z2|^beta - (1/M) sum_m |Y1_m - Y2_m|^beta)^2.
pub fn variogram_score(
    samples: &[Vec<(f64, f64)>],
    observations: &[(f64, f64)],
    beta: f64,
) -> Result<f64> {
    if samples.len() != observations.len() || samples.is_empty() {
        return Err(DckError::shape(
            "variogram score needs one sample set per observation",
        ));
    }
    if beta <= 0.0 {
        return Err(DckError::invalid("beta must be positive"));
    }
    let mut total = 0.0;
    for (draws, &obs) in samples.iter().zip(observations) {
        let m = draws.len();
        if m == 0 {
            return Err(DckError::invalid("empty sample set"));
        }
        let observed = (obs.0 - obs.1).abs().powf(beta);
        let sampled: f64 = draws
            .iter()
            .map(|d| (d.0 - d.1).abs().powf(beta))
            .sum::<f64>()
            / m as f64;
        total += (observed - sampled).powi(2);
    }
    Ok(total / samples.len() as f64)
}

/// Probability integral transform: each predictive CDF evaluated at its
/// realized observation. Uniform on [0,1] under perfect calibration.
pub fn pit(predictions: &[PredictiveCdf], observations: &[f64]) -> Result<Vec<f64>> {
    if predictions.len() != observations.len() {
        return Err(DckError::shape("one CDF per observation required"));
    }
    predictions
        .iter()
        .zip(observations)
        .map(|(p, &z)| p.cdf(z))
        .collect()
}

/// Kolmogorov-Smirnov distance of values in [0,1] against the uniform law.
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        ks = ks
            .max((v - i as f64 / n).abs())
            .max((v - (i + 1) as f64 / n).abs());
    }
    ks
}

/// Per-replicate metric rows plus aggregate means and standard errors given
/// as relative percentages of the mean, matching the replication tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<MetricRow>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricRow {
    pub replicate: usize,
    pub mae: f64,
    pub picp: f64,
    pub al: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Aggregate {
    pub mae: f64,
    pub mae_se_rel: Option<f64>,
    pub picp: f64,
    pub picp_se_rel: Option<f64>,
    pub al: f64,
    pub al_se_rel: Option<f64>,
    pub seconds: f64,
}

impl ResultTable {
    pub fn aggregate(&self) -> Aggregate {
        let n = self.rows.len() as f64;
        let mean = |f: fn(&MetricRow) -> f64| self.rows.iter().map(f).sum::<f64>() / n;
        let se_rel = |f: fn(&MetricRow) -> f64, mean_v: f64| {
            if self.rows.len() < 2 || mean_v == 0.0 {
                None
            } else {
                let var = self
                    .rows
                    .iter()
                    .map(|r| (f(r) - mean_v).powi(2))
                    .sum::<f64>()
                    / (n - 1.0);
                Some(100.0 * (var / n).sqrt() / mean_v.abs())
            }
        };
        let mae_m = mean(|r| r.mae);
        let picp_m = mean(|r| r.picp);
        let al_m = mean(|r| r.al);
        Aggregate {
            mae: mae_m,
            mae_se_rel: se_rel(|r| r.mae, mae_m),
            picp: picp_m,
            picp_se_rel: se_rel(|r| r.picp, picp_m),
            al: al_m,
            al_se_rel: se_rel(|r| r.al, al_m),
            seconds: mean(|r| r.seconds),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_reference_cases() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 4.0], &[0.0, 1.0]).unwrap(), 2.0);
        // Permutation invariance over locations.
        let a = mae(&[1.0, 5.0, -2.0], &[0.0, 4.0, 1.0]).unwrap();
        let b = mae(&[5.0, -2.0, 1.0], &[4.0, 1.0, 0.0]).unwrap();
        assert_eq!(a, b);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn coverage_boundary_and_counting() {
        let (picp, al) = picp_al(
            &[f64::NEG_INFINITY, f64::NEG_INFINITY],
            &[f64::INFINITY, f64::INFINITY],
            &[0.0, 5.0],
        )
        .unwrap();
        assert_eq!(picp, 1.0);
        assert!(al.is_infinite());

        // Truth exactly on a bound is covered.
        let (picp, _) = picp_al(&[1.0], &[2.0], &[2.0]).unwrap();
        assert_eq!(picp, 1.0);

        let lowers = vec![0.0; 4];
        let uppers = vec![2.0; 4];
        let truths = vec![1.0, 1.5, 3.0, -1.0];
        let (picp, al) = picp_al(&lowers, &uppers, &truths).unwrap();
        assert_eq!(picp, 0.5);
        assert_eq!(al, 2.0);

        assert!(picp_al(&[3.0], &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn energy_score_hand_cases() {
        // Single sample equal to the observation.
        let es = energy_score(&[vec![(1.0, 2.0)]], &[(1.0, 2.0)]).unwrap();
        assert_eq!(es, 0.0);

        // Two samples straddling the observation.
        let es = energy_score(&[vec![(0.0, 0.0), (2.0, 0.0)]], &[(1.0, 0.0)]).unwrap();
        assert!((es - 0.5).abs() < 1e-12);

        // Nonnegative on crafted mismatches.
        let es = energy_score(&[vec![(5.0, 5.0), (6.0, 5.0)]], &[(0.0, 0.0)]).unwrap();
        assert!(es > 0.0);
    }

    #[test]
    fn variogram_score_hand_cases() {
        // Samples reproducing the observed gap give zero.
        let vs = variogram_score(&[vec![(3.0, 1.0)]], &[(3.0, 1.0)], 0.5).unwrap();
        assert_eq!(vs, 0.0);

        let vs = variogram_score(&[vec![(2.0, 2.0)]], &[(3.0, 1.0)], 0.5).unwrap();
        assert!((vs - 2.0).abs() < 1e-12);

        // Square law in the observed term when the sample term vanishes.
        let vs1 = variogram_score(&[vec![(0.0, 0.0)]], &[(1.0, 0.0)], 0.5).unwrap();
        let vs2 = variogram_score(&[vec![(0.0, 0.0)]], &[(4.0, 0.0)], 0.5).unwrap();
        assert!((vs2 / vs1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pit_center_and_self_consistency() {
        let p = PredictiveCdf::new(vec![1.0], vec![0.0], None, 1.0).unwrap();
        let med = p.quantile(0.5, None).unwrap();
        let u = pit(&[p.clone()], &[med]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-9);

        // Observations drawn from the predictive mixture itself give uniform
        // PIT values.
        let mixture = PredictiveCdf::new(vec![0.3, 0.7], vec![-2.0, 1.0], None, 0.5).unwrap();
        let mut rng = crate::rng::SeedPolicy::new(99).stream(crate::rng::stream::SAMPLING);
        let draws = mixture.sample_joint(10_000, &mut rng).unwrap();
        let observations: Vec<f64> = draws
            .iter()
            .map(|s| match s {
                crate::cdf::JointSample::Scalar(v) => *v,
                _ => unreachable!(),
            })
            .collect();
        let preds = vec![mixture; observations.len()];
        let u = pit(&preds, &observations).unwrap();
        assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
        let ks = ks_uniform(&u);
        assert!(ks < 0.02, "KS distance {ks}");
    }

    #[test]
    fn aggregate_relative_standard_errors() {
        let table = ResultTable {
            rows: vec![
                MetricRow {
                    replicate: 0,
                    mae: 1.0,
                    picp: 0.9,
                    al: 2.0,
                    seconds: 1.0,
                },
                MetricRow {
                    replicate: 1,
                    mae: 3.0,
                    picp: 0.95,
                    al: 2.0,
                    seconds: 3.0,
                },
            ],
        };
        let agg = table.aggregate();
        assert_eq!(agg.mae, 2.0);
        // sd = sqrt(2), se = 1, relative = 50%.
        assert!((agg.mae_se_rel.unwrap() - 50.0).abs() < 1e-9);
        assert_eq!(agg.al_se_rel.unwrap(), 0.0);

        let single = ResultTable {
            rows: table.rows[..1].to_vec(),
        };
        assert!(single.aggregate().mae_se_rel.is_none());
    }
}
