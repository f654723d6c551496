//! Exact Gaussian-process (co-)kriging with plug-in or maximum-likelihood
//! covariance parameters. Serves both as the comparison method in the
//! replication harness and as a correctness oracle on Gaussian scenarios.

use ndarray::Array2;

use crate::error::DckError;
use crate::linalg;
use crate::simgen::{covariance_value, BiMaternSpec, CovarianceSpec};
use crate::types::Location;
use crate::Result;

/// Mean structure of the kriging model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrendMode {
    /// Known zero mean (simulated fields).
    #[default]
    Zero,
    /// Constant mean profiled out by generalized least squares.
    Constant,
}

/// Observations stacked across variables. `var` holds 1 or 2 per row;
/// `noisy` marks rows measured with the nugget (false for exact conditioning
/// values such as known field values at prediction sites).
#[derive(Debug, Clone, Default)]
pub struct ObsStack {
    pub locations: Vec<Location>,
    pub var: Vec<u8>,
    pub values: Vec<f64>,
    pub noisy: Vec<bool>,
}

impl ObsStack {
    pub fn univariate(locations: Vec<Location>, values: Vec<f64>) -> Self {
        let n = locations.len();
        ObsStack {
            locations,
            var: vec![1; n],
            values,
            noisy: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn push(&mut self, location: Location, var: u8, value: f64, noisy: bool) {
        self.locations.push(location);
        self.var.push(var);
        self.values.push(value);
        self.noisy.push(noisy);
    }

    fn validate(&self) -> Result<()> {
        let n = self.locations.len();
        if n == 0 {
            return Err(DckError::invalid("empty observation stack"));
        }
        if self.var.len() != n || self.values.len() != n || self.noisy.len() != n {
            return Err(DckError::shape("observation stack fields disagree"));
        }
        if self.var.iter().any(|v| *v != 1 && *v != 2) {
            return Err(DckError::invalid("variable indices must be 1 or 2"));
        }
        Ok(())
    }
}

/// Nelder-Mead settings for maximum-likelihood estimation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EstimateConfig {
    pub starts: usize,
    pub max_iters: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            starts: 2,
            max_iters: 60,
        }
    }
}

/// A fitted kriging model holding the Cholesky factor of the observation
/// covariance. Immutable after fit; predictions share the factorization.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    pub spec: CovarianceSpec,
    pub nugget: f64,
    pub trend: TrendMode,
    pub beta: f64,
    stack: ObsStack,
    chol: Array2<f64>,
    /// Sigma^{-1} (z - beta)
    alpha: Vec<f64>,
    /// Sigma^{-1} 1 (constant trend only)
    ones_solve: Option<Vec<f64>>,
}

const DENSE_BUDGET: usize = 5000;

fn assemble_sigma(stack: &ObsStack, spec: &CovarianceSpec, nugget: f64) -> Array2<f64> {
    let n = stack.len();
    let mut sigma = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let d = stack.locations[i].dist(&stack.locations[j]);
            let c = covariance_value(spec, d, (stack.var[i], stack.var[j]))
                .expect("validated spec and variable indices");
            sigma[[i, j]] = c;
            sigma[[j, i]] = c;
        }
        if stack.noisy[i] {
            sigma[[i, i]] += nugget;
        }
    }
    sigma
}

/// Negative log-likelihood (up to the constant) with an optionally profiled
/// constant mean. Returns the profiled beta as well.
fn negative_log_likelihood(
    stack: &ObsStack,
    spec: &CovarianceSpec,
    nugget: f64,
    trend: TrendMode,
) -> Result<(f64, f64)> {
    let (l, _) = linalg::cholesky_with_jitter(&|| assemble_sigma(stack, spec, nugget))?;
    let n = stack.len();
    let beta = match trend {
        TrendMode::Zero => 0.0,
        TrendMode::Constant => {
            let mut si_z = stack.values.clone();
            linalg::solve_cholesky(&l, &mut si_z);
            let mut si_1 = vec![1.0; n];
            linalg::solve_cholesky(&l, &mut si_1);
            let denom: f64 = si_1.iter().sum();
            let numer: f64 = si_z.iter().sum();
            numer / denom
        }
    };
    let mut resid: Vec<f64> = stack.values.iter().map(|z| z - beta).collect();
    let quad = {
        linalg::solve_lower(&l, &mut resid);
        resid.iter().map(|v| v * v).sum::<f64>()
    };
    let log_det: f64 = (0..n).map(|i| l[[i, i]].ln()).sum();
    Ok((0.5 * quad + log_det, beta))
}

/// Downhill-simplex minimization; small and dependency-free, good enough for
/// the low-dimensional likelihood surfaces here.
fn nelder_mead(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    step: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| objective(p)).collect();

    for _ in 0..max_iters {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];
        if (values[worst] - values[best]).abs() < 1e-7 * (1.0 + values[best].abs()) {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &i in &order[..dim] {
            for k in 0..dim {
                centroid[k] += simplex[i][k] / dim as f64;
            }
        }
        let reflect: Vec<f64> = (0..dim)
            .map(|k| centroid[k] + (centroid[k] - simplex[worst][k]))
            .collect();
        let f_reflect = objective(&reflect);
        if f_reflect < values[best] {
            let expand: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]))
                .collect();
            let f_expand = objective(&expand);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let contract: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]))
                .collect();
            let f_contract = objective(&contract);
            if f_contract < values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for i in 0..simplex.len() {
                    if i == best {
                        continue;
                    }
                    for k in 0..dim {
                        simplex[i][k] = best_point[k] + 0.5 * (simplex[i][k] - best_point[k]);
                    }
                    values[i] = objective(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

fn spec_from_params(template: &CovarianceSpec, params: &[f64]) -> (CovarianceSpec, f64) {
    match template {
        CovarianceSpec::Exponential { .. } => (
            CovarianceSpec::Exponential {
                range: params[0].exp(),
                variance: params[1].exp(),
            },
            params[2].exp(),
        ),
        CovarianceSpec::Matern { smoothness, .. } => (
            CovarianceSpec::Matern {
                range: params[0].exp(),
                smoothness: *smoothness,
                variance: params[1].exp(),
            },
            params[2].exp(),
        ),
        CovarianceSpec::BivariateMatern(bi) => (
            CovarianceSpec::BivariateMatern(BiMaternSpec {
                alpha1: params[0].exp(),
                nu1: bi.nu1,
                variance1: params[1].exp(),
                alpha2: params[2].exp(),
                nu2: bi.nu2,
                variance2: params[3].exp(),
                rho12: params[4].tanh(),
            }),
            params[5].exp(),
        ),
    }
}

fn estimate_spec(
    stack: &ObsStack,
    template: &CovarianceSpec,
    nugget0: f64,
    trend: TrendMode,
    config: &EstimateConfig,
) -> Result<(CovarianceSpec, f64)> {
    let sample_var = {
        let n = stack.len() as f64;
        let mean: f64 = stack.values.iter().sum::<f64>() / n;
        stack.values.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n
    };
    let domain = {
        let xs: Vec<f64> = stack.locations.iter().map(|l| l.x).collect();
        let ys: Vec<f64> = stack.locations.iter().map(|l| l.y).collect();
        let wx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let wy = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - ys.iter().cloned().fold(f64::INFINITY, f64::min);
        wx.max(wy).max(1e-6)
    };
    let nugget_guess = (nugget0.max(1e-4 * sample_var)).ln();

    let starts: Vec<Vec<f64>> = match template {
        CovarianceSpec::BivariateMatern(_) => (0..config.starts)
            .map(|s| {
                let scale = 4.0 * 2.0f64.powi(s as i32);
                vec![
                    (domain / scale).ln(),
                    sample_var.ln(),
                    (domain / scale).ln(),
                    sample_var.ln(),
                    0.5f64.atanh(),
                    nugget_guess,
                ]
            })
            .collect(),
        _ => (0..config.starts)
            .map(|s| {
                let scale = 4.0 * 2.0f64.powi(s as i32);
                vec![(domain / scale).ln(), sample_var.ln(), nugget_guess]
            })
            .collect(),
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut objective = |p: &[f64]| -> f64 {
            let (spec, nugget) = spec_from_params(template, p);
            match negative_log_likelihood(stack, &spec, nugget, trend) {
                Ok((nll, _)) => nll,
                Err(_) => f64::INFINITY,
            }
        };
        let (params, value) = nelder_mead(&mut objective, &start, 0.4, config.max_iters);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, params));
        }
    }
    let (_, params) = best.expect("at least one start");
    Ok(spec_from_params(template, &params))
}

/// Fits (or plugs in) a kriging model. With `estimate` set, range, variance
/// and nugget (plus rho12 for the bivariate family) are chosen by maximum
/// likelihood with the smoothness fixed at the template's value.
pub fn fit(
    stack: ObsStack,
    spec: CovarianceSpec,
    nugget: f64,
    trend: TrendMode,
    estimate: Option<EstimateConfig>,
) -> Result<KrigingModel> {
    stack.validate()?;
    spec.validate()?;
    if nugget < 0.0 {
        return Err(DckError::invalid("nugget must be nonnegative"));
    }
    if stack.len() > DENSE_BUDGET {
        return Err(DckError::invalid(format!(
            "{} observations exceed the dense budget of {DENSE_BUDGET}",
            stack.len()
        )));
    }
    let (spec, nugget) = match estimate {
        Some(config) => estimate_spec(&stack, &spec, nugget, trend, &config)?,
        None => (spec, nugget),
    };

    let (chol, _) = linalg::cholesky_with_jitter(&|| assemble_sigma(&stack, &spec, nugget))?;
    let n = stack.len();

    let (beta, ones_solve) = match trend {
        TrendMode::Zero => (0.0, None),
        TrendMode::Constant => {
            let mut si_1 = vec![1.0; n];
            linalg::solve_cholesky(&chol, &mut si_1);
            let mut si_z = stack.values.clone();
            linalg::solve_cholesky(&chol, &mut si_z);
            let beta = si_z.iter().sum::<f64>() / si_1.iter().sum::<f64>();
            (beta, Some(si_1))
        }
    };
    let mut alpha: Vec<f64> = stack.values.iter().map(|z| z - beta).collect();
    linalg::solve_cholesky(&chol, &mut alpha);

    Ok(KrigingModel {
        spec,
        nugget,
        trend,
        beta,
        stack,
        chol,
        alpha,
        ones_solve,
    })
}

/// Kriging output at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub sd: f64,
}

/// Standard normal 97.5% quantile used for 95% intervals.
pub const Z_975: f64 = 1.959964;

impl KrigingModel {
    fn cross_cov(&self, target: &Location, target_var: u8) -> Vec<f64> {
        (0..self.stack.len())
            .map(|i| {
                let d = target.dist(&self.stack.locations[i]);
                covariance_value(&self.spec, d, (target_var, self.stack.var[i]))
                    .expect("validated")
            })
            .collect()
    }

    /// Predictive mean and standard deviation of the latent field
    /// `target_var` at each location.
    pub fn predict(&self, targets: &[Location], target_var: u8) -> Result<Vec<Prediction>> {
        let prior = covariance_value(&self.spec, 0.0, (target_var, target_var))?;
        targets
            .iter()
            .map(|t| {
                let c = self.cross_cov(t, target_var);
                let mean = self.beta + c.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
                let mut v = c.clone();
                linalg::solve_lower(&self.chol, &mut v);
                let mut variance = prior - v.iter().map(|x| x * x).sum::<f64>();
                if let Some(si_1) = &self.ones_solve {
                    let denom: f64 = si_1.iter().sum();
                    let csi1: f64 = c.iter().zip(si_1).map(|(a, b)| a * b).sum();
                    variance += (1.0 - csi1).powi(2) / denom;
                }
                Ok(Prediction {
                    mean,
                    sd: variance.max(0.0).sqrt(),
                })
            })
            .collect()
    }

    /// Joint conditional mean vector and 2x2 covariance of (Y1, Y2) at one
    /// location (bivariate models only).
    pub fn predict_pair(&self, target: &Location) -> Result<([f64; 2], [[f64; 2]; 2])> {
        if !self.spec.is_bivariate() {
            return Err(DckError::invalid("predict_pair needs a bivariate model"));
        }
        let c1 = self.cross_cov(target, 1);
        let c2 = self.cross_cov(target, 2);
        let mean1 = self.beta + c1.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        let mean2 = self.beta + c2.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        let mut v1 = c1;
        let mut v2 = c2;
        linalg::solve_lower(&self.chol, &mut v1);
        linalg::solve_lower(&self.chol, &mut v2);
        let c11 = covariance_value(&self.spec, 0.0, (1, 1))?
            - v1.iter().map(|x| x * x).sum::<f64>();
        let c22 = covariance_value(&self.spec, 0.0, (2, 2))?
            - v2.iter().map(|x| x * x).sum::<f64>();
        let c12 = covariance_value(&self.spec, 0.0, (1, 2))?
            - v1.iter().zip(&v2).map(|(a, b)| a * b).sum::<f64>();
        Ok(([mean1, mean2], [[c11.max(0.0), c12], [c12, c22.max(0.0)]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(x: f64, y: f64) -> Location {
        Location { x, y }
    }

    fn exp_spec(range: f64) -> CovarianceSpec {
        CovarianceSpec::Exponential {
            range,
            variance: 1.0,
        }
    }

    #[test]
    fn interpolates_exactly_with_zero_nugget() {
        let locs = vec![loc(0.0, 0.0), loc(0.5, 0.2), loc(0.9, 0.8)];
        let vals = vec![1.0, -0.5, 2.0];
        let stack = ObsStack::univariate(locs.clone(), vals.clone());
        let model = fit(stack, exp_spec(0.5), 0.0, TrendMode::Zero, None).unwrap();
        let preds = model.predict(&locs, 1).unwrap();
        for (p, v) in preds.iter().zip(&vals) {
            assert!((p.mean - v).abs() < 1e-8, "mean {} vs {v}", p.mean);
            assert!(p.sd < 1e-4, "sd {}", p.sd);
        }
    }

    #[test]
    fn single_point_prediction_passthrough() {
        let stack = ObsStack::univariate(vec![loc(0.3, 0.3)], vec![4.2]);
        let model = fit(stack, exp_spec(1.0), 0.0, TrendMode::Zero, None).unwrap();
        let p = model.predict(&[loc(0.3, 0.3)], 1).unwrap()[0];
        assert!((p.mean - 4.2).abs() < 1e-8);
    }

    #[test]
    fn far_prediction_reverts_to_prior() {
        let stack = ObsStack::univariate(vec![loc(0.0, 0.0), loc(0.1, 0.1)], vec![3.0, 2.0]);
        let model = fit(stack, exp_spec(0.3), 0.0, TrendMode::Zero, None).unwrap();
        let p = model.predict(&[loc(50.0, 50.0)], 1).unwrap()[0];
        assert!(p.mean.abs() < 1e-6, "mean {}", p.mean);
        assert!((p.sd - 1.0).abs() < 1e-6, "sd {}", p.sd);
    }

    #[test]
    fn three_point_line_cross_checked_against_direct_solve() {
        // 1D layout embedded in the plane; solve the 3x3 system by hand.
        let locs = vec![loc(0.0, 0.0), loc(0.4, 0.0), loc(1.0, 0.0)];
        let vals = vec![1.0, 0.2, -0.7];
        let range = 0.6;
        let nugget = 0.05;
        let stack = ObsStack::univariate(locs.clone(), vals.clone());
        let model = fit(stack, exp_spec(range), nugget, TrendMode::Zero, None).unwrap();
        let target = loc(0.55, 0.0);
        let got = model.predict(&[target], 1).unwrap()[0];

        // Direct dense solve.
        let mut sigma = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                sigma[i][j] = (-locs[i].dist(&locs[j]) / range).exp();
                if i == j {
                    sigma[i][j] += nugget;
                }
            }
        }
        let c: Vec<f64> = locs
            .iter()
            .map(|l| (-target.dist(l) / range).exp())
            .collect();
        // Gaussian elimination on the 3x3.
        let mut a = sigma;
        let mut b = vals.clone();
        let mut w = c.clone();
        for k in 0..3 {
            for i in (k + 1)..3 {
                let f = a[i][k] / a[k][k];
                for j in k..3 {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
                w[i] -= f * w[k];
            }
        }
        let mut sol_z = [0.0f64; 3];
        let mut sol_c = [0.0f64; 3];
        for i in (0..3).rev() {
            let mut sz = b[i];
            let mut sc = w[i];
            for j in (i + 1)..3 {
                sz -= a[i][j] * sol_z[j];
                sc -= a[i][j] * sol_c[j];
            }
            sol_z[i] = sz / a[i][i];
            sol_c[i] = sc / a[i][i];
        }
        let mean: f64 = c.iter().zip(&sol_z).map(|(x, y)| x * y).sum();
        let var: f64 = 1.0 - c.iter().zip(&sol_c).map(|(x, y)| x * y).sum::<f64>();
        assert!((got.mean - mean).abs() < 1e-10, "{} vs {mean}", got.mean);
        assert!((got.sd - var.max(0.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn variance_bounded_by_prior_plus_nugget() {
        use rand::Rng;
        let mut rng = crate::rng::SeedPolicy::new(17).stream("kriging-var");
        let locs: Vec<Location> = (0..40)
            .map(|_| loc(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let vals: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let nugget = 0.2;
        let stack = ObsStack::univariate(locs, vals);
        let model = fit(stack, exp_spec(0.4), nugget, TrendMode::Zero, None).unwrap();
        for _ in 0..50 {
            let t = loc(rng.random_range(-0.2..1.2), rng.random_range(-0.2..1.2));
            let p = model.predict(&[t], 1).unwrap()[0];
            assert!(p.sd >= 0.0);
            assert!(p.sd * p.sd <= 1.0 + nugget + 1e-10);
        }
    }

    #[test]
    fn cokriging_with_zero_correlation_decouples() {
        use rand::Rng;
        let mut rng = crate::rng::SeedPolicy::new(23).stream("kriging-rho0");
        let spec = BiMaternSpec {
            alpha1: 0.3,
            nu1: 0.5,
            variance1: 1.0,
            alpha2: 0.5,
            nu2: 0.5,
            variance2: 2.0,
            rho12: 0.0,
        };
        let mut stack = ObsStack::default();
        let mut locs1 = Vec::new();
        let mut vals1 = Vec::new();
        for i in 0..15 {
            let l = loc(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let v = rng.random_range(-1.0..1.0);
            stack.push(l, 1, v, true);
            locs1.push(l);
            vals1.push(v);
            if i < 10 {
                stack.push(
                    loc(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)),
                    2,
                    rng.random_range(-1.0..1.0),
                    true,
                );
            }
        }
        let joint = fit(
            stack,
            CovarianceSpec::BivariateMatern(spec),
            0.05,
            TrendMode::Zero,
            None,
        )
        .unwrap();
        let uni = fit(
            ObsStack::univariate(locs1, vals1),
            CovarianceSpec::Matern {
                range: 0.3,
                smoothness: 0.5,
                variance: 1.0,
            },
            0.05,
            TrendMode::Zero,
            None,
        )
        .unwrap();
        for _ in 0..10 {
            let t = loc(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let a = joint.predict(&[t], 1).unwrap()[0];
            let b = uni.predict(&[t], 1).unwrap()[0];
            assert!((a.mean - b.mean).abs() < 1e-10);
            assert!((a.sd - b.sd).abs() < 1e-10);
        }
    }

    #[test]
    fn estimated_range_lands_in_sanity_band() {
        use crate::rng::SeedPolicy;
        use crate::simgen::{perturbed_grid, sample_gp};
        // 20 replicates of a gamma = 0.5 exponential field on ~500 points;
        // the ML range estimate should land within a factor-two band.
        let mut within = 0;
        for rep in 0..20 {
            let policy = SeedPolicy::new(1000 + rep);
            let mut rng = policy.stream(crate::rng::stream::SIMULATION);
            let locs = perturbed_grid(22, 0.3, &mut rng).unwrap();
            let truth = exp_spec(0.5);
            let z = sample_gp(&locs, &truth, None, &mut rng).unwrap();
            let stack = ObsStack::univariate(locs, z);
            let model = fit(
                stack,
                exp_spec(0.25),
                1e-3,
                TrendMode::Zero,
                Some(EstimateConfig {
                    starts: 1,
                    max_iters: 60,
                }),
            )
            .unwrap();
            let range = match model.spec {
                CovarianceSpec::Exponential { range, .. } => range,
                _ => unreachable!(),
            };
            if (0.25..=1.0).contains(&range) {
                within += 1;
            }
        }
        assert!(within >= 16, "only {within}/20 estimates within [0.25, 1.0]");
    }

    #[test]
    fn plug_in_mode_keeps_the_given_spec() {
        let stack = ObsStack::univariate(vec![loc(0.0, 0.0), loc(1.0, 1.0)], vec![0.5, -0.5]);
        let spec = exp_spec(0.37);
        let model = fit(stack, spec.clone(), 0.01, TrendMode::Zero, None).unwrap();
        assert_eq!(model.spec, spec);
        assert_eq!(model.nugget, 0.01);
    }
}
