//! Benchmark scenario generators: univariate Gaussian / Tukey fields and the
//! bivariate (non-)Gaussian fusion setup, with every constant overridable.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;

use super::{
    add_noise, nonlinear_mean, perturbed_grid, sample_gp_bivariate, tukey_gh, BiMaternSpec,
    CovarianceSpec, NoiseSpec, TukeyGH,
};
use crate::error::DckError;
use crate::linalg;
use crate::rng::{stream, SeedPolicy};
use crate::types::{Location, UniDataset};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    UniGauss,
    UniTukey,
    BiGauss,
    BiTukey,
}

impl ScenarioName {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "uni_gauss" => Ok(ScenarioName::UniGauss),
            "uni_tukey" => Ok(ScenarioName::UniTukey),
            "bi_gauss" => Ok(ScenarioName::BiGauss),
            "bi_tukey" => Ok(ScenarioName::BiTukey),
            other => Err(DckError::invalid(format!(
                "unknown scenario '{other}' (expected uni_gauss, uni_tukey, bi_gauss or bi_tukey)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::UniGauss => "uni_gauss",
            ScenarioName::UniTukey => "uni_tukey",
            ScenarioName::BiGauss => "bi_gauss",
            ScenarioName::BiTukey => "bi_tukey",
        }
    }

    pub fn is_bivariate(&self) -> bool {
        matches!(self, ScenarioName::BiGauss | ScenarioName::BiTukey)
    }
}

/// Scenario constants. `preset` fills in the benchmark values; every field can
/// be overridden before calling [`scenario`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    /// Total simulated locations; must be a perfect square (grid layout).
    pub n_locations: usize,
    /// Uniform perturbation half-width applied to the regular grid.
    pub jitter: f64,
    pub sigma_eps: f64,
    /// Held-out fraction in the univariate scenarios.
    pub test_fraction: f64,
    /// Held-out test locations in the bivariate scenarios.
    pub n_test_bi: usize,
    /// Sparse Z1 observation count in the bivariate scenarios.
    pub n_z1: usize,
    /// Tukey g-and-h parameters for the non-Gaussian scenarios.
    pub tukey: TukeyGH,
    /// Field covariance for the univariate Gaussian scenario.
    pub uni_cov: CovarianceSpec,
    /// Covariance of each covariate field (univariate Tukey scenario).
    pub covariate_cov: CovarianceSpec,
    /// Covariance of the spatial random effect (univariate Tukey scenario).
    pub random_effect_cov: CovarianceSpec,
    /// Bivariate field covariance.
    pub bivariate_cov: BiMaternSpec,
}

impl ScenarioConfig {
    pub fn preset(name: ScenarioName, n_locations: usize) -> Self {
        let tukey = match name {
            ScenarioName::UniTukey => TukeyGH { g: 0.8, h_tail: 0.5 },
            _ => TukeyGH { g: 0.5, h_tail: 0.5 },
        };
        ScenarioConfig {
            name,
            n_locations,
            jitter: 0.4,
            sigma_eps: 0.1,
            test_fraction: 0.1,
            n_test_bi: 100,
            n_z1: 500,
            tukey,
            uni_cov: CovarianceSpec::Exponential {
                range: 0.5,
                variance: 1.0,
            },
            covariate_cov: CovarianceSpec::Matern {
                range: 0.1,
                smoothness: 0.5,
                variance: 0.81,
            },
            random_effect_cov: CovarianceSpec::Matern {
                range: 0.2,
                smoothness: 0.5,
                variance: 0.49,
            },
            bivariate_cov: BiMaternSpec {
                alpha1: 0.2,
                nu1: 0.8,
                variance1: 0.89,
                alpha2: 0.4,
                nu2: 0.8,
                variance2: 1.3,
                rho12: 0.8,
            },
        }
    }

    fn grid_side(&self) -> Result<usize> {
        let side = (self.n_locations as f64).sqrt().round() as usize;
        if side * side != self.n_locations || side < 2 {
            return Err(DckError::invalid(format!(
                "n_locations = {} is not a perfect square >= 4",
                self.n_locations
            )));
        }
        Ok(side)
    }
}

/// Univariate scenario output: a noisy training set plus held-out truth.
#[derive(Debug, Clone)]
pub struct UniScenario {
    pub train: UniDataset,
    pub test_locations: Vec<Location>,
    pub test_y_true: Vec<f64>,
    pub test_z: Vec<f64>,
    pub test_covariates: Option<Vec<Vec<f64>>>,
}

/// Bivariate scenario output: sparse Z1, dense Z2, and held-out truth with
/// the noisy observations retained for joint scoring.
#[derive(Debug, Clone)]
pub struct BiScenario {
    pub z1: UniDataset,
    pub z2: UniDataset,
    pub test_locations: Vec<Location>,
    pub test_y1_true: Vec<f64>,
    pub test_y2_true: Vec<f64>,
    pub test_z1: Vec<f64>,
    pub test_z2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum ScenarioData {
    Univariate(UniScenario),
    Bivariate(BiScenario),
}

/// Samples many independent realizations sharing one covariance factorization.
pub struct GpSampler {
    factor: ndarray::Array2<f64>,
}

impl GpSampler {
    pub fn new(locations: &[Location], spec: &CovarianceSpec) -> Result<Self> {
        spec.validate()?;
        if spec.is_bivariate() {
            return Err(DckError::invalid("GpSampler is univariate"));
        }
        let n = locations.len();
        if n > super::GP_BUDGET {
            return Err(DckError::invalid(format!(
                "{n} outputs exceed the dense Cholesky budget of {}",
                super::GP_BUDGET
            )));
        }
        let locs = locations.to_vec();
        let spec = spec.clone();
        let (factor, _) = linalg::cholesky_with_jitter(&move || {
            let mut sigma = ndarray::Array2::zeros((locs.len(), locs.len()));
            for i in 0..locs.len() {
                for j in 0..=i {
                    let d = locs[i].dist(&locs[j]);
                    let c = super::covariance_value(&spec, d, (1, 1)).expect("validated spec");
                    sigma[[i, j]] = c;
                    sigma[[j, i]] = c;
                }
            }
            sigma
        })?;
        Ok(GpSampler { factor })
    }

    pub fn draw(&self, rng: &mut ChaCha12Rng) -> Vec<f64> {
        super::draw_from_factor(&self.factor, rng)
    }
}

/// Generates one replicate of the named scenario with the paper's train/test
/// layout. All randomness comes from the policy's simulation stream.
pub fn scenario(config: &ScenarioConfig, policy: &SeedPolicy) -> Result<ScenarioData> {
    let mut rng = policy.stream(stream::SIMULATION);
    let side = config.grid_side()?;
    let locations = perturbed_grid(side, config.jitter, &mut rng)?;
    let noise = NoiseSpec::new(config.sigma_eps)?;

    match config.name {
        ScenarioName::UniGauss | ScenarioName::UniTukey => {
            let n = locations.len();
            let (y_true, covariates) = if config.name == ScenarioName::UniGauss {
                let sampler = GpSampler::new(&locations, &config.uni_cov)?;
                (sampler.draw(&mut rng), None)
            } else {
                // Five independent covariate fields sharing one factorization,
                // a transformed spatial effect, and the nonlinear mean.
                let cov_sampler = GpSampler::new(&locations, &config.covariate_cov)?;
                let fields: Vec<Vec<f64>> = (0..5).map(|_| cov_sampler.draw(&mut rng)).collect();
                let effect_sampler = GpSampler::new(&locations, &config.random_effect_cov)?;
                let gamma = tukey_gh(&effect_sampler.draw(&mut rng), config.tukey);
                let mut rows = Vec::with_capacity(n);
                let mut y = Vec::with_capacity(n);
                for i in 0..n {
                    let row: Vec<f64> = fields.iter().map(|f| f[i]).collect();
                    y.push(nonlinear_mean(&row)? + gamma[i]);
                    rows.push(row);
                }
                (y, Some(rows))
            };
            let z = add_noise(&y_true, noise, &mut rng);

            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let n_test = ((n as f64) * config.test_fraction).round() as usize;
            let (test_idx, train_idx) = order.split_at(n_test);

            let pick_cov = |idx: &[usize]| {
                covariates
                    .as_ref()
                    .map(|rows| idx.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>())
            };
            let train = UniDataset::new(
                train_idx.iter().map(|&i| locations[i]).collect(),
                train_idx.iter().map(|&i| z[i]).collect(),
                pick_cov(train_idx),
            )?;
            Ok(ScenarioData::Univariate(UniScenario {
                train,
                test_locations: test_idx.iter().map(|&i| locations[i]).collect(),
                test_y_true: test_idx.iter().map(|&i| y_true[i]).collect(),
                test_z: test_idx.iter().map(|&i| z[i]).collect(),
                test_covariates: pick_cov(test_idx),
            }))
        }
        ScenarioName::BiGauss | ScenarioName::BiTukey => {
            let n = locations.len();
            if config.n_test_bi + 1 >= n || config.n_z1 > n - config.n_test_bi {
                return Err(DckError::invalid(format!(
                    "bivariate split (test {}, z1 {}) does not fit {n} locations",
                    config.n_test_bi, config.n_z1
                )));
            }
            let (mut y1, mut y2) = sample_gp_bivariate(&locations, &config.bivariate_cov, &mut rng)?;
            if config.name == ScenarioName::BiTukey {
                y1 = tukey_gh(&y1, config.tukey);
                y2 = tukey_gh(&y2, config.tukey);
            }
            let z1 = add_noise(&y1, noise, &mut rng);
            let z2 = add_noise(&y2, noise, &mut rng);

            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let (test_idx, train_idx) = order.split_at(config.n_test_bi);

            let mut z1_pick: Vec<usize> = train_idx.to_vec();
            z1_pick.shuffle(&mut rng);
            z1_pick.truncate(config.n_z1);

            let z1_set = UniDataset::new(
                z1_pick.iter().map(|&i| locations[i]).collect(),
                z1_pick.iter().map(|&i| z1[i]).collect(),
                None,
            )?;
            let z2_set = UniDataset::new(
                train_idx.iter().map(|&i| locations[i]).collect(),
                train_idx.iter().map(|&i| z2[i]).collect(),
                None,
            )?;
            Ok(ScenarioData::Bivariate(BiScenario {
                z1: z1_set,
                z2: z2_set,
                test_locations: test_idx.iter().map(|&i| locations[i]).collect(),
                test_y1_true: test_idx.iter().map(|&i| y1[i]).collect(),
                test_y2_true: test_idx.iter().map(|&i| y2[i]).collect(),
                test_z1: test_idx.iter().map(|&i| z1[i]).collect(),
                test_z2: test_idx.iter().map(|&i| z2[i]).collect(),
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bivariate_split_counts() {
        let config = ScenarioConfig::preset(ScenarioName::BiGauss, 900);
        let policy = SeedPolicy::new(1);
        match scenario(&config, &policy).unwrap() {
            ScenarioData::Bivariate(b) => {
                assert_eq!(b.test_locations.len(), 100);
                assert_eq!(b.z1.len(), 500);
                assert_eq!(b.z2.len(), 800);
            }
            _ => panic!("expected bivariate"),
        }
    }

    #[test]
    fn univariate_split_counts_and_determinism() {
        let config = ScenarioConfig::preset(ScenarioName::UniGauss, 400);
        let policy = SeedPolicy::new(3);
        let ScenarioData::Univariate(a) = scenario(&config, &policy).unwrap() else {
            panic!("expected univariate");
        };
        assert_eq!(a.test_locations.len(), 40);
        assert_eq!(a.train.len(), 360);

        let ScenarioData::Univariate(b) = scenario(&config, &policy).unwrap() else {
            panic!()
        };
        assert_eq!(a.train.values, b.train.values);
        assert_eq!(a.test_y_true, b.test_y_true);
    }

    #[test]
    fn tukey_scenario_carries_covariates() {
        let config = ScenarioConfig::preset(ScenarioName::UniTukey, 100);
        let policy = SeedPolicy::new(5);
        let ScenarioData::Univariate(s) = scenario(&config, &policy).unwrap() else {
            panic!()
        };
        let cov = s.train.covariates.as_ref().unwrap();
        assert_eq!(cov[0].len(), 5);
        assert_eq!(s.test_covariates.as_ref().unwrap().len(), 10);
    }

    #[test]
    fn rejects_non_square_counts() {
        let config = ScenarioConfig::preset(ScenarioName::UniGauss, 1000);
        assert!(scenario(&config, &SeedPolicy::new(1)).is_err());
    }
}
