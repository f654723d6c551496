//! Synthetic spatial fields: Gaussian processes with exponential / Matérn /
//! bivariate parsimonious-Matérn covariances, the nonlinear mean surface,
//! Tukey g-and-h transforms, measurement noise, and perturbed-grid layouts.

mod scenario;

pub use scenario::{scenario, BiScenario, ScenarioConfig, ScenarioData, ScenarioName, UniScenario};

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::DckError;
use crate::linalg;
use crate::special::bessel_k;
use crate::types::Location;
use crate::Result;

/// Upper bound on total scalar outputs of one GP draw (dense Cholesky budget).
pub const GP_BUDGET: usize = 10_000;

/// Stationary covariance models. `variance` is the marginal variance sigma^2;
/// the bivariate cross-covariance uses rho12 * sigma_1 * sigma_2 (standard
/// deviations) times the Matérn correlation at the averaged parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CovarianceSpec {
    Exponential {
        range: f64,
        variance: f64,
    },
    Matern {
        range: f64,
        smoothness: f64,
        variance: f64,
    },
    BivariateMatern(BiMaternSpec),
}

/// Quasi-parsimonious bivariate Matérn: nu12 and alpha12 are the arithmetic
/// means of the marginal parameters, fixed at construction.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BiMaternSpec {
    pub alpha1: f64,
    pub nu1: f64,
    pub variance1: f64,
    pub alpha2: f64,
    pub nu2: f64,
    pub variance2: f64,
    pub rho12: f64,
}

impl BiMaternSpec {
    pub fn alpha12(&self) -> f64 {
        0.5 * (self.alpha1 + self.alpha2)
    }

    pub fn nu12(&self) -> f64 {
        0.5 * (self.nu1 + self.nu2)
    }
}

impl CovarianceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DckError::invalid(format!("covariance spec: {msg}")));
        match self {
            CovarianceSpec::Exponential { range, variance } => {
                if *range <= 0.0 || *variance <= 0.0 {
                    return bad("range and variance must be positive");
                }
            }
            CovarianceSpec::Matern {
                range,
                smoothness,
                variance,
            } => {
                if *range <= 0.0 || *variance <= 0.0 || *smoothness <= 0.0 {
                    return bad("range, variance and smoothness must be positive");
                }
            }
            CovarianceSpec::BivariateMatern(spec) => {
                if spec.alpha1 <= 0.0
                    || spec.alpha2 <= 0.0
                    || spec.variance1 <= 0.0
                    || spec.variance2 <= 0.0
                    || spec.nu1 <= 0.0
                    || spec.nu2 <= 0.0
                {
                    return bad("ranges, variances and smoothnesses must be positive");
                }
                if !(-1.0..=1.0).contains(&spec.rho12) {
                    return bad("rho12 must lie in [-1, 1]");
                }
            }
        }
        Ok(())
    }

    pub fn is_bivariate(&self) -> bool {
        matches!(self, CovarianceSpec::BivariateMatern(_))
    }
}

/// Tukey g-and-h transform parameters. `g` controls skewness, `h_tail`
/// controls tail heaviness.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TukeyGH {
    pub g: f64,
    pub h_tail: f64,
}

impl TukeyGH {
    pub fn new(g: f64, h_tail: f64) -> Result<Self> {
        if h_tail < 0.0 || !g.is_finite() || !h_tail.is_finite() {
            return Err(DckError::invalid(format!(
                "tukey parameters g={g}, h={h_tail} invalid (h must be >= 0)"
            )));
        }
        Ok(TukeyGH { g, h_tail })
    }
}

/// Additive measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseSpec {
    pub sigma_eps: f64,
}

impl NoiseSpec {
    pub fn new(sigma_eps: f64) -> Result<Self> {
        if sigma_eps < 0.0 || !sigma_eps.is_finite() {
            return Err(DckError::invalid(format!(
                "noise sigma_eps={sigma_eps} must be nonnegative"
            )));
        }
        Ok(NoiseSpec { sigma_eps })
    }
}

/// Matérn correlation M(d; nu, alpha) = 2^(1-nu)/Gamma(nu) (d/alpha)^nu
/// K_nu(d/alpha), with M(0) = 1.
pub fn matern_correlation(distance: f64, smoothness: f64, range: f64) -> f64 {
    if distance <= 0.0 {
        return 1.0;
    }
    let t = distance / range;
    // Closed forms for the half-integer orders used by the presets.
    if smoothness == 0.5 {
        return (-t).exp();
    }
    if smoothness == 1.5 {
        return (1.0 + t) * (-t).exp();
    }
    let nu = smoothness;
    let value = 2.0f64.powf(1.0 - nu) / libm::tgamma(nu) * t.powf(nu) * bessel_k(nu, t);
    // Guard against rounding slightly above 1 at tiny lags.
    value.min(1.0)
}

/// Covariance between variables `u` and `v` (1-based) at the given distance.
pub fn covariance_value(spec: &CovarianceSpec, distance: f64, pair: (u8, u8)) -> Result<f64> {
    if distance < 0.0 {
        return Err(DckError::invalid("distance must be nonnegative"));
    }
    let (u, v) = pair;
    match spec {
        CovarianceSpec::Exponential { range, variance } => {
            if u != 1 || v != 1 {
                return Err(DckError::invalid(format!(
                    "exponential covariance is univariate, got pair ({u},{v})"
                )));
            }
            Ok(variance * (-distance / range).exp())
        }
        CovarianceSpec::Matern {
            range,
            smoothness,
            variance,
        } => {
            if u != 1 || v != 1 {
                return Err(DckError::invalid(format!(
                    "matern covariance is univariate, got pair ({u},{v})"
                )));
            }
            Ok(variance * matern_correlation(distance, *smoothness, *range))
        }
        CovarianceSpec::BivariateMatern(bi) => match (u, v) {
            (1, 1) => Ok(bi.variance1 * matern_correlation(distance, bi.nu1, bi.alpha1)),
            (2, 2) => Ok(bi.variance2 * matern_correlation(distance, bi.nu2, bi.alpha2)),
            (1, 2) | (2, 1) => Ok(bi.rho12
                * (bi.variance1 * bi.variance2).sqrt()
                * matern_correlation(distance, bi.nu12(), bi.alpha12())),
            _ => Err(DckError::invalid(format!(
                "variable pair ({u},{v}) out of {{1,2}}"
            ))),
        },
    }
}

/// Regular `side`x`side` grid on [0,1]^2 with i.i.d. Uniform[-jitter, jitter]
/// perturbations per coordinate. Exact duplicates among the resulting points
/// are re-drawn (at most 100 attempts each).
pub fn perturbed_grid(side: usize, jitter: f64, rng: &mut ChaCha12Rng) -> Result<Vec<Location>> {
    if side < 2 {
        return Err(DckError::invalid("grid side must be >= 2"));
    }
    if jitter < 0.0 {
        return Err(DckError::invalid("jitter must be >= 0"));
    }
    let step = 1.0 / (side - 1) as f64;
    let mut seen = std::collections::HashSet::with_capacity(side * side);
    let mut out = Vec::with_capacity(side * side);
    for iy in 0..side {
        for ix in 0..side {
            let gx = ix as f64 * step;
            let gy = iy as f64 * step;
            let mut attempts = 0;
            loop {
                let (px, py) = if jitter > 0.0 {
                    (
                        gx + rng.random_range(-jitter..=jitter),
                        gy + rng.random_range(-jitter..=jitter),
                    )
                } else {
                    (gx, gy)
                };
                if seen.insert((px.to_bits(), py.to_bits())) {
                    out.push(Location { x: px, y: py });
                    break;
                }
                attempts += 1;
                if attempts >= 100 || jitter == 0.0 {
                    return Err(DckError::numeric(format!(
                        "could not draw a distinct location for grid cell ({ix},{iy})"
                    )));
                }
            }
        }
    }
    Ok(out)
}

fn assemble_univariate(locations: &[Location], spec: &CovarianceSpec) -> Array2<f64> {
    let n = locations.len();
    let mut sigma = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let d = locations[i].dist(&locations[j]);
            let c = covariance_value(spec, d, (1, 1)).expect("validated spec");
            sigma[[i, j]] = c;
            sigma[[j, i]] = c;
        }
    }
    sigma
}

fn assemble_bivariate(locations: &[Location], spec: &BiMaternSpec) -> Array2<f64> {
    let n = locations.len();
    let full = CovarianceSpec::BivariateMatern(spec.clone());
    let mut sigma = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..=i {
            let d = locations[i].dist(&locations[j]);
            let c11 = covariance_value(&full, d, (1, 1)).expect("validated spec");
            let c22 = covariance_value(&full, d, (2, 2)).expect("validated spec");
            let c12 = covariance_value(&full, d, (1, 2)).expect("validated spec");
            sigma[[i, j]] = c11;
            sigma[[j, i]] = c11;
            sigma[[n + i, n + j]] = c22;
            sigma[[n + j, n + i]] = c22;
            sigma[[i, n + j]] = c12;
            sigma[[n + j, i]] = c12;
            sigma[[j, n + i]] = c12;
            sigma[[n + i, j]] = c12;
        }
    }
    sigma
}

pub(crate) fn draw_from_factor(l: &Array2<f64>, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let n = l.nrows();
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let row = l.row(i);
        let mut acc = 0.0;
        for k in 0..=i {
            acc += row[k] * z[k];
        }
        y[i] = acc;
    }
    y
}

/// Draws one realization of a univariate Gaussian process at `locations`.
/// `mean` is added elementwise when provided.
pub fn sample_gp(
    locations: &[Location],
    spec: &CovarianceSpec,
    mean: Option<&[f64]>,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.is_bivariate() {
        return Err(DckError::invalid(
            "sample_gp is univariate; use sample_gp_bivariate",
        ));
    }
    let n = locations.len();
    if n == 0 {
        return Err(DckError::invalid("no locations"));
    }
    if n > GP_BUDGET {
        return Err(DckError::invalid(format!(
            "{n} outputs exceed the dense Cholesky budget of {GP_BUDGET}"
        )));
    }
    if let Some(m) = mean {
        if m.len() != n {
            return Err(DckError::shape("mean length != location count"));
        }
    }
    let (l, _) = linalg::cholesky_with_jitter(&|| assemble_univariate(locations, spec))?;
    let mut y = draw_from_factor(&l, rng);
    if let Some(m) = mean {
        for (yi, mi) in y.iter_mut().zip(m) {
            *yi += mi;
        }
    }
    Ok(y)
}

/// Draws one joint realization of a bivariate Gaussian process; returns the
/// two fields in location order.
pub fn sample_gp_bivariate(
    locations: &[Location],
    spec: &BiMaternSpec,
    rng: &mut ChaCha12Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    CovarianceSpec::BivariateMatern(spec.clone()).validate()?;
    let n = locations.len();
    if n == 0 {
        return Err(DckError::invalid("no locations"));
    }
    if 2 * n > GP_BUDGET {
        return Err(DckError::invalid(format!(
            "{} outputs exceed the dense Cholesky budget of {GP_BUDGET}",
            2 * n
        )));
    }
    let (l, _) = linalg::cholesky_with_jitter(&|| assemble_bivariate(locations, spec))?;
    let joint = draw_from_factor(&l, rng);
    Ok((joint[..n].to_vec(), joint[n..].to_vec()))
}

/// Elementwise Tukey g-and-h transform:
/// tau(z) = (e^{gz} - 1)/g * e^{h z^2 / 2} for g != 0, z e^{h z^2 / 2} for g = 0.
pub fn tukey_gh(values: &[f64], params: TukeyGH) -> Vec<f64> {
    values
        .iter()
        .map(|&z| {
            let tail = (params.h_tail * z * z / 2.0).exp();
            if params.g == 0.0 {
                z * tail
            } else {
                ((params.g * z).exp() - 1.0) / params.g * tail
            }
        })
        .collect()
}

/// The nonlinear mean surface used by the non-Gaussian univariate scenario:
/// a fixed polynomial/trigonometric combination of exactly five covariates.
pub fn nonlinear_mean(covariates: &[f64]) -> Result<f64> {
    if covariates.len() != 5 {
        return Err(DckError::shape(format!(
            "nonlinear mean takes 5 covariates, got {}",
            covariates.len()
        )));
    }
    let (x1, x2, x3, x4, x5) = (
        covariates[0],
        covariates[1],
        covariates[2],
        covariates[3],
        covariates[4],
    );
    Ok(x1 * x1 - x2 * x2 + x3 * x3 - x4 * x4 - x5 * x5
        + 2.0 * x1 * x2
        + 3.0 * x2 * x3
        - 2.0 * x3 * x5
        + 10.0 * x1 * x4
        + x1.sin() * x2 * x3
        + x2.cos() * x3 * x5
        + x1 * x2 * x4 * x5)
}

/// Adds i.i.d. N(0, sigma_eps^2) noise per value. A zero sigma is the
/// identity and consumes no randomness.
pub fn add_noise(values: &[f64], spec: NoiseSpec, rng: &mut ChaCha12Rng) -> Vec<f64> {
    if spec.sigma_eps == 0.0 {
        return values.to_vec();
    }
    values
        .iter()
        .map(|&v| {
            let e: f64 = rng.sample(StandardNormal);
            v + spec.sigma_eps * e
        })
        .collect()
}
