//! Kernel-smoothed predictive distributions: class probabilities and node
//! points become a Gaussian-kernel mixture from which CDFs, conditional CDFs,
//! quantiles, intervals, exceedance probabilities and joint samples follow.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::DckError;
use crate::special::{norm_cdf, norm_pdf};
use crate::Result;

/// Bandwidth rule-of-thumb h = p * (C/3) * sigma_h * N^(-alpha).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthRule {
    /// Positive integer scale constant.
    pub scale_c: u32,
    /// Exponent, 1/3 unless overridden.
    pub alpha: f64,
    /// Response dimension (1 or 2).
    pub p: usize,
    /// Scale of the response (median absolute deviation).
    pub sigma_h: f64,
    /// Training sample size.
    pub n_train: usize,
}

impl BandwidthRule {
    pub fn new(scale_c: u32, p: usize, sigma_h: f64, n_train: usize) -> Self {
        BandwidthRule {
            scale_c,
            alpha: 1.0 / 3.0,
            p,
            sigma_h,
            n_train,
        }
    }
}

/// Evaluates the rule.
pub fn bandwidth(rule: &BandwidthRule) -> Result<f64> {
    if rule.scale_c < 1 {
        return Err(DckError::invalid("bandwidth constant C must be >= 1"));
    }
    if rule.n_train < 2 {
        return Err(DckError::invalid("bandwidth rule needs N >= 2"));
    }
    if !(rule.p == 1 || rule.p == 2) {
        return Err(DckError::invalid("response dimension p must be 1 or 2"));
    }
    if rule.sigma_h <= 0.0 || !rule.sigma_h.is_finite() {
        return Err(DckError::invalid(format!(
            "sigma_h = {} must be positive (constant response?)",
            rule.sigma_h
        )));
    }
    Ok(rule.p as f64 * rule.scale_c as f64 / 3.0
        * rule.sigma_h
        * (rule.n_train as f64).powf(-rule.alpha))
}

/// Median absolute deviation about the median, unscaled.
pub fn mad(values: &[f64]) -> f64 {
    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
    let med = median(values.to_vec());
    median(values.iter().map(|v| (v - med).abs()).collect())
}

/// A predictive distribution at one location: class probabilities, per-class
/// node points (one coordinate for p = 1, two for p = 2), and the smoothing
/// bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveCdf {
    pub weights: Vec<f64>,
    pub nodes1: Vec<f64>,
    pub nodes2: Option<Vec<f64>>,
    pub h: f64,
}

/// One draw from the predictive mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointSample {
    Scalar(f64),
    Pair(f64, f64),
}

const DENSITY_FLOOR: f64 = 1e-300;
const QUANTILE_TOL: f64 = 1e-9;

impl PredictiveCdf {
    pub fn new(
        weights: Vec<f64>,
        nodes1: Vec<f64>,
        nodes2: Option<Vec<f64>>,
        h: f64,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != nodes1.len() {
            return Err(DckError::shape("weights/nodes length mismatch"));
        }
        if let Some(n2) = &nodes2 {
            if n2.len() != nodes1.len() {
                return Err(DckError::shape("nodes2 length mismatch"));
            }
        }
        if h <= 0.0 || !h.is_finite() {
            return Err(DckError::invalid(format!("bandwidth h = {h} must be positive")));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(DckError::invalid(format!(
                "class probabilities must be nonnegative and sum to 1 (sum = {total})"
            )));
        }
        Ok(PredictiveCdf {
            weights,
            nodes1,
            nodes2,
            h,
        })
    }

    pub fn response_dim(&self) -> usize {
        if self.nodes2.is_some() {
            2
        } else {
            1
        }
    }

    /// Univariate CDF (p = 1).
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if self.response_dim() != 1 {
            return Err(DckError::invalid("cdf() requires p = 1"));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.nodes1)
            .map(|(w, n)| w * norm_cdf((y - n) / self.h))
            .sum())
    }

    /// Joint CDF F(y1, y2) (p = 2).
    pub fn joint_cdf(&self, y1: f64, y2: f64) -> Result<f64> {
        let nodes2 = self
            .nodes2
            .as_ref()
            .ok_or_else(|| DckError::invalid("joint_cdf() requires p = 2"))?;
        Ok(self
            .weights
            .iter()
            .zip(self.nodes1.iter().zip(nodes2))
            .map(|(w, (n1, n2))| {
                w * norm_cdf((y1 - n1) / self.h) * norm_cdf((y2 - n2) / self.h)
            })
            .sum())
    }

    /// Marginal density of the second coordinate (p = 2); includes the 1/h
    /// kernel-density normalization so it integrates to one.
    pub fn marginal_density(&self, y2: f64) -> Result<f64> {
        let nodes2 = self
            .nodes2
            .as_ref()
            .ok_or_else(|| DckError::invalid("marginal_density() requires p = 2"))?;
        Ok(self
            .weights
            .iter()
            .zip(nodes2)
            .map(|(w, n2)| w * norm_pdf((y2 - n2) / self.h))
            .sum::<f64>()
            / self.h)
    }

    /// Conditional CDF of the first coordinate given the second (p = 2). The
    /// 1/h factors cancel in the ratio.
    pub fn conditional_cdf(&self, y1: f64, given_y2: f64) -> Result<f64> {
        let nodes2 = self
            .nodes2
            .as_ref()
            .ok_or_else(|| DckError::invalid("conditional_cdf() requires p = 2"))?;
        let mut numer = 0.0;
        let mut denom = 0.0;
        for ((w, n1), n2) in self.weights.iter().zip(&self.nodes1).zip(nodes2) {
            let k2 = norm_pdf((given_y2 - n2) / self.h);
            denom += w * k2;
            numer += w * norm_cdf((y1 - n1) / self.h) * k2;
        }
        if denom < DENSITY_FLOOR {
            return Err(DckError::numeric(format!(
                "conditioning point y2 = {given_y2} has negligible marginal density"
            )));
        }
        Ok(numer / denom)
    }

    fn eval_cdf(&self, y: f64, given_y2: Option<f64>) -> Result<f64> {
        match (self.response_dim(), given_y2) {
            (1, None) => self.cdf(y),
            (2, Some(g)) => self.conditional_cdf(y, g),
            (2, None) => {
                // Marginal CDF of the first coordinate: let y2 -> infinity.
                Ok(self
                    .weights
                    .iter()
                    .zip(&self.nodes1)
                    .map(|(w, n)| w * norm_cdf((y - n) / self.h))
                    .sum())
            }
            (1, Some(_)) => Err(DckError::invalid(
                "cannot condition a univariate predictive distribution",
            )),
            _ => unreachable!(),
        }
    }

    /// tau-quantile by bisection; conditional when `given_y2` is supplied,
    /// marginal in the first coordinate otherwise.
    pub fn quantile(&self, tau: f64, given_y2: Option<f64>) -> Result<f64> {
        if !(0.0 < tau && tau < 1.0) {
            return Err(DckError::invalid(format!("tau = {tau} outside (0,1)")));
        }
        let min_node = self.nodes1.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_node = self.nodes1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lo = min_node - 12.0 * self.h;
        let mut hi = max_node + 12.0 * self.h;

        let mut expansions = 0;
        while self.eval_cdf(lo, given_y2)? > tau {
            let width = hi - lo;
            lo -= width;
            expansions += 1;
            if expansions > 10 {
                return Err(DckError::numeric("quantile bracket expansion failed"));
            }
        }
        while self.eval_cdf(hi, given_y2)? < tau {
            let width = hi - lo;
            hi += width;
            expansions += 1;
            if expansions > 10 {
                return Err(DckError::numeric("quantile bracket expansion failed"));
            }
        }

        let mut mid = 0.5 * (lo + hi);
        for _ in 0..500 {
            mid = 0.5 * (lo + hi);
            let f = self.eval_cdf(mid, given_y2)?;
            if (f - tau).abs() < QUANTILE_TOL {
                return Ok(mid);
            }
            if f < tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let residual = (self.eval_cdf(mid, given_y2)? - tau).abs();
        Err(DckError::numeric(format!(
            "quantile bisection residual {residual:e} above tolerance"
        )))
    }

    /// Central (1 - alpha) prediction interval.
    pub fn interval(&self, alpha: f64, given_y2: Option<f64>) -> Result<(f64, f64)> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(DckError::invalid(format!("alpha = {alpha} outside (0,1)")));
        }
        let lower = self.quantile(alpha / 2.0, given_y2)?;
        let upper = self.quantile(1.0 - alpha / 2.0, given_y2)?;
        Ok((lower, upper))
    }

    /// P(Y1 > threshold), conditional when `given_y2` is supplied.
    pub fn exceedance(&self, threshold: f64, given_y2: Option<f64>) -> Result<f64> {
        Ok(1.0 - self.eval_cdf(threshold, given_y2)?)
    }

    /// Draws from the mixture: a component chosen by its class probability,
    /// then independent N(node, h^2) coordinates.
    pub fn sample_joint(&self, m: usize, rng: &mut ChaCha12Rng) -> Result<Vec<JointSample>> {
        if m == 0 {
            return Err(DckError::invalid("sample count must be >= 1"));
        }
        let mut cumulative = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        let total = *cumulative.last().unwrap();

        let mut out = Vec::with_capacity(m);
        for _ in 0..m {
            let u: f64 = rng.random_range(0.0..total);
            let j = cumulative.partition_point(|&c| c <= u).min(self.weights.len() - 1);
            let e1: f64 = rng.sample(StandardNormal);
            let y1 = self.nodes1[j] + self.h * e1;
            match &self.nodes2 {
                Some(n2) => {
                    let e2: f64 = rng.sample(StandardNormal);
                    out.push(JointSample::Pair(y1, n2[j] + self.h * e2));
                }
                None => out.push(JointSample::Scalar(y1)),
            }
        }
        Ok(out)
    }
}
