//! End-to-end pipeline and experiment replication: one config document drives
//! simulate -> fuse -> discretize -> train -> predict -> evaluate, with a
//! kriging comparator and per-replicate aggregation.

mod ingest;

pub use ingest::{hull_subsample, ingest, IngestReport};

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::{self, EstimateConfig, ObsStack, TrendMode, Z_975};
use crate::bundle::{save_bundle, BundleMeta, ModelBundle};
use crate::cdf::{bandwidth, mad, BandwidthRule, PredictiveCdf};
use crate::classifier::{train, EpochLog, TrainConfig};
use crate::csvio::{self, fmt_f64, Provenance};
use crate::discretize::{
    assign_labels_bivariate, assign_labels_univariate, bivariate_partition, univariate_partition,
    ClassPartition,
};
use crate::embed::build_config;
use crate::error::DckError;
use crate::fusion::{fuse, Fused, FusionConfig};
use crate::metrics::{mae, picp_al, MetricRow, ResultTable};
use crate::rng::SeedPolicy;
use crate::simgen::{
    scenario, BiMaternSpec, BiScenario, CovarianceSpec, ScenarioConfig, ScenarioData,
    ScenarioName, TukeyGH, UniScenario,
};
use crate::types::{BiSampleSets, Location};
use crate::Result;

/// Scenario section of the run config; unset fields fall back to the
/// benchmark constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub n_locations: usize,
    pub jitter: Option<f64>,
    pub sigma_eps: Option<f64>,
    pub test_fraction: Option<f64>,
    pub n_test: Option<usize>,
    pub n_z1: Option<usize>,
    pub tukey_g: Option<f64>,
    pub tukey_h: Option<f64>,
    pub uni_range: Option<f64>,
    pub uni_variance: Option<f64>,
    pub bivariate: Option<BivariateSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivariateSection {
    pub alpha1: f64,
    pub nu1: f64,
    pub variance1: f64,
    pub alpha2: f64,
    pub nu2: f64,
    pub variance2: f64,
    pub rho12: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionSection {
    pub taus: Vec<f64>,
    pub kappa: usize,
    pub kappa2: usize,
    pub epsilon: f64,
}

impl Default for FusionSection {
    fn default() -> Self {
        let d = FusionConfig::default();
        FusionSection {
            taus: d.taus,
            kappa: d.kappa,
            kappa2: d.kappa2,
            epsilon: d.epsilon,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionSection {
    /// Univariate class count.
    pub n_classes: usize,
    /// Bivariate minimum members per class.
    pub delta: usize,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection {
            n_classes: 30,
            delta: 15,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub levels: usize,
    pub base_grid: usize,
    pub growth: usize,
    pub overlap: f64,
    /// Feed scenario covariates to the classifier alongside the basis.
    pub use_covariates: bool,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            levels: 3,
            base_grid: 5,
            growth: 2,
            overlap: 2.5,
            use_covariates: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    pub clip_floor: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            hidden: d.hidden,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            val_fraction: d.val_fraction,
            clip_floor: d.clip_floor,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandwidthSection {
    pub c: u32,
}

impl Default for BandwidthSection {
    fn default() -> Self {
        BandwidthSection { c: 12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    /// "plugin" uses the scenario's generating covariance; "estimate" fits by
    /// maximum likelihood with the smoothness fixed.
    pub mode: String,
    /// "zero" or "constant".
    pub trend: String,
    pub smoothness: f64,
    pub nm_starts: usize,
    pub nm_max_iters: usize,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection {
            mode: "plugin".into(),
            trend: "zero".into(),
            smoothness: 0.5,
            nm_starts: 2,
            nm_max_iters: 60,
        }
    }
}

/// The one document driving a full run. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub bandwidth: BandwidthSection,
    #[serde(default)]
    pub baseline: BaselineSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| DckError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn preset(name: ScenarioName, n_locations: usize) -> Self {
        let baseline = match name {
            ScenarioName::UniTukey => BaselineSection {
                mode: "estimate".into(),
                trend: "constant".into(),
                ..BaselineSection::default()
            },
            _ => BaselineSection::default(),
        };
        RunConfig {
            seed: 20240601,
            scenario: ScenarioSection {
                name: name.as_str().into(),
                n_locations,
                jitter: None,
                sigma_eps: None,
                test_fraction: None,
                n_test: None,
                n_z1: None,
                tukey_g: None,
                tukey_h: None,
                uni_range: None,
                uni_variance: None,
                bivariate: None,
            },
            fusion: FusionSection::default(),
            partition: PartitionSection::default(),
            embedding: EmbeddingSection::default(),
            train: TrainSection::default(),
            bandwidth: BandwidthSection::default(),
            baseline,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario_config()?;
        self.fusion_config().validate()?;
        self.train_config().validate()?;
        if self.bandwidth.c < 1 {
            return Err(DckError::Config("bandwidth c must be >= 1".into()));
        }
        match self.baseline.mode.as_str() {
            "plugin" | "estimate" => {}
            other => return Err(DckError::Config(format!("unknown baseline mode '{other}'"))),
        }
        match self.baseline.trend.as_str() {
            "zero" | "constant" => {}
            other => return Err(DckError::Config(format!("unknown baseline trend '{other}'"))),
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialized form.
    pub fn digest(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let name = ScenarioName::parse(&self.scenario.name)?;
        let mut config = ScenarioConfig::preset(name, self.scenario.n_locations);
        if let Some(v) = self.scenario.jitter {
            config.jitter = v;
        }
        if let Some(v) = self.scenario.sigma_eps {
            config.sigma_eps = v;
        }
        if let Some(v) = self.scenario.test_fraction {
            config.test_fraction = v;
        }
        if let Some(v) = self.scenario.n_test {
            config.n_test_bi = v;
        }
        if let Some(v) = self.scenario.n_z1 {
            config.n_z1 = v;
        }
        if let Some(g) = self.scenario.tukey_g {
            config.tukey = TukeyGH::new(g, config.tukey.h_tail)?;
        }
        if let Some(h) = self.scenario.tukey_h {
            config.tukey = TukeyGH::new(config.tukey.g, h)?;
        }
        if let (Some(range), CovarianceSpec::Exponential { variance, .. }) =
            (self.scenario.uni_range, &config.uni_cov)
        {
            config.uni_cov = CovarianceSpec::Exponential {
                range,
                variance: *variance,
            };
        }
        if let (Some(variance), CovarianceSpec::Exponential { range, .. }) =
            (self.scenario.uni_variance, &config.uni_cov)
        {
            config.uni_cov = CovarianceSpec::Exponential {
                range: *range,
                variance,
            };
        }
        if let Some(bi) = &self.scenario.bivariate {
            config.bivariate_cov = BiMaternSpec {
                alpha1: bi.alpha1,
                nu1: bi.nu1,
                variance1: bi.variance1,
                alpha2: bi.alpha2,
                nu2: bi.nu2,
                variance2: bi.variance2,
                rho12: bi.rho12,
            };
        }
        Ok(config)
    }

    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig {
            taus: self.fusion.taus.clone(),
            kappa: self.fusion.kappa,
            kappa2: self.fusion.kappa2,
            epsilon: self.fusion.epsilon,
            ..FusionConfig::default()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.train.hidden.clone(),
            learning_rate: self.train.learning_rate,
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            patience: self.train.patience,
            val_fraction: self.train.val_fraction,
            clip_floor: self.train.clip_floor,
            ..TrainConfig::default()
        }
    }

    fn trend_mode(&self) -> TrendMode {
        if self.baseline.trend == "constant" {
            TrendMode::Constant
        } else {
            TrendMode::Zero
        }
    }

    fn estimate_config(&self) -> Option<EstimateConfig> {
        if self.baseline.mode == "estimate" {
            Some(EstimateConfig {
                starts: self.baseline.nm_starts,
                max_iters: self.baseline.nm_max_iters,
            })
        } else {
            None
        }
    }
}

/// Point and interval predictions at held-out locations.
#[derive(Debug, Clone)]
pub struct Predictions {
    pub locations: Vec<Location>,
    pub lower: Vec<f64>,
    pub median: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct RunMetrics {
    pub mae: f64,
    pub picp: f64,
    pub al: f64,
}

/// One trained DCK model with its held-out evaluation.
#[derive(Debug, Clone)]
pub struct DckRun {
    pub bundle: ModelBundle,
    pub train_log: Vec<EpochLog>,
    pub fused: Option<Fused>,
    pub predictions: Predictions,
    pub metrics: RunMetrics,
    pub seconds: f64,
}

/// The kriging comparator's held-out evaluation.
#[derive(Debug, Clone)]
pub struct CkRun {
    pub predictions: Predictions,
    pub metrics: RunMetrics,
    pub seconds: f64,
}

fn evaluate(predictions: &Predictions, truths: &[f64]) -> Result<RunMetrics> {
    let mae = mae(&predictions.median, truths)?;
    let (picp, al) = picp_al(&predictions.lower, &predictions.upper, truths)?;
    Ok(RunMetrics { mae, picp, al })
}

/// Trains DCK on one univariate scenario replicate and evaluates it on the
/// held-out locations.
pub fn run_dck_univariate(
    data: &UniScenario,
    config: &RunConfig,
    policy: &SeedPolicy,
) -> Result<DckRun> {
    let started = Instant::now();
    let partition = univariate_partition(&data.train.values, config.partition.n_classes)
        .map_err(|e| e.in_stage("discretize"))?;
    let labeled = assign_labels_univariate(
        &partition,
        &data.train.values,
        &data.train.locations,
        if config.embedding.use_covariates {
            data.train.covariates.clone()
        } else {
            None
        },
    )
    .map_err(|e| e.in_stage("discretize"))?;

    let (bundle, train_log) = train_bundle_from_labels(
        &partition,
        &labeled.locations,
        labeled.covariates.as_deref(),
        &labeled.labels,
        1,
        &data.train.values,
        None,
        config,
        policy,
    )?;

    let test_covs = if config.embedding.use_covariates {
        data.test_covariates.clone()
    } else {
        None
    };
    let cdfs = bundle
        .predictive_cdfs(&data.test_locations, test_covs.as_deref())
        .map_err(|e| e.in_stage("predict"))?;
    let predictions = quantile_predictions(&cdfs, &data.test_locations, None)?;
    let metrics = evaluate(&predictions, &data.test_y_true)?;
    Ok(DckRun {
        bundle,
        train_log,
        fused: None,
        predictions,
        metrics,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Trains DCK on one bivariate scenario replicate (fusion first) and
/// evaluates conditional prediction of the first variable.
pub fn run_dck_bivariate(
    data: &BiScenario,
    config: &RunConfig,
    policy: &SeedPolicy,
) -> Result<DckRun> {
    let started = Instant::now();
    let sets = BiSampleSets::new(data.z1.clone(), data.z2.clone());
    let fused = fuse(&sets, &config.fusion_config()).map_err(|e| e.in_stage("fuse"))?;
    let partition = bivariate_partition(&fused.points, &fused.lines, config.partition.delta)
        .map_err(|e| e.in_stage("discretize"))?;
    let labeled = assign_labels_bivariate(&partition, &fused.lines, &fused.points)
        .map_err(|e| e.in_stage("discretize"))?;

    let z1_values: Vec<f64> = fused.points.iter().map(|p| p.z1).collect();
    let z2_values: Vec<f64> = fused.points.iter().map(|p| p.z2).collect();
    let (bundle, train_log) = train_bundle_from_labels(
        &partition,
        &labeled.locations,
        None,
        &labeled.labels,
        2,
        &z1_values,
        Some(&z2_values),
        config,
        policy,
    )?;

    let cdfs = bundle
        .predictive_cdfs(&data.test_locations, None)
        .map_err(|e| e.in_stage("predict"))?;
    let predictions =
        quantile_predictions(&cdfs, &data.test_locations, Some(&data.test_y2_true))?;
    let metrics = evaluate(&predictions, &data.test_y1_true)?;
    Ok(DckRun {
        bundle,
        train_log,
        fused: Some(fused),
        predictions,
        metrics,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Shared embed + train + bandwidth step: builds the feature embedding from
/// the labeled locations, trains the classifier, applies the bandwidth rule
/// and assembles the bundle.
#[allow(clippy::too_many_arguments)]
pub fn train_bundle_from_labels(
    partition: &ClassPartition,
    locations: &[Location],
    covariates: Option<&[Vec<f64>]>,
    labels: &[usize],
    p: usize,
    scale_values_1: &[f64],
    scale_values_2: Option<&[f64]>,
    config: &RunConfig,
    policy: &SeedPolicy,
) -> Result<(ModelBundle, Vec<EpochLog>)> {
    let embedding = build_config(
        locations,
        config.embedding.levels,
        config.embedding.base_grid,
        config.embedding.growth,
        config.embedding.overlap,
    )
    .map_err(|e| e.in_stage("embed"))?;
    let features = embedding
        .embed_batch(locations, covariates)
        .map_err(|e| e.in_stage("embed"))?;
    let (network, train_log) = train(
        &features,
        labels,
        partition.len(),
        &config.train_config(),
        policy,
    )
    .map_err(|e| e.in_stage("train"))?;

    let sigma_h = match scale_values_2 {
        Some(z2) => 0.5 * (mad(scale_values_1) + mad(z2)),
        None => mad(scale_values_1),
    };
    let h = bandwidth(&BandwidthRule::new(
        config.bandwidth.c,
        p,
        sigma_h,
        labels.len(),
    ))
    .map_err(|e| e.in_stage("bandwidth"))?;

    let bundle = ModelBundle {
        embedding,
        network,
        partition: partition.clone(),
        bandwidth_h: h,
        meta: BundleMeta {
            seed: policy.master_seed(),
            config_digest: config.digest(),
            created: None,
        },
    };
    bundle.validate()?;
    Ok((bundle, train_log))
}

/// 95% central interval and median per location; conditional when the
/// scenario provides a conditioning value.
pub fn quantile_predictions(
    cdfs: &[PredictiveCdf],
    locations: &[Location],
    given_y2: Option<&[f64]>,
) -> Result<Predictions> {
    let mut lower = Vec::with_capacity(cdfs.len());
    let mut median = Vec::with_capacity(cdfs.len());
    let mut upper = Vec::with_capacity(cdfs.len());
    for (i, cdf) in cdfs.iter().enumerate() {
        let given = given_y2.map(|g| g[i]);
        lower.push(cdf.quantile(0.025, given)?);
        median.push(cdf.quantile(0.5, given)?);
        upper.push(cdf.quantile(0.975, given)?);
    }
    Ok(Predictions {
        locations: locations.to_vec(),
        lower,
        median,
        upper,
    })
}

/// Runs the kriging comparator on a univariate replicate.
pub fn run_ck_univariate(
    data: &UniScenario,
    config: &RunConfig,
    scenario_config: &ScenarioConfig,
) -> Result<CkRun> {
    let started = Instant::now();
    let stack = ObsStack::univariate(data.train.locations.clone(), data.train.values.clone());
    let (spec, nugget) = match config.baseline.mode.as_str() {
        "plugin" => (
            scenario_config.uni_cov.clone(),
            scenario_config.sigma_eps.powi(2),
        ),
        _ => (
            CovarianceSpec::Matern {
                range: 0.25,
                smoothness: config.baseline.smoothness,
                variance: 1.0,
            },
            1e-3,
        ),
    };
    let model = baseline::fit(
        stack,
        spec,
        nugget,
        config.trend_mode(),
        config.estimate_config(),
    )
    .map_err(|e| e.in_stage("baseline-fit"))?;
    let preds = model
        .predict(&data.test_locations, 1)
        .map_err(|e| e.in_stage("baseline-predict"))?;
    let predictions = Predictions {
        locations: data.test_locations.clone(),
        lower: preds.iter().map(|p| p.mean - Z_975 * p.sd).collect(),
        median: preds.iter().map(|p| p.mean).collect(),
        upper: preds.iter().map(|p| p.mean + Z_975 * p.sd).collect(),
    };
    let metrics = evaluate(&predictions, &data.test_y_true)?;
    Ok(CkRun {
        predictions,
        metrics,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Stacks the bivariate training observations, optionally with exact
/// conditioning values of the second field at the prediction sites.
pub fn bivariate_stack(data: &BiScenario, condition_on_test_y2: bool) -> ObsStack {
    let mut stack = ObsStack::default();
    for i in 0..data.z1.len() {
        stack.push(data.z1.locations[i], 1, data.z1.values[i], true);
    }
    for i in 0..data.z2.len() {
        stack.push(data.z2.locations[i], 2, data.z2.values[i], true);
    }
    if condition_on_test_y2 {
        for (loc, y2) in data.test_locations.iter().zip(&data.test_y2_true) {
            stack.push(*loc, 2, *y2, false);
        }
    }
    stack
}

/// Runs the co-kriging comparator on a bivariate replicate, conditioning on
/// the second field at the prediction sites like DCK does.
pub fn run_ck_bivariate(
    data: &BiScenario,
    config: &RunConfig,
    scenario_config: &ScenarioConfig,
) -> Result<CkRun> {
    let started = Instant::now();
    let stack = bivariate_stack(data, true);
    let (spec, nugget) = (
        CovarianceSpec::BivariateMatern(scenario_config.bivariate_cov.clone()),
        scenario_config.sigma_eps.powi(2),
    );
    let model = baseline::fit(
        stack,
        spec,
        nugget,
        config.trend_mode(),
        config.estimate_config(),
    )
    .map_err(|e| e.in_stage("baseline-fit"))?;
    let preds = model
        .predict(&data.test_locations, 1)
        .map_err(|e| e.in_stage("baseline-predict"))?;
    let predictions = Predictions {
        locations: data.test_locations.clone(),
        lower: preds.iter().map(|p| p.mean - Z_975 * p.sd).collect(),
        median: preds.iter().map(|p| p.mean).collect(),
        upper: preds.iter().map(|p| p.mean + Z_975 * p.sd).collect(),
    };
    let metrics = evaluate(&predictions, &data.test_y1_true)?;
    Ok(CkRun {
        predictions,
        metrics,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// Artifacts written by [`run_pipeline`].
#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub config_digest: String,
    pub seed: u64,
    pub scenario: String,
    pub n_classes: usize,
    pub bandwidth_h: f64,
    pub mae: f64,
    pub picp: f64,
    pub al: f64,
    pub dck_seconds: f64,
}

/// Executes the full DCK pipeline for a config and writes every artifact
/// under `out_dir`. Any stage failure removes partial outputs.
pub fn run_pipeline(config: &RunConfig, out_dir: &Path, provenance: bool) -> Result<PipelineSummary> {
    std::fs::create_dir_all(out_dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let result = run_pipeline_inner(config, out_dir, provenance, &mut written);
    if result.is_err() {
        for path in written {
            let _ = std::fs::remove_file(path);
        }
    }
    result
}

fn run_pipeline_inner(
    config: &RunConfig,
    out_dir: &Path,
    provenance: bool,
    written: &mut Vec<PathBuf>,
) -> Result<PipelineSummary> {
    config.validate()?;
    let policy = SeedPolicy::new(config.seed);
    let scenario_config = config.scenario_config()?;
    let data = scenario(&scenario_config, &policy).map_err(|e| e.in_stage("simulate"))?;
    let prov = Provenance {
        config_digest: config.digest(),
        seed: config.seed,
    };
    let prov_opt = provenance.then_some(&prov);

    let run = match &data {
        ScenarioData::Univariate(uni) => {
            let run = run_dck_univariate(uni, config, &policy)?;
            let train_path = out_dir.join("train.csv");
            csvio::write_uni_dataset(&train_path, &uni.train, "z", prov_opt)?;
            written.push(train_path);
            let test_path = out_dir.join("test.csv");
            write_test_univariate(&test_path, uni, prov_opt)?;
            written.push(test_path);
            run
        }
        ScenarioData::Bivariate(bi) => {
            let run = run_dck_bivariate(bi, config, &policy)?;
            let z1_path = out_dir.join("train_z1.csv");
            csvio::write_uni_dataset(&z1_path, &bi.z1, "z1", prov_opt)?;
            written.push(z1_path);
            let z2_path = out_dir.join("train_z2.csv");
            csvio::write_uni_dataset(&z2_path, &bi.z2, "z2", prov_opt)?;
            written.push(z2_path);
            let test_path = out_dir.join("test.csv");
            write_test_bivariate(&test_path, bi, prov_opt)?;
            written.push(test_path);
            if let Some(fused) = &run.fused {
                let fused_path = out_dir.join("fused.csv");
                csvio::write_fused(&fused_path, &fused.points, prov_opt)?;
                written.push(fused_path);
                let lines_path = out_dir.join("lines.csv");
                csvio::write_lines(&lines_path, &fused.lines, prov_opt)?;
                written.push(lines_path);
            }
            run
        }
    };

    let bundle_path = out_dir.join("bundle.json");
    if bundle_path.exists() {
        std::fs::remove_file(&bundle_path)?;
    }
    save_bundle(&run.bundle, &bundle_path, false).map_err(|e| e.in_stage("save-bundle"))?;
    written.push(bundle_path);

    let log_path = out_dir.join("train_log.csv");
    write_train_log(&log_path, &run.train_log, prov_opt)?;
    written.push(log_path);

    let pred_path = out_dir.join("predictions.csv");
    write_predictions(&pred_path, &run.predictions, prov_opt)?;
    written.push(pred_path);

    let summary = PipelineSummary {
        config_digest: config.digest(),
        seed: config.seed,
        scenario: config.scenario.name.clone(),
        n_classes: run.bundle.partition.len(),
        bandwidth_h: run.bundle.bandwidth_h,
        mae: run.metrics.mae,
        picp: run.metrics.picp,
        al: run.metrics.al,
        dck_seconds: run.seconds,
    };
    let metrics_path = out_dir.join("metrics.json");
    std::fs::write(&metrics_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(metrics_path);
    Ok(summary)
}

fn write_test_univariate(
    path: &Path,
    data: &UniScenario,
    provenance: Option<&Provenance>,
) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..data.test_locations.len())
        .map(|i| {
            vec![
                fmt_f64(data.test_locations[i].x),
                fmt_f64(data.test_locations[i].y),
                fmt_f64(data.test_y_true[i]),
            ]
        })
        .collect();
    csvio::write_records(path, &["x", "y", "y1_true"], &rows, provenance)
}

fn write_test_bivariate(
    path: &Path,
    data: &BiScenario,
    provenance: Option<&Provenance>,
) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..data.test_locations.len())
        .map(|i| {
            vec![
                fmt_f64(data.test_locations[i].x),
                fmt_f64(data.test_locations[i].y),
                fmt_f64(data.test_y1_true[i]),
                fmt_f64(data.test_y2_true[i]),
            ]
        })
        .collect();
    csvio::write_records(path, &["x", "y", "y1_true", "y2_true"], &rows, provenance)
}

/// Writes the training log as `epoch,train_loss,val_loss`.
pub fn write_train_log(
    path: &Path,
    log: &[EpochLog],
    provenance: Option<&Provenance>,
) -> Result<()> {
    let rows: Vec<Vec<String>> = log
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                fmt_f64(e.train_loss),
                fmt_f64(e.val_loss),
            ]
        })
        .collect();
    csvio::write_records(path, &["epoch", "train_loss", "val_loss"], &rows, provenance)
}

/// Writes per-location quantile predictions.
pub fn write_predictions(
    path: &Path,
    predictions: &Predictions,
    provenance: Option<&Provenance>,
) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..predictions.locations.len())
        .map(|i| {
            vec![
                fmt_f64(predictions.locations[i].x),
                fmt_f64(predictions.locations[i].y),
                fmt_f64(predictions.lower[i]),
                fmt_f64(predictions.median[i]),
                fmt_f64(predictions.upper[i]),
            ]
        })
        .collect();
    csvio::write_records(path, &["x", "y", "q0.025", "q0.5", "q0.975"], &rows, provenance)
}

/// Replication output: per-replicate rows for both methods plus failures.
#[derive(Debug, Clone)]
pub struct ReplicateOutput {
    pub dck: ResultTable,
    pub ck: ResultTable,
    pub failures: Vec<(usize, String)>,
}

/// Runs DCK and CK over `replicates` seeds of the configured scenario.
/// Replicates run in parallel worker slots when `DCK_WORKERS` is set above 1;
/// aggregation order is fixed by replicate index either way.
pub fn replicate_scenario(config: &RunConfig, replicates: usize) -> Result<ReplicateOutput> {
    if replicates == 0 {
        return Err(DckError::invalid("need at least one replicate"));
    }
    config.validate()?;
    let scenario_config = config.scenario_config()?;
    let master = SeedPolicy::new(config.seed);

    let workers: usize = std::env::var("DCK_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1)
        .max(1);

    type RepResult = Result<(MetricRow, MetricRow)>;
    let run_one = |r: usize| -> RepResult {
        let policy = master.replicate(r as u64);
        let data = scenario(&scenario_config, &policy).map_err(|e| e.in_stage("simulate"))?;
        let (dck_row, ck_row) = match &data {
            ScenarioData::Univariate(uni) => {
                let dck = run_dck_univariate(uni, config, &policy)?;
                let ck = run_ck_univariate(uni, config, &scenario_config)?;
                (
                    MetricRow {
                        replicate: r,
                        mae: dck.metrics.mae,
                        picp: dck.metrics.picp,
                        al: dck.metrics.al,
                        seconds: dck.seconds,
                    },
                    MetricRow {
                        replicate: r,
                        mae: ck.metrics.mae,
                        picp: ck.metrics.picp,
                        al: ck.metrics.al,
                        seconds: ck.seconds,
                    },
                )
            }
            ScenarioData::Bivariate(bi) => {
                let dck = run_dck_bivariate(bi, config, &policy)?;
                let ck = run_ck_bivariate(bi, config, &scenario_config)?;
                (
                    MetricRow {
                        replicate: r,
                        mae: dck.metrics.mae,
                        picp: dck.metrics.picp,
                        al: dck.metrics.al,
                        seconds: dck.seconds,
                    },
                    MetricRow {
                        replicate: r,
                        mae: ck.metrics.mae,
                        picp: ck.metrics.picp,
                        al: ck.metrics.al,
                        seconds: ck.seconds,
                    },
                )
            }
        };
        Ok((dck_row, ck_row))
    };

    let results: Vec<RepResult> = if workers <= 1 {
        (0..replicates).map(run_one).collect()
    } else {
        let mut slots: Vec<Option<RepResult>> = (0..replicates).map(|_| None).collect();
        std::thread::scope(|scope| {
            let chunks: Vec<Vec<usize>> = (0..workers)
                .map(|w| (w..replicates).step_by(workers).collect())
                .collect();
            let mut handles = Vec::new();
            for chunk in chunks {
                handles.push(scope.spawn(move || {
                    chunk
                        .into_iter()
                        .map(|r| (r, run_one(r)))
                        .collect::<Vec<_>>()
                }));
            }
            for handle in handles {
                for (r, result) in handle.join().expect("worker panicked") {
                    slots[r] = Some(result);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("all slots filled")).collect()
    };

    let mut dck_rows = Vec::new();
    let mut ck_rows = Vec::new();
    let mut failures = Vec::new();
    for (r, result) in results.into_iter().enumerate() {
        match result {
            Ok((dck_row, ck_row)) => {
                dck_rows.push(dck_row);
                ck_rows.push(ck_row);
            }
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    if dck_rows.is_empty() {
        return Err(DckError::numeric(format!(
            "all {replicates} replicates failed; first: {}",
            failures[0].1
        )));
    }
    Ok(ReplicateOutput {
        dck: ResultTable { rows: dck_rows },
        ck: ResultTable { rows: ck_rows },
        failures,
    })
}
