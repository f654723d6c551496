//! `dck` — command-line pipeline for distribution-free probabilistic spatial
//! prediction: simulate, fuse, train, predict, evaluate, replicate.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dck_core::baseline::{self, EstimateConfig, ObsStack, TrendMode, Z_975};
use dck_core::bundle::{load_bundle, save_bundle};
use dck_core::csvio::{self, fmt_f64, CsvTable, Provenance};
use dck_core::discretize::{
    assign_labels_bivariate, assign_labels_univariate, bivariate_partition, univariate_partition,
};
use dck_core::fusion::{fuse, FusionConfig};
use dck_core::harness::{
    self, hull_subsample, ingest, replicate_scenario, run_pipeline, RunConfig,
};
use dck_core::metrics;
use dck_core::rng::{stream, SeedPolicy};
use dck_core::simgen::{scenario, ScenarioConfig, ScenarioData, ScenarioName};
use dck_core::types::{BiSampleSets, Location};
use dck_core::{DckError, ModelBundle};

#[derive(Parser)]
#[command(name = "dck", version, about = "Deep classifier kriging pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProvenanceArgs {
    /// Random seed recorded in provenance headers and used where relevant.
    #[arg(long, default_value_t = 20240601)]
    seed: u64,
    /// Omit the leading `#` provenance comment from emitted CSVs.
    #[arg(long)]
    no_provenance: bool,
}

impl ProvenanceArgs {
    fn provenance(&self, digest: &str) -> Option<Provenance> {
        if self.no_provenance {
            None
        } else {
            Some(Provenance {
                config_digest: digest.to_string(),
                seed: self.seed,
            })
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark scenario and write train/test CSVs.
    Simulate {
        /// uni_gauss, uni_tukey, bi_gauss or bi_tukey.
        #[arg(long)]
        scenario: String,
        /// Total locations (perfect square).
        #[arg(long, default_value_t = 1600)]
        n: usize,
        /// Output prefix; files are <prefix>.csv / <prefix>_z1.csv etc.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
    /// Fuse non-collocated bivariate observations (collocate, fit quantile
    /// lines, project, augment).
    Fuse {
        #[arg(long)]
        z1: PathBuf,
        #[arg(long)]
        z2: PathBuf,
        /// Number of quantile levels; levels are evenly spaced in
        /// [0.05, 0.95] unless --taus is given.
        #[arg(long, default_value_t = 5)]
        m1: usize,
        /// Comma-separated quantile levels overriding --m1.
        #[arg(long)]
        taus: Option<String>,
        #[arg(long, default_value_t = 1)]
        kappa: usize,
        #[arg(long, default_value_t = 5)]
        kappa2: usize,
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,
        /// Output directory for fused.csv and lines.csv.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
    /// Train a classifier and write a model bundle.
    Train {
        /// Univariate training CSV (x,y,z[,x1..]); mutually exclusive with
        /// --fused/--lines.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fused bivariate CSV from `dck fuse`.
        #[arg(long)]
        fused: Option<PathBuf>,
        /// Quantile lines CSV from `dck fuse`.
        #[arg(long)]
        lines: Option<PathBuf>,
        /// Univariate class count.
        #[arg(long, default_value_t = 30)]
        classes: usize,
        /// Bivariate minimum members per class.
        #[arg(long, default_value_t = 15)]
        delta: usize,
        /// Bandwidth scale constant C.
        #[arg(long, default_value_t = 12)]
        c: u32,
        /// Output bundle path.
        #[arg(long)]
        out: PathBuf,
        /// Optional training log CSV.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Overwrite an existing bundle.
        #[arg(long)]
        force: bool,
        /// Record the wall-clock creation time in the bundle metadata.
        #[arg(long)]
        timestamp: bool,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
    /// Quantile predictions at new locations from a trained bundle.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CSV with x,y[,covariates][,conditioning column].
        #[arg(long)]
        locations: PathBuf,
        /// Column holding the conditioning value of the second variable.
        #[arg(long)]
        given: Option<String>,
        #[arg(long, default_value = "0.025,0.5,0.975")]
        quantiles: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
    /// Threshold exceedance probabilities at new locations.
    Exceedance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        locations: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        given: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
    /// Point/interval metrics of predictions against truth (JSON to stdout).
    Evaluate {
        /// Predictions CSV from `dck predict`.
        #[arg(long)]
        pred: PathBuf,
        /// Truth CSV with x,y and the truth column.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value = "y1_true")]
        truth_col: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Energy and variogram scores of joint samples against observations.
    EvaluateJoint {
        /// Samples CSV with loc,y1,y2 (loc is the 0-based observation row).
        #[arg(long)]
        samples: PathBuf,
        /// Observations CSV with x,y,z1,z2.
        #[arg(long)]
        obs: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
    },
    /// Probability integral transform of observations under a trained model.
    Pit {
        #[arg(long)]
        model: PathBuf,
        /// CSV with x,y and the observation column.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "z")]
        value_col: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
    /// Exact Gaussian-process kriging baseline.
    BaselineKrige {
        /// Training CSV (x,y,z).
        #[arg(long)]
        train: PathBuf,
        /// Target locations CSV (x,y).
        #[arg(long)]
        targets: PathBuf,
        /// exponential or matern.
        #[arg(long, default_value = "exponential")]
        family: String,
        #[arg(long, default_value_t = 0.5)]
        range: f64,
        #[arg(long, default_value_t = 1.0)]
        variance: f64,
        #[arg(long, default_value_t = 0.5)]
        smoothness: f64,
        #[arg(long, default_value_t = 0.01)]
        nugget: f64,
        /// Estimate range/variance/nugget by maximum likelihood.
        #[arg(long)]
        estimate: bool,
        /// zero or constant trend.
        #[arg(long, default_value = "zero")]
        trend: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
    /// Full pipeline from a TOML config: simulate, fuse, train, predict,
    /// evaluate; artifacts land in --out.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_provenance: bool,
    },
    /// DCK vs kriging over R replicate seeds of one scenario.
    Replicate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        replicates: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_provenance: bool,
    },
    /// Validate external bivariate CSVs (NaN drops, duplicate rejection),
    /// optionally subsampling the dense variable inside the sparse hull.
    Ingest {
        #[arg(long)]
        z1: PathBuf,
        #[arg(long)]
        z2: PathBuf,
        /// Keep at most this many dense sites inside the sparse hull.
        #[arg(long)]
        hull_sample: Option<usize>,
        /// Write validated copies next to the originals with this suffix.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        common: ProvenanceArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn parse_levels(text: &str) -> Result<Vec<f64>, DckError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| DckError::Config(format!("bad quantile level '{t}'")))
        })
        .collect()
}

fn level_label(level: f64) -> String {
    format!("q{}", fmt_f64(level).trim_end_matches(".0"))
}

fn read_locations(table: &CsvTable) -> Result<Vec<Location>, DckError> {
    let xs = table.numeric_column("x")?;
    let ys = table.numeric_column("y")?;
    xs.into_iter()
        .zip(ys)
        .map(|(x, y)| Location::new(x, y))
        .collect()
}

fn read_covariates(
    table: &CsvTable,
    width: usize,
) -> Result<Option<Vec<Vec<f64>>>, DckError> {
    if width == 0 {
        return Ok(None);
    }
    let cols: Vec<Vec<f64>> = (1..=width)
        .map(|i| table.numeric_column(&format!("x{i}")))
        .collect::<Result<_, _>>()?;
    let n = cols[0].len();
    Ok(Some(
        (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect(),
    ))
}

fn bundle_cdfs_from_table(
    bundle: &ModelBundle,
    table: &CsvTable,
    given: Option<&str>,
) -> Result<(Vec<Location>, Vec<dck_core::cdf::PredictiveCdf>, Option<Vec<f64>>), DckError> {
    let locations = read_locations(table)?;
    let covariates = read_covariates(table, bundle.covariate_width())?;
    let cdfs = bundle.predictive_cdfs(&locations, covariates.as_deref())?;
    let given_values = match given {
        Some(col) => {
            if bundle.p() != 2 {
                return Err(DckError::Config(
                    "--given only applies to bivariate models".into(),
                ));
            }
            Some(table.numeric_column(col)?)
        }
        None => None,
    };
    Ok((locations, cdfs, given_values))
}

fn dispatch(command: Command) -> Result<(), DckError> {
    match command {
        Command::Simulate {
            scenario: name,
            n,
            out,
            common,
        } => {
            let name = ScenarioName::parse(&name)?;
            let config = ScenarioConfig::preset(name, n);
            let policy = SeedPolicy::new(common.seed);
            let data = scenario(&config, &policy)?;
            let digest = format!("simulate-{}-{n}", name.as_str());
            let prov = common.provenance(&digest);
            let prefix = out
                .file_name()
                .map(|f| f.to_string_lossy().to_string())
                .unwrap_or_else(|| "sim".into());
            let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(&dir)?;
            }
            match data {
                ScenarioData::Univariate(uni) => {
                    let train = dir.join(format!("{prefix}.csv"));
                    csvio::write_uni_dataset(&train, &uni.train, "z", prov.as_ref())?;
                    let test = dir.join(format!("{prefix}_test.csv"));
                    let rows: Vec<Vec<String>> = (0..uni.test_locations.len())
                        .map(|i| {
                            vec![
                                fmt_f64(uni.test_locations[i].x),
                                fmt_f64(uni.test_locations[i].y),
                                fmt_f64(uni.test_y_true[i]),
                            ]
                        })
                        .collect();
                    csvio::write_records(&test, &["x", "y", "y1_true"], &rows, prov.as_ref())?;
                    eprintln!(
                        "wrote {} ({} rows) and {} ({} rows)",
                        train.display(),
                        uni.train.len(),
                        test.display(),
                        uni.test_locations.len()
                    );
                }
                ScenarioData::Bivariate(bi) => {
                    let z1 = dir.join(format!("{prefix}_z1.csv"));
                    csvio::write_uni_dataset(&z1, &bi.z1, "z1", prov.as_ref())?;
                    let z2 = dir.join(format!("{prefix}_z2.csv"));
                    csvio::write_uni_dataset(&z2, &bi.z2, "z2", prov.as_ref())?;
                    let test = dir.join(format!("{prefix}_test.csv"));
                    let rows: Vec<Vec<String>> = (0..bi.test_locations.len())
                        .map(|i| {
                            vec![
                                fmt_f64(bi.test_locations[i].x),
                                fmt_f64(bi.test_locations[i].y),
                                fmt_f64(bi.test_y1_true[i]),
                                fmt_f64(bi.test_y2_true[i]),
                            ]
                        })
                        .collect();
                    csvio::write_records(
                        &test,
                        &["x", "y", "y1_true", "y2_true"],
                        &rows,
                        prov.as_ref(),
                    )?;
                    eprintln!(
                        "wrote {} ({}), {} ({}), {} ({})",
                        z1.display(),
                        bi.z1.len(),
                        z2.display(),
                        bi.z2.len(),
                        test.display(),
                        bi.test_locations.len()
                    );
                }
            }
            Ok(())
        }

        Command::Fuse {
            z1,
            z2,
            m1,
            taus,
            kappa,
            kappa2,
            epsilon,
            out,
            common,
        } => {
            let taus = match taus {
                Some(text) => parse_levels(&text)?,
                None => {
                    if m1 == 1 {
                        vec![0.5]
                    } else {
                        (0..m1)
                            .map(|k| 0.05 + 0.9 * k as f64 / (m1 - 1) as f64)
                            .collect()
                    }
                }
            };
            let set1 = csvio::read_uni_dataset(&z1, "z1")?;
            let set2 = csvio::read_uni_dataset(&z2, "z2")?;
            let config = FusionConfig {
                taus,
                kappa,
                kappa2,
                epsilon,
                ..FusionConfig::default()
            };
            let fused = fuse(&BiSampleSets::new(set1, set2), &config)?;
            std::fs::create_dir_all(&out)?;
            let digest = format!("fuse-m1-{}", fused.lines.len());
            let prov = common.provenance(&digest);
            csvio::write_fused(&out.join("fused.csv"), &fused.points, prov.as_ref())?;
            csvio::write_lines(&out.join("lines.csv"), &fused.lines, prov.as_ref())?;
            eprintln!(
                "fused {} points ({} projected) onto {} lines",
                fused.points.len(),
                fused.collocated.len(),
                fused.lines.len()
            );
            Ok(())
        }

        Command::Train {
            data,
            fused,
            lines,
            classes,
            delta,
            c,
            out,
            log,
            force,
            timestamp,
            common,
        } => {
            let mut config = RunConfig::preset(ScenarioName::UniGauss, 1600);
            config.seed = common.seed;
            config.partition.n_classes = classes;
            config.partition.delta = delta;
            config.bandwidth.c = c;
            let policy = SeedPolicy::new(common.seed);

            let (mut bundle, train_log) = match (data, fused, lines) {
                (Some(data_path), None, None) => {
                    let train_data = csvio::read_uni_dataset(&data_path, "z")?;
                    config.embedding.use_covariates = train_data.covariates.is_some();
                    let partition = univariate_partition(&train_data.values, classes)?;
                    let labeled = assign_labels_univariate(
                        &partition,
                        &train_data.values,
                        &train_data.locations,
                        train_data.covariates.clone(),
                    )?;
                    harness::train_bundle_from_labels(
                        &partition,
                        &labeled.locations,
                        labeled.covariates.as_deref(),
                        &labeled.labels,
                        1,
                        &train_data.values,
                        None,
                        &config,
                        &policy,
                    )?
                }
                (None, Some(fused_path), Some(lines_path)) => {
                    let points = csvio::read_fused(&fused_path)?;
                    let qlines = csvio::read_lines(&lines_path)?;
                    let partition = bivariate_partition(&points, &qlines, delta)?;
                    let labeled = assign_labels_bivariate(&partition, &qlines, &points)?;
                    let z1: Vec<f64> = points.iter().map(|p| p.z1).collect();
                    let z2: Vec<f64> = points.iter().map(|p| p.z2).collect();
                    harness::train_bundle_from_labels(
                        &partition,
                        &labeled.locations,
                        None,
                        &labeled.labels,
                        2,
                        &z1,
                        Some(&z2),
                        &config,
                        &policy,
                    )?
                }
                _ => {
                    return Err(DckError::Config(
                        "pass either --data (univariate) or --fused with --lines (bivariate)"
                            .into(),
                    ))
                }
            };
            if timestamp {
                bundle.meta.created = Some(chrono_free_timestamp());
            }
            save_bundle(&bundle, &out, force)?;
            if let Some(log_path) = log {
                harness::write_train_log(
                    &log_path,
                    &train_log,
                    common.provenance(&bundle.meta.config_digest).as_ref(),
                )?;
            }
            eprintln!(
                "trained {} classes, bandwidth h = {:.6}; bundle at {}",
                bundle.partition.len(),
                bundle.bandwidth_h,
                out.display()
            );
            Ok(())
        }

        Command::Predict {
            model,
            locations,
            given,
            quantiles,
            out,
            common,
        } => {
            let bundle = load_bundle(&model)?;
            let levels = parse_levels(&quantiles)?;
            if levels.iter().any(|t| !(0.0 < *t && *t < 1.0)) {
                return Err(DckError::Config("quantile levels must be in (0,1)".into()));
            }
            let table = CsvTable::read(&locations)?;
            let (locs, cdfs, given_values) =
                bundle_cdfs_from_table(&bundle, &table, given.as_deref())?;
            let mut header: Vec<String> = vec!["x".into(), "y".into()];
            header.extend(levels.iter().map(|l| level_label(*l)));
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let mut rows = Vec::with_capacity(locs.len());
            for (i, cdf) in cdfs.iter().enumerate() {
                let given_i = given_values.as_ref().map(|g| g[i]);
                let mut row = vec![fmt_f64(locs[i].x), fmt_f64(locs[i].y)];
                for &level in &levels {
                    row.push(fmt_f64(cdf.quantile(level, given_i)?));
                }
                rows.push(row);
            }
            csvio::write_records(
                &out,
                &header_refs,
                &rows,
                common.provenance(&bundle.meta.config_digest).as_ref(),
            )?;
            eprintln!("wrote {} ({} rows)", out.display(), rows.len());
            Ok(())
        }

        Command::Exceedance {
            model,
            locations,
            threshold,
            given,
            out,
            common,
        } => {
            let bundle = load_bundle(&model)?;
            let table = CsvTable::read(&locations)?;
            let (locs, cdfs, given_values) =
                bundle_cdfs_from_table(&bundle, &table, given.as_deref())?;
            let mut rows = Vec::with_capacity(locs.len());
            for (i, cdf) in cdfs.iter().enumerate() {
                let given_i = given_values.as_ref().map(|g| g[i]);
                rows.push(vec![
                    fmt_f64(locs[i].x),
                    fmt_f64(locs[i].y),
                    fmt_f64(cdf.exceedance(threshold, given_i)?),
                ]);
            }
            csvio::write_records(
                &out,
                &["x", "y", "prob_exceed"],
                &rows,
                common.provenance(&bundle.meta.config_digest).as_ref(),
            )?;
            eprintln!("wrote {} ({} rows)", out.display(), rows.len());
            Ok(())
        }

        Command::Evaluate {
            pred,
            truth,
            truth_col,
            alpha,
        } => {
            if !(0.0 < alpha && alpha < 1.0) {
                return Err(DckError::Config("alpha must be in (0,1)".into()));
            }
            let pred_table = CsvTable::read(&pred)?;
            let truth_table = CsvTable::read(&truth)?;
            let truths = truth_table.numeric_column(&truth_col)?;
            let median = pred_table.numeric_column("q0.5")?;
            let lower = pred_table.numeric_column(&level_label(alpha / 2.0))?;
            let upper = pred_table.numeric_column(&level_label(1.0 - alpha / 2.0))?;
            let mae = metrics::mae(&median, &truths)?;
            let (picp, al) = metrics::picp_al(&lower, &upper, &truths)?;
            println!(
                "{}",
                serde_json::json!({"mae": mae, "picp": picp, "al": al})
            );
            Ok(())
        }

        Command::EvaluateJoint { samples, obs, beta } => {
            let obs_table = CsvTable::read(&obs)?;
            let z1 = obs_table.numeric_column("z1")?;
            let z2 = obs_table.numeric_column("z2")?;
            let observations: Vec<(f64, f64)> = z1.into_iter().zip(z2).collect();

            let samples_table = CsvTable::read(&samples)?;
            let loc = samples_table.numeric_column("loc")?;
            let y1 = samples_table.numeric_column("y1")?;
            let y2 = samples_table.numeric_column("y2")?;
            let mut grouped: Vec<Vec<(f64, f64)>> = vec![Vec::new(); observations.len()];
            for i in 0..loc.len() {
                let idx = loc[i] as usize;
                if idx >= grouped.len() {
                    return Err(DckError::Config(format!(
                        "sample row {} references location {idx} of {}",
                        i + 1,
                        grouped.len()
                    )));
                }
                grouped[idx].push((y1[i], y2[i]));
            }
            let es = metrics::energy_score(&grouped, &observations)?;
            let vs = metrics::variogram_score(&grouped, &observations, beta)?;
            println!("{}", serde_json::json!({"es": es, "vs": vs}));
            Ok(())
        }

        Command::Pit {
            model,
            data,
            value_col,
            out,
            common,
        } => {
            let bundle = load_bundle(&model)?;
            if bundle.p() != 1 {
                return Err(DckError::Config(
                    "pit applies to univariate models".into(),
                ));
            }
            let table = CsvTable::read(&data)?;
            let (_, cdfs, _) = bundle_cdfs_from_table(&bundle, &table, None)?;
            let observations = table.numeric_column(&value_col)?;
            let values = metrics::pit(&cdfs, &observations)?;
            let rows: Vec<Vec<String>> = values.iter().map(|u| vec![fmt_f64(*u)]).collect();
            csvio::write_records(
                &out,
                &["u"],
                &rows,
                common.provenance(&bundle.meta.config_digest).as_ref(),
            )?;
            eprintln!("wrote {} ({} rows)", out.display(), rows.len());
            Ok(())
        }

        Command::BaselineKrige {
            train,
            targets,
            family,
            range,
            variance,
            smoothness,
            nugget,
            estimate,
            trend,
            out,
            common,
        } => {
            let train_data = csvio::read_uni_dataset(&train, "z")?;
            let target_table = CsvTable::read(&targets)?;
            let target_locs = read_locations(&target_table)?;
            let spec = match family.as_str() {
                "exponential" => dck_core::simgen::CovarianceSpec::Exponential { range, variance },
                "matern" => dck_core::simgen::CovarianceSpec::Matern {
                    range,
                    smoothness,
                    variance,
                },
                other => {
                    return Err(DckError::Config(format!(
                        "unknown family '{other}' (expected exponential or matern)"
                    )))
                }
            };
            let trend = match trend.as_str() {
                "zero" => TrendMode::Zero,
                "constant" => TrendMode::Constant,
                other => return Err(DckError::Config(format!("unknown trend '{other}'"))),
            };
            let stack = ObsStack::univariate(train_data.locations, train_data.values);
            let model = baseline::fit(
                stack,
                spec,
                nugget,
                trend,
                estimate.then(EstimateConfig::default),
            )?;
            let preds = model.predict(&target_locs, 1)?;
            let rows: Vec<Vec<String>> = target_locs
                .iter()
                .zip(&preds)
                .map(|(l, p)| {
                    vec![
                        fmt_f64(l.x),
                        fmt_f64(l.y),
                        fmt_f64(p.mean),
                        fmt_f64(p.sd),
                        fmt_f64(p.mean - Z_975 * p.sd),
                        fmt_f64(p.mean + Z_975 * p.sd),
                    ]
                })
                .collect();
            csvio::write_records(
                &out,
                &["x", "y", "mean", "sd", "lo", "hi"],
                &rows,
                common.provenance("baseline-krige").as_ref(),
            )?;
            eprintln!("wrote {} ({} rows)", out.display(), rows.len());
            Ok(())
        }

        Command::Run {
            config,
            out,
            seed,
            no_provenance,
        } => {
            let mut run_config = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                run_config.seed = seed;
            }
            let summary = run_pipeline(&run_config, &out, !no_provenance)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }

        Command::Replicate {
            config,
            replicates,
            out,
            seed,
            no_provenance,
        } => {
            let mut run_config = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                run_config.seed = seed;
            }
            let output = replicate_scenario(&run_config, replicates)?;
            std::fs::create_dir_all(&out)?;
            let prov = (!no_provenance).then(|| Provenance {
                config_digest: run_config.digest(),
                seed: run_config.seed,
            });

            let mut rows = Vec::new();
            for (method, table) in [("dck", &output.dck), ("ck", &output.ck)] {
                for row in &table.rows {
                    rows.push(vec![
                        method.to_string(),
                        row.replicate.to_string(),
                        fmt_f64(row.mae),
                        fmt_f64(row.picp),
                        fmt_f64(row.al),
                        fmt_f64(row.seconds),
                    ]);
                }
            }
            csvio::write_records(
                &out.join("replicates.csv"),
                &["method", "replicate", "mae", "picp", "al", "seconds"],
                &rows,
                prov.as_ref(),
            )?;

            let dck_agg = output.dck.aggregate();
            let ck_agg = output.ck.aggregate();
            let summary = serde_json::json!({
                "config_digest": run_config.digest(),
                "seed": run_config.seed,
                "scenario": run_config.scenario.name,
                "replicates": output.dck.rows.len(),
                "failures": output.failures.len(),
                "dck": dck_agg,
                "ck": ck_agg,
            });
            std::fs::write(
                out.join("summary.json"),
                serde_json::to_string_pretty(&summary)? + "\n",
            )?;
            if !output.failures.is_empty() {
                eprintln!(
                    "warning: {} replicate(s) failed and were excluded",
                    output.failures.len()
                );
                for (r, msg) in &output.failures {
                    eprintln!("  replicate {r}: {msg}");
                }
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }

        Command::Ingest {
            z1,
            z2,
            hull_sample,
            out_dir,
            common,
        } => {
            let (mut data, report) = ingest(&z1, &z2)?;
            eprintln!(
                "ingested N1 = {} (dropped {} NaN rows), N2 = {} (dropped {})",
                report.n1, report.dropped_nan_z1, report.n2, report.dropped_nan_z2
            );
            if let Some(target) = hull_sample {
                let mut rng = SeedPolicy::new(common.seed).stream(stream::SAMPLING);
                data = hull_subsample(&data, target, &mut rng)?;
                eprintln!("hull subsample kept {} dense sites", data.set2.len());
            }
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                let prov = common.provenance("ingest");
                csvio::write_uni_dataset(&dir.join("z1.csv"), &data.set1, "z1", prov.as_ref())?;
                csvio::write_uni_dataset(&dir.join("z2.csv"), &data.set2, "z2", prov.as_ref())?;
                eprintln!("wrote validated copies under {}", dir.display());
            }
            Ok(())
        }
    }
}

/// RFC 3339 UTC timestamp from the system clock, no external crate needed.
fn chrono_free_timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    // Days-to-date conversion (proleptic Gregorian, valid well past 2100).
    let days = secs / 86_400;
    let rem = secs % 86_400;
    let (mut year, mut days_left) = (1970u64, days);
    loop {
        let leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
        let len = if leap { 366 } else { 365 };
        if days_left < len {
            break;
        }
        days_left -= len;
        year += 1;
    }
    let leap = year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
    let month_lengths = [
        31,
        if leap { 29 } else { 28 },
        31,
        30,
        31,
        30,
        31,
        31,
        30,
        31,
        30,
        31,
    ];
    let mut month = 0;
    while days_left >= month_lengths[month] {
        days_left -= month_lengths[month];
        month += 1;
    }
    format!(
        "{year:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
        month + 1,
        days_left + 1,
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}
