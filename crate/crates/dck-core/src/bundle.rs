//! The serializable model bundle: embedding layout, network parameters, class
//! partition, bandwidth and run metadata. JSON only, full binary64 precision
//! (shortest round-trip decimals), invariants re-checked on load.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cdf::PredictiveCdf;
use crate::classifier::{predict_proba, NetworkParams};
use crate::discretize::{BiClass, ClassPartition, UniClass};
use crate::embed::EmbeddingConfig;
use crate::error::DckError;
use crate::types::Location;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BundleMeta {
    pub seed: u64,
    pub config_digest: String,
    /// Wall-clock creation time; omitted by the deterministic pipeline so
    /// that identical runs produce byte-identical bundles.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub embedding: EmbeddingConfig,
    pub network: NetworkParams,
    pub partition: ClassPartition,
    pub bandwidth_h: f64,
    pub meta: BundleMeta,
}

/// On-disk shape: fixed top-level keys, partition as a bare class array.
#[derive(Serialize, Deserialize)]
struct BundleRepr {
    embedding: EmbeddingConfig,
    network: NetworkParams,
    partition: serde_json::Value,
    bandwidth_h: f64,
    p: usize,
    meta: BundleMeta,
}

impl ModelBundle {
    /// Response dimension (1 or 2).
    pub fn p(&self) -> usize {
        self.partition.response_dim()
    }

    /// Covariate width implied by the network input and the embedding.
    pub fn covariate_width(&self) -> usize {
        self.network
            .input_width()
            .saturating_sub(self.embedding.num_basis())
    }

    pub fn validate(&self) -> Result<()> {
        self.embedding.validate()?;
        self.network.validate()?;
        self.partition.validate()?;
        if self.bandwidth_h <= 0.0 || !self.bandwidth_h.is_finite() {
            return Err(DckError::invalid(format!(
                "bandwidth_h = {} must be positive",
                self.bandwidth_h
            )));
        }
        if self.network.output_width() != self.partition.len() {
            return Err(DckError::invalid(format!(
                "network output width {} != partition class count {}",
                self.network.output_width(),
                self.partition.len()
            )));
        }
        if self.network.input_width() < self.embedding.num_basis() {
            return Err(DckError::invalid(format!(
                "network input width {} below the {} basis functions",
                self.network.input_width(),
                self.embedding.num_basis()
            )));
        }
        Ok(())
    }

    /// Predictive distribution at each location. Covariate rows are required
    /// exactly when the trained network expects them.
    pub fn predictive_cdfs(
        &self,
        locations: &[Location],
        covariates: Option<&[Vec<f64>]>,
    ) -> Result<Vec<PredictiveCdf>> {
        let features = self.embedding.embed_batch(locations, covariates)?;
        if features.ncols() != self.network.input_width() {
            return Err(DckError::shape(format!(
                "model expects {} covariates per row, got {}",
                self.covariate_width(),
                features.ncols() - self.embedding.num_basis()
            )));
        }
        let probs = predict_proba(&self.network, features.view())?;
        let (nodes1, nodes2) = self.partition.nodes();
        probs
            .rows()
            .into_iter()
            .map(|row| {
                PredictiveCdf::new(
                    row.to_vec(),
                    nodes1.clone(),
                    nodes2.clone(),
                    self.bandwidth_h,
                )
            })
            .collect()
    }
}

/// Writes the bundle as pretty JSON. Refuses to overwrite unless `force`.
pub fn save_bundle(bundle: &ModelBundle, path: &Path, force: bool) -> Result<()> {
    bundle.validate()?;
    if path.exists() && !force {
        return Err(DckError::WouldOverwrite(path.display().to_string()));
    }
    let repr = BundleRepr {
        embedding: bundle.embedding.clone(),
        network: bundle.network.clone(),
        partition: match &bundle.partition {
            ClassPartition::Univariate { classes } => serde_json::to_value(classes)?,
            ClassPartition::Bivariate { classes } => serde_json::to_value(classes)?,
        },
        bandwidth_h: bundle.bandwidth_h,
        p: bundle.p(),
        meta: bundle.meta.clone(),
    };
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &repr)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Loads and re-validates a bundle; any invariant violation is an error.
pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let file = std::fs::File::open(path)?;
    let repr: BundleRepr = serde_json::from_reader(std::io::BufReader::new(file))?;
    let partition = match repr.p {
        1 => ClassPartition::Univariate {
            classes: serde_json::from_value::<Vec<UniClass>>(repr.partition)?,
        },
        2 => ClassPartition::Bivariate {
            classes: serde_json::from_value::<Vec<BiClass>>(repr.partition)?,
        },
        other => {
            return Err(DckError::invalid(format!(
                "response dimension p = {other} must be 1 or 2"
            )))
        }
    };
    let bundle = ModelBundle {
        embedding: repr.embedding,
        network: repr.network,
        partition,
        bandwidth_h: repr.bandwidth_h,
        meta: repr.meta,
    };
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::init_params;
    use crate::embed::build_config;
    use crate::rng::SeedPolicy;

    fn corners() -> Vec<Location> {
        vec![
            Location { x: 0.0, y: 0.0 },
            Location { x: 1.0, y: 0.0 },
            Location { x: 0.0, y: 1.0 },
            Location { x: 1.0, y: 1.0 },
        ]
    }

    fn sample_bundle(n_classes: usize) -> ModelBundle {
        let embedding = build_config(&corners(), 1, 3, 2, 2.5).unwrap();
        let network = init_params(embedding.num_basis(), &[6], n_classes, &SeedPolicy::new(5));
        let classes = (0..n_classes)
            .map(|j| UniClass {
                q_lo: if j == 0 { None } else { Some(j as f64 - 1.0) },
                q_hi: if j == n_classes - 1 {
                    None
                } else {
                    Some(j as f64)
                },
                node: j as f64 - 0.5 + 0.123456789012345,
                count: 10 + j,
            })
            .collect();
        ModelBundle {
            embedding,
            network,
            partition: ClassPartition::Univariate { classes },
            bandwidth_h: 0.4,
            meta: BundleMeta {
                seed: 42,
                config_digest: "deadbeef".into(),
                created: None,
            },
        }
    }

    #[test]
    fn save_load_roundtrip_is_identity() {
        let dir = std::env::temp_dir().join("dck-bundle-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.json");
        let _ = std::fs::remove_file(&path);

        let bundle = sample_bundle(4);
        save_bundle(&bundle, &path, false).unwrap();
        let back = load_bundle(&path).unwrap();
        assert_eq!(bundle, back);

        // Saving again without force must refuse.
        match save_bundle(&bundle, &path, false) {
            Err(DckError::WouldOverwrite(_)) => {}
            other => panic!("expected WouldOverwrite, got {other:?}"),
        }
        save_bundle(&bundle, &path, true).unwrap();
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn top_level_schema_keys() {
        let bundle = sample_bundle(132);
        let dir = std::env::temp_dir().join("dck-bundle-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("schema.json");
        let _ = std::fs::remove_file(&path);
        save_bundle(&bundle, &path, false).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let obj = value.as_object().unwrap();
        for key in ["embedding", "network", "partition", "bandwidth_h", "p", "meta"] {
            assert!(obj.contains_key(key), "missing key {key}");
        }
        assert_eq!(obj["partition"].as_array().unwrap().len(), 132);
        assert_eq!(obj["p"], 1);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn invalid_bundles_are_rejected_on_load() {
        let dir = std::env::temp_dir().join("dck-bundle-test");
        std::fs::create_dir_all(&dir).unwrap();

        // Negative bandwidth.
        let mut bundle = sample_bundle(3);
        bundle.bandwidth_h = -1.0;
        let path = dir.join("negative-h.json");
        let text = {
            // Bypass save_bundle's validation by hand-editing valid JSON.
            let mut good = sample_bundle(3);
            good.bandwidth_h = 0.4;
            let p = dir.join("tmp-good.json");
            let _ = std::fs::remove_file(&p);
            save_bundle(&good, &p, false).unwrap();
            let t = std::fs::read_to_string(&p).unwrap();
            std::fs::remove_file(&p).unwrap();
            t.replace("\"bandwidth_h\": 0.4", "\"bandwidth_h\": -1.0")
        };
        std::fs::write(&path, text).unwrap();
        assert!(load_bundle(&path).is_err());
        std::fs::remove_file(&path).unwrap();

        // Truncated file.
        let path = dir.join("truncated.json");
        std::fs::write(&path, "{\"embedding\": {").unwrap();
        assert!(load_bundle(&path).is_err());
        std::fs::remove_file(&path).unwrap();

        // Missing directory on save.
        let bad = Path::new("/nonexistent-dir-dck/bundle.json");
        assert!(save_bundle(&sample_bundle(3), bad, false).is_err());
    }

    #[test]
    fn output_width_mismatch_is_an_invariant_error() {
        let mut bundle = sample_bundle(4);
        // Drop one class: network now outputs 4 over 3 classes.
        if let ClassPartition::Univariate { classes } = &mut bundle.partition {
            classes.pop();
            classes.last_mut().unwrap().q_hi = None;
        }
        assert!(bundle.validate().is_err());
    }

    #[test]
    fn predictive_cdfs_rows_are_distributions() {
        let bundle = sample_bundle(5);
        let cdfs = bundle
            .predictive_cdfs(&[Location { x: 0.2, y: 0.8 }, Location { x: 0.9, y: 0.1 }], None)
            .unwrap();
        assert_eq!(cdfs.len(), 2);
        for c in &cdfs {
            let total: f64 = c.weights.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
