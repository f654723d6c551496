//! Multi-resolution compactly supported radial-basis embedding of planar
//! coordinates. Each level places knots on a regular grid over the (slightly
//! expanded) bounding box of the training locations; basis values are Wendland
//! kernels of the scaled distance to each knot. Covariates pass through
//! unchanged, appended after the basis block.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::DckError;
use crate::types::Location;
use crate::Result;

/// Wendland kernel w(d) = (1-d)^6 (35 d^2 + 18 d + 3) / 3 on [0, 1], zero
/// beyond.
pub fn wendland(d: f64) -> f64 {
    debug_assert!(d >= 0.0);
    if d > 1.0 {
        return 0.0;
    }
    let one_minus = 1.0 - d;
    let p6 = one_minus.powi(6);
    p6 * (35.0 * d * d + 18.0 * d + 3.0) / 3.0
}

/// One resolution level: a g x g knot grid with bandwidth eta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelConfig {
    pub g: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub levels: Vec<LevelConfig>,
    /// Expanded bounding box [xmin, ymin, xmax, ymax].
    pub bbox: [f64; 4],
    pub overlap: f64,
}

impl EmbeddingConfig {
    /// Number of basis functions across all levels.
    pub fn num_basis(&self) -> usize {
        self.levels.iter().map(|l| l.g * l.g).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(DckError::invalid("embedding needs at least one level"));
        }
        if self.levels.windows(2).any(|w| w[1].g <= w[0].g) {
            return Err(DckError::invalid(
                "level grids must be strictly increasing",
            ));
        }
        if self.levels.iter().any(|l| l.g < 3 || l.g % 2 == 0) {
            return Err(DckError::invalid("level grids must be odd and >= 3"));
        }
        if self.levels.iter().any(|l| l.eta <= 0.0) {
            return Err(DckError::invalid("bandwidths must be positive"));
        }
        let [xmin, ymin, xmax, ymax] = self.bbox;
        if !(xmax > xmin && ymax > ymin) {
            return Err(DckError::invalid("degenerate bounding box"));
        }
        Ok(())
    }

    /// Basis values followed by the covariates, level-major and knot row-major
    /// within a level.
    pub fn embed(&self, location: &Location, covariates: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_basis() + covariates.len());
        let [xmin, ymin, xmax, ymax] = self.bbox;
        for level in &self.levels {
            let gx = (xmax - xmin) / (level.g - 1) as f64;
            let gy = (ymax - ymin) / (level.g - 1) as f64;
            for iy in 0..level.g {
                let uy = ymin + iy as f64 * gy;
                for ix in 0..level.g {
                    let ux = xmin + ix as f64 * gx;
                    let dx = location.x - ux;
                    let dy = location.y - uy;
                    let d = (dx * dx + dy * dy).sqrt() / level.eta;
                    out.push(wendland(d));
                }
            }
        }
        out.extend_from_slice(covariates);
        out
    }

    /// Feature matrix for a batch of locations (optional covariate rows).
    pub fn embed_batch(
        &self,
        locations: &[Location],
        covariates: Option<&[Vec<f64>]>,
    ) -> Result<Array2<f64>> {
        let cov_width = match covariates {
            Some(rows) => {
                if rows.len() != locations.len() {
                    return Err(DckError::shape("covariate rows != locations"));
                }
                rows.first().map_or(0, |r| r.len())
            }
            None => 0,
        };
        let width = self.num_basis() + cov_width;
        let mut out = Array2::zeros((locations.len(), width));
        for (i, loc) in locations.iter().enumerate() {
            let row = self.embed(loc, covariates.map_or(&[][..], |rows| &rows[i]));
            for (j, v) in row.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        Ok(out)
    }
}

/// Builds the multi-resolution layout from training locations: bounding box
/// expanded by a 5% margin per side, grids refined as g -> growth*(g-1)+1, and
/// per-level bandwidth eta = overlap * knot spacing (largest box dimension).
pub fn build_config(
    locations: &[Location],
    levels: usize,
    base_grid: usize,
    growth: usize,
    overlap: f64,
) -> Result<EmbeddingConfig> {
    if locations.len() < 2 {
        return Err(DckError::invalid("need at least 2 locations"));
    }
    if levels == 0 || growth < 2 || overlap <= 0.0 {
        return Err(DckError::invalid(
            "levels >= 1, growth >= 2 and overlap > 0 required",
        ));
    }
    if base_grid < 3 {
        return Err(DckError::invalid("base grid must be at least 3"));
    }
    let base_grid = if base_grid % 2 == 0 {
        base_grid + 1
    } else {
        base_grid
    };

    let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
    let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for l in locations {
        xmin = xmin.min(l.x);
        xmax = xmax.max(l.x);
        ymin = ymin.min(l.y);
        ymax = ymax.max(l.y);
    }
    let wx = xmax - xmin;
    let wy = ymax - ymin;
    if wx <= 0.0 || wy <= 0.0 {
        return Err(DckError::invalid("degenerate (zero-area) bounding box"));
    }
    let bbox = [
        xmin - 0.05 * wx,
        ymin - 0.05 * wy,
        xmax + 0.05 * wx,
        ymax + 0.05 * wy,
    ];
    let max_width = (bbox[2] - bbox[0]).max(bbox[3] - bbox[1]);

    let mut level_configs = Vec::with_capacity(levels);
    let mut g = base_grid;
    for _ in 0..levels {
        let spacing = max_width / (g - 1) as f64;
        level_configs.push(LevelConfig {
            g,
            eta: overlap * spacing,
        });
        g = growth * (g - 1) + 1;
    }
    let config = EmbeddingConfig {
        levels: level_configs,
        bbox,
        overlap,
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_corners() -> Vec<Location> {
        vec![
            Location { x: 0.0, y: 0.0 },
            Location { x: 1.0, y: 0.0 },
            Location { x: 0.0, y: 1.0 },
            Location { x: 1.0, y: 1.0 },
        ]
    }

    #[test]
    fn wendland_reference_values() {
        assert_eq!(wendland(0.0), 1.0);
        assert_eq!(wendland(1.0), 0.0);
        assert_eq!(wendland(1.7), 0.0);
        assert!((wendland(0.5) - 0.10807291666666666).abs() < 1e-15);
    }

    #[test]
    fn default_layout_has_395_basis_functions() {
        let config = build_config(&unit_square_corners(), 3, 5, 2, 2.5).unwrap();
        let gs: Vec<usize> = config.levels.iter().map(|l| l.g).collect();
        assert_eq!(gs, vec![5, 9, 17]);
        assert_eq!(config.num_basis(), 395);
    }

    #[test]
    fn level_one_spacing_on_unit_square() {
        let config = build_config(&unit_square_corners(), 1, 5, 2, 2.5).unwrap();
        // 5% margin per side -> width 1.1; spacing 1.1/4 = 0.275.
        assert!((config.levels[0].eta - 2.5 * 0.275).abs() < 1e-12);
        assert!((config.levels[0].eta - 0.6875).abs() < 1e-12);
    }

    #[test]
    fn tiny_grids_are_rejected() {
        assert!(build_config(&unit_square_corners(), 1, 2, 2, 2.5).is_err());
        // Even grids round up to odd.
        let c = build_config(&unit_square_corners(), 1, 4, 2, 2.5).unwrap();
        assert_eq!(c.levels[0].g, 5);
    }

    #[test]
    fn knot_hit_gives_unit_basis() {
        let config = build_config(&unit_square_corners(), 2, 5, 2, 2.5).unwrap();
        let [xmin, ymin, ..] = config.bbox;
        let knot = Location { x: xmin, y: ymin };
        let features = config.embed(&knot, &[]);
        assert_eq!(features[0], 1.0);
        assert!(features.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn far_point_contributes_zero_level_block() {
        let config = build_config(&unit_square_corners(), 1, 5, 2, 0.1).unwrap();
        // Tiny overlap: a point between knots but far in kernel units.
        let probe = Location { x: 100.0, y: 100.0 };
        let features = config.embed(&probe, &[]);
        assert!(features.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariates_append_after_basis() {
        let config = build_config(&unit_square_corners(), 1, 3, 2, 2.5).unwrap();
        let features = config.embed(&Location { x: 0.5, y: 0.5 }, &[7.0, -3.0]);
        assert_eq!(features.len(), 9 + 2);
        assert_eq!(&features[9..], &[7.0, -3.0]);
    }

    #[test]
    fn serialization_roundtrip_reproduces_vectors() {
        let config = build_config(&unit_square_corners(), 3, 5, 2, 2.5).unwrap();
        let json = serde_json::to_string(&config).unwrap();
        let back: EmbeddingConfig = serde_json::from_str(&json).unwrap();
        let probe = Location { x: 0.31, y: 0.77 };
        assert_eq!(config.embed(&probe, &[]), back.embed(&probe, &[]));
    }

    #[test]
    fn basis_is_empirically_lipschitz() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let config = build_config(&unit_square_corners(), 3, 5, 2, 2.5).unwrap();
        let eta_min = config
            .levels
            .iter()
            .map(|l| l.eta)
            .fold(f64::INFINITY, f64::min);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(12);
        for _ in 0..200 {
            let p = Location {
                x: rng.random_range(0.0..1.0),
                y: rng.random_range(0.0..1.0),
            };
            let ds = 1e-6;
            let q = Location {
                x: p.x + ds,
                y: p.y,
            };
            let fp = config.embed(&p, &[]);
            let fq = config.embed(&q, &[]);
            for (a, b) in fp.iter().zip(&fq) {
                assert!((a - b).abs() <= 3.5 * ds / eta_min);
            }
        }
    }
}
