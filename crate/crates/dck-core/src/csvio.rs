//! CSV conventions shared by every command: comma separation, mandatory
//! header row, '.' decimals, UTF-8, no quoting of numerics. Files may carry a
//! leading provenance comment (`# ...`) which readers skip.

use std::io::Write;
use std::path::Path;

use crate::error::DckError;
use crate::fusion::{FusedPoint, FusedSource, QuantileLine};
use crate::types::{Location, UniDataset};
use crate::Result;

/// Provenance stamp embedded as a comment line in emitted files.
#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub config_digest: String,
    pub seed: u64,
}

impl Provenance {
    pub fn comment_line(&self) -> String {
        format!(
            "# dck version={} config_digest={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.config_digest,
            self.seed
        )
    }
}

/// Shortest round-trip decimal form of a float.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        let mut s = v.to_string();
        if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
            s.push_str(".0");
        }
        s
    } else {
        v.to_string()
    }
}

/// Writes a table with a header row and optional provenance comment.
pub fn write_records(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
    provenance: Option<&Provenance>,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    if let Some(p) = provenance {
        writeln!(file, "{}", p.comment_line())?;
    }
    writeln!(file, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(DckError::shape(format!(
                "row width {} != header width {}",
                row.len(),
                header.len()
            )));
        }
        writeln!(file, "{}", row.join(","))?;
    }
    Ok(())
}

/// A parsed CSV table; comment lines were skipped.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| {
            DckError::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .has_headers(true)
            .from_reader(file);
        let header: Vec<String> = reader
            .headers()?
            .iter()
            .map(|h| h.to_string())
            .collect();
        if header.is_empty() {
            return Err(DckError::invalid(format!(
                "{}: no header row",
                path.display()
            )));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            rows.push(record.iter().map(|c| c.to_string()).collect());
        }
        Ok(CsvTable { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DckError::invalid(format!("missing column '{name}'")))
    }

    /// Numeric column; a bad cell reports its (1-based) data row number.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.get(idx)
                    .ok_or_else(|| DckError::invalid(format!("row {} too short", r + 1)))?
                    .parse::<f64>()
                    .map_err(|_| {
                        DckError::invalid(format!(
                            "non-numeric cell '{}' in column '{name}', row {}",
                            row[idx],
                            r + 1
                        ))
                    })
            })
            .collect()
    }
}

/// Writes a univariate dataset as `x,y,<value_col>[,x1..]`.
pub fn write_uni_dataset(
    path: &Path,
    data: &UniDataset,
    value_col: &str,
    provenance: Option<&Provenance>,
) -> Result<()> {
    let cov_width = data.covariates.as_ref().map_or(0, |c| c[0].len());
    let cov_names: Vec<String> = (1..=cov_width).map(|i| format!("x{i}")).collect();
    let mut header: Vec<&str> = vec!["x", "y", value_col];
    header.extend(cov_names.iter().map(|s| s.as_str()));
    let rows: Vec<Vec<String>> = (0..data.len())
        .map(|i| {
            let mut row = vec![
                fmt_f64(data.locations[i].x),
                fmt_f64(data.locations[i].y),
                fmt_f64(data.values[i]),
            ];
            row.extend(data.covariate_row(i).iter().map(|v| fmt_f64(*v)));
            row
        })
        .collect();
    write_records(path, &header, &rows, provenance)
}

/// Reads `x,y,<value_col>` with any `x1..xK` covariate columns present.
pub fn read_uni_dataset(path: &Path, value_col: &str) -> Result<UniDataset> {
    let table = CsvTable::read(path)?;
    let xs = table.numeric_column("x")?;
    let ys = table.numeric_column("y")?;
    let values = table.numeric_column(value_col)?;
    let cov_names: Vec<String> = (1..)
        .map(|i| format!("x{i}"))
        .take_while(|name| table.header.iter().any(|h| h == name))
        .collect();
    let covariates = if cov_names.is_empty() {
        None
    } else {
        let cols: Vec<Vec<f64>> = cov_names
            .iter()
            .map(|n| table.numeric_column(n))
            .collect::<Result<_>>()?;
        Some(
            (0..xs.len())
                .map(|r| cols.iter().map(|c| c[r]).collect())
                .collect(),
        )
    };
    let locations = xs
        .into_iter()
        .zip(ys)
        .map(|(x, y)| Location::new(x, y))
        .collect::<Result<Vec<_>>>()?;
    UniDataset::new(locations, values, covariates)
}

/// Writes fused points as `x,y,z1,z2,source,line`.
pub fn write_fused(path: &Path, points: &[FusedPoint], provenance: Option<&Provenance>) -> Result<()> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.location.x),
                fmt_f64(p.location.y),
                fmt_f64(p.z1),
                fmt_f64(p.z2),
                match p.source {
                    FusedSource::Projected => "projected".to_string(),
                    FusedSource::Augmented => "augmented".to_string(),
                },
                (p.line + 1).to_string(),
            ]
        })
        .collect();
    write_records(path, &["x", "y", "z1", "z2", "source", "line"], &rows, provenance)
}

/// Reads fused points written by [`write_fused`].
pub fn read_fused(path: &Path) -> Result<Vec<FusedPoint>> {
    let table = CsvTable::read(path)?;
    let xs = table.numeric_column("x")?;
    let ys = table.numeric_column("y")?;
    let z1 = table.numeric_column("z1")?;
    let z2 = table.numeric_column("z2")?;
    let src_idx = table.column_index("source")?;
    let line_idx = table.column_index("line")?;
    (0..xs.len())
        .map(|i| {
            let source = match table.rows[i][src_idx].as_str() {
                "projected" => FusedSource::Projected,
                "augmented" => FusedSource::Augmented,
                other => {
                    return Err(DckError::invalid(format!(
                        "unknown source '{other}' in row {}",
                        i + 1
                    )))
                }
            };
            let line: usize = table.rows[i][line_idx].parse().map_err(|_| {
                DckError::invalid(format!("bad line index in row {}", i + 1))
            })?;
            if line == 0 {
                return Err(DckError::invalid(format!(
                    "line indices are 1-based; found 0 in row {}",
                    i + 1
                )));
            }
            Ok(FusedPoint {
                z1: z1[i],
                z2: z2[i],
                location: Location::new(xs[i], ys[i])?,
                source,
                line: line - 1,
            })
        })
        .collect()
}

/// Writes quantile lines as `tau,a,b`.
pub fn write_lines(path: &Path, lines: &[QuantileLine], provenance: Option<&Provenance>) -> Result<()> {
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| vec![fmt_f64(l.tau), fmt_f64(l.intercept), fmt_f64(l.slope)])
        .collect();
    write_records(path, &["tau", "a", "b"], &rows, provenance)
}

/// Reads quantile lines written by [`write_lines`].
pub fn read_lines(path: &Path) -> Result<Vec<QuantileLine>> {
    let table = CsvTable::read(path)?;
    let tau = table.numeric_column("tau")?;
    let a = table.numeric_column("a")?;
    let b = table.numeric_column("b")?;
    Ok((0..tau.len())
        .map(|i| QuantileLine {
            tau: tau[i],
            intercept: a[i],
            slope: b[i],
        })
        .collect())
}
