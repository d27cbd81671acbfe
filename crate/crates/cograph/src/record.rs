//! Line-delimited JSON sample records.
//!
//! One [`SampleRecord`] per line. Records without edge lists get their graphs
//! built by the cosine top-half rule on load; records with edges keep them
//! after validation.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cograph_core::{build_graph, Graph, PairedSample, Tensor};
use serde::{Deserialize, Serialize};

pub const MIN_IMAGES: usize = 3;
pub const MAX_IMAGES: usize = 8;
pub const MIN_TEXTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    pub label: usize,
    pub image_features: Vec<Vec<f64>>,
    pub text_features: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_edges: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}, record `{id}`, field `{field}`: {message}")]
    Invalid {
        line: usize,
        id: String,
        field: &'static str,
        message: String,
    },
}

/// A record-level problem, before a line number is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

fn field_err(field: &'static str, message: impl Into<String>) -> FieldError {
    FieldError {
        field,
        message: message.into(),
    }
}

fn check_vectors(field: &'static str, rows: &[Vec<f64>]) -> Result<(), FieldError> {
    let dim = rows.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(field_err(field, "feature vectors must be nonempty"));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(field_err(
                field,
                format!("vector {i} has length {}, expected {dim}", r.len()),
            ));
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(field_err(field, format!("vector {i} has a non-finite value at {j}")));
        }
    }
    Ok(())
}

fn to_tensor(rows: &[Vec<f64>]) -> Tensor {
    let cols = rows[0].len();
    Tensor::new(vec![rows.len(), cols], rows.concat()).expect("rows checked rectangular")
}

fn rows_of(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|i| t.row(i).to_vec()).collect()
}

impl SampleRecord {
    /// Checks the dataset invariants: label, node-count bounds and
    /// rectangular, finite feature matrices.
    pub fn validate(&self) -> Result<(), FieldError> {
        if self.label > 1 {
            return Err(field_err("label", format!("label {} is not 0 or 1", self.label)));
        }
        let ni = self.image_features.len();
        if ni < MIN_IMAGES {
            return Err(field_err(
                "image_features",
                format!("image count below minimum {MIN_IMAGES} (got {ni})"),
            ));
        }
        if ni > MAX_IMAGES {
            return Err(field_err(
                "image_features",
                format!("image count above maximum {MAX_IMAGES} (got {ni})"),
            ));
        }
        let nt = self.text_features.len();
        if nt < MIN_TEXTS {
            return Err(field_err(
                "text_features",
                format!("text count below minimum {MIN_TEXTS} (got {nt})"),
            ));
        }
        check_vectors("image_features", &self.image_features)?;
        check_vectors("text_features", &self.text_features)?;
        Ok(())
    }

    /// Validates the record and builds its graphs.
    pub fn to_sample(&self) -> Result<PairedSample, FieldError> {
        self.validate()?;
        let graph = |field: &'static str, rows: &[Vec<f64>], edges: &Option<Vec<(usize, usize)>>| {
            let x = to_tensor(rows);
            match edges {
                Some(e) => Graph::new(x, e.clone()),
                None => build_graph(x),
            }
            .map_err(|e| field_err(field, e.to_string()))
        };
        let image = graph("image_edges", &self.image_features, &self.image_edges)?;
        let text = graph("text_edges", &self.text_features, &self.text_edges)?;
        PairedSample::new(self.id.clone(), image, text, self.label)
            .map_err(|e| field_err("label", e.to_string()))
    }

    /// Record for a sample, carrying its edge lists when `with_edges`.
    pub fn from_sample(s: &PairedSample, with_edges: bool) -> Self {
        SampleRecord {
            id: s.id.clone(),
            label: s.label(),
            image_features: rows_of(s.image_graph.node_features()),
            text_features: rows_of(s.text_graph.node_features()),
            image_edges: with_edges.then(|| s.image_graph.edges().to_vec()),
            text_edges: with_edges.then(|| s.text_graph.edges().to_vec()),
        }
    }

    /// Fills in missing edge lists by the similarity rule.
    pub fn with_built_edges(mut self) -> Result<Self, FieldError> {
        let s = self.to_sample()?;
        self.image_edges = Some(s.image_graph.edges().to_vec());
        self.text_edges = Some(s.text_graph.edges().to_vec());
        Ok(self)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses records, one per nonblank line. Each item carries its 1-based
/// line number; parsing continues past bad lines so callers can report
/// every problem.
pub fn parse_records<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, Result<SampleRecord, DataError>)> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                return Some((
                    line_no,
                    Err(DataError::Malformed {
                        line: line_no,
                        message: e.to_string(),
                    }),
                ))
            }
        };
        if line.trim().is_empty() {
            return None;
        }
        Some((
            line_no,
            serde_json::from_str(&line).map_err(|e| DataError::Malformed {
                line: line_no,
                message: e.to_string(),
            }),
        ))
    })
}

fn invalid(line: usize, rec: &SampleRecord, e: FieldError) -> DataError {
    DataError::Invalid {
        line,
        id: rec.id.clone(),
        field: e.field,
        message: e.message,
    }
}

pub fn read_records(path: &Path) -> Result<Vec<(usize, SampleRecord)>, DataError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_records(BufReader::new(file))
        .map(|(line, r)| r.map(|rec| (line, rec)))
        .collect()
}

/// Loads a dataset file, stopping at the first bad line.
pub fn load_dataset(path: &Path) -> Result<Vec<PairedSample>, DataError> {
    read_records(path)?
        .into_iter()
        .map(|(line, rec)| rec.to_sample().map_err(|e| invalid(line, &rec, e)))
        .collect()
}

pub fn write_records<'a, I>(path: &Path, records: I) -> Result<(), DataError>
where
    I: IntoIterator<Item = &'a SampleRecord>,
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut w, rec).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes samples with their edge lists, so a reload reproduces the graphs
/// exactly.
pub fn save_dataset(path: &Path, samples: &[PairedSample]) -> Result<(), DataError> {
    let records: Vec<SampleRecord> = samples.iter().map(|s| SampleRecord::from_sample(s, true)).collect();
    write_records(path, &records)
}
