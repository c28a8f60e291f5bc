//! Labelled point sets and their CSV form.
//!
//! The CSV layout is one row per point with columns `x_1..x_d, y` and a
//! mandatory header row. Values are written in Rust's shortest round-trip
//! representation, so a write/read cycle is lossless.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// `n` points in `R^d` stored row-major, with one real label per point.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major coordinates.
    pub fn new(dim: usize, coords: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        if coords.len() != dim * labels.len() {
            return Err(Error::MismatchedLengths {
                expected: dim * labels.len(),
                got: coords.len(),
            });
        }
        Ok(Self {
            dim,
            coords,
            labels,
        })
    }

    pub fn from_points(points: &[Vec<f64>], labels: &[f64]) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if points.len() != labels.len() {
            return Err(Error::MismatchedLengths {
                expected: points.len(),
                got: labels.len(),
            });
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords, labels.to_vec())
    }

    /// One-dimensional convenience constructor.
    pub fn from_line(xs: &[f64], labels: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec(), labels.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Copy with the labels replaced.
    pub fn with_labels(&self, labels: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, self.coords.clone(), labels)
    }

    /// Copy with point `index` moved to `replacement` (label kept).
    pub fn with_point_replaced(&self, index: usize, replacement: &[f64]) -> Result<Self> {
        if replacement.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: replacement.len(),
            });
        }
        let mut coords = self.coords.clone();
        coords[index * self.dim..(index + 1) * self.dim].copy_from_slice(replacement);
        Self::new(self.dim, coords, self.labels.clone())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (p, y) in self.points().zip(&self.labels) {
            let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            row.push(y.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 2 || header.get(header.len() - 1) != Some("y") {
            return Err(Error::Parse {
                line: 1,
                message: "header must be x_1,..,x_d,y".into(),
            });
        }
        for (j, name) in header.iter().take(header.len() - 1).enumerate() {
            if name != format!("x_{}", j + 1) {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("expected column x_{}, found {name:?}", j + 1),
                });
            }
        }
        let dim = header.len() - 1;
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        for (row_idx, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = row_idx + 2;
            if rec.len() != dim + 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", dim + 1, rec.len()),
                });
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("not a number: {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line,
                        message: format!("non-finite value {field:?}"),
                    });
                }
                if j < dim {
                    coords.push(v);
                } else {
                    labels.push(v);
                }
            }
        }
        Self::new(dim, coords, labels)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}
