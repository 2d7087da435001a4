//! Raw `(X, Y)` samples and their CSV representation.
//!
//! CSV files carry a header row `x1,...,xd,y`; `d` is inferred as the number
//! of columns minus one.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// `n` input points in ℝᵈ (row-major) with scalar responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<f64>,
    d: usize,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Shape("dimension must be at least 1".into()));
        }
        if x.len() != y.len() * d {
            return Err(Error::Shape(format!(
                "{} coordinates do not match {} responses in dimension {}",
                x.len(),
                y.len(),
                d
            )));
        }
        for (row, (pt, yv)) in x.chunks_exact(d).zip(&y).enumerate() {
            if !yv.is_finite() || pt.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row });
            }
        }
        Ok(Self { x, y, d })
    }

    /// Build from a list of points; all points must share a dimension.
    pub fn from_points(points: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let d = points.first().map(Vec::len).unwrap_or(1);
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Shape("points have mixed dimensions".into()));
        }
        Self::new(points.concat(), y, d)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.d)
    }

    /// Mean over coordinates of the per-coordinate sample standard deviation.
    pub fn mean_coordinate_sd(&self) -> f64 {
        let n = self.n() as f64;
        if self.n() < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for c in 0..self.d {
            let mean = self.points().map(|p| p[c]).sum::<f64>() / n;
            let var = self.points().map(|p| (p[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            total += var.sqrt();
        }
        total / self.d as f64
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n() {
            for j in (i + 1)..self.n() {
                best = best.max(crate::sq_dist(self.point(i), self.point(j)));
            }
        }
        best.sqrt()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(Error::Parse {
                row: 0,
                msg: format!("expected at least 2 columns (x1,...,xd,y), found {}", headers.len()),
            });
        }
        let d = headers.len() - 1;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (idx, record) in rdr.records().enumerate() {
            // rows are numbered from 1, not counting the header
            let row = idx + 1;
            let record = record.map_err(|e| Error::Parse {
                row,
                msg: e.to_string(),
            })?;
            if record.len() != d + 1 {
                return Err(Error::Parse {
                    row,
                    msg: format!("expected {} columns, found {}", d + 1, record.len()),
                });
            }
            for (col, cell) in record.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row,
                    msg: format!("column '{}' is not numeric: '{}'", &headers[col], cell),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        msg: format!("column '{}' is not finite", &headers[col]),
                    });
                }
                if col < d {
                    x.push(v);
                } else {
                    y.push(v);
                }
            }
        }
        if y.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: y.len(),
            });
        }
        Self::new(x, y, d)
    }

    pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.d).map(|c| format!("x{c}")).collect();
        header.push("y".into());
        wtr.write_record(&header)?;
        for (pt, yv) in self.points().zip(&self.y) {
            let mut row: Vec<String> = pt.iter().map(|v| format_float(*v)).collect();
            row.push(format_float(*yv));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}
