//! Hamiltonians loaded from plain-text sample files.
//!
//! File layout (comma-separated, `#` lines are comments):
//!
//! ```text
//! N, num_samples, t_start, t_end
//! re(H_00), im(H_00), re(H_01), im(H_01), ...   # sample at t_start
//! ...                                            # num_samples rows total
//! ```
//!
//! Each row holds one N x N matrix as `2 N^2` real/imaginary pairs in
//! row-major order, sampled on a uniform grid from `t_start` to `t_end`.
//! Every sample is validated for Hermiticity at load time. Between samples
//! the model interpolates linearly; outside the sampled range it clamps to
//! the nearest sample.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_residual, CMat, C64};
use crate::models::HamiltonianModel;

/// Hamiltonian defined by uniformly sampled matrices with linear
/// interpolation in time.
#[derive(Debug, Clone)]
pub struct SampledModel {
    n: usize,
    t_start: f64,
    t_end: f64,
    samples: Vec<CMat>,
}

impl SampledModel {
    pub fn new(t_start: f64, t_end: f64, samples: Vec<CMat>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::ConfigInvalid {
                field: "samples".into(),
                reason: format!("need at least 2 samples, got {}", samples.len()),
            });
        }
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::ConfigInvalid {
                field: "t_range".into(),
                reason: format!("need finite t_start < t_end, got [{t_start}, {t_end}]"),
            });
        }
        let n = samples[0].nrows();
        let dt = (t_end - t_start) / (samples.len() - 1) as f64;
        for (k, s) in samples.iter().enumerate() {
            if s.nrows() != n || s.ncols() != n {
                return Err(Error::ConfigInvalid {
                    field: "samples".into(),
                    reason: format!("sample {k} is not {n}x{n}"),
                });
            }
            let scale = s.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
            let residual = hermiticity_residual(s);
            if residual > 1e-8 * scale {
                return Err(Error::NonHermitianInput { t: t_start + k as f64 * dt, residual });
            }
        }
        Ok(SampledModel { n, t_start, t_end, samples })
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }
}

impl HamiltonianModel for SampledModel {
    fn dimension(&self) -> usize {
        self.n
    }

    fn hamiltonian(&self, t: f64) -> CMat {
        let last = self.samples.len() - 1;
        let dt = (self.t_end - self.t_start) / last as f64;
        let x = (t - self.t_start) / dt;
        if x <= 0.0 {
            return self.samples[0].clone();
        }
        if x >= last as f64 {
            return self.samples[last].clone();
        }
        let k = x.floor() as usize;
        let frac = x - k as f64;
        &self.samples[k] * C64::new(1.0 - frac, 0.0) + &self.samples[k + 1] * C64::new(frac, 0.0)
    }

    fn exact_eigensystem(&self, _t: f64) -> Option<(nalgebra::DVector<f64>, CMat)> {
        None
    }

    fn exact_propagator(&self, _t: f64) -> Option<CMat> {
        None
    }
}

fn parse_field(raw: &str, line: usize, column: usize) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|e| Error::ParseError {
        line,
        column,
        reason: format!("expected a number, got `{}` ({e})", raw.trim()),
    })
}

/// Load a [`SampledModel`] from the plain-text sample format.
pub fn load_matrix_model(path: &Path) -> Result<SampledModel> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });

    let (header_line, header) = rows.next().ok_or(Error::ParseError {
        line: 1,
        column: 1,
        reason: "empty file".into(),
    })?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 4 {
        return Err(Error::ParseError {
            line: header_line,
            column: fields.len(),
            reason: format!("header needs 4 fields (N, num_samples, t_start, t_end), got {}", fields.len()),
        });
    }
    let n = parse_field(fields[0], header_line, 1)? as usize;
    let count = parse_field(fields[1], header_line, 2)? as usize;
    let t_start = parse_field(fields[2], header_line, 3)?;
    let t_end = parse_field(fields[3], header_line, 4)?;
    if n == 0 {
        return Err(Error::ParseError {
            line: header_line,
            column: 1,
            reason: "matrix dimension must be positive".into(),
        });
    }

    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let (line_no, line) = rows.next().ok_or(Error::ParseError {
            line: header_line,
            column: 2,
            reason: format!("header promises {count} samples but the file ends early"),
        })?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 * n * n {
            return Err(Error::ParseError {
                line: line_no,
                column: fields.len(),
                reason: format!("expected {} fields for a {n}x{n} sample, got {}", 2 * n * n, fields.len()),
            });
        }
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let base = 2 * (i * n + j);
                let re = parse_field(fields[base], line_no, base + 1)?;
                let im = parse_field(fields[base + 1], line_no, base + 2)?;
                m[(i, j)] = C64::new(re, im);
            }
        }
        samples.push(m);
    }
    SampledModel::new(t_start, t_end, samples)
}
