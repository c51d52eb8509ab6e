use crate::error::{Error, Result};

/// Uniform time grid on `[0, t_end]` with `steps` intervals (`steps + 1` samples).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::ConfigInvalid {
                field: "grid.t_end".into(),
                reason: format!("must be finite and positive, got {t_end}"),
            });
        }
        if steps < 3 {
            return Err(Error::ConfigInvalid {
                field: "grid.steps".into(),
                reason: format!("need at least 3 steps, got {steps}"),
            });
        }
        Ok(TimeGrid { t_end, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of samples, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }

    pub fn at(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        if k == self.steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.at(k))
    }
}

/// Cumulative trapezoidal integral of `f` sampled on a uniform grid.
/// Output has the same length as the input; entry 0 is zero.
pub fn cumtrapz(samples: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in samples.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Complex-valued counterpart of [`cumtrapz`].
pub fn cumtrapz_c(samples: &[num_complex::Complex64], dt: f64) -> Vec<num_complex::Complex64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    out.push(acc);
    for w in samples.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out
}
