//! Uniform integration grid with sample-point bookkeeping shared by all
//! engines.

use crate::error::{Error, Result};

/// Uniform time grid: `n_steps` steps of size `dt` starting at `t_start`,
/// recording every `sample_every`-th step (step 0 is always recorded).
///
/// `n_steps` is the nearest integer to `(t_end - t_start)/dt`; the final
/// instant is recorded only when `sample_every` divides `n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    dt: f64,
    sample_every: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64, sample_every: usize) -> Result<Self> {
        if t_end.is_nan() || t_start.is_nan() || t_end <= t_start {
            return Err(Error::InvalidGrid(format!(
                "t_end ({t_end}) must exceed t_start ({t_start})"
            )));
        }
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::InvalidGrid(format!("dt must be > 0, got {dt}")));
        }
        if sample_every == 0 {
            return Err(Error::InvalidGrid("sample_every must be >= 1".into()));
        }
        let ratio = (t_end - t_start) / dt;
        if ratio < 1.0 - 1e-9 {
            return Err(Error::InvalidGrid(format!(
                "span/dt = {ratio:.3} must be >= 1"
            )));
        }
        Ok(TimeGrid {
            t_start,
            t_end,
            dt,
            sample_every,
        })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample_every(&self) -> usize {
        self.sample_every
    }

    pub fn span(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round().max(1.0) as usize
    }

    pub fn time_at(&self, step: usize) -> f64 {
        self.t_start + step as f64 * self.dt
    }

    pub fn is_sample_step(&self, step: usize) -> bool {
        step.is_multiple_of(self.sample_every)
    }

    pub fn n_samples(&self) -> usize {
        self.n_steps() / self.sample_every + 1
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|k| self.time_at(k * self.sample_every))
            .collect()
    }

    /// Index into the sample arrays closest to time `t`.
    pub fn nearest_sample_index(&self, t: f64) -> usize {
        let sample_dt = self.dt * self.sample_every as f64;
        let idx = ((t - self.t_start) / sample_dt).round();
        (idx.max(0.0) as usize).min(self.n_samples() - 1)
    }
}
