use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::StatePoint;

pub const CSV_HEADER: &str = "t,z,w,zp,wp";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: StatePoint,
    /// `(z'', w'')` at this sample, used for Hermite interpolation of `z'`, `w'`.
    pub accel: (f64, f64),
}

/// Samples on `[0, T]` with cubic Hermite interpolation between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    samples: Vec<Sample>,
    /// Largest local error estimate reported by the integrator (0 for fixed step).
    pub max_error_estimate: f64,
}

fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * h * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * h * d1
}

impl Trajectory {
    /// `samples` must be non-empty with strictly increasing `t`, starting at 0.
    pub fn new(samples: Vec<Sample>, max_error_estimate: f64) -> Self {
        assert!(!samples.is_empty(), "trajectory needs at least one sample");
        debug_assert!(samples.windows(2).all(|w| w[0].t < w[1].t));
        Trajectory {
            samples,
            max_error_estimate,
        }
    }

    /// Constant trajectory sampled uniformly on `n` points of `[0, period]`.
    pub fn constant(state: StatePoint, accel: (f64, f64), period: f64, n: usize) -> Self {
        let n = n.max(2);
        let samples = (0..n)
            .map(|k| Sample {
                t: if k == n - 1 {
                    period
                } else {
                    period * k as f64 / (n - 1) as f64
                },
                state,
                accel,
            })
            .collect();
        Trajectory::new(samples, 0.0)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    /// `‖state(T) − state(0)‖∞`.
    pub fn periodic_residual(&self) -> f64 {
        let a = self.first().state.to_array();
        let b = self.last().state.to_array();
        a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Hermite interpolation; `z, w` use `z', w'` as slopes and `z', w'` use
    /// the stored accelerations. `t` is clamped to the sampled range.
    pub fn eval(&self, t: f64) -> StatePoint {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].state;
        }
        if t >= s[s.len() - 1].t {
            return s[s.len() - 1].state;
        }
        let k = s.partition_point(|x| x.t <= t) - 1;
        let (a, b) = (&s[k], &s[k + 1]);
        if t == a.t {
            return a.state;
        }
        let h = |y0, y1, d0, d1| hermite(a.t, b.t, y0, y1, d0, d1, t);
        StatePoint {
            z: h(a.state.z, b.state.z, a.state.zp, b.state.zp),
            w: h(a.state.w, b.state.w, a.state.wp, b.state.wp),
            zp: h(a.state.zp, b.state.zp, a.accel.0, b.accel.0),
            wp: h(a.state.wp, b.state.wp, a.accel.1, b.accel.1),
        }
    }

    /// Uniform resampling on `n` points of `[0, T]`. Accelerations are taken
    /// from the derivative of the `z'`, `w'` interpolant.
    pub fn resample(&self, n: usize) -> Trajectory {
        let n = n.max(2);
        let period = self.period();
        let uniform = self.samples.len() == n
            && self
                .samples
                .iter()
                .enumerate()
                .all(|(k, s)| s.t == Self::uniform_t(period, n, k));
        if uniform {
            return self.clone();
        }
        let samples = (0..n)
            .map(|k| {
                let t = Self::uniform_t(period, n, k);
                Sample {
                    t,
                    state: self.eval(t),
                    accel: self.accel_at(t),
                }
            })
            .collect();
        Trajectory::new(samples, self.max_error_estimate)
    }

    fn uniform_t(period: f64, n: usize, k: usize) -> f64 {
        if k == n - 1 {
            period
        } else {
            period * k as f64 / (n - 1) as f64
        }
    }

    fn accel_at(&self, t: f64) -> (f64, f64) {
        let s = &self.samples;
        if s.len() == 1 {
            return s[0].accel;
        }
        let k = (s.partition_point(|x| x.t <= t).max(1) - 1).min(s.len() - 2);
        let (a, b) = (&s[k], &s[k + 1]);
        if t == a.t {
            return a.accel;
        }
        if t == b.t {
            return b.accel;
        }
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        // derivative of the cubic Hermite basis
        let d = |y0: f64, y1: f64, d0: f64, d1: f64| {
            ((6.0 * u * u - 6.0 * u) * y0 + (6.0 * u - 6.0 * u * u) * y1) / h
                + (3.0 * u * u - 4.0 * u + 1.0) * d0
                + (3.0 * u * u - 2.0 * u) * d1
        };
        (
            d(a.state.zp, b.state.zp, a.accel.0, b.accel.0),
            d(a.state.wp, b.state.wp, a.accel.1, b.accel.1),
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{},{}", s.t, s.state.z, s.state.w, s.state.zp, s.state.wp)?;
        }
        Ok(())
    }

    /// Sample standard deviation of `z`.
    pub fn z_std(&self) -> f64 {
        let n = self.samples.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let mean = self.samples.iter().map(|s| s.state.z).sum::<f64>() / n;
        let var = self.samples.iter().map(|s| (s.state.z - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt()
    }
}
