use num_complex::Complex64;

use crate::error::{domain, Result};

pub const MIN_SAMPLES: usize = 16;

/// Complex pulse envelope on a uniform time grid `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    t0: f64,
    dt: f64,
    values: Vec<Complex64>,
}

impl Envelope {
    pub fn new(t0: f64, dt: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return domain(format!("time grid needs finite t0 and dt > 0, got t0={t0} dt={dt}"));
        }
        if values.len() < MIN_SAMPLES {
            return domain(format!(
                "envelope needs at least {MIN_SAMPLES} samples, got {}",
                values.len()
            ));
        }
        let env = Envelope { t0, dt, values };
        if !env.area().is_finite() {
            return domain("envelope area is not finite");
        }
        Ok(env)
    }

    /// Samples `f` at `n` points starting from `t0`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(t0, dt, (0..n).map(|k| f(t0 + k as f64 * dt)).collect())
    }

    /// Gaussian whose intensity has full width at half maximum `fwhm`.
    pub fn gaussian(t0: f64, dt: f64, n: usize, center: f64, fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0) {
            return domain("Gaussian width must be positive");
        }
        // |E|^2 = exp(-4 ln2 (t-c)^2 / fwhm^2)
        let a = 2.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
        Self::from_fn(t0, dt, n, |t| {
            Complex64::new((-a * (t - center) * (t - center)).exp(), 0.0)
        })
    }

    /// Flat-top pulse on `[start, start + width]`.
    pub fn square(t0: f64, dt: f64, n: usize, start: f64, width: f64) -> Result<Self> {
        Self::from_fn(t0, dt, n, |t| {
            if t >= start && t <= start + width {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.time(k))
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Intensity area `sum |E|^2 dt`.
    pub fn area(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dt
    }

    pub fn scaled(&self, factor: Complex64) -> Envelope {
        Envelope {
            t0: self.t0,
            dt: self.dt,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Rescaled to unit intensity area.
    pub fn normalized(&self) -> Result<Envelope> {
        let a = self.area();
        if !(a > 0.0) {
            return domain("cannot normalize a pulse with zero area");
        }
        Ok(self.scaled(Complex64::new(1.0 / a.sqrt(), 0.0)))
    }

    /// Linear interpolation; zero outside the sampled interval.
    pub fn value_at(&self, t: f64) -> Complex64 {
        let last = (self.values.len() - 1) as f64;
        let x = (t - self.t0) / self.dt;
        if x < -1e-9 || x > last + 1e-9 {
            return Complex64::new(0.0, 0.0);
        }
        let x = x.clamp(0.0, last);
        let k = x.floor() as usize;
        if k + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        let f = x - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    /// Time of peak intensity, refined by a parabola through the three
    /// samples around the maximum.
    pub fn peak_time(&self) -> f64 {
        let y = self.intensity();
        let k = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        if k == 0 || k + 1 == y.len() {
            return self.time(k);
        }
        let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        self.time(k) + shift.clamp(-0.5, 0.5) * self.dt
    }

    /// Intensity-weighted mean time.
    pub fn centroid(&self) -> f64 {
        let y = self.intensity();
        let total: f64 = y.iter().sum();
        y.iter()
            .enumerate()
            .map(|(k, v)| v * self.time(k))
            .sum::<f64>()
            / total
    }

    /// `area / max |E|^2`.
    pub fn equivalent_width(&self) -> f64 {
        let peak = self.intensity().into_iter().fold(0.0, f64::max);
        if peak > 0.0 {
            self.area() / peak
        } else {
            0.0
        }
    }

    /// True if the intensity rises to a single maximum and then falls,
    /// ignoring wiggles below `rel_tol` of the peak.
    pub fn is_unimodal(&self, rel_tol: f64) -> bool {
        let y = self.intensity();
        let peak = y.iter().cloned().fold(0.0, f64::max);
        let tol = rel_tol * peak;
        let mut falling = false;
        let mut extreme = y[0];
        for &v in &y[1..] {
            if !falling {
                if v >= extreme {
                    extreme = v;
                } else if extreme - v > tol {
                    falling = true;
                    extreme = v;
                }
            } else if v <= extreme {
                extreme = v;
            } else if v - extreme > tol {
                return false;
            }
        }
        true
    }

    /// Full width at half maximum of the intensity, with linear
    /// interpolation at the outermost half-maximum crossings.
    pub fn fwhm(&self) -> Option<f64> {
        let y = self.intensity();
        let peak = y.iter().cloned().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return None;
        }
        let half = 0.5 * peak;
        let first = y.iter().position(|&v| v >= half)?;
        let last = y.iter().rposition(|&v| v >= half)?;
        if first == 0 || last + 1 == y.len() {
            return None;
        }
        let cross = |lo: usize, hi: usize| {
            let (a, b) = (y[lo], y[hi]);
            self.time(lo) + (half - a) / (b - a) * (self.time(hi) - self.time(lo))
        };
        let left = cross(first - 1, first);
        let right = cross(last + 1, last);
        Some(right - left)
    }

    /// Complex-conjugated and reversed about the window center, placed on
    /// a grid starting at `t0`: sample `k` becomes `conj(self[n - 1 - k])`.
    pub fn time_reversed(&self, t0: f64) -> Envelope {
        Envelope {
            t0,
            dt: self.dt,
            values: self.values.iter().rev().map(|v| v.conj()).collect(),
        }
    }
}

/// Intensity-area ratio `area(out) / area(reference)`.
pub fn efficiency(out: &Envelope, reference: &Envelope) -> Result<f64> {
    if ((out.dt - reference.dt) / reference.dt).abs() > 1e-9 {
        return domain(format!(
            "envelopes on different grids: dt {} vs {}",
            out.dt, reference.dt
        ));
    }
    let r = reference.area();
    if !(r > 0.0) {
        return domain("reference pulse has zero area");
    }
    Ok(out.area() / r)
}
