//! Input-pulse optimization by time reversal.
//!
//! Each iteration stores and retrieves the current input, then feeds back
//! the complex-conjugated, time-reversed retrieved pulse (reversed about
//! the center of the read window and placed in the write window) at unit
//! area. With the read control equal to the time-reversed write control
//! this is a power iteration whose efficiency never decreases.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::control::{ControlSchedule, DEFAULT_RAMP};
use crate::envelope::Envelope;
use crate::error::{domain, Error, Result};
use crate::propagation::{store_and_retrieve, transmission_efficiency, Grid, StorageReport};
use crate::units::MediumParams;

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Dark gap between write and read when optimizing. With no gap, light
/// arriving during the switch passes straight into the read window and the
/// iteration learns to exploit it; after 20 decay times the free
/// polarization is gone.
pub const DEFAULT_STORAGE: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    /// Storage efficiency of each iterate, seed first.
    pub etas: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub input: Envelope,
    pub retrieved: Envelope,
    pub report: StorageReport,
}

impl OptimizationTrace {
    pub fn final_eta(&self) -> f64 {
        *self.etas.last().unwrap_or(&0.0)
    }

    /// Largest drop between consecutive iterates (0 if monotone).
    pub fn worst_decrease(&self) -> f64 {
        self.etas
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    /// `iter,eta` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,eta\n");
        for (k, e) in self.etas.iter().enumerate() {
            s.push_str(&format!("{k},{e:.12}\n"));
        }
        s
    }
}

fn write_window_input(source: &Envelope, n_w: usize, dt: f64) -> Result<Envelope> {
    Envelope::from_fn(0.0, dt, n_w + 1, |t| source.value_at(t))
}

/// Iterate input <- time-reversed retrieved output until the efficiency
/// changes by less than `tol` or `max_iter` storage runs have been done.
pub fn optimize_pulse(
    medium: &MediumParams,
    control: &ControlSchedule,
    seed: &Envelope,
    grid: Grid,
    max_iter: usize,
    tol: f64,
) -> Result<OptimizationTrace> {
    let (write_end, read_start) = match (control.write_end(), control.read_start()) {
        (Some(w), Some(r)) => (w, r),
        _ => return domain("optimization needs a store-retrieve control schedule"),
    };
    if control.end() - read_start < write_end - 1e-9 {
        return domain("read window must be at least as long as the write window");
    }
    if max_iter == 0 || !(tol > 0.0) {
        return domain("need max_iter >= 1 and tol > 0");
    }
    let dt = grid.dt;
    let n_w = (write_end / dt).round() as usize;
    let total = seed.area();
    if !(total > 0.0) {
        return domain("seed pulse has zero area");
    }
    let mut input = write_window_input(seed, n_w, dt)?;
    if input.area() < 0.99 * total {
        return domain("seed pulse does not fit in the write window");
    }
    input = input.normalized()?;

    let mut etas = Vec::new();
    let mut converged = false;
    let mut last: Option<(StorageReport, Envelope)> = None;
    for _ in 0..max_iter {
        let report = store_and_retrieve(&input, control, medium, grid)?;
        let eta = report.eta_total;
        if !(eta > 1e-14) {
            return Err(Error::NothingRetrieved(format!(
                "retrieved efficiency {eta:e} at d = {}; increase the optical depth or lengthen the pulse",
                medium.d
            )));
        }
        let done = etas.last().is_some_and(|&prev: &f64| (eta - prev).abs() < tol);
        etas.push(eta);
        let window: Vec<Complex64> = report.retrieved.values().iter().take(n_w + 1).cloned().collect();
        let next = Envelope::new(0.0, dt, window)?.time_reversed(0.0);
        last = Some((report, input));
        if done {
            converged = true;
            break;
        }
        input = next.normalized()?;
    }
    let (report, input) = last.expect("at least one iteration");
    Ok(OptimizationTrace {
        iterations: etas.len(),
        etas,
        converged,
        retrieved: report.retrieved.clone(),
        input,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseDuration {
    pub value: f64,
    /// Set when the intensity dips below half maximum between its outermost
    /// half-maximum crossings (or touches the window edge) and `value` is the
    /// equivalent width `area / max |E|^2` instead of the FWHM.
    pub equivalent_width: bool,
}

/// Intensity FWHM of the converged input pulse.
pub fn optimal_pulse_duration(trace: &OptimizationTrace) -> Result<PulseDuration> {
    if !trace.converged {
        return domain("optimization trace did not converge");
    }
    pulse_duration(&trace.input)
}

pub fn pulse_duration(pulse: &Envelope) -> Result<PulseDuration> {
    let y = pulse.intensity();
    let peak = y.iter().cloned().fold(0.0, f64::max);
    if y.iter().filter(|&&v| v >= 0.5 * peak).count() < 3 {
        return domain("pulse is too narrow to resolve on its grid");
    }
    // Ringing from the control switch-off sits well below half maximum and
    // does not change the width, so only a split above half maximum counts.
    let first = y.iter().position(|&v| v >= 0.5 * peak).unwrap_or(0);
    let last = y.iter().rposition(|&v| v >= 0.5 * peak).unwrap_or(0);
    if y[first..=last].iter().all(|&v| v >= 0.5 * peak) {
        if let Some(w) = pulse.fwhm() {
            return Ok(PulseDuration {
                value: w,
                equivalent_width: false,
            });
        }
    }
    Ok(PulseDuration {
        value: pulse.equivalent_width(),
        equivalent_width: true,
    })
}

/// Windows and switching used for one optimization at fixed depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageSetup {
    pub omega: f64,
    /// Read-phase control; defaults to the write value.
    pub omega_read: Option<f64>,
    /// Dark storage time (dimensionless); at least [`DEFAULT_STORAGE`]
    /// is advisable.
    pub storage: f64,
    pub ramp: f64,
    /// Write window length in units of the slow-light delay `d / Omega^2`.
    pub window_factor: f64,
    pub min_window: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl StorageSetup {
    pub fn new(omega: f64) -> Self {
        StorageSetup {
            omega,
            omega_read: None,
            storage: DEFAULT_STORAGE,
            ramp: DEFAULT_RAMP,
            window_factor: 3.0,
            min_window: 15.0,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        }
    }

    pub fn write_len(&self, medium: &MediumParams, dt: f64) -> f64 {
        let delay = medium.d / (self.omega * self.omega);
        let len = (self.window_factor * delay).max(self.min_window);
        (len / dt).round() * dt
    }

    pub fn control(&self, medium: &MediumParams, dt: f64) -> Result<ControlSchedule> {
        let w = self.write_len(medium, dt);
        let storage = (self.storage / dt).round() * dt;
        ControlSchedule::store_retrieve(
            w,
            self.omega,
            storage,
            w,
            self.omega_read.unwrap_or(self.omega),
            self.ramp,
        )
    }

    /// Gaussian seed ending about where the control switches off.
    pub fn gaussian_seed(&self, medium: &MediumParams, dt: f64) -> Result<Envelope> {
        let w = self.write_len(medium, dt);
        Envelope::gaussian(0.0, dt, (w / dt).round() as usize + 1, 0.6 * w, 0.25 * w)
    }

    pub fn square_seed(&self, medium: &MediumParams, dt: f64) -> Result<Envelope> {
        let w = self.write_len(medium, dt);
        Envelope::square(0.0, dt, (w / dt).round() as usize + 1, 0.35 * w, 0.5 * w)
    }

    pub fn run(&self, medium: &MediumParams, grid: Grid, seed: Option<&Envelope>) -> Result<OptimizationTrace> {
        let control = self.control(medium, grid.dt)?;
        let default_seed;
        let seed = match seed {
            Some(s) => s,
            None => {
                default_seed = self.gaussian_seed(medium, grid.dt)?;
                &default_seed
            }
        };
        optimize_pulse(medium, &control, seed, grid, self.max_iter, self.tol)
    }
}

/// Peak delay and transmitted fraction of `pulse` with the control left on.
pub fn slow_light_run(
    pulse: &Envelope,
    medium: &MediumParams,
    omega: f64,
    grid: Grid,
) -> Result<(f64, f64)> {
    let delay = medium.d / (omega * omega);
    let len = pulse.t_end() + 2.0 * delay + 10.0 * pulse.equivalent_width().max(1.0);
    let control = ControlSchedule::continuous(len, omega)?;
    let (eta, state) = transmission_efficiency(pulse, &control, medium, grid)?;
    Ok((state.transmitted.peak_time() - pulse.peak_time(), eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRow {
    pub d: f64,
    pub eta_opt: f64,
    pub t_opt: f64,
    pub delay: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Optimized storage efficiency over an ascending list of optical depths,
/// one independent optimization per depth (run in parallel).
pub fn efficiency_vs_depth(d_list: &[f64], omega_c: f64, gamma_s: f64, setup: &StorageSetup) -> Result<Vec<DepthRow>> {
    if d_list.iter().any(|&d| !(d > 0.0)) {
        return domain("optical depths must be positive");
    }
    if d_list.windows(2).any(|w| w[1] <= w[0]) {
        return domain("optical depths must be strictly ascending");
    }
    let setup = StorageSetup { omega: omega_c, ..*setup };
    d_list
        .par_iter()
        .map(|&d| {
            let medium = MediumParams::new(d, gamma_s, 0.0)?;
            let grid = Grid::auto(&medium, omega_c);
            let trace = setup.run(&medium, grid, None)?;
            let t_opt = pulse_duration(&trace.input)?.value;
            let (delay, _) = slow_light_run(&trace.input, &medium, omega_c, grid)?;
            Ok(DepthRow {
                d,
                eta_opt: trace.final_eta(),
                t_opt,
                delay,
                iterations: trace.iterations,
                converged: trace.converged,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_depth_is_not_storable() {
        let m = MediumParams::resonant(0.0).unwrap();
        let setup = StorageSetup::new(1.0);
        let err = setup.run(&m, Grid::auto(&m, 1.0), None).unwrap_err();
        assert!(matches!(err, Error::NothingRetrieved(_)), "{err}");
    }

    #[test]
    fn single_sample_pulse_rejected() {
        let mut v = vec![Complex64::new(0.0, 0.0); 64];
        v[30] = Complex64::new(1.0, 0.0);
        let e = Envelope::new(0.0, 0.1, v).unwrap();
        assert!(pulse_duration(&e).is_err());
    }

    #[test]
    fn double_peak_reports_equivalent_width() {
        let e = Envelope::from_fn(0.0, 0.05, 600, |t| {
            Complex64::new((-(t - 8.0).powi(2)).exp() + (-(t - 20.0).powi(2)).exp(), 0.0)
        })
        .unwrap();
        let w = pulse_duration(&e).unwrap();
        assert!(w.equivalent_width);
        assert!((w.value - e.equivalent_width()).abs() < 1e-12);
    }

    #[test]
    fn iterates_have_unit_area_and_rise() {
        let m = MediumParams::resonant(10.0).unwrap();
        let setup = StorageSetup { max_iter: 6, ..StorageSetup::new(1.0) };
        let trace = setup.run(&m, Grid::auto(&m, 1.0), None).unwrap();
        assert!((trace.input.area() - 1.0).abs() < 1e-12);
        assert!(trace.worst_decrease() <= 1e-6, "{:?}", trace.etas);
        assert!(trace.etas.iter().all(|&e| (0.0..=1.0).contains(&e)));
        assert!(trace.to_csv().starts_with("iter,eta\n0,"));
    }
}
