//! Three-level Lambda stored-light dynamics in the co-moving frame.
//!
//! ```text
//! dE/dxi = i sqrt(d) P
//! dP/dt  = -(1 + i Delta) P + i sqrt(d) E + i Omega(t) S
//! dS/dt  = -gamma_s S + i Omega(t) P
//! ```
//!
//! Method of lines: at every time stage the field is marched across the
//! medium from the input face by trapezoidal quadrature of the
//! polarization, and P, S are advanced with classical RK4. Photon number
//! obeys
//!
//! ```text
//! in = out + 2 ∫∫|P|^2 + 2 gamma_s ∫∫|S|^2 + ∫(|P|^2 + |S|^2)(t_end)
//! ```
//!
//! which the solver tracks as a ledger.
//!
//! Long dark intervals are not stepped through. Once the input is over and
//! the polarization has had `settle` time units to decay, the spin wave is multiplied by its
//! exact dark-evolution factor `exp(-gamma_s tau)` and the clock jumps
//! ahead; whatever polarization remains is booked as scattering loss.

use std::io::Write;

use num_complex::Complex64;

use crate::control::ControlSchedule;
use crate::envelope::Envelope;
use crate::error::{domain, Error, Result};
use crate::units::MediumParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Any field magnitude above this (times the input peak) aborts the run.
pub const BLOWUP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Spatial nodes over [0, 1], endpoints included.
    pub n_z: usize,
    pub dt: f64,
}

impl Grid {
    pub fn new(n_z: usize, dt: f64) -> Result<Self> {
        if n_z < 3 {
            return domain(format!("need at least 3 spatial nodes, got {n_z}"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return domain(format!("time step must be positive, got {dt}"));
        }
        Ok(Grid { n_z, dt })
    }

    /// Resolution that resolves the absorption length `1/d` and keeps RK4
    /// inside its stability region for the field-polarization coupling.
    pub fn auto(medium: &MediumParams, omega_max: f64) -> Grid {
        let n_z = ((2.0 * medium.d).ceil() as usize + 1).clamp(65, 2049);
        let rate = 1.0 + 0.4 * medium.d + omega_max;
        Grid {
            n_z,
            dt: (0.6 / rate).min(0.05),
        }
    }

    /// Twice as fine in both space and time.
    pub fn refined(&self) -> Grid {
        Grid {
            n_z: 2 * (self.n_z - 1) + 1,
            dt: 0.5 * self.dt,
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n_z - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Space-time snapshots to keep (0 keeps only the initial state).
    pub snapshots: usize,
    /// Explicit integration time at the start of a dark interval before
    /// the remainder is skipped analytically.
    pub settle: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            snapshots: 200,
            settle: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Write,
    Dark,
    Read,
}

/// Time-integrated photon flows, in the same units as the input area.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Ledger {
    pub input: f64,
    /// Output during writing and dark storage.
    pub leaked: f64,
    /// Output during reading.
    pub retrieved: f64,
    /// `2 ∫∫ |P|^2`.
    pub scattered: f64,
    /// `2 gamma_s ∫∫ |S|^2`.
    pub spin_decay: f64,
    /// Excitation left in the medium at the end.
    pub residual: f64,
}

impl Ledger {
    pub fn accounted(&self) -> f64 {
        self.leaked + self.retrieved + self.scattered + self.spin_decay + self.residual
    }

    /// `accounted / input - 1`.
    pub fn closure_error(&self) -> f64 {
        self.accounted() / self.input - 1.0
    }
}

/// Space-time record of one run.
#[derive(Debug, Clone)]
pub struct SimState {
    pub xi: Vec<f64>,
    /// Physical times of the snapshots.
    pub times: Vec<f64>,
    pub e: Vec<Vec<Complex64>>,
    pub p: Vec<Vec<Complex64>>,
    pub s: Vec<Vec<Complex64>>,
    /// Field at xi = 1 at every explicit time step. Skipped dark time is
    /// removed from this axis; see [`SimState::physical_time`].
    pub transmitted: Envelope,
    /// `(physical time, duration)` of each analytic dark skip.
    pub skips: Vec<(f64, f64)>,
    /// Index into `transmitted` of the first read-phase sample.
    pub read_index: Option<usize>,
    pub ledger: Ledger,
}

impl SimState {
    /// Physical time of a time on the `transmitted` axis.
    pub fn physical_time(&self, t: f64) -> f64 {
        let mut shift = 0.0;
        for &(at, dur) in &self.skips {
            if t + shift >= at - 1e-9 {
                shift += dur;
            }
        }
        t + shift
    }

    /// Transmitted field from the start of the read phase on.
    pub fn retrieved(&self) -> Option<Envelope> {
        let k = self.read_index?;
        let out = &self.transmitted;
        let values = out.values()[k..].to_vec();
        let t0 = self.physical_time(out.time(k));
        Envelope::new(t0, out.dt(), values).ok()
    }

    /// Transmitted field before the read phase, on the compressed axis.
    pub fn leaked(&self) -> Option<Envelope> {
        let k = self.read_index.unwrap_or(self.transmitted.len());
        let out = &self.transmitted;
        Envelope::new(out.t0(), out.dt(), out.values()[..k].to_vec()).ok()
    }

    /// CSV with columns `xi,t,E2,P2,S2`, one row per snapshot node.
    pub fn write_space_time_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "xi,t,E2,P2,S2")?;
        for (n, &t) in self.times.iter().enumerate() {
            for (j, &x) in self.xi.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{:e},{:e},{:e}",
                    x,
                    t,
                    self.e[n][j].norm_sqr(),
                    self.p[n][j].norm_sqr(),
                    self.s[n][j].norm_sqr()
                )?;
            }
        }
        Ok(())
    }
}

struct Solver {
    medium: MediumParams,
    grid: Grid,
    sqrt_d: f64,
    weights: Vec<f64>,
    p: Vec<Complex64>,
    s: Vec<Complex64>,
    t: f64,
    ledger: Ledger,
    blowup: f64,
    steps: usize,
    // RK4 scratch
    kp: [Vec<Complex64>; 4],
    ks: [Vec<Complex64>; 4],
    tp: Vec<Complex64>,
    ts: Vec<Complex64>,
}

impl Solver {
    fn new(medium: MediumParams, grid: Grid, input_peak: f64) -> Self {
        let n = grid.n_z;
        let h = grid.h();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        let z = || vec![ZERO; n];
        Solver {
            medium,
            grid,
            sqrt_d: medium.d.sqrt(),
            weights,
            p: z(),
            s: z(),
            t: 0.0,
            ledger: Ledger::default(),
            blowup: BLOWUP * input_peak.max(1.0),
            steps: 0,
            kp: [z(), z(), z(), z()],
            ks: [z(), z(), z(), z()],
            tp: z(),
            ts: z(),
        }
    }

    /// Field at every node for the given polarization and input value.
    fn field_profile(&self, p: &[Complex64], ein: Complex64) -> Vec<Complex64> {
        let c = I * (self.sqrt_d * 0.5 * self.grid.h());
        let mut e = Vec::with_capacity(p.len());
        let mut acc = ein;
        e.push(acc);
        for j in 1..p.len() {
            acc += c * (p[j - 1] + p[j]);
            e.push(acc);
        }
        e
    }

    fn field_out(&self, p: &[Complex64], ein: Complex64) -> Complex64 {
        let c = I * (self.sqrt_d * 0.5 * self.grid.h());
        let mut acc = ein;
        for j in 1..p.len() {
            acc += c * (p[j - 1] + p[j]);
        }
        acc
    }

    fn spatial_norm(&self, v: &[Complex64]) -> f64 {
        v.iter()
            .zip(&self.weights)
            .map(|(x, w)| x.norm_sqr() * w)
            .sum()
    }

    #[allow(clippy::too_many_arguments)]
    fn rhs(
        sqrt_d: f64,
        h: f64,
        decay: Complex64,
        gamma_s: f64,
        omega: f64,
        ein: Complex64,
        p: &[Complex64],
        s: &[Complex64],
        dp: &mut [Complex64],
        ds: &mut [Complex64],
    ) {
        let c = I * (sqrt_d * 0.5 * h);
        let id = I * sqrt_d;
        let iw = I * omega;
        let mut e = ein;
        for j in 0..p.len() {
            if j > 0 {
                e += c * (p[j - 1] + p[j]);
            }
            dp[j] = -decay * p[j] + id * e + iw * s[j];
            ds[j] = -gamma_s * s[j] + iw * p[j];
        }
    }

    /// One RK4 step of size dt, booking flows into `phase`.
    fn step(&mut self, control: &ControlSchedule, input: &dyn Fn(f64) -> Complex64, phase: Phase) -> Result<Complex64> {
        let dt = self.grid.dt;
        let h = self.grid.h();
        let t0 = self.t;
        let decay = Complex64::new(1.0, self.medium.delta);
        let gs = self.medium.gamma_s;
        let sd = self.sqrt_d;
        let n = self.p.len();

        let e_in0 = input(t0);
        let e_out0 = self.field_out(&self.p, e_in0);
        let pp0 = self.spatial_norm(&self.p);
        let ss0 = self.spatial_norm(&self.s);

        let times = [t0, t0 + 0.5 * dt, t0 + 0.5 * dt, t0 + dt];
        let coef = [0.0, 0.5 * dt, 0.5 * dt, dt];
        for stage in 0..4 {
            let tt = times[stage];
            let omega = control.omega_at(tt);
            let ein = input(tt);
            let (kp, ks) = (&mut self.kp, &mut self.ks);
            if stage == 0 {
                let (dp, ds) = (&mut kp[0], &mut ks[0]);
                Self::rhs(sd, h, decay, gs, omega, ein, &self.p, &self.s, dp, ds);
            } else {
                let a = coef[stage];
                for j in 0..n {
                    self.tp[j] = self.p[j] + kp[stage - 1][j] * a;
                    self.ts[j] = self.s[j] + ks[stage - 1][j] * a;
                }
                Self::rhs(sd, h, decay, gs, omega, ein, &self.tp, &self.ts, &mut kp[stage], &mut ks[stage]);
            }
        }
        let w = dt / 6.0;
        let mut peak = 0.0f64;
        for j in 0..n {
            self.p[j] += (self.kp[0][j] + 2.0 * self.kp[1][j] + 2.0 * self.kp[2][j] + self.kp[3][j]) * w;
            self.s[j] += (self.ks[0][j] + 2.0 * self.ks[1][j] + 2.0 * self.ks[2][j] + self.ks[3][j]) * w;
            peak = peak.max(self.p[j].norm_sqr()).max(self.s[j].norm_sqr());
        }
        self.t = t0 + dt;
        self.steps += 1;

        let e_in1 = input(self.t);
        let e_out1 = self.field_out(&self.p, e_in1);
        let peak = peak.max(e_out1.norm_sqr()).sqrt();
        if !(peak <= self.blowup) {
            return Err(Error::Unstable {
                step: self.steps,
                dt,
                n_z: self.grid.n_z,
                magnitude: peak,
            });
        }
        let pp1 = self.spatial_norm(&self.p);
        let ss1 = self.spatial_norm(&self.s);
        let trap = |a: f64, b: f64| 0.5 * (a + b) * dt;
        self.ledger.input += trap(e_in0.norm_sqr(), e_in1.norm_sqr());
        let out = trap(e_out0.norm_sqr(), e_out1.norm_sqr());
        match phase {
            Phase::Read => self.ledger.retrieved += out,
            _ => self.ledger.leaked += out,
        }
        self.ledger.scattered += 2.0 * trap(pp0, pp1);
        self.ledger.spin_decay += 2.0 * gs * trap(ss0, ss1);
        Ok(e_out1)
    }

    /// Dark evolution over `duration` done in closed form for the spin wave.
    fn skip_dark(&mut self, duration: f64) {
        let gs = self.medium.gamma_s;
        let ss = self.spatial_norm(&self.s);
        let factor = (-gs * duration).exp();
        self.ledger.spin_decay += ss * (1.0 - factor * factor);
        self.ledger.scattered += self.spatial_norm(&self.p);
        for v in &mut self.s {
            *v *= factor;
        }
        for v in &mut self.p {
            *v = ZERO;
        }
        self.t += duration;
    }

    fn finish(&mut self) -> Ledger {
        self.ledger.residual = self.spatial_norm(&self.p) + self.spatial_norm(&self.s);
        self.ledger
    }
}

fn phase_of(control: &ControlSchedule, t_mid: f64) -> Phase {
    match (control.write_end(), control.read_start()) {
        (Some(we), Some(rs)) => {
            if t_mid < we {
                Phase::Write
            } else if t_mid < rs {
                Phase::Dark
            } else {
                Phase::Read
            }
        }
        _ => Phase::Write,
    }
}

/// Integrate the dynamics over the whole control schedule.
///
/// The input field enters at xi = 0 and is zero outside the envelope's
/// sampled interval. Time starts at 0 with an unexcited medium.
pub fn evolve(
    input: &Envelope,
    control: &ControlSchedule,
    medium: &MediumParams,
    grid: Grid,
) -> Result<SimState> {
    evolve_with(input, control, medium, grid, &EvolveOptions::default())
}

pub fn evolve_with(
    input: &Envelope,
    control: &ControlSchedule,
    medium: &MediumParams,
    grid: Grid,
    opts: &EvolveOptions,
) -> Result<SimState> {
    medium.validate()?;
    control.validate()?;
    let grid = Grid::new(grid.n_z, grid.dt)?;
    let dt = grid.dt;
    let total = (control.end() / dt).round() as usize;
    if total == 0 {
        return domain("control schedule shorter than one time step");
    }

    // Dark skips as (first skipped step, number of steps).
    // Only skip where the input is over, since skipped time books no input.
    let input_end = input.t_end();
    let mut skips: Vec<(usize, usize)> = Vec::new();
    for (a, b) in control.dark_intervals() {
        let start = ((a.max(input_end) + opts.settle) / dt).ceil() as usize;
        let stop = ((b - opts.settle) / dt).floor() as usize;
        if stop > start + 1 {
            skips.push((start, stop - start));
        }
    }
    let skipped: usize = skips.iter().map(|s| s.1).sum();
    let explicit = total - skipped.min(total);
    let stride = if opts.snapshots == 0 {
        usize::MAX
    } else {
        (explicit / opts.snapshots).max(1)
    };

    let input_peak = input.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut solver = Solver::new(*medium, grid, input_peak);
    let source = |t: f64| input.value_at(t);

    let xi: Vec<f64> = (0..grid.n_z).map(|j| j as f64 * grid.h()).collect();
    let mut times = Vec::new();
    let (mut es, mut ps, mut ss) = (Vec::new(), Vec::new(), Vec::new());
    let mut snap = |solver: &Solver, t: f64| {
        times.push(t);
        es.push(solver.field_profile(&solver.p, input.value_at(t)));
        ps.push(solver.p.clone());
        ss.push(solver.s.clone());
    };
    snap(&solver, 0.0);

    let mut out = Vec::with_capacity(explicit + 1);
    out.push(solver.field_out(&solver.p, source(0.0)));
    let mut skip_log = Vec::new();
    let read_step = control.read_start().map(|rs| (rs / dt).round() as usize);
    let mut read_index = None;

    let mut k = 0usize;
    let mut explicit_done = 0usize;
    let mut skip_iter = skips.iter().peekable();
    while k < total {
        if let Some(&&(at, n)) = skip_iter.peek() {
            if k == at {
                let t_phys = k as f64 * dt;
                solver.skip_dark(n as f64 * dt);
                skip_log.push((t_phys, n as f64 * dt));
                k += n;
                skip_iter.next();
                continue;
            }
        }
        if read_index.is_none() && read_step == Some(k) {
            read_index = Some(out.len() - 1);
        }
        solver.t = k as f64 * dt;
        let phase = phase_of(control, solver.t + 0.5 * dt);
        let e = solver.step(control, &source, phase)?;
        out.push(e);
        k += 1;
        explicit_done += 1;
        if explicit_done % stride == 0 {
            snap(&solver, k as f64 * dt);
        }
    }
    if read_index.is_none() && read_step.is_some_and(|r| r >= total) {
        read_index = Some(out.len() - 1);
    }
    let ledger = solver.finish();
    Ok(SimState {
        xi,
        times,
        e: es,
        p: ps,
        s: ss,
        transmitted: Envelope::new(0.0, dt, out)?,
        skips: skip_log,
        read_index,
        ledger,
    })
}

/// Efficiency breakdown of a store-and-retrieve run. All fractions are of
/// the input photon number.
#[derive(Debug, Clone)]
pub struct StorageReport {
    pub eta_total: f64,
    pub eta_leakage: f64,
    pub eta_scatter: f64,
    pub eta_spin_decay: f64,
    pub eta_residual: f64,
    pub retrieved: Envelope,
    pub ledger: Ledger,
}

impl StorageReport {
    pub fn sum(&self) -> f64 {
        self.eta_total + self.eta_leakage + self.eta_scatter + self.eta_spin_decay + self.eta_residual
    }
}

/// Write, store in the dark, and read out; returns the loss breakdown.
pub fn store_and_retrieve(
    input: &Envelope,
    control: &ControlSchedule,
    medium: &MediumParams,
    grid: Grid,
) -> Result<StorageReport> {
    if control.write_end().is_none() || control.read_start().is_none() {
        return domain("control schedule has no write/storage/read structure");
    }
    let opts = EvolveOptions {
        snapshots: 0,
        ..EvolveOptions::default()
    };
    let state = evolve_with(input, control, medium, grid, &opts)?;
    report_from(&state)
}

pub(crate) fn report_from(state: &SimState) -> Result<StorageReport> {
    let l = state.ledger;
    if !(l.input > 0.0) {
        return domain("input pulse has zero area inside the simulated window");
    }
    let frac = |x: f64| (x / l.input).max(0.0);
    let retrieved = state
        .retrieved()
        .ok_or_else(|| Error::Domain("read window too short to record the retrieved pulse".into()))?;
    Ok(StorageReport {
        eta_total: frac(l.retrieved),
        eta_leakage: frac(l.leaked),
        eta_scatter: frac(l.scattered),
        eta_spin_decay: frac(l.spin_decay),
        eta_residual: frac(l.residual),
        retrieved,
        ledger: l,
    })
}

/// Transmitted photon fraction with the control left as given (no read
/// phase): the slow-light efficiency.
pub fn transmission_efficiency(
    input: &Envelope,
    control: &ControlSchedule,
    medium: &MediumParams,
    grid: Grid,
) -> Result<(f64, SimState)> {
    let opts = EvolveOptions {
        snapshots: 0,
        ..EvolveOptions::default()
    };
    let state = evolve_with(input, control, medium, grid, &opts)?;
    let l = state.ledger;
    if !(l.input > 0.0) {
        return domain("input pulse has zero area inside the simulated window");
    }
    Ok(((l.leaked + l.retrieved) / l.input, state))
}

/// A fully specified run used by grid refinement.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub input: Envelope,
    pub control: ControlSchedule,
    pub medium: MediumParams,
}

impl Scenario {
    /// Storage efficiency when the schedule stores, else transmission.
    pub fn efficiency(&self, grid: Grid) -> Result<f64> {
        if self.control.read_start().is_some() {
            Ok(store_and_retrieve(&self.input, &self.control, &self.medium, grid)?.eta_total)
        } else {
            Ok(transmission_efficiency(&self.input, &self.control, &self.medium, grid)?.0)
        }
    }
}

pub const MAX_REFINEMENTS: usize = 4;

/// Walk the doubling ladder from `start` and return the first grid whose
/// efficiency moves by less than `tol` when refined once more.
pub fn refine_until_converged(scenario: &Scenario, tol: f64, start: Grid) -> Result<Grid> {
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    if tol.is_infinite() {
        return Ok(start);
    }
    let mut grid = start;
    let mut eta = scenario.efficiency(grid)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        let finer = grid.refined();
        let eta_fine = scenario.efficiency(finer)?;
        last_change = (eta_fine - eta).abs();
        if last_change < tol {
            return Ok(grid);
        }
        grid = finer;
        eta = eta_fine;
    }
    Err(Error::NotConverged { last_change, tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(center: f64, fwhm: f64, dt: f64, len: f64) -> Envelope {
        Envelope::gaussian(0.0, dt, (len / dt) as usize + 1, center, fwhm)
            .unwrap()
            .normalized()
            .unwrap()
    }

    #[test]
    fn empty_medium_passes_input_unchanged() {
        let m = MediumParams::resonant(0.0).unwrap();
        let input = gaussian(10.0, 3.0, 0.05, 20.0);
        let c = ControlSchedule::continuous(20.0, 1.0).unwrap();
        let st = evolve(&input, &c, &m, Grid::new(17, 0.05).unwrap()).unwrap();
        for (k, v) in st.transmitted.values().iter().enumerate() {
            assert!((v - input.value_at(k as f64 * 0.05)).norm() < 1e-14, "k={k} {v} {}", input.value_at(k as f64 * 0.05));
        }
        assert!((st.ledger.leaked / st.ledger.input - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_snapshot_is_unexcited() {
        let m = MediumParams::resonant(5.0).unwrap();
        let input = gaussian(5.0, 2.0, 0.05, 10.0);
        let c = ControlSchedule::continuous(10.0, 1.0).unwrap();
        let st = evolve(&input, &c, &m, Grid::auto(&m, 1.0)).unwrap();
        assert_eq!(st.times[0], 0.0);
        assert!(st.p[0].iter().all(|v| *v == ZERO));
        assert!(st.s[0].iter().all(|v| *v == ZERO));
        assert!(st.times.len() > 100);
    }

    #[test]
    fn linear_in_input_amplitude() {
        let m = MediumParams::new(8.0, 0.01, 0.3).unwrap();
        let input = gaussian(8.0, 3.0, 0.05, 16.0);
        let c = ControlSchedule::store_retrieve(16.0, 1.0, 2.0, 16.0, 1.0, 0.5).unwrap();
        let g = Grid::new(33, 0.05).unwrap();
        let alpha = Complex64::new(3.0, -1.5);
        let a = evolve(&input, &c, &m, g).unwrap();
        let b = evolve(&input.scaled(alpha), &c, &m, g).unwrap();
        for (x, y) in a.transmitted.values().iter().zip(b.transmitted.values()) {
            assert!((x * alpha - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn blowup_reported_with_step_sizes() {
        let m = MediumParams::resonant(400.0).unwrap();
        let input = gaussian(5.0, 1.0, 0.5, 40.0);
        let c = ControlSchedule::off(40.0).unwrap();
        match evolve(&input, &c, &m, Grid::new(401, 0.5).unwrap()) {
            Err(Error::Unstable { dt, n_z, .. }) => {
                assert_eq!(dt, 0.5);
                assert_eq!(n_z, 401);
            }
            other => panic!("expected instability, got {:?}", other.map(|s| s.ledger)),
        }
    }

    #[test]
    fn dark_skip_matches_explicit_storage() {
        let m = MediumParams::new(10.0, 0.002, 0.0).unwrap();
        let input = gaussian(12.0, 5.0, 0.025, 25.0);
        let c = ControlSchedule::store_retrieve(25.0, 1.0, 60.0, 25.0, 1.0, 0.5).unwrap();
        let g = Grid::auto(&m, 1.0);
        let skipped = store_and_retrieve(&input, &c, &m, g).unwrap();
        let explicit = {
            let opts = EvolveOptions { snapshots: 0, settle: 1e9 };
            report_from(&evolve_with(&input, &c, &m, g, &opts).unwrap()).unwrap()
        };
        assert!((skipped.eta_total - explicit.eta_total).abs() < 1e-6 * explicit.eta_total.max(1e-3),
            "{} vs {}", skipped.eta_total, explicit.eta_total);
    }

    #[test]
    fn refinement_edge_cases() {
        let m = MediumParams::resonant(10.0).unwrap();
        let sc = Scenario {
            input: gaussian(15.0, 6.0, 0.05, 30.0),
            control: ControlSchedule::continuous(30.0, 1.0).unwrap(),
            medium: m,
        };
        let start = Grid::new(33, 0.1).unwrap();
        assert_eq!(refine_until_converged(&sc, f64::INFINITY, start).unwrap(), start);
        assert!(refine_until_converged(&sc, 0.0, start).is_err());
        let loose = refine_until_converged(&sc, 1e-2, start).unwrap();
        let tight = refine_until_converged(&sc, 5e-3, start).unwrap();
        assert!(tight.n_z >= loose.n_z && tight.dt <= loose.dt);
    }

    #[test]
    fn storage_needs_phases() {
        let m = MediumParams::resonant(10.0).unwrap();
        let input = gaussian(5.0, 2.0, 0.05, 10.0);
        let c = ControlSchedule::continuous(10.0, 1.0).unwrap();
        assert!(store_and_retrieve(&input, &c, &m, Grid::auto(&m, 1.0)).is_err());
    }
}
