//! Scenario execution: density x power sweeps, trapping ladders and the
//! two-cell geometry comparison.
//!
//! Rows come out ordered by (density, power) in config order whatever the
//! number of worker threads, and numbers are written in shortest
//! round-trip form, so a fixed config gives byte-identical CSV.

use crate::config::ScenarioConfig;
use crate::decoherence::{coherence_lifetime, gamma_s_from_lifetime};
use crate::error::{Error, Result};
use crate::optimizer::{pulse_duration, slow_light_run, StorageSetup};
use crate::propagation::{store_and_retrieve, Grid};
use crate::radtrap::{
    depolarized_fraction, effective_depth, rise_time, simulate_walks, trapping_ladder, CellGeometry, PumpModel,
    TrappingRow,
};
use crate::spectrum::fitted_eit_fwhm;
use crate::units::{optical_depth, rabi_at_power, MediumParams, PhysicalCell};

pub const SWEEP_COLUMNS: [&str; 11] = [
    "density",
    "d",
    "omega_c",
    "gamma_eit_fwhm",
    "delta_t_abs",
    "t_opt",
    "eta_stored",
    "eta_slow",
    "eta_leakage",
    "tau_coherence",
    "error",
];

pub const TRAPPING_COLUMNS: [&str; 5] = ["density", "mean_scatters", "rise_time_ns", "p_dep", "fwhm_proxy"];

pub const GEOMETRY_COLUMNS: [&str; 14] = [
    "cell",
    "length_cm",
    "diameter_cm",
    "quench",
    "density",
    "d",
    "mean_scatters",
    "std_scatters",
    "mean_residence_ns",
    "rise_time_ns",
    "p_dep",
    "d_eff",
    "eta_stored",
    "error",
];

/// One (density, control power) point. Times and rates are dimensionless
/// (units of the excited-state decay) except `tau_coherence`, in us.
/// Fields that could not be computed are NaN and `error` says why.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub density: f64,
    pub d: f64,
    pub omega_c: f64,
    pub gamma_eit_fwhm: f64,
    /// Peak delay relative to propagation through the empty cell.
    pub delta_t_abs: f64,
    pub t_opt: f64,
    pub eta_stored: f64,
    pub eta_slow: f64,
    pub eta_leakage: f64,
    pub tau_coherence: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn empty(density: f64) -> Self {
        SweepRow {
            density,
            d: f64::NAN,
            omega_c: f64::NAN,
            gamma_eit_fwhm: f64::NAN,
            delta_t_abs: f64::NAN,
            t_opt: f64::NAN,
            eta_stored: f64::NAN,
            eta_slow: f64::NAN,
            eta_leakage: f64::NAN,
            tau_coherence: f64::NAN,
            error: None,
        }
    }

    fn fields(&self) -> Vec<String> {
        let mut v: Vec<String> = [
            self.density,
            self.d,
            self.omega_c,
            self.gamma_eit_fwhm,
            self.delta_t_abs,
            self.t_opt,
            self.eta_stored,
            self.eta_slow,
            self.eta_leakage,
            self.tau_coherence,
        ]
        .iter()
        .map(|&x| num(x))
        .collect();
        v.push(self.error.clone().unwrap_or_default());
        v
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

fn write_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    write_csv(&SWEEP_COLUMNS, rows.iter().map(SweepRow::fields))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

/// Optimized pulse at one medium and what it does with the control left on
/// and after the configured storage time.
struct StoragePoint {
    t_opt: f64,
    delay: f64,
    eta_slow: f64,
    eta_stored: f64,
    eta_leakage: f64,
}

fn storage_point(cfg: &ScenarioConfig, medium: &MediumParams, omega: f64) -> Result<StoragePoint> {
    let units = cfg.units();
    let grid = Grid::auto(medium, omega);
    let setup = StorageSetup {
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        ..StorageSetup::new(omega)
    };
    let trace = setup.run(medium, grid, None)?;
    let t_opt = pulse_duration(&trace.input)?.value;
    let (delay, eta_slow) = slow_light_run(&trace.input, medium, omega, grid)?;
    let stored = StorageSetup {
        storage: units.time_from_us(cfg.storage_time_us),
        ..setup
    };
    let report = store_and_retrieve(&trace.input, &stored.control(medium, grid.dt)?, medium, grid)?;
    Ok(StoragePoint {
        t_opt,
        delay,
        eta_slow,
        eta_stored: report.eta_total,
        eta_leakage: report.eta_leakage,
    })
}

fn control_omega(cfg: &ScenarioConfig, power_mw: f64) -> Result<f64> {
    let rabi = rabi_at_power(power_mw, cfg.ref_power_mw, cfg.ref_rabi_mhz)?;
    Ok(cfg.units().rabi_from_mhz(rabi))
}

/// Everything for one (density, power) point; failures land in `error`.
pub fn sweep_point(cfg: &ScenarioConfig, density: f64, power_mw: f64) -> SweepRow {
    let mut row = SweepRow::empty(density);
    if let Err(e) = fill_sweep_point(cfg, density, power_mw, &mut row) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_sweep_point(cfg: &ScenarioConfig, density: f64, power_mw: f64, row: &mut SweepRow) -> Result<()> {
    row.d = optical_depth(&cfg.cell(density)?, &cfg.calibration())?;
    row.omega_c = control_omega(cfg, power_mw)?;
    row.tau_coherence = coherence_lifetime(&cfg.decoherence(), density)?;
    let gamma_s = gamma_s_from_lifetime(row.tau_coherence, Some(cfg.units().gamma_per_us))?;
    let medium = MediumParams::new(row.d, gamma_s, 0.0)?;
    row.gamma_eit_fwhm = fitted_eit_fwhm(&medium, row.omega_c)?.1.fwhm;
    let p = storage_point(cfg, &medium, row.omega_c)?;
    row.t_opt = p.t_opt;
    row.delta_t_abs = p.delay;
    row.eta_slow = p.eta_slow;
    row.eta_stored = p.eta_stored;
    row.eta_leakage = p.eta_leakage;
    Ok(())
}

/// One row per (density, power), densities outer, both in config order.
pub fn run_sweep(cfg: &ScenarioConfig, jobs: usize) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    let points: Vec<(f64, f64)> = cfg
        .densities
        .iter()
        .flat_map(|&n| cfg.control_powers_mw.iter().map(move |&p| (n, p)))
        .collect();
    Ok(pool(jobs)?.install(|| points.par_iter().map(|&(n, p)| sweep_point(cfg, n, p)).collect()))
}

/// Trapping ladder over the config densities in the baseline cell.
pub fn run_trapping(cfg: &ScenarioConfig, jobs: usize) -> Result<(Vec<TrappingRow>, PumpModel)> {
    let pump = cfg.pump_branching.map(PumpModel::new).transpose()?;
    pool(jobs)?.install(|| {
        trapping_ladder(
            &cfg.baseline_geometry(),
            &cfg.densities,
            &cfg.trapping(),
            &cfg.calibration(),
            pump,
        )
    })
}

pub fn trapping_csv(rows: &[TrappingRow]) -> String {
    write_csv(
        &TRAPPING_COLUMNS,
        rows.iter().map(|r| {
            [r.density, r.mean_scatters, r.rise_time_ns, r.p_dep, r.fwhm_proxy]
                .iter()
                .map(|&x| num(x))
                .collect()
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryRow {
    pub cell: String,
    pub geometry: CellGeometry,
    pub density: f64,
    pub d: f64,
    pub mean_scatters: f64,
    pub std_scatters: f64,
    pub mean_residence_ns: f64,
    pub rise_time_ns: f64,
    pub p_dep: f64,
    pub d_eff: f64,
    pub eta_stored: f64,
    pub error: Option<String>,
}

impl GeometryRow {
    fn fields(&self) -> Vec<String> {
        let mut v = vec![self.cell.clone()];
        v.extend(
            [
                self.geometry.length,
                2.0 * self.geometry.radius,
                self.geometry.quench,
                self.density,
                self.d,
                self.mean_scatters,
                self.std_scatters,
                self.mean_residence_ns,
                self.rise_time_ns,
                self.p_dep,
                self.d_eff,
                self.eta_stored,
            ]
            .iter()
            .map(|&x| num(x)),
        );
        v.push(self.error.clone().unwrap_or_default());
        v
    }
}

pub fn geometry_csv(rows: &[GeometryRow]) -> String {
    write_csv(&GEOMETRY_COLUMNS, rows.iter().map(GeometryRow::fields))
}

/// Baseline cell at `compare_density` against the elongated cell at the
/// density giving the same longitudinal optical depth, first unquenched
/// and then with the configured quench probability. Depolarization uses
/// `pump_branching`, or a pump calibrated on the baseline density ladder.
pub fn run_geometry_compare(cfg: &ScenarioConfig, jobs: usize) -> Result<Vec<GeometryRow>> {
    use rayon::prelude::*;
    let base = cfg.baseline_geometry();
    let long = cfg.elongated_geometry();
    let long_density = cfg.compare_density * base.length / long.length;
    let cells = [
        ("baseline", base, cfg.compare_density),
        ("elongated", CellGeometry { quench: 0.0, ..long }, long_density),
        ("elongated_quenched", long, long_density),
    ];
    let pump = match cfg.pump_branching {
        Some(b) => Ok(PumpModel::new(b)?),
        None => run_trapping(cfg, jobs).map(|(_, p)| p),
    };
    let omega = cfg
        .control_powers_mw
        .first()
        .map(|&p| control_omega(cfg, p))
        .ok_or_else(|| Error::Config("geometry comparison needs a control power".into()))??;
    pool(jobs)?.install(|| {
        Ok(cells
            .par_iter()
            .map(|(name, geom, density)| {
                let mut row = GeometryRow {
                    cell: name.to_string(),
                    geometry: *geom,
                    density: *density,
                    d: f64::NAN,
                    mean_scatters: f64::NAN,
                    std_scatters: f64::NAN,
                    mean_residence_ns: f64::NAN,
                    rise_time_ns: f64::NAN,
                    p_dep: f64::NAN,
                    d_eff: f64::NAN,
                    eta_stored: f64::NAN,
                    error: None,
                };
                if let Err(e) = fill_geometry_row(cfg, &pump, omega, &mut row) {
                    row.error = Some(e.to_string());
                }
                row
            })
            .collect())
    })
}

fn fill_geometry_row(cfg: &ScenarioConfig, pump: &Result<PumpModel>, omega: f64, row: &mut GeometryRow) -> Result<()> {
    let g = row.geometry;
    let cell = PhysicalCell::new(row.density, g.length, 2.0 * g.radius)?;
    row.d = optical_depth(&cell, &cfg.calibration())?;
    let t = cfg.trapping();
    let stats = simulate_walks(&g, row.density, t.cross_section, t.excited_lifetime, t.n_walkers, t.seed)?;
    row.mean_scatters = stats.mean_scatters;
    row.std_scatters = stats.std_scatters;
    row.mean_residence_ns = stats.mean_residence;
    // a heavily quenched cell can leave too few side escapes for a rise time
    row.rise_time_ns = rise_time(&stats).unwrap_or(f64::NAN);
    let pump = pump.clone()?;
    row.p_dep = depolarized_fraction(&stats, &pump);
    row.d_eff = effective_depth(row.d, row.p_dep);
    let tau = coherence_lifetime(&cfg.decoherence(), row.density)?;
    let gamma_s = gamma_s_from_lifetime(tau, Some(cfg.units().gamma_per_us))?;
    let medium = MediumParams::new(row.d_eff, gamma_s, 0.0)?;
    row.eta_stored = storage_point(cfg, &medium, omega)?.eta_stored;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            densities: vec![1e11, 2e11],
            control_powers_mw: vec![3.8, 8.8],
            walkers: 2000,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn empty_ladder_gives_header_only() {
        let cfg = ScenarioConfig {
            densities: vec![],
            ..ScenarioConfig::default()
        };
        let rows = run_sweep(&cfg, 2).unwrap();
        assert!(rows.is_empty());
        assert_eq!(sweep_csv(&rows), format!("{}\r\n", SWEEP_COLUMNS.join(",")));
    }

    #[test]
    fn sweep_rows_ordered_and_bounded() {
        let cfg = small();
        let rows = run_sweep(&cfg, 3).unwrap();
        let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.density, r.omega_c)).collect();
        let om = |p: f64| control_omega(&cfg, p).unwrap();
        assert_eq!(keys, vec![(1e11, om(3.8)), (1e11, om(8.8)), (2e11, om(3.8)), (2e11, om(8.8))]);
        for r in &rows {
            assert!(r.error.is_none(), "{:?}", r.error);
            for eta in [r.eta_stored, r.eta_slow, r.eta_leakage] {
                assert!((0.0..=1.0).contains(&eta), "{r:?}");
            }
        }
        // 3.8 mW is the reference point: Omega = 1 in these units
        assert!((rows[0].omega_c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn failures_recorded_per_point() {
        let cfg = ScenarioConfig {
            densities: vec![1e11],
            control_powers_mw: vec![3.8],
            max_iter: 1,
            tol: 1e-4,
            ..ScenarioConfig::default()
        };
        // an empty cell is rejected up front; the row survives with the message
        let row = sweep_point(&cfg, 0.0, 3.8);
        assert!(row.error.is_some());
        assert!(row.d.is_nan());
        let csv = sweep_csv(&[row]);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.starts_with("0,,"), "{line}");
        assert!(!line.ends_with(','), "{line}");
    }

    #[test]
    fn csv_quotes_messages() {
        let mut row = SweepRow::empty(1e11);
        row.error = Some("bad, \"quoted\" value".into());
        let csv = sweep_csv(&[row]);
        assert!(csv.contains("\"bad, \"\"quoted\"\" value\""), "{csv}");
    }
}
