//! Monte Carlo radiation trapping in a cylindrical vapor cell and the
//! absorption-linewidth proxy.
//!
//! A signal photon enters on the cell axis and is absorbed at an
//! exponentially distributed depth. Each excitation dwells for an
//! exponential time, is quenched with probability `q`, or re-emits
//! isotropically at line center (no frequency redistribution), flies an
//! exponential free path and is either re-absorbed or leaves the cell.
//!
//! Walker `i` draws from ChaCha8 stream `i` of the master seed, so the
//! statistics do not depend on how walkers are spread over threads.

use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::units::DepthCalibration;

pub const DEFAULT_LIFETIME_NS: f64 = 28.0;

/// Resonant cross-section for re-absorbed fluorescence, cm^2. Puts the
/// rise time of the 7.5 x 2.5 cm cell at 1e12 cm^-3 in the few-hundred ns
/// range.
pub const DEFAULT_CROSS_SECTION: f64 = 3e-12;

pub const MIN_WALKERS: usize = 1000;
const MIN_SIDE_ESCAPES: usize = 10;
const MAX_SCATTERS: u32 = 10_000_000;
const C_CM_PER_NS: f64 = 29.979_245_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    /// cm
    pub length: f64,
    /// cm
    pub radius: f64,
    /// Probability that an excitation is quenched instead of re-emitted.
    pub quench: f64,
}

impl CellGeometry {
    pub fn new(length: f64, radius: f64, quench: f64) -> Result<Self> {
        if !(length > 0.0 && radius > 0.0) || !length.is_finite() || !radius.is_finite() {
            return domain(format!("cell dimensions must be positive, got L={length} R={radius}"));
        }
        if !(0.0..=1.0).contains(&quench) {
            return domain(format!("quench probability must be in [0, 1], got {quench}"));
        }
        Ok(CellGeometry { length, radius, quench })
    }

    /// The 7.5 cm long, 2.5 cm diameter cell.
    pub fn baseline() -> Self {
        CellGeometry {
            length: 7.5,
            radius: 1.25,
            quench: 0.0,
        }
    }

    /// The 15 cm long, 1.2 cm diameter cell.
    pub fn elongated(quench: f64) -> Result<Self> {
        Self::new(15.0, 0.6, quench)
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.length / (2.0 * self.radius)
    }

    /// Radial optical depth `N sigma R`.
    pub fn transverse_depth(&self, density: f64, cross_section: f64) -> f64 {
        density * cross_section * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exit {
    Side,
    End,
    Quenched,
    /// Never absorbed (empty or transparent cell).
    Unabsorbed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkResult {
    pub n_scatters: u32,
    /// ns, one excited-state dwell per scatter plus flight time.
    pub residence_time: f64,
    pub exit: Exit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrappingStats {
    pub density: f64,
    pub excited_lifetime: f64,
    /// Probability that an incoming photon is absorbed at all.
    pub absorbed_fraction: f64,
    /// No absorption possible; every walker traversed the cell.
    pub degenerate: bool,
    pub mean_scatters: f64,
    pub std_scatters: f64,
    /// ns, over absorbed walkers.
    pub mean_residence: f64,
    pub n_side: usize,
    pub n_end: usize,
    pub n_quenched: usize,
    pub walks: Vec<WalkResult>,
}

impl TrappingStats {
    /// Residence times of walkers that left through the side wall, sorted.
    pub fn side_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .walks
            .iter()
            .filter(|w| w.exit == Exit::Side)
            .map(|w| w.residence_time)
            .collect();
        t.sort_by(f64::total_cmp);
        t
    }
}

fn exit_distance(pos: [f64; 3], dir: [f64; 3], geom: &CellGeometry) -> (f64, Exit) {
    let [x, y, z] = pos;
    let [ux, uy, uz] = dir;
    let a = ux * ux + uy * uy;
    let s_side = if a > 0.0 {
        let b = x * ux + y * uy;
        let c = (x * x + y * y - geom.radius * geom.radius).min(0.0);
        (-b + (b * b - a * c).sqrt()) / a
    } else {
        f64::INFINITY
    };
    let s_end = if uz > 0.0 {
        (geom.length - z) / uz
    } else if uz < 0.0 {
        -z / uz
    } else {
        f64::INFINITY
    };
    if s_side <= s_end {
        (s_side, Exit::Side)
    } else {
        (s_end, Exit::End)
    }
}

fn isotropic(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let cos_t: f64 = rng.gen_range(-1.0..=1.0);
    let phi = rng.gen_range(0.0..2.0 * PI);
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    [sin_t * phi.cos(), sin_t * phi.sin(), cos_t]
}

fn exp_sample(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    // 1 - u lies in (0, 1] so the log is finite
    -mean * (1.0 - rng.gen::<f64>()).ln()
}

fn walk(geom: &CellGeometry, kappa: f64, lifetime: f64, rng: &mut ChaCha8Rng) -> Result<WalkResult> {
    // entry depth conditioned on absorption inside the cell
    let absorbed = -(-kappa * geom.length).exp_m1();
    let u: f64 = rng.gen();
    let z0 = -(1.0 - u * absorbed).ln() / kappa;
    let mut pos = [0.0, 0.0, z0.min(geom.length)];
    let mut time = z0 / C_CM_PER_NS;
    let mut n = 0u32;
    loop {
        n += 1;
        if n > MAX_SCATTERS {
            return Err(Error::Statistics(format!(
                "walk exceeded {MAX_SCATTERS} scatters; optical depth is too large to simulate"
            )));
        }
        time += exp_sample(rng, lifetime);
        if geom.quench > 0.0 && rng.gen::<f64>() < geom.quench {
            return Ok(WalkResult {
                n_scatters: n,
                residence_time: time,
                exit: Exit::Quenched,
            });
        }
        let dir = isotropic(rng);
        let s = exp_sample(rng, 1.0 / kappa);
        let (s_exit, exit) = exit_distance(pos, dir, geom);
        if s >= s_exit {
            return Ok(WalkResult {
                n_scatters: n,
                residence_time: time + s_exit / C_CM_PER_NS,
                exit,
            });
        }
        time += s / C_CM_PER_NS;
        for (p, u) in pos.iter_mut().zip(dir) {
            *p += s * u;
        }
    }
}

/// Runs `n_walkers` independent photon walks.
///
/// `density` in cm^-3, `cross_section` in cm^2, `excited_lifetime` in ns.
pub fn simulate_walks(
    geometry: &CellGeometry,
    density: f64,
    cross_section: f64,
    excited_lifetime: f64,
    n_walkers: usize,
    seed: u64,
) -> Result<TrappingStats> {
    if n_walkers < MIN_WALKERS {
        return domain(format!("need at least {MIN_WALKERS} walkers, got {n_walkers}"));
    }
    if !(density >= 0.0 && density.is_finite()) || !(cross_section >= 0.0 && cross_section.is_finite()) {
        return domain("density and cross-section must be finite and non-negative");
    }
    if !(excited_lifetime > 0.0) {
        return domain(format!("excited-state lifetime must be positive, got {excited_lifetime}"));
    }
    let kappa = density * cross_section;
    let transit = geometry.length / C_CM_PER_NS;
    if !(kappa > 0.0) {
        let walks = vec![
            WalkResult {
                n_scatters: 0,
                residence_time: transit,
                exit: Exit::Unabsorbed,
            };
            n_walkers
        ];
        return Ok(TrappingStats {
            density,
            excited_lifetime,
            absorbed_fraction: 0.0,
            degenerate: true,
            mean_scatters: 0.0,
            std_scatters: 0.0,
            mean_residence: 0.0,
            n_side: 0,
            n_end: 0,
            n_quenched: 0,
            walks,
        });
    }

    let walks = (0..n_walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            walk(geometry, kappa, excited_lifetime, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let n = walks.len() as f64;
    let mean = walks.iter().map(|w| w.n_scatters as f64).sum::<f64>() / n;
    let var = walks
        .iter()
        .map(|w| (w.n_scatters as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    let count = |e: Exit| walks.iter().filter(|w| w.exit == e).count();
    Ok(TrappingStats {
        density,
        excited_lifetime,
        absorbed_fraction: -(-kappa * geometry.length).exp_m1(),
        degenerate: false,
        mean_scatters: mean,
        std_scatters: var.sqrt(),
        mean_residence: walks.iter().map(|w| w.residence_time).sum::<f64>() / n,
        n_side: count(Exit::Side),
        n_end: count(Exit::End),
        n_quenched: count(Exit::Quenched),
        walks,
    })
}

/// Time (ns) by which a fraction `1 - 1/e` of the side-escaping photons
/// have left: the rise time of side fluorescence after a step turn-on.
pub fn rise_time(stats: &TrappingStats) -> Result<f64> {
    let t = stats.side_times();
    if t.len() < MIN_SIDE_ESCAPES {
        return Err(Error::Statistics(format!(
            "{} side escapes, need at least {MIN_SIDE_ESCAPES}",
            t.len()
        )));
    }
    let x = (1.0 - (-1.0f64).exp()) * (t.len() - 1) as f64;
    let k = x.floor() as usize;
    let f = x - k as f64;
    Ok(if k + 1 < t.len() {
        t[k] * (1.0 - f) + t[k + 1] * f
    } else {
        t[k]
    })
}

/// Ground-state depolarization by scattered photons: every absorption of
/// a scattered photon leaves the atom outside the signal channel with
/// probability `branching`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpModel {
    pub branching: f64,
}

impl PumpModel {
    pub fn new(branching: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&branching) {
            return domain(format!("branching must be in [0, 1], got {branching}"));
        }
        Ok(PumpModel { branching })
    }

    /// Branching for which the effective optical depth `(1 - p_dep) d`
    /// is the same at the two highest points of a density ladder, so the
    /// linewidth proxy stops growing there. Needs the scatter count to
    /// grow between those points.
    pub fn saturating(ladder: &[TrappingStats]) -> Result<Self> {
        let [.., lo, hi] = ladder else {
            return domain("calibration needs at least two ladder points");
        };
        if !(hi.density > lo.density && lo.density > 0.0) {
            return domain("calibration ladder must have increasing positive densities");
        }
        let dn = hi.mean_scatters - lo.mean_scatters;
        if !(dn > 0.0) {
            return domain("mean scatter count does not grow along the ladder");
        }
        Self::new(1.0 - (lo.density / hi.density).powf(1.0 / dn))
    }
}

/// `p_dep = 1 - (1 - b)^<n>` with `<n>` the mean scatter count.
pub fn depolarized_fraction(stats: &TrappingStats, model: &PumpModel) -> f64 {
    if stats.degenerate || stats.mean_scatters == 0.0 {
        return 0.0;
    }
    1.0 - (1.0 - model.branching).powf(stats.mean_scatters)
}

/// Optical depth left for the signal after depolarization.
pub fn effective_depth(d: f64, p_dep: f64) -> f64 {
    (1.0 - p_dep) * d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinewidthProxy {
    /// Width of the detuning range where transmission is below one half, or
    /// for a thin line the FWHM of the absorption dip itself.
    pub fwhm: f64,
    /// `2 sqrt(2 d_eff / ln 2 - 1)`, when the line reaches half absorption.
    pub closed_form: Option<f64>,
    /// The line never absorbs half the light (`2 d_eff <= ln 2`).
    pub thin: bool,
}

/// Transmission `exp(-2 d_eff / (1 + Delta^2))`, with `Delta` in units of
/// half the natural linewidth.
pub fn absorption_transmission(d_eff: f64, delta: f64) -> f64 {
    (-2.0 * d_eff / (1.0 + delta * delta)).exp()
}

/// Width of the absorption line, extracted from `detuning_grid` by linear
/// interpolation and compared against the closed form when it exists.
pub fn absorption_linewidth_proxy(d_eff: f64, detuning_grid: &[f64]) -> Result<LinewidthProxy> {
    if !(d_eff >= 0.0 && d_eff.is_finite()) {
        return domain(format!("effective optical depth must be finite and non-negative, got {d_eff}"));
    }
    if detuning_grid.len() < 5 || detuning_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("detuning grid needs at least 5 strictly increasing points");
    }
    let absorption: Vec<f64> = detuning_grid
        .iter()
        .map(|&x| 1.0 - absorption_transmission(d_eff, x))
        .collect();
    let thin = 2.0 * d_eff <= LN_2;
    let level = if thin {
        0.5 * absorption.iter().cloned().fold(0.0, f64::max)
    } else {
        0.5
    };
    if !(level > 0.0) {
        return Err(Error::Fit("no absorption on the detuning grid".into()));
    }
    let first = absorption.iter().position(|&a| a >= level);
    let last = absorption.iter().rposition(|&a| a >= level);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) if f > 0 && l + 1 < absorption.len() => (f, l),
        _ => return Err(Error::Fit("absorption line is wider than the detuning grid".into())),
    };
    let cross = |i: usize, j: usize| {
        let (a, b) = (absorption[i], absorption[j]);
        detuning_grid[i] + (level - a) / (b - a) * (detuning_grid[j] - detuning_grid[i])
    };
    let fwhm = cross(last + 1, last) - cross(first - 1, first);
    let closed_form = (!thin).then(|| 2.0 * (2.0 * d_eff / LN_2 - 1.0).sqrt());
    Ok(LinewidthProxy { fwhm, closed_form, thin })
}

/// Detuning grid wide enough for the proxy at `d_eff`.
pub fn proxy_grid(d_eff: f64, n: usize) -> Vec<f64> {
    let half = 2.0 * (2.0 * d_eff / LN_2).max(1.0).sqrt() + 4.0;
    (0..n)
        .map(|k| -half + 2.0 * half * k as f64 / (n - 1) as f64)
        .collect()
}

/// One density point of a trapping ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingRow {
    pub density: f64,
    pub d: f64,
    pub mean_scatters: f64,
    pub rise_time_ns: f64,
    pub p_dep: f64,
    pub fwhm_proxy: f64,
}


#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingParams {
    pub cross_section: f64,
    pub excited_lifetime: f64,
    pub n_walkers: usize,
    pub seed: u64,
}

impl Default for TrappingParams {
    fn default() -> Self {
        TrappingParams {
            cross_section: DEFAULT_CROSS_SECTION,
            excited_lifetime: DEFAULT_LIFETIME_NS,
            n_walkers: 10_000,
            seed: 1,
        }
    }
}

/// Walks at each density, then the linewidth proxy with depolarization
/// from `pump` (or, if `None`, a pump calibrated to saturate at the top
/// of the ladder).
pub fn trapping_ladder(
    geometry: &CellGeometry,
    densities: &[f64],
    params: &TrappingParams,
    calibration: &DepthCalibration,
    pump: Option<PumpModel>,
) -> Result<(Vec<TrappingRow>, PumpModel)> {
    let stats = densities
        .iter()
        .map(|&n| {
            simulate_walks(
                geometry,
                n,
                params.cross_section,
                params.excited_lifetime,
                params.n_walkers,
                params.seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let pump = match pump {
        Some(p) => p,
        None => PumpModel::saturating(&stats)?,
    };
    let rows = stats
        .iter()
        .map(|s| {
            let d = calibration.coefficient() * s.density * geometry.length;
            let p_dep = depolarized_fraction(s, &pump);
            let d_eff = effective_depth(d, p_dep);
            Ok(TrappingRow {
                density: s.density,
                d,
                mean_scatters: s.mean_scatters,
                rise_time_ns: rise_time(s)?,
                p_dep,
                fwhm_proxy: absorption_linewidth_proxy(d_eff, &proxy_grid(d_eff, 4001))?.fwhm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, pump))
}
