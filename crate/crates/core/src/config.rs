//! Flat `key = value` scenario files.
//!
//! One setting per line, `#` starts a comment, lists are comma separated.
//! Unknown and duplicate keys are rejected, and every problem in a file is
//! reported at once. [`KEYS`] is the complete list of accepted keys.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::decoherence::{DecoherenceModel, DEFAULT_K_SE, DEFAULT_TAU0_US};
use crate::radtrap::{CellGeometry, TrappingParams, DEFAULT_CROSS_SECTION, DEFAULT_LIFETIME_NS};
use crate::units::{DepthCalibration, PhysicalCell, UnitSystem};

pub struct KeySpec {
    pub key: &'static str,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
    pub doc: &'static str,
}

const fn key(key: &'static str, default: Option<&'static str>, doc: &'static str) -> KeySpec {
    KeySpec { key, default, doc }
}

/// Every accepted key, in canonical order.
pub const KEYS: &[KeySpec] = &[
    key("gamma_mhz", None, "excited-state coherence decay rate gamma / 2 pi, MHz"),
    key("cell_length_cm", Some("7.5"), "cell length"),
    key("cell_diameter_cm", Some("2.5"), "cell diameter"),
    key("depth_ref_density", Some("4e10"), "density (cm^-3) of the optical-depth calibration point"),
    key("depth_ref_length_cm", Some("7.5"), "cell length of the calibration point"),
    key("depth_ref_d", Some("4"), "optical depth at the calibration point"),
    key("ref_power_mw", Some("3.8"), "control power of the Rabi calibration"),
    key("ref_rabi_mhz", Some("6.7"), "control Rabi frequency at ref_power_mw, MHz"),
    key("control_powers_mw", None, "comma-separated control powers, mW"),
    key("densities", None, "comma-separated atomic densities, cm^-3 (may be empty)"),
    key("storage_time_us", None, "dark storage time for stored-light efficiencies"),
    key("tau0_us", Some("700"), "coherence lifetime at zero density"),
    key("k_se", Some("3e-15"), "density-proportional spin decay, per (cm^-3 us)"),
    key("max_iter", Some("50"), "optimizer iteration cap"),
    key("tol", Some("1e-4"), "optimizer convergence tolerance on efficiency"),
    key("cross_section_cm2", Some("3e-12"), "resonant cross-section for trapped fluorescence"),
    key("excited_lifetime_ns", Some("28"), "excited-state lifetime"),
    key("walkers", Some("10000"), "Monte Carlo photons per density"),
    key("quench", Some("0"), "quench probability in the baseline cell"),
    key("elongated_length_cm", Some("15"), "length of the comparison cell"),
    key("elongated_diameter_cm", Some("1.2"), "diameter of the comparison cell"),
    key("elongated_quench", Some("0.9"), "quench probability in the comparison cell"),
    key("compare_density", Some("2e11"), "baseline-cell density for the geometry comparison"),
    key("pump_branching", Some(""), "per-scatter depolarization probability; empty calibrates it from the density ladder"),
    key("seed", Some("1"), "master RNG seed"),
    key("output_dir", Some("out"), "directory for CSV and JSON output"),
];

/// One problem found in a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based; 0 for whole-file problems such as a missing key.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}: {}", self.line, self.key, self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} config violation(s):\n{}", .0.len(), .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub gamma_mhz: f64,
    pub cell_length_cm: f64,
    pub cell_diameter_cm: f64,
    pub depth_ref_density: f64,
    pub depth_ref_length_cm: f64,
    pub depth_ref_d: f64,
    pub ref_power_mw: f64,
    pub ref_rabi_mhz: f64,
    pub control_powers_mw: Vec<f64>,
    pub densities: Vec<f64>,
    pub storage_time_us: f64,
    pub tau0_us: f64,
    pub k_se: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub cross_section_cm2: f64,
    pub excited_lifetime_ns: f64,
    pub walkers: usize,
    pub quench: f64,
    pub elongated_length_cm: f64,
    pub elongated_diameter_cm: f64,
    pub elongated_quench: f64,
    pub compare_density: f64,
    pub pump_branching: Option<f64>,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for ScenarioConfig {
    /// The reference scenario: the 4e10 to 1e12 cm^-3 density range at the two
    /// control powers and 400 us storage.
    fn default() -> Self {
        ScenarioConfig {
            gamma_mhz: 6.7,
            cell_length_cm: 7.5,
            cell_diameter_cm: 2.5,
            depth_ref_density: 4e10,
            depth_ref_length_cm: 7.5,
            depth_ref_d: 4.0,
            ref_power_mw: 3.8,
            ref_rabi_mhz: 6.7,
            control_powers_mw: vec![3.8, 8.8],
            densities: vec![4e10, 1e11, 2e11, 4e11, 7e11, 1e12],
            storage_time_us: 400.0,
            tau0_us: DEFAULT_TAU0_US,
            k_se: DEFAULT_K_SE,
            max_iter: 50,
            tol: 1e-4,
            cross_section_cm2: DEFAULT_CROSS_SECTION,
            excited_lifetime_ns: DEFAULT_LIFETIME_NS,
            walkers: 10_000,
            quench: 0.0,
            elongated_length_cm: 15.0,
            elongated_diameter_cm: 1.2,
            elongated_quench: 0.9,
            compare_density: 2e11,
            pump_branching: None,
            seed: 1,
            output_dir: "out".into(),
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw: HashMap<&str, (usize, &str)> = HashMap::new();
        let mut bad = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bad.push(Violation {
                    line: n,
                    key: line.to_string(),
                    message: "expected `key = value`".into(),
                });
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|s| s.key == k) {
                bad.push(Violation {
                    line: n,
                    key: k.to_string(),
                    message: format!("unknown key `{k}`"),
                });
            } else if let Some((first, _)) = raw.insert(k, (n, v)) {
                bad.push(Violation {
                    line: n,
                    key: k.to_string(),
                    message: format!("duplicate key, first set on line {first}"),
                });
            }
        }

        let mut r = Reader { raw, bad };
        let num = Num::default();
        let pos = Num { min: Some(0.0), open: true, ..num };
        let nonneg = Num { min: Some(0.0), ..num };
        let prob = Num { min: Some(0.0), max: Some(1.0), ..num };
        let cfg = ScenarioConfig {
            gamma_mhz: r.f64("gamma_mhz", pos),
            cell_length_cm: r.f64("cell_length_cm", pos),
            cell_diameter_cm: r.f64("cell_diameter_cm", pos),
            depth_ref_density: r.f64("depth_ref_density", pos),
            depth_ref_length_cm: r.f64("depth_ref_length_cm", pos),
            depth_ref_d: r.f64("depth_ref_d", nonneg),
            ref_power_mw: r.f64("ref_power_mw", pos),
            ref_rabi_mhz: r.f64("ref_rabi_mhz", pos),
            control_powers_mw: r.list("control_powers_mw", pos),
            densities: r.list("densities", Num { max: Some(1e15), ..pos }),
            storage_time_us: r.f64("storage_time_us", nonneg),
            tau0_us: r.f64("tau0_us", pos),
            k_se: r.f64("k_se", nonneg),
            max_iter: r.int("max_iter", 1),
            tol: r.f64("tol", pos),
            cross_section_cm2: r.f64("cross_section_cm2", pos),
            excited_lifetime_ns: r.f64("excited_lifetime_ns", pos),
            walkers: r.int("walkers", crate::radtrap::MIN_WALKERS),
            quench: r.f64("quench", prob),
            elongated_length_cm: r.f64("elongated_length_cm", pos),
            elongated_diameter_cm: r.f64("elongated_diameter_cm", pos),
            elongated_quench: r.f64("elongated_quench", prob),
            compare_density: r.f64("compare_density", pos),
            pump_branching: r.optional_f64("pump_branching", prob),
            seed: r.int("seed", 0) as u64,
            output_dir: r.string("output_dir"),
        };
        if r.bad.is_empty() {
            let mut sorted = cfg.densities.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            if sorted.len() != cfg.densities.len() {
                r.bad.push(Violation {
                    line: r.line("densities"),
                    key: "densities".into(),
                    message: "repeated density".into(),
                });
            }
        }
        if r.bad.is_empty() {
            Ok(cfg)
        } else {
            r.bad.sort_by_key(|v| v.line);
            Err(ConfigError::Invalid(r.bad))
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical `key = value` text; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let pump = self.pump_branching.map(|p| p.to_string()).unwrap_or_default();
        let pairs: [(&str, String); 26] = [
            ("gamma_mhz", self.gamma_mhz.to_string()),
            ("cell_length_cm", self.cell_length_cm.to_string()),
            ("cell_diameter_cm", self.cell_diameter_cm.to_string()),
            ("depth_ref_density", self.depth_ref_density.to_string()),
            ("depth_ref_length_cm", self.depth_ref_length_cm.to_string()),
            ("depth_ref_d", self.depth_ref_d.to_string()),
            ("ref_power_mw", self.ref_power_mw.to_string()),
            ("ref_rabi_mhz", self.ref_rabi_mhz.to_string()),
            ("control_powers_mw", fmt_list(&self.control_powers_mw)),
            ("densities", fmt_list(&self.densities)),
            ("storage_time_us", self.storage_time_us.to_string()),
            ("tau0_us", self.tau0_us.to_string()),
            ("k_se", self.k_se.to_string()),
            ("max_iter", self.max_iter.to_string()),
            ("tol", self.tol.to_string()),
            ("cross_section_cm2", self.cross_section_cm2.to_string()),
            ("excited_lifetime_ns", self.excited_lifetime_ns.to_string()),
            ("walkers", self.walkers.to_string()),
            ("quench", self.quench.to_string()),
            ("elongated_length_cm", self.elongated_length_cm.to_string()),
            ("elongated_diameter_cm", self.elongated_diameter_cm.to_string()),
            ("elongated_quench", self.elongated_quench.to_string()),
            ("compare_density", self.compare_density.to_string()),
            ("pump_branching", pump),
            ("seed", self.seed.to_string()),
            ("output_dir", self.output_dir.clone()),
        ];
        pairs.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// `(key, value)` pairs in canonical order, for echoing.
    pub fn entries(&self) -> Vec<(String, String)> {
        self.to_text()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    pub fn units(&self) -> UnitSystem {
        UnitSystem {
            gamma_per_us: 2.0 * std::f64::consts::PI * self.gamma_mhz,
            length_cm: self.cell_length_cm,
        }
    }

    pub fn calibration(&self) -> DepthCalibration {
        DepthCalibration {
            density_ref: self.depth_ref_density,
            length_ref: self.depth_ref_length_cm,
            d_ref: self.depth_ref_d,
        }
    }

    pub fn cell(&self, density: f64) -> crate::Result<PhysicalCell> {
        PhysicalCell::new(density, self.cell_length_cm, self.cell_diameter_cm)
    }

    pub fn decoherence(&self) -> DecoherenceModel {
        DecoherenceModel {
            tau0: self.tau0_us,
            k_se: self.k_se,
        }
    }

    pub fn baseline_geometry(&self) -> CellGeometry {
        CellGeometry {
            length: self.cell_length_cm,
            radius: 0.5 * self.cell_diameter_cm,
            quench: self.quench,
        }
    }

    pub fn elongated_geometry(&self) -> CellGeometry {
        CellGeometry {
            length: self.elongated_length_cm,
            radius: 0.5 * self.elongated_diameter_cm,
            quench: self.elongated_quench,
        }
    }

    pub fn trapping(&self) -> TrappingParams {
        TrappingParams {
            cross_section: self.cross_section_cm2,
            excited_lifetime: self.excited_lifetime_ns,
            n_walkers: self.walkers,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Num {
    min: Option<f64>,
    max: Option<f64>,
    /// Exclude `min` itself.
    open: bool,
}

impl Num {
    fn check(&self, x: f64) -> Option<String> {
        if !x.is_finite() {
            return Some(format!("{x} is not finite"));
        }
        if let Some(lo) = self.min {
            if x < lo || (self.open && x == lo) {
                let rel = if self.open { ">" } else { ">=" };
                return Some(format!("{x} out of range: must be {rel} {lo}"));
            }
        }
        if let Some(hi) = self.max {
            if x > hi {
                return Some(format!("{x} out of range: must be <= {hi}"));
            }
        }
        None
    }
}

struct Reader<'a> {
    raw: HashMap<&'a str, (usize, &'a str)>,
    bad: Vec<Violation>,
}

impl<'a> Reader<'a> {
    fn line(&self, k: &str) -> usize {
        self.raw.get(k).map_or(0, |e| e.0)
    }

    fn fail(&mut self, k: &str, message: String) {
        self.bad.push(Violation {
            line: self.line(k),
            key: k.to_string(),
            message,
        });
    }

    /// The raw value, or the default, or a violation for a missing key.
    fn value(&mut self, k: &str) -> Option<&'a str> {
        if let Some(&(_, v)) = self.raw.get(k) {
            return Some(v);
        }
        let spec = KEYS.iter().find(|s| s.key == k).expect("key is listed");
        match spec.default {
            Some(d) => Some(d),
            None => {
                self.fail(k, "required key is missing".into());
                None
            }
        }
    }

    fn parse_num(&mut self, k: &str, s: &str, range: Num) -> Option<f64> {
        match s.parse::<f64>() {
            Ok(x) => match range.check(x) {
                None => Some(x),
                Some(msg) => {
                    self.fail(k, msg);
                    None
                }
            },
            Err(_) => {
                self.fail(k, format!("`{s}` is not a number"));
                None
            }
        }
    }

    fn f64(&mut self, k: &str, range: Num) -> f64 {
        self.value(k)
            .and_then(|s| self.parse_num(k, s, range))
            .unwrap_or(f64::NAN)
    }

    fn optional_f64(&mut self, k: &str, range: Num) -> Option<f64> {
        let s = self.value(k)?;
        if s.is_empty() {
            return None;
        }
        self.parse_num(k, s, range)
    }

    fn list(&mut self, k: &str, range: Num) -> Vec<f64> {
        let Some(s) = self.value(k) else {
            return Vec::new();
        };
        if s.is_empty() {
            return Vec::new();
        }
        s.split(',')
            .filter_map(|item| self.parse_num(k, item.trim(), range))
            .collect()
    }

    fn int(&mut self, k: &str, min: usize) -> usize {
        let Some(s) = self.value(k) else { return 0 };
        match s.parse::<u64>() {
            Ok(x) if x as usize >= min => x as usize,
            Ok(x) => {
                self.fail(k, format!("{x} out of range: must be >= {min}"));
                0
            }
            Err(_) => {
                self.fail(k, format!("`{s}` is not a non-negative integer"));
                0
            }
        }
    }

    fn string(&mut self, k: &str) -> String {
        match self.value(k) {
            Some("") => {
                self.fail(k, "must not be empty".into());
                String::new()
            }
            Some(s) => s.to_string(),
            None => String::new(),
        }
    }
}
