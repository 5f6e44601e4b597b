//! Run configuration: `key = value` lines with dotted namespaces.
//!
//! ```text
//! # comment
//! system.kc = -393.5        # trailing comments are allowed
//! forcing.noise.target = 1
//! ```
//!
//! Every key has a fixed unit (see [`KEYS`]). Unknown keys, duplicate keys
//! and out-of-range values are rejected before anything is computed. Keys
//! that are absent take the listed default; `system.*` defaults to the
//! reference design.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::noisebudget::{ElectrodeGeometry, Environment, ReadoutConfig, TotalConvention, TransducerConfig};
use crate::resolution::SensitivitySource;
use crate::spectral::DbConvention;
use crate::sysmodel::SystemConfig;
use crate::timesim::{NoiseTarget, Resonator};

pub struct KeySpec {
    pub key: &'static str,
    pub unit: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(key: &'static str, unit: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        unit,
        default,
        help,
    }
}

/// Every accepted key.
pub const KEYS: &[KeySpec] = &[
    key("system.m1", "kg", "reference", "mass of resonator 1"),
    key("system.m2", "kg", "reference", "mass of resonator 2"),
    key("system.km1", "N/m", "reference", "mechanical spring of resonator 1"),
    key("system.km2", "N/m", "reference", "mechanical spring of resonator 2"),
    key(
        "system.kc",
        "N/m",
        "-393.5",
        "coupling spring (negative: electrostatic)",
    ),
    key("system.c1", "N*s/m", "0.0031", "damping of resonator 1"),
    key("system.c2", "N*s/m", "0.0031", "damping of resonator 2"),
    key("system.cc", "N*s/m", "0.0031", "coupling damper"),
    key("env.temperature", "K", "300", "temperature"),
    key("env.bandwidth", "Hz", "10", "measurement bandwidth around each mode"),
    key("transducer.eta", "C/m", "-", "transduction factor"),
    key(
        "transducer.r_x",
        "ohm",
        "-",
        "motional resistance (derived as c/eta^2 when absent)",
    ),
    key(
        "transducer.v_dc",
        "V",
        "-",
        "polarization voltage (geometry form of eta)",
    ),
    key("transducer.epsilon", "F/m", "-", "permittivity (geometry form of eta)"),
    key("transducer.area", "m^2", "-", "electrode area (geometry form of eta)"),
    key("transducer.gap", "m", "-", "electrode gap (geometry form of eta)"),
    key(
        "transducer.consistency_tolerance",
        "1",
        "0.25",
        "allowed relative mismatch of r_x*eta^2 vs c",
    ),
    key("readout.r_f", "ohm", "1e6", "feedback resistor"),
    key(
        "readout.i_n",
        "A/sqrt(Hz)",
        "2e-14",
        "amplifier input current noise density",
    ),
    key(
        "readout.v_n",
        "V/sqrt(Hz)",
        "7e-8",
        "amplifier input voltage noise density",
    ),
    key("readout.neb_factor", "1", "1.57", "noise-equivalent bandwidth factor"),
    key("sim.dt", "s", "1/(50*f2)", "integration step"),
    key("sim.duration", "s", "10", "simulated time"),
    key("sim.decimation", "1", "1", "record every n-th step"),
    key("sim.x1_0", "m", "0", "initial displacement of resonator 1"),
    key("sim.v1_0", "m/s", "0", "initial velocity of resonator 1"),
    key("sim.x2_0", "m", "0", "initial displacement of resonator 2"),
    key("sim.v2_0", "m/s", "0", "initial velocity of resonator 2"),
    key(
        "sim.analysis_start",
        "1",
        "0.5",
        "fraction of the run discarded before analysis",
    ),
    key(
        "forcing.harmonic.amplitude",
        "N",
        "-",
        "peak drive force; enables the harmonic drive",
    ),
    key("forcing.harmonic.target", "1|2", "1", "driven resonator"),
    key(
        "forcing.harmonic.frequency",
        "Hz|f1|f2",
        "f1",
        "drive frequency or a mode",
    ),
    key("forcing.harmonic.phase", "rad", "0", "drive phase"),
    key(
        "forcing.noise.target",
        "none|1|2|both",
        "none",
        "resonators receiving the thermal force",
    ),
    key(
        "forcing.noise.psd",
        "N^2/Hz|thermal",
        "thermal",
        "one-sided force PSD; thermal = 4*kB*T*c",
    ),
    key(
        "forcing.seed",
        "integer",
        "-",
        "noise seed (required for stochastic runs)",
    ),
    key("psd.segment_length", "samples", "pow2 <= N/8", "Welch segment length"),
    key("psd.overlap", "1", "0.5", "Welch overlap fraction"),
    key(
        "analysis.db_convention",
        "paper|power",
        "paper",
        "dB convention of summaries",
    ),
    key(
        "budget.x_psd_source",
        "analytic|paper|simulated",
        "analytic",
        "displacement-noise PSD at the modes",
    ),
    key(
        "budget.x_psd_mode1",
        "m^2/Hz",
        "-",
        "displacement-noise PSD at mode 1 (paper source)",
    ),
    key(
        "budget.x_psd_mode2",
        "m^2/Hz",
        "-",
        "displacement-noise PSD at mode 2 (paper source)",
    ),
    key(
        "budget.resonator",
        "1|2",
        "1",
        "resonator whose displacement noise is budgeted",
    ),
    key(
        "budget.eta_thermal",
        "C/m",
        "transducer.eta",
        "transduction factor for the noise-current rows",
    ),
    key(
        "resolution.amplitude_source",
        "analytic|paper",
        "analytic",
        "modal displacement amplitudes",
    ),
    key(
        "resolution.x11",
        "m",
        "-",
        "peak displacement, resonator 1, mode 1 (paper source)",
    ),
    key(
        "resolution.x21",
        "m",
        "-",
        "peak displacement, resonator 2, mode 1 (paper source)",
    ),
    key(
        "resolution.x12",
        "m",
        "-",
        "peak displacement, resonator 1, mode 2 (paper source)",
    ),
    key(
        "resolution.x22",
        "m",
        "-",
        "peak displacement, resonator 2, mode 2 (paper source)",
    ),
    key(
        "resolution.drive_amplitude",
        "N",
        "7.45e-5",
        "peak drive on resonator 1 (analytic source)",
    ),
    key(
        "resolution.sensitivity_source",
        "formula|paper_simulated",
        "formula",
        "AR sensitivity per dk",
    ),
    key(
        "resolution.ar_resolution_override",
        "1",
        "-",
        "AR resolution used for the minimum detectable stiffness",
    ),
    key(
        "resolution.noise_total",
        "paper|integrated",
        "paper",
        "electronic total used for the noise voltage",
    ),
    key("sweep.kc", "N/m list", "-393.5, -1000", "coupling springs to sweep"),
    key(
        "sweep.simulate",
        "bool",
        "false",
        "also simulate the thermal noise floor per point",
    ),
    key("output.dir", "path", "out", "output directory"),
];

/// Key table for `--help`.
pub fn key_help() -> String {
    let mut out = String::from("Configuration keys (key = value, one per line, '#' comments):\n");
    for k in KEYS {
        let _ = writeln!(out, "  {:<38} [{}] default {}: {}", k.key, k.unit, k.default, k.help);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrequencySpec {
    Hz(f64),
    Mode1,
    Mode2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicSettings {
    pub target: Resonator,
    pub amplitude: f64,
    pub frequency: FrequencySpec,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsdSpec {
    Thermal,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSettings {
    pub target: NoiseTarget,
    pub psd: PsdSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSettings {
    pub harmonic: Option<HarmonicSettings>,
    pub noise: Option<NoiseSettings>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub dt: Option<f64>,
    pub duration: f64,
    pub decimation: usize,
    pub initial_state: [f64; 4],
    pub analysis_start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdSettings {
    pub segment_length: Option<usize>,
    pub overlap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XPsdSource {
    Analytic,
    Paper([f64; 2]),
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSettings {
    pub x_psd_source: XPsdSource,
    pub resonator: Resonator,
    pub eta_thermal: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeSource {
    /// `|h_j1(f_i)|·F` for a peak drive `F` on resonator 1.
    Analytic { drive_amplitude: f64 },
    /// `x[j][i]` as given.
    Paper([[f64; 2]; 2]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionSettings {
    pub amplitude_source: AmplitudeSource,
    pub sensitivity_source: SensitivitySource,
    pub ar_resolution_override: Option<f64>,
    pub noise_total: TotalConvention,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub kc: Vec<f64>,
    pub simulate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub env: Environment,
    pub transducer: TransducerConfig,
    pub readout: ReadoutConfig,
    pub sim: SimSettings,
    pub forcing: ForcingSettings,
    pub psd: PsdSettings,
    pub db_convention: DbConvention,
    pub budget: BudgetSettings,
    pub resolution: ResolutionSettings,
    pub sweep: SweepSettings,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse("").expect("empty configuration is valid")
    }
}

struct Fields {
    map: BTreeMap<String, (String, usize)>,
}

impl Fields {
    fn raw(&mut self, key: &str) -> Option<(String, usize)> {
        debug_assert!(KEYS.iter().any(|k| k.key == key), "unregistered key {key}");
        self.map.remove(key)
    }

    fn err(key: &str, line: usize, reason: impl std::fmt::Display) -> Error {
        Error::config(key, format!("line {line}: {reason}"))
    }

    fn f64_opt(&mut self, key: &str, check: Check) -> Result<Option<f64>> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(None);
        };
        let x: f64 = v
            .parse()
            .map_err(|_| Self::err(key, line, format!("expected a number, got `{v}`")))?;
        if !x.is_finite() {
            return Err(Self::err(key, line, "must be finite"));
        }
        let ok = match check {
            Check::Any => true,
            Check::Positive => x > 0.0,
            Check::NonNegative => x >= 0.0,
            Check::Fraction => (0.0..1.0).contains(&x),
        };
        if !ok {
            return Err(Self::err(key, line, format!("{x} violates {}", check.describe())));
        }
        Ok(Some(x))
    }

    fn f64_or(&mut self, key: &str, check: Check, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key, check)?.unwrap_or(default))
    }

    fn str_opt(&mut self, key: &str) -> Option<(String, usize)> {
        self.raw(key)
    }

    fn choice<T: Copy>(&mut self, key: &str, default: T, options: &[(&str, T)]) -> Result<T> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(default);
        };
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                Self::err(key, line, format!("expected one of {}, got `{v}`", names.join("|")))
            })
    }

    fn uint_opt(&mut self, key: &str, min: u64) -> Result<Option<u64>> {
        let Some((v, line)) = self.raw(key) else {
            return Ok(None);
        };
        let n: u64 = v
            .parse()
            .map_err(|_| Self::err(key, line, format!("expected a non-negative integer, got `{v}`")))?;
        if n < min {
            return Err(Self::err(key, line, format!("must be >= {min}")));
        }
        Ok(Some(n))
    }
}

#[derive(Clone, Copy)]
enum Check {
    Any,
    Positive,
    NonNegative,
    Fraction,
}

impl Check {
    fn describe(&self) -> &'static str {
        match self {
            Check::Any => "nothing",
            Check::Positive => "> 0",
            Check::NonNegative => ">= 0",
            Check::Fraction => "0 <= value < 1",
        }
    }
}

const RESONATOR: &[(&str, Resonator)] = &[("1", Resonator::One), ("2", Resonator::Two)];

fn parse_lines(text: &str) -> Result<BTreeMap<String, (String, usize)>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("line {line_no}: expected `key = value`")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.iter().any(|spec| spec.key == k) {
            return Err(Error::config(k, format!("line {line_no}: unknown key")));
        }
        if v.is_empty() {
            return Err(Error::config(k, format!("line {line_no}: missing value")));
        }
        if map.insert(k.to_string(), (v.to_string(), line_no)).is_some() {
            return Err(Error::config(k, format!("line {line_no}: duplicate key")));
        }
    }
    Ok(map)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut f = Fields {
            map: parse_lines(text)?,
        };
        let reference = SystemConfig::reference();

        let system = SystemConfig {
            m1: f.f64_or("system.m1", Check::Positive, reference.m1)?,
            m2: f.f64_or("system.m2", Check::Positive, reference.m2)?,
            km1: f.f64_or("system.km1", Check::Positive, reference.km1)?,
            km2: f.f64_or("system.km2", Check::Positive, reference.km2)?,
            kc: f.f64_or("system.kc", Check::Any, reference.kc)?,
            c1: f.f64_or("system.c1", Check::NonNegative, reference.c1)?,
            c2: f.f64_or("system.c2", Check::NonNegative, reference.c2)?,
            cc: f.f64_or("system.cc", Check::NonNegative, reference.cc)?,
        };
        system.validate().map_err(|e| Error::config("system", e.to_string()))?;

        let env = Environment {
            temperature: f.f64_or("env.temperature", Check::NonNegative, 300.0)?,
            bandwidth: f.f64_or("env.bandwidth", Check::Positive, 10.0)?,
        };

        let geometry_parts = [
            f.f64_opt("transducer.v_dc", Check::Positive)?,
            f.f64_opt("transducer.epsilon", Check::Positive)?,
            f.f64_opt("transducer.area", Check::Positive)?,
            f.f64_opt("transducer.gap", Check::Positive)?,
        ];
        let geometry = match geometry_parts {
            [Some(v_dc), Some(epsilon), Some(area), Some(gap)] => Some(ElectrodeGeometry {
                v_dc,
                epsilon,
                area,
                gap,
            }),
            [None, None, None, None] => None,
            _ => {
                return Err(Error::config(
                    "transducer.v_dc",
                    "geometry needs all of v_dc, epsilon, area and gap",
                ))
            }
        };
        let transducer = TransducerConfig {
            eta: f.f64_opt("transducer.eta", Check::Positive)?,
            r_x: f.f64_opt("transducer.r_x", Check::Positive)?,
            geometry,
            consistency_tolerance: f.f64_or("transducer.consistency_tolerance", Check::Positive, 0.25)?,
        };

        let d = ReadoutConfig::default();
        let readout = ReadoutConfig {
            r_f: f.f64_or("readout.r_f", Check::Positive, d.r_f)?,
            i_n: f.f64_or("readout.i_n", Check::NonNegative, d.i_n)?,
            v_n: f.f64_or("readout.v_n", Check::NonNegative, d.v_n)?,
            neb_factor: f.f64_or("readout.neb_factor", Check::Positive, d.neb_factor)?,
        };

        let sim = SimSettings {
            dt: f.f64_opt("sim.dt", Check::Positive)?,
            duration: f.f64_or("sim.duration", Check::Positive, 10.0)?,
            decimation: f.uint_opt("sim.decimation", 1)?.unwrap_or(1) as usize,
            initial_state: [
                f.f64_or("sim.x1_0", Check::Any, 0.0)?,
                f.f64_or("sim.v1_0", Check::Any, 0.0)?,
                f.f64_or("sim.x2_0", Check::Any, 0.0)?,
                f.f64_or("sim.v2_0", Check::Any, 0.0)?,
            ],
            analysis_start: f.f64_or("sim.analysis_start", Check::Fraction, 0.5)?,
        };

        let harmonic_target = f.choice("forcing.harmonic.target", Resonator::One, RESONATOR)?;
        let harmonic_freq = match f.str_opt("forcing.harmonic.frequency") {
            None => None,
            Some((v, line)) => Some(match v.as_str() {
                "f1" => FrequencySpec::Mode1,
                "f2" => FrequencySpec::Mode2,
                other => {
                    let hz: f64 = other.parse().map_err(|_| {
                        Fields::err(
                            "forcing.harmonic.frequency",
                            line,
                            format!("expected Hz, f1 or f2, got `{other}`"),
                        )
                    })?;
                    if !(hz > 0.0 && hz.is_finite()) {
                        return Err(Fields::err("forcing.harmonic.frequency", line, "must be > 0"));
                    }
                    FrequencySpec::Hz(hz)
                }
            }),
        };
        let harmonic_phase = f.f64_or("forcing.harmonic.phase", Check::Any, 0.0)?;
        let harmonic = f
            .f64_opt("forcing.harmonic.amplitude", Check::NonNegative)?
            .map(|amplitude| HarmonicSettings {
                target: harmonic_target,
                amplitude,
                frequency: harmonic_freq.unwrap_or(FrequencySpec::Mode1),
                phase: harmonic_phase,
            });

        let noise_target = f.choice(
            "forcing.noise.target",
            None,
            &[
                ("none", None),
                ("1", Some(NoiseTarget::One)),
                ("2", Some(NoiseTarget::Two)),
                ("both", Some(NoiseTarget::Both)),
            ],
        )?;
        let noise_psd = match f.str_opt("forcing.noise.psd") {
            None => PsdSpec::Thermal,
            Some((v, _)) if v == "thermal" => PsdSpec::Thermal,
            Some((v, line)) => {
                let x: f64 = v.parse().map_err(|_| {
                    Fields::err(
                        "forcing.noise.psd",
                        line,
                        format!("expected N^2/Hz or thermal, got `{v}`"),
                    )
                })?;
                if !(x >= 0.0 && x.is_finite()) {
                    return Err(Fields::err("forcing.noise.psd", line, "must be >= 0"));
                }
                PsdSpec::Value(x)
            }
        };
        let forcing = ForcingSettings {
            harmonic,
            noise: noise_target.map(|target| NoiseSettings { target, psd: noise_psd }),
            seed: f.uint_opt("forcing.seed", 0)?,
        };

        let psd = PsdSettings {
            segment_length: f.uint_opt("psd.segment_length", 2)?.map(|n| n as usize),
            overlap: f.f64_or("psd.overlap", Check::Fraction, 0.5)?,
        };

        let db_convention = f.choice(
            "analysis.db_convention",
            DbConvention::Paper20Log,
            &[("paper", DbConvention::Paper20Log), ("power", DbConvention::Power10Log)],
        )?;

        let x_psd = [
            f.f64_opt("budget.x_psd_mode1", Check::NonNegative)?,
            f.f64_opt("budget.x_psd_mode2", Check::NonNegative)?,
        ];
        let source = f.choice(
            "budget.x_psd_source",
            0u8,
            &[("analytic", 0), ("paper", 1), ("simulated", 2)],
        )?;
        let x_psd_source = match (source, x_psd) {
            (0, [None, None]) => XPsdSource::Analytic,
            (2, [None, None]) => XPsdSource::Simulated,
            (1, [Some(a), Some(b)]) => XPsdSource::Paper([a, b]),
            (1, _) => {
                return Err(Error::config(
                    "budget.x_psd_mode1",
                    "paper source needs budget.x_psd_mode1 and budget.x_psd_mode2",
                ))
            }
            _ => {
                return Err(Error::config(
                    "budget.x_psd_mode1",
                    "only used with budget.x_psd_source = paper",
                ))
            }
        };
        let budget = BudgetSettings {
            x_psd_source,
            resonator: f.choice("budget.resonator", Resonator::One, RESONATOR)?,
            eta_thermal: f.f64_opt("budget.eta_thermal", Check::Positive)?,
        };

        let xs = [
            f.f64_opt("resolution.x11", Check::NonNegative)?,
            f.f64_opt("resolution.x12", Check::NonNegative)?,
            f.f64_opt("resolution.x21", Check::NonNegative)?,
            f.f64_opt("resolution.x22", Check::NonNegative)?,
        ];
        let drive = f.f64_opt("resolution.drive_amplitude", Check::Positive)?;
        let amp_source = f.choice(
            "resolution.amplitude_source",
            false,
            &[("analytic", false), ("paper", true)],
        )?;
        let amplitude_source = match (amp_source, xs, drive) {
            (false, [None, None, None, None], d) => AmplitudeSource::Analytic {
                drive_amplitude: d.unwrap_or(7.45e-5),
            },
            (true, [Some(x11), Some(x12), Some(x21), Some(x22)], None) => {
                AmplitudeSource::Paper([[x11, x12], [x21, x22]])
            }
            (true, _, Some(_)) => {
                return Err(Error::config(
                    "resolution.drive_amplitude",
                    "only used with resolution.amplitude_source = analytic",
                ))
            }
            (true, _, None) => {
                return Err(Error::config(
                    "resolution.x11",
                    "paper source needs resolution.x11, x12, x21 and x22",
                ))
            }
            (false, _, _) => {
                return Err(Error::config(
                    "resolution.x11",
                    "only used with resolution.amplitude_source = paper",
                ))
            }
        };
        let resolution = ResolutionSettings {
            amplitude_source,
            sensitivity_source: f.choice(
                "resolution.sensitivity_source",
                SensitivitySource::Formula,
                &[
                    ("formula", SensitivitySource::Formula),
                    ("paper_simulated", SensitivitySource::PaperSimulated),
                ],
            )?,
            ar_resolution_override: f.f64_opt("resolution.ar_resolution_override", Check::NonNegative)?,
            noise_total: f.choice(
                "resolution.noise_total",
                TotalConvention::Paper,
                &[
                    ("paper", TotalConvention::Paper),
                    ("integrated", TotalConvention::Integrated),
                ],
            )?,
        };

        let kc = match f.str_opt("sweep.kc") {
            None => vec![crate::sysmodel::REFERENCE_KC, crate::sysmodel::STRONG_COUPLING_KC],
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    let s = s.trim();
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| Fields::err("sweep.kc", line, format!("`{s}` is not a number")))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        for &k in &kc {
            SystemConfig { kc: k, ..system }
                .validate()
                .map_err(|e| Error::config("sweep.kc", format!("kc = {k}: {e}")))?;
        }
        let sweep = SweepSettings {
            kc,
            simulate: f.choice("sweep.simulate", false, &[("true", true), ("false", false)])?,
        };

        let output_dir = f
            .str_opt("output.dir")
            .map(|(v, _)| PathBuf::from(v))
            .unwrap_or_else(|| PathBuf::from("out"));

        if let Some((k, (_, line))) = f.map.into_iter().next() {
            return Err(Error::config(&k, format!("line {line}: key not consumed")));
        }
        transducer
            .validate()
            .map_err(|e| Error::config("transducer", e.to_string()))?;

        Ok(RunConfig {
            system,
            env,
            transducer,
            readout,
            sim,
            forcing,
            psd,
            db_convention,
            budget,
            resolution,
            sweep,
            output_dir,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Reads the `# key = value` block at the top of an output file. Lines
    /// whose key is not a configuration key (run provenance) are skipped.
    pub fn from_metadata(text: &str) -> Result<Self> {
        let mut cfg = String::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                break;
            };
            if let Some((k, _)) = rest.split_once('=') {
                if KEYS.iter().any(|spec| spec.key == k.trim()) {
                    cfg.push_str(rest.trim());
                    cfg.push('\n');
                }
            }
        }
        Self::parse(&cfg)
    }

    /// Every setting as `(key, value)`, in a form [`RunConfig::parse`] reads back
    /// to an identical configuration.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        let num = |x: f64| format!("{x:e}");
        let s = &self.system;
        put("system.m1", num(s.m1));
        put("system.m2", num(s.m2));
        put("system.km1", num(s.km1));
        put("system.km2", num(s.km2));
        put("system.kc", num(s.kc));
        put("system.c1", num(s.c1));
        put("system.c2", num(s.c2));
        put("system.cc", num(s.cc));
        put("env.temperature", num(self.env.temperature));
        put("env.bandwidth", num(self.env.bandwidth));
        let t = &self.transducer;
        if let Some(v) = t.eta {
            put("transducer.eta", num(v));
        }
        if let Some(v) = t.r_x {
            put("transducer.r_x", num(v));
        }
        if let Some(g) = &t.geometry {
            put("transducer.v_dc", num(g.v_dc));
            put("transducer.epsilon", num(g.epsilon));
            put("transducer.area", num(g.area));
            put("transducer.gap", num(g.gap));
        }
        put("transducer.consistency_tolerance", num(t.consistency_tolerance));
        put("readout.r_f", num(self.readout.r_f));
        put("readout.i_n", num(self.readout.i_n));
        put("readout.v_n", num(self.readout.v_n));
        put("readout.neb_factor", num(self.readout.neb_factor));
        if let Some(dt) = self.sim.dt {
            put("sim.dt", num(dt));
        }
        put("sim.duration", num(self.sim.duration));
        put("sim.decimation", self.sim.decimation.to_string());
        for (k, v) in ["sim.x1_0", "sim.v1_0", "sim.x2_0", "sim.v2_0"]
            .iter()
            .zip(self.sim.initial_state)
        {
            put(k, num(v));
        }
        put("sim.analysis_start", num(self.sim.analysis_start));
        if let Some(h) = &self.forcing.harmonic {
            put("forcing.harmonic.amplitude", num(h.amplitude));
            put("forcing.harmonic.target", resonator_str(h.target).into());
            put(
                "forcing.harmonic.frequency",
                match h.frequency {
                    FrequencySpec::Hz(f) => num(f),
                    FrequencySpec::Mode1 => "f1".into(),
                    FrequencySpec::Mode2 => "f2".into(),
                },
            );
            put("forcing.harmonic.phase", num(h.phase));
        }
        match &self.forcing.noise {
            None => put("forcing.noise.target", "none".into()),
            Some(n) => {
                put(
                    "forcing.noise.target",
                    match n.target {
                        NoiseTarget::One => "1",
                        NoiseTarget::Two => "2",
                        NoiseTarget::Both => "both",
                    }
                    .into(),
                );
                put(
                    "forcing.noise.psd",
                    match n.psd {
                        PsdSpec::Thermal => "thermal".into(),
                        PsdSpec::Value(v) => num(v),
                    },
                );
            }
        }
        if let Some(seed) = self.forcing.seed {
            put("forcing.seed", seed.to_string());
        }
        if let Some(n) = self.psd.segment_length {
            put("psd.segment_length", n.to_string());
        }
        put("psd.overlap", num(self.psd.overlap));
        put(
            "analysis.db_convention",
            match self.db_convention {
                DbConvention::Paper20Log => "paper",
                DbConvention::Power10Log => "power",
            }
            .into(),
        );
        match self.budget.x_psd_source {
            XPsdSource::Analytic => put("budget.x_psd_source", "analytic".into()),
            XPsdSource::Simulated => put("budget.x_psd_source", "simulated".into()),
            XPsdSource::Paper([a, b]) => {
                put("budget.x_psd_source", "paper".into());
                put("budget.x_psd_mode1", num(a));
                put("budget.x_psd_mode2", num(b));
            }
        }
        put("budget.resonator", resonator_str(self.budget.resonator).into());
        if let Some(e) = self.budget.eta_thermal {
            put("budget.eta_thermal", num(e));
        }
        match self.resolution.amplitude_source {
            AmplitudeSource::Analytic { drive_amplitude } => {
                put("resolution.amplitude_source", "analytic".into());
                put("resolution.drive_amplitude", num(drive_amplitude));
            }
            AmplitudeSource::Paper(x) => {
                put("resolution.amplitude_source", "paper".into());
                put("resolution.x11", num(x[0][0]));
                put("resolution.x12", num(x[0][1]));
                put("resolution.x21", num(x[1][0]));
                put("resolution.x22", num(x[1][1]));
            }
        }
        put(
            "resolution.sensitivity_source",
            self.resolution.sensitivity_source.as_str().into(),
        );
        if let Some(v) = self.resolution.ar_resolution_override {
            put("resolution.ar_resolution_override", num(v));
        }
        put("resolution.noise_total", self.resolution.noise_total.as_str().into());
        put(
            "sweep.kc",
            self.sweep.kc.iter().map(|&k| num(k)).collect::<Vec<_>>().join(", "),
        );
        put("sweep.simulate", self.sweep.simulate.to_string());
        put("output.dir", self.output_dir.display().to_string());
        out
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.echo() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// True when a run needs random numbers.
    pub fn is_stochastic(&self) -> bool {
        self.forcing.noise.is_some()
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.forcing
            .seed
            .ok_or_else(|| Error::config("forcing.seed", "stochastic runs need a seed (config key or --seed)"))
    }
}

fn resonator_str(r: Resonator) -> &'static str {
    match r {
        Resonator::One => "1",
        Resonator::Two => "2",
    }
}

/// Shipped configurations.
pub mod presets {
    pub const PAPER_REFERENCE: &str = include_str!("../presets/paper-reference.cfg");
    pub const UNCOUPLED_DEMO: &str = include_str!("../presets/uncoupled-demo.cfg");

    pub fn get(name: &str) -> Option<&'static str> {
        match name {
            "paper-reference" => Some(PAPER_REFERENCE),
            "uncoupled-demo" => Some(UNCOUPLED_DEMO),
            _ => None,
        }
    }

    pub const NAMES: &[&str] = &["paper-reference", "uncoupled-demo"];
}
