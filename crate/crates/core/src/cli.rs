//! Command implementations behind the `cr-noise-lab` binary.
//!
//! Each command takes a validated [`RunConfig`], writes its CSV files into the
//! output directory and returns a [`CommandOutput`] for the terminal. Every
//! file starts with the effective configuration as `# key = value` lines, so
//! [`RunConfig::from_metadata`] on any output reproduces the run.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::config::{AmplitudeSource, FrequencySpec, PsdSpec, RunConfig, XPsdSource};
use crate::error::{Error, Result};
use crate::noisebudget::{
    analytic_mode_psd, electronic_budget, thermal_budget, thermal_force_psd, ElectronicBudget, ThermalBudget,
};
use crate::report::{write_atomic, Report};
use crate::resolution::{resolve, ResolutionInputs, ResolutionReport};
use crate::spectral::{band_power, default_segment_length, to_db, welch_psd, DbConvention, Spectrum};
use crate::sysmodel::{
    build_system, mode_analysis, receptance, DerivedQuantities, Modes, SystemConfig, SystemMatrices,
};
use crate::timesim::{
    simulate, steady_state_amplitude, Forcing, HarmonicDrive, NoiseTarget, Resonator, SimulationPlan, StochasticDrive,
    TimeSeries,
};

/// Relative Parseval mismatch above which a spectrum is flagged.
pub const PARSEVAL_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Modes,
    Simulate,
    Psd,
    Budget,
    Resolution,
    Sweep,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Simulate => "simulate",
            Command::Psd => "psd",
            Command::Budget => "budget",
            Command::Resolution => "resolution",
            Command::Sweep => "sweep",
        }
    }
}

/// Command-line values that take precedence over the configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub db_convention: Option<DbConvention>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(seed) = self.seed {
            cfg.forcing.seed = Some(seed);
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(c) = self.db_convention {
            cfg.db_convention = c;
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    /// Human-readable summary.
    pub text: String,
    pub report: Report,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub fn run(command: Command, mut cfg: RunConfig, overrides: &Overrides) -> Result<CommandOutput> {
    overrides.apply(&mut cfg);
    match command {
        Command::Modes => cmd_modes(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Psd => cmd_psd(&cfg),
        Command::Budget => cmd_budget(&cfg),
        Command::Resolution => cmd_resolution(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
    }
}

/// The system under analysis.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: SystemConfig,
    pub system: SystemMatrices,
    pub modes: Modes,
    pub derived: DerivedQuantities,
}

pub fn prepare(config: &SystemConfig) -> Result<Prepared> {
    let system = build_system(config)?;
    let modes = mode_analysis(&system)?;
    Ok(Prepared {
        config: *config,
        system,
        modes,
        derived: config.derived(),
    })
}

/// Configuration echo for output files. The output directory is left out so
/// that identical runs give identical files wherever they are written.
fn echo(cfg: &RunConfig) -> Vec<(String, String)> {
    let mut m: Vec<_> = cfg.echo().into_iter().filter(|(k, _)| k != "output.dir").collect();
    m.push(("run.version".into(), env!("CARGO_PKG_VERSION").into()));
    m
}

struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(&cfg.output_dir)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", cfg.output_dir.display())))?;
        let mut out = Self {
            dir: cfg.output_dir.clone(),
            files: Vec::new(),
        };
        out.write("run.cfg", &cfg.to_config_string())?;
        Ok(out)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self, report: Report, warnings: Vec<String>) -> CommandOutput {
        CommandOutput {
            text: report.to_text(),
            report,
            files: self.files,
            warnings,
        }
    }
}

fn config_warnings(cfg: &RunConfig, p: &Prepared) -> Vec<String> {
    let mut w: Vec<String> = p.config.warnings().iter().map(|w| w.to_string()).collect();
    if let Some(msg) = cfg.transducer.consistency_warning(p.derived.c) {
        w.push(msg);
    }
    w
}

fn db_or_neg_inf(v: f64, conv: DbConvention) -> f64 {
    to_db(v, conv).unwrap_or(f64::NEG_INFINITY)
}

// ---------------------------------------------------------------------------
// modes

pub fn modes_report(p: &Prepared) -> Report {
    let mut r = Report::new("Modal analysis");
    for (i, m) in p.modes.modes.iter().enumerate() {
        let n = i + 1;
        r.push(format!("f{n}"), m.frequency, "Hz", m.label.as_str());
        r.push(format!("omega{n}"), m.omega, "rad/s", "eigen");
        r.push(format!("shape{n}_x1"), m.shape[0], "1", "eigen, unit norm");
        r.push(format!("shape{n}_x2"), m.shape[1], "1", "eigen, unit norm");
        r.push(format!("amplitude_ratio{n}"), m.amplitude_ratio(), "1", "x1/x2");
        r.push(format!("modal_q{n}"), m.modal_q, "1", "modal damping");
    }
    r.push("split", p.modes.split(), "Hz", "f2 - f1");
    r.push("k_eff", p.derived.k_eff, "N/m", "km + kc");
    r.push("kappa", p.derived.kappa, "1", "kc/k_eff");
    r.push("q", p.derived.q, "1", "sqrt(k_eff*m)/c");
    if let Some(s) = p.derived.ar_sensitivity_per_dk() {
        r.push("ar_sensitivity", s, "1/dk", "1/(2|kappa|)");
    }
    for (i, m) in p.modes.modes.iter().enumerate() {
        r.note(format!("mode {}: {}", i + 1, m.label));
    }
    r
}

pub fn cmd_modes(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = prepare(&cfg.system)?;
    let mut report = modes_report(&p);
    report.metadata = echo(cfg);
    let mut out = Output::new(cfg)?;
    out.write("modes.csv", &report.to_csv())?;
    Ok(out.finish(report, config_warnings(cfg, &p)))
}

// ---------------------------------------------------------------------------
// simulate / psd

fn force_psd(cfg: &RunConfig, target: NoiseTarget, psd: PsdSpec) -> Result<f64> {
    match psd {
        PsdSpec::Value(v) => Ok(v),
        PsdSpec::Thermal => {
            let s = &cfg.system;
            let c = match target {
                NoiseTarget::One => s.c1,
                NoiseTarget::Two => s.c2,
                NoiseTarget::Both => 0.5 * (s.c1 + s.c2),
            };
            thermal_force_psd(c, &cfg.env)
        }
    }
}

fn mode_frequency(p: &Prepared, spec: FrequencySpec) -> f64 {
    match spec {
        FrequencySpec::Hz(f) => f,
        FrequencySpec::Mode1 => p.modes.first().frequency,
        FrequencySpec::Mode2 => p.modes.second().frequency,
    }
}

/// Forcing described by the configuration; stochastic forcing needs a seed.
pub fn build_forcing(cfg: &RunConfig, p: &Prepared) -> Result<Forcing> {
    let mut forcing = Forcing::none();
    if let Some(h) = &cfg.forcing.harmonic {
        forcing.harmonic.push(HarmonicDrive {
            target: h.target,
            amplitude: h.amplitude,
            frequency: mode_frequency(p, h.frequency),
            phase: h.phase,
        });
    }
    if let Some(n) = &cfg.forcing.noise {
        forcing.stochastic = Some(StochasticDrive {
            target: n.target,
            force_psd: force_psd(cfg, n.target, n.psd)?,
            seed: cfg.require_seed()?,
        });
    }
    Ok(forcing)
}

pub fn build_plan(cfg: &RunConfig, p: &Prepared) -> Result<SimulationPlan> {
    let mut plan = SimulationPlan::for_system(&p.system, cfg.sim.duration)?
        .with_decimation(cfg.sim.decimation)
        .with_initial_state(cfg.sim.initial_state);
    if let Some(dt) = cfg.sim.dt {
        plan.dt = dt;
    }
    Ok(plan)
}

pub fn run_simulation(cfg: &RunConfig, p: &Prepared) -> Result<TimeSeries> {
    let forcing = build_forcing(cfg, p)?;
    let plan = build_plan(cfg, p)?;
    simulate(&p.system, &forcing, &plan)
}

/// Welch spectra of `x1` and `x2` after the settling fraction is dropped.
pub fn analysis_spectra(cfg: &RunConfig, series: &TimeSeries) -> Result<[Spectrum; 2]> {
    let start = (series.len() as f64 * cfg.sim.analysis_start).floor() as usize;
    let n = series.len() - start;
    let seg = match cfg.psd.segment_length {
        Some(s) => s,
        None => default_segment_length(n).ok_or(Error::SeriesTooShort { len: n, segment: 16 })?,
    };
    let one = welch_psd(&series.x1[start..], series.dt, seg, cfg.psd.overlap)?;
    let two = welch_psd(&series.x2[start..], series.dt, seg, cfg.psd.overlap)?;
    Ok([one, two])
}

/// `∫ |h_rd(f)|²·S_F df` over `[f_c − B/2, f_c + B/2]` by composite Simpson.
pub fn analytic_band_power(
    system: &SystemMatrices,
    resonator: Resonator,
    driven: Resonator,
    force_psd: f64,
    f_center: f64,
    bandwidth: f64,
) -> Result<f64> {
    const N: usize = 2000;
    let (lo, h) = (f_center - 0.5 * bandwidth, bandwidth / N as f64);
    let mut acc = 0.0;
    for k in 0..=N {
        let f = lo + k as f64 * h;
        let w = if k == 0 || k == N {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * receptance(system, f)?[resonator.index()][driven.index()].norm_sqr();
    }
    Ok(acc * h / 3.0 * force_psd)
}

fn driven_resonators(target: NoiseTarget) -> &'static [Resonator] {
    match target {
        NoiseTarget::One => &[Resonator::One],
        NoiseTarget::Two => &[Resonator::Two],
        NoiseTarget::Both => &[Resonator::One, Resonator::Two],
    }
}

/// Band powers, Parseval checks and analytic references for a simulated run.
pub fn spectrum_summary(
    cfg: &RunConfig,
    p: &Prepared,
    series: &TimeSeries,
    spectra: &[Spectrum; 2],
) -> Result<(Report, Vec<String>)> {
    let mut r = Report::new("Simulated spectra");
    let mut warnings = Vec::new();
    let b = cfg.env.bandwidth;
    let forcing = build_forcing(cfg, p)?;
    r.push("samples", series.len() as f64, "1", "recorded");
    r.push("sample_interval", series.dt, "s", "dt*decimation");
    r.push("df", spectra[0].df, "Hz", "welch");
    r.push("segments", spectra[0].window.segments as f64, "1", "welch");
    for (j, s) in spectra.iter().enumerate() {
        let ch = j + 1;
        let ratio = s.parseval_ratio();
        r.push(
            format!("parseval_ratio_x{ch}"),
            ratio,
            "1",
            "sum(psd)*df/windowed mean square",
        );
        r.push(
            format!("mean_square_ratio_x{ch}"),
            s.mean_square_ratio(),
            "1",
            "sum(psd)*df/plain mean square",
        );
        if (ratio - 1.0).abs() > PARSEVAL_TOLERANCE {
            warnings.push(format!(
                "spectrum of x{ch}: Parseval ratio {ratio:.4} is outside 1 +/- {PARSEVAL_TOLERANCE}"
            ));
        }
        for (i, mode) in p.modes.modes.iter().enumerate() {
            let f = mode.frequency;
            let tag = format!("x{ch}_f{}", i + 1);
            let bp = band_power(s, f, b)?;
            r.push(format!("band_power_{tag}"), bp, "m^2", "welch, trapezoid");
            r.push(
                format!("band_power_{tag}_db_paper"),
                db_or_neg_inf(bp, DbConvention::Paper20Log),
                "dB",
                "20*log10",
            );
            r.push(
                format!("band_power_{tag}_db_power"),
                db_or_neg_inf(bp, DbConvention::Power10Log),
                "dB",
                "10*log10",
            );
            r.push(
                format!("psd_{tag}"),
                s.value_at(f).unwrap_or(0.0),
                "m^2/Hz",
                "nearest bin",
            );
            if let Some(st) = &forcing.stochastic {
                let res = if j == 0 { Resonator::One } else { Resonator::Two };
                let mut analytic = 0.0;
                let mut analytic_psd = 0.0;
                for &d in driven_resonators(st.target) {
                    analytic += analytic_band_power(&p.system, res, d, st.force_psd, f, b)?;
                    analytic_psd += receptance(&p.system, f)?[res.index()][d.index()].norm_sqr() * st.force_psd;
                }
                r.push(format!("analytic_band_power_{tag}"), analytic, "m^2", "|h|^2*S_F");
                r.push(format!("analytic_psd_{tag}"), analytic_psd, "m^2/Hz", "|h|^2*S_F");
            }
        }
    }
    if let Some(h) = forcing.harmonic.first() {
        let tone = steady_state_amplitude(series, h.frequency, cfg.sim.analysis_start)?;
        let rc = receptance(&p.system, h.frequency)?;
        let t = h.target.index();
        r.push("drive_frequency", h.frequency, "Hz", "config");
        r.push("tone_amplitude_x1", tone.amp1, "m peak", "Hann projection");
        r.push("tone_amplitude_x2", tone.amp2, "m peak", "Hann projection");
        r.push(
            "analytic_amplitude_x1",
            rc[0][t].norm() * h.amplitude,
            "m peak",
            "|h|*F",
        );
        r.push(
            "analytic_amplitude_x2",
            rc[1][t].norm() * h.amplitude,
            "m peak",
            "|h|*F",
        );
    }
    r.note(format!(
        "band powers integrate {b} Hz around each mode; dB rows use both conventions, summaries default to {}",
        cfg.db_convention.as_str()
    ));
    Ok((r, warnings))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = prepare(&cfg.system)?;
    let series = run_simulation(cfg, &p)?;
    let spectra = analysis_spectra(cfg, &series)?;
    let (mut report, mut warnings) = spectrum_summary(cfg, &p, &series, &spectra)?;
    warnings.splice(0..0, config_warnings(cfg, &p));
    report.metadata = echo(cfg);
    let mut out = Output::new(cfg)?;
    out.write("timeseries.csv", &timeseries_csv(cfg, &series))?;
    out.write("simulate_summary.csv", &report.to_csv())?;
    Ok(out.finish(report, warnings))
}

pub fn timeseries_csv(cfg: &RunConfig, series: &TimeSeries) -> String {
    let mut s = String::new();
    for (k, v) in echo(cfg) {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s.push_str(&series.to_csv());
    s
}

pub fn cmd_psd(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = prepare(&cfg.system)?;
    let series = run_simulation(cfg, &p)?;
    let spectra = analysis_spectra(cfg, &series)?;
    let (mut report, mut warnings) = spectrum_summary(cfg, &p, &series, &spectra)?;
    warnings.splice(0..0, config_warnings(cfg, &p));
    report.metadata = echo(cfg);
    let mut out = Output::new(cfg)?;
    for (j, s) in spectra.iter().enumerate() {
        let mut meta = echo(cfg);
        meta.push(("run.channel".into(), format!("x{}", j + 1)));
        meta.push((
            "run.steps".into(),
            series.metadata.get("run.steps").cloned().unwrap_or_default(),
        ));
        out.write(&format!("spectrum_x{}.csv", j + 1), &s.to_csv(&meta))?;
    }
    out.write("psd_summary.csv", &report.to_csv())?;
    Ok(out.finish(report, warnings))
}

// ---------------------------------------------------------------------------
// budget

#[derive(Debug, Clone)]
pub struct BudgetResult {
    pub thermal: ThermalBudget,
    pub electronic: ElectronicBudget,
    pub r_x: f64,
    /// Mechanical noise current of the quieter mode [A rms].
    pub i_mech: f64,
    pub x_psd_source: &'static str,
}

/// Displacement-noise PSD of the budgeted resonator at both modes.
pub fn mode_x_psd(cfg: &RunConfig, p: &Prepared) -> Result<([f64; 2], &'static str)> {
    match cfg.budget.x_psd_source {
        XPsdSource::Paper(v) => Ok((v, "config")),
        XPsdSource::Analytic => {
            let (target, psd) = match &cfg.forcing.noise {
                Some(n) => (n.target, force_psd(cfg, n.target, n.psd)?),
                None => (NoiseTarget::One, thermal_force_psd(cfg.system.c1, &cfg.env)?),
            };
            let mut out = [0.0; 2];
            for &d in driven_resonators(target) {
                let v = analytic_mode_psd(&p.system, &p.modes, psd, cfg.budget.resonator, d)?;
                out[0] += v[0];
                out[1] += v[1];
            }
            Ok((out, "analytic |h|^2*S_F"))
        }
        XPsdSource::Simulated => {
            if cfg.forcing.noise.is_none() {
                return Err(Error::config(
                    "budget.x_psd_source",
                    "simulated source needs forcing.noise.target",
                ));
            }
            let series = run_simulation(cfg, p)?;
            let spectra = analysis_spectra(cfg, &series)?;
            let s = &spectra[cfg.budget.resonator.index()];
            let at = |f: f64| s.value_at(f).unwrap_or(0.0);
            Ok((
                [at(p.modes.first().frequency), at(p.modes.second().frequency)],
                "simulated, nearest bin",
            ))
        }
    }
}

pub fn compute_budget(cfg: &RunConfig, p: &Prepared) -> Result<BudgetResult> {
    let eta = cfg.budget.eta_thermal.map_or_else(|| cfg.transducer.eta(), Ok)?;
    let (x_psd, source) = mode_x_psd(cfg, p)?;
    let omegas = [p.modes.first().omega, p.modes.second().omega];
    let thermal = thermal_budget(p.derived.c, omegas, &cfg.env, eta, x_psd)?;
    let r_x = cfg.transducer.resolve_r_x(&p.derived)?;
    let electronic = electronic_budget(&cfg.readout, r_x, &cfg.env)?;
    let i_mech = thermal.modes[thermal.best_mode()].i_mot_noise;
    Ok(BudgetResult {
        thermal,
        electronic,
        r_x,
        i_mech,
        x_psd_source: source,
    })
}

pub fn budget_report(cfg: &RunConfig, b: &BudgetResult) -> Result<Report> {
    let mut r = Report::new("Noise budget");
    let conv = cfg.db_convention;
    let unit = format!("dB ({})", conv.as_str());
    let mut thermal = b.thermal.report();
    for row in thermal.rows.iter_mut().filter(|row| row.quantity.starts_with("x_psd_")) {
        row.source = b.x_psd_source.into();
    }
    r.extend(thermal);
    for (i, m) in b.thermal.modes.iter().enumerate() {
        r.push(
            format!("x_psd_mode{}_db", i + 1),
            db_or_neg_inf(m.x_psd, conv),
            unit.as_str(),
            "x_psd",
        );
    }
    r.push(
        "r_x",
        b.r_x,
        "ohm",
        if cfg.transducer.r_x.is_some() {
            "config"
        } else {
            "c/eta^2"
        },
    );
    r.extend(b.electronic.report(b.i_mech)?);
    r.note(format!(
        "i_mech is the mode-{} value, the lower of the two",
        b.thermal.best_mode() + 1
    ));
    Ok(r)
}

pub fn cmd_budget(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = prepare(&cfg.system)?;
    let b = compute_budget(cfg, &p)?;
    let mut report = budget_report(cfg, &b)?;
    report.metadata = echo(cfg);
    let mut out = Output::new(cfg)?;
    out.write("budget.csv", &report.to_csv())?;
    Ok(out.finish(report, config_warnings(cfg, &p)))
}

// ---------------------------------------------------------------------------
// resolution

/// Peak displacements `x[j][i]` of resonator `j` at mode `i`.
pub fn mode_amplitudes(cfg: &RunConfig, p: &Prepared) -> Result<[[f64; 2]; 2]> {
    match cfg.resolution.amplitude_source {
        AmplitudeSource::Paper(x) => Ok(x),
        AmplitudeSource::Analytic { drive_amplitude } => {
            let mut x = [[0.0; 2]; 2];
            for (i, mode) in p.modes.modes.iter().enumerate() {
                let h = receptance(&p.system, mode.frequency)?;
                for (j, row) in x.iter_mut().enumerate() {
                    row[i] = h[j][0].norm() * drive_amplitude;
                }
            }
            Ok(x)
        }
    }
}

pub fn compute_resolution(cfg: &RunConfig, p: &Prepared, budget: &BudgetResult) -> Result<ResolutionReport> {
    let inputs = ResolutionInputs {
        eta: cfg.transducer.eta()?,
        omegas: [p.modes.first().omega, p.modes.second().omega],
        amplitudes: mode_amplitudes(cfg, p)?,
        r_f: cfg.readout.r_f,
        i_noise: budget
            .electronic
            .system_total(budget.i_mech, cfg.resolution.noise_total)?,
        sensitivity: cfg.resolution.sensitivity_source.value(&p.derived)?,
        sensitivity_source: cfg.resolution.sensitivity_source,
        bandwidth: cfg.env.bandwidth,
        ar_resolution_override: cfg.resolution.ar_resolution_override,
        k_eff: p.derived.k_eff,
        formula_sensitivity: p.derived.ar_sensitivity_per_dk(),
    };
    resolve(&inputs)
}

pub fn cmd_resolution(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = prepare(&cfg.system)?;
    let b = compute_budget(cfg, &p)?;
    let res = compute_resolution(cfg, &p, &b)?;
    let mut report = res.report();
    report.rows.insert(
        0,
        crate::report::ReportRow::new(
            "i_noise",
            res.inputs.i_noise,
            "A",
            format!("RSS(i_mech, electronic {})", cfg.resolution.noise_total.as_str()),
        ),
    );
    report.metadata = echo(cfg);
    let mut out = Output::new(cfg)?;
    out.write("resolution.csv", &report.to_csv())?;
    Ok(out.finish(report, config_warnings(cfg, &p)))
}

// ---------------------------------------------------------------------------
// sweep

/// One coupling value of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub kc: f64,
    pub kappa: f64,
    pub f1: f64,
    pub f2: f64,
    pub split: f64,
    pub mode1_label: &'static str,
    pub ar_sensitivity: Option<f64>,
    pub x_psd: [f64; 2],
    pub i_mech: f64,
    pub i_electronic: f64,
    pub i_total: f64,
    pub ar_resolution: [f64; 2],
    pub min_detectable: f64,
    /// Simulated band power of `x[j]` at mode `i`, in the configured dB convention.
    pub noise_floor_db: Option<[[f64; 2]; 2]>,
}

pub const SWEEP_HEADER: &str = "kc_n_per_m,kappa,f1_hz,f2_hz,split_hz,mode1_label,ar_sensitivity,x_psd_mode1,x_psd_mode2,i_mech_a,i_electronic_a,i_total_a,ar_resolution_mode1,ar_resolution_mode2,min_detectable_stiffness,noise_floor_x1_f1_db,noise_floor_x1_f2_db,noise_floor_x2_f1_db,noise_floor_x2_f2_db";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        let floors = match self.noise_floor_db {
            Some(nf) => format!("{},{},{},{}", nf[0][0], nf[0][1], nf[1][0], nf[1][1]),
            None => ",,,".into(),
        };
        format!(
            "{:e},{:e},{:e},{:e},{:e},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.kc,
            self.kappa,
            self.f1,
            self.f2,
            self.split,
            self.mode1_label,
            opt(self.ar_sensitivity),
            self.x_psd[0],
            self.x_psd[1],
            self.i_mech,
            self.i_electronic,
            self.i_total,
            self.ar_resolution[0],
            self.ar_resolution[1],
            self.min_detectable,
            floors
        )
    }
}

pub fn sweep_point(cfg: &RunConfig, kc: f64) -> Result<SweepPoint> {
    let mut point_cfg = cfg.clone();
    point_cfg.system.kc = kc;
    let p = prepare(&point_cfg.system)?;
    let b = compute_budget(&point_cfg, &p)?;
    let res = compute_resolution(&point_cfg, &p, &b)?;
    let noise_floor_db = if cfg.sweep.simulate {
        let series = run_simulation(&point_cfg, &p)?;
        let spectra = analysis_spectra(&point_cfg, &series)?;
        let mut nf = [[0.0; 2]; 2];
        for (j, s) in spectra.iter().enumerate() {
            for (i, mode) in p.modes.modes.iter().enumerate() {
                nf[j][i] = db_or_neg_inf(band_power(s, mode.frequency, cfg.env.bandwidth)?, cfg.db_convention);
            }
        }
        Some(nf)
    } else {
        None
    };
    Ok(SweepPoint {
        kc,
        kappa: p.derived.kappa,
        f1: p.modes.first().frequency,
        f2: p.modes.second().frequency,
        split: p.modes.split(),
        mode1_label: p.modes.first().label.as_str(),
        ar_sensitivity: p.derived.ar_sensitivity_per_dk(),
        x_psd: [b.thermal.modes[0].x_psd, b.thermal.modes[1].x_psd],
        i_mech: b.i_mech,
        i_electronic: b.electronic.total(cfg.resolution.noise_total),
        i_total: res.inputs.i_noise,
        ar_resolution: res.ar_resolution,
        min_detectable: res.min_detectable.absolute,
        noise_floor_db,
    })
}

/// Evaluates every coupling value; rows keep the order of `sweep.kc`.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepPoint>> {
    if cfg.sweep.simulate {
        cfg.require_seed()?;
    }
    cfg.sweep.kc.par_iter().map(|&kc| sweep_point(cfg, kc)).collect()
}

pub fn sweep_csv(cfg: &RunConfig, points: &[SweepPoint]) -> String {
    let mut s = String::new();
    for (k, v) in echo(cfg) {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let _ = writeln!(s, "# noise floors in dB ({})", cfg.db_convention.as_str());
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for p in points {
        s.push_str(&p.csv_row());
        s.push('\n');
    }
    s
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput> {
    let points = sweep(cfg)?;
    let mut report = Report::new("Coupling sweep");
    for pt in &points {
        let tag = format!("kc={}", pt.kc);
        report.push(format!("{tag} split"), pt.split, "Hz", pt.mode1_label);
        if let Some(s) = pt.ar_sensitivity {
            report.push(format!("{tag} ar_sensitivity"), s, "1/dk", "1/(2|kappa|)");
        }
        report.push(format!("{tag} i_mech"), pt.i_mech, "A", "thermal budget");
        report.push(format!("{tag} i_total"), pt.i_total, "A", "RSS");
        report.push(
            format!("{tag} min_detectable"),
            pt.min_detectable,
            "N/m",
            "resolution/sensitivity",
        );
        if let Some(nf) = pt.noise_floor_db {
            for (j, row) in nf.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    report.push(
                        format!("{tag} noise_floor_x{}_f{}", j + 1, i + 1),
                        *v,
                        "dB",
                        "simulated",
                    );
                }
            }
        }
    }
    report.metadata = echo(cfg);
    let mut warnings = Vec::new();
    for &kc in &cfg.sweep.kc {
        let sys = SystemConfig { kc, ..cfg.system };
        warnings.extend(sys.warnings().iter().map(|w| format!("kc = {kc}: {w}")));
    }
    let mut out = Output::new(cfg)?;
    out.write("sweep.csv", &sweep_csv(cfg, &points))?;
    Ok(out.finish(report, warnings))
}

/// Exit status for a failed command: 1 for input errors, 2 for numerical ones.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_input_error() {
        1
    } else {
        2
    }
}
