//! Time-domain integration of the coupled equations of motion.
//!
//! Fixed-step classical RK4 on the state `(x1, v1, x2, v2)`. Harmonic forces
//! are evaluated at every RK stage; the stochastic thermal force is held
//! constant over each step (zero-order hold) and redrawn between steps.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};
use crate::sysmodel::{mode_analysis, SystemMatrices};

/// Minimum integration steps per period of the fastest mode.
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;
/// Default integration steps per period of the fastest mode.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resonator {
    One,
    Two,
}

impl Resonator {
    pub fn index(self) -> usize {
        match self {
            Resonator::One => 0,
            Resonator::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseTarget {
    One,
    Two,
    /// Independent streams on both resonators, seeded `seed` and `seed ^ 1`.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicDrive {
    pub target: Resonator,
    /// Peak amplitude [N].
    pub amplitude: f64,
    /// [Hz]
    pub frequency: f64,
    /// [rad]; the force is `amplitude·sin(2πft + phase)`.
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StochasticDrive {
    pub target: NoiseTarget,
    /// One-sided force PSD [N²/Hz].
    pub force_psd: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Forcing {
    pub harmonic: Vec<HarmonicDrive>,
    pub stochastic: Option<StochasticDrive>,
}

impl Forcing {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn harmonic(drive: HarmonicDrive) -> Self {
        Self {
            harmonic: vec![drive],
            stochastic: None,
        }
    }

    pub fn thermal(target: NoiseTarget, force_psd: f64, seed: u64) -> Self {
        Self {
            harmonic: Vec::new(),
            stochastic: Some(StochasticDrive {
                target,
                force_psd,
                seed,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for h in &self.harmonic {
            ensure_non_negative("forcing.harmonic.amplitude", h.amplitude)?;
            ensure_non_negative("forcing.harmonic.frequency", h.frequency)?;
            ensure_finite("forcing.harmonic.phase", h.phase)?;
        }
        if let Some(s) = &self.stochastic {
            ensure_non_negative("forcing.noise.psd", s.force_psd)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationPlan {
    /// [s]
    pub dt: f64,
    /// [s]
    pub duration: f64,
    /// Record every n-th step.
    pub record_decimation: usize,
    /// `(x1, v1, x2, v2)`.
    pub initial_state: [f64; 4],
    pub record_velocity: bool,
}

impl SimulationPlan {
    /// Plan with the default step `1/(50·f2)`.
    pub fn for_system(system: &SystemMatrices, duration: f64) -> Result<Self> {
        Ok(Self {
            dt: default_dt(system)?,
            duration,
            record_decimation: 1,
            initial_state: [0.0; 4],
            record_velocity: false,
        })
    }

    pub fn with_decimation(mut self, n: usize) -> Self {
        self.record_decimation = n;
        self
    }

    pub fn with_initial_state(mut self, s: [f64; 4]) -> Self {
        self.initial_state = s;
        self
    }

    pub fn step_count(&self) -> Result<usize> {
        let n = (self.duration / self.dt).round();
        if !(n.is_finite() && n >= 0.0 && n < (usize::MAX / 2) as f64) {
            return Err(Error::TooManySamples(n));
        }
        Ok(n as usize)
    }
}

pub fn max_dt(system: &SystemMatrices) -> Result<f64> {
    let f2 = mode_analysis(system)?.second().frequency;
    Ok(1.0 / (MIN_STEPS_PER_PERIOD * f2))
}

pub fn default_dt(system: &SystemMatrices) -> Result<f64> {
    let f2 = mode_analysis(system)?.second().frequency;
    Ok(1.0 / (DEFAULT_STEPS_PER_PERIOD * f2))
}

/// Recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Spacing of recorded samples [s].
    pub dt: f64,
    /// [m]
    pub x1: Vec<f64>,
    /// [m]
    pub x2: Vec<f64>,
    /// [m/s]
    pub v1: Option<Vec<f64>>,
    /// [m/s]
    pub v2: Option<Vec<f64>>,
    pub seed: Option<u64>,
    /// Free-form provenance written as `# key = value` lines in CSV output.
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    pub fn channel(&self, r: Resonator) -> &[f64] {
        match r {
            Resonator::One => &self.x1,
            Resonator::Two => &self.x2,
        }
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len() as f64
    }

    /// CSV with a `#` metadata block, then `t_s,x1_m,x2_m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 48 + 256);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed = {seed}");
        }
        out.push_str("t_s,x1_m,x2_m\n");
        for (i, (a, b)) in self.x1.iter().zip(&self.x2).enumerate() {
            let _ = writeln!(out, "{:e},{:e},{:e}", i as f64 * self.dt, a, b);
        }
        out
    }
}

/// Gaussian white force samples with one-sided PSD `force_psd` at spacing `dt`.
///
/// The per-sample variance is `force_psd / (2·dt)`.
#[derive(Debug, Clone)]
pub struct ThermalForceStream {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl ThermalForceStream {
    pub fn new(force_psd: f64, dt: f64, seed: u64) -> Result<Self> {
        ensure_non_negative("force_psd", force_psd)?;
        ensure_positive("dt", dt)?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            sigma: (force_psd / (2.0 * dt)).sqrt(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn next_sample(&mut self) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.sigma * z
    }
}

pub fn thermal_force_samples(force_psd: f64, dt: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut s = ThermalForceStream::new(force_psd, dt, seed)?;
    Ok((0..n).map(|_| s.next_sample()).collect())
}

struct Dynamics {
    minv: [[f64; 2]; 2],
    c: [[f64; 2]; 2],
    k: [[f64; 2]; 2],
    drives: Vec<(usize, f64, f64, f64)>,
}

impl Dynamics {
    fn new(system: &SystemMatrices, forcing: &Forcing) -> Self {
        let m = system.mass;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let minv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let drives = forcing
            .harmonic
            .iter()
            .map(|h| (h.target.index(), h.amplitude, TAU * h.frequency, h.phase))
            .collect();
        Self {
            minv,
            c: system.damping,
            k: system.stiffness,
            drives,
        }
    }

    #[inline]
    fn deriv(&self, t: f64, s: &[f64; 4], noise: [f64; 2]) -> [f64; 4] {
        let mut f = noise;
        for &(idx, amp, w, phase) in &self.drives {
            f[idx] += amp * (w * t + phase).sin();
        }
        let (x, v) = ([s[0], s[2]], [s[1], s[3]]);
        let mut r = [0.0; 2];
        for i in 0..2 {
            r[i] = f[i] - self.c[i][0] * v[0] - self.c[i][1] * v[1] - self.k[i][0] * x[0] - self.k[i][1] * x[1];
        }
        let a1 = self.minv[0][0] * r[0] + self.minv[0][1] * r[1];
        let a2 = self.minv[1][0] * r[0] + self.minv[1][1] * r[1];
        [s[1], a1, s[3], a2]
    }
}

#[inline]
fn axpy(s: &[f64; 4], k: &[f64; 4], h: f64) -> [f64; 4] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
}

pub fn simulate(system: &SystemMatrices, forcing: &Forcing, plan: &SimulationPlan) -> Result<TimeSeries> {
    forcing.validate()?;
    ensure_positive("sim.dt", plan.dt)?;
    ensure_non_negative("sim.duration", plan.duration)?;
    if plan.record_decimation == 0 {
        return Err(Error::param("sim.decimation", "must be >= 1"));
    }
    let f2 = mode_analysis(system)?.second().frequency;
    let max_dt = 1.0 / (MIN_STEPS_PER_PERIOD * f2);
    if plan.dt > max_dt {
        return Err(Error::TimeStepTooLarge {
            dt: plan.dt,
            max_dt,
            f2,
        });
    }
    let steps = plan.step_count()?;
    let dyn_ = Dynamics::new(system, forcing);

    let mut streams: [Option<ThermalForceStream>; 2] = [None, None];
    let mut seed = None;
    if let Some(st) = &forcing.stochastic {
        seed = Some(st.seed);
        let mk = |s| ThermalForceStream::new(st.force_psd, plan.dt, s);
        match st.target {
            NoiseTarget::One => streams[0] = Some(mk(st.seed)?),
            NoiseTarget::Two => streams[1] = Some(mk(st.seed)?),
            NoiseTarget::Both => {
                streams[0] = Some(mk(st.seed)?);
                streams[1] = Some(mk(st.seed ^ 1)?);
            }
        }
    }

    let n_rec = steps / plan.record_decimation + 1;
    let mut x1 = Vec::with_capacity(n_rec);
    let mut x2 = Vec::with_capacity(n_rec);
    let (mut v1, mut v2) = if plan.record_velocity {
        (Some(Vec::with_capacity(n_rec)), Some(Vec::with_capacity(n_rec)))
    } else {
        (None, None)
    };
    let mut record = |s: &[f64; 4]| {
        x1.push(s[0]);
        x2.push(s[2]);
        if let (Some(a), Some(b)) = (v1.as_mut(), v2.as_mut()) {
            a.push(s[1]);
            b.push(s[3]);
        }
    };

    let mut s = plan.initial_state;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("sim.initial_state", "must be finite"));
    }
    record(&s);
    let h = plan.dt;
    for step in 0..steps {
        let t = step as f64 * h;
        let noise = [
            streams[0].as_mut().map_or(0.0, |g| g.next_sample()),
            streams[1].as_mut().map_or(0.0, |g| g.next_sample()),
        ];
        let k1 = dyn_.deriv(t, &s, noise);
        let k2 = dyn_.deriv(t + 0.5 * h, &axpy(&s, &k1, 0.5 * h), noise);
        let k3 = dyn_.deriv(t + 0.5 * h, &axpy(&s, &k2, 0.5 * h), noise);
        let k4 = dyn_.deriv(t + h, &axpy(&s, &k3, h), noise);
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
        if !(s[0].is_finite() && s[1].is_finite() && s[2].is_finite() && s[3].is_finite()) {
            return Err(Error::NonFiniteState {
                step: step + 1,
                time: (step + 1) as f64 * h,
                state: s,
            });
        }
        if (step + 1) % plan.record_decimation == 0 {
            record(&s);
        }
    }

    let mut metadata = BTreeMap::new();
    metadata.insert("run.integrator".into(), "rk4".into());
    metadata.insert("run.dt".into(), format!("{}", plan.dt));
    metadata.insert("run.decimation".into(), plan.record_decimation.to_string());
    metadata.insert("run.steps".into(), steps.to_string());
    Ok(TimeSeries {
        dt: plan.dt * plan.record_decimation as f64,
        x1,
        x2,
        v1,
        v2,
        seed,
        metadata,
    })
}

/// Amplitudes and relative phase at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneEstimate {
    /// Peak amplitude of `x1` [m].
    pub amp1: f64,
    /// Peak amplitude of `x2` [m].
    pub amp2: f64,
    /// `arg(X2) − arg(X1)`, wrapped to (−π, π] [rad].
    pub phase_diff: f64,
}

/// Minimum number of drive cycles in the analysis window.
pub const MIN_ANALYSIS_CYCLES: f64 = 50.0;

/// Extracts the component at `frequency` from the window starting at
/// `start_fraction` of the series.
///
/// The projection uses a Hann taper over a whole number of drive periods,
/// which keeps tones five or more bins away below 1% leakage.
pub fn steady_state_amplitude(series: &TimeSeries, frequency: f64, start_fraction: f64) -> Result<ToneEstimate> {
    ensure_positive("frequency", frequency)?;
    if !(0.0..1.0).contains(&start_fraction) {
        return Err(Error::param("start_fraction", "must lie in [0, 1)"));
    }
    let start = (series.len() as f64 * start_fraction).floor() as usize;
    let avail = series.len().saturating_sub(start);
    let cycles = avail as f64 * series.dt * frequency;
    if cycles < MIN_ANALYSIS_CYCLES {
        return Err(Error::WindowTooShort {
            cycles,
            required: MIN_ANALYSIS_CYCLES,
        });
    }
    let samples_per_cycle = 1.0 / (series.dt * frequency);
    let n = (cycles.floor() * samples_per_cycle).round() as usize;
    let n = n.min(avail);

    let project = |x: &[f64]| {
        let (mut re, mut im, mut wsum) = (0.0, 0.0, 0.0);
        for (i, &v) in x[start..start + n].iter().enumerate() {
            let w = 0.5 - 0.5 * (TAU * i as f64 / n as f64).cos();
            let arg = TAU * frequency * (start + i) as f64 * series.dt;
            let (s, c) = arg.sin_cos();
            re += w * v * c;
            im -= w * v * s;
            wsum += w;
        }
        (2.0 * re / wsum, 2.0 * im / wsum)
    };
    let (r1, i1) = project(&series.x1);
    let (r2, i2) = project(&series.x2);
    let mut phase_diff = i2.atan2(r2) - i1.atan2(r1);
    while phase_diff > std::f64::consts::PI {
        phase_diff -= TAU;
    }
    while phase_diff <= -std::f64::consts::PI {
        phase_diff += TAU;
    }
    Ok(ToneEstimate {
        amp1: r1.hypot(i1),
        amp2: r2.hypot(i2),
        phase_diff,
    })
}
