//! C ABI for `cr_noise_lab`.
//!
//! Every fallible function returns a [`CrStatus`]; on failure the message is
//! available from [`cr_last_error_message`] on the same thread. Objects are
//! opaque handles created by `*_new` / producing functions and released with
//! the matching `*_free`. Out-pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cr_noise_lab::error::Error;
use cr_noise_lab::noisebudget::{self, Environment, ReadoutConfig};
use cr_noise_lab::resolution;
use cr_noise_lab::spectral::{self, Spectrum};
use cr_noise_lab::sysmodel::{self, ModeLabel, Modes, SystemConfig, SystemMatrices};
use cr_noise_lab::timesim::{
    self, Forcing, HarmonicDrive, NoiseTarget, Resonator, SimulationPlan, StochasticDrive, TimeSeries,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// A parameter is outside its admissible range.
    InvalidParameter = 2,
    /// The stiffness matrix is not positive definite.
    NotPositiveDefinite = 3,
    /// Undamped system evaluated exactly at a resonance.
    UndampedResonance = 4,
    /// Time step above the stability bound.
    TimeStepTooLarge = 5,
    /// The integration diverged or produced non-finite values.
    NonFinite = 6,
    /// Series or analysis window too short.
    TooShort = 7,
    /// Band outside the spectrum grid.
    OutOfRange = 8,
    /// Output voltage is zero.
    NoCarrier = 9,
    /// No transduction factor was supplied.
    MissingTransduction = 10,
    /// A Rust panic was caught at the boundary.
    Internal = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(err: &Error) -> CrStatus {
    match err {
        Error::InvalidParameter { .. } | Error::Config { .. } | Error::Io(_) => CrStatus::InvalidParameter,
        Error::NotPositiveDefinite(_) => CrStatus::NotPositiveDefinite,
        Error::UndampedResonance { .. } => CrStatus::UndampedResonance,
        Error::TimeStepTooLarge { .. } => CrStatus::TimeStepTooLarge,
        Error::TooManySamples(_) | Error::NonFiniteState { .. } => CrStatus::NonFinite,
        Error::WindowTooShort { .. } | Error::SeriesTooShort { .. } => CrStatus::TooShort,
        Error::BandOutOfRange { .. } => CrStatus::OutOfRange,
        Error::NoCarrier => CrStatus::NoCarrier,
        Error::MissingTransduction => CrStatus::MissingTransduction,
    }
}

/// Runs `f`, converting errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), CrStatus>) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CrStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            CrStatus::Internal
        }
    }
}

trait IntoStatus<T> {
    fn st(self) -> Result<T, CrStatus>;
}

impl<T> IntoStatus<T> for cr_noise_lab::Result<T> {
    fn st(self) -> Result<T, CrStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), CrStatus> {
    if p.is_null() {
        set_error(format!("`{name}` is null"));
        Err(CrStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// system

/// Physical parameters, SI units.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrSystemParams {
    pub m1: f64,
    pub m2: f64,
    pub km1: f64,
    pub km2: f64,
    pub kc: f64,
    pub c1: f64,
    pub c2: f64,
    pub cc: f64,
}

/// Opaque coupled-pair model.
pub struct CrSystem {
    config: SystemConfig,
    matrices: SystemMatrices,
    modes: Modes,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrModeLabel {
    InPhase = 0,
    OutOfPhase = 1,
    Degenerate = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrMode {
    /// [Hz]
    pub frequency: f64,
    /// [rad/s]
    pub omega: f64,
    /// Unit-norm shape `(x1, x2)`.
    pub shape: [f64; 2],
    pub label: CrModeLabel,
    pub modal_q: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrModes {
    /// Ascending frequency.
    pub modes: [CrMode; 2],
    /// `f2 - f1` [Hz]
    pub split: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CrComplex {
    pub re: f64,
    pub im: f64,
}

fn make_system(config: SystemConfig) -> Result<Box<CrSystem>, CrStatus> {
    let matrices = sysmodel::build_system(&config).st()?;
    let modes = sysmodel::mode_analysis(&matrices).st()?;
    Ok(Box::new(CrSystem {
        config,
        matrices,
        modes,
    }))
}

/// Builds a system from `params`.
///
/// # Safety
/// `params` must point to a valid `CrSystemParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_system_new(params: *const CrSystemParams, out: *mut *mut CrSystem) -> CrStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        let p = unsafe { *params };
        let sys = make_system(SystemConfig {
            m1: p.m1,
            m2: p.m2,
            km1: p.km1,
            km2: p.km2,
            kc: p.kc,
            c1: p.c1,
            c2: p.c2,
            cc: p.cc,
        })?;
        unsafe { *out = Box::into_raw(sys) };
        Ok(())
    })
}

/// The reference design (kc = -393.5 N/m, Q = 2547).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_system_reference(out: *mut *mut CrSystem) -> CrStatus {
    guard(|| {
        non_null(out, "out")?;
        let sys = make_system(SystemConfig::reference())?;
        unsafe { *out = Box::into_raw(sys) };
        Ok(())
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `sys` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_system_free(sys: *mut CrSystem) {
    if !sys.is_null() {
        drop(unsafe { Box::from_raw(sys) });
    }
}

/// Parameters of an existing system.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_system_params(sys: *const CrSystem, out: *mut CrSystemParams) -> CrStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(out, "out")?;
        let c = unsafe { &(*sys).config };
        unsafe {
            *out = CrSystemParams {
                m1: c.m1,
                m2: c.m2,
                km1: c.km1,
                km2: c.km2,
                kc: c.kc,
                c1: c.c1,
                c2: c.c2,
                cc: c.cc,
            }
        };
        Ok(())
    })
}

/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_system_modes(sys: *const CrSystem, out: *mut CrModes) -> CrStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(out, "out")?;
        let modes = unsafe { &(*sys).modes };
        let conv = |m: &sysmodel::Mode| CrMode {
            frequency: m.frequency,
            omega: m.omega,
            shape: m.shape,
            label: match m.label {
                ModeLabel::InPhase => CrModeLabel::InPhase,
                ModeLabel::OutOfPhase => CrModeLabel::OutOfPhase,
                ModeLabel::Degenerate => CrModeLabel::Degenerate,
            },
            modal_q: m.modal_q,
        };
        unsafe {
            *out = CrModes {
                modes: [conv(modes.first()), conv(modes.second())],
                split: modes.split(),
            }
        };
        Ok(())
    })
}

/// Receptance `h[j][k]` at `frequency` [Hz], written row-major into `out[4]`.
///
/// # Safety
/// `sys` must be a live handle; `out` must have room for 4 values.
#[no_mangle]
pub unsafe extern "C" fn cr_system_receptance(sys: *const CrSystem, frequency: f64, out: *mut CrComplex) -> CrStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(out, "out")?;
        let h = sysmodel::receptance(unsafe { &(*sys).matrices }, frequency).st()?;
        let dst = unsafe { std::slice::from_raw_parts_mut(out, 4) };
        for j in 0..2 {
            for k in 0..2 {
                dst[2 * j + k] = CrComplex {
                    re: h[j][k].re,
                    im: h[j][k].im,
                };
            }
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// noise budget and resolution

/// One-sided thermal force PSD `4*kB*T*c` [N^2/Hz].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_thermal_force_psd(damping: f64, temperature: f64, out: *mut f64) -> CrStatus {
    guard(|| {
        non_null(out, "out")?;
        let env = Environment {
            temperature,
            bandwidth: 1.0,
        };
        let v = noisebudget::thermal_force_psd(damping, &env).st()?;
        unsafe { *out = v };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrReadout {
    /// Feedback resistor [ohm]
    pub r_f: f64,
    /// Amplifier current noise density [A/sqrt(Hz)]
    pub i_n: f64,
    /// Amplifier voltage noise density [V/sqrt(Hz)]
    pub v_n: f64,
    /// Noise-equivalent bandwidth factor
    pub neb_factor: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CrElectronicBudget {
    pub i_rf: f64,
    pub i_vn: f64,
    pub i_in: f64,
    /// RSS of the per-sqrt(Hz) densities.
    pub total_density_convention: f64,
    /// RSS of the three integrated rows.
    pub total_integrated: f64,
}

/// Default readout (1 Mohm, 20 fA/sqrt(Hz), 70 nV/sqrt(Hz), 1.57).
#[no_mangle]
pub extern "C" fn cr_readout_default() -> CrReadout {
    let d = ReadoutConfig::default();
    CrReadout {
        r_f: d.r_f,
        i_n: d.i_n,
        v_n: d.v_n,
        neb_factor: d.neb_factor,
    }
}

/// # Safety
/// `readout` must point to a valid `CrReadout`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_electronic_budget(
    readout: *const CrReadout,
    r_x: f64,
    temperature: f64,
    bandwidth: f64,
    out: *mut CrElectronicBudget,
) -> CrStatus {
    guard(|| {
        non_null(readout, "readout")?;
        non_null(out, "out")?;
        let r = unsafe { *readout };
        let cfg = ReadoutConfig {
            r_f: r.r_f,
            i_n: r.i_n,
            v_n: r.v_n,
            neb_factor: r.neb_factor,
        };
        let env = Environment { temperature, bandwidth };
        let b = noisebudget::electronic_budget(&cfg, r_x, &env).st()?;
        unsafe {
            *out = CrElectronicBudget {
                i_rf: b.i_rf,
                i_vn: b.i_vn,
                i_in: b.i_in,
                total_density_convention: b.i_total_paper,
                total_integrated: b.i_total_integrated,
            }
        };
        Ok(())
    })
}

/// RSS of uncorrelated mechanical and electronic noise currents.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_total_system_noise(i_mech: f64, i_elec: f64, out: *mut f64) -> CrStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = noisebudget::total_system_noise(i_mech, i_elec).st()?;
        unsafe { *out = v };
        Ok(())
    })
}

/// `v_noise / v_out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_amplitude_resolution(v_noise: f64, v_out: f64, out: *mut f64) -> CrStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = resolution::amplitude_resolution(v_noise, v_out).st()?;
        unsafe { *out = v };
        Ok(())
    })
}

/// RSS of the two resonators' amplitude resolutions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_ar_resolution(res_r1: f64, res_r2: f64, out: *mut f64) -> CrStatus {
    guard(|| {
        non_null(out, "out")?;
        let v = resolution::ar_resolution(res_r1, res_r2).st()?;
        unsafe { *out = v };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CrMinDetectable {
    /// `resolution / sensitivity`
    pub absolute: f64,
    /// `resolution / sqrt(B) / sensitivity`
    pub density: f64,
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_min_detectable_stiffness(
    resolution_value: f64,
    sensitivity: f64,
    bandwidth: f64,
    out: *mut CrMinDetectable,
) -> CrStatus {
    guard(|| {
        non_null(out, "out")?;
        let m = resolution::min_detectable_stiffness(resolution_value, sensitivity, bandwidth).st()?;
        unsafe {
            *out = CrMinDetectable {
                absolute: m.absolute,
                density: m.density,
            }
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// simulation

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrNoiseTarget {
    None = 0,
    Resonator1 = 1,
    Resonator2 = 2,
    Both = 3,
}

/// Forcing of a run. A zero `harmonic_amplitude` disables the harmonic drive.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrForcing {
    /// Peak force [N]
    pub harmonic_amplitude: f64,
    /// [Hz]
    pub harmonic_frequency: f64,
    /// [rad]
    pub harmonic_phase: f64,
    /// 1 or 2
    pub harmonic_target: u32,
    pub noise_target: CrNoiseTarget,
    /// One-sided force PSD [N^2/Hz]
    pub noise_psd: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CrPlan {
    /// Integration step [s]; zero or negative selects 1/(50*f2).
    pub dt: f64,
    /// [s]
    pub duration: f64,
    /// Record every n-th step (>= 1).
    pub decimation: usize,
    /// `(x1, v1, x2, v2)`
    pub initial_state: [f64; 4],
}

/// Opaque recorded trajectory.
pub struct CrTimeSeries {
    inner: TimeSeries,
}

fn resonator(index: u32) -> Result<Resonator, CrStatus> {
    match index {
        1 => Ok(Resonator::One),
        2 => Ok(Resonator::Two),
        _ => {
            set_error(format!("resonator must be 1 or 2, got {index}"));
            Err(CrStatus::InvalidParameter)
        }
    }
}

/// Integrates the system under `forcing` and returns the recorded series.
///
/// # Safety
/// `sys` must be a live handle; `forcing` and `plan` must be valid; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_simulate(
    sys: *const CrSystem,
    forcing: *const CrForcing,
    plan: *const CrPlan,
    out: *mut *mut CrTimeSeries,
) -> CrStatus {
    guard(|| {
        non_null(sys, "sys")?;
        non_null(forcing, "forcing")?;
        non_null(plan, "plan")?;
        non_null(out, "out")?;
        let sys = unsafe { &*sys };
        let (f, p) = unsafe { (*forcing, *plan) };
        let mut frc = Forcing::none();
        if f.harmonic_amplitude != 0.0 {
            frc.harmonic.push(HarmonicDrive {
                target: resonator(f.harmonic_target)?,
                amplitude: f.harmonic_amplitude,
                frequency: f.harmonic_frequency,
                phase: f.harmonic_phase,
            });
        }
        let target = match f.noise_target {
            CrNoiseTarget::None => None,
            CrNoiseTarget::Resonator1 => Some(NoiseTarget::One),
            CrNoiseTarget::Resonator2 => Some(NoiseTarget::Two),
            CrNoiseTarget::Both => Some(NoiseTarget::Both),
        };
        frc.stochastic = target.map(|target| StochasticDrive {
            target,
            force_psd: f.noise_psd,
            seed: f.seed,
        });
        let mut sp = SimulationPlan::for_system(&sys.matrices, p.duration)
            .st()?
            .with_decimation(p.decimation)
            .with_initial_state(p.initial_state);
        if p.dt > 0.0 {
            sp.dt = p.dt;
        }
        let ts = timesim::simulate(&sys.matrices, &frc, &sp).st()?;
        unsafe { *out = Box::into_raw(Box::new(CrTimeSeries { inner: ts })) };
        Ok(())
    })
}

/// Number of recorded samples, 0 for null.
///
/// # Safety
/// `ts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_timeseries_len(ts: *const CrTimeSeries) -> usize {
    if ts.is_null() {
        0
    } else {
        unsafe { (*ts).inner.len() }
    }
}

/// Spacing of recorded samples [s], 0 for null.
///
/// # Safety
/// `ts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_timeseries_dt(ts: *const CrTimeSeries) -> f64 {
    if ts.is_null() {
        0.0
    } else {
        unsafe { (*ts).inner.dt }
    }
}

/// Displacement samples of resonator 1 or 2, borrowed from the handle
/// (`cr_timeseries_len` values). Null on a bad argument.
///
/// # Safety
/// `ts` must be null or a live handle; the data dies with the handle.
#[no_mangle]
pub unsafe extern "C" fn cr_timeseries_data(ts: *const CrTimeSeries, resonator_index: u32) -> *const f64 {
    if ts.is_null() {
        return ptr::null();
    }
    match resonator(resonator_index) {
        Ok(r) => unsafe { (*ts).inner.channel(r).as_ptr() },
        Err(_) => ptr::null(),
    }
}

/// # Safety
/// `ts` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_timeseries_free(ts: *mut CrTimeSeries) {
    if !ts.is_null() {
        drop(unsafe { Box::from_raw(ts) });
    }
}

// ---------------------------------------------------------------------------
// spectra

/// Opaque one-sided PSD.
pub struct CrSpectrum {
    inner: Spectrum,
}

/// Welch PSD of `n` samples at spacing `dt`. A zero `segment_length`
/// selects the largest power of two not above `n/8`.
///
/// # Safety
/// `x` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_welch_psd(
    x: *const f64,
    n: usize,
    dt: f64,
    segment_length: usize,
    overlap: f64,
    out: *mut *mut CrSpectrum,
) -> CrStatus {
    guard(|| {
        non_null(x, "x")?;
        non_null(out, "out")?;
        let data = unsafe { std::slice::from_raw_parts(x, n) };
        let seg = if segment_length == 0 {
            spectral::default_segment_length(n)
                .ok_or(Error::SeriesTooShort { len: n, segment: 16 })
                .st()?
        } else {
            segment_length
        };
        let s = spectral::welch_psd(data, dt, seg, overlap).st()?;
        unsafe { *out = Box::into_raw(Box::new(CrSpectrum { inner: s })) };
        Ok(())
    })
}

/// Number of frequency bins, 0 for null.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_spectrum_len(s: *const CrSpectrum) -> usize {
    if s.is_null() {
        0
    } else {
        unsafe { (*s).inner.values.len() }
    }
}

/// Bin spacing [Hz], 0 for null.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cr_spectrum_df(s: *const CrSpectrum) -> f64 {
    if s.is_null() {
        0.0
    } else {
        unsafe { (*s).inner.df }
    }
}

/// PSD values borrowed from the handle; bin `k` is at `k*df`.
///
/// # Safety
/// `s` must be null or a live handle; the data dies with the handle.
#[no_mangle]
pub unsafe extern "C" fn cr_spectrum_values(s: *const CrSpectrum) -> *const f64 {
    if s.is_null() {
        ptr::null()
    } else {
        unsafe { (*s).inner.values.as_ptr() }
    }
}

/// `sum(values)*df` over the windowed, overlap-averaged mean square.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_spectrum_parseval_ratio(s: *const CrSpectrum, out: *mut f64) -> CrStatus {
    guard(|| {
        non_null(s, "s")?;
        non_null(out, "out")?;
        unsafe { *out = (*s).inner.parseval_ratio() };
        Ok(())
    })
}

/// Mean-square power in `[f_center - B/2, f_center + B/2]`.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_spectrum_band_power(
    s: *const CrSpectrum,
    f_center: f64,
    bandwidth: f64,
    out: *mut f64,
) -> CrStatus {
    guard(|| {
        non_null(s, "s")?;
        non_null(out, "out")?;
        let v = spectral::band_power(unsafe { &(*s).inner }, f_center, bandwidth).st()?;
        unsafe { *out = v };
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_spectrum_free(s: *mut CrSpectrum) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}
