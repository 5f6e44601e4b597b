//! Readout voltages, output resolution and minimum detectable stiffness.
//!
//! Every amplitude here is tagged: displacements and motional currents are
//! peak values, output voltages are carried both as peak and rms, and noise
//! voltages are rms.

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::report::Report;
use crate::sysmodel::DerivedQuantities;

/// Amplitude-ratio sensitivity per normalized stiffness perturbation obtained
/// from the published system-level simulation.
pub const PAPER_SIMULATED_SENSITIVITY: f64 = 180.0;

/// `η·ω·x` [A]; peak in, peak out.
pub fn motional_current(eta: f64, omega: f64, x: f64) -> Result<f64> {
    ensure_non_negative("eta", eta)?;
    ensure_non_negative("omega", omega)?;
    ensure_non_negative("x", x)?;
    Ok(eta * omega * x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputVoltage {
    pub peak: f64,
    pub rms: f64,
}

pub fn output_voltage(i_mot_peak: f64, r_f: f64) -> Result<OutputVoltage> {
    ensure_non_negative("i_mot", i_mot_peak)?;
    ensure_positive("readout.r_f", r_f)?;
    let peak = i_mot_peak * r_f;
    Ok(OutputVoltage {
        peak,
        rms: peak / std::f64::consts::SQRT_2,
    })
}

/// Smallest resolvable fractional amplitude change, `v_noise / v_out` (both rms).
pub fn amplitude_resolution(v_noise: f64, v_out: f64) -> Result<f64> {
    ensure_non_negative("v_noise", v_noise)?;
    ensure_non_negative("v_out", v_out)?;
    if v_out == 0.0 {
        return Err(Error::NoCarrier);
    }
    Ok(v_noise / v_out)
}

/// Amplitude-ratio resolution as the RSS of the two amplitude resolutions.
pub fn ar_resolution(res_r1: f64, res_r2: f64) -> Result<f64> {
    ensure_non_negative("res_r1", res_r1)?;
    ensure_non_negative("res_r2", res_r2)?;
    Ok(res_r1.hypot(res_r2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGate {
    pub resolvable: bool,
    pub snr: f64,
}

/// A shift is resolvable when it is at least as large as the rms noise.
pub fn snr_gate(signal_shift: f64, v_noise: f64) -> Result<SnrGate> {
    ensure_non_negative("signal_shift", signal_shift)?;
    ensure_positive("v_noise", v_noise)?;
    let snr = signal_shift / v_noise;
    Ok(SnrGate {
        resolvable: snr >= 1.0,
        snr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinDetectable {
    /// `resolution / sensitivity`, in normalized-δk units.
    pub absolute: f64,
    /// `(resolution / sqrt(B)) / sensitivity`, per √Hz.
    pub density: f64,
}

pub fn min_detectable_stiffness(resolution: f64, sensitivity: f64, bandwidth: f64) -> Result<MinDetectable> {
    ensure_non_negative("resolution", resolution)?;
    ensure_positive("sensitivity", sensitivity)?;
    ensure_positive("bandwidth", bandwidth)?;
    Ok(MinDetectable {
        absolute: resolution / sensitivity,
        density: resolution / bandwidth.sqrt() / sensitivity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SensitivitySource {
    /// `1/(2|κ|)` from the first-order amplitude-ratio formula.
    #[default]
    Formula,
    /// The published simulated value, 180 per δk.
    PaperSimulated,
}

impl SensitivitySource {
    pub fn as_str(&self) -> &'static str {
        match self {
            SensitivitySource::Formula => "formula",
            SensitivitySource::PaperSimulated => "paper_simulated",
        }
    }

    pub fn value(&self, derived: &DerivedQuantities) -> Result<f64> {
        match self {
            SensitivitySource::Formula => derived.ar_sensitivity_per_dk().ok_or_else(|| {
                Error::param(
                    "system.kc",
                    "uncoupled system: amplitude-ratio sensitivity is unbounded",
                )
            }),
            SensitivitySource::PaperSimulated => Ok(PAPER_SIMULATED_SENSITIVITY),
        }
    }
}

/// Output of resonator `j` at mode `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelOutput {
    /// [m peak]
    pub x_peak: f64,
    /// [A peak]
    pub i_mot_peak: f64,
    pub v_out: OutputVoltage,
    /// [V rms]
    pub v_noise_rms: f64,
    pub resolution: f64,
    /// `v_out.rms / v_noise_rms`.
    pub snr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionInputs {
    /// [C/m]
    pub eta: f64,
    /// Mode angular frequencies [rad/s].
    pub omegas: [f64; 2],
    /// `x[j][i]`: peak displacement of resonator `j` at mode `i` [m].
    pub amplitudes: [[f64; 2]; 2],
    /// [Ω]
    pub r_f: f64,
    /// Total input-referred noise current [A rms].
    pub i_noise: f64,
    /// AR sensitivity per δk.
    pub sensitivity: f64,
    pub sensitivity_source: SensitivitySource,
    /// [Hz]
    pub bandwidth: f64,
    /// Replaces the computed AR resolution in the minimum-detectable step.
    pub ar_resolution_override: Option<f64>,
    /// [N/m]; used for the stiffness-scaled footnote.
    pub k_eff: f64,
    /// `1/(2|κ|)`, printed next to the sensitivity in use.
    pub formula_sensitivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionReport {
    /// `channels[j][i]`.
    pub channels: [[ChannelOutput; 2]; 2],
    /// AR resolution at each mode.
    pub ar_resolution: [f64; 2],
    /// Mode index whose AR resolution enters the minimum detectable stiffness.
    pub selected_mode: usize,
    /// AR resolution actually used (override or selected computed value).
    pub ar_resolution_used: f64,
    pub sensitivity: f64,
    pub sensitivity_source: SensitivitySource,
    pub min_detectable: MinDetectable,
    /// `(j, i)` with the lowest SNR.
    pub limiting_channel: (usize, usize),
    pub inputs: ResolutionInputs,
}

pub fn resolve(inputs: &ResolutionInputs) -> Result<ResolutionReport> {
    ensure_non_negative("i_noise", inputs.i_noise)?;
    let v_noise = inputs.i_noise * inputs.r_f;
    let mut channels = [[None; 2]; 2];
    for (j, row) in channels.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            let x = inputs.amplitudes[j][i];
            let i_mot = motional_current(inputs.eta, inputs.omegas[i], x)?;
            let v_out = output_voltage(i_mot, inputs.r_f)?;
            let resolution = amplitude_resolution(v_noise, v_out.rms)?;
            let snr = if v_noise > 0.0 {
                v_out.rms / v_noise
            } else {
                f64::INFINITY
            };
            *slot = Some(ChannelOutput {
                x_peak: x,
                i_mot_peak: i_mot,
                v_out,
                v_noise_rms: v_noise,
                resolution,
                snr,
            });
        }
    }
    let channels = channels.map(|row| row.map(|c| c.expect("filled above")));
    let ar = [
        ar_resolution(channels[0][0].resolution, channels[1][0].resolution)?,
        ar_resolution(channels[0][1].resolution, channels[1][1].resolution)?,
    ];

    let selected_mode = if ar[0] <= ar[1] { 0 } else { 1 };
    let used = match inputs.ar_resolution_override {
        Some(v) => ensure_non_negative("resolution.ar_resolution_override", v)?,
        None => ar[selected_mode],
    };
    let min_detectable = min_detectable_stiffness(used, inputs.sensitivity, inputs.bandwidth)?;

    let mut limiting = (0, 0);
    for j in 0..2 {
        for i in 0..2 {
            if channels[j][i].snr < channels[limiting.0][limiting.1].snr {
                limiting = (j, i);
            }
        }
    }
    Ok(ResolutionReport {
        channels,
        ar_resolution: ar,
        selected_mode,
        ar_resolution_used: used,
        sensitivity: inputs.sensitivity,
        sensitivity_source: inputs.sensitivity_source,
        min_detectable,
        limiting_channel: limiting,
        inputs: *inputs,
    })
}

impl ResolutionReport {
    pub fn report(&self) -> Report {
        let mut r = Report::new("Output resolution");
        for j in 0..2 {
            for i in 0..2 {
                let c = &self.channels[j][i];
                let tag = format!("{}{}", j + 1, i + 1);
                r.push(format!("x_{tag}"), c.x_peak, "m peak", "input");
                r.push(format!("i_mot_{tag}"), c.i_mot_peak, "A peak", "eta*omega*x");
                r.push(format!("v_out_{tag}_peak"), c.v_out.peak, "V peak", "i_mot*Rf");
                r.push(format!("v_out_{tag}_rms"), c.v_out.rms, "V rms", "peak/sqrt(2)");
                r.push(
                    format!("amplitude_resolution_{tag}"),
                    c.resolution,
                    "1",
                    "v_noise/v_out",
                );
                r.push(format!("snr_{tag}"), c.snr, "1", "v_out/v_noise");
            }
        }
        r.push("v_noise", self.channels[0][0].v_noise_rms, "V rms", "i_noise*Rf");
        r.push("ar_resolution_mode1", self.ar_resolution[0], "1", "RSS");
        r.push("ar_resolution_mode2", self.ar_resolution[1], "1", "RSS");
        let used_source = if self.inputs.ar_resolution_override.is_some() {
            "override"
        } else {
            "computed"
        };
        r.push("ar_resolution_used", self.ar_resolution_used, "1", used_source);
        r.push(
            "sensitivity",
            self.sensitivity,
            "1/dk",
            self.sensitivity_source.as_str(),
        );
        if let Some(f) = self.inputs.formula_sensitivity {
            r.push("sensitivity_formula", f, "1/dk", "1/(2|kappa|)");
            r.push(
                "sensitivity_ratio_paper_to_formula",
                PAPER_SIMULATED_SENSITIVITY / f,
                "1",
                "180/formula",
            );
        }
        r.push(
            "min_detectable_stiffness",
            self.min_detectable.absolute,
            "N/m [2]",
            "resolution/sensitivity",
        );
        r.push(
            "min_detectable_stiffness_density",
            self.min_detectable.density,
            "N/m/sqrt(Hz) [2]",
            "resolution/sqrt(B)/sensitivity",
        );
        let (j, i) = self.limiting_channel;
        r.note(format!(
            "resolution-limiting channel: resonator {} at mode {} (lowest SNR)",
            j + 1,
            i + 1
        ));
        r.note(format!(
            "minimum detectable stiffness is in normalized dk units, labeled N/m for parity; times k_eff it is {:.4e} N/m ({:.4e} N/m/sqrt(Hz))",
            self.min_detectable.absolute * self.inputs.k_eff,
            self.min_detectable.density * self.inputs.k_eff
        ));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn motional_currents() {
        assert!(rel(motional_current(0.4582, 1.0, 0.419e-6).unwrap(), 1.92e-7) < 1e-3);
        assert!(rel(motional_current(0.4593, 1.0, 0.836e-6).unwrap(), 3.84e-7) < 1e-3);
        assert_eq!(motional_current(0.4582, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn output_voltages() {
        let v = output_voltage(192e-9, 1e6).unwrap();
        assert!(rel(v.peak, 0.192) < 1e-12);
        assert!(rel(v.rms, 0.1358) < 1e-3);
        let v = output_voltage(384e-9, 1e6).unwrap();
        assert!(rel(v.rms, 0.2715) < 1e-3);
        assert_eq!(output_voltage(0.0, 1e6).unwrap().peak, 0.0);
        assert!(output_voltage(1e-9, 0.0).is_err());
    }

    #[test]
    fn amplitude_resolutions() {
        assert!(rel(amplitude_resolution(156e-9, 0.135).unwrap(), 1.155e-6) < 1e-3);
        assert!(rel(amplitude_resolution(156e-9, 0.271).unwrap(), 5.756e-7) < 1e-3);
        assert_eq!(amplitude_resolution(0.0, 0.135).unwrap(), 0.0);
        assert_eq!(amplitude_resolution(1e-7, 0.0), Err(Error::NoCarrier));
    }

    #[test]
    fn ar_rss() {
        assert!(rel(ar_resolution(1.155e-6, 1.155e-6).unwrap(), 1.633e-6) < 1e-3);
        assert!(rel(ar_resolution(5.756e-7, 5.756e-7).unwrap(), 8.140e-7) < 1e-3);
        assert_eq!(ar_resolution(2.0e-6, 0.0).unwrap(), 2.0e-6);
    }

    #[test]
    fn snr_boundaries() {
        let g = snr_gate(156e-9, 156e-9).unwrap();
        assert!(g.resolvable);
        assert_eq!(g.snr, 1.0);
        assert!(!snr_gate(0.0, 156e-9).unwrap().resolvable);
        let g = snr_gate(1560e-9, 156e-9).unwrap();
        assert!(g.resolvable && rel(g.snr, 10.0) < 1e-12);
        assert!(snr_gate(1.0, 0.0).is_err());
    }

    #[test]
    fn min_detectable_endpoints() {
        let m = min_detectable_stiffness(3.89e-7, 180.0, 10.0).unwrap();
        assert!(rel(m.absolute, 2.161e-9) < 1e-3);
        assert!(rel(m.density, 6.83e-10) < 1e-3);
        assert!(rel(3.89e-7 / 10f64.sqrt(), 1.23e-7) < 0.005);
        assert_eq!(min_detectable_stiffness(0.0, 180.0, 10.0).unwrap().absolute, 0.0);
        assert!(min_detectable_stiffness(1e-7, 0.0, 10.0).is_err());
    }

    fn paper_inputs() -> ResolutionInputs {
        let w1 = std::f64::consts::TAU * 2474.7;
        let eta = 0.4582 / w1;
        ResolutionInputs {
            eta,
            omegas: [w1, std::f64::consts::TAU * 2482.6],
            amplitudes: [[0.419e-6, 0.836e-6], [0.419e-6, 0.836e-6]],
            r_f: 1e6,
            i_noise: 1.569e-13,
            sensitivity: 180.0,
            sensitivity_source: SensitivitySource::PaperSimulated,
            bandwidth: 10.0,
            ar_resolution_override: Some(3.89e-7),
            k_eff: 122_968.75,
            formula_sensitivity: Some(156.25),
        }
    }

    #[test]
    fn resolve_paper_chain() {
        let rep = resolve(&paper_inputs()).unwrap();
        assert!(rel(rep.channels[0][0].resolution, 1.155e-6) < 0.005);
        assert!(rel(rep.channels[0][1].resolution, 5.756e-7) < 0.005);
        assert!(rel(rep.min_detectable.absolute, 2.161e-9) < 0.005);
        assert_eq!(rep.selected_mode, 1);
        assert_eq!(rep.limiting_channel.1, 0);
        let text = rep.report().to_text();
        assert!(text.contains("min_detectable_stiffness"));

        let quiet = resolve(&ResolutionInputs {
            i_noise: 0.0,
            ar_resolution_override: None,
            ..paper_inputs()
        })
        .unwrap();
        assert!(quiet.channels.iter().flatten().all(|c| c.resolution == 0.0));
        assert_eq!(quiet.ar_resolution, [0.0, 0.0]);
        assert_eq!(quiet.min_detectable.absolute, 0.0);
    }

    #[test]
    fn sensitivity_sources() {
        let d = crate::sysmodel::SystemConfig::reference().derived();
        let f = SensitivitySource::Formula.value(&d).unwrap();
        assert!(rel(f, 156.25) < 1e-12);
        assert_eq!(SensitivitySource::PaperSimulated.value(&d).unwrap(), 180.0);
        assert!((PAPER_SIMULATED_SENSITIVITY - f) / PAPER_SIMULATED_SENSITIVITY < 0.25);
    }

    proptest! {
        #[test]
        fn ar_dominates_components(a in 0.0f64..1e-3, b in 0.0f64..1e-3) {
            let r = ar_resolution(a, b).unwrap();
            prop_assert!(r >= a.max(b));
            let same = ar_resolution(a, a).unwrap();
            prop_assert!((same - std::f64::consts::SQRT_2 * a).abs() <= 1e-15 * a.max(1e-300));
        }

        #[test]
        fn resolution_is_homogeneous(vn in 1e-12f64..1e-3, vo in 1e-6f64..10.0, lambda in 1e-3f64..1e3) {
            let r = amplitude_resolution(vn, vo).unwrap();
            let s = amplitude_resolution(vn * lambda, vo * lambda).unwrap();
            prop_assert!(rel(s, r) < 1e-12);
        }

        #[test]
        fn density_scales_to_absolute(res in 0.0f64..1e-3, sens in 1.0f64..1e4, bw in 0.1f64..1e3) {
            let m = min_detectable_stiffness(res, sens, bw).unwrap();
            prop_assert!((m.density * bw.sqrt() - m.absolute).abs() <= 1e-12 * m.absolute.max(1e-300));
        }
    }
}
