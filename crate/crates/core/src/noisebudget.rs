//! Thermomechanical and electronic-readout noise budgets.
//!
//! The thermal pipeline turns the damping-force PSD `4·k_B·T·c` and the
//! displacement-noise PSD at each mode into rms forces, displacements and
//! motional noise currents over the measurement bandwidth. The electronic
//! budget refers the transimpedance amplifier's noise sources to its input
//! as currents.
//!
//! Two electronic totals are kept. `i_total_paper` is the RSS of the three
//! per-√Hz *densities* with neither the bandwidth nor the 1.57
//! noise-bandwidth factor applied, exactly as the published table computes
//! its final row. `i_total_integrated` is the RSS of the three integrated
//! rows and is the dimensionally consistent rms current.

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::report::Report;
use crate::sysmodel::{receptance, DerivedQuantities, Modes, SystemMatrices};
use crate::timesim::Resonator;

/// Boltzmann constant [J/K] (exact SI value).
pub const K_BOLTZMANN: f64 = 1.380649e-23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// [K]
    pub temperature: f64,
    /// Measurement bandwidth around each mode [Hz].
    pub bandwidth: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self {
            temperature: 300.0,
            bandwidth: 10.0,
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        ensure_non_negative("env.temperature", self.temperature)?;
        ensure_positive("env.bandwidth", self.bandwidth)?;
        Ok(())
    }

    pub fn kt(&self) -> f64 {
        K_BOLTZMANN * self.temperature
    }
}

/// Parallel-plate electrode geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectrodeGeometry {
    /// Polarization voltage [V].
    pub v_dc: f64,
    /// Permittivity [F/m].
    pub epsilon: f64,
    /// Electrode area [m²].
    pub area: f64,
    /// Gap [m].
    pub gap: f64,
}

impl ElectrodeGeometry {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("transducer.v_dc", self.v_dc)?;
        ensure_positive("transducer.epsilon", self.epsilon)?;
        ensure_positive("transducer.area", self.area)?;
        ensure_positive("transducer.gap", self.gap)?;
        Ok(())
    }

    /// `v_dc·ε·A / d²` [C/m].
    pub fn eta(&self) -> f64 {
        self.v_dc * self.epsilon * self.area / (self.gap * self.gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransducerConfig {
    /// Transduction factor [C/m]; derived from `geometry` when absent.
    pub eta: Option<f64>,
    /// Motional resistance [Ω]; derived when absent.
    pub r_x: Option<f64>,
    pub geometry: Option<ElectrodeGeometry>,
    /// Relative tolerance for the `r_x·η² ≈ c` consistency check.
    pub consistency_tolerance: f64,
}

impl Default for TransducerConfig {
    fn default() -> Self {
        Self {
            eta: None,
            r_x: None,
            geometry: None,
            consistency_tolerance: 0.25,
        }
    }
}

impl TransducerConfig {
    pub fn with_eta(eta: f64) -> Self {
        Self {
            eta: Some(eta),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.eta {
            ensure_positive("transducer.eta", eta)?;
        }
        if let Some(r) = self.r_x {
            ensure_positive("transducer.r_x", r)?;
        }
        if let Some(g) = &self.geometry {
            g.validate()?;
        }
        ensure_positive("transducer.consistency_tolerance", self.consistency_tolerance)?;
        Ok(())
    }

    pub fn eta(&self) -> Result<f64> {
        match (self.eta, &self.geometry) {
            (Some(eta), _) => Ok(eta),
            (None, Some(g)) => Ok(g.eta()),
            (None, None) => Err(Error::MissingTransduction),
        }
    }

    /// The supplied `r_x`, otherwise [`motional_resistance`].
    pub fn resolve_r_x(&self, derived: &DerivedQuantities) -> Result<f64> {
        match self.r_x {
            Some(r) => Ok(r),
            None => motional_resistance(self, derived.k_eff, derived.m_eff, derived.q),
        }
    }

    /// Warning text when both `r_x` and `η` are given and `r_x·η²` departs
    /// from the damping `c` by more than the tolerance.
    pub fn consistency_warning(&self, c: f64) -> Option<String> {
        let r_x = self.r_x?;
        let eta = self.eta().ok()?;
        let implied = r_x * eta * eta;
        let dev = (implied - c).abs() / c;
        (dev > self.consistency_tolerance).then(|| {
            format!(
                "r_x·eta² = {implied:.4e} N·s/m differs from c = {c:.4e} N·s/m by {:.1}% (tolerance {:.0}%)",
                100.0 * dev,
                100.0 * self.consistency_tolerance
            )
        })
    }
}

/// Motional resistance of the electrostatic transducer [Ω].
///
/// With electrode geometry: `d⁴·sqrt(k_eff·m_eff) / (V_dc²·ε²·A²·Q)`;
/// with only `η`: `sqrt(k_eff·m_eff) / (Q·η²)`. Both equal `c/η²`.
pub fn motional_resistance(transducer: &TransducerConfig, k_eff: f64, m_eff: f64, q: f64) -> Result<f64> {
    ensure_positive("k_eff", k_eff)?;
    ensure_positive("m_eff", m_eff)?;
    ensure_positive("q", q)?;
    let root = (k_eff * m_eff).sqrt();
    if let Some(g) = &transducer.geometry {
        g.validate()?;
        let num = g.gap.powi(4) * root;
        let den = g.v_dc.powi(2) * g.epsilon.powi(2) * g.area.powi(2) * q;
        return Ok(num / den);
    }
    let eta = transducer.eta.ok_or(Error::MissingTransduction)?;
    ensure_positive("transducer.eta", eta)?;
    Ok(root / (q * eta * eta))
}

/// Transimpedance readout parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutConfig {
    /// Feedback resistor [Ω].
    pub r_f: f64,
    /// Input current noise density [A/√Hz].
    pub i_n: f64,
    /// Input voltage noise density [V/√Hz].
    pub v_n: f64,
    /// Noise-equivalent bandwidth factor of a one-pole roll-off (π/2 ≈ 1.57).
    pub neb_factor: f64,
}

impl Default for ReadoutConfig {
    /// OPA381-class amplifier with a 1 MΩ feedback resistor.
    fn default() -> Self {
        Self {
            r_f: 1e6,
            i_n: 20e-15,
            v_n: 70e-9,
            neb_factor: 1.57,
        }
    }
}

impl ReadoutConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("readout.r_f", self.r_f)?;
        ensure_non_negative("readout.i_n", self.i_n)?;
        ensure_non_negative("readout.v_n", self.v_n)?;
        ensure_positive("readout.neb_factor", self.neb_factor)?;
        Ok(())
    }
}

/// One-sided thermal force PSD `4·k_B·T·c` [N²/Hz].
pub fn thermal_force_psd(c: f64, env: &Environment) -> Result<f64> {
    ensure_non_negative("c", c)?;
    env.validate()?;
    Ok(4.0 * env.kt() * c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeNoise {
    /// Displacement-noise PSD at the mode [m²/Hz].
    pub x_psd: f64,
    /// `x_psd·B` [m²].
    pub x_avg: f64,
    /// [m rms]
    pub x_rms: f64,
    /// `η·ω_i` [A/m].
    pub eta_omega: f64,
    /// `η·ω_i·x_rms` [A rms].
    pub i_mot_noise: f64,
}

/// Thermomechanical noise pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBudget {
    /// [N²/Hz]
    pub f_noise_psd: f64,
    /// [N²]
    pub f_noise_avg: f64,
    /// [N rms]
    pub f_noise_rms: f64,
    pub modes: [ModeNoise; 2],
}

impl ThermalBudget {
    pub fn best_mode(&self) -> usize {
        if self.modes[0].i_mot_noise <= self.modes[1].i_mot_noise {
            0
        } else {
            1
        }
    }

    pub fn report(&self) -> Report {
        let mut r = Report::new("Thermomechanical noise");
        r.push("f_noise_psd", self.f_noise_psd, "N^2/Hz", "4*kB*T*c");
        r.push("f_noise_avg", self.f_noise_avg, "N^2", "psd*B");
        r.push("f_noise_rms", self.f_noise_rms, "N", "sqrt(avg)");
        for (i, m) in self.modes.iter().enumerate() {
            let n = i + 1;
            r.push(format!("x_psd_mode{n}"), m.x_psd, "m^2/Hz", "input");
            r.push(format!("x_avg_mode{n}"), m.x_avg, "m^2", "psd*B");
            r.push(format!("x_rms_mode{n}"), m.x_rms, "m", "sqrt(avg)");
            r.push(format!("eta_omega_mode{n}"), m.eta_omega, "A/m", "eta*omega");
            r.push(format!("i_mot_noise_mode{n}"), m.i_mot_noise, "A", "eta*omega*x_rms");
        }
        r
    }
}

/// Runs the thermal pipeline for a damping `c`, mode angular frequencies
/// `omegas` and displacement-noise PSDs `x_psd` at those modes.
pub fn thermal_budget(c: f64, omegas: [f64; 2], env: &Environment, eta: f64, x_psd: [f64; 2]) -> Result<ThermalBudget> {
    ensure_positive("transducer.eta", eta)?;
    let f_noise_psd = thermal_force_psd(c, env)?;
    let f_noise_avg = f_noise_psd * env.bandwidth;
    let mut modes = [ModeNoise {
        x_psd: 0.0,
        x_avg: 0.0,
        x_rms: 0.0,
        eta_omega: 0.0,
        i_mot_noise: 0.0,
    }; 2];
    for i in 0..2 {
        ensure_non_negative("x_psd", x_psd[i])?;
        ensure_non_negative("omega", omegas[i])?;
        let x_avg = x_psd[i] * env.bandwidth;
        let x_rms = x_avg.sqrt();
        let eta_omega = eta * omegas[i];
        modes[i] = ModeNoise {
            x_psd: x_psd[i],
            x_avg,
            x_rms,
            eta_omega,
            i_mot_noise: eta_omega * x_rms,
        };
    }
    Ok(ThermalBudget {
        f_noise_psd,
        f_noise_avg,
        f_noise_rms: f_noise_avg.sqrt(),
        modes,
    })
}

/// Analytic displacement-noise PSD of `resonator` at each mode frequency,
/// `|h(f_i)|²·S_F`, for a force applied on `driven`.
pub fn analytic_mode_psd(
    system: &SystemMatrices,
    modes: &Modes,
    force_psd: f64,
    resonator: Resonator,
    driven: Resonator,
) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for (i, mode) in modes.modes.iter().enumerate() {
        let h = receptance(system, mode.frequency)?;
        out[i] = h[resonator.index()][driven.index()].norm_sqr() * force_psd;
    }
    Ok(out)
}

/// Input-referred electronic noise of the transimpedance readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectronicBudget {
    /// Feedback-resistor Johnson noise, `sqrt(4·k_B·T·B/r_f)` [A rms].
    pub i_rf: f64,
    /// Amplifier voltage noise, `v_n·(1+r_x/r_f)/r_x·sqrt(B)·neb` [A rms].
    pub i_vn: f64,
    /// Amplifier current noise, `i_n·sqrt(B)·neb` [A rms].
    pub i_in: f64,
    /// Per-√Hz densities entering `i_total_paper` [A/√Hz].
    pub density_rf: f64,
    pub density_vn: f64,
    pub density_in: f64,
    /// RSS of the three densities [A/√Hz, labeled A by convention].
    pub i_total_paper: f64,
    /// RSS of `i_rf`, `i_vn`, `i_in` [A rms].
    pub i_total_integrated: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectronicSource {
    FeedbackResistor,
    AmplifierVoltageNoise,
    AmplifierCurrentNoise,
}

impl ElectronicSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ElectronicSource::FeedbackResistor => "feedback_resistor",
            ElectronicSource::AmplifierVoltageNoise => "amplifier_voltage_noise",
            ElectronicSource::AmplifierCurrentNoise => "amplifier_current_noise",
        }
    }
}

/// Which electronic total feeds the system noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TotalConvention {
    #[default]
    Paper,
    Integrated,
}

impl TotalConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            TotalConvention::Paper => "paper",
            TotalConvention::Integrated => "integrated",
        }
    }
}

impl ElectronicBudget {
    /// Largest of the three integrated rows.
    pub fn dominant(&self) -> ElectronicSource {
        let rows = [
            (ElectronicSource::FeedbackResistor, self.i_rf),
            (ElectronicSource::AmplifierVoltageNoise, self.i_vn),
            (ElectronicSource::AmplifierCurrentNoise, self.i_in),
        ];
        rows.iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(s, _)| s)
            .unwrap_or(ElectronicSource::AmplifierVoltageNoise)
    }

    pub fn total(&self, convention: TotalConvention) -> f64 {
        match convention {
            TotalConvention::Paper => self.i_total_paper,
            TotalConvention::Integrated => self.i_total_integrated,
        }
    }

    pub fn system_total(&self, i_mech: f64, convention: TotalConvention) -> Result<f64> {
        total_system_noise(i_mech, self.total(convention))
    }

    pub fn report(&self, i_mech: f64) -> Result<Report> {
        let mut r = Report::new("Electronic readout noise (input referred)");
        r.push("i_mech", i_mech, "A", "thermal budget");
        r.push("i_rf", self.i_rf, "A", "sqrt(4*kB*T*B/Rf)");
        r.push("i_vn", self.i_vn, "A", "vn*(1+Rx/Rf)/Rx*sqrt(B)*neb");
        r.push("i_in", self.i_in, "A", "in*sqrt(B)*neb");
        r.push(
            "total_paper_convention",
            self.i_total_paper,
            "A",
            "RSS of densities [1]",
        );
        r.push(
            "total_integrated",
            self.i_total_integrated,
            "A",
            "RSS of integrated rows",
        );
        r.push(
            "system_total_paper_convention",
            self.system_total(i_mech, TotalConvention::Paper)?,
            "A",
            "RSS(i_mech, total_paper_convention)",
        );
        r.push(
            "system_total_integrated",
            self.system_total(i_mech, TotalConvention::Integrated)?,
            "A",
            "RSS(i_mech, total_integrated)",
        );
        r.note("total_paper_convention combines per-sqrt(Hz) densities without B or the noise-bandwidth factor; its unit is A/sqrt(Hz) though reported as A.");
        r.note(format!("dominant electronic source: {}", self.dominant().as_str()));
        Ok(r)
    }
}

pub fn electronic_budget(readout: &ReadoutConfig, r_x: f64, env: &Environment) -> Result<ElectronicBudget> {
    readout.validate()?;
    ensure_positive("transducer.r_x", r_x)?;
    env.validate()?;
    let sqrt_b = env.bandwidth.sqrt();
    let density_rf = (4.0 * env.kt() / readout.r_f).sqrt();
    let density_vn = readout.v_n * (1.0 + r_x / readout.r_f) / r_x;
    let density_in = readout.i_n;

    let i_rf = (4.0 * env.kt() * env.bandwidth / readout.r_f).sqrt();
    let i_vn = density_vn * sqrt_b * readout.neb_factor;
    let i_in = density_in * sqrt_b * readout.neb_factor;
    Ok(ElectronicBudget {
        i_rf,
        i_vn,
        i_in,
        density_rf,
        density_vn,
        density_in,
        i_total_paper: (density_in.powi(2) + density_vn.powi(2) + density_rf.powi(2)).sqrt(),
        i_total_integrated: (i_rf.powi(2) + i_vn.powi(2) + i_in.powi(2)).sqrt(),
    })
}

/// RSS of uncorrelated mechanical and electronic noise currents.
pub fn total_system_noise(i_mech: f64, i_elec: f64) -> Result<f64> {
    ensure_non_negative("i_mech", i_mech)?;
    ensure_non_negative("i_elec", i_elec)?;
    Ok(i_mech.hypot(i_elec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sysmodel::{build_system, mode_analysis, SystemConfig};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn force_psd_values() {
        let env = Environment::default();
        assert!(rel(thermal_force_psd(0.0031, &env).unwrap(), 5.136e-23) < 1e-4);
        assert_eq!(thermal_force_psd(0.0, &env).unwrap(), 0.0);
        let cold = Environment {
            temperature: 0.0,
            ..env
        };
        assert_eq!(thermal_force_psd(0.0031, &cold).unwrap(), 0.0);
        assert!(thermal_force_psd(-1.0, &env).is_err());
    }

    #[test]
    fn thermal_pipeline_from_paper_psd() {
        let env = Environment::default();
        let omega1 = 2.0 * std::f64::consts::PI * 2474.7;
        let eta = 0.5562 / omega1;
        let b = thermal_budget(0.0031, [omega1, omega1], &env, eta, [7.76e-30, 0.0]).unwrap();
        assert!(rel(b.f_noise_avg, 5.136e-22) < 1e-3);
        assert!(rel(b.f_noise_rms, 2.266e-11) < 1e-3);
        assert!(rel(b.modes[0].x_avg, 7.762e-29) < 1e-3);
        assert!(rel(b.modes[0].x_rms, 8.81e-15) < 1e-3);
        assert!(rel(b.modes[0].i_mot_noise, 4.9e-15) < 0.01);
        assert_eq!(b.modes[1].x_rms, 0.0);
        assert_eq!(b.modes[1].i_mot_noise, 0.0);
        assert_eq!(b.best_mode(), 1);
        assert!(thermal_budget(0.0031, [omega1; 2], &env, 0.0, [0.0; 2]).is_err());
    }

    #[test]
    fn analytic_mode_psd_matches_cramer() {
        let cfg = SystemConfig::reference();
        let sys = build_system(&cfg).unwrap();
        let modes = mode_analysis(&sys).unwrap();
        let env = Environment::default();
        let sf = thermal_force_psd(cfg.c1, &env).unwrap();
        let psd = analytic_mode_psd(&sys, &modes, sf, Resonator::One, Resonator::One).unwrap();

        // h11 = (k22 − ω²m2 + iωc22) / det, written out by hand
        let w = modes.first().omega;
        let (k, c, m) = (cfg.km1 + cfg.kc, cfg.c1 + cfg.cc, cfg.m1);
        let (a_re, a_im) = (k - w * w * m, w * c);
        let (b_re, b_im) = (-cfg.kc, -w * cfg.cc);
        let det_re = a_re * a_re - a_im * a_im - (b_re * b_re - b_im * b_im);
        let det_im = 2.0 * a_re * a_im - 2.0 * b_re * b_im;
        let h_sq = (a_re * a_re + a_im * a_im) / (det_re * det_re + det_im * det_im);
        assert!(rel(psd[0], h_sq * sf) < 1e-9);

        let eta = 3e-5;
        let tb = thermal_budget(cfg.c1, [modes.first().omega, modes.second().omega], &env, eta, psd).unwrap();
        let hand = eta * w * (h_sq * sf * env.bandwidth).sqrt();
        assert!(rel(tb.modes[0].i_mot_noise, hand) < 1e-9);
        // mode 1 (out-of-phase, more damped) is quieter
        assert!(psd[0] < psd[1]);
    }

    #[test]
    fn motional_resistance_forms() {
        let d = SystemConfig::reference().derived();
        let t = TransducerConfig::with_eta(2.784e-5);
        let r = motional_resistance(&t, d.k_eff, d.m_eff, d.q).unwrap();
        assert!(rel(r, 4.0e6) < 1e-3, "{r}");
        assert!(rel(r, d.c / (2.784e-5f64).powi(2)) < 1e-12);
        assert!(matches!(
            motional_resistance(&TransducerConfig::default(), d.k_eff, d.m_eff, d.q),
            Err(Error::MissingTransduction)
        ));

        let g = ElectrodeGeometry {
            v_dc: 10.0,
            epsilon: 8.854e-12,
            area: 4e-8,
            gap: 1e-6,
        };
        let geo = TransducerConfig {
            geometry: Some(g),
            ..TransducerConfig::default()
        };
        let r1 = motional_resistance(&geo, d.k_eff, d.m_eff, d.q).unwrap();
        let via_eta = d.c / geo.eta().unwrap().powi(2);
        assert!(rel(r1, via_eta) < 1e-12);

        let doubled = TransducerConfig {
            geometry: Some(ElectrodeGeometry { v_dc: 20.0, ..g }),
            ..geo
        };
        let r2 = motional_resistance(&doubled, d.k_eff, d.m_eff, d.q).unwrap();
        assert!(rel(r1 / r2, 4.0) < 1e-12);
        let r3 = motional_resistance(&geo, d.k_eff, d.m_eff, 2.0 * d.q).unwrap();
        assert!(rel(r1 / r3, 2.0) < 1e-12);
    }

    #[test]
    fn consistency_warning() {
        let mut t = TransducerConfig::with_eta(2.784e-5);
        t.r_x = Some(4e6);
        assert!(t.consistency_warning(0.0031).is_none());
        t.r_x = Some(8e6);
        assert!(t.consistency_warning(0.0031).is_some());
    }

    #[test]
    fn electronic_defaults_match_table() {
        let b = electronic_budget(&ReadoutConfig::default(), 4e6, &Environment::default()).unwrap();
        assert!(rel(b.i_rf, 4.06e-13) < 0.01, "{}", b.i_rf);
        assert!(rel(b.i_vn, 4.34e-13) < 0.01, "{}", b.i_vn);
        assert!(rel(b.i_in, 9.92e-14) < 0.01, "{}", b.i_in);
        assert!(rel(b.i_total_paper, 1.56e-13) < 0.01, "{}", b.i_total_paper);
        assert!(rel(b.i_total_integrated, 6.03e-13) < 0.005, "{}", b.i_total_integrated);
        assert_eq!(b.dominant(), ElectronicSource::AmplifierVoltageNoise);
        // electronic noise dominates the mechanical floor
        assert!(b.i_total_paper > 10.0 * 4.9e-15);
    }

    #[test]
    fn noiseless_readout_is_zero() {
        let r = ReadoutConfig {
            i_n: 0.0,
            v_n: 0.0,
            ..ReadoutConfig::default()
        };
        let env = Environment {
            temperature: 0.0,
            ..Environment::default()
        };
        let b = electronic_budget(&r, 4e6, &env).unwrap();
        assert_eq!(b.i_rf, 0.0);
        assert_eq!(b.i_vn, 0.0);
        assert_eq!(b.i_in, 0.0);
        assert_eq!(b.i_total_paper, 0.0);
        assert_eq!(b.i_total_integrated, 0.0);
    }

    #[test]
    fn halving_rx_raises_voltage_noise_row() {
        let env = Environment::default();
        let a = electronic_budget(&ReadoutConfig::default(), 4e6, &env).unwrap();
        let b = electronic_budget(&ReadoutConfig::default(), 2e6, &env).unwrap();
        assert!(b.i_vn > a.i_vn);
    }

    #[test]
    fn system_total() {
        assert_eq!(total_system_noise(3.0, 4.0).unwrap(), 5.0);
        assert_eq!(total_system_noise(2.5, 0.0).unwrap(), 2.5);
        let t = total_system_noise(4.9e-15, 1.56e-13).unwrap();
        assert!((t - 1.56e-13) / 1.56e-13 < 1e-3);
        assert!(total_system_noise(-1.0, 1.0).is_err());
    }

    #[test]
    fn report_labels() {
        let b = electronic_budget(&ReadoutConfig::default(), 4e6, &Environment::default()).unwrap();
        let r = b.report(4.9e-15).unwrap();
        assert!(r.get("total_paper_convention").is_some());
        assert!(r.get("total_integrated").is_some());
        assert!(r.footnotes.iter().any(|f| f.contains("amplifier_voltage_noise")));
    }

    proptest! {
        #[test]
        fn rss_exact_and_monotone(
            t in 0.0f64..600.0, bw in 0.1f64..100.0, i_n in 0.0f64..1e-12,
            v_n in 0.0f64..1e-6, r_x in 1e3f64..1e8, bump in 1.0f64..3.0,
        ) {
            let env = Environment { temperature: t, bandwidth: bw };
            let ro = ReadoutConfig { i_n, v_n, ..ReadoutConfig::default() };
            let b = electronic_budget(&ro, r_x, &env).unwrap();
            let sq = b.i_rf.powi(2) + b.i_vn.powi(2) + b.i_in.powi(2);
            prop_assert!((b.i_total_integrated.powi(2) - sq).abs() <= 1e-12 * sq.max(1e-300));
            let dq = b.density_rf.powi(2) + b.density_vn.powi(2) + b.density_in.powi(2);
            prop_assert!((b.i_total_paper.powi(2) - dq).abs() <= 1e-12 * dq.max(1e-300));
            for c in [b.i_rf, b.i_vn, b.i_in] {
                prop_assert!(b.i_total_integrated >= c);
            }

            let hotter = electronic_budget(&ro, r_x, &Environment { temperature: t * bump, ..env }).unwrap();
            let wider = electronic_budget(&ro, r_x, &Environment { bandwidth: bw * bump, ..env }).unwrap();
            let louder = electronic_budget(&ReadoutConfig { i_n: i_n * bump, v_n: v_n * bump, ..ro }, r_x, &env).unwrap();
            for other in [hotter, wider, louder] {
                prop_assert!(other.i_total_integrated >= b.i_total_integrated);
                prop_assert!(other.i_total_paper >= b.i_total_paper);
            }

            let tb = thermal_budget(0.003, [1e4, 1e4], &env, 1e-5, [1e-29, 1e-29]).unwrap();
            let tb2 = thermal_budget(0.003 * bump, [1e4, 1e4], &Environment { temperature: t * bump, bandwidth: bw * bump }, 1e-5, [1e-29, 1e-29]).unwrap();
            prop_assert!(tb2.f_noise_rms >= tb.f_noise_rms);
            prop_assert!(tb2.modes[0].i_mot_noise >= tb.modes[0].i_mot_noise);
        }
    }
}
