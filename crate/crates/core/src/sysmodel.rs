//! Two-degree-of-freedom coupled resonator model.
//!
//! Two mass-spring-damper resonators joined by a coupling spring `kc` and a
//! coupling damper `cc`:
//!
//! ```text
//! m1·x1'' + (c1+cc)·x1' − cc·x2' + (km1+kc)·x1 − kc·x2 = F1
//! m2·x2'' + (c2+cc)·x2' − cc·x1' + (km2+kc)·x2 − kc·x1 = F2
//! ```
//!
//! The module assembles the matrices, solves the generalized eigenproblem for
//! the two modes, evaluates the analytic receptance and the first-order
//! sensitivity formulas for stiffness and mass perturbations.

use num_complex::Complex64;

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

pub type Mat2 = [[f64; 2]; 2];
pub type CMat2 = [[Complex64; 2]; 2];

/// Quality factor of the reference design.
pub const REFERENCE_Q: f64 = 2547.0;
/// Damping coefficient of each resonator and of the coupler in the reference design [N·s/m].
pub const REFERENCE_DAMPING: f64 = 0.0031;
/// Electrostatic coupling stiffness of the reference design [N/m].
pub const REFERENCE_KC: f64 = -393.5;
/// Normalized coupling `kc / k_eff` of the reference design.
pub const REFERENCE_KAPPA: f64 = -0.0032;
/// Alternate, stronger coupling used for comparison runs [N/m].
pub const STRONG_COUPLING_KC: f64 = -1000.0;

/// Physical parameters of the coupled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Mass of resonator 1 [kg].
    pub m1: f64,
    /// Mass of resonator 2 [kg].
    pub m2: f64,
    /// Mechanical spring of resonator 1 [N/m].
    pub km1: f64,
    /// Mechanical spring of resonator 2 [N/m].
    pub km2: f64,
    /// Coupling spring [N/m]; negative for electrostatic coupling.
    pub kc: f64,
    /// Damping of resonator 1 [N·s/m].
    pub c1: f64,
    /// Damping of resonator 2 [N·s/m].
    pub c2: f64,
    /// Coupling damper [N·s/m].
    pub cc: f64,
}

/// Non-fatal remarks about a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigWarning {
    /// `|kc| / km` exceeds 0.1, outside the weak-coupling regime.
    StrongCoupling { ratio: f64 },
    /// `cc` differs from the resonator damping; the off-diagonal damping term
    /// is `−cc`, which only coincides with the `−c` form when they are equal.
    CouplerDampingDiffers { cc: f64, c: f64 },
}

impl std::fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigWarning::StrongCoupling { ratio } => write!(
                f,
                "|kc|/km = {ratio:.3} > 0.1: weak-coupling approximations may not hold"
            ),
            ConfigWarning::CouplerDampingDiffers { cc, c } => write!(
                f,
                "coupler damping cc = {cc} differs from resonator damping c = {c}; off-diagonal damping uses -cc"
            ),
        }
    }
}

impl SystemConfig {
    /// Identical resonators with a shared damping constant on every damper.
    pub fn symmetric(m: f64, km: f64, kc: f64, c: f64) -> Self {
        Self {
            m1: m,
            m2: m,
            km1: km,
            km2: km,
            kc,
            c1: c,
            c2: c,
            cc: c,
        }
    }

    /// The reference design.
    ///
    /// Only `kc`, `kappa`, `c` and `Q` are given for it, so the rest is
    /// derived: `k_eff = kc / kappa = 122968.75`, `km = k_eff − kc = 123362.25`
    /// and `m = (Q·c)² / k_eff ≈ 5.070e-4 kg`, which makes
    /// `sqrt(k_eff·m)/c = Q` exactly.
    pub fn reference() -> Self {
        Self::reference_with_coupling(REFERENCE_KC)
    }

    /// Reference mass, spring and damping with a different coupling spring.
    pub fn reference_with_coupling(kc: f64) -> Self {
        let k_eff = REFERENCE_KC / REFERENCE_KAPPA;
        let km = k_eff - REFERENCE_KC;
        let m = (REFERENCE_Q * REFERENCE_DAMPING).powi(2) / k_eff;
        Self::symmetric(m, km, kc, REFERENCE_DAMPING)
    }

    /// Checks the parameter ranges and positive definiteness.
    pub fn validate(&self) -> Result<()> {
        ensure_positive("m1", self.m1)?;
        ensure_positive("m2", self.m2)?;
        ensure_positive("km1", self.km1)?;
        ensure_positive("km2", self.km2)?;
        ensure_non_negative("c1", self.c1)?;
        ensure_non_negative("c2", self.c2)?;
        ensure_non_negative("cc", self.cc)?;
        if !self.kc.is_finite() {
            return Err(Error::param("kc", "must be finite"));
        }
        for (name, km) in [("km1", self.km1), ("km2", self.km2)] {
            let single = km + self.kc;
            if single <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!("{name} + kc = {single} <= 0")));
            }
            let double = km + 2.0 * self.kc;
            if double <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!("{name} + 2*kc = {double} <= 0")));
            }
        }
        let det = (self.km1 + self.kc) * (self.km2 + self.kc) - self.kc * self.kc;
        if det <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!("det(K) = {det} <= 0")));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<ConfigWarning> {
        let mut out = Vec::new();
        let km = self.km1.min(self.km2);
        let ratio = self.kc.abs() / km;
        if ratio > 0.1 {
            out.push(ConfigWarning::StrongCoupling { ratio });
        }
        let c = 0.5 * (self.c1 + self.c2);
        if (self.cc - c).abs() > 1e-12 * c.max(self.cc) {
            out.push(ConfigWarning::CouplerDampingDiffers { cc: self.cc, c });
        }
        out
    }

    /// Same system with `km1` shifted by `delta_k`.
    pub fn with_stiffness_perturbation(&self, delta_k: f64) -> Self {
        Self {
            km1: self.km1 + delta_k,
            ..*self
        }
    }

    /// Same system with `m1` shifted by `delta_m`.
    pub fn with_mass_perturbation(&self, delta_m: f64) -> Self {
        Self {
            m1: self.m1 + delta_m,
            ..*self
        }
    }

    pub fn derived(&self) -> DerivedQuantities {
        DerivedQuantities::from_config(self)
    }
}

/// Lumped quantities of the (nominally symmetric) pair.
///
/// For asymmetric inputs the per-resonator values are averaged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// `km + kc` [N/m].
    pub k_eff: f64,
    /// [kg]
    pub m_eff: f64,
    /// Resonator damping [N·s/m].
    pub c: f64,
    /// [N/m]
    pub kc: f64,
    /// `kc / k_eff`.
    pub kappa: f64,
    /// `sqrt(k_eff·m_eff) / c`.
    pub q: f64,
}

impl DerivedQuantities {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        let km = 0.5 * (cfg.km1 + cfg.km2);
        let m_eff = 0.5 * (cfg.m1 + cfg.m2);
        let c = 0.5 * (cfg.c1 + cfg.c2);
        let k_eff = km + cfg.kc;
        Self {
            k_eff,
            m_eff,
            c,
            kc: cfg.kc,
            kappa: cfg.kc / k_eff,
            q: (k_eff * m_eff).sqrt() / c,
        }
    }

    /// Amplitude-ratio sensitivity per unit normalized stiffness perturbation, `1/(2|κ|)`.
    pub fn ar_sensitivity_per_dk(&self) -> Option<f64> {
        (self.kc != 0.0).then(|| 1.0 / (2.0 * self.kappa.abs()))
    }
}

/// Mass, damping and stiffness matrices of the equations of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemMatrices {
    pub mass: Mat2,
    pub damping: Mat2,
    pub stiffness: Mat2,
}

impl SystemMatrices {
    /// Coupling stiffness recovered from the off-diagonal term.
    pub fn coupling(&self) -> f64 {
        -self.stiffness[0][1]
    }
}

pub fn build_system(config: &SystemConfig) -> Result<SystemMatrices> {
    config.validate()?;
    let SystemConfig {
        m1,
        m2,
        km1,
        km2,
        kc,
        c1,
        c2,
        cc,
    } = *config;
    Ok(SystemMatrices {
        mass: [[m1, 0.0], [0.0, m2]],
        damping: [[c1 + cc, -cc], [-cc, c2 + cc]],
        stiffness: [[km1 + kc, -kc], [-kc, km2 + kc]],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    InPhase,
    OutOfPhase,
    /// Uncoupled resonators: the modes carry no phase relation.
    Degenerate,
}

impl ModeLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeLabel::InPhase => "in_phase",
            ModeLabel::OutOfPhase => "out_of_phase",
            ModeLabel::Degenerate => "degenerate",
        }
    }
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One eigenmode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// [rad/s]
    pub omega: f64,
    /// [Hz]
    pub frequency: f64,
    /// Unit-norm shape, sign fixed so the largest component is positive.
    pub shape: [f64; 2],
    pub label: ModeLabel,
    /// `sqrt(k_modal·m_modal) / c_modal` with shape-projected matrices.
    pub modal_q: f64,
}

impl Mode {
    /// `x1 / x2` of the mode shape.
    pub fn amplitude_ratio(&self) -> f64 {
        self.shape[0] / self.shape[1]
    }
}

/// Both modes, `modes[0]` being the lower frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modes {
    pub modes: [Mode; 2],
}

impl Modes {
    pub fn first(&self) -> &Mode {
        &self.modes[0]
    }

    pub fn second(&self) -> &Mode {
        &self.modes[1]
    }

    /// `f2 − f1` [Hz].
    pub fn split(&self) -> f64 {
        self.modes[1].frequency - self.modes[0].frequency
    }
}

fn quad_form(a: &Mat2, v: &[f64; 2]) -> f64 {
    v[0] * (a[0][0] * v[0] + a[0][1] * v[1]) + v[1] * (a[1][0] * v[0] + a[1][1] * v[1])
}

/// Solves `K·x = ω²·M·x` by Cholesky reduction of `M` to a symmetric
/// standard eigenproblem, then a single Jacobi rotation.
pub fn mode_analysis(system: &SystemMatrices) -> Result<Modes> {
    let m = &system.mass;
    let k = &system.stiffness;

    let l11 = m[0][0].sqrt();
    let l21 = m[1][0] / l11;
    let l22_sq = m[1][1] - l21 * l21;
    if !(l11 > 0.0 && l22_sq > 0.0) {
        return Err(Error::param("mass", "mass matrix is not positive definite"));
    }
    let l22 = l22_sq.sqrt();

    // A = L⁻¹ K L⁻ᵀ
    let inv = [[1.0 / l11, 0.0], [-l21 / (l11 * l22), 1.0 / l22]];
    let mut tmp = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            tmp[i][j] = inv[i][0] * k[0][j] + inv[i][1] * k[1][j];
        }
    }
    let mut a = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = tmp[i][0] * inv[j][0] + tmp[i][1] * inv[j][1];
        }
    }
    let (a11, a12, a22) = (a[0][0], 0.5 * (a[0][1] + a[1][0]), a[1][1]);

    let theta = 0.5 * (2.0 * a12).atan2(a11 - a22);
    let (s, c) = theta.sin_cos();
    let lam_hi = a11 * c * c + 2.0 * a12 * s * c + a22 * s * s;
    let lam_lo = a11 * s * s - 2.0 * a12 * s * c + a22 * c * c;
    let pairs = [(lam_lo, [-s, c]), (lam_hi, [c, s])];

    let coupled = system.coupling() != 0.0;
    let mut modes = pairs.map(|(lambda, y)| {
        // x = L⁻ᵀ y
        let x2 = y[1] / l22;
        let x1 = (y[0] - l21 * x2) / l11;
        let norm = x1.hypot(x2);
        let mut shape = [x1 / norm, x2 / norm];
        let dominant = if shape[0].abs() >= shape[1].abs() { 0 } else { 1 };
        if shape[dominant] < 0.0 {
            shape = [-shape[0], -shape[1]];
        }
        let label = if !coupled {
            ModeLabel::Degenerate
        } else if shape[0] * shape[1] > 0.0 {
            ModeLabel::InPhase
        } else {
            ModeLabel::OutOfPhase
        };
        let k_modal = quad_form(&system.stiffness, &shape);
        let m_modal = quad_form(&system.mass, &shape);
        let c_modal = quad_form(&system.damping, &shape);
        let modal_q = if c_modal > 0.0 {
            (k_modal * m_modal).sqrt() / c_modal
        } else {
            f64::INFINITY
        };
        let omega = lambda.max(0.0).sqrt();
        Mode {
            omega,
            frequency: omega / std::f64::consts::TAU,
            shape,
            label,
            modal_q,
        }
    });
    if modes[0].omega > modes[1].omega {
        modes.swap(0, 1);
    }
    Ok(Modes { modes })
}

/// Receptance matrices `h(ω) = (K − ω²M + iωC)⁻¹` on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    /// [Hz]
    pub frequencies: Vec<f64>,
    /// `h[n][j][k]`: displacement of resonator `j` per unit force on `k` [m/N].
    pub h: Vec<CMat2>,
}

/// Receptance at a single frequency [Hz].
pub fn receptance(system: &SystemMatrices, frequency: f64) -> Result<CMat2> {
    if !(frequency >= 0.0 && frequency.is_finite()) {
        return Err(Error::param("frequency", format!("must be >= 0, got {frequency}")));
    }
    let w = std::f64::consts::TAU * frequency;
    let (m, c, k) = (&system.mass, &system.damping, &system.stiffness);
    let d = |i: usize, j: usize| Complex64::new(k[i][j] - w * w * m[i][j], w * c[i][j]);
    let (d11, d12, d21, d22) = (d(0, 0), d(0, 1), d(1, 0), d(1, 1));
    let det = d11 * d22 - d12 * d21;

    let max_abs = |a: &Mat2| a.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale = max_abs(k) + w * w * max_abs(m) + w * max_abs(c);
    if det.norm() <= 64.0 * f64::EPSILON * scale * scale {
        return Err(Error::UndampedResonance {
            frequency_hz: frequency,
        });
    }
    let inv = 1.0 / det;
    Ok([[d22 * inv, -d12 * inv], [-d21 * inv, d11 * inv]])
}

pub fn frequency_response(system: &SystemMatrices, frequencies: &[f64]) -> Result<FrequencyResponse> {
    let h = frequencies
        .iter()
        .map(|&f| receptance(system, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyResponse {
        frequencies: frequencies.to_vec(),
        h,
    })
}

/// Shifts predicted by the first-order sensitivity formulas.
///
/// `None` in an amplitude-ratio or eigenstate field means the shift is
/// unbounded because the resonators are uncoupled (`kc = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    /// The perturbation as supplied (N/m or kg).
    pub delta: f64,
    /// Perturbation divided by `k_eff` or `m_eff`.
    pub normalized_delta: f64,
    /// Relative mode-frequency shift, `|Δk/(2·k_eff)|` or `|Δm/(2·m_eff)|`.
    pub frequency_shift: f64,
    /// Relative amplitude-ratio shift, `|Δk/(2·kc)|` or `δm/(2|κ|)`.
    pub ar_shift: Option<f64>,
    /// Relative eigenstate (amplitude) shift, `|Δk/(4·kc)|` or `δm/(4|κ|)`.
    pub eigenstate_shift: Option<f64>,
    /// Un-normalized stiffness forms: absolute AR shift `|Δk/(2·kc)|` and
    /// absolute eigenstate shift `|Δk/(4·kc)|`. Absent for mass
    /// perturbations.
    ///
    /// The companion absolute frequency form `|Δk/(2m)|` mixes stiffness and
    /// mass units and is not computed.
    pub absolute: Option<AbsoluteShifts>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteShifts {
    pub ar_shift: Option<f64>,
    pub eigenstate_shift: Option<f64>,
}

pub fn sensitivity_stiffness(delta_k: f64, derived: &DerivedQuantities) -> SensitivityReport {
    let coupled = derived.kc != 0.0;
    let ar = coupled.then(|| (delta_k / (2.0 * derived.kc)).abs());
    let eig = coupled.then(|| (delta_k / (4.0 * derived.kc)).abs());
    SensitivityReport {
        delta: delta_k,
        normalized_delta: delta_k / derived.k_eff,
        frequency_shift: (delta_k / (2.0 * derived.k_eff)).abs(),
        ar_shift: ar,
        eigenstate_shift: eig,
        absolute: Some(AbsoluteShifts {
            ar_shift: ar,
            eigenstate_shift: eig,
        }),
    }
}

/// Mass-perturbation shifts.
///
/// The amplitude-ratio and eigenstate forms are evaluated on the
/// dimensionless `δm = Δm/m_eff` against `κ`, i.e. `δm/(2|κ|)` and
/// `δm/(4|κ|)`; the `Δm/(2·kc)` form would divide a mass by a stiffness.
pub fn sensitivity_mass(delta_m: f64, derived: &DerivedQuantities) -> SensitivityReport {
    let dm = delta_m / derived.m_eff;
    let coupled = derived.kc != 0.0;
    SensitivityReport {
        delta: delta_m,
        normalized_delta: dm,
        frequency_shift: (delta_m / (2.0 * derived.m_eff)).abs(),
        ar_shift: coupled.then(|| (dm / (2.0 * derived.kappa)).abs()),
        eigenstate_shift: coupled.then(|| (dm / (4.0 * derived.kappa)).abs()),
        absolute: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    /// Eigenvalues of `K x = λ M x` from the characteristic quadratic, and
    /// the eigenvector ratio `x1/x2` from the first row of `K − λM`.
    fn quadratic_oracle(s: &SystemMatrices) -> [(f64, f64); 2] {
        let (m, k) = (&s.mass, &s.stiffness);
        let a = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let b = -(k[0][0] * m[1][1] + k[1][1] * m[0][0] - k[0][1] * m[1][0] - k[1][0] * m[0][1]);
        let c = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        let disc = (b * b - 4.0 * a * c).sqrt();
        let l1 = (-b - disc) / (2.0 * a);
        let l2 = (-b + disc) / (2.0 * a);
        [l1, l2].map(|l| {
            let ratio = -(k[0][1] - l * m[0][1]) / (k[0][0] - l * m[0][0]);
            (l.sqrt(), ratio)
        })
    }

    #[test]
    fn zero_coupling_is_block_diagonal() {
        let cfg = SystemConfig {
            kc: 0.0,
            cc: 0.0,
            ..SystemConfig::symmetric(1e-3, 100.0, 0.0, 0.01)
        };
        let s = build_system(&cfg).unwrap();
        assert_eq!(s.stiffness[0][1], 0.0);
        assert_eq!(s.stiffness[1][0], 0.0);
        assert_eq!(s.damping[0][1], 0.0);
        assert_eq!(s.mass[0][1], 0.0);
    }

    #[test]
    fn reference_matrices() {
        let s = build_system(&SystemConfig::reference()).unwrap();
        assert!((s.stiffness[0][0] - 122_968.75).abs() < 1e-9);
        assert!((s.stiffness[1][1] - 122_968.75).abs() < 1e-9);
        assert_eq!(s.stiffness[0][1], 393.5);
        assert_eq!(s.stiffness[1][0], 393.5);
        assert_eq!(s.damping[0][1], -REFERENCE_DAMPING);
        let m = SystemConfig::reference().m1;
        assert!((m - 5.070e-4).abs() < 1e-7, "m = {m}");
    }

    #[test]
    fn not_positive_definite_names_inequality() {
        let cfg = SystemConfig::symmetric(1.0, 1.0, -0.6, 0.0);
        let err = build_system(&cfg).unwrap_err();
        match err {
            Error::NotPositiveDefinite(msg) => assert!(msg.contains("2*kc"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(build_system(&SystemConfig::symmetric(0.0, 1.0, 0.0, 0.0)).is_err());
        assert!(build_system(&SystemConfig::symmetric(1.0, -1.0, 0.0, 0.0)).is_err());
        assert!(build_system(&SystemConfig::symmetric(1.0, 1.0, 0.0, -1.0)).is_err());
        assert!(build_system(&SystemConfig::symmetric(1.0, 1.0, f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn warnings() {
        assert!(SystemConfig::reference().warnings().is_empty());
        let strong = SystemConfig::symmetric(1.0, 100.0, -20.0, 0.1);
        assert!(matches!(strong.warnings()[0], ConfigWarning::StrongCoupling { .. }));
        let mut cfg = SystemConfig::reference();
        cfg.cc = 0.0;
        assert!(matches!(cfg.warnings()[0], ConfigWarning::CouplerDampingDiffers { .. }));
    }

    #[test]
    fn derived_reference_values() {
        let d = SystemConfig::reference().derived();
        assert!((d.k_eff - 122_968.75).abs() < 1e-9);
        assert!(rel(d.kappa, -0.0032) < 1e-12);
        assert!(rel(d.q, 2547.0) < 1e-12);
        assert!(rel(d.ar_sensitivity_per_dk().unwrap(), 156.25) < 1e-12);
    }

    #[test]
    fn degenerate_modes_when_uncoupled() {
        let cfg = SystemConfig::symmetric(2e-4, 50.0, 0.0, 1e-3);
        let modes = mode_analysis(&build_system(&cfg).unwrap()).unwrap();
        let w0 = (50.0f64 / 2e-4).sqrt();
        assert!(rel(modes.first().omega, w0) < 1e-14);
        assert!(rel(modes.second().omega, w0) < 1e-14);
        assert_eq!(modes.first().label, ModeLabel::Degenerate);
        assert_eq!(modes.second().label, ModeLabel::Degenerate);
        assert_eq!(modes.split(), 0.0);
    }

    #[test]
    fn reference_modes() {
        let modes = mode_analysis(&build_system(&SystemConfig::reference()).unwrap()).unwrap();
        let (m1, m2) = (modes.first(), modes.second());
        assert_eq!(m1.label, ModeLabel::OutOfPhase);
        assert_eq!(m2.label, ModeLabel::InPhase);
        assert!((m1.frequency - 2474.7).abs() < 0.1, "f1 = {}", m1.frequency);
        assert!((m2.frequency - 2482.6).abs() < 0.1, "f2 = {}", m2.frequency);
        assert!((modes.split() - 7.9).abs() < 0.1);

        // closed forms for the symmetric pair
        let cfg = SystemConfig::reference();
        let w_ip = (cfg.km1 / cfg.m1).sqrt();
        let w_op = ((cfg.km1 + 2.0 * cfg.kc) / cfg.m1).sqrt();
        assert!(rel(m2.omega, w_ip) < 1e-12);
        assert!(rel(m1.omega, w_op) < 1e-12);

        // in-phase: damping projects to c; out-of-phase: to 3c
        let q_ip = (cfg.km1 * cfg.m1).sqrt() / cfg.c1;
        let q_op = ((cfg.km1 + 2.0 * cfg.kc) * cfg.m1).sqrt() / (3.0 * cfg.c1);
        assert!(rel(m2.modal_q, q_ip) < 1e-10);
        assert!(rel(m1.modal_q, q_op) < 1e-10);
    }

    #[test]
    fn positive_coupling_puts_in_phase_first() {
        let cfg = SystemConfig::symmetric(1e-3, 1000.0, 5.0, 1e-3);
        let modes = mode_analysis(&build_system(&cfg).unwrap()).unwrap();
        assert_eq!(modes.first().label, ModeLabel::InPhase);
        assert_eq!(modes.second().label, ModeLabel::OutOfPhase);
    }

    #[test]
    fn symmetric_shapes_are_exact() {
        let modes = mode_analysis(&build_system(&SystemConfig::reference()).unwrap()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for mode in &modes.modes {
            for v in mode.shape {
                assert!((v.abs() - r).abs() < 1e-15);
            }
            assert!((mode.amplitude_ratio().abs() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn asymmetric_modes_match_quadratic_oracle() {
        let cfg = SystemConfig {
            m1: 1.3e-3,
            m2: 0.9e-3,
            km1: 800.0,
            km2: 1100.0,
            kc: -35.0,
            c1: 1e-3,
            c2: 2e-3,
            cc: 1e-3,
        };
        let s = build_system(&cfg).unwrap();
        let modes = mode_analysis(&s).unwrap();
        let oracle = quadratic_oracle(&s);
        for (mode, (w, ratio)) in modes.modes.iter().zip(oracle) {
            assert!(rel(mode.omega, w) < 1e-12);
            assert!(rel(mode.amplitude_ratio(), ratio) < 1e-10);
        }
        // mass orthogonality
        let (a, b) = (modes.modes[0].shape, modes.modes[1].shape);
        let cross = a[0] * s.mass[0][0] * b[0] + a[1] * s.mass[1][1] * b[1];
        assert!(cross.abs() < 1e-15);
    }

    #[test]
    fn static_receptance_is_compliance() {
        let s = build_system(&SystemConfig::reference()).unwrap();
        let h = receptance(&s, 0.0).unwrap();
        let k = s.stiffness;
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        let inv = [[k[1][1] / det, -k[0][1] / det], [-k[1][0] / det, k[0][0] / det]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(rel(h[i][j].re, inv[i][j]) < 1e-12);
                assert!(h[i][j].im.abs() < 1e-20);
            }
        }
    }

    #[test]
    fn single_resonator_peak_is_q_over_k() {
        let (m, k, c) = (1e-4, 40.0, 2e-3);
        let cfg = SystemConfig {
            kc: 0.0,
            cc: 0.0,
            ..SystemConfig::symmetric(m, k, 0.0, c)
        };
        let s = build_system(&cfg).unwrap();
        let f0 = (k / m).sqrt() / std::f64::consts::TAU;
        let h = receptance(&s, f0).unwrap();
        let q = (k * m).sqrt() / c;
        assert!(rel(h[0][0].norm(), q / k) < 1e-10);
    }

    #[test]
    fn undamped_resonance_is_an_error() {
        let cfg = SystemConfig::symmetric(1.0, 4.0 * std::f64::consts::PI.powi(2), 0.0, 0.0);
        let s = build_system(&cfg).unwrap();
        let err = receptance(&s, 1.0).unwrap_err();
        assert!(matches!(err, Error::UndampedResonance { .. }));
        assert!(receptance(&s, 0.5).is_ok());
    }

    #[test]
    fn frequency_response_grid() {
        let s = build_system(&SystemConfig::reference()).unwrap();
        let fr = frequency_response(&s, &[0.0, 1000.0, 2478.0]).unwrap();
        assert_eq!(fr.h.len(), 3);
        assert!(frequency_response(&s, &[-1.0]).is_err());
    }

    #[test]
    fn sensitivity_trivial_cases() {
        let d = SystemConfig::reference().derived();
        let zero = sensitivity_stiffness(0.0, &d);
        assert_eq!(zero.frequency_shift, 0.0);
        assert_eq!(zero.ar_shift, Some(0.0));
        assert_eq!(zero.eigenstate_shift, Some(0.0));

        let unit = sensitivity_stiffness(2.0 * d.kc, &d);
        assert!((unit.ar_shift.unwrap() - 1.0).abs() < 1e-15);
        assert!((unit.eigenstate_shift.unwrap() - 0.5).abs() < 1e-15);

        let zm = sensitivity_mass(0.0, &d);
        assert_eq!(zm.frequency_shift, 0.0);
        assert_eq!(zm.ar_shift, Some(0.0));
        let um = sensitivity_mass(2.0 * d.m_eff, &d);
        assert!((um.frequency_shift - 1.0).abs() < 1e-15);
        assert!(um.absolute.is_none());
    }

    #[test]
    fn uncoupled_sensitivity_is_unbounded() {
        let d = SystemConfig::symmetric(1e-3, 100.0, 0.0, 1e-3).derived();
        let r = sensitivity_stiffness(1.0, &d);
        assert!(r.ar_shift.is_none());
        assert!(r.eigenstate_shift.is_none());
        assert!(d.ar_sensitivity_per_dk().is_none());
        assert!(sensitivity_mass(1e-6, &d).ar_shift.is_none());
    }

    /// Relative shift of `x1/x2` for the mode with index `i`.
    fn oracle_ar_shift(cfg: &SystemConfig, perturbed: &SystemConfig, i: usize) -> f64 {
        let r0 = quadratic_oracle(&build_system(cfg).unwrap())[i].1;
        let r1 = quadratic_oracle(&build_system(perturbed).unwrap())[i].1;
        ((r1 - r0) / r0).abs()
    }

    #[test]
    fn ar_formula_converges_at_first_order() {
        let cfg = SystemConfig::reference();
        let d = cfg.derived();
        for mode in 0..2 {
            let mut errs = Vec::new();
            for dk in [1e-3, 5e-4, 2.5e-4] {
                let delta = dk * d.k_eff;
                let pred = sensitivity_stiffness(delta, &d).ar_shift.unwrap();
                let oracle = oracle_ar_shift(&cfg, &cfg.with_stiffness_perturbation(delta), mode);
                errs.push((pred - oracle).abs());
                // first-order agreement
                assert!(rel(pred, oracle) < 0.2, "mode {mode}, dk {dk}: {pred} vs {oracle}");
            }
            assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
            assert!(
                errs[0] / oracle_ar_shift(&cfg, &cfg.with_stiffness_perturbation(1e-3 * d.k_eff), mode)
                    > errs[1] / oracle_ar_shift(&cfg, &cfg.with_stiffness_perturbation(5e-4 * d.k_eff), mode)
            );
        }
    }

    #[test]
    fn mass_formula_agrees_with_oracle() {
        let cfg = SystemConfig::reference();
        let d = cfg.derived();
        let delta_m = 1e-6 * d.m_eff;
        let pred = sensitivity_mass(delta_m, &d).ar_shift.unwrap();
        assert!(rel(pred, 1.5625e-4) < 1e-12);
        for mode in 0..2 {
            let oracle = oracle_ar_shift(&cfg, &cfg.with_mass_perturbation(delta_m), mode);
            assert!(rel(pred, oracle) < 0.01, "mode {mode}: {pred} vs {oracle}");
        }
    }

    #[test]
    fn split_vanishes_linearly_with_coupling() {
        let ratios: Vec<f64> = [-40.0, -20.0, -10.0]
            .iter()
            .map(|&kc| {
                let m = mode_analysis(&build_system(&SystemConfig::reference_with_coupling(kc)).unwrap()).unwrap();
                m.split() / m.first().frequency / kc.abs()
            })
            .collect();
        assert!(rel(ratios[0], ratios[2]) < 1e-3, "{ratios:?}");
    }
}
