use std::ffi::CStr;
use std::ptr;

use cr_noise_lab_ffi::*;

fn last_error() -> String {
    let p = cr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn reference() -> *mut CrSystem {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { cr_system_reference(&mut sys) }, CrStatus::Ok);
    assert!(!sys.is_null());
    sys
}

#[test]
fn reference_modes() {
    let sys = reference();
    let mut modes = CrModes {
        modes: [CrMode {
            frequency: 0.0,
            omega: 0.0,
            shape: [0.0; 2],
            label: CrModeLabel::Degenerate,
            modal_q: 0.0,
        }; 2],
        split: 0.0,
    };
    assert_eq!(unsafe { cr_system_modes(sys, &mut modes) }, CrStatus::Ok);
    let [m1, m2] = modes.modes;
    assert!((m1.frequency - 2474.73).abs() < 0.05, "{}", m1.frequency);
    assert!((m2.frequency - 2482.66).abs() < 0.05, "{}", m2.frequency);
    assert_eq!(m1.label, CrModeLabel::OutOfPhase);
    assert_eq!(m2.label, CrModeLabel::InPhase);
    assert!((modes.split - 7.93).abs() < 0.01);
    unsafe { cr_system_free(sys) };
}

#[test]
fn params_round_trip() {
    let p = CrSystemParams {
        m1: 1e-9,
        m2: 1.1e-9,
        km1: 100.0,
        km2: 105.0,
        kc: -2.0,
        c1: 1e-7,
        c2: 1e-7,
        cc: 0.0,
    };
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { cr_system_new(&p, &mut sys) }, CrStatus::Ok);
    let mut back = CrSystemParams {
        m1: 0.0,
        m2: 0.0,
        km1: 0.0,
        km2: 0.0,
        kc: 0.0,
        c1: 0.0,
        c2: 0.0,
        cc: 0.0,
    };
    assert_eq!(unsafe { cr_system_params(sys, &mut back) }, CrStatus::Ok);
    assert_eq!(back.km2, 105.0);
    assert_eq!(back.kc, -2.0);
    assert_eq!(back.m2, 1.1e-9);
    unsafe { cr_system_free(sys) };
}

#[test]
fn invalid_system_reports_code_and_message() {
    let p = CrSystemParams {
        m1: -1.0,
        m2: 1.0,
        km1: 1.0,
        km2: 1.0,
        kc: 0.0,
        c1: 0.0,
        c2: 0.0,
        cc: 0.0,
    };
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { cr_system_new(&p, &mut sys) }, CrStatus::InvalidParameter);
    assert!(sys.is_null());
    assert!(last_error().contains("m1"), "{}", last_error());

    // kc below -km makes the stiffness matrix indefinite
    let p = CrSystemParams {
        km1: 1.0,
        km2: 1.0,
        kc: -2.0,
        m1: 1.0,
        ..p
    };
    assert_eq!(unsafe { cr_system_new(&p, &mut sys) }, CrStatus::NotPositiveDefinite);
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { cr_system_reference(ptr::null_mut()) }, CrStatus::NullPointer);
    assert!(last_error().contains("out"));
    let mut modes = std::mem::MaybeUninit::<CrModes>::uninit();
    assert_eq!(
        unsafe { cr_system_modes(ptr::null(), modes.as_mut_ptr()) },
        CrStatus::NullPointer
    );
    assert_eq!(
        unsafe { cr_thermal_force_psd(1.0, 300.0, ptr::null_mut()) },
        CrStatus::NullPointer
    );
    assert_eq!(unsafe { cr_timeseries_len(ptr::null()) }, 0);
    assert!(unsafe { cr_spectrum_values(ptr::null()) }.is_null());
    unsafe {
        cr_system_free(ptr::null_mut());
        cr_timeseries_free(ptr::null_mut());
        cr_spectrum_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_last_error() {
    assert_eq!(unsafe { cr_system_reference(ptr::null_mut()) }, CrStatus::NullPointer);
    assert!(!cr_last_error_message().is_null());
    let sys = reference();
    assert!(cr_last_error_message().is_null());
    unsafe { cr_system_free(sys) };
}

#[test]
fn receptance_is_symmetric_and_static_limit_matches() {
    let sys = reference();
    let mut h = [CrComplex::default(); 4];
    assert_eq!(
        unsafe { cr_system_receptance(sys, 2474.73, h.as_mut_ptr()) },
        CrStatus::Ok
    );
    assert!((h[1].re - h[2].re).abs() <= 1e-12 * h[1].re.abs().max(1e-30));
    assert!((h[1].im - h[2].im).abs() <= 1e-12 * h[1].im.abs().max(1e-30));

    // at DC the receptance is the inverse stiffness matrix
    assert_eq!(unsafe { cr_system_receptance(sys, 0.0, h.as_mut_ptr()) }, CrStatus::Ok);
    let (km, kc) = (123362.25_f64, -393.5_f64);
    let k = km + kc;
    let det = k * k - kc * kc;
    assert!((h[0].re - k / det).abs() < 1e-9 * k / det);
    assert!((h[1].re - kc / det).abs() < 1e-9 * (kc / det).abs());
    unsafe { cr_system_free(sys) };
}

#[test]
fn thermal_force_psd_value() {
    let mut v = 0.0;
    assert_eq!(unsafe { cr_thermal_force_psd(0.0031, 300.0, &mut v) }, CrStatus::Ok);
    let expect = 4.0 * 1.380649e-23 * 300.0 * 0.0031;
    assert!((v - expect).abs() < 1e-12 * expect);
    assert_eq!(
        unsafe { cr_thermal_force_psd(-1.0, 300.0, &mut v) },
        CrStatus::InvalidParameter
    );
}

#[test]
fn electronic_budget_reference_rows() {
    let r = cr_readout_default();
    let mut b = CrElectronicBudget::default();
    assert_eq!(
        unsafe { cr_electronic_budget(&r, 4e6, 300.0, 10.0, &mut b) },
        CrStatus::Ok
    );
    let close = |a: f64, e: f64| (a - e).abs() < 1e-3 * e;
    assert!(close(b.i_rf, 4.0704e-13), "{}", b.i_rf);
    assert!(close(b.i_vn, 4.3442e-13), "{}", b.i_vn);
    assert!(close(b.i_in, 9.9296e-14), "{}", b.i_in);
    assert!(close(b.total_density_convention, 1.5692e-13));
    assert!(close(b.total_integrated, 6.0354e-13));

    let mut total = 0.0;
    assert_eq!(unsafe { cr_total_system_noise(3.0, 4.0, &mut total) }, CrStatus::Ok);
    assert!((total - 5.0).abs() < 1e-12);
}

#[test]
fn resolution_chain() {
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    let mut ar = 0.0;
    assert_eq!(unsafe { cr_amplitude_resolution(1e-6, 2.0, &mut r1) }, CrStatus::Ok);
    assert_eq!(unsafe { cr_amplitude_resolution(1e-6, 2.0, &mut r2) }, CrStatus::Ok);
    assert_eq!(unsafe { cr_ar_resolution(r1, r2, &mut ar) }, CrStatus::Ok);
    assert!((ar - r1 * 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(
        unsafe { cr_amplitude_resolution(1e-6, 0.0, &mut r1) },
        CrStatus::NoCarrier
    );

    let mut m = CrMinDetectable::default();
    assert_eq!(
        unsafe { cr_min_detectable_stiffness(4e-6, 2.0, 16.0, &mut m) },
        CrStatus::Ok
    );
    assert!((m.absolute - 2e-6).abs() < 1e-18);
    assert!((m.density - 5e-7).abs() < 1e-18);
}

fn quiet_plan(duration: f64) -> CrPlan {
    CrPlan {
        dt: 0.0,
        duration,
        decimation: 4,
        initial_state: [0.0; 4],
    }
}

#[test]
fn simulate_and_welch_harmonic_tone() {
    let sys = reference();
    let forcing = CrForcing {
        harmonic_amplitude: 1e-3,
        harmonic_frequency: 2400.0,
        harmonic_phase: 0.0,
        harmonic_target: 1,
        noise_target: CrNoiseTarget::None,
        noise_psd: 0.0,
        seed: 0,
    };
    let plan = quiet_plan(4.0);
    let mut ts = ptr::null_mut();
    assert_eq!(unsafe { cr_simulate(sys, &forcing, &plan, &mut ts) }, CrStatus::Ok);
    let n = unsafe { cr_timeseries_len(ts) };
    let dt = unsafe { cr_timeseries_dt(ts) };
    assert!(n > 1000);
    assert!(dt > 0.0);
    let x1 = unsafe { cr_timeseries_data(ts, 1) };
    assert!(!x1.is_null());
    assert!(unsafe { cr_timeseries_data(ts, 3) }.is_null());

    // skip the transient
    let skip = n / 2;
    let mut spec = ptr::null_mut();
    assert_eq!(
        unsafe { cr_welch_psd(x1.add(skip), n - skip, dt, 0, 0.5, &mut spec) },
        CrStatus::Ok
    );
    let len = unsafe { cr_spectrum_len(spec) };
    let df = unsafe { cr_spectrum_df(spec) };
    let vals = unsafe { std::slice::from_raw_parts(cr_spectrum_values(spec), len) };
    let peak = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k as f64 * df)
        .unwrap();
    assert!((peak - 2400.0).abs() <= df, "peak at {peak}");

    let mut ratio = 0.0;
    assert_eq!(unsafe { cr_spectrum_parseval_ratio(spec, &mut ratio) }, CrStatus::Ok);
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");

    let mut bp = 0.0;
    assert_eq!(
        unsafe { cr_spectrum_band_power(spec, 2400.0, 100.0, &mut bp) },
        CrStatus::Ok
    );
    assert!(bp > 0.0);
    assert_eq!(
        unsafe { cr_spectrum_band_power(spec, 1e9, 10.0, &mut bp) },
        CrStatus::OutOfRange
    );

    unsafe {
        cr_spectrum_free(spec);
        cr_timeseries_free(ts);
        cr_system_free(sys);
    }
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let sys = reference();
    let run = |seed: u64| {
        let forcing = CrForcing {
            harmonic_amplitude: 0.0,
            harmonic_frequency: 0.0,
            harmonic_phase: 0.0,
            harmonic_target: 1,
            noise_target: CrNoiseTarget::Both,
            noise_psd: 5e-23,
            seed,
        };
        let mut ts = ptr::null_mut();
        assert_eq!(
            unsafe { cr_simulate(sys, &forcing, &quiet_plan(0.2), &mut ts) },
            CrStatus::Ok
        );
        let n = unsafe { cr_timeseries_len(ts) };
        let v = unsafe { std::slice::from_raw_parts(cr_timeseries_data(ts, 2), n) }.to_vec();
        unsafe { cr_timeseries_free(ts) };
        v
    };
    let a = run(5);
    assert_eq!(a, run(5));
    assert_ne!(a, run(6));
    unsafe { cr_system_free(sys) };
}

#[test]
fn simulate_rejects_large_time_step() {
    let sys = reference();
    let forcing = CrForcing {
        harmonic_amplitude: 0.0,
        harmonic_frequency: 0.0,
        harmonic_phase: 0.0,
        harmonic_target: 1,
        noise_target: CrNoiseTarget::None,
        noise_psd: 0.0,
        seed: 0,
    };
    let plan = CrPlan {
        dt: 1e-3,
        ..quiet_plan(0.1)
    };
    let mut ts = ptr::null_mut();
    assert_eq!(
        unsafe { cr_simulate(sys, &forcing, &plan, &mut ts) },
        CrStatus::TimeStepTooLarge
    );
    assert!(ts.is_null());
    unsafe { cr_system_free(sys) };
}

#[test]
fn welch_rejects_short_input() {
    let x = [0.0; 8];
    let mut spec = ptr::null_mut();
    assert_eq!(
        unsafe { cr_welch_psd(x.as_ptr(), x.len(), 1e-3, 0, 0.5, &mut spec) },
        CrStatus::TooShort
    );
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(cr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cr_noise_lab.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct CrSystem CrSystem;"));
    assert!(header.contains("CR_STATUS_NULL_POINTER = 1"));
}

#[test]
fn header_compiles_as_c99() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(&src, "#include \"cr_noise_lab.h\"\nint main(void) { return CR_STATUS_OK; }\n").unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = std::process::Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .args(["-std=c99", "-Wall", "-Werror", "-pedantic", "-fsyntax-only", "-I", include])
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
