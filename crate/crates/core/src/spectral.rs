//! One-sided PSD estimation, band integration and dB conversion.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{ensure_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DbConvention {
    /// `20·log10(value)`, the convention used for the published displacement
    /// noise levels even though the values are already squared quantities.
    #[default]
    Paper20Log,
    /// `10·log10(value)`, the usual convention for power densities.
    Power10Log,
}

impl DbConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            DbConvention::Paper20Log => "paper_20log",
            DbConvention::Power10Log => "power_10log",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" | "paper_20log" => Some(DbConvention::Paper20Log),
            "power" | "power_10log" => Some(DbConvention::Power10Log),
            _ => None,
        }
    }
}

pub fn to_db(value: f64, convention: DbConvention) -> Result<f64> {
    if value.is_nan() || value <= 0.0 || !value.is_finite() {
        return Err(Error::param(
            "psd_value",
            format!("must be > 0 for dB conversion, got {value}"),
        ));
    }
    Ok(match convention {
        DbConvention::Paper20Log => 20.0 * value.log10(),
        DbConvention::Power10Log => 10.0 * value.log10(),
    })
}

pub fn rms_from_mean_square(ms: f64) -> Result<f64> {
    if ms < 0.0 || !ms.is_finite() {
        return Err(Error::param("mean_square", format!("must be >= 0, got {ms}")));
    }
    Ok(ms.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowInfo {
    pub kind: &'static str,
    pub segment_length: usize,
    pub overlap: f64,
    pub segments: usize,
}

/// One-sided power spectral density on the grid `k·df`, `k = 0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// [Hz]
    pub df: f64,
    /// [unit²/Hz]
    pub values: Vec<f64>,
    pub window: WindowInfo,
    /// Plain mean square of the samples covered by at least one segment.
    pub input_mean_square: f64,
    /// Mean over segments of `Σ(w·x)² / Σw²`.
    pub windowed_mean_square: f64,
}

impl Spectrum {
    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.df
    }

    pub fn max_frequency(&self) -> f64 {
        self.df * (self.values.len().saturating_sub(1)) as f64
    }

    /// Rectangle-rule total power `Σ values·df`.
    pub fn total_power(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.df
    }

    /// `total_power / windowed_mean_square`: the spectrum against the
    /// window-weighted, overlap-averaged mean square of the input.
    pub fn parseval_ratio(&self) -> f64 {
        ratio(self.total_power(), self.windowed_mean_square)
    }

    /// `total_power / input_mean_square`. Departs from 1 when the signal
    /// power near the record ends differs from the interior.
    pub fn mean_square_ratio(&self) -> f64 {
        ratio(self.total_power(), self.input_mean_square)
    }

    /// Nearest-bin PSD value at `f`.
    pub fn value_at(&self, f: f64) -> Option<f64> {
        let k = (f / self.df).round();
        (k >= 0.0)
            .then_some(k as usize)
            .and_then(|k| self.values.get(k).copied())
    }

    /// Index of the largest bin in `[f_lo, f_hi]`.
    pub fn peak_in(&self, f_lo: f64, f_hi: f64) -> Option<usize> {
        let lo = (f_lo / self.df).ceil().max(0.0) as usize;
        let hi = ((f_hi / self.df).floor() as usize).min(self.values.len().saturating_sub(1));
        (lo..=hi).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
    }

    /// `f_hz,psd,psd_db_paper,psd_db_power` with an optional `#` metadata block.
    pub fn to_csv(&self, metadata: &[(String, String)]) -> String {
        let mut out = String::with_capacity(self.values.len() * 64 + 256);
        for (k, v) in metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(
            out,
            "# window = {}, segment_length = {}, overlap = {}, segments = {}",
            self.window.kind, self.window.segment_length, self.window.overlap, self.window.segments
        );
        out.push_str("f_hz,psd,psd_db_paper,psd_db_power\n");
        for (k, &v) in self.values.iter().enumerate() {
            let db = |c| to_db(v, c).unwrap_or(f64::NEG_INFINITY);
            let _ = writeln!(
                out,
                "{},{:e},{},{}",
                self.frequency(k),
                v,
                db(DbConvention::Paper20Log),
                db(DbConvention::Power10Log)
            );
        }
        out
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

/// Largest power of two not exceeding `n/8`.
pub fn default_segment_length(n: usize) -> Option<usize> {
    let target = n / 8;
    (target >= 2).then(|| 1usize << (usize::BITS - 1 - target.leading_zeros()))
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}

/// Hann-windowed, overlap-averaged, one-sided density periodogram.
pub fn welch_psd(x: &[f64], dt: f64, segment_length: usize, overlap: f64) -> Result<Spectrum> {
    ensure_positive("dt", dt)?;
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::param("overlap", format!("must lie in [0, 1), got {overlap}")));
    }
    if segment_length < 2 || segment_length > x.len() {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            segment: segment_length,
        });
    }
    let n = segment_length;
    let step = ((n as f64 * (1.0 - overlap)).round() as usize).max(1);
    let segments = (x.len() - n) / step + 1;
    let covered = (segments - 1) * step + n;

    let w = hann(n);
    let w_power: f64 = w.iter().map(|v| v * v).sum();
    let fs = 1.0 / dt;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let bins = n / 2 + 1;

    let per_segment: Vec<(Vec<f64>, f64)> = (0..segments)
        .into_par_iter()
        .map(|s| {
            let seg = &x[s * step..s * step + n];
            let mut buf: Vec<Complex64> = seg.iter().zip(&w).map(|(v, wi)| Complex64::new(v * wi, 0.0)).collect();
            let wms = buf.iter().map(|c| c.re * c.re).sum::<f64>() / w_power;
            fft.process(&mut buf);
            let scale = 1.0 / (fs * w_power);
            let p = (0..bins)
                .map(|k| {
                    let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                        1.0
                    } else {
                        2.0
                    };
                    one_sided * scale * buf[k].norm_sqr()
                })
                .collect();
            (p, wms)
        })
        .collect();

    let mut values = vec![0.0; bins];
    let mut windowed_ms = 0.0;
    for (p, wms) in &per_segment {
        for (acc, v) in values.iter_mut().zip(p) {
            *acc += v;
        }
        windowed_ms += wms;
    }
    let inv = 1.0 / segments as f64;
    values.iter_mut().for_each(|v| *v *= inv);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("series", "contains non-finite samples"));
    }
    let input_ms = x[..covered].iter().map(|v| v * v).sum::<f64>() / covered as f64;

    Ok(Spectrum {
        df: fs / n as f64,
        values,
        window: WindowInfo {
            kind: "hann",
            segment_length: n,
            overlap,
            segments,
        },
        input_mean_square: input_ms,
        windowed_mean_square: windowed_ms * inv,
    })
}

/// Welch estimate with the default segment length and 50% overlap.
pub fn welch_psd_default(x: &[f64], dt: f64) -> Result<Spectrum> {
    let seg = default_segment_length(x.len()).ok_or(Error::SeriesTooShort {
        len: x.len(),
        segment: 16,
    })?;
    welch_psd(x, dt, seg, 0.5)
}

/// Integral of the linearly interpolated PSD from 0 to `f`.
fn cumulative(s: &Spectrum, f: f64) -> f64 {
    let pos = f / s.df;
    let k = (pos.floor() as usize).min(s.values.len() - 1);
    let mut acc = 0.0;
    for i in 0..k {
        acc += 0.5 * (s.values[i] + s.values[i + 1]);
    }
    acc *= s.df;
    let u = pos - k as f64;
    if u > 0.0 && k + 1 < s.values.len() {
        let (a, b) = (s.values[k], s.values[k + 1]);
        acc += s.df * (u * a + 0.5 * u * u * (b - a));
    }
    acc
}

/// Trapezoidal mean-square power in `[f_center − B/2, f_center + B/2]`.
///
/// Partial bins at the band edges use linear interpolation, so a flat PSD
/// `S` gives exactly `S·B` and adjacent bands add up.
pub fn band_power(spectrum: &Spectrum, f_center: f64, bandwidth: f64) -> Result<f64> {
    if bandwidth.is_nan() || bandwidth < 0.0 || !f_center.is_finite() {
        return Err(Error::param("bandwidth", format!("must be >= 0, got {bandwidth}")));
    }
    if bandwidth == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = (f_center - 0.5 * bandwidth, f_center + 0.5 * bandwidth);
    let max = spectrum.max_frequency();
    let slack = 1e-9 * spectrum.df;
    if lo < -slack || hi > max + slack {
        return Err(Error::BandOutOfRange { low: lo, high: hi, max });
    }
    let (lo, hi) = (lo.max(0.0), hi.min(max));
    Ok(cumulative(spectrum, hi) - cumulative(spectrum, lo))
}
