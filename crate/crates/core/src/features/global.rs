//! Column-level global statistics (52 entries) and the FFT content histogram.

use std::collections::HashSet;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::stats;
use crate::corpus::is_null_token;
use crate::error::{Error, Result};

pub const HISTOGRAM_BINS: usize = 20;
pub const GLOBAL_STATS_DIM: usize = 52;

/// Largest magnitude read as a number; beyond it moments would overflow.
pub const MAX_NUMERIC_MAGNITUDE: f64 = 1e100;

/// A cell is numeric when its trimmed text parses as a decimal float
/// (scientific notation allowed, thousands separators not) no larger in
/// magnitude than [`MAX_NUMERIC_MAGNITUDE`].
pub fn parse_numeric(cell: &str) -> Option<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.abs() <= MAX_NUMERIC_MAGNITUDE)
}

pub fn is_special_char(c: char) -> bool {
    (c.is_ascii_graphic() || c == ' ') && !c.is_ascii_alphanumeric() && c != ' '
}

/// Normalized 20-bin histogram of the column's content. Numeric readings are
/// used when at least half the cells parse, string lengths otherwise. The
/// signal is min-max scaled to [0, 1]; a constant signal lands in bin 0.
pub fn content_histogram(values: &[String]) -> Result<[f64; HISTOGRAM_BINS]> {
    if values.is_empty() {
        return Err(Error::EmptyInput("content histogram"));
    }
    let nums: Vec<f64> = values.iter().filter_map(|v| parse_numeric(v)).collect();
    let signal: Vec<f64> = if nums.len() * 2 >= values.len() {
        nums
    } else {
        values.iter().map(|v| v.chars().count() as f64).collect()
    };
    let (lo, hi) = (stats::min(&signal), stats::max(&signal));
    let span = hi - lo;
    let mut hist = [0.0; HISTOGRAM_BINS];
    for &x in &signal {
        let unit = if span > 0.0 { (x - lo) / span } else { 0.0 };
        let bin = ((unit * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        hist[bin] += 1.0;
    }
    let total = signal.len() as f64;
    for h in &mut hist {
        *h /= total;
    }
    Ok(hist)
}

/// Magnitudes of the 20-point DFT of [`content_histogram`].
pub fn content_histogram_fft(values: &[String]) -> Result<Vec<f64>> {
    let hist = content_histogram(values)?;
    Ok(dft_magnitudes(&hist))
}

pub fn dft_magnitudes(signal: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

fn mean_std(xs: &[f64]) -> [f64; 2] {
    [stats::mean(xs), stats::std_dev(xs)]
}

/// The 17 global statistics in table order, 52 entries.
pub fn global_statistics(values: &[String]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("global statistics"));
    }
    let n = values.len() as f64;
    let mut out = Vec::with_capacity(GLOBAL_STATS_DIM);

    // 1-5: numeric content
    let nums: Vec<f64> = values.iter().filter_map(|v| parse_numeric(v)).collect();
    if nums.is_empty() {
        out.extend([0.0; 4]);
    } else {
        out.extend([
            stats::min(&nums),
            stats::max(&nums),
            stats::mean(&nums),
            stats::std_dev(&nums),
        ]);
    }
    out.push(nums.len() as f64 / n);

    // 6
    out.extend(content_histogram_fft(values)?);

    // 7-9
    out.push(n);
    out.push(stats::entropy(values));
    let unique: HashSet<&String> = values.iter().collect();
    out.push(unique.len() as f64 / n);

    // 10-15
    let mut digits = Vec::with_capacity(values.len());
    let mut letters = Vec::with_capacity(values.len());
    let mut specials = Vec::with_capacity(values.len());
    let mut words = Vec::with_capacity(values.len());
    for v in values {
        digits.push(v.chars().filter(char::is_ascii_digit).count() as f64);
        letters.push(v.chars().filter(|c| c.is_alphabetic()).count() as f64);
        specials.push(v.chars().filter(|&c| is_special_char(c)).count() as f64);
        words.push(v.split_whitespace().count() as f64);
    }
    out.push(digits.iter().filter(|&&d| d > 0.0).count() as f64 / n);
    out.push(letters.iter().filter(|&&d| d > 0.0).count() as f64 / n);
    out.extend(mean_std(&digits));
    out.extend(mean_std(&letters));
    out.extend(mean_std(&specials));
    out.extend(mean_std(&words));

    // 16
    let nones = values.iter().filter(|v| is_null_token(v)).count();
    out.extend([
        nones as f64,
        nones as f64 / n,
        f64::from(u8::from(nones > 0)),
        f64::from(u8::from(nones == values.len())),
    ]);

    // 17
    let lengths: Vec<f64> = values.iter().map(|v| v.chars().count() as f64).collect();
    let (var, skew, kurt) = stats::central_moments(&lengths);
    out.extend([
        f64::from(u8::from(lengths.iter().any(|&l| l > 0.0))),
        f64::from(u8::from(lengths.iter().all(|&l| l > 0.0))),
        lengths.iter().sum(),
        stats::min(&lengths),
        stats::max(&lengths),
        var,
        stats::median(&lengths),
        stats::mode(&lengths),
        kurt,
        skew,
    ]);
    debug_assert_eq!(out.len(), GLOBAL_STATS_DIM);
    Ok(out)
}
