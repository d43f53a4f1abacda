//! Parameter sweeps over the squeezing plane and their CSV data product.
//!
//! Grid points are independent pure computations; they are evaluated in
//! parallel and merged back in row-major order (r1 outer), so the output is
//! identical for any worker count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bell::{bell_value, BellConfig, BellMethod};
use crate::elements::{GainParam, SqueezeParam};
use crate::error::{Error, Result};

/// An inclusive linearly spaced range `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RangeSpec {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::domain("range bounds must be finite"));
        }
        if count < 1 {
            return Err(Error::domain("range count must be at least 1"));
        }
        if start > stop {
            return Err(Error::domain(format!(
                "range start {start} exceeds stop {stop}"
            )));
        }
        Ok(RangeSpec { start, stop, count })
    }

    /// The grid points, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for RangeSpec {
    type Err = Error;

    /// Parse `start:stop:count`, e.g. `0.05:2:20`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::domain(format!(
                "expected a range of the form start:stop:count, got `{s}`"
            )));
        }
        let start: f64 = parts[0]
            .parse()
            .map_err(|_| Error::domain(format!("invalid range start `{}`", parts[0])))?;
        let stop: f64 = parts[1]
            .parse()
            .map_err(|_| Error::domain(format!("invalid range stop `{}`", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| Error::domain(format!("invalid range count `{}`", parts[2])))?;
        RangeSpec::new(start, stop, count)
    }
}

/// The swept parameter plane at fixed gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub r1: RangeSpec,
    pub r2: RangeSpec,
    pub g3: f64,
}

impl SweepGrid {
    pub fn new(r1: RangeSpec, r2: RangeSpec, g3: f64) -> Result<Self> {
        if r1.start <= 0.0 {
            return Err(Error::domain(
                "r1 range must start above 0 (a silent source produces no coincidences)",
            ));
        }
        Ok(SweepGrid { r1, r2, g3 })
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub r1: f64,
    pub r2: f64,
    pub g3: f64,
    pub bell_analytic: f64,
    pub bell_engine: f64,
    /// `bell_analytic > 2` strictly; equality is classical.
    pub violated: bool,
}

/// Evaluate the grid, one row per point, in row-major order with r1 outer.
pub fn sweep_bell(grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    let r1s = grid.r1.values();
    let r2s = grid.r2.values();
    let g3 = GainParam::new(grid.g3)?;
    let points: Vec<(f64, f64)> = r1s
        .iter()
        .flat_map(|&r1| r2s.iter().map(move |&r2| (r1, r2)))
        .collect();
    points
        .par_iter()
        .map(|&(r1, r2)| {
            let cfg = BellConfig::new(SqueezeParam::new(r1)?, SqueezeParam::new(r2)?, g3);
            let bell_analytic = bell_value(&cfg, BellMethod::Analytic)?;
            let bell_engine = bell_value(&cfg, BellMethod::Engine)?;
            Ok(SweepRow {
                r1,
                r2,
                g3: grid.g3,
                bell_analytic,
                bell_engine,
                violated: bell_analytic > 2.0,
            })
        })
        .collect()
}

/// Render `x` with `digits` significant digits, plain decimal where
/// reasonable and scientific otherwise, trailing zeros trimmed.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mantissa.starts_with('-');
    let mut digits_only: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    while digits_only.len() > 1 && digits_only.ends_with('0') {
        digits_only.pop();
    }
    let body = if exp < -4 || exp >= digits as i32 {
        if digits_only.len() == 1 {
            format!("{digits_only}e{exp}")
        } else {
            format!("{}.{}e{exp}", &digits_only[..1], &digits_only[1..])
        }
    } else if exp >= 0 {
        let int_len = exp as usize + 1;
        if digits_only.len() <= int_len {
            let mut s = digits_only.clone();
            s.push_str(&"0".repeat(int_len - digits_only.len()));
            s
        } else {
            format!("{}.{}", &digits_only[..int_len], &digits_only[int_len..])
        }
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits_only)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Digits used for CSV reals.
const CSV_DIGITS: usize = 12;

/// Write the sweep table: header plus one row per grid point.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "r1,r2,G3,bell_analytic,bell_engine,violated")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_significant(row.r1, CSV_DIGITS),
            format_significant(row.r2, CSV_DIGITS),
            format_significant(row.g3, CSV_DIGITS),
            format_significant(row.bell_analytic, CSV_DIGITS),
            format_significant(row.bell_engine, CSV_DIGITS),
            u8::from(row.violated),
        )?;
    }
    Ok(())
}

/// A sweep plus its output destination.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    pub out: PathBuf,
}

/// Run the sweep and write its CSV file.
pub fn emit_sweep_csv(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let rows = sweep_bell(&spec.grid)?;
    let file = File::create(&spec.out)?;
    let mut writer = BufWriter::new(file);
    write_sweep_csv(&rows, &mut writer)?;
    writer.flush()?;
    Ok(rows)
}
