//! Trajectory CSV and report JSON persistence.
//!
//! Floats are written with 17 significant digits so a binary64 value
//! round-trips losslessly and identical runs produce byte-identical files.

use std::io::{self, BufRead, Write};

use crate::state::TrajectoryFrame;

/// Column order of the trajectory CSV.
pub const TRAJECTORY_HEADER: &str =
    "t,price,s,kappa,h,w_rational,w_noise,ret,div_ratio,p_plus,p_minus";

/// Writes frames as CSV with the fixed header.
pub fn write_trajectory_csv<W: Write>(mut out: W, frames: &[TrajectoryFrame]) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for f in frames {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            f.t,
            F(f.price),
            F(f.s),
            F(f.kappa),
            F(f.h),
            F(f.w_rational),
            F(f.w_noise),
            F(f.ret),
            F(f.div_ratio),
            F(f.p_plus),
            F(f.p_minus),
        )?;
    }
    Ok(())
}

/// Trajectory CSV as an in-memory string.
pub fn trajectory_csv_string(frames: &[TrajectoryFrame]) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, frames).expect("in-memory write");
    String::from_utf8(buf).expect("csv is ascii")
}

/// 17-significant-digit float formatting (1 leading + 16 fractional digits).
struct F(f64);

impl std::fmt::Display for F {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.16e}", self.0)
    }
}

/// Reads a trajectory CSV produced by [`write_trajectory_csv`].
///
/// The invested-trader count is not part of the CSV schema and reads back
/// as zero.
pub fn read_trajectory_csv<R: BufRead>(input: R) -> io::Result<Vec<TrajectoryFrame>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad_data("empty trajectory file"))??;
    if header.trim() != TRAJECTORY_HEADER {
        return Err(bad_data(format!(
            "unexpected header `{header}`, want `{TRAJECTORY_HEADER}`"
        )));
    }
    let mut frames = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(bad_data(format!(
                "line {}: expected 11 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let num = |i: usize| -> io::Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|e| bad_data(format!("line {}: field {}: {e}", lineno + 2, i + 1)))
        };
        frames.push(TrajectoryFrame {
            t: fields[0]
                .parse::<u64>()
                .map_err(|e| bad_data(format!("line {}: field 1: {e}", lineno + 2)))?,
            price: num(1)?,
            s: num(2)?,
            kappa: num(3)?,
            h: num(4)?,
            w_rational: num(5)?,
            w_noise: num(6)?,
            ret: num(7)?,
            div_ratio: num(8)?,
            p_plus: num(9)?,
            p_minus: num(10)?,
            n_plus: 0,
        });
    }
    Ok(frames)
}

fn bad_data(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}
