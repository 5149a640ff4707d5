//! Per-iteration records and their CSV serialization.

use std::io::{self, BufRead, Write};

/// One row of a solver trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateTrace {
    pub iter: u64,
    pub objective: f64,
    /// Stationarity gap with the running `beta^r` and `rho`.
    pub gap_norm: f64,
    /// Stationarity gap with `beta = rho = 1`, comparable across runs.
    pub gap_norm_fixed: f64,
    pub potential: f64,
    pub step_x_norm: f64,
    pub step_y_norm: f64,
    pub gamma: f64,
    pub beta: f64,
}

pub const TRACE_HEADER: &str =
    "iter,objective,gap_norm,gap_norm_fixed,potential,step_x_norm,step_y_norm,gamma,beta";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn write_trace_csv<W: Write>(mut out: W, trace: &[IterateTrace]) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for t in trace {
        let cols = [
            t.objective,
            t.gap_norm,
            t.gap_norm_fixed,
            t.potential,
            t.step_x_norm,
            t.step_y_norm,
            t.gamma,
            t.beta,
        ];
        write!(out, "{}", t.iter)?;
        for c in cols {
            write!(out, ",{}", format_float(c))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_trace_csv<R: BufRead>(input: R) -> io::Result<Vec<IterateTrace>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(TRACE_HEADER) {
        return Err(bad("missing or unexpected trace header".into()));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(bad(format!("line {}: expected 9 columns", lineno + 2)));
        }
        let iter = fields[0]
            .parse::<u64>()
            .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
        let mut v = [0.0; 8];
        for (slot, s) in v.iter_mut().zip(&fields[1..]) {
            *slot = s
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
        }
        rows.push(IterateTrace {
            iter,
            objective: v[0],
            gap_norm: v[1],
            gap_norm_fixed: v[2],
            potential: v[3],
            step_x_norm: v[4],
            step_y_norm: v[5],
            gamma: v[6],
            beta: v[7],
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::ZERO, 8), iter in 0u64..1_000_000) {
            let row = IterateTrace {
                iter,
                objective: vals[0],
                gap_norm: vals[1].abs(),
                gap_norm_fixed: vals[2].abs(),
                potential: vals[3],
                step_x_norm: vals[4].abs(),
                step_y_norm: vals[5].abs(),
                gamma: vals[6].abs(),
                beta: vals[7].abs(),
            };
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &[row]).unwrap();
            let back = read_trace_csv(&buf[..]).unwrap();
            prop_assert_eq!(back.len(), 1);
            let b = back[0];
            prop_assert_eq!(b.iter, row.iter);
            prop_assert_eq!(b.objective.to_bits(), row.objective.to_bits());
            prop_assert_eq!(b.potential.to_bits(), row.potential.to_bits());
            prop_assert_eq!(b.beta.to_bits(), row.beta.to_bits());
        }
    }

    #[test]
    fn header_is_fixed() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TRACE_HEADER}\n"));
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_trace_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
