//! Artifact writers. CSV files have a header row, comma separators and
//! floats printed with 17 significant digits (`{:.16e}`), so they parse back
//! to the identical `f64`.

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ais::AisReport;
use crate::error::{Error, Result};
use crate::tempered::ChainTrace;

pub const SAMPLES_FILE: &str = "samples.csv";
pub const WEIGHTS_FILE: &str = "weights_levels.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";
pub const MODEL_FILE: &str = "model.txt";
pub const REFERENCE_FILE: &str = "reference_model.txt";
pub const PAIRING_FILE: &str = "pairing.txt";

/// Float in the shared CSV format.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// `index,log_weight,mean_spin,mode`, one row per sample.
pub fn write_samples<W: Write>(report: &AisReport, mut out: W) -> Result<()> {
    writeln!(out, "index,log_weight,mean_spin,mode")?;
    for (k, s) in report.samples.iter().enumerate() {
        writeln!(
            out,
            "{k},{},{},{}",
            fmt_f64(s.log_weight),
            fmt_f64(s.config.mean_spin()),
            s.config.mode().label()
        )?;
    }
    Ok(())
}

/// `index,level_1,...,level_L`: normalized per-level log-weights.
pub fn write_weight_levels<W: Write>(report: &AisReport, mut out: W) -> Result<()> {
    let levels = report.normalized_log_weights.first().map_or(0, Vec::len);
    write!(out, "index")?;
    for l in 1..=levels {
        write!(out, ",level_{l}")?;
    }
    writeln!(out)?;
    for (k, row) in report.normalized_log_weights.iter().enumerate() {
        write!(out, "{k}")?;
        for v in row {
            write!(out, ",{}", fmt_f64(*v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `step,mean_spin,move,accepted,log_accept_ratio`. Local sweeps leave the
/// last two fields empty.
pub fn write_trace<W: Write>(trace: &ChainTrace, mut out: W) -> Result<()> {
    writeln!(out, "step,mean_spin,move,accepted,log_accept_ratio")?;
    for (step, s) in trace.steps.iter().enumerate() {
        match s.tempered {
            Some(r) => writeln!(
                out,
                "{step},{},{},{},{}",
                fmt_f64(s.mean_spin),
                s.kind.label(),
                r.accepted,
                fmt_f64(r.log_accept_ratio)
            )?,
            None => writeln!(out, "{step},{},{},,", fmt_f64(s.mean_spin), s.kind.label())?,
        }
    }
    Ok(())
}

/// One line of the path comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// `ais` or `tt`.
    pub sampler: String,
    /// `reference` or `temperature`.
    pub path: String,
    pub levels: usize,
    /// Sweeps per AIS sample or per tempered move.
    pub sweeps: usize,
    /// `efficiency` for AIS, `acceptance_rate` for TT.
    pub metric: String,
    pub value: f64,
}

const COMPARISON_HEADER: &str = "sampler,path,levels,sweeps,metric,value";

pub fn write_comparison<W: Write>(rows: &[ComparisonRow], mut out: W) -> Result<()> {
    writeln!(out, "{COMPARISON_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.sampler,
            r.path,
            r.levels,
            r.sweeps,
            r.metric,
            fmt_f64(r.value)
        )?;
    }
    Ok(())
}

pub fn read_comparison<R: BufRead>(input: R) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line != COMPARISON_HEADER {
                return Err(Error::parse(1, format!("unexpected header `{line}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::parse(lineno + 1, format!("bad comparison row `{line}`"));
        if fields.len() != 6 {
            return Err(bad());
        }
        rows.push(ComparisonRow {
            sampler: fields[0].to_string(),
            path: fields[1].to_string(),
            levels: fields[2].parse().map_err(|_| bad())?,
            sweeps: fields[3].parse().map_err(|_| bad())?,
            metric: fields[4].to_string(),
            value: fields[5].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn comparison_round_trip() {
        let rows = vec![
            ComparisonRow {
                sampler: "ais".into(),
                path: "reference".into(),
                levels: 64,
                sweeps: 79,
                metric: "efficiency".into(),
                value: 0.123_456_789_012_345_67,
            },
            ComparisonRow {
                sampler: "tt".into(),
                path: "temperature".into(),
                levels: 64,
                sweeps: 127,
                metric: "acceptance_rate".into(),
                value: 0.0,
            },
        ];
        let mut buf = Vec::new();
        write_comparison(&rows, &mut buf).unwrap();
        assert_eq!(read_comparison(buf.as_slice()).unwrap(), rows);
        assert!(read_comparison("a,b\n".as_bytes()).is_err());
        let broken = format!("{COMPARISON_HEADER}\nais,reference,x,1,efficiency,0.5\n");
        assert!(matches!(
            read_comparison(broken.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
