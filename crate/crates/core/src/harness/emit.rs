//! JSON and CSV output of a [`Report`].

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};

use super::config::OutputFormat;
use super::run::{Report, TrialRecord};
use crate::{Error, Result};

/// Compact JSON whose floats carry 17 significant digits.
struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value == value.trunc() && value.abs() < 1e15 {
            write!(w, "{value:.1}")
        } else {
            write!(w, "{value:.16e}")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        CompactFormatter.write_f32(w, value)
    }
}

pub fn to_json_string(report: &Report) -> Result<String> {
    let mut buf = Vec::new();
    report.serialize(&mut Serializer::with_formatter(&mut buf, FullPrecision))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

const CSV_HEADER: [&str; 24] = [
    "n",
    "trial",
    "graph_seed",
    "channel_seed",
    "flips",
    "rank",
    "expander",
    "bp_converged",
    "bp_iterations",
    "bp_residual",
    "high_noise",
    "f_bethe",
    "free_energy",
    "gap1",
    "z_p",
    "gap2",
    "q",
    "polymers",
    "loop_residual",
    "bound_violations",
    "dominance_violations",
    "census_loops",
    "markov_rhs",
    "elapsed_ms",
];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map_or_else(String::new, f)
}

fn csv_row(r: &TrialRecord) -> [String; 24] {
    let int = |x: usize| x.to_string();
    [
        int(r.n),
        int(r.trial),
        r.graph_seed.to_string(),
        r.channel_seed.to_string(),
        int(r.flips),
        int(r.rank),
        opt(r.expander, |b| b.to_string()),
        r.bp_converged.to_string(),
        int(r.bp_iterations),
        float(r.bp_residual),
        r.high_noise.to_string(),
        float(r.f_bethe),
        float(r.free_energy),
        float(r.gap1),
        opt(r.z_p, float),
        opt(r.gap2, float),
        opt(r.q, float),
        opt(r.polymers, int),
        opt(r.loop_residual, float),
        opt(r.bound_violations, int),
        opt(r.dominance_violations, int),
        opt(r.census_loops, |c| c.to_string()),
        opt(r.markov_rhs, float),
        opt(r.elapsed_ms, float),
    ]
}

/// One row per trial record. The type census is only available as JSON.
pub fn to_csv_string(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &report.records {
        w.write_record(csv_row(r))?;
    }
    let buf = w
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(buf).expect("csv of ASCII fields"))
}

/// Writes the report to `path`, or to stdout when `path` is `None`.
pub fn emit_results(report: &Report, format: OutputFormat, path: Option<&Path>) -> Result<()> {
    let text = match format {
        OutputFormat::Json => to_json_string(report)?,
        OutputFormat::Csv => to_csv_string(report)?,
    };
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_identity, ExperimentConfig};

    fn report() -> Report {
        run_identity(&ExperimentConfig {
            n: vec![6, 8],
            trials: 2,
            ..ExperimentConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn json_round_trips_exactly() {
        let rep = report();
        let text = to_json_string(&rep).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn output_is_byte_stable() {
        let (a, b) = (report(), report());
        assert_eq!(to_json_string(&a).unwrap(), to_json_string(&b).unwrap());
        assert_eq!(to_csv_string(&a).unwrap(), to_csv_string(&b).unwrap());
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let rep = report();
        let text = to_csv_string(&rep).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rd.headers().unwrap().len(), CSV_HEADER.len());
        let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), rep.records.len());
        let gap: f64 = rows[1][13].parse().unwrap();
        assert_eq!(gap, rep.records[1].gap1);
    }

    #[test]
    fn writes_to_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        emit_results(&report(), OutputFormat::Csv, Some(&path)).unwrap();
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("n,trial"));
        let missing = dir.path().join("no/such/dir.json");
        assert!(matches!(
            emit_results(&report(), OutputFormat::Json, Some(&missing)),
            Err(Error::Io { .. })
        ));
    }
}
