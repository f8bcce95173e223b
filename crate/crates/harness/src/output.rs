//! Files written by a run and regenerated by `report`.
//!
//! For a run with stem `S` in directory `D`:
//!
//! * `D/S.records.jsonl`: one [`ResultRecord`] per line.
//! * `D/S.detail.jsonl`: detail rows, each `{schema_version, record, experiment, experiment_id, row}`
//!   where `record` is the line index in the records file.
//! * `D/S.summary.csv`: one row per record; fixed columns then every scalar name, sorted.
//! * `D/S.long.csv`: plot-ready `experiment_id, series, x, y`.
//! * `D/S.phase.csv` (disintegration runs): `a, b, k_estimate, m_1, lambda_c`.
//! * `D/S.polyline.csv` (leaf runs): `index, x, y, z, arclength`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use phlab::disintegration::AtomReport;

use crate::experiments::Outcome;
use crate::record::{ResultRecord, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path} line {line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv { path: path.to_path_buf(), source }
}

pub const SUMMARY_FIXED: [&str; 10] =
    ["experiment", "experiment_id", "config_hash", "family", "a", "b", "q", "direction", "seed", "status"];
pub const LONG_HEADER: [&str; 4] = ["experiment_id", "series", "x", "y"];
pub const PHASE_HEADER: [&str; 5] = ["a", "b", "k_estimate", "m_1", "lambda_c"];
pub const POLYLINE_HEADER: [&str; 5] = ["index", "x", "y", "z", "arclength"];

fn write_jsonl<'a>(path: &Path, lines: impl Iterator<Item = String> + 'a) -> Result<(), OutputError> {
    let mut w = BufWriter::new(File::create(path).map_err(io(path))?);
    for l in lines {
        writeln!(w, "{l}").map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

fn num(v: f64) -> String {
    // shortest round-trip form, the same digits serde_json writes
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite float")
    } else {
        v.to_string()
    }
}

/// Write every artifact of a run; records get their `detail` path filled in.
pub fn write_run(dir: &Path, stem: &str, outcomes: &mut [Outcome]) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let detail_name = format!("{stem}.detail.jsonl");
    let detail_path = dir.join(&detail_name);
    let mut rows = Vec::new();
    for (i, o) in outcomes.iter_mut().enumerate() {
        o.record.detail = Some(detail_name.clone());
        for r in &o.detail {
            rows.push(detail_line(i, &o.record, r));
        }
    }
    write_jsonl(&detail_path, rows.iter().map(|v| v.to_string()))?;
    let records: Vec<ResultRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let records_path = dir.join(format!("{stem}.records.jsonl"));
    write_jsonl(&records_path, records.iter().map(|r| serde_json::to_string(r).expect("record serializes")))?;
    let details: Vec<Vec<Value>> = outcomes.iter().map(|o| o.detail.clone()).collect();
    let mut paths = vec![records_path, detail_path];
    paths.extend(export_report(dir, stem, &records, &details)?);
    Ok(paths)
}

fn detail_line(index: usize, rec: &ResultRecord, row: &Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "record": index,
        "experiment": rec.experiment,
        "experiment_id": rec.experiment_id,
        "row": row,
    })
}

/// Summary, long-format and experiment-specific CSV files for a set of records.
pub fn export_report(dir: &Path, stem: &str, records: &[ResultRecord], details: &[Vec<Value>]) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut kinds: BTreeSet<&str> = records.iter().map(|r| r.experiment.as_str()).collect();
    if kinds.len() > 1 {
        return Err(OutputError::Invalid { path: dir.join(stem), message: format!("records mix experiment types {kinds:?}") });
    }
    let kind = kinds.pop_first().unwrap_or("");
    let mut out = Vec::new();

    let summary = dir.join(format!("{stem}.summary.csv"));
    let names: BTreeSet<&str> = records.iter().flat_map(|r| r.scalars.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_path(&summary).map_err(csv_err(&summary))?;
    let header: Vec<&str> = SUMMARY_FIXED.iter().copied().chain(names.iter().copied()).collect();
    w.write_record(&header).map_err(csv_err(&summary))?;
    for r in records {
        let mut row = vec![
            r.experiment.clone(),
            r.experiment_id.clone(),
            r.config_hash.clone(),
            r.map.family.clone(),
            num(r.map.a),
            num(r.map.b),
            r.map.q.map(|q| q.to_string()).unwrap_or_default(),
            format!("{:?}", r.map.direction).to_lowercase(),
            r.seed.to_string(),
            if r.passed() { "pass" } else { "fail" }.to_string(),
        ];
        row.extend(names.iter().map(|k| r.scalars.get(*k).map(|v| num(*v)).unwrap_or_default()));
        w.write_record(&row).map_err(csv_err(&summary))?;
    }
    w.flush().map_err(io(&summary))?;
    out.push(summary);

    let long = dir.join(format!("{stem}.long.csv"));
    let mut w = csv::Writer::from_path(&long).map_err(csv_err(&long))?;
    w.write_record(LONG_HEADER).map_err(csv_err(&long))?;
    for (r, d) in records.iter().zip(details) {
        for (series, x, y) in long_rows(&r.experiment, d) {
            w.write_record([r.experiment_id.clone(), series, num(x), num(y)]).map_err(csv_err(&long))?;
        }
    }
    w.flush().map_err(io(&long))?;
    out.push(long);

    if kind == "disintegrate" {
        let phase = dir.join(format!("{stem}.phase.csv"));
        let mut w = csv::Writer::from_path(&phase).map_err(csv_err(&phase))?;
        w.write_record(PHASE_HEADER).map_err(csv_err(&phase))?;
        for r in records {
            let get = |k: &str| r.scalars.get(k).map(|v| num(*v)).unwrap_or_default();
            w.write_record([num(r.map.a), num(r.map.b), get("k_estimate"), get("m_1"), get("lambda_c")]).map_err(csv_err(&phase))?;
        }
        w.flush().map_err(io(&phase))?;
        out.push(phase);
    }
    if kind == "leaf" {
        let poly = dir.join(format!("{stem}.polyline.csv"));
        let mut w = csv::Writer::from_path(&poly).map_err(csv_err(&poly))?;
        w.write_record(POLYLINE_HEADER).map_err(csv_err(&poly))?;
        for row in details.iter().flatten() {
            let f = |k: &str| row.get(k).and_then(Value::as_f64).map(num).unwrap_or_default();
            w.write_record(POLYLINE_HEADER.map(f)).map_err(csv_err(&poly))?;
        }
        w.flush().map_err(io(&poly))?;
        out.push(poly);
    }
    Ok(out)
}

/// `(series, x, y)` curves extracted from the detail rows of one record.
pub fn long_rows(experiment: &str, detail: &[Value]) -> Vec<(String, f64, f64)> {
    let f = |v: &Value, path: &[&str]| path.iter().try_fold(v, |v, k| v.get(*k)).and_then(Value::as_f64);
    let mut out = Vec::new();
    for row in detail {
        let index = row.get("index").and_then(Value::as_u64).unwrap_or(0);
        match experiment {
            "disintegrate" => {
                if let (Some(n), Some(m)) = (f(row, &["report", "n"]), f(row, &["report", "m_1"])) {
                    out.push((format!("m_1/point{index}"), n, m));
                }
            }
            "contract" => {
                if let Some(d) = row.pointer("/probe/diameters").and_then(Value::as_array) {
                    for p in d {
                        if let (Some(n), Some(v)) = (p.get(0).and_then(Value::as_f64), p.get(1).and_then(Value::as_f64)) {
                            out.push((format!("diameter/point{index}"), n, v));
                        }
                    }
                }
            }
            "cover" => {
                if let Some(c) = row.pointer("/report/curve").and_then(Value::as_array) {
                    for p in c {
                        if let (Some(n), Some(v)) = (p.get(0).and_then(Value::as_f64), p.get(1).and_then(Value::as_f64)) {
                            out.push(("coverage".into(), n, v));
                        }
                    }
                }
            }
            "lyapunov" => {
                if let Some(c) = row.pointer("/spectrum/exponents/1").and_then(Value::as_f64) {
                    out.push(("lambda_c".into(), index as f64, c));
                }
            }
            "holonomy" => {
                if let (Some(a), Some(b)) = (f(row, &["t_in"]), f(row, &["t_out"])) {
                    out.push(("holonomy".into(), a, b));
                }
            }
            "leaf" => {
                if let (Some(s), Some(z)) = (f(row, &["arclength"]), f(row, &["z"])) {
                    out.push(("z".into(), s, z));
                }
            }
            _ => {}
        }
    }
    out
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>, OutputError> {
    let file = File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ResultRecord = serde_json::from_str(&line).map_err(|source| OutputError::Json { path: path.into(), line: i + 1, source })?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(OutputError::Invalid { path: path.into(), message: format!("schema version {}", r.schema_version) });
        }
        out.push(r);
    }
    Ok(out)
}

/// Detail rows grouped by record index.
pub fn read_details(path: &Path, n_records: usize) -> Result<Vec<Vec<Value>>, OutputError> {
    let file = File::open(path).map_err(io(path))?;
    let mut out = vec![Vec::new(); n_records];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        let v: Value = serde_json::from_str(&line).map_err(|source| OutputError::Json { path: path.into(), line: i + 1, source })?;
        let bad = |m: &str| OutputError::Invalid { path: path.into(), message: format!("line {}: {m}", i + 1) };
        if v.get("schema_version").and_then(Value::as_u64) != Some(SCHEMA_VERSION as u64) {
            return Err(bad("missing or wrong schema_version"));
        }
        let k = v.get("record").and_then(Value::as_u64).ok_or_else(|| bad("missing record index"))? as usize;
        let row = v.get("row").cloned().ok_or_else(|| bad("missing row"))?;
        out.get_mut(k).ok_or_else(|| bad("record index out of range"))?.push(row);
    }
    Ok(out)
}

/// Re-check module-level invariants stored in the detail rows. Returns one message per problem.
pub fn revalidate(record: &ResultRecord, detail: &[Value]) -> Vec<String> {
    let mut problems = Vec::new();
    match record.experiment.as_str() {
        "disintegrate" => {
            for row in detail {
                if let Some(rep) = row.get("report") {
                    match serde_json::from_value::<AtomReport>(rep.clone()) {
                        Ok(a) => {
                            if let Err(e) = a.validate() {
                                problems.push(format!("{}: atom report n={}: {e}", record.experiment_id, a.n));
                            }
                        }
                        Err(e) => problems.push(format!("{}: unreadable atom report: {e}", record.experiment_id)),
                    }
                }
            }
        }
        "leaf" => {
            let s: Vec<f64> = detail.iter().filter_map(|r| r.get("arclength").and_then(Value::as_f64)).collect();
            if !s.windows(2).all(|w| w[1] >= w[0]) {
                problems.push(format!("{}: polyline arclength decreases", record.experiment_id));
            }
            if let (Some(r), Some(l)) = (record.scalars.get("closure_residual"), record.scalars.get("length")) {
                let stated = record.checks.iter().find(|c| c.name == "closure").map(|c| !c.failed());
                if stated != Some(*r < 1e-6 * l) {
                    problems.push(format!("{}: closure check disagrees with residual {r:e}", record.experiment_id));
                }
            }
        }
        _ => {}
    }
    problems
}
