use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Every JSON report: schema version, command, the resolved configuration,
/// then the fields of `body` at the top level.
pub fn report(command: &str, config: impl Serialize, body: impl Serialize) -> anyhow::Result<Value> {
    let mut out = Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    out.insert("command".into(), command.into());
    out.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
    out.insert("config".into(), serde_json::to_value(config)?);
    match serde_json::to_value(body)? {
        Value::Object(m) => out.extend(m),
        Value::Null => {}
        other => {
            out.insert("result".into(), other);
        }
    }
    Ok(Value::Object(out))
}

/// File or standard output.
pub fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json(path: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// 17 significant digits, round-trips exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: Option<&Path>, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads column `t` and `column` from a CSV with a header row.
pub fn read_columns(path: &Path, column: &str) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rd.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("{} has no column `{name}` (columns: {})", path.display(), headers.iter().collect::<Vec<_>>().join(", ")))
    };
    let (ti, vi) = (find("t")?, find(column)?);
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> anyhow::Result<f64> {
            rec.get(i).unwrap_or("").trim().parse().with_context(|| format!("row {}: bad number", line + 2))
        };
        t.push(parse(ti)?);
        v.push(parse(vi)?);
    }
    Ok((t, v))
}
