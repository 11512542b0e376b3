//! CSV and JSON emitters. Every JSON document carries the schema tag.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use crate::config::{Format, RunConfig};

pub const SCHEMA: &str = "divisor-lab/1";

/// Rows of strings under a fixed header.
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Table {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

pub enum Output {
    /// A single line for humans; `json` is used for `--format json`.
    Text {
        line: String,
        json: Json,
    },
    Table(Table),
    Object(Json),
}

impl Output {
    pub fn object<T: Serialize>(value: &T) -> Result<Self> {
        Ok(Output::Object(serde_json::to_value(value)?))
    }
}

pub fn emit(cfg: &RunConfig, command: &str, out: Output) -> Result<()> {
    let mut buf = Vec::new();
    render(&mut buf, cfg.output_format, command, out)?;
    match &cfg.output_path {
        Some(p) => std::fs::write(p, &buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn render(w: &mut Vec<u8>, format: Format, command: &str, out: Output) -> Result<()> {
    match (out, format) {
        (Output::Text { line, .. }, Format::Auto | Format::Text) => writeln!(w, "{line}")?,
        (Output::Text { json, .. }, Format::Json)
        | (Output::Object(json), Format::Auto | Format::Json | Format::Text) => {
            write_json(w, command, "result", json)?
        }
        (Output::Text { json, .. }, Format::Csv) | (Output::Object(json), Format::Csv) => {
            let mut t = Table::new(&["key", "value"]);
            flatten("", &json, &mut t);
            write_csv(w, &t)?
        }
        (Output::Table(t), Format::Json) => {
            let rows: Vec<Json> = t
                .rows
                .iter()
                .map(|r| {
                    let m: Map<String, Json> = t
                        .headers
                        .iter()
                        .zip(r)
                        .map(|(h, v)| (h.to_string(), Json::String(v.clone())))
                        .collect();
                    Json::Object(m)
                })
                .collect();
            write_json(w, command, "rows", Json::Array(rows))?
        }
        (Output::Table(t), _) => write_csv(w, &t)?,
    }
    Ok(())
}

fn write_json(w: &mut Vec<u8>, command: &str, key: &str, body: Json) -> Result<()> {
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("command".into(), json!(command));
    doc.insert(key.into(), body);
    serde_json::to_writer_pretty(&mut *w, &Json::Object(doc))?;
    w.push(b'\n');
    Ok(())
}

fn write_csv(w: &mut Vec<u8>, t: &Table) -> Result<()> {
    let mut c = csv::Writer::from_writer(w);
    c.write_record(&t.headers)?;
    for r in &t.rows {
        c.write_record(r)?;
    }
    c.flush()?;
    Ok(())
}

/// Dotted-path rows for `--format csv` on nested documents.
fn flatten(prefix: &str, v: &Json, t: &mut Table) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Json::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, t)),
        Json::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, t)),
        Json::Null => t.push(vec![prefix.to_string(), String::new()]),
        Json::String(s) => t.push(vec![prefix.to_string(), s.clone()]),
        other => t.push(vec![prefix.to_string(), other.to_string()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_has_schema() {
        let mut w = Vec::new();
        render(&mut w, Format::Json, "x", Output::Object(json!({"a": 1}))).unwrap();
        let v: Json = serde_json::from_slice(&w).unwrap();
        assert_eq!(v["schema"], SCHEMA);
        assert_eq!(v["result"]["a"], 1);
    }

    #[test]
    fn flattened_csv() {
        let mut w = Vec::new();
        render(
            &mut w,
            Format::Csv,
            "x",
            Output::Object(json!({"a": {"b": [1, "z"]}, "c": null})),
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(w).unwrap(),
            "key,value\na.b.0,1\na.b.1,z\nc,\n"
        );
    }
}
