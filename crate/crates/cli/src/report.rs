//! Flat key-value reports and their text, JSON and CSV encodings.

use std::io::{self, Write};

use serde_json::{Map, Value as Json};

/// Significant digits used for every printed number.
pub const DIGITS: usize = 12;

/// Formats like C's `%.12g`: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros dropped.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.*e}", DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// The value a reader recovers from [`fmt_num`].
pub fn round_sig(v: f64) -> f64 {
    fmt_num(v).parse().unwrap_or(v)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
    Missing,
}

impl Value {
    fn text(&self) -> String {
        match self {
            Value::Num(v) => fmt_num(*v),
            Value::Int(v) => v.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::List(vs) => vs.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(" "),
            Value::Missing => String::new(),
        }
    }

    fn json(&self) -> Json {
        let num =
            |v: f64| serde_json::Number::from_f64(round_sig(v)).map_or(Json::Null, Json::Number);
        match self {
            Value::Num(v) => num(*v),
            Value::Int(v) => Json::from(*v),
            Value::Bool(b) => Json::Bool(*b),
            Value::Text(s) => Json::String(s.clone()),
            Value::List(vs) => Json::Array(vs.iter().map(|v| num(*v)).collect()),
            Value::Missing => Json::Null,
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::List(v)
    }
}

impl From<Option<f64>> for Value {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Value::Missing, Value::Num)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

/// An ordered record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Record {
    fields: Vec<(String, Value)>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.fields.push((key.into(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|(k, _)| k.as_str())
    }

    fn json(&self) -> Json {
        let mut m = Map::new();
        for (k, v) in &self.fields {
            m.insert(k.clone(), v.json());
        }
        Json::Object(m)
    }
}

/// One or more records sharing a layout. Text shows `key: value` lines,
/// CSV a header plus one row per record, JSON an object or an array.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub records: Vec<Record>,
}

impl Table {
    pub fn single(r: Record) -> Self {
        Self { records: vec![r] }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Text => {
                for (i, r) in self.records.iter().enumerate() {
                    if i > 0 {
                        writeln!(out)?;
                    }
                    let width = r.keys().map(str::len).max().unwrap_or(0);
                    for (k, v) in &r.fields {
                        writeln!(out, "{k:<width$}  {}", v.text())?;
                    }
                }
                Ok(())
            }
            Format::Json => {
                let value = if self.records.len() == 1 {
                    self.records[0].json()
                } else {
                    Json::Array(self.records.iter().map(Record::json).collect())
                };
                serde_json::to_writer_pretty(&mut *out, &value)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(out);
                if let Some(first) = self.records.first() {
                    w.write_record(first.keys())?;
                }
                for r in &self.records {
                    w.write_record(r.fields.iter().map(|(_, v)| v.text()))?;
                }
                w.flush()
            }
        }
    }

    pub fn render(&self, format: Format) -> String {
        let mut buf = Vec::new();
        self.write(format, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 output")
    }
}
