use clap::ValueEnum;
use serde_json::{json, Map, Value};

use symmint::verify::Report;
use symmint::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub enum Body {
    Value {
        value: f64,
        err_estimate: f64,
        imag_residual: Option<f64>,
        method: String,
    },
    Report(Report),
}

pub struct Record {
    pub body: Body,
    pub config_echo: Map<String, Value>,
    /// Subcommand-specific fields appended after the common ones.
    pub extra: Map<String, Value>,
}

impl Record {
    pub fn new(value: f64, err_estimate: f64, imag_residual: Option<f64>, method: String, echo: Map<String, Value>) -> Self {
        Self {
            body: Body::Value {
                value,
                err_estimate,
                imag_residual,
                method,
            },
            config_echo: echo,
            extra: Map::new(),
        }
    }

    pub fn report(r: Report) -> Self {
        Self {
            body: Body::Report(r),
            config_echo: Map::new(),
            extra: Map::new(),
        }
    }

    /// Value records default to JSON, reports to a text table.
    pub fn render(&self, format: Option<Format>) -> String {
        match (&self.body, format) {
            (Body::Report(r), None) => r.render_text(),
            (Body::Report(r), Some(Format::Json)) => pretty(&json!({
                "passed": r.passed(),
                "failures": r.failures(),
                "checks": r.checks,
            })),
            (Body::Report(r), Some(Format::Csv)) => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for c in &r.checks {
                    w.serialize(c).expect("in-memory csv");
                }
                String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
            }
            (Body::Value { .. }, Some(Format::Csv)) => self.csv(),
            (Body::Value { .. }, _) => pretty(&self.json()),
        }
    }

    fn json(&self) -> Value {
        let Body::Value {
            value,
            err_estimate,
            imag_residual,
            method,
        } = &self.body
        else {
            unreachable!("reports are rendered separately")
        };
        let mut m = Map::new();
        m.insert("value".into(), json!(value));
        m.insert("err_estimate".into(), json!(err_estimate));
        m.insert("imag_residual".into(), json!(imag_residual));
        m.insert("method".into(), json!(method));
        m.insert("config_echo".into(), Value::Object(self.config_echo.clone()));
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    /// Header and one row; `config_echo` and scalar extras become
    /// `config_echo.<key>` and `<key>` columns, nested extras stay JSON.
    fn csv(&self) -> String {
        let Value::Object(m) = self.json() else { unreachable!() };
        let mut header = Vec::new();
        let mut row = Vec::new();
        for (k, v) in m {
            match v {
                Value::Object(inner) if k == "config_echo" => {
                    for (ik, iv) in inner {
                        header.push(format!("config_echo.{ik}"));
                        row.push(cell(&iv));
                    }
                }
                other => {
                    header.push(k);
                    row.push(cell(&other));
                }
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory csv");
        w.write_record(&row).expect("in-memory csv");
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn error_text(e: &Error, echo: Value, format: Option<Format>) -> String {
    let v = json!({
        "error": { "kind": e.kind(), "message": e.to_string() },
        "config_echo": echo,
    });
    match format {
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["error.kind", "error.message"]).expect("in-memory csv");
            w.write_record([e.kind(), &e.to_string()]).expect("in-memory csv");
            String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
        }
        _ => pretty(&v),
    }
}
