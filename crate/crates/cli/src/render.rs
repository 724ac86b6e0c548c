use std::fmt::Write;

use serde::Serialize;
use thermobit::info::render_real;

/// Pretty JSON with a trailing newline.
pub fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn real(x: f64) -> String {
    render_real(x)
}

pub fn nats(x: f64) -> String {
    format!("{} nats ({} bits)", render_real(x), render_real(x / std::f64::consts::LN_2))
}

/// Two aligned columns.
pub fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        writeln!(out, "{k:<width$}  {v}").unwrap();
    }
    out
}

pub fn csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        writeln!(out, "{k},{}", csv_field(v)).unwrap();
    }
    out
}

pub fn csv_field(v: &str) -> String {
    if v.contains([',', '"', '\n']) {
        format!("\"{}\"", v.replace('"', "\"\""))
    } else {
        v.to_owned()
    }
}
