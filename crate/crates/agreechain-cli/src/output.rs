//! Output rendering: machine-parseable JSON by default, tabular CSV where a
//! natural table exists, terse human lines otherwise.

use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

/// Print a serializable value in the requested format. `human` falls back to
/// pretty JSON; `csv` falls back to compact JSON unless the caller rendered a
/// table itself.
pub fn emit<T: serde::Serialize>(format: Format, value: &T) {
    match format {
        Format::Json | Format::Csv => {
            println!("{}", serde_json::to_string(value).expect("output serializes"))
        }
        Format::Human => {
            println!("{}", serde_json::to_string_pretty(value).expect("output serializes"))
        }
    }
}

pub fn emit_ok(format: Format, fields: &[(&str, serde_json::Value)]) {
    let mut map = serde_json::Map::new();
    map.insert("status".into(), serde_json::Value::from("ok"));
    for (k, v) in fields {
        map.insert((*k).to_string(), v.clone());
    }
    emit(format, &serde_json::Value::Object(map));
}
