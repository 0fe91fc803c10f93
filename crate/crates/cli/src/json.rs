use std::io::Write;

use serde::Serialize;
use serde_json::{Number, Value};

/// Rounds a float to 12 significant digits.
fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| Number::from_f64(round12(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(value: &T) -> serde_json::Result<Value> {
    serde_json::to_value(value).map(round_floats)
}

pub fn print_value(value: &Value) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
}

pub fn print<T: Serialize>(value: &T) -> std::io::Result<()> {
    print_value(&to_value(value)?)
}

/// One compact object per line.
pub fn print_line<T: Serialize>(value: &T) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, &to_value(value)?)?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round12(0.9212903811960417), 0.921290381196);
        assert_eq!(round12(1234567.891234567), 1234567.89123);
        assert_eq!(round12(0.0), 0.0);
        let v = round_floats(serde_json::json!({"a": [1.0000000000001, 3], "b": "x"}));
        assert_eq!(v, serde_json::json!({"a": [1.0, 3], "b": "x"}));
    }
}
