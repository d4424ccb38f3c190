//! Deterministic JSON rendering of command reports.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::linalg::ComplexMatrix;

/// Significant digits kept for every float in a report.
pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_float(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        // also folds -0.0 into 0.0
        return if x.is_finite() { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

/// Rounds every float in place; non-finite floats become `null`.
pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = Number::from_f64(round_float(x)).map(Value::Number).unwrap_or(Value::Null);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes through `serde_json::Value`, whose maps keep keys sorted.
pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

pub fn real_matrix(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
}

pub fn complex_matrix(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

/// Final rendering: rounded, pretty-printed, newline-terminated.
pub fn render_json(mut v: Value) -> String {
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

pub fn object(entries: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{:.6e}", x)
    } else {
        format!("{x}")
    }
}

pub fn mark(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_float(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_float(-0.0), 0.0);
        assert_eq!(round_float(1.75), 1.75);
        assert_eq!(round_float(123456789.1234567), 123456789.123);
    }

    #[test]
    fn rendering_sorts_keys_and_nulls_nan() {
        let v = serde_json::json!({"b": f64::NAN, "a": 0.1 + 0.2});
        let mut v = v;
        if let Value::Object(m) = &mut v {
            m.insert("b".into(), Value::from(f64::NAN));
        }
        let s = render_json(v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("0.3"));
        assert!(s.contains("null"));
    }
}
