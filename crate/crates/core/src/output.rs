//! Serialization helpers shared by the JSON and CSV writers.

use serde::Serializer;

/// Writes finite floats as numbers, infinities as `"inf"`/`"-inf"` and NaN
/// as `null`.
pub fn extended<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_nan() {
        s.serialize_none()
    } else if *x == f64::INFINITY {
        s.serialize_str("inf")
    } else if *x == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*x)
    }
}

/// Shortest round-trip decimal for CSV cells; non-finite values as
/// `inf`, `-inf`, `nan`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        // `{:?}` is the shortest representation that parses back exactly
        format!("{x:?}")
    }
}

/// Joins one CSV row.
pub fn csv_row(cells: &[f64]) -> String {
    cells.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_formatting() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456789.0, -2.5e17] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(csv_row(&[1.0, 0.5]), "1.0,0.5");
    }

    #[test]
    fn extended_json() {
        #[derive(serde::Serialize)]
        struct S {
            #[serde(serialize_with = "extended")]
            x: f64,
        }
        assert_eq!(
            serde_json::to_string(&S { x: f64::INFINITY }).unwrap(),
            r#"{"x":"inf"}"#
        );
        assert_eq!(serde_json::to_string(&S { x: f64::NAN }).unwrap(), r#"{"x":null}"#);
        assert_eq!(serde_json::to_string(&S { x: 0.5 }).unwrap(), r#"{"x":0.5}"#);
    }
}
