//! Byte-stable report serialization.
//!
//! Every float is rounded to 12 significant digits before it is written, so
//! a parsed report equals the canonical in-memory report exactly.

use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;
use crate::sampling::{CountsTable, EstimateReport};
use crate::sequential::{CorrelatorReport, OutcomeTuple};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`]; `-0.0` becomes `0.0`.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Rounds every non-integer number in a JSON tree.
pub fn canonicalize_value(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_significant(n.as_f64().unwrap());
            *n = Number::from_f64(x).unwrap_or_else(|| Number::from(0));
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize_value),
        Value::Object(map) => map.values_mut().for_each(canonicalize_value),
        _ => {}
    }
}

/// The value as it reads back from its serialized form.
pub fn canonicalize<T: Serialize + DeserializeOwned>(item: &T) -> Result<T> {
    let mut v = serde_json::to_value(item)?;
    canonicalize_value(&mut v);
    Ok(serde_json::from_value(v)?)
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_canonical_json<T: Serialize>(item: &T) -> Result<String> {
    let mut v = serde_json::to_value(item)?;
    canonicalize_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// CSV cell for a float: rounded, '.' decimal, no exponent.
pub fn format_float(x: f64) -> String {
    format!("{}", round_significant(x))
}

pub const TERMS_HEADER: &str = "kind,term,sequence,sign,correlator,contribution,standard_error";

/// Per-term rows of an exact evaluation.
pub fn terms_csv(report: &CorrelatorReport) -> String {
    let mut out = format!("{TERMS_HEADER}\n");
    for t in &report.chi.terms {
        let _ = writeln!(
            out,
            "chi,{},{},{},{},{},0",
            t.sequence.ascii(),
            t.sequence.ascii(),
            t.chi_sign,
            format_float(t.correlator),
            format_float(t.contribution)
        );
    }
    for t in &report.s.terms {
        let _ = writeln!(
            out,
            "s,{},{},{},{},{},0",
            t.term.id(),
            t.term.sequence.ascii(),
            t.term.fixed_sign,
            format_float(t.signed),
            format_float(t.contribution)
        );
    }
    out
}

/// Per-term rows of a sampled estimate; `standard_error` is the
/// contribution's.
pub fn estimate_terms_csv(report: &EstimateReport) -> String {
    let mut out = format!("{TERMS_HEADER}\n");
    for t in &report.chi_terms {
        let c = t.correlator;
        let _ = writeln!(
            out,
            "chi,{},{},{},{},{},{}",
            t.sequence.ascii(),
            t.sequence.ascii(),
            t.chi_sign,
            format_float(c.value),
            format_float(f64::from(t.chi_sign) * c.value),
            format_float(c.standard_error)
        );
    }
    for t in &report.s_terms {
        let _ = writeln!(
            out,
            "s,{},{},{},{},{},{}",
            t.term.id(),
            t.term.sequence.ascii(),
            t.term.fixed_sign,
            format_float(t.signed.value),
            format_float(t.contribution.value),
            format_float(t.contribution.standard_error)
        );
    }
    out
}

pub const COUNTS_HEADER: &str = "plan_id,o1,o2,o3,ob,count";

/// One row per configuration and outcome tuple; `ob` is empty without Bob.
pub fn counts_csv(table: &CountsTable) -> String {
    let mut out = format!("{COUNTS_HEADER}\n");
    for c in &table.configs {
        let with_bob = c.plan.bob().is_some();
        let id = c.plan.id();
        for (i, n) in c.counts.iter().enumerate() {
            let t = OutcomeTuple::from_index(i, with_bob);
            let ob = t.bob.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{id},{},{},{},{ob},{n}",
                t.alice[0], t.alice[1], t.alice[2]
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_significant(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_significant(-0.0), 0.0);
        assert!(round_significant(-0.0).is_sign_positive());
        assert_eq!(round_significant(17.99999999999999), 18.0);
        assert_eq!(round_significant(1e-20 / 3.0), 3.33333333333e-21);
        let x = round_significant(std::f64::consts::PI);
        assert_eq!(round_significant(x), x);
    }

    #[test]
    fn csv_float_has_no_exponent() {
        assert_eq!(format_float(6.0), "6");
        assert_eq!(format_float(-1.0), "-1");
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert!(!format_float(1e-7).contains('e'));
    }

    #[test]
    fn canonical_round_trip() {
        let v = vec![0.1 + 0.2, 1.0 / 7.0, 2.0];
        let c = canonicalize(&v).unwrap();
        let json = to_canonical_json(&v).unwrap();
        let back: Vec<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(to_canonical_json(&c).unwrap(), json);
    }
}
