//! JSON tableau files: `{name, s, c, A, A_hat}` with entries given as decimal
//! strings, `"p/q"` strings, or plain JSON numbers.

use std::path::Path;

use serde_json::Value;

use super::{check_order_conditions, ImexTableau};
use crate::error::{IerkError, Result};
use crate::scalar::Scalar;

/// Tolerance used to infer the formal order when the file does not state one.
const INFERRED_ORDER_TOL: f64 = 1e-10;

fn entry(v: &Value) -> Result<Scalar> {
    match v {
        Value::String(s) => s.parse(),
        // JSON numbers go through their decimal text, so "0.1" stays exact.
        Value::Number(n) => n.to_string().parse(),
        other => Err(IerkError::BadCoefficient(other.to_string())),
    }
}

fn vector(v: &Value, what: &str) -> Result<Vec<Scalar>> {
    v.as_array()
        .ok_or_else(|| IerkError::InvalidTableau(format!("`{what}` must be an array")))?
        .iter()
        .map(entry)
        .collect()
}

fn matrix(v: &Value, what: &str) -> Result<Vec<Vec<Scalar>>> {
    v.as_array()
        .ok_or_else(|| IerkError::InvalidTableau(format!("`{what}` must be an array of rows")))?
        .iter()
        .map(|row| vector(row, what))
        .collect()
}

pub fn parse_tableau_json(text: &str) -> Result<ImexTableau> {
    let v: Value = serde_json::from_str(text)?;
    let field = |k: &str| {
        v.get(k)
            .ok_or_else(|| IerkError::InvalidTableau(format!("missing field `{k}`")))
    };
    let name = field("name")?
        .as_str()
        .ok_or_else(|| IerkError::InvalidTableau("`name` must be a string".into()))?
        .to_string();
    let c = vector(field("c")?, "c")?;
    let a = matrix(field("A")?, "A")?;
    let a_hat = matrix(field("A_hat")?, "A_hat")?;
    if let Some(s) = v.get("s") {
        let s = s
            .as_u64()
            .ok_or_else(|| IerkError::InvalidTableau("`s` must be a positive integer".into()))?;
        if s as usize != c.len() {
            return Err(IerkError::SizeMismatch {
                expected: s as usize,
                got: c.len(),
            });
        }
    }
    let stated = v.get("formal_order").and_then(Value::as_u64);
    let mut t = ImexTableau::new(name, c, a, a_hat, stated.unwrap_or(0) as usize)?;
    if stated.is_none() {
        t.formal_order = check_order_conditions(&t, INFERRED_ORDER_TOL).attained_order;
    }
    Ok(t)
}

pub fn read_tableau_file(path: &Path) -> Result<ImexTableau> {
    parse_tableau_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crank_nicolson_like_file() {
        let t = parse_tableau_json(
            r#"{"name": "cn", "s": 2, "c": ["0", "1"],
                "A": [["0", "0"], ["1/2", "0.5"]],
                "A_hat": [[0, 0], [1, 0]]}"#,
        )
        .unwrap();
        assert!(t.is_exact());
        assert_eq!(t.formal_order, 1);
        assert_eq!(t.b()[1], Scalar::ratio(1, 2));
    }

    #[test]
    fn stage_count_mismatch() {
        let err = parse_tableau_json(
            r#"{"name": "x", "s": 3, "c": ["0", "1"],
                "A": [["0", "0"], ["0", "1"]], "A_hat": [["0", "0"], ["1", "0"]]}"#,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            IerkError::SizeMismatch {
                expected: 3,
                got: 2
            }
        ));
    }

    #[test]
    fn bad_entry() {
        let err = parse_tableau_json(
            r#"{"name": "x", "c": ["0", "one"],
                "A": [["0", "0"], ["0", "1"]], "A_hat": [["0", "0"], ["1", "0"]]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, IerkError::BadCoefficient(_)));
    }
}
