//! IMEX Butcher tableaux: an implicit DIRK part with an explicit first stage
//! paired with a strictly lower-triangular explicit part.
//!
//! Storage is 0-based. Stage `i` here is stage `i + 1` in the usual 1-based
//! tableau notation, so `a[2][1]` is the coefficient usually written `a_{3,2}`.

mod file;
mod order;
mod registry;

pub use file::{parse_tableau_json, read_tableau_file};
pub use order::{check_order_conditions, ConditionKind, OrderCondition, OrderReport};
pub use registry::{registry, MethodId, ParamMap};

use serde::Serialize;

use crate::error::{IerkError, Result};
use crate::linalg::ScalarMatrix;
use crate::scalar::Scalar;

/// Floating tolerance for row-sum checks on tableaux with non-rational entries.
pub const FLOAT_ROW_SUM_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TableauKind {
    /// Nonzero first implicit column below the first row.
    Lobatto,
    /// First implicit column vanishes (ARS type).
    Radau,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImexTableau {
    pub name: String,
    /// Free-parameter values used to build the tableau, in family order.
    pub params: Vec<(String, Scalar)>,
    pub c: Vec<Scalar>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Scalar>>,
    #[serde(rename = "A_hat")]
    pub a_hat: Vec<Vec<Scalar>>,
    pub formal_order: usize,
    /// Set when a registry parameter lies outside the range for which the
    /// method is known to dissipate energy unconditionally. The tableau is
    /// still a valid Runge-Kutta method.
    pub outside_certified_range: bool,
}

impl ImexTableau {
    /// Builds a tableau and checks the structural invariants.
    pub fn new(
        name: impl Into<String>,
        c: Vec<Scalar>,
        a: Vec<Vec<Scalar>>,
        a_hat: Vec<Vec<Scalar>>,
        formal_order: usize,
    ) -> Result<Self> {
        let t = ImexTableau {
            name: name.into(),
            params: Vec::new(),
            c,
            a,
            a_hat,
            formal_order,
            outside_certified_range: false,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_params(mut self, params: Vec<(String, Scalar)>) -> Self {
        self.params = params;
        self
    }

    pub fn s(&self) -> usize {
        self.c.len()
    }

    /// Number of implicit stages, `s - 1`.
    pub fn s_i(&self) -> usize {
        self.c.len() - 1
    }

    /// Implicit weights: the last row of `A`.
    pub fn b(&self) -> &[Scalar] {
        &self.a[self.s() - 1]
    }

    /// Explicit weights: the last row of `A_hat`.
    pub fn b_hat(&self) -> &[Scalar] {
        &self.a_hat[self.s() - 1]
    }

    pub fn kind(&self) -> TableauKind {
        if self.a.iter().skip(1).all(|row| row[0].is_zero()) {
            TableauKind::Radau
        } else {
            TableauKind::Lobatto
        }
    }

    pub fn is_exact(&self) -> bool {
        self.c
            .iter()
            .chain(self.a.iter().flatten())
            .chain(self.a_hat.iter().flatten())
            .all(Scalar::is_exact)
    }

    pub fn param(&self, symbol: &str) -> Option<&Scalar> {
        self.params
            .iter()
            .find(|(k, _)| k == symbol)
            .map(|(_, v)| v)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(IerkError::InvalidTableau(format!("{}: {m}", self.name)));
        let s = self.c.len();
        if s < 2 {
            return bad(format!("need at least 2 stages, got {s}"));
        }
        if self.a.len() != s || self.a_hat.len() != s {
            return bad("A and A_hat must have s rows".into());
        }
        if self.a.iter().chain(&self.a_hat).any(|r| r.len() != s) {
            return bad("A and A_hat rows must have length s".into());
        }
        if !self.c[0].is_zero() {
            return bad("c[0] must be 0".into());
        }
        if self.c[s - 1] != Scalar::one() {
            return bad("c[s-1] must be 1".into());
        }
        if self.a[0].iter().any(|x| !x.is_zero()) {
            return bad("the first stage must be explicit (first row of A is zero)".into());
        }
        for i in 0..s {
            if self.a[i][i + 1..].iter().any(|x| !x.is_zero()) {
                return bad(format!("A is not lower triangular in row {i}"));
            }
            if self.a_hat[i][i..].iter().any(|x| !x.is_zero()) {
                return bad(format!("A_hat is not strictly lower triangular in row {i}"));
            }
            let implicit: Scalar = self.a[i].iter().cloned().sum();
            let explicit: Scalar = self.a_hat[i].iter().cloned().sum();
            for (label, sum, row) in [
                ("A", implicit, &self.a[i]),
                ("A_hat", explicit, &self.a_hat[i]),
            ] {
                if !row_sum_matches(&sum, &self.c[i], row) {
                    return bad(format!(
                        "row {i} of {label} sums to {} but c[{i}] = {}",
                        sum.to_f64(),
                        self.c[i].to_f64()
                    ));
                }
            }
        }
        for k in 1..s {
            if self.a_hat[k][k - 1].is_zero() {
                return bad(format!("subdiagonal A_hat[{k}][{}] vanishes", k - 1));
            }
        }
        Ok(())
    }

    /// The `s_I x s_I` matrices `A_I[i][j] = A[i+1][j+1]` and
    /// `A_E[i][j] = A_hat[i+1][j]` (both 0-based).
    pub fn reduced_matrices(&self) -> Result<(ScalarMatrix, ScalarMatrix)> {
        let n = self.s_i();
        let mut ai = ScalarMatrix::zeros(n);
        let mut ae = ScalarMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                ai.set(i, j, self.a[i + 1][j + 1].clone());
                ae.set(i, j, self.a_hat[i + 1][j].clone());
            }
            if ae.get(i, i).is_zero() {
                return Err(IerkError::InvalidTableau(format!(
                    "{}: A_E has a zero diagonal entry at {i}",
                    self.name
                )));
            }
        }
        Ok((ai, ae))
    }

    /// All coefficients converted to `f64`.
    pub fn to_numeric(&self) -> NumericTableau {
        let conv = |m: &Vec<Vec<Scalar>>| -> Vec<Vec<f64>> {
            m.iter()
                .map(|r| r.iter().map(Scalar::to_f64).collect())
                .collect()
        };
        NumericTableau {
            c: self.c.iter().map(Scalar::to_f64).collect(),
            a: conv(&self.a),
            a_hat: conv(&self.a_hat),
        }
    }
}

fn row_sum_matches(sum: &Scalar, target: &Scalar, row: &[Scalar]) -> bool {
    if sum.is_exact() && target.is_exact() {
        return sum == target;
    }
    let scale = row.iter().map(|x| x.to_f64().abs()).fold(1.0, f64::max);
    (sum.to_f64() - target.to_f64()).abs() <= FLOAT_ROW_SUM_TOL * scale
}

/// `f64` copy of a tableau for the time stepper.
#[derive(Clone, Debug)]
pub struct NumericTableau {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub a_hat: Vec<Vec<f64>>,
}

impl NumericTableau {
    pub fn s(&self) -> usize {
        self.c.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn ierk1_half() -> ImexTableau {
        ImexTableau::new(
            "test",
            vec![q(0, 1), q(1, 1)],
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 2), q(1, 2)]],
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(0, 1)]],
            1,
        )
        .unwrap()
    }

    #[test]
    fn weights_are_last_rows() {
        let t = ierk1_half();
        assert_eq!(t.b(), &[q(1, 2), q(1, 2)]);
        assert_eq!(t.b_hat(), &[q(1, 1), q(0, 1)]);
        assert_eq!(t.kind(), TableauKind::Lobatto);
        assert_eq!(t.s_i(), 1);
    }

    #[test]
    fn zero_subdiagonal_rejected() {
        let err = ImexTableau::new(
            "bad",
            vec![q(0, 1), q(0, 1), q(1, 1)],
            vec![
                vec![q(0, 1), q(0, 1), q(0, 1)],
                vec![q(0, 1), q(0, 1), q(0, 1)],
                vec![q(1, 2), q(0, 1), q(1, 2)],
            ],
            vec![
                vec![q(0, 1), q(0, 1), q(0, 1)],
                vec![q(0, 1), q(0, 1), q(0, 1)],
                vec![q(1, 2), q(1, 2), q(0, 1)],
            ],
            2,
        )
        .unwrap_err();
        assert!(matches!(err, IerkError::InvalidTableau(m) if m.contains("subdiagonal")));
    }

    #[test]
    fn row_sum_violation_rejected() {
        let err = ImexTableau::new(
            "bad",
            vec![q(0, 1), q(1, 1)],
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 2), q(1, 3)]],
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(0, 1)]],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, IerkError::InvalidTableau(_)));
    }

    #[test]
    fn upper_entries_rejected() {
        let err = ImexTableau::new(
            "bad",
            vec![q(0, 1), q(1, 1)],
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 2), q(1, 2)]],
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 2), q(1, 2)]],
            1,
        )
        .unwrap_err();
        assert!(matches!(err, IerkError::InvalidTableau(m) if m.contains("strictly")));
    }

    #[test]
    fn reduced_matrices_shift_indices() {
        let t = ierk1_half();
        let (ai, ae) = t.reduced_matrices().unwrap();
        assert_eq!(ai.rows(), vec![vec![q(1, 2)]]);
        assert_eq!(ae.rows(), vec![vec![q(1, 1)]]);
    }
}
