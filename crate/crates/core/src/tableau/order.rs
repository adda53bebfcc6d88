//! Classical IMEX order conditions through order four.

use serde::Serialize;

use super::ImexTableau;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Implicit,
    Explicit,
    Coupling,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderCondition {
    pub order: usize,
    pub kind: ConditionKind,
    pub label: &'static str,
    /// Absolute value of `lhs - rhs`.
    pub residual: f64,
    /// True when the residual was computed in exact arithmetic and is zero.
    pub exact_zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub method: String,
    pub tol: f64,
    pub conditions: Vec<OrderCondition>,
    /// Largest residual at each level, index 0 for order 1.
    pub max_residual: [f64; 4],
    pub attained_order: usize,
}

impl OrderReport {
    pub fn conditions_of_order(&self, p: usize) -> impl Iterator<Item = &OrderCondition> {
        self.conditions.iter().filter(move |c| c.order == p)
    }
}

type Vector = Vec<Scalar>;

fn dot(x: &[Scalar], y: &[Scalar]) -> Scalar {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn matvec(m: &[Vec<Scalar>], v: &[Scalar]) -> Vector {
    m.iter().map(|row| dot(row, v)).collect()
}

fn hadamard(x: &[Scalar], y: &[Scalar]) -> Vector {
    x.iter().zip(y).map(|(a, b)| a * b).collect()
}

/// Evaluates all 28 residuals (2 + 2 + 6 + 18) and the attained order.
pub fn check_order_conditions(t: &ImexTableau, tol: f64) -> OrderReport {
    use ConditionKind::*;

    let a = &t.a;
    let ah = &t.a_hat;
    let b = t.b();
    let bh = t.b_hat();
    let c = &t.c;
    let one = vec![Scalar::one(); t.s()];
    let c2 = hadamard(c, c);
    let c3 = hadamard(&c2, c);
    let ac = matvec(a, c);
    let ahc = matvec(ah, c);
    let ac2 = matvec(a, &c2);
    let ahc2 = matvec(ah, &c2);
    let c_ac = hadamard(c, &ac);
    let c_ahc = hadamard(c, &ahc);
    let a_ac = matvec(a, &ac);
    let a_ahc = matvec(a, &ahc);
    let ah_ac = matvec(ah, &ac);
    let ah_ahc = matvec(ah, &ahc);

    let entries: Vec<(usize, ConditionKind, &'static str, Scalar, Scalar)> = vec![
        (1, Implicit, "b^T 1 = 1", dot(b, &one), Scalar::one()),
        (1, Explicit, "bh^T 1 = 1", dot(bh, &one), Scalar::one()),
        (2, Implicit, "b^T c = 1/2", dot(b, c), Scalar::ratio(1, 2)),
        (2, Explicit, "bh^T c = 1/2", dot(bh, c), Scalar::ratio(1, 2)),
        (
            3,
            Implicit,
            "b^T c.^2 = 1/3",
            dot(b, &c2),
            Scalar::ratio(1, 3),
        ),
        (
            3,
            Explicit,
            "bh^T c.^2 = 1/3",
            dot(bh, &c2),
            Scalar::ratio(1, 3),
        ),
        (
            3,
            Implicit,
            "b^T A c = 1/6",
            dot(b, &ac),
            Scalar::ratio(1, 6),
        ),
        (
            3,
            Explicit,
            "bh^T Ah c = 1/6",
            dot(bh, &ahc),
            Scalar::ratio(1, 6),
        ),
        (
            3,
            Coupling,
            "b^T Ah c = 1/6",
            dot(b, &ahc),
            Scalar::ratio(1, 6),
        ),
        (
            3,
            Coupling,
            "bh^T A c = 1/6",
            dot(bh, &ac),
            Scalar::ratio(1, 6),
        ),
        (
            4,
            Implicit,
            "b^T c.^3 = 1/4",
            dot(b, &c3),
            Scalar::ratio(1, 4),
        ),
        (
            4,
            Explicit,
            "bh^T c.^3 = 1/4",
            dot(bh, &c3),
            Scalar::ratio(1, 4),
        ),
        (
            4,
            Implicit,
            "b^T [c o (A c)] = 1/8",
            dot(b, &c_ac),
            Scalar::ratio(1, 8),
        ),
        (
            4,
            Explicit,
            "bh^T [c o (Ah c)] = 1/8",
            dot(bh, &c_ahc),
            Scalar::ratio(1, 8),
        ),
        (
            4,
            Coupling,
            "b^T [c o (Ah c)] = 1/8",
            dot(b, &c_ahc),
            Scalar::ratio(1, 8),
        ),
        (
            4,
            Coupling,
            "bh^T [c o (A c)] = 1/8",
            dot(bh, &c_ac),
            Scalar::ratio(1, 8),
        ),
        (
            4,
            Implicit,
            "b^T A c.^2 = 1/12",
            dot(b, &ac2),
            Scalar::ratio(1, 12),
        ),
        (
            4,
            Explicit,
            "bh^T Ah c.^2 = 1/12",
            dot(bh, &ahc2),
            Scalar::ratio(1, 12),
        ),
        (
            4,
            Coupling,
            "b^T Ah c.^2 = 1/12",
            dot(b, &ahc2),
            Scalar::ratio(1, 12),
        ),
        (
            4,
            Coupling,
            "bh^T A c.^2 = 1/12",
            dot(bh, &ac2),
            Scalar::ratio(1, 12),
        ),
        (
            4,
            Implicit,
            "b^T A^2 c = 1/24",
            dot(b, &a_ac),
            Scalar::ratio(1, 24),
        ),
        (
            4,
            Explicit,
            "bh^T Ah^2 c = 1/24",
            dot(bh, &ah_ahc),
            Scalar::ratio(1, 24),
        ),
        (
            4,
            Coupling,
            "b^T Ah^2 c = 1/24",
            dot(b, &ah_ahc),
            Scalar::ratio(1, 24),
        ),
        (
            4,
            Coupling,
            "bh^T A Ah c = 1/24",
            dot(bh, &a_ahc),
            Scalar::ratio(1, 24),
        ),
        (
            4,
            Coupling,
            "bh^T Ah A c = 1/24",
            dot(bh, &ah_ac),
            Scalar::ratio(1, 24),
        ),
        (
            4,
            Coupling,
            "b^T A Ah c = 1/24",
            dot(b, &a_ahc),
            Scalar::ratio(1, 24),
        ),
        (
            4,
            Coupling,
            "b^T Ah A c = 1/24",
            dot(b, &ah_ac),
            Scalar::ratio(1, 24),
        ),
        (
            4,
            Coupling,
            "bh^T A^2 c = 1/24",
            dot(bh, &a_ac),
            Scalar::ratio(1, 24),
        ),
    ];

    let conditions: Vec<OrderCondition> = entries
        .into_iter()
        .map(|(order, kind, label, lhs, rhs)| {
            let diff = lhs - rhs;
            OrderCondition {
                order,
                kind,
                label,
                residual: diff.to_f64().abs(),
                exact_zero: diff.is_exact() && diff.is_zero(),
            }
        })
        .collect();

    let mut max_residual = [0.0f64; 4];
    for cond in &conditions {
        let slot = &mut max_residual[cond.order - 1];
        *slot = slot.max(cond.residual);
    }
    let attained_order = max_residual.iter().take_while(|&&r| r <= tol).count();

    OrderReport {
        method: t.name.clone(),
        tol,
        conditions,
        max_residual,
        attained_order,
    }
}
