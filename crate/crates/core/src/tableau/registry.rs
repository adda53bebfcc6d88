//! Built-in method families.
//!
//! Each family takes a fixed set of free symbols. Rows are given by their
//! entries from column 1 on; the first column of every row is then filled so
//! that the row sums to `c_i`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ImexTableau;
use crate::error::{IerkError, Result};
use crate::scalar::Scalar;

pub type ParamMap = BTreeMap<String, Scalar>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum MethodId {
    Ierk1,
    Ierk2_1,
    Ierk2_2,
    Ierk2Radau,
    Ierk3FourStage,
    Ierk3_1,
    Ierk3_2,
    Ierk3Radau,
    Ierk4A1,
    Ierk4A2,
}

impl MethodId {
    pub const ALL: [MethodId; 10] = [
        MethodId::Ierk1,
        MethodId::Ierk2_1,
        MethodId::Ierk2_2,
        MethodId::Ierk2Radau,
        MethodId::Ierk3FourStage,
        MethodId::Ierk3_1,
        MethodId::Ierk3_2,
        MethodId::Ierk3Radau,
        MethodId::Ierk4A1,
        MethodId::Ierk4A2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Ierk1 => "IERK1",
            MethodId::Ierk2_1 => "IERK2-1",
            MethodId::Ierk2_2 => "IERK2-2",
            MethodId::Ierk2Radau => "IERK2-Radau",
            MethodId::Ierk3FourStage => "IERK3-4stage",
            MethodId::Ierk3_1 => "IERK3-1",
            MethodId::Ierk3_2 => "IERK3-2",
            MethodId::Ierk3Radau => "IERK3-Radau",
            MethodId::Ierk4A1 => "IERK4-A1",
            MethodId::Ierk4A2 => "IERK4-A2",
        }
    }

    /// Names of the free parameters, in the order they are reported.
    /// `ah43` stands for the explicit coefficient written with a hat.
    pub fn free_symbols(self) -> &'static [&'static str] {
        match self {
            MethodId::Ierk1 => &["theta"],
            MethodId::Ierk2_1 => &["c2", "a33"],
            MethodId::Ierk2_2 => &["a33"],
            MethodId::Ierk2Radau => &["c2"],
            MethodId::Ierk3FourStage => &["a22"],
            MethodId::Ierk3_1 => &["a55"],
            MethodId::Ierk3_2 => &["a43"],
            MethodId::Ierk3Radau => &["ah43"],
            MethodId::Ierk4A1 | MethodId::Ierk4A2 => &[],
        }
    }

    pub fn formal_order(self) -> usize {
        match self {
            MethodId::Ierk1 => 1,
            MethodId::Ierk2_1 | MethodId::Ierk2_2 | MethodId::Ierk2Radau => 2,
            MethodId::Ierk3FourStage
            | MethodId::Ierk3_1
            | MethodId::Ierk3_2
            | MethodId::Ierk3Radau => 3,
            MethodId::Ierk4A1 | MethodId::Ierk4A2 => 4,
        }
    }

    /// The recommended parameter choice for each family. For the 4-stage
    /// third-order family there is no good choice; `a22 = 2` is returned.
    pub fn preferred_params(self) -> ParamMap {
        let sqrt2 = std::f64::consts::SQRT_2;
        let pairs: Vec<(&str, Scalar)> = match self {
            MethodId::Ierk1 => vec![("theta", Scalar::ratio(1, 2))],
            MethodId::Ierk2_1 => vec![("c2", Scalar::one()), ("a33", Scalar::ratio(1, 2))],
            MethodId::Ierk2_2 => vec![("a33", Scalar::float((1.0 + sqrt2) / 4.0))],
            MethodId::Ierk2Radau => vec![("c2", Scalar::float(1.0 + sqrt2 / 2.0))],
            MethodId::Ierk3FourStage => vec![("a22", Scalar::int(2))],
            MethodId::Ierk3_1 => vec![("a55", Scalar::ratio(4, 5))],
            MethodId::Ierk3_2 => vec![("a43", Scalar::ratio(-3, 5))],
            MethodId::Ierk3Radau => vec![("ah43", Scalar::one())],
            MethodId::Ierk4A1 | MethodId::Ierk4A2 => vec![],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = IerkError;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IerkError::UnknownMethod(s.to_string()))
    }
}

fn q(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

fn big(n: &str, d: &str) -> Scalar {
    Scalar::big_ratio(n, d)
}

/// Builds a full `s x s` matrix from rows 1..s given from column 1 on
/// (implicit rows include the diagonal, explicit rows stop before it).
fn fill_first_column(c: &[Scalar], tail_rows: Vec<Vec<Scalar>>) -> Vec<Vec<Scalar>> {
    let s = c.len();
    let mut m = vec![vec![Scalar::zero(); s]; s];
    for (k, tail) in tail_rows.into_iter().enumerate() {
        let i = k + 1;
        let rest: Scalar = tail.iter().cloned().sum();
        m[i][0] = &c[i] - &rest;
        for (j, v) in tail.into_iter().enumerate() {
            m[i][j + 1] = v;
        }
    }
    m
}

/// Builds a full matrix from rows 1..s given in full (column 0 included).
fn from_full_rows(s: usize, rows: Vec<Vec<Scalar>>) -> Vec<Vec<Scalar>> {
    let mut m = vec![vec![Scalar::zero(); s]; s];
    for (k, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            m[k + 1][j] = v;
        }
    }
    m
}

fn take_params(id: MethodId, params: &ParamMap) -> Result<Vec<Scalar>> {
    let wanted = id.free_symbols();
    if let Some(extra) = params.keys().find(|k| !wanted.contains(&k.as_str())) {
        return Err(IerkError::BadParameters {
            method: id.name().into(),
            message: format!("unexpected parameter `{extra}` (expected {wanted:?})"),
        });
    }
    wanted
        .iter()
        .map(|&sym| {
            params
                .get(sym)
                .cloned()
                .ok_or_else(|| IerkError::BadParameters {
                    method: id.name().into(),
                    message: format!("missing parameter `{sym}`"),
                })
        })
        .collect()
}

fn degenerate(id: MethodId, message: &str) -> IerkError {
    IerkError::DegenerateParameters {
        method: id.name().into(),
        message: message.into(),
    }
}

/// Constructs a registry method with the given free-parameter values.
pub fn registry(id: MethodId, params: &ParamMap) -> Result<ImexTableau> {
    let p = take_params(id, params)?;
    let (c, a, a_hat) = match id {
        MethodId::Ierk1 => ierk1(&p[0]),
        MethodId::Ierk2_1 => {
            if p[0].is_zero() {
                return Err(degenerate(id, "c2 must be nonzero"));
            }
            ierk2_1(&p[0], &p[1])
        }
        MethodId::Ierk2_2 => ierk2_2(&p[0]),
        MethodId::Ierk2Radau => {
            if p[0].is_zero() || p[0] == Scalar::one() {
                return Err(degenerate(id, "c2 must differ from 0 and 1"));
            }
            ierk2_radau(&p[0])
        }
        MethodId::Ierk3FourStage => ierk3_four_stage(&p[0]),
        MethodId::Ierk3_1 => ierk3_1(&p[0]),
        MethodId::Ierk3_2 => ierk3_2(&p[0]),
        MethodId::Ierk3Radau => {
            if p[0].is_zero() {
                return Err(degenerate(id, "ah43 must be nonzero"));
            }
            ierk3_radau(&p[0])
        }
        MethodId::Ierk4A1 => ierk4_a1(),
        MethodId::Ierk4A2 => ierk4_a2(),
    };
    let mut t =
        ImexTableau::new(id.name(), c, a, a_hat, id.formal_order()).map_err(|e| match e {
            IerkError::InvalidTableau(m) => degenerate(id, &m),
            other => other,
        })?;
    let values: Vec<f64> = p.iter().map(Scalar::to_f64).collect();
    t.outside_certified_range = !within_certified_range(id, &values);
    t.params = id
        .free_symbols()
        .iter()
        .map(|s| s.to_string())
        .zip(p)
        .collect();
    Ok(t)
}

/// Parameter ranges for which the family is known to dissipate energy
/// unconditionally. Used only to set the warning flag.
fn within_certified_range(id: MethodId, p: &[f64]) -> bool {
    const SLACK: f64 = 1e-12;
    let sqrt2 = std::f64::consts::SQRT_2;
    let de_c2_hi = (1.0 + sqrt2 + (1.0 + 2.0 * sqrt2).sqrt()) / 2.0;
    match id {
        MethodId::Ierk1 => p[0] >= 0.5 - SLACK,
        MethodId::Ierk2_1 => {
            let (c2, a33) = (p[0], p[1]);
            let gap = 4.0 * c2 - 2.0 * c2 * c2 - 1.0;
            gap > 0.0 && a33 >= 1.0 / (2.0 * gap) - SLACK
        }
        MethodId::Ierk2_2 => p[0] >= (1.0 + sqrt2) / 4.0 - SLACK,
        MethodId::Ierk2Radau => p[0] > 1.0 && p[0] <= de_c2_hi + SLACK,
        MethodId::Ierk3FourStage => false,
        MethodId::Ierk3_1 => (0.717374..=1.74727).contains(&p[0]),
        MethodId::Ierk3_2 => (-0.633312..=-0.371114).contains(&p[0]),
        MethodId::Ierk3Radau => (0.598442..=1.05134).contains(&p[0]),
        MethodId::Ierk4A1 | MethodId::Ierk4A2 => true,
    }
}

type Parts = (Vec<Scalar>, Vec<Vec<Scalar>>, Vec<Vec<Scalar>>);

fn ierk1(theta: &Scalar) -> Parts {
    let c = vec![q(0, 1), q(1, 1)];
    let a = fill_first_column(&c, vec![vec![theta.clone()]]);
    let a_hat = fill_first_column(&c, vec![vec![]]);
    (c, a, a_hat)
}

fn ierk2_1(c2: &Scalar, a33: &Scalar) -> Parts {
    let one = Scalar::one();
    let two = Scalar::int(2);
    let c = vec![q(0, 1), c2.clone(), one.clone()];
    let a22 = &two * c2 * c2 * a33;
    let a32 = (&one - &two * a33) / (&two * c2);
    let a = fill_first_column(&c, vec![vec![a22], vec![a32, a33.clone()]]);
    let ah32 = one / (two * c2);
    let a_hat = fill_first_column(&c, vec![vec![], vec![ah32]]);
    (c, a, a_hat)
}

fn ierk2_2(a33: &Scalar) -> Parts {
    let r2 = Scalar::float(std::f64::consts::SQRT_2);
    let half_r2 = Scalar::float(std::f64::consts::FRAC_1_SQRT_2);
    let one = Scalar::one();
    let c = vec![q(0, 1), half_r2.clone(), one.clone()];
    let a32 = (&one - Scalar::int(2) * a33) / &r2;
    let a = fill_first_column(&c, vec![vec![a33.clone()], vec![a32, a33.clone()]]);
    let a_hat = fill_first_column(&c, vec![vec![], vec![half_r2]]);
    (c, a, a_hat)
}

fn ierk2_radau(c2: &Scalar) -> Parts {
    let one = Scalar::one();
    let two = Scalar::int(2);
    let c = vec![q(0, 1), c2.clone(), one.clone()];
    let denom = &two * (&one - c2);
    let a = from_full_rows(
        3,
        vec![
            vec![q(0, 1), c2.clone()],
            vec![q(0, 1), &one / &denom, (&one - &two * c2) / &denom],
        ],
    );
    let a_hat = fill_first_column(&c, vec![vec![], vec![one / (two * c2)]]);
    (c, a, a_hat)
}

fn ierk3_four_stage(a22: &Scalar) -> Parts {
    let c = vec![q(0, 1), q(1, 3), q(2, 3), q(1, 1)];
    let a = fill_first_column(
        &c,
        vec![
            vec![a22.clone()],
            vec![q(0, 1), q(1, 3)],
            vec![q(0, 1), q(3, 4), q(0, 1)],
        ],
    );
    let a_hat = fill_first_column(&c, vec![vec![], vec![q(2, 3)], vec![q(0, 1), q(3, 4)]]);
    (c, a, a_hat)
}

fn five_stage_c() -> Vec<Scalar> {
    vec![q(0, 1), q(4, 5), q(7, 5), q(6, 5), q(1, 1)]
}

fn five_stage_explicit(c: &[Scalar]) -> Vec<Vec<Scalar>> {
    fill_first_column(
        c,
        vec![
            vec![],
            vec![q(4, 5)],
            vec![q(-6079, 10080), q(4, 5)],
            vec![q(131, 360), q(-169, 315), q(4, 5)],
        ],
    )
}

fn ierk3_1(a55: &Scalar) -> Parts {
    let c = five_stage_c();
    let a = a55;
    let lin = |k: Scalar, m: Scalar| k + m * a;
    let rows = vec![
        vec![a.clone()],
        vec![lin(q(4, 5), q(-11, 16)), a.clone()],
        vec![lin(q(18617, 10080), q(-5009, 4032)), q(-3, 5), a.clone()],
        vec![
            lin(q(131, 360), q(-797, 4110)),
            lin(q(-169, 315), q(7087, 14385)),
            lin(q(4, 5), q(-876, 685)),
            a.clone(),
        ],
    ];
    let implicit = fill_first_column(&c, rows);
    let explicit = five_stage_explicit(&c);
    (c, implicit, explicit)
}

fn ierk3_2(a43: &Scalar) -> Parts {
    let c = five_stage_c();
    let d = q(18, 25);
    let rows = vec![
        vec![d.clone()],
        vec![q(61, 200), d.clone()],
        vec![q(-1229, 12600) + q(-7, 4) * a43, a43.clone(), d.clone()],
        vec![
            q(276523, 1233000),
            q(-196127, 1078875),
            q(-2068, 17125),
            d.clone(),
        ],
    ];
    let implicit = fill_first_column(&c, rows);
    let explicit = five_stage_explicit(&c);
    (c, implicit, explicit)
}

fn ierk3_radau(ah43: &Scalar) -> Parts {
    let f = q(4, 5);
    let c = vec![q(0, 1), f.clone(), q(93, 200), q(171, 200), q(1, 1)];
    let a = from_full_rows(
        5,
        vec![
            vec![q(0, 1), f.clone()],
            vec![q(0, 1), q(-67, 200), f.clone()],
            vec![q(0, 1), q(-9361649, 5132200), q(241098, 128305), f.clone()],
            vec![
                q(0, 1),
                q(-5309, 11055),
                q(9998, 7839),
                q(-766, 1287),
                f.clone(),
            ],
        ],
    );
    let ah42 = q(9690263, 12256000) - q(93, 160) * ah43;
    let a_hat = fill_first_column(
        &c,
        vec![
            vec![],
            vec![q(4489, 32000)],
            vec![ah42, ah43.clone()],
            vec![
                q(3785983, 24466926),
                q(20893310, 43373187),
                q(1267730, 7120971),
            ],
        ],
    );
    (c, a, a_hat)
}

fn ierk4_a1() -> Parts {
    let c = vec![
        q(0, 1),
        q(95341769, 200000000),
        q(292103, 800000),
        q(59556813, 200000000),
        q(2580667, 5000000),
        q(150085929, 200000000),
        q(1, 1),
    ];
    let a = fill_first_column(
        &c,
        vec![
            vec![q(2400249, 2000000)],
            vec![q(-173504613, 50000000), q(2486, 625)],
            vec![
                q(13944041, 20000000),
                big("-1585409690050693626522959", "1000000000000000000000000"),
                q(1326491, 1000000),
            ],
            vec![
                q(-92214113, 200000000),
                q(-942329, 1000000),
                q(11063869, 10000000),
                q(1185669331, 2000000000),
            ],
            vec![
                q(-2010707, 2500000),
                q(-151161011, 200000000),
                big("2344693633530028154195338", "1000000000000000000000000"),
                q(-23680671, 40000000),
                q(15240463, 20000000),
            ],
            vec![
                q(188918701, 250000000),
                q(-205244563, 500000000),
                q(-463474901, 250000000),
                big("12541381954770160599120029", "3627843526172490000000000"),
                big("-5666098495504076766418243", "2637342719402745375000000"),
                q(1339351, 2000000),
            ],
        ],
    );
    let a_hat = fill_first_column(
        &c,
        vec![
            vec![],
            vec![q(558887, 2000000)],
            vec![q(-13454127, 250000000), q(121, 1000)],
            vec![
                big("33045877519515636367149", "10000000000000000000000000"),
                q(32018089, 200000000),
                q(593979, 2000000),
            ],
            vec![
                q(18031311, 200000000),
                big("983273174147729070884395", "10000000000000000000000000"),
                q(1177953, 10000000),
                q(313441, 1000000),
            ],
            vec![
                q(-23838287, 200000000),
                q(31003, 160000),
                big("952796123534851512831817", "1560502861592322600000000"),
                big("-145732093978331037774401", "338092153983867000000000"),
                q(70189993, 100000000),
            ],
        ],
    );
    (c, a, a_hat)
}

fn ierk4_a2() -> Parts {
    let c = vec![
        q(0, 1),
        q(429533, 1000000),
        q(4785663, 10000000),
        q(1182276, 1000000),
        q(915703, 1000000),
        q(7336053, 10000000),
        q(1, 1),
    ];
    let a = fill_first_column(
        &c,
        vec![
            vec![q(63137, 200000)],
            vec![q(-917757, 1000000), q(100379, 100000)],
            vec![
                q(-1929, 1250),
                big("219830108841087453607347", "200000000000000000000000"),
                q(15281, 20000),
            ],
            vec![
                q(98637, 1000000),
                q(196933, 1000000),
                big("-4498694297454501655541833", "10000000000000000000000000"),
                q(531, 625),
            ],
            vec![
                q(302663, 1000000),
                q(5967, 125000),
                q(150781, 1000000),
                q(-156231, 125000),
                q(142387, 100000),
            ],
            vec![
                q(1843487, 10000000),
                big("2298242610563399947", "4576990146963750000"),
                q(-129513, 1000000),
                q(-820173, 2000000),
                big("-556251214988653", "1754043394750312500"),
                q(88673, 125000),
            ],
        ],
    );
    let a_hat = fill_first_column(
        &c,
        vec![
            vec![],
            vec![big(
                "1017529648895428446045183",
                "2500000000000000000000000",
            )],
            vec![q(4507, 6250), q(1025153, 2000000)],
            vec![
                q(587731, 2000000),
                big("3161854834370097094143699", "10000000000000000000000000"),
                q(371251, 2000000),
            ],
            vec![
                q(82583, 200000),
                q(-1415767, 10000000),
                q(-33393, 200000),
                q(119457, 250000),
            ],
            vec![
                q(28277, 100000),
                big("4063870960730480933", "25257881055233250000"),
                big("422441222477275261", "6239843169579000000"),
                q(-7683, 100000),
                q(99459, 250000),
            ],
        ],
    );
    (c, a, a_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tableau::TableauKind;

    fn params(pairs: &[(&str, Scalar)]) -> ParamMap {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn ierk1_half_tableau() {
        let t = registry(MethodId::Ierk1, &params(&[("theta", q(1, 2))])).unwrap();
        assert_eq!(t.a, vec![vec![q(0, 1), q(0, 1)], vec![q(1, 2), q(1, 2)]]);
        assert_eq!(
            t.a_hat,
            vec![vec![q(0, 1), q(0, 1)], vec![q(1, 1), q(0, 1)]]
        );
        assert!(!t.outside_certified_range);
    }

    #[test]
    fn ierk2_1_closed_forms() {
        let t = registry(
            MethodId::Ierk2_1,
            &params(&[("c2", q(1, 1)), ("a33", q(1, 1))]),
        )
        .unwrap();
        assert_eq!(t.a[1][1], q(2, 1));
        assert_eq!(t.a[2][1], q(-1, 2));
        assert_eq!(t.a_hat[2][1], q(1, 2));
        for i in 0..3 {
            let sum: Scalar = t.a[i].iter().cloned().sum();
            assert_eq!(sum, t.c[i]);
        }
        assert!(t.is_exact());
    }

    #[test]
    fn ierk4_a2_long_coefficient() {
        let t = registry(MethodId::Ierk4A2, &ParamMap::new()).unwrap();
        assert_eq!(
            t.a[3][2],
            big("219830108841087453607347", "200000000000000000000000")
        );
        assert!(t.is_exact());
    }

    #[test]
    fn radau_families_have_zero_first_column() {
        let t = registry(MethodId::Ierk3Radau, &params(&[("ah43", q(1, 1))])).unwrap();
        assert_eq!(t.kind(), TableauKind::Radau);
        let t = registry(MethodId::Ierk2Radau, &params(&[("c2", q(3, 2))])).unwrap();
        assert_eq!(t.kind(), TableauKind::Radau);
        let t = registry(MethodId::Ierk3_1, &params(&[("a55", q(4, 5))])).unwrap();
        assert_eq!(t.kind(), TableauKind::Lobatto);
    }

    #[test]
    fn parameter_errors() {
        assert!(matches!(
            registry(MethodId::Ierk2_1, &params(&[("c2", q(1, 1))])),
            Err(IerkError::BadParameters { .. })
        ));
        assert!(matches!(
            registry(MethodId::Ierk4A1, &params(&[("c2", q(1, 1))])),
            Err(IerkError::BadParameters { .. })
        ));
        assert!(matches!(
            registry(
                MethodId::Ierk2_1,
                &params(&[("c2", q(0, 1)), ("a33", q(1, 1))])
            ),
            Err(IerkError::DegenerateParameters { .. })
        ));
        assert!(matches!(
            registry(MethodId::Ierk2Radau, &params(&[("c2", q(1, 1))])),
            Err(IerkError::DegenerateParameters { .. })
        ));
        assert!(matches!(
            registry(MethodId::Ierk3Radau, &params(&[("ah43", q(0, 1))])),
            Err(IerkError::DegenerateParameters { .. })
        ));
        assert!(matches!(
            "IERK9".parse::<MethodId>(),
            Err(IerkError::UnknownMethod(_))
        ));
    }

    #[test]
    fn range_flag() {
        let t = registry(MethodId::Ierk3FourStage, &params(&[("a22", q(2, 1))])).unwrap();
        assert!(t.outside_certified_range);
        let t = registry(
            MethodId::Ierk2_1,
            &params(&[("c2", q(1, 1)), ("a33", q(2, 5))]),
        )
        .unwrap();
        assert!(t.outside_certified_range);
        let t = registry(MethodId::Ierk2Radau, &params(&[("c2", q(9, 10))])).unwrap();
        assert!(t.outside_certified_range);
    }

    #[test]
    fn names_round_trip() {
        for id in MethodId::ALL {
            assert_eq!(id.name().parse::<MethodId>().unwrap(), id);
            let t = registry(id, &id.preferred_params()).unwrap();
            assert_eq!(t.formal_order, id.formal_order());
        }
    }

    #[test]
    fn deterministic() {
        for id in MethodId::ALL {
            let p = id.preferred_params();
            let a = registry(id, &p).unwrap();
            let b = registry(id, &p).unwrap();
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
        }
    }
}
