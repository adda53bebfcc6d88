//! Difference coefficients, DOC kernels, the differentiation pair
//! `D(z) = D_E - z D_EI`, and PSD certification of unconditional energy decay.
//!
//! Reduced matrices are `s_I x s_I` and 0-based: entry `(r, q)` of the
//! implicit difference matrix is the coefficient usually written
//! `abar_{r+2,q+2}`, and entry `(r, q)` of the explicit one is
//! `ahbar_{r+2,q+1}`.

mod scan;

pub use scan::{scan_parameter, ScanPoint, ScanReport, ScanTarget};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{IerkError, Result};
use crate::linalg::{max_abs_f64, symmetric_part_eigenvalues, ScalarMatrix};
use crate::scalar::Scalar;
use crate::tableau::ImexTableau;

/// Relative eigenvalue tolerance for the PSD test.
pub const DEFAULT_PSD_TOL: f64 = 1e-12;

/// Values of `z = tau * lambda` (nonpositive) probed when refuting decay.
pub const DEFAULT_Z_SAMPLES: [f64; 5] = [0.0, -1e-3, -1.0, -1e3, -1e6];

/// Row differences of the reduced implicit and explicit matrices.
#[derive(Clone, Debug)]
pub struct DifferenceTableau {
    pub implicit: ScalarMatrix,
    pub explicit: ScalarMatrix,
}

fn row_differences(m: &ScalarMatrix) -> ScalarMatrix {
    let n = m.size();
    let mut out = m.clone();
    for r in 1..n {
        for q in 0..n {
            out.set(r, q, m.get(r, q) - m.get(r - 1, q));
        }
    }
    out
}

fn prefix_sums(m: &ScalarMatrix) -> ScalarMatrix {
    let n = m.size();
    let mut out = m.clone();
    for r in 1..n {
        for q in 0..n {
            let v = out.get(r - 1, q) + m.get(r, q);
            out.set(r, q, v);
        }
    }
    out
}

impl DifferenceTableau {
    /// Undoes the row differencing, giving back `(A_I, A_E)`.
    pub fn reconstruct(&self) -> (ScalarMatrix, ScalarMatrix) {
        (prefix_sums(&self.implicit), prefix_sums(&self.explicit))
    }
}

pub fn difference_coefficients(t: &ImexTableau) -> Result<DifferenceTableau> {
    let (ai, ae) = t.reduced_matrices()?;
    Ok(DifferenceTableau {
        implicit: row_differences(&ai),
        explicit: row_differences(&ae),
    })
}

/// Lower-triangular DOC kernels, the inverse of the explicit difference matrix.
#[derive(Clone, Debug)]
pub struct DocKernels {
    pub theta: ScalarMatrix,
}

impl DocKernels {
    /// Largest `|sum_{l=j..m} theta[m][l] * X[l][j] - delta_{mj}|`.
    pub fn orthogonality_defect(&self, d: &DifferenceTableau) -> f64 {
        let n = self.theta.size();
        let mut worst = 0.0f64;
        for m in 0..n {
            for j in 0..=m {
                let mut acc: Scalar = (j..=m)
                    .map(|l| self.theta.get(m, l) * d.explicit.get(l, j))
                    .sum();
                if m == j {
                    acc = acc - Scalar::one();
                }
                worst = worst.max(acc.to_f64().abs());
            }
        }
        worst
    }
}

pub fn doc_kernels(d: &DifferenceTableau) -> Result<DocKernels> {
    let x = &d.explicit;
    let n = x.size();
    let mut theta = ScalarMatrix::zeros(n);
    for k in 0..n {
        let diag = x.get(k, k).recip().ok_or_else(|| {
            IerkError::InvalidTableau(format!("explicit difference diagonal {k} vanishes"))
        })?;
        theta.set(k, k, diag);
        for j in (0..k).rev() {
            let acc: Scalar = (j + 1..=k).map(|l| theta.get(k, l) * x.get(l, j)).sum();
            let inv = x.get(j, j).recip().expect("checked above");
            theta.set(k, j, -(acc * inv));
        }
    }
    Ok(DocKernels { theta })
}

#[derive(Clone, Debug)]
pub struct DifferentiationPair {
    pub d_e: ScalarMatrix,
    pub d_ei: ScalarMatrix,
}

impl DifferentiationPair {
    pub fn size(&self) -> usize {
        self.d_e.size()
    }

    /// `D(z) = D_E - z D_EI` in `f64`.
    pub fn at(&self, z: f64) -> DMatrix<f64> {
        self.d_e.to_f64() - self.d_ei.to_f64() * z
    }
}

/// `D_E = A_E^{-1} E` and `D_EI = A_E^{-1} A_I E - E + I/2`.
pub fn differentiation_pair(t: &ImexTableau) -> Result<DifferentiationPair> {
    let (ai, ae) = t.reduced_matrices()?;
    let n = ai.size();
    let e = ScalarMatrix::lower_ones(n);
    let ae_inv = ae
        .inverse_lower()
        .ok_or_else(|| IerkError::InvalidTableau(format!("{}: A_E is singular", t.name)))?;
    let d_e = ae_inv.mul(&e);
    let half_i = ScalarMatrix::identity(n).scale(&Scalar::ratio(1, 2));
    let d_ei = ae_inv.mul(&ai).mul(&e).sub(&e).add(&half_i);
    Ok(DifferentiationPair { d_e, d_ei })
}

pub fn eval_d(t: &ImexTableau, z: f64) -> Result<DMatrix<f64>> {
    Ok(differentiation_pair(t)?.at(z))
}

/// `D(z)` assembled entry by entry from the DOC kernels and the implicit
/// difference coefficients, independently of the matrix products.
pub fn eval_d_elementwise(d: &DifferenceTableau, k: &DocKernels, z: f64) -> DMatrix<f64> {
    let n = k.theta.size();
    let theta = k.theta.to_f64();
    let y = d.implicit.to_f64();
    DMatrix::from_fn(n, n, |row, col| {
        if col > row {
            return 0.0;
        }
        let mut double_sum = 0.0;
        for j in col..=row {
            for i in j..=row {
                double_sum += theta[(row, i)] * y[(i, j)];
            }
        }
        let delta = if row == col { 1.0 } else { 0.0 };
        theta[(row, col)] - z * double_sum + z - 0.5 * z * delta
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AverageRate {
    pub intercept: Scalar,
    pub slope: Scalar,
}

impl AverageRate {
    /// `R = intercept + slope * tau * lambda_bar`.
    pub fn at(&self, tau_lambda: f64) -> f64 {
        self.intercept.to_f64() + self.slope.to_f64() * tau_lambda
    }
}

/// Intercept `(1/s_I) sum 1/ah_{k+1,k}` and slope
/// `(1/s_I) sum (a_{k+1,k+1}/ah_{k+1,k} - 1/2)`, read off the tableau diagonals.
pub fn average_rate(t: &ImexTableau) -> Result<AverageRate> {
    let n = t.s_i();
    let mut intercept = Scalar::zero();
    let mut slope = Scalar::zero();
    for k in 0..n {
        let inv = t.a_hat[k + 1][k].recip().ok_or_else(|| {
            IerkError::InvalidTableau(format!("{}: zero subdiagonal at {k}", t.name))
        })?;
        slope = slope + &t.a[k + 1][k + 1] * &inv - Scalar::ratio(1, 2);
        intercept = intercept + inv;
    }
    let scale = Scalar::ratio(1, n as i64);
    Ok(AverageRate {
        intercept: intercept * &scale,
        slope: slope * &scale,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PsdCheck {
    pub psd: bool,
    pub min_eigenvalue: f64,
    /// Eigenvalues of the symmetric part, descending.
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
}

pub fn psd_check(m: &DMatrix<f64>, tol: f64) -> PsdCheck {
    let eigenvalues = symmetric_part_eigenvalues(m);
    let min_eigenvalue = eigenvalues.last().copied().unwrap_or(0.0);
    let threshold = -tol * max_abs_f64(m);
    PsdCheck {
        psd: min_eigenvalue >= threshold,
        min_eigenvalue,
        eigenvalues,
        threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Both matrices PSD: energy decays at every stage for any step size.
    Certified,
    /// Some sampled `z` makes `D(z)` indefinite.
    Refuted,
    /// The sufficient condition fails but no sampled `z` shows indefiniteness.
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub matrix: &'static str,
    /// Size of the leading principal block.
    pub order: usize,
    pub determinant: Scalar,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZSample {
    pub z: f64,
    pub min_eigenvalue: f64,
    pub negative: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DissipationCertificate {
    pub method: String,
    pub params: Vec<(String, Scalar)>,
    pub de: PsdCheck,
    pub dei: PsdCheck,
    pub certified: bool,
    pub verdict: Verdict,
    pub rate: AverageRate,
    pub witnesses: Vec<Witness>,
    pub z_samples: Vec<ZSample>,
}

impl DissipationCertificate {
    pub fn to_json(&self) -> Value {
        let params: serde_json::Map<String, Value> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), json!(v.to_f64())))
            .collect();
        json!({
            "method": self.method,
            "params": params,
            "certified": self.certified,
            "verdict": self.verdict,
            "min_eig_DE": self.de.min_eigenvalue,
            "min_eig_DEI": self.dei.min_eigenvalue,
            "eigenvalues_DE": self.de.eigenvalues,
            "eigenvalues_DEI": self.dei.eigenvalues,
            "rate": {
                "intercept": self.rate.intercept.to_f64(),
                "slope": self.rate.slope.to_f64(),
            },
            "witnesses": self.witnesses.iter().map(|w| json!({
                "matrix": w.matrix,
                "order": w.order,
                "determinant": w.determinant.to_string(),
                "determinant_value": w.determinant.to_f64(),
            })).collect::<Vec<_>>(),
            "z_samples": self.z_samples,
        })
    }
}

/// First leading principal minor of the symmetric part with a negative
/// determinant, computed in the tableau's own arithmetic.
pub fn npd_witness(m: &ScalarMatrix, label: &'static str) -> Option<Witness> {
    let s = m.symmetric_part();
    (1..=s.size()).find_map(|k| {
        let det = s.leading_minor(k);
        (det.signum() < 0).then_some(Witness {
            matrix: label,
            order: k,
            determinant: det,
        })
    })
}

pub fn certify(t: &ImexTableau, tol: f64, z_samples: &[f64]) -> Result<DissipationCertificate> {
    let pair = differentiation_pair(t)?;
    let de = psd_check(&pair.d_e.to_f64(), tol);
    let dei = psd_check(&pair.d_ei.to_f64(), tol);
    let certified = de.psd && dei.psd;

    let z_samples: Vec<ZSample> = z_samples
        .iter()
        .map(|&z| {
            let check = psd_check(&pair.at(z), tol);
            ZSample {
                z,
                min_eigenvalue: check.min_eigenvalue,
                negative: !check.psd,
            }
        })
        .collect();

    let mut witnesses = Vec::new();
    if !de.psd {
        witnesses.extend(npd_witness(&pair.d_e, "D_E"));
    }
    if !dei.psd {
        witnesses.extend(npd_witness(&pair.d_ei, "D_EI"));
    }

    let verdict = if certified {
        Verdict::Certified
    } else if z_samples.iter().any(|s| s.negative) {
        Verdict::Refuted
    } else {
        Verdict::Undetermined
    };

    Ok(DissipationCertificate {
        method: t.name.clone(),
        params: t.params.clone(),
        de,
        dei,
        certified,
        verdict,
        rate: average_rate(t)?,
        witnesses,
        z_samples,
    })
}
