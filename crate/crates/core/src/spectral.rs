//! Periodic 1D Fourier pseudo-spectral discretisation of the Cahn-Hilliard
//! gradient flow `u' = M (L u - g(u)) + f`, with `M = Laplacian`,
//! `L = -eps^2 Laplacian` and `g(u) = u - u^3`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{IerkError, Result};

#[derive(Clone, Debug)]
pub struct SpectralGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub m: usize,
    pub h: f64,
    /// Angular wavenumbers in FFT order; the Nyquist entry appears once.
    pub wavenumbers: Vec<f64>,
}

impl SpectralGrid {
    pub fn new(x_lo: f64, x_hi: f64, m: usize) -> Result<Self> {
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(IerkError::Config(format!("empty domain [{x_lo}, {x_hi})")));
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(IerkError::Config(format!(
                "m = {m} must be a power of two >= 2"
            )));
        }
        let length = x_hi - x_lo;
        let scale = 2.0 * PI / length;
        let wavenumbers = (0..m)
            .map(|j| {
                let idx = if j <= m / 2 {
                    j as f64
                } else {
                    j as f64 - m as f64
                };
                idx * scale
            })
            .collect();
        Ok(SpectralGrid {
            x_lo,
            x_hi,
            m,
            h: length / m as f64,
            wavenumbers,
        })
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.x_lo + i as f64 * self.h).collect()
    }
}

/// Nodal values of a real periodic function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn constant(m: usize, value: f64) -> Self {
        Field(vec![value; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `x,u` rows with a header line.
    pub fn to_csv(&self, grid: &SpectralGrid) -> String {
        let mut out = String::from("x,u\n");
        for (x, u) in grid.nodes().iter().zip(&self.0) {
            writeln!(out, "{x},{u}").unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTerm {
    #[default]
    None,
    /// Forcing that makes `u = exp(-t) sin x` an exact solution.
    Manufactured,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    /// `g(u) = u - u^3`, potential `(u^2 - 1)^2 / 4`.
    #[default]
    Cubic,
    /// `g = 0`, leaving the linear stiff problem.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operator {
    /// Mobility, symbol `-k^2`.
    M,
    /// Stiff part, symbol `eps^2 k^2`.
    L,
    /// `L + kappa I`.
    LKappa,
    /// `M (L + kappa I)`, symbol `-k^2 (eps^2 k^2 + kappa)`.
    MLKappa,
}

#[derive(Clone)]
pub struct SpectralSystem {
    pub grid: SpectralGrid,
    pub epsilon: f64,
    pub kappa: f64,
    pub source: SourceTerm,
    pub nonlinearity: Nonlinearity,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSystem")
            .field("grid", &self.grid)
            .field("epsilon", &self.epsilon)
            .field("kappa", &self.kappa)
            .field("source", &self.source)
            .field("nonlinearity", &self.nonlinearity)
            .finish()
    }
}

impl SpectralSystem {
    pub fn new(grid: SpectralGrid, epsilon: f64, kappa: f64) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(IerkError::Config(format!(
                "epsilon = {epsilon} is not finite"
            )));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(IerkError::Config(format!(
                "kappa = {kappa} must be finite and >= 0"
            )));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(grid.m);
        let ifft = planner.plan_fft_inverse(grid.m);
        Ok(SpectralSystem {
            grid,
            epsilon,
            kappa,
            source: SourceTerm::None,
            nonlinearity: Nonlinearity::Cubic,
            fft,
            ifft,
        })
    }

    pub fn with_source(mut self, source: SourceTerm) -> Self {
        self.source = source;
        self
    }

    pub fn with_nonlinearity(mut self, nonlinearity: Nonlinearity) -> Self {
        self.nonlinearity = nonlinearity;
        self
    }

    pub fn m(&self) -> usize {
        self.grid.m
    }

    pub fn symbol(&self, op: Operator, j: usize) -> f64 {
        let k2 = self.grid.wavenumbers[j].powi(2);
        let eps2 = self.epsilon * self.epsilon;
        match op {
            Operator::M => -k2,
            Operator::L => eps2 * k2,
            Operator::LKappa => eps2 * k2 + self.kappa,
            Operator::MLKappa => -k2 * (eps2 * k2 + self.kappa),
        }
    }

    /// Eigenvalue `k^2 (eps^2 k^2 + kappa)` of `-M L_kappa` for mode `j`.
    pub fn lambda(&self, j: usize) -> f64 {
        -self.symbol(Operator::MLKappa, j)
    }

    /// Unnormalised forward DFT.
    pub fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/m` factor; returns the real part.
    pub fn inverse(&self, mut uhat: Vec<Complex64>) -> Vec<f64> {
        self.ifft.process(&mut uhat);
        let scale = 1.0 / self.grid.m as f64;
        uhat.into_iter().map(|z| z.re * scale).collect()
    }

    fn check_len(&self, u: &Field) -> Result<()> {
        if u.len() != self.grid.m {
            return Err(IerkError::SizeMismatch {
                expected: self.grid.m,
                got: u.len(),
            });
        }
        Ok(())
    }

    pub fn apply_operator(&self, op: Operator, u: &Field) -> Result<Field> {
        self.check_len(u)?;
        let mut uhat = self.forward(&u.0);
        for (j, z) in uhat.iter_mut().enumerate() {
            *z *= self.symbol(op, j);
        }
        Ok(Field(self.inverse(uhat)))
    }

    pub fn g(&self, u: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Cubic => u - u * u * u,
            Nonlinearity::Zero => 0.0,
        }
    }

    pub fn potential(&self, u: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::Cubic => 0.25 * (u * u - 1.0).powi(2),
            Nonlinearity::Zero => 0.0,
        }
    }

    /// Pointwise `g(u)`, plus `kappa u` when `stabilized`.
    pub fn nonlinear(&self, u: &Field, stabilized: bool) -> Field {
        let kappa = if stabilized { self.kappa } else { 0.0 };
        Field(u.0.iter().map(|&x| self.g(x) + kappa * x).collect())
    }

    /// `h [ (1/2) sum u L u + sum G(u) ]`.
    pub fn energy(&self, u: &Field) -> f64 {
        let uhat = self.forward(&u.0);
        self.energy_with_transform(u, &uhat)
    }

    /// Energy when the transform of `u` is already available.
    pub fn energy_with_transform(&self, u: &Field, uhat: &[Complex64]) -> f64 {
        // Parseval: sum_x u (L u) = (1/m) sum_k l(k) |uhat_k|^2.
        let quad: f64 = uhat
            .iter()
            .enumerate()
            .map(|(j, z)| self.symbol(Operator::L, j) * z.norm_sqr())
            .sum::<f64>()
            / self.grid.m as f64;
        let pot: f64 = u.0.iter().map(|&x| self.potential(x)).sum();
        self.grid.h * (0.5 * quad + pot)
    }

    /// `L u - g(u)`, the nodal gradient of the energy divided by `h`.
    pub fn variational_derivative(&self, u: &Field) -> Result<Field> {
        let lu = self.apply_operator(Operator::L, u)?;
        Ok(Field(
            lu.0.iter().zip(&u.0).map(|(l, &x)| l - self.g(x)).collect(),
        ))
    }

    /// Mean of `k^2 (eps^2 k^2 + kappa)` over the grid's modes.
    pub fn lambda_ml_bar(&self) -> f64 {
        (0..self.grid.m).map(|j| self.lambda(j)).sum::<f64>() / self.grid.m as f64
    }

    pub fn field_from_fn(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.grid.nodes().into_iter().map(f).collect())
    }

    /// `exp(-t) sin x`.
    pub fn manufactured_exact(&self, t: f64) -> Field {
        let e = (-t).exp();
        self.field_from_fn(|x| e * x.sin())
    }

    /// Forcing `f = u_t - M (L u - g(u))` for `u = exp(-t) sin x`, using
    /// `sin^3 x = (3 sin x - sin 3x) / 4`.
    pub fn manufactured_source(&self, t: f64) -> Field {
        let e1 = (-t).exp();
        let e3 = (-3.0 * t).exp();
        let eps2 = self.epsilon * self.epsilon;
        self.field_from_fn(|x| {
            (eps2 - 2.0) * e1 * x.sin() + 0.75 * e3 * x.sin() - 2.25 * e3 * (3.0 * x).sin()
        })
    }

    pub fn source_at(&self, t: f64) -> Option<Field> {
        match self.source {
            SourceTerm::None => None,
            SourceTerm::Manufactured => Some(self.manufactured_source(t)),
        }
    }
}

/// Initial datum of the coarsening benchmark on `(-pi, pi)`: a smoothed step
/// plus three Gaussian bumps in `|x|`.
pub fn coarsening_initial_value(x: f64) -> f64 {
    let ax = x.abs();
    (2.0 * x.sin()).tanh() / 3.0 - 0.1 * (-23.5 * (ax - 1.0).powi(2)).exp()
        + (-27.0 * (ax - 4.2).powi(2)).exp()
        + (-38.0 * (ax - 5.4).powi(2)).exp()
}

/// Serialisable system description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub domain: [f64; 2],
    pub m: usize,
    pub epsilon: f64,
    pub kappa: f64,
    #[serde(default)]
    pub source: SourceTerm,
}

impl SpectralConfig {
    pub fn build(&self) -> Result<SpectralSystem> {
        let grid = SpectralGrid::new(self.domain[0], self.domain[1], self.m)?;
        Ok(SpectralSystem::new(grid, self.epsilon, self.kappa)?.with_source(self.source))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(m: usize, eps: f64, kappa: f64) -> SpectralSystem {
        SpectralSystem::new(SpectralGrid::new(0.0, 2.0 * PI, m).unwrap(), eps, kappa).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::new(0.0, 1.0, 12).is_err());
        assert!(SpectralGrid::new(1.0, 1.0, 16).is_err());
        let g = SpectralGrid::new(-PI, PI, 8).unwrap();
        assert_eq!(
            g.wavenumbers,
            vec![0.0, 1.0, 2.0, 3.0, 4.0, -3.0, -2.0, -1.0]
        );
        assert!((g.nodes()[4] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn operators_on_eigenfunctions() {
        let sys = system(64, 0.2, 1.0);
        let s1 = sys.field_from_fn(f64::sin);
        let lu = sys.apply_operator(Operator::L, &s1).unwrap();
        let expect = sys.field_from_fn(|x| 0.04 * x.sin());
        assert!(lu.max_abs_diff(&expect) < 1e-14);

        let s2 = sys.field_from_fn(|x| (2.0 * x).sin());
        let r = sys.apply_operator(Operator::MLKappa, &s2).unwrap();
        let expect = sys.field_from_fn(|x| -4.64 * (2.0 * x).sin());
        // FFT round-off in the top modes is amplified by the largest symbol.
        let top = (0..64).map(|j| sys.lambda(j)).fold(0.0, f64::max);
        assert!(r.max_abs_diff(&expect) < 1e-15 * top);

        let c = Field::constant(64, 3.0);
        assert!(sys.apply_operator(Operator::M, &c).unwrap().max_abs() < 1e-14);
        assert!(matches!(
            sys.apply_operator(Operator::M, &Field::constant(32, 0.0)),
            Err(IerkError::SizeMismatch {
                expected: 64,
                got: 32
            })
        ));
    }

    #[test]
    fn nonlinear_values() {
        let sys = system(8, 0.1, 2.0);
        assert_eq!(
            sys.nonlinear(&Field::constant(8, 1.0), false).0,
            vec![0.0; 8]
        );
        assert_eq!(
            sys.nonlinear(&Field::constant(8, 0.0), true).0,
            vec![0.0; 8]
        );
        assert_eq!(
            sys.nonlinear(&Field::constant(8, 0.5), false).0,
            vec![0.375; 8]
        );
        assert_eq!(
            sys.nonlinear(&Field::constant(8, 0.5), true).0,
            vec![1.375; 8]
        );
    }

    #[test]
    fn energy_of_constants() {
        let sys = system(256, 0.2, 0.0);
        assert!((sys.energy(&Field::constant(256, 0.0)) - PI / 2.0).abs() < 1e-13);
        assert_eq!(sys.energy(&Field::constant(256, 1.0)), 0.0);
    }

    #[test]
    fn energy_of_sine_matches_quadrature() {
        let sys = system(256, 0.2, 0.0);
        let e = sys.energy(&sys.field_from_fn(f64::sin));
        let n = 1_000_000;
        let h = 2.0 * PI / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                0.5 * 0.04 * x.cos().powi(2) + 0.25 * (x.sin().powi(2) - 1.0).powi(2)
            })
            .sum::<f64>()
            * h;
        assert!((e - oracle).abs() < 1e-10, "{e} vs {oracle}");
    }

    #[test]
    fn lambda_bar_small_cases() {
        let sys = system(2, 1.0, 0.0);
        assert!((sys.lambda_ml_bar() - 0.5).abs() < 1e-15);
        let sys = system(16, 0.0, 1.0);
        let mean_k2 = sys.grid.wavenumbers.iter().map(|k| k * k).sum::<f64>() / 16.0;
        assert!((sys.lambda_ml_bar() - mean_k2).abs() < 1e-12);
        let sys = system(256, 0.1, 2.0);
        let mut oracle = 0.0;
        for j in 0..256i64 {
            let k = if j <= 128 { j } else { j - 256 } as f64;
            oracle += k * k * (0.01 * k * k + 2.0);
        }
        oracle /= 256.0;
        assert!((sys.lambda_ml_bar() - oracle).abs() < 1e-9 * oracle);
    }

    #[test]
    fn manufactured_residual_vanishes() {
        let eps = 0.2;
        let sys = system(64, eps, 0.0);
        for &t in &[0.0, 0.3, 1.0] {
            let u = sys.manufactured_exact(t);
            let ut = Field(u.0.iter().map(|x| -x).collect());
            let rhs = sys
                .apply_operator(Operator::M, &sys.variational_derivative(&u).unwrap())
                .unwrap();
            let f = sys.manufactured_source(t);
            let res =
                ut.0.iter()
                    .zip(&rhs.0)
                    .zip(&f.0)
                    .fold(0.0f64, |m, ((a, b), c)| m.max((a - b - c).abs()));
            assert!(res < 1e-10, "t={t}: {res}");
        }
        assert!(sys.manufactured_source(60.0).max_abs() < 1e-25);
    }

    #[test]
    fn manufactured_source_zero_eps() {
        // At eps = 0, t = 0: f = -sin x + d2/dx2 (sin x - sin^3 x) by finite differences.
        let sys = system(32, 0.0, 0.0);
        let d = 1e-4;
        let w = |x: f64| x.sin() - x.sin().powi(3);
        for (x, fx) in sys.grid.nodes().iter().zip(sys.manufactured_source(0.0).0) {
            let wxx = (w(x + d) - 2.0 * w(*x) + w(x - d)) / (d * d);
            assert!((fx - (-x.sin() + wxx)).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_snapshot() {
        let sys = system(4, 0.1, 0.0);
        let csv = Field::constant(4, 1.0).to_csv(&sys.grid);
        assert!(csv.starts_with("x,u\n0,1\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn coarsening_datum_at_origin() {
        let v = coarsening_initial_value(0.0);
        assert!((v - (-0.1 * (-23.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let cfg: std::result::Result<SpectralConfig, _> =
            serde_json::from_str(r#"{"domain":[0,6.28],"m":64,"epsilon":0.1,"kappa":2,"bogus":1}"#);
        assert!(cfg.is_err());
        let cfg: SpectralConfig = serde_json::from_str(
            r#"{"domain":[0,6.283185307179586],"m":64,"epsilon":0.1,"kappa":2,"source":"manufactured"}"#,
        )
        .unwrap();
        assert_eq!(cfg.build().unwrap().source, SourceTerm::Manufactured);
    }
}
