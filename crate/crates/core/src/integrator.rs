//! IERK time stepping for a [`SpectralSystem`].
//!
//! Stages are solved in the stabilised direct form
//!
//! ```text
//! (I - tau a_ii M L_k) U_i = U_1 + tau sum_{j<i} a_ij M L_k U_j
//!                                - tau sum_{j<i} ah_ij (M g_k(U_j) - f(t + c_j tau))
//! ```
//!
//! where `L_k = L + kappa I` and `g_k(u) = g(u) + kappa u`. Every operator is
//! diagonal in Fourier space, so each stage is one division per mode.

use std::fmt::Write as _;

use rustfft::num_complex::Complex64;

use crate::dissipation::differentiation_pair;
use crate::error::{IerkError, Result};
use crate::spectral::{Field, Operator, SourceTerm, SpectralSystem};
use crate::tableau::{ImexTableau, NumericTableau};

/// All stage values of one step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub t_prev: f64,
    pub tau: f64,
    pub c: Vec<f64>,
    /// `stages[0]` is the previous solution, `stages[s-1]` the new one.
    pub stages: Vec<Field>,
    pub stage_energies: Vec<f64>,
}

impl StepRecord {
    pub fn solution(&self) -> &Field {
        self.stages.last().expect("at least two stages")
    }

    /// `U_{l+1} - U_l` for `l = 0..s-1`.
    pub fn differences(&self) -> Vec<Field> {
        self.stages
            .windows(2)
            .map(|w| Field(w[1].0.iter().zip(&w[0].0).map(|(b, a)| b - a).collect()))
            .collect()
    }

    /// Largest `E[U_j] - E[U_1]` over the later stages.
    pub fn max_stage_increase(&self) -> f64 {
        let e1 = self.stage_energies[0];
        self.stage_energies[1..]
            .iter()
            .map(|e| e - e1)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Precomputed stage divisors for a fixed system, tableau and step size.
pub struct Stepper<'a> {
    sys: &'a SpectralSystem,
    tab: NumericTableau,
    tau: f64,
    lambda: Vec<f64>,
    mobility: Vec<f64>,
    /// `1 / (1 + tau a_ii lambda_k)` for each stage `i >= 1`; row 0 unused.
    inv_diag: Vec<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a SpectralSystem, tableau: &ImexTableau, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(IerkError::Config(format!(
                "time step tau = {tau} must be positive"
            )));
        }
        let tab = tableau.to_numeric();
        let m = sys.m();
        let lambda: Vec<f64> = (0..m).map(|j| sys.lambda(j)).collect();
        let mobility: Vec<f64> = (0..m).map(|j| sys.symbol(Operator::M, j)).collect();
        let mut inv_diag = vec![Vec::new(); tab.s()];
        for (i, row) in inv_diag.iter_mut().enumerate().skip(1) {
            let a_ii = tab.a[i][i];
            *row = lambda
                .iter()
                .enumerate()
                .map(|(mode, &l)| {
                    let shift = tau * a_ii * l;
                    let d = 1.0 + shift;
                    if d.abs() <= f64::EPSILON * (1.0 + shift.abs()) {
                        Err(IerkError::NonInvertibleStage { stage: i + 1, mode })
                    } else {
                        Ok(1.0 / d)
                    }
                })
                .collect::<Result<_>>()?;
        }
        Ok(Stepper {
            sys,
            tab,
            tau,
            lambda,
            mobility,
            inv_diag,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Transform of `M g_k(U) - f(t)`.
    fn explicit_term(&self, u: &Field, t: f64) -> Vec<Complex64> {
        let g = self.sys.nonlinear(u, true);
        let mut ghat = self.sys.forward(&g.0);
        for (z, &mk) in ghat.iter_mut().zip(&self.mobility) {
            *z *= mk;
        }
        if let Some(f) = self.sys.source_at(t) {
            for (z, fh) in ghat.iter_mut().zip(self.sys.forward(&f.0)) {
                *z -= fh;
            }
        }
        ghat
    }

    pub fn step(&self, u_prev: &Field, t_prev: f64) -> Result<StepRecord> {
        let sys = self.sys;
        if u_prev.len() != sys.m() {
            return Err(IerkError::SizeMismatch {
                expected: sys.m(),
                got: u_prev.len(),
            });
        }
        let s = self.tab.s();
        let tau = self.tau;
        let u1_hat = sys.forward(&u_prev.0);

        let mut stages = Vec::with_capacity(s);
        let mut energies = Vec::with_capacity(s);
        let mut stiff: Vec<Vec<Complex64>> = Vec::with_capacity(s);
        let mut explicit: Vec<Vec<Complex64>> = Vec::with_capacity(s);

        energies.push(sys.energy_with_transform(u_prev, &u1_hat));
        stiff.push(
            u1_hat
                .iter()
                .zip(&self.lambda)
                .map(|(z, l)| -z * l)
                .collect(),
        );
        explicit.push(self.explicit_term(u_prev, t_prev));
        stages.push(u_prev.clone());

        for i in 1..s {
            let mut rhs = u1_hat.clone();
            for j in 0..i {
                let a = tau * self.tab.a[i][j];
                let ah = tau * self.tab.a_hat[i][j];
                if a != 0.0 {
                    for (r, z) in rhs.iter_mut().zip(&stiff[j]) {
                        *r += z * a;
                    }
                }
                if ah != 0.0 {
                    for (r, z) in rhs.iter_mut().zip(&explicit[j]) {
                        *r -= z * ah;
                    }
                }
            }
            for (r, d) in rhs.iter_mut().zip(&self.inv_diag[i]) {
                *r *= d;
            }
            let ui = Field(sys.inverse(rhs.clone()));
            if !ui.is_finite() {
                return Err(IerkError::NonFinite {
                    step: 0,
                    time: t_prev + self.tab.c[i] * tau,
                });
            }
            energies.push(sys.energy_with_transform(&ui, &rhs));
            if i + 1 < s {
                stiff.push(rhs.iter().zip(&self.lambda).map(|(z, l)| -z * l).collect());
                explicit.push(self.explicit_term(&ui, t_prev + self.tab.c[i] * tau));
            }
            stages.push(ui);
        }

        Ok(StepRecord {
            t_prev,
            tau,
            c: self.tab.c.clone(),
            stages,
            stage_energies: energies,
        })
    }
}

/// One step of size `tau` from `(t_prev, u_prev)`.
pub fn step(
    sys: &SpectralSystem,
    tableau: &ImexTableau,
    u_prev: &Field,
    t_prev: f64,
    tau: f64,
) -> Result<StepRecord> {
    Stepper::new(sys, tableau, tau)?.step(u_prev, t_prev)
}

/// Mismatch between the two sides of the differential form
/// `sum_l d_kl(tau M L_k) dU_{l+1} = tau M [ (L_k (U_{k+1} + U_k))/2 - g_k(U_k) ]`,
/// maximised over `k` and all Fourier modes, relative to the largest sum of
/// term magnitudes. Each stage difference is itself a difference of two
/// stages, so it is weighted by the stage magnitudes: that is the size of the
/// rounding error it carries.
pub fn differential_form_residual(
    sys: &SpectralSystem,
    tableau: &ImexTableau,
    rec: &StepRecord,
) -> Result<f64> {
    if sys.source != SourceTerm::None {
        return Err(IerkError::Config(
            "the differential form holds for autonomous systems only".into(),
        ));
    }
    let pair = differentiation_pair(tableau)?;
    let de = pair.d_e.to_f64();
    let dei = pair.d_ei.to_f64();
    let n = pair.size();
    if rec.stages.len() != n + 1 {
        return Err(IerkError::SizeMismatch {
            expected: n + 1,
            got: rec.stages.len(),
        });
    }
    let m = sys.m();
    let hats: Vec<Vec<Complex64>> = rec.stages.iter().map(|u| sys.forward(&u.0)).collect();
    let ghats: Vec<Vec<Complex64>> = rec.stages[..n]
        .iter()
        .map(|u| sys.forward(&sys.nonlinear(u, true).0))
        .collect();
    let tau = rec.tau;

    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for k in 0..n {
        for j in 0..m {
            let z = tau * sys.lambda(j);
            let mut lhs = Complex64::new(0.0, 0.0);
            let mut size = 0.0;
            for l in 0..=k {
                let delta = hats[l + 1][j] - hats[l][j];
                let term = delta * (de[(k, l)] + dei[(k, l)] * z);
                let weight = hats[l + 1][j].norm() + hats[l][j].norm();
                size += weight * (de[(k, l)].abs() + (dei[(k, l)] * z).abs());
                lhs += term;
            }
            let mk = sys.symbol(Operator::M, j);
            let lk = sys.symbol(Operator::LKappa, j);
            let linear = (hats[k + 1][j] + hats[k][j]) * (0.5 * lk * tau * mk);
            let rhs = linear - ghats[k][j] * (tau * mk);
            size += linear.norm() + (ghats[k][j] * (tau * mk)).norm();
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(size);
        }
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

/// Energy history of a run.
#[derive(Clone, Debug, Default)]
pub struct EnergyTrace {
    pub t0: f64,
    pub initial_energy: f64,
    /// End-of-step times `t0 + n tau`.
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Per-step stage energies, kept only when requested.
    pub stage_energies: Option<Vec<Vec<f64>>>,
    pub c: Vec<f64>,
    /// Largest `E_n - E_{n-1}`; `None` for an empty trace.
    pub max_increase: Option<f64>,
    /// Largest `E[U_j] - E[U_1]` within any step.
    pub max_stage_increase: Option<f64>,
    /// Largest `(E[U_j] - E[U_1]) / |E[U_1]|`.
    pub max_relative_stage_increase: Option<f64>,
}

fn fmax(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.max(b)))
}

impl EnergyTrace {
    pub fn new(t0: f64, initial_energy: f64, c: Vec<f64>, record_stages: bool) -> Self {
        EnergyTrace {
            t0,
            initial_energy,
            c,
            stage_energies: record_stages.then(Vec::new),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, rec: &StepRecord) {
        let prev = self.energies.last().copied().unwrap_or(self.initial_energy);
        let e = *rec.stage_energies.last().expect("stage energies");
        self.max_increase = fmax(self.max_increase, e - prev);
        let e1 = rec.stage_energies[0];
        let inc = rec.max_stage_increase();
        self.max_stage_increase = fmax(self.max_stage_increase, inc);
        let rel = if e1 == 0.0 { inc } else { inc / e1.abs() };
        self.max_relative_stage_increase = fmax(self.max_relative_stage_increase, rel);
        self.times.push(t);
        self.energies.push(e);
        if let Some(st) = self.stage_energies.as_mut() {
            st.push(rec.stage_energies.clone());
        }
    }

    /// True when no stage energy exceeds the step's `E[U_1]` by more than
    /// `rel_tol |E[U_1]|`.
    pub fn is_monotone(&self, rel_tol: f64) -> bool {
        self.max_relative_stage_increase
            .is_none_or(|r| r <= rel_tol)
    }

    /// `t,E,dE` rows, starting with the initial state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E,dE\n");
        writeln!(out, "{},{},0", self.t0, self.initial_energy).unwrap();
        let mut prev = self.initial_energy;
        for (t, e) in self.times.iter().zip(&self.energies) {
            writeln!(out, "{t},{e},{}", e - prev).unwrap();
            prev = *e;
        }
        out
    }

    /// `n,i,c_i,E_stage` rows (1-based step and stage numbers), if recorded.
    pub fn stage_csv(&self) -> Option<String> {
        let stages = self.stage_energies.as_ref()?;
        let mut out = String::from("n,i,c_i,E_stage\n");
        for (n, row) in stages.iter().enumerate() {
            for (i, e) in row.iter().enumerate() {
                writeln!(out, "{},{},{},{e}", n + 1, i + 1, self.c[i]).unwrap();
            }
        }
        Some(out)
    }
}

/// Runs `n_steps` steps and calls `observer(n, &record)` after each one.
#[allow(clippy::too_many_arguments)]
pub fn evolve_with(
    sys: &SpectralSystem,
    tableau: &ImexTableau,
    u0: &Field,
    t0: f64,
    tau: f64,
    n_steps: usize,
    record_stages: bool,
    mut observer: impl FnMut(usize, &StepRecord),
) -> Result<(Field, EnergyTrace)> {
    let stepper = Stepper::new(sys, tableau, tau)?;
    let mut trace = EnergyTrace::new(t0, sys.energy(u0), stepper.tab.c.clone(), record_stages);
    let mut u = u0.clone();
    for n in 0..n_steps {
        let t_prev = t0 + n as f64 * tau;
        let rec = stepper.step(&u, t_prev).map_err(|e| match e {
            IerkError::NonFinite { time, .. } => IerkError::NonFinite { step: n + 1, time },
            other => other,
        })?;
        let t = t0 + (n + 1) as f64 * tau;
        trace.push(t, &rec);
        observer(n + 1, &rec);
        u = rec.stages.last().expect("stages").clone();
    }
    Ok((u, trace))
}

pub fn evolve(
    sys: &SpectralSystem,
    tableau: &ImexTableau,
    u0: &Field,
    t0: f64,
    tau: f64,
    n_steps: usize,
    record_stages: bool,
) -> Result<(Field, EnergyTrace)> {
    evolve_with(sys, tableau, u0, t0, tau, n_steps, record_stages, |_, _| {})
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::scalar::Scalar;
    use crate::spectral::{Nonlinearity, SpectralGrid};
    use crate::tableau::{registry, MethodId, ParamMap};

    fn sys(m: usize, eps: f64, kappa: f64) -> SpectralSystem {
        SpectralSystem::new(SpectralGrid::new(0.0, 2.0 * PI, m).unwrap(), eps, kappa).unwrap()
    }

    fn method(id: MethodId, pairs: &[(&str, f64)]) -> ImexTableau {
        let p: ParamMap = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), Scalar::float(*v)))
            .collect();
        registry(id, &p).unwrap()
    }

    #[test]
    fn equilibria_preserved() {
        let s = sys(32, 0.1, 2.0);
        for id in MethodId::ALL {
            let t = registry(id, &id.preferred_params()).unwrap();
            for v in [1.0, -1.0] {
                let rec = step(&s, &t, &Field::constant(32, v), 0.0, 0.1).unwrap();
                for st in &rec.stages {
                    assert!(st.max_abs_diff(&Field::constant(32, v)) < 1e-14, "{id}");
                }
            }
        }
    }

    #[test]
    fn ierk1_single_mode_amplification() {
        let s = sys(16, 0.2, 0.0).with_nonlinearity(Nonlinearity::Zero);
        let t = method(MethodId::Ierk1, &[("theta", 1.0)]);
        let tau = 0.5;
        let u0 = s.field_from_fn(f64::sin);
        let rec = step(&s, &t, &u0, 0.0, tau).unwrap();
        let expect = s.field_from_fn(|x| x.sin() / (1.0 + 0.04 * tau));
        assert!(rec.solution().max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn record_invariants() {
        let s = sys(32, 0.1, 2.0);
        let t = method(MethodId::Ierk3_2, &[("a43", -0.5)]);
        let u0 = s.field_from_fn(|x| 0.3 * x.cos() + 0.1 * (3.0 * x).sin());
        let rec = step(&s, &t, &u0, 0.0, 0.01).unwrap();
        assert_eq!(rec.stages[0], u0);
        assert_eq!(rec.stages.len(), 5);
        assert_eq!(rec.differences().len(), 4);
        assert!((rec.stage_energies[0] - s.energy(&u0)).abs() < 1e-14);
    }

    #[test]
    fn non_invertible_stage() {
        let s = sys(8, 0.0, 1.0);
        let t = method(MethodId::Ierk3FourStage, &[("a22", -1.0)]);
        let err = step(&s, &t, &Field::constant(8, 0.0), 0.0, 1.0).unwrap_err();
        assert!(matches!(
            err,
            IerkError::NonInvertibleStage { stage: 2, mode: 1 }
        ));
        assert!(step(&s, &t, &Field::constant(8, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn residual_small_and_sensitive() {
        let s = sys(64, 0.1, 2.0);
        let t = method(MethodId::Ierk2_1, &[("c2", 1.0), ("a33", 1.0)]);
        let u0 = s.field_from_fn(|x| 0.5 * x.sin() + 0.2 * (2.0 * x).cos());
        let mut rec = step(&s, &t, &u0, 0.0, 0.01).unwrap();
        assert!(differential_form_residual(&s, &t, &rec).unwrap() < 1e-10);
        rec.stages[1].0[3] += 1e-3;
        assert!(differential_form_residual(&s, &t, &rec).unwrap() > 1e-6);
    }

    #[test]
    fn residual_of_constant_state() {
        let s = sys(16, 0.1, 2.0);
        let t = method(MethodId::Ierk2_2, &[("a33", 1.0)]);
        let rec = step(&s, &t, &Field::constant(16, 1.0), 0.0, 0.01).unwrap();
        assert_eq!(differential_form_residual(&s, &t, &rec).unwrap(), 0.0);
    }

    #[test]
    fn zero_steps() {
        let s = sys(16, 0.1, 2.0);
        let t = method(MethodId::Ierk1, &[("theta", 0.5)]);
        let u0 = s.field_from_fn(f64::sin);
        let (u, trace) = evolve(&s, &t, &u0, 0.0, 0.1, 0, true).unwrap();
        assert_eq!(u, u0);
        assert!(trace.is_empty());
        assert_eq!(trace.max_increase, None);
        assert_eq!(trace.to_csv().lines().count(), 2);
    }

    #[test]
    fn trace_bookkeeping() {
        let s = sys(32, 0.1, 2.0);
        let t = method(MethodId::Ierk2_1, &[("c2", 1.0), ("a33", 0.5)]);
        let u0 = s.field_from_fn(|x| 0.5 * x.sin());
        let (_, trace) = evolve(&s, &t, &u0, 0.0, 0.05, 10, true).unwrap();
        assert_eq!(trace.len(), 10);
        assert!(trace.times.windows(2).all(|w| w[1] > w[0]));
        assert!(trace.max_increase.unwrap() <= 0.0);
        assert!(trace.is_monotone(1e-9));
        let dump = trace.stage_csv().unwrap();
        assert_eq!(dump.lines().count(), 1 + 10 * 3);
        assert!(dump.lines().nth(1).unwrap().starts_with("1,1,0,"));
    }

    #[test]
    fn blow_up_reported() {
        let s = sys(16, 0.1, 0.0);
        let t = method(MethodId::Ierk1, &[("theta", 0.5)]);
        let u0 = s.field_from_fn(|x| 10.0 * x.sin());
        let err = evolve(&s, &t, &u0, 0.0, 1.0, 50, false).unwrap_err();
        assert!(matches!(err, IerkError::NonFinite { .. }));
    }
}
