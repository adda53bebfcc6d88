use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use ierk::dissipation::{
    average_rate, certify, difference_coefficients, differentiation_pair, doc_kernels, eval_d,
    eval_d_elementwise, DifferenceTableau, DEFAULT_PSD_TOL, DEFAULT_Z_SAMPLES,
};
use ierk::harness::{initial_field, Experiment, ExperimentConfig, InitialCondition};
use ierk::integrator::step;
use ierk::linalg::ScalarMatrix;
use ierk::spectral::{Field, Operator, SpectralGrid, SpectralSystem};
use ierk::tableau::{registry, ImexTableau, MethodId, ParamMap};
use ierk::Scalar;

/// A registry method with its free parameters drawn from the interval each
/// family is usually run on.
fn any_tableau() -> impl Strategy<Value = ImexTableau> {
    let one = |id: MethodId, sym: &'static str, lo: f64, hi: f64| {
        (lo..hi).prop_map(move |v| {
            let p: ParamMap = [(sym.to_string(), Scalar::float(v))].into();
            registry(id, &p).unwrap()
        })
    };
    prop_oneof![
        one(MethodId::Ierk1, "theta", 0.5, 1.5),
        (0.2f64..2.0, 0.3f64..2.0).prop_map(|(c2, a33)| {
            let p: ParamMap = [
                ("c2".into(), Scalar::float(c2)),
                ("a33".into(), Scalar::float(a33)),
            ]
            .into();
            registry(MethodId::Ierk2_1, &p).unwrap()
        }),
        one(MethodId::Ierk2_2, "a33", 0.5, 2.0),
        one(MethodId::Ierk2Radau, "c2", 1.2, 2.5),
        one(MethodId::Ierk3FourStage, "a22", 0.5, 3.0),
        one(MethodId::Ierk3_1, "a55", 0.7, 1.8),
        one(MethodId::Ierk3_2, "a43", -0.7, -0.3),
        one(MethodId::Ierk3Radau, "ah43", 0.5, 1.1),
        Just(registry(MethodId::Ierk4A1, &ParamMap::new()).unwrap()),
        Just(registry(MethodId::Ierk4A2, &ParamMap::new()).unwrap()),
    ]
}

fn lower_triangular(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0f64..1.0, n * n),
            prop::collection::vec((0.1f64..1.0, any::<bool>()), n),
        )
            .prop_map(move |(off, diag)| {
                DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
                    std::cmp::Ordering::Greater => off[i * n + j],
                    std::cmp::Ordering::Equal => {
                        let (m, neg) = diag[i];
                        if neg {
                            -m
                        } else {
                            m
                        }
                    }
                    std::cmp::Ordering::Less => 0.0,
                })
            })
    })
}

fn scalar_matrix(m: &DMatrix<f64>) -> ScalarMatrix {
    ScalarMatrix::from_rows(
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| Scalar::float(m[(i, j)])).collect())
            .collect(),
    )
}

fn system(m: usize, eps: f64, kappa: f64) -> SpectralSystem {
    SpectralSystem::new(SpectralGrid::new(0.0, 2.0 * PI, m).unwrap(), eps, kappa).unwrap()
}

/// A smooth periodic field with a handful of random low modes.
fn smooth_field() -> impl Strategy<Value = (f64, Vec<(f64, f64)>)> {
    (
        -0.5f64..0.5,
        prop::collection::vec((-0.4f64..0.4, -0.4f64..0.4), 1..6),
    )
}

fn realise(sys: &SpectralSystem, (mean, modes): &(f64, Vec<(f64, f64)>)) -> Field {
    sys.field_from_fn(|x| {
        mean + modes
            .iter()
            .enumerate()
            .map(|(k, (a, b))| {
                let k = (k + 1) as f64;
                a * (k * x).sin() + b * (k * x).cos()
            })
            .sum::<f64>()
    })
}

fn dot(a: &Field, b: &Field) -> f64 {
    a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn doc_kernels_are_the_triangular_inverse(x in lower_triangular(6)) {
        let n = x.nrows();
        let d = DifferenceTableau { implicit: ScalarMatrix::identity(n), explicit: scalar_matrix(&x) };
        let k = doc_kernels(&d).unwrap();
        let theta = k.theta.to_f64();
        let scale = (theta.abs() * x.abs()).max().max(1.0);
        prop_assert!(k.orthogonality_defect(&d) <= 1e-13 * scale);
        let oracle = x.solve_lower_triangular(&DMatrix::identity(n, n)).unwrap();
        prop_assert!((&theta - &oracle).abs().max() <= 1e-12 * oracle.abs().max().max(1.0));
    }

    #[test]
    fn average_rate_is_the_trace_average(t in any_tableau()) {
        let pair = differentiation_pair(&t).unwrap();
        let rate = average_rate(&t).unwrap();
        let n = pair.size() as f64;
        assert_relative_eq!(rate.intercept.to_f64(), pair.d_e.trace().to_f64() / n, max_relative = 1e-10);
        assert_relative_eq!(rate.slope.to_f64(), pair.d_ei.trace().to_f64() / n, epsilon = 1e-10, max_relative = 1e-10);
    }

    #[test]
    fn elementwise_d_matches_the_matrix_form(t in any_tableau(), z in -1e4f64..0.0) {
        let d = difference_coefficients(&t).unwrap();
        let k = doc_kernels(&d).unwrap();
        let a = eval_d(&t, z).unwrap();
        let b = eval_d_elementwise(&d, &k, z);
        let scale = a.abs().max().max(1.0);
        prop_assert!((a - b).abs().max() <= 1e-10 * scale);
    }

    #[test]
    fn certified_methods_have_no_negative_sample(t in any_tableau()) {
        let cert = certify(&t, DEFAULT_PSD_TOL, &DEFAULT_Z_SAMPLES).unwrap();
        if cert.certified {
            prop_assert!(cert.z_samples.iter().all(|s| !s.negative));
        }
    }

    #[test]
    fn operators_are_symmetric(u in smooth_field(), v in smooth_field(), eps in 0.05f64..0.5, kappa in 0.0f64..5.0) {
        let sys = system(64, eps, kappa);
        let (u, v) = (realise(&sys, &u), realise(&sys, &v));
        for op in [Operator::M, Operator::L, Operator::LKappa, Operator::MLKappa] {
            let a = dot(&u, &sys.apply_operator(op, &v).unwrap());
            let b = dot(&sys.apply_operator(op, &u).unwrap(), &v);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn energy_is_nonnegative(u in smooth_field(), eps in 0.05f64..0.5) {
        let sys = system(64, eps, 1.0);
        prop_assert!(sys.energy(&realise(&sys, &u)) >= 0.0);
    }

    #[test]
    fn variational_derivative_is_the_energy_gradient(u in smooth_field(), v in smooth_field()) {
        let sys = system(64, 0.2, 1.0);
        let (u, v) = (realise(&sys, &u), realise(&sys, &v));
        let h = 1e-6;
        let shifted = |s: f64| Field(u.0.iter().zip(&v.0).map(|(a, b)| a + s * b).collect());
        let fd = (sys.energy(&shifted(h)) - sys.energy(&shifted(-h))) / (2.0 * h);
        let exact = sys.grid.h * dot(&sys.variational_derivative(&u).unwrap(), &v);
        prop_assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn steps_conserve_mass(t in any_tableau(), u in smooth_field(), tau in 1e-3f64..0.1) {
        let sys = system(64, 0.1, 2.0);
        let u = realise(&sys, &u);
        let rec = step(&sys, &t, &u, 0.0, tau).unwrap();
        for s in &rec.stages {
            prop_assert!((s.mean() - u.mean()).abs() <= 1e-12);
        }
    }

    #[test]
    fn pure_phases_are_fixed_points(t in any_tableau(), sign in prop::bool::ANY, tau in 1e-3f64..0.5) {
        let sys = system(32, 0.1, 2.0);
        let v = if sign { 1.0 } else { -1.0 };
        let u = Field::constant(32, v);
        let rec = step(&sys, &t, &u, 0.0, tau).unwrap();
        prop_assert!(rec.solution().max_abs_diff(&u) <= 1e-13);
    }

    #[test]
    fn field_csv_round_trips(u in smooth_field()) {
        let sys = system(32, 0.1, 2.0);
        let field = realise(&sys, &u);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u0.csv");
        std::fs::write(&path, field.to_csv(&sys.grid)).unwrap();
        let mut cfg = ExperimentConfig::new(Experiment::Evolve);
        cfg.initial = Some(InitialCondition::Csv(path));
        prop_assert_eq!(initial_field(&cfg, &sys).unwrap(), field);
    }
}
