//! Loads a tableau from JSON, checks it and takes a few steps with it.

use ierk::dissipation::{certify, DEFAULT_PSD_TOL, DEFAULT_Z_SAMPLES};
use ierk::integrator::{differential_form_residual, step};
use ierk::spectral::{SpectralGrid, SpectralSystem};
use ierk::tableau::{check_order_conditions, parse_tableau_json};

// A three-stage second-order pair with an explicit midpoint predictor.
const TABLEAU: &str = r#"{
  "name": "midpoint-pair",
  "c": ["0", "1/2", "1"],
  "A": [["0", "0", "0"], ["0", "1/2", "0"], ["1", "-1", "1"]],
  "A_hat": [["0", "0", "0"], ["1/2", "0", "0"], ["0", "1", "0"]]
}"#;

fn main() -> ierk::Result<()> {
    let t = parse_tableau_json(TABLEAU)?;
    let rep = check_order_conditions(&t, 1e-12);
    println!("{}: {} stages, order {}", t.name, t.s(), rep.attained_order);

    let cert = certify(&t, DEFAULT_PSD_TOL, &DEFAULT_Z_SAMPLES)?;
    println!("certificate: {:?}", cert.verdict);
    println!("{}", serde_json::to_string_pretty(&cert.to_json())?);

    let sys = SpectralSystem::new(
        SpectralGrid::new(0.0, 2.0 * std::f64::consts::PI, 64)?,
        0.2,
        2.0,
    )?;
    let mut u = sys.field_from_fn(|x| 0.5 * x.sin() + 0.2 * (2.0 * x).cos());
    for n in 0..5 {
        let rec = step(&sys, &t, &u, n as f64 * 0.1, 0.1)?;
        println!(
            "step {}: E = {:.8}, differential-form residual {:.1e}",
            n + 1,
            rec.stage_energies.last().unwrap(),
            differential_form_residual(&sys, &t, &rec)?
        );
        u = rec.solution().clone();
    }
    Ok(())
}
