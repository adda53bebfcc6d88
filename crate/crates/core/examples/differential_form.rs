//! Checks that one step of every registry method satisfies its differential
//! form on a stiff grid, and that corrupting a stage breaks it.

use ierk::integrator::{differential_form_residual, step};
use ierk::spectral::{SpectralGrid, SpectralSystem};
use ierk::tableau::{registry, MethodId};

fn main() -> ierk::Result<()> {
    let pi = std::f64::consts::PI;
    let sys = SpectralSystem::new(SpectralGrid::new(-pi, pi, 256)?, 0.1, 2.0)?;
    let u0 = sys.field_from_fn(|x| 0.4 * x.sin() - 0.2 * (3.0 * x).cos() + 0.05 * (9.0 * x).sin());
    for id in MethodId::ALL {
        let t = registry(id, &id.preferred_params())?;
        let mut rec = step(&sys, &t, &u0, 0.0, 0.01)?;
        let clean = differential_form_residual(&sys, &t, &rec)?;
        rec.stages[1].0[17] += 1e-4;
        let broken = differential_form_residual(&sys, &t, &rec)?;
        println!(
            "{:<14} residual {clean:.2e}   with a corrupted stage {broken:.2e}",
            t.name
        );
    }
    Ok(())
}
