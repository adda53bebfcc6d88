//! Finds the certified parameter interval of the one-parameter third-order
//! families on a uniform grid.

use ierk::dissipation::{scan_parameter, ScanTarget, DEFAULT_PSD_TOL};
use ierk::tableau::{MethodId, ParamMap};

fn main() -> ierk::Result<()> {
    let step = 1e-3;
    for (id, symbol, range) in [
        (MethodId::Ierk3_1, "a55", (0.5, 2.0)),
        (MethodId::Ierk3_2, "a43", (-0.8, -0.2)),
        (MethodId::Ierk3Radau, "ah43", (0.4, 1.2)),
    ] {
        let rep = scan_parameter(
            id,
            symbol,
            &ParamMap::new(),
            range,
            step,
            DEFAULT_PSD_TOL,
            ScanTarget::Both,
        )?;
        match rep.widest_interval() {
            Some([lo, hi]) => println!("{id:<12} {symbol:<5} certified on [{lo:.3}, {hi:.3}]"),
            None => println!("{id:<12} {symbol:<5} nowhere certified"),
        }
    }

    // The c2 constraint of IERK2-1 comes from D_E alone.
    let fixed: ParamMap = [("a33".to_string(), ierk::Scalar::float(1.0))].into();
    let rep = scan_parameter(
        MethodId::Ierk2_1,
        "c2",
        &fixed,
        (0.1, 2.5),
        step,
        DEFAULT_PSD_TOL,
        ScanTarget::DE,
    )?;
    println!(
        "IERK2-1      c2    D_E is PSD on {:?}",
        rep.widest_interval()
    );
    Ok(())
}
