//! Average dissipation rate `R = intercept + slope * tau * lambda` of each
//! registry method at its preferred parameters.

use ierk::harness::run_rate_table;

fn main() -> ierk::Result<()> {
    println!(
        "{:<14} {:<26} {:>10} {:>10}  certified",
        "method", "params", "intercept", "slope"
    );
    for r in run_rate_table()? {
        println!(
            "{:<14} {:<26} {:>10.5} {:>10.5}  {}",
            r.method, r.params, r.intercept, r.slope, r.certified
        );
    }
    Ok(())
}
