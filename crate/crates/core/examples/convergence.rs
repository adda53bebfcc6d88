//! Temporal convergence against the manufactured solution `exp(-t) sin x`.
//!
//! ```text
//! cargo run --release --example convergence -- IERK3-Radau ah43=1
//! ```

use ierk::harness::{run_converge, Experiment, ExperimentConfig, MethodSpec};

fn main() -> ierk::Result<()> {
    let mut args = std::env::args().skip(1);
    let id = args.next().unwrap_or_else(|| "IERK2-2".into());
    let mut cfg = ExperimentConfig::new(Experiment::Converge).with_method(MethodSpec {
        id: Some(id),
        ..Default::default()
    });
    let mut any = false;
    for kv in args {
        let (k, v) = kv
            .split_once('=')
            .expect("parameters are given as key=value");
        cfg.apply_override(k, v)?;
        any = true;
    }
    if !any && cfg.method.id.as_deref() == Some("IERK2-2") {
        cfg.apply_override("a33", "0.6035533905932737")?;
    }

    let table = run_converge(&cfg)?;
    println!(
        "{}({})  kappa = {}",
        table.method, table.params, table.kappa
    );
    println!(
        "{:>12} {:>7} {:>12} {:>7}",
        "tau", "steps", "error", "order"
    );
    for r in &table.rows {
        let err = r.error.map_or("failed".into(), |e| format!("{e:.3e}"));
        let ord = r.order.map_or(String::new(), |o| format!("{o:.3}"));
        println!("{:>12.4e} {:>7} {:>12} {:>7}", r.tau, r.n_steps, err, ord);
    }
    if let Some(p) = table.asymptotic_order(3, 0.0, 1e-12) {
        println!("median order over the last three pairs: {p:.3}");
    }
    Ok(())
}
