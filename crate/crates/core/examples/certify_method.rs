//! Energy-decay certificates for a few parameter choices.

use ierk::dissipation::{certify, differentiation_pair, DEFAULT_PSD_TOL, DEFAULT_Z_SAMPLES};
use ierk::tableau::{registry, MethodId, ParamMap};
use ierk::Scalar;

fn params(pairs: &[(&str, &str)]) -> ParamMap {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.parse::<Scalar>().unwrap()))
        .collect()
}

fn main() -> ierk::Result<()> {
    let cases = [
        (MethodId::Ierk2_1, params(&[("c2", "1"), ("a33", "1/2")])),
        (MethodId::Ierk2_1, params(&[("c2", "1"), ("a33", "2/5")])),
        (MethodId::Ierk3_2, params(&[("a43", "-3/5")])),
        (MethodId::Ierk3FourStage, params(&[("a22", "2")])),
    ];
    for (id, p) in cases {
        let t = registry(id, &p)?;
        let cert = certify(&t, DEFAULT_PSD_TOL, &DEFAULT_Z_SAMPLES)?;
        println!(
            "{} {:?}: {:?}  min eig D_E = {:.4}, D_EI = {:.4}",
            cert.method,
            cert.params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>(),
            cert.verdict,
            cert.de.min_eigenvalue,
            cert.dei.min_eigenvalue,
        );
        for w in &cert.witnesses {
            println!(
                "    leading {}x{} minor of S({}) has determinant {}",
                w.order, w.order, w.matrix, w.determinant
            );
        }
    }

    let t = registry(MethodId::Ierk2_1, &params(&[("c2", "1"), ("a33", "1/2")]))?;
    let pair = differentiation_pair(&t)?;
    println!("\nIERK2-1(1, 1/2)");
    print!("D_E =\n{}D_EI =\n{}", pair.d_e, pair.d_ei);
    Ok(())
}
