use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{differentiation_pair, psd_check};
use crate::error::{IerkError, Result};
use crate::scalar::Scalar;
use crate::tableau::{registry, MethodId, ParamMap};

/// Which matrices must be PSD for a grid point to count as certified.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub enum ScanTarget {
    #[default]
    Both,
    DE,
    DEI,
}

impl std::str::FromStr for ScanTarget {
    type Err = IerkError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "both" => Ok(ScanTarget::Both),
            "de" | "d_e" => Ok(ScanTarget::DE),
            "dei" | "d_ei" => Ok(ScanTarget::DEI),
            _ => Err(IerkError::Config(format!("unknown scan target `{s}`"))),
        }
    }
}

impl TryFrom<String> for ScanTarget {
    type Error = IerkError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanPoint {
    pub value: f64,
    /// `None` when the parameter value is degenerate for the family.
    pub certified: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub family: MethodId,
    pub symbol: String,
    pub step: f64,
    pub target: ScanTarget,
    pub points: Vec<ScanPoint>,
    /// Maximal runs of consecutive certified grid points, as `[first, last]`.
    pub intervals: Vec<[f64; 2]>,
    pub skipped: Vec<f64>,
}

impl ScanReport {
    /// The widest certified run, if any.
    pub fn widest_interval(&self) -> Option<[f64; 2]> {
        self.intervals
            .iter()
            .copied()
            .max_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0])))
    }
}

/// Certifies `family` on the grid `lo, lo + step, ..., hi` for the free
/// parameter `symbol`, with any other free parameters taken from `fixed`.
pub fn scan_parameter(
    family: MethodId,
    symbol: &str,
    fixed: &ParamMap,
    range: (f64, f64),
    step: f64,
    tol: f64,
    target: ScanTarget,
) -> Result<ScanReport> {
    let bad = |message: String| IerkError::BadParameters {
        method: family.name().into(),
        message,
    };
    if !family.free_symbols().contains(&symbol) {
        return Err(bad(format!("`{symbol}` is not a free parameter")));
    }
    if fixed.contains_key(symbol) {
        return Err(bad(format!("`{symbol}` is both scanned and fixed")));
    }
    let (lo, hi) = range;
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad(format!(
            "invalid scan range [{lo}, {hi}] with step {step}"
        )));
    }
    let n = ((hi - lo) / step).round() as usize;

    let points: Vec<ScanPoint> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let value = lo + i as f64 * step;
            let mut params = fixed.clone();
            params.insert(symbol.to_string(), Scalar::float(value));
            let certified = match registry(family, &params) {
                Ok(t) => differentiation_pair(&t).ok().map(|pair| {
                    let de = || psd_check(&pair.d_e.to_f64(), tol).psd;
                    let dei = || psd_check(&pair.d_ei.to_f64(), tol).psd;
                    match target {
                        ScanTarget::Both => de() && dei(),
                        ScanTarget::DE => de(),
                        ScanTarget::DEI => dei(),
                    }
                }),
                Err(IerkError::DegenerateParameters { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(ScanPoint { value, certified })
        })
        .collect::<Result<_>>()?;

    let mut intervals = Vec::new();
    let mut run: Option<[f64; 2]> = None;
    for p in &points {
        if p.certified == Some(true) {
            run = Some(match run {
                Some([a, _]) => [a, p.value],
                None => [p.value, p.value],
            });
        } else if let Some(r) = run.take() {
            intervals.push(r);
        }
    }
    intervals.extend(run);
    let skipped = points
        .iter()
        .filter(|p| p.certified.is_none())
        .map(|p| p.value)
        .collect();

    Ok(ScanReport {
        family,
        symbol: symbol.to_string(),
        step,
        target,
        points,
        intervals,
        skipped,
    })
}
