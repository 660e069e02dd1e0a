use super::params::{GradSet, ParamStore};
use crate::error::{Error, Result};

/// Worst coordinate found by [`grad_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
    /// Worst error over coordinates where `max(|a|, |n|) ≥ RESOLVED_FLOOR`.
    pub resolved_max_rel_err: f64,
    /// Coordinates whose error exceeds `1e-4`.
    pub over_tolerance: usize,
}

/// Gradient magnitude below which a 64-bit central difference with
/// `h = 1e-5` cannot resolve four significant digits: a loss of order one
/// carries rounding noise of a few ulps (~1e-15), i.e. ~1e-10 after the
/// division by `2h`.
pub const RESOLVED_FLOOR: f64 = 1e-6;

/// Tolerance used for [`GradCheckReport::over_tolerance`].
pub const GRAD_TOLERANCE: f64 = 1e-4;

/// Compares the analytic gradient returned by `f` against central
/// differences `(f(θ+h) − f(θ−h)) / 2h`, coordinate by coordinate. The
/// error per coordinate is `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check<F>(store: &mut ParamStore, h: f64, mut f: F) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> Result<(f64, GradSet)>,
{
    let (loss, grads) = f(store)?;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss {loss}")));
    }
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        param: String::new(),
        index: 0,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
        resolved_max_rel_err: 0.0,
        over_tolerance: 0,
    };
    for id in 0..store.len() {
        let width = store.tensor(id).row_len();
        for idx in 0..store.tensor(id).len() {
            let orig = store.tensor(id).data()[idx];
            store.tensor_mut(id).data_mut()[idx] = orig + h;
            let plus = f(store)?.0;
            store.tensor_mut(id).data_mut()[idx] = orig - h;
            let minus = f(store)?.0;
            store.tensor_mut(id).data_mut()[idx] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!("loss at {}[{idx}]", store.name(id))));
            }
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads.coordinate(id, idx, width);
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            report.coordinates += 1;
            if err > GRAD_TOLERANCE {
                report.over_tolerance += 1;
            }
            if analytic.abs().max(numeric.abs()) >= RESOLVED_FLOOR {
                report.resolved_max_rel_err = report.resolved_max_rel_err.max(err);
            }
            if err > report.max_rel_err || report.param.is_empty() {
                report.max_rel_err = err;
                report.param = store.name(id).to_string();
                report.index = idx;
                report.analytic = analytic;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
