use rayon::prelude::*;

use super::{Gradients, ParamId, ParamStore, TensorError};

/// Denominator floor for the relative error, so entries whose true gradient
/// is (numerically) zero compare on an absolute scale.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckFailure {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub tolerance: f64,
    pub max_rel_error: f64,
    /// Entry with the largest relative error.
    pub worst: Option<(String, usize)>,
    pub failures: Vec<GradCheckFailure>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
    (analytic - numeric).abs() / denom
}

/// Compares `analytic` against central differences
/// `(f(p + ε) - f(p - ε)) / 2ε` for every entry of every trainable parameter.
///
/// Frozen parameters are skipped. A parameter with no analytic gradient is
/// taken to have gradient zero. Evaluation fans out over rayon workers, each
/// with its own copy of the store; `f` must therefore be deterministic.
pub fn finite_difference_check<F>(
    store: &ParamStore,
    analytic: &Gradients,
    f: F,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&ParamStore) -> f64 + Sync,
{
    if !(epsilon > 0.0) {
        return Err(TensorError::Invalid {
            op: "finite_difference_check",
            reason: format!("epsilon must be positive, got {epsilon}"),
        });
    }
    let entries: Vec<(ParamId, usize)> = store
        .ids()
        .filter(|id| !store.is_frozen(*id))
        .flat_map(|id| (0..store.get(id).len()).map(move |i| (id, i)))
        .collect();

    let results: Vec<Result<(ParamId, usize, f64, f64), TensorError>> = entries
        .par_iter()
        .map_init(
            || store.clone(),
            |local, &(id, i)| {
                let original = local.get(id).data()[i];
                local.get_mut(id).data_mut()[i] = original + epsilon;
                let plus = f(local);
                local.get_mut(id).data_mut()[i] = original - epsilon;
                let minus = f(local);
                local.get_mut(id).data_mut()[i] = original;
                if !plus.is_finite() || !minus.is_finite() {
                    return Err(TensorError::NonFinite {
                        param: store.name(id).to_string(),
                        index: i,
                    });
                }
                let numeric = (plus - minus) / (2.0 * epsilon);
                let exact = analytic.get(id).map_or(0.0, |g| g[i]);
                Ok((id, i, exact, numeric))
            },
        )
        .collect();

    let mut report = GradCheckReport {
        checked: 0,
        tolerance,
        max_rel_error: 0.0,
        worst: None,
        failures: Vec::new(),
    };
    for r in results {
        let (id, index, exact, numeric) = r?;
        let err = relative_error(exact, numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.worst.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst = Some((store.name(id).to_string(), index));
        }
        if err >= tolerance {
            report.failures.push(GradCheckFailure {
                param: store.name(id).to_string(),
                index,
                analytic: exact,
                numeric,
                rel_error: err,
            });
        }
    }
    Ok(report)
}
