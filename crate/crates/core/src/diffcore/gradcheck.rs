use super::{DiffError, ParameterStore, Tape, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Parameter name and flat coordinate of the worst disagreement.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares back-propagated gradients with central differences for every
/// coordinate of every parameter in `store`. Parameter values are restored
/// afterwards; gradient slots hold the analytic gradient.
pub fn check_gradients<E, F>(store: &mut ParameterStore, epsilon: f64, mut loss: F) -> Result<GradCheck, E>
where
    E: From<DiffError>,
    F: FnMut(&ParameterStore, &mut Tape) -> Result<Var, E>,
{
    let eval = |store: &ParameterStore, loss: &mut F| -> Result<f64, E> {
        let mut tape = Tape::new();
        let root = loss(store, &mut tape)?;
        Ok(tape.scalar(root))
    };

    store.zero_grad();
    let mut tape = Tape::new();
    let root = loss(store, &mut tape)?;
    tape.backward(root, store)?;
    drop(tape);

    let mut report = GradCheck { max_relative_error: 0.0, worst: None, coordinates: 0 };
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        for k in 0..store.value(id).len() {
            let original = store.value(id).data()[k];
            store.get_mut(id).value.data_mut()[k] = original + epsilon;
            let plus = eval(store, &mut loss)?;
            store.get_mut(id).value.data_mut()[k] = original - epsilon;
            let minus = eval(store, &mut loss)?;
            store.get_mut(id).value.data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let err = relative_error(store.grad(id).data()[k], numeric);
            report.coordinates += 1;
            if err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((store.get(id).name.clone(), k));
            }
        }
    }
    Ok(report)
}
