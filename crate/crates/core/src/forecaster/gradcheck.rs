use super::ForecastModel;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::transform::SlidingWindow;

/// Gradients below this magnitude are compared absolutely rather than relatively.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    /// `max |a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)` over all parameters.
    pub max_relative_error: f64,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Compares backpropagated loss gradients against central differences for
/// every parameter. Always evaluated in `f64`, whatever the model's scalar.
pub fn gradient_check<T: Scalar>(model: &ForecastModel<T>, window: &SlidingWindow<T>, epsilon: f64) -> Result<GradientCheck> {
    let mut model: ForecastModel<f64> = model.cast();
    let window = SlidingWindow {
        index: window.index,
        start: window.start,
        input: window.input.mapv(|v| v.as_f64()),
        target: window.target.iter().map(|v| v.as_f64()).collect(),
    };
    let (_, analytic) = model.loss_and_gradient(&window)?;
    let mut numeric = Vec::with_capacity(analytic.len());
    for i in 0..model.parameter_count() {
        let original = model.parameters()[i];
        model.parameters_mut()[i] = original + epsilon;
        let (plus, _) = model.loss_and_gradient(&window)?;
        model.parameters_mut()[i] = original - epsilon;
        let (minus, _) = model.loss_and_gradient(&window)?;
        model.parameters_mut()[i] = original;
        numeric.push((plus - minus) / (2.0 * epsilon));
    }
    let max_relative_error = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(RELATIVE_ERROR_FLOOR))
        .fold(0.0, f64::max);
    Ok(GradientCheck { max_relative_error, analytic, numeric })
}
