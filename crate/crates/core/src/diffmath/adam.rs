use crate::diffmath::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Moment estimates for one parameter matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Matrix<T>,
    pub second_moment: Matrix<T>,
    pub step: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> AdamState<T> {
    /// State with β₁ = 0.5, β₂ = 0.9, ε = 1e-8.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self::with_betas(rows, cols, T::lit(0.5), T::lit(0.9), T::lit(1e-8))
    }

    pub fn with_betas(rows: usize, cols: usize, beta1: T, beta2: T, eps: T) -> Self {
        Self {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn for_param(param: &Matrix<T>) -> Self {
        Self::new(param.rows(), param.cols())
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step<T: Scalar>(
    name: &str,
    param: &mut Matrix<T>,
    grad: &Matrix<T>,
    state: &mut AdamState<T>,
    lr: T,
) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.first_moment.shape() {
        return Err(Error::dim(
            "adam_step",
            format!(
                "parameter {name}: param {:?}, grad {:?}, state {:?}",
                param.shape(),
                grad.shape(),
                state.first_moment.shape()
            ),
        ));
    }
    if !grad.is_finite() {
        return Err(Error::Numeric(format!("gradient of parameter {name}")));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let m = state.first_moment.as_mut_slice();
    let v = state.second_moment.as_mut_slice();
    for (((p, &g), m), v) in param.as_mut_slice().iter_mut().zip(grad.as_slice()).zip(m).zip(v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}
