use serde::{Deserialize, Serialize};

use super::tensor::{col_sum_acc, gemm_nn, gemm_nt, gemm_tn_acc};
use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    pub fn grad(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub(crate) fn code(self) -> f64 {
        match self {
            Activation::Relu => 0.0,
            Activation::Tanh => 1.0,
        }
    }

    pub(crate) fn from_code(code: f64) -> Option<Self> {
        match code as i64 {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `y = x · w + b` for `rows` input rows.
pub(crate) fn dense_forward(x: &[f64], rows: usize, w: &Tensor, b: &Tensor) -> Vec<f64> {
    let (fan_in, fan_out) = (w.shape()[0], w.shape()[1]);
    let mut y = Vec::with_capacity(rows * fan_out);
    for _ in 0..rows {
        y.extend_from_slice(b.data());
    }
    gemm_nn(x, w.data(), &mut y, rows, fan_in, fan_out, 1.0);
    y
}

/// Accumulates weight and bias gradients; writes `dx` when requested.
pub(crate) fn dense_backward(
    x: &[f64],
    rows: usize,
    w: &Tensor,
    dy: &[f64],
    gw: &mut Tensor,
    gb: &mut Tensor,
    dx: Option<&mut [f64]>,
) {
    let (fan_in, fan_out) = (w.shape()[0], w.shape()[1]);
    gemm_tn_acc(x, dy, gw.data_mut(), rows, fan_in, fan_out);
    col_sum_acc(dy, rows, fan_out, gb.data_mut());
    if let Some(dx) = dx {
        gemm_nt(dy, w.data(), dx, rows, fan_out, fan_in, 0.0);
    }
}
