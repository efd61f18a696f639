//! Extreme learning machine regression.
//!
//! A single hidden layer whose weights and biases are drawn once from a
//! seeded uniform distribution on [-1, 1]; only the output layer is fitted,
//! by ridge regression on the hidden activations. Inputs are standardised
//! per dimension before the hidden layer, and an unpenalised constant feature
//! is appended to the activations so a constant response is exactly
//! representable.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky_solve, dot, min_norm_lstsq, Matrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ElmError {
    #[error("insufficient data: need at least 2 rows, got {0}")]
    InsufficientData(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid ELM parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + libm::exp(-x)),
            Activation::Tanh => libm::tanh(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElmParams {
    pub hidden_width: usize,
    pub activation: Activation,
    pub ridge_lambda: f64,
    pub input_dim: usize,
    pub seed: u64,
}

impl Default for ElmParams {
    fn default() -> Self {
        Self { hidden_width: 100, activation: Activation::Sigmoid, ridge_lambda: 1e-3, input_dim: 3, seed: 0 }
    }
}

impl ElmParams {
    pub fn validate(&self) -> Result<(), ElmError> {
        if self.hidden_width == 0 {
            return Err(ElmError::InvalidParams("hidden_width must be at least 1".into()));
        }
        if self.input_dim == 0 {
            return Err(ElmError::InvalidParams("input_dim must be at least 1".into()));
        }
        if !(self.ridge_lambda >= 0.0) || !self.ridge_lambda.is_finite() {
            return Err(ElmError::InvalidParams("ridge_lambda must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Per-dimension standardisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    pub means: Vec<f64>,
    /// Always positive; constant dimensions get 1.
    pub sds: Vec<f64>,
}

impl InputScaler {
    pub fn fit(x: &Matrix) -> Self {
        let (n, d) = (x.rows() as f64, x.cols());
        let mut means = alloc::vec![0.0; d];
        for r in 0..x.rows() {
            for (m, v) in means.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut ss = alloc::vec![0.0; d];
        for r in 0..x.rows() {
            for ((s, v), m) in ss.iter_mut().zip(x.row(r)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let sds = ss
            .iter()
            .zip(&means)
            .map(|(s, m)| {
                let sd = libm::sqrt(s / n);
                if sd > 1e-12 * m.abs().max(1.0) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, sds }
    }

    #[inline]
    pub fn transform_into(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.means).zip(&self.sds) {
            *o = (v - m) / s;
        }
    }
}

/// How the output weights were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Cholesky factorisation of the ridge normal equations.
    Cholesky,
    /// Minimum-norm least squares via SVD, used when the system is singular.
    MinNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    pub params: ElmParams,
    pub scaler: InputScaler,
    /// `hidden_width × input_dim`
    pub input_weights: Matrix,
    pub biases: Vec<f64>,
    /// `hidden_width + 1` entries; the last multiplies the constant feature.
    pub output_weights: Vec<f64>,
    pub solver: Solver,
}

fn check_finite(x: &Matrix) -> Result<(), ElmError> {
    if x.as_slice().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ElmError::NonFinite)
    }
}

/// Fits an ELM to `x` (`n × d`) and `y`.
pub fn train_elm(x: &Matrix, y: &[f64], params: &ElmParams) -> Result<ElmModel, ElmError> {
    params.validate()?;
    if x.rows() != y.len() {
        return Err(ElmError::Shape { expected: x.rows(), got: y.len() });
    }
    if x.cols() != params.input_dim {
        return Err(ElmError::Shape { expected: params.input_dim, got: x.cols() });
    }
    if x.rows() < 2 {
        return Err(ElmError::InsufficientData(x.rows()));
    }
    check_finite(x)?;
    if !y.iter().all(|v| v.is_finite()) {
        return Err(ElmError::NonFinite);
    }

    let (l, d) = (params.hidden_width, params.input_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let w: Vec<f64> = (0..l * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let biases: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let input_weights = Matrix::from_row_major(l, d, w);
    let scaler = InputScaler::fit(x);

    let mut model = ElmModel {
        params: params.clone(),
        scaler,
        input_weights,
        biases,
        output_weights: Vec::new(),
        solver: Solver::Cholesky,
    };
    let h = model.hidden_matrix(x);
    let (beta, solver) = solve_ridge(&h, y, params.ridge_lambda);
    model.output_weights = beta;
    model.solver = solver;
    Ok(model)
}

/// `β = (HᵀH + λD)⁻¹ Hᵀ y` with `D = diag(1, …, 1, 0)`: the trailing
/// constant column is not penalised. Falls back to minimum-norm least squares
/// when the normal equations are not numerically positive definite.
pub fn solve_ridge(h: &Matrix, y: &[f64], lambda: f64) -> (Vec<f64>, Solver) {
    let mut g = h.gram();
    let penalised = g.rows().saturating_sub(1);
    for i in 0..penalised {
        g.set(i, i, g.get(i, i) + lambda);
    }
    let rhs = h.transpose_mul_vec(y);
    if let Some(beta) = cholesky_solve(&g, &rhs) {
        return (beta, Solver::Cholesky);
    }
    if lambda == 0.0 {
        return (min_norm_lstsq(h, y), Solver::MinNorm);
    }
    // ridge as an augmented least-squares problem [H; √λ D] β ≈ [y; 0]
    let p = h.cols();
    let mut aug = Matrix::zeros(h.rows() + p, p);
    for r in 0..h.rows() {
        aug.row_mut(r).copy_from_slice(h.row(r));
    }
    let s = libm::sqrt(lambda);
    for j in 0..penalised {
        aug.set(h.rows() + j, j, s);
    }
    let mut yy = y.to_vec();
    yy.resize(h.rows() + p, 0.0);
    (min_norm_lstsq(&aug, &yy), Solver::MinNorm)
}

impl ElmModel {
    pub fn input_dim(&self) -> usize {
        self.params.input_dim
    }

    pub fn hidden_width(&self) -> usize {
        self.params.hidden_width
    }

    /// Hidden activations with the trailing constant column, `n × (L + 1)`.
    pub fn hidden_matrix(&self, x: &Matrix) -> Matrix {
        let l = self.params.hidden_width;
        let mut h = Matrix::zeros(x.rows(), l + 1);
        let mut z = alloc::vec![0.0; x.cols()];
        for r in 0..x.rows() {
            self.scaler.transform_into(x.row(r), &mut z);
            let out = h.row_mut(r);
            for (j, o) in out[..l].iter_mut().enumerate() {
                let pre = dot(self.input_weights.row(j), &z) + self.biases[j];
                *o = self.params.activation.apply(pre);
            }
            out[l] = 1.0;
        }
        h
    }

    pub fn predict_row(&self, row: &[f64], scratch: &mut [f64]) -> f64 {
        self.scaler.transform_into(row, scratch);
        let l = self.params.hidden_width;
        let mut acc = 0.0;
        for j in 0..l {
            let pre = dot(self.input_weights.row(j), scratch) + self.biases[j];
            acc += self.params.activation.apply(pre) * self.output_weights[j];
        }
        acc + self.output_weights[l]
    }

    pub fn check_dims(&self) -> Result<(), ElmError> {
        let (l, d) = (self.params.hidden_width, self.params.input_dim);
        let ok = self.input_weights.rows() == l
            && self.input_weights.cols() == d
            && self.biases.len() == l
            && self.output_weights.len() == l + 1
            && self.scaler.means.len() == d
            && self.scaler.sds.len() == d;
        if !ok {
            return Err(ElmError::InvalidParams("model dimensions are inconsistent".into()));
        }
        if !self.scaler.sds.iter().all(|s| *s > 0.0) {
            return Err(ElmError::InvalidParams("scaler sds must be positive".into()));
        }
        Ok(())
    }
}

/// Predictions for each row of `x` (`m × d`).
pub fn predict_elm(model: &ElmModel, x: &Matrix) -> Result<Vec<f64>, ElmError> {
    if x.rows() == 0 {
        return Ok(Vec::new());
    }
    if x.cols() != model.input_dim() {
        return Err(ElmError::Shape { expected: model.input_dim(), got: x.cols() });
    }
    check_finite(x)?;
    let mut scratch = alloc::vec![0.0; x.cols()];
    Ok((0..x.rows()).map(|r| model.predict_row(x.row(r), &mut scratch)).collect())
}

/// Root mean squared prediction error on a held-out set.
pub fn validation_rmse(model: &ElmModel, x_val: &Matrix, y_val: &[f64]) -> Result<f64, ElmError> {
    if x_val.rows() == 0 || y_val.is_empty() {
        return Err(ElmError::EmptyInput);
    }
    if x_val.rows() != y_val.len() {
        return Err(ElmError::Shape { expected: x_val.rows(), got: y_val.len() });
    }
    let pred = predict_elm(model, x_val)?;
    Ok(rmse(&pred, y_val))
}

pub(crate) fn rmse(pred: &[f64], actual: &[f64]) -> f64 {
    let ss: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    libm::sqrt(ss / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn grid(n: usize) -> (Matrix, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64).collect();
        let ys = xs.iter().map(|x| libm::sin(*x)).collect();
        (Matrix::from_row_major(n, 1, xs), ys)
    }

    fn p1(l: usize, lambda: f64) -> ElmParams {
        ElmParams { hidden_width: l, ridge_lambda: lambda, input_dim: 1, ..ElmParams::default() }
    }

    #[test]
    fn rmse_hand_values() {
        assert_eq!(rmse(&[3.0], &[0.0]), 3.0);
        assert!((rmse(&[3.0, 4.0], &[0.0, 0.0]) - libm::sqrt(12.5)).abs() < 1e-15);
        assert!((libm::sqrt(12.5) - 3.5355).abs() < 1e-4);
    }

    #[test]
    fn validation_rmse_zero_on_own_predictions() {
        let (x, y) = grid(50);
        let m = train_elm(&x, &y, &p1(10, 1e-3)).unwrap();
        let pred = predict_elm(&m, &x).unwrap();
        assert_eq!(validation_rmse(&m, &x, &pred).unwrap(), 0.0);
        assert_eq!(validation_rmse(&m, &Matrix::zeros(0, 1), &[]), Err(ElmError::EmptyInput));
    }

    #[test]
    fn insufficient_and_mismatched_inputs() {
        let x = Matrix::from_row_major(1, 1, vec![1.0]);
        assert_eq!(train_elm(&x, &[1.0], &p1(5, 0.0)).unwrap_err(), ElmError::InsufficientData(1));
        let (x, y) = grid(10);
        assert!(matches!(train_elm(&x, &y[..9], &p1(5, 0.0)), Err(ElmError::Shape { .. })));
        let m = train_elm(&x, &y, &p1(5, 1e-3)).unwrap();
        let x2 = Matrix::zeros(3, 2);
        assert!(matches!(predict_elm(&m, &x2), Err(ElmError::Shape { expected: 1, got: 2 })));
        assert_eq!(predict_elm(&m, &Matrix::zeros(0, 1)).unwrap(), Vec::<f64>::new());
        let bad = Matrix::from_row_major(2, 1, vec![1.0, f64::NAN]);
        assert_eq!(train_elm(&bad, &[1.0, 2.0], &p1(5, 0.0)).unwrap_err(), ElmError::NonFinite);
    }

    #[test]
    fn constant_response_is_reproduced() {
        let (x, _) = grid(200);
        let y = vec![123.5; 200];
        for act in [Activation::Sigmoid, Activation::Tanh] {
            let p = ElmParams { activation: act, ..p1(30, 1e-3) };
            let m = train_elm(&x, &y, &p).unwrap();
            let probe = Matrix::from_row_major(3, 1, vec![-2.5, 0.1, 2.9]);
            for v in predict_elm(&m, &probe).unwrap() {
                assert!((v - 123.5).abs() < 1e-6, "{v}");
            }
        }
    }

    #[test]
    fn singular_unregularised_system_falls_back() {
        // more hidden units than rows makes HᵀH singular
        let (x, y) = grid(8);
        let m = train_elm(&x, &y, &p1(40, 0.0)).unwrap();
        assert_eq!(m.solver, Solver::MinNorm);
        let pred = predict_elm(&m, &x).unwrap();
        let sd = crate::stats::sample_sd(&y).unwrap();
        assert!(rmse(&pred, &y) <= 1e-6 * sd);
    }

    #[test]
    fn permuting_rows_permutes_predictions() {
        let (x, y) = grid(40);
        let m = train_elm(&x, &y, &p1(12, 1e-3)).unwrap();
        let probe = Matrix::from_row_major(3, 1, vec![0.5, -1.0, 2.0]);
        let swapped = Matrix::from_row_major(3, 1, vec![2.0, 0.5, -1.0]);
        let a = predict_elm(&m, &probe).unwrap();
        let b = predict_elm(&m, &swapped).unwrap();
        assert_eq!(a, vec![b[1], b[2], b[0]]);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = grid(100);
        let a = train_elm(&x, &y, &p1(20, 1e-3)).unwrap();
        let b = train_elm(&x, &y, &p1(20, 1e-3)).unwrap();
        assert_eq!(a, b);
        assert!(a.input_weights.as_slice().iter().chain(&a.biases).all(|w| (-1.0..=1.0).contains(w)));
        a.check_dims().unwrap();
    }
}
