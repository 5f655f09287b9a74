//! Bias-corrected adaptive-moment (Adam) updates.

use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::tensor::Tensor;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        AdamState {
            first: params.iter().map(Tensor::zeros_like).collect(),
            second: params.iter().map(Tensor::zeros_like).collect(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

pub fn adam_step(params: &mut [Tensor], grads: &[Tensor], state: &mut AdamState, lr: f64) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(NnError::Shape(format!(
            "{} parameters, {} gradients, {} moment slots",
            params.len(),
            grads.len(),
            state.first.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state.first[i].shape() {
            return Err(NnError::Shape(format!("parameter {i}: {:?} vs gradient {:?}", p.shape(), g.shape())));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(state.first.iter_mut().zip(state.second.iter_mut())) {
        let values = p.data_mut().iter_mut().zip(g.data());
        for ((theta, &gi), (mi, vi)) in values.zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut())) {
            *mi = BETA1 * *mi + (1.0 - BETA1) * gi;
            *vi = BETA2 * *vi + (1.0 - BETA2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *theta -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(values: Vec<f64>) -> Vec<Tensor> {
        let n = values.len();
        vec![Tensor::from_rows(1, n, values)]
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = one(vec![0.3, -1.0]);
        let before = p.clone();
        let mut s = AdamState::new(&p);
        for _ in 0..5 {
            adam_step(&mut p, &one(vec![0.0, 0.0]), &mut s, 1e-3).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn first_step_closed_form() {
        let g = [0.5, -2.0, 1e-9, 3.0];
        let mut p = one(vec![0.0; 4]);
        let mut s = AdamState::new(&p);
        let lr = 1e-4;
        adam_step(&mut p, &one(g.to_vec()), &mut s, lr).unwrap();
        for (theta, gi) in p[0].data().iter().zip(g) {
            let expect = -lr * gi / (gi.abs() + EPSILON);
            assert!((theta - expect).abs() < 1e-18, "{theta} vs {expect}");
        }
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let mut p = one(vec![0.0, 0.0]);
        let mut s = AdamState::new(&p);
        let lr = 1e-3;
        let mut last = p[0].data().to_vec();
        for _ in 0..2000 {
            adam_step(&mut p, &one(vec![0.25, -4.0]), &mut s, lr).unwrap();
            let now = p[0].data().to_vec();
            let steps = [now[0] - last[0], now[1] - last[1]];
            assert!(steps[0] < 0.0 && steps[1] > 0.0);
            last = now;
        }
        let delta = [p[0].data()[0], p[0].data()[1]];
        let mut probe = p.clone();
        adam_step(&mut probe, &one(vec![0.25, -4.0]), &mut s, lr).unwrap();
        assert!(((probe[0].data()[0] - delta[0]) + lr).abs() < 1e-9);
        assert!(((probe[0].data()[1] - delta[1]) - lr).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = one(vec![0.0, 0.0]);
        let mut s = AdamState::new(&p);
        assert!(adam_step(&mut p, &one(vec![0.0]), &mut s, 1e-3).is_err());
        assert!(adam_step(&mut p, &[], &mut s, 1e-3).is_err());
    }
}
