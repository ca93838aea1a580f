use super::Tensor;

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &[Tensor], learning_rate: f64) -> Self {
        Self::with_eps(params, learning_rate, 1e-8)
    }

    pub fn with_eps(params: &[Tensor], learning_rate: f64, eps: f64) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps,
        }
    }

    pub fn update(&mut self, params: &mut [Tensor], grads: &[Tensor]) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient count mismatch");
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step as i32);
        let c2 = 1.0 - b2.powi(self.step as i32);
        let lr = self.learning_rate;
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            assert_eq!(p.shape(), g.shape(), "parameter/gradient shape mismatch");
            for (((p, &g), m), v) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_everything_but_the_counter() {
        let mut p = vec![Tensor::from_vec(&[3], vec![1.0, -2.0, 3.0]).unwrap()];
        let before = p.clone();
        let mut adam = AdamState::new(&p, 0.1);
        adam.update(&mut p, &[Tensor::zeros(&[3])]);
        assert_eq!(p, before);
        assert_eq!(adam.step, 1);
        assert!(adam.first_moment[0].data().iter().all(|&v| v == 0.0));
        assert!(adam.second_moment[0].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![Tensor::from_vec(&[3], vec![0.0; 3]).unwrap()];
        let mut adam = AdamState::new(&p, 0.01);
        let g = Tensor::from_vec(&[3], vec![3.0, -0.5, 100.0]).unwrap();
        adam.update(&mut p, &[g]);
        let want = [-0.01, 0.01, -0.01];
        for (a, b) in p[0].data().iter().zip(want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn minimizes_a_parabola() {
        let mut p = vec![Tensor::from_vec(&[1], vec![1.0]).unwrap()];
        let mut adam = AdamState::new(&p, 0.1);
        for _ in 0..100 {
            let x = p[0].data()[0];
            adam.update(&mut p, &[Tensor::from_vec(&[1], vec![2.0 * x]).unwrap()]);
        }
        assert!(p[0].data()[0].abs() < 0.1);
    }
}
