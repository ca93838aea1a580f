use super::EnvError;

/// Shape of a multi-discrete action: `n_heads` categorical components with
/// `n_actions` choices each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpec {
    pub n_heads: usize,
    pub n_actions: usize,
}

impl ActionSpec {
    /// Number of distinct joint symbols, `n_actions ^ n_heads`.
    pub fn n_symbols(&self) -> usize {
        self.n_actions.pow(self.n_heads as u32)
    }
}

/// An agent's own action together with its predictions of every other agent.
///
/// `predictions[j]` targets the j-th other agent in increasing agent-index
/// order, skipping the acting agent itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiDiscreteAction {
    pub own: usize,
    pub predictions: Vec<usize>,
}

impl MultiDiscreteAction {
    pub fn new(own: usize, predictions: Vec<usize>) -> Self {
        Self { own, predictions }
    }

    /// Builds an action from head components `[own, pred_0, pred_1, ...]`.
    pub fn from_components(components: &[usize]) -> Self {
        Self {
            own: components[0],
            predictions: components[1..].to_vec(),
        }
    }

    pub fn components(&self) -> Vec<usize> {
        let mut c = Vec::with_capacity(1 + self.predictions.len());
        c.push(self.own);
        c.extend_from_slice(&self.predictions);
        c
    }

    pub fn n_components(&self) -> usize {
        1 + self.predictions.len()
    }

    /// Prediction this agent (`self_index`) made about `target`.
    pub fn prediction_for(&self, self_index: usize, target: usize) -> Option<usize> {
        if target == self_index {
            return None;
        }
        let slot = if target < self_index { target } else { target - 1 };
        self.predictions.get(slot).copied()
    }

    pub fn validate(&self, spec: ActionSpec) -> Result<(), EnvError> {
        if self.n_components() != spec.n_heads {
            return Err(EnvError::InvalidAction(format!(
                "expected {} components, got {}",
                spec.n_heads,
                self.n_components()
            )));
        }
        if let Some(&bad) = self
            .predictions
            .iter()
            .chain(std::iter::once(&self.own))
            .find(|&&a| a >= spec.n_actions)
        {
            return Err(EnvError::InvalidAction(format!(
                "component {bad} out of range [0, {})",
                spec.n_actions
            )));
        }
        Ok(())
    }

    /// Mixed-radix index `own * A^(N-1) + sum_j pred_j * A^(N-2-j)`.
    pub fn flat_index(&self, n_actions: usize) -> usize {
        self.predictions
            .iter()
            .fold(self.own, |acc, &p| acc * n_actions + p)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn from_flat_index(mut index: usize, spec: ActionSpec) -> Self {
        let mut comps = vec![0; spec.n_heads];
        for c in comps.iter_mut().rev() {
            *c = index % spec.n_actions;
            index /= spec.n_actions;
        }
        Self::from_components(&comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prediction_slots_skip_self() {
        let a = MultiDiscreteAction::new(0, vec![1, 2, 3]);
        assert_eq!(a.prediction_for(2, 0), Some(1));
        assert_eq!(a.prediction_for(2, 1), Some(2));
        assert_eq!(a.prediction_for(2, 2), None);
        assert_eq!(a.prediction_for(2, 3), Some(3));
    }

    #[test]
    fn out_of_range_component_rejected() {
        let spec = ActionSpec { n_heads: 4, n_actions: 4 };
        assert!(MultiDiscreteAction::new(0, vec![1, 4, 0]).validate(spec).is_err());
        assert!(MultiDiscreteAction::new(0, vec![1, 2]).validate(spec).is_err());
        assert!(MultiDiscreteAction::new(3, vec![1, 2, 0]).validate(spec).is_ok());
    }

    #[test]
    fn flat_index_is_a_bijection_for_default_game() {
        let spec = ActionSpec { n_heads: 4, n_actions: 4 };
        let mut seen = vec![false; spec.n_symbols()];
        for idx in 0..spec.n_symbols() {
            let a = MultiDiscreteAction::from_flat_index(idx, spec);
            assert_eq!(a.flat_index(4), idx);
            assert!(!seen[idx]);
            seen[idx] = true;
        }
        assert_eq!(MultiDiscreteAction::new(1, vec![0, 0, 0]).flat_index(4), 64);
    }

    proptest! {
        #[test]
        fn flat_index_roundtrip(a in 2usize..6, n in 2usize..5, seed in any::<u64>()) {
            let spec = ActionSpec { n_heads: n, n_actions: a };
            let idx = (seed as usize) % spec.n_symbols();
            let act = MultiDiscreteAction::from_flat_index(idx, spec);
            prop_assert!(act.validate(spec).is_ok());
            prop_assert_eq!(act.flat_index(a), idx);
        }
    }
}
