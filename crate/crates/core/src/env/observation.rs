/// Per-agent observation vectors for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct JointObservation {
    pub per_agent: Vec<Vec<f64>>,
}

impl JointObservation {
    pub fn zeros(n_agents: usize, dim: usize) -> Self {
        Self {
            per_agent: vec![vec![0.0; dim]; n_agents],
        }
    }

    pub fn n_agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn dim(&self) -> usize {
        self.per_agent.first().map_or(0, Vec::len)
    }

    pub fn is_all_zero(&self) -> bool {
        self.per_agent.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Blind wrapper: zero every observation, keep dimensions.
pub fn apply_blind(obs: &JointObservation) -> JointObservation {
    JointObservation::zeros(obs.n_agents(), obs.dim())
}

/// One-hot encode the previous own-actions of an agent's two ring neighbours.
pub(crate) fn encode_neighbours(left: usize, right: usize, n_actions: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2 * n_actions];
    v[left] = 1.0;
    v[n_actions + right] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blind_zeroes_and_is_idempotent() {
        let obs = JointObservation {
            per_agent: vec![encode_neighbours(1, 3, 4), encode_neighbours(0, 0, 4)],
        };
        let once = apply_blind(&obs);
        assert_eq!(once.n_agents(), 2);
        assert_eq!(once.dim(), 8);
        assert!(once.is_all_zero());
        assert_eq!(apply_blind(&once), once);
    }
}
