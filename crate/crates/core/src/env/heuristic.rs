use rand::Rng;

/// Scripted periodic partner.
///
/// Repeats each action for `cycle_len` steps and walks the action set modulo
/// `n_actions`, offset by its agent index and a per-episode phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicPolicy {
    pub agent_index: usize,
    pub cycle_len: usize,
    pub phase: usize,
    pub n_actions: usize,
}

impl HeuristicPolicy {
    pub fn new(agent_index: usize, cycle_len: usize, n_actions: usize) -> Self {
        assert!(cycle_len > 0, "cycle length must be positive");
        Self {
            agent_index,
            cycle_len,
            phase: 0,
            n_actions,
        }
    }

    pub fn with_phase(mut self, phase: usize) -> Self {
        assert!(phase < self.cycle_len, "phase must lie in [0, cycle_len)");
        self.phase = phase;
        self
    }

    /// `((i mod A) + floor(t / k) + phase) mod A`
    pub fn action(&self, t: usize) -> usize {
        let a = self.n_actions;
        ((self.agent_index % a) + t / self.cycle_len + self.phase) % a
    }

    /// The action sequence repeats with this period.
    pub fn period(&self) -> usize {
        self.cycle_len * self.n_actions
    }

    pub fn resample_phase<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.phase = rng.random_range(0..self.cycle_len);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let h0 = HeuristicPolicy::new(0, 3, 4).with_phase(1);
        let seq: Vec<_> = (0..12).map(|t| h0.action(t)).collect();
        assert_eq!(seq, vec![1, 1, 1, 2, 2, 2, 3, 3, 3, 0, 0, 0]);

        let h2 = HeuristicPolicy::new(2, 2, 4);
        let seq: Vec<_> = (0..10).map(|t| h2.action(t)).collect();
        assert_eq!(seq, vec![2, 2, 3, 3, 0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn closed_form_and_period() {
        for &a in &[2usize, 4] {
            for &k in &[1usize, 2, 3, 5] {
                for i in 0..4 {
                    for phase in 0..k {
                        let h = HeuristicPolicy::new(i, k, a).with_phase(phase);
                        for t in 0..10 * k * a {
                            assert_eq!(h.action(t), ((i % a) + t / k + phase) % a);
                            assert_eq!(h.action(t), h.action(t + h.period()));
                        }
                    }
                }
            }
        }
    }
}
