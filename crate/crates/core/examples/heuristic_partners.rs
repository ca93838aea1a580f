//! Scripted cyclic partners: their action streams, and how well a learner
//! that knows the rule but not the phase can predict them.
//!
//! `cargo run --example heuristic_partners`

use predgame::env::{EnvConfig, HeuristicPolicy, MultiAgentEnv, MultiDiscreteAction, PredictionGame};

/// Phases still consistent with everything a partner has done this episode.
struct PhaseTracker {
    agent: usize,
    cycle: usize,
    phases: Vec<usize>,
}

impl PhaseTracker {
    fn new(agent: usize, cycle: usize) -> Self {
        Self { agent, cycle, phases: (0..cycle).collect() }
    }

    fn rule(&self, phase: usize) -> HeuristicPolicy {
        HeuristicPolicy::new(self.agent, self.cycle, 4).with_phase(phase)
    }

    fn predict(&self, t: usize) -> usize {
        self.rule(self.phases[0]).action(t)
    }

    fn observe(&mut self, t: usize, action: usize) {
        let keep: Vec<usize> = self.phases.iter().copied().filter(|&p| self.rule(p).action(t) == action).collect();
        self.phases = keep;
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (agent, cycle, phase) in [(0, 3, 1), (2, 2, 0), (3, 2, 1)] {
        let h = HeuristicPolicy::new(agent, cycle, 4).with_phase(phase);
        let seq: Vec<usize> = (0..12).map(|t| h.action(t)).collect();
        println!("agent {agent}, cycle {cycle}, phase {phase}: {seq:?} (period {})", h.period());
    }

    // Agents 2 and 3 are scripted; both learners predict them with trackers.
    let partners = [(2, 3), (3, 2)];
    let mut env = PredictionGame::with_heuristics(EnvConfig { seed: 3, ..EnvConfig::default() }, &partners)?;
    let episodes = 2000;
    let mut hits = vec![0usize; env.episode_len()];
    for _ in 0..episodes {
        env.reset();
        let mut trackers: Vec<PhaseTracker> = partners.iter().map(|&(a, k)| PhaseTracker::new(a, k)).collect();
        for (t, hit) in hits.iter_mut().enumerate() {
            let guesses: Vec<usize> = trackers.iter().map(|tr| tr.predict(t)).collect();
            let acts = vec![MultiDiscreteAction::from_components(&[0, 0, guesses[0], guesses[1]]); 2];
            env.step(&acts)?;
            let own = env.last_own_actions().unwrap().to_vec();
            for (tr, g) in trackers.iter_mut().zip(&guesses) {
                *hit += usize::from(own[tr.agent] == *g);
                tr.observe(t, own[tr.agent]);
            }
        }
    }
    let acc: Vec<String> = hits.iter().map(|&h| format!("{:.2}", h as f64 / (2 * episodes) as f64)).collect();
    println!("partner prediction accuracy by step: {}", acc.join(" "));
    println!("(one observed action pins the phase; the first step is a 1/cycle guess)");
    Ok(())
}
