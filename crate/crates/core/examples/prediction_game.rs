//! Plays one episode of the Prediction Game with uniformly random agents and
//! prints what each agent sees, then repeats it blind.
//!
//! `cargo run --example prediction_game`

use predgame::env::{EnvConfig, MultiAgentEnv, MultiDiscreteAction, ObservationMode, PredictionGame};
use predgame::SimRng;
use rand::{Rng, SeedableRng};

fn play(mode: ObservationMode) -> Result<(), Box<dyn std::error::Error>> {
    let mut env = PredictionGame::new(EnvConfig { observation: mode, seed: 7, ..EnvConfig::default() })?;
    let mut rng = SimRng::seed_from_u64(7);
    let spec = env.action_spec();
    let mut obs = env.reset();
    let mut total = 0.0;
    println!("{mode:?}: {} agents, {} heads of {} actions", env.n_learners(), spec.n_heads, spec.n_actions);
    for t in 0.. {
        let actions: Vec<MultiDiscreteAction> = (0..env.n_learners())
            .map(|_| {
                let comps: Vec<usize> = (0..spec.n_heads).map(|_| rng.random_range(0..spec.n_actions)).collect();
                MultiDiscreteAction::from_components(&comps)
            })
            .collect();
        let step = env.step(&actions)?;
        total += step.reward;
        let own: Vec<usize> = actions.iter().map(|a| a.components()[0]).collect();
        println!("  t={t} own actions {own:?} agent 0 saw {:?} reward {:.3}", obs.per_agent[0], step.reward);
        if step.done {
            break;
        }
        obs = step.obs;
    }
    println!("  episode return {total:.3} (random play expects 2.5)\n");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    play(ObservationMode::Sighted)?;
    play(ObservationMode::Blind)
}
