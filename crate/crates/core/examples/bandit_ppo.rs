//! PPO on a two-armed bandit: the smallest end-to-end learning problem.
//!
//! `cargo run --release --example bandit_ppo`

use predgame::env::{MultiAgentEnv, TwoArmedBandit};
use predgame::nn::categorical::softmax;
use predgame::nn::{Activation, Arch, Policy, Tensor};
use predgame::ppo::{PpoConfig, Trainer};
use predgame::SimRng;
use rand::SeedableRng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = PpoConfig { total_timesteps: 50_000, num_steps: 64, num_envs: 8, learning_rate: 3e-3, ..PpoConfig::default() };
    let envs = vec![TwoArmedBandit::new(); cfg.num_envs];
    let mut rng = SimRng::seed_from_u64(0);
    let policy = Policy::new(Arch::Ff, 1, 16, envs[0].action_spec(), Activation::Relu, &mut rng);
    let mut trainer = Trainer::new(envs, vec![policy], cfg, 0)?;
    let obs = Tensor::from_vec(&[1, 1], vec![1.0])?;
    trainer.train(|m, t| {
        if m.update % 10 == 0 {
            let out = t.policies()[0].infer(&obs, &mut Tensor::zeros(&[1, 0]), &[true])?;
            println!("update {:>3}  mean reward {:.3}  P(paying arm) {:.3}", m.update, m.mean_return, softmax(out.logits.row(0))[0]);
        }
        Ok(())
    })?;
    Ok(())
}
