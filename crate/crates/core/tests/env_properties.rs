use predgame::env::{EnvConfig, MultiAgentEnv, MultiDiscreteAction, ObservationMode, PredictionGame};
use proptest::prelude::*;

/// `steps` joint actions of `learners` agents, each with four components.
fn actions_strategy(learners: usize, a: usize, steps: usize) -> impl Strategy<Value = Vec<Vec<Vec<usize>>>> {
    prop::collection::vec(prop::collection::vec(prop::collection::vec(0..a, 4), learners), steps)
}

fn play(env: &mut PredictionGame, script: &[Vec<Vec<usize>>]) -> Vec<(Vec<Vec<f64>>, f64, bool)> {
    let mut out = Vec::new();
    env.reset();
    for joint in script.iter().take(env.episode_len()) {
        let acts: Vec<MultiDiscreteAction> = joint.iter().map(|c| MultiDiscreteAction::from_components(c)).collect();
        let s = env.step(&acts).unwrap();
        out.push((s.obs.per_agent, s.reward, s.done));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rewards_bounded_and_episode_length_exact(script in actions_strategy(4, 4, 10), seed in any::<u64>()) {
        let mut env = PredictionGame::new(EnvConfig { seed, ..EnvConfig::default() }).unwrap();
        let trace = play(&mut env, &script);
        prop_assert_eq!(trace.len(), 10);
        for (t, (_, r, done)) in trace.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(r));
            prop_assert_eq!(*done, t == 9);
            // reward is a multiple of 1 / (learners · (N − 1))
            let scaled = r * 12.0;
            prop_assert!((scaled - scaled.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn sighted_observation_is_two_hot_of_ring_neighbours(script in actions_strategy(4, 4, 10)) {
        let mut env = PredictionGame::new(EnvConfig::default()).unwrap();
        let trace = play(&mut env, &script);
        for (t, (obs, _, _)) in trace.iter().enumerate() {
            for (i, o) in obs.iter().enumerate() {
                prop_assert_eq!(o.len(), 8);
                let left = script[t][(i + 3) % 4][0];
                let right = script[t][(i + 1) % 4][0];
                let mut expect = vec![0.0; 8];
                expect[left] = 1.0;
                expect[4 + right] = 1.0;
                prop_assert_eq!(o, &expect);
            }
        }
    }

    #[test]
    fn blind_agents_see_only_zeros(script in actions_strategy(4, 4, 10)) {
        let cfg = EnvConfig { observation: ObservationMode::Blind, ..EnvConfig::default() };
        let mut env = PredictionGame::new(cfg).unwrap();
        let trace = play(&mut env, &script);
        prop_assert!(trace.iter().all(|(obs, _, _)| obs.iter().flatten().all(|&v| v == 0.0)));
    }

    #[test]
    fn same_seed_same_heuristic_trace(seed in any::<u64>(), script in actions_strategy(2, 4, 10)) {
        let mk = || PredictionGame::with_heuristics(EnvConfig { seed, ..EnvConfig::default() }, &[(2, 3), (3, 2)]).unwrap();
        let (mut a, mut b) = (mk(), mk());
        for _ in 0..3 {
            prop_assert_eq!(play(&mut a, &script), play(&mut b, &script));
        }
    }

    #[test]
    fn perfect_predictions_earn_full_reward(script in prop::collection::vec(prop::collection::vec(0usize..4, 4), 10)) {
        let mut env = PredictionGame::new(EnvConfig::default()).unwrap();
        env.reset();
        for own in &script {
            let acts: Vec<MultiDiscreteAction> = (0..4)
                .map(|i| {
                    let mut comps = vec![own[i]];
                    comps.extend((0..4).filter(|&j| j != i).map(|j| own[j]));
                    MultiDiscreteAction::from_components(&comps)
                })
                .collect();
            prop_assert_eq!(env.step(&acts).unwrap().reward, 1.0);
        }
    }
}

#[test]
fn heuristic_streams_match_closed_form_during_play() {
    let mut env = PredictionGame::with_heuristics(EnvConfig { seed: 9, ..EnvConfig::default() }, &[(2, 3), (3, 2)]).unwrap();
    for _ in 0..50 {
        env.reset();
        let (h2, h3) = (env.heuristic(2).unwrap().clone(), env.heuristic(3).unwrap().clone());
        for t in 0..10 {
            let acts = vec![MultiDiscreteAction::from_components(&[0, 0, 0, 0]); 2];
            env.step(&acts).unwrap();
            let own = env.last_own_actions().unwrap();
            assert_eq!(own[2], h2.action(t));
            assert_eq!(own[3], h3.action(t));
        }
    }
}
