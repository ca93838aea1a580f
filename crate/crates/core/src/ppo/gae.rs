/// Generalized advantage estimation over time-major rows `t · num_envs + e`.
///
/// `dones[t]` marks transition `t` as terminal, which cuts both the
/// bootstrap and the advantage trace. Returns `(advantages, targets)` with
/// `targets = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: &[f64],
    num_envs: usize,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let rows = rewards.len();
    assert_eq!(values.len(), rows);
    assert_eq!(dones.len(), rows);
    assert_eq!(bootstrap.len(), num_envs);
    assert_eq!(rows % num_envs, 0);
    let steps = rows / num_envs;
    let mut adv = vec![0.0; rows];
    for e in 0..num_envs {
        let mut next_value = bootstrap[e];
        let mut next_adv = 0.0;
        for t in (0..steps).rev() {
            let k = t * num_envs + e;
            let live = if dones[k] { 0.0 } else { 1.0 };
            let delta = rewards[k] + gamma * next_value * live - values[k];
            next_adv = delta + gamma * lambda * live * next_adv;
            adv[k] = next_adv;
            next_value = values[k];
        }
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}
