use std::io::Write;

use serde::Serialize;

use crate::mi::TrajectoryLog;

/// Frequency of one action id in one action component of one agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub agent: usize,
    /// 0 is the agent's own action, then one component per prediction head.
    pub component: usize,
    pub action: usize,
    pub count: u64,
    pub frequency: f64,
}

/// Counts every `(agent, component, action)` triple in `log`. `agent_ids`
/// maps learner slots to agent indices. Every bin is emitted, including
/// empty ones, and each `(agent, component)` group sums to the number of
/// decisions that agent made.
pub fn action_histogram(log: &TrajectoryLog, agent_ids: &[usize]) -> Vec<HistogramRow> {
    let (heads, a) = (log.n_heads, log.n_actions);
    let slots = agent_ids.len().max(log.n_agents());
    let mut counts = vec![0u64; slots * heads * a];
    let mut decisions = vec![0u64; slots];
    for s in &log.steps {
        decisions[s.agent] += 1;
        for (c, &act) in s.action.iter().enumerate() {
            counts[(s.agent * heads + c) * a + act] += 1;
        }
    }
    let mut rows = Vec::with_capacity(counts.len());
    for slot in 0..slots {
        for c in 0..heads {
            for act in 0..a {
                let count = counts[(slot * heads + c) * a + act];
                rows.push(HistogramRow {
                    agent: agent_ids.get(slot).copied().unwrap_or(slot),
                    component: c,
                    action: act,
                    count,
                    frequency: if decisions[slot] == 0 { 0.0 } else { count as f64 / decisions[slot] as f64 },
                });
            }
        }
    }
    rows
}

/// Largest single-bin frequency of `agent`'s `component`.
pub fn max_bin_share(rows: &[HistogramRow], agent: usize, component: usize) -> f64 {
    rows.iter()
        .filter(|r| r.agent == agent && r.component == component)
        .map(|r| r.frequency)
        .fold(0.0, f64::max)
}

pub fn write_histogram_csv<W: Write>(out: W, rows: &[HistogramRow]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
