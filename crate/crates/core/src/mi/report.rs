use std::io::{Read, Write};

use serde::Serialize;

use super::{MIEstimate, MiError, TrajectoryLog, TrajectoryStep, Units};

/// Per-agent estimates and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct MiReport {
    pub per_agent: Vec<MIEstimate>,
    pub mean: f64,
    pub units: Units,
}

/// Arithmetic mean across agents; all estimates must share units.
pub fn mi_report(estimates: &[MIEstimate]) -> Result<MiReport, MiError> {
    let first = estimates
        .first()
        .ok_or_else(|| MiError::InsufficientData("report needs at least one agent".into()))?;
    if estimates.iter().any(|e| e.units != first.units) {
        return Err(MiError::MixedUnits);
    }
    Ok(MiReport {
        per_agent: estimates.to_vec(),
        mean: estimates.iter().map(|e| e.value).sum::<f64>() / estimates.len() as f64,
        units: first.units,
    })
}

/// One line of the MI report table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiReportRow {
    /// Agent slot, or `mean` for the cross-agent aggregate.
    pub agent: String,
    pub pairing: String,
    pub estimator: String,
    pub k: Option<usize>,
    pub n: usize,
    pub value_nats: f64,
    pub value_bits: f64,
}

impl MiReportRow {
    pub fn new(agent: impl Into<String>, pairing: &str, e: &MIEstimate) -> Self {
        Self {
            agent: agent.into(),
            pairing: pairing.into(),
            estimator: e.estimator.label().into(),
            k: e.k,
            n: e.n,
            value_nats: e.in_nats(),
            value_bits: e.bits(),
        }
    }
}

pub fn write_mi_report_csv<W: Write>(out: W, rows: &[MiReportRow]) -> Result<(), MiError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| MiError::Log(e.to_string()))?;
    }
    w.flush().map_err(|e| MiError::Log(e.to_string()))
}

fn trajectory_header(log: &TrajectoryLog) -> Vec<String> {
    let mut h: Vec<String> = vec!["episode".into(), "t".into(), "agent".into()];
    h.extend((0..log.obs_dim).map(|i| format!("obs_{i}")));
    h.extend((0..log.n_heads).map(|i| format!("act_{i}")));
    h.extend((0..log.hidden_dim).map(|i| format!("h_{i}")));
    h.push("reward".into());
    h
}

/// `episode, t, agent, obs_*, act_*, [h_*], reward`.
pub fn write_trajectory_csv<W: Write>(out: W, log: &TrajectoryLog) -> Result<(), MiError> {
    let err = |e: csv::Error| MiError::Log(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(log)).map_err(err)?;
    for s in &log.steps {
        let mut rec: Vec<String> = vec![s.episode.to_string(), s.t.to_string(), s.agent.to_string()];
        rec.extend(s.obs.iter().map(|v| v.to_string()));
        rec.extend(s.action.iter().map(|v| v.to_string()));
        rec.extend(s.hidden.iter().map(|v| v.to_string()));
        rec.push(s.reward.to_string());
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| MiError::Log(e.to_string()))
}

/// Parses a trajectory log; dimensions are read from the header. The number
/// of actions per head is taken as one more than the largest component seen
/// unless `n_actions` is given.
pub fn read_trajectory_csv<R: Read>(input: R, n_actions: Option<usize>) -> Result<TrajectoryLog, MiError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| MiError::Log(e.to_string()))?.clone();
    let count = |prefix: &str| header.iter().filter(|h| h.starts_with(prefix)).count();
    let (obs_dim, n_heads, hidden_dim) = (count("obs_"), count("act_"), count("h_"));
    let expected: Vec<String> = {
        let mut h: Vec<String> = vec!["episode".into(), "t".into(), "agent".into()];
        h.extend((0..obs_dim).map(|i| format!("obs_{i}")));
        h.extend((0..n_heads).map(|i| format!("act_{i}")));
        h.extend((0..hidden_dim).map(|i| format!("h_{i}")));
        h.push("reward".into());
        h
    };
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(MiError::Log(format!("unexpected header; expected {}", expected.join(","))));
    }
    let mut steps = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| MiError::Log(e.to_string()))?;
        let bad = |what: &str| MiError::Log(format!("row {}: bad {what}", line + 2));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(&header[i]));
        let float = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&header[i]));
        let o = 3;
        let a = o + obs_dim;
        let h = a + n_heads;
        steps.push(TrajectoryStep {
            episode: int(0)?,
            t: int(1)?,
            agent: int(2)?,
            obs: (o..a).map(float).collect::<Result<_, _>>()?,
            action: (a..h).map(int).collect::<Result<_, _>>()?,
            hidden: (h..h + hidden_dim).map(float).collect::<Result<_, _>>()?,
            reward: float(h + hidden_dim)?,
        });
    }
    let n_actions = n_actions.unwrap_or_else(|| steps.iter().flat_map(|s| s.action.iter()).max().map_or(1, |m| m + 1));
    Ok(TrajectoryLog { obs_dim, n_heads, n_actions, hidden_dim, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mi::Estimator;

    fn bits(v: f64) -> MIEstimate {
        MIEstimate { value: v, units: Units::Bits, estimator: Estimator::PlugIn, k: None, n: 10 }
    }

    #[test]
    fn report_means() {
        assert_eq!(mi_report(&[bits(2.0); 4]).unwrap().mean, 2.0);
        assert_eq!(mi_report(&[bits(0.0), bits(8.0)]).unwrap().mean, 4.0);
        let single = mi_report(&[bits(1.25)]).unwrap();
        assert_eq!((single.mean, single.per_agent.len()), (1.25, 1));
        let mixed = [bits(1.0), MIEstimate { units: Units::Nats, ..bits(1.0) }];
        assert!(matches!(mi_report(&mixed), Err(MiError::MixedUnits)));
        assert!(mi_report(&[]).is_err());
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let log = TrajectoryLog {
            obs_dim: 2,
            n_heads: 3,
            n_actions: 4,
            hidden_dim: 2,
            steps: vec![
                TrajectoryStep { episode: 0, t: 0, agent: 0, obs: vec![0.0, 1.0], action: vec![3, 0, 1], hidden: vec![0.125, -0.3], reward: 0.5 },
                TrajectoryStep { episode: 0, t: 0, agent: 1, obs: vec![1.0, 0.0], action: vec![2, 2, 1], hidden: vec![1e-17, 0.9], reward: 0.5 },
            ],
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &log).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("episode,t,agent,obs_0,obs_1,act_0,act_1,act_2,h_0,h_1,reward\n"));
        assert_eq!(read_trajectory_csv(&buf[..], Some(4)).unwrap(), log);
        assert!(read_trajectory_csv("episode,t\n1,2\n".as_bytes(), None).is_err());
    }

    #[test]
    fn report_csv_columns() {
        let mut buf = Vec::new();
        let e = MIEstimate::nats(2f64.ln(), Estimator::Ross, Some(3), 100);
        write_mi_report_csv(&mut buf, &[MiReportRow::new("0", "hidden_action", &e)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("agent,pairing,estimator,k,n,value_nats,value_bits"));
        assert!(lines.next().unwrap().starts_with("0,hidden_action,ross,3,100,0.69314"));
    }
}
