use std::collections::BTreeMap;

use rayon::prelude::*;

use super::digamma::{digamma_unchecked, DigammaTable};
use super::neighbors::NeighborIndex;
use super::{jittered, Estimator, MIEstimate, MiError};

/// Samples grouped by discrete label, in label order.
fn classes(labels: &[u64]) -> BTreeMap<u64, Vec<usize>> {
    let mut c: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        c.entry(l).or_default().push(i);
    }
    c
}

/// Removes samples whose label occurs at most `k` times. Returns the kept
/// points, kept labels, and `(label, count)` of every dropped class.
pub fn drop_rare_classes(x: &[f64], dim: usize, labels: &[u64], k: usize) -> (Vec<f64>, Vec<u64>, Vec<(u64, usize)>) {
    let groups = classes(labels);
    let dropped: Vec<(u64, usize)> = groups
        .iter()
        .filter(|(_, m)| m.len() <= k)
        .map(|(&l, m)| (l, m.len()))
        .collect();
    let mut kx = Vec::with_capacity(x.len());
    let mut kl = Vec::with_capacity(labels.len());
    for (i, &l) in labels.iter().enumerate() {
        if groups[&l].len() > k {
            kx.extend_from_slice(&x[i * dim..(i + 1) * dim]);
            kl.push(l);
        }
    }
    (kx, kl, dropped)
}

/// Ross estimator for a continuous `x: [n, dim]` and discrete labels, in
/// nats: `ψ(N) + ψ(k) − ⟨ψ(N_c)⟩ − ⟨ψ(m)⟩`.
///
/// `N_c` is the size of the sample's class (itself included); `m` counts
/// all other samples within the distance to the `k`-th same-class
/// neighbour, that neighbour included. Max-norm distances, seeded jitter.
pub fn mi_ross(x: &[f64], dim: usize, labels: &[u64], k: usize, seed: u64) -> Result<MIEstimate, MiError> {
    if dim == 0 || x.len() % dim != 0 || x.len() / dim != labels.len() {
        return Err(MiError::Shape(format!(
            "x has {} values for dim {dim} but there are {} labels",
            x.len(),
            labels.len()
        )));
    }
    let n = labels.len();
    if n < 2 {
        return Err(MiError::InsufficientData(format!("Ross estimator needs at least 2 samples, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(MiError::InvalidK { k, n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(MiError::Domain("continuous samples must be finite".into()));
    }
    let groups = classes(labels);
    if groups.len() < 2 {
        return Err(MiError::InsufficientData("Ross estimator needs at least two classes".into()));
    }
    if let Some((&class, members)) = groups.iter().find(|(_, m)| m.len() <= k) {
        return Err(MiError::InsufficientClass { class, count: members.len(), k });
    }
    let x = jittered(x, dim, seed);
    let all = NeighborIndex::new(&x, dim);
    let table = DigammaTable::new(n);
    let mut psi_m = vec![0.0; n];
    let mut psi_class = 0.0;
    for members in groups.values() {
        let mut pts = Vec::with_capacity(members.len() * dim);
        for &i in members {
            pts.extend_from_slice(&x[i * dim..(i + 1) * dim]);
        }
        let within_class = NeighborIndex::new(&pts, dim);
        let vals: Vec<(usize, f64)> = members
            .par_iter()
            .enumerate()
            .map(|(slot, &i)| {
                let q = &x[i * dim..(i + 1) * dim];
                let d = within_class.kth_distance(q, k, Some(slot)).expect("class larger than k");
                let m = all.count_within(q, d, false, Some(i));
                (i, table.get(m))
            })
            .collect();
        for (i, v) in vals {
            psi_m[i] = v;
        }
        psi_class += members.len() as f64 * table.get(members.len());
    }
    let nf = n as f64;
    let value = digamma_unchecked(nf) + digamma_unchecked(k as f64) - psi_class / nf - psi_m.iter().sum::<f64>() / nf;
    Ok(MIEstimate::nats(value, Estimator::Ross, Some(k), n))
}
