use rayon::prelude::*;

use super::digamma::{digamma_unchecked, DigammaTable};
use super::neighbors::NeighborIndex;
use super::{jittered, Estimator, MIEstimate, MiError};

fn is_constant(data: &[f64], dim: usize) -> bool {
    data.chunks_exact(dim).all(|row| row == &data[..dim])
}

/// Kraskov–Stögbauer–Grassberger estimator (variant 1, max-norm), in nats:
/// `ψ(k) + ψ(N) − ⟨ψ(n_x + 1) + ψ(n_y + 1)⟩`.
///
/// `x` is `[n, dx]` and `y` is `[n, dy]`, row-major. Ties are broken by a
/// seeded jitter of `1e-10 ×` per-dimension range before the search.
pub fn mi_ksg(x: &[f64], dx: usize, y: &[f64], dy: usize, k: usize, seed: u64) -> Result<MIEstimate, MiError> {
    if dx == 0 || dy == 0 || x.len() % dx != 0 || y.len() % dy != 0 || x.len() / dx != y.len() / dy {
        return Err(MiError::Shape(format!(
            "x [{}/{dx}] and y [{}/{dy}] must have the same number of rows",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() / dx;
    if n < 2 {
        return Err(MiError::InsufficientData(format!("KSG needs at least 2 samples, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(MiError::InvalidK { k, n });
    }
    if is_constant(x, dx) || is_constant(y, dy) {
        return Err(MiError::Degenerate("all samples of one variable are identical".into()));
    }
    let x = jittered(x, dx, seed);
    let y = jittered(y, dy, seed.wrapping_add(1));
    let dj = dx + dy;
    let mut joint = Vec::with_capacity(n * dj);
    for i in 0..n {
        joint.extend_from_slice(&x[i * dx..(i + 1) * dx]);
        joint.extend_from_slice(&y[i * dy..(i + 1) * dy]);
    }
    let jt = NeighborIndex::new(&joint, dj);
    let xt = NeighborIndex::new(&x, dx);
    let yt = NeighborIndex::new(&y, dy);
    let table = DigammaTable::new(n);
    let per_point: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let eps = jt
                .kth_distance(&joint[i * dj..(i + 1) * dj], k, Some(i))
                .expect("k < n guarantees k neighbours");
            let nx = xt.count_within(&x[i * dx..(i + 1) * dx], eps, true, Some(i));
            let ny = yt.count_within(&y[i * dy..(i + 1) * dy], eps, true, Some(i));
            table.get(nx + 1) + table.get(ny + 1)
        })
        .collect();
    let mean = per_point.iter().sum::<f64>() / n as f64;
    let value = digamma_unchecked(k as f64) + digamma_unchecked(n as f64) - mean;
    Ok(MIEstimate::nats(value, Estimator::Ksg, Some(k), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = SimRng::seed_from_u64(seed);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x.push(a);
            y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        (x, y)
    }

    #[test]
    fn independent_normals_near_zero() {
        let (x, y) = gaussian_pair(10_000, 0.0, 1);
        let e = mi_ksg(&x, 1, &y, 1, 3, 0).unwrap();
        assert!(e.value.abs() <= 0.05, "{}", e.value);
    }

    #[test]
    fn correlated_normals_match_closed_form() {
        let truth = -0.5 * (1.0f64 - 0.81).ln();
        assert!((truth - 0.8304).abs() < 1e-4);
        let (x, y) = gaussian_pair(10_000, 0.9, 2);
        let e = mi_ksg(&x, 1, &y, 1, 3, 0).unwrap();
        assert!((e.value - truth).abs() <= 0.05, "{}", e.value);
    }

    #[test]
    fn error_shrinks_with_sample_size() {
        let truth = -0.5 * (1.0f64 - 0.81).ln();
        let err = |n: usize| {
            (0..4)
                .map(|s| (mi_ksg(&gaussian_pair(n, 0.9, 10 + s).0, 1, &gaussian_pair(n, 0.9, 10 + s).1, 1, 3, s).unwrap().value - truth).abs())
                .sum::<f64>()
                / 4.0
        };
        let (e1, e2, e3) = (err(500), err(2000), err(10_000));
        assert!(e3 <= e2 && e2 <= e1, "{e1} {e2} {e3}");
    }

    #[test]
    fn exact_dependence_grows_with_n() {
        let mut last = f64::NEG_INFINITY;
        for n in [200, 1000, 5000] {
            let (x, _) = gaussian_pair(n, 0.0, 3);
            let v = mi_ksg(&x, 1, &x, 1, 3, 0).unwrap().value;
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn argument_errors() {
        let x = [0.0, 1.0, 2.0];
        assert!(matches!(mi_ksg(&x, 1, &x, 1, 3, 0), Err(MiError::InvalidK { .. })));
        assert!(matches!(mi_ksg(&x, 1, &x[..2], 1, 1, 0), Err(MiError::Shape(_))));
        assert!(matches!(mi_ksg(&[1.0; 5], 1, &[2.0; 5], 1, 1, 0), Err(MiError::Degenerate(_))));
    }
}
