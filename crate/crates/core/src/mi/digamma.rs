use super::MiError;

/// Digamma function for `x > 0`: upward recurrence to `x ≥ 6`, then the
/// asymptotic series. Absolute error below 1e-12 on `[1e-3, 1e6]`.
pub fn digamma(x: f64) -> Result<f64, MiError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(MiError::Domain(format!("digamma requires a finite x > 0, got {x}")));
    }
    Ok(digamma_unchecked(x))
}

/// `|B_2k| / 2k` for k = 1..7; the asymptotic series alternates in sign.
pub(crate) const SERIES: [f64; 7] = [
    1.0 / 12.0,
    1.0 / 120.0,
    1.0 / 252.0,
    1.0 / 240.0,
    1.0 / 132.0,
    691.0 / 32760.0,
    1.0 / 12.0,
];

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    digamma_with(x, &SERIES)
}

/// Digamma with explicit series coefficients.
pub(crate) fn digamma_with(mut x: f64, coefficients: &[f64; 7]) -> f64 {
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut series = 0.0;
    for c in coefficients.iter().rev() {
        series = c - inv2 * series;
    }
    series *= inv2;
    acc + x.ln() - 0.5 / x - series
}

/// Slow reference: shift to `x ≥ 1000` with compensated summation,
/// then a 12-term asymptotic series (truncation far below 1e-30).
pub(crate) fn digamma_reference(x: f64) -> f64 {
    const B2K: [f64; 12] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
        43867.0 / 798.0,
        -174611.0 / 330.0,
        854513.0 / 138.0,
        -236364091.0 / 2730.0,
    ];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut add = |v: f64| {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    let mut z = x;
    while z < 1000.0 {
        add(-1.0 / z);
        z += 1.0;
    }
    add(z.ln());
    add(-0.5 / z);
    for (i, b) in B2K.iter().enumerate() {
        let two_k = 2.0 * (i + 1) as f64;
        add(-b / (two_k * z.powf(two_k)));
    }
    sum
}

/// Cached `ψ(n)` for positive integers.
pub(crate) struct DigammaTable {
    values: Vec<f64>,
}

impl DigammaTable {
    pub(crate) fn new(max_n: usize) -> Self {
        let values = (0..=max_n)
            .map(|n| if n == 0 { f64::NAN } else { digamma_unchecked(n as f64) })
            .collect();
        Self { values }
    }

    pub(crate) fn get(&self, n: usize) -> f64 {
        self.values.get(n).copied().unwrap_or_else(|| digamma_unchecked(n as f64))
    }
}
