//! Small statistics helpers shared by tests, validation and experiments.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

/// Sample mean and standard error of the mean (zero for one sample).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn std_dev(xs: &[f64]) -> f64 {
    mean_stderr(xs).1 * (xs.len() as f64).sqrt()
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance to `Exp(rate)`.
pub fn ks_exponential(sample: &[f64], rate: f64) -> f64 {
    ks_statistic(sample, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() })
}

/// Observed frequency and its deviation from `p` in binomial standard
/// deviations.
pub fn binomial_z(successes: u64, trials: u64, p: f64) -> (f64, f64) {
    let n = trials as f64;
    let freq = successes as f64 / n;
    let sd = (p * (1.0 - p) / n).sqrt();
    let z = if sd > 0.0 {
        (freq - p) / sd
    } else if freq == p {
        0.0
    } else {
        f64::INFINITY
    };
    (freq, z)
}

/// Upper tail p-value of Pearson's chi-square statistic.
pub fn chi_square_p_value(observed: &[f64], expected: &[f64], dof: usize) -> Result<f64> {
    if observed.len() != expected.len() || dof == 0 {
        return invalid("chi-square needs matching bins and positive dof");
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new(dof as f64).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    Ok(1.0 - dist.cdf(stat))
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| (a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).abs())
        .sum()
}

/// Linear-interpolated quantile of sorted data at level `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_stderr(a);
    let (mb, _) = mean_stderr(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}
