//! Descriptive statistics with population conventions.
//!
//! Variance and covariance divide by `n`. Skewness is `m3 / m2^1.5` and
//! kurtosis is excess (`m4 / m2^2 - 3`). A zero-variance input yields 0 for
//! skewness, kurtosis and correlation. Empty inputs yield 0 everywhere.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn central_moment(xs: &[f64], mu: f64, k: i32) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|x| (x - mu).powi(k)).sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    central_moment(xs, mean(xs), 2)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Sample standard deviation (n - 1); used for reporting spread across repetitions.
pub fn sample_std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().reduce(f64::min).unwrap_or(0.0)
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().reduce(f64::max).unwrap_or(0.0)
}

fn finite_or_zero(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

pub fn skewness(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    let m2 = central_moment(xs, mu, 2);
    if m2 <= 0.0 {
        return 0.0;
    }
    finite_or_zero(central_moment(xs, mu, 3) / m2.powf(1.5))
}

pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    let m2 = central_moment(xs, mu, 2);
    if m2 <= 0.0 {
        return 0.0;
    }
    finite_or_zero(central_moment(xs, mu, 4) / (m2 * m2) - 3.0)
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.is_empty() {
        return 0.0;
    }
    let (mx, my) = (mean(xs), mean(ys));
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.len() as f64
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (vx, vy) = (variance(xs), variance(ys));
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    finite_or_zero((covariance(xs, ys) / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// `[mean, std, median, min, max]`.
pub fn five_number(xs: &[f64]) -> [f64; 5] {
    [mean(xs), std_dev(xs), median(xs), min(xs), max(xs)]
}

/// Pearson correlation that reports zero variance instead of hiding it.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (vx, vy) = (variance(xs), variance(ys));
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some((covariance(xs, ys) / (vx.sqrt() * vy.sqrt())).clamp(-1.0, 1.0))
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let vx = variance(xs);
    if vx <= 0.0 {
        return None;
    }
    Some(covariance(xs, ys) / vx)
}

/// Average ranks (1-based), ties share their mean rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    pearson(&ranks(xs), &ranks(ys))
}
