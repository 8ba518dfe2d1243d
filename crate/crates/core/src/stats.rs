//! Small statistical helpers: goodness-of-fit tests and summaries.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> TestResult {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = cdf(v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    TestResult {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    TestResult {
        statistic: d,
        p_value: ks_p(d, na * nb / (na + nb)),
    }
}

/// Pearson chi-square test of homogeneity for two count vectors over the
/// same categories. Categories whose pooled expected count in either
/// sample falls below `min_expected` are merged into one bin.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], min_expected: f64) -> TestResult {
    assert_eq!(a.len(), b.len());
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let total = na + nb;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let c = (x + y) as f64;
        if c == 0.0 {
            continue;
        }
        if c * na.min(nb) / total < min_expected {
            pooled.0 += x as f64;
            pooled.1 += y as f64;
        } else {
            bins.push((x as f64, y as f64));
        }
    }
    if pooled.0 + pooled.1 > 0.0 {
        bins.push(pooled);
    }
    let mut stat = 0.0;
    for &(x, y) in &bins {
        let c = x + y;
        let ea = c * na / total;
        let eb = c * nb / total;
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let df = bins.len().saturating_sub(1);
    chi_square_result(stat, df)
}

/// Pearson goodness-of-fit test of counts against category probabilities.
pub fn chi_square_gof(counts: &[u64], probs: &[f64], min_expected: f64) -> TestResult {
    assert_eq!(counts.len(), probs.len());
    let n = counts.iter().sum::<u64>() as f64;
    let mut bins = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        if n * p < min_expected {
            pooled.0 += c as f64;
            pooled.1 += n * p;
        } else {
            bins.push((c as f64, n * p));
        }
    }
    if pooled.1 > 0.0 {
        bins.push(pooled);
    }
    let stat: f64 = bins.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    chi_square_result(stat, bins.len().saturating_sub(1))
}

fn chi_square_result(stat: f64, df: usize) -> TestResult {
    let p = if df == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(df as f64).expect("df > 0").cdf(stat)
    };
    TestResult {
        statistic: stat,
        p_value: p,
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Linear-interpolation quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

/// Total-variation distance between two discrete distributions given as
/// unnormalized weights over the same categories.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    0.5 * p.iter().zip(q).map(|(a, b)| (a / sp - b / sq).abs()).sum::<f64>()
}
