//! Direct-formula reimplementations checked against the library on random
//! fixtures.

mod common;

use elm_metalearn::dataset::{ColumnData, Dataset};
use elm_metalearn::elm::rmse;
use elm_metalearn::evaluation::{pearson, rae};
use elm_metalearn::meta_features::{extract_meta_features, kurtosis, skewness, ExtractorConfig};
use elm_metalearn::stats::{quantile_sorted, sorted_copy};
use rand::Rng;

const TOL: f64 = 1e-9;
const FIXTURES: u64 = 50;

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let m = sum / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn oracle_skew(xs: &[f64]) -> f64 {
    let (m2, m3, _) = moments(xs);
    m3 / (m2 * m2.sqrt())
}

fn oracle_kurt(xs: &[f64]) -> f64 {
    let (m2, _, m4) = moments(xs);
    m4 / (m2 * m2) - 3.0
}

/// Linear-interpolation quantile by rank, written from the definition.
fn oracle_quantile(xs: &[f64], p: f64) -> f64 {
    let mut s = xs.to_vec();
    // insertion sort keeps this independent of the library's sort
    for i in 1..s.len() {
        let mut j = i;
        while j > 0 && s[j - 1] > s[j] {
            s.swap(j - 1, j);
            j -= 1;
        }
    }
    let h = p * (s.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

fn oracle_pop_std(xs: &[f64]) -> f64 {
    moments(xs).0.sqrt()
}

fn oracle_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Neighbour distances without sorting: each value's predecessor and
/// successor in a stable order are found by scanning.
fn oracle_neighbor(t: &[f64]) -> f64 {
    let before = |j: usize, i: usize| t[j] < t[i] || (t[j] == t[i] && j < i);
    let mut best = 0.0f64;
    for i in 0..t.len() {
        let pred = (0..t.len()).filter(|&j| j != i && before(j, i)).map(|j| t[j]).fold(f64::NEG_INFINITY, f64::max);
        let succ = (0..t.len()).filter(|&j| j != i && before(i, j)).map(|j| t[j]).fold(f64::INFINITY, f64::min);
        let mut d = Vec::new();
        if pred.is_finite() {
            d.push(t[i] - pred);
        }
        if succ.is_finite() {
            d.push(succ - t[i]);
        }
        best = best.max(d.iter().sum::<f64>() / d.len() as f64);
    }
    best
}

/// R² from the normal equations solved by Gaussian elimination with partial
/// pivoting. Symbolic columns use reference coding (first level by name
/// dropped), which spans the same space as full one-hot plus intercept.
fn oracle_r2(d: &Dataset, binarized: bool) -> f64 {
    let n = d.n_rows();
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut width = 0;
    for c in &d.features {
        match &c.data {
            ColumnData::Continuous(v) => {
                cols.push(v.clone());
                width += 1;
            }
            ColumnData::Symbolic { categories, codes } if binarized => {
                let mut present: Vec<&String> = codes.iter().map(|&k| &categories[k]).collect();
                present.sort();
                present.dedup();
                width += present.len();
                for name in present.iter().skip(1) {
                    cols.push(codes.iter().map(|&k| if &&categories[k] == name { 1.0 } else { 0.0 }).collect());
                }
            }
            _ => {}
        }
    }
    if width == 0 {
        return 0.0;
    }
    if n <= width {
        return 1.0;
    }
    let p = cols.len();
    let y = &d.target;
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            a[r][c] = (0..n).map(|i| cols[r][i] * cols[c][i]).sum();
        }
        a[r][p] = (0..n).map(|i| cols[r][i] * y[i]).sum();
    }
    for k in 0..p {
        let piv = (k..p).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        for r in k + 1..p {
            let f = a[r][k] / a[k][k];
            for c in k..=p {
                a[r][c] -= f * a[k][c];
            }
        }
    }
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = (k + 1..p).map(|c| a[k][c] * beta[c]).sum();
        beta[k] = (a[k][p] - s) / a[k][k];
    }
    let m = oracle_mean(y);
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        let fit: f64 = (0..p).map(|c| beta[c] * cols[c][i]).sum();
        ss_res += (y[i] - fit).powi(2);
        ss_tot += (y[i] - m).powi(2);
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

fn oracle_outliers(xs: &[f64]) -> (bool, f64) {
    let q1 = oracle_quantile(xs, 0.25);
    let q3 = oracle_quantile(xs, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let any = xs.iter().any(|&x| x < lo || x > hi);
    let mut sev = 0.0f64;
    if iqr > 0.0 {
        for &x in xs {
            if x < lo {
                sev = sev.max((lo - x) / iqr);
            }
            if x > hi {
                sev = sev.max((x - hi) / iqr);
            }
        }
    }
    (any, sev)
}

fn oracle_cv_category(t: &[f64]) -> f64 {
    let m = oracle_mean(t).abs();
    if m == 0.0 {
        return 2.0;
    }
    let cv = oracle_pop_std(t) / m;
    if cv < 0.5 {
        0.0
    } else if cv < 1.0 {
        1.0
    } else {
        2.0
    }
}

fn oracle_meta_features(d: &Dataset) -> [f64; 16] {
    let conts: Vec<&[f64]> = d.features.iter().filter_map(|c| c.as_continuous()).collect();
    let k = conts.len() as f64;
    let skews: Vec<f64> = conts.iter().map(|c| oracle_skew(c)).collect();
    let kurts: Vec<f64> = conts.iter().map(|c| oracle_kurt(c)).collect();
    let t = &d.target;
    let corr = conts.iter().map(|c| oracle_pearson(c, t).abs()).fold(0.0, f64::max);
    let n_out = conts.iter().filter(|c| oracle_outliers(c).0).count() as f64;
    let (t_out, sev) = oracle_outliers(t);
    let abs_t: Vec<f64> = t.iter().map(|v| v.abs()).collect();
    [
        skews.iter().sum::<f64>() / k,
        kurts.iter().sum::<f64>() / k,
        skews.iter().map(|s| s.abs()).sum::<f64>() / k,
        oracle_neighbor(t),
        corr,
        d.features.len() as f64,
        d.n_rows() as f64,
        n_out,
        n_out / k.max(1.0),
        oracle_r2(d, false),
        oracle_r2(d, true),
        oracle_cv_category(&abs_t),
        oracle_cv_category(t),
        if t_out { 1.0 } else { 0.0 },
        sev,
        if oracle_pop_std(t) > oracle_mean(t) { 1.0 } else { 0.0 },
    ]
}

#[test]
fn extractor_matches_oracle_on_random_datasets() {
    let mut r = common::rng(101);
    for fixture in 0..FIXTURES {
        let rows = r.random_range(12..40);
        let cont = r.random_range(1..4);
        let symbolic = fixture % 2 == 0;
        let mut d = common::random_dataset(&mut r, rows, cont, symbolic);
        if fixture % 5 == 0 {
            // inject a gross target outlier so the severity path is exercised
            d.target[0] += 500.0;
        }
        let got = extract_meta_features(&d, &ExtractorConfig::default()).unwrap().features;
        let want = oracle_meta_features(&d);
        for (j, (g, w)) in got.0.iter().zip(&want).enumerate() {
            assert!((g - w).abs() <= TOL, "fixture {fixture} feature f{}: {g} vs {w}", j + 1);
        }
    }
}

#[test]
fn moment_and_quantile_functions_match_oracle() {
    let mut r = common::rng(7);
    for _ in 0..FIXTURES {
        let n = r.random_range(3..60);
        let xs: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0f64).powi(3)).collect();
        assert!((skewness(&xs).unwrap() - oracle_skew(&xs)).abs() <= TOL);
        assert!((kurtosis(&xs).unwrap() - oracle_kurt(&xs)).abs() <= TOL);
        let s = sorted_copy(&xs);
        for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!((quantile_sorted(&s, p) - oracle_quantile(&xs, p)).abs() <= TOL);
        }
        assert!((elm_metalearn::meta_features::max_mean_neighbor_distance(&xs) - oracle_neighbor(&xs)).abs() <= TOL);
    }
}

#[test]
fn error_metrics_match_oracle() {
    let mut r = common::rng(8);
    for _ in 0..FIXTURES {
        let n = r.random_range(2..80);
        let p: Vec<f64> = (0..n).map(|_| r.random_range(0.0..300.0)).collect();
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.0..300.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(0.0..300.0)).collect();

        let mut sse = 0.0;
        for i in 0..n {
            sse += (p[i] - a[i]) * (p[i] - a[i]);
        }
        assert!((rmse(&p, &a).unwrap().value - (sse / n as f64).sqrt()).abs() <= TOL);

        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            num += (p[i] - a[i]).abs();
            den += (b[i] - a[i]).abs();
        }
        let got = rae(&p, &a, &b).unwrap().value;
        assert!((got - 100.0 * num / den).abs() <= 1e-10);

        let got = pearson(&p, &a).unwrap().value;
        assert!((got - oracle_pearson(&p, &a)).abs() <= 1e-10);
    }
}
