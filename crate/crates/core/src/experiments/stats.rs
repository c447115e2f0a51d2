//! Summary statistics for trial aggregates.

use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for a single value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile (type 7), `p` in `[0, 1]`.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Ranks starting at 1, ties get their average rank.
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
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman needs paired samples");
    pearson(&ranks(xs), &ranks(ys))
}

/// Largest sample size for which the null distribution is enumerated.
const EXACT_LIMIT: usize = 8;

/// One-sided p-value for `H₁: ρ < 0`.
///
/// For `n ≤ 8` this is the exact permutation probability
/// `P(ρ_perm ≤ ρ_obs)`; above that, the Student-t approximation
/// `t = ρ √((n−2)/(1−ρ²))` with `n − 2` degrees of freedom.
pub fn spearman_p_negative(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let rho = spearman(xs, ys);
    if n < 3 {
        return 1.0;
    }
    if n <= EXACT_LIMIT {
        let rx = ranks(xs);
        let ry = ranks(ys);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut hits = 0u64;
        let mut total = 0u64;
        let eps = 1e-12;
        permute(&mut perm, 0, &mut |p| {
            let shuffled: Vec<f64> = p.iter().map(|&i| ry[i]).collect();
            total += 1;
            if pearson(&rx, &shuffled) <= rho + eps {
                hits += 1;
            }
        });
        return hits as f64 / total as f64;
    }
    if rho <= -1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    StudentsT::new(0.0, 1.0, df).expect("df > 0").cdf(t)
}

fn permute(v: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}
