//! Test-only oracles, independent of the library's numerical paths.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` samples of `N(mean, diag(var))`.
pub fn gaussian(rng: &mut ChaCha8Rng, n: usize, mean: &[f64], var: &[f64]) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            mean.iter()
                .zip(var)
                .map(|(m, v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

type Mat = Vec<Vec<f64>>;

fn mean_cov(rows: &[Vec<f64>]) -> (Vec<f64>, Mat) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for i in 0..d {
            mean[i] += r[i] / n;
        }
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    (mean, cov)
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn trace(a: &Mat) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// Characteristic polynomial `xⁿ + c₁xⁿ⁻¹ + … + cₙ` by Faddeev–LeVerrier;
/// returns `[1, c₁, …, cₙ]`.
pub fn char_poly(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut coeffs = vec![1.0];
    let mut m: Mat = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = matmul(a, &m);
        let c_prev = *coeffs.last().unwrap();
        for i in 0..n {
            next[i][i] += c_prev;
        }
        m = next;
        let am = matmul(a, &m);
        coeffs.push(-trace(&am) / k as f64);
    }
    coeffs
}

fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    let n = p.len() - 1;
    p[..n].iter().enumerate().map(|(i, &c)| c * (n - i) as f64).collect()
}

fn bisect(p: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(p, lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let fm = eval(p, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
}

/// All real roots of a polynomial whose roots are all real, ascending.
/// Critical points of `p` (roots of `p'`, found recursively) bracket them.
pub fn real_roots(p: &[f64]) -> Vec<f64> {
    let deg = p.len() - 1;
    if deg == 1 {
        return vec![-p[1] / p[0]];
    }
    let bound = 1.0 + p[1..].iter().map(|c| (c / p[0]).abs()).fold(0.0, f64::max);
    let mut marks = vec![-bound];
    marks.extend(real_roots(&derivative(p)));
    marks.push(bound);
    let mut roots = Vec::with_capacity(deg);
    for w in marks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(p, a), eval(p, b));
        if fa == 0.0 {
            roots.push(a);
        } else if (fa < 0.0) != (fb < 0.0) {
            roots.push(bisect(p, a, b));
        }
    }
    // Double roots sit on a critical point without a sign change.
    while roots.len() < deg {
        let crit = marks[1..marks.len() - 1]
            .iter()
            .copied()
            .min_by(|x, y| eval(p, *x).abs().total_cmp(&eval(p, *y).abs()))
            .unwrap();
        roots.push(crit);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// FID via the spectrum of the dense product `Σa Σb` from its
/// characteristic polynomial.
pub fn fid_oracle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (ma, ca) = mean_cov(a);
    let (mb, cb) = mean_cov(b);
    let mean_term: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum();
    let roots = real_roots(&char_poly(&matmul(&ca, &cb)));
    let tr_sqrt: f64 = roots.iter().map(|r| r.max(0.0).sqrt()).sum();
    mean_term + trace(&ca) + trace(&cb) - 2.0 * tr_sqrt
}

/// `1 − mean_{i<j} cos(uᵢ, uⱼ)` by direct pair enumeration.
pub fn diversity_oracle(vectors: &[Vec<f64>]) -> f64 {
    let cos = |u: &[f64], v: &[f64]| {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        dot / (nu * nv)
    };
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            sum += cos(&vectors[i], &vectors[j]);
            pairs += 1;
        }
    }
    1.0 - sum / pairs as f64
}

/// Random orthogonal matrix by Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Mat {
    let mut q: Mat = Vec::with_capacity(d);
    while q.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for u in &q {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            q.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    q
}

pub fn rotate(rows: &[Vec<f64>], q: &Mat) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| q.iter().map(|qi| qi.iter().zip(r).map(|(a, b)| a * b).sum()).collect())
        .collect()
}
