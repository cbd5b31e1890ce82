//! Fréchet distance between Gaussian fits of two embedding clouds.
//!
//! `‖μa − μb‖² + tr(Σa + Σb − 2 (Σa Σb)^½)` with unbiased (N − 1)
//! covariances. The trace of the square root is the sum of square roots of
//! the eigenvalues of the symmetric matrix `Σa^½ Σb Σa^½`, which shares its
//! spectrum with `Σa Σb`. Both square roots come from symmetric
//! eigendecompositions. Eigenvalues in `[-CLAMP_REL_TOL · λmax, 0)` are
//! treated as zero; anything more negative is an error. When either
//! covariance is numerically rank deficient, `REGULARIZATION_EPS · I` is
//! added to both.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingSet;
use crate::error::{Error, Result};

pub const REGULARIZATION_EPS: f64 = 1e-6;
pub const CLAMP_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MIN_PER_CLASS: usize = 2;

const EIGEN_MAX_ITER: usize = 10_000;

/// Sample mean and unbiased covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Moments {
    /// Two-pass estimate over rows in input order. Needs at least 2 rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.as_ref().len() != d) {
            return Err(Error::DimensionMismatch {
                row,
                expected: d,
                found: r.as_ref().len(),
            });
        }
        let mut mean = DVector::zeros(d);
        for r in rows {
            for (m, &x) in mean.iter_mut().zip(r.as_ref()) {
                *m += x;
            }
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        let mut centered = vec![0.0; d];
        for r in rows {
            for (c, (&x, m)) in centered.iter_mut().zip(r.as_ref().iter().zip(mean.iter())) {
                *c = x - m;
            }
            for i in 0..d {
                for j in i..d {
                    cov[(i, j)] += centered[i] * centered[j];
                }
            }
        }
        let denom = (n as f64 - 1.0).max(1.0);
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(Self { n, mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidDetail {
    pub distance: f64,
    pub regularization_used: bool,
}

fn eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, f64::EPSILON, EIGEN_MAX_ITER).ok_or(Error::EigenNonConvergence)
}

/// Clamps tiny negative eigenvalues to zero, rejecting material ones.
fn clamp_spectrum(values: &DVector<f64>) -> Result<DVector<f64>> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 {
                Ok(v)
            } else if v >= -CLAMP_REL_TOL * max {
                Ok(0.0)
            } else {
                Err(Error::NegativeEigenvalue { value: v, max })
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(DVector::from_vec)
}

fn is_rank_deficient(cov: &DMatrix<f64>, n: usize) -> Result<bool> {
    let d = cov.nrows();
    if n <= d {
        return Ok(true);
    }
    let values = eigen(cov.clone())?.eigenvalues;
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max <= 0.0 || min <= max * d as f64 * f64::EPSILON)
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = eigen(symmetrize(m))?;
    let roots = clamp_spectrum(&e.eigenvalues)?.map(f64::sqrt);
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&roots) * e.eigenvectors.transpose())
}

/// `tr((A B)^½)` for symmetric positive semidefinite `A`, `B`.
fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let sa = sqrt_psd(a)?;
    let inner = symmetrize(&(&sa * b * &sa));
    let values = clamp_spectrum(&eigen(inner)?.eigenvalues)?;
    Ok(values.iter().map(|v| v.sqrt()).sum())
}

/// Fréchet distance between two fitted Gaussians.
pub fn fid_from_moments(a: &Moments, b: &Moments) -> Result<FidDetail> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::TooFewSamples { a: a.n, b: b.n });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            row: 0,
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let regularize = is_rank_deficient(&a.cov, a.n)? || is_rank_deficient(&b.cov, b.n)?;
    let (ca, cb) = if regularize {
        let eps = DMatrix::identity(a.dim(), a.dim()) * REGULARIZATION_EPS;
        (&a.cov + &eps, &b.cov + eps)
    } else {
        (a.cov.clone(), b.cov.clone())
    };
    let mean_term = (&a.mean - &b.mean).norm_squared();
    let tr = ca.trace() + cb.trace() - 2.0 * trace_sqrt_product(&ca, &cb)?;
    Ok(FidDetail {
        distance: (mean_term + tr).max(0.0),
        regularization_used: regularize,
    })
}

pub fn fid_detail<R: AsRef<[f64]>>(a: &[R], b: &[R]) -> Result<FidDetail> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooFewSamples { a: a.len(), b: b.len() });
    }
    fid_from_moments(&Moments::from_rows(a)?, &Moments::from_rows(b)?)
}

pub fn fid<R: AsRef<[f64]>>(a: &[R], b: &[R]) -> Result<f64> {
    fid_detail(a, b).map(|d| d.distance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidResult {
    pub per_class: BTreeMap<u32, f64>,
    /// Unweighted mean of `per_class`.
    pub mean: f64,
    pub n_classes: usize,
    pub regularization_used: bool,
    /// Classes present on either side that lacked `min_per_class` samples
    /// on both.
    pub skipped: Vec<u32>,
}

fn class_rows(set: &EmbeddingSet, idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&i| set.row(i).iter().map(|&x| x as f64).collect())
        .collect()
}

/// Per-class FID over shared class ids, averaged without weighting.
pub fn class_fid(x: &EmbeddingSet, y: &EmbeddingSet, min_per_class: usize) -> Result<FidResult> {
    if min_per_class < 2 {
        return Err(Error::InvalidValue("min_per_class must be at least 2".into()));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            row: 0,
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let bx = x.rows_by_class();
    let by = y.rows_by_class();
    let mut eligible = Vec::new();
    let mut skipped = Vec::new();
    let all: std::collections::BTreeSet<u32> = bx.keys().chain(by.keys()).copied().collect();
    for c in all {
        match (bx.get(&c), by.get(&c)) {
            (Some(ix), Some(iy)) if ix.len() >= min_per_class && iy.len() >= min_per_class => {
                eligible.push((c, ix, iy))
            }
            _ => skipped.push(c),
        }
    }
    if eligible.is_empty() {
        return Err(Error::NoEligibleClasses { min_per_class });
    }
    let details: Vec<(u32, FidDetail)> = eligible
        .into_par_iter()
        .map(|(c, ix, iy)| Ok((c, fid_detail(&class_rows(x, ix), &class_rows(y, iy))?)))
        .collect::<Result<_>>()?;

    let n_classes = details.len();
    let mean = details.iter().map(|(_, d)| d.distance).sum::<f64>() / n_classes as f64;
    Ok(FidResult {
        regularization_used: details.iter().any(|(_, d)| d.regularization_used),
        per_class: details.into_iter().map(|(c, d)| (c, d.distance)).collect(),
        mean,
        n_classes,
        skipped,
    })
}
