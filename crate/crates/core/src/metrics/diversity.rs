use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diversity {
    pub per_class: BTreeMap<u32, f64>,
    /// Unweighted mean over classes.
    pub mean: f64,
}

/// `1 − mean cosine similarity` over the distinct unordered pairs of each
/// class.
///
/// With unit vectors `uᵢ`, `Σ_{i<j} uᵢ·uⱼ = (‖Σ uᵢ‖² − Σ ‖uᵢ‖²) / 2`, which
/// turns the O(n²) pair sum into one pass per class.
pub fn diversity(set: &EmbeddingSet) -> Result<Diversity> {
    let classes: Vec<(u32, Vec<usize>)> = set.rows_by_class().into_iter().collect();
    if classes.is_empty() {
        return Err(Error::InvalidValue("diversity of an empty set is undefined".into()));
    }
    let per_class: Vec<(u32, f64)> = classes
        .into_par_iter()
        .map(|(class_id, rows)| {
            let n = rows.len();
            if n < 2 {
                return Err(Error::ClassTooSmall { class_id, count: n });
            }
            let mut sum = vec![0.0f64; set.dim()];
            let mut self_dots = 0.0f64;
            for &i in &rows {
                let v = set.row(i);
                let norm = v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::ZeroNorm(format!("sample {}", set.sample_id(i))));
                }
                let mut sq = 0.0;
                for (s, &x) in sum.iter_mut().zip(v) {
                    let u = x as f64 / norm;
                    *s += u;
                    sq += u * u;
                }
                self_dots += sq;
            }
            let total: f64 = sum.iter().map(|s| s * s).sum();
            let pairs = (n * (n - 1) / 2) as f64;
            let mean_cos = (total - self_dots) / 2.0 / pairs;
            Ok((class_id, 1.0 - mean_cos))
        })
        .collect::<Result<_>>()?;
    let mean = per_class.iter().map(|(_, d)| d).sum::<f64>() / per_class.len() as f64;
    Ok(Diversity {
        per_class: per_class.into_iter().collect(),
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{EmbeddingRow, Modality};

    fn set(rows: &[(u32, &[f32])]) -> EmbeddingSet {
        EmbeddingSet::new(
            rows[0].1.len(),
            "t",
            Modality::Image,
            rows.iter().enumerate().map(|(i, (c, v))| EmbeddingRow {
                sample_id: i.to_string(),
                class_id: *c,
                vector: v.to_vec(),
            }),
        )
        .unwrap()
    }

    #[test]
    fn identical_vectors_have_no_diversity() {
        let d = diversity(&set(&[(0, &[0.3, 0.4]), (0, &[0.3, 0.4]), (0, &[0.3, 0.4])])).unwrap();
        assert!(d.per_class[&0].abs() < 1e-12);
    }

    #[test]
    fn orthogonal_pair_is_one() {
        let d = diversity(&set(&[(0, &[1.0, 0.0]), (0, &[0.0, 2.0])])).unwrap();
        assert!((d.per_class[&0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equiangular_triple() {
        // Unit vectors with pairwise cosine 0.5: e1, (1/2, √3/2, 0), (1/2, 1/(2√3), √(2/3)).
        let s3 = 3f32.sqrt();
        let v1 = [1.0, 0.0, 0.0];
        let v2 = [0.5, s3 / 2.0, 0.0];
        let v3 = [0.5, 1.0 / (2.0 * s3), (2.0f32 / 3.0).sqrt()];
        let d = diversity(&set(&[(0, &v1), (0, &v2), (0, &v3)])).unwrap();
        assert!((d.per_class[&0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn mean_is_unweighted() {
        let d = diversity(&set(&[
            (0, &[1.0, 0.0]),
            (0, &[0.0, 1.0]),
            (1, &[1.0, 0.0]),
            (1, &[1.0, 0.0]),
            (1, &[1.0, 0.0]),
        ]))
        .unwrap();
        assert!((d.mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            diversity(&set(&[(0, &[1.0, 0.0]), (1, &[1.0, 0.0]), (1, &[0.0, 1.0])])),
            Err(Error::ClassTooSmall { class_id: 0, count: 1 })
        ));
        assert!(matches!(
            diversity(&set(&[(0, &[1.0, 0.0]), (0, &[0.0, 0.0])])),
            Err(Error::ZeroNorm(_))
        ));
    }
}
