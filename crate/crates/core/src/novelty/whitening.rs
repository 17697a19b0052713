use nalgebra::DMatrix;

use super::matrix::{EmbeddingMatrix, Stage};
use crate::error::{Error, Result};

/// Directions whose singular value falls below this fraction of the largest
/// are dropped.
pub const RELATIVE_SINGULAR_CUTOFF: f64 = 1e-10;

/// PCA whitening transform: `out = scale ⊙ (basisᵀ (x − mean))`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningModel {
    mean: Vec<f64>,
    /// `dim × k`, column-major by component.
    basis: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

impl WhiteningModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of retained components.
    pub fn components(&self) -> usize {
        self.scale.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Whitens one vector.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self
            .basis
            .iter()
            .zip(&self.scale)
            .map(|(component, s)| {
                let proj: f64 = component
                    .iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (xi, mi))| c * (xi - mi))
                    .sum();
                s * proj
            })
            .collect())
    }
}

/// Fits a whitening transform on the full matrix.
///
/// The transformed fitting matrix has zero mean and identity sample
/// covariance (n-1 denominator) over the retained components. Components are
/// ordered by decreasing variance and signed so that their largest-magnitude
/// loading is positive.
pub fn fit_whitener(raw: &EmbeddingMatrix) -> Result<WhiteningModel> {
    let (n, d) = (raw.rows(), raw.dim());
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "whitening needs at least 2 rows, got {n}"
        )));
    }
    let mut mean = vec![0.0; d];
    for row in raw.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centered = DMatrix::from_fn(n, d, |i, j| raw.row(i)[j] - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let largest = order.first().map_or(0.0, |&i| sv[i]);
    if !(largest > 0.0) {
        return Err(Error::RankZero);
    }

    let norm = ((n - 1) as f64).sqrt();
    let mut basis = Vec::new();
    let mut scale = Vec::new();
    for &i in &order {
        if sv[i] < RELATIVE_SINGULAR_CUTOFF * largest {
            break;
        }
        let mut component: Vec<f64> = v_t.row(i).iter().copied().collect();
        let pivot = component
            .iter()
            .copied()
            .fold(0.0_f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            component.iter_mut().for_each(|c| *c = -*c);
        }
        basis.push(component);
        scale.push(norm / sv[i]);
    }
    Ok(WhiteningModel { mean, basis, scale })
}

pub fn apply_whitener(model: &WhiteningModel, vectors: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut values = Vec::with_capacity(vectors.rows() * model.components());
    for row in vectors.iter_rows() {
        values.extend(model.transform(row)?);
    }
    if vectors.rows() == 0 && vectors.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: vectors.dim(),
        });
    }
    EmbeddingMatrix::new(vectors.rows(), model.components(), values, Stage::Whitened)
}

/// Scales each row to unit Euclidean norm.
pub fn unit_normalize(vectors: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut values = Vec::with_capacity(vectors.values().len());
    for (i, row) in vectors.iter_rows().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::ZeroNormRow { row: i });
        }
        values.extend(row.iter().map(|v| v / norm));
    }
    EmbeddingMatrix::new(vectors.rows(), vectors.dim(), values, Stage::Unit)
}

/// Fits on the whole corpus, whitens, then unit-normalizes.
pub fn prepare_embeddings(raw: &EmbeddingMatrix) -> Result<(WhiteningModel, EmbeddingMatrix)> {
    let model = fit_whitener(raw)?;
    let unit = unit_normalize(&apply_whitener(&model, raw)?)?;
    Ok((model, unit))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn covariance(m: &EmbeddingMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (n, k) = (m.rows() as f64, m.dim());
        let mut mean = vec![0.0; k];
        for r in m.iter_rows() {
            for j in 0..k {
                mean[j] += r[j] / n;
            }
        }
        let mut cov = vec![vec![0.0; k]; k];
        for r in m.iter_rows() {
            for a in 0..k {
                for b in 0..k {
                    cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / (n - 1.0);
                }
            }
        }
        (mean, cov)
    }

    fn square() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(
            &[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0], vec![2.0, 2.0]],
            Stage::Raw,
        )
        .unwrap()
    }

    #[test]
    fn square_becomes_identity() {
        let model = fit_whitener(&square()).unwrap();
        let w = apply_whitener(&model, &square()).unwrap();
        let (mean, cov) = covariance(&w);
        for a in 0..2 {
            assert!(mean[a].abs() < 1e-9);
            for b in 0..2 {
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((cov[a][b] - target).abs() < 1e-9, "{cov:?}");
            }
        }
    }

    #[test]
    fn constant_column_dropped() {
        let m = EmbeddingMatrix::from_rows(
            &[
                vec![1.0, 5.0, 0.3],
                vec![2.0, 5.0, -1.0],
                vec![0.5, 5.0, 2.0],
                vec![4.0, 5.0, 0.0],
            ],
            Stage::Raw,
        )
        .unwrap();
        assert_eq!(fit_whitener(&m).unwrap().components(), 2);
    }

    #[test]
    fn identical_rows_rank_zero() {
        let m = EmbeddingMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]], Stage::Raw).unwrap();
        assert!(matches!(fit_whitener(&m), Err(Error::RankZero)));
    }

    #[test]
    fn mean_maps_to_zero_and_dims_checked() {
        let model = fit_whitener(&square()).unwrap();
        let z = model.transform(model.mean()).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        assert!(matches!(
            model.transform(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn held_out_vector_is_reproducible() {
        let a = fit_whitener(&square()).unwrap().transform(&[0.3, 1.7]).unwrap();
        let b = fit_whitener(&square()).unwrap().transform(&[0.3, 1.7]).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn unit_rows() {
        let m = EmbeddingMatrix::from_rows(&[vec![3.0, 4.0]], Stage::Raw).unwrap();
        let u = unit_normalize(&m).unwrap();
        assert!((u.row(0)[0] - 0.6).abs() < 1e-15 && (u.row(0)[1] - 0.8).abs() < 1e-15);
        let again = unit_normalize(&u).unwrap();
        assert!(u.values().iter().zip(again.values()).all(|(a, b)| (a - b).abs() < 1e-12));
        let z = EmbeddingMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]], Stage::Raw).unwrap();
        assert!(matches!(unit_normalize(&z), Err(Error::ZeroNormRow { row: 1 })));
    }
}
