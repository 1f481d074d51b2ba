//! Synthetic union-of-subspaces data model.
//!
//! Points are drawn as y = U a with U an orthonormal basis of a random
//! subspace and a uniform on the unit sphere of the subspace's dimension,
//! optionally followed by additive Gaussian noise with per-coordinate
//! variance sigma^2 / m. Several arrangement constructions control how much
//! the subspaces overlap, which is what the affinity measure quantifies.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, normalize_columns, orthonormalize_columns};
use crate::seed::rng_from_seed;

/// How the subspaces of an arrangement relate to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrangementMode {
    /// Each basis drawn independently from the Haar measure.
    Independent,
    /// All subspaces share a common random `overlap`-dimensional
    /// intersection; requires equal dims and overlap < dim.
    SharedIntersection { overlap: usize },
    /// One m x m Gaussian matrix sliced into column blocks, each block
    /// orthonormalized in place; requires the dims to sum to m, so the
    /// subspaces jointly span the ambient space.
    GaussianPartition,
    /// Column blocks of a single Haar frame: subspaces are exactly
    /// mutually orthogonal; requires the dims to sum to at most m.
    Orthogonal,
}

/// Orthonormal bases for L subspaces of R^m.
#[derive(Clone, Debug)]
pub struct SubspaceArrangement {
    ambient_dim: usize,
    bases: Vec<DMatrix<f64>>,
}

/// A set of column points with optional ground truth.
#[derive(Clone, Debug)]
pub struct Dataset {
    /// m x N matrix; each column is one point. Synthetic points are grouped
    /// by subspace index.
    pub points: DMatrix<f64>,
    /// Ground-truth subspace index per point, when known.
    pub labels: Option<Vec<usize>>,
    /// Points per subspace, when known.
    pub counts: Option<Vec<usize>>,
    /// Noise level sigma of the additive noise model; 0 for clean data.
    pub noise_sigma: f64,
}

impl Dataset {
    pub fn ambient_dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn num_points(&self) -> usize {
        self.points.ncols()
    }

    /// Ground-truth labels or a usage error for unlabeled data.
    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::Usage("dataset has no ground-truth labels".into()))
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let entries: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    DMatrix::from_vec(rows, cols, entries)
}

/// One Haar-distributed orthonormal m x d frame.
fn haar_frame(m: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    orthonormalize_columns(gaussian_matrix(m, d, rng))
}

/// Draws an arrangement of subspaces according to `mode`.
///
/// Randomness is consumed in a fixed documented order (shared mode: the
/// common block first, then each subspace's completion in index order), so
/// the construction is reproducible from the seed alone.
pub fn make_arrangement(
    ambient_dim: usize,
    dims: &[usize],
    mode: ArrangementMode,
    seed: u64,
) -> Result<SubspaceArrangement> {
    if ambient_dim == 0 {
        return Err(Error::Config("ambient dimension must be at least 1".into()));
    }
    if dims.is_empty() {
        return Err(Error::Config("at least one subspace dimension required".into()));
    }
    for &d in dims {
        if d == 0 || d > ambient_dim {
            return Err(Error::Config(format!(
                "subspace dimension {d} out of range 1..={ambient_dim}"
            )));
        }
    }
    let mut rng = rng_from_seed(seed);
    let bases: Vec<DMatrix<f64>> = match mode {
        ArrangementMode::Independent => dims
            .iter()
            .map(|&d| haar_frame(ambient_dim, d, &mut rng))
            .collect(),
        ArrangementMode::SharedIntersection { overlap } => {
            let d = dims[0];
            if dims.iter().any(|&x| x != d) {
                return Err(Error::Config(
                    "shared_intersection requires equal subspace dimensions".into(),
                ));
            }
            if overlap >= d {
                return Err(Error::Config(format!(
                    "overlap {overlap} must be smaller than the subspace dimension {d}"
                )));
            }
            let common = haar_frame(ambient_dim, overlap, &mut rng);
            dims.iter()
                .map(|_| {
                    let extra = gaussian_matrix(ambient_dim, d - overlap, &mut rng);
                    let mut stacked = DMatrix::zeros(ambient_dim, d);
                    stacked.columns_mut(0, overlap).copy_from(&common);
                    stacked.columns_mut(overlap, d - overlap).copy_from(&extra);
                    // Re-orthonormalize; the leading columns keep spanning
                    // the common intersection.
                    orthonormalize_columns(stacked)
                })
                .collect()
        }
        ArrangementMode::GaussianPartition => {
            let total: usize = dims.iter().sum();
            if total != ambient_dim {
                return Err(Error::Config(format!(
                    "gaussian_partition requires dims to sum to m={ambient_dim}, got {total}"
                )));
            }
            let v = gaussian_matrix(ambient_dim, ambient_dim, &mut rng);
            let mut start = 0;
            dims.iter()
                .map(|&d| {
                    let block = v.columns(start, d).into_owned();
                    start += d;
                    orthonormalize_columns(block)
                })
                .collect()
        }
        ArrangementMode::Orthogonal => {
            let total: usize = dims.iter().sum();
            if total > ambient_dim {
                return Err(Error::Config(format!(
                    "orthogonal mode requires dims to sum to at most m={ambient_dim}, got {total}"
                )));
            }
            let frame = haar_frame(ambient_dim, total, &mut rng);
            let mut start = 0;
            dims.iter()
                .map(|&d| {
                    let block = frame.columns(start, d).into_owned();
                    start += d;
                    block
                })
                .collect()
        }
    };
    Ok(SubspaceArrangement {
        ambient_dim,
        bases,
    })
}

impl SubspaceArrangement {
    /// Wraps externally supplied bases after an orthonormality check.
    pub fn from_bases(ambient_dim: usize, bases: Vec<DMatrix<f64>>) -> Result<Self> {
        for (i, b) in bases.iter().enumerate() {
            if b.nrows() != ambient_dim {
                return Err(Error::Dimension(format!(
                    "basis {i} has {} rows, expected {ambient_dim}",
                    b.nrows()
                )));
            }
            check_orthonormal(b, 1e-8).map_err(|e| {
                Error::Validation(format!("basis {i}: {e}"))
            })?;
        }
        Ok(Self { ambient_dim, bases })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn num_subspaces(&self) -> usize {
        self.bases.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn basis(&self, l: usize) -> &DMatrix<f64> {
        &self.bases[l]
    }

    pub fn max_dim(&self) -> usize {
        self.bases.iter().map(|b| b.ncols()).max().unwrap_or(0)
    }

    pub fn min_dim(&self) -> usize {
        self.bases.iter().map(|b| b.ncols()).min().unwrap_or(0)
    }

    /// Largest pairwise affinity; 0 for a single subspace.
    pub fn max_affinity(&self) -> Result<f64> {
        let mut best: f64 = 0.0;
        for k in 0..self.bases.len() {
            for l in k + 1..self.bases.len() {
                best = best.max(affinity(&self.bases[k], &self.bases[l])?);
            }
        }
        Ok(best)
    }
}

fn check_orthonormal(u: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !all_finite(u) {
        return Err(Error::Validation("basis contains non-finite entries".into()));
    }
    let g = u.tr_mul(u);
    let d = u.ncols();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    if worst > tol {
        return Err(Error::Validation(format!(
            "columns are not orthonormal (deviation {worst:.2e} > {tol:.0e})"
        )));
    }
    Ok(())
}

/// Similarity of two subspaces: ||Uk^T Ul||_F / sqrt(min(dk, dl)),
/// clamped into [0, 1]. 0 for orthogonal subspaces, 1 for nested ones.
pub fn affinity(uk: &DMatrix<f64>, ul: &DMatrix<f64>) -> Result<f64> {
    if uk.nrows() != ul.nrows() {
        return Err(Error::Dimension(format!(
            "bases live in different ambient dimensions ({} vs {})",
            uk.nrows(),
            ul.nrows()
        )));
    }
    check_orthonormal(uk, 1e-8)?;
    check_orthonormal(ul, 1e-8)?;
    let cross = uk.tr_mul(ul);
    let dmin = uk.ncols().min(ul.ncols()) as f64;
    let aff = cross.norm() / dmin.sqrt();
    Ok(aff.clamp(0.0, 1.0))
}

/// Principal angles between two subspaces in ascending order; length
/// min(dk, dl), values in [0, pi/2].
pub fn principal_angles(uk: &DMatrix<f64>, ul: &DMatrix<f64>) -> Result<Vec<f64>> {
    if uk.nrows() != ul.nrows() {
        return Err(Error::Dimension(format!(
            "bases live in different ambient dimensions ({} vs {})",
            uk.nrows(),
            ul.nrows()
        )));
    }
    check_orthonormal(uk, 1e-8)?;
    check_orthonormal(ul, 1e-8)?;
    let cross = uk.tr_mul(ul);
    let svd = cross.svd(false, false);
    // Singular values descend, so the angles come out ascending.
    let mut angles: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| s.clamp(0.0, 1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(angles)
}

/// Samples `counts[l]` points from each subspace: y = U a with a uniform on
/// the unit sphere. Points are stored grouped by subspace, labels filled.
///
/// Coefficient vectors are drawn subspace by subspace, point by point,
/// coordinate by coordinate.
pub fn sample_points(
    arr: &SubspaceArrangement,
    counts: &[usize],
    seed: u64,
) -> Result<Dataset> {
    if counts.len() != arr.num_subspaces() {
        return Err(Error::Dimension(format!(
            "counts has length {}, expected {}",
            counts.len(),
            arr.num_subspaces()
        )));
    }
    if counts.iter().any(|&n| n == 0) {
        return Err(Error::Config("every subspace needs at least one point".into()));
    }
    let mut rng = rng_from_seed(seed);
    let total: usize = counts.iter().sum();
    let mut points = DMatrix::zeros(arr.ambient_dim(), total);
    let mut labels = Vec::with_capacity(total);
    let mut col = 0;
    for (l, &n) in counts.iter().enumerate() {
        let basis = arr.basis(l);
        let d = basis.ncols();
        for _ in 0..n {
            let mut a = DVector::zeros(d);
            // A zero Gaussian draw has probability zero but would break the
            // normalization, so redraw defensively.
            loop {
                for v in a.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let norm = a.norm();
                if norm > 1e-12 {
                    a /= norm;
                    break;
                }
            }
            points.set_column(col, &(basis * a));
            labels.push(l);
            col += 1;
        }
    }
    Ok(Dataset {
        points,
        labels: Some(labels),
        counts: Some(counts.to_vec()),
        noise_sigma: 0.0,
    })
}

/// Adds independent N(0, (sigma^2/m) I) noise to every point. sigma = 0
/// returns the dataset unchanged without consuming randomness.
pub fn add_noise(ds: &Dataset, sigma: f64, seed: u64) -> Result<Dataset> {
    if sigma < 0.0 {
        return Err(Error::Config("sigma must be nonnegative".into()));
    }
    let mut out = ds.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    let m = ds.ambient_dim();
    let scale = sigma / (m as f64).sqrt();
    let mut rng = rng_from_seed(seed);
    for j in 0..out.points.ncols() {
        for i in 0..m {
            let e: f64 = StandardNormal.sample(&mut rng);
            out.points[(i, j)] += scale * e;
        }
    }
    // Independent noise adds in quadrature.
    out.noise_sigma = (ds.noise_sigma * ds.noise_sigma + sigma * sigma).sqrt();
    Ok(out)
}

/// Convenience wrapper returning the dataset with unit-norm columns.
pub fn normalized_points(ds: &Dataset) -> DMatrix<f64> {
    normalize_columns(&ds.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn independent_bases_are_orthonormal() {
        let arr = make_arrangement(12, &[5], ArrangementMode::Independent, 1).unwrap();
        let u = arr.basis(0);
        let g = u.tr_mul(u);
        assert!((g - DMatrix::identity(5, 5)).abs().max() < 1e-10);
    }

    #[test]
    fn shared_intersection_affinity_bound() {
        // A common 4-dimensional intersection of 20-dimensional subspaces
        // forces affinity at least sqrt(4/20).
        let arr = make_arrangement(
            64,
            &[20, 20, 20],
            ArrangementMode::SharedIntersection { overlap: 4 },
            7,
        )
        .unwrap();
        let bound = (4.0f64 / 20.0).sqrt();
        for k in 0..3 {
            for l in k + 1..3 {
                let aff = affinity(arr.basis(k), arr.basis(l)).unwrap();
                assert!(aff >= bound - 1e-8, "aff {aff} below {bound}");
            }
        }
    }

    #[test]
    fn shared_intersection_small_angles_zero() {
        let arr = make_arrangement(
            40,
            &[10, 10],
            ArrangementMode::SharedIntersection { overlap: 3 },
            3,
        )
        .unwrap();
        let angles = principal_angles(arr.basis(0), arr.basis(1)).unwrap();
        for a in &angles[..3] {
            assert!(a.abs() < 1e-8, "angle {a}");
        }
        assert!(angles[3] > 1e-4);
    }

    #[test]
    fn shared_intersection_requires_equal_dims() {
        let r = make_arrangement(
            20,
            &[5, 6],
            ArrangementMode::SharedIntersection { overlap: 2 },
            0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn gaussian_partition_spans_ambient() {
        let arr =
            make_arrangement(200, &[20; 10], ArrangementMode::GaussianPartition, 5).unwrap();
        let mut stacked = DMatrix::zeros(200, 200);
        let mut start = 0;
        for l in 0..10 {
            stacked.columns_mut(start, 20).copy_from(arr.basis(l));
            start += 20;
        }
        let svd = stacked.svd(false, false);
        let min_sv = svd.singular_values.iter().cloned().fold(f64::MAX, f64::min);
        let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        assert!(min_sv / max_sv > 1e-8, "rank-deficient stack");
    }

    #[test]
    fn gaussian_partition_dims_must_sum_to_m() {
        assert!(make_arrangement(10, &[3, 3], ArrangementMode::GaussianPartition, 0).is_err());
    }

    #[test]
    fn orthogonal_mode_gives_zero_affinity() {
        let arr = make_arrangement(100, &[10, 10], ArrangementMode::Orthogonal, 11).unwrap();
        let aff = affinity(arr.basis(0), arr.basis(1)).unwrap();
        assert!(aff < 1e-12, "aff {aff}");
        let angles = principal_angles(arr.basis(0), arr.basis(1)).unwrap();
        for a in angles {
            assert_abs_diff_eq!(a, std::f64::consts::FRAC_PI_2, epsilon = 1e-7);
        }
    }

    #[test]
    fn sampled_points_unit_norm_and_in_span() {
        let arr = make_arrangement(30, &[6, 6], ArrangementMode::Independent, 2).unwrap();
        let ds = sample_points(&arr, &[15, 10], 3).unwrap();
        assert_eq!(ds.num_points(), 25);
        assert_eq!(ds.labels.as_ref().unwrap().len(), 25);
        for j in 0..25 {
            let y = ds.points.column(j).into_owned();
            assert!((y.norm() - 1.0).abs() < 1e-10);
            let l = ds.labels.as_ref().unwrap()[j];
            let u = arr.basis(l);
            let residual = &y - u * u.tr_mul(&y);
            assert!(residual.norm() < 1e-10);
        }
    }

    #[test]
    fn one_dimensional_subspace_gives_sign_flips() {
        let arr = make_arrangement(9, &[1], ArrangementMode::Independent, 4).unwrap();
        let ds = sample_points(&arr, &[8], 5).unwrap();
        let u = arr.basis(0).column(0).into_owned();
        for j in 0..8 {
            let y = ds.points.column(j).into_owned();
            let same = (&y - &u).norm();
            let flip = (&y + &u).norm();
            assert!(same.min(flip) < 1e-10);
        }
    }

    #[test]
    fn coefficient_mean_small_on_sphere() {
        // Uniform sphere coefficients average out; with one subspace the
        // point mean equals the coefficient mean in the basis coordinates.
        let arr = make_arrangement(8, &[6], ArrangementMode::Independent, 6).unwrap();
        let ds = sample_points(&arr, &[10_000], 7).unwrap();
        let mut mean = DVector::zeros(8);
        for j in 0..ds.num_points() {
            mean += ds.points.column(j);
        }
        mean /= ds.num_points() as f64;
        assert!(mean.norm() <= 0.05, "mean norm {}", mean.norm());
    }

    #[test]
    fn noise_zero_is_identity() {
        let arr = make_arrangement(10, &[3], ArrangementMode::Independent, 8).unwrap();
        let ds = sample_points(&arr, &[5], 9).unwrap();
        let noisy = add_noise(&ds, 0.0, 10).unwrap();
        assert_eq!(ds.points, noisy.points);
        assert_eq!(noisy.noise_sigma, 0.0);
    }

    #[test]
    fn noise_energy_matches_sigma_squared() {
        let m = 100;
        let arr = make_arrangement(m, &[4], ArrangementMode::Independent, 12).unwrap();
        let ds = sample_points(&arr, &[1], 13).unwrap();
        let sigma = 0.5;
        let mut total = 0.0;
        let draws = 1000;
        for t in 0..draws {
            let noisy = add_noise(&ds, sigma, 1000 + t).unwrap();
            total += (noisy.points.column(0) - ds.points.column(0)).norm_squared();
        }
        let mean = total / draws as f64;
        let expected = sigma * sigma;
        assert!(
            (mean - expected).abs() < expected * 0.05,
            "mean noise energy {mean}, expected {expected}"
        );
    }

    #[test]
    fn negative_sigma_rejected() {
        let arr = make_arrangement(5, &[2], ArrangementMode::Independent, 0).unwrap();
        let ds = sample_points(&arr, &[2], 0).unwrap();
        assert!(add_noise(&ds, -0.1, 0).is_err());
    }

    #[test]
    fn affinity_identical_and_orthogonal_extremes() {
        let arr = make_arrangement(16, &[4, 4], ArrangementMode::Orthogonal, 5).unwrap();
        assert_abs_diff_eq!(
            affinity(arr.basis(0), arr.basis(0)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(affinity(arr.basis(0), arr.basis(1)).unwrap() < 1e-12);
    }

    #[test]
    fn affinity_symmetric_and_matches_angles() {
        let arr = make_arrangement(24, &[5, 7], ArrangementMode::Independent, 14).unwrap();
        let (a, b) = (arr.basis(0), arr.basis(1));
        let f1 = affinity(a, b).unwrap();
        let f2 = affinity(b, a).unwrap();
        assert_abs_diff_eq!(f1, f2, epsilon = 1e-12);
        let angles = principal_angles(a, b).unwrap();
        let from_angles: f64 = angles
            .iter()
            .map(|t| t.cos().powi(2))
            .sum::<f64>()
            .sqrt()
            / (5.0f64).sqrt();
        assert_abs_diff_eq!(f1, from_angles, epsilon = 1e-10);
    }

    #[test]
    fn principal_angles_shared_direction_example() {
        // span{e1,e2} vs span{e1,e3}: one shared direction, one orthogonal.
        let uk = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let ul = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let angles = principal_angles(&uk, &ul).unwrap();
        assert_abs_diff_eq!(angles[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(angles[1], std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn affinity_rejects_non_orthonormal() {
        let bad = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let ok = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(affinity(&bad, &ok).is_err());
    }

    #[test]
    fn arrangement_determinism() {
        let a = make_arrangement(20, &[4, 4], ArrangementMode::Independent, 99).unwrap();
        let b = make_arrangement(20, &[4, 4], ArrangementMode::Independent, 99).unwrap();
        assert_eq!(a.basis(0), b.basis(0));
        assert_eq!(a.basis(1), b.basis(1));
        let da = sample_points(&a, &[3, 3], 1).unwrap();
        let db = sample_points(&b, &[3, 3], 1).unwrap();
        assert_eq!(da.points, db.points);
    }
}
