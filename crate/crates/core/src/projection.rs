//! Random dimensionality-reducing projections.
//!
//! Two random ensembles are provided next to the identity map: a dense
//! Gaussian matrix with i.i.d. N(0, 1/p) entries, and a fast construction
//! that keeps the real part of p randomly chosen rows of the unitary
//! m-point DFT applied after a random sign flip of the coordinates,
//!
//!   Phi = sqrt(2/p) * Re(F_sel) * diag(d),   d in {-1, +1}^m.
//!
//! The sqrt(2/p) factor compensates for discarding the imaginary part, so
//! E ||Phi x||^2 is approximately ||x||^2 for both ensembles. The fast kind
//! is applied with an FFT of length m per column; `dense` materializes the
//! same operator for oracle checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, label, rng_from_seed};

/// Projection ensemble selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionKind {
    Gaussian,
    FastDft,
    Identity,
}

impl ProjectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionKind::Gaussian => "gaussian",
            ProjectionKind::FastDft => "fast_dft",
            ProjectionKind::Identity => "identity",
        }
    }
}

#[derive(Clone, Debug)]
enum Payload {
    Gaussian { matrix: DMatrix<f64> },
    /// Sign vector d and the selected DFT row indices, in draw order.
    FastDft { signs: Vec<f64>, rows: Vec<usize> },
    Identity,
}

/// A realization of a projection operator mapping R^m to R^p.
#[derive(Clone, Debug)]
pub struct ProjectionOperator {
    kind: ProjectionKind,
    m: usize,
    p: usize,
    seed: u64,
    payload: Payload,
}

/// Constructs a projection operator deterministically from its seed.
///
/// Gaussian entries are drawn in column-major order. For the fast kind the
/// sign vector is drawn first (m draws), then the p row indices via a
/// partial Fisher-Yates shuffle of 0..m.
pub fn make_projection(
    kind: ProjectionKind,
    m: usize,
    p: usize,
    seed: u64,
) -> Result<ProjectionOperator> {
    if m == 0 || p == 0 {
        return Err(Error::Dimension("m and p must be at least 1".into()));
    }
    let payload = match kind {
        ProjectionKind::Gaussian => {
            let mut rng = rng_from_seed(seed);
            let scale = (1.0 / p as f64).sqrt();
            let entries: Vec<f64> = (0..p * m)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g * scale
                })
                .collect();
            Payload::Gaussian {
                matrix: DMatrix::from_vec(p, m, entries),
            }
        }
        ProjectionKind::FastDft => {
            if p > m {
                return Err(Error::Dimension(format!(
                    "fast_dft requires p <= m, got p={p}, m={m}"
                )));
            }
            let mut rng = rng_from_seed(seed);
            let signs: Vec<f64> = (0..m)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let mut idx: Vec<usize> = (0..m).collect();
            for i in 0..p {
                let j = rng.random_range(i..m);
                idx.swap(i, j);
            }
            idx.truncate(p);
            Payload::FastDft { signs, rows: idx }
        }
        ProjectionKind::Identity => {
            if p != m {
                return Err(Error::Dimension(format!(
                    "identity requires p = m, got p={p}, m={m}"
                )));
            }
            Payload::Identity
        }
    };
    Ok(ProjectionOperator {
        kind,
        m,
        p,
        seed,
        payload,
    })
}

impl ProjectionOperator {
    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.m
    }

    pub fn target_dim(&self) -> usize {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sign vector and selected rows of a fast operator, for inspection.
    pub fn fast_dft_state(&self) -> Option<(&[f64], &[usize])> {
        match &self.payload {
            Payload::FastDft { signs, rows } => Some((signs, rows)),
            _ => None,
        }
    }

    /// Applies the operator to a matrix whose columns are points.
    pub fn apply(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if y.nrows() != self.m {
            return Err(Error::Dimension(format!(
                "operator expects {} rows, input has {}",
                self.m,
                y.nrows()
            )));
        }
        match &self.payload {
            Payload::Gaussian { matrix } => Ok(matrix * y),
            Payload::Identity => Ok(y.clone()),
            Payload::FastDft { signs, rows } => {
                let n = y.ncols();
                let m = self.m;
                let scale = (2.0 / (self.p as f64 * m as f64)).sqrt();
                let mut planner = FftPlanner::new();
                let fft = planner.plan_fft_forward(m);
                let mut out = DMatrix::zeros(self.p, n);
                let mut buf = vec![Complex::new(0.0, 0.0); m];
                let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
                for j in 0..n {
                    for k in 0..m {
                        buf[k] = Complex::new(signs[k] * y[(k, j)], 0.0);
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    for (r, &row) in rows.iter().enumerate() {
                        out[(r, j)] = scale * buf[row].re;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Applies the operator to a single point.
    pub fn apply_vector(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let wide = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
        let out = self.apply(&wide)?;
        Ok(DVector::from_column_slice(out.as_slice()))
    }

    /// Materializes the operator as a dense p x m matrix.
    ///
    /// For the fast kind this is the reference construction
    /// sqrt(2/p) * Re(F_sel) * diag(d) evaluated entrywise; the FFT path in
    /// `apply` must agree with it to within roundoff.
    pub fn dense(&self) -> DMatrix<f64> {
        match &self.payload {
            Payload::Gaussian { matrix } => matrix.clone(),
            Payload::Identity => DMatrix::identity(self.m, self.m),
            Payload::FastDft { signs, rows } => {
                let m = self.m;
                let scale = (2.0 / (self.p as f64 * m as f64)).sqrt();
                DMatrix::from_fn(self.p, m, |r, k| {
                    // Reduce j*k modulo m in integers to keep the angle small.
                    let jk = (rows[r] * k) % m;
                    let angle = -2.0 * std::f64::consts::PI * jk as f64 / m as f64;
                    scale * signs[k] * angle.cos()
                })
            }
        }
    }
}

/// Empirically probes the norm-concentration behavior of an ensemble:
/// the fraction of fresh operator draws with | ||Phi x||^2 - 1 | >= t.
pub fn concentration_probe(
    kind: ProjectionKind,
    m: usize,
    p: usize,
    x: &DVector<f64>,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if x.len() != m {
        return Err(Error::Dimension(format!(
            "x has length {}, expected {m}",
            x.len()
        )));
    }
    if (x.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::Validation("x must have unit norm".into()));
    }
    if t <= 0.0 {
        return Err(Error::Config("t must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let mut exceed = 0usize;
    for trial in 0..trials {
        let op_seed = derive_seed(seed, &[label("concentration"), trial as u64]);
        let op = make_projection(kind, m, p, op_seed)?;
        let z = op.apply_vector(x)?;
        if (z.norm_squared() - 1.0).abs() >= t {
            exceed += 1;
        }
    }
    Ok(exceed as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_unit(m: usize, seed: u64) -> DVector<f64> {
        let mut rng = rng_from_seed(seed);
        let v: DVector<f64> = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let n = v.norm();
        v / n
    }

    #[test]
    fn gaussian_entry_variance_matches_one_over_p() {
        // Pool entries across many seeds; the sample variance must sit
        // within 5% of 1/p.
        let (m, p) = (4, 4);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0.0;
        for seed in 0..10_000u64 {
            let op = make_projection(ProjectionKind::Gaussian, m, p, seed).unwrap();
            for v in op.dense().iter() {
                sum += v;
                sum_sq += v * v;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let var = sum_sq / count - mean * mean;
        assert!((var - 0.25).abs() < 0.25 * 0.05, "variance {var}");
    }

    #[test]
    fn identity_applies_exactly() {
        let op = make_projection(ProjectionKind::Identity, 3, 3, 0).unwrap();
        let y = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 3.0, -1.0, 0.5, 0.25]);
        assert_eq!(op.apply(&y).unwrap(), y);
    }

    #[test]
    fn identity_requires_square() {
        assert!(make_projection(ProjectionKind::Identity, 3, 2, 0).is_err());
    }

    #[test]
    fn fast_dft_rejects_p_above_m() {
        assert!(make_projection(ProjectionKind::FastDft, 4, 5, 0).is_err());
    }

    #[test]
    fn fast_dft_reconstruction_is_bit_identical() {
        let a = make_projection(ProjectionKind::FastDft, 8, 4, 1).unwrap();
        let b = make_projection(ProjectionKind::FastDft, 8, 4, 1).unwrap();
        let (sa, ra) = a.fast_dft_state().unwrap();
        let (sb, rb) = b.fast_dft_state().unwrap();
        assert_eq!(sa, sb);
        assert_eq!(ra, rb);
        assert_eq!(a.dense(), b.dense());
    }

    #[test]
    fn fast_dft_rows_distinct() {
        for seed in 0..50 {
            let op = make_projection(ProjectionKind::FastDft, 16, 9, seed).unwrap();
            let (_, rows) = op.fast_dft_state().unwrap();
            let mut sorted = rows.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), rows.len());
        }
    }

    #[test]
    fn fast_dft_fft_matches_dense_oracle() {
        for &(m, p, seed) in &[(8usize, 4usize, 1u64), (12, 7, 2), (97, 31, 3), (256, 64, 4)] {
            let op = make_projection(ProjectionKind::FastDft, m, p, seed).unwrap();
            let mut rng = rng_from_seed(seed + 100);
            let y = DMatrix::from_fn(m, 3, |_, _| StandardNormal.sample(&mut rng));
            let fast = op.apply(&y).unwrap();
            let dense = op.dense() * &y;
            let err = (&fast - &dense).abs().max();
            assert!(err < 1e-10, "m={m} p={p} err={err}");
        }
    }

    #[test]
    fn apply_is_linear() {
        let op = make_projection(ProjectionKind::FastDft, 32, 8, 5).unwrap();
        let mut rng = rng_from_seed(9);
        let y = DMatrix::from_fn(32, 2, |_, _| StandardNormal.sample(&mut rng));
        let lhs = op.apply(&(&y * 3.5)).unwrap();
        let rhs = op.apply(&y).unwrap() * 3.5;
        assert!((lhs - rhs).abs().max() < 1e-12);
    }

    #[test]
    fn apply_rejects_wrong_row_count() {
        let op = make_projection(ProjectionKind::Gaussian, 8, 4, 0).unwrap();
        let y = DMatrix::zeros(7, 2);
        assert!(op.apply(&y).is_err());
    }

    #[test]
    fn gaussian_norm_mean_near_one() {
        let (m, p) = (96, 64);
        let x = random_unit(m, 11);
        let mut mean = 0.0;
        let trials = 1000;
        for seed in 0..trials {
            let op = make_projection(ProjectionKind::Gaussian, m, p, seed).unwrap();
            mean += op.apply_vector(&x).unwrap().norm_squared();
        }
        mean /= trials as f64;
        assert!((0.95..=1.05).contains(&mean), "mean {mean}");
    }

    #[test]
    fn concentration_rate_small_for_large_p() {
        // chi-square tail: P(|chi2_256/256 - 1| >= 0.5) is below 1e-5,
        // so 1000 draws should essentially never exceed.
        let m = 256;
        let x = random_unit(m, 21);
        let rate =
            concentration_probe(ProjectionKind::Gaussian, m, 256, &x, 0.5, 1000, 7).unwrap();
        assert!(rate <= 0.01, "rate {rate}");
    }

    #[test]
    fn concentration_rate_monotone_in_t() {
        let m = 64;
        let x = random_unit(m, 31);
        let mut last = 1.0;
        for &t in &[1e-6, 0.05, 0.2, 0.5] {
            let r = concentration_probe(ProjectionKind::Gaussian, m, 16, &x, t, 200, 3).unwrap();
            assert!(r <= last + 1e-12, "t={t} r={r} last={last}");
            last = r;
        }
    }

    #[test]
    fn concentration_tiny_t_rate_one() {
        let m = 32;
        let x = random_unit(m, 41);
        let r = concentration_probe(ProjectionKind::Gaussian, m, 8, &x, 1e-12, 50, 3).unwrap();
        assert_abs_diff_eq!(r, 1.0);
    }

    #[test]
    fn concentration_rejects_non_unit() {
        let x = DVector::from_column_slice(&[1.0, 1.0]);
        assert!(concentration_probe(ProjectionKind::Gaussian, 2, 2, &x, 0.5, 10, 0).is_err());
    }

    #[test]
    fn gaussian_determinism() {
        let a = make_projection(ProjectionKind::Gaussian, 16, 8, 77).unwrap();
        let b = make_projection(ProjectionKind::Gaussian, 16, 8, 77).unwrap();
        assert_eq!(a.dense(), b.dense());
    }
}
