//! Sparse-representation graphs: each column of the data matrix is encoded
//! as a sparse combination of the other columns, and the absolute
//! coefficients become edge weights of an undirected affinity graph.

mod omp;
mod ssc;
mod tsc;

pub use omp::{sscomp_adjacency, sscomp_representations, DEFAULT_RESIDUAL_TOL};
pub use ssc::{ssc_adjacency, ssc_representations, SolverParams, SscMode, SscResult};
pub use tsc::{tsc_adjacency, tsc_representations};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sparse self-representation of one column.
#[derive(Clone, Debug)]
pub struct SparseRep {
    /// Column being represented; never a member of its own support.
    pub index: usize,
    pub support: Vec<usize>,
    /// Aligned with `support`.
    pub coefficients: Vec<f64>,
    /// Residual norm after each greedy iteration; empty for non-iterative
    /// constructions.
    pub residual_norms: Vec<f64>,
}

/// Symmetric nonnegative affinity graph with a zero diagonal.
#[derive(Clone, Debug)]
pub struct AdjacencyMatrix {
    pub weights: DMatrix<f64>,
    pub algorithm: String,
    pub support_sizes: Vec<usize>,
}

impl AdjacencyMatrix {
    pub fn num_points(&self) -> usize {
        self.weights.nrows()
    }
}

/// Builds A = |Z| + |Z|^T from per-column representations.
pub fn from_representations(
    n: usize,
    reps: &[SparseRep],
    algorithm: &str,
) -> Result<AdjacencyMatrix> {
    if reps.len() != n {
        return Err(Error::Dimension(format!(
            "expected {n} representations, got {}",
            reps.len()
        )));
    }
    let mut weights = DMatrix::zeros(n, n);
    let mut support_sizes = vec![0usize; n];
    for rep in reps {
        let j = rep.index;
        if j >= n {
            return Err(Error::Validation(format!("column index {j} out of range")));
        }
        if rep.support.len() != rep.coefficients.len() {
            return Err(Error::Validation(format!(
                "column {j}: support and coefficient lengths differ"
            )));
        }
        support_sizes[j] = rep.support.len();
        for (&i, &c) in rep.support.iter().zip(&rep.coefficients) {
            if i >= n {
                return Err(Error::Validation(format!(
                    "column {j}: support index {i} out of range"
                )));
            }
            if i == j {
                return Err(Error::Validation(format!(
                    "column {j} references itself in its support"
                )));
            }
            if !c.is_finite() {
                return Err(Error::Numerical(format!(
                    "column {j}: non-finite coefficient on index {i}"
                )));
            }
            weights[(i, j)] += c.abs();
        }
    }
    // Symmetrize in place: A <- Zabs + Zabs^T.
    for j in 0..n {
        for i in 0..j {
            let s = weights[(i, j)] + weights[(j, i)];
            weights[(i, j)] = s;
            weights[(j, i)] = s;
        }
    }
    Ok(AdjacencyMatrix {
        weights,
        algorithm: algorithm.to_string(),
        support_sizes,
    })
}

/// Checks that every positive off-diagonal weight joins points with equal
/// labels. Returns the flag and the number of violating unordered pairs.
pub fn no_false_connections(adj: &AdjacencyMatrix, labels: &[usize]) -> (bool, usize) {
    let n = adj.num_points();
    debug_assert_eq!(labels.len(), n);
    let mut violating = 0usize;
    for j in 0..n {
        for i in 0..j {
            if adj.weights[(i, j)] > 0.0 && labels[i] != labels[j] {
                violating += 1;
            }
        }
    }
    (violating == 0, violating)
}

/// Which selection rule to audit in `selection_margins`.
#[derive(Clone, Copy, Debug)]
pub enum MarginAlgo {
    Tsc { q: usize },
    Omp { s_max: usize },
}

/// Per-point slack of the deterministic correct-selection conditions.
///
/// For the nearest-neighbor rule the margin of point j in class l is the
/// q-th largest within-class |inner product| minus the largest cross-class
/// |inner product|; positive means all q selected neighbors must lie in
/// class l. For the greedy rule the margin is the per-iteration gap between
/// the best in-class and best out-of-class correlation with the running
/// residual, minimized over the iterations the point actually executed.
/// Positive margins for every point imply a graph with no false
/// connections.
pub fn selection_margins(
    points: &DMatrix<f64>,
    labels: &[usize],
    algo: MarginAlgo,
) -> Result<Vec<f64>> {
    let n = points.ncols();
    if labels.len() != n {
        return Err(Error::Usage(format!(
            "labels length {} does not match {} points",
            labels.len(),
            n
        )));
    }
    match algo {
        MarginAlgo::Tsc { q } => tsc::tsc_margins(points, labels, q),
        MarginAlgo::Omp { s_max } => omp::omp_margins(points, labels, s_max),
    }
}

#[cfg(test)]
pub(crate) fn assert_adjacency_invariants(adj: &AdjacencyMatrix) {
    let n = adj.num_points();
    assert_eq!(adj.weights.ncols(), n);
    assert_eq!(adj.support_sizes.len(), n);
    for j in 0..n {
        assert_eq!(adj.weights[(j, j)], 0.0, "nonzero diagonal at {j}");
        for i in 0..n {
            let w = adj.weights[(i, j)];
            assert!(w >= 0.0, "negative weight at ({i}, {j})");
            assert!(
                (w - adj.weights[(j, i)]).abs() <= 1e-12,
                "asymmetry at ({i}, {j})"
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(index: usize, support: Vec<usize>, coefficients: Vec<f64>) -> SparseRep {
        SparseRep {
            index,
            support,
            coefficients,
            residual_norms: Vec::new(),
        }
    }

    #[test]
    fn builds_symmetric_abs_sum() {
        let reps = vec![
            rep(0, vec![1], vec![-2.0]),
            rep(1, vec![0], vec![0.5]),
            rep(2, vec![0, 1], vec![1.0, -1.0]),
        ];
        let adj = from_representations(3, &reps, "test").unwrap();
        assert_adjacency_invariants(&adj);
        assert_eq!(adj.weights[(0, 1)], 2.5);
        assert_eq!(adj.weights[(0, 2)], 1.0);
        assert_eq!(adj.weights[(1, 2)], 1.0);
        assert_eq!(adj.support_sizes, vec![1, 1, 2]);
    }

    #[test]
    fn rejects_self_reference_and_bad_indices() {
        let bad_self = vec![rep(0, vec![0], vec![1.0])];
        assert!(from_representations(1, &bad_self, "t").is_err());
        let bad_range = vec![rep(0, vec![5], vec![1.0]), rep(1, vec![0], vec![1.0])];
        assert!(from_representations(2, &bad_range, "t").is_err());
        let bad_nan = vec![rep(0, vec![1], vec![f64::NAN]), rep(1, vec![0], vec![1.0])];
        assert!(from_representations(2, &bad_nan, "t").is_err());
    }

    #[test]
    fn false_connection_counting() {
        let reps = vec![
            rep(0, vec![1], vec![1.0]),
            rep(1, vec![0], vec![1.0]),
            rep(2, vec![3], vec![1.0]),
            rep(3, vec![2], vec![1.0]),
        ];
        let adj = from_representations(4, &reps, "t").unwrap();
        let (ok, count) = no_false_connections(&adj, &[0, 0, 1, 1]);
        assert!(ok);
        assert_eq!(count, 0);

        let crossed = vec![
            rep(0, vec![1], vec![1.0]),
            rep(1, vec![2], vec![1.0]),
            rep(2, vec![3], vec![1.0]),
            rep(3, vec![2], vec![1.0]),
        ];
        let adj = from_representations(4, &crossed, "t").unwrap();
        let (ok, count) = no_false_connections(&adj, &[0, 0, 1, 1]);
        assert!(!ok);
        assert_eq!(count, 1);
    }

    #[test]
    fn zero_matrix_has_no_false_connections() {
        let reps = vec![rep(0, vec![], vec![]), rep(1, vec![], vec![])];
        let adj = from_representations(2, &reps, "t").unwrap();
        let (ok, count) = no_false_connections(&adj, &[0, 1]);
        assert!(ok);
        assert_eq!(count, 0);
    }
}
