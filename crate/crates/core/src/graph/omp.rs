//! Greedy sparse representations: orthogonal matching pursuit over the
//! remaining columns, run entirely through the Gram matrix so the cost per
//! iteration does not grow with the ambient dimension.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{from_representations, AdjacencyMatrix, SparseRep};
use crate::linalg::{min_norm_lstsq, normalize_columns};

/// Residual norm at which a representation counts as exact.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-6;

struct GreedyState {
    support: Vec<usize>,
    coefficients: DVector<f64>,
    /// Correlations of every column with the current residual.
    corr: DVector<f64>,
    residual_norms: Vec<f64>,
}

/// One full greedy pass for column j, driven by the Gram matrix. The
/// observer sees the correlation vector before each selection, which is
/// what the selection diagnostics need.
fn greedy_column<F: FnMut(&GreedyState)>(
    gram: &DMatrix<f64>,
    j: usize,
    s_max: usize,
    residual_tol: f64,
    mut observe: F,
) -> GreedyState {
    let n = gram.nrows();
    let g_j = DVector::from_column_slice(gram.column(j).as_slice());
    let norm_sq = gram[(j, j)];
    let mut state = GreedyState {
        support: Vec::new(),
        coefficients: DVector::zeros(0),
        corr: g_j.clone(),
        residual_norms: Vec::new(),
    };
    if norm_sq.sqrt() <= residual_tol {
        return state;
    }
    let mut selected = vec![false; n];
    selected[j] = true;
    for _ in 0..s_max {
        let mut best = 0.0f64;
        let mut best_idx = None;
        for i in 0..n {
            if selected[i] {
                continue;
            }
            let v = state.corr[i].abs();
            if v > best {
                best = v;
                best_idx = Some(i);
            }
        }
        // Exactly zero correlations: nothing left to select.
        let Some(pick) = best_idx else { break };
        observe(&state);
        state.support.push(pick);
        selected[pick] = true;
        let s = state.support.len();
        let sub_gram = DMatrix::from_fn(s, s, |r, c| gram[(state.support[r], state.support[c])]);
        let rhs = DVector::from_fn(s, |r, _| g_j[state.support[r]]);
        state.coefficients = min_norm_lstsq(&sub_gram, &rhs);
        // corr = G e_j - G_Lambda c, the inner products with the residual.
        state.corr.copy_from(&g_j);
        for (k, &i) in state.support.iter().enumerate() {
            let c = state.coefficients[k];
            if c != 0.0 {
                state.corr.axpy(-c, &DVector::from_column_slice(gram.column(i).as_slice()), 1.0);
            }
        }
        let residual_sq = (norm_sq - rhs.dot(&state.coefficients)).max(0.0);
        let residual = residual_sq.sqrt();
        state.residual_norms.push(residual);
        if residual <= residual_tol {
            break;
        }
    }
    state
}

/// Greedy representations for every column. Columns are l2-normalized
/// internally; ties in the selection rule resolve toward the smaller
/// index; already-selected indices are excluded so the support grows by
/// exactly one per iteration.
pub fn sscomp_representations(
    points: &DMatrix<f64>,
    s_max: usize,
    residual_tol: f64,
) -> Result<Vec<SparseRep>> {
    if s_max == 0 {
        return Err(Error::Config("s_max must be at least 1".into()));
    }
    if residual_tol < 0.0 {
        return Err(Error::Config(format!(
            "residual tolerance must be nonnegative, got {residual_tol}"
        )));
    }
    let n = points.ncols();
    let x = normalize_columns(points);
    let gram = x.transpose() * &x;
    let reps: Vec<SparseRep> = (0..n)
        .into_par_iter()
        .map(|j| {
            let state = greedy_column(&gram, j, s_max, residual_tol, |_| {});
            SparseRep {
                index: j,
                support: state.support,
                coefficients: state.coefficients.iter().copied().collect(),
                residual_norms: state.residual_norms,
            }
        })
        .collect();
    Ok(reps)
}

pub fn sscomp_adjacency(
    points: &DMatrix<f64>,
    s_max: usize,
    residual_tol: f64,
) -> Result<AdjacencyMatrix> {
    let reps = sscomp_representations(points, s_max, residual_tol)?;
    from_representations(points.ncols(), &reps, "ssc-omp")
}

/// Per-point minimum over executed iterations of (best in-class
/// correlation) - (best out-of-class correlation) with the running
/// residual. Points that never iterate report +infinity.
pub(crate) fn omp_margins(
    points: &DMatrix<f64>,
    labels: &[usize],
    s_max: usize,
) -> Result<Vec<f64>> {
    if s_max == 0 {
        return Err(Error::Config("s_max must be at least 1".into()));
    }
    let n = points.ncols();
    let x = normalize_columns(points);
    let gram = x.transpose() * &x;
    let margins = (0..n)
        .map(|j| {
            let own = labels[j];
            let mut min_margin = f64::INFINITY;
            greedy_column(&gram, j, s_max, DEFAULT_RESIDUAL_TOL, |state| {
                let mut in_max = 0.0f64;
                let mut out_max = 0.0f64;
                for i in 0..n {
                    if i == j || state.support.contains(&i) {
                        continue;
                    }
                    let v = state.corr[i].abs();
                    if labels[i] == own {
                        in_max = in_max.max(v);
                    } else {
                        out_max = out_max.max(v);
                    }
                }
                min_margin = min_margin.min(in_max - out_max);
            });
            min_margin
        })
        .collect();
    Ok(margins)
}
