//! Nearest-neighbor sparse representations: each column keeps its q
//! strongest neighbors by absolute inner product and carries the
//! least-squares weights of the projection onto them.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{from_representations, AdjacencyMatrix, SparseRep};
use crate::linalg::{min_norm_lstsq, normalize_columns};

fn check_q(q: usize, n: usize) -> Result<()> {
    if q == 0 || q >= n {
        return Err(Error::Config(format!(
            "neighbor count q = {q} must satisfy 1 <= q <= N-1 with N = {n}"
        )));
    }
    Ok(())
}

/// Top-q neighbor selection with minimum-norm least-squares weights.
///
/// Columns are l2-normalized internally. Ties in |inner product| resolve
/// toward the smaller index, which makes the construction deterministic.
pub fn tsc_representations(points: &DMatrix<f64>, q: usize) -> Result<Vec<SparseRep>> {
    let n = points.ncols();
    check_q(q, n)?;
    let x = normalize_columns(points);
    let gram = x.transpose() * &x;
    let reps: Vec<SparseRep> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut candidates: Vec<(f64, usize)> = (0..n)
                .filter(|&i| i != j)
                .map(|i| (gram[(i, j)].abs(), i))
                .collect();
            candidates.sort_unstable_by(|a, b| {
                b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1))
            });
            let mut support: Vec<usize> = candidates[..q].iter().map(|&(_, i)| i).collect();
            support.sort_unstable();
            let sub = x.select_columns(support.iter());
            let rhs = DVector::from_column_slice(x.column(j).as_slice());
            let coeff = min_norm_lstsq(&sub, &rhs);
            SparseRep {
                index: j,
                support,
                coefficients: coeff.iter().copied().collect(),
                residual_norms: Vec::new(),
            }
        })
        .collect();
    Ok(reps)
}

pub fn tsc_adjacency(points: &DMatrix<f64>, q: usize) -> Result<AdjacencyMatrix> {
    let reps = tsc_representations(points, q)?;
    from_representations(points.ncols(), &reps, "tsc")
}

/// Per-point slack of the deterministic nearest-neighbor condition: the
/// q-th largest within-class |inner product| minus the largest cross-class
/// |inner product|. Requires q <= n_l - 1 for every class l.
pub(crate) fn tsc_margins(
    points: &DMatrix<f64>,
    labels: &[usize],
    q: usize,
) -> Result<Vec<f64>> {
    let n = points.ncols();
    check_q(q, n)?;
    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    for (l, &c) in counts.iter().enumerate() {
        if c > 0 && c <= q {
            return Err(Error::Config(format!(
                "class {l} has {c} points; the selection condition needs more than q = {q}"
            )));
        }
    }
    let x = normalize_columns(points);
    let gram = x.transpose() * &x;
    let margins = (0..n)
        .map(|j| {
            let own = labels[j];
            let mut within: Vec<f64> = Vec::with_capacity(counts[own] - 1);
            let mut cross_max = 0.0f64;
            for i in 0..n {
                if i == j {
                    continue;
                }
                let v = gram[(i, j)].abs();
                if labels[i] == own {
                    within.push(v);
                } else if v > cross_max {
                    cross_max = v;
                }
            }
            within.sort_unstable_by(f64::total_cmp);
            // q-th largest within-class value, ascending index n_l - 1 - q.
            within[within.len() - q] - cross_max
        })
        .collect();
    Ok(margins)
}
