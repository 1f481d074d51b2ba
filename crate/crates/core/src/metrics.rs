//! Clustering accuracy: fraction of misassigned points under the best
//! one-to-one matching of predicted to true cluster ids.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Optimal matching between predicted and true cluster ids.
#[derive(Clone, Debug)]
pub struct Matching {
    /// (predicted label, matched truth label) for every predicted label
    /// that maps onto a real truth label.
    pub assignment: Vec<(usize, usize)>,
    pub mismatches: usize,
    /// mismatches / N.
    pub error: f64,
}

/// Minimum-cost perfect assignment on a square cost matrix; rectangular
/// input is padded with zero rows or columns first. Runs the potential
/// based shortest-augmenting-path method in O(k^3).
pub fn assignment_min_cost(cost: &DMatrix<f64>) -> Result<(Vec<usize>, f64)> {
    let rows = cost.nrows();
    let cols = cost.ncols();
    if rows == 0 || cols == 0 {
        return Err(Error::Config("cost matrix must be nonempty".into()));
    }
    if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::Validation(
            "cost matrix entries must be finite and nonnegative".into(),
        ));
    }
    let k = rows.max(cols);
    let at = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            cost[(i, j)]
        } else {
            0.0
        }
    };
    // 1-based potentials; p[j] is the row matched to column j.
    let mut u = vec![0.0f64; k + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; k];
    for j in 1..=k {
        assignment[p[j] - 1] = j - 1;
    }
    let total: f64 = (0..k).map(|i| at(i, assignment[i])).sum();
    Ok((assignment, total))
}

fn compress(labels: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let compressed = labels
        .iter()
        .map(|l| ids.binary_search(l).unwrap())
        .collect();
    (compressed, ids)
}

/// Fraction of points whose predicted cluster disagrees with the truth
/// under the best injective relabeling; cluster-count mismatch is handled
/// by padding the contingency table.
pub fn clustering_error(pred: &[usize], truth: &[usize]) -> Result<Matching> {
    if pred.len() != truth.len() {
        return Err(Error::Usage(format!(
            "label lengths differ: {} predicted vs {} true",
            pred.len(),
            truth.len()
        )));
    }
    let n = pred.len();
    if n == 0 {
        return Err(Error::Usage("cannot score an empty labeling".into()));
    }
    let (pred_c, pred_ids) = compress(pred);
    let (truth_c, truth_ids) = compress(truth);
    let kp = pred_ids.len();
    let kt = truth_ids.len();
    let k = kp.max(kt);
    let mut contingency = DMatrix::<f64>::zeros(k, k);
    for (&pi, &ti) in pred_c.iter().zip(&truth_c) {
        contingency[(pi, ti)] += 1.0;
    }
    // Minimizing (N - matches) is maximizing matched points.
    let cost = contingency.map(|c| n as f64 - c);
    let (assignment, _) = assignment_min_cost(&cost)?;
    let matched: f64 = (0..k).map(|i| contingency[(i, assignment[i])]).sum();
    let mismatches = n - matched as usize;
    let pairs = (0..kp)
        .filter(|&i| assignment[i] < kt)
        .map(|i| (pred_ids[i], truth_ids[assignment[i]]))
        .collect();
    Ok(Matching {
        assignment: pairs,
        mismatches,
        error: mismatches as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn brute_force_assignment(cost: &DMatrix<f64>) -> f64 {
        let k = cost.nrows();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, cost, &mut best);
        best
    }

    fn permute(perm: &mut Vec<usize>, at: usize, cost: &DMatrix<f64>, best: &mut f64) {
        if at == perm.len() {
            let total: f64 = perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
            if total < *best {
                *best = total;
            }
            return;
        }
        for i in at..perm.len() {
            perm.swap(at, i);
            permute(perm, at + 1, cost, best);
            perm.swap(at, i);
        }
    }

    #[test]
    fn identity_cost_picks_diagonal() {
        let cost = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 1.0 });
        let (assignment, total) = assignment_min_cost(&cost).unwrap();
        assert_eq!(assignment, vec![0, 1, 2, 3]);
        assert_eq!(total, 0.0);
    }

    #[test]
    fn one_by_one() {
        let cost = DMatrix::from_element(1, 1, 3.5);
        let (assignment, total) = assignment_min_cost(&cost).unwrap();
        assert_eq!(assignment, vec![0]);
        assert_abs_diff_eq!(total, 3.5);
    }

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = rng_from_seed(404);
        for _ in 0..50 {
            let k = rng.random_range(2..=5usize);
            let cost = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>() * 10.0);
            let (_, total) = assignment_min_cost(&cost).unwrap();
            let oracle = brute_force_assignment(&cost);
            assert_abs_diff_eq!(total, oracle, epsilon = 1e-9);
        }
    }

    #[test]
    fn rectangular_input_padded() {
        let cost = DMatrix::from_row_slice(2, 3, &[5.0, 1.0, 9.0, 2.0, 7.0, 3.0]);
        let (assignment, total) = assignment_min_cost(&cost).unwrap();
        assert_eq!(assignment.len(), 3);
        // Row 0 -> col 1, row 1 -> col 0, phantom row takes col 2 at 0.
        assert_abs_diff_eq!(total, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_cost_matrices() {
        let neg = DMatrix::from_element(2, 2, -1.0);
        assert!(assignment_min_cost(&neg).is_err());
        let nan = DMatrix::from_element(2, 2, f64::NAN);
        assert!(assignment_min_cost(&nan).is_err());
    }

    #[test]
    fn exact_match_scores_zero() {
        let labels = [0, 1, 2, 0, 1, 2];
        let m = clustering_error(&labels, &labels).unwrap();
        assert_eq!(m.mismatches, 0);
        assert_eq!(m.error, 0.0);
    }

    #[test]
    fn swapped_ids_score_zero() {
        let pred = [1, 1, 0, 0, 2, 2];
        let truth = [0, 0, 2, 2, 1, 1];
        let m = clustering_error(&pred, &truth).unwrap();
        assert_eq!(m.error, 0.0);
        assert!(m.assignment.contains(&(1, 0)));
        assert!(m.assignment.contains(&(0, 2)));
        assert!(m.assignment.contains(&(2, 1)));
    }

    #[test]
    fn single_mismatch_quarter_error() {
        let pred = [0, 0, 1, 1];
        let truth = [0, 1, 1, 1];
        let m = clustering_error(&pred, &truth).unwrap();
        assert_eq!(m.mismatches, 1);
        assert_abs_diff_eq!(m.error, 0.25);
    }

    #[test]
    fn cluster_count_mismatch_is_padded() {
        // Prediction splits one true cluster in two.
        let pred = [0, 0, 1, 1, 2, 2];
        let truth = [0, 0, 0, 0, 1, 1];
        let m = clustering_error(&pred, &truth).unwrap();
        assert_eq!(m.mismatches, 2);
        assert_abs_diff_eq!(m.error, 2.0 / 6.0, epsilon = 1e-12);
        // Prediction merges two true clusters.
        let pred = [0, 0, 0, 0];
        let truth = [0, 0, 1, 1];
        let m = clustering_error(&pred, &truth).unwrap();
        assert_eq!(m.mismatches, 2);
    }

    #[test]
    fn sparse_label_ids_accepted() {
        let pred = [10, 10, 700, 700];
        let truth = [3, 3, 9, 9];
        let m = clustering_error(&pred, &truth).unwrap();
        assert_eq!(m.error, 0.0);
        assert!(m.assignment.contains(&(10, 3)));
        assert!(m.assignment.contains(&(700, 9)));
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(clustering_error(&[0, 1], &[0]).is_err());
        assert!(clustering_error(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn prop_relabeling_invariance(
            labels in proptest::collection::vec(0usize..4, 4..40),
            perm_seed in 0u64..1000,
        ) {
            let mut rng = rng_from_seed(perm_seed);
            // Random injective relabeling of 0..4.
            let mut map = [0usize, 1, 2, 3];
            for i in (1..4).rev() {
                let j = rng.random_range(0..=i);
                map.swap(i, j);
            }
            let relabeled: Vec<usize> = labels.iter().map(|&l| map[l]).collect();
            let m = clustering_error(&relabeled, &labels).unwrap();
            prop_assert_eq!(m.error, 0.0);
        }

        #[test]
        fn prop_error_range_and_symmetry_of_zero(
            pred in proptest::collection::vec(0usize..5, 6..30),
            truth_seed in 0u64..500,
        ) {
            let mut rng = rng_from_seed(truth_seed);
            let truth: Vec<usize> = pred.iter().map(|_| rng.random_range(0..5usize)).collect();
            let m = clustering_error(&pred, &truth).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.error));
            prop_assert_eq!(m.mismatches as f64 / pred.len() as f64, m.error);
            // Zero error must mean the prediction is a relabeling.
            if m.error == 0.0 {
                let mut fwd = std::collections::HashMap::new();
                for (&a, &b) in pred.iter().zip(truth.iter()) {
                    prop_assert_eq!(*fwd.entry(a).or_insert(b), b);
                }
            }
        }
    }
}
