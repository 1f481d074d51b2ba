//! Normalized spectral clustering: symmetric Laplacian, smallest
//! eigenvectors as an embedding, row normalization, then k-means.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_ascending;
use crate::seed::{derive_seed, label, rng_from_seed};

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_ITERS: usize = 100;

/// Output of the spectral step.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub labels: Vec<usize>,
    /// Full spectrum of the normalized Laplacian, ascending.
    pub eigenvalues: Vec<f64>,
    /// Filled by callers that ran the eigengap estimate.
    pub estimated_num_clusters: Option<usize>,
    pub kmeans_cost: f64,
}

fn check_adjacency(weights: &DMatrix<f64>) -> Result<()> {
    let n = weights.nrows();
    if weights.ncols() != n {
        return Err(Error::Dimension(format!(
            "adjacency must be square, got {n}x{}",
            weights.ncols()
        )));
    }
    for j in 0..n {
        for i in 0..j {
            if (weights[(i, j)] - weights[(j, i)]).abs() > 1e-10 {
                return Err(Error::Validation(format!(
                    "adjacency asymmetric at ({i}, {j})"
                )));
            }
        }
        for i in 0..n {
            if weights[(i, j)] < -1e-12 {
                return Err(Error::Validation(format!(
                    "negative adjacency weight at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// L = I - D^{-1/2} A D^{-1/2} with D the degree matrix. Zero-degree
/// nodes keep an identity row. The result is symmetrized to remove
/// rounding skew.
pub fn normalized_laplacian(weights: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_adjacency(weights)?;
    let n = weights.nrows();
    let mut inv_sqrt_degree = DVector::zeros(n);
    for i in 0..n {
        let degree: f64 = weights.row(i).iter().sum();
        inv_sqrt_degree[i] = if degree > 0.0 { degree.sqrt().recip() } else { 0.0 };
    }
    let mut lap = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let scaled = inv_sqrt_degree[i] * weights[(i, j)] * inv_sqrt_degree[j];
            lap[(i, j)] = if i == j { 1.0 - scaled } else { -scaled };
        }
    }
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (lap[(i, j)] + lap[(j, i)]);
            lap[(i, j)] = avg;
            lap[(j, i)] = avg;
        }
    }
    Ok(lap)
}

/// Eigengap heuristic: the cluster count i in [1, l_max] maximizing
/// lambda_{i+1} - lambda_i over the ascending Laplacian spectrum.
pub fn estimate_num_clusters(weights: &DMatrix<f64>, l_max: usize) -> Result<usize> {
    if l_max == 0 {
        return Err(Error::Config("l_max must be at least 1".into()));
    }
    let lap = normalized_laplacian(weights)?;
    let n = lap.nrows();
    if n <= 1 {
        return Ok(1);
    }
    let (eigenvalues, _) = symmetric_eigen_ascending(lap);
    let upper = l_max.min(n - 1);
    let mut best = (1usize, f64::NEG_INFINITY);
    for i in 1..=upper {
        let gap = eigenvalues[i] - eigenvalues[i - 1];
        if gap > best.1 {
            best = (i, gap);
        }
    }
    Ok(best.0)
}

fn row_point_distance(points: &DMatrix<f64>, i: usize, center: &DVector<f64>) -> f64 {
    let mut acc = 0.0;
    for (c, y) in center.iter().enumerate() {
        let d = points[(i, c)] - y;
        acc += d * d;
    }
    acc
}

fn row_row_distance(m: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..m.ncols() {
        let d = m[(a, c)] - m[(b, c)];
        acc += d * d;
    }
    acc
}

fn kmeans_single(
    points: &DMatrix<f64>,
    k: usize,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let dim = points.ncols();
    // Seeding: first center uniform, then proportional to squared
    // distance from the chosen set.
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    centers.push(points.row(first).transpose());
    let mut dist_sq: Vec<f64> = (0..n)
        .map(|i| row_point_distance(points, i, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist_sq.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(points.row(pick).transpose());
        for i in 0..n {
            let d = row_point_distance(points, i, centers.last().unwrap());
            if d < dist_sq[i] {
                dist_sq[i] = d;
            }
        }
    }
    let mut labels = vec![0usize; n];
    let mut cost = f64::INFINITY;
    for _ in 0..iters {
        // Assignment.
        let mut new_cost = 0.0;
        for i in 0..n {
            let mut best = (0usize, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = row_point_distance(points, i, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            labels[i] = best.0;
            new_cost += best.1;
        }
        // Empty-cluster repair: reseed from the farthest point.
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        let mut repaired = false;
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        row_point_distance(points, a, &centers[labels[a]])
                            .total_cmp(&row_point_distance(points, b, &centers[labels[b]]))
                    })
                    .unwrap();
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
                centers[c] = points.row(far).transpose();
                repaired = true;
            }
        }
        // Update.
        let mut sums = vec![DVector::<f64>::zeros(dim); k];
        for i in 0..n {
            sums[labels[i]] += points.row(i).transpose();
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }
        if !repaired && (cost - new_cost).abs() <= 1e-12 * cost.max(1.0) {
            break;
        }
        cost = new_cost;
    }
    // Final assignment against the updated centers.
    let mut final_cost = 0.0;
    for i in 0..n {
        let mut best = (0usize, f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let d = row_point_distance(points, i, center);
            if d < best.1 {
                best = (c, d);
            }
        }
        labels[i] = best.0;
        final_cost += best.1;
    }
    (labels, final_cost)
}

/// Best-of-restarts Lloyd iterations on row vectors. Deterministic for a
/// fixed seed.
pub fn kmeans(
    points: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<(Vec<usize>, f64)> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::Config("cluster count k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Config(format!(
            "cluster count k = {k} exceeds the {n} available rows"
        )));
    }
    if restarts == 0 || iters == 0 {
        return Err(Error::Config("restarts and iters must be at least 1".into()));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..restarts {
        let mut rng = rng_from_seed(derive_seed(seed, &[label("kmeans"), restart as u64]));
        let (labels, cost) = kmeans_single(points, k, iters, &mut rng);
        let improved = best.as_ref().map_or(true, |(_, c)| cost < *c);
        if improved {
            best = Some((labels, cost));
        }
    }
    Ok(best.unwrap())
}

/// Clusters an adjacency matrix into l_hat groups: embed each node with
/// the l_hat smallest-eigenvalue eigenvectors of the normalized
/// Laplacian, normalize nonzero embedding rows, then k-means. Zero rows
/// inherit the label of the nearest nonzero row, or cluster 0 if every
/// row is zero.
pub fn spectral_clustering(
    weights: &DMatrix<f64>,
    l_hat: usize,
    seed: u64,
) -> Result<SpectralResult> {
    let n = weights.nrows();
    if l_hat == 0 {
        return Err(Error::Config("cluster count must be at least 1".into()));
    }
    if l_hat > n {
        return Err(Error::Config(format!(
            "cluster count {l_hat} exceeds the {n} points"
        )));
    }
    let lap = normalized_laplacian(weights)?;
    let (eigenvalues, vectors) = symmetric_eigen_ascending(lap);
    let mut embedding = DMatrix::zeros(n, l_hat);
    for c in 0..l_hat {
        embedding.set_column(c, &vectors.column(c).into_owned());
    }
    let mut nonzero_rows = Vec::with_capacity(n);
    for i in 0..n {
        let norm = embedding.row(i).norm();
        if norm > 1e-12 {
            for c in 0..l_hat {
                embedding[(i, c)] /= norm;
            }
            nonzero_rows.push(i);
        }
    }
    let mut labels = vec![0usize; n];
    let mut kmeans_cost = 0.0;
    if !nonzero_rows.is_empty() {
        let rows = DMatrix::from_fn(nonzero_rows.len(), l_hat, |r, c| {
            embedding[(nonzero_rows[r], c)]
        });
        let k = l_hat.min(nonzero_rows.len());
        let (sub_labels, cost) = kmeans(&rows, k, KMEANS_RESTARTS, KMEANS_ITERS, seed)?;
        kmeans_cost = cost;
        for (pos, &i) in nonzero_rows.iter().enumerate() {
            labels[i] = sub_labels[pos];
        }
        for i in 0..n {
            if embedding.row(i).norm() <= 1e-12 {
                let nearest = nonzero_rows
                    .iter()
                    .min_by(|&&a, &&b| {
                        row_row_distance(&embedding, a, i)
                            .total_cmp(&row_row_distance(&embedding, b, i))
                    })
                    .unwrap();
                labels[i] = labels[*nearest];
            }
        }
    }
    Ok(SpectralResult {
        labels,
        eigenvalues,
        estimated_num_clusters: None,
        kmeans_cost,
    })
}

/// Union-find components over edges with weight above the tolerance.
pub fn connected_components(weights: &DMatrix<f64>, weight_tol: f64) -> Result<Vec<usize>> {
    if weight_tol < 0.0 {
        return Err(Error::Config(format!(
            "weight tolerance must be nonnegative, got {weight_tol}"
        )));
    }
    check_adjacency(weights)?;
    let n = weights.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..j {
            if weights[(i, j)] > weight_tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    // Normalize ids to 0..k in order of first appearance.
    let mut ids = vec![usize::MAX; n];
    let mut next = 0usize;
    let mut out = vec![0usize; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        out[i] = ids[root];
    }
    Ok(out)
}
