//! Change-point detection by group-lasso self-representation.
//!
//! The solver minimizes `||X - XA||_F^2 + (lambda/2) ||A||_{2,1}` with an
//! accelerated proximal-gradient iteration (FISTA, restarted whenever the
//! objective would rise), then scores each column by the Euclidean norm of
//! its coefficient row and picks split points greedily with non-maximum
//! suppression.

use ndarray::{Array1, Array2};

use crate::descriptor::FeatureMatrix;
use crate::error::{Error, Result};
use crate::Real;

/// Solution of the self-representation problem.
#[derive(Debug, Clone)]
pub struct LassoSolution<T> {
    /// n x n coefficient matrix; row i holds column i's weights as a
    /// representative for every other column.
    pub coeffs: Array2<T>,
    /// Objective value after every accepted step (index 0 is the value at
    /// the zero initializer). Non-increasing by construction.
    pub objective_trace: Vec<T>,
    pub lambda: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Solver knobs. `tol` is the relative objective change that counts as
/// converged.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    pub lambda: T,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> SolveOptions<T> {
    pub fn new(lambda: T) -> Self {
        SolveOptions {
            lambda,
            tol: T::of_f64(1e-6),
            max_iter: 500,
        }
    }
}

/// Row-wise proximal operator of the l2,1 norm: scales the row by
/// `max(0, 1 - t / ||row||)`, annihilating rows with norm at most `t`.
pub fn group_lasso_prox<T: Real>(row: &[T], threshold: T) -> Vec<T> {
    let mut out = row.to_vec();
    prox_row_inplace(&mut out, threshold);
    out
}

fn prox_row_inplace<T: Real>(row: &mut [T], threshold: T) {
    if threshold <= T::zero() {
        return;
    }
    let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
    if norm <= threshold {
        for v in row.iter_mut() {
            *v = T::zero();
        }
    } else {
        let scale = T::one() - threshold / norm;
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
}

/// Smallest lambda that annihilates every row at the first proximal step
/// from `A = 0`; for any `lambda >= lambda_max` the solver returns the zero
/// matrix immediately.
pub fn lambda_max<T: Real>(x: &FeatureMatrix<T>) -> T {
    let gram = x.data.t().dot(&x.data);
    let four = T::of_f64(4.0);
    let mut best = T::zero();
    for row in gram.rows() {
        let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm > best {
            best = norm;
        }
    }
    four * best
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn max_eigenvalue<T: Real>(g: &Array2<T>) -> T {
    let n = g.nrows();
    let mut v = Array1::<T>::from_elem(n, T::one() / T::of_f64(n as f64).sqrt());
    let mut eig = T::zero();
    for _ in 0..200 {
        let w = g.dot(&v);
        let norm = w.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm <= T::zero() {
            return T::zero();
        }
        let next = w.mapv(|x| x / norm);
        let new_eig = norm;
        let rel = ((new_eig - eig).abs()) / new_eig.max(T::min_positive_value());
        v = next;
        eig = new_eig;
        if rel < T::of_f64(1e-13) {
            break;
        }
    }
    eig
}

struct Objective<'a, T> {
    gram: &'a Array2<T>,
    trace_gram: T,
    lambda: T,
}

impl<T: Real> Objective<'_, T> {
    /// `||X - XA||_F^2 + (lambda/2) sum_i ||A_i||`; the fit term expands to
    /// `tr(G) - 2<G, A> + <A, G A>` with `G = X^T X`.
    fn eval(&self, a: &Array2<T>) -> T {
        let ga = self.gram.dot(a);
        let mut fit = self.trace_gram;
        for (g, (v, gav)) in self.gram.iter().zip(a.iter().zip(ga.iter())) {
            fit = fit - (*g + *g) * *v + *v * *gav;
        }
        let mut penalty = T::zero();
        for row in a.rows() {
            penalty += row.iter().map(|&v| v * v).sum::<T>().sqrt();
        }
        fit + self.lambda / T::of_f64(2.0) * penalty
    }
}

/// Solve the self-representation problem for a feature matrix.
///
/// Runs FISTA from `A = 0` with step `1/L`, `L = 2 sigma_max(X)^2`, and a
/// momentum restart whenever a step would increase the objective, which
/// keeps the recorded trace non-increasing.
pub fn solve<T: Real>(x: &FeatureMatrix<T>, opts: SolveOptions<T>) -> Result<LassoSolution<T>> {
    if x.n_columns() < 2 {
        return Err(Error::DegenerateInput(
            "self-representation needs at least 2 columns".into(),
        ));
    }
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "feature matrix contains non-finite values".into(),
        ));
    }
    if !(opts.lambda > T::zero()) {
        return Err(Error::InvalidInput("lambda must be positive".into()));
    }

    let n = x.n_columns();
    let gram = x.data.t().dot(&x.data);
    let trace_gram = (0..n).map(|i| gram[[i, i]]).sum::<T>();
    let objective = Objective {
        gram: &gram,
        trace_gram,
        lambda: opts.lambda,
    };

    let lipschitz = (T::of_f64(2.0) * max_eigenvalue(&gram)).max(T::min_positive_value());
    let step = T::one() / lipschitz;
    let shrink = opts.lambda / (T::of_f64(2.0) * lipschitz);

    // gradient of the fit term at Y is 2 (G Y - G)
    let prox_step = |y: &Array2<T>| -> Array2<T> {
        let gy = gram.dot(y);
        let mut next = Array2::<T>::zeros((n, n));
        let two = T::of_f64(2.0);
        for ((r, c), v) in next.indexed_iter_mut() {
            *v = y[[r, c]] - step * two * (gy[[r, c]] - gram[[r, c]]);
        }
        for mut row in next.rows_mut() {
            prox_row_inplace(row.as_slice_mut().expect("contiguous row"), shrink);
        }
        next
    };

    let mut a = Array2::<T>::zeros((n, n));
    let mut y = a.clone();
    let mut momentum = T::one();
    let mut f_current = objective.eval(&a);
    let mut trace = vec![f_current];
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=opts.max_iter {
        iterations = iter;
        let mut candidate = prox_step(&y);
        let mut f_candidate = objective.eval(&candidate);

        if f_candidate > f_current {
            // restart momentum and take a plain proximal step from A
            y = a.clone();
            momentum = T::one();
            candidate = prox_step(&y);
            f_candidate = objective.eval(&candidate);
            if f_candidate > f_current {
                // no further descent possible at this step size
                converged = true;
                break;
            }
        }

        let denom = f_current.abs().max(T::min_positive_value());
        let rel_change = (f_current - f_candidate) / denom;

        let next_momentum =
            (T::one() + (T::one() + T::of_f64(4.0) * momentum * momentum).sqrt()) / T::of_f64(2.0);
        let beta = (momentum - T::one()) / next_momentum;
        let mut next_y = candidate.clone();
        for ((r, c), v) in next_y.indexed_iter_mut() {
            *v += beta * (candidate[[r, c]] - a[[r, c]]);
        }
        y = next_y;
        a = candidate;
        momentum = next_momentum;
        f_current = f_candidate;
        trace.push(f_current);

        if rel_change < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(LassoSolution {
        coeffs: a,
        objective_trace: trace,
        lambda: opts.lambda,
        iterations,
        converged,
    })
}

/// Evaluate the objective for an arbitrary coefficient matrix (used by the
/// tests as an independent check on solver quality).
pub fn objective_value<T: Real>(x: &FeatureMatrix<T>, a: &Array2<T>, lambda: T) -> T {
    let gram = x.data.t().dot(&x.data);
    let n = x.n_columns();
    let trace_gram = (0..n).map(|i| gram[[i, i]]).sum::<T>();
    Objective {
        gram: &gram,
        trace_gram,
        lambda,
    }
    .eval(a)
}

/// Per-column score: the Euclidean norm of the column's coefficient row.
/// Columns that act as representatives for many frames score high.
pub fn score_frames<T: Real>(solution: &LassoSolution<T>) -> Vec<T> {
    solution
        .coeffs
        .rows()
        .into_iter()
        .map(|row| row.iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect()
}

/// Split points chosen from the per-column scores.
#[derive(Debug, Clone)]
pub struct SplitSet<T> {
    /// Ascending subsampled-column indices.
    pub splits: Vec<usize>,
    pub scores: Vec<T>,
}

/// Greedy top-k selection with non-maximum suppression: walk candidates by
/// descending score (ties to the lower index) and skip any candidate closer
/// than `min_gap` columns to an accepted split.
pub fn select_splits<T: Real>(scores: &[T], k: usize, min_gap: usize) -> SplitSet<T> {
    let min_gap = min_gap.max(1);
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut accepted: Vec<usize> = Vec::new();
    for &candidate in &order {
        if accepted.len() >= k {
            break;
        }
        if accepted
            .iter()
            .all(|&s| candidate.abs_diff(s) >= min_gap)
        {
            accepted.push(candidate);
        }
    }
    accepted.sort_unstable();
    SplitSet {
        splits: accepted,
        scores: scores.to_vec(),
    }
}

/// Number of split points that yields roughly `target_segment_seconds` per
/// segment: `max(0, round(duration / target) - 1)`.
pub fn target_split_count(n_frames_fullrate: usize, fps: f64, target_segment_seconds: f64) -> usize {
    let duration = n_frames_fullrate as f64 / fps;
    let segments = (duration / target_segment_seconds).round() as i64;
    (segments - 1).max(0) as usize
}

/// CSV dump of scores and chosen splits: `column,fullrate_index,score,is_split`.
pub fn write_scores_csv<T: Real>(
    out: &mut impl std::io::Write,
    frame_indices: &[usize],
    split_set: &SplitSet<T>,
) -> Result<()> {
    writeln!(out, "column,fullrate_index,score,is_split")?;
    for (col, &score) in split_set.scores.iter().enumerate() {
        let is_split = split_set.splits.binary_search(&col).is_ok();
        writeln!(
            out,
            "{col},{},{score},{}",
            frame_indices.get(col).copied().unwrap_or(col),
            is_split as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix_from(data: Array2<f64>) -> FeatureMatrix<f64> {
        let n = data.ncols();
        FeatureMatrix::from_parts(data, (0..n).collect(), 1.0).unwrap()
    }

    #[test]
    fn prox_closed_form_cases() {
        let out = group_lasso_prox(&[3.0, 4.0], 1.0);
        assert!((out[0] - 2.4).abs() < 1e-12);
        assert!((out[1] - 3.2).abs() < 1e-12);

        let zeroed = group_lasso_prox(&[3.0, 4.0], 5.0);
        assert_eq!(zeroed, vec![0.0, 0.0]);

        let identity = group_lasso_prox(&[1.5, -2.5, 0.25], 0.0);
        assert_eq!(identity, vec![1.5, -2.5, 0.25]);
    }

    #[test]
    fn prox_matches_closed_form_on_random_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let len = rng.gen_range(1..12);
            let row: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let t: f64 = rng.gen_range(0.0..4.0);
            let got = group_lasso_prox(&row, t);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = (1.0 - t / norm).max(0.0);
            for (g, r) in got.iter().zip(&row) {
                assert!((g - r * scale).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn lambda_at_or_above_lambda_max_gives_zero_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = Array2::from_shape_fn((8, 6), |_| rng.gen_range(-1.0..1.0));
        let x = matrix_from(data);
        let lmax = lambda_max(&x);
        let sol = solve(&x, SolveOptions::new(lmax)).unwrap();
        assert!(sol.coeffs.iter().all(|&v| v == 0.0));
        assert!(sol.iterations <= 2, "iterations = {}", sol.iterations);
        assert!(sol.converged);
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..5 {
            let data = Array2::from_shape_fn((20, 15), |_| rng.gen_range(-1.0..1.0));
            let x = matrix_from(data);
            let lambda = 0.1 * lambda_max(&x);
            let sol = solve(&x, SolveOptions::new(lambda)).unwrap();
            for w in sol.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn two_block_solution_beats_single_representative_constructions() {
        // two blocks of five identical columns each
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c1: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..1.0)).collect();
        let c2: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut data = Array2::<f64>::zeros((12, 10));
        for col in 0..10 {
            let src = if col < 5 { &c1 } else { &c2 };
            for row in 0..12 {
                data[[row, col]] = src[row];
            }
        }
        let x = matrix_from(data);
        let lambda = 0.05 * lambda_max(&x);
        let opts = SolveOptions {
            lambda,
            tol: 1e-12,
            max_iter: 5000,
        };
        let sol = solve(&x, opts).unwrap();
        let solver_objective = objective_value(&x, &sol.coeffs, lambda);

        // every single-representative construction: column i represents the
        // first block, column j the second
        for i in 0..5 {
            for j in 5..10 {
                let mut a = Array2::<f64>::zeros((10, 10));
                for col in 0..5 {
                    a[[i, col]] = 1.0;
                }
                for col in 5..10 {
                    a[[j, col]] = 1.0;
                }
                let constructed = objective_value(&x, &a, lambda);
                assert!(
                    solver_objective <= constructed + 1e-9,
                    "solver {solver_objective} vs construction ({i},{j}) {constructed}"
                );
            }
        }
    }

    #[test]
    fn scores_read_row_norms() {
        let mut coeffs = Array2::<f64>::zeros((3, 3));
        coeffs[[0, 0]] = 3.0;
        coeffs[[0, 1]] = 4.0;
        coeffs[[2, 2]] = 1.0;
        let sol = LassoSolution {
            coeffs,
            objective_trace: vec![],
            lambda: 1.0,
            iterations: 0,
            converged: true,
        };
        assert_eq!(score_frames(&sol), vec![5.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_and_identity_score_cases() {
        let zero = LassoSolution {
            coeffs: Array2::<f64>::zeros((4, 4)),
            objective_trace: vec![],
            lambda: 1.0,
            iterations: 0,
            converged: true,
        };
        assert_eq!(score_frames(&zero), vec![0.0; 4]);
        let eye = LassoSolution {
            coeffs: Array2::<f64>::eye(4),
            objective_trace: vec![],
            lambda: 1.0,
            iterations: 0,
            converged: true,
        };
        assert_eq!(score_frames(&eye), vec![1.0; 4]);
    }

    #[test]
    fn select_splits_argmax_case() {
        let set = select_splits(&[0.0, 0.0, 9.0, 0.0, 0.0], 1, 1);
        assert_eq!(set.splits, vec![2]);
    }

    #[test]
    fn select_splits_greedy_nms_hand_trace() {
        // 9 at 0 accepted; 8 at 1 suppressed (distance 1 < 2); 7 at 4 accepted
        let set = select_splits(&[9.0, 8.0, 0.0, 0.0, 7.0], 2, 2);
        assert_eq!(set.splits, vec![0, 4]);
    }

    #[test]
    fn select_splits_k_zero_is_empty() {
        let set = select_splits(&[1.0, 2.0, 3.0], 0, 1);
        assert!(set.splits.is_empty());
    }

    #[test]
    fn split_selection_is_scale_invariant() {
        let scores = [0.3, 0.9, 0.1, 0.8, 0.2, 0.7];
        let a = select_splits(&scores, 3, 2);
        let scaled: Vec<f64> = scores.iter().map(|s| s * 42.0).collect();
        let b = select_splits(&scaled, 3, 2);
        assert_eq!(a.splits, b.splits);
    }

    #[test]
    fn split_count_targets_five_second_segments() {
        assert_eq!(target_split_count(2400, 24.0, 5.0), 19); // 100 s
        assert_eq!(target_split_count(96, 24.0, 5.0), 0); // 4 s
        assert_eq!(target_split_count(302, 24.0, 5.0), 2); // 12.58 s, round(2.52)-1
    }
}
