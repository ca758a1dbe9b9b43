//! SVD-backed helpers shared across the crate: numerical rank, minimum-norm
//! least squares, and orthonormal kernel bases.
//!
//! All three use the same thresholding rule: a singular value counts as zero
//! when it is at most `rank_tol * max(nrows, ncols) * sigma_max`. Matrices
//! with zero rows or columns never reach the SVD; their rank is zero by
//! convention and their kernel is the whole domain.
//!
//! Factorizations are computed with one-sided Jacobi rotations on the tall
//! orientation: the columns of the matrix (transposed first when it is wide)
//! are rotated until mutually orthogonal, their norms are the singular
//! values, and the accumulated rotations form the right factor. The factors
//! then multiply back to the input at working precision for every input,
//! which the feasibility residuals and kernel certificates depend on; the
//! general-purpose bidiagonal route does not guarantee that, and mispaired
//! factors on in-span targets were observed with it in both orientations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::scalar::{real, Real};

/// Thin SVD of `m` with both factor matrices, `sigma` holding the
/// `min(nrows, ncols)` singular values in descending order, `u` the left
/// vectors as columns and `v` the right vectors as columns. Factor columns
/// paired with a singular value at rounding level carry no information
/// (they are normalized rotation residue, or zero for an exact zero), so
/// callers must filter by their threshold before touching either factor.
struct ThinSvd<T: Real> {
    sigma: DVector<T>,
    u: DMatrix<T>,
    v: DMatrix<T>,
}

fn thin_svd<T: Real>(m: &DMatrix<T>) -> ThinSvd<T> {
    if m.nrows() >= m.ncols() {
        let (sigma, u, v) = jacobi_svd(m.clone());
        ThinSvd { sigma, u, v }
    } else {
        let (sigma, u, v) = jacobi_svd(m.transpose());
        ThinSvd { sigma, u: v, v: u }
    }
}

/// Thin SVD of a tall matrix (`nrows >= ncols`) by one-sided Jacobi
/// rotations, returned as `(sigma, u, v)` with `w = u * diag(sigma) * v^T`
/// and singular values sorted in descending order.
fn jacobi_svd<T: Real>(w: DMatrix<T>) -> (DVector<T>, DMatrix<T>, DMatrix<T>) {
    debug_assert!(w.nrows() >= w.ncols(), "jacobi_svd expects a tall matrix");
    let cols = w.ncols();
    let (mut w, v) = orthogonalize_columns(w, true);
    let v = v.expect("rotations were accumulated");

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<T> = order.iter().map(|&i| w.column(i).norm()).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("norms are finite"));

    let mut sigma = DVector::zeros(cols);
    let mut u = DMatrix::zeros(w.nrows(), cols);
    let mut v_sorted = DMatrix::zeros(cols, cols);
    for (slot, &i) in order.iter().enumerate() {
        sigma[slot] = norms[i];
        if norms[i] > T::zero() {
            w.column_mut(i).unscale_mut(norms[i]);
            u.column_mut(slot).copy_from(&w.column(i));
        }
        v_sorted.column_mut(slot).copy_from(&v.column(i));
    }
    (sigma, u, v_sorted)
}

/// Rotates the columns of `w` pairwise until they are mutually orthogonal
/// relative to machine precision. When `accumulate` is set, the same
/// rotations are applied to an identity, so `input = result * accumulated^T`
/// holds for the returned pair.
fn orthogonalize_columns<T: Real>(
    mut w: DMatrix<T>,
    accumulate: bool,
) -> (DMatrix<T>, Option<DMatrix<T>>) {
    let cols = w.ncols();
    let mut v = if accumulate {
        Some(DMatrix::identity(cols, cols))
    } else {
        None
    };
    let eps = T::default_epsilon();
    // Cyclic sweeps converge quadratically; the cap is generous slack, not a
    // tuning point.
    for _ in 0..64 {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let dot = w.column(i).dot(&w.column(j));
                let ni = w.column(i).norm();
                let nj = w.column(j).norm();
                if dot.abs() <= eps * ni * nj {
                    continue;
                }
                rotated = true;
                // Jacobi pair rotation zeroing the (i, j) inner product; the
                // smaller root keeps the rotation angle at or below 45
                // degrees, and its denominator never vanishes.
                let tau = (nj * nj - ni * ni) / (dot + dot);
                let root = (T::one() + tau * tau).sqrt();
                let t = if tau >= T::zero() {
                    -T::one() / (tau + root)
                } else {
                    T::one() / (root - tau)
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, i, j, c, s);
                if let Some(v) = v.as_mut() {
                    rotate_pair(v, i, j, c, s);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// Applies the plane rotation `[c, -s; s, c]` to columns `i` and `j`.
fn rotate_pair<T: Real>(m: &mut DMatrix<T>, i: usize, j: usize, c: T, s: T) {
    for r in 0..m.nrows() {
        let a = m[(r, i)];
        let b = m[(r, j)];
        m[(r, i)] = c * a + s * b;
        m[(r, j)] = c * b - s * a;
    }
}

/// Threshold below which singular values of an `nrows x ncols` matrix count
/// as zero.
fn threshold<T: Real>(nrows: usize, ncols: usize, sigma_max: T, rank_tol: T) -> T {
    let dim = T::from_usize(nrows.max(ncols)).expect("matrix dimension fits the scalar");
    rank_tol * dim * sigma_max
}

/// Numerical rank of `m`.
pub(crate) fn rank<T: Real>(m: &DMatrix<T>, rank_tol: T) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let tall = if m.nrows() >= m.ncols() {
        m.clone()
    } else {
        m.transpose()
    };
    let (w, _) = orthogonalize_columns(tall, false);
    let sv: Vec<T> = (0..w.ncols()).map(|i| w.column(i).norm()).collect();
    let max = sv.iter().copied().fold(T::zero(), T::max);
    let thr = threshold(m.nrows(), m.ncols(), max, rank_tol);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub(crate) struct Lstsq<T: Real> {
    pub solution: DVector<T>,
    /// Absolute residual `|a x - b|`.
    pub residual: T,
}

pub(crate) fn min_norm_lstsq<T: Real>(a: &DMatrix<T>, b: &DVector<T>, rank_tol: T) -> Lstsq<T> {
    assert_eq!(a.nrows(), b.len(), "rows of a must match the length of b");
    if a.ncols() == 0 {
        return Lstsq {
            solution: DVector::zeros(0),
            residual: b.norm(),
        };
    }
    if a.nrows() == 0 {
        return Lstsq {
            solution: DVector::zeros(a.ncols()),
            residual: T::zero(),
        };
    }
    let svd = thin_svd(a);
    let thr = threshold(a.nrows(), a.ncols(), svd.sigma.max(), rank_tol);
    let mut x = apply_pseudoinverse(&svd, thr, b);
    let mut residual = (a * &x - b).norm();
    // Refinement passes absorb the residual inflation an ill-conditioned
    // spectrum causes on feasible targets. Each correction stays in the
    // kept row space, so the minimum-norm property is preserved, and a
    // genuinely infeasible target keeps its distance: no update can shrink
    // the residual below the true least-squares optimum.
    for _ in 0..2 {
        let correction = apply_pseudoinverse(&svd, thr, &(b - a * &x));
        let candidate = &x + &correction;
        let candidate_residual = (a * &candidate - b).norm();
        if candidate_residual < residual {
            x = candidate;
            residual = candidate_residual;
        } else {
            break;
        }
    }
    Lstsq {
        solution: x,
        residual,
    }
}

/// Minimum-norm solution of `a x = b` through an existing factorization,
/// truncating singular values at `thr`.
fn apply_pseudoinverse<T: Real>(svd: &ThinSvd<T>, thr: T, b: &DVector<T>) -> DVector<T> {
    let mut x = DVector::zeros(svd.v.nrows());
    for i in 0..svd.sigma.len() {
        if svd.sigma[i] > thr {
            let coeff = svd.u.column(i).dot(b) / svd.sigma[i];
            x.axpy(coeff, &svd.v.column(i), T::one());
        }
    }
    x
}

/// Orthonormal basis of the numerical kernel of `m`, one column per kernel
/// direction. The basis is empty (zero columns) when `m` has full column
/// rank, and the identity when `m` has zero rows.
pub(crate) fn kernel_basis<T: Real>(m: &DMatrix<T>, rank_tol: T) -> DMatrix<T> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let svd = thin_svd(m);
    let sv = &svd.sigma;
    let thr = threshold(m.nrows(), cols, sv.max(), rank_tol);

    // Projector onto the kernel: identity minus the row-space projector. The
    // thin SVD omits right singular vectors beyond min(nrows, ncols), so the
    // kernel is recovered from the projector's eigenvectors instead of
    // directly from the right factor.
    let mut rank = 0;
    let mut proj = DMatrix::identity(cols, cols);
    for i in 0..sv.len() {
        if sv[i] > thr {
            rank += 1;
            let v = svd.v.column(i);
            proj -= v * v.transpose();
        }
    }
    if rank == cols {
        return DMatrix::zeros(cols, 0);
    }
    let eig = SymmetricEigen::new(proj);
    let keep: Vec<usize> = (0..cols)
        .filter(|&i| eig.eigenvalues[i] > real(0.5))
        .collect();
    let mut basis = DMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.column_mut(j).copy_from(&eig.eigenvectors.column(i));
    }
    basis
}

/// `a` raised to the `k`-th power by repeated multiplication; `k` is a small
/// horizon length everywhere this is used.
pub(crate) fn matrix_power<T: Real>(a: &DMatrix<T>, k: usize) -> DMatrix<T> {
    assert!(a.is_square(), "only square matrices have powers");
    let mut acc = DMatrix::identity(a.nrows(), a.nrows());
    for _ in 0..k {
        acc = &acc * a;
    }
    acc
}

/// Rows of `parts` stacked top to bottom. All parts must have equal column
/// counts; zero-row parts are allowed.
pub(crate) fn vstack<T: Real>(parts: &[&DMatrix<T>]) -> DMatrix<T> {
    let cols = parts.first().map_or(0, |m| m.ncols());
    let rows = parts.iter().map(|m| m.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for part in parts {
        assert_eq!(part.ncols(), cols, "stacked parts must have equal widths");
        out.rows_mut(at, part.nrows()).copy_from(*part);
        at += part.nrows();
    }
    out
}

/// Columns of `a` followed by columns of `b`; row counts must agree.
pub(crate) fn hcat<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.nrows(), b.nrows(), "joined parts must have equal heights");
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// The vectors of `parts` joined end to end.
pub(crate) fn vcat<T: Real>(parts: &[&DVector<T>]) -> DVector<T> {
    let len = parts.iter().map(|v| v.len()).sum();
    let mut out = DVector::zeros(len);
    let mut at = 0;
    for v in parts {
        out.rows_mut(at, v.len()).copy_from(*v);
        at += v.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_of_void_matrices_is_zero() {
        let tol = 1e-10;
        assert_eq!(rank(&DMatrix::<f64>::zeros(0, 4), tol), 0);
        assert_eq!(rank(&DMatrix::<f64>::zeros(4, 0), tol), 0);
        assert_eq!(rank(&DMatrix::<f64>::zeros(0, 0), tol), 0);
    }

    #[test]
    fn rank_counts_independent_directions() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_eq!(rank(&m, 1e-10), 1);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(rank(&id, 1e-10), 3);
    }

    #[test]
    fn min_norm_solution_solves_consistent_systems() {
        let a: DMatrix<f64> = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, -1.0, 1.0, 0.0, 1.0]);
        let b = DVector::from_column_slice(&[-2.0, 2.0, 1.0]);
        let ls = min_norm_lstsq(&a, &b, 1e-10);
        assert!(ls.residual < 1e-12);
        assert!((ls.solution[0] - -1.0).abs() < 1e-12);
        assert!((ls.solution[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_norm_picks_the_shortest_solution() {
        // x0 + x1 = 2 has minimum-norm solution (1, 1).
        let a: DMatrix<f64> = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_column_slice(&[2.0]);
        let ls = min_norm_lstsq(&a, &b, 1e-10);
        assert!((ls.solution[0] - 1.0).abs() < 1e-12);
        assert!((ls.solution[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_systems_follow_the_void_conventions() {
        let no_cols = min_norm_lstsq(
            &DMatrix::<f64>::zeros(2, 0),
            &DVector::from_column_slice(&[3.0, 4.0]),
            1e-10,
        );
        assert_eq!(no_cols.solution.len(), 0);
        assert!((no_cols.residual - 5.0).abs() < 1e-12);

        let no_rows = min_norm_lstsq(&DMatrix::<f64>::zeros(0, 3), &DVector::zeros(0), 1e-10);
        assert_eq!(no_rows.solution, DVector::zeros(3));
        assert_eq!(no_rows.residual, 0.0);
    }

    #[test]
    fn kernel_basis_is_orthonormal_and_annihilated() {
        let a: DMatrix<f64> = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, -2.0, 0.0, 1.0, 1.0]);
        let k = kernel_basis(&a, 1e-10);
        assert_eq!(k.ncols(), 1);
        assert!((&a * &k).norm() < 1e-12);
        assert!((k.column(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_of_zero_row_matrix_is_everything() {
        let k = kernel_basis(&DMatrix::<f64>::zeros(0, 3), 1e-10);
        assert_eq!(k, DMatrix::identity(3, 3));
    }

    #[test]
    fn full_column_rank_has_empty_kernel() {
        let a: DMatrix<f64> = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let k = kernel_basis(&a, 1e-10);
        assert_eq!(k.ncols(), 0);
        assert_eq!(k.nrows(), 2);
    }

    #[test]
    fn powers_multiply_out() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(matrix_power(&a, 0), DMatrix::identity(2, 2));
        assert_eq!(matrix_power(&a, 2), DMatrix::identity(2, 2));
        assert_eq!(matrix_power(&a, 3), a);
    }

    #[test]
    fn vstack_preserves_order_and_width() {
        let top = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let mid = DMatrix::<f64>::zeros(0, 2);
        let bot = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let s = vstack(&[&top, &mid, &bot]);
        assert_eq!(s, DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
    }

    proptest! {
        // The factors must multiply back to the input and stay orthonormal
        // for every shape, including wide and rank-deficient ones. Low-rank
        // inputs are exercised by multiplying two thin random factors.
        #[test]
        fn factors_multiply_back_for_every_shape(
            rows in 1usize..10,
            cols in 1usize..10,
            inner in 1usize..4,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let inner = inner.min(rows).min(cols);
            let left = DMatrix::from_fn(rows, inner, |_, _| rng.gen_range(-1.0..=1.0));
            let right = DMatrix::from_fn(inner, cols, |_, _| rng.gen_range(-1.0..=1.0));
            let m: DMatrix<f64> = left * right;

            let svd = thin_svd(&m);
            let recon = &svd.u * DMatrix::from_diagonal(&svd.sigma) * svd.v.transpose();
            let scale = 1.0_f64.max(m.norm());
            prop_assert!((recon - &m).norm() <= 1e-13 * scale);
            for i in 1..svd.sigma.len() {
                prop_assert!(svd.sigma[i] <= svd.sigma[i - 1]);
            }
            // Only columns above the rank threshold carry information; the
            // rest are rotation residue and may point anywhere.
            let thr = threshold(m.nrows(), m.ncols(), svd.sigma.max(), 1e-10);
            let kept: Vec<usize> = (0..svd.sigma.len())
                .filter(|&i| svd.sigma[i] > thr)
                .collect();
            for (a, &i) in kept.iter().enumerate() {
                prop_assert!((svd.u.column(i).norm() - 1.0).abs() <= 1e-13);
                prop_assert!((svd.v.column(i).norm() - 1.0).abs() <= 1e-13);
                for &j in &kept[a + 1..] {
                    prop_assert!(svd.u.column(i).dot(&svd.u.column(j)).abs() <= 1e-13);
                    prop_assert!(svd.v.column(i).dot(&svd.v.column(j)).abs() <= 1e-13);
                }
            }
        }

        // A target assembled inside the column span must come back with a
        // residual at rounding level, whatever the conditioning.
        #[test]
        fn in_span_targets_solve_to_rounding(
            rows in 1usize..8,
            cols in 1usize..8,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0));
            let x = DVector::from_fn(cols, |_, _| rng.gen_range(-1.0..=1.0));
            let b: DVector<f64> = &a * &x;

            let ls = min_norm_lstsq(&a, &b, 1e-10);
            let scale = 1.0_f64.max(b.norm());
            prop_assert!(ls.residual <= 1e-10 * scale);
        }
    }
}
