//! Hankel matrices of vector-valued signals, the mosaics that join them, and
//! the rank tests built on them.
//!
//! A depth-`k` Hankel matrix of a length-`T` signal has one column per
//! length-`k` window of the signal. Signals shorter than the depth produce a
//! void matrix with `q k` rows and zero columns; that case is well-formed and
//! flows through every operation here, because prediction deliberately feeds
//! short histories into deep windows. Void matrices keep their logical
//! dimensions: a `q k x 0` block is distinct from a `0 x c` one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Depth-`k` Hankel matrix of a signal, remembering the depth and the signal
/// width so that degenerate shapes stay interpretable.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelBlock<T: nalgebra::Scalar> {
    data: DMatrix<T>,
    depth: usize,
    signal_width: usize,
}

impl<T: Real> HankelBlock<T> {
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.data
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn signal_width(&self) -> usize {
        self.signal_width
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn columns(&self) -> usize {
        self.data.ncols()
    }
}

/// Builds the depth-`depth` Hankel matrix of `w`, a signal with one column
/// per sample. Column `j` stacks the samples `w(j), ..., w(j+depth-1)`; there
/// are `T - depth + 1` columns for a length-`T` signal, or none at all when
/// the signal is shorter than the depth.
pub fn hankel<T: Real>(w: &DMatrix<T>, depth: usize) -> HankelBlock<T> {
    let q = w.nrows();
    let cols = (w.ncols() + 1).saturating_sub(depth);
    let mut data = DMatrix::zeros(q * depth, cols);
    for j in 0..cols {
        for i in 0..depth {
            data.view_mut((i * q, j), (q, 1)).copy_from(&w.column(j + i));
        }
    }
    HankelBlock {
        data,
        depth,
        signal_width: q,
    }
}

/// Joins Hankel blocks of the same depth and signal width side by side.
/// Blocks without columns contribute nothing but are legal operands.
pub fn mosaic<T: Real>(blocks: &[HankelBlock<T>]) -> Result<HankelBlock<T>> {
    let first = blocks.first().ok_or(Error::Empty {
        what: "mosaic block list",
    })?;
    for block in &blocks[1..] {
        if block.depth != first.depth {
            return Err(Error::BlockMismatch {
                what: "depth",
                left: first.depth,
                right: block.depth,
            });
        }
        if block.signal_width != first.signal_width {
            return Err(Error::BlockMismatch {
                what: "signal width",
                left: first.signal_width,
                right: block.signal_width,
            });
        }
    }
    let cols = blocks.iter().map(|b| b.columns()).sum();
    let mut data = DMatrix::zeros(first.rows(), cols);
    let mut at = 0;
    for block in blocks {
        data.columns_mut(at, block.columns()).copy_from(&block.data);
        at += block.columns();
    }
    Ok(HankelBlock {
        data,
        depth: first.depth,
        signal_width: first.signal_width,
    })
}

/// Depth-`(past + future)` Hankel matrices of an input/output pair, with the
/// rows split at the past/future boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct StackPartition<T: nalgebra::Scalar> {
    /// First `m * past` rows of the input Hankel matrix.
    pub u_past: DMatrix<T>,
    /// Remaining `m * future` rows of the input Hankel matrix.
    pub u_future: DMatrix<T>,
    /// First `p * past` rows of the output Hankel matrix.
    pub y_past: DMatrix<T>,
    /// Remaining `p * future` rows of the output Hankel matrix.
    pub y_future: DMatrix<T>,
}

/// Builds the four partition blocks used by the prediction solver from an
/// input sequence and an output sequence of equal length.
pub fn stack_partition<T: Real>(
    u: &DMatrix<T>,
    y: &DMatrix<T>,
    past: usize,
    future: usize,
) -> Result<StackPartition<T>> {
    if u.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            what: "output length",
            expected: u.ncols(),
            found: y.ncols(),
        });
    }
    let (m, p) = (u.nrows(), y.nrows());
    let depth = past + future;
    let hu = hankel(u, depth).into_matrix();
    let hy = hankel(y, depth).into_matrix();
    Ok(StackPartition {
        u_past: hu.rows(0, m * past).into_owned(),
        u_future: hu.rows(m * past, m * future).into_owned(),
        y_past: hy.rows(0, p * past).into_owned(),
        y_future: hy.rows(p * past, p * future).into_owned(),
    })
}

/// Numerical rank of `m`: the number of singular values above
/// `rank_tol * max(nrows, ncols) * sigma_max`. Void matrices have rank zero.
pub fn numerical_rank<T: Real>(m: &DMatrix<T>, rank_tol: T) -> usize {
    linalg::rank(m, rank_tol)
}

/// Whether the input sequence `u` is persistently exciting of the given
/// order, i.e. its depth-`order` Hankel matrix has full row rank. Order zero
/// holds trivially.
pub fn is_persistently_exciting<T: Real>(u: &DMatrix<T>, order: usize, rank_tol: T) -> bool {
    numerical_rank(hankel(u, order).matrix(), rank_tol) == u.nrows() * order
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn series(samples: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, samples.len(), samples)
    }

    #[test]
    fn windows_become_columns() {
        let h = hankel(&series(&[1.0, -1.0, 1.0]), 2);
        assert_eq!(h.matrix(), &DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!((h.depth(), h.signal_width()), (2, 1));
    }

    #[test]
    fn wide_signals_stack_whole_samples() {
        let w = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let h = hankel(&w, 2);
        assert_eq!(
            h.matrix(),
            &DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 4.0, 5.0, 2.0, 3.0, 5.0, 6.0])
        );
    }

    #[test]
    fn short_signals_yield_void_blocks_with_logical_rows() {
        let h = hankel(&series(&[1.0, -1.0, 1.0]), 4);
        assert_eq!((h.rows(), h.columns()), (4, 0));
        assert_eq!(h.depth(), 4);
    }

    #[test]
    fn depth_zero_keeps_one_column_per_window() {
        let h = hankel(&series(&[1.0, -1.0, 1.0]), 0);
        assert_eq!((h.rows(), h.columns()), (0, 4));
    }

    #[test]
    fn mosaic_concatenates_columns() {
        let data = hankel(&series(&[1.0, -1.0, 1.0]), 2);
        let ini = hankel(&series(&[-2.0, 2.0]), 2);
        let joined = mosaic(&[data, ini]).unwrap();
        assert_eq!(
            joined.matrix(),
            &DMatrix::from_row_slice(2, 3, &[1.0, -1.0, -2.0, -1.0, 1.0, 2.0])
        );
    }

    #[test]
    fn void_blocks_are_mosaic_identities() {
        let data = hankel(&series(&[1.0, -1.0, 1.0]), 2);
        let void = hankel(&series(&[5.0]), 2);
        assert_eq!(void.columns(), 0);
        let joined = mosaic(&[data.clone(), void]).unwrap();
        assert_eq!(joined, data);
    }

    #[test]
    fn mismatched_blocks_are_rejected() {
        let a = hankel(&series(&[1.0, 2.0, 3.0]), 2);
        let b = hankel(&series(&[1.0, 2.0, 3.0]), 3);
        assert!(matches!(
            mosaic(&[a.clone(), b]),
            Err(Error::BlockMismatch { what: "depth", .. })
        ));
        let wide = hankel(&DMatrix::from_row_slice(2, 3, &[1.0; 6]), 2);
        assert!(matches!(
            mosaic(&[a, wide]),
            Err(Error::BlockMismatch { what: "signal width", .. })
        ));
        assert!(matches!(
            mosaic::<f64>(&[]),
            Err(Error::Empty { .. })
        ));
    }

    #[test]
    fn partition_splits_past_from_future() {
        let u = series(&[1.0, -1.0, 1.0]);
        let y = series(&[0.0, 1.0, 0.0]);
        let parts = stack_partition(&u, &y, 1, 1).unwrap();
        assert_eq!(parts.u_past, DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        assert_eq!(parts.u_future, DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));
        assert_eq!(parts.y_past, DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        assert_eq!(parts.y_future, DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
    }

    #[test]
    fn partition_row_counts_scale_with_widths() {
        let u = DMatrix::from_row_slice(2, 6, &[0.0; 12]);
        let y = DMatrix::from_row_slice(1, 6, &[0.0; 6]);
        let parts = stack_partition(&u, &y, 2, 3).unwrap();
        assert_eq!(parts.u_past.nrows(), 4);
        assert_eq!(parts.u_future.nrows(), 6);
        assert_eq!(parts.y_past.nrows(), 2);
        assert_eq!(parts.y_future.nrows(), 3);
        assert_eq!(parts.u_past.ncols(), 2);
    }

    #[test]
    fn partition_rejects_unequal_lengths() {
        let out = stack_partition(&series(&[1.0, 2.0]), &series(&[1.0]), 1, 1);
        assert!(matches!(out, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rank_of_repeating_window_collapses() {
        let h = hankel(&series(&[1.0, -1.0, 1.0]), 2);
        assert_eq!(numerical_rank(h.matrix(), 1e-10), 1);
        assert_eq!(numerical_rank(&DMatrix::<f64>::identity(3, 3), 1e-10), 3);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(4, 0), 1e-10), 0);
    }

    #[test]
    fn alternating_input_is_not_rich_enough_at_order_two() {
        let u = series(&[1.0, -1.0, 1.0]);
        assert!(is_persistently_exciting(&u, 1, 1e-10));
        assert!(!is_persistently_exciting(&u, 2, 1e-10));
        assert!(is_persistently_exciting(&u, 0, 1e-10));
    }

    proptest! {
        #[test]
        fn hankel_shape_and_shift_structure(
            width in 1usize..3,
            len in 0usize..8,
            depth in 0usize..5,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w = DMatrix::from_fn(width, len, |_, _| rng.gen_range(-10.0..10.0));
            let h = hankel(&w, depth);

            prop_assert_eq!(h.rows(), width * depth);
            prop_assert_eq!(h.columns(), (len + 1).saturating_sub(depth));
            for j in 0..h.columns() {
                for i in 0..depth {
                    for r in 0..width {
                        prop_assert_eq!(h.matrix()[(i * width + r, j)], w[(r, j + i)]);
                    }
                }
            }
        }

        #[test]
        fn mosaic_width_adds_up(
            len_a in 0usize..8,
            len_b in 0usize..8,
            depth in 1usize..4,
        ) {
            let a = hankel(&DMatrix::from_fn(1, len_a, |_, j| j as f64), depth);
            let b = hankel(&DMatrix::from_fn(1, len_b, |_, j| -(j as f64)), depth);
            let joined = mosaic(&[a.clone(), b.clone()]).unwrap();
            prop_assert_eq!(joined.columns(), a.columns() + b.columns());
            prop_assert_eq!(joined.rows(), depth);
        }
    }
}
