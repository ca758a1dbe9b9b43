//! Discrete-time LTI state-space models and finite input/output trajectories.
//!
//! A model is the usual quadruple `(A, B, C, D)` driving
//! `x(t+1) = A x(t) + B u(t)`, `y(t) = C x(t) + D u(t)`. Trajectories store
//! `T` input samples next to `T` output samples, one column per time step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{real, Real};

/// State-space model with `n` states, `m` inputs and `p` outputs.
///
/// # Example
///
/// ```
/// use hankelcast::lti::{StateSpace, Trajectory};
/// use nalgebra::{DMatrix, DVector};
///
/// // Accumulator: the output sums all past inputs.
/// let sys = StateSpace::from_row_slices(1, 1, 1, &[1.0], &[1.0], &[1.0], &[0.0]).unwrap();
/// let u = DMatrix::from_row_slice(1, 3, &[1.0, -1.0, 1.0]);
/// let y = sys.simulate(&DVector::zeros(1), &u).unwrap();
/// assert_eq!(y, DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]));
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace<T: nalgebra::Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
}

impl<T: Real> StateSpace<T> {
    /// Builds a model from its four matrices, validating that `A` is square
    /// and that `B`, `C`, `D` agree with it on the state, input and output
    /// dimensions.
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "columns of the square state matrix",
                expected: n,
                found: a.ncols(),
            });
        }
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "rows of the input matrix",
                expected: n,
                found: b.nrows(),
            });
        }
        if c.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "columns of the output matrix",
                expected: n,
                found: c.ncols(),
            });
        }
        if d.nrows() != c.nrows() {
            return Err(Error::DimensionMismatch {
                what: "rows of the feedthrough matrix",
                expected: c.nrows(),
                found: d.nrows(),
            });
        }
        if d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch {
                what: "columns of the feedthrough matrix",
                expected: b.ncols(),
                found: d.ncols(),
            });
        }
        Ok(Self { a, b, c, d })
    }

    /// Builds a model from row-major slices of the four matrices.
    pub fn from_row_slices(
        states: usize,
        inputs: usize,
        outputs: usize,
        a: &[T],
        b: &[T],
        c: &[T],
        d: &[T],
    ) -> Result<Self> {
        let expect = |what, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    what,
                    expected,
                    found,
                })
            }
        };
        expect("entries of the state matrix", states * states, a.len())?;
        expect("entries of the input matrix", states * inputs, b.len())?;
        expect("entries of the output matrix", outputs * states, c.len())?;
        expect("entries of the feedthrough matrix", outputs * inputs, d.len())?;
        Self::new(
            DMatrix::from_row_slice(states, states, a),
            DMatrix::from_row_slice(states, inputs, b),
            DMatrix::from_row_slice(outputs, states, c),
            DMatrix::from_row_slice(outputs, inputs, d),
        )
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Runs the model forward from `x0` under the input sequence `u` (one
    /// column per step) and returns the outputs, one column per step.
    pub fn simulate(&self, x0: &DVector<T>, u: &DMatrix<T>) -> Result<DMatrix<T>> {
        if x0.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "length of the initial state",
                expected: self.state_dim(),
                found: x0.len(),
            });
        }
        if u.nrows() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "input width",
                expected: self.input_dim(),
                found: u.nrows(),
            });
        }
        let mut x = x0.clone();
        let mut y = DMatrix::zeros(self.output_dim(), u.ncols());
        for t in 0..u.ncols() {
            let u_t = u.column(t);
            y.set_column(t, &(&self.c * &x + &self.d * u_t));
            x = &self.a * &x + &self.b * u_t;
        }
        Ok(y)
    }

    /// Observability matrix of depth `k`: the rows `C`, `CA`, ...,
    /// `CA^(k-1)` stacked, a `(p k) x n` matrix. Depth zero yields the
    /// `0 x n` matrix.
    pub fn observability_matrix(&self, k: usize) -> DMatrix<T> {
        let (n, p) = (self.state_dim(), self.output_dim());
        let mut obs = DMatrix::zeros(p * k, n);
        let mut block = self.c.clone();
        for i in 0..k {
            obs.rows_mut(i * p, p).copy_from(&block);
            if i + 1 < k {
                block = &block * &self.a;
            }
        }
        obs
    }

    /// Convolution matrix of depth `k`, mapping `k` stacked inputs to the
    /// forced part of `k` stacked outputs: block `(i, j)` is the Markov
    /// parameter `D` on the diagonal, `C A^(i-j-1) B` below it and zero
    /// above. Depth zero yields the `0 x 0` matrix.
    pub fn toeplitz_matrix(&self, k: usize) -> DMatrix<T> {
        let (m, p) = (self.input_dim(), self.output_dim());
        let mut markov = Vec::with_capacity(k);
        if k > 0 {
            markov.push(self.d.clone());
            let mut ca = self.c.clone();
            for _ in 1..k {
                markov.push(&ca * &self.b);
                ca = &ca * &self.a;
            }
        }
        let mut conv = DMatrix::zeros(p * k, m * k);
        for i in 0..k {
            for j in 0..=i {
                conv.view_mut((i * p, j * m), (p, m))
                    .copy_from(&markov[i - j]);
            }
        }
        conv
    }

    /// Lag of the model: the smallest `k` at which the observability matrix
    /// rank stops growing. The report keeps the rank sequence for depths
    /// `0..=lag+1` so the stabilization point can be inspected.
    ///
    /// The lag is a property of this realization; a non-minimal realization
    /// can report a larger value than a minimal one for the same behavior.
    pub fn lag(&self, rank_tol: T) -> LagReport {
        let n = self.state_dim();
        let mut ranks = vec![0usize];
        let mut lag = n;
        for k in 0..=n {
            let next = linalg::rank(&self.observability_matrix(k + 1), rank_tol);
            ranks.push(next);
            if ranks[k] == next {
                lag = k;
                break;
            }
        }
        LagReport {
            lag,
            observability_ranks: ranks,
        }
    }

    /// Whether every length-`t_ini` past of this model pins its outputs down
    /// uniquely over the next `t_f` steps: true exactly when `t_f == 0` or
    /// `t_ini` reaches the lag.
    pub fn unique_continuation(&self, t_ini: usize, t_f: usize) -> bool {
        t_f == 0 || t_ini >= self.lag(real(crate::DEFAULT_RANK_TOL)).lag
    }

    /// Whether some initial state explains `traj` under this model, within a
    /// relative residual of `tol`.
    ///
    /// The best-fitting initial state is found by least squares over the
    /// stacked output equation; the residual is compared against
    /// `tol * max(1, |y|)` where `y` is the stacked output vector.
    pub fn is_trajectory(&self, traj: &Trajectory<T>, tol: T) -> Result<bool> {
        if traj.input_dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "trajectory input width",
                expected: self.input_dim(),
                found: traj.input_dim(),
            });
        }
        if traj.output_dim() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                what: "trajectory output width",
                expected: self.output_dim(),
                found: traj.output_dim(),
            });
        }
        if traj.is_empty() {
            return Ok(true);
        }
        let (_, residual) = self.explaining_state(traj, real(crate::DEFAULT_RANK_TOL));
        let scale = T::one().max(traj.stacked_y().norm());
        Ok(residual / scale <= tol)
    }

    /// Least-squares initial state explaining `traj`, with the absolute
    /// residual of the fit. Widths must already be validated.
    pub(crate) fn explaining_state(&self, traj: &Trajectory<T>, rank_tol: T) -> (DVector<T>, T) {
        let t = traj.len();
        let obs = self.observability_matrix(t);
        let forced = self.toeplitz_matrix(t) * traj.stacked_u();
        let target = traj.stacked_y() - forced;
        let ls = linalg::min_norm_lstsq(&obs, &target, rank_tol);
        (ls.solution, ls.residual)
    }
}

/// Lag of a realization together with the observability rank sequence that
/// produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagReport {
    pub lag: usize,
    /// Ranks of the depth-`k` observability matrices for `k = 0..=lag+1`.
    pub observability_ranks: Vec<usize>,
}

/// Finite input/output trajectory: `T` input columns of width `m` alongside
/// `T` output columns of width `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: nalgebra::Scalar> {
    u: DMatrix<T>,
    y: DMatrix<T>,
}

impl<T: Real> Trajectory<T> {
    /// Pairs an input sequence with an output sequence of the same length.
    pub fn new(u: DMatrix<T>, y: DMatrix<T>) -> Result<Self> {
        if u.ncols() != y.ncols() {
            return Err(Error::DimensionMismatch {
                what: "output length",
                expected: u.ncols(),
                found: y.ncols(),
            });
        }
        Ok(Self { u, y })
    }

    /// Zero-length trajectory with the given signal widths.
    pub fn empty(inputs: usize, outputs: usize) -> Self {
        Self {
            u: DMatrix::zeros(inputs, 0),
            y: DMatrix::zeros(outputs, 0),
        }
    }

    /// Single-input single-output trajectory from two sample slices.
    pub fn siso(u: &[T], y: &[T]) -> Result<Self> {
        Self::new(
            DMatrix::from_row_slice(1, u.len(), u),
            DMatrix::from_row_slice(1, y.len(), y),
        )
    }

    pub fn len(&self) -> usize {
        self.u.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn u(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn y(&self) -> &DMatrix<T> {
        &self.y
    }

    /// Sub-trajectory of `len` samples starting at `start`. Panics when the
    /// window reaches past the end.
    pub fn window(&self, start: usize, len: usize) -> Self {
        assert!(
            start + len <= self.len(),
            "window {start}..{} exceeds trajectory length {}",
            start + len,
            self.len()
        );
        Self {
            u: self.u.columns(start, len).into_owned(),
            y: self.y.columns(start, len).into_owned(),
        }
    }

    /// The last `len` samples. Panics when `len` exceeds the length.
    pub fn tail(&self, len: usize) -> Self {
        self.window(self.len() - len, len)
    }

    /// Input samples `u(0), ..., u(T-1)` stacked into one vector.
    pub fn stacked_u(&self) -> DVector<T> {
        DVector::from_column_slice(self.u.as_slice())
    }

    /// Output samples `y(0), ..., y(T-1)` stacked into one vector.
    pub fn stacked_y(&self) -> DVector<T> {
        DVector::from_column_slice(self.y.as_slice())
    }

    /// Appends one sample to the end.
    pub(crate) fn append_sample(&mut self, u_t: &DVector<T>, y_t: &DVector<T>) {
        debug_assert_eq!(u_t.len(), self.input_dim());
        debug_assert_eq!(y_t.len(), self.output_dim());
        let t = self.len();
        self.u = self.u.clone().resize_horizontally(t + 1, T::zero());
        self.u.set_column(t, u_t);
        self.y = self.y.clone().resize_horizontally(t + 1, T::zero());
        self.y.set_column(t, y_t);
    }
}
