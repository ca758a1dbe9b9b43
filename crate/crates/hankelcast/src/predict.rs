//! Data-driven prediction. Given one recorded trajectory of an unknown LTI
//! system, a short recent trajectory fixing the present, and a future input
//! sequence, future outputs are solved for directly in the span of Hankel
//! matrix columns built from the records; no model is identified.
//!
//! [`predict`] solves the whole horizon in one least-squares problem.
//! [`predict_and_weave`] walks the horizon one step at a time, feeding each
//! predicted sample back into the history; that keeps the window depth at
//! `lag + 1` regardless of horizon, so it can succeed where the one-shot
//! solve runs out of data columns entirely.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::{self, StackPartition};
use crate::linalg;
use crate::lti::Trajectory;
use crate::scalar::{real, Real};

/// Inputs of a prediction: the recorded data, the recent history, the future
/// inputs, and the lag bound that sets how many trailing history samples
/// anchor the solve.
///
/// Tolerances default to [`crate::DEFAULT_RESIDUAL_TOL`] and
/// [`crate::DEFAULT_RANK_TOL`]; override them with the `with_*` builders.
/// A lag bound longer than the history is constructible, so that the
/// condition report can describe it, but [`predict`] rejects it.
#[derive(Clone, Debug)]
pub struct PredictionProblem<T: nalgebra::Scalar> {
    data: Trajectory<T>,
    ini: Trajectory<T>,
    u_future: DMatrix<T>,
    lag_bound: usize,
    residual_tol: T,
    rank_tol: T,
}

impl<T: Real> PredictionProblem<T> {
    pub fn new(
        data: Trajectory<T>,
        ini: Trajectory<T>,
        u_future: DMatrix<T>,
        lag_bound: usize,
    ) -> Result<Self> {
        if ini.input_dim() != data.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "history input width",
                expected: data.input_dim(),
                found: ini.input_dim(),
            });
        }
        if ini.output_dim() != data.output_dim() {
            return Err(Error::DimensionMismatch {
                what: "history output width",
                expected: data.output_dim(),
                found: ini.output_dim(),
            });
        }
        if u_future.nrows() != data.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "future input width",
                expected: data.input_dim(),
                found: u_future.nrows(),
            });
        }
        Ok(Self {
            data,
            ini,
            u_future,
            lag_bound,
            residual_tol: real(crate::DEFAULT_RESIDUAL_TOL),
            rank_tol: real(crate::DEFAULT_RANK_TOL),
        })
    }

    #[must_use]
    pub fn with_residual_tol(mut self, tol: T) -> Self {
        self.residual_tol = tol;
        self
    }

    #[must_use]
    pub fn with_rank_tol(mut self, tol: T) -> Self {
        self.rank_tol = tol;
        self
    }

    pub fn data(&self) -> &Trajectory<T> {
        &self.data
    }

    pub fn ini(&self) -> &Trajectory<T> {
        &self.ini
    }

    pub fn u_future(&self) -> &DMatrix<T> {
        &self.u_future
    }

    pub fn lag_bound(&self) -> usize {
        self.lag_bound
    }

    pub fn residual_tol(&self) -> T {
        self.residual_tol
    }

    pub fn rank_tol(&self) -> T {
        self.rank_tol
    }

    fn validate_window(&self) -> Result<()> {
        if self.lag_bound > self.ini.len() {
            return Err(Error::WindowExceedsHistory {
                window: self.lag_bound,
                available: self.ini.len(),
            });
        }
        Ok(())
    }

    /// Past/future partition at depth `lag_bound + future`, data columns
    /// first, history columns after them.
    fn window_parts(&self, future: usize) -> StackPartition<T> {
        let data = hankel::stack_partition(self.data.u(), self.data.y(), self.lag_bound, future)
            .expect("data trajectory lengths agree by construction");
        let ini = hankel::stack_partition(self.ini.u(), self.ini.y(), self.lag_bound, future)
            .expect("history trajectory lengths agree by construction");
        join(&data, &ini)
    }
}

/// Result of a prediction attempt.
///
/// `y_future` is present exactly when the solve met the residual tolerance.
/// For the weaving algorithm, `residual` and `g_norm` are maxima over the
/// executed steps, `unique_certificate` is their conjunction, and `steps`
/// records one diagnostic per step up to and including the first failure.
#[derive(Clone, Debug)]
pub struct PredictionOutcome<T: nalgebra::Scalar> {
    /// Predicted outputs, one column per future step.
    pub y_future: Option<DMatrix<T>>,
    /// Relative residual of the feasibility solve.
    pub residual: T,
    /// Whether the future-output rows annihilate the solve's kernel, making
    /// the prediction independent of which solution was picked.
    pub unique_certificate: bool,
    /// Norm of the minimum-norm solution, a conditioning indicator.
    pub g_norm: T,
    /// Per-step diagnostics; present for the weaving algorithm only.
    pub steps: Option<Vec<StepDiagnostic<T>>>,
}

/// Diagnostics for one step of the weaving algorithm.
#[derive(Clone, Debug)]
pub struct StepDiagnostic<T> {
    pub step: usize,
    pub residual: T,
    pub feasible: bool,
    pub unique_certificate: bool,
    pub g_norm: T,
}

/// Solves the whole horizon in one shot.
///
/// The stacked system matches the lag-bound tail of the history and the
/// future inputs against the data and history Hankel columns; future outputs
/// are read off the minimum-norm solution. `y_future` is `None` when no
/// column combination reproduces the past within the residual tolerance,
/// which includes the case where the data is simply shorter than the window
/// and the matrices have no columns at all.
pub fn predict<T: Real>(prob: &PredictionProblem<T>) -> Result<PredictionOutcome<T>> {
    prob.validate_window()?;
    let future = prob.u_future.ncols();
    let parts = prob.window_parts(future);
    let tail = prob.ini.tail(prob.lag_bound);
    let sol = solve_window(
        &parts,
        &tail.stacked_u(),
        &tail.stacked_y(),
        &DVector::from_column_slice(prob.u_future.as_slice()),
        prob.data.output_dim(),
        future,
        prob.residual_tol,
        prob.rank_tol,
    );
    Ok(PredictionOutcome {
        y_future: sol.y_future,
        residual: sol.residual,
        unique_certificate: sol.unique_certificate,
        g_norm: sol.g_norm,
        steps: None,
    })
}

/// Predicts one step at a time, weaving each predicted sample back into the
/// running history before the next step.
///
/// Every step solves a depth-`lag_bound + 1` problem whose data-side
/// partition is shared across steps; the history-side columns grow as
/// predicted samples accumulate. On the first infeasible step the outcome
/// carries no prediction and the diagnostics identify the step.
pub fn predict_and_weave<T: Real>(prob: &PredictionProblem<T>) -> Result<PredictionOutcome<T>> {
    prob.validate_window()?;
    let future = prob.u_future.ncols();
    let outputs = prob.data.output_dim();
    let data_part = hankel::stack_partition(prob.data.u(), prob.data.y(), prob.lag_bound, 1)
        .expect("data trajectory lengths agree by construction");
    let mut running = prob.ini.clone();
    let mut steps = Vec::with_capacity(future);
    let mut residual = T::zero();
    let mut g_norm = T::zero();
    let mut certificate = true;
    for t in 0..future {
        let ini_part = hankel::stack_partition(running.u(), running.y(), prob.lag_bound, 1)
            .expect("running trajectory lengths agree by construction");
        let parts = join(&data_part, &ini_part);
        let tail = running.tail(prob.lag_bound);
        let u_t = prob.u_future.column(t).into_owned();
        let sol = solve_window(
            &parts,
            &tail.stacked_u(),
            &tail.stacked_y(),
            &u_t,
            outputs,
            1,
            prob.residual_tol,
            prob.rank_tol,
        );
        residual = residual.max(sol.residual);
        g_norm = g_norm.max(sol.g_norm);
        certificate = certificate && sol.unique_certificate;
        steps.push(StepDiagnostic {
            step: t,
            residual: sol.residual,
            feasible: sol.y_future.is_some(),
            unique_certificate: sol.unique_certificate,
            g_norm: sol.g_norm,
        });
        match sol.y_future {
            Some(y_t) => running.append_sample(&u_t, &y_t.column(0).into_owned()),
            None => {
                return Ok(PredictionOutcome {
                    y_future: None,
                    residual,
                    unique_certificate: certificate,
                    g_norm,
                    steps: Some(steps),
                })
            }
        }
    }
    let y_future = running.y().columns(prob.ini.len(), future).into_owned();
    Ok(PredictionOutcome {
        y_future: Some(y_future),
        residual,
        unique_certificate: certificate,
        g_norm,
        steps: Some(steps),
    })
}

/// Splices two trajectories that agree on an overlap of `overlap` samples:
/// the result runs through `first`, then continues with the part of `second`
/// after the overlap. When the overlap covers the lag of a system explaining
/// both parts, the splice is again a trajectory of that system.
///
/// Overlap samples must agree within an absolute deviation of
/// [`crate::OVERLAP_TOL`].
pub fn weave<T: Real>(
    first: &Trajectory<T>,
    second: &Trajectory<T>,
    overlap: usize,
) -> Result<Trajectory<T>> {
    if second.input_dim() != first.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input width of the second trajectory",
            expected: first.input_dim(),
            found: second.input_dim(),
        });
    }
    if second.output_dim() != first.output_dim() {
        return Err(Error::DimensionMismatch {
            what: "output width of the second trajectory",
            expected: first.output_dim(),
            found: second.output_dim(),
        });
    }
    if overlap > first.len() || overlap > second.len() {
        return Err(Error::OverlapTooLong {
            overlap,
            first: first.len(),
            second: second.len(),
        });
    }
    let head = first.tail(overlap);
    let shared = second.window(0, overlap);
    let deviation = max_abs_difference(head.u(), shared.u()).max(max_abs_difference(head.y(), shared.y()));
    if deviation > real(crate::OVERLAP_TOL) {
        return Err(Error::OverlapMismatch {
            deviation: deviation.to_f64().unwrap_or(f64::NAN),
            tol: crate::OVERLAP_TOL,
        });
    }
    let rest = second.len() - overlap;
    let u = linalg::hcat(first.u(), &second.u().columns(overlap, rest).into_owned());
    let y = linalg::hcat(first.y(), &second.y().columns(overlap, rest).into_owned());
    Trajectory::new(u, y)
}

/// Report on the two checkable conditions under which a returned prediction
/// is guaranteed unique across every system explaining the data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InformativityReport {
    /// The history is at least as long as the supplied lag bound.
    pub past_covers_lag_bound: bool,
    /// The algorithm returned a prediction.
    pub prediction_produced: bool,
    /// The uniqueness certificate of the outcome.
    pub unique_certificate: bool,
    /// Conjunction of the first two conditions. When it holds, the returned
    /// prediction is the only one any explaining system with lag within the
    /// bound can produce; when it fails, uniqueness is not established (the
    /// data may still happen to be informative).
    pub sufficient_conditions_met: bool,
}

impl fmt::Display for InformativityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "yes" } else { "no" };
        let verdict = if self.sufficient_conditions_met {
            "sufficient conditions satisfied (under the supplied lag bound)"
        } else {
            "not established"
        };
        writeln!(f, "guaranteed-unique prediction: {verdict}")?;
        writeln!(
            f,
            "  history covers the lag bound: {}",
            yn(self.past_covers_lag_bound)
        )?;
        writeln!(f, "  prediction produced: {}", yn(self.prediction_produced))?;
        write!(f, "  uniqueness certificate: {}", yn(self.unique_certificate))
    }
}

/// Evaluates the sufficient conditions for a guaranteed-unique prediction on
/// a problem and the outcome of running it, if any.
pub fn check_informativity_conditions<T: Real>(
    prob: &PredictionProblem<T>,
    outcome: Option<&PredictionOutcome<T>>,
) -> InformativityReport {
    let past_covers_lag_bound = prob.ini.len() >= prob.lag_bound;
    let prediction_produced = outcome.is_some_and(|o| o.y_future.is_some());
    let unique_certificate = outcome.is_some_and(|o| o.unique_certificate);
    InformativityReport {
        past_covers_lag_bound,
        prediction_produced,
        unique_certificate,
        sufficient_conditions_met: past_covers_lag_bound && prediction_produced,
    }
}

struct WindowSolution<T: Real> {
    y_future: Option<DMatrix<T>>,
    residual: T,
    unique_certificate: bool,
    g_norm: T,
}

/// Solves one prediction window: find a column combination that reproduces
/// the recent past and the future inputs, then read the future outputs off
/// it. The uniqueness certificate asks whether the future-output rows vanish
/// on the kernel of the constraint matrix.
#[allow(clippy::too_many_arguments)]
fn solve_window<T: Real>(
    parts: &StackPartition<T>,
    u_past: &DVector<T>,
    y_past: &DVector<T>,
    u_future: &DVector<T>,
    outputs: usize,
    future: usize,
    residual_tol: T,
    rank_tol: T,
) -> WindowSolution<T> {
    let a = linalg::vstack(&[&parts.u_past, &parts.u_future, &parts.y_past]);
    let b = linalg::vcat(&[u_past, u_future, y_past]);
    let ls = linalg::min_norm_lstsq(&a, &b, rank_tol);
    let residual = ls.residual / T::one().max(b.norm());

    let kernel = linalg::kernel_basis(&a, rank_tol);
    let spill = (&parts.y_future * &kernel).norm();
    let unique_certificate =
        spill <= real::<T>(crate::CERTIFICATE_TOL) * T::one().max(parts.y_future.norm());

    let y_future = (residual <= residual_tol).then(|| {
        let stacked = &parts.y_future * &ls.solution;
        DMatrix::from_column_slice(outputs, future, stacked.as_slice())
    });
    WindowSolution {
        y_future,
        residual,
        unique_certificate,
        g_norm: ls.solution.norm(),
    }
}

/// Joins the data-side and history-side partitions, data columns first.
fn join<T: Real>(data: &StackPartition<T>, ini: &StackPartition<T>) -> StackPartition<T> {
    StackPartition {
        u_past: linalg::hcat(&data.u_past, &ini.u_past),
        u_future: linalg::hcat(&data.u_future, &ini.u_future),
        y_past: linalg::hcat(&data.y_past, &ini.y_past),
        y_future: linalg::hcat(&data.y_future, &ini.y_future),
    }
}

fn max_abs_difference<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    debug_assert_eq!(a.shape(), b.shape());
    if a.is_empty() {
        return T::zero();
    }
    (a - b).amax()
}
