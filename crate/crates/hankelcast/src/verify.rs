//! Independent cross-checks for the prediction machinery: a hand-built
//! family of systems explaining one canonical record, a kernel-based oracle
//! for unique continuation, and direct simulation of input/output
//! recursions. None of these go through the Hankel solver, which is what
//! makes them useful as ground truth in tests.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::{StateSpace, Trajectory};
use crate::scalar::{real, Real};

/// One-parameter family of single-state systems that all explain the
/// alternating accumulator record `u = (1, -1, 1)`, `y = (0, 1, 0)`.
///
/// Member `r` is `x(t+1) = x(t) + (2r+1) u(t)`, `y(t) = x(t) + r u(t)`; its
/// outputs obey `y(t+1) = y(t) + r u(t+1) + (r+1) u(t)`. All members agree
/// on that record, yet differ on most other inputs, which makes the family a
/// sharp test of what the record alone can and cannot pin down.
pub fn integrator_family<T: Real>(r: T) -> StateSpace<T> {
    let one = T::one();
    StateSpace::new(
        DMatrix::from_element(1, 1, one),
        DMatrix::from_element(1, 1, real::<T>(2.0) * r + one),
        DMatrix::from_element(1, 1, one),
        DMatrix::from_element(1, 1, r),
    )
    .expect("single-state family dimensions are consistent")
}

/// Decides unique continuation directly from the state-space matrices: every
/// state in the kernel of the depth-`t_ini` observability matrix must stay
/// invisible for the next `t_f` outputs.
///
/// With `K` an orthonormal kernel basis, the test asks whether
/// `O(t_f) A^t_ini K` vanishes; it is declared zero when its norm is at most
/// `rank_tol * max(1, |O(t_f) A^t_ini|)`. This is an independent oracle for
/// [`StateSpace::unique_continuation`], which instead compares observability
/// ranks.
pub fn kernel_uniqueness_oracle<T: Real>(
    sys: &StateSpace<T>,
    t_ini: usize,
    t_f: usize,
    rank_tol: T,
) -> bool {
    let kernel = linalg::kernel_basis(&sys.observability_matrix(t_ini), rank_tol);
    if kernel.ncols() == 0 {
        return true;
    }
    let forward = sys.observability_matrix(t_f) * linalg::matrix_power(sys.a(), t_ini);
    let spill = (&forward * &kernel).norm();
    spill <= rank_tol * T::one().max(forward.norm())
}

/// Vector input/output recursion
/// `y(t) = sum_j L_j y(t-1-j) + sum_i M_i u(t-i)`,
/// with `output_lags[j] = L_j` (square, `p x p`) and `input_taps[i] = M_i`
/// (`p x m`); `input_taps[0]` applies to the current input.
#[derive(Clone, Debug, PartialEq)]
pub struct IoRecursion<T: nalgebra::Scalar> {
    output_lags: Vec<DMatrix<T>>,
    input_taps: Vec<DMatrix<T>>,
}

impl<T: Real> IoRecursion<T> {
    /// Builds a recursion, validating that all coefficient blocks share one
    /// output width and one input width. At least one input tap is required,
    /// since it is what fixes the input width; a zero block works when the
    /// current input should not enter.
    pub fn new(output_lags: Vec<DMatrix<T>>, input_taps: Vec<DMatrix<T>>) -> Result<Self> {
        let first = input_taps.first().ok_or(Error::Empty {
            what: "input tap list",
        })?;
        let (p, m) = first.shape();
        for tap in &input_taps {
            if tap.shape() != (p, m) {
                return Err(Error::DimensionMismatch {
                    what: "input tap rows x columns",
                    expected: p * m,
                    found: tap.nrows() * tap.ncols(),
                });
            }
        }
        for lag in &output_lags {
            if lag.shape() != (p, p) {
                return Err(Error::DimensionMismatch {
                    what: "output lag rows x columns",
                    expected: p * p,
                    found: lag.nrows() * lag.ncols(),
                });
            }
        }
        Ok(Self {
            output_lags,
            input_taps,
        })
    }

    /// Scalar recursion from plain coefficient lists.
    pub fn siso(output_lags: &[T], input_taps: &[T]) -> Result<Self> {
        Self::new(
            output_lags
                .iter()
                .map(|&c| DMatrix::from_element(1, 1, c))
                .collect(),
            input_taps
                .iter()
                .map(|&c| DMatrix::from_element(1, 1, c))
                .collect(),
        )
    }

    pub fn input_dim(&self) -> usize {
        self.input_taps[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.input_taps[0].nrows()
    }

    /// How many seed samples the recursion needs before it can run.
    pub fn history_needed(&self) -> usize {
        self.output_lags.len().max(self.input_taps.len() - 1)
    }
}

/// Runs a recursion forward from the seed history `ini` under the new inputs
/// `u`, returning the new outputs, one column per step.
pub fn simulate_recursion<T: Real>(
    rec: &IoRecursion<T>,
    ini: &Trajectory<T>,
    u: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    if ini.input_dim() != rec.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "seed input width",
            expected: rec.input_dim(),
            found: ini.input_dim(),
        });
    }
    if ini.output_dim() != rec.output_dim() {
        return Err(Error::DimensionMismatch {
            what: "seed output width",
            expected: rec.output_dim(),
            found: ini.output_dim(),
        });
    }
    if u.nrows() != rec.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "input width",
            expected: rec.input_dim(),
            found: u.nrows(),
        });
    }
    if ini.len() < rec.history_needed() {
        return Err(Error::InsufficientHistory {
            needed: rec.history_needed(),
            got: ini.len(),
        });
    }
    let mut u_all: Vec<DVector<T>> = (0..ini.len()).map(|t| ini.u().column(t).into_owned()).collect();
    let mut y_all: Vec<DVector<T>> = (0..ini.len()).map(|t| ini.y().column(t).into_owned()).collect();
    for t in 0..u.ncols() {
        let now = ini.len() + t;
        u_all.push(u.column(t).into_owned());
        let mut y_now = DVector::zeros(rec.output_dim());
        for (j, lag) in rec.output_lags.iter().enumerate() {
            y_now += lag * &y_all[now - 1 - j];
        }
        for (i, tap) in rec.input_taps.iter().enumerate() {
            y_now += tap * &u_all[now - i];
        }
        y_all.push(y_now);
    }
    let mut out = DMatrix::zeros(rec.output_dim(), u.ncols());
    for t in 0..u.ncols() {
        out.set_column(t, &y_all[ini.len() + t]);
    }
    Ok(out)
}

/// Continuations of one shared history under one shared future input, taken
/// across a family of systems.
#[derive(Clone, Debug)]
pub struct FamilyAgreement<T: nalgebra::Scalar> {
    /// Continuation outputs per family member, one column per step.
    pub outputs: Vec<DMatrix<T>>,
    /// Largest entrywise deviation between any two members' outputs.
    pub max_deviation: T,
    /// Whether all outputs agree pairwise within the tolerance.
    pub agree: bool,
    /// Members whose history is shorter than their lag. Their continuation
    /// depends on which explaining state was picked, so these are flagged
    /// rather than silently included as ground truth.
    pub ambiguous_members: Vec<usize>,
}

/// Continues `ini` under `u_future` with every member of `family` and
/// compares the outputs pairwise.
///
/// Each member must explain `ini`; the member index is reported otherwise.
/// The continuation starts from the member's least-squares explaining state,
/// driven first through the history inputs, then through `u_future`.
pub fn family_agreement_check<T: Real>(
    family: &[StateSpace<T>],
    ini: &Trajectory<T>,
    u_future: &DMatrix<T>,
    tol: T,
) -> Result<FamilyAgreement<T>> {
    if family.is_empty() {
        return Err(Error::Empty {
            what: "system family",
        });
    }
    let horizon = u_future.ncols();
    let mut outputs = Vec::with_capacity(family.len());
    let mut ambiguous_members = Vec::new();
    for (index, sys) in family.iter().enumerate() {
        if !sys.is_trajectory(ini, real(crate::DEFAULT_RESIDUAL_TOL))? {
            return Err(Error::NotExplaining { member: index });
        }
        let (x0, _) = sys.explaining_state(ini, real(crate::DEFAULT_RANK_TOL));
        let full_u = linalg::hcat(ini.u(), u_future);
        let full_y = sys.simulate(&x0, &full_u)?;
        outputs.push(full_y.columns(ini.len(), horizon).into_owned());
        if !sys.unique_continuation(ini.len(), horizon) {
            ambiguous_members.push(index);
        }
    }
    let mut max_deviation = T::zero();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            let diff = &outputs[i] - &outputs[j];
            if !diff.is_empty() {
                max_deviation = max_deviation.max(diff.amax());
            }
        }
    }
    Ok(FamilyAgreement {
        outputs,
        max_deviation,
        agree: max_deviation <= tol,
        ambiguous_members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FAMILY_SWEEP: [f64; 6] = [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0];

    fn record() -> Trajectory<f64> {
        Trajectory::siso(&[1.0, -1.0, 1.0], &[0.0, 1.0, 0.0]).unwrap()
    }

    fn state_swap() -> StateSpace<f64> {
        StateSpace::from_row_slices(
            2,
            1,
            1,
            &[0.0, 1.0, 1.0, 0.0],
            &[1.0, 1.0],
            &[0.0, 1.0],
            &[0.0],
        )
        .unwrap()
    }

    #[test]
    fn every_family_member_explains_the_record() {
        for r in FAMILY_SWEEP {
            let sys = integrator_family(r);
            assert!(
                sys.is_trajectory(&record(), 1e-8).unwrap(),
                "member r = {r}"
            );
        }
    }

    #[test]
    fn family_member_one_responds_as_derived() {
        let sys = integrator_family(1.0);
        let u = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let y = sys.simulate(&DVector::zeros(1), &u).unwrap();
        assert_eq!(y, DMatrix::from_row_slice(1, 2, &[1.0, 3.0]));
    }

    #[test]
    fn members_satisfy_their_own_recursion() {
        // y(t+1) - y(t) = r u(t+1) + (r+1) u(t) on a generic input.
        for r in FAMILY_SWEEP {
            let sys = integrator_family(r);
            let u = DMatrix::from_row_slice(1, 5, &[0.7, -1.3, 2.0, 0.0, 0.4]);
            let x0 = DVector::from_column_slice(&[0.9]);
            let y = sys.simulate(&x0, &u).unwrap();
            for t in 0..4 {
                let lhs = y[(0, t + 1)] - y[(0, t)];
                let rhs = r * u[(0, t + 1)] + (r + 1.0) * u[(0, t)];
                assert!((lhs - rhs).abs() < 1e-12, "r = {r}, t = {t}");
            }
        }
    }

    #[test]
    fn oracle_matches_the_rank_based_rule_on_the_swap_system() {
        let sys = state_swap();
        assert!(!kernel_uniqueness_oracle(&sys, 1, 1, 1e-10));
        assert!(kernel_uniqueness_oracle(&sys, 2, 1, 1e-10));
        assert!(kernel_uniqueness_oracle(&sys, 2, 4, 1e-10));
        // Horizon zero is vacuously unique, matching the rank-based rule.
        assert!(kernel_uniqueness_oracle(&sys, 0, 0, 1e-10));
        assert!(sys.unique_continuation(0, 0));
    }

    #[test]
    fn oracle_accepts_fully_observed_single_state() {
        let sys = integrator_family(0.5);
        assert!(kernel_uniqueness_oracle(&sys, 1, 3, 1e-10));
        assert!(!kernel_uniqueness_oracle(&sys, 0, 1, 1e-10));
    }

    #[test]
    fn scalar_recursion_reproduces_the_family_rule() {
        // Member r = 1: y(t) = y(t-1) + u(t) + 2 u(t-1).
        let rec = IoRecursion::siso(&[1.0], &[1.0, 2.0]).unwrap();
        let ini = Trajectory::siso(&[1.0], &[1.0]).unwrap();
        let u = DMatrix::from_row_slice(1, 1, &[0.0]);
        let y = simulate_recursion(&rec, &ini, &u).unwrap();
        assert_eq!(y, DMatrix::from_row_slice(1, 1, &[3.0]));
    }

    #[test]
    fn recursion_requires_enough_seed_history() {
        let rec = IoRecursion::siso(&[0.5, -0.25], &[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(rec.history_needed(), 2);
        let short = Trajectory::siso(&[1.0], &[1.0]).unwrap();
        let out = simulate_recursion(&rec, &short, &DMatrix::zeros(1, 1));
        assert!(matches!(
            out,
            Err(Error::InsufficientHistory { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn recursion_validates_widths_and_taps() {
        assert!(matches!(
            IoRecursion::<f64>::new(vec![], vec![]),
            Err(Error::Empty { .. })
        ));
        let mixed = IoRecursion::new(
            vec![DMatrix::<f64>::zeros(2, 2)],
            vec![DMatrix::zeros(1, 1)],
        );
        assert!(matches!(mixed, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn two_channel_recursion_tracks_its_state_space_twin() {
        // y(t) = 0.5 y(t-1) + u1(t) - u2(t-1) against the equivalent
        // state-space form, simulated from matching histories.
        let rec = IoRecursion::new(
            vec![DMatrix::from_element(1, 1, 0.5)],
            vec![
                DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
                DMatrix::from_row_slice(1, 2, &[0.0, -1.0]),
            ],
        )
        .unwrap();
        // x(t+1) = 0.5 x(t) + (0.5, -1) u(t), y = x + (1, 0) u.
        let sys = StateSpace::from_row_slices(
            1,
            2,
            1,
            &[0.5],
            &[0.5, -1.0],
            &[1.0],
            &[1.0, 0.0],
        )
        .unwrap();
        let u_all = DMatrix::from_row_slice(2, 5, &[0.3, -1.0, 2.0, 0.7, 0.0, 1.1, 0.2, -0.4, 0.9, 1.5]);
        let y_all = sys.simulate(&DVector::zeros(1), &u_all).unwrap();
        let ini = Trajectory::new(u_all.columns(0, 1).into_owned(), y_all.columns(0, 1).into_owned()).unwrap();
        let rest = u_all.columns(1, 4).into_owned();
        let from_rec = simulate_recursion(&rec, &ini, &rest).unwrap();
        assert!((from_rec - y_all.columns(1, 4).into_owned()).norm() < 1e-12);
    }

    #[test]
    fn the_family_agrees_on_the_recorded_continuation() {
        let family: Vec<_> = FAMILY_SWEEP.iter().map(|&r| integrator_family(r)).collect();
        let ini = Trajectory::siso(&[-2.0], &[1.0]).unwrap();
        let u_future = DMatrix::from_row_slice(1, 2, &[2.0, -2.0]);
        let check = family_agreement_check(&family, &ini, &u_future, 1e-8).unwrap();
        assert!(check.agree);
        assert!(check.ambiguous_members.is_empty());
        for (i, y) in check.outputs.iter().enumerate() {
            assert!((y[(0, 0)] - -1.0).abs() < 1e-9, "member {i}");
            assert!((y[(0, 1)] - 1.0).abs() < 1e-9, "member {i}");
        }
    }

    #[test]
    fn the_family_diverges_on_other_inputs() {
        let family: Vec<_> = FAMILY_SWEEP.iter().map(|&r| integrator_family(r)).collect();
        let ini = Trajectory::siso(&[-2.0], &[1.0]).unwrap();
        let u_future = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let check = family_agreement_check(&family, &ini, &u_future, 1e-8).unwrap();
        assert!(!check.agree);
        assert!(check.max_deviation > 1.0);
    }

    #[test]
    fn non_explaining_members_are_reported_by_index() {
        let family = vec![
            integrator_family(0.0),
            StateSpace::from_row_slices(1, 1, 1, &[1.0], &[2.0], &[1.0], &[0.0]).unwrap(),
        ];
        let out = family_agreement_check(&family, &record(), &DMatrix::zeros(1, 1), 1e-8);
        assert!(matches!(out, Err(Error::NotExplaining { member: 1 })));
    }

    #[test]
    fn short_history_members_are_flagged_as_ambiguous() {
        let family = vec![state_swap()];
        let ini = Trajectory::siso(&[-2.0], &[1.0]).unwrap();
        let check =
            family_agreement_check(&family, &ini, &DMatrix::from_row_slice(1, 1, &[0.0]), 1e-8)
                .unwrap();
        assert_eq!(check.ambiguous_members, vec![0]);
    }
}
