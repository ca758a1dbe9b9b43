//! One function per subcommand. Each returns the process exit code for a
//! completed run (0 for a holding verdict, 1 for a failing one) or an error
//! message that the caller reports on stderr with exit code 2.

use std::path::Path;

use hankelcast::hankel::{hankel, is_persistently_exciting, numerical_rank, stack_partition};
use hankelcast::nalgebra::{DMatrix, DVector};
use hankelcast::predict::{check_informativity_conditions, predict, predict_and_weave};
use hankelcast::verify::{simulate_recursion, IoRecursion};
use hankelcast::{
    PredictionProblem64, StateSpace64, Trajectory64, DEFAULT_RANK_TOL, DEFAULT_RESIDUAL_TOL,
};
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use crate::io::{
    parse_state, read_signal_file, read_system_file, write_outputs, write_trajectory,
};

pub const RESIDUAL_TOL_VAR: &str = "HANKELCAST_RESIDUAL_TOL";
pub const RANK_TOL_VAR: &str = "HANKELCAST_RANK_TOL";

/// Flag value when given, else the environment variable, else the default.
/// A set but malformed variable is an error, not a silent fallback.
pub fn resolve_tol(flag: Option<f64>, var: &str, default: f64) -> Result<f64, String> {
    if let Some(value) = flag {
        return Ok(value);
    }
    match std::env::var(var) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| format!("{var} must be a number, found {text:?}")),
        Err(std::env::VarError::NotPresent) => Ok(default),
        Err(err) => Err(format!("{var}: {err}")),
    }
}

pub fn cmd_simulate(system: &Path, input: &Path, x0: Option<&str>) -> Result<u8, String> {
    let sys = read_system_file(system)?;
    let signal = read_signal_file(input)?;
    if signal.u.nrows() != sys.input_dim() {
        return Err(format!(
            "input file has {} input columns, the system expects m = {}",
            signal.u.nrows(),
            sys.input_dim()
        ));
    }
    let x0 = match x0 {
        Some(text) => parse_state(text, sys.state_dim())?,
        None => DVector::zeros(sys.state_dim()),
    };
    let y = sys.simulate(&x0, &signal.u).map_err(|e| e.to_string())?;
    print!("{}", write_trajectory(&signal.u, Some(&y)));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_predict(
    data: &Path,
    ini: &Path,
    future: &Path,
    lag: usize,
    weave: bool,
    residual_tol: Option<f64>,
    rank_tol: Option<f64>,
) -> Result<u8, String> {
    let data = read_signal_file(data)?.into_trajectory("data file")?;
    let ini = read_signal_file(ini)?.into_trajectory("history file")?;
    let u_future = read_signal_file(future)?.u;
    let residual_tol = resolve_tol(residual_tol, RESIDUAL_TOL_VAR, DEFAULT_RESIDUAL_TOL)?;
    let rank_tol = resolve_tol(rank_tol, RANK_TOL_VAR, DEFAULT_RANK_TOL)?;
    let problem = PredictionProblem64::new(data, ini, u_future, lag)
        .map_err(|e| e.to_string())?
        .with_residual_tol(residual_tol)
        .with_rank_tol(rank_tol);
    let outcome = if weave {
        predict_and_weave(&problem)
    } else {
        predict(&problem)
    }
    .map_err(|e| e.to_string())?;

    let failing_step = outcome
        .steps
        .as_ref()
        .and_then(|steps| steps.iter().find(|d| !d.feasible))
        .map(|d| d.step);
    let established = match &outcome.y_future {
        Some(y) => {
            print!("{}", write_outputs(y));
            println!();
            true
        }
        None => {
            match failing_step {
                Some(step) => println!("PREDICTION NOT ESTABLISHED at step {step}"),
                None => println!("PREDICTION NOT ESTABLISHED"),
            }
            false
        }
    };
    println!("established={established}");
    println!("residual={:e}", outcome.residual);
    println!("unique_certificate={}", outcome.unique_certificate);
    println!("g_norm={:e}", outcome.g_norm);
    if let Some(step) = failing_step {
        println!("failing_step={step}");
    }
    if let Some(steps) = &outcome.steps {
        for d in steps {
            println!(
                "step={} feasible={} residual={:e} unique_certificate={}",
                d.step, d.feasible, d.residual, d.unique_certificate
            );
        }
    }
    Ok(if established { 0 } else { 1 })
}

pub enum CheckMode {
    PeOrder(usize),
    Lag,
    UniqueContinuation(usize, usize),
}

pub fn cmd_check(file: &Path, mode: CheckMode, rank_tol: Option<f64>) -> Result<u8, String> {
    let rank_tol = resolve_tol(rank_tol, RANK_TOL_VAR, DEFAULT_RANK_TOL)?;
    match mode {
        CheckMode::PeOrder(order) => {
            let signal = read_signal_file(file)?;
            let rank = numerical_rank(hankel(&signal.u, order).matrix(), rank_tol);
            let required = signal.u.nrows() * order;
            let holds = is_persistently_exciting(&signal.u, order, rank_tol);
            if holds {
                println!("input is persistently exciting of order {order}");
            } else {
                println!("input is not persistently exciting of order {order}");
            }
            println!("pe_order={order}");
            println!("rank={rank}");
            println!("required={required}");
            println!("holds={holds}");
            Ok(if holds { 0 } else { 1 })
        }
        CheckMode::Lag => {
            let sys = read_system_file(file)?;
            let report = sys.lag(rank_tol);
            println!("observability ranks stabilize at depth {}", report.lag);
            println!("lag={}", report.lag);
            let ranks: Vec<String> = report
                .observability_ranks
                .iter()
                .map(usize::to_string)
                .collect();
            println!("observability_ranks={}", ranks.join(" "));
            Ok(0)
        }
        CheckMode::UniqueContinuation(t_ini, t_f) => {
            let sys = read_system_file(file)?;
            let lag = sys.lag(rank_tol).lag;
            // Same rule as the library's unique_continuation, at the caller's
            // rank tolerance.
            let holds = t_f == 0 || t_ini >= lag;
            if holds {
                println!("a {t_ini}-sample history pins down the next {t_f} outputs uniquely");
            } else {
                println!(
                    "a {t_ini}-sample history does not pin down the next {t_f} outputs uniquely"
                );
            }
            println!("unique_continuation={holds}");
            println!("t_ini={t_ini}");
            println!("t_f={t_f}");
            println!("lag={lag}");
            Ok(if holds { 0 } else { 1 })
        }
    }
}

pub fn cmd_hankel(file: &Path, depth: usize) -> Result<u8, String> {
    let signal = read_signal_file(file)?;
    let w = signal.stacked_signal();
    let block = hankel(&w, depth);
    let m = block.matrix();
    // A void or empty matrix prints nothing: there are no windows to list.
    if m.ncols() > 0 {
        for r in 0..m.nrows() {
            let cells: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
            println!("{}", cells.join(","));
        }
    }
    Ok(0)
}

/// Built-in worked scenarios with known expected results.
#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum Scenario {
    /// Integrator record, step-by-step weave of two future outputs.
    Ex1,
    /// State-swap system whose lag exceeds the supplied history.
    Ex2,
    /// Six-step weave succeeds where the one-shot solve runs out of data.
    Ex3,
    /// Two-input demo: constructed horizon matches the true response, a
    /// random horizon is rejected, and a plausible impostor recursion
    /// diverges on it.
    Sec5,
}

pub fn cmd_reproduce(id: Scenario, seed: u64) -> Result<u8, String> {
    match id {
        Scenario::Ex1 => reproduce_ex1(),
        Scenario::Ex2 => reproduce_ex2(),
        Scenario::Ex3 => reproduce_ex3(),
        Scenario::Sec5 => reproduce_sec5(seed),
    }
}

fn finish(pass: bool) -> Result<u8, String> {
    println!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}

fn row_text(y: &DMatrix<f64>) -> String {
    let cells: Vec<String> = (0..y.ncols()).map(|t| y[(0, t)].to_string()).collect();
    cells.join(", ")
}

/// Integrator data explain the history (u, y) = ((-2), (1)); weaving the
/// future inputs (2, -2) must return (-1, 1).
fn reproduce_ex1() -> Result<u8, String> {
    println!("integrator record: u = (1, -1, 1), y = (0, 1, 0)");
    println!("history: u = (-2), y = (1); future inputs: u_f = (2, -2); lag bound 1");
    let data = Trajectory64::siso(&[1.0, -1.0, 1.0], &[0.0, 1.0, 0.0]).map_err(|e| e.to_string())?;
    let ini = Trajectory64::siso(&[-2.0], &[1.0]).map_err(|e| e.to_string())?;
    let u_f = DMatrix::from_row_slice(1, 2, &[2.0, -2.0]);
    let problem = PredictionProblem64::new(data, ini, u_f, 1).map_err(|e| e.to_string())?;
    let outcome = predict_and_weave(&problem).map_err(|e| e.to_string())?;
    let expected = DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]);
    println!("expected y_f = (-1, 1)");
    match outcome.y_future {
        Some(y) => {
            println!("computed y_f = ({})", row_text(&y));
            finish((y - expected).amax() <= 1e-9)
        }
        None => {
            println!("computed: not established");
            finish(false)
        }
    }
}

/// The state-swap system needs two samples of history before its outputs are
/// pinned down; a one-sample history fails the first sufficient condition.
fn reproduce_ex2() -> Result<u8, String> {
    let sys = StateSpace64::from_row_slices(
        2,
        1,
        1,
        &[0.0, 1.0, 1.0, 0.0],
        &[1.0, 1.0],
        &[0.0, 1.0],
        &[0.0],
    )
    .map_err(|e| e.to_string())?;
    let lag = sys.lag(DEFAULT_RANK_TOL).lag;
    println!("state-swap system: expected lag = 2, computed lag = {lag}");

    let data = Trajectory64::siso(&[0.0; 5], &[0.0; 5]).map_err(|e| e.to_string())?;
    let ini = Trajectory64::siso(&[0.0], &[0.0]).map_err(|e| e.to_string())?;
    let t_ini = ini.len();
    let problem =
        PredictionProblem64::new(data, ini, DMatrix::zeros(1, 1), lag).map_err(|e| e.to_string())?;
    let report = check_informativity_conditions(&problem, None);
    println!("one-sample history against a lag bound of {lag}:");
    println!("{report}");
    if !report.past_covers_lag_bound {
        println!("condition (i) fails: T_ini={t_ini} < lag={lag}");
    }
    finish(lag == 2 && !report.past_covers_lag_bound)
}

/// Same record as ex1 over a six-step horizon: weaving alternates the output
/// sign every step, while the one-shot solve needs depth-7 windows that the
/// 3-sample record cannot provide.
fn reproduce_ex3() -> Result<u8, String> {
    println!("integrator record: u = (1, -1, 1), y = (0, 1, 0)");
    println!("history: u = (-2), y = (1); future inputs alternate: u_f(t) = 2 * (-1)^t");
    let data = Trajectory64::siso(&[1.0, -1.0, 1.0], &[0.0, 1.0, 0.0]).map_err(|e| e.to_string())?;
    let ini = Trajectory64::siso(&[-2.0], &[1.0]).map_err(|e| e.to_string())?;
    let u_f = DMatrix::from_fn(1, 6, |_, t| if t % 2 == 0 { 2.0 } else { -2.0 });
    let problem = PredictionProblem64::new(data, ini, u_f, 1).map_err(|e| e.to_string())?;

    let woven = predict_and_weave(&problem).map_err(|e| e.to_string())?;
    let expected = DMatrix::from_fn(1, 6, |_, t| if t % 2 == 0 { -1.0 } else { 1.0 });
    println!("expected woven y_f = (-1, 1, -1, 1, -1, 1)");
    let woven_ok = match woven.y_future {
        Some(y) => {
            println!("computed y_f = ({})", row_text(&y));
            (y - expected).amax() <= 1e-9
        }
        None => {
            println!("computed: not established");
            false
        }
    };

    let one_shot = predict(&problem).map_err(|e| e.to_string())?;
    println!("one-shot solve over the same horizon: expected not established (depth-7 windows outrun the record)");
    let one_shot_rejected = one_shot.y_future.is_none();
    println!(
        "computed: {}",
        if one_shot_rejected {
            "not established"
        } else {
            "established"
        }
    );
    finish(woven_ok && one_shot_rejected)
}

/// Two-input demo. An 8-sample record is regenerated from the seed; weaving a
/// horizon constructed to stay feasible reproduces the true response, a
/// random horizon is rejected at once, and a recursion with different
/// internal coefficients that also explains the history diverges on it.
fn reproduce_sec5(seed: u64) -> Result<u8, String> {
    println!("seed={seed}");
    let sys = StateSpace64::from_row_slices(
        2,
        2,
        1,
        &[1.0, 1.0, -1.0, -0.5],
        &[1.0, 1.0, 0.0, 1.0],
        &[1.0, 0.0],
        &[0.0, 0.0],
    )
    .map_err(|e| e.to_string())?;
    let lag = sys.lag(DEFAULT_RANK_TOL).lag;
    println!("true system: 2 states, 2 inputs, 1 output, lag = {lag}");

    let history = Trajectory64::new(
        DMatrix::from_row_slice(2, 2, &[6.0, -1.0, 2.0, 5.0]),
        DMatrix::zeros(1, 2),
    )
    .map_err(|e| e.to_string())?;
    let consistent = sys.is_trajectory(&history, 1e-9).map_err(|e| e.to_string())?;
    println!("fixed history is a trajectory of the true system: {consistent}");
    // the state explaining that history, from which truth is simulated
    let x_start = DVector::from_column_slice(&[0.0, -8.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u_d: DMatrix<f64> = DMatrix::from_fn(2, 8, |_, _| rng.gen_range(-1.0..=1.0));
    let y_d = sys
        .simulate(&DVector::zeros(2), &u_d)
        .map_err(|e| e.to_string())?;
    let data = Trajectory64::new(u_d, y_d).map_err(|e| e.to_string())?;
    println!("record: 8 samples simulated from the zero state under uniform inputs in [-1, 1]");

    let mut pass = consistent && lag == 2;
    let horizon = 20usize;
    let u_good = feasible_horizon_input(&data, &history, lag, horizon);
    let problem = PredictionProblem64::new(data.clone(), history.clone(), u_good.clone(), lag)
        .map_err(|e| e.to_string())?;
    let woven = predict_and_weave(&problem).map_err(|e| e.to_string())?;
    let y_true = sys
        .simulate(&x_start, &hjoin(history.u(), &u_good))
        .map_err(|e| e.to_string())?
        .columns(2, horizon)
        .into_owned();
    match woven.y_future {
        Some(y) => {
            let rel = (y - &y_true).norm() / y_true.norm().max(1.0);
            println!(
                "constructed horizon: established over {horizon} steps, relative deviation from the true response = {rel:e} (expected <= 1e-6)"
            );
            if rel > 1e-6 {
                pass = false;
            }
        }
        None => {
            println!("constructed horizon: not established (expected established)");
            pass = false;
        }
    }

    let u_bad: DMatrix<f64> = DMatrix::from_fn(2, horizon, |_, _| rng.gen_range(-1.0..=1.0));
    let problem_bad = PredictionProblem64::new(data, history.clone(), u_bad.clone(), lag)
        .map_err(|e| e.to_string())?;
    let rejected = predict_and_weave(&problem_bad).map_err(|e| e.to_string())?;
    if rejected.y_future.is_none() {
        let failing = rejected
            .steps
            .as_ref()
            .and_then(|steps| steps.iter().find(|d| !d.feasible))
            .map(|d| d.step);
        match failing {
            Some(step) => println!("random horizon: not established, failing step = {step}"),
            None => println!("random horizon: not established"),
        }
    } else {
        println!("random horizon: established (expected not established)");
        pass = false;
    }

    let recursion = IoRecursion::new(
        vec![
            DMatrix::from_element(1, 1, 0.648),
            DMatrix::from_element(1, 1, -0.324),
        ],
        vec![
            DMatrix::from_row_slice(1, 2, &[-3.259, 4.022]),
            DMatrix::from_row_slice(1, 2, &[1.987, 1.225]),
            DMatrix::from_row_slice(1, 2, &[1.041, 0.066]),
        ],
    )
    .map_err(|e| e.to_string())?;
    println!(
        "candidate recursion: y(t) = 0.648 y(t-1) - 0.324 y(t-2) + [-3.259 4.022] u(t) + [1.987 1.225] u(t-1) + [1.041 0.066] u(t-2)"
    );
    let y_rec = simulate_recursion(&recursion, &history, &u_bad).map_err(|e| e.to_string())?;
    let y_true_bad = sys
        .simulate(&x_start, &hjoin(history.u(), &u_bad))
        .map_err(|e| e.to_string())?
        .columns(2, horizon)
        .into_owned();
    let gap = (y_rec - y_true_bad).amax();
    println!(
        "recursion vs true response on the random horizon: max gap = {gap:e} (expected > 1e-5)"
    );
    if gap <= 1e-5 {
        pass = false;
    }
    finish(pass)
}

fn hjoin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

fn vjoin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

fn stack2(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

// Minimum-norm least-squares solution with the library's thresholding rule.
// Refinement passes keep the construction sharp on ill-conditioned stacks.
fn min_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let vt = svd.v_t.as_ref().expect("right vectors requested");
    let threshold =
        DEFAULT_RANK_TOL * (a.nrows().max(a.ncols()) as f64) * svd.singular_values.max();
    let apply = |rhs: &DVector<f64>| {
        let mut x = DVector::zeros(a.ncols());
        for (i, &sigma) in svd.singular_values.iter().enumerate() {
            if sigma > threshold {
                x += vt.row(i).transpose() * (u.column(i).dot(rhs) / sigma);
            }
        }
        x
    };
    let mut x = apply(b);
    let mut residual = (a * &x - b).norm();
    for _ in 0..2 {
        let candidate = &x + apply(&(b - a * &x));
        let candidate_residual = (a * &candidate - b).norm();
        if candidate_residual < residual {
            x = candidate;
            residual = candidate_residual;
        } else {
            break;
        }
    }
    x
}

/// Builds a future input the record can explain: at each step the running
/// history's tail is matched against depth-(lag + 1) windows drawn from both
/// the record and the history itself, and the window combination that
/// reproduces the tail dictates the next input and output.
fn feasible_horizon_input(
    data: &Trajectory64,
    history: &Trajectory64,
    lag: usize,
    horizon: usize,
) -> DMatrix<f64> {
    let m = data.input_dim();
    let mut running = history.clone();
    let mut u_f = DMatrix::zeros(m, horizon);
    for t in 0..horizon {
        let dp = stack_partition(data.u(), data.y(), lag, 1).expect("record widths agree");
        let hp = stack_partition(running.u(), running.y(), lag, 1).expect("history widths agree");
        let past = vjoin(
            &hjoin(&dp.u_past, &hp.u_past),
            &hjoin(&dp.y_past, &hp.y_past),
        );
        let tail = running.tail(lag);
        let rhs = stack2(&tail.stacked_u(), &tail.stacked_y());
        let g = min_norm_solve(&past, &rhs);
        let u_t = hjoin(&dp.u_future, &hp.u_future) * &g;
        let y_t = hjoin(&dp.y_future, &hp.y_future) * &g;
        u_f.set_column(t, &u_t);
        running = Trajectory64::new(
            hjoin(running.u(), &DMatrix::from_column_slice(m, 1, u_t.as_slice())),
            hjoin(
                running.y(),
                &DMatrix::from_column_slice(y_t.len(), 1, y_t.as_slice()),
            ),
        )
        .expect("extended history stays rectangular");
    }
    u_f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_environment_beats_default() {
        std::env::set_var("HANKELCAST_TEST_TOL_A", "1e-3");
        assert_eq!(
            resolve_tol(Some(1e-5), "HANKELCAST_TEST_TOL_A", 1e-8).unwrap(),
            1e-5
        );
        assert_eq!(
            resolve_tol(None, "HANKELCAST_TEST_TOL_A", 1e-8).unwrap(),
            1e-3
        );
        assert_eq!(
            resolve_tol(None, "HANKELCAST_TEST_TOL_UNSET", 1e-8).unwrap(),
            1e-8
        );
    }

    #[test]
    fn malformed_environment_value_is_an_error() {
        std::env::set_var("HANKELCAST_TEST_TOL_B", "not-a-number");
        let err = resolve_tol(None, "HANKELCAST_TEST_TOL_B", 1e-8).unwrap_err();
        assert!(err.contains("HANKELCAST_TEST_TOL_B"));
        assert_eq!(
            resolve_tol(Some(2.0), "HANKELCAST_TEST_TOL_B", 1e-8).unwrap(),
            2.0
        );
    }
}
