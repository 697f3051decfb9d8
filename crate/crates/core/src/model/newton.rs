//! Damped Newton iteration over an abstract nonlinear system.

use super::ModelError;

/// A discrete nonlinear system `R(x) = 0`.
pub trait NonlinearProblem {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>, ModelError>;
    /// Newton update `dx` solving `R'(x) dx = -r`, where `r = R(x)`.
    fn solve_linearized(&self, x: &[f64], r: &[f64]) -> Result<Vec<f64>, ModelError>;
    /// Makes `x` satisfy the strong constraints of the problem.
    fn apply_constraints(&self, x: &mut [f64]);
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSettings {
    /// Convergence when `|r|_inf < max(rel_tol * |r_0|_inf, abs_tol)`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_iters: 20,
            max_backtracks: 10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    /// Number of Newton updates applied.
    pub iterations: usize,
    /// `|r|_inf` before the first and after every iteration.
    pub history: Vec<f64>,
    /// Line-search halvings per iteration.
    pub cuts: Vec<usize>,
}

pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn newton_solve<P: NonlinearProblem + ?Sized>(problem: &P, initial: &[f64], settings: &NewtonSettings) -> Result<(Vec<f64>, NewtonReport), ModelError> {
    let mut x = initial.to_vec();
    problem.apply_constraints(&mut x);
    let mut r = problem.residual(&x)?;
    let mut norm = inf_norm(&r);
    let tol = (settings.rel_tol * norm).max(settings.abs_tol);
    let mut report = NewtonReport {
        history: vec![norm],
        ..Default::default()
    };
    log::debug!("newton: initial residual {norm:.3e}, target {tol:.3e}");
    while norm >= tol {
        if report.iterations == settings.max_iters {
            return Err(ModelError::NoConvergence(report));
        }
        let dx = problem.solve_linearized(&x, &r)?;
        let mut step = 1.0;
        let mut accepted = None;
        for cut in 0..=settings.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
            match problem.residual(&trial) {
                Ok(rt) => {
                    let nt = inf_norm(&rt);
                    if nt < norm {
                        accepted = Some((trial, rt, nt, cut));
                        break;
                    }
                }
                Err(ModelError::InvalidState { .. }) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some((xn, rn, nn, cut)) = accepted else {
            return Err(ModelError::NoConvergence(report));
        };
        x = xn;
        r = rn;
        norm = nn;
        report.iterations += 1;
        report.history.push(norm);
        report.cuts.push(cut);
        log::debug!("newton: iteration {} residual {norm:.3e} cuts {cut}", report.iterations);
    }
    Ok((x, report))
}
