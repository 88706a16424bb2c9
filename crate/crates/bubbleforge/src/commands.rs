//! The four commands, each producing a [`Report`].

use bubbleforge_core::energy::f_beta_expansion_check;
use bubbleforge_core::quadrature::Quadrature;
use bubbleforge_core::scaling::{constants, solve_delta_beta};

use crate::params::RunParams;
use crate::report::{Provenance, Report, ScanRow};
use crate::suites::{self, Suite};
use crate::CliError;

pub fn cmd_constants(k: usize) -> Result<Report, CliError> {
    let c = constants(k)?;
    let mut r = Report::new("constants");
    r.param("k", k);
    let tol = Some(1e-10);
    r.quantity("c1", c.c1, tol, Provenance::Paper);
    r.quantity("c2", c.c2, tol, Provenance::Paper);
    r.quantity("c1_tilde", c.c1_tilde, tol, Provenance::Paper);
    r.quantity("c2_tilde", c.c2_tilde, tol, Provenance::Paper);
    r.quantity("t_star", c.t_star, tol, Provenance::Paper);
    r.quantity("t_star_tilde", c.t_star_tilde, Some(0.0), Provenance::Paper);
    Ok(r)
}

pub fn cmd_delta(beta: f64) -> Result<Report, CliError> {
    let s = solve_delta_beta(beta)?;
    let mut r = Report::new("delta");
    r.param("beta", beta);
    r.quantity(
        "delta",
        s.delta,
        Some(1e-12 * s.delta),
        Provenance::DerivedOracle,
    );
    r.quantity("log_delta", s.delta.ln(), None, Provenance::DerivedOracle);
    r.quantity(
        "residual",
        s.residual,
        Some(1e-12),
        Provenance::DerivedOracle,
    );
    Ok(r)
}

/// `F_numeric`, `F_predicted` and `θ` on an even grid of `t`.
pub fn cmd_scan(
    p: &RunParams,
    t_min: f64,
    t_max: f64,
    steps: usize,
    quad: &Quadrature<'_>,
) -> Result<Report, CliError> {
    if steps < 2 {
        return Err(CliError::Usage("scan needs at least 2 steps".into()));
    }
    if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
        return Err(CliError::Usage("need 0 < t-min < t-max".into()));
    }
    let (beta, delta) = p.resolve()?;
    let c = constants(p.k)?;
    let mut r = Report::new("scan");
    p.record(&mut r);
    r.param("t_min", t_min);
    r.param("t_max", t_max);
    r.param("steps", steps);
    let mut best = (f64::INFINITY, t_min);
    for i in 0..steps {
        let t = t_min + (t_max - t_min) * i as f64 / (steps - 1) as f64;
        let e = f_beta_expansion_check(p.k, t, beta, quad)?;
        if e.f_predicted < best.0 {
            best = (e.f_predicted, t);
        }
        r.push_row(ScanRow {
            t,
            f_numeric: e.f_numeric,
            f_predicted: e.f_predicted,
            theta: e.theta,
            converged: e.converged,
        });
    }
    r.quantity("delta", delta, None, Provenance::DerivedOracle);
    r.quantity(
        "predicted_argmin",
        best.1,
        Some((t_max - t_min) / (steps - 1) as f64),
        Provenance::Paper,
    );
    r.quantity("t_star", c.t_star, None, Provenance::Paper);
    Ok(r)
}

pub fn cmd_verify(suite: Suite, p: &RunParams, quad: &Quadrature<'_>) -> Result<Report, CliError> {
    let mut r = Report::new("verify");
    p.record(&mut r);
    r.param("suite", suite.name());
    suites::run(suite, p, quad, &mut r)?;
    Ok(r)
}
