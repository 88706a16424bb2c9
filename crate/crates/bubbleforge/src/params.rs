//! Run parameters shared by the commands.

use std::f64::consts::{E, SQRT_2};

use bubbleforge_core::scaling::{beta_for_delta, solve_delta_beta};
use bubbleforge_core::QuadratureSpec;

use crate::report::Report;
use crate::CliError;

/// `-e⁴/8`, whose concentration scale is exactly `e⁻⁸`.
pub fn default_beta() -> f64 {
    -E.powi(4) / 8.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub k: usize,
    pub q: usize,
    pub t: f64,
    pub beta: f64,
    pub alpha: f64,
    /// Overrides the scale solved from `beta`; `beta` is then re-derived.
    pub delta: Option<f64>,
    pub seed: u64,
    pub spec: QuadratureSpec,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            k: 2,
            q: 2,
            t: 2.0 / 9.0,
            beta: default_beta(),
            alpha: 1.0,
            delta: None,
            seed: 0,
            spec: QuadratureSpec::default(),
        }
    }
}

impl RunParams {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.k < 2 {
            return Err(CliError::Usage("k must be at least 2".into()));
        }
        if self.q < 1 {
            return Err(CliError::Usage("q must be at least 1".into()));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(CliError::Usage("t must be positive".into()));
        }
        if !self.alpha.is_finite() {
            return Err(CliError::Usage("alpha must be finite".into()));
        }
        self.spec
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.resolve()?;
        Ok(())
    }

    /// `(β, δ)` tied by `√δ |log δ| = -1/β`.
    pub fn resolve(&self) -> Result<(f64, f64), CliError> {
        match self.delta {
            Some(d) => {
                let beta = beta_for_delta(d).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok((beta, d))
            }
            None => {
                let s = solve_delta_beta(self.beta).map_err(|e| CliError::Usage(e.to_string()))?;
                Ok((self.beta, s.delta))
            }
        }
    }

    /// Stderr note for couplings whose scale exists but lies outside the
    /// range `β < -√2` where the construction applies.
    pub fn regime_warning(beta: f64) -> Option<String> {
        if beta > -SQRT_2 && beta < -E / 2.0 {
            Some(format!(
                "warning: beta = {beta} lies in (-sqrt 2, -e/2); the scale exists but the construction needs beta < -sqrt 2"
            ))
        } else {
            None
        }
    }

    pub fn record(&self, report: &mut Report) {
        report.param("k", self.k);
        report.param("q", self.q);
        report.param("t", self.t);
        report.param("beta", self.beta);
        report.param("alpha", self.alpha);
        if let Some(d) = self.delta {
            report.param("delta", d);
        }
        report.param("seed", self.seed);
        report.param("rel_tol", self.spec.rel_tol);
        report.param("abs_tol", self.spec.abs_tol);
        report.param("max_subdivisions", self.spec.max_subdivisions);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_beta_gives_e_minus_8() {
        let (_, d) = RunParams::default().resolve().unwrap();
        assert!((d / (-8f64).exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_override_sets_beta() {
        let p = RunParams {
            delta: Some((-10f64).exp()),
            ..RunParams::default()
        };
        let (beta, d) = p.resolve().unwrap();
        assert_eq!(d, (-10f64).exp());
        assert!((beta * d.sqrt() * 10.0 + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_ranges() {
        for p in [
            RunParams {
                k: 1,
                ..RunParams::default()
            },
            RunParams {
                q: 0,
                ..RunParams::default()
            },
            RunParams {
                t: 0.0,
                ..RunParams::default()
            },
            RunParams {
                beta: -1.0,
                ..RunParams::default()
            },
        ] {
            assert!(p.validate().is_err());
        }
    }
}
