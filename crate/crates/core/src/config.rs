use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that overrides the default working precision.
pub const PREC_ENV: &str = "WIDOMSPEC_PREC";

pub const DEFAULT_PREC_BITS: usize = 128;
pub const DEFAULT_QTOL: f64 = 1e-12;
pub const DEFAULT_SOLVER_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Resolved run configuration, echoed in every CLI output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Binary precision of the continued-fraction iteration.
    pub prec_bits: usize,
    /// Quadrature tolerance.
    pub qtol: f64,
    /// Tolerance for the critical-point and comb solvers.
    pub solver_tol: f64,
    pub seed: u64,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prec_bits: DEFAULT_PREC_BITS,
            qtol: DEFAULT_QTOL,
            solver_tol: DEFAULT_SOLVER_TOL,
            seed: 0,
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    /// Defaults with the precision taken from `WIDOMSPEC_PREC` when set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Ok(v) = std::env::var(PREC_ENV) {
            cfg.prec_bits = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(PREC_ENV, format!("not an integer: {v:?}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.prec_bits < 53 {
            return Err(Error::invalid("prec", "precision must be at least 53 bits"));
        }
        if !(self.qtol > 0.0 && self.qtol.is_finite()) {
            return Err(Error::invalid("qtol", "tolerance must be positive"));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol.is_finite()) {
            return Err(Error::invalid("solver_tol", "tolerance must be positive"));
        }
        Ok(())
    }
}
