use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::GasParams;
use crate::numerics::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Staggered scheme with corrected in-cell constructions and cutoffs.
    Modified,
    /// Plain collocated Godunov scheme with exact Riemann fluxes.
    StandardGodunov,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshConfig {
    pub gas: GasParams,
    pub dx: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_final: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub epsilon: f64,
    /// `None` selects δ by grid search over the source-term margins.
    pub delta: Option<f64>,
    pub variant: Variant,
    pub execution: Execution,
    /// Snapshot every k steps (0: initial and final only).
    pub snapshot_every: usize,
    /// Grow the domain so that no wave can reach the frozen ghost cells.
    pub extend_domain: bool,
}

pub const DEFAULT_ALPHA: f64 = 0.75;
pub const DEFAULT_BETA: f64 = 0.1;

pub fn default_mu(gas: &GasParams) -> f64 {
    1.2f64.min(0.5 * (1.0 + 1.0 / (2.0 * gas.theta())))
}

impl MeshConfig {
    pub fn new(gas: GasParams, dx: f64, x_min: f64, x_max: f64, t_final: f64) -> Self {
        MeshConfig {
            gas,
            dx,
            x_min,
            x_max,
            t_final,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            mu: default_mu(&gas),
            epsilon: 0.05,
            delta: None,
            variant: Variant::Modified,
            execution: Execution::default(),
            snapshot_every: 0,
            extend_domain: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Mesh(m));
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad(format!("dx = {} must be positive", self.dx));
        }
        if !(self.x_max > self.x_min) {
            return bad(format!("x_max = {} must exceed x_min = {}", self.x_max, self.x_min));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be >= 0", self.t_final));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return bad(format!("alpha = {} outside (1/2, 1)", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} outside (0, 1)", self.beta));
        }
        let mu_hi = 1.0 / (2.0 * self.gas.theta());
        let mu_ok = if mu_hi > 1.0 {
            self.mu > 1.0 && self.mu < mu_hi
        } else {
            self.mu >= 1.0
        };
        if !mu_ok {
            return bad(format!("mu = {} outside (1, {mu_hi})", self.mu));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon = {} must be positive", self.epsilon));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return bad(format!("delta = {d} must be positive"));
            }
        }
        let cells = (self.x_max - self.x_min) / self.dx;
        if cells > 5e7 {
            return bad(format!("domain needs {cells:.0} cells"));
        }
        Ok(())
    }
}
