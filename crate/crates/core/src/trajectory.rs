//! Time levels of a run and the per-step diagnostics recorded by the drivers.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{SpaceTimeVector, Vec2};
use crate::grid::{BoundaryPartition, Domain, ExtensionField};
use crate::momentum::ViscosityParams;
use crate::thermo::PressureLaw;

/// Density and velocity at one time level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct State {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<Vec2>,
}

/// Diagnostics of the step that produced level `step`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    /// `max_i |div u_i|` at the level the step started from.
    pub max_div: f64,
    /// `‖Z‖_{L^{4/3}}` at the start level.
    pub z_norm: f64,
    pub mass: f64,
    pub kinetic: f64,
    pub helmholtz: f64,
    pub min_rho: f64,
    pub max_rho: f64,
}

/// Every time level of a run together with the data needed to audit it.
///
/// All levels are kept in memory so that the audits can evaluate their time
/// sums exactly; `cadence` selects the levels that count as stored times for
/// reports and files.
#[derive(Clone)]
pub struct Trajectory {
    pub partition: BoundaryPartition,
    pub extension: Option<ExtensionField>,
    pub law: Option<PressureLaw>,
    pub viscosity: Option<ViscosityParams>,
    pub epsilon: f64,
    pub forcing: Option<Arc<dyn SpaceTimeVector>>,
    pub states: Vec<State>,
    pub steps: Vec<StepRecord>,
    pub cadence: usize,
    /// Whether level `n + 1` was transported by its own velocity (coupled
    /// runs) rather than by the velocity of level `n`.
    pub implicit_transport: bool,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("cells", &self.domain().cells)
            .field("levels", &self.states.len())
            .field("epsilon", &self.epsilon)
            .field("law", &self.law)
            .field("viscosity", &self.viscosity)
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

impl Trajectory {
    pub fn domain(&self) -> &Domain {
        &self.partition.domain
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    /// Indices of the stored levels: every `cadence`-th level plus the last.
    pub fn stored_indices(&self) -> Vec<usize> {
        let n = self.states.len();
        let c = self.cadence.max(1);
        let mut idx: Vec<usize> = (0..n).step_by(c).collect();
        if n > 0 && idx.last() != Some(&(n - 1)) {
            idx.push(n - 1);
        }
        idx
    }

    /// Level whose time matches `tau` to within a millionth of a step.
    pub fn level_at(&self, tau: f64) -> Result<usize> {
        let dt = self.steps.first().map_or(1.0, |s| s.dt);
        self.states
            .iter()
            .position(|s| (s.t - tau).abs() <= 1e-6 * dt)
            .ok_or_else(|| Error::Data(format!("no stored time level at τ = {tau}")))
    }

    /// `‖Z‖_{L^{4/3}}` per step.
    pub fn z_norm_history(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.z_norm).collect()
    }

    /// Space-time norm `‖Z‖_{L^{4/3}(Q_τ)}` over the whole run.
    pub fn z_norm_total(&self) -> f64 {
        self.steps.iter().map(|s| s.dt * s.z_norm.powf(4.0 / 3.0)).sum::<f64>().powf(0.75)
    }

    /// Velocity that carried the density from level `n` to level `n + 1`.
    pub fn advecting(&self, n: usize) -> &[Vec2] {
        if self.implicit_transport {
            &self.states[n + 1].u
        } else {
            &self.states[n].u
        }
    }

    pub fn law(&self) -> Result<&PressureLaw> {
        self.law.as_ref().ok_or_else(|| Error::Data("trajectory carries no pressure law".into()))
    }

    pub fn viscosity(&self) -> Result<&ViscosityParams> {
        self.viscosity.as_ref().ok_or_else(|| Error::Data("trajectory carries no viscosity".into()))
    }

    pub fn extension(&self) -> Result<&ExtensionField> {
        self.extension.as_ref().ok_or_else(|| Error::Data("trajectory carries no extension field".into()))
    }

    /// Forcing at time `t` sampled at cell centres, or zeros.
    pub fn forcing_at(&self, t: f64) -> Vec<Vec2> {
        let d = self.domain();
        match &self.forcing {
            Some(f) => (0..d.n_cells()).map(|c| f.value(t, d.center(c))).collect(),
            None => vec![[0.0, 0.0]; d.n_cells()],
        }
    }
}
