//! Run observables: invariant envelopes, the energy-shifted invariants
//! z̃ = z − ∫^x J and w̃ = w − ∫^x J, conserved totals, and band entry time.

use serde::Serialize;

use crate::gas::{GasParams, GasState};
use crate::numerics::pairwise_sum;
use crate::scheme::stepper::{Scheme, SchemeState};

/// (z̃, w̃) per cell; `None` for vacuum cells, which carry no invariants.
pub fn transforms(cells: &[GasState], prefix: &[f64], params: &GasParams) -> Vec<Option<(f64, f64)>> {
    cells
        .iter()
        .zip(prefix)
        .map(|(u, &i)| {
            (!u.is_vacuum()).then(|| {
                let inv = params.to_invariants(u);
                (inv.z - i, inv.w - i)
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelopes {
    pub min_z: f64,
    pub max_w: f64,
    pub min_ztilde: f64,
    pub max_wtilde: f64,
}

/// Extrema over the non-vacuum cells (background values when there are none).
pub fn envelopes(cells: &[GasState], prefix: &[f64], params: &GasParams) -> Envelopes {
    let edge = params.band_edge();
    let mut env = Envelopes {
        min_z: f64::INFINITY,
        max_w: f64::NEG_INFINITY,
        min_ztilde: f64::INFINITY,
        max_wtilde: f64::NEG_INFINITY,
    };
    for (u, &i) in cells.iter().zip(prefix) {
        if u.is_vacuum() {
            continue;
        }
        let inv = params.to_invariants(u);
        env.min_z = env.min_z.min(inv.z);
        env.max_w = env.max_w.max(inv.w);
        env.min_ztilde = env.min_ztilde.min(inv.z - i);
        env.max_wtilde = env.max_wtilde.max(inv.w - i);
    }
    if env.min_z > env.max_w {
        env = Envelopes {
            min_z: -edge,
            max_w: edge,
            min_ztilde: -edge,
            max_wtilde: edge,
        };
    }
    env
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub min_z: f64,
    pub max_w: f64,
    pub min_ztilde: f64,
    pub max_wtilde: f64,
    pub total_mass: f64,
    pub total_eta: f64,
    pub total_j: f64,
    /// min z̃ − (−ρ̄^θ/θ − E0 − ε); nonnegative inside the band.
    pub region_margin_z: f64,
    /// (ρ̄^θ/θ + ε) − max w̃; nonnegative inside the band.
    pub region_margin_w: f64,
    /// Both margins nonnegative at this time.
    pub in_band: bool,
}

/// Totals over the domain: background value times its length plus the
/// cellwise deviations, so the value does not depend on the grid parity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Totals {
    pub mass: f64,
    pub eta: f64,
    pub j: f64,
}

pub fn totals(cells: &[GasState], width: f64, length: f64, params: &GasParams) -> Totals {
    let bg = params.background();
    let eta_bg = params.eta(&bg);
    let dm: Vec<f64> = cells.iter().map(|u| width * (u.rho - bg.rho)).collect();
    let de: Vec<f64> = cells.iter().map(|u| width * (params.eta(u) - eta_bg)).collect();
    let dj: Vec<f64> = cells.iter().map(|u| width * params.relative_energy(u)).collect();
    Totals {
        mass: bg.rho * length + pairwise_sum(&dm),
        eta: eta_bg * length + pairwise_sum(&de),
        j: pairwise_sum(&dj),
    }
}

impl DiagnosticsRecord {
    pub fn new(t: f64, env: Envelopes, totals: Totals, params: &GasParams, e0: f64, epsilon: f64) -> Self {
        let edge = params.band_edge();
        let region_margin_z = env.min_ztilde - (-edge - e0 - epsilon);
        let region_margin_w = edge + epsilon - env.max_wtilde;
        DiagnosticsRecord {
            t,
            min_z: env.min_z,
            max_w: env.max_w,
            min_ztilde: env.min_ztilde,
            max_wtilde: env.max_wtilde,
            total_mass: totals.mass,
            total_eta: totals.eta,
            total_j: totals.j,
            region_margin_z,
            region_margin_w,
            in_band: region_margin_z >= 0.0 && region_margin_w >= 0.0,
        }
    }

    pub fn of(scheme: &Scheme, state: &SchemeState) -> Self {
        let gas = scheme.gas();
        let env = envelopes(&state.cells, &state.prefix, gas);
        let tot = totals(&state.cells, scheme.cell_width(), scheme.x_max - scheme.x_min, gas);
        Self::new(state.t, env, tot, gas, scheme.e0, scheme.config().epsilon)
    }

    pub fn envelopes(&self) -> Envelopes {
        Envelopes {
            min_z: self.min_z,
            max_w: self.max_w,
            min_ztilde: self.min_ztilde,
            max_wtilde: self.max_wtilde,
        }
    }
}

/// Whether the envelopes satisfy −ρ̄^θ/θ − E0 − ε ≤ min z̃ and
/// max w̃ ≤ ρ̄^θ/θ + ε.
pub fn in_band(env: &Envelopes, e0: f64, epsilon: f64, params: &GasParams) -> bool {
    let edge = params.band_edge();
    env.min_ztilde >= -edge - e0 - epsilon && env.max_wtilde <= edge + epsilon
}

/// First recorded time from which the band holds at every later record.
pub fn detect_t0(records: &[DiagnosticsRecord], epsilon: f64, e0: f64, params: &GasParams) -> Option<f64> {
    let mut first = None;
    for r in records.iter().rev() {
        if in_band(&r.envelopes(), e0, epsilon, params) {
            first = Some(r.t);
        } else {
            break;
        }
    }
    first
}

/// (min z̃ − δt, max w̃ + δt).
pub fn formal_hats(record: &DiagnosticsRecord, delta: f64) -> (f64, f64) {
    (record.min_ztilde - delta * record.t, record.max_wtilde + delta * record.t)
}
