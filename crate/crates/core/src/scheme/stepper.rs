//! Initialization and time stepping.
//!
//! The modified scheme lives on a staggered grid of cells of width 2Δx: on even
//! steps cell i is centered at x_min + (2i + 1)Δx, on odd steps at x_min + 2iΔx.
//! Cells outside the domain are frozen at the background state.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gas::{GasParams, GasState};
use crate::numerics::{map_indexed, pairwise_sum};
use crate::scheme::config::{MeshConfig, Variant};
use crate::scheme::construction::{build_cell, trace_flux, CellContext};
use crate::scheme::functional::{choose_delta, cutoff_project, prefix_integrals, taylor_remainder, update_m, CutoffBounds};
use crate::scheme::godunov::godunov_step;
use crate::scheme::initial::InitialData;

/// Cells farther than this from the background (in conserved variables) get a
/// full construction; the rest are advanced by the flux update alone.
const BACKGROUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub n: usize,
    pub t: f64,
    pub cells: Vec<GasState>,
    /// ∫ J up to each cell center.
    pub prefix: Vec<f64>,
    /// L_n
    pub l: f64,
    /// M_n
    pub m: f64,
}

/// Monitors gathered during one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub l: f64,
    pub m: f64,
    pub l_increment: f64,
    /// Σ |z(E) − z| + |w(E) − w| over the cutoff.
    pub cut_total: f64,
    pub vacuum_cells: usize,
    pub constructed_cells: usize,
    pub near_vacuum_cells: usize,
    /// Largest mid-time jump residual over enforced fronts.
    pub max_rh_mid: f64,
    /// Largest first-pass/second-pass difference.
    pub two_pass_gap: f64,
    /// Largest gap between the direct construction average and the flux update.
    pub construction_defect: f64,
    pub max_speed: f64,
}

#[derive(Debug, Clone)]
pub struct Scheme {
    cfg: MeshConfig,
    pub e0: f64,
    pub m0: f64,
    pub delta: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Effective domain after extension.
    pub x_min: f64,
    pub x_max: f64,
    /// Number of fine intervals of width Δx in the domain (even).
    fine: usize,
    min_ztilde0: f64,
    max_wtilde0: f64,
}

impl Scheme {
    pub fn new(cfg: MeshConfig, data: &InitialData) -> Result<(Scheme, SchemeState)> {
        cfg.validate()?;
        let gas = cfg.gas;
        let dx = cfg.dx;
        let e0 = data.energy(&gas);
        let (min_z, max_w) = data.tilde_extrema(&gas);
        let m0 = (gas.band_edge() + cfg.epsilon).max(-min_z + e0).max(max_w);
        let speed = 2.0 * (m0 + e0);
        let dt = dx / speed;
        let n_steps = if cfg.t_final > 0.0 {
            (cfg.t_final / dt - 1e-9).ceil() as usize
        } else {
            0
        };
        let delta = match cfg.delta {
            Some(d) => d,
            None => choose_delta(&gas, m0 + e0, cfg.epsilon, 200)?,
        };

        let pitch = 2.0 * dx;
        let (mut lo, mut hi) = (cfg.x_min, cfg.x_max);
        if let Some((a, b)) = data.support() {
            if cfg.extend_domain {
                let reach = speed * n_steps as f64 * dt + 4.0 * dx;
                if a - reach < lo {
                    lo -= pitch * ((lo - (a - reach)) / pitch).ceil();
                }
                if b + reach > hi {
                    hi += pitch * ((b + reach - hi) / pitch).ceil();
                }
            } else if a < lo || b > hi {
                return Err(Error::Mesh(format!("data support [{a}, {b}] exceeds the domain [{lo}, {hi}]")));
            }
        }
        let mut fine = ((hi - lo) / dx - 1e-9).ceil() as usize;
        if fine % 2 == 1 {
            fine += 1;
        }
        if fine as f64 > 1e8 {
            return Err(Error::Mesh(format!("domain needs {fine} cells")));
        }
        let hi = lo + fine as f64 * dx;

        let scheme = Scheme {
            cfg,
            e0,
            m0,
            delta,
            dt,
            n_steps,
            x_min: lo,
            x_max: hi,
            fine,
            min_ztilde0: min_z,
            max_wtilde0: max_w,
        };
        let state = scheme.initial_state(data);
        Ok((scheme, state))
    }

    pub fn config(&self) -> &MeshConfig {
        &self.cfg
    }

    pub fn gas(&self) -> &GasParams {
        &self.cfg.gas
    }

    /// Initial extrema of z̃ and w̃.
    pub fn initial_tilde_extrema(&self) -> (f64, f64) {
        (self.min_ztilde0, self.max_wtilde0)
    }

    pub fn cell_width(&self) -> f64 {
        match self.cfg.variant {
            Variant::Modified => 2.0 * self.cfg.dx,
            Variant::StandardGodunov => self.cfg.dx,
        }
    }

    pub fn cell_count(&self, n: usize) -> usize {
        match self.cfg.variant {
            Variant::Modified if n % 2 == 1 => self.fine / 2 + 1,
            Variant::Modified => self.fine / 2,
            Variant::StandardGodunov => self.fine,
        }
    }

    pub fn center(&self, n: usize, i: usize) -> f64 {
        let dx = self.cfg.dx;
        match self.cfg.variant {
            Variant::Modified if n % 2 == 1 => self.x_min + 2.0 * i as f64 * dx,
            Variant::Modified => self.x_min + (2 * i + 1) as f64 * dx,
            Variant::StandardGodunov => self.x_min + (i as f64 + 0.5) * dx,
        }
    }

    pub fn centers(&self, n: usize) -> Vec<f64> {
        (0..self.cell_count(n)).map(|i| self.center(n, i)).collect()
    }

    fn initial_state(&self, data: &InitialData) -> SchemeState {
        let gas = *self.gas();
        let w = self.cell_width();
        let h = 0.5 * w;
        let count = self.cell_count(0);
        let mut averages = Vec::with_capacity(count);
        let mut l_terms = Vec::with_capacity(count);
        for i in 0..count {
            let c = self.center(0, i);
            let (a, b) = (c - h, c + h);
            let e = data.average(a, b);
            let mut l = 0.0;
            for (sa, sb, u) in data.segments(a, b) {
                let r = taylor_remainder(&u, &e, &gas);
                l += r * (sb - sa) + r * ((b - sa).powi(2) - (b - sb).powi(2)) / (2.0 * w);
            }
            averages.push(e);
            l_terms.push(l);
        }
        let l0 = pairwise_sum(&l_terms);
        let cells = match self.cfg.variant {
            Variant::Modified => {
                let prefix = prefix_integrals(&averages, w, &gas);
                let bounds = self.bounds(self.m0, l0);
                averages
                    .iter()
                    .zip(&prefix)
                    .map(|(e, &p)| cutoff_project(e, p, &bounds, &gas).state)
                    .collect()
            }
            Variant::StandardGodunov => averages,
        };
        let prefix = prefix_integrals(&cells, w, &gas);
        SchemeState {
            n: 0,
            t: 0.0,
            cells,
            prefix,
            l: l0,
            m: self.m0,
        }
    }

    fn bounds(&self, m: f64, l: f64) -> CutoffBounds {
        CutoffBounds {
            m,
            l,
            e0: self.e0,
            dx: self.cfg.dx,
            mu: self.cfg.mu,
        }
    }

    fn next_m(&self, state: &SchemeState) -> f64 {
        if state.n == 0 {
            self.m0 - self.delta * self.dt
        } else {
            update_m(state.m, state.l, self.delta, self.dt, self.cfg.epsilon, self.gas())
        }
    }

    fn check_cfl(&self, n: usize, speeds: &[f64]) -> Result<()> {
        let limit = self.cfg.dx / self.dt;
        if let Some((i, &s)) = speeds
            .iter()
            .enumerate()
            .find(|(_, s)| !(**s <= limit * (1.0 + 1e-12)))
        {
            return Err(Error::Cfl {
                step: n,
                x: self.center(n + 1, i),
                speed: s,
                limit,
            });
        }
        Ok(())
    }

    pub fn step(&self, state: &SchemeState) -> Result<(SchemeState, StepRecord)> {
        match self.cfg.variant {
            Variant::Modified => self.step_modified(state),
            Variant::StandardGodunov => self.step_godunov(state),
        }
    }

    fn step_godunov(&self, state: &SchemeState) -> Result<(SchemeState, StepRecord)> {
        let gas = *self.gas();
        let out = godunov_step(&state.cells, &gas, self.cfg.dx, self.dt, self.cfg.execution)?;
        self.check_cfl(state.n, &[out.max_speed])?;
        let m = self.next_m(state);
        let l = state.l + out.l_increment;
        let prefix = prefix_integrals(&out.cells, self.cell_width(), &gas);
        let n = state.n + 1;
        let record = StepRecord {
            n,
            t: n as f64 * self.dt,
            l,
            m,
            l_increment: out.l_increment,
            constructed_cells: out.constructed,
            max_speed: out.max_speed,
            ..Default::default()
        };
        Ok((
            SchemeState {
                n,
                t: record.t,
                cells: out.cells,
                prefix,
                l,
                m,
            },
            record,
        ))
    }

    fn step_modified(&self, state: &SchemeState) -> Result<(SchemeState, StepRecord)> {
        let gas = *self.gas();
        let dx = self.cfg.dx;
        let exec = self.cfg.execution;
        let bg = gas.background();
        let m_next = self.next_m(state);
        let ctx = CellContext {
            gas,
            dx,
            dt: self.dt,
            alpha: self.cfg.alpha,
            beta: self.cfg.beta,
            m_next,
            l_n: state.l,
            e0: self.e0,
        };

        let old = &state.cells;
        let n_old = old.len();
        let width = self.cell_width();
        let total_j = n_old
            .checked_sub(1)
            .map_or(0.0, |k| state.prefix[k] + 0.5 * width * gas.relative_energy(&old[k]));
        let fluxes = map_indexed(n_old, exec, |i| trace_flux(&old[i], &ctx));
        let flux_bg = trace_flux(&bg, &ctx);
        let at = |k: isize| -> (GasState, [f64; 2], f64) {
            if k < 0 {
                (bg, flux_bg, 0.0)
            } else if k as usize >= n_old {
                (bg, flux_bg, total_j)
            } else {
                let k = k as usize;
                (old[k], fluxes[k], state.prefix[k])
            }
        };
        // new cell i sits between old cells i + shift and i + shift + 1
        let shift: isize = if state.n % 2 == 0 { -1 } else { 0 };
        let n_new = self.cell_count(state.n + 1);

        struct CellOut {
            e: GasState,
            l: f64,
            speed: f64,
            report: Option<crate::scheme::construction::CellReport>,
        }
        let outs: Vec<Result<CellOut>> = map_indexed(n_new, exec, |i| {
            let (ul, fl, il) = at(i as isize + shift);
            let (ur, fr, ir) = at(i as isize + shift + 1);
            let e = GasState {
                rho: 0.5 * (ul.rho + ur.rho) - (fr[0] - fl[0]) / (2.0 * dx),
                m: 0.5 * (ul.m + ur.m) - (fr[1] - fl[1]) / (2.0 * dx),
            };
            if ul.max_abs_diff(&bg) <= BACKGROUND_TOL && ur.max_abs_diff(&bg) <= BACKGROUND_TOL {
                return Ok(CellOut {
                    e,
                    l: 0.0,
                    speed: gas.max_speed(&ul).max(gas.max_speed(&ur)),
                    report: None,
                });
            }
            let cell = build_cell(&ctx, ul, ur, (il, ir)).map_err(|err| match err {
                Error::Construction { left, right, reason, .. } => Error::Construction {
                    x: self.center(state.n + 1, i),
                    left,
                    right,
                    reason,
                },
                other => other,
            })?;
            let r = cell.report(&e);
            Ok(CellOut {
                e,
                l: r.remainder + r.weighted_remainder + r.front_dissipation,
                speed: r.max_speed,
                report: Some(r),
            })
        });
        let mut cells_e = Vec::with_capacity(n_new);
        let mut l_terms = Vec::with_capacity(n_new);
        let mut speeds = Vec::with_capacity(n_new);
        let mut record = StepRecord::default();
        for o in outs {
            let o = o?;
            cells_e.push(o.e);
            l_terms.push(o.l);
            speeds.push(o.speed);
            if let Some(r) = o.report {
                record.constructed_cells += 1;
                record.near_vacuum_cells += r.near_vacuum as usize;
                record.max_rh_mid = record.max_rh_mid.max(r.max_rh_mid);
                record.two_pass_gap = record.two_pass_gap.max(r.two_pass_gap);
                record.construction_defect = record.construction_defect.max(r.average.max_abs_diff(&o.e));
            }
        }
        self.check_cfl(state.n, &speeds)?;
        record.max_speed = speeds.iter().copied().fold(0.0, f64::max);

        let l_inc = pairwise_sum(&l_terms);
        let l_next = state.l + l_inc;
        let prefix_e = prefix_integrals(&cells_e, width, &gas);
        let bounds = self.bounds(m_next, l_next);
        let mut cuts = Vec::with_capacity(n_new);
        let cells: Vec<GasState> = cells_e
            .iter()
            .zip(&prefix_e)
            .map(|(e, &p)| {
                let pr = cutoff_project(e, p, &bounds, &gas);
                cuts.push(pr.cut);
                record.vacuum_cells += pr.vacuum as usize;
                pr.state
            })
            .collect();
        let prefix = prefix_integrals(&cells, width, &gas);
        let n = state.n + 1;
        record.n = n;
        record.t = n as f64 * self.dt;
        record.l = l_next;
        record.m = m_next;
        record.l_increment = l_inc;
        record.cut_total = pairwise_sum(&cuts);
        Ok((
            SchemeState {
                n,
                t: record.t,
                cells,
                prefix,
                l: l_next,
                m: m_next,
            },
            record,
        ))
    }
}

/// Receives the initial state and every stepped state.
pub trait Observer {
    fn observe(&mut self, scheme: &Scheme, state: &SchemeState, record: Option<&StepRecord>) -> Result<()>;
}

/// Advance `state` to the final time, reporting to `observer`.
pub fn run<O: Observer + ?Sized>(scheme: &Scheme, mut state: SchemeState, observer: &mut O) -> Result<SchemeState> {
    observer.observe(scheme, &state, None)?;
    while state.n < scheme.n_steps {
        let (next, record) = scheme.step(&state)?;
        state = next;
        observer.observe(scheme, &state, Some(&record))?;
    }
    Ok(state)
}

/// Cell values at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub cells: Vec<GasState>,
    pub prefix: Vec<f64>,
}

impl Snapshot {
    pub fn of(scheme: &Scheme, state: &SchemeState) -> Self {
        Snapshot {
            n: state.n,
            t: state.t,
            x: scheme.centers(state.n),
            cells: state.cells.clone(),
            prefix: state.prefix.clone(),
        }
    }
}

/// In-memory trajectory: every step record, every diagnostics record, and
/// snapshots every `every` steps (0: initial and final only).
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub every: usize,
    pub records: Vec<StepRecord>,
    pub diagnostics: Vec<crate::diagnostics::DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn new(every: usize) -> Self {
        Trajectory {
            every,
            ..Default::default()
        }
    }
}

impl Observer for Trajectory {
    fn observe(&mut self, scheme: &Scheme, state: &SchemeState, record: Option<&StepRecord>) -> Result<()> {
        if let Some(r) = record {
            self.records.push(*r);
        }
        self.diagnostics.push(crate::diagnostics::DiagnosticsRecord::of(scheme, state));
        let last = state.n == scheme.n_steps;
        let due = state.n == 0 || last || (self.every > 0 && state.n % self.every == 0);
        if due {
            self.snapshots.push(Snapshot::of(scheme, state));
        }
        Ok(())
    }
}

/// Run to the final time keeping the whole trajectory in memory.
pub fn run_trajectory(cfg: MeshConfig, data: &InitialData) -> Result<(Scheme, Trajectory)> {
    let every = cfg.snapshot_every;
    let (scheme, state) = Scheme::new(cfg, data)?;
    let mut traj = Trajectory::new(every);
    run(&scheme, state, &mut traj)?;
    Ok((scheme, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Execution;

    fn gas2() -> GasParams {
        GasParams::new(2.0, 1.0).unwrap()
    }

    #[test]
    fn cfl_time_step() {
        let g = gas2();
        let cfg = MeshConfig::new(g, 0.1, -1.0, 1.0, 0.0);
        let (s, _) = Scheme::new(cfg, &InitialData::constant(&g)).unwrap();
        assert_eq!(s.m0, 2.05);
        assert_eq!(s.dt, 0.1 / (2.0 * 2.05));
        let d = InitialData::square_pulse(&g, -1.0, 1.0, 2.0, 0.0).unwrap();
        let cfg = MeshConfig::new(g, 0.05, -20.0, 20.0, 5.0);
        let (s, _) = Scheme::new(cfg, &d).unwrap();
        assert!((s.e0 - 1.0).abs() < 1e-15);
        assert!((s.m0 - (2.0 * 2f64.sqrt() + 2.0)).abs() < 1e-14);
        assert_eq!(s.dt, 0.05 / (2.0 * (s.m0 + s.e0)));
        assert!(s.x_min < -20.0 && s.x_max > 20.0);
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let g = gas2();
        let mut cfg = MeshConfig::new(g, 0.1, -2.0, 2.0, 0.5);
        cfg.execution = Execution::Sequential;
        let (s, mut st) = Scheme::new(cfg, &InitialData::constant(&g)).unwrap();
        assert_eq!(s.e0, 0.0);
        for _ in 0..4 {
            let (next, rec) = s.step(&st).unwrap();
            assert!(next.cells.iter().all(|c| c.max_abs_diff(&g.background()) < 1e-14));
            assert_eq!(rec.l, 0.0);
            assert!(next.m <= st.m);
            st = next;
        }
        assert!(st.m < s.m0);
    }

    #[test]
    fn staggered_cell_counts_alternate() {
        let g = gas2();
        let cfg = MeshConfig::new(g, 0.1, -1.0, 1.0, 0.1);
        let (s, st) = Scheme::new(cfg, &InitialData::constant(&g)).unwrap();
        assert_eq!(st.cells.len(), 10);
        let (st1, _) = s.step(&st).unwrap();
        assert_eq!(st1.cells.len(), 11);
        assert!((s.center(1, 0) - (-1.0)).abs() < 1e-15);
        let (st2, _) = s.step(&st1).unwrap();
        assert_eq!(st2.cells.len(), 10);
    }
}
