//! Exact Riemann solver for isentropic gas dynamics, Hugoniot curves, and the
//! piecewise-constant discretization of rarefaction fans.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gas::{pow0, GasParams, GasState, InvariantPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveKind {
    Rarefaction,
    Shock,
    Vacuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WavePattern {
    pub family1: WaveKind,
    pub family2: WaveKind,
}

impl WavePattern {
    /// Cases 1–4: rarefaction/shock, shock/rarefaction, rarefaction/rarefaction,
    /// shock/shock. `None` for the vacuum pattern.
    pub fn case(&self) -> Option<u8> {
        use WaveKind::*;
        match (self.family1, self.family2) {
            (Rarefaction, Shock) => Some(1),
            (Shock, Rarefaction) => Some(2),
            (Rarefaction, Rarefaction) => Some(3),
            (Shock, Shock) => Some(4),
            _ => None,
        }
    }

    pub fn is_vacuum(&self) -> bool {
        self.family1 == WaveKind::Vacuum
    }
}

/// A single wave: a shock with one speed or a fan spanning `[from, to]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Wave {
    Shock { speed: f64 },
    Rarefaction { from: f64, to: f64 },
}

impl Wave {
    pub fn slowest(&self) -> f64 {
        match *self {
            Wave::Shock { speed } => speed,
            Wave::Rarefaction { from, .. } => from,
        }
    }

    pub fn fastest(&self) -> f64 {
        match *self {
            Wave::Shock { speed } => speed,
            Wave::Rarefaction { to, .. } => to,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannSolution {
    pub left: GasState,
    pub middle: GasState,
    pub right: GasState,
    pub pattern: WavePattern,
    pub waves: [Wave; 2],
    #[serde(skip)]
    params: GasParams,
}

impl GasState {
    /// Mirror image under (x, v) → (−x, −v).
    pub fn reflect(&self) -> GasState {
        GasState {
            rho: self.rho,
            m: -self.m,
        }
    }
}

/// S(ρ, ρ0) = sqrt(ρ(p(ρ) − p(ρ0)) / (ρ0(ρ − ρ0))), continuous at ρ = ρ0.
pub fn shock_speed_s(rho: f64, rho0: f64, params: &GasParams) -> Result<f64> {
    if rho < 0.0 {
        return Err(Error::NegativeDensity(rho));
    }
    if !(rho0 > 0.0) {
        return Err(Error::InvalidState(format!(
            "reference density must be positive, got {rho0}"
        )));
    }
    Ok(s_unchecked(rho, rho0, params))
}

pub(crate) fn s_unchecked(rho: f64, rho0: f64, params: &GasParams) -> f64 {
    // S² = r ρ0^{γ−1} (r^γ − 1) / (γ (r − 1)) with r = ρ/ρ0, evaluated through
    // expm1/ln1p so that nearly equal densities keep full relative accuracy
    let g = params.gamma();
    let d = (rho - rho0) / rho0;
    let q = if d == 0.0 {
        g
    } else if d <= -1.0 {
        1.0
    } else {
        (g * d.ln_1p()).exp_m1() / d
    };
    let s2 = (rho / rho0) * pow0(rho0, g - 1.0) * q / g;
    s2.max(0.0).sqrt()
}

/// Velocity jump across a 1-wave (or 2-wave) from a side state of density
/// `rho_k` to density `rho`; positive for shocks.
fn phi(rho: f64, rho_k: f64, params: &GasParams) -> (f64, f64) {
    let th = params.theta();
    if rho > rho_k {
        let dp = params.p(rho) - params.p(rho_k);
        let d = rho - rho_k;
        let f = dp * d / (rho * rho_k);
        let val = f.sqrt();
        let df = (pow0(rho, params.gamma() - 1.0) * d + dp) / (rho * rho_k) - dp * d / (rho * rho * rho_k);
        let dval = if val > 0.0 { df / (2.0 * val) } else { pow0(rho_k, th - 1.0) };
        (val, dval)
    } else {
        let val = (pow0(rho, th) - pow0(rho_k, th)) / th;
        let dval = if rho > 0.0 { pow0(rho, th - 1.0) } else { f64::INFINITY };
        (val, dval)
    }
}

/// State on the right of a 1-front whose left state is `left`, parametrized by
/// its density; returns the state and the front speed.
pub fn hugoniot1_right(left: &GasState, rho: f64, params: &GasParams) -> (GasState, f64) {
    let s = s_unchecked(rho, left.rho, params);
    let vl = left.v();
    let v = vl - (rho - left.rho) * s / rho.max(f64::MIN_POSITIVE);
    (GasState::from_rho_v(rho, v), vl - s)
}

/// State on the left of a 2-front whose right state is `right`.
pub fn hugoniot2_left(right: &GasState, rho: f64, params: &GasParams) -> (GasState, f64) {
    let s = s_unchecked(rho, right.rho, params);
    let vr = right.v();
    let v = vr + (rho - right.rho) * s / rho.max(f64::MIN_POSITIVE);
    (GasState::from_rho_v(rho, v), vr + s)
}

pub fn rh_residual(sigma: f64, u_minus: &GasState, u_plus: &GasState, params: &GasParams) -> f64 {
    let fm = params.flux(u_minus);
    let fp = params.flux(u_plus);
    let d = u_plus.sub(u_minus);
    (fp[0] - fm[0] - sigma * d[0])
        .abs()
        .max((fp[1] - fm[1] - sigma * d[1]).abs())
}

const MAX_ITER: usize = 200;

pub fn solve_riemann(u_l: &GasState, u_r: &GasState, params: &GasParams) -> Result<RiemannSolution> {
    u_l.validate()?;
    u_r.validate()?;
    let p = *params;
    let inv_l = p.to_invariants(u_l);
    let inv_r = p.to_invariants(u_r);

    if u_l.is_vacuum() || u_r.is_vacuum() || inv_l.w <= inv_r.z {
        return Ok(vacuum_solution(u_l, u_r, &p));
    }

    let (rl, rr) = (u_l.rho, u_r.rho);
    let dv = u_l.v() - u_r.v();
    let g = |rho: f64| {
        let (a, da) = phi(rho, rl, &p);
        let (b, db) = phi(rho, rr, &p);
        (a + b - dv, da + db)
    };

    let mut lo = 0.0_f64;
    let mut hi = rl.max(rr).max(1e-300);
    let mut it = 0;
    while g(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        it += 1;
        if it > 2000 || !hi.is_finite() {
            return Err(Error::RootNotFound {
                what: "riemann middle density",
                lo,
                hi,
                iterations: it,
            });
        }
    }
    // bracketed Newton with bisection fallback
    let mut x = 0.5 * (lo + hi);
    let mut done = false;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = g(x);
        if fx == 0.0 {
            done = true;
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if dfx.is_finite() && dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * (1.0 + x) || hi - lo <= 4.0 * f64::EPSILON * (1.0 + hi) {
            x = next;
            done = true;
            break;
        }
        x = next;
    }
    if !done {
        return Err(Error::RootNotFound {
            what: "riemann middle density",
            lo,
            hi,
            iterations: MAX_ITER,
        });
    }
    let rho_m = if u_l == u_r { rl } else { x };
    let v_m = if u_l == u_r { u_l.v() } else { 0.5 * (u_l.v() + u_r.v()) + 0.5 * (phi(rho_m, rr, &p).0 - phi(rho_m, rl, &p).0) };
    let middle = if u_l == u_r { *u_l } else { GasState::from_rho_v(rho_m, v_m) };

    let (family1, wave1) = if rho_m > rl {
        (WaveKind::Shock, Wave::Shock { speed: u_l.v() - s_unchecked(rho_m, rl, &p) })
    } else {
        (
            WaveKind::Rarefaction,
            Wave::Rarefaction {
                from: p.char_speeds(u_l).0,
                to: p.char_speeds(&middle).0,
            },
        )
    };
    let (family2, wave2) = if rho_m > rr {
        (WaveKind::Shock, Wave::Shock { speed: u_r.v() + s_unchecked(rho_m, rr, &p) })
    } else {
        (
            WaveKind::Rarefaction,
            Wave::Rarefaction {
                from: p.char_speeds(&middle).1,
                to: p.char_speeds(u_r).1,
            },
        )
    };
    Ok(RiemannSolution {
        left: *u_l,
        middle,
        right: *u_r,
        pattern: WavePattern { family1, family2 },
        waves: [wave1, wave2],
        params: p,
    })
}

fn vacuum_solution(u_l: &GasState, u_r: &GasState, p: &GasParams) -> RiemannSolution {
    let inv_l = p.to_invariants(u_l);
    let inv_r = p.to_invariants(u_r);
    // vacuum edge speeds: v at ρ → 0 along the rarefaction curves
    let (edge_l, edge_r) = match (u_l.is_vacuum(), u_r.is_vacuum()) {
        (true, true) => (0.0, 0.0),
        (true, false) => (inv_r.z, inv_r.z),
        (false, true) => (inv_l.w, inv_l.w),
        (false, false) => (inv_l.w, inv_r.z),
    };
    let wave1 = if u_l.is_vacuum() {
        Wave::Rarefaction { from: edge_l, to: edge_l }
    } else {
        Wave::Rarefaction {
            from: p.char_speeds(u_l).0,
            to: edge_l,
        }
    };
    let wave2 = if u_r.is_vacuum() {
        Wave::Rarefaction { from: edge_r, to: edge_r }
    } else {
        Wave::Rarefaction {
            from: edge_r,
            to: p.char_speeds(u_r).1,
        }
    };
    RiemannSolution {
        left: *u_l,
        middle: GasState::VACUUM,
        right: *u_r,
        pattern: WavePattern {
            family1: WaveKind::Vacuum,
            family2: WaveKind::Vacuum,
        },
        waves: [wave1, wave2],
        params: *p,
    }
}

impl RiemannSolution {
    pub fn params(&self) -> &GasParams {
        &self.params
    }

    /// Both states identical (no wave of positive strength).
    pub fn is_degenerate(&self) -> bool {
        self.left == self.right
    }

    /// Self-similar solution at ξ = x/t.
    pub fn sample(&self, xi: f64) -> GasState {
        let p = &self.params;
        let th = p.theta();
        match self.waves[0] {
            Wave::Shock { speed } => {
                if xi < speed {
                    return self.left;
                }
            }
            Wave::Rarefaction { from, to } => {
                if xi < from {
                    return self.left;
                }
                if xi < to {
                    let w_l = p.to_invariants(&self.left).w;
                    let c = (th * (w_l - xi) / (th + 1.0)).max(0.0);
                    return GasState::from_rho_v(pow0(c, 1.0 / th), xi + c);
                }
            }
        }
        match self.waves[1] {
            Wave::Shock { speed } => {
                if xi >= speed {
                    self.right
                } else {
                    self.middle
                }
            }
            Wave::Rarefaction { from, to } => {
                if xi >= to {
                    self.right
                } else if xi > from {
                    let z_r = p.to_invariants(&self.right).z;
                    let c = (th * (xi - z_r) / (th + 1.0)).max(0.0);
                    GasState::from_rho_v(pow0(c, 1.0 / th), xi - c)
                } else {
                    self.middle
                }
            }
        }
    }

    /// Largest absolute wave speed.
    pub fn max_speed(&self) -> f64 {
        self.waves
            .iter()
            .map(|w| w.slowest().abs().max(w.fastest().abs()))
            .fold(0.0, f64::max)
    }

    /// Ordered breakpoints (in ξ) between the smooth parts of the solution.
    pub fn breakpoints(&self) -> [f64; 4] {
        [
            self.waves[0].slowest(),
            self.waves[0].fastest(),
            self.waves[1].slowest(),
            self.waves[1].fastest(),
        ]
    }
}

/// Discretized rarefaction fan: `states[0]` is the outer state, the last one the
/// middle-state target; `speeds[i]` separates `states[i]` from `states[i + 1]`.
/// For the first family the fan is ordered left to right with increasing speeds;
/// for the second family it is ordered right to left with decreasing speeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RarefactionFan {
    pub states: Vec<InvariantPair>,
    pub speeds: Vec<f64>,
}

impl RarefactionFan {
    pub fn p(&self) -> usize {
        self.states.len()
    }
}

/// Number of fan states for an invariant jump `dz` with step `dx^alpha`.
pub fn fan_count(dz: f64, step: f64) -> usize {
    ((dz / step).floor() as usize + 1).max(2)
}

pub fn build_fan(u_l: &GasState, z_m: f64, dx: f64, alpha: f64, params: &GasParams) -> Result<RarefactionFan> {
    if u_l.is_vacuum() {
        return Err(Error::InvalidState("fan from a vacuum state".into()));
    }
    let inv = params.to_invariants(u_l);
    let (z_l, w_l) = (inv.z, inv.w);
    if z_m < z_l - 1e-12 * (1.0 + z_l.abs()) {
        return Err(Error::InvalidState(format!("fan target z_M = {z_m} below z_L = {z_l}")));
    }
    // roundoff in the middle state can put z_M a few ulps below z_L
    let z_m = z_m.max(z_l);
    let step = dx.powf(alpha);
    let p = fan_count(z_m - z_l, step);
    let mut states: Vec<InvariantPair> = (0..p - 1)
        .map(|i| InvariantPair {
            z: z_l + i as f64 * step,
            w: w_l,
        })
        .collect();
    states.push(InvariantPair { z: z_m, w: w_l });
    let rho_of = |s: &InvariantPair| params.density_of(s);
    let speeds = states
        .windows(2)
        .map(|ab| {
            let v = 0.5 * (ab[0].z + ab[0].w);
            v - s_unchecked(rho_of(&ab[1]), rho_of(&ab[0]), params)
        })
        .collect();
    Ok(RarefactionFan { states, speeds })
}

/// Second-family fan from the right state `u_r` down to `w_m`, by reflection.
pub fn build_fan2(u_r: &GasState, w_m: f64, dx: f64, alpha: f64, params: &GasParams) -> Result<RarefactionFan> {
    let f = build_fan(&u_r.reflect(), -w_m, dx, alpha, params)?;
    Ok(RarefactionFan {
        states: f
            .states
            .iter()
            .map(|s| InvariantPair { z: -s.w, w: -s.z })
            .collect(),
        speeds: f.speeds.iter().map(|s| -s).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gas2() -> GasParams {
        GasParams::new(2.0, 1.0).unwrap()
    }

    /// Independent oracle: plain bisection on (ρ−1)²(ρ+1) = 2ρ.
    fn collision_oracle() -> f64 {
        let f = |r: f64| (r - 1.0) * (r - 1.0) * (r + 1.0) - 2.0 * r;
        let (mut a, mut b) = (1.5, 3.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if f(c) > 0.0 {
                b = c
            } else {
                a = c
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn s_examples() {
        let g = gas2();
        assert_relative_eq!(shock_speed_s(4.0, 4.0, &g).unwrap(), 2.0, epsilon = 1e-14);
        let g14 = GasParams::new(1.4, 1.0).unwrap();
        assert_relative_eq!(shock_speed_s(1.0, 1.0, &g14).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(shock_speed_s(2.0, 1.0, &g).unwrap(), 3f64.sqrt(), epsilon = 1e-14);
        assert!(shock_speed_s(1.0, 0.0, &g).is_err());
        // continuity across the ρ = ρ0 switch
        let a = shock_speed_s(1.0 + 1.1e-9, 1.0, &g14).unwrap();
        let b = shock_speed_s(1.0 + 0.9e-9, 1.0, &g14).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn equal_states_are_degenerate() {
        let g = gas2();
        let u = GasState::from_rho_v(1.0, 0.0);
        let s = solve_riemann(&u, &u, &g).unwrap();
        assert!(s.is_degenerate());
        assert_relative_eq!(s.middle.rho, 1.0, epsilon = 1e-13);
        assert!(s.middle.m.abs() < 1e-13);
        assert_eq!(s.sample(0.3), u);
    }

    #[test]
    fn symmetric_collision() {
        let g = gas2();
        let s = solve_riemann(&GasState::from_rho_v(1.0, 1.0), &GasState::from_rho_v(1.0, -1.0), &g).unwrap();
        assert_eq!(s.pattern.case(), Some(4));
        assert!(s.middle.v().abs() < 1e-14);
        assert!((s.middle.rho - collision_oracle()).abs() < 1e-8);
        assert!((s.middle.rho - 2.170).abs() < 1e-3);
        assert_eq!(s.sample(0.0), s.middle);
        let Wave::Shock { speed } = s.waves[1] else { panic!() };
        assert!(rh_residual(speed, &s.middle, &s.right, &g) <= 1e-10);
        assert!(rh_residual(speed + 0.1, &s.middle, &s.right, &g) > 1e-3);
    }

    #[test]
    fn vacuum_pattern() {
        let g = gas2();
        let s = solve_riemann(&GasState::from_rho_v(1.0, 0.0), &GasState::from_rho_v(1.0, 5.0), &g).unwrap();
        assert!(s.pattern.is_vacuum());
        assert_eq!(s.middle, GasState::VACUUM);
        assert_eq!(s.sample(2.5), GasState::VACUUM);
        let near = s.sample(1.999_999);
        assert!(near.rho < 1e-10);
    }

    #[test]
    fn case_one_sampling_outside_span() {
        let g = gas2();
        let s = solve_riemann(&GasState::from_rho_v(2.0, 0.0), &GasState::from_rho_v(1.0, -0.5), &g).unwrap();
        assert_eq!(s.pattern.case(), Some(1));
        let lam = g.char_speeds(&s.left).0;
        assert_eq!(s.sample(lam - 0.1), s.left);
    }

    #[test]
    fn fan_counts() {
        let g = gas2();
        let u = GasState::from_rho_v(1.0, 0.0);
        let z = g.to_invariants(&u).z;
        assert_eq!(build_fan(&u, z + 0.05, 1e-2, 0.75, &g).unwrap().p(), 2);
        assert_eq!(build_fan(&u, z, 1e-2, 0.75, &g).unwrap().p(), 2);
        let f = build_fan(&u, z + 0.5, 1e-2, 0.75, &g).unwrap();
        assert_eq!(f.p(), 16);
        assert_eq!(f.states.last().unwrap().z, z + 0.5);
        assert!(f.speeds.windows(2).all(|s| s[1] > s[0]));
        assert!(build_fan(&u, z - 0.1, 1e-2, 0.75, &g).is_err());
    }

    #[test]
    fn degenerate_fan_speed_is_characteristic() {
        let g = GasParams::new(1.4, 1.0).unwrap();
        let u = GasState::from_rho_v(1.7, 0.3);
        let f = build_fan(&u, g.to_invariants(&u).z, 0.01, 0.75, &g).unwrap();
        assert_relative_eq!(f.speeds[0], g.char_speeds(&u).0, epsilon = 1e-12);
    }

    #[test]
    fn hugoniot_curves_satisfy_jump_conditions() {
        let g = GasParams::new(1.4, 1.0).unwrap();
        let u = GasState::from_rho_v(1.3, -0.4);
        for &r in &[0.2, 1.0, 1.3, 2.0, 5.0] {
            let (v, s) = hugoniot1_right(&u, r, &g);
            assert!(rh_residual(s, &u, &v, &g) < 1e-13);
            let (v2, s2) = hugoniot2_left(&u, r, &g);
            assert!(rh_residual(s2, &v2, &u, &g) < 1e-13);
        }
    }
}
