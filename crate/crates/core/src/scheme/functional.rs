//! Cutoff projection, prefix energy integrals, the decaying bound M_n, the
//! choice of δ, and the convexity remainder used by the functional L_n.

use crate::error::{Error, Result};
use crate::gas::{pow0, GasParams, GasState, InvariantPair};

/// Result of projecting a cell average onto the current invariant bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub state: GasState,
    /// |z(E) − z| + |w(E) − w| (zero when the clamps are inactive).
    pub cut: f64,
    pub vacuum: bool,
}

/// Bounds used by the cutoff: z ≥ −M − E0 − L + I and w ≤ M + L + I.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffBounds {
    pub m: f64,
    pub l: f64,
    pub e0: f64,
    pub dx: f64,
    pub mu: f64,
}

pub fn cutoff_project(e: &GasState, prefix: f64, b: &CutoffBounds, params: &GasParams) -> Projection {
    if e.rho < pow0(b.dx, b.mu) {
        return Projection {
            state: GasState::VACUUM,
            cut: 0.0,
            vacuum: true,
        };
    }
    let inv = params.to_invariants(e);
    let z = inv.z.max(-b.m - b.e0 - b.l + prefix);
    let w = inv.w.min(b.m + b.l + prefix);
    if z == inv.z && w == inv.w {
        return Projection {
            state: *e,
            cut: 0.0,
            vacuum: false,
        };
    }
    let state = params.from_invariants_or_vacuum(&InvariantPair { z, w });
    Projection {
        state,
        cut: (z - inv.z).abs() + (w - inv.w).abs(),
        vacuum: state.is_vacuum(),
    }
}

/// I_j = ∫_{-∞}^{x_j} J for piecewise-constant cells of width `width` centered
/// at x_j: all cells to the left plus half of the own cell.
pub fn prefix_integrals(cells: &[GasState], width: f64, params: &GasParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(cells.len());
    let mut acc = 0.0;
    for u in cells {
        let j = params.relative_energy(u);
        out.push(acc + 0.5 * width * j);
        acc += width * j;
    }
    out
}

/// M_{n+1} from M_n and L_n.
pub fn update_m(m: f64, l: f64, delta: f64, dt: f64, epsilon: f64, params: &GasParams) -> f64 {
    if m + l >= params.band_edge() + epsilon {
        m - delta * dt
    } else {
        m
    }
}

/// Taylor remainder η(u) − η(E) − ∇η(E)·(u − E) ≥ 0.
pub fn taylor_remainder(u: &GasState, e: &GasState, params: &GasParams) -> f64 {
    let eta_u = params.eta(u);
    if e.is_vacuum() {
        return eta_u;
    }
    let g = params.gamma();
    let v = e.v();
    let d_rho = -0.5 * v * v + pow0(e.rho, g - 1.0) / (g - 1.0);
    let d_m = v;
    let r = eta_u - params.eta(e) - d_rho * (u.rho - e.rho) - d_m * (u.m - e.m);
    r.max(0.0)
}

/// δ from a grid search of the source margins: δ = min(g1, −g2)/4 over
/// z ≤ −ρ̄^θ/θ − ε/2 (resp. w ≥ ρ̄^θ/θ + ε/2) inside the box |z|, |w| ≤ bound.
pub fn choose_delta(params: &GasParams, bound: f64, epsilon: f64, n: usize) -> Result<f64> {
    let edge = params.band_edge();
    let th = params.theta();
    let z_hi = -edge - 0.5 * epsilon;
    let z_lo = -bound.max(edge + epsilon);
    // largest density in the box: ρ^θ/θ ≤ bound
    let rho_max = pow0(th * 2.0 * bound.max(edge + epsilon), 1.0 / th);
    let mut worst = f64::INFINITY;
    for i in 1..=n {
        let rho = rho_max * i as f64 / n as f64;
        let h = params.half_width(rho);
        for k in 0..=n {
            let z = z_lo + (z_hi - z_lo) * k as f64 / n as f64;
            let u = GasState::from_rho_v(rho, z + h);
            worst = worst.min(params.g1(&u));
            // mirrored state for g2: w = −z
            let u2 = GasState::from_rho_v(rho, -z - h);
            worst = worst.min(-params.g2(&u2));
        }
    }
    // vacuum limit: g1 → −p̄·z, g2 → −p̄·w
    worst = worst.min(-params.p(params.rho_bar()) * z_hi);
    if !(worst > 0.0) {
        return Err(Error::Mesh(format!("no positive source margin (min {worst})")));
    }
    Ok(0.25 * worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gas2() -> GasParams {
        GasParams::new(2.0, 1.0).unwrap()
    }

    fn bounds(m: f64) -> CutoffBounds {
        CutoffBounds {
            m,
            l: 0.0,
            e0: 0.0,
            dx: 0.1,
            mu: 1.2,
        }
    }

    #[test]
    fn cutoff_inactive_inside_bounds() {
        let g = gas2();
        let e = GasState::from_rho_v(1.2, 0.1);
        let p = cutoff_project(&e, 0.0, &bounds(5.0), &g);
        assert_eq!(p.state, e);
        assert_eq!(p.cut, 0.0);
    }

    #[test]
    fn cutoff_vacuum_clause() {
        let g = gas2();
        let b = bounds(5.0);
        let e = GasState::from_rho_v(0.5 * 0.1f64.powf(1.2), 0.3);
        let p = cutoff_project(&e, 0.0, &b, &g);
        assert_eq!(p.state, GasState::VACUUM);
        assert!(p.vacuum);
    }

    #[test]
    fn cutoff_clamps_w_only() {
        let g = gas2();
        let e = GasState::from_rho_v(1.0, 3.0);
        let b = CutoffBounds { l: 0.1, ..bounds(2.0) };
        let p = cutoff_project(&e, 0.4, &b, &g);
        let inv = g.to_invariants(&p.state);
        assert_relative_eq!(inv.w, 2.0 + 0.1 + 0.4, epsilon = 1e-13);
        assert_relative_eq!(inv.z, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn prefix_examples() {
        let g = gas2();
        let bg = g.background();
        assert!(prefix_integrals(&[bg; 4], 0.2, &g).iter().all(|&x| x == 0.0));
        let cells = [bg, GasState::from_rho_v(2.0, 0.0), bg];
        let p = prefix_integrals(&cells, 0.2, &g);
        assert_relative_eq!(p[2] - p[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn update_m_examples() {
        // threshold ρ̄^θ/θ + ε = 2.05 for γ = 2, ρ̄ = 1, ε = 0.05
        let g = gas2();
        assert_relative_eq!(update_m(2.0, 0.1, 0.01, 0.1, 0.05, &g), 1.999, epsilon = 1e-15);
        assert_eq!(update_m(1.9, 0.1, 0.01, 0.1, 0.05, &g), 1.9);
    }

    #[test]
    fn remainder_is_nonnegative() {
        let g = GasParams::new(1.4, 1.0).unwrap();
        let e = GasState::from_rho_v(1.0, 0.5);
        for &(r, v) in &[(0.0, 0.0), (0.5, -1.0), (1.0, 0.5), (3.0, 2.0)] {
            assert!(taylor_remainder(&GasState::from_rho_v(r, v), &e, &g) >= 0.0);
        }
        assert_eq!(taylor_remainder(&e, &e, &g), 0.0);
    }

    #[test]
    fn delta_is_positive_and_small() {
        let g = gas2();
        let d = choose_delta(&g, 5.83, 0.05, 200).unwrap();
        assert!(d > 0.0 && d < 0.05, "delta {d}");
    }
}
