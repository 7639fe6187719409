//! Piecewise-constant initial data that equals the background state outside a
//! bounded interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gas::{GasParams, GasState};

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    /// Piece boundaries, strictly increasing; `breaks.len() == states.len() + 1`.
    breaks: Vec<f64>,
    states: Vec<GasState>,
    background: GasState,
}

impl InitialData {
    pub fn new(breaks: Vec<f64>, states: Vec<GasState>, params: &GasParams) -> Result<Self> {
        if breaks.len() != states.len() + 1 {
            return Err(Error::InitialData(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                states.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InitialData("breakpoints must be finite and strictly increasing".into()));
        }
        for u in &states {
            u.validate().map_err(|e| Error::InitialData(e.to_string()))?;
        }
        Ok(InitialData {
            breaks,
            states,
            background: params.background(),
        })
    }

    pub fn constant(params: &GasParams) -> Self {
        InitialData {
            breaks: vec![-1.0, 1.0],
            states: vec![params.background()],
            background: params.background(),
        }
    }

    pub fn square_pulse(params: &GasParams, left: f64, right: f64, rho: f64, v: f64) -> Result<Self> {
        Self::new(vec![left, right], vec![GasState::from_rho_v(rho, v)], params)
    }

    /// Two constant states on `[-half_width, 0)` and `[0, half_width)`.
    pub fn riemann(params: &GasParams, left: GasState, right: GasState, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width, 0.0, half_width], vec![left, right], params)
    }

    /// Random bounded pieces on `[left, right]`, reproducible from `seed`.
    #[allow(clippy::too_many_arguments)]
    pub fn random_bounded(
        params: &GasParams,
        seed: u64,
        pieces: usize,
        left: f64,
        right: f64,
        rho_range: (f64, f64),
        v_max: f64,
    ) -> Result<Self> {
        if pieces == 0 {
            return Err(Error::InitialData("random data needs at least one piece".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = (right - left) / pieces as f64;
        let breaks = (0..=pieces).map(|i| left + i as f64 * h).collect();
        let states = (0..pieces)
            .map(|_| {
                let rho = rng.gen_range(rho_range.0..=rho_range.1);
                let v = rng.gen_range(-v_max..=v_max);
                GasState::from_rho_v(rho, v)
            })
            .collect();
        Self::new(breaks, states, params)
    }

    /// Smooth bump ρ̄ + a·cos²(π(x − c)/(2h)) on |x − c| < h sampled at piece
    /// midpoints with `resolution` pieces.
    pub fn smooth_pulse(params: &GasParams, center: f64, half_width: f64, amplitude: f64, resolution: usize) -> Result<Self> {
        let n = resolution.max(1);
        let h = 2.0 * half_width / n as f64;
        let breaks = (0..=n).map(|i| center - half_width + i as f64 * h).collect();
        let states = (0..n)
            .map(|i| {
                let x = center - half_width + (i as f64 + 0.5) * h;
                let s = (std::f64::consts::FRAC_PI_2 * (x - center) / half_width).cos();
                GasState::from_rho_v(params.rho_bar() + amplitude * s * s, 0.0)
            })
            .collect();
        Self::new(breaks, states, params)
    }

    /// Rows `(x, ρ, v)`: row k holds on `[x_k, x_{k+1})`; the last row marks the
    /// right end of the data and must carry the background state.
    pub fn from_samples(params: &GasParams, rows: &[(f64, f64, f64)]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InitialData("samples need at least two rows".into()));
        }
        let last = rows[rows.len() - 1];
        let bg = params.background();
        if (last.1 - bg.rho).abs() > 1e-12 * bg.rho.max(1.0) || last.2.abs() > 1e-12 {
            return Err(Error::InitialData(format!(
                "last sample row must be the background state (rho = {}, v = 0)",
                bg.rho
            )));
        }
        let breaks = rows.iter().map(|r| r.0).collect();
        let states = rows[..rows.len() - 1]
            .iter()
            .map(|r| GasState::from_rho_v(r.1, r.2))
            .collect();
        Self::new(breaks, states, params)
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, GasState)> + '_ {
        self.states
            .iter()
            .enumerate()
            .map(|(k, u)| (self.breaks[k], self.breaks[k + 1], *u))
    }

    /// Smallest interval outside of which the data is the background state.
    pub fn support(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (a, b, u) in self.pieces() {
            if u != self.background {
                lo = lo.min(a);
                hi = hi.max(b);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn value_at(&self, x: f64) -> GasState {
        for (a, b, u) in self.pieces() {
            if x >= a && x < b {
                return u;
            }
        }
        self.background
    }

    /// Exact average over `[a, b]`.
    pub fn average(&self, a: f64, b: f64) -> GasState {
        let len = b - a;
        let mut covered = 0.0;
        let mut acc = [0.0; 2];
        for (pa, pb, u) in self.pieces() {
            let o = (pb.min(b) - pa.max(a)).max(0.0);
            if o > 0.0 {
                covered += o;
                acc[0] += o * u.rho;
                acc[1] += o * u.m;
            }
        }
        let rest = (len - covered).max(0.0);
        acc[0] += rest * self.background.rho;
        GasState {
            rho: acc[0] / len,
            m: acc[1] / len,
        }
    }

    /// Overlaps of the pieces with `[a, b]` including background gaps, in order.
    pub fn segments(&self, a: f64, b: f64) -> Vec<(f64, f64, GasState)> {
        let mut out = Vec::new();
        let mut x = a;
        for (pa, pb, u) in self.pieces() {
            let lo = pa.max(a);
            let hi = pb.min(b);
            if hi <= lo {
                continue;
            }
            if lo > x {
                out.push((x, lo, self.background));
            }
            out.push((lo, hi, u));
            x = hi;
        }
        if b > x {
            out.push((x, b, self.background));
        }
        out
    }

    /// E0 = ∫ J(u0) dx.
    pub fn energy(&self, params: &GasParams) -> f64 {
        self.pieces().map(|(a, b, u)| (b - a) * params.relative_energy(&u)).sum()
    }

    /// Extrema of z̃ = z − ∫^x J and w̃ = w − ∫^x J over the line (vacuum
    /// pieces carry no invariants and are skipped).
    pub fn tilde_extrema(&self, params: &GasParams) -> (f64, f64) {
        let edge = params.band_edge();
        let mut min_z = -edge;
        let mut max_w = edge;
        let mut prefix = 0.0;
        for (a, b, u) in self.pieces() {
            let start = prefix;
            prefix += (b - a) * params.relative_energy(&u);
            if !u.is_vacuum() {
                let inv = params.to_invariants(&u);
                min_z = min_z.min(inv.z - prefix);
                max_w = max_w.max(inv.w - start);
            }
        }
        min_z = min_z.min(-edge - prefix);
        (min_z, max_w)
    }

    pub fn max_abs(&self) -> f64 {
        self.states
            .iter()
            .map(|u| u.rho.abs().max(u.v().abs()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gas2() -> GasParams {
        GasParams::new(2.0, 1.0).unwrap()
    }

    #[test]
    fn pulse_energy_is_one() {
        let g = gas2();
        let d = InitialData::square_pulse(&g, -1.0, 1.0, 2.0, 0.0).unwrap();
        assert_relative_eq!(d.energy(&g), 1.0, epsilon = 1e-15);
        assert_eq!(d.support(), Some((-1.0, 1.0)));
        let (mz, mw) = d.tilde_extrema(&g);
        assert_relative_eq!(mw, 2.0 * 2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(mz, -2.0 * 2f64.sqrt() - 1.0, epsilon = 1e-14);
    }

    #[test]
    fn averages_are_exact() {
        let g = gas2();
        let d = InitialData::new(vec![0.0, 1.0, 2.0], vec![GasState::from_rho_v(1.0, 0.0), GasState::from_rho_v(3.0, 0.0)], &g).unwrap();
        assert_relative_eq!(d.average(0.0, 2.0).rho, 2.0);
        assert_relative_eq!(d.average(-1.0, 1.0).rho, 1.0);
        assert_relative_eq!(d.average(1.5, 2.5).rho, 2.0);
    }

    #[test]
    fn constant_has_no_support() {
        let g = gas2();
        let d = InitialData::constant(&g);
        assert_eq!(d.support(), None);
        assert_eq!(d.energy(&g), 0.0);
    }

    #[test]
    fn samples_require_background_tail() {
        let g = gas2();
        assert!(InitialData::from_samples(&g, &[(0.0, 2.0, 0.0), (1.0, 2.0, 0.0)]).is_err());
        let d = InitialData::from_samples(&g, &[(0.0, 2.0, 0.0), (1.0, 1.0, 0.0)]).unwrap();
        assert_eq!(d.support(), Some((0.0, 1.0)));
    }

    #[test]
    fn random_is_reproducible() {
        let g = gas2();
        let a = InitialData::random_bounded(&g, 7, 10, -1.0, 1.0, (0.5, 2.0), 1.0).unwrap();
        let b = InitialData::random_bounded(&g, 7, 10, -1.0, 1.0, (0.5, 2.0), 1.0).unwrap();
        assert_eq!(a, b);
        assert!(a.pieces().all(|(_, _, u)| u.rho >= 0.5 && u.rho <= 2.0));
    }
}
