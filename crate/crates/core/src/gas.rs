//! Gamma-law isentropic gas: pressure, flux, Riemann invariants, entropy pair and
//! the relative-energy correction functions J, V, g1, g2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest adiabatic exponent accepted.
pub const GAMMA_MAX: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    gamma: f64,
    theta: f64,
    rho_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GasState {
    pub rho: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InvariantPair {
    pub z: f64,
    pub w: f64,
}

impl GasState {
    pub const VACUUM: GasState = GasState { rho: 0.0, m: 0.0 };

    pub fn new(rho: f64, m: f64) -> Result<Self> {
        let u = GasState { rho, m };
        u.validate()?;
        Ok(u)
    }

    pub fn from_rho_v(rho: f64, v: f64) -> Self {
        GasState { rho, m: rho * v }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || !self.m.is_finite() {
            return Err(Error::InvalidState(format!(
                "non-finite state ({}, {})",
                self.rho, self.m
            )));
        }
        if self.rho < 0.0 {
            return Err(Error::NegativeDensity(self.rho));
        }
        if self.rho == 0.0 && self.m != 0.0 {
            return Err(Error::InvalidState(format!(
                "vacuum with momentum {}",
                self.m
            )));
        }
        Ok(())
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho <= 0.0
    }

    /// Velocity; zero at vacuum.
    pub fn v(&self) -> f64 {
        if self.is_vacuum() {
            0.0
        } else {
            self.m / self.rho
        }
    }

    pub fn sub(&self, o: &GasState) -> [f64; 2] {
        [self.rho - o.rho, self.m - o.m]
    }

    pub fn max_abs_diff(&self, o: &GasState) -> f64 {
        (self.rho - o.rho).abs().max((self.m - o.m).abs())
    }
}

/// `x^e` for `x >= 0` with `0^e = 0`.
#[inline]
pub fn pow0(x: f64, e: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (e * x.ln()).exp()
    }
}

impl GasParams {
    pub fn new(gamma: f64, rho_bar: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= GAMMA_MAX) {
            return Err(Error::InvalidParams(format!(
                "gamma = {gamma} outside (1, {GAMMA_MAX}]"
            )));
        }
        if !(rho_bar > 0.0 && rho_bar.is_finite()) {
            return Err(Error::InvalidParams(format!("rho_bar = {rho_bar} must be > 0")));
        }
        Ok(GasParams {
            gamma,
            theta: (gamma - 1.0) / 2.0,
            rho_bar,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    pub fn background(&self) -> GasState {
        GasState {
            rho: self.rho_bar,
            m: 0.0,
        }
    }

    /// ρ̄^θ/θ, the invariant level of the background state.
    pub fn band_edge(&self) -> f64 {
        pow0(self.rho_bar, self.theta) / self.theta
    }

    pub fn pressure(&self, rho: f64) -> Result<f64> {
        if rho < 0.0 {
            return Err(Error::NegativeDensity(rho));
        }
        Ok(self.p(rho))
    }

    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        pow0(rho, self.gamma) / self.gamma
    }

    pub fn flux(&self, u: &GasState) -> [f64; 2] {
        if u.is_vacuum() {
            return [0.0, 0.0];
        }
        [u.m, u.m * u.m / u.rho + self.p(u.rho)]
    }

    /// ρ^θ/θ
    #[inline]
    pub fn half_width(&self, rho: f64) -> f64 {
        pow0(rho, self.theta) / self.theta
    }

    /// Riemann invariants; the vacuum maps to z = w = 0 and callers branch on
    /// [`GasState::is_vacuum`].
    pub fn to_invariants(&self, u: &GasState) -> InvariantPair {
        if u.is_vacuum() {
            return InvariantPair { z: 0.0, w: 0.0 };
        }
        let v = u.m / u.rho;
        let h = self.half_width(u.rho);
        InvariantPair { z: v - h, w: v + h }
    }

    pub fn density_of(&self, zw: &InvariantPair) -> f64 {
        pow0(self.theta * (zw.w - zw.z) / 2.0, 1.0 / self.theta)
    }

    pub fn from_invariants(&self, zw: &InvariantPair) -> Result<GasState> {
        if !(zw.w >= zw.z) {
            return Err(Error::InvertedInvariants { z: zw.z, w: zw.w });
        }
        Ok(self.from_invariants_or_vacuum(zw))
    }

    /// Like [`from_invariants`](Self::from_invariants) but maps `w <= z` to vacuum.
    pub fn from_invariants_or_vacuum(&self, zw: &InvariantPair) -> GasState {
        if !(zw.w > zw.z) {
            return GasState::VACUUM;
        }
        let rho = self.density_of(zw);
        if rho <= 0.0 {
            return GasState::VACUUM;
        }
        GasState {
            rho,
            m: rho * 0.5 * (zw.w + zw.z),
        }
    }

    pub fn char_speeds(&self, u: &GasState) -> (f64, f64) {
        let v = u.v();
        let c = pow0(u.rho, self.theta);
        (v - c, v + c)
    }

    pub fn entropy_pair(&self, u: &GasState) -> (f64, f64) {
        if u.is_vacuum() {
            return (0.0, 0.0);
        }
        let g = self.gamma;
        let v = u.m / u.rho;
        let eta = 0.5 * u.m * v + pow0(u.rho, g) / (g * (g - 1.0));
        let q = u.m * (0.5 * v * v + pow0(u.rho, g - 1.0) / (g - 1.0));
        (eta, q)
    }

    pub fn eta(&self, u: &GasState) -> f64 {
        self.entropy_pair(u).0
    }

    /// ρ̄^{γ-1}/(γ-1), the slope of the linear part removed in J and V.
    #[inline]
    fn enthalpy_bar(&self) -> f64 {
        pow0(self.rho_bar, self.gamma - 1.0) / (self.gamma - 1.0)
    }

    /// Relative energy J(u) = η*(u) − ρ̄^{γ−1}/(γ−1)·ρ + ρ̄^γ/γ.
    pub fn relative_energy(&self, u: &GasState) -> f64 {
        self.eta(u) - self.enthalpy_bar() * u.rho + self.p(self.rho_bar)
    }

    /// Flux companion of J: V(u) = q*(u) − ρ̄^{γ−1}/(γ−1)·m.
    pub fn correction_v(&self, u: &GasState) -> f64 {
        self.entropy_pair(u).1 - self.enthalpy_bar() * u.m
    }

    /// Source terms (g1, g2) at density ρ and velocity v. Taking v separately
    /// keeps the velocity meaningful at ρ = 0, where λ1 = λ2 = v.
    pub fn sources_rho_v(&self, rho: f64, v: f64) -> (f64, f64) {
        let (g, th) = (self.gamma, self.theta);
        let c = pow0(rho, th);
        let pbar = self.p(self.rho_bar);
        let a = pow0(rho, g + th) / (g * (g - 1.0));
        let b = pow0(rho, g) * v / g;
        let k = 0.5 * pow0(rho, th + 1.0) * v * v;
        let h = self.enthalpy_bar() * pow0(rho, th + 1.0);
        (-pbar * (v - c) + a + b + k - h, -pbar * (v + c) - a + b - k + h)
    }

    pub fn g1(&self, u: &GasState) -> f64 {
        self.sources_rho_v(u.rho, u.v()).0
    }

    pub fn g2(&self, u: &GasState) -> f64 {
        self.sources_rho_v(u.rho, u.v()).1
    }

    /// (g1, g2) together.
    pub fn sources(&self, u: &GasState) -> (f64, f64) {
        self.sources_rho_v(u.rho, u.v())
    }

    /// Smallest and largest wave speed magnitude of a state.
    pub fn max_speed(&self, u: &GasState) -> f64 {
        let (a, b) = self.char_speeds(u);
        a.abs().max(b.abs())
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
    fn pressure_examples() {
        let g = gas2();
        assert_eq!(g.pressure(0.0).unwrap(), 0.0);
        assert_relative_eq!(g.pressure(1.0).unwrap(), 0.5);
        let g53 = GasParams::new(5.0 / 3.0, 1.0).unwrap();
        assert_relative_eq!(g53.pressure(1.0).unwrap(), 0.6, epsilon = 1e-15);
        assert!(matches!(g.pressure(-1.0), Err(Error::NegativeDensity(_))));
    }

    #[test]
    fn flux_examples() {
        let g = gas2();
        assert_eq!(g.flux(&GasState { rho: 1.0, m: 0.0 }), [0.0, 0.5]);
        assert_eq!(g.flux(&GasState::VACUUM), [0.0, 0.0]);
        assert_eq!(g.flux(&GasState { rho: 1.0, m: 2.0 }), [2.0, 4.5]);
    }

    #[test]
    fn invariant_examples() {
        let g = gas2();
        let p = g.to_invariants(&GasState { rho: 1.0, m: 0.0 });
        assert_relative_eq!(p.z, -2.0);
        assert_relative_eq!(p.w, 2.0);
        let p = g.to_invariants(&GasState { rho: 1.0, m: 1.0 });
        assert_relative_eq!(p.z, -1.0);
        assert_relative_eq!(p.w, 3.0);
        let g3 = GasParams::new(1.4, 2.5).unwrap();
        let p = g3.to_invariants(&g3.background());
        assert_relative_eq!(p.w, g3.band_edge());
        assert_relative_eq!(p.z, -g3.band_edge());

        let u = g.from_invariants(&InvariantPair { z: -2.0, w: 2.0 }).unwrap();
        assert_relative_eq!(u.rho, 1.0, epsilon = 1e-15);
        assert_eq!(u.m, 0.0);
        let u = g.from_invariants(&InvariantPair { z: 0.7, w: 0.7 }).unwrap();
        assert_eq!(u, GasState::VACUUM);
        let u = g.from_invariants(&InvariantPair { z: -1.0, w: 3.0 }).unwrap();
        assert_relative_eq!(u.rho, 1.0, epsilon = 1e-15);
        assert_relative_eq!(u.m, 1.0, epsilon = 1e-15);
        assert!(g.from_invariants(&InvariantPair { z: 1.0, w: 0.0 }).is_err());
    }

    #[test]
    fn char_speed_examples() {
        let g = gas2();
        assert_eq!(g.char_speeds(&GasState { rho: 1.0, m: 0.0 }), (-1.0, 1.0));
        assert_eq!(g.char_speeds(&GasState::VACUUM), (0.0, 0.0));
        let (a, b) = g.char_speeds(&GasState { rho: 4.0, m: 4.0 });
        assert_relative_eq!(a, -1.0, epsilon = 1e-15);
        assert_relative_eq!(b, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn entropy_and_corrections() {
        let g = gas2();
        assert_eq!(g.entropy_pair(&GasState { rho: 1.0, m: 0.0 }), (0.5, 0.0));
        assert_eq!(g.entropy_pair(&GasState::VACUUM), (0.0, 0.0));
        let (e, q) = g.entropy_pair(&GasState { rho: 1.0, m: 1.0 });
        assert_relative_eq!(e, 1.0);
        assert_relative_eq!(q, 1.5);

        assert_eq!(g.relative_energy(&g.background()), 0.0);
        assert_relative_eq!(g.relative_energy(&GasState::VACUUM), 0.5);
        assert_relative_eq!(g.relative_energy(&GasState { rho: 2.0, m: 0.0 }), 0.5);

        assert_eq!(g.correction_v(&g.background()), 0.0);
        assert_relative_eq!(g.correction_v(&GasState { rho: 1.0, m: 1.0 }), 0.5);
        assert_eq!(g.correction_v(&GasState::VACUUM), 0.0);
    }

    #[test]
    fn source_signs_at_examples() {
        let g = gas2();
        assert_eq!(g.g1(&g.background()), 0.0);
        assert_eq!(g.g2(&g.background()), 0.0);
        assert!(g.g1(&GasState::from_rho_v(1.0, -1.0)) > 0.0);
        assert!(g.g2(&GasState::from_rho_v(1.0, 1.0)) < 0.0);
    }

    #[test]
    fn sources_are_flux_minus_speed_times_energy() {
        // g1 = V − λ1 J and g2 = V − λ2 J
        for &gamma in &[1.1, 1.4, 5.0 / 3.0, 2.0] {
            let g = GasParams::new(gamma, 1.3).unwrap();
            for &(r, v) in &[(0.3, -1.2), (1.0, 0.0), (2.5, 0.7), (0.01, 3.0)] {
                let u = GasState::from_rho_v(r, v);
                let (l1, l2) = g.char_speeds(&u);
                let j = g.relative_energy(&u);
                let vv = g.correction_v(&u);
                assert_relative_eq!(g.g1(&u), vv - l1 * j, epsilon = 1e-12, max_relative = 1e-12);
                assert_relative_eq!(g.g2(&u), vv - l2 * j, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GasParams::new(1.0, 1.0).is_err());
        assert!(GasParams::new(3.5, 1.0).is_err());
        assert!(GasParams::new(1.4, 0.0).is_err());
        assert!(GasState::new(-1.0, 0.0).is_err());
        assert!(GasState::new(0.0, 1.0).is_err());
    }
}
