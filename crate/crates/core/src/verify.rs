//! Sampled certification of the polynomial inequalities and source-term sign
//! structure behind the invariant-region argument, plus a Lax–Friedrichs
//! reference solver used as an independent oracle.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::totals;
use crate::error::{Error, Result};
use crate::gas::{pow0, GasParams, GasState};
use crate::numerics::{map_indexed, radical_inverse, Execution};
use crate::scheme::{InitialData, MeshConfig, Scheme, Variant};

/// Outcome of one sampled check. `pass` holds iff `worst_margin ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub claim: String,
    pub gamma: f64,
    pub samples: usize,
    pub worst_margin: f64,
    pub worst_point: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl CertReport {
    fn new(claim: Claim, gamma: f64, samples: usize, worst: (f64, Vec<f64>), tolerance: f64) -> Self {
        CertReport {
            claim: claim.id().to_string(),
            gamma,
            samples,
            worst_margin: worst.0,
            worst_point: worst.1,
            tolerance,
            pass: worst.0 >= -tolerance,
        }
    }
}

/// f(t) = (5γ−3)t^{3θ+1} − 2(3γ−1)t^{2θ+1} + γ(3−γ)t^{θ+1} − (3−γ)(γ−1)t^θ + 2(γ−1).
pub fn poly_f(gamma: f64, t: f64) -> f64 {
    let th = 0.5 * (gamma - 1.0);
    (5.0 * gamma - 3.0) * pow0(t, 3.0 * th + 1.0) - 2.0 * (3.0 * gamma - 1.0) * pow0(t, 2.0 * th + 1.0)
        + gamma * (3.0 - gamma) * pow0(t, th + 1.0)
        - (3.0 - gamma) * (gamma - 1.0) * pow0(t, th)
        + 2.0 * (gamma - 1.0)
}

/// g(t) = (γ+1)/(2γ²(γ−1)) t^{2γ} − t^{γ+1}/(γ−1) + (γ+1)/γ² t^γ − 1/(2γ²).
pub fn poly_g(gamma: f64, t: f64) -> f64 {
    let g = gamma;
    (g + 1.0) / (2.0 * g * g * (g - 1.0)) * t.powf(2.0 * g) - t.powf(g + 1.0) / (g - 1.0) + (g + 1.0) / (g * g) * t.powf(g)
        - 1.0 / (2.0 * g * g)
}

/// g'''(t) in closed form: (γ+1)/γ · [2(2γ−1)t^{2γ−3} − γ²t^{γ−2} + (γ−1)(γ−2)t^{γ−3}].
pub fn poly_g_third(gamma: f64, t: f64) -> f64 {
    let g = gamma;
    (g + 1.0) / g * (2.0 * (2.0 * g - 1.0) * t.powf(2.0 * g - 3.0) - g * g * t.powf(g - 2.0) + (g - 1.0) * (g - 2.0) * t.powf(g - 3.0))
}

/// g1 rewritten as a completed square in z (valid for ρ > 0).
pub fn g1_completed_square(params: &GasParams, rho: f64, z: f64) -> f64 {
    let g = params.gamma();
    let th = params.theta();
    let rb = params.rho_bar();
    let r1 = rho.powf(th + 1.0);
    let s = z - rb.powf(g) / (g * r1) + (3.0 * g - 1.0) / (g * (g - 1.0)) * rho.powf(th);
    0.5 * r1 * s * s + (g + 1.0) / (2.0 * g * g * (g - 1.0)) * rho.powf(g + th) - rb.powf(g - 1.0) / (g - 1.0) * r1
        + (g + 1.0) / (g * g) * rb.powf(g) * rho.powf(th)
        - rb.powf(2.0 * g) / (2.0 * g * g) / r1
}

/// g1 at density ρ and first invariant z.
pub fn g1_at(params: &GasParams, rho: f64, z: f64) -> f64 {
    params.sources_rho_v(rho, z + pow0(rho, params.theta()) / params.theta()).0
}

/// g2 at density ρ and second invariant w.
pub fn g2_at(params: &GasParams, rho: f64, w: f64) -> f64 {
    params.sources_rho_v(rho, w - pow0(rho, params.theta()) / params.theta()).1
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma <= 5.0 / 3.0 + 1e-12 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("gamma = {gamma} outside (1, 5/3]")))
    }
}

/// Smallest margin and where it occurs; ties keep the earliest point.
fn worst_of(points: Vec<(f64, Vec<f64>)>) -> (f64, Vec<f64>) {
    points
        .into_iter()
        .fold((f64::INFINITY, Vec::new()), |acc, p| if p.0 < acc.0 || p.0.is_nan() { p } else { acc })
}

/// Minimum of f over low-discrepancy samples of [0, 1] plus both endpoints.
pub fn check_f_nonneg(gamma: f64, samples: usize, exec: Execution) -> Result<CertReport> {
    check_gamma(gamma)?;
    let pts = map_indexed(samples + 2, exec, |k| {
        let t = match k {
            0 => 0.0,
            1 => 1.0,
            _ => radical_inverse(k as u64 - 1, 2),
        };
        (poly_f(gamma, t), vec![t])
    });
    Ok(CertReport::new(Claim::PolyF, gamma, samples + 2, worst_of(pts), 1e-12))
}

fn unit_to(k: usize, a: f64, b: f64) -> f64 {
    a + (b - a) * radical_inverse(k as u64, 2)
}

/// Minimum of g over samples of [1, t_max] plus both endpoints.
pub fn check_g_nonneg(gamma: f64, samples: usize, t_max: f64, exec: Execution) -> Result<CertReport> {
    check_gamma(gamma)?;
    if !(t_max >= 10.0) {
        return Err(Error::InvalidParams(format!("t_max = {t_max} must be at least 10")));
    }
    let pts = map_indexed(samples + 2, exec, |k| {
        let t = match k {
            0 => 1.0,
            1 => t_max,
            _ => unit_to(k - 1, 1.0, t_max),
        };
        (poly_g(gamma, t), vec![t])
    });
    Ok(CertReport::new(Claim::PolyG, gamma, samples + 2, worst_of(pts), 1e-12))
}

/// Minimum of the closed-form g''' over samples of [1, t_max].
pub fn check_g_third_nonneg(gamma: f64, samples: usize, t_max: f64, exec: Execution) -> Result<CertReport> {
    check_gamma(gamma)?;
    let pts = map_indexed(samples + 2, exec, |k| {
        let t = match k {
            0 => 1.0,
            1 => t_max,
            _ => unit_to(k - 1, 1.0, t_max),
        };
        (poly_g_third(gamma, t), vec![t])
    });
    Ok(CertReport::new(Claim::PolyGThird, gamma, samples + 2, worst_of(pts), 1e-8))
}

/// Tensor grid for the sign checks: ρ ∈ [0, rho_max_factor·ρ̄] and the invariant
/// running from the band edge outward by `span_factor` band widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_rho: usize,
    pub n_inv: usize,
    pub rho_max_factor: f64,
    pub span_factor: f64,
    /// Points whose value is within this of zero count as equality points.
    pub equality_tol: f64,
    /// Equality points must lie within this distance (in units of ρ̄) of (ρ̄, edge).
    pub locus_radius: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_rho: 200,
            n_inv: 200,
            rho_max_factor: 3.0,
            span_factor: 3.0,
            equality_tol: 1e-10,
            locus_radius: 0.02,
        }
    }
}

/// Shared grid scan. `value(ρ, s)` is the signed quantity that must be
/// nonnegative, with s ≥ 0 the distance of the invariant from the band edge.
fn sign_scan(claim: Claim, params: &GasParams, grid: &GridSpec, exec: Execution, value: impl Fn(f64, f64) -> f64 + Sync + Send) -> CertReport {
    let rb = params.rho_bar();
    let edge = params.band_edge();
    let rho_max = grid.rho_max_factor * rb;
    let span = grid.span_factor * edge;
    let n_r = grid.n_rho.max(2);
    let n_s = grid.n_inv.max(2);
    let mut pts = map_indexed(n_r * n_s, exec, |k| {
        let rho = rho_max * (k / n_s) as f64 / (n_r - 1) as f64;
        let s = span * (k % n_s) as f64 / (n_s - 1) as f64;
        (rho, s, value(rho, s))
    });
    pts.push((rb, 0.0, value(rb, 0.0)));
    let tol = 1e-12;
    let mut report = CertReport::new(claim, params.gamma(), pts.len(), worst_of(pts.iter().map(|&(r, s, v)| (v, vec![r, s])).collect()), tol);
    // Equality away from (ρ̄, edge) counts as a failure, reported by its distance.
    let stray = pts
        .iter()
        .filter(|p| p.2.abs() <= grid.equality_tol)
        .map(|p| (((p.0 - rb) / rb).hypot(p.1 / rb), p.0, p.1))
        .fold((0.0, 0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    if stray.0 > grid.locus_radius {
        report.worst_margin = report.worst_margin.min(-(stray.0 - grid.locus_radius) - tol);
        report.worst_point = vec![stray.1, stray.2];
        report.pass = false;
    }
    report
}

/// g1 ≥ 0 for z ≤ −ρ̄^θ/θ; worst point is (ρ, −ρ̄^θ/θ − z).
pub fn check_g1_sign(params: &GasParams, grid: &GridSpec, exec: Execution) -> CertReport {
    let edge = params.band_edge();
    sign_scan(Claim::G1Sign, params, grid, exec, |rho, s| g1_at(params, rho, -edge - s))
}

/// g2 ≤ 0 for w ≥ ρ̄^θ/θ; worst point is (ρ, w − ρ̄^θ/θ).
pub fn check_g2_sign(params: &GasParams, grid: &GridSpec, exec: Execution) -> CertReport {
    let edge = params.band_edge();
    sign_scan(Claim::G2Sign, params, grid, exec, |rho, s| -g2_at(params, rho, edge + s))
}

pub fn check_source_signs(params: &GasParams, grid: &GridSpec, exec: Execution) -> [CertReport; 2] {
    [check_g1_sign(params, grid, exec), check_g2_sign(params, grid, exec)]
}

/// Relative gap between the completed-square and direct forms of g1 over
/// samples of ρ ∈ (0, 3ρ̄], z ∈ [−bound, bound]. Gaps are measured against
/// max(|g1|, ρ̄^{γ+θ}) so the zero at (ρ̄, −edge) does not divide by zero.
pub fn check_square_identity(params: &GasParams, samples: usize, bound: f64, exec: Execution) -> CertReport {
    let rb = params.rho_bar();
    let scale = rb.powf(params.gamma() + params.theta());
    let edge = params.band_edge();
    let pts = map_indexed(samples + 3, exec, |k| {
        let (rho, z) = match k {
            0 => (rb, -edge),
            1 => (3.0 * rb, -bound),
            2 => (3.0 * rb, bound),
            _ => (3.0 * rb * radical_inverse(k as u64 - 2, 2).max(1e-3), -bound + 2.0 * bound * radical_inverse(k as u64 - 2, 3)),
        };
        let a = g1_at(params, rho, z);
        let b = g1_completed_square(params, rho, z);
        let gap = (a - b).abs() / a.abs().max(b.abs()).max(scale);
        (-gap, vec![rho, z])
    });
    CertReport::new(Claim::SquareIdentity, params.gamma(), samples + 3, worst_of(pts), 1e-10)
}

/// Certified claims, addressable by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Claim {
    PolyF,
    PolyG,
    PolyGThird,
    G1Sign,
    G2Sign,
    SquareIdentity,
}

impl Claim {
    pub const ALL: [Claim; 6] = [Claim::PolyF, Claim::PolyG, Claim::PolyGThird, Claim::G1Sign, Claim::G2Sign, Claim::SquareIdentity];

    pub fn id(self) -> &'static str {
        match self {
            Claim::PolyF => "poly-f",
            Claim::PolyG => "poly-g",
            Claim::PolyGThird => "poly-g-third",
            Claim::G1Sign => "g1-sign",
            Claim::G2Sign => "g2-sign",
            Claim::SquareIdentity => "square-identity",
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Claim {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Claim::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| Error::UnknownClaim(s.to_string()))
    }
}

/// Parse a selection; `all` expands to every claim.
pub fn parse_selection(ids: &[String]) -> Result<Vec<Claim>> {
    if ids.is_empty() || ids.iter().any(|s| s == "all") {
        return Ok(Claim::ALL.to_vec());
    }
    ids.iter().map(|s| s.parse()).collect()
}

/// Parameters for a certification sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub gammas: Vec<f64>,
    pub rho_bar: f64,
    pub samples: usize,
    pub t_max: f64,
    pub grid: GridSpec,
    /// Half-width of the z box for the identity check, in band widths.
    pub identity_box: f64,
    /// Replaces every claim's tolerance when set.
    pub tolerance: Option<f64>,
    pub execution: Execution,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            gammas: vec![1.1, 1.4, 5.0 / 3.0],
            rho_bar: 1.0,
            samples: 10_000,
            t_max: 50.0,
            grid: GridSpec::default(),
            identity_box: 4.0,
            tolerance: None,
            execution: Execution::default(),
        }
    }
}

/// Run the selected claims for every γ in the settings.
pub fn certify(claims: &[Claim], s: &VerifySettings) -> Result<Vec<CertReport>> {
    let mut out = Vec::new();
    for &claim in claims {
        for &gamma in &s.gammas {
            let params = GasParams::new(gamma, s.rho_bar)?;
            let mut r = match claim {
                Claim::PolyF => check_f_nonneg(gamma, s.samples, s.execution)?,
                Claim::PolyG => check_g_nonneg(gamma, s.samples, s.t_max, s.execution)?,
                Claim::PolyGThird => check_g_third_nonneg(gamma, s.samples, s.t_max, s.execution)?,
                Claim::G1Sign => check_g1_sign(&params, &s.grid, s.execution),
                Claim::G2Sign => check_g2_sign(&params, &s.grid, s.execution),
                Claim::SquareIdentity => check_square_identity(&params, s.samples, s.identity_box * params.band_edge(), s.execution),
            };
            if let Some(tol) = s.tolerance {
                r.tolerance = tol;
                r.pass = r.worst_margin >= -tol;
            }
            out.push(r);
        }
    }
    Ok(out)
}

/// Final state of a Lax–Friedrichs reference run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    pub x: Vec<f64>,
    pub cells: Vec<GasState>,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    pub mass_initial: f64,
    pub mass_final: f64,
}

/// Two-point Lax–Friedrichs on the collocated grid of width Δx, with the time
/// step, step count and (extended) domain the scheme would use for `cfg`.
pub fn lax_friedrichs_run(data: &InitialData, cfg: &MeshConfig) -> Result<ReferenceRun> {
    let mut c = cfg.clone();
    c.variant = Variant::StandardGodunov;
    let (scheme, state) = Scheme::new(c, data)?;
    let gas = *scheme.gas();
    let dx = cfg.dx;
    let dt = scheme.dt;
    let length = scheme.x_max - scheme.x_min;
    let bg = gas.background();
    let flux_bg = gas.flux(&bg);
    let limit = dx / dt;
    let lam = 0.5 * dt / dx;
    let mut cells = state.cells;
    let n = cells.len();
    let mass_initial = totals(&cells, dx, length, &gas).mass;
    for step in 0..scheme.n_steps {
        if let Some((i, s)) = cells
            .iter()
            .map(|u| gas.max_speed(u))
            .enumerate()
            .find(|(_, s)| !(*s <= limit * (1.0 + 1e-12)))
        {
            return Err(Error::Cfl {
                step,
                x: scheme.center(0, i),
                speed: s,
                limit,
            });
        }
        let flux: Vec<[f64; 2]> = map_indexed(n, cfg.execution, |i| gas.flux(&cells[i]));
        let at = |k: isize| -> (GasState, [f64; 2]) {
            if k < 0 || k as usize >= n {
                (bg, flux_bg)
            } else {
                (cells[k as usize], flux[k as usize])
            }
        };
        cells = map_indexed(n, cfg.execution, |i| {
            let (ul, fl) = at(i as isize - 1);
            let (ur, fr) = at(i as isize + 1);
            GasState {
                rho: 0.5 * (ul.rho + ur.rho) - lam * (fr[0] - fl[0]),
                m: 0.5 * (ul.m + ur.m) - lam * (fr[1] - fl[1]),
            }
        });
        if let Some(u) = cells.iter().find(|u| !(u.rho >= 0.0) || !u.m.is_finite()) {
            return Err(Error::NegativeDensity(u.rho));
        }
    }
    let mass_final = totals(&cells, dx, length, &gas).mass;
    Ok(ReferenceRun {
        x: scheme.centers(0),
        cells,
        t: scheme.n_steps as f64 * dt,
        dt,
        steps: scheme.n_steps,
        mass_initial,
        mass_final,
    })
}

/// Σ width·(|Δρ| + |Δm|) between two states on the same grid.
pub fn l1_distance(a: &[GasState], b: &[GasState], width: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidState(format!("grids differ: {} vs {} cells", a.len(), b.len())));
    }
    Ok(width * a.iter().zip(b).map(|(p, q)| (p.rho - q.rho).abs() + (p.m - q.m).abs()).sum::<f64>())
}
