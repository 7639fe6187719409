//! CSV and JSON emission for runs: streamed snapshots, the diagnostics table,
//! the run summary and the manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};

use gasdecay::diagnostics::{detect_t0, envelopes, transforms, DiagnosticsRecord, Envelopes};
use gasdecay::scheme::{Observer, Scheme, SchemeState, StepRecord};
use gasdecay::{Error, GasParams, GasState};

pub const SNAPSHOT_HEADER: &str = "x,rho,m,v,z,w,ztilde,wtilde";
pub const DIAGNOSTICS_HEADER: &str = "t,min_z,max_w,min_ztilde,max_wtilde,mass,eta,J,t0flag";

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Output(format!("{}: {e}", path.display()))
}

pub fn write_snapshot(path: &Path, x: &[f64], cells: &[GasState], prefix: &[f64], gas: &GasParams) -> gasdecay::Result<()> {
    let f = File::create(path).map_err(io(path))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{SNAPSHOT_HEADER}").map_err(io(path))?;
    let tr = transforms(cells, prefix, gas);
    for (k, u) in cells.iter().enumerate() {
        let inv = gas.to_invariants(u);
        // vacuum cells carry z = w = 0, so the shifted values are −I
        let (zt, wt) = tr[k].unwrap_or((-prefix[k], -prefix[k]));
        let row = [x[k], u.rho, u.m, u.v(), inv.z, inv.w, zt, wt];
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(",")).map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

/// One row per step; `t0flag` is 1 when the band holds at that time (the
/// persistent entry time is in the summary).
pub fn write_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> gasdecay::Result<()> {
    let f = File::create(path).map_err(io(path))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{DIAGNOSTICS_HEADER}").map_err(io(path))?;
    for r in records {
        let flag = r.in_band as u8;
        let row = [r.t, r.min_z, r.max_w, r.min_ztilde, r.max_wtilde, r.total_mass, r.total_eta, r.total_j];
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{},{flag}", line.join(",")).map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> gasdecay::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Output(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(io(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Observer that writes snapshots as they become due and keeps only the
/// per-step scalars in memory.
pub struct RunWriter {
    dir: PathBuf,
    every: usize,
    pub files: Vec<PathBuf>,
    pub records: Vec<StepRecord>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub initial: Option<Envelopes>,
    pub final_envelopes: Option<Envelopes>,
    pub min_density: f64,
    pub non_finite: bool,
    pub step_times: Vec<Duration>,
    last: Option<Instant>,
}

impl RunWriter {
    pub fn new(dir: &Path, every: usize) -> Self {
        RunWriter {
            dir: dir.to_path_buf(),
            every,
            files: Vec::new(),
            records: Vec::new(),
            diagnostics: Vec::new(),
            initial: None,
            final_envelopes: None,
            min_density: f64::INFINITY,
            non_finite: false,
            step_times: Vec::new(),
            last: None,
        }
    }
}

impl Observer for RunWriter {
    fn observe(&mut self, scheme: &Scheme, state: &SchemeState, record: Option<&StepRecord>) -> gasdecay::Result<()> {
        let now = Instant::now();
        if let Some(prev) = self.last {
            self.step_times.push(now - prev);
        }
        if let Some(r) = record {
            self.records.push(*r);
        }
        let gas = scheme.gas();
        for u in &state.cells {
            self.min_density = self.min_density.min(u.rho);
            self.non_finite |= !(u.rho.is_finite() && u.m.is_finite());
        }
        self.diagnostics.push(DiagnosticsRecord::of(scheme, state));
        let env = envelopes(&state.cells, &state.prefix, gas);
        if state.n == 0 {
            self.initial = Some(env);
        }
        let last = state.n == scheme.n_steps;
        if last {
            self.final_envelopes = Some(env);
        }
        if state.n == 0 || last || (self.every > 0 && state.n % self.every == 0) {
            let path = self.dir.join(format!("snapshot_{:06}.csv", state.n));
            write_snapshot(&path, &scheme.centers(state.n), &state.cells, &state.prefix, gas)?;
            self.files.push(path);
        }
        self.last = Some(Instant::now());
        Ok(())
    }
}

/// Deterministic run summary (no timings).
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub variant: String,
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub e0: f64,
    pub m0: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub t0: Option<f64>,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub mass_drift: f64,
    pub min_density: f64,
    pub non_finite: bool,
    pub initial_envelopes: Option<Envelopes>,
    pub final_envelopes: Option<Envelopes>,
    pub max_rh_mid: f64,
    pub max_two_pass_gap: f64,
    pub cut_total: f64,
    pub near_vacuum_cells: usize,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
}

impl RunSummary {
    pub fn new(scheme: &Scheme, state0_l: f64, w: &RunWriter) -> Self {
        let cfg = scheme.config();
        let t0 = detect_t0(&w.diagnostics, cfg.epsilon, scheme.e0, scheme.gas());
        let mass_initial = w.diagnostics.first().map_or(0.0, |d| d.total_mass);
        let mass_final = w.diagnostics.last().map_or(0.0, |d| d.total_mass);
        let mut l = vec![state0_l];
        let mut m = vec![scheme.m0];
        l.extend(w.records.iter().map(|r| r.l));
        m.extend(w.records.iter().map(|r| r.m));
        RunSummary {
            variant: format!("{:?}", cfg.variant),
            steps: scheme.n_steps,
            dt: scheme.dt,
            t_final: w.diagnostics.last().map_or(0.0, |d| d.t),
            x_min: scheme.x_min,
            x_max: scheme.x_max,
            e0: scheme.e0,
            m0: scheme.m0,
            delta: scheme.delta,
            epsilon: cfg.epsilon,
            t0,
            mass_initial,
            mass_final,
            mass_drift: (mass_final - mass_initial).abs(),
            min_density: w.min_density,
            non_finite: w.non_finite,
            initial_envelopes: w.initial,
            final_envelopes: w.final_envelopes,
            max_rh_mid: w.records.iter().map(|r| r.max_rh_mid).fold(0.0, f64::max),
            max_two_pass_gap: w.records.iter().map(|r| r.two_pass_gap).fold(0.0, f64::max),
            cut_total: w.records.iter().map(|r| r.cut_total).sum(),
            near_vacuum_cells: w.records.iter().map(|r| r.near_vacuum_cells).sum(),
            l,
            m,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub wall_seconds: f64,
    pub mean_step_seconds: f64,
    pub max_step_seconds: f64,
}

impl Timings {
    pub fn new(wall: Duration, steps: &[Duration]) -> Self {
        let secs: Vec<f64> = steps.iter().map(Duration::as_secs_f64).collect();
        Timings {
            wall_seconds: wall.as_secs_f64(),
            mean_step_seconds: if secs.is_empty() { 0.0 } else { secs.iter().sum::<f64>() / secs.len() as f64 },
            max_step_seconds: secs.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub version: String,
    pub config: C,
    pub input_sha256: String,
    pub outputs: Vec<ManifestFile>,
    pub timings: Timings,
}

/// Describe the files relative to `dir`, hashing their contents.
pub fn manifest_files(dir: &Path, files: &[PathBuf]) -> gasdecay::Result<Vec<ManifestFile>> {
    files
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(io(p))?;
            Ok(ManifestFile {
                path: p.strip_prefix(dir).unwrap_or(p).display().to_string(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect()
}
