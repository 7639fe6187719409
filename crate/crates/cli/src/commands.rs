use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use gasdecay::riemann::{solve_riemann, RiemannSolution, Wave};
use gasdecay::scheme::{run, Scheme};
use gasdecay::verify::{certify, parse_selection, CertReport};
use gasdecay::{GasParams, GasState};

use crate::config::{run_settings, verify_settings, ConfigSource};
use crate::output::{fmt_f64, manifest_files, sha256_hex, write_diagnostics, write_json, RunManifest, RunSummary, RunWriter, Timings};
use crate::CliError;

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

/// Outcome of a finished run.
pub struct RunOutcome {
    pub summary: RunSummary,
    pub out_dir: PathBuf,
}

pub fn cmd_run(config: Option<&Path>, overrides: &[String], out: Option<PathBuf>, snapshots: Option<usize>) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let mut src = ConfigSource::load(config)?;
    for o in overrides {
        src.set(o)?;
    }
    let settings = run_settings(src, snapshots, out)?;
    let dir = settings.out_dir.clone();
    let (scheme, state) = Scheme::new(settings.mesh.clone(), &settings.data).map_err(|e| CliError::Usage(e.to_string()))?;
    create_dir(&dir)?;
    let l0 = state.l;
    let mut writer = RunWriter::new(&dir, settings.mesh.snapshot_every);
    run(&scheme, state, &mut writer)?;

    let summary = RunSummary::new(&scheme, l0, &writer);
    let diag = dir.join("diagnostics.csv");
    write_diagnostics(&diag, &writer.diagnostics)?;
    let sum_path = dir.join("summary.json");
    write_json(&sum_path, &summary)?;
    let mut files = writer.files.clone();
    files.push(diag);
    files.push(sum_path);
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: settings.echo(),
        input_sha256: sha256_hex(&settings.fingerprint),
        outputs: manifest_files(&dir, &files)?,
        timings: Timings::new(start.elapsed(), &writer.step_times),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { summary, out_dir: dir })
}

/// Parse `rho,v`.
pub fn parse_state(s: &str) -> Result<GasState, CliError> {
    let bad = || CliError::Usage(format!("state `{s}` must be `rho,v`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let rho: f64 = a.trim().parse().map_err(|_| bad())?;
    let v: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(rho >= 0.0 && rho.is_finite() && v.is_finite()) {
        return Err(CliError::Usage(format!("state `{s}`: density must be finite and nonnegative")));
    }
    Ok(GasState::from_rho_v(rho, v))
}

#[derive(Debug, Clone, Serialize)]
pub struct RiemannReport {
    pub pattern: String,
    pub case: Option<u8>,
    pub rho_m: f64,
    pub v_m: f64,
    pub waves: [Wave; 2],
    pub profile: Option<String>,
}

pub fn pattern_name(rs: &RiemannSolution) -> String {
    if rs.is_degenerate() {
        "degenerate".into()
    } else if rs.pattern.is_vacuum() {
        "vacuum".into()
    } else {
        let kind = |w: &Wave| match w {
            Wave::Shock { .. } => "shock",
            Wave::Rarefaction { .. } => "rarefaction",
        };
        format!("{}-{}", kind(&rs.waves[0]), kind(&rs.waves[1]))
    }
}

pub fn cmd_riemann(left: &str, right: &str, gamma: f64, rho_bar: f64, samples: usize, out: Option<&Path>) -> Result<RiemannReport, CliError> {
    let gas = GasParams::new(gamma, rho_bar).map_err(|e| CliError::Usage(e.to_string()))?;
    let ul = parse_state(left)?;
    let ur = parse_state(right)?;
    let rs = solve_riemann(&ul, &ur, &gas)?;
    let mut profile = None;
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join("riemann_profile.csv");
        let reach = 1.1 * rs.max_speed().max(gas.max_speed(&ul)).max(gas.max_speed(&ur)).max(1e-3);
        let n = samples.max(2);
        let mut text = String::from("xi,rho,m,v,z,w\n");
        for k in 0..n {
            let xi = -reach + 2.0 * reach * k as f64 / (n - 1) as f64;
            let u = rs.sample(xi);
            let inv = gas.to_invariants(&u);
            let row: Vec<String> = [xi, u.rho, u.m, u.v(), inv.z, inv.w].iter().map(|v| fmt_f64(*v)).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        profile = Some(path.display().to_string());
    }
    Ok(RiemannReport {
        pattern: pattern_name(&rs),
        case: rs.pattern.case(),
        rho_m: rs.middle.rho,
        v_m: rs.middle.v(),
        waves: rs.waves,
        profile,
    })
}

/// Run the selected claims and print one JSON line per report.
pub fn cmd_verify(selection: &[String], config: Option<&Path>, overrides: &[String], sink: &mut dyn Write) -> Result<Vec<CertReport>, CliError> {
    let claims = parse_selection(selection).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut src = ConfigSource::load(config)?;
    for o in overrides {
        src.set(o)?;
    }
    let settings = verify_settings(src)?;
    let reports = certify(&claims, &settings).map_err(|e| CliError::Usage(e.to_string()))?;
    for r in &reports {
        let line = serde_json::to_string(r).map_err(|e| CliError::Runtime(e.to_string()))?;
        // a closed pipe should not turn a verdict into a runtime error
        let _ = writeln!(sink, "{line}");
    }
    Ok(reports)
}
