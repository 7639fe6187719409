//! Run configuration: a TOML file with `[gas]`, `[mesh]`, `[scheme]`,
//! `[initial]`, `[output]` and `[verify]` tables, plus `section.key=value`
//! overrides applied after parsing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use gasdecay::numerics::Execution;
use gasdecay::scheme::{InitialData, MeshConfig, Variant};
use gasdecay::verify::{GridSpec, VerifySettings};
use gasdecay::{GasParams, GasState};

use crate::CliError;

/// Parsed table plus the set of keys read so far, so leftovers can be
/// reported as unknown.
pub struct ConfigSource {
    table: Table,
    base_dir: PathBuf,
    used: BTreeSet<String>,
    /// Raw bytes that determine the run (file contents and overrides).
    pub fingerprint: Vec<u8>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// TOML scalar or array if it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

impl ConfigSource {
    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let table: Table = text.parse().map_err(|e| usage(format!("config: {e}")))?;
        Ok(ConfigSource {
            table,
            base_dir: base_dir.to_path_buf(),
            used: BTreeSet::new(),
            fingerprint: text.as_bytes().to_vec(),
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                Self::from_str(&text, &dir)
            }
            None => Self::from_str("", Path::new(".")),
        }
    }

    /// Apply one `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| usage(format!("override `{assignment}` is not of the form section.key=value")))?;
        let (section, name) = key
            .trim()
            .split_once('.')
            .ok_or_else(|| usage(format!("override key `{key}` needs a section, e.g. gas.gamma")))?;
        let entry = self
            .table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        let Value::Table(t) = entry else {
            return Err(usage(format!("`{section}` is not a table")));
        };
        t.insert(name.to_string(), parse_value(raw.trim()));
        self.fingerprint.extend_from_slice(b"\n--set ");
        self.fingerprint.extend_from_slice(assignment.as_bytes());
        Ok(())
    }

    fn lookup(&mut self, key: &str) -> Result<Option<Value>, CliError> {
        let (section, name) = key.split_once('.').expect("keys are section.name");
        self.used.insert(key.to_string());
        match self.table.get(section) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(t.get(name).cloned()),
            Some(_) => Err(usage(format!("`{section}` must be a table"))),
        }
    }

    pub fn f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.lookup(key)? {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(x)),
            Some(Value::Integer(i)) => Ok(Some(i as f64)),
            Some(v) => Err(usage(format!("`{key}` must be a number, got {v}"))),
        }
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn require_f64(&mut self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?.ok_or_else(|| usage(format!("missing required key `{key}`")))
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.lookup(key)? {
            None => Ok(default),
            Some(Value::Integer(i)) if i >= 0 => Ok(i as usize),
            Some(v) => Err(usage(format!("`{key}` must be a nonnegative integer, got {v}"))),
        }
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.lookup(key)? {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(b),
            Some(v) => Err(usage(format!("`{key}` must be true or false, got {v}"))),
        }
    }

    pub fn str(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.lookup(key)? {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(usage(format!("`{key}` must be a string, got {v}"))),
        }
    }

    pub fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let bad = |v: &Value| usage(format!("`{key}` must be a number or a list of numbers, got {v}"));
        match self.lookup(key)? {
            None => Ok(None),
            Some(Value::Float(x)) => Ok(Some(vec![x])),
            Some(Value::Integer(i)) => Ok(Some(vec![i as f64])),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Float(x) => Ok(*x),
                    Value::Integer(i) => Ok(*i as f64),
                    other => Err(bad(other)),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => Err(bad(&v)),
        }
    }

    /// Error on any key that was never read, restricted to `sections`.
    pub fn reject_unknown(&self, sections: &[&str]) -> Result<(), CliError> {
        for (section, v) in &self.table {
            if !sections.contains(&section.as_str()) {
                continue;
            }
            if let Value::Table(t) = v {
                for k in t.keys() {
                    let full = format!("{section}.{k}");
                    if !self.used.contains(&full) {
                        return Err(usage(format!("unknown config key `{full}`")));
                    }
                }
            }
        }
        for section in self.table.keys() {
            if !["gas", "mesh", "scheme", "initial", "output", "verify"].contains(&section.as_str()) {
                return Err(usage(format!("unknown config section `{section}`")));
            }
        }
        Ok(())
    }

    pub fn resolve_path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Echo of the resolved initial data choice.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum Preset {
    Constant,
    SquarePulse { left: f64, right: f64, rho: f64, v: f64 },
    DecayPulse { left: f64, right: f64, rho: f64, v: f64 },
    SmoothPulse { center: f64, half_width: f64, amplitude: f64, resolution: usize },
    Riemann { rho_l: f64, v_l: f64, rho_r: f64, v_r: f64, half_width: f64 },
    Random { seed: u64, pieces: usize, left: f64, right: f64, rho_min: f64, rho_max: f64, v_max: f64 },
    Samples { file: PathBuf, rows: usize },
}

/// Everything `run` needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub mesh: MeshConfig,
    pub preset: Preset,
    pub data: InitialData,
    pub out_dir: PathBuf,
    pub fingerprint: Vec<u8>,
}

/// Resolved configuration as echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho<'a> {
    pub mesh: &'a MeshConfig,
    pub initial: &'a Preset,
    pub out_dir: &'a Path,
}

impl RunSettings {
    pub fn echo(&self) -> ConfigEcho<'_> {
        ConfigEcho {
            mesh: &self.mesh,
            initial: &self.preset,
            out_dir: &self.out_dir,
        }
    }
}

fn core_err(key: &str) -> impl Fn(gasdecay::Error) -> CliError + '_ {
    move |e| usage(format!("`{key}`: {e}"))
}

pub fn gas_params(src: &mut ConfigSource) -> Result<GasParams, CliError> {
    let gamma = src.require_f64("gas.gamma")?;
    let rho_bar = src.f64_or("gas.rho_bar", 1.0)?;
    GasParams::new(gamma, rho_bar).map_err(core_err("gas"))
}

fn variant(src: &mut ConfigSource) -> Result<Variant, CliError> {
    match src.str("scheme.variant")?.as_deref() {
        None | Some("modified") => Ok(Variant::Modified),
        Some("godunov") | Some("standard-godunov") => Ok(Variant::StandardGodunov),
        Some(other) => Err(usage(format!("`scheme.variant` must be modified or godunov, got `{other}`"))),
    }
}

fn execution(src: &mut ConfigSource) -> Result<Execution, CliError> {
    match src.str("scheme.execution")?.as_deref() {
        None => Ok(Execution::default()),
        Some("parallel") => Ok(Execution::Parallel),
        Some("sequential") => Ok(Execution::Sequential),
        Some(other) => Err(usage(format!("`scheme.execution` must be parallel or sequential, got `{other}`"))),
    }
}

fn read_samples(path: &Path) -> Result<(Vec<u8>, Vec<(f64, f64, f64)>), CliError> {
    let bytes = std::fs::read(path).map_err(|e| usage(format!("cannot read samples {}: {e}", path.display())))?;
    let text = String::from_utf8_lossy(&bytes);
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let nums: Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
        match nums {
            Ok(v) if v.len() == 3 => rows.push((v[0], v[1], v[2])),
            // a header line is allowed before the first data row
            Err(_) if rows.is_empty() => continue,
            _ => {
                return Err(usage(format!(
                    "{}:{}: expected three numbers x, rho, v",
                    path.display(),
                    ln + 1
                )))
            }
        }
    }
    Ok((bytes, rows))
}

fn initial(src: &mut ConfigSource, gas: &GasParams) -> Result<(Preset, InitialData, Vec<u8>), CliError> {
    let name = src.str("initial.preset")?.unwrap_or_else(|| "decay-pulse".to_string());
    let rb = gas.rho_bar();
    let mut extra = Vec::new();
    let preset = match name.as_str() {
        "constant" => Preset::Constant,
        "square-pulse" | "decay-pulse" => {
            let left = src.f64_or("initial.left", -1.0)?;
            let right = src.f64_or("initial.right", 1.0)?;
            let rho = src.f64_or("initial.rho", 2.0 * rb)?;
            let v = src.f64_or("initial.v", 0.0)?;
            if name == "square-pulse" {
                Preset::SquarePulse { left, right, rho, v }
            } else {
                Preset::DecayPulse { left, right, rho, v }
            }
        }
        "smooth-pulse" => Preset::SmoothPulse {
            center: src.f64_or("initial.center", 0.0)?,
            half_width: src.f64_or("initial.half_width", 1.0)?,
            amplitude: src.f64_or("initial.amplitude", 0.5 * rb)?,
            resolution: src.usize_or("initial.resolution", 400)?,
        },
        "riemann" => Preset::Riemann {
            rho_l: src.f64_or("initial.rho_l", 2.0 * rb)?,
            v_l: src.f64_or("initial.v_l", 0.0)?,
            rho_r: src.f64_or("initial.rho_r", rb)?,
            v_r: src.f64_or("initial.v_r", 0.0)?,
            half_width: src.f64_or("initial.half_width", 1.0)?,
        },
        "random" => Preset::Random {
            seed: src.usize_or("initial.seed", 1)? as u64,
            pieces: src.usize_or("initial.pieces", 8)?,
            left: src.f64_or("initial.left", -1.0)?,
            right: src.f64_or("initial.right", 1.0)?,
            rho_min: src.f64_or("initial.rho_min", 0.5 * rb)?,
            rho_max: src.f64_or("initial.rho_max", 2.0 * rb)?,
            v_max: src.f64_or("initial.v_max", 0.5)?,
        },
        "samples" => {
            let file = src
                .str("initial.file")?
                .ok_or_else(|| usage("missing required key `initial.file` for preset `samples`"))?;
            let path = src.resolve_path(&file);
            let (bytes, rows) = read_samples(&path)?;
            extra = bytes;
            Preset::Samples { file: path, rows: rows.len() }
        }
        other => {
            return Err(usage(format!(
                "`initial.preset` must be one of constant, square-pulse, decay-pulse, smooth-pulse, riemann, random, samples; got `{other}`"
            )))
        }
    };
    let data = build_data(&preset, gas).map_err(core_err("initial"))?;
    Ok((preset, data, extra))
}

fn build_data(preset: &Preset, gas: &GasParams) -> gasdecay::Result<InitialData> {
    match *preset {
        Preset::Constant => Ok(InitialData::constant(gas)),
        Preset::SquarePulse { left, right, rho, v } | Preset::DecayPulse { left, right, rho, v } => InitialData::square_pulse(gas, left, right, rho, v),
        Preset::SmoothPulse {
            center,
            half_width,
            amplitude,
            resolution,
        } => InitialData::smooth_pulse(gas, center, half_width, amplitude, resolution),
        Preset::Riemann {
            rho_l,
            v_l,
            rho_r,
            v_r,
            half_width,
        } => InitialData::riemann(gas, GasState::from_rho_v(rho_l, v_l), GasState::from_rho_v(rho_r, v_r), half_width),
        Preset::Random {
            seed,
            pieces,
            left,
            right,
            rho_min,
            rho_max,
            v_max,
        } => InitialData::random_bounded(gas, seed, pieces, left, right, (rho_min, rho_max), v_max),
        Preset::Samples { ref file, .. } => {
            let (_, rows) = read_samples(file).map_err(|e| gasdecay::Error::InitialData(e.to_string()))?;
            InitialData::from_samples(gas, &rows)
        }
    }
}

/// Resolve a run from the config, with `snapshots` and `out` taking
/// precedence over the file.
pub fn run_settings(mut src: ConfigSource, snapshots: Option<usize>, out: Option<PathBuf>) -> Result<RunSettings, CliError> {
    let gas = gas_params(&mut src)?;
    let dx = src.f64_or("mesh.dx", 0.05)?;
    let x_min = src.f64_or("mesh.x_min", -20.0)?;
    let x_max = src.f64_or("mesh.x_max", 20.0)?;
    let t_final = src.f64_or("mesh.t_final", 5.0)?;
    let mut mesh = MeshConfig::new(gas, dx, x_min, x_max, t_final);
    mesh.extend_domain = src.bool_or("mesh.extend_domain", true)?;
    mesh.variant = variant(&mut src)?;
    mesh.execution = execution(&mut src)?;
    mesh.alpha = src.f64_or("scheme.alpha", mesh.alpha)?;
    mesh.beta = src.f64_or("scheme.beta", mesh.beta)?;
    mesh.mu = src.f64_or("scheme.mu", mesh.mu)?;
    mesh.epsilon = src.f64_or("scheme.epsilon", mesh.epsilon)?;
    mesh.delta = src.f64("scheme.delta")?;
    let every = src.usize_or("output.snapshot_every", 0)?;
    mesh.snapshot_every = snapshots.unwrap_or(every);
    let dir = src.str("output.dir")?;
    let out_dir = out.unwrap_or_else(|| dir.map(|d| src.resolve_path(&d)).unwrap_or_else(|| PathBuf::from("out")));
    let (preset, data, extra) = initial(&mut src, &gas)?;
    mesh.validate().map_err(core_err("mesh"))?;
    src.reject_unknown(&["gas", "mesh", "scheme", "initial", "output"])?;
    let mut fingerprint = src.fingerprint.clone();
    fingerprint.extend_from_slice(&extra);
    Ok(RunSettings {
        mesh,
        preset,
        data,
        out_dir,
        fingerprint,
    })
}

/// Certification settings from the `[verify]` table.
pub fn verify_settings(mut src: ConfigSource) -> Result<VerifySettings, CliError> {
    let d = VerifySettings::default();
    let grid_n = src.usize_or("verify.grid", d.grid.n_rho)?;
    let s = VerifySettings {
        gammas: src.f64_list("verify.gammas")?.unwrap_or(d.gammas),
        rho_bar: src.f64_or("verify.rho_bar", d.rho_bar)?,
        samples: src.usize_or("verify.samples", d.samples)?,
        t_max: src.f64_or("verify.t_max", d.t_max)?,
        grid: GridSpec {
            n_rho: grid_n,
            n_inv: grid_n,
            ..d.grid
        },
        identity_box: src.f64_or("verify.identity_box", d.identity_box)?,
        tolerance: src.f64("verify.tolerance")?,
        execution: d.execution,
    };
    src.reject_unknown(&["verify"])?;
    Ok(s)
}
