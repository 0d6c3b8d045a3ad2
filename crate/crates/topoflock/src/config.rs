//! Experiment configuration: a flat key-value format with dotted keys,
//! validation that reports every violation at once, presets, and sweep
//! expansion.

use crate::agents::WeightConvention;
use crate::error::ConfigError;
use crate::fields::{InitialData, DEFAULT_TORUS_LENGTH};
use crate::fourier::DerivativeMethod;
use crate::kernels::{CutoffShape, KernelFamily, KernelSpec};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Run mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Hydro1d,
    Agents,
    SpectralOnly,
    Sweep,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Hydro1d => "hydro1d",
            Mode::Agents => "agents",
            Mode::SpectralOnly => "spectral-only",
            Mode::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hydro1d" => Some(Mode::Hydro1d),
            "agents" => Some(Mode::Agents),
            "spectral-only" => Some(Mode::SpectralOnly),
            "sweep" => Some(Mode::Sweep),
            _ => None,
        }
    }
}

/// Full description of one run (or of a sweep parent).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub grid_n: usize,
    pub length: f64,
    pub kernel_family: KernelFamily,
    pub alpha: f64,
    pub tau: f64,
    pub r0: f64,
    pub cutoff: CutoffShape,
    pub init_kind: String,
    pub init_rho_bar: f64,
    pub init_u_bar: f64,
    pub init_a: f64,
    pub init_k: u32,
    pub init_b: f64,
    pub init_m: u32,
    pub init_phi0: f64,
    pub init_kappa: f64,
    pub init_c1: f64,
    pub init_c2: f64,
    /// Replace the velocity profile by the e0 = 0 construction.
    pub init_e0: bool,
    pub t_final: f64,
    pub cfl: f64,
    pub output_every: f64,
    pub snapshot_times: Vec<f64>,
    pub derivative: DerivativeMethod,
    /// Taylor-correction radius; None means the default max(4 dx, r0/8).
    pub operator_r: Option<f64>,
    pub lambda2_enabled: bool,
    pub agents_n: usize,
    pub agents_dim: usize,
    pub agents_convention: WeightConvention,
    pub agents_r_floor: f64,
    pub agents_dt: f64,
    pub agents_init: String,
    pub spectral_input: Option<String>,
    pub seed: u64,
    pub out_dir: String,
    pub strict: bool,
    pub dump_operators: bool,
    /// Sweep axes: key -> list of values, expanded cartesian-style.
    pub sweep: BTreeMap<String, Vec<String>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Hydro1d,
            grid_n: 256,
            length: DEFAULT_TORUS_LENGTH,
            kernel_family: KernelFamily::Topological,
            alpha: 1.2,
            tau: 1.0,
            r0: std::f64::consts::FRAC_PI_2,
            cutoff: CutoffShape::SmoothCos2,
            init_kind: "perturbed-sine".to_string(),
            init_rho_bar: 1.0,
            init_u_bar: 0.0,
            init_a: 0.3,
            init_k: 1,
            init_b: 0.5,
            init_m: 1,
            init_phi0: 0.0,
            init_kappa: 8.0,
            init_c1: std::f64::consts::PI / 2.0,
            init_c2: 3.0 * std::f64::consts::PI / 2.0,
            init_e0: false,
            t_final: 10.0,
            cfl: 0.4,
            output_every: 0.1,
            snapshot_times: Vec::new(),
            derivative: DerivativeMethod::Spectral,
            operator_r: None,
            lambda2_enabled: true,
            agents_n: 64,
            agents_dim: 1,
            agents_convention: WeightConvention::MeanField,
            agents_r_floor: 1e-6,
            agents_dt: 0.02,
            agents_init: "random".to_string(),
            spectral_input: None,
            seed: 42,
            out_dir: "runs/out".to_string(),
            strict: false,
            dump_operators: false,
            sweep: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    /// Validated kernel spec for this config.
    pub fn kernel_spec(&self) -> Result<KernelSpec, ConfigError> {
        KernelSpec::new(
            self.kernel_family,
            self.alpha,
            self.tau,
            self.r0,
            self.cutoff,
            self.length,
        )
        .map_err(|e| ConfigError(vec![e.to_string()]))
    }

    /// The initial-data family selected by the init.* keys.
    pub fn initial_data(&self) -> InitialData {
        match self.init_kind.as_str() {
            "uniform" => InitialData::Uniform {
                rho_bar: self.init_rho_bar,
                u_bar: self.init_u_bar,
            },
            "two-bump" => InitialData::TwoBump {
                rho_bar: self.init_rho_bar,
                a: self.init_a,
                kappa: self.init_kappa,
                c1: self.init_c1,
                c2: self.init_c2,
                b: self.init_b,
                m: self.init_m,
                phi0: self.init_phi0,
            },
            _ => InitialData::PerturbedSine {
                rho_bar: self.init_rho_bar,
                a: self.init_a,
                k: self.init_k,
                b: self.init_b,
                m: self.init_m,
                phi0: self.init_phi0,
            },
        }
    }

    /// Serialize to the same flat key = value schema the parser reads.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mode", self.mode.name().into());
        kv("grid.n", self.grid_n.to_string());
        kv("grid.length", fmt_f64(self.length));
        kv("kernel.family", self.kernel_family.name().into());
        kv("kernel.alpha", fmt_f64(self.alpha));
        kv("kernel.tau", fmt_f64(self.tau));
        kv("kernel.r0", fmt_f64(self.r0));
        kv("kernel.cutoff", self.cutoff.name().into());
        kv("init.kind", self.init_kind.clone());
        kv("init.rho_bar", fmt_f64(self.init_rho_bar));
        kv("init.u_bar", fmt_f64(self.init_u_bar));
        kv("init.a", fmt_f64(self.init_a));
        kv("init.k", self.init_k.to_string());
        kv("init.b", fmt_f64(self.init_b));
        kv("init.m", self.init_m.to_string());
        kv("init.phi0", fmt_f64(self.init_phi0));
        kv("init.kappa", fmt_f64(self.init_kappa));
        kv("init.c1", fmt_f64(self.init_c1));
        kv("init.c2", fmt_f64(self.init_c2));
        kv("init.e0", self.init_e0.to_string());
        kv("time.t_final", fmt_f64(self.t_final));
        kv("time.cfl", fmt_f64(self.cfl));
        kv("output.every", fmt_f64(self.output_every));
        if !self.snapshot_times.is_empty() {
            kv(
                "snapshot.times",
                self.snapshot_times
                    .iter()
                    .map(|v| fmt_f64(*v))
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        kv("derivative.method", self.derivative.name().into());
        if let Some(r) = self.operator_r {
            kv("operator.r", fmt_f64(r));
        }
        kv("diagnostics.lambda2", self.lambda2_enabled.to_string());
        kv("agents.n", self.agents_n.to_string());
        kv("agents.dim", self.agents_dim.to_string());
        kv("agents.convention", self.agents_convention.name().into());
        kv("agents.r_floor", fmt_f64(self.agents_r_floor));
        kv("agents.dt", fmt_f64(self.agents_dt));
        kv("agents.init", self.agents_init.clone());
        if let Some(p) = &self.spectral_input {
            kv("spectral.input", p.clone());
        }
        kv("seed", self.seed.to_string());
        kv("out", self.out_dir.clone());
        for (key, vals) in &self.sweep {
            kv(&format!("sweep.{key}"), vals.join(","));
        }
        s
    }

    /// Stable hash of the canonical serialization (FNV-1a).
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }

    /// Expand sweep axes into child configs (cartesian product, axis order
    /// alphabetical, value order as written).
    pub fn expand_sweep(&self) -> Result<Vec<(String, ExperimentConfig)>, ConfigError> {
        if self.sweep.is_empty() {
            return Err(ConfigError(vec![
                "mode = sweep requires at least one sweep.<key> axis".into(),
            ]));
        }
        let mut children: Vec<(String, BTreeMap<String, String>)> =
            vec![(String::new(), BTreeMap::new())];
        for (key, vals) in &self.sweep {
            let mut next = Vec::new();
            for (label, assignment) in &children {
                for v in vals {
                    let mut a = assignment.clone();
                    a.insert(key.clone(), v.clone());
                    let tag = format!("{}={}", key.replace('.', "_"), sanitize(v));
                    let label = if label.is_empty() {
                        tag
                    } else {
                        format!("{label}__{tag}")
                    };
                    next.push((label, a));
                }
            }
            children = next;
        }
        let mut out = Vec::new();
        for (label, assignment) in children {
            let mut base = self.clone();
            base.mode = Mode::Hydro1d;
            base.sweep.clear();
            let mut pairs: Vec<(String, String)> = assignment.into_iter().collect();
            // Re-apply the base mode if the sweep overrides it.
            pairs.sort();
            let mut text = base.to_text();
            for (k, v) in &pairs {
                text.push_str(&format!("{k} = {v}\n"));
            }
            let child = parse_config_text(&text)?;
            out.push((label, child));
        }
        Ok(out)
    }
}

fn sanitize(v: &str) -> String {
    v.chars()
        .map(|c| if c.is_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips.
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("nan") {
        s
    } else {
        format!("{s}.0")
    }
}

/// Parse a config file. Collects every violation rather than stopping at
/// the first.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(vec![format!("cannot read {}: {e}", path.display())]))?;
    parse_config_text(&text)
}

/// Parse config text: `key = value` lines, `#` comments, blank lines ok.
pub fn parse_config_text(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut errors: Vec<String> = Vec::new();
    let mut seen_mode_agents = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {}: expected key = value", lineno + 1));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if let Some(axis) = key.strip_prefix("sweep.") {
            let vals: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
            if vals.is_empty() || vals.iter().any(|v| v.is_empty()) {
                errors.push(format!("{key}: empty sweep value list"));
            } else {
                cfg.sweep.insert(axis.to_string(), vals);
            }
            continue;
        }
        if let Err(msg) = apply_key(&mut cfg, key, value) {
            errors.push(msg);
        }
        if key == "mode" && value == "agents" {
            seen_mode_agents = true;
        }
    }
    let _ = seen_mode_agents;
    validate(&cfg, &mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(errors))
    }
}

fn apply_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), String> {
    let bad = |what: &str| format!("{key}: {what} (got `{value}`)");
    let parse_f64 = |cfg_field: &mut f64| -> Result<(), String> {
        value
            .parse::<f64>()
            .map(|v| *cfg_field = v)
            .map_err(|_| bad("expected a real number"))
    };
    match key {
        "mode" => {
            cfg.mode = Mode::parse(value)
                .ok_or_else(|| bad("expected hydro1d | agents | spectral-only | sweep"))?
        }
        "grid.n" => {
            cfg.grid_n = value.parse().map_err(|_| bad("expected a positive integer"))?
        }
        "grid.length" => parse_f64(&mut cfg.length)?,
        "kernel.family" => {
            cfg.kernel_family = KernelFamily::parse(value)
                .ok_or_else(|| bad("expected topological | geometric | motsch-tadmor"))?
        }
        "kernel.alpha" => parse_f64(&mut cfg.alpha)?,
        "kernel.tau" => parse_f64(&mut cfg.tau)?,
        "kernel.r0" => parse_f64(&mut cfg.r0)?,
        "kernel.cutoff" => {
            cfg.cutoff = CutoffShape::parse(value)
                .ok_or_else(|| bad("expected smooth-cos2 | indicator"))?
        }
        "init.kind" => {
            if !["uniform", "perturbed-sine", "two-bump", "custom-samples"].contains(&value) {
                return Err(bad(
                    "expected uniform | perturbed-sine | two-bump | custom-samples",
                ));
            }
            cfg.init_kind = value.to_string();
        }
        "init.rho_bar" => parse_f64(&mut cfg.init_rho_bar)?,
        "init.u_bar" => parse_f64(&mut cfg.init_u_bar)?,
        "init.a" => parse_f64(&mut cfg.init_a)?,
        "init.k" => cfg.init_k = value.parse().map_err(|_| bad("expected an integer"))?,
        "init.b" => parse_f64(&mut cfg.init_b)?,
        "init.m" => cfg.init_m = value.parse().map_err(|_| bad("expected an integer"))?,
        "init.phi0" => parse_f64(&mut cfg.init_phi0)?,
        "init.kappa" => parse_f64(&mut cfg.init_kappa)?,
        "init.c1" => parse_f64(&mut cfg.init_c1)?,
        "init.c2" => parse_f64(&mut cfg.init_c2)?,
        "init.e0" => {
            cfg.init_e0 = value.parse().map_err(|_| bad("expected true | false"))?
        }
        "time.t_final" => parse_f64(&mut cfg.t_final)?,
        "time.cfl" => parse_f64(&mut cfg.cfl)?,
        "output.every" => parse_f64(&mut cfg.output_every)?,
        "snapshot.times" => {
            let mut times = Vec::new();
            for piece in value.split(',') {
                times.push(
                    piece
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| bad("expected a comma list of times"))?,
                );
            }
            cfg.snapshot_times = times;
        }
        "derivative.method" => {
            cfg.derivative = DerivativeMethod::parse(value)
                .ok_or_else(|| bad("expected spectral | central"))?
        }
        "operator.r" => {
            if value == "auto" {
                cfg.operator_r = None;
            } else {
                cfg.operator_r =
                    Some(value.parse().map_err(|_| bad("expected auto or a real"))?);
            }
        }
        "diagnostics.lambda2" => {
            cfg.lambda2_enabled = match value {
                "auto" => cfg.grid_n <= 1024,
                other => other.parse().map_err(|_| bad("expected true | false | auto"))?,
            }
        }
        "agents.n" => cfg.agents_n = value.parse().map_err(|_| bad("expected an integer"))?,
        "agents.dim" => cfg.agents_dim = value.parse().map_err(|_| bad("expected 1 or 2"))?,
        "agents.convention" => {
            cfg.agents_convention = WeightConvention::parse(value)
                .ok_or_else(|| bad("expected mean-field | raw"))?
        }
        "agents.r_floor" => parse_f64(&mut cfg.agents_r_floor)?,
        "agents.dt" => parse_f64(&mut cfg.agents_dt)?,
        "agents.init" => {
            if !["random", "lattice"].contains(&value) {
                return Err(bad("expected random | lattice"));
            }
            cfg.agents_init = value.to_string();
        }
        "spectral.input" => cfg.spectral_input = Some(value.to_string()),
        "seed" => cfg.seed = value.parse().map_err(|_| bad("expected an integer"))?,
        "out" => cfg.out_dir = value.to_string(),
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

fn validate(cfg: &ExperimentConfig, errors: &mut Vec<String>) {
    if cfg.grid_n < 8 {
        errors.push(format!("grid.n must be at least 8, got {}", cfg.grid_n));
    }
    if !(cfg.length > 0.0) {
        errors.push(format!("grid.length must be positive, got {}", cfg.length));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 2.0) {
        errors.push(format!("alpha must lie in (0,2), got {}", cfg.alpha));
    }
    if !(cfg.tau >= 0.0) {
        errors.push(format!("kernel.tau must be nonnegative, got {}", cfg.tau));
    }
    if !(cfg.r0 > 0.0 && cfg.r0 <= cfg.length / 4.0) {
        errors.push(format!(
            "kernel.r0 must satisfy 0 < r0 <= length/4, got {} with length {}",
            cfg.r0, cfg.length
        ));
    }
    if !(cfg.t_final >= 0.0) {
        errors.push(format!("time.t_final must be nonnegative, got {}", cfg.t_final));
    }
    if !(cfg.cfl > 0.0 && cfg.cfl <= 1.0) {
        errors.push(format!("time.cfl must lie in (0,1], got {}", cfg.cfl));
    }
    if !(cfg.output_every > 0.0) {
        errors.push(format!(
            "output.every must be positive, got {}",
            cfg.output_every
        ));
    }
    if cfg.init_kind == "perturbed-sine" && cfg.init_a.abs() >= 1.0 {
        errors.push(format!(
            "init.a must satisfy |a| < 1 for perturbed-sine, got {}",
            cfg.init_a
        ));
    }
    if cfg.agents_n < 2 {
        errors.push(format!("agents.n must be at least 2, got {}", cfg.agents_n));
    }
    if cfg.agents_dim != 1 && cfg.agents_dim != 2 {
        errors.push(format!("agents.dim must be 1 or 2, got {}", cfg.agents_dim));
    }
    if !(cfg.agents_dt > 0.0) {
        errors.push(format!("agents.dt must be positive, got {}", cfg.agents_dt));
    }
    if let Some(r) = cfg.operator_r {
        let dx = cfg.length / cfg.grid_n as f64;
        if !(r >= dx && r <= cfg.r0) {
            errors.push(format!(
                "operator.r must lie in [dx, r0] = [{dx}, {}], got {r}",
                cfg.r0
            ));
        }
    }
    if cfg.mode == Mode::SpectralOnly && cfg.spectral_input.is_none() {
        errors.push("mode = spectral-only requires spectral.input = <snapshot.csv>".into());
    }
    if cfg.mode == Mode::Sweep && cfg.sweep.is_empty() {
        errors.push("mode = sweep requires at least one sweep.<key> axis".into());
    }
}

/// Named presets shipped with the binary.
pub const PRESETS: &[(&str, &str)] = &[
    (
        "thm12-rootlog",
        include_str!("../presets/thm12-rootlog.conf"),
    ),
    ("e0-flocking", include_str!("../presets/e0-flocking.conf")),
    (
        "kernel-compare",
        include_str!("../presets/kernel-compare.conf"),
    ),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}
