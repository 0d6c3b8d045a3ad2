//! Experiment driver: dispatches configs to the solvers, writes CSV
//! artifacts and a plain-text run manifest, and evaluates the built-in
//! runtime checks.

use crate::agents::{connectivity_graph, SwarmSolver, SwarmState};
use crate::config::{ExperimentConfig, Mode};
use crate::error::{ConfigError, HydroError};
use crate::fields::{build_initial_data, AgentSwarm, DensityField, Grid1D, VelocityField};
use crate::hydro::{HydroSolver, HydroState};
use crate::metrics::{self, DiagnosticsRecord, ExtremeSide};
use crate::nonlocal::{drift_profile, enstrophy_bilinear, eval_commutator, eval_lphi};
use crate::spectral;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Why a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// Numerical vacuum formation: density positivity was lost.
    Vacuum { t: f64, cell: usize },
    /// A stiff pair kept rejecting steps after the halving budget.
    Stiffness { t: f64, detail: String },
}

impl Termination {
    pub fn label(&self) -> String {
        match self {
            Termination::Completed => "completed".into(),
            Termination::Vacuum { t, cell } => {
                format!("vacuum (density positivity lost at t = {t:.6}, cell {cell})")
            }
            Termination::Stiffness { t, detail } => format!("stiffness at t = {t:.6}: {detail}"),
        }
    }

    pub fn is_abort(&self) -> bool {
        !matches!(self, Termination::Completed)
    }
}

/// One named runtime check with its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl RunCheck {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Everything one run leaves behind, besides the files on disk.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub records: Vec<DiagnosticsRecord>,
    pub checks: Vec<RunCheck>,
    pub termination: Termination,
    /// Child run labels and termination/check summaries for sweeps.
    pub children: Vec<(String, bool, Termination)>,
}

impl RunReport {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.children.iter().all(|(_, ok, _)| *ok)
    }

    pub fn runtime_abort(&self) -> bool {
        self.termination.is_abort() || self.children.iter().any(|(_, _, t)| t.is_abort())
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

fn io_err<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Io(e.to_string())
}

/// Run one experiment (or a sweep of them) into its output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, RunError> {
    let out_dir = PathBuf::from(&cfg.out_dir);
    std::fs::create_dir_all(&out_dir).map_err(io_err)?;
    std::fs::write(out_dir.join("config.txt"), cfg.to_text()).map_err(io_err)?;
    let started = Instant::now();
    let mut report = match cfg.mode {
        Mode::Hydro1d => run_hydro(cfg, &out_dir)?,
        Mode::Agents => run_agents(cfg, &out_dir)?,
        Mode::SpectralOnly => run_spectral_only(cfg, &out_dir)?,
        Mode::Sweep => run_sweep(cfg, &out_dir)?,
    };
    write_manifest(cfg, &report, started.elapsed().as_secs_f64(), &out_dir)?;
    report.out_dir = out_dir;
    Ok(report)
}

fn write_manifest(
    cfg: &ExperimentConfig,
    report: &RunReport,
    wall_s: f64,
    out_dir: &Path,
) -> Result<(), RunError> {
    let mut m = String::new();
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "config_digest = {}", cfg.digest());
    let _ = writeln!(m, "mode = {}", cfg.mode.name());
    let _ = writeln!(m, "seed = {}", cfg.seed);
    let _ = writeln!(m, "wall_time_s = {wall_s:.3}");
    let _ = writeln!(m, "termination = {}", report.termination.label());
    for c in &report.checks {
        let _ = writeln!(
            m,
            "check {} = {} ({})",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    for (label, ok, term) in &report.children {
        let _ = writeln!(
            m,
            "child {label} = {} ({})",
            if *ok { "PASS" } else { "FAIL" },
            term.label()
        );
    }
    let status = if report.runtime_abort() {
        "runtime-abort"
    } else if report.all_checks_pass() {
        "ok"
    } else {
        "check-failure"
    };
    let _ = writeln!(m, "status = {status}");
    std::fs::write(out_dir.join("run_manifest.txt"), m).map_err(io_err)
}

fn write_fields_csv(
    path: &Path,
    grid: &Grid1D,
    rho: &[f64],
    u: &[f64],
) -> Result<(), RunError> {
    let mut s = String::from("i,x,rho,u\n");
    for i in 0..grid.n_cells() {
        let _ = writeln!(s, "{i},{:e},{:e},{:e}", grid.node(i), rho[i], u[i]);
    }
    std::fs::write(path, s).map_err(io_err)
}

/// Read a fields snapshot back (columns i,x,rho[,u]).
pub fn read_fields_csv(path: &Path, length: f64) -> Result<(DensityField, VelocityField), RunError> {
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let mut rho = Vec::new();
    let mut u = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 && line.starts_with('i') {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(RunError::Io(format!("{}: bad row `{line}`", path.display())));
        }
        rho.push(
            cols[2]
                .trim()
                .parse::<f64>()
                .map_err(|e| RunError::Io(format!("bad rho value: {e}")))?,
        );
        u.push(if cols.len() > 3 {
            cols[3].trim().parse::<f64>().unwrap_or(0.0)
        } else {
            0.0
        });
    }
    let grid = Grid1D::new(rho.len(), length).map_err(|e| RunError::Io(e.to_string()))?;
    let rho = DensityField::new(grid, rho).map_err(|e| RunError::Io(e.to_string()))?;
    let u = VelocityField::new(grid, u).map_err(|e| RunError::Io(e.to_string()))?;
    Ok((rho, u))
}

fn snapshot_name(t: f64) -> String {
    format!("snapshot_t{t:.4}.csv")
}

struct HydroDiagnostics {
    records: Vec<DiagnosticsRecord>,
    ts: Vec<f64>,
    rho_mins: Vec<f64>,
}

impl HydroDiagnostics {
    fn new() -> Self {
        Self {
            records: Vec::new(),
            ts: Vec::new(),
            rho_mins: Vec::new(),
        }
    }

    fn push(
        &mut self,
        solver: &HydroSolver,
        state: &HydroState,
        cfg: &ExperimentConfig,
    ) -> Result<(), HydroError> {
        let rho = &state.rho;
        let u = state.velocity();
        self.ts.push(state.t);
        self.rho_mins.push(rho.min());
        let eta = metrics::eta_clock(&self.ts, &self.rho_mins);
        let e = solver.compute_e(state)?;
        let lambda2 = if cfg.lambda2_enabled {
            spectral::lambda2(rho, solver.spec())
                .map(|r| r.lambda2)
                .unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let r0 = solver.spec().r0;
        let radii: Vec<f64> = [r0 / 2.0, r0 / 4.0, r0 / 8.0]
            .into_iter()
            .filter(|r| *r > 0.0 && *r <= rho.grid().length() / 2.0)
            .collect();
        let campanato = metrics::campanato_seminorm(rho, &u, &radii);
        // Flattening on the positively lifted velocity.
        let lift = u.diameter().max(1e-30) - u.min();
        let u_lift = VelocityField::new(
            *rho.grid(),
            u.values().iter().map(|v| v + lift).collect(),
        )
        .expect("lifted velocity");
        let delta = metrics::delta_schedule(state.t);
        let flatten_plus =
            metrics::flattening_expectation(rho, &u_lift, delta, ExtremeSide::Plus, r0);
        let flatten_minus =
            metrics::flattening_expectation(rho, &u_lift, delta, ExtremeSide::Minus, r0);
        self.records.push(DiagnosticsRecord {
            t: state.t,
            mass: rho.total_mass(),
            momentum: metrics::total_momentum(rho, &u),
            energy: metrics::kinetic_energy(rho, &u),
            v2: metrics::fluctuation_v2(rho, &u),
            u_diam: u.diameter(),
            q_max: e.q_max(),
            rho_min: rho.min(),
            rho_max: rho.max(),
            lambda2,
            campanato,
            eta,
            enstrophy: enstrophy_bilinear(rho, u.values(), solver.spec()),
            flatten_plus,
            flatten_minus,
        });
        Ok(())
    }
}

/// Per-step summary used by the runtime checks.
struct StepMonitor {
    steps: usize,
    u_hull_violations: usize,
    energy_violations: usize,
    last_u_min: f64,
    last_u_max: f64,
    last_energy: f64,
}

impl StepMonitor {
    fn new(state: &HydroState) -> Self {
        let u = state.velocity();
        Self {
            steps: 0,
            u_hull_violations: 0,
            energy_violations: 0,
            last_u_min: u.min(),
            last_u_max: u.max(),
            last_energy: metrics::kinetic_energy(&state.rho, &u),
        }
    }

    fn observe(&mut self, next: &HydroState) {
        let u = next.velocity();
        let (umin, umax) = (u.min(), u.max());
        let scale = 1.0 + self.last_u_max.abs().max(self.last_u_min.abs());
        if umax > self.last_u_max + 1e-12 * scale || umin < self.last_u_min - 1e-12 * scale {
            self.u_hull_violations += 1;
        }
        let energy = metrics::kinetic_energy(&next.rho, &u);
        if energy > self.last_energy * (1.0 + 1e-8) + 1e-300 {
            self.energy_violations += 1;
        }
        self.steps += 1;
        self.last_u_min = umin;
        self.last_u_max = umax;
        self.last_energy = energy;
    }
}

/// Build the initial hydrodynamic state for a config.
pub fn initial_hydro_state(
    cfg: &ExperimentConfig,
    solver: &HydroSolver,
    grid: Grid1D,
) -> Result<HydroState, RunError> {
    let (rho, mut u) = build_initial_data(&cfg.initial_data(), grid)
        .map_err(|e| RunError::Config(ConfigError(vec![e.to_string()])))?;
    if cfg.init_e0 {
        u = solver
            .build_e0_velocity(&rho, cfg.init_u_bar)
            .map_err(|e| RunError::Io(e.to_string()))?;
    }
    Ok(HydroState::from_primitive(0.0, rho, &u))
}

fn run_hydro(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let grid = Grid1D::new(cfg.grid_n, cfg.length)
        .map_err(|e| RunError::Config(ConfigError(vec![e.to_string()])))?;
    let spec = cfg.kernel_spec()?;
    let solver = HydroSolver::new(spec, &grid, cfg.derivative, cfg.cfl, cfg.operator_r);
    let mut state = initial_hydro_state(cfg, &solver, grid)?;

    if cfg.dump_operators {
        dump_operators(cfg, &solver, &state, out_dir)?;
    }

    let mut diag = HydroDiagnostics::new();
    diag.push(&solver, &state, cfg).map_err(io_err)?;
    let mut monitor = StepMonitor::new(&state);
    let mut snapshots: Vec<f64> = cfg.snapshot_times.clone();
    snapshots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut snap_iter = snapshots.into_iter().peekable();
    maybe_snapshot(&mut snap_iter, &state, out_dir)?;

    let mut termination = Termination::Completed;
    let n_outputs = (cfg.t_final / cfg.output_every).ceil() as usize;
    'outer: for k in 1..=n_outputs {
        let t_target = (k as f64 * cfg.output_every).min(cfg.t_final);
        match solver.advance(state.clone(), t_target, |_before, after, _dt| {
            monitor.observe(after);
        }) {
            Ok(next) => state = next,
            Err(HydroError::PositivityLoss { index, t, .. }) => {
                termination = Termination::Vacuum { t, cell: index };
                break 'outer;
            }
            Err(e) => {
                termination = Termination::Stiffness {
                    t: state.t,
                    detail: e.to_string(),
                };
                break 'outer;
            }
        }
        diag.push(&solver, &state, cfg).map_err(io_err)?;
        maybe_snapshot(&mut snap_iter, &state, out_dir)?;
        if state.t >= cfg.t_final - 1e-12 {
            break;
        }
    }

    write_diagnostics_csv(&diag.records, out_dir)?;
    let checks = hydro_checks(cfg, &diag.records, &monitor, &termination);
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        records: diag.records,
        checks,
        termination,
        children: Vec::new(),
    })
}

fn maybe_snapshot(
    snap_iter: &mut std::iter::Peekable<std::vec::IntoIter<f64>>,
    state: &HydroState,
    out_dir: &Path,
) -> Result<(), RunError> {
    while let Some(&t_snap) = snap_iter.peek() {
        if state.t + 1e-9 >= t_snap {
            let u = state.velocity();
            write_fields_csv(
                &out_dir.join(snapshot_name(t_snap)),
                state.grid(),
                state.rho.values(),
                u.values(),
            )?;
            snap_iter.next();
        } else {
            break;
        }
    }
    Ok(())
}

fn write_diagnostics_csv(records: &[DiagnosticsRecord], out_dir: &Path) -> Result<(), RunError> {
    let mut s = String::from(DiagnosticsRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    std::fs::write(out_dir.join("diagnostics.csv"), s).map_err(io_err)
}

fn hydro_checks(
    cfg: &ExperimentConfig,
    records: &[DiagnosticsRecord],
    monitor: &StepMonitor,
    termination: &Termination,
) -> Vec<RunCheck> {
    let mut checks = Vec::new();
    if records.is_empty() {
        return checks;
    }
    let m0 = records[0].mass;
    let p0 = records[0].momentum;
    let mass_drift = records
        .iter()
        .map(|r| (r.mass - m0).abs() / m0)
        .fold(0.0, f64::max);
    checks.push(RunCheck::new(
        "mass-conservation",
        mass_drift <= 1e-12,
        format!("max relative drift {mass_drift:.2e}"),
    ));
    // Momentum conservation and the transported ratio rely on the exact
    // symmetry of the kernel matrix; the observer-normalized family has
    // neither, so for it they are reported rather than enforced.
    let symmetric = cfg.kernel_family.is_symmetric();
    let mom_drift = records
        .iter()
        .map(|r| (r.momentum - p0).abs())
        .fold(0.0, f64::max);
    let mom_tol = 1e-10 * (1.0 + p0.abs());
    checks.push(RunCheck::new(
        "momentum-conservation",
        !symmetric || mom_drift <= mom_tol,
        if symmetric {
            format!("max drift {mom_drift:.2e} (tol {mom_tol:.2e})")
        } else {
            format!("max drift {mom_drift:.2e} (informational: kernel not symmetric)")
        },
    ));
    checks.push(RunCheck::new(
        "velocity-max-principle",
        monitor.u_hull_violations == 0,
        format!(
            "{} violations in {} steps",
            monitor.u_hull_violations, monitor.steps
        ),
    ));
    checks.push(RunCheck::new(
        "energy-monotone",
        monitor.energy_violations == 0,
        format!(
            "{} violations in {} steps",
            monitor.energy_violations, monitor.steps
        ),
    ));
    // Strict decay of the velocity diameter at output times.
    let mut strict = true;
    for w in records.windows(2) {
        if w[1].u_diam >= w[0].u_diam && w[0].u_diam > 0.0 {
            strict = false;
        }
    }
    checks.push(RunCheck::new(
        "u-diam-strict-decrease",
        strict,
        format!(
            "u_diam {:.4e} -> {:.4e}",
            records[0].u_diam,
            records.last().unwrap().u_diam
        ),
    ));
    // Transported ratio: max|q| drift relative to its initial value.
    // With the e0 construction q0 is machine noise and the transported
    // ratio is trivially zero; the drift check only engages at real scale.
    let q0 = records[0].q_max;
    if q0 > 1e-8 {
        let q_drift = records
            .iter()
            .map(|r| ((r.q_max - q0) / q0).abs())
            .fold(0.0, f64::max);
        checks.push(RunCheck::new(
            "q-transport-drift",
            !symmetric || q_drift <= 0.05,
            if symmetric {
                format!("max relative drift {q_drift:.4}")
            } else {
                format!("max relative drift {q_drift:.4} (informational: no conservation law for this kernel)")
            },
        ));
    }
    // Fluctuation decay bound with 5% slack, when lambda2 was computed.
    if cfg.lambda2_enabled && records.iter().all(|r| r.lambda2.is_finite()) {
        let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
        let v2: Vec<f64> = records.iter().map(|r| r.v2).collect();
        let lam: Vec<f64> = records.iter().map(|r| r.lambda2).collect();
        let decay = spectral::check_decay_bound(&ts, &v2, &lam, 0.05);
        checks.push(RunCheck::new(
            "fluctuation-decay-bound",
            decay.pass,
            format!("worst slack {:+.3e}", decay.worst_slack),
        ));
    }
    // Density envelope: fitted c in rho_min(t) >= c/(1+t), then check no
    // sample violates the fitted envelope by more than 10%.
    let c_fit = records
        .iter()
        .map(|r| r.rho_min * (1.0 + r.t))
        .fold(f64::INFINITY, f64::min);
    let env_ok = records
        .iter()
        .all(|r| r.rho_min >= 0.9 * c_fit / (1.0 + r.t));
    checks.push(RunCheck::new(
        "density-floor-envelope",
        env_ok,
        format!("fitted c = {c_fit:.4}"),
    ));
    if cfg.alpha >= 1.0 {
        let rho_max_all = records.iter().map(|r| r.rho_max).fold(0.0, f64::max);
        checks.push(RunCheck::new(
            "density-upper-bound",
            rho_max_all.is_finite(),
            format!("sup rho_max = {rho_max_all:.4}"),
        ));
    }
    // e0 = 0 runs keep the density inside its initial bounds.
    if cfg.init_e0 {
        let (lo0, hi0) = (records[0].rho_min, records[0].rho_max);
        let ok = records
            .iter()
            .all(|r| r.rho_min >= lo0 - 1e-3 && r.rho_max <= hi0 + 1e-3);
        checks.push(RunCheck::new(
            "density-within-initial-bounds",
            ok,
            format!(
                "rho range [{:.4}, {:.4}] vs initial [{lo0:.4}, {hi0:.4}]",
                records.iter().map(|r| r.rho_min).fold(f64::INFINITY, f64::min),
                records.iter().map(|r| r.rho_max).fold(0.0, f64::max)
            ),
        ));
    }
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let diams: Vec<f64> = records.iter().map(|r| r.u_diam).collect();
    let c_rootlog = metrics::fit_rootlog_constant(&ts, &diams);
    checks.push(RunCheck::new(
        "rootlog-envelope-fit",
        true,
        format!("fitted C = {c_rootlog:.4e} (informational)"),
    ));
    if termination.is_abort() {
        checks.push(RunCheck::new(
            "completed",
            false,
            termination.label(),
        ));
    }
    checks
}

fn dump_operators(
    cfg: &ExperimentConfig,
    solver: &HydroSolver,
    state: &HydroState,
    out_dir: &Path,
) -> Result<(), RunError> {
    let spec = solver.spec();
    let u = state.velocity();
    let r = solver.r_corr;
    let l = eval_lphi(state.rho.values(), &state.rho, spec, r, cfg.derivative)
        .map_err(|e| RunError::Io(e.to_string()))?;
    let c = eval_commutator(&state.rho, u.values(), spec, r, cfg.derivative)
        .map_err(|e| RunError::Io(e.to_string()))?;
    let b = drift_profile(&state.rho, spec, r).map_err(|e| RunError::Io(e.to_string()))?;
    let grid = state.grid();
    let mut s = String::from("i,x,lphi_rho,commutator_rho_u,drift_b\n");
    for i in 0..grid.n_cells() {
        let _ = writeln!(
            s,
            "{i},{:e},{:e},{:e},{:e}",
            grid.node(i),
            l.values[i],
            c.values[i],
            b[i]
        );
    }
    std::fs::write(out_dir.join("operators.csv"), s).map_err(io_err)
}

/// Deterministic swarm construction from the config seed.
pub fn initial_swarm(cfg: &ExperimentConfig) -> Result<AgentSwarm, RunError> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(cfg.seed);
    let n = cfg.agents_n;
    let dim = cfg.agents_dim;
    let length = cfg.length;
    let positions: Vec<[f64; 2]> = match cfg.agents_init.as_str() {
        "lattice" => (0..n)
            .map(|i| {
                if dim == 1 {
                    [i as f64 * length / n as f64, 0.0]
                } else {
                    let side = (n as f64).sqrt().ceil() as usize;
                    let (r, c) = (i / side, i % side);
                    [
                        c as f64 * length / side as f64,
                        r as f64 * length / side as f64,
                    ]
                }
            })
            .collect(),
        _ => (0..n)
            .map(|_| {
                [
                    rng.random::<f64>() * length,
                    if dim == 2 {
                        rng.random::<f64>() * length
                    } else {
                        0.0
                    },
                ]
            })
            .collect(),
    };
    let scale = crate::fields::DEFAULT_TORUS_LENGTH / length;
    let velocities: Vec<[f64; 2]> = positions
        .iter()
        .map(|p| {
            [
                cfg.init_b * (cfg.init_m as f64 * p[0] * scale + cfg.init_phi0).sin(),
                if dim == 2 {
                    cfg.init_b * (cfg.init_m as f64 * p[1] * scale).cos()
                } else {
                    0.0
                },
            ]
        })
        .collect();
    AgentSwarm::new(dim, length, positions, velocities).map_err(|e| RunError::Io(e.to_string()))
}

fn write_swarm_csv(path: &Path, swarm: &AgentSwarm) -> Result<(), RunError> {
    let dim = swarm.dim();
    let mut s = String::from(if dim == 1 { "i,x,vx\n" } else { "i,x,y,vx,vy\n" });
    for (i, (p, v)) in swarm
        .positions()
        .iter()
        .zip(swarm.velocities())
        .enumerate()
    {
        if dim == 1 {
            let _ = writeln!(s, "{i},{:e},{:e}", p[0], v[0]);
        } else {
            let _ = writeln!(s, "{i},{:e},{:e},{:e},{:e}", p[0], p[1], v[0], v[1]);
        }
    }
    std::fs::write(path, s).map_err(io_err)
}

fn swarm_record(state: &SwarmState, solver: &SwarmSolver) -> DiagnosticsRecord {
    let swarm = &state.swarm;
    let n = swarm.len() as f64;
    let mean = swarm.mean_velocity();
    let energy: f64 = swarm
        .velocities()
        .iter()
        .map(|v| 0.5 * (v[0] * v[0] + v[1] * v[1]))
        .sum::<f64>()
        / n;
    let mut v2 = 0.0;
    let mut enstrophy = 0.0;
    for i in 0..swarm.len() {
        for j in 0..swarm.len() {
            if i == j {
                continue;
            }
            let dvx = swarm.velocities()[i][0] - swarm.velocities()[j][0];
            let dvy = swarm.velocities()[i][1] - swarm.velocities()[j][1];
            let dv2 = dvx * dvx + dvy * dvy;
            v2 += dv2;
            enstrophy += solver.pair_weight(swarm, i, j) * dv2;
        }
    }
    v2 /= n * n;
    enstrophy /= n;
    DiagnosticsRecord {
        t: state.t,
        mass: 1.0,
        momentum: mean[0],
        energy,
        v2,
        u_diam: swarm.velocity_diameter(),
        q_max: f64::NAN,
        rho_min: f64::NAN,
        rho_max: f64::NAN,
        lambda2: f64::NAN,
        campanato: f64::NAN,
        eta: f64::NAN,
        enstrophy,
        flatten_plus: f64::NAN,
        flatten_minus: f64::NAN,
    }
}

fn run_agents(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let spec = cfg.kernel_spec()?;
    let solver = SwarmSolver::new(spec, cfg.agents_convention, cfg.agents_r_floor);
    let swarm = initial_swarm(cfg)?;
    let mut state = SwarmState { t: 0.0, swarm };
    let mut records = vec![swarm_record(&state, &solver)];
    write_swarm_csv(&out_dir.join(snapshot_name(0.0)), &state.swarm)?;
    let mean0 = state.swarm.mean_velocity();
    let mut hull_violations = 0usize;
    let mut steps = 0usize;
    let mut termination = Termination::Completed;

    let n_outputs = (cfg.t_final / cfg.output_every).ceil() as usize;
    'outer: for k in 1..=n_outputs {
        let t_target = (k as f64 * cfg.output_every).min(cfg.t_final);
        while state.t < t_target - 1e-12 {
            let dt = cfg.agents_dt.min(t_target - state.t);
            let diam_before = state.swarm.velocity_diameter();
            match solver.step_adaptive(&state, dt, 30) {
                Ok((next, _, _)) => {
                    if next.swarm.velocity_diameter()
                        > diam_before + 1e-9 * (1.0 + diam_before)
                    {
                        hull_violations += 1;
                    }
                    state = next;
                    steps += 1;
                }
                Err(e) => {
                    termination = Termination::Stiffness {
                        t: state.t,
                        detail: e.to_string(),
                    };
                    break 'outer;
                }
            }
        }
        records.push(swarm_record(&state, &solver));
        if state.t >= cfg.t_final - 1e-12 {
            break;
        }
    }
    write_swarm_csv(&out_dir.join(snapshot_name(state.t)), &state.swarm)?;
    write_diagnostics_csv(&records, out_dir)?;

    let mean1 = state.swarm.mean_velocity();
    let n = state.swarm.len() as f64;
    let drift = ((mean1[0] - mean0[0]).abs()).max((mean1[1] - mean0[1]).abs()) * n;
    let vscale = records[0].u_diam.max(1e-12);
    let mut checks = vec![
        RunCheck::new(
            "momentum-conservation",
            drift <= 1e-9 * n * vscale.max(1.0),
            format!("total drift {drift:.2e} over {steps} steps"),
        ),
        RunCheck::new(
            "velocity-max-principle",
            hull_violations == 0,
            format!("{hull_violations} violations in {steps} steps"),
        ),
    ];
    let report = connectivity_graph(&solver, &state.swarm, 0.0);
    checks.push(RunCheck::new(
        "connectivity",
        true,
        format!(
            "{} components, {} edges (informational)",
            report.n_components,
            report.edges.len()
        ),
    ));
    let mut strict = true;
    for w in records.windows(2) {
        if w[1].u_diam >= w[0].u_diam && w[0].u_diam > 0.0 {
            strict = false;
        }
    }
    checks.push(RunCheck::new(
        "u-diam-strict-decrease",
        strict,
        format!(
            "u_diam {:.4e} -> {:.4e}",
            records[0].u_diam,
            records.last().unwrap().u_diam
        ),
    ));
    if termination.is_abort() {
        checks.push(RunCheck::new("completed", false, termination.label()));
    }
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        records,
        checks,
        termination,
        children: Vec::new(),
    })
}

fn run_spectral_only(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let input = cfg
        .spectral_input
        .as_ref()
        .ok_or_else(|| ConfigError(vec!["spectral.input missing".into()]))?;
    let (rho, _) = read_fields_csv(Path::new(input), cfg.length)?;
    let spec = cfg.kernel_spec()?;
    let report = spectral::lambda2(&rho, &spec).map_err(|e| RunError::Io(e.to_string()))?;
    let mut s = String::from("lambda2,quotient_check\n");
    let _ = writeln!(s, "{:e},{:e}", report.lambda2, report.quotient_check);
    std::fs::write(out_dir.join("lambda2.csv"), s).map_err(io_err)?;
    let checks = vec![RunCheck::new(
        "spectral-gap-positive",
        report.lambda2 > 0.0,
        format!("lambda2 = {:.6e}", report.lambda2),
    )];
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        records: Vec::new(),
        checks,
        termination: Termination::Completed,
        children: Vec::new(),
    })
}

fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let children = cfg.expand_sweep()?;
    let results: Vec<(String, Result<RunReport, RunError>)> = children
        .into_par_iter()
        .map(|(label, mut child)| {
            child.out_dir = out_dir.join(&label).to_string_lossy().into_owned();
            let r = run_experiment(&child);
            (label, r)
        })
        .collect();
    let mut child_rows = Vec::new();
    let mut first_err: Option<RunError> = None;
    for (label, res) in results {
        match res {
            Ok(rep) => child_rows.push((label, rep.all_checks_pass(), rep.termination)),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                } else {
                    child_rows.push((
                        label,
                        false,
                        Termination::Stiffness {
                            t: 0.0,
                            detail: "run error".into(),
                        },
                    ));
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok(RunReport {
        out_dir: out_dir.to_path_buf(),
        records: Vec::new(),
        checks: Vec::new(),
        termination: Termination::Completed,
        children: child_rows,
    })
}
