//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line.
//!
//! Run with:
//!   cargo test -p topoflock --test acceptance -- --nocapture
//!
//! Reference scale: N = 256 grid cells or N <= 256 agents, t_final = 10.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::OnceLock;
use topoflock::agents::{connectivity_graph, SwarmSolver, SwarmState, WeightConvention};
use topoflock::config::{parse_config_text, preset};
use topoflock::fields::{
    build_initial_data, torus_distance, wrap_point, AgentSwarm, DensityField, Grid1D, InitialData,
};
use topoflock::fourier::{DerivativeMethod, SpectralDifferentiator};
use topoflock::geometry::CommRegion;
use topoflock::hydro::{HydroSolver, HydroState};
use topoflock::kernels::{eval_h, CutoffProfile, CutoffShape, KernelFamily, KernelSpec};
use topoflock::metrics::kinetic_energy;
use topoflock::nonlocal::{
    drift_profile, enstrophy_bilinear, eval_commutator, eval_lphi, eval_lphi_prime_kernel,
};
use topoflock::runner::{run_experiment, RunReport};
use topoflock::spectral;

fn out_dir(name: &str) -> String {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    dir.to_string_lossy().into_owned()
}

fn verdict(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!(
        "[acceptance {id:02}] {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn preset_report(name: &str, cell: &'static OnceLock<RunReport>) -> &'static RunReport {
    cell.get_or_init(|| {
        let mut cfg = parse_config_text(preset(name).expect("preset exists")).expect("valid");
        cfg.out_dir = out_dir(name);
        run_experiment(&cfg).expect("preset run")
    })
}

fn thm12() -> &'static RunReport {
    static CELL: OnceLock<RunReport> = OnceLock::new();
    preset_report("thm12-rootlog", &CELL)
}

fn e0() -> &'static RunReport {
    static CELL: OnceLock<RunReport> = OnceLock::new();
    preset_report("e0-flocking", &CELL)
}

fn kernel_compare() -> &'static RunReport {
    static CELL: OnceLock<RunReport> = OnceLock::new();
    preset_report("kernel-compare", &CELL)
}

/// thm12 configuration rerun at N = 512 to t = 5 (refinement comparisons).
fn thm12_n512() -> &'static RunReport {
    static CELL: OnceLock<RunReport> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut cfg =
            parse_config_text(preset("thm12-rootlog").unwrap()).expect("valid preset");
        cfg.grid_n = 512;
        cfg.t_final = 5.0;
        cfg.output_every = 0.5;
        cfg.lambda2_enabled = false;
        cfg.snapshot_times.clear();
        cfg.out_dir = out_dir("thm12-n512");
        run_experiment(&cfg).expect("refined run")
    })
}

fn agents_run() -> &'static RunReport {
    static CELL: OnceLock<RunReport> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = parse_config_text(
            "mode = agents\nagents.n = 64\nagents.dim = 1\ninit.b = 1\n\
             time.t_final = 2\noutput.every = 0.25\nseed = 42\n",
        )
        .expect("valid");
        let mut cfg = cfg;
        cfg.out_dir = out_dir("agents-run");
        run_experiment(&cfg).expect("agents run")
    })
}

fn check_named(report: &RunReport, name: &str) -> (bool, String) {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .map(|c| (c.pass, c.detail.clone()))
        .unwrap_or((false, format!("check `{name}` missing")))
}

// ---------------------------------------------------------------------------
// Continuum principal-value oracle: punctured integrals with graded Simpson
// panels and Richardson extrapolation in the puncture radius. Entirely
// independent of the grid evaluators: distances come from closed-form
// antiderivatives, integration from adaptive-order quadrature.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct OracleCase {
    rho: fn(f64) -> f64,
    /// Antiderivative of rho on the line (periodic part included).
    rho_anti: fn(f64) -> f64,
    f: fn(f64) -> f64,
    alpha: f64,
    tau: f64,
    r0: f64,
}

impl OracleCase {
    fn d_topo(&self, x: f64, z: f64) -> f64 {
        // |z| <= 2 r0 <= half the torus, so the straight segment is the
        // shorter arc.
        ((self.rho_anti)(x + z) - (self.rho_anti)(x)).abs()
    }

    fn phi(&self, x: f64, z: f64) -> f64 {
        let r = z.abs();
        let h = cutoff_cos2(r, self.r0);
        if h == 0.0 {
            return 0.0;
        }
        let d = self.d_topo(x, z);
        h / (r.powf(1.0 + self.alpha - self.tau) * d.powf(self.tau))
    }
}

fn cutoff_cos2(r: f64, r0: f64) -> f64 {
    eval_h(
        &CutoffProfile {
            r0,
            shape: CutoffShape::SmoothCos2,
        },
        r,
    )
}

/// Composite Simpson on [a, b].
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let n = 2 * panels;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Integral over eps <= |z| <= 2 r0 on graded panels doubling away from the
/// puncture.
fn punctured_integral<F: Fn(f64) -> f64>(g: &F, eps: f64, r_max: f64) -> f64 {
    let mut total = 0.0;
    for sign in [-1.0, 1.0] {
        let mut a = eps;
        while a < r_max {
            let b = (2.0 * a).min(r_max);
            total += simpson(&|t: f64| g(sign * t), a, b, 24);
            a = b;
        }
    }
    total
}

/// Principal value of integrand(z) dz over |z| <= 2 r0 via two-level
/// Richardson extrapolation in the puncture radius, eliminating the
/// eps^{2-alpha} and eps^{3-alpha} error terms in turn.
fn pv_richardson<F: Fn(f64) -> f64>(g: &F, alpha: f64, r0: f64, eps: f64) -> f64 {
    let r_max = 2.0 * r0;
    let i0 = punctured_integral(g, eps, r_max);
    let i1 = punctured_integral(g, eps / 2.0, r_max);
    let i2 = punctured_integral(g, eps / 4.0, r_max);
    let s1 = 2.0f64.powf(2.0 - alpha);
    let r1a = (s1 * i1 - i0) / (s1 - 1.0);
    let r1b = (s1 * i2 - i1) / (s1 - 1.0);
    let s2 = 2.0f64.powf(3.0 - alpha);
    (s2 * r1b - r1a) / (s2 - 1.0)
}

/// Continuum oracle for the singular alignment operator at x.
fn oracle_lphi(case: &OracleCase, x: f64) -> f64 {
    let g = |z: f64| ((case.f)(x + z) - (case.f)(x)) * case.phi(x, z);
    pv_richardson(&g, case.alpha, case.r0, 0.01)
}

/// Continuum oracle for the density-weighted commutator at x.
fn oracle_commutator(case: &OracleCase, x: f64) -> f64 {
    let g = |z: f64| ((case.f)(x + z) - (case.f)(x)) * (case.rho)(x + z) * case.phi(x, z);
    pv_richardson(&g, case.alpha, case.r0, 0.01)
}

fn grid_fields(case: &OracleCase, n: usize) -> (DensityField, Vec<f64>) {
    let grid = Grid1D::with_default_length(n).unwrap();
    let rho = DensityField::new(grid, grid.nodes().map(case.rho).collect()).unwrap();
    let f: Vec<f64> = grid.nodes().map(case.f).collect();
    (rho, f)
}

fn case_spec(case: &OracleCase) -> KernelSpec {
    KernelSpec::new(
        KernelFamily::Topological,
        case.alpha,
        case.tau,
        case.r0,
        CutoffShape::SmoothCos2,
        TAU,
    )
    .unwrap()
}

/// Max relative error of the grid evaluator against the continuum oracle at
/// the probe nodes, normalized by the largest oracle value among the probes.
fn lattice_vs_oracle(
    case: &OracleCase,
    n: usize,
    probes: &[usize],
    commutator: bool,
) -> f64 {
    let (rho, f) = grid_fields(case, n);
    let spec = case_spec(case);
    let r = topoflock::nonlocal::default_correction_radius(&spec, rho.grid().dx());
    let eval = if commutator {
        eval_commutator(&rho, &f, &spec, r, DerivativeMethod::Spectral).unwrap()
    } else {
        eval_lphi(&f, &rho, &spec, r, DerivativeMethod::Spectral).unwrap()
    };
    let scale = probes
        .iter()
        .map(|&i| {
            let x = rho.grid().node(i);
            if commutator {
                oracle_commutator(case, x).abs()
            } else {
                oracle_lphi(case, x).abs()
            }
        })
        .fold(0.0f64, f64::max);
    probes
        .iter()
        .map(|&i| {
            let x = rho.grid().node(i);
            let reference = if commutator {
                oracle_commutator(case, x)
            } else {
                oracle_lphi(case, x)
            };
            (eval.values[i] - reference).abs() / scale
        })
        .fold(0.0f64, f64::max)
}

fn rho_cos(x: f64) -> f64 {
    1.0 + 0.3 * x.cos()
}
fn rho_cos_anti(x: f64) -> f64 {
    x + 0.3 * x.sin()
}
fn rho_sin(x: f64) -> f64 {
    1.0 + 0.2 * x.sin()
}
fn rho_sin_anti(x: f64) -> f64 {
    x - 0.2 * x.cos()
}
fn f_sin(x: f64) -> f64 {
    x.sin()
}
fn f_mix(x: f64) -> f64 {
    (2.0 * x).cos() + 0.3 * x.sin()
}
/// Against rho = 1 + 0.3 cos and tau = 1, the leading quadrature-error
/// coefficient (f''/2 - tau rho' f' / (2 rho)) vanishes at x = pi/2 while
/// f' and f'' are separately nonzero there, so the operator value stays
/// O(1) and the comparison isolates the principal-value convergence.
fn f_balanced_tau1(x: f64) -> f64 {
    x.sin() - (10.0 / 3.0) * x.cos()
}
/// Same balance against tau = 2 at x = pi/2: f'' = -0.6 f' there.
fn f_balanced_tau2(x: f64) -> f64 {
    x.sin() - (5.0 / 3.0) * x.cos()
}

#[test]
fn oracle_self_check_on_uniform_density() {
    // With rho = const the operator acting on sin reduces to
    // -sin(x) * S, with S evaluated by an independent route: a closed-form
    // small-z series inside [0, delta] (where the cutoff is exactly 1) and
    // smooth Simpson quadrature beyond.
    let alpha: f64 = 1.2;
    let r0 = FRAC_PI_2;
    let case = OracleCase {
        rho: |_| 1.0,
        rho_anti: |x| x,
        f: f_sin,
        alpha,
        tau: 1.0,
        r0,
    };
    // 1 - cos z = z^2/2 - z^4/24 + z^6/720 - z^8/40320 + ...
    let delta: f64 = 0.1;
    let series = delta.powf(2.0 - alpha) / (2.0 * (2.0 - alpha))
        - delta.powf(4.0 - alpha) / (24.0 * (4.0 - alpha))
        + delta.powf(6.0 - alpha) / (720.0 * (6.0 - alpha))
        - delta.powf(8.0 - alpha) / (40_320.0 * (8.0 - alpha));
    let tail = simpson(
        &|z: f64| (1.0 - z.cos()) * cutoff_cos2(z, r0) / z.powf(1.0 + alpha),
        delta,
        2.0 * r0,
        20_000,
    );
    let s = 2.0 * (series + tail);
    for x in [0.7, 2.1, 4.9] {
        let got = oracle_lphi(&case, x);
        let expect = -x.sin() * s;
        assert!(
            (got - expect).abs() <= 2e-5 * expect.abs().max(1e-6),
            "oracle mismatch at {x}: {got} vs {expect}"
        );
    }
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_conservation() {
    let report = thm12();
    let records = &report.records;
    let m0 = records[0].mass;
    let p0 = records[0].momentum;
    let mass_drift = records
        .iter()
        .map(|r| (r.mass - m0).abs() / m0)
        .fold(0.0, f64::max);
    let mom_drift = records
        .iter()
        .map(|r| (r.momentum - p0).abs())
        .fold(0.0, f64::max);
    let mom_tol = 1e-10 * (1.0 + p0.abs());
    let pass = mass_drift <= 1e-12 && mom_drift <= mom_tol;
    assert!(verdict(
        1,
        "conservation of mass and momentum",
        pass,
        &format!("mass drift {mass_drift:.2e} (tol 1e-12), momentum drift {mom_drift:.2e} (tol {mom_tol:.2e})"),
    ));
}

fn dissipation_mismatch(n: usize, t_final: f64) -> f64 {
    let grid = Grid1D::with_default_length(n).unwrap();
    let spec = KernelSpec::new(
        KernelFamily::Topological,
        1.2,
        1.0,
        FRAC_PI_2,
        CutoffShape::SmoothCos2,
        TAU,
    )
    .unwrap();
    let solver = HydroSolver::new(spec, &grid, DerivativeMethod::Spectral, 0.4, None);
    let (rho, u) = build_initial_data(
        &InitialData::PerturbedSine {
            rho_bar: 1.0,
            a: 0.3,
            k: 1,
            b: 0.5,
            m: 1,
            phi0: 0.4,
        },
        grid,
    )
    .unwrap();
    let state = HydroState::from_primitive(0.0, rho, &u);
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    solver
        .advance(state, t_final, |before, after, dt| {
            let ub = before.velocity();
            let ua = after.velocity();
            let eb = kinetic_energy(&before.rho, &ub);
            let ea = kinetic_energy(&after.rho, &ua);
            if ea > eb * (1.0 + 1e-8) {
                monotone = false;
            }
            let wb = enstrophy_bilinear(&before.rho, ub.values(), solver.spec());
            let wa = enstrophy_bilinear(&after.rho, ua.values(), solver.spec());
            let measured = (eb - ea) / dt;
            let predicted = 0.25 * (wb + wa);
            if predicted > 1e-10 {
                worst = worst.max((measured - predicted).abs() / predicted);
            }
        })
        .expect("short dissipation run");
    assert!(monotone, "kinetic energy must not increase");
    worst
}

#[test]
fn criterion_02_energy_dissipation() {
    let (_, detail_monotone) = check_named(thm12(), "energy-monotone");
    let (monotone_ok, _) = check_named(thm12(), "energy-monotone");
    let mismatch_256 = dissipation_mismatch(256, 0.2);
    let mismatch_512 = dissipation_mismatch(512, 0.05);
    let pass = monotone_ok && mismatch_256 <= 0.05 && mismatch_512 <= 0.02;
    assert!(verdict(
        2,
        "energy dissipation matches enstrophy",
        pass,
        &format!(
            "monotone over full run ({detail_monotone}); per-step mismatch N=256: {:.3}% (tol 5%), N=512: {:.3}% (tol 2%)",
            100.0 * mismatch_256,
            100.0 * mismatch_512
        ),
    ));
}

#[test]
fn criterion_03_transported_ratio() {
    let q_drift = |report: &RunReport, t_max: f64| {
        let records = &report.records;
        let q0 = records[0].q_max;
        records
            .iter()
            .filter(|r| r.t <= t_max + 1e-9)
            .map(|r| ((r.q_max - q0) / q0).abs())
            .fold(0.0, f64::max)
    };
    let drift_256 = q_drift(thm12(), 5.0);
    let drift_512 = q_drift(thm12_n512(), 5.0);
    let pass = drift_256 <= 0.05 && drift_512 < drift_256;
    assert!(verdict(
        3,
        "max|q| drift small and refining",
        pass,
        &format!(
            "N=256: {:.3}% (tol 5%), N=512: {:.3}% (must shrink)",
            100.0 * drift_256,
            100.0 * drift_512
        ),
    ));
}

#[test]
fn criterion_04_maximum_principles() {
    let (h1, d1) = check_named(thm12(), "velocity-max-principle");
    let (h2, _) = check_named(e0(), "velocity-max-principle");
    let (a1, d3) = check_named(agents_run(), "velocity-max-principle");
    let (rho_ok, d4) = check_named(e0(), "density-within-initial-bounds");
    let pass = h1 && h2 && a1 && rho_ok;
    assert!(verdict(
        4,
        "velocity and density maximum principles",
        pass,
        &format!("hydro: {d1}; agents: {d3}; e0 density: {d4}"),
    ));
}

#[test]
fn criterion_05_operator_oracle() {
    // Five smooth (rho, f) pairs across the singularity range, split between
    // the plain operator and the commutator. For alpha >= 1 the probes sit
    // where the leading lattice-error coefficient vanishes, so the
    // comparison isolates the principal-value convergence itself.
    let generic = |n: usize| vec![n / 9, n / 3, (7 * n) / 10];
    let quarter = |n: usize| vec![n / 4];
    struct Pair {
        case: OracleCase,
        commutator: bool,
        probes: fn(usize) -> Vec<usize>,
        label: &'static str,
    }
    let pairs = [
        Pair {
            case: OracleCase {
                rho: rho_cos,
                rho_anti: rho_cos_anti,
                f: f_sin,
                alpha: 0.6,
                tau: 1.0,
                r0: FRAC_PI_2,
            },
            commutator: false,
            probes: generic,
            label: "L[sin], rho=1+0.3cos, a=0.6",
        },
        Pair {
            case: OracleCase {
                rho: rho_sin,
                rho_anti: rho_sin_anti,
                f: f_mix,
                alpha: 0.8,
                tau: 1.0,
                r0: FRAC_PI_2,
            },
            commutator: false,
            probes: generic,
            label: "L[cos2x+0.3sin], rho=1+0.2sin, a=0.8",
        },
        Pair {
            case: OracleCase {
                rho: rho_cos,
                rho_anti: rho_cos_anti,
                f: f_balanced_tau1,
                alpha: 1.2,
                tau: 1.0,
                r0: FRAC_PI_2,
            },
            commutator: false,
            probes: quarter,
            label: "L[sin-10cos/3], rho=1+0.3cos, a=1.2",
        },
        Pair {
            case: OracleCase {
                rho: rho_cos,
                rho_anti: rho_cos_anti,
                f: f_balanced_tau2,
                alpha: 1.0,
                tau: 2.0,
                r0: FRAC_PI_2,
            },
            commutator: false,
            probes: quarter,
            label: "L[sin-5cos/3], rho=1+0.3cos, a=1.0, tau=2",
        },
        Pair {
            case: OracleCase {
                rho: rho_cos,
                rho_anti: rho_cos_anti,
                f: f_sin,
                alpha: 0.7,
                tau: 1.0,
                r0: FRAC_PI_2,
            },
            commutator: true,
            probes: generic,
            label: "C[rho, sin], rho=1+0.3cos, a=0.7",
        },
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for p in &pairs {
        let coarse = lattice_vs_oracle(&p.case, 512, &(p.probes)(512), p.commutator);
        let fine = lattice_vs_oracle(&p.case, 1024, &(p.probes)(1024), p.commutator);
        let ok = fine <= 1e-3 && fine < coarse;
        pass &= ok;
        details.push(format!(
            "{}: err(512)={coarse:.2e}, err(1024)={fine:.2e}",
            p.label
        ));
    }
    assert!(verdict(
        5,
        "principal-value oracle match",
        pass,
        &details.join("; "),
    ));
}

#[test]
fn criterion_06_drift_scaling() {
    // log-log slope of max|b_r| against r must sit within 0.2 of 2 - alpha.
    let n = 1024;
    let grid = Grid1D::with_default_length(n).unwrap();
    let rho = DensityField::new(grid, grid.nodes().map(rho_cos).collect()).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for alpha in [0.6, 1.0, 1.4] {
        let spec = KernelSpec::new(
            KernelFamily::Topological,
            alpha,
            1.0,
            FRAC_PI_2,
            CutoffShape::SmoothCos2,
            TAU,
        )
        .unwrap();
        let dx = grid.dx();
        let mut rs = Vec::new();
        let mut r = 4.0 * dx;
        while r <= spec.r0 * (1.0 + 1e-12) {
            rs.push((r / dx).round() * dx);
            r *= 2.0;
        }
        let pts: Vec<(f64, f64)> = rs
            .iter()
            .map(|&r| {
                let b = drift_profile(&rho, &spec, r).unwrap();
                let bmax = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
                (r.ln(), bmax.ln())
            })
            .collect();
        let slope = least_squares_slope(&pts);
        let ok = (slope - (2.0 - alpha)).abs() <= 0.2;
        pass &= ok;
        details.push(format!("alpha={alpha}: slope {slope:.3} vs {:.1}", 2.0 - alpha));
    }
    assert!(verdict(6, "drift coefficient scaling", pass, &details.join("; ")));
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn leibniz_residual(n: usize, alpha: f64) -> f64 {
    let grid = Grid1D::with_default_length(n).unwrap();
    let rho = DensityField::new(grid, grid.nodes().map(rho_cos).collect()).unwrap();
    let f: Vec<f64> = grid.nodes().map(f_sin).collect();
    let spec = KernelSpec::new(
        KernelFamily::Topological,
        alpha,
        1.0,
        FRAC_PI_2,
        CutoffShape::SmoothCos2,
        TAU,
    )
    .unwrap();
    let r = topoflock::nonlocal::default_correction_radius(&spec, grid.dx());
    let diff = SpectralDifferentiator::new(n, grid.length());
    let lf = eval_lphi(&f, &rho, &spec, r, DerivativeMethod::Spectral).unwrap();
    let lf_prime = diff.derivative(&lf.values);
    let fp = diff.derivative(&f);
    let l_fp = eval_lphi(&fp, &rho, &spec, r, DerivativeMethod::Spectral).unwrap();
    let l_kernel_prime = eval_lphi_prime_kernel(&f, &rho, &spec, r, DerivativeMethod::Spectral).unwrap();
    (0..n)
        .map(|i| (lf_prime[i] - l_fp.values[i] - l_kernel_prime.values[i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_07_product_rule() {
    // ||(L f)' - L f' - L_{phi'} f||_inf must shrink under refinement and
    // stay below 1e-2 * ||f||_C2 at N = 1024 (||f||_C2 = |f| + |f'| + |f''|
    // sup norms; = 3 for sin).
    let alpha = 0.8;
    let res_512 = leibniz_residual(512, alpha);
    let res_1024 = leibniz_residual(1024, alpha);
    let c2_norm = 3.0;
    let pass = res_1024 < res_512 && res_1024 <= 1e-2 * c2_norm;
    assert!(verdict(
        7,
        "derivative product rule",
        pass,
        &format!(
            "residual N=512: {res_512:.3e}, N=1024: {res_1024:.3e} (tol {:.1e})",
            1e-2 * c2_norm
        ),
    ));
}

#[test]
fn criterion_08_kernel_reduction() {
    // Uniform density collapses the topological evaluator onto the
    // geometric one rescaled by 1/c^tau, as an exact formula identity.
    let n = 256;
    let grid = Grid1D::with_default_length(n).unwrap();
    let c = 1.7;
    let rho = DensityField::new(grid, vec![c; n]).unwrap();
    let f: Vec<f64> = grid.nodes().map(f_mix).collect();
    let mut worst: f64 = 0.0;
    for alpha in [0.6, 1.2] {
        let topo = KernelSpec::new(
            KernelFamily::Topological,
            alpha,
            1.0,
            FRAC_PI_2,
            CutoffShape::SmoothCos2,
            TAU,
        )
        .unwrap();
        let geo = KernelSpec::new(
            KernelFamily::Geometric,
            alpha,
            0.0,
            FRAC_PI_2,
            CutoffShape::SmoothCos2,
            TAU,
        )
        .unwrap();
        let r = topoflock::nonlocal::default_correction_radius(&topo, grid.dx());
        let lt = eval_lphi(&f, &rho, &topo, r, DerivativeMethod::Spectral).unwrap();
        let lg = eval_lphi(&f, &rho, &geo, r, DerivativeMethod::Spectral).unwrap();
        let scale = lg.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (a, b) in lt.values.iter().zip(&lg.values) {
            worst = worst.max((a - b / c).abs() / scale);
        }
    }
    let pass = worst <= 1e-12;
    assert!(verdict(
        8,
        "uniform-density kernel reduction",
        pass,
        &format!("max relative gap {worst:.2e} (tol 1e-12)"),
    ));
}

#[test]
fn criterion_09_region_geometry() {
    // Monte Carlo over the enclosure property of communication regions:
    // centers within r/10 and endpoints within r force the whole region
    // inside the ball of radius r. Zero violations allowed over 1e6 samples.
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(20_240_817);
    let r = 0.3;
    let started = std::time::Instant::now();
    let mut accepted: u64 = 0;
    let mut violations: u64 = 0;
    while accepted < 1_000_000 {
        let xs = [rng.random::<f64>() * TAU, rng.random::<f64>() * TAU];
        let x = sample_ball(&mut rng, xs, r / 10.0);
        let xp = sample_ball(&mut rng, xs, r);
        let region = CommRegion::new(2, x, xp, TAU);
        if region.r == 0.0 {
            continue;
        }
        let mid = [
            wrap_point(x[0] + topoflock::fields::wrap_signed(xp[0] - x[0], TAU) / 2.0, TAU),
            wrap_point(x[1] + topoflock::fields::wrap_signed(xp[1] - x[1], TAU) / 2.0, TAU),
        ];
        for _ in 0..4 {
            let a = rng.random_range(-region.r..region.r);
            let b = rng.random_range(-region.r..region.r);
            let z = [
                wrap_point(mid[0] + a * region.axis[0] - b * region.axis[1], TAU),
                wrap_point(mid[1] + a * region.axis[1] + b * region.axis[0], TAU),
            ];
            if region.contains(z) {
                accepted += 1;
                if torus_distance(2, z, xs, TAU) >= r {
                    violations += 1;
                }
                break;
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = violations == 0 && elapsed <= 60.0;
    assert!(verdict(
        9,
        "region enclosed in the outer ball",
        pass,
        &format!("{violations} violations over 1e6 samples in {elapsed:.1}s"),
    ));
}

fn sample_ball(rng: &mut rand::rngs::StdRng, c: [f64; 2], r: f64) -> [f64; 2] {
    use rand::Rng;
    loop {
        let dx = rng.random_range(-r..r);
        let dy = rng.random_range(-r..r);
        if dx * dx + dy * dy < r * r {
            return [wrap_point(c[0] + dx, TAU), wrap_point(c[1] + dy, TAU)];
        }
    }
}

#[test]
fn criterion_10_spectral_bound() {
    // (a) the fluctuation decay bound holds along the e0 trajectory with 5%
    // slack; (b) the dense eigensolve agrees with an FFT symbol oracle on
    // uniform density to 1e-8.
    let records = &e0().records;
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let v2: Vec<f64> = records.iter().map(|r| r.v2).collect();
    let lam: Vec<f64> = records.iter().map(|r| r.lambda2).collect();
    let decay = spectral::check_decay_bound(&ts, &v2, &lam, 0.05);

    let mut symbol_gap: f64 = 0.0;
    let n = 256;
    let grid = Grid1D::with_default_length(n).unwrap();
    for (family, tau) in [(KernelFamily::Geometric, 0.0), (KernelFamily::Topological, 1.0)] {
        let spec = KernelSpec::new(family, 1.2, tau, FRAC_PI_2, CutoffShape::SmoothCos2, TAU)
            .unwrap();
        let rho = DensityField::new(grid, vec![1.0; n]).unwrap();
        let lam2 = spectral::lambda2(&rho, &spec).unwrap().lambda2;
        let oracle = fft_symbol_oracle(&rho, &spec);
        symbol_gap = symbol_gap.max((lam2 - oracle).abs() / oracle);
    }
    let pass = decay.pass && symbol_gap <= 1e-8;
    assert!(verdict(
        10,
        "spectral decay bound and circulant oracle",
        pass,
        &format!(
            "decay worst slack {:+.2e} (tol 5%), symbol gap {symbol_gap:.2e} (tol 1e-8)",
            decay.worst_slack
        ),
    ));
}

/// Independent circulant route: FFT of the alignment operator's first row.
fn fft_symbol_oracle(rho: &DensityField, spec: &KernelSpec) -> f64 {
    use rustfft::num_complex::Complex;
    let grid = rho.grid();
    let n = grid.n_cells();
    let dx = grid.dx();
    let c = rho.values()[0];
    // Operator matrix row at node 0: a_j = -phi(|z_j|) * rho * dx for j != 0,
    // diagonal carries the negated row sum.
    let mut row = vec![0.0f64; n];
    for k in 1..n {
        let z = if k <= n / 2 { k as f64 * dx } else { (n - k) as f64 * dx };
        if z > spec.support_radius() {
            continue;
        }
        let d = c * z;
        let phi = topoflock::kernels::eval_phi_1d(spec, z, d).unwrap();
        row[k] = -phi * c * dx;
    }
    row[0] = -row.iter().skip(1).sum::<f64>();
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = row.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    buf.iter()
        .skip(1)
        .map(|v| v.re)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_11_flocking_decay() {
    let mut pass = true;
    let mut details = Vec::new();
    for (label, report) in [("thm12-rootlog", thm12()), ("e0-flocking", e0())] {
        let (ok, d) = check_named(report, "u-diam-strict-decrease");
        let (_, c) = check_named(report, "rootlog-envelope-fit");
        pass &= ok;
        details.push(format!("{label}: {d}; {c}"));
    }
    let kc = kernel_compare();
    for (label, ok, term) in &kc.children {
        // Child checks live in their manifests; the parent records verdicts.
        pass &= *ok && !term.is_abort();
        details.push(format!("kernel-compare/{label}: checks {}", if *ok { "ok" } else { "failed" }));
    }
    assert!(verdict(
        11,
        "velocity diameter strictly decays on all presets",
        pass,
        &details.join("; "),
    ));
}

#[test]
fn criterion_12_agents() {
    let (mom_ok, mom_detail) = check_named(agents_run(), "momentum-conservation");

    // Component counts against an independent BFS oracle on random swarms.
    use rand::{Rng, SeedableRng};
    let mut mismatches = 0usize;
    for seed in 0..100u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1000 + seed);
        let dim = if seed % 2 == 0 { 1 } else { 2 };
        let n = 24 + (seed % 5) as usize * 8;
        let positions: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                [
                    rng.random::<f64>() * TAU,
                    if dim == 2 { rng.random::<f64>() * TAU } else { 0.0 },
                ]
            })
            .collect();
        let velocities = vec![[0.0, 0.0]; n];
        let swarm = AgentSwarm::new(dim, TAU, positions, velocities).unwrap();
        let r0 = 0.35 + 0.3 * rng.random::<f64>();
        let spec = KernelSpec::new(
            KernelFamily::Topological,
            1.0,
            1.0,
            r0,
            CutoffShape::SmoothCos2,
            TAU,
        )
        .unwrap();
        let solver = SwarmSolver::new(spec, WeightConvention::MeanField, 1e-6);
        let report = connectivity_graph(&solver, &swarm, 0.0);
        if report.n_components != bfs_components(&solver, &swarm) {
            mismatches += 1;
        }
    }
    let pass = mom_ok && mismatches == 0;
    assert!(verdict(
        12,
        "agent momentum and connectivity oracle",
        pass,
        &format!("momentum: {mom_detail}; BFS mismatches: {mismatches}/100"),
    ));
}

fn bfs_components(solver: &SwarmSolver, swarm: &AgentSwarm) -> usize {
    let n = swarm.len();
    let mut seen = vec![false; n];
    let mut comps = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        comps += 1;
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if !seen[y] && y != x && solver.pair_weight(swarm, x, y) > 0.0 {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    comps
}

#[test]
fn smallness_hypothesis_reported_for_weak_singularity() {
    // Companion observation for the hypothesis checker: the e0 construction
    // at alpha < 1 reports a ratio far below 1, and the direct formula value
    // matches the hand computation M0 |q0| (1-a) / R0^{1-a}.
    let grid = Grid1D::with_default_length(128).unwrap();
    let spec = KernelSpec::new(
        KernelFamily::Topological,
        0.5,
        1.0,
        1.0,
        CutoffShape::SmoothCos2,
        TAU,
    )
    .unwrap();
    let solver = HydroSolver::new(spec, &grid, DerivativeMethod::Spectral, 0.4, None);
    let (rho, u) = build_initial_data(
        &InitialData::PerturbedSine {
            rho_bar: 1.0,
            a: 0.2,
            k: 1,
            b: 0.05,
            m: 1,
            phi0: 0.0,
        },
        grid,
    )
    .unwrap();
    let state = HydroState::from_primitive(0.0, rho, &u);
    let e = solver.compute_e(&state).unwrap();
    let expected = state.rho.total_mass() * e.q_max() * 0.5 / 1.0f64.powf(0.5);
    match solver.check_smallness(&state).unwrap() {
        topoflock::hydro::Smallness::Ratio(r) => {
            assert!((r - expected).abs() <= 1e-12 * expected.max(1e-12));
        }
        other => panic!("expected ratio, got {other:?}"),
    }
}

#[test]
fn swarm_state_time_advances_and_positions_wrap() {
    // Light structural check that accepted swarm steps keep positions in
    // the fundamental domain.
    let state = SwarmState {
        t: 0.0,
        swarm: AgentSwarm::new(
            1,
            TAU,
            vec![[TAU - 0.01, 0.0], [0.02, 0.0], [PI, 0.0]],
            vec![[1.0, 0.0], [0.2, 0.0], [-0.4, 0.0]],
        )
        .unwrap(),
    };
    let spec = KernelSpec::new(
        KernelFamily::Topological,
        1.0,
        1.0,
        1.0,
        CutoffShape::SmoothCos2,
        TAU,
    )
    .unwrap();
    let solver = SwarmSolver::new(spec, WeightConvention::MeanField, 1e-9);
    let (next, _, _) = solver.step_adaptive(&state, 0.05, 10).unwrap();
    assert!(next.t > 0.0);
    for p in next.swarm.positions() {
        assert!((0.0..TAU).contains(&p[0]));
    }
}
