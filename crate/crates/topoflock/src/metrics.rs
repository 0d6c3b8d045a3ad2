//! Theorem-level diagnostics computed on state snapshots: conserved
//! quantities, fluctuation diameters, Campanato seminorms, flattening
//! expectations, and the vacuum clock.

use crate::fields::{torus_distance_1d, DensityField, VelocityField};

/// One diagnostics row; columns of the run CSV in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    /// Kinetic energy (1/2) sum rho u^2 dx.
    pub energy: f64,
    pub v2: f64,
    pub u_diam: f64,
    pub q_max: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub lambda2: f64,
    pub campanato: f64,
    pub eta: f64,
    /// The bilinear enstrophy, the instantaneous energy dissipation rate of
    /// sum rho u^2 dx.
    pub enstrophy: f64,
    pub flatten_plus: f64,
    pub flatten_minus: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "t,mass,momentum,energy,V2,u_diam,q_max,rho_min,rho_max,lambda2,campanato,eta,enstrophy,flatten_plus,flatten_minus";

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.t,
            self.mass,
            self.momentum,
            self.energy,
            self.v2,
            self.u_diam,
            self.q_max,
            self.rho_min,
            self.rho_max,
            self.lambda2,
            self.campanato,
            self.eta,
            self.enstrophy,
            self.flatten_plus,
            self.flatten_minus
        )
    }
}

/// Total mass sum rho dx.
pub fn total_mass(rho: &DensityField) -> f64 {
    rho.total_mass()
}

/// Total momentum sum rho u dx.
pub fn total_momentum(rho: &DensityField, u: &VelocityField) -> f64 {
    let dx = rho.grid().dx();
    rho.values()
        .iter()
        .zip(u.values())
        .map(|(&r, &v)| r * v * dx)
        .sum()
}

/// Kinetic energy (1/2) sum rho u^2 dx.
pub fn kinetic_energy(rho: &DensityField, u: &VelocityField) -> f64 {
    let dx = rho.grid().dx();
    0.5 * rho
        .values()
        .iter()
        .zip(u.values())
        .map(|(&r, &v)| r * v * v * dx)
        .sum::<f64>()
}

/// Velocity fluctuation diameter in the density-weighted L^2 pairing:
/// sum_{i,j} (u_i - u_j)^2 rho_i rho_j dx^2.
pub fn fluctuation_v2(rho: &DensityField, u: &VelocityField) -> f64 {
    let dx = rho.grid().dx();
    let r = rho.values();
    let v = u.values();
    let n = r.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let du = v[i] - v[j];
            row += du * du * r[j];
        }
        total += row * r[i];
    }
    total * dx * dx
}

/// The algebraically identical variance form 2 M0 sum (u - u_bar)^2 rho dx
/// with u_bar the momentum-weighted mean.
pub fn fluctuation_v2_variance_form(rho: &DensityField, u: &VelocityField) -> f64 {
    let dx = rho.grid().dx();
    let m0 = rho.total_mass();
    let ubar = total_momentum(rho, u) / m0;
    let var: f64 = rho
        .values()
        .iter()
        .zip(u.values())
        .map(|(&r, &v)| (v - ubar) * (v - ubar) * r * dx)
        .sum();
    2.0 * m0 * var
}

/// Windowed mass-weighted deviation of u from its local ball averages:
/// the maximum over all grid centers and the given radii of
/// int_{|x - x*| < r/10} |u - u_{x*,r}|^2 rho dx, with u_{x*,r} the
/// mass-weighted average over B(x*, r).
pub fn campanato_seminorm(rho: &DensityField, u: &VelocityField, radii: &[f64]) -> f64 {
    let grid = rho.grid();
    let n = grid.n_cells();
    let dx = grid.dx();
    let length = grid.length();
    let mut worst: f64 = 0.0;
    for &r in radii {
        debug_assert!(r > 0.0 && r <= length / 2.0);
        for c in 0..n {
            let xc = grid.node(c);
            let avg = ball_average(rho, u, xc, r);
            let window = r / 10.0;
            let mut dev = 0.0;
            for i in 0..n {
                if torus_distance_1d(grid.node(i), xc, length) < window {
                    let d = u.values()[i] - avg;
                    dev += d * d * rho.values()[i] * dx;
                }
            }
            worst = worst.max(dev);
        }
    }
    worst
}

/// Mass-weighted average of u over the metric ball B(center, r).
pub fn ball_average(rho: &DensityField, u: &VelocityField, center: f64, r: f64) -> f64 {
    let grid = rho.grid();
    let length = grid.length();
    let dx = grid.dx();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.n_cells() {
        if torus_distance_1d(grid.node(i), center, length) < r {
            let w = rho.values()[i] * dx;
            num += u.values()[i] * w;
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Which velocity extremum the flattening diagnostic looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremeSide {
    Plus,
    Minus,
}

/// Conditional mass fraction of the sub-level set near the extremum:
/// for the plus side, mass({u < u_max (1 - delta)} within B(x_max, r0))
/// over the mass of that ball. Expects u of one sign; lift by a Galilean
/// shift first.
pub fn flattening_expectation(
    rho: &DensityField,
    u: &VelocityField,
    delta: f64,
    side: ExtremeSide,
    r0: f64,
) -> f64 {
    debug_assert!(delta > 0.0);
    let grid = rho.grid();
    let n = grid.n_cells();
    let length = grid.length();
    let dx = grid.dx();
    let v = u.values();
    // First cell attaining the extremum, for determinism.
    let (x_star, threshold, below) = match side {
        ExtremeSide::Plus => {
            let umax = u.max();
            let idx = v.iter().position(|&x| x == umax).unwrap_or(0);
            (grid.node(idx), umax * (1.0 - delta), true)
        }
        ExtremeSide::Minus => {
            let umin = u.min();
            let idx = v.iter().position(|&x| x == umin).unwrap_or(0);
            (grid.node(idx), umin * (1.0 + delta), false)
        }
    };
    // Numerator and denominator use the same cell-resolution open ball so
    // the conditional expectation is exactly a mass ratio of cell sets.
    let mut set_mass = 0.0;
    let mut ball_mass = 0.0;
    for i in 0..n {
        if torus_distance_1d(grid.node(i), x_star, length) < r0 {
            let w = rho.values()[i] * dx;
            ball_mass += w;
            let in_set = if below {
                v[i] < threshold
            } else {
                v[i] > threshold
            };
            if in_set {
                set_mass += w;
            }
        }
    }
    if ball_mass > 0.0 {
        set_mass / ball_mass
    } else {
        0.0
    }
}

/// Flattening threshold schedule: 1/sqrt(t ln t) clamped to [1e-3, 1], with
/// delta = 1 wherever the formula is undefined (t <= 1).
pub fn delta_schedule(t: f64) -> f64 {
    if t <= 1.0 {
        return 1.0;
    }
    let s = t * t.ln();
    (1.0 / s.sqrt()).clamp(1e-3, 1.0)
}

/// Vacuum clock: trapezoid integral of rho_min^2 over the sampled history.
pub fn eta_clock(ts: &[f64], rho_min: &[f64]) -> f64 {
    assert_eq!(ts.len(), rho_min.len());
    let mut eta = 0.0;
    for i in 1..ts.len() {
        debug_assert!(ts[i] >= ts[i - 1]);
        let a = rho_min[i - 1] * rho_min[i - 1];
        let b = rho_min[i] * rho_min[i];
        eta += 0.5 * (a + b) * (ts[i] - ts[i - 1]);
    }
    eta
}

/// Fitted constant of the root-logarithmic decay envelope
/// u_diam(t) <= C / sqrt(ln t), over samples with t large enough for the
/// envelope to make sense. Informational: only monotone decay of u_diam is
/// a hard invariant.
pub fn fit_rootlog_constant(ts: &[f64], u_diam: &[f64]) -> f64 {
    ts.iter()
        .zip(u_diam)
        .filter(|(&t, _)| t > 1.5)
        .map(|(&t, &d)| d * t.ln().sqrt())
        .fold(0.0, f64::max)
}
