//! Periodic-grid and agent state containers shared by the solvers and diagnostics.
//!
//! Fields carry cell averages on a uniform 1D torus grid. Cell `i` is centered
//! at node `x_i = i*dx`, so the stored prefix-mass array gives O(1) access to
//! the mass of any arc, which is what topological distances are made of.

use crate::error::FieldError;

/// Default torus circumference.
pub const DEFAULT_TORUS_LENGTH: f64 = std::f64::consts::TAU;

/// Wrap a coordinate into the fundamental domain [0, length).
pub fn wrap_point(x: f64, length: f64) -> f64 {
    let w = x.rem_euclid(length);
    // rem_euclid can return `length` itself when x is a tiny negative number.
    if w >= length {
        w - length
    } else {
        w
    }
}

/// Signed displacement from `a` to `b` along the shorter arc, in [-length/2, length/2].
pub fn wrap_signed(d: f64, length: f64) -> f64 {
    let mut w = d - length * (d / length).round();
    if w < -length / 2.0 {
        w += length;
    }
    w
}

/// Geodesic distance between two points on the circle of given circumference.
pub fn torus_distance_1d(a: f64, b: f64, length: f64) -> f64 {
    wrap_signed(b - a, length).abs()
}

/// Geodesic (minimal-image Euclidean) distance on the square torus [0,length)^dim.
///
/// The result never exceeds `length * sqrt(dim) / 2`.
pub fn torus_distance(dim: usize, a: [f64; 2], b: [f64; 2], length: f64) -> f64 {
    match dim {
        1 => torus_distance_1d(a[0], b[0], length),
        2 => {
            let dx = wrap_signed(b[0] - a[0], length);
            let dy = wrap_signed(b[1] - a[1], length);
            (dx * dx + dy * dy).sqrt()
        }
        _ => panic!("only dim 1 and 2 are supported"),
    }
}

/// Minimal periodic image of a displacement vector.
pub fn min_image(dim: usize, v: [f64; 2], length: f64) -> [f64; 2] {
    match dim {
        1 => [wrap_signed(v[0], length), 0.0],
        2 => [wrap_signed(v[0], length), wrap_signed(v[1], length)],
        _ => panic!("only dim 1 and 2 are supported"),
    }
}

/// Uniform periodic grid on a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    length: f64,
    dx: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize, length: f64) -> Result<Self, FieldError> {
        if n_cells < 8 {
            return Err(FieldError::GridTooSmall(n_cells));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(FieldError::BadLength(length));
        }
        Ok(Self {
            n_cells,
            length,
            dx: length / n_cells as f64,
        })
    }

    pub fn with_default_length(n_cells: usize) -> Result<Self, FieldError> {
        Self::new(n_cells, DEFAULT_TORUS_LENGTH)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Node position of cell `i` (indices taken mod n_cells).
    pub fn node(&self, i: usize) -> f64 {
        (i % self.n_cells) as f64 * self.dx
    }

    /// Total periodic index, defined for any signed offset.
    pub fn wrap_index(&self, i: isize) -> usize {
        i.rem_euclid(self.n_cells as isize) as usize
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.node(i))
    }
}

fn check_values(grid: &Grid1D, values: &[f64]) -> Result<(), FieldError> {
    if values.len() != grid.n_cells() {
        return Err(FieldError::LengthMismatch {
            len: values.len(),
            n_cells: grid.n_cells(),
        });
    }
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(FieldError::NonFiniteValue { index: i, value: v });
        }
    }
    Ok(())
}

/// Strictly positive cell averages of the density, with a cached prefix-mass
/// array: `prefix_mass[i] = dx * sum(values[..i])` and `prefix_mass[n] = M0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid1D,
    values: Vec<f64>,
    prefix_mass: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, FieldError> {
        check_values(&grid, &values)?;
        for (i, &v) in values.iter().enumerate() {
            if v <= 0.0 {
                return Err(FieldError::NonPositiveDensity { index: i, value: v });
            }
        }
        let prefix_mass = Self::compute_prefix(&grid, &values);
        Ok(Self {
            grid,
            values,
            prefix_mass,
        })
    }

    pub fn compute_prefix(grid: &Grid1D, values: &[f64]) -> Vec<f64> {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in values {
            acc += grid.dx() * v;
            prefix.push(acc);
        }
        prefix
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prefix_mass(&self) -> &[f64] {
        &self.prefix_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.prefix_mass[self.grid.n_cells()]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Continuous mass antiderivative P(x) on [0, length): the mass of
    /// [-dx/2, x] under the piecewise-constant density with cells centered
    /// at the nodes. Linear inside each cell, continuous across cells.
    pub fn prefix_at(&self, x: f64) -> f64 {
        let n = self.grid.n_cells();
        let dx = self.grid.dx();
        let length = self.grid.length();
        let xw = wrap_point(x, length);
        let s = xw + 0.5 * dx;
        let j = (s / dx).floor() as usize;
        if j >= n {
            // Upper half of cell 0, reached through the seam at x = length.
            self.prefix_mass[n] + (s - length) * self.values[0]
        } else {
            self.prefix_mass[j] + (s - j as f64 * dx) * self.values[j]
        }
    }

    /// P extended to the whole line: P(x + length) = P(x) + M0.
    pub fn prefix_unwrapped(&self, x: f64) -> f64 {
        let length = self.grid.length();
        let k = (x / length).floor();
        let w = x - k * length;
        self.prefix_at(w) + k * self.total_mass()
    }

    /// Mass of the arc from node `i` to node `i + k` (signed grid offset),
    /// evaluated by the trapezoidal rule on the prefix array. Exactly
    /// symmetric under swapping the endpoints. Requires |k|*dx <= length/2.
    pub fn arc_mass_nodes(&self, i: usize, k: isize) -> f64 {
        let n = self.grid.n_cells() as isize;
        debug_assert!(2 * k.abs() <= n);
        let dx = self.grid.dx();
        let (lo, hi) = if k >= 0 {
            (i as isize, i as isize + k)
        } else {
            (i as isize + k, i as isize)
        };
        let vlo = self.values[self.grid.wrap_index(lo)];
        let vhi = self.values[self.grid.wrap_index(hi)];
        let plo = self.prefix_ext(lo);
        let phi = self.prefix_ext(hi);
        (phi - plo) + 0.5 * dx * (vhi - vlo)
    }

    fn prefix_ext(&self, i: isize) -> f64 {
        let n = self.grid.n_cells() as isize;
        let q = i.div_euclid(n);
        let r = i.rem_euclid(n) as usize;
        self.prefix_mass[r] + q as f64 * self.total_mass()
    }
}

/// Velocity samples at the cell nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl VelocityField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, FieldError> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// max u - min u.
    pub fn diameter(&self) -> f64 {
        self.max() - self.min()
    }
}

/// Momentum samples m = rho * u at the cell nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl MomentumField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self, FieldError> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values })
    }

    pub fn from_density_velocity(rho: &DensityField, u: &VelocityField) -> Self {
        let values = rho
            .values()
            .iter()
            .zip(u.values())
            .map(|(&r, &v)| r * v)
            .collect();
        Self {
            grid: *rho.grid(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Positions and velocities of N agents on the torus T^dim, dim = 1 or 2.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSwarm {
    dim: usize,
    length: f64,
    positions: Vec<[f64; 2]>,
    velocities: Vec<[f64; 2]>,
}

impl AgentSwarm {
    pub fn new(
        dim: usize,
        length: f64,
        positions: Vec<[f64; 2]>,
        velocities: Vec<[f64; 2]>,
    ) -> Result<Self, FieldError> {
        assert!(dim == 1 || dim == 2, "only dim 1 and 2 are supported");
        if !(length.is_finite() && length > 0.0) {
            return Err(FieldError::BadLength(length));
        }
        if positions.len() < 2 {
            return Err(FieldError::TooFewAgents(positions.len()));
        }
        if velocities.len() != positions.len() {
            return Err(FieldError::LengthMismatch {
                len: velocities.len(),
                n_cells: positions.len(),
            });
        }
        let positions = positions
            .into_iter()
            .map(|p| Self::wrap(dim, p, length))
            .collect();
        Ok(Self {
            dim,
            length,
            positions,
            velocities,
        })
    }

    fn wrap(dim: usize, p: [f64; 2], length: f64) -> [f64; 2] {
        match dim {
            1 => [wrap_point(p[0], length), 0.0],
            _ => [wrap_point(p[0], length), wrap_point(p[1], length)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn velocities(&self) -> &[[f64; 2]] {
        &self.velocities
    }

    /// Rebuild from raw state, wrapping positions back onto the torus.
    pub fn with_state(&self, positions: Vec<[f64; 2]>, velocities: Vec<[f64; 2]>) -> Self {
        let positions = positions
            .into_iter()
            .map(|p| Self::wrap(self.dim, p, self.length))
            .collect();
        Self {
            dim: self.dim,
            length: self.length,
            positions,
            velocities,
        }
    }

    /// Mean velocity (the conserved momentum per agent).
    pub fn mean_velocity(&self) -> [f64; 2] {
        let n = self.len() as f64;
        let mut s = [0.0, 0.0];
        for v in &self.velocities {
            s[0] += v[0];
            s[1] += v[1];
        }
        [s[0] / n, s[1] / n]
    }

    /// Componentwise (min, max) of the velocities.
    pub fn velocity_hull(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.velocities {
            for d in 0..2 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        (lo, hi)
    }

    /// Largest componentwise velocity spread.
    pub fn velocity_diameter(&self) -> f64 {
        let (lo, hi) = self.velocity_hull();
        (0..self.dim).map(|d| hi[d] - lo[d]).fold(0.0, f64::max)
    }
}

/// Initial-data families for the hydrodynamic solver.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Uniform {
        rho_bar: f64,
        u_bar: f64,
    },
    /// rho = rho_bar * (1 + a sin(k x)), u = b sin(m x + phi0).
    PerturbedSine {
        rho_bar: f64,
        a: f64,
        k: u32,
        b: f64,
        m: u32,
        phi0: f64,
    },
    /// Two von Mises-shaped bumps on a flat background.
    TwoBump {
        rho_bar: f64,
        a: f64,
        kappa: f64,
        c1: f64,
        c2: f64,
        b: f64,
        m: u32,
        phi0: f64,
    },
    CustomSamples {
        rho: Vec<f64>,
        u: Vec<f64>,
    },
}

/// Sample the requested initial data on the grid. Fails with
/// `NonPositiveDensity` whenever any cell average comes out <= 0.
pub fn build_initial_data(
    kind: &InitialData,
    grid: Grid1D,
) -> Result<(DensityField, VelocityField), FieldError> {
    let scale = DEFAULT_TORUS_LENGTH / grid.length();
    let (rho, u): (Vec<f64>, Vec<f64>) = match kind {
        InitialData::Uniform { rho_bar, u_bar } => (
            vec![*rho_bar; grid.n_cells()],
            vec![*u_bar; grid.n_cells()],
        ),
        InitialData::PerturbedSine {
            rho_bar,
            a,
            k,
            b,
            m,
            phi0,
        } => {
            let rho = grid
                .nodes()
                .map(|x| rho_bar * (1.0 + a * (*k as f64 * x * scale).sin()))
                .collect();
            let u = grid
                .nodes()
                .map(|x| b * (*m as f64 * x * scale + phi0).sin())
                .collect();
            (rho, u)
        }
        InitialData::TwoBump {
            rho_bar,
            a,
            kappa,
            c1,
            c2,
            b,
            m,
            phi0,
        } => {
            let bump = |x: f64, c: f64| (kappa * ((scale * (x - c)).cos() - 1.0)).exp();
            let rho = grid
                .nodes()
                .map(|x| rho_bar * (1.0 + a * (bump(x, *c1) + bump(x, *c2))))
                .collect();
            let u = grid
                .nodes()
                .map(|x| b * (*m as f64 * x * scale + phi0).sin())
                .collect();
            (rho, u)
        }
        InitialData::CustomSamples { rho, u } => (rho.clone(), u.clone()),
    };
    let rho = DensityField::new(grid, rho)?;
    let u = VelocityField::new(grid, u)?;
    Ok((rho, u))
}
