//! Explicit time integration of the 1D alignment system in conservative
//! (rho, m) variables.
//!
//! Transport uses local Lax-Friedrichs fluxes, so mass conservation is a
//! telescoping identity and momentum conservation reduces to the exact
//! antisymmetry of the alignment source. Time stepping is SSP-RK3 under a
//! combined advective/diffusive stability bound; each Euler stage is a
//! convex update, which carries the velocity maximum principle over to the
//! fully discrete scheme.

use crate::error::{FieldError, HydroError};
use crate::fields::{DensityField, Grid1D, MomentumField, VelocityField};
use crate::fourier::{DerivativeMethod, SpectralDifferentiator};
use crate::kernels::KernelSpec;
use crate::nonlocal::{default_correction_radius, eval_commutator_with, eval_lphi_with, GridKernel};

/// Hydrodynamic state at one time: density and momentum are primary,
/// velocity is derived as u = m / rho.
#[derive(Debug, Clone)]
pub struct HydroState {
    pub t: f64,
    pub rho: DensityField,
    pub m: MomentumField,
}

impl HydroState {
    pub fn new(t: f64, rho: DensityField, m: MomentumField) -> Self {
        debug_assert_eq!(rho.grid(), m.grid());
        Self { t, rho, m }
    }

    pub fn from_primitive(t: f64, rho: DensityField, u: &VelocityField) -> Self {
        let m = MomentumField::from_density_velocity(&rho, u);
        Self { t, rho, m }
    }

    pub fn grid(&self) -> &Grid1D {
        self.rho.grid()
    }

    /// u = m / rho. The density field guarantees positivity, so this cannot
    /// divide by zero; vacuum shows up earlier as a stage failure.
    pub fn velocity(&self) -> VelocityField {
        let vals = self
            .m
            .values()
            .iter()
            .zip(self.rho.values())
            .map(|(&m, &r)| m / r)
            .collect();
        VelocityField::new(*self.grid(), vals).expect("derived velocity")
    }
}

/// The transported first-order quantities derived from one state.
#[derive(Debug, Clone)]
pub struct EQuantity {
    /// e = u_x + L_phi rho.
    pub e: Vec<f64>,
    /// q = e / rho, exactly transported along the flow.
    pub q: Vec<f64>,
    /// q1 = q_x / rho, the next transported ratio.
    pub q1: Vec<f64>,
}

impl EQuantity {
    pub fn q_max(&self) -> f64 {
        self.q.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Hypothesis check for unconditional existence: for alpha < 1 the initial
/// data must satisfy M0 * max|q0| < R0^{1-alpha} / (1-alpha); for
/// alpha >= 1 no condition is needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smallness {
    /// alpha >= 1: no smallness needed.
    Unconditional,
    /// alpha < 1: the ratio M0 * max|q0| * (1-alpha) / R0^{1-alpha};
    /// below 1 means the hypothesis holds.
    Ratio(f64),
}

impl Smallness {
    pub fn ratio(&self) -> f64 {
        match self {
            Smallness::Unconditional => 0.0,
            Smallness::Ratio(r) => *r,
        }
    }

    pub fn holds(&self) -> bool {
        match self {
            Smallness::Unconditional => true,
            Smallness::Ratio(r) => *r < 1.0,
        }
    }
}

/// Solver configuration bound to one grid size.
pub struct HydroSolver {
    spec: KernelSpec,
    method: DerivativeMethod,
    diff: SpectralDifferentiator,
    /// Taylor-correction radius for the singular operators.
    pub r_corr: f64,
    pub cfl: f64,
}

impl HydroSolver {
    pub fn new(
        spec: KernelSpec,
        grid: &Grid1D,
        method: DerivativeMethod,
        cfl: f64,
        r_corr: Option<f64>,
    ) -> Self {
        let r = r_corr.unwrap_or_else(|| default_correction_radius(&spec, grid.dx()));
        Self {
            spec,
            method,
            diff: SpectralDifferentiator::new(grid.n_cells(), grid.length()),
            r_corr: r,
            cfl,
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn method(&self) -> DerivativeMethod {
        self.method
    }

    /// Semi-discrete right-hand side: conservative flux differences plus the
    /// alignment source rho * C_phi(rho, u) in the momentum equation.
    pub fn rhs(&self, state: &HydroState) -> Result<(Vec<f64>, Vec<f64>), HydroError> {
        let grid = state.grid();
        let n = grid.n_cells();
        let dx = grid.dx();
        let rho = state.rho.values();
        let m = state.m.values();
        let u: Vec<f64> = m.iter().zip(rho).map(|(&mi, &ri)| mi / ri).collect();

        // Local Lax-Friedrichs fluxes at interfaces i+1/2.
        let mut flux_rho = vec![0.0; n];
        let mut flux_m = vec![0.0; n];
        for i in 0..n {
            let j = (i + 1) % n;
            let a = u[i].abs().max(u[j].abs());
            flux_rho[i] = 0.5 * (m[i] + m[j]) - 0.5 * a * (rho[j] - rho[i]);
            flux_m[i] = 0.5 * (m[i] * u[i] + m[j] * u[j]) - 0.5 * a * (m[j] - m[i]);
        }

        let c = eval_commutator_with(&state.rho, &u, &self.spec, self.r_corr, self.method, &self.diff)?;

        let mut drho = vec![0.0; n];
        let mut dm = vec![0.0; n];
        for i in 0..n {
            let im = (i + n - 1) % n;
            drho[i] = -(flux_rho[i] - flux_rho[im]) / dx;
            dm[i] = -(flux_m[i] - flux_m[im]) / dx + rho[i] * c.values[i];
        }
        Ok((drho, dm))
    }

    /// Stability bound on dt: cfl * min(advective, alignment-relaxation).
    pub fn stability_bound(&self, state: &HydroState) -> f64 {
        let grid = state.grid();
        let dx = grid.dx();
        let u = state.velocity();
        let umax = u.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        let advective = if umax > 0.0 { dx / umax } else { f64::INFINITY };
        let gk = GridKernel::new(&state.rho, &self.spec);
        let rate = gk.max_row_rate();
        let diffusive = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
        self.cfl * advective.min(diffusive)
    }

    #[allow(clippy::too_many_arguments)]
    fn euler_update(
        &self,
        base_rho: &[f64],
        base_m: &[f64],
        stage: &HydroState,
        dt: f64,
        w_base: f64,
        w_stage: f64,
        t_new: f64,
    ) -> Result<HydroState, HydroError> {
        let (drho, dm) = self.rhs(stage)?;
        let grid = *stage.grid();
        let n = grid.n_cells();
        let mut rho_new = Vec::with_capacity(n);
        let mut m_new = Vec::with_capacity(n);
        for i in 0..n {
            rho_new.push(w_base * base_rho[i] + w_stage * (stage.rho.values()[i] + dt * drho[i]));
            m_new.push(w_base * base_m[i] + w_stage * (stage.m.values()[i] + dt * dm[i]));
        }
        let rho = DensityField::new(grid, rho_new).map_err(|e| match e {
            FieldError::NonPositiveDensity { index, value } => HydroError::PositivityLoss {
                index,
                t: t_new,
                value,
            },
            other => HydroError::Field(other),
        })?;
        let m = MomentumField::new(grid, m_new)?;
        Ok(HydroState::new(t_new, rho, m))
    }

    /// One SSP-RK3 step. Rejects dt beyond the stability bound; fails with
    /// the offending cell if any stage loses density positivity.
    pub fn step(&self, state: &HydroState, dt: f64) -> Result<HydroState, HydroError> {
        let bound = self.stability_bound(state);
        if dt > bound * (1.0 + 1e-9) {
            return Err(HydroError::CflViolation { dt, bound });
        }
        let rho0 = state.rho.values().to_vec();
        let m0 = state.m.values().to_vec();
        let t = state.t;
        let s1 = self.euler_update(&rho0, &m0, state, dt, 0.0, 1.0, t + dt)?;
        let s2 = self.euler_update(&rho0, &m0, &s1, dt, 0.75, 0.25, t + 0.5 * dt)?;
        let s3 = self.euler_update(&rho0, &m0, &s2, dt, 1.0 / 3.0, 2.0 / 3.0, t + dt)?;
        Ok(s3)
    }

    /// Integrate to `t_target` with adaptive dt at the stability bound,
    /// reporting (before, after, dt) on every accepted step.
    pub fn advance(
        &self,
        mut state: HydroState,
        t_target: f64,
        mut on_step: impl FnMut(&HydroState, &HydroState, f64),
    ) -> Result<HydroState, HydroError> {
        while state.t < t_target - 1e-12 {
            let bound = self.stability_bound(&state);
            let dt = bound.min(t_target - state.t);
            let next = self.step(&state, dt)?;
            on_step(&state, &next, dt);
            state = next;
        }
        Ok(state)
    }

    /// The transported quantities e, q, q1 of a state.
    pub fn compute_e(&self, state: &HydroState) -> Result<EQuantity, HydroError> {
        let grid = state.grid();
        let dx = grid.dx();
        let u = state.velocity();
        let ux = self.method.apply(&self.diff, u.values(), dx);
        let lrho = eval_lphi_with(
            state.rho.values(),
            &state.rho,
            &self.spec,
            self.r_corr,
            self.method,
            &self.diff,
        )?;
        let e: Vec<f64> = ux
            .iter()
            .zip(&lrho.values)
            .map(|(&a, &b)| a + b)
            .collect();
        let q: Vec<f64> = e
            .iter()
            .zip(state.rho.values())
            .map(|(&ei, &ri)| ei / ri)
            .collect();
        let qx = self.method.apply(&self.diff, &q, dx);
        let q1 = qx
            .iter()
            .zip(state.rho.values())
            .map(|(&qi, &ri)| qi / ri)
            .collect();
        Ok(EQuantity { e, q, q1 })
    }

    /// Velocity with e = 0: solve u' = -L_phi rho spectrally (the operator
    /// field is mean-zero by kernel antisymmetry, so the antiderivative is
    /// well-posed) and add the requested mean.
    pub fn build_e0_velocity(
        &self,
        rho: &DensityField,
        u_mean: f64,
    ) -> Result<VelocityField, HydroError> {
        let lrho = eval_lphi_with(
            rho.values(),
            rho,
            &self.spec,
            self.r_corr,
            DerivativeMethod::Spectral,
            &self.diff,
        )?;
        let anti = self.diff.antiderivative(&lrho.values);
        let vals = anti.iter().map(|&v| u_mean - v).collect();
        Ok(VelocityField::new(*rho.grid(), vals)?)
    }

    /// Evaluate the smallness hypothesis on a state.
    pub fn check_smallness(&self, state: &HydroState) -> Result<Smallness, HydroError> {
        if self.spec.alpha >= 1.0 {
            return Ok(Smallness::Unconditional);
        }
        let e = self.compute_e(state)?;
        let m0 = state.rho.total_mass();
        let r0 = self.spec.r0;
        let alpha = self.spec.alpha;
        let ratio = m0 * e.q_max() * (1.0 - alpha) / r0.powf(1.0 - alpha);
        Ok(Smallness::Ratio(ratio))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{build_initial_data, InitialData};
    use crate::kernels::{CutoffShape, KernelFamily};
    use std::f64::consts::TAU;

    fn spec(alpha: f64, tau: f64) -> KernelSpec {
        KernelSpec::new(
            KernelFamily::Topological,
            alpha,
            tau,
            std::f64::consts::FRAC_PI_2,
            CutoffShape::SmoothCos2,
            TAU,
        )
        .unwrap()
    }

    fn sine_state(n: usize, a: f64, b: f64) -> HydroState {
        let grid = Grid1D::with_default_length(n).unwrap();
        let (rho, u) = build_initial_data(
            &InitialData::PerturbedSine {
                rho_bar: 1.0,
                a,
                k: 1,
                b,
                m: 1,
                phi0: 0.4,
            },
            grid,
        )
        .unwrap();
        HydroState::from_primitive(0.0, rho, &u)
    }

    fn solver(n: usize, alpha: f64) -> HydroSolver {
        let grid = Grid1D::with_default_length(n).unwrap();
        HydroSolver::new(spec(alpha, 1.0), &grid, DerivativeMethod::Spectral, 0.4, None)
    }

    #[test]
    fn uniform_state_is_a_fixed_point() {
        let grid = Grid1D::with_default_length(64).unwrap();
        let rho = DensityField::new(grid, vec![1.5; 64]).unwrap();
        let u = VelocityField::new(grid, vec![0.7; 64]).unwrap();
        let state = HydroState::from_primitive(0.0, rho, &u);
        let s = solver(64, 1.2);
        let (drho, dm) = s.rhs(&state).unwrap();
        for v in drho.iter().chain(&dm) {
            assert!(v.abs() < 1e-13, "rhs residual {v}");
        }
        // Any admissible dt leaves the state unchanged.
        let next = s.step(&state, s.stability_bound(&state)).unwrap();
        for (a, b) in next.rho.values().iter().zip(state.rho.values()) {
            assert!((a - b).abs() < 1e-13);
        }
        for (a, b) in next.m.values().iter().zip(state.m.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rhs_conserves_mass_and_momentum() {
        let state = sine_state(128, 0.3, 0.5);
        let s = solver(128, 1.2);
        let (drho, dm) = s.rhs(&state).unwrap();
        let dx = state.grid().dx();
        let dmass: f64 = drho.iter().map(|v| v * dx).sum();
        let dmom: f64 = dm.iter().map(|v| v * dx).sum();
        assert!(dmass.abs() < 1e-13, "mass rate {dmass}");
        assert!(dmom.abs() < 1e-12, "momentum rate {dmom}");
    }

    #[test]
    fn velocity_extremes_contract_in_one_step() {
        let state = sine_state(128, 0.3, 0.8);
        let s = solver(128, 1.2);
        let dt = s.stability_bound(&state);
        let next = s.step(&state, dt).unwrap();
        let (u0, u1) = (state.velocity(), next.velocity());
        assert!(u1.max() <= u0.max() + 1e-12);
        assert!(u1.min() >= u0.min() - 1e-12);
        assert!(u1.diameter() <= u0.diameter() + 1e-12);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let state = sine_state(64, 0.3, 0.8);
        let s = solver(64, 1.2);
        let bound = s.stability_bound(&state);
        assert!(matches!(
            s.step(&state, 10.0 * bound),
            Err(HydroError::CflViolation { .. })
        ));
    }

    #[test]
    fn e_quantity_uniform_state_vanishes() {
        let grid = Grid1D::with_default_length(64).unwrap();
        let rho = DensityField::new(grid, vec![2.0; 64]).unwrap();
        let u = VelocityField::new(grid, vec![0.3; 64]).unwrap();
        let state = HydroState::from_primitive(0.0, rho, &u);
        let s = solver(64, 1.2);
        let e = s.compute_e(&state).unwrap();
        for v in &e.e {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn constructed_velocity_zeroes_e() {
        let grid = Grid1D::with_default_length(128).unwrap();
        let (rho, _) = build_initial_data(
            &InitialData::PerturbedSine {
                rho_bar: 1.0,
                a: 0.25,
                k: 1,
                b: 0.0,
                m: 1,
                phi0: 0.0,
            },
            grid,
        )
        .unwrap();
        let s = solver(128, 1.2);
        let u0 = s.build_e0_velocity(&rho, 0.25).unwrap();
        let state = HydroState::from_primitive(0.0, rho, &u0);
        let e = s.compute_e(&state).unwrap();
        let emax = e.e.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(emax < 1e-11, "max |e0| = {emax}");
        let mean: f64 = u0.values().iter().sum::<f64>() / 128.0;
        assert!((mean - 0.25).abs() < 1e-12);
    }

    #[test]
    fn smallness_report() {
        // e0 = 0 construction gives ratio 0.
        let grid = Grid1D::with_default_length(64).unwrap();
        let (rho, _) = build_initial_data(
            &InitialData::PerturbedSine {
                rho_bar: 1.0,
                a: 0.2,
                k: 1,
                b: 0.0,
                m: 1,
                phi0: 0.0,
            },
            grid,
        )
        .unwrap();
        let s = HydroSolver::new(
            KernelSpec::new(
                KernelFamily::Topological,
                0.5,
                1.0,
                std::f64::consts::FRAC_PI_2,
                CutoffShape::SmoothCos2,
                TAU,
            )
            .unwrap(),
            &grid,
            DerivativeMethod::Spectral,
            0.4,
            None,
        );
        let u0 = s.build_e0_velocity(&rho, 0.0).unwrap();
        let state = HydroState::from_primitive(0.0, rho, &u0);
        match s.check_smallness(&state).unwrap() {
            Smallness::Ratio(r) => assert!(r < 1e-9, "ratio {r}"),
            other => panic!("expected a ratio, got {other:?}"),
        }
        // alpha >= 1 is unconditional.
        let s = solver(64, 1.2);
        let st = sine_state(64, 0.2, 0.3);
        assert_eq!(s.check_smallness(&st).unwrap(), Smallness::Unconditional);
    }

    #[test]
    fn smallness_formula_direct_value() {
        // M0 = 2 pi, max|q0| = 0.1, alpha = 0.5, R0 = 1:
        // ratio = 2 pi * 0.1 * 0.5 / 1 = 0.3141...
        let m0 = TAU;
        let qmax: f64 = 0.1;
        let alpha: f64 = 0.5;
        let r0: f64 = 1.0;
        let ratio = m0 * qmax * (1.0 - alpha) / r0.powf(1.0 - alpha);
        assert!((ratio - 0.31415926).abs() < 1e-7);
        assert!(ratio < 1.0);
    }
}
