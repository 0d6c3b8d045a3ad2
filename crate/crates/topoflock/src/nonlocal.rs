//! Pointwise principal-value evaluation of the singular alignment operator,
//! its commutator with a weight, the derivative kernel, and the enstrophy
//! density.
//!
//! All sums run over signed grid offsets z = k*dx with 0 < |k| <= K, pairing
//! +k with -k so the principal-value cancellation happens term by term.
//! Inside |z| < r the first-order Taylor term is subtracted and added back
//! through the drift coefficient b_r, the decomposition that makes the
//! strongly singular range 1 <= alpha < 2 well defined. The reorganized sum
//! is algebraically identical to the plain punctured one, so discrete
//! summation-by-parts identities hold to rounding.

use crate::error::OpError;
use crate::fields::DensityField;
use crate::fourier::{DerivativeMethod, SpectralDifferentiator};
use crate::kernels::{pow_tau, KernelFamily, KernelSpec};
use rayon::prelude::*;

/// Which quadrature produced an operator field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    /// Taylor-corrected principal value with correction radius r.
    Corrected { r: f64 },
    /// Plain punctured sum; only admissible for alpha < 1.
    PlainPunctured,
}

/// An operator applied at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorEval {
    pub values: Vec<f64>,
    /// Taylor-correction radius that was used (0 for the plain sum).
    pub drift_used: f64,
    pub quadrature: Quadrature,
}

/// Density-aware kernel sampled on grid offsets, with the geometric factors
/// tabulated once per (grid, spec) pair.
pub struct GridKernel<'a> {
    rho: &'a DensityField,
    spec: &'a KernelSpec,
    max_offset: usize,
    /// h(k dx) for k = 1..=K.
    h_table: Vec<f64>,
    /// (k dx)^{1 + alpha - tau} for k = 1..=K (tau = 0 for geometric).
    rpow_table: Vec<f64>,
    /// Observer-ball masses, only for the Motsch-Tadmor family.
    ball_mass: Vec<f64>,
}

impl<'a> GridKernel<'a> {
    pub fn new(rho: &'a DensityField, spec: &'a KernelSpec) -> Self {
        let grid = rho.grid();
        let dx = grid.dx();
        let support = spec.support_radius();
        let max_offset = ((support / dx).floor() as usize).min(grid.n_cells() / 2);
        let mut h_table = Vec::with_capacity(max_offset);
        let mut rpow_table = Vec::with_capacity(max_offset);
        let expo = 1.0 + spec.alpha - spec.tau;
        for k in 1..=max_offset {
            let r = k as f64 * dx;
            h_table.push(spec.h(r));
            rpow_table.push(r.powf(expo));
        }
        let ball_mass = if spec.family == KernelFamily::MotschTadmor {
            (0..grid.n_cells())
                .map(|i| crate::geometry::mass_of_ball(rho, grid.node(i), spec.r0))
                .collect()
        } else {
            Vec::new()
        };
        Self {
            rho,
            spec,
            max_offset,
            h_table,
            rpow_table,
            ball_mass,
        }
    }

    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    pub fn spec(&self) -> &KernelSpec {
        self.spec
    }

    pub fn rho(&self) -> &DensityField {
        self.rho
    }

    /// Kernel value between node i and node i+k (k != 0), as seen from
    /// observer i.
    pub fn phi(&self, i: usize, k: isize) -> f64 {
        debug_assert_ne!(k, 0);
        let ka = k.unsigned_abs();
        if ka > self.max_offset {
            return 0.0;
        }
        let h = self.h_table[ka - 1];
        if h == 0.0 {
            return 0.0;
        }
        match self.spec.family {
            KernelFamily::Topological => {
                let d = self.rho.arc_mass_nodes(i, k);
                h / (self.rpow_table[ka - 1] * pow_tau(d, self.spec.tau))
            }
            KernelFamily::Geometric => h / self.rpow_table[ka - 1],
            KernelFamily::MotschTadmor => {
                let dx = self.rho.grid().dx();
                if (ka as f64) * dx < self.spec.r0 {
                    1.0 / self.ball_mass[i]
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative kernel: the tau-family kernel differentiated in its
    /// topological-distance slot, times the density increment. Identically
    /// zero when tau = 0 (no density dependence to differentiate).
    pub fn phi_prime(&self, i: usize, k: isize) -> f64 {
        debug_assert_ne!(k, 0);
        let tau = self.spec.tau;
        if tau == 0.0 || self.spec.family == KernelFamily::MotschTadmor {
            return 0.0;
        }
        let ka = k.unsigned_abs();
        if ka > self.max_offset {
            return 0.0;
        }
        let h = self.h_table[ka - 1];
        if h == 0.0 {
            return 0.0;
        }
        let n = self.rho.grid().n_cells();
        let values = self.rho.values();
        let j = (i as isize + k).rem_euclid(n as isize) as usize;
        let drho = values[j] - values[i];
        let d = self.rho.arc_mass_nodes(i, k);
        -tau * h / (self.rpow_table[ka - 1] * pow_tau(d, tau + 1.0)) * drho * k.signum() as f64
    }

    /// Per-node alignment relaxation rate sum_k phi(i,k) rho(i+k) dx; its
    /// maximum bounds the admissible explicit time step.
    pub fn row_rate(&self, i: usize) -> f64 {
        let n = self.rho.grid().n_cells();
        let dx = self.rho.grid().dx();
        let values = self.rho.values();
        let mut acc = 0.0;
        for k in 1..=self.max_offset {
            let jp = (i + k) % n;
            let jm = (i + n - k % n) % n;
            acc += self.phi(i, k as isize) * values[jp] + self.phi(i, -(k as isize)) * values[jm];
        }
        acc * dx
    }

    pub fn max_row_rate(&self) -> f64 {
        let n = self.rho.grid().n_cells();
        (0..n)
            .into_par_iter()
            .map(|i| self.row_rate(i))
            .reduce(|| 0.0, f64::max)
    }
}

#[derive(Clone, Copy)]
enum KernelSide {
    Phi,
    PhiPrime,
}

fn kernel_value(gk: &GridKernel, side: KernelSide, i: usize, k: isize) -> f64 {
    match side {
        KernelSide::Phi => gk.phi(i, k),
        KernelSide::PhiPrime => gk.phi_prime(i, k),
    }
}

/// Default Taylor-correction radius: max(4 dx, r0/8), capped by r0 and
/// rounded to a whole number of cells.
pub fn default_correction_radius(spec: &KernelSpec, dx: f64) -> f64 {
    let raw = (4.0 * dx).max(spec.r0 / 8.0).min(spec.r0);
    let m = (raw / dx).round().max(1.0);
    m * dx
}

fn correction_cells(r: f64, dx: f64, r0: f64) -> Result<usize, OpError> {
    let m = r / dx;
    let rounded = m.round();
    if (m - rounded).abs() > 1e-9 * m.max(1.0) || r < dx * (1.0 - 1e-12) || r > r0 * (1.0 + 1e-12)
    {
        return Err(OpError::RadiusOutOfRange {
            r,
            min: dx,
            max: r0,
        });
    }
    Ok(rounded as usize)
}

struct EvalPlan<'a> {
    f: &'a [f64],
    f_prime: Option<&'a [f64]>,
    /// Multiplies the increment by this field at the far node (the commutator
    /// weight); `None` means the plain operator.
    weight: Option<&'a [f64]>,
    m_cells: usize,
    side: KernelSide,
}

/// Shared inner loop: value at node i plus its drift bookkeeping.
fn eval_at_node(gk: &GridKernel, plan: &EvalPlan, i: usize) -> f64 {
    let n = gk.rho().grid().n_cells();
    let dx = gk.rho().grid().dx();
    let f = plan.f;
    let fi = f[i];
    let fp = plan.f_prime.map(|p| p[i]).unwrap_or(0.0);
    let m = plan.m_cells;
    let mut acc = 0.0;
    let mut drift = 0.0;
    for k in 1..=gk.max_offset() {
        let jp = (i + k) % n;
        let jm = (i + n - k % n) % n;
        let phi_p = kernel_value(gk, plan.side, i, k as isize);
        let phi_m = kernel_value(gk, plan.side, i, -(k as isize));
        let z = k as f64 * dx;
        let (mut dp, mut dm) = (f[jp] - fi, f[jm] - fi);
        if k < m {
            dp -= z * fp;
            dm += z * fp;
            match plan.weight {
                None => drift += z * (phi_p - phi_m),
                Some(w) => drift += z * (w[jp] * phi_p - w[jm] * phi_m),
            }
        }
        match plan.weight {
            None => acc += dp * phi_p + dm * phi_m,
            Some(w) => acc += dp * w[jp] * phi_p + dm * w[jm] * phi_m,
        }
    }
    (acc + drift * fp) * dx
}

fn run_eval(gk: &GridKernel, plan: &EvalPlan) -> Vec<f64> {
    let n = gk.rho().grid().n_cells();
    (0..n)
        .into_par_iter()
        .map(|i| eval_at_node(gk, plan, i))
        .collect()
}

fn check_same_grid(f: &[f64], rho: &DensityField) -> Result<(), OpError> {
    if f.len() != rho.grid().n_cells() {
        return Err(OpError::GridMismatch);
    }
    Ok(())
}

/// L_phi f at every node, Taylor-corrected inside |z| < r.
///
/// Uses the provided differentiator for f' so solver loops can reuse plans.
pub fn eval_lphi_with(
    f: &[f64],
    rho: &DensityField,
    spec: &KernelSpec,
    r: f64,
    method: DerivativeMethod,
    diff: &SpectralDifferentiator,
) -> Result<OperatorEval, OpError> {
    check_same_grid(f, rho)?;
    let dx = rho.grid().dx();
    let m = correction_cells(r, dx, spec.r0)?;
    let fp = method.apply(diff, f, dx);
    let gk = GridKernel::new(rho, spec);
    let values = run_eval(
        &gk,
        &EvalPlan {
            f,
            f_prime: Some(&fp),
            weight: None,
            m_cells: m,
            side: KernelSide::Phi,
        },
    );
    Ok(OperatorEval {
        values,
        drift_used: r,
        quadrature: Quadrature::Corrected { r },
    })
}

pub fn eval_lphi(
    f: &[f64],
    rho: &DensityField,
    spec: &KernelSpec,
    r: f64,
    method: DerivativeMethod,
) -> Result<OperatorEval, OpError> {
    let diff = SpectralDifferentiator::new(rho.grid().n_cells(), rho.grid().length());
    eval_lphi_with(f, rho, spec, r, method, &diff)
}

/// Plain punctured sum without Taylor correction; admissible for alpha < 1
/// only, where the integrand is absolutely summable.
pub fn eval_lphi_plain(
    f: &[f64],
    rho: &DensityField,
    spec: &KernelSpec,
) -> Result<OperatorEval, OpError> {
    check_same_grid(f, rho)?;
    if spec.alpha >= 1.0 {
        return Err(OpError::PlainSumTooSingular(spec.alpha));
    }
    let gk = GridKernel::new(rho, spec);
    let values = run_eval(
        &gk,
        &EvalPlan {
            f,
            f_prime: None,
            weight: None,
            m_cells: 0,
            side: KernelSide::Phi,
        },
    );
    Ok(OperatorEval {
        values,
        drift_used: 0.0,
        quadrature: Quadrature::PlainPunctured,
    })
}

/// Commutator C_phi(rho, f): increments of f weighted by the density at the
/// far node, with the residual drift a_r folded into the derivative term.
pub fn eval_commutator_with(
    rho: &DensityField,
    f: &[f64],
    spec: &KernelSpec,
    r: f64,
    method: DerivativeMethod,
    diff: &SpectralDifferentiator,
) -> Result<OperatorEval, OpError> {
    check_same_grid(f, rho)?;
    let dx = rho.grid().dx();
    let m = correction_cells(r, dx, spec.r0)?;
    let fp = method.apply(diff, f, dx);
    let gk = GridKernel::new(rho, spec);
    let values = run_eval(
        &gk,
        &EvalPlan {
            f,
            f_prime: Some(&fp),
            weight: Some(rho.values()),
            m_cells: m,
            side: KernelSide::Phi,
        },
    );
    Ok(OperatorEval {
        values,
        drift_used: r,
        quadrature: Quadrature::Corrected { r },
    })
}

pub fn eval_commutator(
    rho: &DensityField,
    f: &[f64],
    spec: &KernelSpec,
    r: f64,
    method: DerivativeMethod,
) -> Result<OperatorEval, OpError> {
    let diff = SpectralDifferentiator::new(rho.grid().n_cells(), rho.grid().length());
    eval_commutator_with(rho, f, spec, r, method, &diff)
}

/// L applied with the derivative kernel phi' in place of phi; the remainder
/// term in the product rule for (L_phi f)'.
pub fn eval_lphi_prime_kernel(
    f: &[f64],
    rho: &DensityField,
    spec: &KernelSpec,
    r: f64,
    method: DerivativeMethod,
) -> Result<OperatorEval, OpError> {
    check_same_grid(f, rho)?;
    let dx = rho.grid().dx();
    let m = correction_cells(r, dx, spec.r0)?;
    let diff = SpectralDifferentiator::new(rho.grid().n_cells(), rho.grid().length());
    let fp = method.apply(&diff, f, dx);
    let gk = GridKernel::new(rho, spec);
    let values = run_eval(
        &gk,
        &EvalPlan {
            f,
            f_prime: Some(&fp),
            weight: None,
            m_cells: m,
            side: KernelSide::PhiPrime,
        },
    );
    Ok(OperatorEval {
        values,
        drift_used: r,
        quadrature: Quadrature::Corrected { r },
    })
}

/// Pointwise derivative-kernel value between x and x+z (z = k dx).
pub fn eval_phi_prime_kernel(
    rho: &DensityField,
    spec: &KernelSpec,
    i: usize,
    k: isize,
) -> Result<f64, OpError> {
    if k == 0 {
        return Err(crate::error::KernelError::SingularEvaluation.into());
    }
    let gk = GridKernel::new(rho, spec);
    Ok(gk.phi_prime(i, k))
}

/// Drift coefficient b_r at every node: the +/- paired first moment of the
/// kernel inside the correction radius.
pub fn drift_profile(rho: &DensityField, spec: &KernelSpec, r: f64) -> Result<Vec<f64>, OpError> {
    let dx = rho.grid().dx();
    let m = correction_cells(r, dx, spec.r0)?;
    let gk = GridKernel::new(rho, spec);
    let n = rho.grid().n_cells();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for k in 1..m {
                let z = k as f64 * dx;
                acc += z * (gk.phi(i, k as isize) - gk.phi(i, -(k as isize)));
            }
            acc * dx
        })
        .collect())
}

/// Enstrophy density at node i: the local quadratic dissipation rate of f
/// under the comparison kernel h(z)/|z|^{1+alpha}.
pub fn enstrophy_density(f: &[f64], spec: &KernelSpec, grid: &crate::fields::Grid1D, i: usize) -> f64 {
    let n = grid.n_cells();
    let dx = grid.dx();
    let kmax = ((2.0 * spec.r0 / dx).floor() as usize).min(n / 2);
    let fi = f[i];
    let mut acc = 0.0;
    for k in 1..=kmax {
        let z = k as f64 * dx;
        let h = spec.h(z);
        if h == 0.0 {
            continue;
        }
        let w = h / z.powf(1.0 + spec.alpha);
        let dp = f[(i + k) % n] - fi;
        let dm = f[(i + n - k % n) % n] - fi;
        acc += (dp * dp + dm * dm) * w;
    }
    acc * dx
}

/// Enstrophy density at every node.
pub fn enstrophy_field(f: &[f64], spec: &KernelSpec, grid: &crate::fields::Grid1D) -> Vec<f64> {
    (0..grid.n_cells())
        .into_par_iter()
        .map(|i| enstrophy_density(f, spec, grid, i))
        .collect()
}

/// The symmetric bilinear enstrophy sum_{i,k} phi_ik (f_i - f_j)^2 rho_i
/// rho_j dx^2 (both orderings of every pair), the decay rate of kinetic
/// energy.
pub fn enstrophy_bilinear(rho: &DensityField, f: &[f64], spec: &KernelSpec) -> f64 {
    let gk = GridKernel::new(rho, spec);
    let n = rho.grid().n_cells();
    let dx = rho.grid().dx();
    let values = rho.values();
    // Per-node partial sums reduced serially so the result does not depend
    // on the parallel schedule.
    let per_node: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for k in 1..=gk.max_offset() {
                let jp = (i + k) % n;
                let jm = (i + n - k % n) % n;
                let dp = f[jp] - f[i];
                let dm = f[jm] - f[i];
                acc += gk.phi(i, k as isize) * dp * dp * values[jp]
                    + gk.phi(i, -(k as isize)) * dm * dm * values[jm];
            }
            acc * values[i]
        })
        .collect();
    per_node.iter().sum::<f64>() * dx * dx
}
