//! Communication-kernel families and the cutoff profile.
//!
//! A kernel value depends only on the geometric separation `r` and a
//! "topological" distance `d` supplied by the caller, so the same spec serves
//! the grid solver (continuum distances) and the agent model (crowd counts).
//! The three families are
//!
//! * topological:   phi = h(r) / (r^{n+alpha-tau} * d^tau)
//! * geometric:     phi = h(r) / r^{n+alpha}           (tau forced to 0)
//! * Motsch-Tadmor: phi = 1_{r<r0} / d, with d the mass of the observer's
//!   own r0-ball rather than a pairwise quantity.

use crate::error::KernelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Topological,
    Geometric,
    MotschTadmor,
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Topological => "topological",
            KernelFamily::Geometric => "geometric",
            KernelFamily::MotschTadmor => "motsch-tadmor",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "topological" => Some(KernelFamily::Topological),
            "geometric" => Some(KernelFamily::Geometric),
            "motsch-tadmor" => Some(KernelFamily::MotschTadmor),
            _ => None,
        }
    }

    /// The pairwise kernel matrix is exactly symmetric for these families.
    /// Motsch-Tadmor normalizes by the observer's own ball mass and is not.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, KernelFamily::MotschTadmor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffShape {
    /// h = 1 on [0, r0], cos^2(pi (r - r0) / (2 r0)) on [r0, 2 r0], 0 beyond.
    SmoothCos2,
    /// h = 1_{r <= r0}.
    Indicator,
}

impl CutoffShape {
    pub fn name(&self) -> &'static str {
        match self {
            CutoffShape::SmoothCos2 => "smooth-cos2",
            CutoffShape::Indicator => "indicator",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "smooth-cos2" => Some(CutoffShape::SmoothCos2),
            "indicator" => Some(CutoffShape::Indicator),
            _ => None,
        }
    }
}

/// Radial cutoff with plateau value 1 on [0, r0] and support in [0, 2 r0].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffProfile {
    pub r0: f64,
    pub shape: CutoffShape,
}

/// Evaluate the cutoff profile; nonincreasing, h(r) = 1 for r <= r0 and
/// h(r) = 0 for r >= 2 r0.
pub fn eval_h(profile: &CutoffProfile, r: f64) -> f64 {
    debug_assert!(r >= 0.0);
    let r0 = profile.r0;
    match profile.shape {
        CutoffShape::SmoothCos2 => {
            if r <= r0 {
                1.0
            } else if r >= 2.0 * r0 {
                0.0
            } else {
                let c = (std::f64::consts::PI * (r - r0) / (2.0 * r0)).cos();
                c * c
            }
        }
        CutoffShape::Indicator => {
            if r <= r0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Full kernel description: family, singularity order alpha in (0,2),
/// topological weight tau >= 0, interaction radius r0, cutoff profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub alpha: f64,
    pub tau: f64,
    pub r0: f64,
    pub cutoff: CutoffProfile,
}

impl KernelSpec {
    /// Validated constructor; `torus_length` provides the r0 < length/4 bound
    /// that keeps the 2 r0 support inside half the torus.
    pub fn new(
        family: KernelFamily,
        alpha: f64,
        tau: f64,
        r0: f64,
        shape: CutoffShape,
        torus_length: f64,
    ) -> Result<Self, KernelError> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(KernelError::AlphaOutOfRange(alpha));
        }
        if !(tau >= 0.0) {
            return Err(KernelError::NegativeTau(tau));
        }
        if !(r0 > 0.0 && r0 <= torus_length / 4.0) {
            return Err(KernelError::RadiusOutOfRange {
                r0,
                length: torus_length,
            });
        }
        let tau = match family {
            KernelFamily::Geometric => 0.0,
            _ => tau,
        };
        Ok(Self {
            family,
            alpha,
            tau,
            r0,
            cutoff: CutoffProfile { r0, shape },
        })
    }

    /// Support radius of the kernel in geometric distance.
    pub fn support_radius(&self) -> f64 {
        match self.family {
            KernelFamily::MotschTadmor => self.r0,
            _ => 2.0 * self.r0,
        }
    }

    pub fn h(&self, r: f64) -> f64 {
        eval_h(&self.cutoff, r)
    }
}

/// Pointwise kernel value in dimension `dim` at geometric separation `r > 0`
/// and topological distance `d` (`d > 0` whenever it enters).
pub fn eval_phi(spec: &KernelSpec, dim: usize, r: f64, d: f64) -> Result<f64, KernelError> {
    if r <= 0.0 {
        return Err(KernelError::SingularEvaluation);
    }
    let n = dim as f64;
    Ok(match spec.family {
        KernelFamily::Topological => {
            let h = spec.h(r);
            if h == 0.0 {
                0.0
            } else {
                h / (r.powf(n + spec.alpha - spec.tau) * pow_tau(d, spec.tau))
            }
        }
        KernelFamily::Geometric => {
            let h = spec.h(r);
            if h == 0.0 {
                0.0
            } else {
                h / r.powf(n + spec.alpha)
            }
        }
        KernelFamily::MotschTadmor => {
            if r < spec.r0 {
                1.0 / d
            } else {
                0.0
            }
        }
    })
}

/// 1D convenience wrapper for `eval_phi`.
pub fn eval_phi_1d(spec: &KernelSpec, r: f64, d: f64) -> Result<f64, KernelError> {
    eval_phi(spec, 1, r, d)
}

#[inline]
pub(crate) fn pow_tau(d: f64, tau: f64) -> f64 {
    // tau = 0 and tau = 1 are the common cases on hot paths.
    if tau == 0.0 {
        1.0
    } else if tau == 1.0 {
        d
    } else {
        d.powf(tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn spec(family: KernelFamily, alpha: f64, tau: f64, r0: f64) -> KernelSpec {
        KernelSpec::new(family, alpha, tau, r0, CutoffShape::SmoothCos2, TAU).unwrap()
    }

    #[test]
    fn cutoff_plateau_support_and_midpoint() {
        let p = CutoffProfile {
            r0: 1.0,
            shape: CutoffShape::SmoothCos2,
        };
        assert_eq!(eval_h(&p, 0.5), 1.0);
        assert_eq!(eval_h(&p, 2.0), 0.0);
        assert!((eval_h(&p, 1.5) - 0.5).abs() < 1e-15);
        // Nonincreasing on a sweep.
        let mut prev = 1.0;
        for i in 0..=200 {
            let h = eval_h(&p, i as f64 * 0.02);
            assert!(h <= prev + 1e-15);
            assert!((0.0..=1.0).contains(&h));
            prev = h;
        }
    }

    #[test]
    fn indicator_cutoff() {
        let p = CutoffProfile {
            r0: 1.0,
            shape: CutoffShape::Indicator,
        };
        assert_eq!(eval_h(&p, 1.0), 1.0);
        assert_eq!(eval_h(&p, 1.0 + 1e-12), 0.0);
    }

    #[test]
    fn phi_direct_values() {
        // topological: tau=1, alpha=1, h=1 near the origin of the plateau.
        let s = spec(KernelFamily::Topological, 1.0, 1.0, 1.0);
        let v = eval_phi_1d(&s, 0.5, 0.5).unwrap();
        assert!((v - 4.0).abs() < 1e-12);

        let g = spec(KernelFamily::Geometric, 1.0, 0.0, 0.5);
        let v = eval_phi_1d(&g, 0.25, 1.0).unwrap();
        assert!((v - 16.0).abs() < 1e-12);
    }

    #[test]
    fn phi_vanishes_outside_support() {
        for family in [
            KernelFamily::Topological,
            KernelFamily::Geometric,
            KernelFamily::MotschTadmor,
        ] {
            let s = spec(family, 1.2, 1.0, 0.7);
            let r = 2.0 * 0.7 + 1e-9;
            assert_eq!(eval_phi_1d(&s, r, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_rejects_zero_separation() {
        let s = spec(KernelFamily::Topological, 1.2, 1.0, 1.0);
        assert_eq!(
            eval_phi_1d(&s, 0.0, 1.0).unwrap_err(),
            KernelError::SingularEvaluation
        );
    }

    #[test]
    fn uniform_density_reduces_topological_to_geometric() {
        // With rho = c the 1D topological distance is d = c r, so
        // phi_topo(r, c r) = phi_geo(r) / c^tau exactly.
        let c = 1.7;
        for tau in [0.5, 1.0, 2.0] {
            let t = spec(KernelFamily::Topological, 1.2, tau, 1.0);
            let g = spec(KernelFamily::Geometric, 1.2, 0.0, 1.0);
            let mut rng = crate::testutil::rng(3);
            for _ in 0..1000 {
                let r = crate::testutil::range(&mut rng, 1e-3, 2.0);
                let vt = eval_phi_1d(&t, r, c * r).unwrap();
                let vg = eval_phi_1d(&g, r, 1.0).unwrap() / c.powf(tau);
                assert!(
                    (vt - vg).abs() <= 1e-12 * vg.abs().max(1e-300),
                    "r={r} tau={tau}"
                );
            }
        }
    }

    #[test]
    fn sandwich_bounds_on_uniform_density() {
        // c1 * 1_{r<r0} / r^{1+a} <= phi <= c2 * 1_{r<2r0} / r^{1+a} with
        // c1, c2 depending only on (c, tau).
        let c: f64 = 0.8;
        let tau = 1.0;
        let alpha = 1.2;
        let s = spec(KernelFamily::Topological, alpha, tau, 1.0);
        let c2 = 1.0 / c.powf(tau);
        let c1 = 1.0 / (2.0f64.powf(tau) * c.powf(tau));
        let mut rng = crate::testutil::rng(17);
        for _ in 0..1000 {
            let r = crate::testutil::range(&mut rng, 1e-4, 2.5);
            let phi = eval_phi_1d(&s, r, c * r).unwrap();
            let envelope = 1.0 / r.powf(1.0 + alpha);
            if r < 1.0 {
                assert!(phi + 1e-14 >= c1 * envelope, "lower bound fails at r={r}");
            }
            if r >= 2.0 {
                assert_eq!(phi, 0.0);
            } else {
                assert!(phi <= c2 * envelope * (1.0 + 1e-12), "upper bound fails at r={r}");
            }
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            KernelSpec::new(KernelFamily::Topological, 2.5, 1.0, 1.0, CutoffShape::SmoothCos2, TAU),
            Err(KernelError::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            KernelSpec::new(KernelFamily::Topological, 1.0, -0.1, 1.0, CutoffShape::SmoothCos2, TAU),
            Err(KernelError::NegativeTau(_))
        ));
        assert!(matches!(
            KernelSpec::new(KernelFamily::Topological, 1.0, 1.0, 2.0, CutoffShape::SmoothCos2, TAU),
            Err(KernelError::RadiusOutOfRange { .. })
        ));
    }
}
