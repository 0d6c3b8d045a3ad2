//! Communication regions and topological distances.
//!
//! The region between two points is a solid of revolution around the segment
//! joining them, with a parabolic width profile that pinches to the tips; in
//! 1D it degenerates to the shorter arc. Topological distances are the mass
//! of that region: prefix-sum mass for grid densities, crowd counts for
//! agent swarms.

use crate::fields::{
    min_image, torus_distance, wrap_point, wrap_signed, AgentSwarm, DensityField,
};

/// The communication region between two distinct points: a body of
/// revolution around the chord, with width r (1 - t^2) at normalized axial
/// coordinate t in [-1, 1], where r = |x - y| / 2.
#[derive(Debug, Clone, Copy)]
pub struct CommRegion {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub dim: usize,
    pub length: f64,
    /// Half of the geodesic separation |x - y|.
    pub r: f64,
    /// Unit vector along the minimal image of y - x (zero when x = y).
    pub axis: [f64; 2],
    mid: [f64; 2],
}

impl CommRegion {
    pub fn new(dim: usize, x: [f64; 2], y: [f64; 2], length: f64) -> Self {
        let sep = torus_distance(dim, x, y, length);
        let d = min_image(dim, [y[0] - x[0], y[1] - x[1]], length);
        let (axis, mid) = if sep > 0.0 {
            let axis = [d[0] / sep, d[1] / sep];
            let mid = [
                wrap_point(x[0] + 0.5 * d[0], length),
                wrap_point(x[1] + 0.5 * d[1], length),
            ];
            (axis, mid)
        } else {
            ([0.0, 0.0], x)
        };
        Self {
            x,
            y,
            dim,
            length,
            r: sep / 2.0,
            axis,
            mid,
        }
    }

    /// Membership test, evaluated on the minimal periodic image of `z`
    /// relative to the midpoint. Degenerate regions (x = y) are empty.
    /// Tips lie on the boundary and are excluded by the strict inequality.
    pub fn contains(&self, z: [f64; 2]) -> bool {
        if self.r == 0.0 {
            return false;
        }
        let w = min_image(
            self.dim,
            [z[0] - self.mid[0], z[1] - self.mid[1]],
            self.length,
        );
        let axial = w[0] * self.axis[0] + w[1] * self.axis[1];
        let t = axial / self.r;
        if t.abs() >= 1.0 {
            return false;
        }
        let px = w[0] - axial * self.axis[0];
        let py = w[1] - axial * self.axis[1];
        let perp = (px * px + py * py).sqrt();
        perp < self.r * (1.0 - t * t)
    }
}

/// Does `z` lie inside the communication region between `x` and `y`?
pub fn region_contains(dim: usize, x: [f64; 2], y: [f64; 2], z: [f64; 2], length: f64) -> bool {
    CommRegion::new(dim, x, y, length).contains(z)
}

/// Mass of the shorter geodesic arc between x and y, read from the density's
/// prefix sums with linear interpolation inside cells. Symmetric by
/// construction; exact antipodal pairs take the arc that starts at the
/// smaller wrapped endpoint.
pub fn topo_distance_1d(rho: &DensityField, x: f64, y: f64) -> f64 {
    let length = rho.grid().length();
    let delta = wrap_signed(y - x, length);
    if delta == 0.0 {
        return 0.0;
    }
    let half = length / 2.0;
    if delta.abs() >= half {
        let a = wrap_point(x, length).min(wrap_point(y, length));
        return rho.prefix_unwrapped(a + half) - rho.prefix_unwrapped(a);
    }
    // Canonical arc: start from whichever endpoint reaches the other going
    // in the positive direction, so (x, y) and (y, x) share the arithmetic.
    let (start, span) = if delta > 0.0 {
        (wrap_point(x, length), delta)
    } else {
        (wrap_point(y, length), -delta)
    };
    rho.prefix_unwrapped(start + span) - rho.prefix_unwrapped(start)
}

/// Discrete topological distance between agents i and j:
/// (count of agents inside the closed communication region / N)^{1/dim}.
/// The two tips always count, so the result is at least (2/N)^{1/dim};
/// coincident endpoints fall back to exactly that value.
pub fn topo_distance_discrete(swarm: &AgentSwarm, i: usize, j: usize) -> f64 {
    let n = swarm.len() as f64;
    let dim = swarm.dim();
    let count = region_count(swarm, i, j) as f64;
    (count / n).powf(1.0 / dim as f64)
}

/// Number of agents in the closed communication region between agents i and
/// j, with the tips themselves included. When the pair is coincident the
/// region degenerates to the shared point and every agent sitting exactly
/// there counts.
pub fn region_count(swarm: &AgentSwarm, i: usize, j: usize) -> usize {
    debug_assert_ne!(i, j);
    let length = swarm.length();
    let pos = swarm.positions();
    let (xi, xj) = (pos[i], pos[j]);
    match swarm.dim() {
        1 => {
            let delta = wrap_signed(xj[0] - xi[0], length);
            if delta == 0.0 {
                return pos.iter().filter(|p| p[0] == xi[0]).count();
            }
            let (start, span) = if delta.abs() >= length / 2.0 {
                // Antipodal tie: same convention as the continuum distance.
                (xi[0].min(xj[0]), length / 2.0)
            } else if delta > 0.0 {
                (xi[0], delta)
            } else {
                (xj[0], -delta)
            };
            pos.iter()
                .filter(|p| {
                    let off = (p[0] - start).rem_euclid(length);
                    off <= span
                })
                .count()
        }
        _ => {
            // Canonical endpoint order keeps the count bitwise symmetric
            // under swapping i and j.
            let (a, b) = if (xi[0], xi[1]) <= (xj[0], xj[1]) {
                (xi, xj)
            } else {
                (xj, xi)
            };
            let region = CommRegion::new(2, a, b, length);
            if region.r == 0.0 {
                return pos.iter().filter(|p| **p == xi).count();
            }
            let interior = pos
                .iter()
                .enumerate()
                .filter(|&(k, p)| k != i && k != j && region.contains(*p))
                .count();
            interior + 2
        }
    }
}

/// Mass of the metric ball B(center, radius) under the density, using the
/// same continuous prefix function as the arc distances. `radius` must not
/// exceed length/2; the half-torus ball returns the full mass exactly.
pub fn mass_of_ball(rho: &DensityField, center: f64, radius: f64) -> f64 {
    let length = rho.grid().length();
    debug_assert!(radius > 0.0 && radius <= length / 2.0 + 1e-12);
    if 2.0 * radius >= length {
        return rho.total_mass();
    }
    let c = wrap_point(center, length);
    rho.prefix_unwrapped(c + radius) - rho.prefix_unwrapped(c - radius)
}
