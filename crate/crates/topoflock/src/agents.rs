//! The discrete alignment model on T^1 and T^2 with crowd-count kernels.

use crate::error::AgentError;
use crate::fields::{torus_distance, AgentSwarm};
use crate::geometry::topo_distance_discrete;
use crate::kernels::{eval_phi, KernelSpec};
use rayon::prelude::*;

/// Weight put on the pairwise alignment sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightConvention {
    /// 1/N prefactor, matching the large-crowd limit.
    MeanField,
    /// Bare pair sum.
    Raw,
}

impl WeightConvention {
    pub fn name(&self) -> &'static str {
        match self {
            WeightConvention::MeanField => "mean-field",
            WeightConvention::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean-field" => Some(WeightConvention::MeanField),
            "raw" => Some(WeightConvention::Raw),
            _ => None,
        }
    }
}

/// Swarm state at one time.
#[derive(Debug, Clone)]
pub struct SwarmState {
    pub t: f64,
    pub swarm: AgentSwarm,
}

/// Right-hand side of the coupled ODE system, plus the quantities that
/// bound the admissible explicit step.
#[derive(Debug, Clone)]
pub struct SwarmRhs {
    pub dx: Vec<[f64; 2]>,
    pub dv: Vec<[f64; 2]>,
    /// max_i sum_j w_ij, the fastest per-agent relaxation rate.
    pub max_rate: f64,
    /// Closest interacting pair and its separation.
    pub min_pair: (usize, usize, f64),
}

pub struct SwarmSolver {
    spec: KernelSpec,
    convention: WeightConvention,
    /// Below this separation a pair is reported as stiff when it also breaks
    /// the step-size bound.
    pub r_floor: f64,
}

impl SwarmSolver {
    pub fn new(spec: KernelSpec, convention: WeightConvention, r_floor: f64) -> Self {
        Self {
            spec,
            convention,
            r_floor,
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Pairwise kernel weight between agents i and j, including the
    /// convention prefactor. Coincident pairs use the degenerate-region
    /// fallback distance and a machine-floor separation.
    pub fn pair_weight(&self, swarm: &AgentSwarm, i: usize, j: usize) -> f64 {
        let dim = swarm.dim();
        let n = swarm.len() as f64;
        let r = torus_distance(dim, swarm.positions()[i], swarm.positions()[j], swarm.length());
        if r >= self.spec.support_radius() {
            return 0.0;
        }
        let d = if r == 0.0 {
            (2.0 / n).powf(1.0 / dim as f64)
        } else {
            topo_distance_discrete(swarm, i, j)
        };
        let r_eval = r.max(1e-12);
        let phi = eval_phi(&self.spec, dim, r_eval, d).expect("r clamped above zero");
        match self.convention {
            WeightConvention::MeanField => phi / n,
            WeightConvention::Raw => phi,
        }
    }

    /// dx_i/dt = v_i; dv_i/dt = sum_j w_ij (v_j - v_i).
    pub fn rhs(&self, swarm: &AgentSwarm) -> SwarmRhs {
        let n = swarm.len();
        let v = swarm.velocities();
        let per_agent: Vec<([f64; 2], f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = [0.0, 0.0];
                let mut rate = 0.0;
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let w = self.pair_weight(swarm, i, j);
                    if w == 0.0 {
                        continue;
                    }
                    acc[0] += w * (v[j][0] - v[i][0]);
                    acc[1] += w * (v[j][1] - v[i][1]);
                    rate += w;
                }
                (acc, rate)
            })
            .collect();
        let mut min_pair = (0usize, 0usize, f64::INFINITY);
        for i in 0..n {
            for j in (i + 1)..n {
                let r = torus_distance(
                    swarm.dim(),
                    swarm.positions()[i],
                    swarm.positions()[j],
                    swarm.length(),
                );
                if r < min_pair.2 {
                    min_pair = (i, j, r);
                }
            }
        }
        SwarmRhs {
            dx: v.to_vec(),
            dv: per_agent.iter().map(|(a, _)| *a).collect(),
            max_rate: per_agent.iter().map(|(_, r)| *r).fold(0.0, f64::max),
            min_pair,
        }
    }

    /// One classical RK4 step. Rejected (for the caller to halve dt) when
    /// the fastest relaxation rate breaks dt * rate <= 1, naming the closest
    /// pair, or when the velocity hull expands beyond slack.
    pub fn step(&self, state: &SwarmState, dt: f64) -> Result<SwarmState, AgentError> {
        let s = &state.swarm;
        let k1 = self.rhs(s);
        if dt * k1.max_rate > 1.0 {
            let (i, j, r) = k1.min_pair;
            return Err(AgentError::StiffPairDetected { i, j, r, dt });
        }
        let k2 = self.rhs(&advanced(s, &k1, 0.5 * dt));
        let k3 = self.rhs(&advanced(s, &k2, 0.5 * dt));
        let k4 = self.rhs(&advanced(s, &k3, dt));
        let n = s.len();
        let mut pos = Vec::with_capacity(n);
        let mut vel = Vec::with_capacity(n);
        for i in 0..n {
            let p = s.positions()[i];
            let v = s.velocities()[i];
            let c = dt / 6.0;
            pos.push([
                p[0] + c * (k1.dx[i][0] + 2.0 * k2.dx[i][0] + 2.0 * k3.dx[i][0] + k4.dx[i][0]),
                p[1] + c * (k1.dx[i][1] + 2.0 * k2.dx[i][1] + 2.0 * k3.dx[i][1] + k4.dx[i][1]),
            ]);
            vel.push([
                v[0] + c * (k1.dv[i][0] + 2.0 * k2.dv[i][0] + 2.0 * k3.dv[i][0] + k4.dv[i][0]),
                v[1] + c * (k1.dv[i][1] + 2.0 * k2.dv[i][1] + 2.0 * k3.dv[i][1] + k4.dv[i][1]),
            ]);
        }
        let next = s.with_state(pos, vel);
        let (lo0, hi0) = s.velocity_hull();
        let (lo1, hi1) = next.velocity_hull();
        let slack = 1e-9 * (1.0 + s.velocity_diameter());
        for d in 0..s.dim() {
            if hi1[d] > hi0[d] + slack || lo1[d] < lo0[d] - slack {
                return Err(AgentError::HullViolation { dt });
            }
        }
        Ok(SwarmState {
            t: state.t + dt,
            swarm: next,
        })
    }

    /// Step with automatic halving on stiffness or hull rejection.
    /// Returns the accepted state, the dt actually used, and how many times
    /// the step was halved.
    pub fn step_adaptive(
        &self,
        state: &SwarmState,
        dt: f64,
        max_halvings: u32,
    ) -> Result<(SwarmState, f64, u32), AgentError> {
        let mut attempt = dt;
        let mut halvings = 0;
        loop {
            match self.step(state, attempt) {
                Ok(next) => return Ok((next, attempt, halvings)),
                Err(e) if halvings < max_halvings => {
                    let _ = e;
                    attempt *= 0.5;
                    halvings += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

fn advanced(s: &AgentSwarm, k: &SwarmRhs, dt: f64) -> AgentSwarm {
    let n = s.len();
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for i in 0..n {
        let p = s.positions()[i];
        let v = s.velocities()[i];
        pos.push([p[0] + dt * k.dx[i][0], p[1] + dt * k.dx[i][1]]);
        vel.push([v[0] + dt * k.dv[i][0], v[1] + dt * k.dv[i][1]]);
    }
    s.with_state(pos, vel)
}

/// Communication graph induced by the kernel: edges where the pairwise
/// weight exceeds the threshold.
#[derive(Debug, Clone)]
pub struct ConnectivityReport {
    pub edges: Vec<(usize, usize)>,
    pub component_of: Vec<usize>,
    pub n_components: usize,
}

/// Build the adjacency structure and count connected components with a
/// union-find.
pub fn connectivity_graph(
    solver: &SwarmSolver,
    swarm: &AgentSwarm,
    threshold: f64,
) -> ConnectivityReport {
    let n = swarm.len();
    let mut edges = Vec::new();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let w = solver.pair_weight(swarm, i, j);
            if w > threshold {
                edges.push((i, j));
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut component_of = vec![0usize; n];
    let mut labels: Vec<usize> = Vec::new();
    for (i, slot) in component_of.iter_mut().enumerate() {
        let root = find(&mut parent, i);
        let label = match labels.iter().position(|&l| l == root) {
            Some(idx) => idx,
            None => {
                labels.push(root);
                labels.len() - 1
            }
        };
        *slot = label;
    }
    ConnectivityReport {
        edges,
        component_of,
        n_components: labels.len(),
    }
}
