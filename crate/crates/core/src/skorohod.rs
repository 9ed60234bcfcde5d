//! Discrete Skorohod problems: reflect a driving path at the boundary of a
//! catalogue domain.
//!
//! Given a driver `w` (read as `z_t = y_0 + (w_t - w_0)`) and a domain `D`,
//! the solution is a pair `(xi, phi)` with
//!
//! ```text
//!     xi_t = z_t + phi_t,     xi in closure(D),     phi_0 = 0,
//! ```
//!
//! where `phi` is a bounded-variation reflection term that grows only when
//! `xi` sits on the boundary and only along inward normal directions.
//!
//! Two solvers are provided:
//!
//! * [`solve_skorohod`] — uses the **explicit running-max formula** where
//!   one exists (half-space: reflection acts in the normal coordinate as
//!   `phi_t = max(0, sup_{s<=t}(c - <z_s, n>))`; orthant: the same formula
//!   componentwise) and falls back to the projection recursion otherwise.
//! * [`solve_skorohod_projection`] — the **projection recursion**
//!   `xi_{k+1} = Proj(xi_k + dz_k)`, `dphi_k = xi_{k+1} - xi_k - dz_k`,
//!   valid for every convex catalogue shape. On half-spaces and orthants
//!   the two coincide exactly in exact arithmetic (the projection recursion
//!   telescopes into the running max), which is the cross-validation the
//!   acceptance suite leans on.
//!
//! [`local_time_bound`] evaluates the a priori bound on the total variation
//! of `phi` over a window in terms of the window sup-oscillation `a`, a
//! control value `omega`, and the domain constants `(r0, beta, delta)`:
//!
//! ```text
//!     G(a) = 4 {1 + beta e^{beta (2 delta + a) / (2 r0)}}
//!                e^{beta (2 delta + a) / (2 r0)},
//!     ||phi||_{[s,t]} <= beta ({G(a)/delta + 1}^p omega + 1)(G(a) + 2) a.
//! ```
//!
//! For shapes with `r0 = infinity` the exponentials collapse to 1 and
//! `G = 4 (1 + beta)`.

use crate::brownian::GaussianStream;
use crate::domain::{cone_alignment_deficit, Domain, DomainConstants};
use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::norms::{sup_norm_idx, tv_prefix};
use crate::tensor::{dot, norm2};

/// Result of a discrete Skorohod solve.
#[derive(Clone, Debug)]
pub struct SkorohodSolution {
    /// Reflected path, in the closed domain at every node.
    pub xi: GridPath,
    /// Cumulative reflection term, `phi_0 = 0`.
    pub phi: GridPath,
    /// Cumulative one-variation of `phi`: `phi_tv[j] - phi_tv[i]` is the
    /// local-time mass `||phi||_{[t_i, t_j]}`.
    pub phi_tv: Vec<f64>,
}

impl SkorohodSolution {
    /// Local-time mass `||phi||_{[s,t]}` between grid times.
    pub fn local_time(&self, s: f64, t: f64) -> Result<f64> {
        let (i, j) = self.phi.interval_indices(s, t)?;
        Ok(self.phi_tv[j] - self.phi_tv[i])
    }
}

fn validate_start(w: &GridPath, domain: &Domain, y0: &[f64]) -> Result<()> {
    if w.dim() != domain.dim() || y0.len() != domain.dim() {
        return Err(Error::DimensionMismatch(format!(
            "driver dim {}, domain dim {}, start dim {}",
            w.dim(),
            domain.dim(),
            y0.len()
        )));
    }
    let scale = 1.0 + norm2(y0);
    if !domain.contains(y0, 1e-12 * scale) {
        return Err(Error::StartOutsideDomain);
    }
    Ok(())
}

/// Shifted driver `z_t = y0 + (w_t - w_0)` as per-node values.
fn shifted_driver(w: &GridPath, y0: &[f64]) -> Vec<Vec<f64>> {
    let w0 = w.value(0).to_vec();
    (0..w.len())
        .map(|k| {
            w.value(k)
                .iter()
                .zip(&w0)
                .zip(y0)
                .map(|((wt, w0), y)| y + wt - w0)
                .collect()
        })
        .collect()
}

fn pack_solution(times: &[f64], dim: usize, xi: Vec<Vec<f64>>, phi: Vec<Vec<f64>>) -> Result<SkorohodSolution> {
    let xi = GridPath::new(times.to_vec(), xi)?;
    let phi = GridPath::new(times.to_vec(), phi)?;
    let _ = dim;
    let phi_tv = tv_prefix(&phi);
    Ok(SkorohodSolution { xi, phi, phi_tv })
}

/// Solve the Skorohod problem with the explicit formula where available
/// (half-space, orthant), otherwise by projection recursion.
pub fn solve_skorohod(w: &GridPath, domain: &Domain, y0: &[f64]) -> Result<SkorohodSolution> {
    validate_start(w, domain, y0)?;
    match domain {
        Domain::HalfSpace { normal, offset } => {
            let z = shifted_driver(w, y0);
            let mut running = 0.0_f64; // max(0, sup(c - <z,n>)) so far
            let mut xi = Vec::with_capacity(w.len());
            let mut phi = Vec::with_capacity(w.len());
            for zk in &z {
                running = running.max(offset - dot(normal, zk));
                let m = running.max(0.0);
                xi.push(zk.iter().zip(normal).map(|(v, n)| v + m * n).collect());
                phi.push(normal.iter().map(|n| m * n).collect());
            }
            pack_solution(w.times(), w.dim(), xi, phi)
        }
        Domain::Orthant { dim } => {
            let z = shifted_driver(w, y0);
            let mut running = vec![0.0_f64; *dim];
            let mut xi = Vec::with_capacity(w.len());
            let mut phi = Vec::with_capacity(w.len());
            for zk in &z {
                let mut xr = Vec::with_capacity(*dim);
                let mut pr = Vec::with_capacity(*dim);
                for i in 0..*dim {
                    running[i] = running[i].max(-zk[i]);
                    let m = running[i].max(0.0);
                    xr.push(zk[i] + m);
                    pr.push(m);
                }
                xi.push(xr);
                phi.push(pr);
            }
            pack_solution(w.times(), w.dim(), xi, phi)
        }
        Domain::Ball { .. } | Domain::Polyhedron { .. } => {
            solve_skorohod_projection(w, domain, y0)
        }
    }
}

/// Solve by the projection recursion (any convex catalogue shape).
pub fn solve_skorohod_projection(
    w: &GridPath,
    domain: &Domain,
    y0: &[f64],
) -> Result<SkorohodSolution> {
    validate_start(w, domain, y0)?;
    let z = shifted_driver(w, y0);
    let dim = w.dim();
    let mut xi = Vec::with_capacity(w.len());
    let mut phi = Vec::with_capacity(w.len());
    xi.push(y0.to_vec());
    phi.push(vec![0.0; dim]);
    for k in 1..w.len() {
        let prev_xi = &xi[k - 1];
        let dz: Vec<f64> = z[k].iter().zip(&z[k - 1]).map(|(a, b)| a - b).collect();
        let free: Vec<f64> = prev_xi.iter().zip(&dz).map(|(a, b)| a + b).collect();
        let next = domain.project(&free);
        let dphi: Vec<f64> = next.iter().zip(&free).map(|(a, b)| a - b).collect();
        phi.push(phi[k - 1].iter().zip(&dphi).map(|(a, b)| a + b).collect());
        xi.push(next);
    }
    pack_solution(w.times(), dim, xi, phi)
}

/// Complementarity diagnostics of a discrete solution.
#[derive(Clone, Debug)]
pub struct ComplementarityReport {
    /// Largest `|dphi_k|` on a step whose endpoint clears the boundary by
    /// more than the tolerance (should be ~0: growth only at the boundary).
    pub interior_growth: f64,
    /// Largest alignment deficit of a growth direction against the inward
    /// normal cone at the step endpoint (should be ~0: growth only along
    /// normals).
    pub alignment_deficit: f64,
}

impl ComplementarityReport {
    pub fn max_residual(&self) -> f64 {
        self.interior_growth.max(self.alignment_deficit)
    }
}

/// Boundary-activity tolerance for normal-cone computations.
pub const ACTIVITY_TOL: f64 = 1e-8;

/// Verify complementarity of a solve: the reflection term may only grow at
/// the boundary, along inward normal cone directions. `tol` is the
/// interior-clearance threshold.
pub fn complementarity_residual(
    sol: &SkorohodSolution,
    domain: &Domain,
    tol: f64,
) -> ComplementarityReport {
    let mut interior_growth = 0.0_f64;
    let mut alignment_deficit = 0.0_f64;
    for k in 1..sol.phi.len() {
        let dphi = sol.phi.increment(k - 1, k);
        let mass = norm2(&dphi);
        if mass <= 1e-15 {
            continue;
        }
        let endpoint = sol.xi.value(k);
        if domain.boundary_margin(endpoint) > tol {
            interior_growth = interior_growth.max(mass);
        }
        let generators = domain.active_normals(endpoint, ACTIVITY_TOL);
        alignment_deficit = alignment_deficit.max(cone_alignment_deficit(&dphi, &generators));
    }
    ComplementarityReport { interior_growth, alignment_deficit }
}

/// The boundary-geometry factor `G(a)` of the local-time bound.
pub fn g_factor(constants: &DomainConstants, a: f64) -> f64 {
    let expo = if constants.r0.is_infinite() {
        1.0
    } else {
        (constants.beta * (2.0 * constants.delta + a) / (2.0 * constants.r0)).exp()
    };
    4.0 * (1.0 + constants.beta * expo) * expo
}

/// A priori bound on `||phi||_{[s,t]}` for a driver with sup oscillation
/// `a = ||w||_{inf,[s,t]}` and control value `omega = omega(s,t)`
/// dominating the driver's p-variation on the window.
pub fn local_time_bound(constants: &DomainConstants, a: f64, omega: f64, p: f64) -> f64 {
    let g = g_factor(constants, a);
    constants.beta * ((g / constants.delta + 1.0).powf(p) * omega + 1.0) * (g + 2.0) * a
}

/// Empirical sup-oscillation-to-local-time ratio over seeded
/// Gaussian-increment paths, maximised over a dyadic window family. Used
/// to calibrate (and regression-test) the frozen `C_D` catalogue entries
/// for shapes without a closed-form constant.
pub fn empirical_cd(
    domain: &Domain,
    n_paths: usize,
    nodes: usize,
    seed: u64,
) -> Result<f64> {
    let dim = domain.dim();
    let times = GridPath::uniform_times(0.0, 1.0, nodes);
    let scale = 1.0 / (nodes as f64).sqrt();
    // a start on the boundary keeps reflection active from the first step
    let y0 = match domain {
        Domain::HalfSpace { normal, offset } => normal.iter().map(|n| n * *offset).collect(),
        Domain::Orthant { dim } => vec![0.0; *dim],
        Domain::Ball { center, radius } => {
            let mut p = center.clone();
            p[0] += radius;
            p
        }
        Domain::Polyhedron { .. } => {
            return Err(Error::UnsupportedDomain(
                "empirical C_D calibration needs a canonical boundary start; \
                 pass a polyhedron through the projection solver directly"
                    .into(),
            ));
        }
    };
    let mut worst = 0.0_f64;
    for path_idx in 0..n_paths {
        let mut data = vec![0.0; nodes * dim];
        for c in 0..dim {
            let mut g = GaussianStream::new(seed, (path_idx as u64) << 8 | c as u64);
            let mut acc = 0.0;
            for k in 1..nodes {
                acc += scale * g.next_standard();
                data[k * dim + c] = acc;
            }
        }
        let w = GridPath::from_flat(times.clone(), dim, data)?;
        let sol = solve_skorohod_projection(&w, domain, &y0)?;
        // dyadic windows: levels halve the span, so the whole family costs
        // about one full-pair sweep
        let mut level_len = nodes - 1;
        while level_len >= 4 {
            let mut start = 0;
            while start + level_len < nodes {
                let (i, j) = (start, start + level_len);
                let osc = sup_norm_idx(&w, i, j);
                if osc > 1e-9 {
                    let mass = sol.phi_tv[j] - sol.phi_tv[i];
                    worst = worst.max(mass / osc);
                }
                start += level_len;
            }
            level_len /= 2;
        }
    }
    Ok(worst)
}
