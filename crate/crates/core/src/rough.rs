//! Level-2 rough paths on grids.
//!
//! A [`RoughPath`] is a driver `x` together with second-level increments
//!
//! ```text
//!     X^1_{s,t} = x_t - x_s,
//!     X^2_{s,t} = int_s^t X^1_{s,u} (x) dx_u   (n x n tensor),
//! ```
//!
//! stored base-anchored: the struct keeps `A_t = X^2_{0,t}` per node and
//! reconstructs any pair through Chen's identity,
//!
//! ```text
//!     X^2_{s,t} = A_t - A_s - X^1_{0,s} (x) X^1_{s,t},
//! ```
//!
//! so Chen consistency over node triples holds by construction up to
//! round-off for any anchor values; [`chen_defect`] measures exactly that
//! round-off. Corrupted anchors are invisible to it (the anchor terms
//! cancel algebraically) and only show up when pair values are compared
//! against a reference lift.
//!
//! [`lift_piecewise_linear`] is the canonical geometric lift of a sampled
//! path read as its piecewise-linear interpolant: on a linear segment the
//! double integral is exact,
//! `A_{k+1} = A_k + X^1_{0,k} (x) dx_k + dx_k (x) dx_k / 2`.
//!
//! [`dp_distance`] is the inhomogeneous p-variation distance
//!
//! ```text
//!     d_p(X, X') = sup_{s<t} |X^1_{s,t} - X'^1_{s,t}| / (t-s)^{1/p}
//!                + sup_{s<t} |X^2_{s,t} - X'^2_{s,t}| / (t-s)^{2/p}
//! ```
//!
//! over grid pairs (level 1 in the Euclidean norm, level 2 in the
//! max-entry norm). The scaling constant `C(X) = d_p(0,X)^p + d_p(0,X)^{p/2}`
//! turns the distance into a linear control `omega(s,t) = C(X) (t-s)`
//! dominating both levels, which is the certificate attached by
//! [`RoughPath::with_holder_certificate`].

use crate::control::ControlFunction;
use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::tensor::Mat;

/// Supported rough regime for level-2 drivers.
pub fn check_rough_exponent(p: f64) -> Result<()> {
    if !(2.0..3.0).contains(&p) {
        return Err(Error::BadExponent(p));
    }
    Ok(())
}

/// A sampled level-2 rough path.
#[derive(Clone, Debug)]
pub struct RoughPath {
    base: GridPath,
    /// `A_t = X^2_{0,t}`, one `n x n` matrix per node; `A_{t_0} = 0`.
    second: Vec<Mat>,
    p: f64,
    /// Optional linear control certificate dominating both levels.
    certificate: Option<ControlFunction>,
}

impl RoughPath {
    /// Assemble from a base path and base-anchored second-level tensors.
    pub fn new(base: GridPath, second: Vec<Mat>, p: f64) -> Result<Self> {
        check_rough_exponent(p)?;
        if second.len() != base.len() {
            return Err(Error::InvalidGrid(format!(
                "{} second-level tensors for {} nodes",
                second.len(),
                base.len()
            )));
        }
        let n = base.dim();
        if second.iter().any(|m| m.rows() != n || m.cols() != n) {
            return Err(Error::DimensionMismatch(
                "second-level tensors must be n x n for driver dimension n".into(),
            ));
        }
        if second[0].max_abs() != 0.0 {
            return Err(Error::InvalidGrid("second level must vanish at the first node".into()));
        }
        Ok(RoughPath { base, second, p, certificate: None })
    }

    /// Driver dimension `n`.
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn times(&self) -> &[f64] {
        self.base.times()
    }

    /// The first-level path `t -> x_t`.
    pub fn base(&self) -> &GridPath {
        &self.base
    }

    /// Base-anchored second level `A_t = X^2_{0,t}` at node `i`.
    pub fn anchor(&self, i: usize) -> &Mat {
        &self.second[i]
    }

    pub fn certificate(&self) -> Option<&ControlFunction> {
        self.certificate.as_ref()
    }

    /// First-level increment `X^1_{s,t}` between nodes.
    pub fn x1(&self, i: usize, j: usize) -> Vec<f64> {
        self.base.increment(i, j)
    }

    /// Second-level increment `X^2_{s,t}` between nodes, reconstructed via
    /// Chen's identity from the base-anchored storage.
    pub fn x2(&self, i: usize, j: usize) -> Mat {
        let n = self.dim();
        let mut m = self.second[j].sub(&self.second[i]);
        let x0 = self.base.value(0);
        let xi = self.base.value(i);
        let xj = self.base.value(j);
        for a in 0..n {
            let anchor_a = xi[a] - x0[a];
            for b in 0..n {
                m.add_at(a, b, -anchor_a * (xj[b] - xi[b]));
            }
        }
        m
    }

    /// Typical second-level magnitude, used to scale defect tolerances.
    pub fn scale(&self) -> f64 {
        self.second.iter().fold(0.0_f64, |m, a| m.max(a.max_abs())).max(1e-300)
    }

    /// Restrict to a sub-grid given by strictly increasing node indices.
    /// Pair values on surviving nodes are unchanged (the anchors are
    /// copied, and Chen reconstruction only sees surviving nodes).
    pub fn subsample(&self, indices: &[usize]) -> Result<RoughPath> {
        if indices.len() < 2
            || indices.windows(2).any(|w| w[1] <= w[0])
            || *indices.last().unwrap() >= self.len()
        {
            return Err(Error::InvalidGrid("invalid subsample index set".into()));
        }
        if indices[0] != 0 {
            return Err(Error::InvalidGrid("subsample must retain the first node".into()));
        }
        let times: Vec<f64> = indices.iter().map(|&i| self.base.time(i)).collect();
        let mut data = Vec::with_capacity(indices.len() * self.dim());
        for &i in indices {
            data.extend_from_slice(self.base.value(i));
        }
        let base = GridPath::from_flat(times, self.dim(), data)?;
        let second = indices.iter().map(|&i| self.second[i].clone()).collect();
        RoughPath::new(base, second, self.p)
    }

    /// Attach the linear control certificate `omega(s,t) = C(X) (t-s)` with
    /// `C(X) = d_p(0,X)^p + d_p(0,X)^{p/2}`. Quadratic in the node count.
    pub fn with_holder_certificate(mut self) -> Result<Self> {
        let d0 = dp_to_zero(&self);
        let c = d0.powf(self.p) + d0.powf(self.p / 2.0);
        self.certificate = Some(ControlFunction::holder(self.base.times().to_vec(), c)?);
        Ok(self)
    }

    /// Attach an explicit control certificate (caller asserts domination).
    pub fn with_certificate(mut self, ctrl: ControlFunction) -> Self {
        self.certificate = Some(ctrl);
        self
    }

    /// Largest violation of the certificate domination
    /// `|X^1_{s,t}| <= omega(s,t)^{1/p}`, `|X^2_{s,t}| <= omega(s,t)^{2/p}`
    /// over all node pairs, as a signed excess (negative = satisfied).
    pub fn certificate_excess(&self) -> Result<f64> {
        let ctrl = self
            .certificate
            .as_ref()
            .ok_or_else(|| Error::MissingConstant("no control certificate attached".into()))?;
        let mut excess = f64::NEG_INFINITY;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let omega = ctrl.eval_idx(i, j);
                let l1 = crate::tensor::norm2(&self.x1(i, j)) - omega.powf(1.0 / self.p);
                let l2 = self.x2(i, j).max_abs() - omega.powf(2.0 / self.p);
                excess = excess.max(l1).max(l2);
            }
        }
        Ok(excess)
    }
}

/// Canonical geometric lift of a sampled path read piecewise-linearly.
pub fn lift_piecewise_linear(x: &GridPath, p: f64) -> Result<RoughPath> {
    check_rough_exponent(p)?;
    let n = x.dim();
    let mut second = Vec::with_capacity(x.len());
    let mut acc = Mat::zeros(n, n);
    second.push(acc.clone());
    let x0 = x.value(0).to_vec();
    for k in 1..x.len() {
        let xk = x.value(k - 1);
        let dx = x.increment(k - 1, k);
        for a in 0..n {
            let anchor_a = xk[a] - x0[a];
            for b in 0..n {
                acc.add_at(a, b, anchor_a * dx[b] + 0.5 * dx[a] * dx[b]);
            }
        }
        second.push(acc.clone());
    }
    RoughPath::new(x.clone(), second, p)
}

/// Max-entry norm of the Chen residual
/// `X^2_{s,u} - X^2_{s,t} - X^2_{t,u} - X^1_{s,t} (x) X^1_{t,u}` for grid
/// times `s <= t <= u`.
pub fn chen_defect(x: &RoughPath, s: f64, t: f64, u: f64) -> Result<f64> {
    let (i, j) = x.base().interval_indices(s, t)?;
    let (j2, k) = x.base().interval_indices(t, u)?;
    debug_assert_eq!(j, j2);
    let mut r = x.x2(i, k).sub(&x.x2(i, j)).sub(&x.x2(j, k));
    let a = x.x1(i, j);
    let b = x.x1(j, k);
    r.add_outer_scaled(-1.0, &a, &b);
    Ok(r.max_abs())
}

/// Inhomogeneous p-variation distance between two rough paths on a common
/// grid with a common exponent.
pub fn dp_distance(x: &RoughPath, y: &RoughPath) -> Result<f64> {
    if (x.p - y.p).abs() > 1e-12 {
        return Err(Error::BadExponent(y.p));
    }
    if !x.base().same_grid(y.base()) || x.dim() != y.dim() {
        return Err(Error::GridMismatch);
    }
    let n = x.dim();
    let nodes = x.len();
    let times = x.base().times();
    let pows = lag_pow_tables(times, x.p);
    let (x0x, x0y) = (x.base().value(0), y.base().value(0));
    let mut sup1 = 0.0_f64;
    let mut sup2 = 0.0_f64;
    for i in 0..nodes {
        let (xi, yi) = (x.base().value(i), y.base().value(i));
        let (ax_i, ay_i) = (&x.second[i], &y.second[i]);
        for j in (i + 1)..nodes {
            let (xj, yj) = (x.base().value(j), y.base().value(j));
            let (ax_j, ay_j) = (&x.second[j], &y.second[j]);
            let (p1, p2) = pows.eval(times, i, j);
            // level 1: Euclidean norm of the increment difference
            let mut s1 = 0.0;
            for c in 0..n {
                let d = (xj[c] - xi[c]) - (yj[c] - yi[c]);
                s1 += d * d;
            }
            sup1 = sup1.max(s1.sqrt() / p1);
            // level 2: max-entry norm of the difference of Chen pairs
            let mut s2 = 0.0_f64;
            for a in 0..n {
                let anch_x = xi[a] - x0x[a];
                let anch_y = yi[a] - x0y[a];
                for b in 0..n {
                    let vx = ax_j.at(a, b) - ax_i.at(a, b) - anch_x * (xj[b] - xi[b]);
                    let vy = ay_j.at(a, b) - ay_i.at(a, b) - anch_y * (yj[b] - yi[b]);
                    s2 = s2.max((vx - vy).abs());
                }
            }
            sup2 = sup2.max(s2 / p2);
        }
    }
    Ok(sup1 + sup2)
}

/// `d_p(0, X)`: the distance to the zero rough path, computed without
/// materialising the zero path.
pub fn dp_to_zero(x: &RoughPath) -> f64 {
    let n = x.dim();
    let nodes = x.len();
    let times = x.base().times();
    let pows = lag_pow_tables(times, x.p);
    let x0 = x.base().value(0);
    let mut sup1 = 0.0_f64;
    let mut sup2 = 0.0_f64;
    for i in 0..nodes {
        let xi = x.base().value(i);
        let ai = &x.second[i];
        for j in (i + 1)..nodes {
            let xj = x.base().value(j);
            let aj = &x.second[j];
            let (p1, p2) = pows.eval(times, i, j);
            let mut s1 = 0.0;
            for c in 0..n {
                let d = xj[c] - xi[c];
                s1 += d * d;
            }
            sup1 = sup1.max(s1.sqrt() / p1);
            let mut s2 = 0.0_f64;
            for a in 0..n {
                let anch = xi[a] - x0[a];
                for b in 0..n {
                    let v = aj.at(a, b) - ai.at(a, b) - anch * (xj[b] - xi[b]);
                    s2 = s2.max(v.abs());
                }
            }
            sup2 = sup2.max(s2 / p2);
        }
    }
    sup1 + sup2
}

/// Scaling constant `C(X) = d_p(0,X)^p + d_p(0,X)^{p/2}` of the linear
/// control dominating both levels.
pub fn holder_scaling_constant(x: &RoughPath) -> f64 {
    let d0 = dp_to_zero(x);
    d0.powf(x.p) + d0.powf(x.p / 2.0)
}

/// Precomputed `(t-s)^{1/p}` and `(t-s)^{2/p}` tables. Uniform grids get a
/// by-lag table (one `powf` per lag instead of per pair); non-uniform grids
/// fall back to direct evaluation.
enum LagPows {
    ByLag { l1: Vec<f64>, l2: Vec<f64> },
    Direct { inv_p: f64 },
}

fn lag_pow_tables(times: &[f64], p: f64) -> LagPows {
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / ((n - 1) as f64);
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12 * (1.0 + dt.abs()));
    if uniform {
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for lag in 1..n {
            let span = dt * lag as f64;
            l1[lag] = span.powf(1.0 / p);
            l2[lag] = span.powf(2.0 / p);
        }
        LagPows::ByLag { l1, l2 }
    } else {
        LagPows::Direct { inv_p: 1.0 / p }
    }
}

impl LagPows {
    #[inline]
    fn eval(&self, times: &[f64], i: usize, j: usize) -> (f64, f64) {
        match self {
            LagPows::ByLag { l1, l2 } => (l1[j - i], l2[j - i]),
            LagPows::Direct { inv_p } => {
                let span = times[j] - times[i];
                let a = span.powf(*inv_p);
                (a, a * a)
            }
        }
    }
}
