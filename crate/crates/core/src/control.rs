//! Superadditive control functions `omega(s, t)`.
//!
//! A control is a two-parameter function on grid-node pairs with
//! `omega(s, s) = 0`, monotone in the interval, and superadditive:
//! `omega(s, t) + omega(t, u) <= omega(s, u)`. Controls calibrate step
//! sizes (a partition is admissible when consecutive control increments are
//! small) and normalise remainder estimates (`|remainder| <~ omega^{gamma/p}`).
//!
//! Two kinds are provided:
//!
//! * **Holder**: `omega(s, t) = C (t - s)` — exact for drivers with a known
//!   Holder envelope, `O(1)` per evaluation.
//! * **p-variation**: `omega(s, t) = ||x||_{p-var,[s,t]}^p` for a concrete
//!   sampled driver. Each evaluation with left node `i` needs the dynamic
//!   program row from `i`; rows are computed once and cached behind a
//!   mutex, so a shared control stays cheap under the row-heavy access
//!   pattern of partition construction and remainder profiling (and safe to
//!   use from several threads).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::norms::pvar_row;

enum Kind {
    Holder { coeff: f64 },
    PVar { path: GridPath, p: f64, rows: Mutex<HashMap<usize, Arc<Vec<f64>>>> },
}

/// A superadditive control on the node pairs of a fixed grid.
pub struct ControlFunction {
    times: Vec<f64>,
    kind: Kind,
}

impl ControlFunction {
    /// Linear (Holder-type) control `omega(s, t) = coeff * (t - s)`.
    pub fn holder(times: Vec<f64>, coeff: f64) -> Result<Self> {
        if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("control grid must be strictly increasing".into()));
        }
        if !(coeff.is_finite() && coeff >= 0.0) {
            return Err(Error::Parse(format!("Holder coefficient {coeff} must be >= 0")));
        }
        Ok(ControlFunction { times, kind: Kind::Holder { coeff } })
    }

    /// Smallest linear control dominating a sampled driver:
    /// `coeff = max over node pairs of |x_t - x_s|^p / (t - s)`, so that
    /// `|x_t - x_s| <= omega(s,t)^{1/p}` holds on every pair. Quadratic in
    /// the number of nodes.
    pub fn holder_envelope(x: &GridPath, p: f64) -> Result<Self> {
        if !(1.0..).contains(&p) || !p.is_finite() {
            return Err(Error::BadExponent(p));
        }
        let mut coeff = 0.0_f64;
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let incr = crate::tensor::dist2(x.value(i), x.value(j));
                coeff = coeff.max(incr.powf(p) / (x.time(j) - x.time(i)));
            }
        }
        Self::holder(x.times().to_vec(), coeff)
    }

    /// p-variation control of a concrete driver:
    /// `omega(s, t) = ||x||_{p-var,[s,t]}^p`.
    pub fn pvar(x: &GridPath, p: f64) -> Result<Self> {
        if !(1.0..).contains(&p) || !p.is_finite() {
            return Err(Error::BadExponent(p));
        }
        Ok(ControlFunction {
            times: x.times().to_vec(),
            kind: Kind::PVar { path: x.clone(), p, rows: Mutex::new(HashMap::new()) },
        })
    }

    /// Grid the control is defined on.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The variation exponent for p-variation controls, `None` for Holder.
    pub fn exponent(&self) -> Option<f64> {
        match &self.kind {
            Kind::Holder { .. } => None,
            Kind::PVar { p, .. } => Some(*p),
        }
    }

    /// Total control budget `omega(t_first, t_last)`.
    pub fn total(&self) -> f64 {
        self.eval_idx(0, self.times.len() - 1)
    }

    fn node_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * (1.0 + self.times[self.times.len() - 1].abs());
        let pos = self.times.partition_point(|&u| u < t);
        for cand in [pos.saturating_sub(1), pos, pos + 1] {
            if cand < self.times.len() && (self.times[cand] - t).abs() <= tol {
                return Ok(cand);
            }
        }
        Err(Error::OffGrid(t))
    }

    /// Evaluate `omega(s, t)` for grid-node times `s <= t`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        if s > t {
            return Err(Error::BadInterval { s, t });
        }
        let (i, j) = (self.node_index(s)?, self.node_index(t)?);
        Ok(self.eval_idx(i, j))
    }

    /// Evaluate `omega` between node indices `i <= j`.
    pub fn eval_idx(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i <= j && j < self.times.len());
        if i == j {
            return 0.0;
        }
        match &self.kind {
            Kind::Holder { coeff } => coeff * (self.times[j] - self.times[i]),
            Kind::PVar { .. } => self.row(i)[j - i],
        }
    }

    /// The full cached row `k -> omega(t_i, t_{i+k})` for a fixed left node.
    /// Holder rows are synthesised on the fly; p-variation rows are computed
    /// once by the dynamic program and cached.
    pub fn row(&self, i: usize) -> Arc<Vec<f64>> {
        match &self.kind {
            Kind::Holder { coeff } => Arc::new(
                self.times[i..].iter().map(|&t| coeff * (t - self.times[i])).collect(),
            ),
            Kind::PVar { path, p, rows } => {
                let mut cache = rows.lock().expect("control row cache poisoned");
                cache
                    .entry(i)
                    .or_insert_with(|| Arc::new(pvar_row(path, *p, i, path.len() - 1)))
                    .clone()
            }
        }
    }
}

impl Clone for ControlFunction {
    fn clone(&self) -> Self {
        ControlFunction {
            times: self.times.clone(),
            kind: match &self.kind {
                Kind::Holder { coeff } => Kind::Holder { coeff: *coeff },
                Kind::PVar { path, p, .. } => Kind::PVar {
                    path: path.clone(),
                    p: *p,
                    rows: Mutex::new(HashMap::new()),
                },
            },
        }
    }
}

impl std::fmt::Debug for ControlFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            Kind::Holder { coeff } => write!(f, "ControlFunction::Holder(coeff = {coeff})"),
            Kind::PVar { p, .. } => write!(f, "ControlFunction::PVar(p = {p})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zigzag() -> GridPath {
        GridPath::scalar(
            (0..7).map(|k| k as f64 / 6.0).collect(),
            vec![0.0, 1.0, 0.3, 1.4, 0.9, 2.0, 1.1],
        )
        .unwrap()
    }

    #[test]
    fn holder_control_is_linear_in_the_interval() {
        let c = ControlFunction::holder(GridPath::uniform_times(0.0, 1.0, 5), 2.0).unwrap();
        assert!((c.eval(0.25, 0.75).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(c.eval(0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn holder_control_rejects_off_grid_times() {
        let c = ControlFunction::holder(GridPath::uniform_times(0.0, 1.0, 5), 2.0).unwrap();
        assert!(matches!(c.eval(0.1, 0.75), Err(Error::OffGrid(_))));
    }

    #[test]
    fn pvar_control_matches_norm_to_the_pth_power() {
        let x = zigzag();
        let p = 1.5;
        let c = ControlFunction::pvar(&x, p).unwrap();
        for i in 0..x.len() {
            for j in i..x.len() {
                let direct = crate::norms::pvar_norm(&x, p, x.time(i), x.time(j)).unwrap();
                let omega = c.eval_idx(i, j);
                assert!(
                    (omega - direct.powf(p)).abs() <= 1e-12 * (1.0 + omega),
                    "omega({i},{j})"
                );
            }
        }
    }

    #[test]
    fn pvar_control_is_superadditive_on_all_node_triples() {
        let x = zigzag();
        let c = ControlFunction::pvar(&x, 1.5).unwrap();
        for i in 0..x.len() {
            for k in i..x.len() {
                for j in k..x.len() {
                    let lhs = c.eval_idx(i, k) + c.eval_idx(k, j);
                    let rhs = c.eval_idx(i, j);
                    assert!(
                        lhs <= rhs + 1e-12 * (1.0 + rhs),
                        "superadditivity fails at ({i},{k},{j}): {lhs} > {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn holder_envelope_dominates_all_increments() {
        let x = zigzag();
        let p = 1.5;
        let c = ControlFunction::holder_envelope(&x, p).unwrap();
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let incr = (x.at(j, 0) - x.at(i, 0)).abs();
                let omega = c.eval_idx(i, j);
                assert!(incr <= omega.powf(1.0 / p) * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn cached_rows_agree_with_direct_evaluation() {
        let x = zigzag();
        let c = ControlFunction::pvar(&x, 2.0).unwrap();
        let row = c.row(2);
        for j in 2..x.len() {
            assert_eq!(row[j - 2], c.eval_idx(2, j));
        }
    }
}
