//! Vector-valued paths sampled on a strictly increasing time grid.
//!
//! A [`GridPath`] is the basic data object of the crate: a finite sequence
//! of times `t_0 < t_1 < ... < t_{N-1}` together with a value in `R^d` at
//! each node, stored flat in node-major order. All higher operations
//! (variation norms, integrals, solvers) work on these sampled paths and
//! treat the grid as the ground truth; where a continuous-time reading is
//! needed the path is understood as its piecewise-linear interpolant, and
//! [`GridPath::eval`] implements exactly that convention.
//!
//! Time arguments to interval operations must be grid nodes. Lookup uses a
//! small absolute tolerance (`1e-12 * (1 + |T|)`) so that times produced by
//! arithmetic on the same grid resolve correctly; anything further from a
//! node is rejected with [`Error::OffGrid`].

use crate::error::{Error, Result};

/// A sampled path `t_i -> v_i in R^d` on a strictly increasing grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    times: Vec<f64>,
    /// Node-major flat storage: value of node `i` is `data[i*dim..(i+1)*dim]`.
    data: Vec<f64>,
    dim: usize,
}

impl GridPath {
    /// Build a path from times and per-node values.
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        let dim = values.first().map(|v| v.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(times.len() * dim);
        for v in &values {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(
                    "ragged value rows in path construction".into(),
                ));
            }
            data.extend_from_slice(v);
        }
        Self::from_flat(times, dim, data)
    }

    /// Build a path from times and flat node-major data.
    pub fn from_flat(times: Vec<f64>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid("need at least two grid nodes".into()));
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch("path dimension must be positive".into()));
        }
        if data.len() != times.len() * dim {
            return Err(Error::InvalidGrid(format!(
                "flat data length {} != {} nodes x dim {}",
                data.len(),
                times.len(),
                dim
            )));
        }
        if !times.iter().all(|t| t.is_finite()) || !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite entries".into()));
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidGrid(format!(
                    "times not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(GridPath { times, data, dim })
    }

    /// Scalar path convenience constructor.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::from_flat(times, 1, values)
    }

    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty() // construction guarantees at least two nodes
    }

    /// State dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    /// Value at node `i` as a slice of length `dim`.
    #[inline]
    pub fn value(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Component `c` of the value at node `i`.
    #[inline]
    pub fn at(&self, i: usize, c: usize) -> f64 {
        self.data[i * self.dim + c]
    }

    /// Flat node-major data.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Increment `v_j - v_i` between nodes.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        let (a, b) = (self.value(i), self.value(j));
        a.iter().zip(b).map(|(x, y)| y - x).collect()
    }

    /// Total time span `t_{N-1} - t_0`.
    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Resolve a time to its grid node index, within absolute tolerance
    /// `1e-12 * (1 + |t_last|)`.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-12 * (1.0 + self.times[self.times.len() - 1].abs());
        // binary search for the insertion point, then check both neighbours
        let pos = self
            .times
            .partition_point(|&u| u < t);
        for cand in [pos.saturating_sub(1), pos, pos + 1] {
            if cand < self.times.len() && (self.times[cand] - t).abs() <= tol {
                return Ok(cand);
            }
        }
        Err(Error::OffGrid(t))
    }

    /// Resolve an interval `[s, t]` to node indices, demanding `s <= t`.
    pub fn interval_indices(&self, s: f64, t: f64) -> Result<(usize, usize)> {
        if s > t {
            return Err(Error::BadInterval { s, t });
        }
        Ok((self.node_index(s)?, self.node_index(t)?))
    }

    /// Piecewise-linear evaluation at an arbitrary time inside the span.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let first = self.times[0];
        let last = self.times[self.times.len() - 1];
        if t < first || t > last {
            return Err(Error::BadInterval { s: first, t });
        }
        let pos = self.times.partition_point(|&u| u <= t);
        if pos == 0 {
            return Ok(self.value(0).to_vec());
        }
        if pos == self.times.len() {
            return Ok(self.value(self.times.len() - 1).to_vec());
        }
        let (i, j) = (pos - 1, pos);
        let lambda = (t - self.times[i]) / (self.times[j] - self.times[i]);
        Ok(self
            .value(i)
            .iter()
            .zip(self.value(j))
            .map(|(a, b)| a + lambda * (b - a))
            .collect())
    }

    /// Clone the sub-path on nodes `i0..=i1` (absolute times retained).
    pub fn segment(&self, i0: usize, i1: usize) -> GridPath {
        assert!(i0 < i1 && i1 < self.len(), "segment needs i0 < i1 < len");
        GridPath {
            times: self.times[i0..=i1].to_vec(),
            data: self.data[i0 * self.dim..(i1 + 1) * self.dim].to_vec(),
            dim: self.dim,
        }
    }

    /// True when `other` lives on the same grid (times equal to the node
    /// lookup tolerance).
    pub fn same_grid(&self, other: &GridPath) -> bool {
        self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs()))
    }

    /// Uniform grid of `n` nodes on `[t0, t1]`.
    pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
        assert!(n >= 2 && t1 > t0);
        (0..n)
            .map(|k| t0 + (t1 - t0) * (k as f64) / ((n - 1) as f64))
            .collect()
    }
}
