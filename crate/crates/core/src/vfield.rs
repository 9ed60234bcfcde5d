//! Coefficient fields `sigma: R^d -> R^{d x n}` with first derivatives.
//!
//! A [`VectorField`] packages the coefficient matrix `sigma(y)` (state
//! dimension `d`, driver dimension `n`), its derivative tensor
//! `D sigma(y)` in layout `(i, a, j) -> d sigma_{i a}/d y_j`, and declared
//! sup bounds on `sigma`, `D sigma`, `D^2 sigma`. The solvers only ever
//! evaluate `sigma` and `D sigma`; the declared bounds feed step-size
//! thresholds and reports. Closures must be `Send + Sync` so parameter
//! sweeps can run fields concurrently.
//!
//! Built-in fields cover the test surface: constant and identity (no
//! state coupling), affine (exact derivative, zero curvature), and a
//! bounded trigonometric family (smooth, all derivatives bounded, fully
//! deterministic coefficients).

use crate::error::{Error, Result};
use crate::tensor::{Mat, Tensor3};

type SigmaFn = Box<dyn Fn(&[f64]) -> Mat + Send + Sync>;
type DSigmaFn = Box<dyn Fn(&[f64]) -> Tensor3 + Send + Sync>;

/// Coefficient field with derivative and declared bounds.
pub struct VectorField {
    dim_state: usize,
    dim_driver: usize,
    sigma: SigmaFn,
    dsigma: DSigmaFn,
    sup_bound: f64,
    grad_bound: f64,
    hess_bound: f64,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorField")
            .field("dim_state", &self.dim_state)
            .field("dim_driver", &self.dim_driver)
            .field("sup_bound", &self.sup_bound)
            .field("grad_bound", &self.grad_bound)
            .field("hess_bound", &self.hess_bound)
            .finish()
    }
}

impl VectorField {
    /// Assemble a field from closures. `bounds = (sup, grad, hess)` are the
    /// declared sup-norms of `sigma`, `D sigma`, `D^2 sigma` (max-entry);
    /// they are trusted metadata, spot-checked by [`VectorField::fd_check`]
    /// style sampling in tests, not enforced per call.
    pub fn new(
        dim_state: usize,
        dim_driver: usize,
        sigma: SigmaFn,
        dsigma: DSigmaFn,
        bounds: (f64, f64, f64),
    ) -> Result<Self> {
        if dim_state == 0 || dim_driver == 0 {
            return Err(Error::DimensionMismatch("vector field dimensions must be positive".into()));
        }
        Ok(VectorField {
            dim_state,
            dim_driver,
            sigma,
            dsigma,
            sup_bound: bounds.0,
            grad_bound: bounds.1,
            hess_bound: bounds.2,
        })
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_driver(&self) -> usize {
        self.dim_driver
    }

    /// Evaluate `sigma(y)` (a `d x n` matrix).
    pub fn sigma(&self, y: &[f64]) -> Mat {
        debug_assert_eq!(y.len(), self.dim_state);
        let m = (self.sigma)(y);
        debug_assert_eq!((m.rows(), m.cols()), (self.dim_state, self.dim_driver));
        m
    }

    /// Evaluate `D sigma(y)` (layout `(i, a, j) -> d sigma_{i a}/d y_j`).
    pub fn dsigma(&self, y: &[f64]) -> Tensor3 {
        debug_assert_eq!(y.len(), self.dim_state);
        let t = (self.dsigma)(y);
        debug_assert_eq!(t.dims(), (self.dim_state, self.dim_driver, self.dim_state));
        t
    }

    /// Declared sup bound on `sigma` (max-entry).
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// Declared sup bound on `D sigma`.
    pub fn grad_bound(&self) -> f64 {
        self.grad_bound
    }

    /// Declared sup bound on `D^2 sigma`.
    pub fn hess_bound(&self) -> f64 {
        self.hess_bound
    }

    /// Max-entry gap between `D sigma(y)` and central differences of
    /// `sigma` at step `h`. Used by tests to certify hand-coded
    /// derivatives; `O(h^2)` for smooth fields.
    pub fn fd_check(&self, y: &[f64], h: f64) -> f64 {
        let t = self.dsigma(y);
        let mut worst = 0.0_f64;
        let mut yp = y.to_vec();
        for j in 0..self.dim_state {
            yp[j] = y[j] + h;
            let plus = self.sigma(&yp);
            yp[j] = y[j] - h;
            let minus = self.sigma(&yp);
            yp[j] = y[j];
            for i in 0..self.dim_state {
                for a in 0..self.dim_driver {
                    let fd = (plus.at(i, a) - minus.at(i, a)) / (2.0 * h);
                    worst = worst.max((t.at(i, a, j) - fd).abs());
                }
            }
        }
        worst
    }

    /// Constant field `sigma(y) = m` (zero derivative).
    pub fn constant(m: Mat) -> Result<Self> {
        let (d, n) = (m.rows(), m.cols());
        let sup = m.max_abs();
        let m2 = m.clone();
        VectorField::new(
            d,
            n,
            Box::new(move |_| m.clone()),
            Box::new(move |_| Tensor3::zeros(m2.rows(), m2.cols(), m2.rows())),
            (sup, 0.0, 0.0),
        )
    }

    /// Identity field on `R^d`: additive driving, `sigma = I_d`.
    pub fn identity(d: usize) -> Result<Self> {
        VectorField::constant(Mat::eye(d))
    }

    /// Zero field: no dynamics at all.
    pub fn zero(d: usize, n: usize) -> Result<Self> {
        VectorField::constant(Mat::zeros(d, n))
    }

    /// Affine field `sigma(y)_{i a} = A_{i a} + sum_j B_{i a j} y_j`.
    /// Derivative is exactly `B`; curvature is zero. Declared sup bound is
    /// taken over the ball `|y| <= radius` (affine fields are unbounded
    /// globally; state excursions in the experiments stay modest).
    pub fn affine(a: Mat, b: Tensor3, radius: f64) -> Result<Self> {
        let (d, n) = (a.rows(), a.cols());
        if b.dims() != (d, n, d) {
            return Err(Error::DimensionMismatch(format!(
                "affine field: A is {d}x{n} but B has dims {:?}",
                b.dims()
            )));
        }
        // max-entry of A plus the worst row sum of |B| times the radius
        let mut row_sum = 0.0_f64;
        for i in 0..d {
            for ai in 0..n {
                let s: f64 = (0..d).map(|j| b.at(i, ai, j).abs()).sum();
                row_sum = row_sum.max(s);
            }
        }
        let sup = a.max_abs() + row_sum * radius;
        let grad = b.max_abs();
        let a2 = a.clone();
        let b2 = b.clone();
        VectorField::new(
            d,
            n,
            Box::new(move |y| {
                let mut m = a2.clone();
                for i in 0..m.rows() {
                    for ai in 0..m.cols() {
                        let mut acc = m.at(i, ai);
                        for (j, &yj) in y.iter().enumerate() {
                            acc += b2.at(i, ai, j) * yj;
                        }
                        m.set(i, ai, acc);
                    }
                }
                m
            }),
            Box::new(move |_| b.clone()),
            (sup, grad, 0.0),
        )
    }

    /// Bounded trigonometric family:
    /// `sigma_{i a}(y) = offset + amp * sin(freq * y_{(i + a) mod d} + c_{i a})`
    /// with fixed phases `c_{i a} = 0.7 i + 1.3 a`. Smooth with all
    /// derivatives bounded: `|sigma| <= offset + amp`,
    /// `|D sigma| <= amp * freq`, `|D^2 sigma| <= amp * freq^2`.
    pub fn bounded_sin(d: usize, n: usize, offset: f64, amp: f64, freq: f64) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::DimensionMismatch("bounded_sin dimensions must be positive".into()));
        }
        let phase = move |i: usize, a: usize| 0.7 * i as f64 + 1.3 * a as f64;
        let sigma = Box::new(move |y: &[f64]| {
            let mut m = Mat::zeros(d, n);
            for i in 0..d {
                for a in 0..n {
                    let k = (i + a) % d;
                    m.set(i, a, offset + amp * (freq * y[k] + phase(i, a)).sin());
                }
            }
            m
        });
        let dsigma = Box::new(move |y: &[f64]| {
            let mut t = Tensor3::zeros(d, n, d);
            for i in 0..d {
                for a in 0..n {
                    let k = (i + a) % d;
                    t.set(i, a, k, amp * freq * (freq * y[k] + phase(i, a)).cos());
                }
            }
            t
        });
        VectorField::new(d, n, sigma, dsigma, (offset + amp, amp * freq, amp * freq * freq))
    }
}
