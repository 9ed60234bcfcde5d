//! Small dense matrices and rank-3 tensors over `f64`.
//!
//! State and driver dimensions in this crate are tiny (rarely above 4), so a
//! flat row-major `Vec<f64>` with explicit index arithmetic beats pulling in
//! a linear-algebra dependency. Conventions:
//!
//! * vectors are plain slices `&[f64]` and carry the Euclidean norm;
//! * matrices and tensors carry the max-absolute-entry norm ([`Mat::max_abs`]);
//! * a matrix in `R^m (x) R^n` stores entry `(i, j)` at `i * n + j`.

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Identity-shaped matrix: ones on the principal diagonal.
    pub fn eye(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat data length must be rows*cols");
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    /// Outer product `u (x) v` as a `u.len() x v.len()` matrix.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = Mat::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m.data[i * v.len() + j] = ui * vj;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Matrix-vector product `self * v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `self * other` (dimensions must chain).
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j));
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// `self += a * (u (x) v)` without allocating the outer product.
    pub fn add_outer_scaled(&mut self, a: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            let aui = a * ui;
            for (j, &vj) in v.iter().enumerate() {
                self.data[i * self.cols + j] += aui * vj;
            }
        }
    }

    /// Max-absolute-entry norm (the project-wide matrix norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Symmetric part `(A + A^T)/2` (square matrices only).
    pub fn sym(&self) -> Mat {
        assert_eq!(self.rows, self.cols, "sym needs a square matrix");
        let mut out = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, 0.5 * (self.at(i, j) + self.at(j, i)));
            }
        }
        out
    }
}

/// Rank-3 tensor with shape `(d0, d1, d2)`, stored flat with the last index
/// fastest. Used for coefficient derivatives `D sigma` with layout
/// `(i, a, j) -> d sigma_{i a} / d y_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    d0: usize,
    d1: usize,
    d2: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 { d0, d1, d2, data: vec![0.0; d0 * d1 * d2] }
    }

    pub fn from_flat(d0: usize, d1: usize, d2: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), d0 * d1 * d2);
        Tensor3 { d0, d1, d2, data }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.d0, self.d1, self.d2)
    }

    #[inline]
    pub fn at(&self, i: usize, a: usize, j: usize) -> f64 {
        debug_assert!(i < self.d0 && a < self.d1 && j < self.d2);
        self.data[(i * self.d1 + a) * self.d2 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, a: usize, j: usize, v: f64) {
        debug_assert!(i < self.d0 && a < self.d1 && j < self.d2);
        self.data[(i * self.d1 + a) * self.d2 + j] = v;
    }

    /// Max-absolute-entry norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Contract the last two slots against a matrix:
    /// `out_i = sum_{a,j} T_{i a j} m_{j a}`.
    ///
    /// With `T = D sigma` in layout `(i, a, j) -> d sigma_{i a}/d y_j` this
    /// evaluates `D sigma (M)` for a state-by-driver matrix `M` (rows indexed
    /// by the state slot `j`, columns by the driver slot `a`), the shape of
    /// both `sigma X^2` and the local-time cross integral.
    pub fn contract_matrix(&self, m: &Mat) -> Vec<f64> {
        assert_eq!(m.rows(), self.d2, "contract_matrix: state-slot mismatch");
        assert_eq!(m.cols(), self.d1, "contract_matrix: driver-slot mismatch");
        let mut out = vec![0.0; self.d0];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..self.d1 {
                for j in 0..self.d2 {
                    acc += self.at(i, a, j) * m.at(j, a);
                }
            }
            *o = acc;
        }
        out
    }
}

/// Euclidean norm of a vector slice.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean distance between two slices of equal length.
pub fn dist2(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Dot product.
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `u - v` elementwise.
pub fn vsub(u: &[f64], v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

/// `u + a*v` elementwise.
pub fn vadd_scaled(u: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(x, y)| x + a * y).collect()
}

/// Max absolute entry of a vector slice.
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outer_product_entries() {
        let m = Mat::outer(&[1.0, 2.0], &[3.0, 4.0, 5.0]);
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.at(0, 0), 3.0);
        assert_eq!(m.at(1, 2), 10.0);
    }

    #[test]
    fn matvec_and_matmul_agree_with_hand_computation() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[0.0, -1.0]]);
        let v = a.apply(&[3.0, 4.0]);
        assert_eq!(v, vec![11.0, -4.0]);
        let b = Mat::from_rows(&[&[1.0], &[1.0]]);
        let ab = a.matmul(&b);
        assert_eq!(ab.at(0, 0), 3.0);
        assert_eq!(ab.at(1, 0), -1.0);
    }

    #[test]
    fn sym_projects_onto_symmetric_part() {
        let a = Mat::from_rows(&[&[0.0, 2.0], &[0.0, 0.0]]);
        let s = a.sym();
        assert_eq!(s.at(0, 1), 1.0);
        assert_eq!(s.at(1, 0), 1.0);
    }

    #[test]
    fn tensor3_round_trips_entries() {
        let mut t = Tensor3::zeros(2, 3, 2);
        t.set(1, 2, 0, 7.5);
        assert_eq!(t.at(1, 2, 0), 7.5);
        assert_eq!(t.max_abs(), 7.5);
    }

    #[test]
    fn contract_matrix_matches_explicit_triple_loop() {
        let mut t = Tensor3::zeros(2, 3, 2);
        let mut m = Mat::zeros(2, 3);
        for i in 0..2 {
            for a in 0..3 {
                for j in 0..2 {
                    t.set(i, a, j, (1 + i + 2 * a + 5 * j) as f64);
                }
                m.set(i, a, (a as f64) - (i as f64) * 0.5);
            }
        }
        let got = t.contract_matrix(&m);
        for i in 0..2 {
            let mut want = 0.0;
            for a in 0..3 {
                for j in 0..2 {
                    want += t.at(i, a, j) * m.at(j, a);
                }
            }
            assert!((got[i] - want).abs() < 1e-15);
        }
    }
}
