//! Young integration on grids.
//!
//! [`young_integral`] integrates a sampled (possibly matrix-valued)
//! integrand against a sampled driver on a common grid,
//!
//! ```text
//!     F_t = int_0^t f_u dx_u,
//! ```
//!
//! under the Young pairing condition `1/p + 1/q > 1`. The grid sum is the
//! compensated left-point (trapezoidal) rule
//! `sum_j (f_{u_j} + f_{u_{j+1}})/2 * (x_{u_{j+1}} - x_{u_j})`: the
//! half-increment compensation costs nothing and removes the first-order
//! quadrature bias of the plain left-point sum, which matters when refining
//! grids to study the Young-Loeve rate. For an integrand that is itself a
//! path evaluated on the same grid, this is also the symmetric
//! (Stratonovich-consistent) reading used by the integral-gap experiments.
//!
//! The **solvers** in this crate use a different, plain left-point
//! convention for their internal cross integrals `int (Phi_r - Phi_s) (x) dx_r`
//! — that is what makes their per-step remainder bookkeeping vanish
//! identically — and those sums have a one-pass prefix representation
//! exposed here as [`cross_prefix_leftpoint`] / [`cross_from_prefix`]:
//!
//! ```text
//!     S_k = sum_{j<k} Phi_{u_j} (x) (x_{u_{j+1}} - x_{u_j}),
//!     int_{t_i}^{t_k} (Phi_r - Phi_{t_i}) (x) dx_r
//!         = S_k - S_i - Phi_{t_i} (x) (x_{t_k} - x_{t_i}),
//! ```
//!
//! so any pair value is `O(1)` after one linear sweep.

use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::tensor::Mat;

/// Check the Young pairing `1/p + 1/q > 1`, returning the sum.
pub fn young_pairing(p: f64, q: f64) -> Result<f64> {
    if !(1.0..).contains(&p) || !p.is_finite() {
        return Err(Error::BadExponent(p));
    }
    if !(1.0..).contains(&q) || !q.is_finite() {
        return Err(Error::BadExponent(q));
    }
    let s = 1.0 / p + 1.0 / q;
    if s <= 1.0 {
        return Err(Error::RegimeViolation(s));
    }
    Ok(s)
}

/// Cumulative Young integral `t -> int_0^t f dx` on the common grid of `f`
/// and `x`.
///
/// The integrand dimension must be a multiple of the driver dimension:
/// `f` is read row-major as an `m x n` matrix per node (`m = f.dim / n`),
/// and the result is the `m`-dimensional path of partial integrals starting
/// at zero. `p` bounds the variation of the driver, `q` that of the
/// integrand; the pairing `1/p + 1/q > 1` is enforced.
pub fn young_integral(f: &GridPath, x: &GridPath, p: f64, q: f64) -> Result<GridPath> {
    young_pairing(p, q)?;
    if !f.same_grid(x) {
        return Err(Error::GridMismatch);
    }
    let n = x.dim();
    if f.dim() % n != 0 {
        return Err(Error::DimensionMismatch(format!(
            "integrand dim {} is not a multiple of driver dim {}",
            f.dim(),
            n
        )));
    }
    let m = f.dim() / n;
    let nodes = x.len();
    let mut data = vec![0.0; nodes * m];
    let mut acc = vec![0.0; m];
    for k in 1..nodes {
        let fl = f.value(k - 1);
        let fr = f.value(k);
        let dx = x.increment(k - 1, k);
        for i in 0..m {
            let mut s = 0.0;
            for a in 0..n {
                s += 0.5 * (fl[i * n + a] + fr[i * n + a]) * dx[a];
            }
            acc[i] += s;
        }
        data[k * m..(k + 1) * m].copy_from_slice(&acc);
    }
    GridPath::from_flat(x.times().to_vec(), m, data)
}

/// Interval value `int_s^t f dx` read off a cumulative integral path.
pub fn integral_between(cumulative: &GridPath, s: f64, t: f64) -> Result<Vec<f64>> {
    let (i, j) = cumulative.interval_indices(s, t)?;
    Ok(cumulative.increment(i, j))
}

/// Left-point cross-integral prefix `S_k = sum_{j<k} phi_{u_j} (x) dx_j`
/// as `d x n` matrices, one per node of the common grid.
pub fn cross_prefix_leftpoint(phi: &GridPath, x: &GridPath) -> Result<Vec<Mat>> {
    if !phi.same_grid(x) {
        return Err(Error::GridMismatch);
    }
    let mut out = Vec::with_capacity(x.len());
    let mut acc = Mat::zeros(phi.dim(), x.dim());
    out.push(acc.clone());
    for k in 1..x.len() {
        let dx = x.increment(k - 1, k);
        acc.add_outer_scaled(1.0, phi.value(k - 1), &dx);
        out.push(acc.clone());
    }
    Ok(out)
}

/// Pair value `int_{t_i}^{t_j} (phi_r - phi_{t_i}) (x) dx_r` (left-point
/// convention) reconstructed from a prefix computed by
/// [`cross_prefix_leftpoint`].
pub fn cross_from_prefix(
    prefix: &[Mat],
    phi: &GridPath,
    x: &GridPath,
    i: usize,
    j: usize,
) -> Mat {
    debug_assert!(i <= j && j < prefix.len());
    let mut m = prefix[j].sub(&prefix[i]);
    let dx = x.increment(i, j);
    m.add_outer_scaled(-1.0, phi.value(i), &dx);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola(nodes: usize) -> GridPath {
        let times = GridPath::uniform_times(0.0, 1.0, nodes);
        let vals = times.iter().map(|t| t * t).collect();
        GridPath::scalar(times, vals).unwrap()
    }

    #[test]
    fn constant_integrand_is_exact() {
        let x = parabola(17);
        let f = GridPath::scalar(x.times().to_vec(), vec![3.0; 17]).unwrap();
        let cum = young_integral(&f, &x, 1.1, 1.1).unwrap();
        let expect = 3.0 * (x.at(16, 0) - x.at(0, 0));
        assert!((cum.at(16, 0) - expect).abs() < 1e-15);
    }

    #[test]
    fn self_integral_of_smooth_path_matches_antiderivative() {
        // int x dx = (x_T^2 - x_0^2)/2; the trapezoidal sum telescopes to
        // the closed form exactly, so the tolerance is round-off, well
        // inside the 1e-4 one would need at this resolution
        let x = parabola(512);
        let cum = young_integral(&x, &x, 1.1, 1.1).unwrap();
        let expect = 0.5 * (x.at(511, 0).powi(2) - x.at(0, 0).powi(2));
        assert!((cum.at(511, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn integral_is_bilinear() {
        let x = parabola(33);
        let f = GridPath::scalar(
            x.times().to_vec(),
            x.times().iter().map(|t| (3.0 * t).sin()).collect(),
        )
        .unwrap();
        let g = GridPath::scalar(
            x.times().to_vec(),
            x.times().iter().map(|t| (2.0 * t).cos()).collect(),
        )
        .unwrap();
        let comb = GridPath::scalar(
            x.times().to_vec(),
            (0..33).map(|i| 2.0 * f.at(i, 0) - 5.0 * g.at(i, 0)).collect(),
        )
        .unwrap();
        let int_f = young_integral(&f, &x, 1.2, 1.2).unwrap();
        let int_g = young_integral(&g, &x, 1.2, 1.2).unwrap();
        let int_comb = young_integral(&comb, &x, 1.2, 1.2).unwrap();
        for i in 0..33 {
            let expect = 2.0 * int_f.at(i, 0) - 5.0 * int_g.at(i, 0);
            assert!((int_comb.at(i, 0) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn integral_is_additive_over_adjacent_intervals() {
        let x = parabola(65);
        let cum = young_integral(&x, &x, 1.3, 1.3).unwrap();
        let a = integral_between(&cum, 0.0, 0.5).unwrap()[0];
        let b = integral_between(&cum, 0.5, 1.0).unwrap()[0];
        let whole = integral_between(&cum, 0.0, 1.0).unwrap()[0];
        assert!((a + b - whole).abs() < 1e-16);
    }

    #[test]
    fn regime_violation_is_rejected() {
        let x = parabola(9);
        assert!(matches!(
            young_integral(&x, &x, 2.0, 2.0),
            Err(Error::RegimeViolation(_))
        ));
        assert!(matches!(young_pairing(0.5, 1.0), Err(Error::BadExponent(_))));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let x = parabola(9);
        let f = parabola(17);
        assert!(matches!(young_integral(&f, &x, 1.1, 1.1), Err(Error::GridMismatch)));
    }

    #[test]
    fn matrix_valued_integrand_contracts_against_driver() {
        // f per node is the 1x2 matrix (1, t), driver is (t, t^2):
        // int (1, t) d(t, t^2) = int (1 + 2 t^2) dt = T + 2 T^3 / 3
        let times = GridPath::uniform_times(0.0, 1.0, 2049);
        let x = GridPath::new(
            times.clone(),
            times.iter().map(|&t| vec![t, t * t]).collect(),
        )
        .unwrap();
        let f = GridPath::new(
            times.clone(),
            times.iter().map(|&t| vec![1.0, t]).collect(),
        )
        .unwrap();
        let cum = young_integral(&f, &x, 1.1, 1.1).unwrap();
        assert_eq!(cum.dim(), 1);
        let expect = 1.0 + 2.0 / 3.0;
        assert!(
            (cum.at(2048, 0) - expect).abs() < 1e-6,
            "got {}",
            cum.at(2048, 0)
        );
    }

    /// Dyadic refinement study on a rough pair: successive integral values
    /// must be Cauchy, with gaps shrinking at a rate consistent with the
    /// Young-Loeve estimate (geometric in the level).
    #[test]
    fn refinement_values_are_cauchy_on_rough_pair() {
        // lacunary trigonometric paths with Holder exponents ~0.8 and ~0.7:
        // pairing 1/0.8' ... both exponents sum comfortably above 1
        let max_level = 11;
        let n = (1 << max_level) + 1;
        let times = GridPath::uniform_times(0.0, 1.0, n);
        let rough = |t: f64, h: f64, phase: f64| -> f64 {
            (0..12)
                .map(|j| {
                    let lam = (2.0_f64).powi(j);
                    lam.powf(-h) * (lam * std::f64::consts::TAU * t + phase * j as f64).sin()
                })
                .sum()
        };
        let x = GridPath::scalar(times.clone(), times.iter().map(|&t| rough(t, 0.8, 1.3)).collect())
            .unwrap();
        let f = GridPath::scalar(times.clone(), times.iter().map(|&t| rough(t, 0.7, 2.1)).collect())
            .unwrap();
        let mut values = Vec::new();
        for level in 5..=max_level {
            let stride = 1 << (max_level - level);
            let idx: Vec<usize> = (0..n).step_by(stride).collect();
            let sub_t: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
            let sub_x =
                GridPath::scalar(sub_t.clone(), idx.iter().map(|&i| x.at(i, 0)).collect()).unwrap();
            let sub_f =
                GridPath::scalar(sub_t, idx.iter().map(|&i| f.at(i, 0)).collect()).unwrap();
            let cum = young_integral(&sub_f, &sub_x, 1.0 / 0.75, 1.0 / 0.65).unwrap();
            values.push(cum.at(cum.len() - 1, 0));
        }
        let gaps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        // Cauchy: late gaps must sit well below early ones, and the total
        // tail must be small
        let early = gaps[..2].iter().cloned().fold(0.0_f64, f64::max);
        let late = gaps[gaps.len() - 2..].iter().cloned().fold(0.0_f64, f64::max);
        assert!(
            late < 0.25 * early + 1e-12,
            "refinement gaps do not decay: {:?}",
            gaps
        );
    }

    #[test]
    fn cross_prefix_reproduces_direct_leftpoint_sums() {
        let times = GridPath::uniform_times(0.0, 1.0, 9);
        let x = GridPath::new(times.clone(), times.iter().map(|&t| vec![t.sin(), t * t]).collect())
            .unwrap();
        let phi =
            GridPath::new(times.clone(), times.iter().map(|&t| vec![t.cos(), t]).collect()).unwrap();
        let prefix = cross_prefix_leftpoint(&phi, &x).unwrap();
        // direct double loop for a middle pair
        let (i, j) = (2, 7);
        let mut direct = Mat::zeros(2, 2);
        for k in i..j {
            let dphi: Vec<f64> =
                phi.value(k).iter().zip(phi.value(i)).map(|(a, b)| a - b).collect();
            let dx = x.increment(k, k + 1);
            direct.add_outer_scaled(1.0, &dphi, &dx);
        }
        let fast = cross_from_prefix(&prefix, &phi, &x, i, j);
        assert!(direct.sub(&fast).max_abs() < 1e-15);
    }
}
