//! Small fixed-size linear algebra generic over the scalar type.
//!
//! Both mechanisms have three generalized coordinates, so 3-vectors and
//! 3x3 matrices cover the dynamics; contact-sensor normal equations need a
//! small dense SPD solve of variable size (up to 2 x contact count).

use crate::sensitivity::Scalar;

pub type V3<S> = [S; 3];
pub type M3<S> = [[S; 3]; 3];

pub fn v3_zero<S: Scalar>() -> V3<S> {
    [S::zero(); 3]
}

pub fn v3_add<S: Scalar>(a: &V3<S>, b: &V3<S>) -> V3<S> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn v3_sub<S: Scalar>(a: &V3<S>, b: &V3<S>) -> V3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn v3_scale<S: Scalar>(c: S, a: &V3<S>) -> V3<S> {
    [c * a[0], c * a[1], c * a[2]]
}

pub fn v3_dot<S: Scalar>(a: &V3<S>, b: &V3<S>) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn m3_zero<S: Scalar>() -> M3<S> {
    [[S::zero(); 3]; 3]
}

pub fn m3_vec<S: Scalar>(m: &M3<S>, v: &V3<S>) -> V3<S> {
    [
        v3_dot(&m[0], v),
        v3_dot(&m[1], v),
        v3_dot(&m[2], v),
    ]
}

/// Solve `M x = b` for symmetric positive-definite `M` via Cholesky.
///
/// Non-SPD input surfaces as non-finite output (sqrt of a negative pivot),
/// which rollout finiteness checks turn into a divergence error.
pub fn solve3_spd<S: Scalar>(m: &M3<S>, b: &V3<S>) -> V3<S> {
    // M = L L^T, lower-triangular L
    let l00 = m[0][0].sqrt();
    let l10 = m[1][0] / l00;
    let l20 = m[2][0] / l00;
    let l11 = (m[1][1] - l10 * l10).sqrt();
    let l21 = (m[2][1] - l20 * l10) / l11;
    let l22 = (m[2][2] - l20 * l20 - l21 * l21).sqrt();
    // forward substitution L y = b
    let y0 = b[0] / l00;
    let y1 = (b[1] - l10 * y0) / l11;
    let y2 = (b[2] - l20 * y0 - l21 * y1) / l22;
    // back substitution L^T x = y
    let x2 = y2 / l22;
    let x1 = (y1 - l21 * x2) / l11;
    let x0 = (y0 - l10 * x1 - l20 * x2) / l00;
    [x0, x1, x2]
}

/// In-place Cholesky solve for a small dense SPD system of size `n`.
/// `a` is row-major `n*n`; `b` is overwritten with the solution.
pub fn chol_solve_spd<S: Scalar>(n: usize, a: &mut [S], b: &mut [S]) {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    // factorize in the lower triangle
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d = d - a[j * n + k] * a[j * n + k];
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    // L y = b
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    // L^T x = y
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s = s - a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve3_recovers_known_solution() {
        // SPD matrix A = B B^T + I
        let m: M3<f64> = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let x_true = [1.0, -2.0, 0.5];
        let b = m3_vec(&m, &x_true);
        let x = solve3_spd(&m, &b);
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn chol_solve_matches_solve3() {
        let m: M3<f64> = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let b = [0.3, -1.2, 2.5];
        let x3 = solve3_spd(&m, &b);
        let mut a: Vec<f64> = m.iter().flatten().copied().collect();
        let mut bv = b.to_vec();
        chol_solve_spd(3, &mut a, &mut bv);
        for i in 0..3 {
            assert!((x3[i] - bv[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn chol_solve_2x2() {
        let mut a = vec![2.0, 0.3, 0.3, 1.5];
        let mut b = vec![1.0, 2.0];
        chol_solve_spd(2, &mut a, &mut b);
        // residual check against the original matrix
        let r0 = 2.0 * b[0] + 0.3 * b[1] - 1.0;
        let r1 = 0.3 * b[0] + 1.5 * b[1] - 2.0;
        assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
    }
}
