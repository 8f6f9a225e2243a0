//! Eigendecomposition of symmetric 3×3 matrices by cyclic Jacobi rotations.

use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Eigenpairs sorted by ascending eigenvalue.
///
/// Eigenvectors are unit length and mutually orthogonal. Each is oriented so
/// that its largest-magnitude component is positive (the first such
/// component on ties).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen3 {
    pub values: [f64; 3],
    pub vectors: [[f64; 3]; 3],
}

impl SymEigen3 {
    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += lambda * v[i] * v[j];
                }
            }
        }
        m
    }
}

const SYMMETRY_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 64;

pub fn eig_sym3(m: &Mat3) -> Result<SymEigen3> {
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (m[i][j] - m[j][i]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric: m[{i}][{j}] = {}, m[{j}][{i}] = {}",
                    m[i][j], m[j][i]
                )));
            }
        }
    }

    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = 0.5 * (m[i][j] + m[j][i]);
        }
    }
    // Columns of `v` accumulate the rotations.
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    for _ in 0..MAX_SWEEPS {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        let diag = a[0][0].abs() + a[1][1].abs() + a[2][2].abs();
        if off == 0.0 || off <= f64::EPSILON * 1e-3 * diag {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = if theta.abs() > 1e150 {
                0.5 / theta
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            rotate(&mut a, &mut v, p, q, c, s);
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.map(|i| a[i][i]);
    let vectors = order.map(|i| orient([v[0][i], v[1][i], v[2][i]]));
    Ok(SymEigen3 { values, vectors })
}

/// Apply the Jacobi rotation `J(p, q)` as `a ← Jᵀ a J`, `v ← v J`.
fn rotate(a: &mut Mat3, v: &mut Mat3, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..3 {
        let (akp, akq) = (a[k][p], a[k][q]);
        a[k][p] = c * akp - s * akq;
        a[k][q] = s * akp + c * akq;
    }
    for k in 0..3 {
        let (apk, aqk) = (a[p][k], a[q][k]);
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    a[p][q] = 0.0;
    a[q][p] = 0.0;
    for row in v.iter_mut() {
        let (vp, vq) = (row[p], row[q]);
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}

fn orient(v: [f64; 3]) -> [f64; 3] {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let v = v.map(|x| x / norm);
    let mut lead = 0;
    for k in 1..3 {
        if v[k].abs() > v[lead].abs() {
            lead = k;
        }
    }
    if v[lead] < 0.0 {
        v.map(|x| -x)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn check(m: &Mat3) {
        let e = eig_sym3(m).unwrap();
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
        for (lambda, v) in e.values.iter().zip(&e.vectors) {
            for i in 0..3 {
                let mv: f64 = (0..3).map(|j| m[i][j] * v[j]).sum();
                assert!((mv - lambda * v[i]).abs() <= 1e-7 * (1.0 + lambda.abs()), "{m:?}");
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| e.vectors[i][k] * e.vectors[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-7);
            }
        }
        let r = e.reconstruct();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - m[i][j]).abs() <= 1e-7, "{m:?}");
            }
        }
    }

    #[test]
    fn diagonal_example() {
        let e = eig_sym3(&[[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        assert_eq!(e.values, [1.0, 2.0, 3.0]);
        assert_eq!(e.vectors, [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn zero_matrix() {
        let e = eig_sym3(&[[0.0; 3]; 3]).unwrap();
        assert_eq!(e.values, [0.0; 3]);
        for v in e.vectors {
            let lead = v.iter().cloned().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(lead > 0.0);
        }
        check(&[[0.0; 3]; 3]);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = [[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(eig_sym3(&m), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn random_and_degenerate_matrices() {
        let mut r = rng::seeded(3);
        for _ in 0..2000 {
            let b: Mat3 = std::array::from_fn(|_| std::array::from_fn(|_| r.random_range(-5.0..5.0)));
            let mut m = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = (0..3).map(|k| b[i][k] * b[j][k]).sum::<f64>() - 3.0 * (i == j) as u8 as f64;
                }
            }
            check(&m);
        }
        check(&[[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]]);
        check(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]);
        check(&[[1e-12, 0.0, 3e-13], [0.0, 5.0, 0.0], [3e-13, 0.0, 1e-12]]);
    }
}
