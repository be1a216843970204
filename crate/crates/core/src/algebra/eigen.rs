//! Cyclic Jacobi eigensolver for small Hermitian matrices.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Reconstruction residual accepted after convergence, relative to `max(1, |M|)`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermiticity_defect<const N: usize>(m: &[[C64; N]; N]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in i..N {
            worst = worst.max((m[i][j] - m[j][i].conj()).norm());
        }
    }
    worst
}

fn max_abs<const N: usize>(m: &[[C64; N]; N]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn off_diagonal_norm<const N: usize>(m: &[[C64; N]; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                s += m[i][j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn identity<const N: usize>() -> [[C64; N]; N] {
    let mut m = [[C64::new(0.0, 0.0); N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

/// Eigen-decomposition `M = V diag(w) V†` of a Hermitian matrix.
///
/// Eigenvalues are returned in ascending order together with the matching
/// eigenvector columns of `V`. Fails if `M` is not Hermitian within
/// `hermitian_tol` or if the reconstruction residual exceeds
/// [`RESIDUAL_TOLERANCE`].
pub fn hermitian_eigh<const N: usize>(
    m: &[[C64; N]; N],
    hermitian_tol: f64,
) -> Result<([f64; N], [[C64; N]; N])> {
    let scale = max_abs(m).max(1.0);
    let defect = hermiticity_defect(m);
    if defect > hermitian_tol * scale {
        return Err(Error::NotHermitian(defect));
    }

    // Work on the Hermitian part so tiny input asymmetry cannot stall the sweeps.
    let mut a = *m;
    for i in 0..N {
        a[i][i] = C64::new(a[i][i].re, 0.0);
        for j in (i + 1)..N {
            let h = 0.5 * (a[i][j] + a[j][i].conj());
            a[i][j] = h;
            a[j][i] = h.conj();
        }
    }
    let mut v = identity::<N>();

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= 1e-16 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // W = diag(1, e^{-i phi}) on (p, q) makes the pivot real; then
                // a real Jacobi rotation annihilates it.
                let phase_conj = (apq / mag).conj();
                let theta = (a[q][q].re - a[p][p].re) / (2.0 * mag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // Columns p and q of J = W R.
                let jpp = C64::new(c, 0.0);
                let jqp = -s * phase_conj;
                let jpq = C64::new(s, 0.0);
                let jqq = c * phase_conj;

                // A <- A J (columns p, q).
                for row in a.iter_mut() {
                    let xp = row[p];
                    let xq = row[q];
                    row[p] = xp * jpp + xq * jqp;
                    row[q] = xp * jpq + xq * jqq;
                }
                // A <- J† A (rows p, q).
                for k in 0..N {
                    let xp = a[p][k];
                    let xq = a[q][k];
                    a[p][k] = jpp.conj() * xp + jqp.conj() * xq;
                    a[q][k] = jpq.conj() * xp + jqq.conj() * xq;
                }
                a[p][q] = C64::new(0.0, 0.0);
                a[q][p] = C64::new(0.0, 0.0);
                a[p][p] = C64::new(a[p][p].re, 0.0);
                a[q][q] = C64::new(a[q][q].re, 0.0);
                // V <- V J.
                for row in v.iter_mut() {
                    let xp = row[p];
                    let xq = row[q];
                    row[p] = xp * jpp + xq * jqp;
                    row[q] = xp * jpq + xq * jqq;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let values: [f64; N] = std::array::from_fn(|k| a[order[k]][order[k]].re);
    let vectors: [[C64; N]; N] = std::array::from_fn(|r| std::array::from_fn(|k| v[r][order[k]]));

    let mut residual = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            let mut acc = C64::new(0.0, 0.0);
            for (k, w) in values.iter().enumerate() {
                acc += vectors[i][k] * *w * vectors[j][k].conj();
            }
            residual = residual.max((acc - m[i][j]).norm());
        }
    }
    if residual > RESIDUAL_TOLERANCE * scale {
        return Err(Error::Numeric(format!(
            "eigen-decomposition residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}"
        )));
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let mut m = [[c(0.0, 0.0); 3]; 3];
        m[0][0] = c(3.0, 0.0);
        m[1][1] = c(-1.0, 0.0);
        m[2][2] = c(2.0, 0.0);
        let (w, _) = hermitian_eigh(&m, 1e-10).unwrap();
        assert_eq!(w, [-1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_y_has_unit_spectrum() {
        let m = [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
        let (w, v) = hermitian_eigh(&m, 1e-10).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-14 && (w[1] - 1.0).abs() < 1e-14);
        // Columns are orthonormal.
        let dot = v[0][0].conj() * v[0][1] + v[1][0].conj() * v[1][1];
        assert!(dot.norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = [[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        assert!(matches!(hermitian_eigh(&m, 1e-10), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn degenerate_spectrum() {
        let m = [[c(0.25, 0.0); 4]; 4];
        let (w, _) = hermitian_eigh(&m, 1e-10).unwrap();
        for x in &w[..3] {
            assert!(x.abs() < 1e-14);
        }
        assert!((w[3] - 1.0).abs() < 1e-14);
    }
}
