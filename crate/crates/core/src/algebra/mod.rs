//! Small-dimension linear algebra for single-qubit states and maps.
//!
//! States are handled either as 2×2 density matrices or as Bloch vectors
//! `r_i = tr[ρ σ_i]`. Maps are handled in affine (Pauli-transfer) form
//! `r ↦ Λ r + τ` and, for positivity questions, as trace-normalized Choi
//! matrices.

pub mod eigen;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

/// Determinant magnitude at or below which [`invert_affine`] refuses to invert.
pub const SINGULARITY_THRESHOLD: f64 = 1e-12;

/// Hermiticity tolerance applied to eigensolver inputs.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Tolerance on the trace of a density matrix.
pub const TRACE_TOLERANCE: f64 = 1e-10;

/// Smallest eigenvalue still accepted for a physical state.
pub const STATE_EIGENVALUE_FLOOR: f64 = -1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pauli matrix `σ_k` for `k = 1, 2, 3`.
pub fn pauli(k: usize) -> Mat2 {
    match k {
        1 => [[ZERO, ONE], [ONE, ZERO]],
        2 => [[ZERO, -I], [I, ZERO]],
        3 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("Pauli index must be 1, 2 or 3, got {k}"),
    }
}

fn trace2(m: &Mat2) -> C64 {
    m[0][0] + m[1][1]
}

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Bloch vector of a qubit state. May lie outside the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl BlochVector {
    pub const ORIGIN: BlochVector = BlochVector { r1: 0.0, r2: 0.0, r3: 0.0 };

    pub const fn new(r1: f64, r2: f64, r3: f64) -> Self {
        Self { r1, r2, r3 }
    }

    pub fn from_array(r: [f64; 3]) -> Self {
        Self::new(r[0], r[1], r[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r1, self.r2, self.r3]
    }

    pub fn norm(self) -> f64 {
        (self.r1 * self.r1 + self.r2 * self.r2 + self.r3 * self.r3).sqrt()
    }

    /// True when the point is a physical state, `|r| ≤ 1 + tol`.
    pub fn is_physical(self, tol: f64) -> bool {
        self.norm() <= 1.0 + tol
    }
}

/// A 2×2 complex matrix interpreted as a qubit density operator.
///
/// Construction does not validate; use [`DensityMatrix::validate_state`]
/// where a physical state is required.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub Mat2);

impl DensityMatrix {
    pub fn trace(&self) -> C64 {
        trace2(&self.0)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        eigen::hermiticity_defect(&self.0)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<[f64; 2]> {
        eigen::hermitian_eigh(&self.0, HERMITIAN_TOLERANCE).map(|(w, _)| w)
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn validate_state(&self) -> Result<()> {
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOLERANCE {
            return Err(invalid(format!("density matrix trace {tr} is not 1")));
        }
        let w = self.eigenvalues()?;
        if w[0] < STATE_EIGENVALUE_FLOOR {
            return Err(invalid(format!(
                "density matrix has negative eigenvalue {:e}",
                w[0]
            )));
        }
        Ok(())
    }
}

/// `ρ = ½(𝟙 + Σ r_i σ_i)`.
pub fn density_from_bloch(r: BlochVector) -> DensityMatrix {
    let half = 0.5;
    DensityMatrix([
        [C64::new(half * (1.0 + r.r3), 0.0), C64::new(half * r.r1, -half * r.r2)],
        [C64::new(half * r.r1, half * r.r2), C64::new(half * (1.0 - r.r3), 0.0)],
    ])
}

/// `r_i = tr[ρ σ_i]`. Requires unit trace and Hermiticity within `1e-10`.
pub fn bloch_from_density(rho: &DensityMatrix) -> Result<BlochVector> {
    let tr = rho.trace();
    if (tr - ONE).norm() > TRACE_TOLERANCE {
        return Err(invalid(format!("density matrix trace {tr} is not 1")));
    }
    let defect = rho.hermiticity_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::NotHermitian(defect));
    }
    let component = |k| trace2(&mul2(&rho.0, &pauli(k))).re;
    Ok(BlochVector::new(component(1), component(2), component(3)))
}

/// Affine (Pauli-transfer) form `r ↦ Λ r + τ` of a trace-preserving qubit map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineRep {
    /// The 3×3 block `Λ`, row-major.
    pub linear: [[f64; 3]; 3],
    /// The translation `τ`.
    pub shift: [f64; 3],
}

impl AffineRep {
    pub const IDENTITY: AffineRep = AffineRep {
        linear: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        shift: [0.0; 3],
    };

    pub fn diagonal(lambda: [f64; 3], shift: [f64; 3]) -> Self {
        let mut linear = [[0.0; 3]; 3];
        for k in 0..3 {
            linear[k][k] = lambda[k];
        }
        Self { linear, shift }
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        self.shift.iter().map(|x| x * x).sum::<f64>().sqrt() <= tol
    }

    pub fn is_pauli_diagonal(&self, tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| i == j || self.linear[i][j].abs() <= tol))
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.linear)
    }

    pub fn apply(&self, r: BlochVector) -> BlochVector {
        apply_affine(self, r)
    }

    /// `other` followed by `self`.
    pub fn after(&self, other: &AffineRep) -> AffineRep {
        compose_affine(self, other)
    }

    /// Image of an arbitrary (not necessarily Hermitian) 2×2 operator under
    /// the linear extension of the map.
    pub fn act_on_operator(&self, x: &Mat2) -> Mat2 {
        let tr = trace2(x);
        let coords: [C64; 3] = std::array::from_fn(|k| trace2(&mul2(x, &pauli(k + 1))));
        let mut out = [[ZERO; 2]; 2];
        out[0][0] = tr;
        out[1][1] = tr;
        for k in 0..3 {
            let mut coeff = tr * self.shift[k];
            for (j, xj) in coords.iter().enumerate() {
                coeff += *xj * self.linear[k][j];
            }
            let s = pauli(k + 1);
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += coeff * s[a][b];
                }
            }
        }
        for row in out.iter_mut() {
            for z in row.iter_mut() {
                *z *= 0.5;
            }
        }
        out
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn matmul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

pub(crate) fn matvec3(a: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

/// `Λ r + τ`.
pub fn apply_affine(f: &AffineRep, r: BlochVector) -> BlochVector {
    let v = matvec3(&f.linear, &r.to_array());
    BlochVector::new(v[0] + f.shift[0], v[1] + f.shift[1], v[2] + f.shift[2])
}

/// `F2 ∘ F1 = (Λ2 Λ1, Λ2 τ1 + τ2)`.
pub fn compose_affine(f2: &AffineRep, f1: &AffineRep) -> AffineRep {
    let linear = matmul3(&f2.linear, &f1.linear);
    let moved = matvec3(&f2.linear, &f1.shift);
    AffineRep {
        linear,
        shift: std::array::from_fn(|k| moved[k] + f2.shift[k]),
    }
}

/// Exact inverse of the affine action, `(Λ⁻¹, −Λ⁻¹ τ)`.
///
/// Fails with [`Error::Singular`] when `|det Λ| ≤ 1e-12`.
pub fn invert_affine(f: &AffineRep) -> Result<AffineRep> {
    invert_affine_with_threshold(f, SINGULARITY_THRESHOLD)
}

pub fn invert_affine_with_threshold(f: &AffineRep, threshold: f64) -> Result<AffineRep> {
    let m = &f.linear;
    let det = det3(m);
    if !det.is_finite() || det.abs() <= threshold {
        return Err(Error::Singular { what: "affine map determinant", value: det });
    }
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    // Adjugate, transposed cofactors.
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    let linear: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| adj[i][j] / det));
    let moved = matvec3(&linear, &f.shift);
    Ok(AffineRep { linear, shift: moved.map(|x| -x) })
}

/// Trace-normalized Choi matrix `C = ½ Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix(pub Mat4);

impl ChoiMatrix {
    pub fn trace(&self) -> C64 {
        (0..4).map(|k| self.0[k][k]).sum()
    }

    pub fn eigenvalues(&self) -> Result<[f64; 4]> {
        hermitian_eigenvalues(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        self.eigenvalues().map(|w| w[0])
    }

    /// Completely positive iff the smallest eigenvalue is at least `-tol`.
    pub fn is_cp(&self, tol: f64) -> Result<bool> {
        self.min_eigenvalue().map(|w| w >= -tol)
    }
}

pub fn choi_from_affine(f: &AffineRep) -> ChoiMatrix {
    let mut c = [[ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            let mut unit = [[ZERO; 2]; 2];
            unit[i][j] = ONE;
            let image = f.act_on_operator(&unit);
            for a in 0..2 {
                for b in 0..2 {
                    c[2 * i + a][2 * j + b] = 0.5 * image[a][b];
                }
            }
        }
    }
    ChoiMatrix(c)
}

/// Ascending eigenvalues of a Choi matrix.
pub fn hermitian_eigenvalues(m: &ChoiMatrix) -> Result<[f64; 4]> {
    eigen::hermitian_eigh(&m.0, HERMITIAN_TOLERANCE).map(|(w, _)| w)
}

/// Trace distance `½ tr|ρ1 − ρ2|`, which for qubits equals `½ |r1 − r2|`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    rho1.validate_state()?;
    rho2.validate_state()?;
    let a = bloch_from_density(rho1)?;
    let b = bloch_from_density(rho2)?;
    Ok(bloch_trace_distance(a, b).clamp(0.0, 1.0))
}

/// `½ |a − b|` without state validation.
pub fn bloch_trace_distance(a: BlochVector, b: BlochVector) -> f64 {
    let d = [a.r1 - b.r1, a.r2 - b.r2, a.r3 - b.r3];
    0.5 * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}
