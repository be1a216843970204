//! Choi construction and eigenvalues checked against independent routes:
//! Kraus sums built by hand and characteristic-polynomial roots.

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qmap_enm::algebra::{choi_from_affine, compose_affine, hermitian_eigenvalues, pauli, AffineRep, Mat2, Mat4};

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

fn dagger(a: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].conj()))
}

/// `½ Σ |i⟩⟨j| ⊗ Σ_k K_k |i⟩⟨j| K_k†`.
fn choi_from_kraus(kraus: &[Mat2]) -> Mat4 {
    let mut c = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            let mut unit = [[C64::new(0.0, 0.0); 2]; 2];
            unit[i][j] = C64::new(1.0, 0.0);
            for k in kraus {
                let img = mul2(&mul2(k, &unit), &dagger(k));
                for a in 0..2 {
                    for b in 0..2 {
                        c[2 * i + a][2 * j + b] += 0.5 * img[a][b];
                    }
                }
            }
        }
    }
    c
}

/// `σ0 = 𝟙`, then the Pauli matrices.
fn sigma(k: usize) -> Mat2 {
    if k == 0 {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        [[l, o], [o, l]]
    } else {
        pauli(k)
    }
}

/// Pauli channel probabilities for eigenvalues `λ`.
fn pauli_probabilities(l: [f64; 3]) -> [f64; 4] {
    [
        (1.0 + l[0] + l[1] + l[2]) / 4.0,
        (1.0 + l[0] - l[1] - l[2]) / 4.0,
        (1.0 - l[0] + l[1] - l[2]) / 4.0,
        (1.0 - l[0] - l[1] + l[2]) / 4.0,
    ]
}

fn max_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

/// Characteristic polynomial coefficients `c[0..=4]` (monic) by Faddeev–LeVerrier.
fn characteristic_polynomial(a: &Mat4) -> [f64; 5] {
    let n = 4;
    let mut c = [C64::new(0.0, 0.0); 5];
    c[n] = C64::new(1.0, 0.0);
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for k in 1..=n {
        let mut next = [[C64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                next[i][j] = (0..4).map(|l| a[i][l] * m[l][j]).sum::<C64>();
            }
            next[i][i] += c[n - k + 1];
        }
        m = next;
        let tr: C64 = (0..4).map(|i| (0..4).map(|l| a[i][l] * m[l][i]).sum::<C64>()).sum();
        c[n - k] = -tr / k as f64;
    }
    c.map(|z| z.re)
}

fn eval(p: &[f64], x: f64) -> (f64, f64) {
    let (mut v, mut d) = (0.0, 0.0);
    for &coef in p.iter().rev() {
        d = d * x + v;
        v = v * x + coef;
    }
    (v, d)
}

/// Roots of a real-rooted polynomial, ascending. Newton from a Gershgorin
/// upper bound converges monotonically to the largest root; deflate and repeat.
fn real_roots(a: &Mat4) -> [f64; 4] {
    let full = characteristic_polynomial(a);
    let bound = 1.0 + (0..4).map(|i| (0..4).map(|j| a[i][j].norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut p: Vec<f64> = full.to_vec();
    let mut roots = [0.0; 4];
    for slot in roots.iter_mut() {
        let mut x = bound;
        for _ in 0..500 {
            let (v, d) = eval(&p, x);
            if d == 0.0 {
                break;
            }
            let next = x - v / d;
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        for _ in 0..3 {
            let (v, d) = eval(&full, x);
            if d.abs() > 1e-8 {
                x -= v / d;
            }
        }
        *slot = x;
        // Synthetic division by (x − root).
        let deg = p.len() - 1;
        let mut q = vec![0.0; deg];
        q[deg - 1] = p[deg];
        for k in (1..deg).rev() {
            q[k - 1] = p[k] + x * q[k];
        }
        p = q;
    }
    roots.sort_by(f64::total_cmp);
    roots
}

fn rotation(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|v| v / norm);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

fn pauli_channel(l: [f64; 3]) -> AffineRep {
    AffineRep::diagonal(l, [0.0; 3])
}

/// Amplitude damping toward `r3 = +1` with damping probability `g`.
fn damping_kraus(g: f64) -> [Mat2; 2] {
    let o = C64::new(0.0, 0.0);
    [[[C64::new(1.0, 0.0), o], [o, C64::new((1.0 - g).sqrt(), 0.0)]], [[o, C64::new(g.sqrt(), 0.0)], [o, o]]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pauli_choi_matches_kraus_sum(l1 in -1.0f64..1.0, l2 in -1.0f64..1.0, l3 in -1.0f64..1.0) {
        let q = pauli_probabilities([l1, l2, l3]);
        // Negative "probabilities" still give the right linear map; sign is kept in the weights.
        let mut oracle = [[C64::new(0.0, 0.0); 4]; 4];
        for (k, &qk) in q.iter().enumerate() {
            let c = choi_from_kraus(&[sigma(k)]);
            for i in 0..4 { for j in 0..4 { oracle[i][j] += qk * c[i][j]; } }
        }
        let choi = choi_from_affine(&pauli_channel([l1, l2, l3]));
        prop_assert!(max_diff(&choi.0, &oracle) < 1e-14);
        let eig = hermitian_eigenvalues(&choi).unwrap();
        let mut expected = q;
        expected.sort_by(f64::total_cmp);
        for k in 0..4 { prop_assert!((eig[k] - expected[k]).abs() < 1e-12); }
    }

    #[test]
    fn damping_choi_matches_kraus_sum(g in 0.0f64..1.0) {
        let oracle = choi_from_kraus(&damping_kraus(g));
        let half = (1.0 - g).sqrt();
        let f = AffineRep::diagonal([half, half, 1.0 - g], [0.0, 0.0, g]);
        prop_assert!(max_diff(&choi_from_affine(&f).0, &oracle) < 1e-14);
    }

    #[test]
    fn eigenvalues_match_polynomial_roots(
        lin in proptest::array::uniform9(-1.0f64..1.0),
        shift in proptest::array::uniform3(-0.5f64..0.5),
    ) {
        let linear = [[lin[0], lin[1], lin[2]], [lin[3], lin[4], lin[5]], [lin[6], lin[7], lin[8]]];
        let choi = choi_from_affine(&AffineRep { linear, shift });
        let eig = hermitian_eigenvalues(&choi).unwrap();
        let roots = real_roots(&choi.0);
        for k in 0..4 { prop_assert!((eig[k] - roots[k]).abs() < 1e-8, "{eig:?} vs {roots:?}"); }
    }

    #[test]
    fn compositions_of_channels_stay_cp(
        l in proptest::array::uniform3(0.0f64..1.0),
        g in 0.0f64..1.0,
        axis in proptest::array::uniform3(0.1f64..1.0),
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        // Pauli probabilities are non-negative whenever 1 ± λ_i sums stay ≥ 0; use the tetrahedron's inner cube.
        let l = l.map(|v| v / 3.0);
        let half = (1.0 - g).sqrt();
        let damping = AffineRep::diagonal([half, half, 1.0 - g], [0.0, 0.0, g]);
        let unitary = AffineRep { linear: rotation(axis, angle), shift: [0.0; 3] };
        for f in [
            compose_affine(&damping, &pauli_channel(l)),
            compose_affine(&unitary, &damping),
            compose_affine(&pauli_channel(l), &compose_affine(&unitary, &damping)),
        ] {
            prop_assert!(choi_from_affine(&f).is_cp(1e-12).unwrap());
        }
    }
}

#[test]
fn identity_choi_is_a_projector() {
    let eig = hermitian_eigenvalues(&choi_from_affine(&AffineRep::IDENTITY)).unwrap();
    let expected = [0.0, 0.0, 0.0, 1.0];
    for k in 0..4 {
        assert!((eig[k] - expected[k]).abs() < 1e-14);
    }
    let roots = real_roots(&choi_from_kraus(&[sigma(0)]));
    assert!((roots[3] - 1.0).abs() < 1e-10);
}
