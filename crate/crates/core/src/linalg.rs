//! Small dense complex linear algebra: just enough for density matrices on
//! spaces of dimension <= 81.
//!
//! Matrices are row-major `Vec<C64>` slices of square shape. The only
//! nontrivial routine is a cyclic Jacobi eigensolver for Hermitian matrices,
//! which is simple, unconditionally stable, and plenty fast at these sizes.

use num_complex::Complex64 as C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense matrix-matrix product of two `dim x dim` row-major matrices.
pub fn matmul(dim: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    assert_eq!(a.len(), dim * dim);
    assert_eq!(b.len(), dim * dim);
    let mut out = vec![ZERO; dim * dim];
    for r in 0..dim {
        for k in 0..dim {
            let v = a[r * dim + k];
            if v == ZERO {
                continue;
            }
            for c in 0..dim {
                out[r * dim + c] += v * b[k * dim + c];
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(dim: usize, a: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            out[c * dim + r] = a[r * dim + c].conj();
        }
    }
    out
}

pub fn frobenius_norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) of a Hermitian matrix.
pub fn hermitian_eigenvalues(dim: usize, a: &[C64]) -> Vec<f64> {
    jacobi(dim, a, false).0
}

/// Eigenvalues (ascending) and matching eigenvectors (columns of the
/// returned matrix) of a Hermitian matrix.
pub fn hermitian_eigen(dim: usize, a: &[C64]) -> (Vec<f64>, Vec<C64>) {
    let (vals, vecs) = jacobi(dim, a, true);
    (vals, vecs.expect("requested eigenvectors"))
}

/// Cyclic complex Jacobi iteration. Each sweep annihilates every off-diagonal
/// pair with a unitary 2x2 rotation; off-diagonal mass decreases monotonically
/// and the diagonal converges to the spectrum.
fn jacobi(dim: usize, matrix: &[C64], want_vectors: bool) -> (Vec<f64>, Option<Vec<C64>>) {
    assert_eq!(matrix.len(), dim * dim);
    let mut a = matrix.to_vec();
    let mut v = if want_vectors {
        let mut id = vec![ZERO; dim * dim];
        for i in 0..dim {
            id[i * dim + i] = C64::new(1.0, 0.0);
        }
        Some(id)
    } else {
        None
    };

    let fro = frobenius_norm(&a).max(f64::MIN_POSITIVE);
    let target = (1e-14 * fro).powi(2);

    for _sweep in 0..100 {
        let off: f64 = (0..dim)
            .flat_map(|p| ((p + 1)..dim).map(move |q| (p, q)))
            .map(|(p, q)| a[p * dim + q].norm_sqr())
            .sum();
        if off <= target {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[p * dim + q];
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                let phase = apq / b; // e^{i arg}
                let alpha = a[p * dim + p].re;
                let gamma = a[q * dim + q].re;
                let tau = (gamma - alpha) / (2.0 * b);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary rotation R: R[p][p]=c, R[p][q]=s,
                // R[q][p]=-s e^{-i arg}, R[q][q]=c e^{-i arg};
                // A <- R† A R zeroes the (p,q) entry.
                let sp = phase.conj() * s;
                let cp = phase.conj() * c;
                for k in 0..dim {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * dim + p];
                    let akq = a[k * dim + q];
                    let new_kp = akp * c - akq * sp;
                    let new_kq = akp * s + akq * cp;
                    a[k * dim + p] = new_kp;
                    a[p * dim + k] = new_kp.conj();
                    a[k * dim + q] = new_kq;
                    a[q * dim + k] = new_kq.conj();
                }
                a[p * dim + p] = C64::new(alpha - t * b, 0.0);
                a[q * dim + q] = C64::new(gamma + t * b, 0.0);
                a[p * dim + q] = ZERO;
                a[q * dim + p] = ZERO;
                if let Some(vecs) = v.as_mut() {
                    for k in 0..dim {
                        let vkp = vecs[k * dim + p];
                        let vkq = vecs[k * dim + q];
                        vecs[k * dim + p] = vkp * c - vkq * sp;
                        vecs[k * dim + q] = vkp * s + vkq * cp;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        a[i * dim + i].re.partial_cmp(&a[j * dim + j].re).expect("finite eigenvalues")
    });
    let vals: Vec<f64> = order.iter().map(|&i| a[i * dim + i].re).collect();
    let vecs = v.map(|vecs| {
        let mut sorted = vec![ZERO; dim * dim];
        for (new_col, &old_col) in order.iter().enumerate() {
            for k in 0..dim {
                sorted[k * dim + new_col] = vecs[k * dim + old_col];
            }
        }
        sorted
    });
    (vals, vecs)
}

/// Hermitian square root `V sqrt(Λ) V†` with negative eigenvalues (numerical
/// noise) clamped to zero.
pub fn hermitian_sqrt(dim: usize, a: &[C64]) -> Vec<C64> {
    let (vals, vecs) = hermitian_eigen(dim, a);
    let mut out = vec![ZERO; dim * dim];
    for (k, &lambda) in vals.iter().enumerate() {
        let root = lambda.max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        for r in 0..dim {
            for c in 0..dim {
                out[r * dim + c] += root * vecs[r * dim + k] * vecs[c * dim + k].conj();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
        let mut m = vec![ZERO; dim * dim];
        for r in 0..dim {
            m[r * dim + r] = C64::new(rng.random_range(-1.0..1.0), 0.0);
            for c in (r + 1)..dim {
                let v = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[r * dim + c] = v;
                m[c * dim + r] = v.conj();
            }
        }
        m
    }

    #[test]
    fn solves_a_known_two_by_two() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let a = vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            C64::new(1.0, 0.0),
        ];
        let vals = hermitian_eigenvalues(2, &a);
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenpairs_satisfy_the_eigenvalue_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &dim in &[3usize, 7, 16, 26] {
            let a = random_hermitian(dim, &mut rng);
            let (vals, vecs) = hermitian_eigen(dim, &a);
            let trace: f64 = (0..dim).map(|i| a[i * dim + i].re).sum();
            assert_abs_diff_eq!(vals.iter().sum::<f64>(), trace, epsilon = 1e-9);
            for k in 0..dim {
                for r in 0..dim {
                    let mut av = ZERO;
                    for c in 0..dim {
                        av += a[r * dim + c] * vecs[c * dim + k];
                    }
                    let lv = vals[k] * vecs[r * dim + k];
                    assert_abs_diff_eq!(av.re, lv.re, epsilon = 1e-9);
                    assert_abs_diff_eq!(av.im, lv.im, epsilon = 1e-9);
                }
            }
            // Columns orthonormal.
            for k in 0..dim {
                for l in 0..dim {
                    let mut dot = ZERO;
                    for r in 0..dim {
                        dot += vecs[r * dim + k].conj() * vecs[r * dim + l];
                    }
                    let expected = if k == l { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(dot.re, expected, epsilon = 1e-9);
                    assert_abs_diff_eq!(dot.im, 0.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dim = 4;
        // Build a PSD matrix M M†.
        let m = random_hermitian(dim, &mut rng);
        let psd = matmul(dim, &m, &dagger(dim, &m));
        let root = hermitian_sqrt(dim, &psd);
        let squared = matmul(dim, &root, &root);
        for (x, y) in squared.iter().zip(psd.iter()) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-9);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-9);
        }
    }
}
