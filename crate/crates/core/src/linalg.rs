//! Small fixed-size linear algebra: Pauli matrices, Kronecker products and a
//! Jacobi singular value decomposition for 3x3 real matrices.

use nalgebra::{Matrix2, Matrix3, Matrix4, Vector3};
use num_complex::Complex64;
use std::sync::OnceLock;

pub type C64 = Complex64;
pub type CMat2 = Matrix2<C64>;
pub type CMat4 = Matrix4<C64>;

pub const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrices indexed 0..4 as (I, X, Y, Z).
pub fn pauli(i: usize) -> CMat2 {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    match i {
        0 => CMat2::new(l, o, o, l),
        1 => CMat2::new(o, l, l, o),
        2 => CMat2::new(o, c(0.0, -1.0), c(0.0, 1.0), o),
        3 => CMat2::new(l, o, o, -l),
        _ => panic!("pauli index {i} out of range"),
    }
}

pub fn kron2(a: &CMat2, b: &CMat2) -> CMat4 {
    let mut out = CMat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `sigma_i (x) sigma_j` with the same 0..4 indexing as [`pauli`].
pub fn pauli_pair(i: usize, j: usize) -> &'static CMat4 {
    static TABLE: OnceLock<[[CMat4; 4]; 4]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        std::array::from_fn(|i| std::array::from_fn(|j| kron2(&pauli(i), &pauli(j))))
    });
    &table[i][j]
}

/// `Tr[A B]` without forming the product.
pub fn trace_product4(a: &CMat4, b: &CMat4) -> C64 {
    let mut acc = c(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Eigenvalues of a Hermitian 4x4 matrix, ascending.
pub fn hermitian_eigenvalues4(m: &CMat4) -> [f64; 4] {
    let ev = m.symmetric_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

pub fn max_hermitian_defect4(m: &CMat4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Singular value decomposition `W = U diag(sigma) V^T` of a 3x3 real matrix.
#[derive(Debug, Clone, Copy)]
pub struct Svd3 {
    pub u: Matrix3<f64>,
    /// Non-negative, descending.
    pub sigma: Vector3<f64>,
    pub v: Matrix3<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Each rotation zeroes one off-diagonal entry of `W^T W` without forming it,
/// so this is the cyclic Jacobi eigen-solver for `W^T W` applied to the
/// columns of `W`. Singular values come out as column norms, which keeps
/// small ones accurate to roughly `eps * sigma_max` in absolute terms.
pub fn svd3(w: &Matrix3<f64>) -> Svd3 {
    let mut a = *w;
    let mut v = Matrix3::<f64>::identity();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let alpha = a.column(p).norm_squared();
            let beta = a.column(q).norm_squared();
            let gamma = a.column(p).dot(&a.column(q));
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let cs = 1.0 / (1.0 + t * t).sqrt();
            let sn = cs * t;
            for m in [&mut a, &mut v] {
                for r in 0..3 {
                    let xp = m[(r, p)];
                    let xq = m[(r, q)];
                    m[(r, p)] = cs * xp - sn * xq;
                    m[(r, q)] = sn * xp + cs * xq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms = [a.column(0).norm(), a.column(1).norm(), a.column(2).norm()];
    let mut order = [0usize, 1, 2];
    // stable: equal singular values keep their column order
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut sigma = Vector3::zeros();
    let mut u = Matrix3::zeros();
    let mut vs = Matrix3::zeros();
    let scale = norms.iter().cloned().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut have = [false; 3];
    for (slot, &src) in order.iter().enumerate() {
        sigma[slot] = norms[src];
        vs.set_column(slot, &v.column(src));
        if norms[src] > 1e-14 * scale && norms[src] > 0.0 {
            u.set_column(slot, &(a.column(src) / norms[src]));
            have[slot] = true;
        }
    }
    complete_orthonormal(&mut u, &have);
    Svd3 { u, sigma, v: vs }
}

/// Fill the columns not flagged in `have` so that `m` becomes orthogonal.
fn complete_orthonormal(m: &mut Matrix3<f64>, have: &[bool; 3]) {
    let mut have = *have;
    for slot in 0..3 {
        if have[slot] {
            continue;
        }
        let mut best: Option<Vector3<f64>> = None;
        for e in 0..3 {
            let mut cand = Vector3::zeros();
            cand[e] = 1.0;
            for (other, &present) in have.iter().enumerate() {
                if present {
                    let col = m.column(other).into_owned();
                    cand -= col * col.dot(&cand);
                }
            }
            let norm = cand.norm();
            if norm > 0.5 {
                best = Some(cand / norm);
                break;
            }
            if best.is_none_or(|b| b.norm() < norm) && norm > 1e-8 {
                best = Some(cand / norm);
            }
        }
        let col = best.expect("a 3-dimensional complement always exists");
        m.set_column(slot, &col);
        have[slot] = true;
    }
}

/// Descending singular values of a 3x3 real matrix.
pub fn singular_values3(w: &Matrix3<f64>) -> [f64; 3] {
    let s = svd3(w).sigma;
    [s[0], s[1], s[2]]
}

/// Decompose `W = R1 diag(d) R2^T` with `R1, R2` proper rotations and signed `d`
/// (`|d|` descending).
pub fn rotation_svd3(w: &Matrix3<f64>) -> (Matrix3<f64>, Vector3<f64>, Matrix3<f64>) {
    let Svd3 { mut u, sigma, mut v } = svd3(w);
    let mut d = sigma;
    if u.determinant() < 0.0 {
        u.set_column(2, &(-u.column(2)));
        d[2] = -d[2];
    }
    if v.determinant() < 0.0 {
        v.set_column(2, &(-v.column(2)));
        d[2] = -d[2];
    }
    (u, d, v)
}
