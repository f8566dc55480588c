//! Seeded random states, unitaries and channels.

use nalgebra::{Matrix4, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bloch::{to_bloch, BlochState, DensityOperator};
use crate::channels::{PauliDampingChannel, RandomUnitaryChannel};
use crate::criteria::sample_damping;
use crate::linalg::{c, CMat2, CMat4, C64};
use crate::tolerance::Tolerances;

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(gaussian(rng), gaussian(rng))
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R) -> DensityOperator {
    loop {
        let psi = [gaussian_c(rng), gaussian_c(rng), gaussian_c(rng), gaussian_c(rng)];
        if let Ok(rho) = DensityOperator::pure(&psi) {
            return rho;
        }
    }
}

/// `G G^dagger / Tr` with `G` a 4 x `rank` complex Gaussian matrix.
pub fn random_mixed<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> DensityOperator {
    let rank = rank.clamp(1, 4);
    let mut g = CMat4::zeros();
    for i in 0..4 {
        for j in 0..rank {
            g[(i, j)] = gaussian_c(rng);
        }
    }
    DensityOperator::trusted(normalize_gram(&g))
}

/// `A A^dagger / Tr[A A^dagger]`; every 4x4 `A` gives a state.
pub fn normalize_gram(g: &CMat4) -> CMat4 {
    let m = g * g.adjoint();
    let tr = m.trace().re;
    m / c(tr, 0.0)
}

/// Haar-random element of SU(2) from a uniform point on the 3-sphere.
pub fn haar_unitary2<R: Rng + ?Sized>(rng: &mut R) -> CMat2 {
    let v = loop {
        let v = nalgebra::Vector4::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
        let n = v.norm();
        if n > 1e-12 {
            break v / n;
        }
    };
    let a = c(v[0], v[1]);
    let b = c(v[2], v[3]);
    CMat2::new(a, -b.conj(), b, a.conj())
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(gaussian(rng), gaussian(rng), gaussian(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// A Bell state conjugated by independent Haar-random local unitaries.
pub fn random_max_entangled<R: Rng + ?Sized>(rng: &mut R) -> DensityOperator {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let u = haar_unitary2(rng);
    let v = haar_unitary2(rng);
    let uv = crate::linalg::kron2(&u, &v);
    let bell = nalgebra::Vector4::new(c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0));
    let psi = uv * bell;
    DensityOperator::pure(&[psi[0], psi[1], psi[2], psi[3]]).expect("unit vector")
}

/// Mixture of the sampling families above.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R) -> DensityOperator {
    match rng.random_range(0..4u8) {
        0 => random_pure(rng),
        1 => random_max_entangled(rng),
        2 => random_mixed(rng, 2),
        _ => {
            let rank = rng.random_range(1..=4);
            random_mixed(rng, rank)
        }
    }
}

pub fn random_bloch_state<R: Rng + ?Sized>(rng: &mut R) -> BlochState {
    to_bloch(&random_state(rng))
}

/// `(alpha, beta)` uniform on the unit 3-sphere.
pub fn random_ru_channel<R: Rng + ?Sized>(rng: &mut R) -> RandomUnitaryChannel {
    loop {
        let v = nalgebra::Vector4::new(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
        let n = v.norm();
        if n > 1e-12 {
            let v = v / n;
            if let Ok(ch) = RandomUnitaryChannel::new(c(v[0], v[1]), c(v[2], v[3])) {
                return ch;
            }
        }
    }
}

pub fn random_damping<R: Rng + ?Sized>(rng: &mut R, tol: &Tolerances) -> PauliDampingChannel {
    sample_damping(rng, None, tol)
}

/// Random complex 4x4 matrix used to parametrize mixed states.
pub fn random_gram_factor<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<C64> {
    Matrix4::from_fn(|_, _| gaussian_c(rng))
}
