//! Mixing-factor rules.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::LambdaMode;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const LAMBDA_CEILING: f64 = 1.0 - 1e-12;

/// Draw `λx ~ Beta(α, α)`, kept inside `[0, 1)`.
pub fn sample_lambda_x<T: Scalar, R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<T> {
    let beta = Beta::new(alpha, alpha).map_err(|_| Error::InvalidAlpha(alpha))?;
    let v: f64 = beta.sample(rng);
    Ok(T::of(v.clamp(0.0, LAMBDA_CEILING)))
}

/// `λx` values for a batch of `m` pairs under the given mode.
pub fn draw_lambdas<T: Scalar, R: Rng + ?Sized>(
    mode: LambdaMode,
    alpha: f64,
    m: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    match mode {
        LambdaMode::PerBatch => Ok(vec![sample_lambda_x(alpha, rng)?; m]),
        LambdaMode::PerPair => (0..m).map(|_| sample_lambda_x(alpha, rng)).collect(),
        LambdaMode::Fixed(v) => Ok(vec![T::of(v); m]),
    }
}

/// Plain Mixup mixes labels with the input factor.
pub fn lambda_y_mixup<T: Scalar>(lambda_x: T) -> T {
    lambda_x
}

/// Remix: give the whole label to the minority side of a lopsided pair.
pub fn lambda_y_remix<T: Scalar>(lambda_x: T, n_i: usize, n_j: usize, tau: T, p_majority: T) -> T {
    let ratio = T::of_usize(n_i) / T::of_usize(n_j);
    if ratio >= p_majority && lambda_x < tau {
        T::zero()
    } else if ratio <= p_majority.recip() && T::one() - lambda_x < tau {
        T::one()
    } else {
        lambda_x
    }
}

/// Distances to the pairwise decision boundary, `η = n^(-ω)`.
pub fn mamix_etas<T: Scalar>(n_i: usize, n_j: usize, omega: T) -> (T, T) {
    let eta = |n: usize| T::of_usize(n).powf(-omega);
    (eta(n_i), eta(n_j))
}

/// Margin-aware label factor.
///
/// The threshold `t = η_j / (η_i + η_j)` is where the virtual example sits on
/// the ideal boundary and receives a 50/50 label. Below and above `t` the
/// label factor is linear, reaching 0 at `λx = 0` and 1 at `λx = 1`. A pair
/// whose `i` side is the minority (larger `η_i`) gets `λy ≥ λx`.
pub fn lambda_y_mamix<T: Scalar>(lambda_x: T, eta_i: T, eta_j: T) -> T {
    let half = T::of(0.5);
    let t = eta_j / (eta_i + eta_j);
    // η_i / (η_i + η_j) written as 1 - t so both branches meet at exactly 0.5
    let s = T::one() - t;
    let y = if lambda_x >= t {
        T::one() - (T::one() - lambda_x) * half / s
    } else {
        half * lambda_x / t
    };
    y.max(T::zero()).min(T::one())
}

/// Remix's hard relabel branches first; the "otherwise" case falls through
/// to [`lambda_y_mamix`].
pub fn lambda_y_mamix_remix<T: Scalar>(
    lambda_x: T,
    n_i: usize,
    n_j: usize,
    tau: T,
    p_majority: T,
    omega: T,
) -> T {
    let ratio = T::of_usize(n_i) / T::of_usize(n_j);
    if ratio >= p_majority && lambda_x < tau {
        T::zero()
    } else if ratio <= p_majority.recip() && T::one() - lambda_x < tau {
        T::one()
    } else {
        let (ei, ej) = mamix_etas(n_i, n_j, omega);
        lambda_y_mamix(lambda_x, ei, ej)
    }
}
