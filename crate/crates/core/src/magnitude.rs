//! Magnitude estimation by nonnegative matrix factorization under the
//! Kullback-Leibler divergence, for the informed separation scenario.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::MagnitudeSpectrogram;

/// Floor applied to denominators and to the model `WH`.
pub const NMF_FLOOR: f64 = 1e-12;
pub const DEFAULT_NMF_ITERATIONS: usize = 200;
pub const DEFAULT_NMF_RANK: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel<T: Real> {
    /// `F x R` dictionary.
    pub w: Array2<T>,
    /// `R x T` activations.
    pub h: Array2<T>,
    /// `D(V | WH)` at initialization and after every iteration.
    pub divergence: Vec<T>,
}

impl<T: Real> NmfModel<T> {
    pub fn rank(&self) -> usize {
        self.w.ncols()
    }

    pub fn reconstruction(&self) -> Array2<T> {
        self.w.dot(&self.h)
    }
}

/// `sum V log(V / WH) - V + WH` with `0 log 0 = 0` and `WH` floored.
pub fn kl_divergence<T: Real>(v: &Array2<T>, model: &Array2<T>) -> T {
    let floor = T::lit(NMF_FLOOR);
    Zip::from(v).and(model).fold(T::zero(), |acc, &x, &y| {
        let y = y.max(floor);
        let term = if x > T::zero() {
            x * (x / y).ln() - x + y
        } else {
            y
        };
        acc + term
    })
}

/// Multiplicative-update KL-NMF with a seeded uniform `(0, 1]` initialization.
pub fn kl_nmf<T: Real>(
    v: &Array2<T>,
    rank: usize,
    iterations: usize,
    seed: u64,
) -> Result<NmfModel<T>> {
    if rank < 1 {
        return Err(Error::InvalidRank);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("NMF input"));
    }
    if v.iter().any(|&x| x < T::zero()) {
        return Err(Error::NegativeMagnitude("NMF input"));
    }
    let (bins, frames) = v.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 1 - U[0, 1) lies in (0, 1]
    let mut draw = |_: (usize, usize)| T::lit(1.0 - rng.random::<f64>());
    let mut w = Array2::from_shape_fn((bins, rank), &mut draw);
    let mut h = Array2::from_shape_fn((rank, frames), &mut draw);
    let floor = T::lit(NMF_FLOOR);

    let mut model = w.dot(&h);
    let mut divergence = Vec::with_capacity(iterations + 1);
    divergence.push(kl_divergence(v, &model));
    let mut ratio = Array2::<T>::zeros((bins, frames));

    for _ in 0..iterations {
        // W <- W * ((V / WH) H^T) / (1 H^T)
        Zip::from(&mut ratio)
            .and(v)
            .and(&model)
            .for_each(|r, &x, &y| *r = x / y.max(floor));
        let numer = ratio.dot(&h.t());
        let h_sums: Array1<T> = h.sum_axis(Axis(1));
        Zip::from(&mut w)
            .and(&numer)
            .and_broadcast(&h_sums)
            .for_each(|wv, &n, &d| *wv = *wv * n / d.max(floor));

        // H <- H * (W^T (V / WH)) / (W^T 1)
        model = w.dot(&h);
        Zip::from(&mut ratio)
            .and(v)
            .and(&model)
            .for_each(|r, &x, &y| *r = x / y.max(floor));
        let numer = w.t().dot(&ratio);
        let w_sums: Array1<T> = w.sum_axis(Axis(0));
        let w_sums = w_sums.insert_axis(Axis(1));
        Zip::from(&mut h)
            .and(&numer)
            .and_broadcast(&w_sums)
            .for_each(|hv, &n, &d| *hv = *hv * n / d.max(floor));

        model = w.dot(&h);
        divergence.push(kl_divergence(v, &model));
    }
    Ok(NmfModel { w, h, divergence })
}

/// Low-rank approximation `WH` of a magnitude spectrogram.
pub fn nmf_magnitude<T: Real>(
    v: &MagnitudeSpectrogram<T>,
    rank: usize,
    iterations: usize,
    seed: u64,
) -> Result<MagnitudeSpectrogram<T>> {
    let model = kl_nmf(v.data(), rank, iterations, seed)?;
    MagnitudeSpectrogram::new(model.reconstruction(), *v.config())
}
