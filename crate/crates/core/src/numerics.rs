//! Complex-vector primitives shared by every stage of the pipeline.
//!
//! Both DFT directions carry a `1/√N` factor so that the transform is unitary
//! and energy is preserved. The fast path goes through `rustfft`; the direct
//! `O(N²)` form is kept alongside it as a reference implementation.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{invalid, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Name of the noise generator, recorded in every output manifest.
pub const RNG_ALGORITHM: &str = "ChaCha20Rng+StandardNormal (rand_chacha 0.9, rand_distr 0.5)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

pub fn ensure_finite(x: &[C64]) -> Result<()> {
    if x.is_empty() {
        return invalid("complex vector must be non-empty");
    }
    if let Some(i) = x.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid(format!("non-finite sample at index {i}"));
    }
    Ok(())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary DFT (`Forward`) or IDFT (`Inverse`) of `x`.
pub fn dft_unitary(x: &[C64], direction: Direction) -> Result<Vec<C64>> {
    ensure_finite(x)?;
    let mut buf = x.to_vec();
    dft_unitary_in_place(&mut buf, direction);
    Ok(buf)
}

/// In-place variant of [`dft_unitary`] for hot loops. `buf` must be non-empty.
pub fn dft_unitary_in_place(buf: &mut [C64], direction: Direction) {
    let n = buf.len();
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match direction {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    });
    fft.process(buf);
    let scale = 1.0 / (n as f64).sqrt();
    for z in buf.iter_mut() {
        *z *= scale;
    }
}

/// Direct evaluation of the unitary DFT sum. Twiddle indices are reduced
/// modulo `N` before the trigonometric call.
pub fn dft_unitary_direct(x: &[C64], direction: Direction) -> Result<Vec<C64>> {
    ensure_finite(x)?;
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    let step = direction.sign() * 2.0 * PI / n as f64;
    let twiddles: Vec<C64> = (0..n).map(|r| C64::from_polar(1.0, step * r as f64)).collect();
    Ok((0..n)
        .map(|k| {
            let mut acc = ComplexSum::default();
            for (i, &xi) in x.iter().enumerate() {
                acc.add(xi * twiddles[(i * k) % n]);
            }
            acc.value() * scale
        })
        .collect())
}

/// `n` i.i.d. circularly-symmetric complex Gaussian samples with total
/// variance `variance` (each quadrature carries `variance / 2`).
pub fn complex_gaussian(n: usize, variance: f64, seed: u64) -> Result<Vec<C64>> {
    if n == 0 {
        return invalid("sample count must be at least 1");
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return invalid(format!("noise variance must be positive, got {variance}"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sigma = (variance / 2.0).sqrt();
    Ok((0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(sigma * re, sigma * im)
        })
        .collect())
}

/// Seed for Monte-Carlo trial `trial` derived from `base` (SplitMix64 step).
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    let mut z = base.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

impl FromIterator<C64> for ComplexSum {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        let mut s = ComplexSum::default();
        iter.into_iter().for_each(|z| s.add(z));
        s
    }
}

pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).collect::<KahanSum>().value()
}

pub fn db10(x: f64) -> f64 {
    10.0 * x.log10()
}
