//! Fourier-collocation derivatives on the uniform periodic grid.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Cached FFT plans for one grid size; cheap to clone and share.
#[derive(Clone)]
pub struct SpectralDifferentiator {
    n: usize,
    length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl SpectralDifferentiator {
    pub fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            length,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Integer wavenumber of FFT bin `i`, in [-n/2, n/2].
    fn wavenumber(&self, i: usize) -> f64 {
        let n = self.n;
        if i <= n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    }

    fn to_modes(&self, f: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(f.len(), self.n);
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    fn to_values(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }

    /// Spectral derivative f'. The Nyquist mode is zeroed, the standard
    /// choice for real data on an even grid.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        let base = std::f64::consts::TAU / self.length;
        let mut modes = self.to_modes(f);
        let n = self.n;
        for (i, m) in modes.iter_mut().enumerate() {
            if n.is_multiple_of(2) && i == n / 2 {
                *m = Complex::new(0.0, 0.0);
            } else {
                let k = base * self.wavenumber(i);
                *m *= Complex::new(0.0, k);
            }
        }
        self.to_values(modes)
    }

    /// Mean-zero spectral antiderivative: derivative(antiderivative(f))
    /// recovers f minus its grid mean.
    pub fn antiderivative(&self, f: &[f64]) -> Vec<f64> {
        let base = std::f64::consts::TAU / self.length;
        let mut modes = self.to_modes(f);
        let n = self.n;
        for (i, m) in modes.iter_mut().enumerate() {
            if i == 0 || (n.is_multiple_of(2) && i == n / 2) {
                *m = Complex::new(0.0, 0.0);
            } else {
                let k = base * self.wavenumber(i);
                *m /= Complex::new(0.0, k);
            }
        }
        self.to_values(modes)
    }
}

/// Second-order centered difference on the periodic grid.
pub fn central_difference(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * dx))
        .collect()
}

/// Derivative method used wherever a field must be differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMethod {
    Spectral,
    Central,
}

impl DerivativeMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DerivativeMethod::Spectral => "spectral",
            DerivativeMethod::Central => "central",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spectral" => Some(DerivativeMethod::Spectral),
            "central" => Some(DerivativeMethod::Central),
            _ => None,
        }
    }

    pub fn apply(&self, d: &SpectralDifferentiator, f: &[f64], dx: f64) -> Vec<f64> {
        match self {
            DerivativeMethod::Spectral => d.derivative(f),
            DerivativeMethod::Central => central_difference(f, dx),
        }
    }
}
