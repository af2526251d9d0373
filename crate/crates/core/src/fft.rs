//! Complex discrete Fourier transforms of arbitrary length.
//!
//! Powers of two use an iterative radix-2 decimation-in-time kernel with
//! precomputed twiddles; every other length goes through Bluestein's
//! chirp-z algorithm layered on a power-of-two convolution.
//!
//! Sign convention: `forward` computes X_k = Σ_j x_j e^{-2πi jk/n};
//! `inverse` applies the conjugate transform and divides by n.

use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Radix2(Radix2),
    Bluestein(Box<Bluestein>),
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be positive");
        let kind = if len.is_power_of_two() {
            Kind::Radix2(Radix2::new(len))
        } else {
            Kind::Bluestein(Box::new(Bluestein::new(len)))
        };
        Self { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Length of the scratch buffer `*_with_scratch` expects (0 for powers of two).
    pub fn scratch_len(&self) -> usize {
        match &self.kind {
            Kind::Radix2(_) => 0,
            Kind::Bluestein(b) => b.conv.len,
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.forward_with_scratch(data, &mut scratch);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len()];
        self.inverse_with_scratch(data, &mut scratch);
    }

    pub fn forward_with_scratch(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        assert_eq!(data.len(), self.len);
        match &self.kind {
            Kind::Radix2(r) => r.forward(data),
            Kind::Bluestein(b) => b.forward(data, scratch),
        }
    }

    pub fn inverse_with_scratch(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        data.iter_mut().for_each(|z| *z = z.conj());
        self.forward_with_scratch(data, scratch);
        let s = 1.0 / self.len as f64;
        data.iter_mut().for_each(|z| *z = z.conj() * s);
    }
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    /// Stage twiddles laid out contiguously: stage with half-width h starts at h - 1.
    twiddles: Vec<Complex64>,
    rev: Vec<u32>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        let bits = len.trailing_zeros();
        let mut twiddles = Vec::with_capacity(len.saturating_sub(1));
        let mut half = 1;
        while half < len {
            twiddles.extend(
                (0..half).map(|k| Complex64::from_polar(1.0, -PI * k as f64 / half as f64)),
            );
            half *= 2;
        }
        let rev = (0..len as u32)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (32 - bits)
                }
            })
            .collect();
        Self { len, twiddles, rev }
    }

    fn forward(&self, data: &mut [Complex64]) {
        let n = self.len;
        for i in 0..n {
            let j = self.rev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        if n >= 2 {
            for pair in data.chunks_exact_mut(2) {
                let (a, b) = (pair[0], pair[1]);
                pair[0] = a + b;
                pair[1] = a - b;
            }
        }
        let mut half = 2;
        while half < n {
            let tw = &self.twiddles[half - 1..2 * half - 1];
            for block in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(tw) {
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            half *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    chirp: Vec<Complex64>,
    conv: Radix2,
    kernel_spectrum: Vec<Complex64>,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let conv_len = (2 * len - 1).next_power_of_two();
        // k² mod 2n keeps the chirp phase exact for large k.
        let modulus = 2 * len as u128;
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                let k2 = (k as u128 * k as u128) % modulus;
                Complex64::from_polar(1.0, -PI * k2 as f64 / len as f64)
            })
            .collect();
        let conv = Radix2::new(conv_len);
        let mut kernel = vec![Complex64::default(); conv_len];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            kernel[k] = chirp[k].conj();
            kernel[conv_len - k] = chirp[k].conj();
        }
        conv.forward(&mut kernel);
        Self {
            len,
            chirp,
            conv,
            kernel_spectrum: kernel,
        }
    }

    fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        let m = self.conv.len;
        assert!(scratch.len() >= m, "scratch buffer too short");
        let buf = &mut scratch[..m];
        for k in 0..self.len {
            buf[k] = data[k] * self.chirp[k];
        }
        buf[self.len..]
            .iter_mut()
            .for_each(|z| *z = Complex64::default());
        self.conv.forward(buf);
        for (z, h) in buf.iter_mut().zip(&self.kernel_spectrum) {
            // conjugate here so the following forward pass acts as an inverse
            *z = (*z * h).conj();
        }
        self.conv.forward(buf);
        let s = 1.0 / m as f64;
        for k in 0..self.len {
            data[k] = buf[k].conj() * s * self.chirp[k];
        }
    }
}

/// O(n²) reference transform, used to validate the fast paths.
pub fn naive_dft(data: &[Complex64]) -> Vec<Complex64> {
    let n = data.len();
    (0..n)
        .map(|k| {
            data.iter()
                .enumerate()
                .map(|(j, &x)| {
                    let phase = ((j * k) % n) as f64 / n as f64;
                    x * Complex64::from_polar(1.0, -2.0 * PI * phase)
                })
                .sum()
        })
        .collect()
}
