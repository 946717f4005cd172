//! Power-of-two complex FFTs used by the grid transforms.
//!
//! Forward transforms use the `e^{-2πi jk/N}` kernel and are unnormalized;
//! inverse transforms use `e^{+2πi jk/N}` and are unnormalized as well.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Iterative radix-2 plan for one length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    twiddles: Vec<Complex64>,
    inverse_twiddles: Vec<Complex64>,
    rev: Vec<u32>,
}

impl Fft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let bits = len.trailing_zeros();
        let twiddles: Vec<Complex64> = (0..len / 2)
            .map(|j| {
                let a = -2.0 * PI * j as f64 / len as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let inverse_twiddles = twiddles.iter().map(|w| w.conj()).collect();
        let rev = (0..len as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Ok(Self { len, twiddles, inverse_twiddles, rev })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.twiddles);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse_twiddles);
    }

    fn run(&self, data: &mut [Complex64], tw: &[Complex64]) {
        let n = self.len;
        debug_assert_eq!(data.len(), n);
        for i in 0..n {
            let j = self.rev[i] as usize;
            if j > i {
                data.swap(i, j);
            }
        }
        // the first two stages have twiddles 1 and ∓i
        if n >= 2 {
            for pair in data.chunks_exact_mut(2) {
                let (u, v) = (pair[0], pair[1]);
                pair[0] = u + v;
                pair[1] = u - v;
            }
        }
        if n >= 4 {
            let rot = tw[n / 4];
            for quad in data.chunks_exact_mut(4) {
                let (u0, u1) = (quad[0], quad[1]);
                let t0 = quad[2];
                let t1 = Complex64::new(-rot.im * quad[3].im, rot.im * quad[3].re);
                quad[0] = u0 + t0;
                quad[2] = u0 - t0;
                quad[1] = u1 + t1;
                quad[3] = u1 - t1;
            }
        }
        let mut half = 4;
        while half < n {
            let stride = n / (2 * half);
            for chunk in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = chunk.split_at_mut(half);
                for (j, (u, v)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let t = tw[j * stride] * *v;
                    *v = *u - t;
                    *u += t;
                }
            }
            half *= 2;
        }
    }
}

/// Square `m × m` transforms over row-major data indexed `[a][b]`, where the
/// first index pairs with `θ¹`/`k¹` and the second with `θ²`/`k²`.
///
/// The banded variants skip work on wavenumbers with `|k| > band`: inputs of
/// [`Fft2::inverse_banded`] must vanish outside `|k¹| ≤ band`, and
/// [`Fft2::forward_banded`] only produces valid output for `|k²| ≤ band`.
#[derive(Debug, Clone)]
pub struct Fft2 {
    m: usize,
    fft: Fft,
    column: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(m: usize) -> Result<Self> {
        Ok(Self { m, fft: Fft::new(m)?, column: vec![Complex64::new(0.0, 0.0); m] })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward_banded(data, self.m);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse_banded(data, self.m);
    }

    pub fn inverse_banded(&mut self, data: &mut [Complex64], band: usize) {
        let m = self.m;
        for bin in active_bins(m, band) {
            self.fft.inverse(&mut data[bin * m..(bin + 1) * m]);
        }
        for b in 0..m {
            for a in 0..m {
                self.column[a] = data[a * m + b];
            }
            self.fft.inverse(&mut self.column);
            for a in 0..m {
                data[a * m + b] = self.column[a];
            }
        }
    }

    pub fn forward_banded(&mut self, data: &mut [Complex64], band: usize) {
        let m = self.m;
        for row in data.chunks_exact_mut(m) {
            self.fft.forward(row);
        }
        for b in active_bins(m, band) {
            for a in 0..m {
                self.column[a] = data[a * m + b];
            }
            self.fft.forward(&mut self.column);
            for a in 0..m {
                data[a * m + b] = self.column[a];
            }
        }
    }
}

/// Storage bin of wavenumber `k` on an `m`-point periodic grid.
#[inline]
pub fn bin(k: i32, m: usize) -> usize {
    k.rem_euclid(m as i32) as usize
}

/// Signed wavenumber stored in `bin`, in `[-m/2, m/2)`.
#[inline]
pub fn wavenumber(bin: usize, m: usize) -> i32 {
    if bin < m / 2 {
        bin as i32
    } else {
        bin as i32 - m as i32
    }
}

fn active_bins(m: usize, band: usize) -> impl Iterator<Item = usize> {
    (0..m).filter(move |&b| wavenumber(b, m).unsigned_abs() as usize <= band)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (j, v)| {
                    let a = sign * 2.0 * PI * (j * k) as f64 / n as f64;
                    acc + v * Complex64::new(libm::cos(a), libm::sin(a))
                })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for &n in &[1usize, 2, 4, 8, 32] {
            let x: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(libm::sin(j as f64 * 1.3) + 0.2, libm::cos(j as f64 * 0.7)))
                .collect();
            let plan = Fft::new(n).unwrap();
            let mut f = x.clone();
            plan.forward(&mut f);
            let mut g = x.clone();
            plan.inverse(&mut g);
            for (a, b) in f.iter().zip(naive_dft(&x, -1.0)) {
                assert!((a - b).norm() < 1e-12);
            }
            for (a, b) in g.iter().zip(naive_dft(&x, 1.0)) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert_eq!(Fft::new(12).unwrap_err(), Error::NotPowerOfTwo(12));
        assert!(Fft::new(0).is_err());
    }

    #[test]
    fn banded_round_trip() {
        let m = 16;
        let band = 5;
        let mut spec = vec![Complex64::new(0.0, 0.0); m * m];
        for a in 0..m {
            for b in 0..m {
                let (k1, k2) = (wavenumber(a, m), wavenumber(b, m));
                if k1.abs() <= band as i32 && k2.abs() <= band as i32 {
                    spec[a * m + b] = Complex64::new((k1 * 3 + k2) as f64, (k2 - k1) as f64 * 0.5);
                }
            }
        }
        let mut full = spec.clone();
        let mut plan = Fft2::new(m).unwrap();
        plan.inverse(&mut full);
        let mut banded = spec.clone();
        plan.inverse_banded(&mut banded, band);
        for (x, y) in full.iter().zip(&banded) {
            assert!((x - y).norm() < 1e-10);
        }
        plan.forward_banded(&mut banded, band);
        for a in 0..m {
            for b in 0..m {
                if wavenumber(b, m).abs() <= band as i32 {
                    let back = banded[a * m + b] / (m * m) as f64;
                    assert!((back - spec[a * m + b]).norm() < 1e-10);
                }
            }
        }
    }
}
