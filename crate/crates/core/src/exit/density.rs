//! One decoding iteration from symmetric-Gaussian variable-to-check messages.
//!
//! Incoming messages are `N(m, 2m)` with `m` fixed by the input error
//! probability. The check-node tanh rule is applied exactly to quantized
//! densities on a uniform LLR grid; the variable node adds `i - 1`
//! independent check outputs to the Gaussian channel LLR, and the error
//! probability of that sum is read off in the Fourier domain.

use crate::special::{q_function, q_inverse};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, OnceLock};

/// LLR quantisation step.
pub const LLR_STEP: f64 = 0.1;
/// Check-output magnitudes are clipped here; the clip only affects error
/// events below ~1e-13.
pub const LLR_CLIP: f64 = 30.0;
const HALF: usize = 300;
const BINS: usize = 2 * HALF + 1;

fn bin_value(b: usize) -> f64 {
    (b as f64 - HALF as f64) * LLR_STEP
}

/// Output bin (lower neighbour) and interpolation weight of the pairwise
/// check operation `2 atanh(tanh(a/2) tanh(b/2))` for every pair of bins.
struct BoxTable {
    lo: Vec<u16>,
    w: Vec<f64>,
}

fn box_table() -> &'static BoxTable {
    static TABLE: OnceLock<BoxTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut lo = vec![0u16; BINS * BINS];
        let mut w = vec![0.0; BINS * BINS];
        let t: Vec<f64> = (0..BINS).map(|b| (bin_value(b) / 2.0).tanh()).collect();
        for a in 0..BINS {
            for b in 0..BINS {
                let prod = t[a] * t[b];
                // atanh saturates where both inputs sit at the clip
                let r = 2.0 * prod.clamp(-1.0 + 1e-16, 1.0 - 1e-16).atanh();
                let r = r.clamp(-LLR_CLIP, LLR_CLIP);
                let x = r / LLR_STEP + HALF as f64;
                let l = (x.floor() as usize).min(BINS - 2);
                lo[a * BINS + b] = l as u16;
                w[a * BINS + b] = (x - l as f64).clamp(0.0, 1.0);
            }
        }
        BoxTable { lo, w }
    })
}

/// Mean of the symmetric Gaussian message whose hard-decision error
/// probability is `p`.
pub fn message_mean(p: f64) -> f64 {
    if p >= 0.5 {
        0.0
    } else {
        2.0 * q_inverse(p).powi(2)
    }
}

/// Quantized `N(m, 2m)` with the tails lumped into the end bins.
fn gaussian_pmf(mean: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; BINS];
    if mean <= 0.0 {
        pmf[HALF] = 1.0;
        return pmf;
    }
    let sd = (2.0 * mean).sqrt();
    // Differences of the nearer tail keep small masses accurate.
    let lower = |x: f64| q_function((mean - x) / sd);
    let upper = |x: f64| q_function((x - mean) / sd);
    for (b, slot) in pmf.iter_mut().enumerate() {
        let lo = if b == 0 { f64::NEG_INFINITY } else { bin_value(b) - 0.5 * LLR_STEP };
        let hi = if b + 1 == BINS { f64::INFINITY } else { bin_value(b) + 0.5 * LLR_STEP };
        let mass = if hi <= mean {
            lower(hi) - lower(lo)
        } else if lo >= mean {
            upper(lo) - upper(hi)
        } else {
            1.0 - lower(lo) - upper(hi)
        };
        *slot = mass.max(0.0);
    }
    pmf
}

fn check_combine(a: &[f64], b: &[f64], out: &mut [f64]) {
    let table = box_table();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (ia, &pa) in a.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        let row_lo = &table.lo[ia * BINS..(ia + 1) * BINS];
        let row_w = &table.w[ia * BINS..(ia + 1) * BINS];
        for ((&pb, &l), &w) in b.iter().zip(row_lo).zip(row_w) {
            if pb == 0.0 {
                continue;
            }
            let mass = pa * pb;
            let l = l as usize;
            out[l] += mass * (1.0 - w);
            out[l + 1] += mass * w;
        }
    }
}

/// Check-to-variable message densities for input error probability `p`,
/// one per requested check degree (in the order given).
pub fn check_output_pmfs(p: f64, check_degrees: &[usize]) -> Vec<Vec<f64>> {
    let max_degree = check_degrees.iter().copied().max().unwrap_or(2);
    let input = gaussian_pmf(message_mean(p));
    // partial[k] is the output of a check with k + 1 incoming messages
    let mut partial: Vec<Vec<f64>> = vec![input.clone()];
    for _ in 2..max_degree {
        let mut next = vec![0.0; BINS];
        check_combine(partial.last().unwrap(), &input, &mut next);
        partial.push(next);
    }
    check_degrees.iter().map(|&d| partial[d - 2].clone()).collect()
}

/// Mixture of per-degree check outputs under edge fractions `weights`.
pub fn mix_pmfs(pmfs: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; BINS];
    for (pmf, &w) in pmfs.iter().zip(weights) {
        for (o, &x) in out.iter_mut().zip(pmf) {
            *o += w * x;
        }
    }
    out
}

fn smooth_length(min: usize) -> usize {
    (min..)
        .find(|&n| {
            let mut m = n;
            for f in [2, 3, 5] {
                while m % f == 0 {
                    m /= f;
                }
            }
            m == 1
        })
        .unwrap()
}

/// Variable-node stage at a fixed channel SNR: precomputed spectra of the
/// error kernel `P(L0 + s < 0)` for every number of incoming check messages.
pub struct VariableKernel {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
    /// `kernels[k - 1]` serves variable degree `k + 1`.
    kernels: Vec<Vec<Complex<f64>>>,
}

impl VariableKernel {
    pub fn new(snr: f64, max_var_degree: usize) -> Self {
        let max_k = max_var_degree.max(2) - 1;
        let len = smooth_length(max_k * (BINS - 1) + 1);
        let fft = FftPlanner::new().plan_fft_forward(len);
        let kernels = (1..=max_k)
            .map(|k| {
                let offset = (k * HALF) as f64;
                let mut buf: Vec<Complex<f64>> = (0..len)
                    .map(|idx| {
                        let s = (idx as f64 - offset) * LLR_STEP;
                        Complex::new(channel_error_given_sum(snr, s), 0.0)
                    })
                    .collect();
                fft.process(&mut buf);
                buf.iter_mut().for_each(|c| *c = c.conj());
                buf
            })
            .collect();
        Self { fft, len, kernels }
    }

    pub fn max_var_degree(&self) -> usize {
        self.kernels.len() + 1
    }

    /// Error probability after the variable update for each degree in
    /// `var_degrees` (ascending), given the check-output density `u`.
    pub fn error_probabilities(&self, u: &[f64], var_degrees: &[usize]) -> Vec<f64> {
        let mut spectrum: Vec<Complex<f64>> = u
            .iter()
            .map(|&x| Complex::new(x, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.len)
            .collect();
        self.fft.process(&mut spectrum);
        let mut power = spectrum.clone();
        let mut current_k = 1;
        let scale = 1.0 / self.len as f64;
        var_degrees
            .iter()
            .map(|&d| {
                let k = d - 1;
                while current_k < k {
                    power.iter_mut().zip(&spectrum).for_each(|(p, s)| *p *= s);
                    current_k += 1;
                }
                let acc: f64 = power
                    .iter()
                    .zip(&self.kernels[k - 1])
                    .map(|(p, g)| (p * g).re)
                    .sum();
                (acc * scale).clamp(0.0, 0.5)
            })
            .collect()
    }
}

/// `P(L0 + s < 0)` for the channel LLR `L0 ~ N(2 snr, 4 snr)`, ties split.
fn channel_error_given_sum(snr: f64, s: f64) -> f64 {
    if snr <= 0.0 {
        return if s < 0.0 {
            1.0
        } else if s == 0.0 {
            0.5
        } else {
            0.0
        };
    }
    q_function((s + 2.0 * snr) / (2.0 * snr.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_pmf_is_normalised_and_consistent() {
        for m in [0.0, 0.5, 3.0, 20.0, 80.0] {
            let pmf = gaussian_pmf(m);
            let total: f64 = pmf.iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
        let pmf = gaussian_pmf(2.0);
        let mean: f64 = pmf.iter().enumerate().map(|(b, p)| p * bin_value(b)).sum();
        assert_abs_diff_eq!(mean, 2.0, epsilon = 1e-3);
    }

    #[test]
    fn check_combine_preserves_mass_and_symmetry() {
        let out = check_output_pmfs(0.1, &[2, 3, 6]);
        for pmf in &out {
            assert_abs_diff_eq!(pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        // a degree-2 check forwards its single input unchanged
        assert_eq!(out[0], gaussian_pmf(message_mean(0.1)));
        // more inputs make the output less reliable
        let err = |pmf: &Vec<f64>| pmf[..HALF].iter().sum::<f64>() + 0.5 * pmf[HALF];
        assert!(err(&out[1]) > err(&out[0]));
        assert!(err(&out[2]) > err(&out[1]));
    }

    #[test]
    fn tanh_expectation_is_multiplicative() {
        // E[tanh(U/2)] of a check output equals the product over its inputs.
        let p = 0.07;
        let input = gaussian_pmf(message_mean(p));
        let et = |pmf: &[f64]| -> f64 {
            pmf.iter().enumerate().map(|(b, w)| w * (bin_value(b) / 2.0).tanh()).sum()
        };
        let out = check_output_pmfs(p, &[4]);
        assert_abs_diff_eq!(et(&out[0]), et(&input).powi(3), epsilon = 2e-3);
    }

    #[test]
    fn variable_kernel_matches_direct_sum() {
        let snr = 0.8;
        let u = check_output_pmfs(0.12, &[6]).remove(0);
        let kernel = VariableKernel::new(snr, 4);
        let fast = kernel.error_probabilities(&u, &[2, 3, 4]);
        // direct convolution
        let mut sum = u.clone();
        for (j, &d) in [2usize, 3, 4].iter().enumerate() {
            if d > 2 {
                let mut next = vec![0.0; sum.len() + BINS - 1];
                for (a, &x) in sum.iter().enumerate() {
                    for (b, &y) in u.iter().enumerate() {
                        next[a + b] += x * y;
                    }
                }
                sum = next;
            }
            let k = d - 1;
            let direct: f64 = sum
                .iter()
                .enumerate()
                .map(|(idx, &w)| w * channel_error_given_sum(snr, (idx as f64 - (k * HALF) as f64) * LLR_STEP))
                .sum();
            assert_abs_diff_eq!(fast[j], direct, epsilon = 1e-13);
        }
    }
}
