//! Closed-form information-theoretic layer for the Gaussian degraded relay
//! channel `Y1 = X + Z1`, `Y = Y1 + X1 + Z2`.
//!
//! All rates are in bits per channel use. The source splits its power into
//! `alpha * P` for the fresh codeword and `(1 - alpha) * P` for a coherent
//! copy of the relay's codeword.

use crate::special::{gauss_hermite, softplus};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// Physical parameters of the channel: source power, relay power and the two
/// noise variances (all linear).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct RelayChannelParams {
    p: f64,
    p1: f64,
    n1: f64,
    n2: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    p: f64,
    p1: f64,
    n1: f64,
    n2: f64,
}

impl TryFrom<RawParams> for RelayChannelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.p, raw.p1, raw.n1, raw.n2)
    }
}

impl RelayChannelParams {
    pub fn new(p: f64, p1: f64, n1: f64, n2: f64) -> Result<Self> {
        let all_finite = [p, p1, n1, n2].iter().all(|v| v.is_finite());
        if !all_finite || p <= 0.0 || p1 < 0.0 || n1 <= 0.0 || n2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "channel parameters must be finite with P > 0, P1 >= 0, N1 > 0, N2 > 0 \
                 (got P={p}, P1={p1}, N1={n1}, N2={n2})"
            )));
        }
        Ok(Self { p, p1, n1, n2 })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn n1(&self) -> f64 {
        self.n1
    }

    pub fn n2(&self) -> f64 {
        self.n2
    }

    /// The same channel with both noise variances multiplied by `scale`.
    pub fn with_noise_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.p, self.p1, self.n1 * scale, self.n2 * scale)
    }

    /// True when the relay-decoding constraint can never bind, so all source
    /// power goes to the fresh codeword.
    pub fn relay_constraint_slack(&self) -> bool {
        self.p1 == 0.0 || self.p * self.n2 <= self.p1 * self.n1
    }
}

/// Fraction of source power spent on the fresh codeword.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PowerSplit(f64);

impl PowerSplit {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "power split must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PowerSplit {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PowerSplit> for f64 {
    fn from(s: PowerSplit) -> f64 {
        s.0
    }
}

/// The three design SNRs (linear): relay link, destination direct link with
/// the relay codeword known, and the bin-index link with the fresh codeword
/// treated as noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrTriple {
    pub snr1: f64,
    pub snr2: f64,
    pub snr3: f64,
}

impl SnrTriple {
    pub fn new(params: &RelayChannelParams, split: PowerSplit) -> Self {
        let a = split.alpha();
        let new_power = a * params.p;
        Self {
            snr1: new_power / params.n1,
            snr2: new_power / (params.n1 + params.n2),
            snr3: coherent_amplitude(params, split).powi(2) / (new_power + params.n1 + params.n2),
        }
    }
}

/// Rate bounds at a given power split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTargets {
    /// Bound for the `(n, k1)` code decoded at the relay.
    pub r_relay: f64,
    /// Bound for the bin-index code.
    pub r0: f64,
    /// Bound for the `(n, k1 + k2)` code decoded at the destination.
    pub r_dest: f64,
    pub capacity: f64,
}

/// Result of [`solve_optimal_alpha`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSplit {
    pub split: PowerSplit,
    pub rates: RateTargets,
    pub snrs: SnrTriple,
}

fn half_log2(x: f64) -> f64 {
    0.5 * x.log2()
}

/// Amplitude `sqrt(P1) + sqrt((1 - alpha) P)` with which the relay codeword
/// reaches the destination.
pub fn coherent_amplitude(params: &RelayChannelParams, split: PowerSplit) -> f64 {
    params.p1.sqrt() + ((1.0 - split.alpha()) * params.p).sqrt()
}

/// `1/2 log2(1 + alpha P / N1)`: decoding the fresh codeword at the relay.
pub fn relay_link_rate(params: &RelayChannelParams, split: PowerSplit) -> f64 {
    half_log2(1.0 + split.alpha() * params.p / params.n1)
}

/// `1/2 log2(1 + (sqrt(P1) + sqrt((1-alpha)P))^2 / (alpha P + N1 + N2))`:
/// decoding the bin index at the destination with the fresh codeword as
/// noise.
pub fn bin_index_rate(params: &RelayChannelParams, split: PowerSplit) -> f64 {
    let b = coherent_amplitude(params, split);
    half_log2(1.0 + b * b / (split.alpha() * params.p + params.n1 + params.n2))
}

/// `1/2 log2(1 + alpha P / (N1 + N2))`: decoding the fresh codeword at the
/// destination once the bin index is known.
pub fn destination_conditional_rate(params: &RelayChannelParams, split: PowerSplit) -> f64 {
    half_log2(1.0 + split.alpha() * params.p / (params.n1 + params.n2))
}

/// `1/2 log2(1 + (P + P1 + 2 sqrt((1-alpha) P P1)) / (N1 + N2))`.
pub fn composite_destination_rate(params: &RelayChannelParams, split: PowerSplit) -> f64 {
    let cross = 2.0 * ((1.0 - split.alpha()) * params.p * params.p1).sqrt();
    half_log2(1.0 + (params.p + params.p1 + cross) / (params.n1 + params.n2))
}

/// Maximises `min(relay_link_rate, composite_destination_rate)` over the
/// power split.
///
/// The relay rate increases and the composite rate decreases in `alpha`, so
/// an interior optimum is the unique crossing point, located by bisection to
/// relative tolerance `tol`. When the curves do not cross in `(0, 1)` (which
/// happens iff `P N2 <= P1 N1`) or the relay has no power, `alpha = 1`.
pub fn solve_optimal_alpha(params: &RelayChannelParams, tol: f64) -> Result<OptimalSplit> {
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "alpha tolerance must lie in (0, 1e-3], got {tol}"
        )));
    }
    let gap = |a: f64| {
        let s = PowerSplit(a);
        relay_link_rate(params, s) - composite_destination_rate(params, s)
    };
    let alpha = if params.relay_constraint_slack() {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= tol * lo || hi - lo <= f64::EPSILON {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let split = PowerSplit::new(alpha)?;
    let r_relay = relay_link_rate(params, split);
    let composite = composite_destination_rate(params, split);
    let rates = RateTargets {
        r_relay,
        r0: bin_index_rate(params, split),
        r_dest: destination_conditional_rate(params, split),
        capacity: r_relay.min(composite),
    };
    if ![rates.r_relay, rates.r0, rates.r_dest, rates.capacity]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::NonFinite("solve_optimal_alpha"));
    }
    Ok(OptimalSplit {
        split,
        rates,
        snrs: SnrTriple::new(params, split),
    })
}

/// Default number of Gauss–Hermite points for [`bi_awgn_capacity`].
pub const DEFAULT_CAPACITY_POINTS: usize = 64;

/// Capacity of the binary-input AWGN channel `y = +-A + n` at
/// `snr = A^2 / sigma^2`, computed as `1 - E[log2(1 + e^{-L})]` with the LLR
/// `L ~ N(2 snr, 4 snr)` by Gauss–Hermite quadrature.
pub fn bi_awgn_capacity(snr: f64, points: usize) -> f64 {
    if snr <= 0.0 {
        return 0.0;
    }
    let (x, w) = gauss_hermite(points.max(2));
    let mean = 2.0 * snr;
    let scale = 2.0 * (2.0 * snr).sqrt();
    let expected: f64 = x
        .iter()
        .zip(&w)
        .map(|(x, w)| w * softplus(-(mean + scale * x)))
        .sum::<f64>()
        / PI.sqrt();
    (1.0 - expected / LN_2).clamp(0.0, 1.0)
}

/// Gaussian-input capacity `1/2 log2(1 + snr)`.
pub fn gaussian_capacity(snr: f64) -> f64 {
    half_log2(1.0 + snr)
}
