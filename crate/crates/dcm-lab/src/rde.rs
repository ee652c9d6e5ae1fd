//! Population dynamics for the distributional fixed point of the bulk law
//! of n pi, and tail-exponent estimation on its samples.
//!
//! One resampling round rebuilds the whole pool: each new sample draws a
//! vertex type with probability proportional to fraction * out-degree (the
//! law of the type found at the end of a uniform tail), averages `in`
//! uniformly resampled pool members and divides by `out`. In the half-half
//! (2,3)(3,2) family this reduces exactly to the two-point mixture where the
//! divisor is 2 with probability 2/5 and 3 with probability 3/5.

use std::io::{self, Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::degseq::DegreeModel;
use crate::rng::{stream_rng, SALT_RDE, SALT_SAMPLE};
use crate::util::{ksum, linear_fit, Kahan};

/// Sampling tables derived from a degree model.
#[derive(Clone, Debug)]
pub struct RdeKernel {
    /// (in, out) per type.
    types: Vec<(u16, u16)>,
    /// Cumulative tail-biased law (fraction * out / mean_degree).
    cum_tail: Vec<f64>,
    /// Cumulative uniform-vertex law (fraction).
    cum_uniform: Vec<f64>,
    /// n/m = 1 / mean degree.
    n_over_m: f64,
}

impl RdeKernel {
    pub fn new(model: &DegreeModel) -> Self {
        let mean = model.mean_degree();
        let mut cum_tail = Vec::new();
        let mut cum_uniform = Vec::new();
        let mut types = Vec::new();
        let mut t_acc = 0.0;
        let mut u_acc = 0.0;
        for &(t, f) in model.entries() {
            let f = *f.numer() as f64 / *f.denom() as f64;
            t_acc += f * t.out_deg as f64 / mean;
            u_acc += f;
            cum_tail.push(t_acc);
            cum_uniform.push(u_acc);
            types.push((t.in_deg, t.out_deg));
        }
        *cum_tail.last_mut().unwrap() = 1.0;
        *cum_uniform.last_mut().unwrap() = 1.0;
        RdeKernel {
            types,
            cum_tail,
            cum_uniform,
            n_over_m: 1.0 / mean,
        }
    }

    fn draw(&self, cum: &[f64], rng: &mut ChaCha8Rng) -> (u16, u16) {
        let u: f64 = rng.random();
        let idx = cum.partition_point(|&c| c < u).min(self.types.len() - 1);
        self.types[idx]
    }

    /// Probability that the tail-biased draw lands on each type.
    pub fn tail_biased_probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cum_tail
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn prefactor(&self) -> f64 {
        self.n_over_m
    }
}

/// A sample pool approximating the law of the mean-one fixed point.
#[derive(Clone, Debug)]
pub struct RdePopulation {
    kernel: RdeKernel,
    pool: Vec<f64>,
    round: u32,
    seed: u64,
}

const BLOCK: usize = 4096;

fn fill_blocks<F>(out: &mut [f64], seed: u64, salt: u64, stream_hi: u64, f: F)
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        let mut rng = stream_rng(seed, salt, (stream_hi << 20) | b as u64);
        for slot in chunk {
            *slot = f(&mut rng);
        }
    });
}

impl RdePopulation {
    /// Fresh pool of i.i.d. mean-one exponentials (round 0).
    pub fn new(model: &DegreeModel, pool_size: usize, seed: u64) -> Self {
        assert!(pool_size >= 10_000, "pool too small for population dynamics");
        let mut pool = vec![0.0; pool_size];
        fill_blocks(&mut pool, seed, SALT_RDE, 0, |rng| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        });
        RdePopulation {
            kernel: RdeKernel::new(model),
            pool,
            round: 0,
            seed,
        }
    }

    /// Test/analysis constructor with an explicit pool.
    pub fn with_pool(model: &DegreeModel, pool: Vec<f64>, seed: u64) -> Self {
        RdePopulation {
            kernel: RdeKernel::new(model),
            pool,
            round: 0,
            seed,
        }
    }

    pub fn pool(&self) -> &[f64] {
        &self.pool
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn kernel(&self) -> &RdeKernel {
        &self.kernel
    }

    pub fn mean(&self) -> f64 {
        ksum(&self.pool) / self.pool.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let mut acc = Kahan::default();
        for &z in &self.pool {
            acc.add((z - mean) * (z - mean));
        }
        acc.value() / (self.pool.len() as f64 - 1.0)
    }

    /// Run `rounds` full-pool regenerations.
    pub fn iterate(&mut self, rounds: u32) {
        for _ in 0..rounds {
            self.round += 1;
            let src = std::mem::take(&mut self.pool);
            let mut next = vec![0.0; src.len()];
            let kernel = &self.kernel;
            let len = src.len();
            fill_blocks(&mut next, self.seed, SALT_RDE, self.round as u64, |rng| {
                let (in_deg, out_deg) = kernel.draw(&kernel.cum_tail, rng);
                let mut sum = 0.0;
                for _ in 0..in_deg {
                    sum += src[rng.random_range(0..len)];
                }
                sum / out_deg as f64
            });
            self.pool = next;
        }
    }

    /// Samples of the bulk variable: a uniform vertex's in-degree many pool
    /// members summed and scaled by n/m.
    pub fn sample_x(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut out = vec![0.0; count];
        let kernel = &self.kernel;
        let pool = &self.pool;
        let len = pool.len();
        fill_blocks(&mut out, seed, SALT_SAMPLE, 0, |rng| {
            let (in_deg, _) = kernel.draw(&kernel.cum_uniform, rng);
            let mut sum = 0.0;
            for _ in 0..in_deg {
                sum += pool[rng.random_range(0..len)];
            }
            kernel.n_over_m * sum
        });
        out
    }

    /// Binary snapshot: magic, round, seed, length, checksum, f64 payload.
    pub fn write_snapshot(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(b"RDE1")?;
        w.write_all(&self.round.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.pool.len() as u64).to_le_bytes())?;
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &z in &self.pool {
            for b in z.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        w.write_all(&h.to_le_bytes())?;
        for &z in &self.pool {
            w.write_all(&z.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot(model: &DegreeModel, r: &mut impl Read) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() < 32 || &buf[0..4] != b"RDE1" {
            return Err(bad("bad snapshot header"));
        }
        let round = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        let seed = u64::from_le_bytes(buf[8..16].try_into().unwrap());
        let len = u64::from_le_bytes(buf[16..24].try_into().unwrap()) as usize;
        let checksum = u64::from_le_bytes(buf[24..32].try_into().unwrap());
        if buf.len() != 32 + 8 * len {
            return Err(bad("bad snapshot length"));
        }
        let mut pool = Vec::with_capacity(len);
        for i in 0..len {
            let s = 32 + 8 * i;
            pool.push(f64::from_le_bytes(buf[s..s + 8].try_into().unwrap()));
        }
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &z in &pool {
            for b in z.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        if h != checksum {
            return Err(bad("snapshot checksum mismatch"));
        }
        Ok(RdePopulation {
            kernel: RdeKernel::new(model),
            pool,
            round,
            seed,
        })
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {need} samples, got {got}")]
    NotEnoughSamples { need: usize, got: usize },
    #[error("window degenerate: [{lo}, {hi}]")]
    DegenerateWindow { lo: f64, hi: f64 },
    #[error("only {surviving} bins kept at least 50 samples; need 4")]
    TooFewBins { surviving: usize },
}

/// Tail-fit diagnostics. `alpha_hat` is the fitted exponent magnitude.
#[derive(Clone, Debug, Serialize)]
pub struct TailFit {
    pub alpha_hat: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub bins: usize,
    pub bin_counts: Vec<u64>,
    /// (log x, log(-log tail-mass)) points used in the regression.
    pub points: Vec<(f64, f64)>,
}

impl TailFit {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha_hat": self.alpha_hat,
            "r2": self.r2,
            "window": [self.window.0, self.window.1],
            "bins": self.bins,
        })
    }
}

const MIN_BIN_COUNT: u64 = 50;
const DEFAULT_BINS: usize = 12;

/// Left-tail fit: regress log(-log F(x)) on log x over a log-spaced grid in
/// the window; the negated slope estimates the stretching exponent. Bins
/// with fewer than 50 samples are dropped; fewer than 4 surviving points
/// refuse the fit. `window = None` picks the adaptive default (lower edge at
/// the 50*bins-th smallest sample, upper edge at the 30th percentile).
pub fn fit_left_tail(
    samples: &mut [f64],
    window: Option<(f64, f64)>,
    bins: Option<usize>,
) -> Result<TailFit, FitError> {
    let bins = bins.unwrap_or(DEFAULT_BINS);
    let need = (MIN_BIN_COUNT as usize * bins).max(1000);
    if samples.len() < need {
        return Err(FitError::NotEnoughSamples {
            need,
            got: samples.len(),
        });
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    let (lo, hi) = window.unwrap_or_else(|| {
        let lo = samples[MIN_BIN_COUNT as usize * bins - 1];
        let hi = samples[(0.3 * n as f64) as usize];
        (lo, hi)
    });
    if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo {
        return Err(FitError::DegenerateWindow { lo, hi });
    }
    let edges = log_edges(lo, hi, bins);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut bin_counts = Vec::new();
    for j in 1..edges.len() {
        let below_prev = samples.partition_point(|&v| v <= edges[j - 1]) as u64;
        let below = samples.partition_point(|&v| v <= edges[j]) as u64;
        let count = below - below_prev;
        bin_counts.push(count);
        if count < MIN_BIN_COUNT {
            continue;
        }
        let f = below as f64 / n as f64;
        if f <= 0.0 || f >= 1.0 {
            continue;
        }
        xs.push(edges[j].ln());
        ys.push((-f.ln()).ln());
    }
    if xs.len() < 4 {
        return Err(FitError::TooFewBins { surviving: xs.len() });
    }
    let (_, slope, r2) = linear_fit(&xs, &ys);
    Ok(TailFit {
        alpha_hat: -slope,
        r2,
        window: (lo, hi),
        bins,
        bin_counts,
        points: xs.into_iter().zip(ys).collect(),
    })
}

/// Right-tail analogue: regress log(-log(1 - F(x))) on log x for large x.
/// Exploratory; the fitted exponent is reported with diagnostics only.
pub fn fit_right_tail(
    samples: &mut [f64],
    window: Option<(f64, f64)>,
    bins: Option<usize>,
) -> Result<TailFit, FitError> {
    let bins = bins.unwrap_or(DEFAULT_BINS);
    let need = (MIN_BIN_COUNT as usize * bins).max(1000);
    if samples.len() < need {
        return Err(FitError::NotEnoughSamples {
            need,
            got: samples.len(),
        });
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    let (lo, hi) = window.unwrap_or_else(|| {
        let lo = samples[(0.7 * n as f64) as usize];
        let hi = samples[n - MIN_BIN_COUNT as usize * bins];
        (lo, hi)
    });
    if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo {
        return Err(FitError::DegenerateWindow { lo, hi });
    }
    let edges = log_edges(lo, hi, bins);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut bin_counts = Vec::new();
    for j in 1..edges.len() {
        let below_prev = samples.partition_point(|&v| v <= edges[j - 1]) as u64;
        let below = samples.partition_point(|&v| v <= edges[j]) as u64;
        let count = below - below_prev;
        bin_counts.push(count);
        if count < MIN_BIN_COUNT {
            continue;
        }
        let s = 1.0 - below as f64 / n as f64;
        if s <= 0.0 || s >= 1.0 {
            continue;
        }
        xs.push(edges[j].ln());
        ys.push((-s.ln()).ln());
    }
    if xs.len() < 4 {
        return Err(FitError::TooFewBins { surviving: xs.len() });
    }
    let (_, slope, r2) = linear_fit(&xs, &ys);
    Ok(TailFit {
        alpha_hat: slope,
        r2,
        window: (lo, hi),
        bins,
        bin_counts,
        points: xs.into_iter().zip(ys).collect(),
    })
}

fn log_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..=bins)
        .map(|j| (llo + (lhi - llo) * j as f64 / bins as f64).exp())
        .collect()
}

/// Samples from the law F(x) = exp(-x^(-alpha)) by inverse transform; its
/// left tail has the exact stretching exponent alpha. Oracle input for
/// validating the fit machinery.
pub fn synthetic_left_tail_samples(alpha: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    fill_blocks(&mut out, seed, SALT_SAMPLE, 1, |rng| {
        let u: f64 = rng.random();
        (-(u.max(1e-300)).ln()).powf(-1.0 / alpha)
    });
    out
}

/// Samples with survival exp(-x^beta): right-tail oracle.
pub fn synthetic_right_tail_samples(beta: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    fill_blocks(&mut out, seed, SALT_SAMPLE, 2, |rng| {
        let u: f64 = rng.random();
        (-(1.0 - u).max(1e-300).ln()).powf(1.0 / beta)
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::ks_distance;

    #[test]
    fn kernel_reduces_to_two_point_mixture() {
        let k = RdeKernel::new(&DegreeModel::two_three());
        let probs = k.tail_biased_probabilities();
        // Types sorted: (2,3) then (3,2). Divisor 3 with prob 3/5 comes from
        // type (2,3); divisor 2 with prob 2/5 from type (3,2).
        assert!((probs[0] - 0.6).abs() < 1e-15);
        assert!((probs[1] - 0.4).abs() < 1e-15);
        assert!((k.prefactor() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn mean_is_preserved() {
        let mut pop = RdePopulation::new(&DegreeModel::two_three(), 100_000, 7);
        assert!((pop.mean() - 1.0).abs() < 2e-2);
        for _ in 0..10 {
            pop.iterate(1);
            assert!((pop.mean() - 1.0).abs() < 2e-2, "round {}", pop.round());
        }
    }

    #[test]
    fn regular_pool_collapses_geometrically() {
        let mut pop = RdePopulation::new(&DegreeModel::regular(3), 50_000, 3);
        let mut prev = pop.variance();
        assert!(prev > 0.5, "exponential start has variance ~1");
        for _ in 0..6 {
            pop.iterate(1);
            let var = pop.variance();
            // Averaging d i.i.d. samples divides the variance by d.
            let expect = prev / 3.0;
            assert!(
                (var - expect).abs() < 0.35 * expect,
                "variance {var} vs expected {expect}"
            );
            prev = var;
        }
        pop.iterate(54);
        assert!(pop.variance() < 1e-8);
    }

    #[test]
    fn x_prefactor_and_mean() {
        let mut pop = RdePopulation::new(&DegreeModel::two_three(), 200_000, 11);
        pop.iterate(20);
        let xs = pop.sample_x(200_000, 5);
        let mean = ksum(&xs) / xs.len() as f64;
        assert!((mean - 1.0).abs() < 1e-2, "mean {mean}");
    }

    #[test]
    fn regular_x_is_exactly_one_at_fixed_point() {
        let pop = RdePopulation::with_pool(&DegreeModel::regular(4), vec![1.0; 1000], 2);
        let xs = pop.sample_x(500, 3);
        assert!(xs.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn consecutive_rounds_ks_plateaus() {
        let mut pop = RdePopulation::new(&DegreeModel::two_three(), 200_000, 13);
        let mut ks_values = Vec::new();
        for _ in 0..30 {
            let prev = pop.pool().to_vec();
            pop.iterate(1);
            let mut a = prev;
            let mut b = pop.pool().to_vec();
            ks_values.push(ks_distance(&mut a, &mut b));
        }
        let early = ks_values[0];
        let late = ks_values[25..].iter().cloned().fold(0.0f64, f64::max);
        assert!(late < early, "no distributional convergence");
        assert!(late < 5e-3, "late KS {late}");
    }

    #[test]
    fn synthetic_left_tail_recovered() {
        let alpha = 1.70951;
        let mut xs = synthetic_left_tail_samples(alpha, 2_000_000, 17);
        let fit = fit_left_tail(&mut xs, None, None).unwrap();
        assert!(
            (fit.alpha_hat - alpha).abs() < 0.1 * alpha,
            "alpha_hat {} r2 {}",
            fit.alpha_hat,
            fit.r2
        );
        assert!(fit.r2 > 0.99);
    }

    #[test]
    fn synthetic_right_tail_recovered() {
        let beta = 1.3;
        let mut xs = synthetic_right_tail_samples(beta, 2_000_000, 19);
        let fit = fit_right_tail(&mut xs, None, None).unwrap();
        assert!(
            (fit.alpha_hat - beta).abs() < 0.1 * beta,
            "exponent {} r2 {}",
            fit.alpha_hat,
            fit.r2
        );
    }

    #[test]
    fn degenerate_pool_refuses_fit() {
        let pop = RdePopulation::with_pool(&DegreeModel::regular(3), vec![1.0; 100_000], 2);
        let mut xs = pop.sample_x(100_000, 1);
        assert!(fit_left_tail(&mut xs, None, None).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let model = DegreeModel::two_three();
        let mut pop = RdePopulation::new(&model, 10_000, 23);
        pop.iterate(2);
        let mut buf = Vec::new();
        pop.write_snapshot(&mut buf).unwrap();
        let back = RdePopulation::read_snapshot(&model, &mut &buf[..]).unwrap();
        assert_eq!(back.round(), 2);
        assert_eq!(back.pool(), pop.pool());
    }

    #[test]
    fn fit_json_schema() {
        let mut xs = synthetic_left_tail_samples(1.5, 200_000, 3);
        let fit = fit_left_tail(&mut xs, None, None).unwrap();
        let j = fit.to_json();
        assert!(j.get("alpha_hat").is_some());
        assert!(j.get("r2").is_some());
        assert!(j.get("window").is_some());
        assert!(j.get("bins").is_some());
    }
}
