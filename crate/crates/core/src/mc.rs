//! Monte Carlo estimation of crossing probabilities from kernel averages.
//!
//! Paths are split into chunks of `chunk_size`. Chunk `k` draws from a ChaCha8
//! stream keyed by `(seed, k)`, so every chunk sees the same numbers no matter
//! which worker runs it. Chunk statistics are merged in chunk order, which makes
//! results bit-identical across thread counts.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::boundary::{envelopes, GeneralBoundary, Partition, PiecewiseLinearBand, Side};
use crate::error::{BcpError, Result};
use crate::kernel::{Kernel, NodeSamples, SeriesConfig};

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: u64,
    pub seed: u64,
    pub chunk_size: u64,
    pub series: SeriesConfig,
    /// Worker threads; 0 uses the ambient rayon pool.
    pub threads: usize,
    /// Average each draw with its mirror image `-x`. Each reported path then costs two kernel evaluations.
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 1_000_000,
            seed: 0,
            chunk_size: 8192,
            series: SeriesConfig::default(),
            threads: 0,
            antithetic: false,
        }
    }
}

impl McConfig {
    pub fn new(paths: u64, seed: u64) -> Self {
        McConfig {
            paths,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(BcpError::invalid("path count must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(BcpError::invalid("chunk size must be at least 1"));
        }
        self.series.validate()
    }
}

/// Kernel averages over the inner and outer envelope bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub lower_std_error: f64,
    pub upper_std_error: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A crossing-probability estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcpEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: u64,
    pub bracket: Option<Bracket>,
    /// Some two-sided series hit its term cap.
    pub series_cap_hit: bool,
}

/// Draws Brownian motion at the partition nodes: cumulative sums of `z_k √Δt_k`.
pub fn sample_nodes<R: Rng + ?Sized>(p: &Partition, rng: &mut R) -> NodeSamples {
    let sqrt_dt: Vec<f64> = p.gaps().map(f64::sqrt).collect();
    let mut x = vec![0.0; sqrt_dt.len()];
    fill_nodes(&sqrt_dt, rng, &mut x);
    NodeSamples::new(x).expect("Gaussian draws are finite")
}

#[inline]
fn fill_nodes<R: Rng + ?Sized>(sqrt_dt: &[f64], rng: &mut R, out: &mut [f64]) {
    let mut w = 0.0;
    for (slot, s) in out.iter_mut().zip(sqrt_dt) {
        let z: f64 = rng.sample(StandardNormal);
        w += z * s;
        *slot = w;
    }
}

/// The random stream used by chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        let (na, nb) = (a.n as f64, b.n as f64);
        Moments {
            n,
            mean: a.mean + d * nb / n as f64,
            m2: a.m2 + b.m2 + d * d * na * nb / n as f64,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let var = (self.m2 / (self.n - 1) as f64).max(0.0);
        (var / self.n as f64).sqrt()
    }
}

/// Pairwise merge in a fixed left-to-right tree.
fn merge_tree(mut parts: Vec<Moments>) -> Moments {
    while parts.len() > 1 {
        parts = parts
            .chunks(2)
            .map(|c| if c.len() == 2 { Moments::merge(c[0], c[1]) } else { c[0] })
            .collect();
    }
    parts.pop().unwrap_or_default()
}

struct ChunkResult {
    moments: Vec<Moments>,
    cap_hit: bool,
}

/// Averages every kernel over one common set of node samples.
///
/// With `ordered = true` the kernels are expected to be nested (each band
/// contains the previous one) and per-path values are forced non-decreasing
/// across the list, absorbing rounding-level violations of kernel monotonicity.
fn run_kernels(
    kernels: &[Kernel],
    p: &Partition,
    cfg: &McConfig,
    ordered: bool,
) -> Result<(Vec<Moments>, bool)> {
    cfg.validate()?;
    let sqrt_dt: Vec<f64> = p.gaps().map(f64::sqrt).collect();
    let chunks = cfg.paths.div_ceil(cfg.chunk_size);
    let run_chunk = |chunk: u64| -> ChunkResult {
        let start = chunk * cfg.chunk_size;
        let count = cfg.chunk_size.min(cfg.paths - start);
        let mut rng = chunk_rng(cfg.seed, chunk);
        let mut x = vec![0.0; sqrt_dt.len()];
        let mut mirror = vec![0.0; sqrt_dt.len()];
        let mut values = vec![0.0; kernels.len()];
        let mut moments = vec![Moments::default(); kernels.len()];
        let mut cap_hit = false;
        for _ in 0..count {
            fill_nodes(&sqrt_dt, &mut rng, &mut x);
            for (v, k) in values.iter_mut().zip(kernels) {
                let r = k.eval(&x);
                cap_hit |= r.cap_hit;
                *v = r.value;
            }
            if cfg.antithetic {
                for (m, &xi) in mirror.iter_mut().zip(&x) {
                    *m = -xi;
                }
                for (v, k) in values.iter_mut().zip(kernels) {
                    let r = k.eval(&mirror);
                    cap_hit |= r.cap_hit;
                    *v = 0.5 * (*v + r.value);
                }
            }
            if ordered {
                for i in (0..values.len().saturating_sub(1)).rev() {
                    values[i] = values[i].min(values[i + 1]);
                }
            }
            for (m, &v) in moments.iter_mut().zip(&values) {
                m.push(v);
            }
        }
        ChunkResult { moments, cap_hit }
    };
    let compute = || -> Vec<ChunkResult> { (0..chunks).into_par_iter().map(run_chunk).collect() };
    let results = if cfg.threads == 0 {
        compute()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| BcpError::NumericFailure(format!("cannot start worker pool: {e}")))?
            .install(compute)
    };
    let cap_hit = results.iter().any(|r| r.cap_hit);
    let merged = (0..kernels.len())
        .map(|k| merge_tree(results.iter().map(|r| r.moments[k]).collect()))
        .collect();
    Ok((merged, cap_hit))
}

/// Plain Monte Carlo estimate of the probability that Brownian motion stays inside `band`.
pub fn estimate_bcp(band: &PiecewiseLinearBand, cfg: &McConfig) -> Result<BcpEstimate> {
    let kernel = Kernel::new(band, cfg.series)?;
    let (m, cap_hit) = run_kernels(std::slice::from_ref(&kernel), band.partition(), cfg, false)?;
    Ok(BcpEstimate {
        mean: m[0].mean,
        std_error: m[0].std_error(),
        paths: cfg.paths,
        bracket: None,
        series_cap_hit: cap_hit,
    })
}

/// Evaluates several bands on the same node samples, returning `(mean, std_error)` per band.
pub fn estimate_common(
    bands: &[&PiecewiseLinearBand],
    cfg: &McConfig,
) -> Result<(Vec<(f64, f64)>, bool)> {
    let first = bands
        .first()
        .ok_or_else(|| BcpError::invalid("no bands to estimate"))?;
    if bands.iter().any(|b| b.partition() != first.partition()) {
        return Err(BcpError::invalid("bands must share a partition"));
    }
    let kernels = bands
        .iter()
        .map(|b| Kernel::new(b, cfg.series))
        .collect::<Result<Vec<_>>>()?;
    let (m, cap) = run_kernels(&kernels, first.partition(), cfg, false)?;
    Ok((m.iter().map(|m| (m.mean, m.std_error())).collect(), cap))
}

/// Inner and outer envelope bands for a pair of general boundaries.
pub fn envelope_bands(
    gb_lower: &GeneralBoundary,
    gb_upper: &GeneralBoundary,
    p: &Partition,
    m: usize,
) -> Result<(PiecewiseLinearBand, PiecewiseLinearBand)> {
    if gb_lower.side() != Side::Lower || gb_upper.side() != Side::Upper {
        return Err(BcpError::InvalidBoundaries(
            "expected a lower-side and an upper-side boundary".into(),
        ));
    }
    let (lo_in, lo_out) = envelopes(gb_lower, p, m)?;
    let (up_in, up_out) = envelopes(gb_upper, p, m)?;
    Ok((
        PiecewiseLinearBand::new(lo_in, up_in)?,
        PiecewiseLinearBand::new(lo_out, up_out)?,
    ))
}

/// Bracketed estimate for general boundaries.
///
/// Both envelope bands are evaluated on the same samples; the bracket holds the
/// two kernel averages, the point estimate is their midpoint and `std_error`
/// is that of the outer-band average.
pub fn estimate_bcp_bracketed(
    gb_lower: &GeneralBoundary,
    gb_upper: &GeneralBoundary,
    p: &Partition,
    m: usize,
    cfg: &McConfig,
) -> Result<BcpEstimate> {
    if !gb_lower.is_finite() && !gb_upper.is_finite() {
        return Err(BcpError::InvalidBoundaries(
            "both boundaries are infinite; the probability is trivially 1".into(),
        ));
    }
    let (inner, outer) = envelope_bands(gb_lower, gb_upper, p, m)?;
    let kernels = [Kernel::new(&inner, cfg.series)?, Kernel::new(&outer, cfg.series)?];
    let (mom, cap_hit) = run_kernels(&kernels, p, cfg, true)?;
    let bracket = Bracket {
        lower: mom[0].mean,
        upper: mom[1].mean,
        lower_std_error: mom[0].std_error(),
        upper_std_error: mom[1].std_error(),
    };
    Ok(BcpEstimate {
        mean: 0.5 * (bracket.lower + bracket.upper),
        std_error: bracket.upper_std_error,
        paths: cfg.paths,
        bracket: Some(bracket),
        series_cap_hit: cap_hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{uniform_partition, PiecewiseLinearBoundary};

    #[test]
    fn moments_merge_matches_single_pass() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        data.iter().for_each(|&v| whole.push(v));
        let parts: Vec<Moments> = data
            .chunks(77)
            .map(|c| {
                let mut m = Moments::default();
                c.iter().for_each(|&v| m.push(v));
                m
            })
            .collect();
        let merged = merge_tree(parts);
        assert_eq!(merged.n, whole.n);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9 * whole.m2);
    }

    #[test]
    fn fixed_seed_reproduces_samples() {
        let p = uniform_partition(1.0, 5).unwrap();
        let a = sample_nodes(&p, &mut chunk_rng(7, 3));
        let b = sample_nodes(&p, &mut chunk_rng(7, 3));
        let c = sample_nodes(&p, &mut chunk_rng(7, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation() {
        let p = uniform_partition(1.0, 1).unwrap();
        let up = PiecewiseLinearBoundary::continuous(p, Side::Upper, &[1.0, 1.0]).unwrap();
        let band = PiecewiseLinearBand::upper_only(up).unwrap();
        let mut cfg = McConfig::new(0, 1);
        assert!(estimate_bcp(&band, &cfg).is_err());
        cfg.paths = 10;
        cfg.chunk_size = 0;
        assert!(estimate_bcp(&band, &cfg).is_err());
    }

    #[test]
    fn both_infinite_is_rejected() {
        let p = uniform_partition(1.0, 4).unwrap();
        let lo = GeneralBoundary::infinite(Side::Lower, 1.0).unwrap();
        let up = GeneralBoundary::infinite(Side::Upper, 1.0).unwrap();
        let err = estimate_bcp_bracketed(&lo, &up, &p, 10, &McConfig::new(10, 1)).unwrap_err();
        assert!(matches!(err, BcpError::InvalidBoundaries(_)));
    }
}
