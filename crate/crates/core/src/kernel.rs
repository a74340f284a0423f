//! Conditional non-crossing kernels for Brownian motion and piecewise-linear bands.
//!
//! Given Brownian values `x_1..x_n` at the partition nodes (with `x_0 = 0`), the
//! kernel is the probability that the Brownian bridges joining consecutive
//! nodes all stay inside the band. Its expectation over the Gaussian node law
//! is the boundary crossing probability of the band.

use crate::boundary::{NodeSide, PiecewiseLinearBand};
use crate::error::{BcpError, Result};
use crate::normal::{ln_phi, phi};

/// Brownian values at partition nodes `t_1..t_n`; `x_0 = 0` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSamples(Vec<f64>);

impl NodeSamples {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(BcpError::invalid(format!("node sample {v} is not finite")));
        }
        Ok(NodeSamples(x))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Upper bound on the number of series terms after escalation.
pub const SERIES_HARD_CAP: usize = 64;

/// Truncation policy for the two-sided alternating series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Terms summed before the tail check (six suffice for typical bands).
    pub max_terms: usize,
    /// A term below this magnitude ends the sum.
    pub tail_tolerance: f64,
    /// Keep adding terms past `max_terms` (up to [`SERIES_HARD_CAP`]) while the last one exceeds the tolerance.
    pub escalate: bool,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            max_terms: 6,
            tail_tolerance: 1e-12,
            escalate: true,
        }
    }
}

impl SeriesConfig {
    /// Exactly `terms` terms, no early exit and no escalation.
    pub fn fixed(terms: usize) -> Self {
        SeriesConfig {
            max_terms: terms,
            tail_tolerance: 0.0,
            escalate: false,
        }
    }

    pub fn with_terms(terms: usize) -> Self {
        SeriesConfig {
            max_terms: terms,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms == 0 {
            return Err(BcpError::invalid("series needs at least one term"));
        }
        if !(self.tail_tolerance >= 0.0) {
            return Err(BcpError::invalid("series tail tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// `exp(z)` for `z ≤ 0`, flushing to zero below the double-precision underflow point.
#[inline]
fn exp_neg(z: f64) -> f64 {
    if z < -745.0 {
        0.0
    } else {
        z.exp()
    }
}

/// Probability that a Brownian bridge of duration `dt` starting `u0` and ending
/// `u1` below a straight boundary never touches it (`u0, u1 > 0`).
#[inline]
fn bridge_one_sided(u0: f64, u1: f64, two_over_dt: f64) -> f64 {
    -(-two_over_dt * u0 * u1).exp_m1()
}

/// `j`-th series term for one interval written in distances to the boundaries:
/// `u = β - x`, `l = x - α` at each end and `δ = β - α`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn series_term(j: f64, u0: f64, l0: f64, d0: f64, u1: f64, l1: f64, d1: f64, two_over_dt: f64) -> f64 {
    let jm = j - 1.0;
    let cross = jm * d0 * d1;
    let t1 = exp_neg(-two_over_dt * (jm * d0 + u0) * (jm * d1 + u1));
    let t2 = exp_neg(-two_over_dt * j * (cross + d0 * u1 + d1 * l0));
    let t3 = exp_neg(-two_over_dt * (jm * d0 + l0) * (jm * d1 + l1));
    let t4 = exp_neg(-two_over_dt * j * (cross + d0 * l1 + d1 * u0));
    (t1 - t2) + (t3 - t4)
}

/// Per-interval two-sided factor `1 - Σ_j h_j`, clamped to `[0, 1]`.
/// Returns the factor and whether the hard cap stopped the series early.
#[inline]
#[allow(clippy::too_many_arguments)]
fn two_sided_factor(
    u0: f64,
    l0: f64,
    d0: f64,
    u1: f64,
    l1: f64,
    d1: f64,
    two_over_dt: f64,
    cfg: &SeriesConfig,
) -> (f64, bool) {
    let mut sum = 0.0;
    let mut j = 1usize;
    loop {
        let h = series_term(j as f64, u0, l0, d0, u1, l1, d1, two_over_dt);
        sum += h;
        let small = h.abs() < cfg.tail_tolerance;
        if small {
            break;
        }
        if j >= cfg.max_terms {
            if !cfg.escalate {
                break;
            }
            if j >= SERIES_HARD_CAP {
                return ((1.0 - sum).clamp(0.0, 1.0), true);
            }
        }
        j += 1;
    }
    ((1.0 - sum).clamp(0.0, 1.0), false)
}

fn check_len(band: &PiecewiseLinearBand, x: &NodeSamples) -> Result<()> {
    let n = band.partition().len();
    if x.len() != n {
        return Err(BcpError::invalid(format!(
            "expected {n} node samples, got {}",
            x.len()
        )));
    }
    Ok(())
}

/// One-sided kernel for a band whose lower side is `-inf`.
pub fn g_one_sided(band: &PiecewiseLinearBand, x: &NodeSamples) -> Result<f64> {
    if !band.lower().is_infinite() {
        return Err(BcpError::invalid(
            "one-sided kernel needs an infinite lower boundary",
        ));
    }
    if band.upper().is_infinite() {
        return Err(BcpError::invalid(
            "one-sided kernel needs a finite upper boundary",
        ));
    }
    check_len(band, x)?;
    band.check_start(0.0)?;
    Ok(Kernel::build(band, SeriesConfig::default()).eval(x.as_slice()).value)
}

/// Two-sided kernel; both boundaries must be finite.
pub fn g_two_sided(band: &PiecewiseLinearBand, x: &NodeSamples, cfg: &SeriesConfig) -> Result<f64> {
    if band.lower().is_infinite() || band.upper().is_infinite() {
        return Err(BcpError::invalid(
            "two-sided kernel needs finite lower and upper boundaries",
        ));
    }
    cfg.validate()?;
    check_len(band, x)?;
    band.check_start(0.0)?;
    Ok(Kernel::build(band, *cfg).eval(x.as_slice()).value)
}

/// The `j`-th term of the two-sided series on interval `i`, using the right
/// limits at `t_{i-1}` and the left limits at `t_i`.
pub fn h_term(
    i: usize,
    j: usize,
    x_prev: f64,
    x_cur: f64,
    band: &PiecewiseLinearBand,
) -> Result<f64> {
    let n = band.partition().len();
    if i == 0 || i > n {
        return Err(BcpError::IndexOutOfRange {
            index: i,
            detail: format!("intervals are numbered 1..={n}"),
        });
    }
    if j == 0 {
        return Err(BcpError::invalid("series index j starts at 1"));
    }
    let (a0, b0, d0) = band.values(i - 1, NodeSide::Right)?;
    let (a1, b1, d1) = band.values(i, NodeSide::Left)?;
    if ![a0, b0, a1, b1].iter().all(|v| v.is_finite()) {
        return Err(BcpError::invalid("series terms need finite band values"));
    }
    if !(x_prev.is_finite() && x_cur.is_finite()) {
        return Err(BcpError::invalid("node values must be finite"));
    }
    let two_over_dt = 2.0 / band.partition().gap(i);
    Ok(series_term(
        j as f64,
        b0 - x_prev,
        x_prev - a0,
        d0,
        b1 - x_cur,
        x_cur - a1,
        d1,
        two_over_dt,
    ))
}

/// `P(W_t < intercept + slope * t, 0 ≤ t ≤ horizon)` for standard Brownian motion.
pub fn bcp_linear_one_sided(intercept: f64, slope: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(BcpError::invalid(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !(intercept > 0.0) {
        return Err(BcpError::StartOutsideBand {
            x0: 0.0,
            lower: f64::NEG_INFINITY,
            upper: intercept,
        });
    }
    if slope == f64::INFINITY {
        return Ok(1.0);
    }
    let sd = horizon.sqrt();
    let first = phi((intercept + slope * horizon) / sd);
    // exp(-2 c m) Φ(y) in log space: the exponential overflows for steep negative slopes.
    let y = (slope * horizon - intercept) / sd;
    let second = (-2.0 * intercept * slope + ln_phi(y)).exp();
    Ok((first - second).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    /// Both sides infinite.
    Unbounded,
    /// Finite upper side only.
    Upper,
    /// Finite lower side only; evaluated by reflection.
    Lower,
    TwoSided,
}

/// Outcome of a single kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    /// The two-sided series reached its hard cap on some interval.
    pub cap_hit: bool,
}

/// A band preprocessed for repeated kernel evaluation.
///
/// Routes to the one-sided formula when one side is infinite (reflecting
/// `x -> -x` for a finite lower side) and to the two-sided series otherwise.
#[derive(Debug, Clone)]
pub struct Kernel {
    shape: Shape,
    two_over_dt: Vec<f64>,
    // Per interval i (stored at i-1): upper / lower values at t_{i-1}+ and t_i-.
    up_start: Vec<f64>,
    up_end: Vec<f64>,
    lo_start: Vec<f64>,
    lo_end: Vec<f64>,
    // Node constraints for nodes 1..=n (stored at i-1).
    up_node: Vec<f64>,
    lo_node: Vec<f64>,
    series: SeriesConfig,
}

impl Kernel {
    /// Validates the series configuration and that the band contains `x_0 = 0`.
    pub fn new(band: &PiecewiseLinearBand, series: SeriesConfig) -> Result<Self> {
        series.validate()?;
        band.check_start(0.0)?;
        Ok(Self::build(band, series))
    }

    fn build(band: &PiecewiseLinearBand, series: SeriesConfig) -> Self {
        let p = band.partition();
        let n = p.len();
        let (lo, up) = (band.lower(), band.upper());
        let shape = match (lo.is_infinite(), up.is_infinite()) {
            (true, true) => Shape::Unbounded,
            (true, false) => Shape::Upper,
            (false, true) => Shape::Lower,
            (false, false) => Shape::TwoSided,
        };
        Kernel {
            shape,
            two_over_dt: p.gaps().map(|dt| 2.0 / dt).collect(),
            up_start: up.rights().to_vec(),
            up_end: up.lefts().to_vec(),
            lo_start: lo.rights().to_vec(),
            lo_end: lo.lefts().to_vec(),
            up_node: (1..=n).map(|i| up.node_constraint(i)).collect(),
            lo_node: (1..=n).map(|i| lo.node_constraint(i)).collect(),
            series,
        }
    }

    pub fn len(&self) -> usize {
        self.two_over_dt.len()
    }

    pub fn is_empty(&self) -> bool {
        self.two_over_dt.is_empty()
    }

    /// Kernel value for node samples `x` (`x.len()` must equal the partition size).
    pub fn eval(&self, x: &[f64]) -> KernelValue {
        debug_assert_eq!(x.len(), self.len());
        match self.shape {
            Shape::Unbounded => KernelValue {
                value: 1.0,
                cap_hit: false,
            },
            Shape::Upper => KernelValue {
                value: self.eval_upper(x),
                cap_hit: false,
            },
            Shape::Lower => KernelValue {
                value: self.eval_lower(x),
                cap_hit: false,
            },
            Shape::TwoSided => self.eval_two_sided(x),
        }
    }

    fn eval_upper(&self, x: &[f64]) -> f64 {
        let mut prod = 1.0;
        let mut prev = 0.0;
        for (i, &cur) in x.iter().enumerate() {
            if !(cur < self.up_node[i]) {
                return 0.0;
            }
            prod *= bridge_one_sided(self.up_start[i] - prev, self.up_end[i] - cur, self.two_over_dt[i]);
            prev = cur;
        }
        prod
    }

    fn eval_lower(&self, x: &[f64]) -> f64 {
        let mut prod = 1.0;
        let mut prev = 0.0;
        for (i, &cur) in x.iter().enumerate() {
            if !(cur > self.lo_node[i]) {
                return 0.0;
            }
            prod *= bridge_one_sided(prev - self.lo_start[i], cur - self.lo_end[i], self.two_over_dt[i]);
            prev = cur;
        }
        prod
    }

    fn eval_two_sided(&self, x: &[f64]) -> KernelValue {
        let mut prod = 1.0;
        let mut prev = 0.0;
        let mut cap_hit = false;
        for (i, &cur) in x.iter().enumerate() {
            if !(cur < self.up_node[i] && cur > self.lo_node[i]) {
                return KernelValue {
                    value: 0.0,
                    cap_hit,
                };
            }
            let (f, hit) = two_sided_factor(
                self.up_start[i] - prev,
                prev - self.lo_start[i],
                self.up_start[i] - self.lo_start[i],
                self.up_end[i] - cur,
                cur - self.lo_end[i],
                self.up_end[i] - self.lo_end[i],
                self.two_over_dt[i],
                &self.series,
            );
            cap_hit |= hit;
            prod *= f;
            prev = cur;
        }
        KernelValue {
            value: prod,
            cap_hit,
        }
    }
}

/// Kernel evaluation that picks the one- or two-sided form from the band.
pub fn g(band: &PiecewiseLinearBand, x: &NodeSamples, cfg: &SeriesConfig) -> Result<f64> {
    check_len(band, x)?;
    Ok(Kernel::new(band, *cfg)?.eval(x.as_slice()).value)
}
