//! Partitions, piecewise-linear boundaries and bracketing envelopes.
//!
//! A [`PiecewiseLinearBoundary`] stores, for every partition node, the one-sided
//! limits of the boundary: `right_value(i)` is the value at `t_i+` (nodes
//! `0..n`) and `left_value(i)` the value at `t_i-` (nodes `1..=n`). The boundary
//! is linear between `(t_{i-1}, right_value(i-1))` and `(t_i, left_value(i))`.
//! Jumps are only allowed away from the band: an upper boundary may jump up,
//! a lower boundary may jump down.

use std::fmt;
use std::sync::Arc;

use crate::error::{BcpError, Result};

/// Which side of the band a boundary bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    fn infinity(self) -> f64 {
        match self {
            Side::Lower => f64::NEG_INFINITY,
            Side::Upper => f64::INFINITY,
        }
    }
}

/// One-sided limit at a partition node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSide {
    Left,
    Right,
}

/// Strictly increasing time nodes `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    nodes: Vec<f64>,
}

impl Partition {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(BcpError::invalid("a partition needs at least two nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(BcpError::invalid(format!(
                "partition must start at 0, got {}",
                nodes[0]
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(BcpError::invalid(format!(
                    "partition nodes must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Partition { nodes })
    }

    /// Equally spaced nodes `i * horizon / n`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(BcpError::invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if n == 0 {
            return Err(BcpError::invalid("partition size n must be at least 1"));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        nodes[n] = horizon;
        Partition::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of subintervals `n`.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `Δt_i = t_i - t_{i-1}` for `i` in `1..=n`.
    pub fn gap(&self, i: usize) -> f64 {
        self.nodes[i] - self.nodes[i - 1]
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    /// Index `i` of the interval `[t_{i-1}, t_i]` containing `t` (clamped to `1..=n`).
    pub fn interval_of(&self, t: f64) -> usize {
        let idx = self.nodes.partition_point(|&x| x < t);
        idx.clamp(1, self.len())
    }
}

/// Equally spaced partition of `[0, horizon]` into `n` intervals.
pub fn uniform_partition(horizon: f64, n: usize) -> Result<Partition> {
    Partition::uniform(horizon, n)
}

/// A boundary that is linear on every partition interval, with outward jumps allowed at nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearBoundary {
    partition: Partition,
    side: Side,
    right: Vec<f64>,
    left: Vec<f64>,
}

impl PiecewiseLinearBoundary {
    /// `right[i]` is the value at `t_i+` for `i = 0..n`; `left[i - 1]` the value at `t_i-` for `i = 1..=n`.
    pub fn new(partition: Partition, side: Side, right: Vec<f64>, left: Vec<f64>) -> Result<Self> {
        let b = PiecewiseLinearBoundary {
            partition,
            side,
            right,
            left,
        };
        b.validate()?;
        Ok(b)
    }

    /// Continuous boundary through the given node values `v_0..v_n`.
    pub fn continuous(partition: Partition, side: Side, node_values: &[f64]) -> Result<Self> {
        let n = partition.len();
        if node_values.len() != n + 1 {
            return Err(BcpError::invalid(format!(
                "expected {} node values, got {}",
                n + 1,
                node_values.len()
            )));
        }
        let right = node_values[..n].to_vec();
        let left = node_values[1..].to_vec();
        Self::new(partition, side, right, left)
    }

    /// The boundary at `-inf` (lower) or `+inf` (upper) everywhere.
    pub fn infinite(partition: Partition, side: Side) -> Self {
        let n = partition.len();
        let v = side.infinity();
        PiecewiseLinearBoundary {
            partition,
            side,
            right: vec![v; n],
            left: vec![v; n],
        }
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.partition.len();
        if self.right.len() != n || self.left.len() != n {
            return Err(BcpError::invalid(format!(
                "boundary needs {n} right and {n} left values, got {} and {}",
                self.right.len(),
                self.left.len()
            )));
        }
        let inf = self.side.infinity();
        let all = self.right.iter().chain(self.left.iter());
        let infinite_count = all.clone().filter(|v| v.is_infinite()).count();
        if all.clone().any(|v| v.is_nan()) {
            return Err(BcpError::InvalidBoundaries("boundary contains NaN".into()));
        }
        if infinite_count > 0 {
            if infinite_count != 2 * n || all.clone().any(|&v| v != inf) {
                return Err(BcpError::InvalidBoundaries(format!(
                    "{:?} boundary mixes finite and infinite values (only an all-{inf} boundary is allowed)",
                    self.side
                )));
            }
            return Ok(());
        }
        for i in 1..n {
            let (l, r) = (self.left[i - 1], self.right[i]);
            let ok = match self.side {
                Side::Upper => l <= r,
                Side::Lower => l >= r,
            };
            if !ok {
                return Err(BcpError::InvalidBoundaries(format!(
                    "{:?} boundary jumps inward at node {i} (left {l}, right {r})",
                    self.side
                )));
            }
        }
        Ok(())
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn is_infinite(&self) -> bool {
        self.right[0].is_infinite()
    }

    /// Value at `t_i+`, defined for `i` in `0..n`.
    pub fn right_value(&self, i: usize) -> Result<f64> {
        self.right.get(i).copied().ok_or_else(|| BcpError::IndexOutOfRange {
            index: i,
            detail: format!("right limits exist for nodes 0..{}", self.partition.len()),
        })
    }

    /// Value at `t_i-`, defined for `i` in `1..=n`.
    pub fn left_value(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return Err(BcpError::IndexOutOfRange {
                index: 0,
                detail: "no left limit at t_0".into(),
            });
        }
        self.left.get(i - 1).copied().ok_or_else(|| BcpError::IndexOutOfRange {
            index: i,
            detail: format!("left limits exist for nodes 1..={}", self.partition.len()),
        })
    }

    pub(crate) fn rights(&self) -> &[f64] {
        &self.right
    }

    pub(crate) fn lefts(&self) -> &[f64] {
        &self.left
    }

    /// The value the process must stay strictly inside of at node `i`: the more
    /// restrictive of the two one-sided limits.
    pub fn node_constraint(&self, i: usize) -> f64 {
        let n = self.partition.len();
        match i {
            0 => self.right[0],
            i if i == n => self.left[n - 1],
            i => match self.side {
                Side::Upper => self.left[i - 1].min(self.right[i]),
                Side::Lower => self.left[i - 1].max(self.right[i]),
            },
        }
    }

    /// Evaluates the boundary; at a node this is [`Self::node_constraint`].
    pub fn eval(&self, t: f64) -> f64 {
        let nodes = self.partition.nodes();
        if let Ok(k) = nodes.binary_search_by(|x| x.total_cmp(&t)) {
            return self.node_constraint(k);
        }
        let i = self.partition.interval_of(t);
        let (t0, t1) = (nodes[i - 1], nodes[i]);
        let (v0, v1) = (self.right[i - 1], self.left[i - 1]);
        if v0.is_infinite() {
            return v0;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// Lower and upper piecewise-linear boundaries over a common partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearBand {
    lower: PiecewiseLinearBoundary,
    upper: PiecewiseLinearBoundary,
}

impl PiecewiseLinearBand {
    pub fn new(lower: PiecewiseLinearBoundary, upper: PiecewiseLinearBoundary) -> Result<Self> {
        if lower.side != Side::Lower || upper.side != Side::Upper {
            return Err(BcpError::InvalidBoundaries(
                "band needs a lower-side and an upper-side boundary".into(),
            ));
        }
        if lower.partition != upper.partition {
            return Err(BcpError::InvalidBoundaries(
                "lower and upper boundaries use different partitions".into(),
            ));
        }
        lower.validate()?;
        upper.validate()?;
        let n = lower.partition.len();
        for i in 0..n {
            if !(lower.right[i] < upper.right[i]) || !(lower.left[i] < upper.left[i]) {
                return Err(BcpError::InvalidBoundaries(format!(
                    "lower boundary is not strictly below upper boundary near node {}",
                    i
                )));
            }
        }
        Ok(PiecewiseLinearBand { lower, upper })
    }

    /// Band with an infinite lower side.
    pub fn upper_only(upper: PiecewiseLinearBoundary) -> Result<Self> {
        let lower = PiecewiseLinearBoundary::infinite(upper.partition.clone(), Side::Lower);
        Self::new(lower, upper)
    }

    pub fn lower(&self) -> &PiecewiseLinearBoundary {
        &self.lower
    }

    pub fn upper(&self) -> &PiecewiseLinearBoundary {
        &self.upper
    }

    pub fn partition(&self) -> &Partition {
        &self.lower.partition
    }

    /// Checks `α(0) < x0 < β(0)`.
    pub fn check_start(&self, x0: f64) -> Result<()> {
        let (lo, hi) = (self.lower.right[0], self.upper.right[0]);
        if lo < x0 && x0 < hi {
            Ok(())
        } else {
            Err(BcpError::StartOutsideBand {
                x0,
                lower: lo,
                upper: hi,
            })
        }
    }

    pub fn values(&self, i: usize, side: NodeSide) -> Result<(f64, f64, f64)> {
        band_values(self, i, side)
    }
}

/// `(α, β, δ = β - α)` at node `i` on the requested side.
pub fn band_values(band: &PiecewiseLinearBand, i: usize, side: NodeSide) -> Result<(f64, f64, f64)> {
    let (a, b) = match side {
        NodeSide::Left => (band.lower.left_value(i)?, band.upper.left_value(i)?),
        NodeSide::Right => (band.lower.right_value(i)?, band.upper.right_value(i)?),
    };
    Ok((a, b, b - a))
}

/// Shared boundary evaluator. Must be safe to call from several threads.
pub type BoundaryFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An arbitrary boundary `t -> value` on `[0, horizon]`, or an infinite one.
#[derive(Clone)]
pub struct GeneralBoundary {
    evaluator: Option<BoundaryFn>,
    side: Side,
    horizon: f64,
}

impl fmt::Debug for GeneralBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralBoundary")
            .field("side", &self.side)
            .field("horizon", &self.horizon)
            .field("finite", &self.is_finite())
            .finish()
    }
}

impl GeneralBoundary {
    pub fn new<F>(side: Side, horizon: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_fn(side, horizon, Arc::new(f))
    }

    pub fn from_fn(side: Side, horizon: f64, f: BoundaryFn) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(GeneralBoundary {
            evaluator: Some(f),
            side,
            horizon,
        })
    }

    /// Constant boundary.
    pub fn constant(side: Side, horizon: f64, value: f64) -> Result<Self> {
        if value.is_infinite() {
            return Self::infinite(side, horizon);
        }
        Self::new(side, horizon, move |_| value)
    }

    pub fn infinite(side: Side, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(GeneralBoundary {
            evaluator: None,
            side,
            horizon,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_finite(&self) -> bool {
        self.evaluator.is_some()
    }

    /// Evaluates the boundary; a finite boundary must produce a finite number.
    pub fn eval(&self, t: f64) -> Result<f64> {
        match &self.evaluator {
            None => Ok(self.side.infinity()),
            Some(f) => {
                let v = f(t);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(BcpError::Evaluation {
                        t,
                        reason: format!("boundary evaluated to {v}"),
                    })
                }
            }
        }
    }

    pub fn evaluator(&self) -> Option<&BoundaryFn> {
        self.evaluator.as_ref()
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(BcpError::invalid(format!(
            "boundary horizon must be positive and finite, got {horizon}"
        )))
    }
}

fn check_same_horizon(gb: &GeneralBoundary, p: &Partition) -> Result<()> {
    let (a, b) = (gb.horizon(), p.horizon());
    if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        Ok(())
    } else {
        Err(BcpError::invalid(format!(
            "boundary horizon {a} does not match partition horizon {b}"
        )))
    }
}

/// Continuous piecewise-linear interpolant of `gb` at the partition nodes.
pub fn chord_boundary(gb: &GeneralBoundary, p: &Partition) -> Result<PiecewiseLinearBoundary> {
    check_same_horizon(gb, p)?;
    if !gb.is_finite() {
        return Ok(PiecewiseLinearBoundary::infinite(p.clone(), gb.side()));
    }
    let values = p
        .nodes()
        .iter()
        .map(|&t| gb.eval(t))
        .collect::<Result<Vec<_>>>()?;
    PiecewiseLinearBoundary::continuous(p.clone(), gb.side(), &values)
}

/// Default number of boundary samples per interval when building envelopes.
pub const DEFAULT_ENVELOPE_SAMPLES: usize = 50;

const GOLDEN_ITERATIONS: usize = 40;

/// Piecewise-linear envelopes `(inner, outer)` that sandwich `gb`.
///
/// `inner` lies on the band side of the boundary (below an upper boundary,
/// above a lower one), `outer` on the far side. Per interval, the chord is
/// shifted by the largest sampled excess, refined by a golden-section search
/// around the worst sample; adjacent intervals then share the larger shift at
/// their common node so both envelopes stay continuous.
pub fn envelopes(
    gb: &GeneralBoundary,
    p: &Partition,
    m: usize,
) -> Result<(PiecewiseLinearBoundary, PiecewiseLinearBoundary)> {
    check_same_horizon(gb, p)?;
    if m < 2 {
        return Err(BcpError::invalid(format!(
            "envelope construction needs at least 2 samples per interval, got {m}"
        )));
    }
    if !gb.is_finite() {
        let b = PiecewiseLinearBoundary::infinite(p.clone(), gb.side());
        return Ok((b.clone(), b));
    }
    // Work with an upper-side view; lower boundaries are reflected.
    let sign = match gb.side() {
        Side::Upper => 1.0,
        Side::Lower => -1.0,
    };
    let f = |t: f64| gb.eval(t).map(|v| sign * v);
    let nodes = p.nodes();
    let node_values = nodes.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let n = p.len();
    let mut below = vec![0.0; n];
    let mut above = vec![0.0; n];
    for i in 1..=n {
        let (t0, t1) = (nodes[i - 1], nodes[i]);
        let (v0, v1) = (node_values[i - 1], node_values[i]);
        let chord = |t: f64| v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        let gap = |t: f64| -> Result<f64> { Ok(f(t)? - chord(t)) };
        let (min_gap, max_gap) = extreme_gaps(&gap, t0, t1, m)?;
        // Rounding allowance, including a one-ulp error in t along the chord.
        let slope = ((v1 - v0) / (t1 - t0)).abs();
        let pad = 8.0 * f64::EPSILON * (v0.abs().max(v1.abs()).max(1.0) + slope * t1.abs().max(1.0));
        below[i - 1] = (-min_gap).max(0.0) + pad;
        above[i - 1] = max_gap.max(0.0) + pad;
    }
    let shift_at = |shifts: &[f64], k: usize| -> f64 {
        let left = if k >= 1 { shifts[k - 1] } else { 0.0 };
        let right = if k < n { shifts[k] } else { 0.0 };
        left.max(right)
    };
    let inner: Vec<f64> = (0..=n)
        .map(|k| sign * (node_values[k] - shift_at(&below, k)))
        .collect();
    let outer: Vec<f64> = (0..=n)
        .map(|k| sign * (node_values[k] + shift_at(&above, k)))
        .collect();
    Ok((
        PiecewiseLinearBoundary::continuous(p.clone(), gb.side(), &inner)?,
        PiecewiseLinearBoundary::continuous(p.clone(), gb.side(), &outer)?,
    ))
}

/// Minimum and maximum of `gap` over `[t0, t1]`, from `m` equispaced samples
/// refined by golden-section search around every local extreme sample.
fn extreme_gaps<G>(gap: &G, t0: f64, t1: f64, m: usize) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let h = (t1 - t0) / (m - 1) as f64;
    let ts: Vec<f64> = (0..m)
        .map(|k| if k + 1 == m { t1 } else { t0 + h * k as f64 })
        .collect();
    let gs = ts.iter().map(|&t| gap(t)).collect::<Result<Vec<_>>>()?;
    let mut max_gap = gs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut min_gap = gs.iter().copied().fold(f64::INFINITY, f64::min);
    for k in 0..m {
        let (lo, hi) = (k.saturating_sub(1), (k + 1).min(m - 1));
        let (left, right) = (gs[lo], gs[hi]);
        if gs[k] >= left && gs[k] >= right {
            max_gap = max_gap.max(golden_max(gap, ts[lo], ts[hi], 1.0)?);
        }
        if gs[k] <= left && gs[k] <= right {
            min_gap = min_gap.min(-golden_max(gap, ts[lo], ts[hi], -1.0)?);
        }
    }
    Ok((min_gap, max_gap))
}

/// Golden-section search for the maximum of `sign * g` on `[a, b]`.
fn golden_max<G>(g: &G, mut a: f64, mut b: f64, sign: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sign * g(c)?;
    let mut fd = sign * g(d)?;
    let mut best = fc.max(fd);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sign * g(c)?;
            best = best.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sign * g(d)?;
            best = best.max(fd);
        }
    }
    Ok(best)
}
