use super::MetricsError;
use crate::num::Scalar;

pub const DEFAULT_RESAMPLE: usize = 50;

/// `count` points spaced evenly by arc length, endpoints included.
pub fn resample<T: Scalar>(points: &[(T, T)], count: usize) -> Result<Vec<(T, T)>, MetricsError> {
    if count < 2 {
        return Err(MetricsError::ResampleCount(count));
    }
    let first = *points.first().ok_or(MetricsError::EmptyTrajectory)?;
    let mut cum = Vec::with_capacity(points.len());
    let mut acc = T::zero();
    cum.push(acc);
    for w in points.windows(2) {
        acc = acc + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1);
        cum.push(acc);
    }
    let total = acc;
    if total <= T::zero() {
        return Ok(vec![first; count]);
    }
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let s = if k == count - 1 {
            total
        } else {
            total * T::lit(k as f64) / T::lit((count - 1) as f64)
        };
        while seg + 2 < points.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > T::zero() {
            ((s - cum[seg]) / len).min(T::one()).max(T::zero())
        } else {
            T::zero()
        };
        let (a, b) = (points[seg], points[seg + 1]);
        out.push((a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
    }
    Ok(out)
}

/// Sum of pointwise distances after resampling both trajectories.
pub fn trajectory_distance<T: Scalar>(
    a: &[(T, T)],
    b: &[(T, T)],
    count: usize,
) -> Result<T, MetricsError> {
    let ra = resample(a, count)?;
    let rb = resample(b, count)?;
    Ok(ra
        .iter()
        .zip(&rb)
        .fold(T::zero(), |acc, (p, q)| acc + (p.0 - q.0).hypot(p.1 - q.1)))
}

/// Mean trajectory distance over all cross-scenario participant pairs.
pub fn scenario_distance<T: Scalar>(
    first: &[Vec<(T, T)>],
    second: &[Vec<(T, T)>],
    count: usize,
) -> Result<T, MetricsError> {
    if first.is_empty() || second.is_empty() {
        return Err(MetricsError::NoParticipants);
    }
    let mut total = T::zero();
    for a in first {
        for b in second {
            total = total + trajectory_distance(a, b, count)?;
        }
    }
    Ok(total / T::lit((first.len() * second.len()) as f64))
}

/// Largest scenario distance from the failing scenario to any variation that
/// reproduced the failure.
pub fn variation_range<T: Scalar>(
    failing: &[Vec<(T, T)>],
    reproduced: &[Vec<Vec<(T, T)>>],
    count: usize,
) -> Result<T, MetricsError> {
    let mut best = T::zero();
    for s in reproduced {
        best = best.max(scenario_distance(failing, s, count)?);
    }
    Ok(best)
}
