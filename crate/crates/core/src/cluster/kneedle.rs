//! Kneedle knee/elbow detection on discrete curves.
//!
//! Both axes are min-max normalized, the curve is mapped to its
//! concave-increasing equivalent, and the knee is the maximum of the
//! difference curve `y - x` among candidates that clear the sensitivity
//! threshold before the next local maximum.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveDirection {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveShape {
    Concave,
    Convex,
}

/// A detected knee, reported in the original coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KneePoint {
    pub x: f64,
    pub index: usize,
    /// Height of the normalized difference curve at the knee.
    pub strength: f64,
}

/// Finds the knee of `(xs, ys)`; returns `None` when no candidate clears
/// the sensitivity threshold (e.g. a straight line).
pub fn kneedle(
    xs: &[f64],
    ys: &[f64],
    sensitivity: f64,
    direction: CurveDirection,
    shape: CurveShape,
) -> Result<Option<KneePoint>> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::InvalidArgument("xs/ys length mismatch".into()));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(
            "kneedle needs at least 3 points".into(),
        ));
    }
    if !(sensitivity >= 0.0) {
        return Err(Error::InvalidArgument("sensitivity must be >= 0".into()));
    }
    for w in xs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "xs must be strictly increasing".into(),
            ));
        }
    }

    let (x_min, x_max) = (xs[0], xs[n - 1]);
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(y_max - y_min).is_finite() || (y_max - y_min) < 1e-300 {
        return Ok(None); // flat curve
    }
    let xn: Vec<f64> = xs.iter().map(|x| (x - x_min) / (x_max - x_min)).collect();
    let yn: Vec<f64> = ys.iter().map(|y| (y - y_min) / (y_max - y_min)).collect();

    // Map to the concave-increasing equivalent. `reversed` remembers the
    // index flip for reporting.
    let reversed = matches!(
        (shape, direction),
        (CurveShape::Concave, CurveDirection::Decreasing)
            | (CurveShape::Convex, CurveDirection::Increasing)
    );
    let flipped_y = matches!(
        (shape, direction),
        (CurveShape::Convex, CurveDirection::Decreasing)
            | (CurveShape::Convex, CurveDirection::Increasing)
    );
    let t_at = |i: usize| -> (f64, f64) {
        let src = if reversed { n - 1 - i } else { i };
        let x = if reversed { 1.0 - xn[src] } else { xn[src] };
        let y = if flipped_y { 1.0 - yn[src] } else { yn[src] };
        (x, y)
    };
    let diff: Vec<f64> = (0..n)
        .map(|i| {
            let (x, y) = t_at(i);
            y - x
        })
        .collect();

    // Local maxima of the difference curve.
    let candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| diff[i] > diff[i - 1] && diff[i] >= diff[i + 1])
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    // After normalization the mean x spacing telescopes to 1/(n-1).
    let step = sensitivity / (n - 1) as f64;

    let mut best: Option<(usize, f64)> = None;
    for (ci, &i) in candidates.iter().enumerate() {
        let threshold = diff[i] - step;
        let end = candidates.get(ci + 1).copied().unwrap_or(n);
        let confirmed = ((i + 1)..end).any(|j| diff[j] < threshold);
        if confirmed && best.map(|(_, d)| diff[i] > d).unwrap_or(true) {
            best = Some((i, diff[i]));
        }
    }
    Ok(best.map(|(i, strength)| {
        let index = if reversed { n - 1 - i } else { i };
        KneePoint {
            x: xs[index],
            index,
            strength,
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_has_no_knee() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys = xs.clone();
        let knee = kneedle(&xs, &ys, 1.0, CurveDirection::Increasing, CurveShape::Concave)
            .unwrap();
        assert!(knee.is_none());
    }

    #[test]
    fn saturating_exponential_knee_matches_dense_oracle() {
        // y = 1 - e^{-x} sampled on [0, 5] step 0.25; the difference-curve
        // maximum sits at x = ln(5 / (1 - e^{-5}))
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - (-x).exp()).collect();
        let knee = kneedle(&xs, &ys, 1.0, CurveDirection::Increasing, CurveShape::Concave)
            .unwrap()
            .expect("knee expected");
        let analytic = (5.0f64 / (1.0 - (-5.0f64).exp())).ln();
        assert!(
            (knee.x - analytic).abs() <= 0.25 + 1e-12,
            "knee {} vs analytic {analytic}",
            knee.x
        );
    }

    #[test]
    fn decreasing_convex_matches_manual_transform() {
        // inertia-like curve 1/x
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 100.0 / x).collect();
        let direct = kneedle(&xs, &ys, 1.0, CurveDirection::Decreasing, CurveShape::Convex)
            .unwrap()
            .expect("knee expected");
        // manual transform: y' = (max + min) - y turns it concave increasing
        let y_sum = 100.0 + 10.0;
        let ys2: Vec<f64> = ys.iter().map(|y| y_sum - y).collect();
        let manual = kneedle(&xs, &ys2, 1.0, CurveDirection::Increasing, CurveShape::Concave)
            .unwrap()
            .expect("knee expected");
        assert_eq!(direct.index, manual.index);
        assert_eq!(direct.x, manual.x);
    }

    #[test]
    fn rejects_bad_inputs() {
        let xs = [0.0, 1.0];
        let ys = [0.0, 1.0];
        assert!(kneedle(&xs, &ys, 1.0, CurveDirection::Increasing, CurveShape::Concave).is_err());
        let xs = [0.0, 2.0, 1.0];
        let ys = [0.0, 1.0, 2.0];
        assert!(kneedle(&xs, &ys, 1.0, CurveDirection::Increasing, CurveShape::Concave).is_err());
    }

    #[test]
    fn affine_rescaling_does_not_move_the_knee() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - (-x).exp()).collect();
        let base = kneedle(&xs, &ys, 1.0, CurveDirection::Increasing, CurveShape::Concave)
            .unwrap()
            .unwrap();
        let xs2: Vec<f64> = xs.iter().map(|x| 3.0 * x + 10.0).collect();
        let ys2: Vec<f64> = ys.iter().map(|y| 0.25 * y - 2.0).collect();
        let scaled = kneedle(&xs2, &ys2, 1.0, CurveDirection::Increasing, CurveShape::Concave)
            .unwrap()
            .unwrap();
        assert_eq!(base.index, scaled.index);
    }
}
