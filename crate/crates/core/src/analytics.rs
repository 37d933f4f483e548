//! Growth comparisons behind the pictorial and graphical child views.
//!
//! Both the child's own series and the reference curve are interpolated
//! linearly between points; nothing is extrapolated. All functions are pure.

use crate::cohort::{Knot, Measurement};
use crate::error::AnalyticsError;

/// An (age, height) sample usable by the interpolators.
pub trait GrowthPoint {
    fn age(&self) -> f64;
    fn height(&self) -> f64;
}

impl GrowthPoint for Knot {
    fn age(&self) -> f64 {
        f64::from(self.age_months)
    }
    fn height(&self) -> f64 {
        self.height_cm
    }
}

impl GrowthPoint for Measurement {
    fn age(&self) -> f64 {
        f64::from(self.age_months)
    }
    fn height(&self) -> f64 {
        self.height_cm
    }
}

impl GrowthPoint for (f64, f64) {
    fn age(&self) -> f64 {
        self.0
    }
    fn height(&self) -> f64 {
        self.1
    }
}

impl<P: GrowthPoint + ?Sized> GrowthPoint for &P {
    fn age(&self) -> f64 {
        (**self).age()
    }
    fn height(&self) -> f64 {
        (**self).height()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub age_months: f64,
    pub child_height_cm: f64,
    pub reference_height_cm: f64,
    /// child − reference
    pub delta_cm: f64,
    /// child ÷ reference
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSeries {
    pub child_points: Vec<(f64, f64)>,
    pub reference_points: Vec<(f64, f64)>,
    pub age_span: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilhouettePair {
    pub child_px: f64,
    pub reference_px: f64,
    pub max_px: f64,
}

/// Reference height at `age_months`, linear between knots.
pub fn interpolate_curve<P: GrowthPoint>(knots: &[P], age_months: f64) -> Result<f64, AnalyticsError> {
    piecewise_linear(knots, age_months)
}

/// The child's height at `age_months`, linear between its measurements
/// (which must be sorted by age).
pub fn child_height_at<P: GrowthPoint>(
    measurements: &[P],
    age_months: f64,
) -> Result<f64, AnalyticsError> {
    piecewise_linear(measurements, age_months)
}

pub fn compare_at_age<M: GrowthPoint, K: GrowthPoint>(
    measurements: &[M],
    knots: &[K],
    age_months: f64,
) -> Result<Comparison, AnalyticsError> {
    let child = child_height_at(measurements, age_months)?;
    let reference = interpolate_curve(knots, age_months)?;
    Ok(Comparison {
        age_months,
        child_height_cm: child,
        reference_height_cm: reference,
        delta_cm: child - reference,
        ratio: child / reference,
    })
}

/// Ages the slider may take: the overlap of the child's measured span and the
/// reference span.
pub fn slider_domain<M: GrowthPoint, K: GrowthPoint>(
    measurements: &[M],
    knots: &[K],
) -> Result<(f64, f64), AnalyticsError> {
    let (c0, c1) = span(measurements)?;
    let (k0, k1) = span(knots)?;
    let (lo, hi) = (c0.max(k0), c1.min(k1));
    if lo <= hi {
        Ok((lo, hi))
    } else {
        Err(AnalyticsError::NoOverlap)
    }
}

/// Child series as measured, plus the reference curve clipped to the child's
/// span with interpolated end points.
pub fn graph_series<M: GrowthPoint, K: GrowthPoint>(
    measurements: &[M],
    knots: &[K],
) -> Result<GraphSeries, AnalyticsError> {
    let age_span = span(measurements)?;
    let child_points: Vec<(f64, f64)> =
        measurements.iter().map(|m| (m.age(), m.height())).collect();

    let mut reference_points = Vec::new();
    if let Ok((lo, hi)) = slider_domain(measurements, knots) {
        reference_points.push((lo, interpolate_curve(knots, lo)?));
        reference_points.extend(
            knots
                .iter()
                .filter(|k| k.age() > lo && k.age() < hi)
                .map(|k| (k.age(), k.height())),
        );
        if hi > lo {
            reference_points.push((hi, interpolate_curve(knots, hi)?));
        }
    }
    Ok(GraphSeries { child_points, reference_points, age_span })
}

/// Pixel heights for the two silhouettes: the taller figure gets `max_px`,
/// the other is scaled by the height ratio.
pub fn silhouette_heights(
    child_cm: f64,
    reference_cm: f64,
    max_px: f64,
) -> Result<SilhouettePair, AnalyticsError> {
    for (name, v) in [("child_cm", child_cm), ("reference_cm", reference_cm), ("max_px", max_px)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(AnalyticsError::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    let tallest = child_cm.max(reference_cm);
    let scale = |h: f64| if h == tallest { max_px } else { max_px * h / tallest };
    Ok(SilhouettePair { child_px: scale(child_cm), reference_px: scale(reference_cm), max_px })
}

/// Centimetre label with one decimal place, e.g. `76.0 cm`.
pub fn format_cm(height_cm: f64) -> String {
    format!("{height_cm:.1} cm")
}

fn span<P: GrowthPoint>(points: &[P]) -> Result<(f64, f64), AnalyticsError> {
    match (points.first(), points.last()) {
        (Some(first), Some(last)) => Ok((first.age(), last.age())),
        _ => Err(AnalyticsError::NoData),
    }
}

fn piecewise_linear<P: GrowthPoint>(points: &[P], age: f64) -> Result<f64, AnalyticsError> {
    let (first, last) = span(points)?;
    if !(age >= first && age <= last) {
        return Err(AnalyticsError::OutOfRange(age));
    }
    let upper = points.partition_point(|p| p.age() < age);
    let hi = &points[upper];
    if hi.age() == age {
        return Ok(hi.height());
    }
    // age > first, so upper >= 1
    let lo = &points[upper - 1];
    let t = (age - lo.age()) / (hi.age() - lo.age());
    let value = lo.height() + t * (hi.height() - lo.height());
    let (min, max) = if lo.height() <= hi.height() {
        (lo.height(), hi.height())
    } else {
        (hi.height(), lo.height())
    };
    Ok(value.clamp(min, max))
}
