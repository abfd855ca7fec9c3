//! 1D temporal-interval geometry: IoU/GIoU, centerness, and the
//! center/width parameterization used by the detector and loss stack.
//!
//! Spans are closed intervals `[start, end]` in seconds with length
//! `end - start`. Zero-length spans are legal; the annotation pipeline can
//! produce single-instant intervals after clipping, so every operation here
//! is total.

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A temporal interval in seconds. Invariants: `0 <= start <= end`, both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    start: f64,
    end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::NonFinite {
                op: "Span::new",
                detail: format!("[{start}, {end}]"),
            });
        }
        if start < 0.0 || start > end {
            return Err(Error::invalid(
                "Span::new",
                format!("need 0 <= start <= end, got [{start}, {end}]"),
            ));
        }
        Ok(Span { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn center(&self) -> f64 {
        (self.start + self.end) / 2.0
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }

    /// True when `t` lies strictly between the endpoints.
    pub fn contains_strict(&self, t: f64) -> bool {
        self.start < t && t < self.end
    }

    /// Intersects with `[lo, hi]`; `None` when the overlap is empty.
    pub fn clip(&self, lo: f64, hi: f64) -> Option<Span> {
        let start = self.start.max(lo);
        let end = self.end.min(hi);
        if start > end {
            None
        } else {
            Some(Span { start, end })
        }
    }

    pub fn translate(&self, offset: f64) -> Result<Span> {
        Span::new(self.start + offset, self.end + offset)
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(2)?;
        tup.serialize_element(&self.start)?;
        tup.serialize_element(&self.end)?;
        tup.end()
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct SpanVisitor;
        impl<'de> Visitor<'de> for SpanVisitor {
            type Value = Span;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a [start, end] pair of seconds")
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Span, A::Error> {
                let start: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let end: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<f64>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Span::new(start, end).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_tuple(2, SpanVisitor)
    }
}

/// The `(center, width)` parameterization of a [`Span`].
///
/// Conversions use the obvious formulas, so they are exact whenever
/// `start + end` and `end - start` are exactly representable — true for the
/// clip-grid spans the pipeline produces — and within one ulp otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterWidthSpan {
    pub center: f64,
    pub width: f64,
}

pub fn to_center_width(s: Span) -> CenterWidthSpan {
    CenterWidthSpan {
        center: s.center(),
        width: s.length(),
    }
}

/// Total inverse of [`to_center_width`]: endpoints that would land below
/// zero are clamped to the valid span domain.
pub fn to_span(cw: CenterWidthSpan) -> Span {
    let start = (cw.center - cw.width.abs() / 2.0).max(0.0);
    let end = (cw.center + cw.width.abs() / 2.0).max(start);
    Span { start, end }
}

/// Intersection over union of two spans.
///
/// Conventions for degenerate inputs: two identical zero-length points have
/// IoU 1; any other configuration with a zero-length union has IoU 0.
pub fn iou(a: Span, b: Span) -> f64 {
    let inter = (a.end.min(b.end) - a.start.max(b.start)).max(0.0);
    let union = a.length() + b.length() - inter;
    if union <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    inter / union
}

/// Generalized IoU: IoU minus the normalized length of the part of the
/// enclosing hull covered by neither span. Equals IoU when the spans touch
/// or overlap; approaches -1 as disjoint spans move far apart.
pub fn giou(a: Span, b: Span) -> f64 {
    let inter = (a.end.min(b.end) - a.start.max(b.start)).max(0.0);
    let union = a.length() + b.length() - inter;
    let hull = a.end.max(b.end) - a.start.min(b.start);
    if hull <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    let iou = if union <= 0.0 {
        if a == b {
            1.0
        } else {
            0.0
        }
    } else {
        inter / union
    };
    iou - (hull - union) / hull
}

/// FCOS-style centerness of a location inside a ground-truth span:
/// `sqrt(min(l, r) / max(l, r))` with `l`/`r` the distances to the
/// endpoints. Zero outside the span and at its endpoints.
pub fn centerness(location: f64, gt: Span) -> f64 {
    let l = location - gt.start;
    let r = gt.end - location;
    if l < 0.0 || r < 0.0 {
        return 0.0;
    }
    let max = l.max(r);
    if max == 0.0 {
        return 0.0;
    }
    (l.min(r) / max).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn span(s: f64, e: f64) -> Span {
        Span::new(s, e).unwrap()
    }

    #[test]
    fn iou_worked_example() {
        assert_abs_diff_eq!(iou(span(0.0, 4.0), span(2.0, 6.0)), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = span(1.5, 3.25);
        assert_eq!(iou(a, a), 1.0);
        assert_eq!(iou(span(0.0, 2.0), span(4.0, 6.0)), 0.0);
    }

    #[test]
    fn iou_zero_length_conventions() {
        let p = span(2.0, 2.0);
        let q = span(3.0, 3.0);
        assert_eq!(iou(p, p), 1.0);
        assert_eq!(iou(p, q), 0.0);
        assert_eq!(iou(p, span(0.0, 4.0)), 0.0);
    }

    #[test]
    fn giou_worked_examples() {
        // Overlapping spans: hull equals union, so GIoU equals IoU.
        assert_abs_diff_eq!(giou(span(0.0, 4.0), span(2.0, 6.0)), 1.0 / 3.0, epsilon = 1e-15);
        // Disjoint with a gap of 2 inside a hull of 6.
        assert_abs_diff_eq!(giou(span(0.0, 2.0), span(4.0, 6.0)), -1.0 / 3.0, epsilon = 1e-15);
        let a = span(1.0, 5.0);
        assert_eq!(giou(a, a), 1.0);
    }

    #[test]
    fn centerness_cases() {
        let gt = span(0.0, 4.0);
        assert_eq!(centerness(2.0, gt), 1.0);
        assert_eq!(centerness(0.0, gt), 0.0);
        assert_eq!(centerness(4.0, gt), 0.0);
        assert_eq!(centerness(-1.0, gt), 0.0);
        assert_eq!(centerness(5.0, gt), 0.0);
        assert_abs_diff_eq!(centerness(1.0, gt), (1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        // Zero-width span: the single admissible location is its boundary.
        assert_eq!(centerness(2.0, span(2.0, 2.0)), 0.0);
    }

    #[test]
    fn center_width_worked_example() {
        let cw = to_center_width(span(2.0, 6.0));
        assert_eq!(cw.center, 4.0);
        assert_eq!(cw.width, 4.0);
        assert_eq!(to_span(cw), span(2.0, 6.0));

        let point = to_center_width(span(3.0, 3.0));
        assert_eq!(point.center, 3.0);
        assert_eq!(point.width, 0.0);
    }

    #[test]
    fn center_width_round_trip_on_grid_spans() {
        // Clip-grid coordinates: multiples of 1/16 keep the low mantissa
        // bits free, so both conversions are exact.
        let mut state = 1234567u64;
        let mut next_u = move |n: u64| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % n
        };
        for _ in 0..1000 {
            let a = next_u(4096) as f64 / 16.0;
            let b = next_u(4096) as f64 / 16.0;
            let s = span(a.min(b), a.max(b));
            let back = to_span(to_center_width(s));
            assert_eq!(back, s);
        }
    }

    #[test]
    fn span_validation() {
        assert!(Span::new(2.0, 1.0).is_err());
        assert!(Span::new(-0.5, 1.0).is_err());
        assert!(Span::new(f64::NAN, 1.0).is_err());
        assert!(Span::new(0.0, f64::INFINITY).is_err());
        assert!(Span::new(3.0, 3.0).is_ok());
    }

    #[test]
    fn span_serde_shape() {
        let s = span(1.5, 4.0);
        assert_eq!(serde_json::to_string(&s).unwrap(), "[1.5,4.0]");
        let back: Span = serde_json::from_str("[1.5, 4.0]").unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Span>("[4.0, 1.5]").is_err());
        assert!(serde_json::from_str::<Span>("[1.0]").is_err());
    }

    proptest! {
        #[test]
        fn iou_giou_symmetric_and_bounded(
            (a0, a1) in (0.0f64..100.0, 0.0f64..100.0),
            (b0, b1) in (0.0f64..100.0, 0.0f64..100.0),
        ) {
            let a = span(a0.min(a1), a0.max(a1));
            let b = span(b0.min(b1), b0.max(b1));
            prop_assert_eq!(iou(a, b), iou(b, a));
            prop_assert_eq!(giou(a, b), giou(b, a));
            prop_assert!(giou(a, b) <= iou(a, b) + 1e-15);
            prop_assert!(giou(a, b) > -1.0 && giou(a, b) <= 1.0);
        }

        #[test]
        fn iou_giou_translation_invariant(
            (a0, a1) in (0.0f64..50.0, 0.0f64..50.0),
            (b0, b1) in (0.0f64..50.0, 0.0f64..50.0),
            offset in 0.0f64..100.0,
        ) {
            let a = span(a0.min(a1), a0.max(a1));
            let b = span(b0.min(b1), b0.max(b1));
            let at = a.translate(offset).unwrap();
            let bt = b.translate(offset).unwrap();
            prop_assert!((iou(a, b) - iou(at, bt)).abs() <= 1e-12);
            prop_assert!((giou(a, b) - giou(at, bt)).abs() <= 1e-12);
        }

        #[test]
        fn center_width_round_trip_within_ulp(
            (s, e) in (0.0f64..1000.0, 0.0f64..1000.0),
        ) {
            let original = span(s.min(e), s.max(e));
            let back = to_span(to_center_width(original));
            let tol = 1e-12 * (1.0 + original.end().abs());
            prop_assert!((back.start() - original.start()).abs() <= tol);
            prop_assert!((back.end() - original.end()).abs() <= tol);
        }
    }
}
