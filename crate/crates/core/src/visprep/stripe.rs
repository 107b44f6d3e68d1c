use serde::{Deserialize, Serialize};

use super::vsup::{quantize_sequential, vsup_quantize, VsupScheme, VSUP_TREE};
use crate::scalar::Scalar;
use crate::transform::Representation;

/// Element-wise maximum over the windows mapped to one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledPixel<T> {
    /// Explanation metric; absent when no window in the chunk has one.
    pub metric1: Option<T>,
    pub metric2: T,
    /// Windows `first_window ..= last_window` fold into this pixel.
    pub first_window: usize,
    pub last_window: usize,
}

/// How pooled pixels are turned into cell ids.
#[derive(Debug, Clone, Copy)]
pub enum Coloring<'a, T> {
    /// Bivariate wedge; ids as in [`VsupScheme`].
    Vsup(&'a VsupScheme<T>),
    /// Sequential bins over the first metric within `[lo, hi]`.
    Metric1 { lo: T, hi: T },
    /// Sequential bins over the second metric within `[lo, hi]`.
    Metric2 { lo: T, hi: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeRow<T> {
    pub representation_id: String,
    /// Windows per pixel, `floor(N_w / P)` (at least 1).
    pub n_w: usize,
    /// `None` marks a pixel with no windows.
    pub pixel_values: Vec<Option<PooledPixel<T>>>,
    /// `None` for empty pixels and for pixels whose coloring metric is absent.
    pub pixel_cells: Vec<Option<usize>>,
}

impl<T> StripeRow<T> {
    pub fn len(&self) -> usize {
        self.pixel_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixel_values.is_empty()
    }
}

/// Max-pools per-window `(metric1, metric2)` pairs onto `pixels` columns.
///
/// With no more windows than pixels each window gets its own pixel and the
/// trailing pixels stay empty. Otherwise pixel `i` covers windows
/// `i n_w .. (i + 1) n_w` and the last pixel also takes the remainder.
pub fn max_pool<T: Scalar>(metrics: &[(Option<T>, T)], pixels: usize) -> (usize, Vec<Option<PooledPixel<T>>>) {
    let n = metrics.len();
    if pixels == 0 {
        return (0, Vec::new());
    }
    let n_w = (n / pixels).max(1);
    let pooled = (0..pixels)
        .map(|p| {
            let first = p * n_w;
            let last = if p + 1 == pixels { n } else { (first + n_w).min(n) };
            if first >= last {
                return None;
            }
            let chunk = &metrics[first..last];
            let metric1 = chunk.iter().filter_map(|m| m.0).reduce(T::max);
            let metric2 = chunk.iter().map(|m| m.1).fold(T::neg_infinity(), T::max);
            Some(PooledPixel { metric1, metric2, first_window: first, last_window: last - 1 })
        })
        .collect();
    (n_w, pooled)
}

/// Pools window metrics onto `pixels` columns and quantizes each pixel.
pub fn aggregate_stripe<T: Scalar>(
    representation_id: &str,
    metrics: &[(Option<T>, T)],
    pixels: usize,
    coloring: Coloring<'_, T>,
) -> StripeRow<T> {
    let (n_w, pixel_values) = max_pool(metrics, pixels);
    let pixel_cells = pixel_values
        .iter()
        .map(|px| {
            let px = px.as_ref()?;
            match coloring {
                Coloring::Vsup(scheme) => px.metric1.map(|m1| vsup_quantize(m1, px.metric2, scheme).id()),
                Coloring::Metric1 { lo, hi } => px.metric1.map(|m1| quantize_sequential(m1, lo, hi)),
                Coloring::Metric2 { lo, hi } => Some(quantize_sequential(px.metric2, lo, hi)),
            }
        })
        .collect();
    debug_assert!(VSUP_TREE.iter().sum::<usize>() == 15);
    StripeRow { representation_id: representation_id.to_string(), n_w, pixel_values, pixel_cells }
}

/// Horizontal extent of one window's rectangle, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub x: T,
    pub width: T,
}

/// One rectangle per window, starting at the window's first raw time step
/// and one skip wide, on a timeline shared by every representation.
pub fn layout_windows<T: Scalar>(representation: &Representation<T>, axis_width: T, time_extent: (usize, usize)) -> Vec<Rect<T>> {
    let (t0, t1) = time_extent;
    let scale = axis_width / T::from_count(t1.saturating_sub(t0).max(1));
    let offset = representation.offset();
    let width = T::from_count(representation.skip) * scale;
    representation
        .windows
        .iter()
        .map(|w| {
            let t = (offset + w.start) as f64 - t0 as f64;
            Rect { x: T::lit(t) * scale, width }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Timestamp, TimeSeriesDataset, VariableSeries};
    use crate::transform::SmoothingSpec;

    fn pairs(v: &[(f64, f64)]) -> Vec<(Option<f64>, f64)> {
        v.iter().map(|&(a, b)| (Some(a), b)).collect()
    }

    #[test]
    fn identity_when_windows_equal_pixels() {
        let m = pairs(&[(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)]);
        let (n_w, px) = max_pool(&m, 3);
        assert_eq!(n_w, 1);
        for (i, p) in px.iter().enumerate() {
            let p = p.unwrap();
            assert_eq!((p.metric1, p.metric2), m[i]);
        }
    }

    #[test]
    fn chunk_maxima_example() {
        let m = pairs(&[(0.1, 1.0), (0.9, 2.0), (0.2, 9.0), (0.3, 1.0), (0.8, 2.0), (0.4, 3.0)]);
        let (n_w, px) = max_pool(&m, 3);
        assert_eq!(n_w, 2);
        let got: Vec<_> = px.iter().map(|p| p.map(|p| (p.metric1.unwrap(), p.metric2)).unwrap()).collect();
        assert_eq!(got, [(0.9, 2.0), (0.3, 9.0), (0.8, 3.0)]);
    }

    #[test]
    fn fewer_windows_than_pixels_leaves_trailing_empty() {
        let (_, px) = max_pool(&pairs(&[(0.1, 1.0), (0.2, 2.0)]), 5);
        assert!(px[0].is_some() && px[1].is_some());
        assert!(px[2..].iter().all(Option::is_none));
    }

    #[test]
    fn remainder_folds_into_last_pixel() {
        let m: Vec<_> = (0..10).map(|i| (Some(0.0), i as f64)).collect();
        let (n_w, px) = max_pool(&m, 3);
        assert_eq!(n_w, 3);
        let last = px[2].unwrap();
        assert_eq!((last.first_window, last.last_window, last.metric2), (6, 9, 9.0));
    }

    #[test]
    fn absent_metric1_is_skipped() {
        let (_, px) = max_pool(&[(None, 1.0), (Some(-0.5), 0.5), (None, 2.0), (None, 0.1)], 2);
        assert_eq!(px[0].unwrap().metric1, Some(-0.5));
        assert_eq!(px[1].unwrap().metric1, None);
        let row = aggregate_stripe("r", &[(None, 1.0), (None, 2.0)], 2, Coloring::Metric2 { lo: 0.0, hi: 2.0 });
        assert_eq!(row.pixel_cells, [Some(4), Some(7)]);
        let row = aggregate_stripe("r", &[(None, 1.0), (None, 2.0)], 2, Coloring::Metric1 { lo: 0.0, hi: 2.0 });
        assert_eq!(row.pixel_cells, [None, None]);
    }

    fn rep(skip: usize, smoothing: SmoothingSpec) -> Representation<f64> {
        let values: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let ds = TimeSeriesDataset::new(
            "d",
            (0..60).map(Timestamp::Index).collect(),
            vec![VariableSeries { id: "y".into(), display_name: "y".into(), values, unit: None }],
            "y",
        )
        .unwrap();
        Representation::build(&ds, smoothing, skip, 10, 2).unwrap()
    }

    #[test]
    fn layout_is_skip_wide_and_disjoint() {
        let r = rep(3, SmoothingSpec::RAW);
        let rects = layout_windows(&r, 600.0, (0, 60));
        assert_eq!(rects[0], Rect { x: 0.0, width: 30.0 });
        assert_eq!(rects[1].x, 30.0);
        assert!(rects.windows(2).all(|p| p[0].x + p[0].width <= p[1].x + 1e-9));
        let unit = layout_windows(&rep(1, SmoothingSpec::RAW), 60.0, (0, 60));
        assert!(unit.windows(2).all(|p| p[0].x + p[0].width == p[1].x));
    }

    #[test]
    fn shared_timeline_scale() {
        let a = layout_windows(&rep(1, SmoothingSpec::RAW), 600.0, (0, 60));
        let b = layout_windows(&rep(3, SmoothingSpec::wma(5)), 600.0, (0, 60));
        // WMA-5 starts 4 raw steps later, same pixels per step
        assert_eq!(b[0].x, a[4].x);
        assert_eq!(b[0].width, 3.0 * a[0].width);
    }
}
