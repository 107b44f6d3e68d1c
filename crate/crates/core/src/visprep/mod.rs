//! View data preparation: bivariate quantization, pixel stripes, Mosaic
//! grids, horizon bands and scatter sampling. Nothing here renders; every
//! output is plain data for the frontend.

mod horizon;
mod mosaic;
mod sampling;
mod stripe;
mod vsup;

pub use horizon::{horizon_bands, HorizonBands, HORIZON_BANDS};
pub use mosaic::{mosaic_matrix, MosaicColor, MosaicGrid, DEFAULT_MOSAIC_GRID};
pub use sampling::sample_predictions;
pub use stripe::{aggregate_stripe, Coloring, layout_windows, max_pool, PooledPixel, Rect, StripeRow};
pub use vsup::{
    build_vsup, quantize_sequential, vsup_quantize, Metric1Domain, VsupCell, VsupScheme, SEQUENTIAL_BINS, VSUP_LEVELS,
    VSUP_TREE, VSUP_VALUE_BINS,
};
