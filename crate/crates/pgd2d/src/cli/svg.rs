//! Minimal SVG scatter plots: one `<circle>` element per sample,
//! colored by cluster assignment.

use std::fmt::Write as _;

use crate::dataset::GaussianMixtureSpec;
use crate::numerics::Vec2;

/// Cluster palette: even (positive) clusters in blues/greens, odd
/// (negative) clusters in reds/oranges, outliers gray.
pub const CLUSTER_COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#17becf", "#e377c2", "#9467bd", "#8c564b",
];
pub const OUTLIER_COLOR: &str = "#999999";

/// Color index for one sample under the same nearest-mean rule as
/// `metrics::cluster_assign`: `Some(cluster)` or `None` for outliers.
pub fn color_class(x: Vec2, spec: &GaussianMixtureSpec, outlier_radius: f64) -> Option<usize> {
    let mut best = 0usize;
    let mut best_d2 = f64::INFINITY;
    for (k, m) in spec.cluster_means().iter().enumerate() {
        let d2 = (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2);
        if d2 < best_d2 {
            best_d2 = d2;
            best = k;
        }
    }
    if best_d2.sqrt() <= outlier_radius {
        Some(best)
    } else {
        None
    }
}

/// Render samples into an SVG scatter. The viewport spans
/// `[-extent, extent]^2` in data space.
pub fn scatter_svg(
    samples: &[Vec2],
    spec: &GaussianMixtureSpec,
    outlier_radius: f64,
    extent: f64,
) -> String {
    let size = 640.0;
    let map = |v: f64| (v + extent) / (2.0 * extent) * size;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(
        out,
        r##"<rect width="{size}" height="{size}" fill="#ffffff"/>"##
    );
    for &x in samples {
        let color = match color_class(x, spec, outlier_radius) {
            Some(k) => CLUSTER_COLORS[k % CLUSTER_COLORS.len()],
            None => OUTLIER_COLOR,
        };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}" fill-opacity="0.6"/>"#,
            map(x[0]),
            // SVG y grows downward.
            size - map(x[1]),
        );
    }
    out.push_str("</svg>\n");
    out
}
