//! Grouped bar charts as standalone SVG.
//!
//! Hand-built markup: the output depends only on the input cells, so chart
//! regeneration is byte-stable, which the determinism contract needs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use drivevqa_core::pipeline::Variant;
use drivevqa_core::scoring::AggregateCell;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// Height, in pixels, of the hatched placeholder for an undefined cell.
const UNDEFINED_BAND: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mae,
    Rmse,
    Pearson,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mae, Metric::Rmse, Metric::Pearson];

    pub fn title(&self) -> &'static str {
        match self {
            Metric::Mae => "Mean Absolute Error",
            Metric::Rmse => "Root Mean Squared Error",
            Metric::Pearson => "Pearson Correlation",
        }
    }

    pub fn file_name(&self) -> &'static str {
        match self {
            Metric::Mae => "mae.svg",
            Metric::Rmse => "rmse.svg",
            Metric::Pearson => "pearson.svg",
        }
    }

    fn value(&self, cell: &AggregateCell) -> Option<f64> {
        match self {
            Metric::Mae => Some(cell.mae),
            Metric::Rmse => Some(cell.rmse),
            Metric::Pearson => cell.pearson,
        }
    }
}

fn variant_color(variant: Variant) -> &'static str {
    match variant {
        Variant::Pretrained => "#8da0cb",
        Variant::Filtered => "#66c2a5",
    }
}

/// Render one metric as a grouped bar chart: providers on the x-axis, one
/// bar per variant. Undefined cells (Pearson over constant scores) render
/// as a hatched band with a legend note instead of a fabricated bar.
pub fn render_chart(metric: Metric, cells: &[AggregateCell]) -> String {
    let providers: Vec<String> = cells
        .iter()
        .map(|c| c.provider.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let variants: Vec<Variant> = {
        let set: BTreeSet<Variant> = cells.iter().map(|c| c.variant).collect();
        set.into_iter().collect()
    };

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    // Domain: error metrics grow from zero; correlation is fixed [-1, 1].
    let (dom_min, dom_max) = match metric {
        Metric::Pearson => (-1.0, 1.0),
        _ => {
            let max = cells
                .iter()
                .filter_map(|c| metric.value(c))
                .fold(0.0f64, f64::max);
            (0.0, if max <= 0.0 { 1.0 } else { max * 1.15 })
        }
    };
    let y_of = |v: f64| MARGIN_TOP + (1.0 - (v - dom_min) / (dom_max - dom_min)) * plot_h;
    let zero_y = y_of(0.0f64.clamp(dom_min, dom_max));

    let mut svg = String::new();
    let _ = write!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"##
    );
    svg.push_str("<defs><pattern id=\"undefined\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\"><path d=\"M0,6 L6,0\" stroke=\"#9a9a9a\" stroke-width=\"1\"/></pattern></defs>");
    let _ = write!(
        svg,
        r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{x}" y="28" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"##,
        x = WIDTH / 2.0,
        title = metric.title()
    );

    // Horizontal gridlines and tick labels.
    for i in 0..=5 {
        let v = dom_min + (dom_max - dom_min) * i as f64 / 5.0;
        let y = y_of(v);
        let _ = write!(
            svg,
            r##"<line x1="{x1}" y1="{y:.2}" x2="{x2}" y2="{y:.2}" stroke="#dddddd" stroke-width="1"/><text x="{tx}" y="{ty:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.2}</text>"##,
            x1 = MARGIN_LEFT,
            x2 = WIDTH - MARGIN_RIGHT,
            tx = MARGIN_LEFT - 6.0,
            ty = y + 4.0,
        );
    }
    // Axes (plus a zero line when the domain crosses zero).
    let _ = write!(
        svg,
        r##"<line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="#333333" stroke-width="1"/>"##,
        x = MARGIN_LEFT,
        y1 = MARGIN_TOP,
        y2 = MARGIN_TOP + plot_h,
    );
    let _ = write!(
        svg,
        r##"<line x1="{x1}" y1="{y:.2}" x2="{x2}" y2="{y:.2}" stroke="#333333" stroke-width="1"/>"##,
        x1 = MARGIN_LEFT,
        x2 = WIDTH - MARGIN_RIGHT,
        y = zero_y,
    );

    let group_w = plot_w / providers.len().max(1) as f64;
    let bar_w = group_w / (variants.len() as f64 + 1.0);
    let mut any_undefined = false;

    for (pi, provider) in providers.iter().enumerate() {
        let group_x = MARGIN_LEFT + pi as f64 * group_w;
        for (vi, &variant) in variants.iter().enumerate() {
            let x = group_x + bar_w * (0.5 + vi as f64);
            let cell = cells
                .iter()
                .find(|c| &c.provider == provider && c.variant == variant);
            match cell.and_then(|c| metric.value(c)) {
                Some(value) => {
                    let v = value.clamp(dom_min, dom_max);
                    let y = y_of(v);
                    let (top, height) = if v >= 0.0 {
                        (y, zero_y - y)
                    } else {
                        (zero_y, y - zero_y)
                    };
                    let _ = write!(
                        svg,
                        r##"<rect x="{x:.2}" y="{top:.2}" width="{bar_w:.2}" height="{height:.2}" fill="{fill}"/><text x="{lx:.2}" y="{ly:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{value:.3}</text>"##,
                        fill = variant_color(variant),
                        lx = x + bar_w / 2.0,
                        ly = top - 4.0,
                    );
                }
                None => {
                    any_undefined = true;
                    let _ = write!(
                        svg,
                        r##"<rect x="{x:.2}" y="{top:.2}" width="{bar_w:.2}" height="{UNDEFINED_BAND}" fill="url(#undefined)" stroke="#9a9a9a" stroke-dasharray="3,2"/><text x="{lx:.2}" y="{ly:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">n/a</text>"##,
                        top = zero_y - UNDEFINED_BAND,
                        lx = x + bar_w / 2.0,
                        ly = zero_y - UNDEFINED_BAND - 4.0,
                    );
                }
            }
        }
        let _ = write!(
            svg,
            r##"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{provider}</text>"##,
            x = group_x + group_w / 2.0,
            y = MARGIN_TOP + plot_h + 18.0,
        );
    }

    // Legend.
    let mut legend_x = MARGIN_LEFT;
    let legend_y = HEIGHT - 16.0;
    for &variant in &variants {
        let _ = write!(
            svg,
            r##"<rect x="{legend_x:.2}" y="{y:.2}" width="12" height="12" fill="{fill}"/><text x="{tx:.2}" y="{ty:.2}" font-family="sans-serif" font-size="12">{variant}</text>"##,
            y = legend_y - 10.0,
            fill = variant_color(variant),
            tx = legend_x + 16.0,
            ty = legend_y,
        );
        legend_x += 110.0;
    }
    if any_undefined {
        let _ = write!(
            svg,
            r##"<rect x="{legend_x:.2}" y="{y:.2}" width="12" height="12" fill="url(#undefined)" stroke="#9a9a9a"/><text x="{tx:.2}" y="{ty:.2}" font-family="sans-serif" font-size="12">undefined (no correlation)</text>"##,
            y = legend_y - 10.0,
            tx = legend_x + 16.0,
            ty = legend_y,
        );
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(provider: &str, variant: Variant, mae: f64, pearson: Option<f64>) -> AggregateCell {
        AggregateCell {
            provider: provider.into(),
            variant,
            mae,
            rmse: mae * 1.2,
            pearson,
        }
    }

    #[test]
    fn rendering_is_byte_stable() {
        let cells = vec![
            cell("hash", Variant::Pretrained, 0.19, Some(0.88)),
            cell("hash", Variant::Filtered, 0.07, Some(0.99)),
        ];
        for metric in Metric::ALL {
            assert_eq!(render_chart(metric, &cells), render_chart(metric, &cells));
        }
    }

    #[test]
    fn undefined_pearson_renders_hatched_with_note() {
        let cells = vec![
            cell("hash", Variant::Pretrained, 0.1, None),
            cell("hash", Variant::Filtered, 0.05, Some(0.9)),
        ];
        let svg = render_chart(Metric::Pearson, &cells);
        assert!(svg.contains("url(#undefined)"));
        assert!(svg.contains("undefined (no correlation)"));
        assert!(svg.contains("n/a"));
        // The defined cell still gets a solid bar.
        assert!(svg.contains("#66c2a5"));
    }

    #[test]
    fn negative_correlation_draws_below_the_zero_line() {
        let cells = vec![cell("hash", Variant::Pretrained, 0.1, Some(-0.5))];
        let svg = render_chart(Metric::Pearson, &cells);
        assert!(svg.contains("-0.500"));
    }
}
