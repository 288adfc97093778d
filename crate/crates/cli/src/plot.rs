//! Static SVG renderings of result tables.

use std::path::Path;

use plotters::prelude::*;

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::run::{PREPARATION_COLUMNS, QUENCH_COLUMNS, SCRAMBLING_COLUMNS, SWEEP_COLUMNS};
use crate::table::ResultTable;

const SIZE: (u32, u32) = (800, 520);
const PALETTE: [RGBColor; 3] = [RGBColor(31, 119, 180), RGBColor(44, 160, 44), RGBColor(214, 39, 40)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `Re ΔJ` against SDR asymmetry.
    Sweep,
    /// Three labeled `M(T_s)` curves.
    QuenchDecay,
    /// Contrast and `K` against `T_p` on twin axes.
    PreparationScan,
    /// Contrast against `T_E`.
    ScramblingScan,
}

impl From<Experiment> for PlotKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::Sweep => PlotKind::Sweep,
            Experiment::QuenchDecay => PlotKind::QuenchDecay,
            Experiment::PreparationScan => PlotKind::PreparationScan,
            Experiment::ScramblingScan => PlotKind::ScramblingScan,
        }
    }
}

impl PlotKind {
    fn required(self) -> &'static [&'static str] {
        match self {
            PlotKind::Sweep => &SWEEP_COLUMNS,
            PlotKind::QuenchDecay => &QUENCH_COLUMNS,
            PlotKind::PreparationScan => &PREPARATION_COLUMNS,
            PlotKind::ScramblingScan => &SCRAMBLING_COLUMNS,
        }
    }
}

fn range(values: impl IntoIterator<Item = f64>) -> std::ops::Range<f64> {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return 0.0..1.0;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    (lo - pad)..(hi + pad)
}

fn draw_error<E: std::error::Error + Send + Sync>(e: DrawingAreaErrorKind<E>) -> CliError {
    CliError::Plot(e.to_string())
}

/// Renders `table` as an SVG at `path`. Nothing is written when the table is
/// empty or lacks the columns `kind` needs.
pub fn plot(table: &ResultTable, kind: PlotKind, path: &Path) -> Result<()> {
    if table.is_empty() {
        return Err(CliError::Plot("table has no rows".into()));
    }
    let cols: Vec<Vec<f64>> = kind
        .required()
        .iter()
        .map(|c| table.column(c).ok_or_else(|| CliError::Plot(format!("missing column `{c}` for {kind:?}"))))
        .collect::<Result<_>>()?;

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(draw_error)?;
    let x = &cols[0];
    match kind {
        PlotKind::Sweep | PlotKind::ScramblingScan => {
            let (caption, xl, yl) = if kind == PlotKind::Sweep {
                ("SDR contrast", "asymmetry x", "Re ΔJ")
            } else {
                ("Scrambling scan", "T_E (µs)", "integrated contrast")
            };
            let y = &cols[1];
            let mut chart = ChartBuilder::on(&root)
                .caption(caption, ("sans-serif", 22))
                .margin(16)
                .x_label_area_size(44)
                .y_label_area_size(70)
                .build_cartesian_2d(range(x.iter().copied()), range(y.iter().copied()))
                .map_err(draw_error)?;
            chart.configure_mesh().x_desc(xl).y_desc(yl).draw().map_err(draw_error)?;
            let pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
            chart.draw_series(LineSeries::new(pts.clone(), &PALETTE[0])).map_err(draw_error)?;
            chart
                .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, PALETTE[0].filled())))
                .map_err(draw_error)?;
        }
        PlotKind::QuenchDecay => {
            let mut chart = ChartBuilder::on(&root)
                .caption("Signal decay after a quench", ("sans-serif", 22))
                .margin(16)
                .x_label_area_size(44)
                .y_label_area_size(70)
                .build_cartesian_2d(range(x.iter().copied()), range(cols[1..].iter().flatten().copied()))
                .map_err(draw_error)?;
            chart.configure_mesh().x_desc("T_s (µs)").y_desc("M").draw().map_err(draw_error)?;
            let labels = ["σ = 0", "σ = σ₀", "σ > σ₀"];
            for (k, label) in labels.iter().enumerate() {
                let color = PALETTE[k];
                let pts: Vec<(f64, f64)> = x.iter().copied().zip(cols[k + 1].iter().copied()).collect();
                chart
                    .draw_series(LineSeries::new(pts, &color))
                    .map_err(draw_error)?
                    .label(*label)
                    .legend(move |(lx, ly)| PathElement::new(vec![(lx, ly), (lx + 20, ly)], color));
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(draw_error)?;
        }
        PlotKind::PreparationScan => {
            let (contrast, k) = (&cols[1], &cols[2]);
            let mut chart = ChartBuilder::on(&root)
                .caption("Preparation scan", ("sans-serif", 22))
                .margin(16)
                .x_label_area_size(44)
                .y_label_area_size(70)
                .right_y_label_area_size(70)
                .build_cartesian_2d(range(x.iter().copied()), range(contrast.iter().copied()))
                .map_err(draw_error)?
                .set_secondary_coord(range(x.iter().copied()), range(k.iter().copied()));
            chart
                .configure_mesh()
                .x_desc("T_p (µs)")
                .y_desc("integrated contrast")
                .draw()
                .map_err(draw_error)?;
            chart.configure_secondary_axes().y_desc("K").draw().map_err(draw_error)?;
            let c_pts: Vec<(f64, f64)> = x.iter().copied().zip(contrast.iter().copied()).collect();
            let k_pts: Vec<(f64, f64)> = x.iter().copied().zip(k.iter().copied()).collect();
            chart
                .draw_series(LineSeries::new(c_pts, &PALETTE[0]))
                .map_err(draw_error)?
                .label("contrast")
                .legend(|(lx, ly)| PathElement::new(vec![(lx, ly), (lx + 20, ly)], PALETTE[0]));
            chart
                .draw_secondary_series(LineSeries::new(k_pts, &PALETTE[2]))
                .map_err(draw_error)?
                .label("K")
                .legend(|(lx, ly)| PathElement::new(vec![(lx, ly), (lx + 20, ly)], PALETTE[2]));
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .position(SeriesLabelPosition::UpperLeft)
                .draw()
                .map_err(draw_error)?;
        }
    }
    root.present().map_err(draw_error)?;
    Ok(())
}
