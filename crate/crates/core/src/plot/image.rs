use std::fmt::Write as _;
use std::path::Path;

use font8x8::{UnicodeFonts, BASIC_FONTS};
use tiny_skia::{Color, FillRule, Paint, PathBuilder, Pixmap, Rect, Stroke, Transform};

use super::html::escape_text;
use super::PlotSpec;
use crate::error::{Error, Result};
use crate::series::{ANOMALY, DATA_LOSS, DATA_RECONSTRUCTED, FORECAST};
use crate::timemath::{ceil, duration_at, next_boundary, TimeUnit, Timestamp, UnitKind};

/// Static image settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageOptions {
    pub width: u32,
    pub height: u32,
    /// Labels to draw; `None` draws all of them.
    pub labels: Option<Vec<String>>,
    pub title: Option<String>,
}

impl Default for ImageOptions {
    fn default() -> Self {
        ImageOptions { width: 1000, height: 420, labels: None, title: None }
    }
}

const PALETTE: [Rgb; 8] = [
    Rgb(0x1f, 0x77, 0xb4),
    Rgb(0xff, 0x7f, 0x0e),
    Rgb(0x2c, 0xa0, 0x2c),
    Rgb(0x94, 0x67, 0xbd),
    Rgb(0x8c, 0x56, 0x4b),
    Rgb(0xe3, 0x77, 0xc2),
    Rgb(0x17, 0xbe, 0xcf),
    Rgb(0xbc, 0xbd, 0x22),
];
const AXIS: Rgb = Rgb(0x44, 0x44, 0x44);
const GRID: Rgb = Rgb(0xdd, 0xdd, 0xdd);
const ANOMALY_COLOR: Rgb = Rgb(0xe6, 0x55, 0x0d);
const GLYPH: f32 = 8.0;

const MARGIN_LEFT: f32 = 72.0;
const MARGIN_RIGHT: f32 = 16.0;
const MARGIN_TOP: f32 = 40.0;
const MARGIN_BOTTOM: f32 = 32.0;

const TICK_UNITS: [&str; 24] = [
    "1s", "5s", "15s", "30s", "1m", "5m", "15m", "30m", "1h", "2h", "3h", "6h", "12h", "1D", "2D", "1W", "1M", "2M",
    "3M", "6M", "1Y", "2Y", "5Y", "10Y",
];
const MAX_X_TICKS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rgb(u8, u8, u8);

impl Rgb {
    fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Anchor {
    Start,
    Middle,
    End,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Area { points: Vec<(f32, f32)>, fill: Rgb, alpha: f32 },
    Line { points: Vec<(f32, f32)>, stroke: Rgb, width: f32 },
    Text { x: f32, y: f32, text: String, color: Rgb, anchor: Anchor },
}

/// Resolution-independent drawing, rasterized to SVG or PNG.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct Scene {
    width: u32,
    height: u32,
    shapes: Vec<Shape>,
}

fn index_color(name: &str) -> (Rgb, f32) {
    match name {
        DATA_LOSS => (Rgb(0xd6, 0x27, 0x28), 0.3),
        DATA_RECONSTRUCTED => (Rgb(0x29, 0xa9, 0xe1), 0.25),
        FORECAST => (Rgb(0xf5, 0xc5, 0x18), 0.3),
        _ => (Rgb(0x99, 0x99, 0x99), 0.25),
    }
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn tick_unit(t0: f64, t1: f64, spec: &PlotSpec) -> TimeUnit {
    let span = t1 - t0;
    TICK_UNITS
        .iter()
        .map(|u| u.parse::<TimeUnit>().expect("tick units are valid"))
        .find(|u| span / duration_at(*u, Timestamp(t0), spec.tz) <= MAX_X_TICKS)
        .unwrap_or_else(|| "100Y".parse().expect("valid unit"))
}

fn tick_format(unit: TimeUnit, span: f64) -> &'static str {
    match unit.kind() {
        UnitKind::Seconds => "%H:%M:%S",
        UnitKind::Minutes | UnitKind::Hours if span >= 86_400.0 => "%m-%d %H:%M",
        UnitKind::Minutes | UnitKind::Hours => "%H:%M",
        UnitKind::Days | UnitKind::Weeks => "%Y-%m-%d",
        UnitKind::Months => "%Y-%m",
        UnitKind::Years => "%Y",
    }
}

pub(super) fn build_scene(spec: &PlotSpec, opts: &ImageOptions) -> Result<Scene> {
    if spec.is_empty() {
        return Err(Error::NotEnoughData("cannot plot an empty series".into()));
    }
    let selected: Vec<usize> = match &opts.labels {
        None => (0..spec.labels.len()).collect(),
        Some(wanted) if wanted.is_empty() => return Err(Error::Invalid("no labels selected for plotting".into())),
        Some(wanted) => wanted
            .iter()
            .map(|w| {
                spec.labels.iter().position(|l| &l.name == w).ok_or_else(|| Error::UnknownLabel {
                    label: w.clone(),
                    available: spec.labels.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join(", "),
                })
            })
            .collect::<Result<_>>()?,
    };
    let (w, h) = (opts.width.max(200) as f32, opts.height.max(120) as f32);
    let (left, right, top, bottom) = (MARGIN_LEFT, w - MARGIN_RIGHT, MARGIN_TOP, h - MARGIN_BOTTOM);
    let (pw, ph) = (right - left, bottom - top);

    let (mut t0, mut t1) = (spec.start[0], spec.end[spec.len() - 1]);
    if t1 <= t0 {
        t0 -= 0.5;
        t1 += 0.5;
    }
    let x_of = |t: f64| left + ((t - t0) / (t1 - t0)) as f32 * pw;
    let xs: Vec<f32> = spec.start.iter().zip(&spec.end).map(|(a, b)| x_of((a + b) / 2.0)).collect();

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &k in &selected {
        let track = &spec.labels[k];
        let band = track.band.iter().flat_map(|b| b.min.iter().chain(&b.max));
        for v in track.values.iter().chain(band) {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if hi - lo < 1e-12 {
        lo -= 1.0;
        hi += 1.0;
    } else {
        let pad = (hi - lo) * 0.05;
        lo -= pad;
        hi += pad;
    }
    let y_of = |v: f64| bottom - ((v - lo) / (hi - lo)) as f32 * ph;

    let mut shapes = Vec::new();

    let step = nice_step(hi - lo);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let mut v = (lo / step).ceil() * step;
    while v <= hi {
        let y = y_of(v);
        shapes.push(Shape::Line { points: vec![(left, y), (right, y)], stroke: GRID, width: 1.0 });
        shapes.push(Shape::Text {
            x: left - 6.0,
            y: y + GLYPH / 2.0,
            text: format!("{:.*}", decimals, if v.abs() < step * 1e-9 { 0.0 } else { v }),
            color: AXIS,
            anchor: Anchor::End,
        });
        v += step;
    }

    let unit = tick_unit(t0, t1, spec);
    let format = tick_format(unit, t1 - t0);
    let mut b = ceil(Timestamp(t0), unit, spec.tz);
    while b.0 <= t1 {
        let x = x_of(b.0);
        shapes.push(Shape::Line { points: vec![(x, bottom), (x, bottom + 4.0)], stroke: AXIS, width: 1.0 });
        shapes.push(Shape::Text {
            x,
            y: bottom + 6.0 + GLYPH * 1.5,
            text: spec.tz.local(b).format(format).to_string(),
            color: AXIS,
            anchor: Anchor::Middle,
        });
        b = next_boundary(b, unit, spec.tz);
    }

    for track in spec.indexes.iter().filter(|t| t.name != ANOMALY) {
        let values: Vec<f64> = track.values.iter().map(|v| v.unwrap_or(0.0)).collect();
        if values.iter().all(|v| *v <= 0.0) {
            continue;
        }
        let (fill, alpha) = index_color(&track.name);
        let mut points = vec![(xs[0], bottom)];
        points.extend(xs.iter().zip(&values).map(|(x, v)| (*x, bottom - *v as f32 * ph)));
        points.push((xs[xs.len() - 1], bottom));
        shapes.push(Shape::Area { points, fill, alpha });
    }

    for (n, &k) in selected.iter().enumerate() {
        let track = &spec.labels[k];
        let color = PALETTE[n % PALETTE.len()];
        if let Some(band) = &track.band {
            let mut points: Vec<(f32, f32)> = xs.iter().zip(&band.max).map(|(x, v)| (*x, y_of(*v))).collect();
            points.extend(xs.iter().zip(&band.min).rev().map(|(x, v)| (*x, y_of(*v))));
            shapes.push(Shape::Area { points, fill: color, alpha: 0.2 });
        }
        let points = xs.iter().zip(&track.values).map(|(x, v)| (*x, y_of(*v))).collect();
        shapes.push(Shape::Line { points, stroke: color, width: 1.5 });
    }

    if let Some(track) = spec.indexes.iter().find(|t| t.name == ANOMALY) {
        let mut run = Vec::new();
        for (x, v) in xs.iter().zip(&track.values) {
            match v {
                Some(v) => run.push((*x, bottom - *v as f32 * ph)),
                None if !run.is_empty() => {
                    shapes.push(Shape::Line { points: std::mem::take(&mut run), stroke: ANOMALY_COLOR, width: 1.0 })
                }
                None => {}
            }
        }
        if !run.is_empty() {
            shapes.push(Shape::Line { points: run, stroke: ANOMALY_COLOR, width: 1.0 });
        }
    }

    shapes.push(Shape::Line {
        points: vec![(left, top), (right, top), (right, bottom), (left, bottom), (left, top)],
        stroke: AXIS,
        width: 1.0,
    });

    let mut legend: Vec<(String, Rgb)> =
        selected.iter().enumerate().map(|(n, &k)| (spec.labels[k].name.clone(), PALETTE[n % PALETTE.len()])).collect();
    for track in &spec.indexes {
        let color = if track.name == ANOMALY { ANOMALY_COLOR } else { index_color(&track.name).0 };
        legend.push((track.name.clone(), color));
    }
    let mut x = left;
    let y = top - 10.0;
    for (name, color) in legend {
        shapes.push(Shape::Area {
            points: vec![(x, y - GLYPH), (x + GLYPH, y - GLYPH), (x + GLYPH, y), (x, y)],
            fill: color,
            alpha: 1.0,
        });
        let width = GLYPH * (name.chars().count() as f32 + 3.0);
        shapes.push(Shape::Text { x: x + GLYPH * 1.5, y, text: name, color: AXIS, anchor: Anchor::Start });
        x += width;
    }
    if let Some(title) = &opts.title {
        shapes.push(Shape::Text { x: right, y, text: title.clone(), color: AXIS, anchor: Anchor::End });
    }

    Ok(Scene { width: w as u32, height: h as u32, shapes })
}

fn svg_points(points: &[(f32, f32)]) -> String {
    let mut out = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.2},{y:.2}");
    }
    out
}

/// SVG markup; `standalone` adds the namespace needed outside HTML.
pub(super) fn scene_svg(scene: &Scene, standalone: bool) -> String {
    let ns = if standalone { " xmlns=\"http://www.w3.org/2000/svg\"" } else { "" };
    let mut out = format!(
        "<svg{ns} width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"monospace\" font-size=\"11\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
        w = scene.width,
        h = scene.height
    );
    for shape in &scene.shapes {
        match shape {
            Shape::Area { points, fill, alpha } => {
                let _ = writeln!(
                    out,
                    "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"{alpha:.2}\"/>",
                    svg_points(points),
                    fill.hex()
                );
            }
            Shape::Line { points, stroke, width } => {
                let _ = writeln!(
                    out,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{width}\"/>",
                    svg_points(points),
                    stroke.hex()
                );
            }
            Shape::Text { x, y, text, color, anchor } => {
                let anchor = match anchor {
                    Anchor::Start => "start",
                    Anchor::Middle => "middle",
                    Anchor::End => "end",
                };
                let _ = writeln!(
                    out,
                    "<text x=\"{x:.2}\" y=\"{y:.2}\" fill=\"{}\" text-anchor=\"{anchor}\">{}</text>",
                    color.hex(),
                    escape_text(text)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

fn paint(color: Rgb, alpha: f32) -> Paint<'static> {
    let mut paint = Paint::default();
    paint.set_color_rgba8(color.0, color.1, color.2, (alpha.clamp(0.0, 1.0) * 255.0).round() as u8);
    paint.anti_alias = true;
    paint
}

fn path(points: &[(f32, f32)], close: bool) -> Option<tiny_skia::Path> {
    let mut pb = PathBuilder::new();
    let (first, rest) = points.split_first()?;
    pb.move_to(first.0, first.1);
    for (x, y) in rest {
        pb.line_to(*x, *y);
    }
    if close {
        pb.close();
    }
    pb.finish()
}

fn draw_text(pixmap: &mut Pixmap, x: f32, y: f32, text: &str, color: Rgb, anchor: Anchor) {
    let width = GLYPH * text.chars().count() as f32;
    let x0 = match anchor {
        Anchor::Start => x,
        Anchor::Middle => x - width / 2.0,
        Anchor::End => x - width,
    }
    .round();
    let y0 = (y - GLYPH).round();
    let mut paint = paint(color, 1.0);
    paint.anti_alias = false;
    for (n, c) in text.chars().enumerate() {
        let glyph = BASIC_FONTS.get(c).or_else(|| BASIC_FONTS.get('?')).unwrap_or([0; 8]);
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..8 {
                if bits & (1 << col) != 0 {
                    let px = x0 + n as f32 * GLYPH + col as f32;
                    if let Some(r) = Rect::from_xywh(px, y0 + row as f32, 1.0, 1.0) {
                        pixmap.fill_rect(r, &paint, Transform::identity(), None);
                    }
                }
            }
        }
    }
}

fn scene_png(scene: &Scene) -> Result<Vec<u8>> {
    let mut pixmap = Pixmap::new(scene.width, scene.height)
        .ok_or_else(|| Error::Invalid(format!("cannot allocate a {}x{} image", scene.width, scene.height)))?;
    pixmap.fill(Color::WHITE);
    for shape in &scene.shapes {
        match shape {
            Shape::Area { points, fill, alpha } => {
                if let Some(p) = path(points, true) {
                    pixmap.fill_path(&p, &paint(*fill, *alpha), FillRule::Winding, Transform::identity(), None);
                }
            }
            Shape::Line { points, stroke, width } => {
                if let Some(p) = path(points, false) {
                    let stroke_style = Stroke { width: *width, ..Stroke::default() };
                    pixmap.stroke_path(&p, &paint(*stroke, 1.0), &stroke_style, Transform::identity(), None);
                }
            }
            Shape::Text { x, y, text, color, anchor } => draw_text(&mut pixmap, *x, *y, text, *color, *anchor),
        }
    }
    pixmap.encode_png().map_err(|e| Error::Invalid(format!("PNG encoding failed: {e}")))
}

/// Standalone SVG document.
pub fn to_svg(spec: &PlotSpec, opts: &ImageOptions) -> Result<String> {
    Ok(scene_svg(&build_scene(spec, opts)?, true))
}

/// PNG bytes. Identical inputs give identical bytes.
pub fn to_png(spec: &PlotSpec, opts: &ImageOptions) -> Result<Vec<u8>> {
    scene_png(&build_scene(spec, opts)?)
}

/// Writes an SVG or PNG depending on the extension of `path`.
pub fn render_image(spec: &PlotSpec, opts: &ImageOptions, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let bytes = match ext.as_deref() {
        Some("svg") => to_svg(spec, opts)?.into_bytes(),
        Some("png") => to_png(spec, opts)?,
        _ => {
            return Err(Error::Invalid(format!(
                "cannot tell the image format of {}: use a .svg or .png extension",
                path.display()
            )))
        }
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
