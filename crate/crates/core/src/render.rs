//! Deterministic SVG heatmaps of hexagonal grids.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::binning::BinGrid;
use crate::error::{Error, Result};
use crate::hexgrid::{axial_to_cartesian, SQRT_3};
use crate::viridis_table::VIRIDIS;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const WHITE: Rgb = Rgb(255, 255, 255);
    pub const BLACK: Rgb = Rgb(0, 0, 0);

    fn from_unit(r: f64, g: f64, b: f64) -> Rgb {
        let c = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        Rgb(c(r), c(g), c(b))
    }

    pub fn to_hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Rgb {
    type Err = Error;

    /// Parses `#rrggbb`.
    fn from_str(s: &str) -> Result<Rgb> {
        let bad = || Error::invalid("color", format!("{s:?} is not #rrggbb"));
        let hex = s.strip_prefix('#').ok_or_else(bad)?;
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(bad());
        }
        let part = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Rgb(part(0)?, part(2)?, part(4)?))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Colormap {
    /// White at 0, black at 1.
    #[default]
    Grayscale,
    Viridis,
}

impl Colormap {
    pub const ALL: [Colormap; 2] = [Colormap::Grayscale, Colormap::Viridis];

    pub fn as_str(self) -> &'static str {
        match self {
            Colormap::Grayscale => "grayscale",
            Colormap::Viridis => "viridis",
        }
    }

    /// Color for `t` in `[0, 1]`; values outside are clamped.
    pub fn color(self, t: f64) -> Rgb {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        match self {
            Colormap::Grayscale => {
                let level = 1.0 - t;
                Rgb::from_unit(level, level, level)
            }
            Colormap::Viridis => {
                let pos = t * (VIRIDIS.len() - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(VIRIDIS.len() - 1);
                let frac = pos - lo as f64;
                let (a, b) = (VIRIDIS[lo], VIRIDIS[hi]);
                let lerp = |i: usize| a[i] + (b[i] - a[i]) * frac;
                Rgb::from_unit(lerp(0), lerp(1), lerp(2))
            }
        }
    }
}

impl fmt::Display for Colormap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Colormap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grayscale" | "greyscale" | "gray" => Ok(Colormap::Grayscale),
            "viridis" => Ok(Colormap::Viridis),
            other => Err(Error::invalid(
                "colormap",
                format!("unknown colormap {other:?} (expected grayscale or viridis)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stroke {
    pub color: Rgb,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderSpec {
    pub colormap: Colormap,
    /// Display gain applied before clipping; 1 is a plain linear ramp.
    pub saturation: f64,
    /// Hexagon side length in pixels along y.
    pub tile_side_px: f64,
    pub stroke: Option<Stroke>,
    pub background: Rgb,
    /// Bins with a value below this are not drawn.
    pub value_floor: f64,
    /// Horizontal stretch of the lattice. `None` uses `scale_x / scale_y`
    /// of the grid layout, which keeps data-space proportions.
    pub stretch_x: Option<f64>,
    /// Margin around the drawing in pixels.
    pub padding_px: f64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            colormap: Colormap::Grayscale,
            saturation: 1.0,
            tile_side_px: 10.0,
            stroke: None,
            background: Rgb::WHITE,
            value_floor: 0.0,
            stretch_x: None,
            padding_px: 4.0,
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.saturation.is_finite() && self.saturation >= 1.0) {
            return Err(Error::invalid("saturation", "must be finite and >= 1"));
        }
        if !(self.tile_side_px.is_finite() && self.tile_side_px > 0.0) {
            return Err(Error::invalid("tile_px", "must be finite and > 0"));
        }
        if !(self.value_floor.is_finite() && self.value_floor >= 0.0) {
            return Err(Error::invalid("floor", "must be finite and >= 0"));
        }
        if let Some(s) = self.stretch_x {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid("stretch_x", "must be finite and > 0"));
            }
        }
        if let Some(s) = self.stroke {
            if !(s.width.is_finite() && s.width >= 0.0) {
                return Err(Error::invalid("stroke_width", "must be finite and >= 0"));
            }
        }
        if !(self.padding_px.is_finite() && self.padding_px >= 0.0) {
            return Err(Error::invalid("padding", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Linear gain then clip: `min(saturation · v / v_max, 1)`. A non-positive
/// `v_max` maps everything to 0.
pub fn normalize_value(v: f64, v_max: f64, saturation: f64) -> f64 {
    if v_max <= 0.0 || !v_max.is_finite() {
        return 0.0;
    }
    (saturation * v / v_max).clamp(0.0, 1.0)
}

/// Fill color of a bin, shared by every front end so tiles match the SVG.
pub fn bin_color(v: f64, v_max: f64, saturation: f64, colormap: Colormap) -> Rgb {
    colormap.color(normalize_value(v, v_max, saturation))
}

/// Fixed three-decimal formatting without a negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Unit flat-top hexagon vertices at 0°, 60°, …, 300°.
pub const HEX_VERTICES: [(f64, f64); 6] = [
    (1.0, 0.0),
    (0.5, SQRT_3 / 2.0),
    (-0.5, SQRT_3 / 2.0),
    (-1.0, 0.0),
    (-0.5, -SQRT_3 / 2.0),
    (0.5, -SQRT_3 / 2.0),
];

pub fn render_svg(grid: &BinGrid, spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    let layout = grid.layout();
    let stretch = spec.stretch_x.unwrap_or(layout.scale_x / layout.scale_y);
    let px_x = spec.tile_side_px * stretch;
    let px_y = spec.tile_side_px;
    let v_max = grid.max_value();

    let drawn: Vec<_> = grid
        .iter()
        .filter(|(_, b)| b.total_weight > 0.0 && b.total_weight >= spec.value_floor)
        .map(|(a, b)| (axial_to_cartesian(*a), b.total_weight))
        .collect();

    // Extent in normalized units, including the hexagon outlines.
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for (c, _) in &drawn {
        min_x = min_x.min(c.x - 1.0);
        max_x = max_x.max(c.x + 1.0);
        min_y = min_y.min(c.y - SQRT_3 / 2.0);
        max_y = max_y.max(c.y + SQRT_3 / 2.0);
    }
    let pad = spec.padding_px;
    let (width, height) = if drawn.is_empty() {
        (2.0 * pad, 2.0 * pad)
    } else {
        (
            (max_x - min_x) * px_x + 2.0 * pad,
            (max_y - min_y) * px_y + 2.0 * pad,
        )
    };
    let (w, h) = (num(width), num(height));

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}px" height="{h}px" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="{}"/>"#,
        spec.background
    );
    match spec.stroke {
        Some(s) => {
            let _ = writeln!(
                out,
                r#"<g stroke="{}" stroke-width="{}">"#,
                s.color,
                num(s.width)
            );
        }
        None => {
            let _ = writeln!(out, r#"<g stroke="none">"#);
        }
    }
    for (c, v) in &drawn {
        let fill = bin_color(*v, v_max, spec.saturation, spec.colormap);
        let points: Vec<String> = HEX_VERTICES
            .iter()
            .map(|(vx, vy)| {
                let x = (c.x + vx - min_x) * px_x + pad;
                let y = (max_y - (c.y + vy)) * px_y + pad;
                format!("{},{}", num(x), num(y))
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}"/>"#,
            points.join(" "),
            fill
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexgrid::{AxialCoord, HexLayout};

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_value(7.0, 7.0, 1.0), 1.0);
        assert_eq!(normalize_value(0.0, 3.0, 2.5), 0.0);
        assert_eq!(normalize_value(0.4 * 5.0, 5.0, 2.5), 1.0);
        assert_eq!(normalize_value(1.0, 0.0, 1.0), 0.0);
        assert_eq!(normalize_value(1.0, 4.0, 1.0), 0.25);
    }

    #[test]
    fn grayscale_endpoints() {
        assert_eq!(Colormap::Grayscale.color(0.0), Rgb::WHITE);
        assert_eq!(Colormap::Grayscale.color(1.0), Rgb::BLACK);
        // 39.3% → gray level 0.607
        assert_eq!(Colormap::Grayscale.color(0.393), Rgb(155, 155, 155));
    }

    #[test]
    fn viridis_endpoints() {
        let lo = Colormap::Viridis.color(0.0);
        let hi = Colormap::Viridis.color(1.0);
        // published viridis endpoints #440154 and #fde725
        assert_eq!(lo, Rgb(0x44, 0x01, 0x54));
        assert_eq!(hi, Rgb(0xfd, 0xe7, 0x25));
        let mid = Colormap::Viridis.color(0.5);
        let want = Rgb(0x21, 0x91, 0x8c);
        assert!(mid.0.abs_diff(want.0) <= 1 && mid.1.abs_diff(want.1) <= 1 && mid.2.abs_diff(want.2) <= 1);
    }

    #[test]
    fn parse_colors_and_maps() {
        assert_eq!("#0a0B10".parse::<Rgb>().unwrap(), Rgb(10, 11, 16));
        assert!("0a0b10".parse::<Rgb>().is_err());
        assert_eq!("viridis".parse::<Colormap>().unwrap(), Colormap::Viridis);
        assert_eq!("jet".parse::<Colormap>().unwrap_err().field(), Some("colormap"));
    }

    #[test]
    fn empty_grid_renders_background_only() {
        let svg = render_svg(&BinGrid::empty(HexLayout::default()), &RenderSpec::default()).unwrap();
        assert!(svg.contains("<rect"));
        assert_eq!(svg.matches("<polygon").count(), 0);
    }

    #[test]
    fn single_bin_is_black() {
        let grid = BinGrid::from_weights(HexLayout::default(), [(AxialCoord::new(2, -3), 4.0)]);
        let svg = render_svg(&grid, &RenderSpec::default()).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains(r##"fill="#000000""##));
    }

    #[test]
    fn floor_hides_faint_bins() {
        let grid = BinGrid::from_weights(
            HexLayout::default(),
            [(AxialCoord::new(0, 0), 1.0), (AxialCoord::new(1, 0), 0.001)],
        );
        let spec = RenderSpec {
            value_floor: 0.01,
            ..RenderSpec::default()
        };
        assert_eq!(render_svg(&grid, &spec).unwrap().matches("<polygon").count(), 1);
    }

    #[test]
    fn invalid_spec_rejected() {
        let grid = BinGrid::empty(HexLayout::default());
        let spec = RenderSpec {
            saturation: 0.5,
            ..RenderSpec::default()
        };
        assert_eq!(render_svg(&grid, &spec).unwrap_err().field(), Some("saturation"));
    }
}
