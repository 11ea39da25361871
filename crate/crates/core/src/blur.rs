//! Anisotropic Gaussian blur of hexagonal bins, evaluated at bin centers.
//!
//! The kernel is separable in the two Cartesian axes,
//!
//! ```text
//! w(dx, dy) = exp(−dx² / 2σx²) · exp(−dy² / 2σy²)
//! ```
//!
//! with `dx`, `dy` and both sigmas in hexagon side lengths. It is evaluated once
//! per parameter set at the centers of the neighbouring bins and stored as a
//! [`KernelStencil`], which [`apply_blur`] then slides over a sparse grid.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::binning::{BinAggregate, BinGrid};
use crate::error::{Error, Result};
use crate::hexgrid::{axial_to_cartesian, ring, AxialCoord, HexLayout};

pub const DEFAULT_EPSILON: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NormalizationMode {
    /// Center weight is exactly 1; other weights are relative to it.
    CenterRelative,
    /// Weights sum to 1, so blurring preserves the grid total.
    #[default]
    MassPreserving,
}

impl NormalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMode::CenterRelative => "center_relative",
            NormalizationMode::MassPreserving => "mass_preserving",
        }
    }
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center_relative" => Ok(NormalizationMode::CenterRelative),
            "mass_preserving" => Ok(NormalizationMode::MassPreserving),
            other => Err(Error::invalid(
                "mode",
                format!("unknown mode {other:?} (expected center_relative or mass_preserving)"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlurParams {
    pub sigma_x: f64,
    pub sigma_y: f64,
    /// Entries whose weight relative to the center falls below this are dropped.
    pub epsilon: f64,
    pub mode: NormalizationMode,
}

impl BlurParams {
    pub fn new(sigma_x: f64, sigma_y: f64) -> Result<Self> {
        Self::with_options(sigma_x, sigma_y, DEFAULT_EPSILON, NormalizationMode::default())
    }

    pub fn with_options(
        sigma_x: f64,
        sigma_y: f64,
        epsilon: f64,
        mode: NormalizationMode,
    ) -> Result<Self> {
        let params = BlurParams {
            sigma_x,
            sigma_y,
            epsilon,
            mode,
        };
        params.validate()?;
        Ok(params)
    }

    /// Converts sigmas given in data units to side-length units of `layout`.
    pub fn from_data_units(
        sigma_x: f64,
        sigma_y: f64,
        epsilon: f64,
        mode: NormalizationMode,
        layout: &HexLayout,
    ) -> Result<Self> {
        layout.validate()?;
        Self::with_options(
            sigma_x / layout.scale_x,
            sigma_y / layout.scale_y,
            epsilon,
            mode,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_x.is_finite() && self.sigma_x > 0.0) {
            return Err(Error::invalid("sigma_x", "must be finite and > 0"));
        }
        if !(self.sigma_y.is_finite() && self.sigma_y > 0.0) {
            return Err(Error::invalid("sigma_y", "must be finite and > 0"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn max_sigma(&self) -> f64 {
        self.sigma_x.max(self.sigma_y)
    }
}

/// Kernel value at displacement `(dx, dy)` relative to the center value.
///
/// Computed as a product of the two 1-D factors, so
/// `gaussian_weight(dx, dy) == gaussian_weight(dx, 0) * gaussian_weight(0, dy)` holds exactly.
pub fn gaussian_weight(dx: f64, dy: f64, params: &BlurParams) -> f64 {
    let fx = (-(dx * dx) / (2.0 * params.sigma_x * params.sigma_x)).exp();
    let fy = (-(dy * dy) / (2.0 * params.sigma_y * params.sigma_y)).exp();
    fx * fy
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilEntry {
    pub offset: AxialCoord,
    /// Cartesian displacement of the offset, in side lengths.
    pub dx: f64,
    pub dy: f64,
    pub weight: f64,
}

impl StencilEntry {
    pub fn ring(&self) -> u64 {
        AxialCoord::ORIGIN.distance(self.offset)
    }

    fn angle(&self) -> f64 {
        let a = self.dy.atan2(self.dx);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }
}

/// Truncated kernel: every lattice offset whose relative weight is at least
/// `epsilon`, ordered by ring and then by angle counter-clockwise from +x.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelStencil {
    entries: Vec<StencilEntry>,
    params: BlurParams,
    layout: Option<HexLayout>,
}

impl KernelStencil {
    pub fn entries(&self) -> &[StencilEntry] {
        &self.entries
    }

    pub fn params(&self) -> &BlurParams {
        &self.params
    }

    /// Layout the stencil is tied to, if its sigmas were given in data units.
    pub fn layout(&self) -> Option<&HexLayout> {
        self.layout.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, offset: AxialCoord) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.offset == offset)
            .map(|e| e.weight)
    }

    pub fn center_weight(&self) -> f64 {
        self.entries[0].weight
    }

    pub fn weight_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// Plain-text table of the stencil, one entry per line. `percent` is the
    /// weight relative to the center bin.
    pub fn to_table(&self) -> String {
        let p = &self.params;
        let center = self.center_weight();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# sigma_x={} sigma_y={} epsilon={} mode={} entries={}",
            p.sigma_x,
            p.sigma_y,
            p.epsilon,
            p.mode,
            self.entries.len()
        );
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>10} {:>10} {:>16} {:>8}",
            "q", "r", "dx", "dy", "weight", "percent"
        );
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:>6} {:>6} {:>10.4} {:>10.4} {:>16.10} {:>8.1}",
                e.offset.q,
                e.offset.r,
                e.dx,
                e.dy,
                e.weight,
                100.0 * e.weight / center
            );
        }
        out
    }
}

/// Number of rings past which no tile can reach `epsilon`.
///
/// Ring `n` keeps every center at least `1.5·n` from the origin, and the
/// kernel is bounded by the isotropic Gaussian with the larger sigma.
fn ring_limit(params: &BlurParams) -> u32 {
    let sigma = params.max_sigma();
    let reach = sigma * (2.0 * (1.0 / params.epsilon).ln()).sqrt() / 1.5;
    let guard = (3.0 * sigma).ceil();
    (reach.floor() + 1.0).max(guard).min(f64::from(u32::MAX)) as u32
}

pub fn build_stencil(params: BlurParams) -> Result<KernelStencil> {
    params.validate()?;
    let mut entries = Vec::new();
    for n in 0..=ring_limit(&params) {
        let before = entries.len();
        entries.extend(ring(n).into_iter().filter_map(|offset| {
            let c = axial_to_cartesian(offset);
            let weight = gaussian_weight(c.x, c.y, &params);
            (weight >= params.epsilon).then_some(StencilEntry {
                offset,
                dx: c.x,
                dy: c.y,
                weight,
            })
        }));
        entries[before..].sort_by(|a, b| a.angle().total_cmp(&b.angle()));
    }
    if params.mode == NormalizationMode::MassPreserving {
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        for e in &mut entries {
            e.weight /= total;
        }
    }
    Ok(KernelStencil {
        entries,
        params,
        layout: None,
    })
}

/// Builds a stencil from sigmas in data units and ties it to `layout`.
pub fn build_stencil_for_layout(
    sigma_x: f64,
    sigma_y: f64,
    epsilon: f64,
    mode: NormalizationMode,
    layout: &HexLayout,
) -> Result<KernelStencil> {
    let params = BlurParams::from_data_units(sigma_x, sigma_y, epsilon, mode, layout)?;
    let mut stencil = build_stencil(params)?;
    stencil.layout = Some(*layout);
    Ok(stencil)
}

/// Blurs `grid` using the global rayon pool.
pub fn apply_blur(grid: &BinGrid, stencil: &KernelStencil) -> Result<BinGrid> {
    apply_blur_with_threads(grid, stencil, 0)
}

/// Blurs `grid` on `threads` workers (0 = rayon default).
///
/// Each source bin `b` with weight `w` sends `w·weight(o)` to `b + o`. The sum
/// for every output bin is accumulated in stencil order, so the result is
/// bit-identical for any number of workers. Label counts are carried over
/// from the source grid unchanged.
pub fn apply_blur_with_threads(
    grid: &BinGrid,
    stencil: &KernelStencil,
    threads: usize,
) -> Result<BinGrid> {
    if let Some(layout) = stencil.layout() {
        if layout != grid.layout() {
            return Err(Error::LayoutMismatch);
        }
    }
    let source: HashMap<AxialCoord, f64> =
        grid.iter().map(|(a, b)| (*a, b.total_weight)).collect();

    let mut targets: Vec<AxialCoord> = {
        let mut seen = HashSet::with_capacity(source.len() * stencil.len().min(64));
        for a in source.keys() {
            for e in stencil.entries() {
                seen.insert(*a + e.offset);
            }
        }
        seen.into_iter().collect()
    };
    targets.sort_unstable();

    let gather = |t: &AxialCoord| -> (AxialCoord, f64) {
        let mut acc = 0.0;
        for e in stencil.entries() {
            if let Some(w) = source.get(&(*t - e.offset)) {
                acc += w * e.weight;
            }
        }
        (*t, acc)
    };
    let values: Vec<(AxialCoord, f64)> = if threads == 1 {
        targets.iter().map(gather).collect()
    } else if threads == 0 {
        targets.par_iter().map(gather).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?;
        pool.install(|| targets.par_iter().map(gather).collect())
    };

    let bins: BTreeMap<AxialCoord, BinAggregate> = values
        .into_iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(a, v)| {
            let label_counts = grid
                .get(a)
                .map(|b| b.label_counts.clone())
                .unwrap_or_default();
            (
                a,
                BinAggregate {
                    total_weight: v,
                    label_counts,
                },
            )
        })
        .collect();
    Ok(BinGrid::from_bins(*grid.layout(), bins))
}
