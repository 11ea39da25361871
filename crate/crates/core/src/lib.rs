//! Hexagonal binning of 2-D scatter data with a non-uniform Gaussian blur
//! evaluated in Cartesian coordinates at the bin centers.
//!
//! The pipeline is [`binning::bin_points`] → [`blur::apply_blur`] →
//! [`render::render_svg`]. Lattice geometry lives in [`hexgrid`].

pub mod binning;
pub mod binsfile;
pub mod blur;
pub mod error;
pub mod hexgrid;
pub mod render;
mod viridis_table;

pub use binning::{
    bin_points, read_points_csv, suggest_layout, top_labels, BinAggregate, BinGrid, Bounds,
    DataPoint, Dataset, LayoutRequest, DEFAULT_AUTO_BINS,
};
pub use blur::{
    apply_blur, apply_blur_with_threads, build_stencil, gaussian_weight, BlurParams,
    KernelStencil, NormalizationMode, StencilEntry,
};
pub use error::{Error, Result};
pub use hexgrid::{
    axial_to_cartesian, axial_to_offset, cartesian_to_axial, hex_distance, offset_to_axial,
    offset_to_cartesian, ring, AxialCoord, CartesianPoint, HexLayout, OffsetCoord,
};
pub use render::{normalize_value, render_svg, Colormap, RenderSpec, Rgb};
