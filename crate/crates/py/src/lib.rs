//! Python bindings. Built with maturin as the `hexblur` extension module.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use hexblur::binsfile::write_bins;
use hexblur::{
    AxialCoord, BinGrid, BlurParams, CartesianPoint, Colormap, DataPoint, Dataset, HexLayout,
    KernelStencil, NormalizationMode, OffsetCoord, RenderSpec, Rgb,
};

fn py_err(e: hexblur::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "AxialCoord", frozen, eq, hash, ord, from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct PyAxial(AxialCoord);

#[pymethods]
#[allow(clippy::wrong_self_convention)]
impl PyAxial {
    #[new]
    fn new(q: i64, r: i64) -> Self {
        PyAxial(AxialCoord::new(q, r))
    }

    #[getter]
    fn q(&self) -> i64 {
        self.0.q
    }

    #[getter]
    fn r(&self) -> i64 {
        self.0.r
    }

    #[getter]
    fn s(&self) -> i64 {
        self.0.s()
    }

    fn to_cartesian(&self) -> (f64, f64) {
        let p = self.0.to_cartesian();
        (p.x, p.y)
    }

    /// `(col, row)` in odd-q offset coordinates.
    fn to_offset(&self) -> (i64, i64) {
        let o = self.0.to_offset();
        (o.col, o.row)
    }

    fn distance(&self, other: &PyAxial) -> u64 {
        self.0.distance(other.0)
    }

    #[staticmethod]
    fn from_cartesian(x: f64, y: f64) -> PyResult<Self> {
        hexblur::cartesian_to_axial(CartesianPoint::new(x, y))
            .map(PyAxial)
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_offset(col: i64, row: i64) -> Self {
        PyAxial(OffsetCoord::new(col, row).to_axial())
    }

    fn __repr__(&self) -> String {
        format!("AxialCoord({}, {})", self.0.q, self.0.r)
    }
}

#[pyfunction]
fn ring(n: u32) -> Vec<PyAxial> {
    hexblur::ring(n).into_iter().map(PyAxial).collect()
}

#[pyfunction]
fn offset_to_cartesian(col: i64, row: i64) -> (f64, f64) {
    let p = OffsetCoord::new(col, row).to_cartesian();
    (p.x, p.y)
}

#[pyclass(name = "HexLayout", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyLayout(HexLayout);

#[pymethods]
impl PyLayout {
    #[new]
    #[pyo3(signature = (origin_x=0.0, origin_y=0.0, scale_x=1.0, scale_y=1.0))]
    fn new(origin_x: f64, origin_y: f64, scale_x: f64, scale_y: f64) -> PyResult<Self> {
        HexLayout::new(origin_x, origin_y, scale_x, scale_y)
            .map(PyLayout)
            .map_err(py_err)
    }

    #[getter]
    fn origin(&self) -> (f64, f64) {
        (self.0.origin_x, self.0.origin_y)
    }

    #[getter]
    fn scale(&self) -> (f64, f64) {
        (self.0.scale_x, self.0.scale_y)
    }

    fn bin_of(&self, x: f64, y: f64) -> PyResult<PyAxial> {
        self.0.bin_of(x, y).map(PyAxial).map_err(py_err)
    }

    /// Center of a bin in data units.
    fn center(&self, bin: &PyAxial) -> (f64, f64) {
        self.0.center(bin.0)
    }

    fn __repr__(&self) -> String {
        let l = &self.0;
        format!(
            "HexLayout(origin_x={}, origin_y={}, scale_x={}, scale_y={})",
            l.origin_x, l.origin_y, l.scale_x, l.scale_y
        )
    }
}

#[pyclass(name = "BinGrid", frozen)]
struct PyGrid(BinGrid);

#[pymethods]
impl PyGrid {
    #[getter]
    fn layout(&self) -> PyLayout {
        PyLayout(*self.0.layout())
    }

    fn value(&self, bin: &PyAxial) -> f64 {
        self.0.value(bin.0)
    }

    /// `{(q, r): value}` for every occupied bin.
    fn to_dict(&self) -> BTreeMap<(i64, i64), f64> {
        self.0
            .iter()
            .map(|(a, agg)| ((a.q, a.r), agg.total_weight))
            .collect()
    }

    #[pyo3(signature = (bin, k=10))]
    fn top_labels(&self, bin: &PyAxial, k: usize) -> Vec<(String, f64)> {
        hexblur::top_labels(&self.0, bin.0, k)
    }

    fn total_weight(&self) -> f64 {
        self.0.total_weight()
    }

    fn max_value(&self) -> f64 {
        self.0.max_value()
    }

    /// Serializes to the bins CSV format used by the command-line tool.
    fn to_csv(&self) -> String {
        write_bins(&self.0, None)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("BinGrid({} bins)", self.0.len())
    }
}

#[pyclass(name = "BlurParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyBlurParams(BlurParams);

#[pymethods]
impl PyBlurParams {
    #[new]
    #[pyo3(signature = (sigma_x, sigma_y, epsilon=hexblur::blur::DEFAULT_EPSILON, mode="mass_preserving"))]
    fn new(sigma_x: f64, sigma_y: f64, epsilon: f64, mode: &str) -> PyResult<Self> {
        let mode: NormalizationMode = mode.parse().map_err(py_err)?;
        BlurParams::with_options(sigma_x, sigma_y, epsilon, mode)
            .map(PyBlurParams)
            .map_err(py_err)
    }

    #[getter]
    fn sigma_x(&self) -> f64 {
        self.0.sigma_x
    }

    #[getter]
    fn sigma_y(&self) -> f64 {
        self.0.sigma_y
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode.as_str()
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "BlurParams(sigma_x={}, sigma_y={}, epsilon={}, mode='{}')",
            p.sigma_x, p.sigma_y, p.epsilon, p.mode
        )
    }
}

#[pyclass(name = "KernelStencil", frozen)]
struct PyStencil(KernelStencil);

#[pymethods]
impl PyStencil {
    /// List of `(q, r, dx, dy, weight)` in ring order.
    fn entries(&self) -> Vec<(i64, i64, f64, f64, f64)> {
        self.0
            .entries()
            .iter()
            .map(|e| (e.offset.q, e.offset.r, e.dx, e.dy, e.weight))
            .collect()
    }

    fn weight(&self, offset: &PyAxial) -> Option<f64> {
        self.0.weight(offset.0)
    }

    fn center_weight(&self) -> f64 {
        self.0.center_weight()
    }

    fn table(&self) -> String {
        self.0.to_table()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Bins points. Without a layout one is suggested from the data extent.
#[pyfunction]
#[pyo3(signature = (xs, ys, weights=None, labels=None, layout=None, bins_across=hexblur::DEFAULT_AUTO_BINS))]
fn bin_points(
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Option<Vec<f64>>,
    labels: Option<Vec<Option<String>>>,
    layout: Option<PyLayout>,
    bins_across: u32,
) -> PyResult<PyGrid> {
    let n = xs.len();
    if ys.len() != n
        || weights.as_ref().is_some_and(|w| w.len() != n)
        || labels.as_ref().is_some_and(|l| l.len() != n)
    {
        return Err(PyValueError::new_err("xs, ys, weights and labels must have equal length"));
    }
    let mut labels = labels.map(Vec::into_iter);
    let points = (0..n)
        .map(|i| {
            let mut p = DataPoint::new(xs[i], ys[i]);
            if let Some(w) = &weights {
                p = p.with_weight(w[i]);
            }
            if let Some(Some(label)) = labels.as_mut().and_then(Iterator::next) {
                p = p.with_label(label);
            }
            p
        })
        .collect();
    let dataset = Dataset::new(points).map_err(py_err)?;
    let layout = match layout {
        Some(l) => l.0,
        None if dataset.is_empty() => HexLayout::default(),
        None => hexblur::suggest_layout(&dataset, bins_across).map_err(py_err)?,
    };
    hexblur::bin_points(&dataset, layout)
        .map(PyGrid)
        .map_err(py_err)
}

/// Builds a grid directly from `{(q, r): value}`.
#[pyfunction]
#[pyo3(signature = (values, layout=None))]
fn grid_from_dict(values: BTreeMap<(i64, i64), f64>, layout: Option<PyLayout>) -> PyGrid {
    let layout = layout.map(|l| l.0).unwrap_or_default();
    PyGrid(BinGrid::from_weights(
        layout,
        values.into_iter().map(|((q, r), v)| (AxialCoord::new(q, r), v)),
    ))
}

#[pyfunction]
fn build_stencil(params: PyBlurParams) -> PyResult<PyStencil> {
    hexblur::build_stencil(params.0)
        .map(PyStencil)
        .map_err(py_err)
}

/// Blurs a grid. `threads=0` uses the global pool. The GIL is released meanwhile.
#[pyfunction]
#[pyo3(signature = (grid, stencil, threads=0))]
fn apply_blur(py: Python<'_>, grid: &PyGrid, stencil: &PyStencil, threads: usize) -> PyResult<PyGrid> {
    py.detach(|| hexblur::apply_blur_with_threads(&grid.0, &stencil.0, threads))
        .map(PyGrid)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (grid, colormap="viridis", saturation=1.0, tile_px=10.0, floor=0.0, stroke=None, stroke_width=0.5, background="#ffffff"))]
#[allow(clippy::too_many_arguments)]
fn render_svg(
    grid: &PyGrid,
    colormap: &str,
    saturation: f64,
    tile_px: f64,
    floor: f64,
    stroke: Option<&str>,
    stroke_width: f64,
    background: &str,
) -> PyResult<String> {
    let mut spec = RenderSpec {
        colormap: colormap.parse::<Colormap>().map_err(py_err)?,
        saturation,
        tile_side_px: tile_px,
        value_floor: floor,
        background: background.parse::<Rgb>().map_err(py_err)?,
        ..RenderSpec::default()
    };
    if let Some(color) = stroke {
        spec.stroke = Some(hexblur::render::Stroke {
            color: color.parse::<Rgb>().map_err(py_err)?,
            width: stroke_width,
        });
    }
    hexblur::render_svg(&grid.0, &spec).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (value, v_max, saturation=1.0, colormap="viridis"))]
fn bin_color(value: f64, v_max: f64, saturation: f64, colormap: &str) -> PyResult<String> {
    let cmap: Colormap = colormap.parse().map_err(py_err)?;
    Ok(hexblur::render::bin_color(value, v_max, saturation, cmap).to_hex())
}

#[pymodule(name = "hexblur")]
fn hexblur_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAxial>()?;
    m.add_class::<PyLayout>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyBlurParams>()?;
    m.add_class::<PyStencil>()?;
    m.add_function(wrap_pyfunction!(ring, m)?)?;
    m.add_function(wrap_pyfunction!(offset_to_cartesian, m)?)?;
    m.add_function(wrap_pyfunction!(bin_points, m)?)?;
    m.add_function(wrap_pyfunction!(grid_from_dict, m)?)?;
    m.add_function(wrap_pyfunction!(build_stencil, m)?)?;
    m.add_function(wrap_pyfunction!(apply_blur, m)?)?;
    m.add_function(wrap_pyfunction!(render_svg, m)?)?;
    m.add_function(wrap_pyfunction!(bin_color, m)?)?;
    m.add("HEX_TO_SQUARE_APOTHEM_RATIO", hexblur::hexgrid::HEX_TO_SQUARE_APOTHEM_RATIO)?;
    Ok(())
}
