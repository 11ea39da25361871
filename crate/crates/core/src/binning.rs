//! Aggregation of weighted, optionally labeled points into hexagonal bins.

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::hexgrid::{AxialCoord, HexLayout, SQRT_3};

#[derive(Clone, Debug, PartialEq)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
    pub label: Option<String>,
}

impl DataPoint {
    pub fn new(x: f64, y: f64) -> Self {
        DataPoint {
            x,
            y,
            weight: 1.0,
            label: None,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    fn validate(&self) -> std::result::Result<(), &'static str> {
        if !self.x.is_finite() {
            return Err("x is not finite");
        }
        if !self.y.is_finite() {
            return Err("y is not finite");
        }
        if !self.weight.is_finite() {
            return Err("weight is not finite");
        }
        if self.weight < 0.0 {
            return Err("weight is negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

/// An immutable, validated collection of points with cached bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    points: Vec<DataPoint>,
    bounds: Option<Bounds>,
}

impl Dataset {
    /// Validates every point. Errors carry the 1-based row number.
    pub fn new(points: Vec<DataPoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            p.validate().map_err(|msg| Error::Parse {
                line: i as u64 + 1,
                message: msg.to_string(),
            })?;
        }
        let bounds = points.iter().fold(None, |acc: Option<Bounds>, p| {
            Some(match acc {
                None => Bounds {
                    min_x: p.x,
                    max_x: p.x,
                    min_y: p.y,
                    max_y: p.y,
                },
                Some(b) => Bounds {
                    min_x: b.min_x.min(p.x),
                    max_x: b.max_x.max(p.x),
                    min_y: b.min_y.min(p.y),
                    max_y: b.max_y.max(p.y),
                },
            })
        });
        Ok(Dataset { points, bounds })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    /// `None` for an empty dataset.
    pub fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BinAggregate {
    pub total_weight: f64,
    /// Accumulated weight per label. Unlabeled points only count toward `total_weight`.
    pub label_counts: BTreeMap<String, f64>,
}

impl BinAggregate {
    pub fn with_weight(total_weight: f64) -> Self {
        BinAggregate {
            total_weight,
            label_counts: BTreeMap::new(),
        }
    }

    fn add(&mut self, weight: f64, label: Option<&str>) {
        self.total_weight += weight;
        if let Some(label) = label {
            *self.label_counts.entry(label.to_string()).or_insert(0.0) += weight;
        }
    }

    fn is_vacant(&self) -> bool {
        self.total_weight == 0.0 && self.label_counts.is_empty()
    }
}

/// Sparse map from lattice address to aggregate, ordered by `(q, r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinGrid {
    layout: HexLayout,
    bins: BTreeMap<AxialCoord, BinAggregate>,
}

impl BinGrid {
    pub fn empty(layout: HexLayout) -> Self {
        BinGrid {
            layout,
            bins: BTreeMap::new(),
        }
    }

    /// Builds a grid from raw aggregates, dropping vacant entries.
    pub fn from_bins(
        layout: HexLayout,
        bins: impl IntoIterator<Item = (AxialCoord, BinAggregate)>,
    ) -> Self {
        let bins = bins.into_iter().filter(|(_, agg)| !agg.is_vacant()).collect();
        BinGrid { layout, bins }
    }

    pub fn from_weights(
        layout: HexLayout,
        weights: impl IntoIterator<Item = (AxialCoord, f64)>,
    ) -> Self {
        Self::from_bins(
            layout,
            weights
                .into_iter()
                .map(|(a, w)| (a, BinAggregate::with_weight(w))),
        )
    }

    pub fn layout(&self) -> &HexLayout {
        &self.layout
    }

    pub fn get(&self, bin: AxialCoord) -> Option<&BinAggregate> {
        self.bins.get(&bin)
    }

    pub fn value(&self, bin: AxialCoord) -> f64 {
        self.bins.get(&bin).map_or(0.0, |b| b.total_weight)
    }

    /// Bins in ascending `(q, r)` order.
    pub fn iter(&self) -> impl Iterator<Item = (&AxialCoord, &BinAggregate)> {
        self.bins.iter()
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.bins.values().map(|b| b.total_weight).sum()
    }

    /// Largest bin value, 0 for an empty grid.
    pub fn max_value(&self) -> f64 {
        self.bins
            .values()
            .map(|b| b.total_weight)
            .fold(0.0, f64::max)
    }

    pub fn into_bins(self) -> BTreeMap<AxialCoord, BinAggregate> {
        self.bins
    }
}

pub fn bin_points(dataset: &Dataset, layout: HexLayout) -> Result<BinGrid> {
    layout.validate()?;
    let mut bins: BTreeMap<AxialCoord, BinAggregate> = BTreeMap::new();
    for p in dataset.points() {
        let bin = layout.bin_of(p.x, p.y)?;
        if p.weight == 0.0 && p.label.is_none() {
            continue;
        }
        bins.entry(bin).or_default().add(p.weight, p.label.as_deref());
    }
    Ok(BinGrid { layout, bins })
}

/// Picks a layout with its origin at the data minimum and roughly
/// `target_bins_across` columns and rows over the data extent.
pub fn suggest_layout(dataset: &Dataset, target_bins_across: u32) -> Result<HexLayout> {
    if target_bins_across == 0 {
        return Err(Error::invalid("auto_bins", "must be >= 1"));
    }
    let b = dataset.bounds().ok_or(Error::EmptyDataset)?;
    let n = f64::from(target_bins_across);
    let scale = |range: f64, per_bin: f64| {
        let s = range / (per_bin * n);
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    };
    HexLayout::new(
        b.min_x,
        b.min_y,
        scale(b.max_x - b.min_x, 1.5),
        scale(b.max_y - b.min_y, SQRT_3),
    )
}

pub const DEFAULT_AUTO_BINS: u32 = 30;

/// Layout choice as expressed by a caller: explicit sizes, or automatic.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LayoutRequest {
    pub origin_x: Option<f64>,
    pub origin_y: Option<f64>,
    pub size_x: Option<f64>,
    pub size_y: Option<f64>,
    pub auto_bins: Option<u32>,
}

impl LayoutRequest {
    /// Explicit sizes win; the origin then defaults to `(0, 0)`. Without
    /// sizes the layout comes from [`suggest_layout`] (`DEFAULT_AUTO_BINS`
    /// columns unless given), or the unit layout for an empty dataset.
    pub fn resolve(&self, dataset: &Dataset) -> Result<HexLayout> {
        match (self.size_x, self.size_y) {
            (Some(sx), Some(sy)) => {
                HexLayout::new(self.origin_x.unwrap_or(0.0), self.origin_y.unwrap_or(0.0), sx, sy)
            }
            (Some(_), None) => Err(Error::invalid("size_y", "required when size_x is given")),
            (None, Some(_)) => Err(Error::invalid("size_x", "required when size_y is given")),
            (None, None) => {
                let n = self.auto_bins.unwrap_or(DEFAULT_AUTO_BINS);
                if dataset.is_empty() {
                    if n == 0 {
                        return Err(Error::invalid("auto_bins", "must be >= 1"));
                    }
                    return Ok(HexLayout::default());
                }
                let mut layout = suggest_layout(dataset, n)?;
                if let Some(x) = self.origin_x {
                    layout.origin_x = x;
                }
                if let Some(y) = self.origin_y {
                    layout.origin_y = y;
                }
                layout.validate()?;
                Ok(layout)
            }
        }
    }
}

/// Up to `k` labels of `bin` by descending weight, ties in label order.
pub fn top_labels(grid: &BinGrid, bin: AxialCoord, k: usize) -> Vec<(String, f64)> {
    let Some(agg) = grid.get(bin) else {
        return Vec::new();
    };
    let mut labels: Vec<(String, f64)> = agg
        .label_counts
        .iter()
        .map(|(l, w)| (l.clone(), *w))
        .collect();
    labels.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    labels.truncate(k);
    labels
}

/// Rows rejected during permissive CSV ingestion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SkippedRow {
    pub line: u64,
    pub message: String,
}

/// Reads `x,y[,weight[,label]]` rows. A first row whose first field is not
/// numeric is taken as a header. In strict mode the first bad row aborts with
/// its line number; in permissive mode bad rows are collected and skipped.
pub fn read_points_csv<R: Read>(
    reader: R,
    permissive: bool,
) -> Result<(Dataset, Vec<SkippedRow>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    let mut first = true;
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                let err = SkippedRow {
                    line,
                    message: e.to_string(),
                };
                if permissive {
                    skipped.push(err);
                    continue;
                }
                return Err(Error::Parse {
                    line: err.line,
                    message: err.message,
                });
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if std::mem::take(&mut first)
            && record
                .get(0)
                .is_some_and(|f| f.parse::<f64>().is_err())
        {
            continue;
        }
        match parse_row(&record) {
            Ok(p) => points.push(p),
            Err(message) if permissive => skipped.push(SkippedRow { line, message }),
            Err(message) => return Err(Error::Parse { line, message }),
        }
    }
    Ok((Dataset::new(points)?, skipped))
}

fn parse_row(record: &csv::StringRecord) -> std::result::Result<DataPoint, String> {
    if !(2..=4).contains(&record.len()) {
        return Err(format!("expected 2 to 4 fields, found {}", record.len()));
    }
    let num = |i: usize, name: &str| -> std::result::Result<f64, String> {
        record[i]
            .parse::<f64>()
            .map_err(|_| format!("{name} {:?} is not a number", &record[i]))
    };
    let mut p = DataPoint::new(num(0, "x")?, num(1, "y")?);
    if record.len() > 2 && !record[2].is_empty() {
        p.weight = num(2, "weight")?;
    }
    if record.len() > 3 && !record[3].is_empty() {
        p.label = Some(record[3].to_string());
    }
    p.validate().map_err(str::to_string)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexgrid::axial_to_cartesian;

    fn at(a: AxialCoord) -> DataPoint {
        let c = axial_to_cartesian(a);
        DataPoint::new(c.x, c.y)
    }

    #[test]
    fn single_point_at_origin() {
        let ds = Dataset::new(vec![DataPoint::new(0.0, 0.0)]).unwrap();
        let grid = bin_points(&ds, HexLayout::default()).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid.value(AxialCoord::ORIGIN), 1.0);
    }

    #[test]
    fn centers_accumulate() {
        let o = AxialCoord::ORIGIN;
        let e = AxialCoord::new(1, 0);
        let ds = Dataset::new(vec![at(o), at(o), at(e)]).unwrap();
        let grid = bin_points(&ds, HexLayout::default()).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid.value(o), 2.0);
        assert_eq!(grid.value(e), 1.0);
    }

    #[test]
    fn empty_dataset_gives_empty_grid() {
        let ds = Dataset::new(vec![]).unwrap();
        assert!(ds.bounds().is_none());
        assert!(bin_points(&ds, HexLayout::default()).unwrap().is_empty());
        assert!(matches!(suggest_layout(&ds, 10), Err(Error::EmptyDataset)));
    }

    #[test]
    fn rejects_bad_points_with_row() {
        let err = Dataset::new(vec![
            DataPoint::new(0.0, 0.0),
            DataPoint::new(0.0, 0.0).with_weight(-1.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(Dataset::new(vec![DataPoint::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn unlabeled_points_skip_label_counts() {
        let ds = Dataset::new(vec![
            DataPoint::new(0.0, 0.0).with_label("a").with_weight(2.0),
            DataPoint::new(0.0, 0.0),
        ])
        .unwrap();
        let grid = bin_points(&ds, HexLayout::default()).unwrap();
        let agg = grid.get(AxialCoord::ORIGIN).unwrap();
        assert_eq!(agg.total_weight, 3.0);
        assert_eq!(agg.label_counts.len(), 1);
        assert_eq!(agg.label_counts["a"], 2.0);
    }

    #[test]
    fn zero_weight_unlabeled_points_leave_no_bin() {
        let ds = Dataset::new(vec![DataPoint::new(0.0, 0.0).with_weight(0.0)]).unwrap();
        assert!(bin_points(&ds, HexLayout::default()).unwrap().is_empty());
    }

    #[test]
    fn suggest_layout_unit_square() {
        let ds = Dataset::new(vec![DataPoint::new(0.0, 0.0), DataPoint::new(1.0, 1.0)]).unwrap();
        let l = suggest_layout(&ds, 10).unwrap();
        assert!((l.scale_x - 1.0 / 15.0).abs() < 1e-15);
        assert!((l.scale_y - 1.0 / (SQRT_3 * 10.0)).abs() < 1e-15);
        assert_eq!((l.origin_x, l.origin_y), (0.0, 0.0));
    }

    #[test]
    fn suggest_layout_degenerate_extent() {
        let ds = Dataset::new(vec![DataPoint::new(3.0, 4.0); 5]).unwrap();
        let l = suggest_layout(&ds, 10).unwrap();
        assert_eq!((l.scale_x, l.scale_y), (1.0, 1.0));
        assert!(suggest_layout(&ds, 0).is_err());
    }

    #[test]
    fn top_labels_cases() {
        let ds = Dataset::new(vec![
            DataPoint::new(0.0, 0.0).with_label("a").with_weight(3.0),
            DataPoint::new(0.0, 0.0).with_label("b"),
            DataPoint::new(10.0, 0.0).with_label("b").with_weight(2.0),
            DataPoint::new(10.0, 0.0).with_label("a").with_weight(2.0),
        ])
        .unwrap();
        let grid = bin_points(&ds, HexLayout::default()).unwrap();
        assert!(top_labels(&grid, AxialCoord::new(50, 50), 3).is_empty());
        assert_eq!(
            top_labels(&grid, AxialCoord::ORIGIN, 1),
            vec![("a".to_string(), 3.0)]
        );
        let tied = grid.layout().bin_of(10.0, 0.0).unwrap();
        assert_eq!(
            top_labels(&grid, tied, 2),
            vec![("a".to_string(), 2.0), ("b".to_string(), 2.0)]
        );
    }

    #[test]
    fn layout_request_resolution() {
        let ds = Dataset::new(vec![DataPoint::new(0.0, 0.0), DataPoint::new(3.0, 2.0)]).unwrap();
        let explicit = LayoutRequest {
            size_x: Some(2.0),
            size_y: Some(0.5),
            ..Default::default()
        };
        assert_eq!(
            explicit.resolve(&ds).unwrap(),
            HexLayout::new(0.0, 0.0, 2.0, 0.5).unwrap()
        );
        let half = LayoutRequest {
            size_x: Some(2.0),
            ..Default::default()
        };
        assert_eq!(half.resolve(&ds).unwrap_err().field(), Some("size_y"));
        let auto = LayoutRequest::default().resolve(&ds).unwrap();
        assert_eq!(auto, suggest_layout(&ds, DEFAULT_AUTO_BINS).unwrap());
        let empty = Dataset::default();
        assert_eq!(LayoutRequest::default().resolve(&empty).unwrap(), HexLayout::default());
    }

    #[test]
    fn csv_with_header_and_defaults() {
        let src = "x,y,weight,label\n0,0\n1.5,-0.8660254037844386,2,foo\n0,0,,bar\n";
        let (ds, skipped) = read_points_csv(src.as_bytes(), false).unwrap();
        assert!(skipped.is_empty());
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.points()[0].weight, 1.0);
        assert_eq!(ds.points()[1].label.as_deref(), Some("foo"));
        assert_eq!(ds.points()[2].weight, 1.0);
    }

    #[test]
    fn csv_reports_line_numbers() {
        let src = "x,y\n0,0\nabc,1\n";
        match read_points_csv(src.as_bytes(), false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let (ds, skipped) = read_points_csv(src.as_bytes(), true).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].line, 3);
    }

    #[test]
    fn csv_rejects_non_finite_and_negative() {
        assert!(read_points_csv("0,nan\n".as_bytes(), false).is_err());
        assert!(read_points_csv("0,0,-1\n".as_bytes(), false).is_err());
        assert!(read_points_csv("0,0,1,a,extra\n".as_bytes(), false).is_err());
    }

    #[test]
    fn csv_empty_input() {
        let (ds, _) = read_points_csv("".as_bytes(), false).unwrap();
        assert!(ds.is_empty());
    }
}
