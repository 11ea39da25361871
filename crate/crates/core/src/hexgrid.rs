//! Flat-top hexagonal lattice geometry.
//!
//! All lattice math happens in normalized units where a hexagon has side
//! length 1. Adjacent centers are `√3` apart, columns are `3/2` apart and
//! neighbouring columns are offset vertically by `√3/2`.
//!
//! Axial coordinates map to the plane with
//!
//! ```text
//! x = 3/2 · q
//! y = −√3 · (q/2 + r)
//! ```
//!
//! so `y` increases upward and `r` increases downward. Offset coordinates
//! use columns (`col = q`) with odd columns shifted up by half a row.

use std::fmt;

use crate::error::{Error, Result};

pub const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Ratio between the apothem of a regular hexagon and the half-side of a
/// square of equal area, `√(2/√3)`.
///
/// This is how much farther the nearest bin border is from a bin center in
/// hexagonal binning than in square binning with the same bin area (about 7.5%).
pub const HEX_TO_SQUARE_APOTHEM_RATIO: f64 = 1.074_569_931_823_542;

/// Axial lattice address. The implicit third cube coordinate is `s = −q − r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AxialCoord {
    pub q: i64,
    pub r: i64,
}

impl AxialCoord {
    pub const ORIGIN: AxialCoord = AxialCoord { q: 0, r: 0 };

    /// The six unit steps, counter-clockwise starting from the upper-right neighbour.
    pub const DIRECTIONS: [AxialCoord; 6] = [
        AxialCoord { q: 1, r: -1 },
        AxialCoord { q: 0, r: -1 },
        AxialCoord { q: -1, r: 0 },
        AxialCoord { q: -1, r: 1 },
        AxialCoord { q: 0, r: 1 },
        AxialCoord { q: 1, r: 0 },
    ];

    pub const fn new(q: i64, r: i64) -> Self {
        AxialCoord { q, r }
    }

    pub const fn s(self) -> i64 {
        -self.q - self.r
    }

    pub fn to_cartesian(self) -> CartesianPoint {
        axial_to_cartesian(self)
    }

    pub fn to_offset(self) -> OffsetCoord {
        axial_to_offset(self)
    }

    pub fn distance(self, other: AxialCoord) -> u64 {
        hex_distance(self, other)
    }
}

impl std::ops::Add for AxialCoord {
    type Output = AxialCoord;
    fn add(self, rhs: AxialCoord) -> AxialCoord {
        AxialCoord::new(self.q + rhs.q, self.r + rhs.r)
    }
}

impl std::ops::Sub for AxialCoord {
    type Output = AxialCoord;
    fn sub(self, rhs: AxialCoord) -> AxialCoord {
        AxialCoord::new(self.q - rhs.q, self.r - rhs.r)
    }
}

impl std::ops::Mul<i64> for AxialCoord {
    type Output = AxialCoord;
    fn mul(self, k: i64) -> AxialCoord {
        AxialCoord::new(self.q * k, self.r * k)
    }
}

impl fmt::Display for AxialCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.q, self.r)
    }
}

/// Column/row lattice address; odd columns sit half a row higher.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OffsetCoord {
    pub col: i64,
    pub row: i64,
}

impl OffsetCoord {
    pub const fn new(col: i64, row: i64) -> Self {
        OffsetCoord { col, row }
    }

    pub fn to_cartesian(self) -> CartesianPoint {
        offset_to_cartesian(self)
    }

    pub fn to_axial(self) -> AxialCoord {
        offset_to_axial(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
}

impl CartesianPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        CartesianPoint { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(self, other: CartesianPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

pub fn axial_to_cartesian(a: AxialCoord) -> CartesianPoint {
    let q = a.q as f64;
    let r = a.r as f64;
    // + 0.0 turns a negative zero into +0
    CartesianPoint::new(1.5 * q + 0.0, -SQRT_3 * (0.5 * q + r) + 0.0)
}

pub fn offset_to_cartesian(o: OffsetCoord) -> CartesianPoint {
    let shift = if o.col.rem_euclid(2) == 1 {
        SQRT_3 / 2.0
    } else {
        0.0
    };
    CartesianPoint::new(1.5 * o.col as f64, SQRT_3 * o.row as f64 + shift)
}

pub fn axial_to_offset(a: AxialCoord) -> OffsetCoord {
    let parity = a.q.rem_euclid(2);
    OffsetCoord::new(a.q, -a.r - (a.q + parity) / 2)
}

pub fn offset_to_axial(o: OffsetCoord) -> AxialCoord {
    let parity = o.col.rem_euclid(2);
    AxialCoord::new(o.col, -o.row - (o.col + parity) / 2)
}

/// Fractional axial coordinates of a point, before rounding.
pub fn cartesian_to_fractional_axial(p: CartesianPoint) -> (f64, f64) {
    let q = p.x * (2.0 / 3.0);
    let r = -p.y / SQRT_3 - 0.5 * q;
    (q, r)
}

/// Returns the bin whose center is nearest to `p`.
///
/// Cube rounding: round all three cube components, then recompute the one
/// with the largest rounding error from `q + r + s = 0`. Equal errors repair
/// `q` first, then `r`, then `s`.
pub fn cartesian_to_axial(p: CartesianPoint) -> Result<AxialCoord> {
    if !p.is_finite() {
        return Err(Error::NonFinite("cartesian point"));
    }
    let (fq, fr) = cartesian_to_fractional_axial(p);
    let fs = -fq - fr;
    let (mut q, mut r, s) = (fq.round(), fr.round(), fs.round());
    let dq = (q - fq).abs();
    let dr = (r - fr).abs();
    let ds = (s - fs).abs();
    if dq >= dr && dq >= ds {
        q = -r - s;
    } else if dr >= ds {
        r = -q - s;
    }
    Ok(AxialCoord::new(q as i64, r as i64))
}

pub fn hex_distance(a: AxialCoord, b: AxialCoord) -> u64 {
    let d = a - b;
    (d.q.unsigned_abs() + d.r.unsigned_abs() + (d.q + d.r).unsigned_abs()) / 2
}

/// All tiles at hex distance `n` from the origin, walked counter-clockwise.
pub fn ring(n: u32) -> Vec<AxialCoord> {
    if n == 0 {
        return vec![AxialCoord::ORIGIN];
    }
    let n = i64::from(n);
    let mut out = Vec::with_capacity(6 * n as usize);
    // Start directly below the origin and walk each side.
    let mut cur = AxialCoord::DIRECTIONS[4] * n;
    for dir in AxialCoord::DIRECTIONS {
        for _ in 0..n {
            out.push(cur);
            cur = cur + dir;
        }
    }
    out
}

/// Tiles within hex distance `radius` of the origin, ring by ring.
pub fn spiral(radius: u32) -> impl Iterator<Item = AxialCoord> {
    (0..=radius).flat_map(ring)
}

/// Maps data-space coordinates onto the normalized lattice with independent
/// per-axis scales, so two physical dimensions can share one lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HexLayout {
    pub origin_x: f64,
    pub origin_y: f64,
    /// Data units per hexagon side length along x.
    pub scale_x: f64,
    /// Data units per hexagon side length along y.
    pub scale_y: f64,
}

impl Default for HexLayout {
    fn default() -> Self {
        HexLayout {
            origin_x: 0.0,
            origin_y: 0.0,
            scale_x: 1.0,
            scale_y: 1.0,
        }
    }
}

impl HexLayout {
    pub fn new(origin_x: f64, origin_y: f64, scale_x: f64, scale_y: f64) -> Result<Self> {
        let layout = HexLayout {
            origin_x,
            origin_y,
            scale_x,
            scale_y,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.origin_x.is_finite() {
            return Err(Error::invalid("origin_x", "must be finite"));
        }
        if !self.origin_y.is_finite() {
            return Err(Error::invalid("origin_y", "must be finite"));
        }
        if !(self.scale_x.is_finite() && self.scale_x > 0.0) {
            return Err(Error::invalid("size_x", "must be finite and > 0"));
        }
        if !(self.scale_y.is_finite() && self.scale_y > 0.0) {
            return Err(Error::invalid("size_y", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn to_normalized(&self, x: f64, y: f64) -> CartesianPoint {
        CartesianPoint::new(
            (x - self.origin_x) / self.scale_x,
            (y - self.origin_y) / self.scale_y,
        )
    }

    pub fn to_data(&self, p: CartesianPoint) -> (f64, f64) {
        (
            p.x * self.scale_x + self.origin_x,
            p.y * self.scale_y + self.origin_y,
        )
    }

    pub fn bin_of(&self, x: f64, y: f64) -> Result<AxialCoord> {
        cartesian_to_axial(self.to_normalized(x, y))
    }

    /// Center of bin `a` in data units.
    pub fn center(&self, a: AxialCoord) -> (f64, f64) {
        self.to_data(axial_to_cartesian(a))
    }
}
