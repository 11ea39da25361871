//! Text interchange format for bin grids.
//!
//! ```text
//! # hexblur bins
//! # origin_x=0 origin_y=0 scale_x=1 scale_y=1
//! # sigma_x=2 sigma_y=1 epsilon=0.001 mode=center_relative
//! q,r,center_x,center_y,value
//! 0,0,0.000000,0.000000,1
//! ```
//!
//! The sigma line is only present for blurred grids. Centers are in data
//! units with six decimals; layout parameters and values use the shortest
//! representation that parses back to the same `f64`, so a grid survives a
//! write/read cycle bit for bit (label counts are not stored).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::binning::BinGrid;
use crate::blur::{BlurParams, NormalizationMode};
use crate::error::{Error, Result};
use crate::hexgrid::{AxialCoord, HexLayout};

pub const HEADER: &str = "q,r,center_x,center_y,value";
const MAGIC: &str = "# hexblur bins";

#[derive(Clone, Debug, PartialEq)]
pub struct BinsFile {
    pub grid: BinGrid,
    pub blur: Option<BlurParams>,
}

pub fn write_bins(grid: &BinGrid, blur: Option<&BlurParams>) -> String {
    let l = grid.layout();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(
        out,
        "# origin_x={} origin_y={} scale_x={} scale_y={}",
        l.origin_x, l.origin_y, l.scale_x, l.scale_y
    );
    if let Some(p) = blur {
        let _ = writeln!(
            out,
            "# sigma_x={} sigma_y={} epsilon={} mode={}",
            p.sigma_x, p.sigma_y, p.epsilon, p.mode
        );
    }
    let _ = writeln!(out, "{HEADER}");
    for (a, agg) in grid.iter() {
        let (cx, cy) = l.center(*a);
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{}",
            a.q, a.r, cx, cy, agg.total_weight
        );
    }
    out
}

/// True if `text` starts like a bins file rather than a point CSV.
pub fn looks_like_bins(text: &str) -> bool {
    text.lines().next().is_some_and(|l| l.trim_end() == MAGIC)
}

fn parse_kv(line: &str, lineno: u64) -> Result<HashMap<String, String>> {
    line.trim_start_matches('#')
        .split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("expected key=value, found {kv:?}"),
                })
        })
        .collect()
}

fn take_f64(map: &HashMap<String, String>, key: &'static str, line: u64) -> Result<f64> {
    let raw = map.get(key).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {key}"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{key}={raw} is not a number"),
    })
}

pub fn read_bins<R: BufRead>(reader: R) -> Result<BinsFile> {
    let mut layout: Option<HexLayout> = None;
    let mut blur = None;
    let mut header_seen = false;
    let mut weights = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if line == MAGIC {
                continue;
            }
            let kv = parse_kv(line, lineno)?;
            if kv.contains_key("origin_x") {
                layout = Some(
                    HexLayout::new(
                        take_f64(&kv, "origin_x", lineno)?,
                        take_f64(&kv, "origin_y", lineno)?,
                        take_f64(&kv, "scale_x", lineno)?,
                        take_f64(&kv, "scale_y", lineno)?,
                    )
                    .map_err(|e| Error::Parse {
                        line: lineno,
                        message: e.to_string(),
                    })?,
                );
            } else if kv.contains_key("sigma_x") {
                let mode: NormalizationMode = kv
                    .get("mode")
                    .map(String::as_str)
                    .unwrap_or("mass_preserving")
                    .parse()?;
                blur = Some(BlurParams::with_options(
                    take_f64(&kv, "sigma_x", lineno)?,
                    take_f64(&kv, "sigma_y", lineno)?,
                    take_f64(&kv, "epsilon", lineno)?,
                    mode,
                )?);
            }
            continue;
        }
        if !header_seen {
            if line != HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected header {HEADER:?}"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            line: lineno,
            message: format!("invalid {what}"),
        };
        let q: i64 = fields[0].parse().map_err(|_| bad("q"))?;
        let r: i64 = fields[1].parse().map_err(|_| bad("r"))?;
        let v: f64 = fields[4].parse().map_err(|_| bad("value"))?;
        if !v.is_finite() || v < 0.0 {
            return Err(bad("value"));
        }
        weights.push((AxialCoord::new(q, r), v));
    }
    let layout = layout.ok_or(Error::Parse {
        line: 0,
        message: "missing layout comment line".into(),
    })?;
    Ok(BinsFile {
        grid: BinGrid::from_weights(layout, weights),
        blur,
    })
}
