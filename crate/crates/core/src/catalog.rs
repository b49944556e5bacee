//! Named example traces and lattice sets.
//!
//! Entries are addressed by a stable string id, optionally followed by
//! `key=value` parameters after a colon: `parallel-circles:h=0.25`,
//! `perturbed-circle:a2=0.05,a3=0.01`, `tilted-circle:angle=0.4`. Unknown
//! ids, unknown keys and malformed values are configuration errors so a
//! command-line front end can report them as such.

use crate::curves::{make_circle, make_perturbed_circle, ConeTrace};
use crate::error::{Error, Result};
use crate::perimeter::{Grid, GridSet};
use nalgebra::Vector3;
use std::f64::consts::FRAC_PI_2;

/// What kind of object a catalog id names.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatalogKind {
    /// Closed spherical curves tracing a cone boundary.
    Trace,
    /// 2D lattice set plus evaluation window.
    PlanarSet,
    /// 3D lattice set plus evaluation window.
    VoxelSet,
}

impl CatalogKind {
    pub fn label(self) -> &'static str {
        match self {
            CatalogKind::Trace => "trace",
            CatalogKind::PlanarSet => "planar-set",
            CatalogKind::VoxelSet => "voxel-set",
        }
    }
}

/// One catalog entry: id, kind, accepted parameters and a one-line summary.
#[derive(Clone, Copy, Debug)]
pub struct CatalogItem {
    pub id: &'static str,
    pub kind: CatalogKind,
    /// Samples per curve (traces) or cells per axis (sets).
    pub default_resolution: usize,
    pub parameters: &'static str,
    pub summary: &'static str,
}

/// All entries in a fixed, reproducible order.
pub fn list_catalog() -> Vec<CatalogItem> {
    vec![
        CatalogItem {
            id: "maximal-circle",
            kind: CatalogKind::Trace,
            default_resolution: 512,
            parameters: "",
            summary: "equator of the sphere; the cone over it is a half-space boundary",
        },
        CatalogItem {
            id: "tilted-circle",
            kind: CatalogKind::Trace,
            default_resolution: 512,
            parameters: "angle (axis tilt in radians, default 0.4)",
            summary: "maximal circle with a tilted axis, for rotation invariance checks",
        },
        CatalogItem {
            id: "parallel-circles",
            kind: CatalogKind::Trace,
            default_resolution: 512,
            parameters: "h (circle heights +-h, default 0.25)",
            summary: "two parallel circles bounding a sphere band, a genuinely nonflat cone",
        },
        CatalogItem {
            id: "perturbed-circle",
            kind: CatalogKind::Trace,
            default_resolution: 512,
            parameters: "a1..a8 (latitude Fourier amplitudes, default a2=0.05)",
            summary: "equator with a latitude ripple z(theta) = sum a_k cos(k theta)",
        },
        CatalogItem {
            id: "disk",
            kind: CatalogKind::PlanarSet,
            default_resolution: 1024,
            parameters: "",
            summary: "unit disk in the window B_3, box [-4,4]^2",
        },
        CatalogItem {
            id: "square",
            kind: CatalogKind::PlanarSet,
            default_resolution: 1024,
            parameters: "",
            summary: "unit square in the window B_3, box [-4,4]^2",
        },
        CatalogItem {
            id: "half-plane",
            kind: CatalogKind::PlanarSet,
            default_resolution: 512,
            parameters: "",
            summary: "half-plane x < 0 in the window B_1, box [-2,2]^2",
        },
        CatalogItem {
            id: "double-cone",
            kind: CatalogKind::VoxelSet,
            default_resolution: 96,
            parameters: "",
            summary: "double cone |z| > rho in the window B_1, box [-1.5,1.5]^3",
        },
    ]
}

/// Look up an entry by bare name (no parameters).
pub fn catalog_item(name: &str) -> Result<CatalogItem> {
    list_catalog()
        .into_iter()
        .find(|it| it.id == name)
        .ok_or_else(|| Error::Config(format!("unknown catalog id {name:?}")))
}

/// Split `name:key=value,key=value` into the bare name and parameter pairs.
fn parse_id(id: &str) -> Result<(&str, Vec<(&str, f64)>)> {
    let (name, rest) = match id.split_once(':') {
        Some((n, r)) => (n, r),
        None => (id, ""),
    };
    let mut params = Vec::new();
    if !rest.is_empty() {
        for piece in rest.split(',') {
            let (k, v) = piece.split_once('=').ok_or_else(|| {
                Error::Config(format!("catalog parameter {piece:?} is not key=value"))
            })?;
            let val = v.trim().parse::<f64>().map_err(|e| {
                Error::Config(format!("catalog parameter {k}={v:?} is not a number: {e}"))
            })?;
            params.push((k.trim(), val));
        }
    }
    Ok((name, params))
}

fn reject_params(name: &str, params: &[(&str, f64)]) -> Result<()> {
    if let Some((k, _)) = params.first() {
        return Err(Error::Config(format!("catalog entry {name:?} takes no parameter {k:?}")));
    }
    Ok(())
}

/// Build a named cone trace with `samples` points per component.
pub fn build_trace(id: &str, samples: usize) -> Result<ConeTrace> {
    let (name, params) = parse_id(id)?;
    match name {
        "maximal-circle" => {
            reject_params(name, &params)?;
            let c = make_circle(&Vector3::z(), FRAC_PI_2, samples)?;
            ConeTrace::new(vec![c], vec![1])
        }
        "tilted-circle" => {
            let mut angle = 0.4f64;
            for (k, v) in params {
                match k {
                    "angle" => angle = v,
                    _ => {
                        return Err(Error::Config(format!(
                            "tilted-circle takes angle=..., not {k:?}"
                        )))
                    }
                }
            }
            if !(angle.abs() < FRAC_PI_2) {
                return Err(Error::Config(format!(
                    "tilt angle {angle} must satisfy |angle| < pi/2"
                )));
            }
            let axis = Vector3::new(angle.sin(), 0.0, angle.cos());
            let c = make_circle(&axis, FRAC_PI_2, samples)?;
            ConeTrace::new(vec![c], vec![1])
        }
        "parallel-circles" => {
            let mut h = 0.25f64;
            for (k, v) in params {
                match k {
                    "h" => h = v,
                    _ => {
                        return Err(Error::Config(format!(
                            "parallel-circles takes h=..., not {k:?}"
                        )))
                    }
                }
            }
            if !(h > 0.0 && h < 1.0) {
                return Err(Error::Config(format!(
                    "circle height h = {h} must lie in (0, 1)"
                )));
            }
            let top = make_circle(&Vector3::z(), h.acos(), samples)?;
            let bottom = make_circle(&Vector3::z(), (-h).acos(), samples)?;
            ConeTrace::new(vec![top, bottom], vec![1, -1])
        }
        "perturbed-circle" => {
            let mut amplitudes = vec![0.0f64; 8];
            if params.is_empty() {
                amplitudes[1] = 0.05;
            }
            for (k, v) in params {
                let mode: usize = k
                    .strip_prefix('a')
                    .and_then(|m| m.parse().ok())
                    .filter(|&m| (1..=8).contains(&m))
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "perturbed-circle takes a1=..a8=, not {k:?}"
                        ))
                    })?;
                if v.abs() > 0.3 {
                    return Err(Error::Config(format!(
                        "amplitude {k}={v} exceeds the cap 0.3"
                    )));
                }
                amplitudes[mode - 1] = v;
            }
            let c = make_perturbed_circle(&Vector3::z(), &amplitudes, samples)?;
            ConeTrace::new(vec![c], vec![1])
        }
        other => Err(Error::Config(format!("unknown trace id {other:?}"))),
    }
}

/// A lattice set together with its evaluation window and the natural
/// center for density scans.
#[derive(Clone, Debug)]
pub struct SetScene {
    pub set: GridSet,
    pub window: GridSet,
    pub center: [f64; 3],
}

/// Build a named lattice scene with `cells` cells per axis.
pub fn build_set(id: &str, cells: usize) -> Result<SetScene> {
    let (name, params) = parse_id(id)?;
    reject_params(name, &params)?;
    match name {
        "disk" => {
            let grid = Grid::centered_square(4.0, cells)?;
            Ok(SetScene {
                set: GridSet::from_fn(&grid, |x, y, _| x * x + y * y < 1.0),
                window: GridSet::from_fn(&grid, |x, y, _| x * x + y * y < 9.0),
                center: [0.0; 3],
            })
        }
        "square" => {
            let grid = Grid::centered_square(4.0, cells)?;
            Ok(SetScene {
                set: GridSet::from_fn(&grid, |x, y, _| x.abs() < 0.5 && y.abs() < 0.5),
                window: GridSet::from_fn(&grid, |x, y, _| x * x + y * y < 9.0),
                center: [0.0; 3],
            })
        }
        "half-plane" => {
            let grid = Grid::centered_square(2.0, cells)?;
            Ok(SetScene {
                set: GridSet::from_fn(&grid, |x, _, _| x < 0.0),
                window: GridSet::from_fn(&grid, |x, y, _| x * x + y * y < 1.0),
                center: [0.0; 3],
            })
        }
        "double-cone" => {
            let grid = Grid::centered_cube(1.5, cells)?;
            Ok(SetScene {
                set: GridSet::from_fn(&grid, |x, y, z| z * z > x * x + y * y),
                window: GridSet::from_fn(&grid, |x, y, z| x * x + y * y + z * z < 1.0),
                center: [0.0; 3],
            })
        }
        other => Err(Error::Config(format!("unknown set id {other:?}"))),
    }
}
