//! 3D primitives, the UAV positioning zone, lattice enumeration and the
//! segment-versus-building line-of-sight test.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A segment must penetrate a box deeper than this (metres) to be blocked.
/// Contact with a face inside this band is grazing and leaves the link clear.
pub const GRAZING_TOLERANCE: f64 = 1e-9;

/// Point or displacement in metres.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn axis(&self, k: usize) -> f64 {
        match k {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index {k} out of range"),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        (*self - *other).norm()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Lexicographic (x, then y, then z) total order.
    pub fn lex_cmp(&self, other: &Vec3) -> std::cmp::Ordering {
        self.x
            .total_cmp(&other.x)
            .then(self.y.total_cmp(&other.y))
            .then(self.z.total_cmp(&other.z))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Axis-aligned building box. Serialized as the 9-tuple
/// `(x_min, x_max, y_min, y_max, z_min, z_max, floors, x_rooms, y_rooms)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "BuildingRow", into = "BuildingRow")]
pub struct Building {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    // Indoor layout; stored for configuration parity only.
    pub floors: u32,
    pub x_rooms: u32,
    pub y_rooms: u32,
}

type BuildingRow = (f64, f64, f64, f64, f64, f64, u32, u32, u32);

impl From<BuildingRow> for Building {
    fn from(r: BuildingRow) -> Self {
        Building {
            x_min: r.0,
            x_max: r.1,
            y_min: r.2,
            y_max: r.3,
            z_min: r.4,
            z_max: r.5,
            floors: r.6,
            x_rooms: r.7,
            y_rooms: r.8,
        }
    }
}

impl From<Building> for BuildingRow {
    fn from(b: Building) -> Self {
        (
            b.x_min, b.x_max, b.y_min, b.y_max, b.z_min, b.z_max, b.floors, b.x_rooms, b.y_rooms,
        )
    }
}

impl Building {
    /// Box with a single floor/room; handy for tests and synthetic scenes.
    pub fn from_bounds(min: Vec3, max: Vec3) -> Self {
        Building {
            x_min: min.x,
            x_max: max.x,
            y_min: min.y,
            y_max: max.y,
            z_min: min.z,
            z_max: max.z,
            floors: 1,
            x_rooms: 1,
            y_rooms: 1,
        }
    }

    pub fn min_corner(&self) -> Vec3 {
        Vec3::new(self.x_min, self.y_min, self.z_min)
    }

    pub fn max_corner(&self) -> Vec3 {
        Vec3::new(self.x_max, self.y_max, self.z_max)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let coords = [
            self.x_min, self.x_max, self.y_min, self.y_max, self.z_min, self.z_max,
        ];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err("non-finite coordinate".into());
        }
        if self.x_min >= self.x_max {
            return Err(format!("x_min {} must be < x_max {}", self.x_min, self.x_max));
        }
        if self.y_min >= self.y_max {
            return Err(format!("y_min {} must be < y_max {}", self.y_min, self.y_max));
        }
        if self.z_min > self.z_max {
            return Err(format!("z_min {} must be <= z_max {}", self.z_min, self.z_max));
        }
        if self.z_min < 0.0 {
            return Err(format!("z_min {} must be >= 0", self.z_min));
        }
        if self.floors == 0 || self.x_rooms == 0 || self.y_rooms == 0 {
            return Err("floors, x_rooms and y_rooms must be positive".into());
        }
        Ok(())
    }

    /// Closed-box containment.
    pub fn contains(&self, p: &Vec3) -> bool {
        p.x >= self.x_min
            && p.x <= self.x_max
            && p.y >= self.y_min
            && p.y <= self.y_max
            && p.z >= self.z_min
            && p.z <= self.z_max
    }

    /// Closed footprint containment in the ground plane.
    pub fn footprint_contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

/// Square urban venue centred on the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Venue {
    #[serde(rename = "s_venue")]
    pub side_length: f64,
    pub buildings: Vec<Building>,
}

impl Venue {
    pub fn new(side_length: f64, buildings: Vec<Building>) -> Result<Self> {
        let venue = Venue {
            side_length,
            buildings,
        };
        venue.validate()?;
        Ok(venue)
    }

    pub fn empty(side_length: f64) -> Self {
        Venue {
            side_length,
            buildings: Vec::new(),
        }
    }

    pub fn half_side(&self) -> f64 {
        self.side_length / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.side_length.is_finite() && self.side_length > 0.0) {
            return Err(Error::config("venue.s_venue", "must be positive"));
        }
        let h = self.half_side();
        for (i, b) in self.buildings.iter().enumerate() {
            let path = format!("venue.buildings[{i}]");
            b.validate().map_err(|m| Error::config(&path, m))?;
            if b.x_min < -h || b.x_max > h || b.y_min < -h || b.y_max > h {
                return Err(Error::config(path, "footprint leaves the venue"));
            }
        }
        Ok(())
    }

    /// Ground-plane containment within the venue square.
    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        let h = self.half_side();
        x >= -h && x <= h && y >= -h && y <= h
    }

    /// Index of the first building whose closed box holds `p`.
    pub fn building_containing(&self, p: &Vec3) -> Option<usize> {
        self.buildings.iter().position(|b| b.contains(p))
    }
}

/// Admissible UAV box together with its lattice spacing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositioningZone {
    #[serde(rename = "min")]
    pub min_corner: Vec3,
    #[serde(rename = "max")]
    pub max_corner: Vec3,
    pub grid_size: f64,
}

impl PositioningZone {
    pub fn new(min_corner: Vec3, max_corner: Vec3, grid_size: f64) -> Result<Self> {
        let zone = PositioningZone {
            min_corner,
            max_corner,
            grid_size,
        };
        zone.validate()?;
        Ok(zone)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min_corner.is_finite() || !self.max_corner.is_finite() {
            return Err(Error::NonFinite("positioning zone"));
        }
        for k in 0..3 {
            if self.min_corner.axis(k) >= self.max_corner.axis(k) {
                return Err(Error::config(
                    "z_p",
                    format!("min corner must be below max corner on axis {k}"),
                ));
            }
        }
        if !(self.grid_size.is_finite() && self.grid_size > 0.0) {
            return Err(Error::config("grid_size", "must be positive"));
        }
        Ok(())
    }

    /// Number of lattice points along each axis.
    pub fn dims(&self) -> [usize; 3] {
        let mut dims = [0; 3];
        for (k, d) in dims.iter_mut().enumerate() {
            let extent = self.max_corner.axis(k) - self.min_corner.axis(k);
            *d = (extent / self.grid_size + 1e-9).floor() as usize + 1;
        }
        dims
    }

    pub fn len(&self) -> usize {
        let [nx, ny, nz] = self.dims();
        nx * ny * nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lattice point for integer indices along each axis.
    pub fn point(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        let g = self.grid_size;
        Vec3::new(
            self.min_corner.x + ix as f64 * g,
            self.min_corner.y + iy as f64 * g,
            self.min_corner.z + iz as f64 * g,
        )
    }

    /// Lattice point by flat index in x-then-y-then-z order (x slowest).
    pub fn point_at(&self, flat: usize) -> Vec3 {
        let [_, ny, nz] = self.dims();
        let iz = flat % nz;
        let iy = (flat / nz) % ny;
        let ix = flat / (nz * ny);
        self.point(ix, iy, iz)
    }

    /// Inclusive componentwise containment.
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p.axis(k) >= self.min_corner.axis(k) && p.axis(k) <= self.max_corner.axis(k))
    }

    /// Integer lattice indices of `p`, if it sits on the lattice (within 1e-6 m).
    pub fn lattice_indices(&self, p: &Vec3) -> Option<[usize; 3]> {
        let dims = self.dims();
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let f = (p.axis(k) - self.min_corner.axis(k)) / self.grid_size;
            let r = f.round();
            if r < 0.0 || r as usize >= dims[k] || (f - r).abs() * self.grid_size > 1e-6 {
                return None;
            }
            idx[k] = r as usize;
        }
        Some(idx)
    }

    pub fn is_lattice_point(&self, p: &Vec3) -> bool {
        self.lattice_indices(p).is_some()
    }

    /// Centroid snapped to the lattice; halfway cases snap down.
    pub fn snapped_center(&self) -> Vec3 {
        let dims = self.dims();
        let mut idx = [0usize; 3];
        for (k, i) in idx.iter_mut().enumerate() {
            let centre = 0.5 * (self.min_corner.axis(k) + self.max_corner.axis(k));
            let f = (centre - self.min_corner.axis(k)) / self.grid_size;
            // Round half down: ceil(f - 0.5).
            let r = (f - 0.5 - 1e-9).ceil().max(0.0) as usize;
            *i = r.min(dims[k] - 1);
        }
        self.point(idx[0], idx[1], idx[2])
    }

    /// Maps `p` to [-1, 1] per axis over the zone extent.
    pub fn normalize(&self, p: &Vec3) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            let lo = self.min_corner.axis(k);
            let hi = self.max_corner.axis(k);
            *o = 2.0 * (p.axis(k) - lo) / (hi - lo) - 1.0;
        }
        out
    }
}

/// Whether the open segment `a`–`b` penetrates the interior of `building`.
///
/// Slab method against the box shrunk by [`GRAZING_TOLERANCE`]; the segment is
/// blocked iff it has an open sub-interval strictly inside the shrunk box.
pub fn segment_blocked(a: Vec3, b: Vec3, building: &Building) -> Result<bool> {
    if a == b {
        return Err(Error::DegenerateSegment(a.to_array()));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("segment endpoint"));
    }
    Ok(penetrates(a, b, building))
}

#[inline]
fn penetrates(a: Vec3, b: Vec3, building: &Building) -> bool {
    let lo = building.min_corner();
    let hi = building.max_corner();
    let d = b - a;
    let mut t_enter = 0.0_f64;
    let mut t_exit = 1.0_f64;
    for k in 0..3 {
        let lo_k = lo.axis(k) + GRAZING_TOLERANCE;
        let hi_k = hi.axis(k) - GRAZING_TOLERANCE;
        if lo_k >= hi_k {
            return false;
        }
        let o = a.axis(k);
        let dk = d.axis(k);
        if dk == 0.0 {
            if o <= lo_k || o >= hi_k {
                return false;
            }
            continue;
        }
        let t1 = (lo_k - o) / dk;
        let t2 = (hi_k - o) / dk;
        let (near, far) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        if near > t_enter {
            t_enter = near;
        }
        if far < t_exit {
            t_exit = far;
        }
        if t_enter >= t_exit {
            return false;
        }
    }
    t_enter < t_exit
}

/// Line of sight between the UAV and a user: no building blocks the segment.
pub fn line_of_sight(uav: Vec3, ue: Vec3, venue: &Venue) -> Result<bool> {
    if uav == ue {
        return Err(Error::DegenerateSegment(uav.to_array()));
    }
    if !uav.is_finite() || !ue.is_finite() {
        return Err(Error::NonFinite("segment endpoint"));
    }
    Ok(!venue.buildings.iter().any(|b| penetrates(uav, ue, b)))
}

/// Number of users in line of sight with the UAV.
pub fn count_los(uav: Vec3, ues: &[Vec3], venue: &Venue) -> Result<usize> {
    if ues.is_empty() {
        return Err(Error::NoUserEquipment);
    }
    let mut n = 0;
    for ue in ues {
        if line_of_sight(uav, *ue, venue)? {
            n += 1;
        }
    }
    Ok(n)
}

/// Every lattice point of the zone, x-then-y-then-z order.
pub fn grid_points(zone: &PositioningZone) -> Vec<Vec3> {
    let [nx, ny, nz] = zone.dims();
    let mut out = Vec::with_capacity(nx * ny * nz);
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                out.push(zone.point(ix, iy, iz));
            }
        }
    }
    out
}
