//! Exhaustive lattice search: line-of-sight count at every feasible point,
//! used as ground truth for the learned placement.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::feasibility::FeasibleRegion;
use crate::geometry::{count_los, Vec3};
use crate::network_model::surrogate_throughput;
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleOptions {
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
    /// Keep one row per lattice point in the result.
    pub keep_table: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankedPosition {
    pub position: Vec3,
    pub throughput_bps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointRecord {
    pub position: Vec3,
    pub nlos: usize,
    pub in_sp: bool,
    pub throughput_bps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub users: usize,
    pub lattice_points: usize,
    pub feasible_points: usize,
    pub max_nlos: usize,
    /// Positions attaining `max_nlos`, best surrogate throughput first, then
    /// lexicographic.
    pub argmax: Vec<RankedPosition>,
    #[serde(skip)]
    pub table: Option<Vec<PointRecord>>,
}

impl OracleResult {
    pub fn best(&self) -> &RankedPosition {
        &self.argmax[0]
    }

    pub fn max_reward(&self) -> f64 {
        self.max_nlos as f64 / self.users as f64
    }
}

#[derive(Default)]
struct Partial {
    feasible: usize,
    max_nlos: Option<usize>,
    argmax: Vec<Vec3>,
    table: Vec<(Vec3, usize, bool)>,
}

fn scan_range(
    scenario: &Scenario,
    region: &FeasibleRegion,
    ues: &[Vec3],
    range: std::ops::Range<usize>,
    keep_table: bool,
) -> Result<Partial> {
    let zone = &scenario.zone;
    let mut part = Partial::default();
    for flat in range {
        let p = zone.point_at(flat);
        let in_sp = region.contains_unchecked(&p, ues);
        if !in_sp && !keep_table {
            continue;
        }
        let nlos = count_los(p, ues, &scenario.venue)?;
        if keep_table {
            part.table.push((p, nlos, in_sp));
        }
        if !in_sp {
            continue;
        }
        part.feasible += 1;
        match part.max_nlos {
            Some(m) if nlos < m => {}
            Some(m) if nlos == m => part.argmax.push(p),
            _ => {
                part.max_nlos = Some(nlos);
                part.argmax.clear();
                part.argmax.push(p);
            }
        }
    }
    Ok(part)
}

fn merge(parts: Vec<Partial>) -> Partial {
    let mut out = Partial::default();
    for part in parts {
        out.feasible += part.feasible;
        out.table.extend(part.table);
        match (out.max_nlos, part.max_nlos) {
            (_, None) => {}
            (Some(a), Some(b)) if b < a => {}
            (Some(a), Some(b)) if b == a => out.argmax.extend(part.argmax),
            (_, Some(b)) => {
                out.max_nlos = Some(b);
                out.argmax = part.argmax;
            }
        }
    }
    out
}

/// Scans every lattice point of the scenario's zone.
pub fn exhaustive_search(scenario: &Scenario, options: OracleOptions) -> Result<OracleResult> {
    let region = FeasibleRegion::new(&scenario.ues, &scenario.radio, &scenario.mcs_table, scenario.zone)?;
    let ues = scenario.ue_positions();
    let total = scenario.zone.len();
    let threads = match options.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .clamp(1, total.max(1));

    let part = if threads == 1 {
        scan_range(scenario, &region, &ues, 0..total, options.keep_table)?
    } else {
        let chunk = total.div_ceil(threads);
        let parts = std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|k| {
                    let range = (k * chunk).min(total)..((k + 1) * chunk).min(total);
                    let (region, ues) = (&region, &ues);
                    s.spawn(move || scan_range(scenario, region, ues, range, options.keep_table))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("oracle worker panicked"))
                .collect::<Result<Vec<_>>>()
        })?;
        merge(parts)
    };

    let max_nlos = part.max_nlos.ok_or(Error::Infeasible)?;
    let mut argmax = part
        .argmax
        .into_iter()
        .map(|p| {
            Ok(RankedPosition {
                position: p,
                throughput_bps: surrogate_throughput(scenario, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    argmax.sort_by(|a, b| {
        b.throughput_bps
            .partial_cmp(&a.throughput_bps)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.position.lex_cmp(&b.position))
    });
    let table = if options.keep_table {
        Some(
            part.table
                .into_iter()
                .map(|(p, nlos, in_sp)| {
                    Ok(PointRecord {
                        position: p,
                        nlos,
                        in_sp,
                        throughput_bps: surrogate_throughput(scenario, p)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(OracleResult {
        users: ues.len(),
        lattice_points: total,
        feasible_points: part.feasible,
        max_nlos,
        argmax,
        table,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub position: Vec3,
    pub nlos: usize,
    pub in_sp: bool,
    pub max_nlos: usize,
    pub pass: bool,
    /// `max_nlos - nlos`.
    pub gap: usize,
    /// 1-based throughput rank within the argmax set, when the position is in it.
    pub rank: Option<usize>,
    pub argmax_size: usize,
}

/// Checks `position` against an oracle computed for the same scenario.
pub fn certify(position: Vec3, oracle: &OracleResult, scenario: &Scenario) -> Result<Certificate> {
    let zone = &scenario.zone;
    let idx = zone.lattice_indices(&position).ok_or(Error::OffLattice(position.to_array()))?;
    let region = FeasibleRegion::new(&scenario.ues, &scenario.radio, &scenario.mcs_table, scenario.zone)?;
    let ues = scenario.ue_positions();
    let snapped = zone.point(idx[0], idx[1], idx[2]);
    let in_sp = region.contains_unchecked(&snapped, &ues);
    let nlos = count_los(snapped, &ues, &scenario.venue)?;
    let rank = oracle
        .argmax
        .iter()
        .position(|r| zone.lattice_indices(&r.position) == Some(idx))
        .map(|i| i + 1);
    Ok(Certificate {
        position: snapped,
        nlos,
        in_sp,
        max_nlos: oracle.max_nlos,
        pass: in_sp && nlos == oracle.max_nlos,
        gap: oracle.max_nlos.saturating_sub(nlos),
        rank,
        argmax_size: oracle.argmax.len(),
    })
}

/// Per-point CSV: `x,y,z,nlos,in_sp,throughput_bps`.
pub fn write_point_table<W: Write>(table: &[PointRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "x,y,z,nlos,in_sp,throughput_bps")?;
    for r in table {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.position.x,
            r.position.y,
            r.position.z,
            r.nlos,
            u8::from(r.in_sp),
            r.throughput_bps
        )?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::UserEquipment;
    use crate::geometry::{Building, PositioningZone, Venue};

    fn small_open() -> Scenario {
        let mut s = Scenario::with_defaults(
            "open",
            Venue::empty(100.0),
            vec![
                UserEquipment::new(0, Vec3::new(-10.0, -10.0, 1.5), 58.5e6, 0),
                UserEquipment::new(1, Vec3::new(10.0, 10.0, 1.5), 58.5e6, 0),
            ],
        );
        s.zone = PositioningZone::new(Vec3::new(-5.0, -5.0, 25.0), Vec3::new(5.0, 5.0, 30.0), 1.0).unwrap();
        s
    }

    #[test]
    fn open_scene_every_point_is_optimal() {
        let s = small_open();
        let r = exhaustive_search(&s, OracleOptions::default()).unwrap();
        assert_eq!(r.max_nlos, 2);
        assert_eq!(r.feasible_points, 11 * 11 * 6);
        assert_eq!(r.argmax.len(), r.feasible_points);
        let c = certify(Vec3::new(3.0, -2.0, 27.0), &r, &s).unwrap();
        assert!(c.pass);
        assert_eq!(c.gap, 0);
        assert!(c.rank.is_some());
        assert!(matches!(
            certify(Vec3::new(0.5, 0.0, 27.0), &r, &s),
            Err(Error::OffLattice(_))
        ));
    }

    #[test]
    fn walled_user_caps_the_maximum() {
        let mut s = small_open();
        let (x, y) = (-10.0, -10.0);
        // Four walls taller than the zone around the first user.
        let walls = vec![
            Building::from_bounds(Vec3::new(x - 2.0, y - 2.0, 0.0), Vec3::new(x - 1.5, y + 2.0, 40.0)),
            Building::from_bounds(Vec3::new(x + 1.5, y - 2.0, 0.0), Vec3::new(x + 2.0, y + 2.0, 40.0)),
            Building::from_bounds(Vec3::new(x - 2.0, y - 2.0, 0.0), Vec3::new(x + 2.0, y - 1.5, 40.0)),
            Building::from_bounds(Vec3::new(x - 2.0, y + 1.5, 0.0), Vec3::new(x + 2.0, y + 2.0, 40.0)),
        ];
        s.venue = Venue::new(100.0, walls).unwrap();
        let r = exhaustive_search(&s, OracleOptions::default()).unwrap();
        assert_eq!(r.max_nlos, 1);
        let c = certify(r.best().position, &r, &s).unwrap();
        assert_eq!(c.rank, Some(1));
    }

    #[test]
    fn parallel_matches_serial() {
        let mut s = small_open();
        s.venue = Venue::new(
            100.0,
            vec![Building::from_bounds(Vec3::new(-4.0, -4.0, 0.0), Vec3::new(0.0, 0.0, 28.0))],
        )
        .unwrap();
        let serial = exhaustive_search(&s, OracleOptions { threads: 1, keep_table: true }).unwrap();
        let parallel = exhaustive_search(&s, OracleOptions { threads: 3, keep_table: true }).unwrap();
        assert_eq!(serial, parallel);
        assert_eq!(serial.table.as_ref().unwrap().len(), s.zone.len());
        let mut csv = Vec::new();
        write_point_table(serial.table.as_ref().unwrap(), &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), s.zone.len() + 1);
    }

    #[test]
    fn infeasible_scene_is_reported() {
        let mut s = small_open();
        s.ues[0].position = Vec3::new(-45.0, -45.0, 1.5);
        s.ues[1].position = Vec3::new(45.0, 45.0, 1.5);
        s.ues[0].demanded_mcs = 8;
        s.ues[1].demanded_mcs = 8;
        assert!(matches!(
            exhaustive_search(&s, OracleOptions::default()),
            Err(Error::Infeasible)
        ));
    }
}
