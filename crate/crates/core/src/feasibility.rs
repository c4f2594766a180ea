//! Per-user coverage spheres and the feasible positioning subspace: the part
//! of the positioning zone inside every user's sphere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{grid_points, PositioningZone, Vec3};
use crate::mcs::McsTable;
use crate::propagation::{friis_max_distance, RadioConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: usize,
    pub position: Vec3,
    /// Offered load B_i, bit/s.
    #[serde(rename = "b_i")]
    pub demand_bps: f64,
    #[serde(rename = "mcs_i")]
    pub demanded_mcs: u32,
}

impl UserEquipment {
    pub fn new(id: usize, position: Vec3, demand_bps: f64, demanded_mcs: u32) -> Self {
        UserEquipment {
            id,
            position,
            demand_bps,
            demanded_mcs,
        }
    }
}

/// Closed ball radius around `ue` within which the free-space SNR still
/// supports its demanded MCS.
pub fn sphere_radius(ue: &UserEquipment, radio: &RadioConfig, table: &McsTable) -> Result<f64> {
    let entry = table.entry(ue.demanded_mcs)?;
    Ok(friis_max_distance(entry.min_snr_db, radio))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleRegion {
    pub radii: Vec<f64>,
    pub zone: PositioningZone,
}

impl FeasibleRegion {
    pub fn new(
        ues: &[UserEquipment],
        radio: &RadioConfig,
        table: &McsTable,
        zone: PositioningZone,
    ) -> Result<Self> {
        if ues.is_empty() {
            return Err(Error::NoUserEquipment);
        }
        let radii = ues
            .iter()
            .map(|ue| sphere_radius(ue, radio, table))
            .collect::<Result<Vec<_>>>()?;
        Ok(FeasibleRegion { radii, zone })
    }

    /// Membership without the length check; `positions` must match `radii`.
    #[inline]
    pub(crate) fn contains_unchecked(&self, p: &Vec3, positions: &[Vec3]) -> bool {
        self.zone.contains(p)
            && positions
                .iter()
                .zip(&self.radii)
                .all(|(ue, r)| p.distance(ue) <= *r)
    }
}

fn check_lengths(region: &FeasibleRegion, ues: &[UserEquipment]) -> Result<()> {
    if region.radii.len() != ues.len() {
        return Err(Error::LengthMismatch {
            expected: ues.len(),
            got: region.radii.len(),
        });
    }
    Ok(())
}

/// Whether `p` lies in the zone and inside every user's sphere.
pub fn in_feasible_subspace(p: &Vec3, region: &FeasibleRegion, ues: &[UserEquipment]) -> Result<bool> {
    check_lengths(region, ues)?;
    let positions: Vec<Vec3> = ues.iter().map(|u| u.position).collect();
    Ok(region.contains_unchecked(p, &positions))
}

/// Lattice points of `zone` inside the feasible subspace, lattice order kept.
pub fn feasible_grid_points(
    region: &FeasibleRegion,
    ues: &[UserEquipment],
    zone: &PositioningZone,
) -> Result<Vec<Vec3>> {
    check_lengths(region, ues)?;
    let positions: Vec<Vec3> = ues.iter().map(|u| u.position).collect();
    Ok(grid_points(zone)
        .into_iter()
        .filter(|p| region.contains_unchecked(p, &positions))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcs::VHT160_GI800_1SS;

    fn table() -> McsTable {
        McsTable::builtin(VHT160_GI800_1SS).unwrap()
    }

    fn ue(id: usize, p: Vec3, mcs: u32) -> UserEquipment {
        UserEquipment::new(id, p, 58.5e6, mcs)
    }

    #[test]
    fn radii_follow_thresholds() {
        let r = RadioConfig::default();
        let t = table();
        let r0 = sphere_radius(&ue(0, Vec3::default(), 0), &r, &t).unwrap();
        let r6 = sphere_radius(&ue(0, Vec3::default(), 6), &r, &t).unwrap();
        assert!((r0 - 454.5).abs() < 0.2, "{r0}");
        assert!((r6 - 45.45).abs() < 0.01, "{r6}");
        let radii: Vec<f64> = (0..9)
            .map(|m| sphere_radius(&ue(0, Vec3::default(), m), &r, &t).unwrap())
            .collect();
        assert!(radii.windows(2).all(|w| w[1] < w[0]));
        assert!(matches!(
            sphere_radius(&ue(0, Vec3::default(), 12), &r, &t),
            Err(Error::UnknownMcs(12))
        ));
    }

    #[test]
    fn membership_cases() {
        let zone = PositioningZone::new(Vec3::new(-50.0, -50.0, 0.0), Vec3::new(50.0, 50.0, 50.0), 1.0).unwrap();
        let ues = vec![ue(0, Vec3::new(0.0, 0.0, 0.0), 0)];
        let region = FeasibleRegion {
            radii: vec![10.0],
            zone,
        };
        assert!(in_feasible_subspace(&Vec3::new(0.0, 0.0, 10.0), &region, &ues).unwrap());
        assert!(!in_feasible_subspace(&Vec3::new(0.0, 0.0, 10.0 + 1e-9), &region, &ues).unwrap());
        assert!(!in_feasible_subspace(&Vec3::new(0.0, 0.0, -1.0), &region, &ues).unwrap());

        let huge = FeasibleRegion {
            radii: vec![1e6],
            zone,
        };
        assert!(!in_feasible_subspace(&Vec3::new(60.0, 0.0, 1.0), &huge, &ues).unwrap());

        let two = vec![ues[0].clone(), ue(1, Vec3::new(1.0, 1.0, 1.0), 0)];
        assert!(matches!(
            in_feasible_subspace(&Vec3::default(), &region, &two),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn huge_radii_keep_whole_grid() {
        let zone = PositioningZone::new(Vec3::new(0.0, 0.0, 0.0), Vec3::new(4.0, 4.0, 4.0), 1.0).unwrap();
        let ues = vec![ue(0, Vec3::new(1.0, 1.0, 0.0), 0), ue(1, Vec3::new(3.0, 2.0, 0.0), 0)];
        let region = FeasibleRegion {
            radii: vec![1e3, 1e3],
            zone,
        };
        assert_eq!(feasible_grid_points(&region, &ues, &zone).unwrap(), grid_points(&zone));
    }

    #[test]
    fn disjoint_spheres_are_infeasible() {
        let zone = PositioningZone::new(Vec3::new(-50.0, -50.0, 0.0), Vec3::new(50.0, 50.0, 10.0), 1.0).unwrap();
        let ues = vec![ue(0, Vec3::new(-40.0, 0.0, 0.0), 0), ue(1, Vec3::new(40.0, 0.0, 0.0), 0)];
        let region = FeasibleRegion {
            radii: vec![30.0, 30.0],
            zone,
        };
        assert!(feasible_grid_points(&region, &ues, &zone).unwrap().is_empty());
    }

    #[test]
    fn single_sphere_disc_matches_direct_check() {
        let zone = PositioningZone::new(Vec3::new(-20.0, -20.0, 6.0), Vec3::new(20.0, 20.0, 6.0 + 1e-3), 1.0)
            .unwrap();
        let centre = Vec3::new(2.0, -3.0, 1.0);
        let r = 12.5;
        let ues = vec![ue(0, centre, 0)];
        let region = FeasibleRegion { radii: vec![r], zone };
        let pts = feasible_grid_points(&region, &ues, &zone).unwrap();
        let disc = (r * r - 25.0f64).sqrt();
        let expected: Vec<Vec3> = grid_points(&zone)
            .into_iter()
            .filter(|p| ((p.x - centre.x).powi(2) + (p.y - centre.y).powi(2)).sqrt() <= disc + 1e-12)
            .collect();
        assert!(!pts.is_empty());
        assert_eq!(pts, expected);
    }
}
