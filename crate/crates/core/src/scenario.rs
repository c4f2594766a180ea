//! Scenario files: the JSON schema, its validation, and random user placement.
//!
//! A file may name a built-in MCS table or carry one inline, and may list users
//! explicitly or ask for `count` users placed from a seed. Loading resolves
//! both into concrete values; [`Scenario::to_json`] writes the resolved form,
//! which loads back to an equal scenario.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dqn::TrainConfig;
use crate::env::EpisodeConfig;
use crate::error::{Error, Result};
use crate::feasibility::UserEquipment;
use crate::geometry::{Building, PositioningZone, Vec3, Venue};
use crate::mcs::McsTable;
use crate::network_model::NetworkConfig;
use crate::propagation::{NlosEnvironment, RadioConfig};

pub const SCHEMA: &str = "rltopa-scenario/1";

/// Fully resolved experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub venue: Venue,
    pub radio: RadioConfig,
    pub nlos: NlosEnvironment,
    pub mcs_table: McsTable,
    pub zone: PositioningZone,
    pub ues: Vec<UserEquipment>,
    pub baseline_position: Vec3,
    /// Distance of the four comparison positions from the chosen one, m.
    pub offset_m: f64,
    pub episode: EpisodeConfig,
    pub train: TrainConfig,
    pub network: NetworkConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TableSpec {
    Label(String),
    Inline(McsTable),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneBounds {
    min: Vec3,
    max: Vec3,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UeSpec {
    position: Vec3,
    b_i: f64,
    mcs_i: u32,
}

/// `count` users drawn uniformly over the venue floor at height `z`, skipping
/// building footprints. Demands cycle through `demands`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomUes {
    count: usize,
    seed: u64,
    #[serde(default = "default_ue_height")]
    z: f64,
    demands: Vec<DemandSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandSpec {
    b_i: f64,
    mcs_i: u32,
}

fn default_ue_height() -> f64 {
    1.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum UesSpec {
    Explicit(Vec<UeSpec>),
    Random(RandomUes),
}

fn default_offset() -> f64 {
    10.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: String,
    name: String,
    venue: Venue,
    #[serde(default)]
    radio: RadioConfig,
    #[serde(default)]
    nlos: NlosEnvironment,
    mcs_table: TableSpec,
    z_p: ZoneBounds,
    grid_size: f64,
    ues: UesSpec,
    baseline_position: Vec3,
    #[serde(default = "default_offset")]
    offset_m: f64,
    #[serde(default)]
    episode: EpisodeConfig,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default)]
    network: NetworkConfig,
}

/// The nine-building reference venue, 100 m side.
pub fn reference_venue() -> Venue {
    let rows: [(f64, f64, f64, f64, f64, u32); 9] = [
        (-5.0, 5.0, -5.0, 5.0, 20.0, 5),
        (-5.0, 5.0, 20.0, 30.0, 15.0, 4),
        (-5.0, 5.0, -30.0, -20.0, 15.0, 4),
        (-35.0, -25.0, -5.0, 5.0, 20.0, 5),
        (-35.0, -25.0, 20.0, 30.0, 20.0, 5),
        (-35.0, -25.0, -30.0, -20.0, 15.0, 4),
        (25.0, 35.0, -5.0, 5.0, 20.0, 5),
        (25.0, 35.0, 20.0, 30.0, 15.0, 4),
        (25.0, 35.0, -30.0, -20.0, 15.0, 4),
    ];
    let buildings = rows
        .iter()
        .map(|&(x0, x1, y0, y1, z1, floors)| Building {
            x_min: x0,
            x_max: x1,
            y_min: y0,
            y_max: y1,
            z_min: 0.0,
            z_max: z1,
            floors,
            x_rooms: 3,
            y_rooms: 2,
        })
        .collect();
    Venue {
        side_length: 100.0,
        buildings,
    }
}

/// Reference positioning zone: 100 m x 100 m, 25–100 m altitude, 1 m lattice.
pub fn reference_zone() -> PositioningZone {
    PositioningZone {
        min_corner: Vec3::new(-50.0, -50.0, 25.0),
        max_corner: Vec3::new(50.0, 50.0, 100.0),
        grid_size: 1.0,
    }
}

impl Scenario {
    /// Scenario with reference radio, zone, episode and training settings.
    pub fn with_defaults(name: &str, venue: Venue, ues: Vec<UserEquipment>) -> Self {
        Scenario {
            name: name.to_string(),
            venue,
            radio: RadioConfig::default(),
            nlos: NlosEnvironment::default(),
            mcs_table: McsTable::builtin(crate::mcs::VHT160_GI800_1SS).expect("built-in table"),
            zone: reference_zone(),
            ues,
            baseline_position: Vec3::new(0.0, 0.0, 20.0),
            offset_m: 10.0,
            episode: EpisodeConfig::default(),
            train: TrainConfig::default(),
            network: NetworkConfig::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
            Error::config(
                format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        Self::resolve(file)
    }

    fn resolve(file: ScenarioFile) -> Result<Self> {
        if file.schema != SCHEMA {
            return Err(Error::config(
                "schema",
                format!("expected {SCHEMA:?}, found {:?}", file.schema),
            ));
        }
        let mcs_table = match file.mcs_table {
            TableSpec::Label(label) => McsTable::builtin(&label).ok_or_else(|| {
                Error::config("mcs_table", format!("unknown built-in table {label:?}"))
            })?,
            TableSpec::Inline(t) => t,
        };
        let zone = PositioningZone {
            min_corner: file.z_p.min,
            max_corner: file.z_p.max,
            grid_size: file.grid_size,
        };
        let ues = match file.ues {
            UesSpec::Explicit(list) => list
                .into_iter()
                .enumerate()
                .map(|(i, u)| UserEquipment::new(i, u.position, u.b_i, u.mcs_i))
                .collect(),
            UesSpec::Random(spec) => place_random(&spec, &file.venue)?,
        };
        let scenario = Scenario {
            name: file.name,
            venue: file.venue,
            radio: file.radio,
            nlos: file.nlos,
            mcs_table,
            zone,
            ues,
            baseline_position: file.baseline_position,
            offset_m: file.offset_m,
            episode: file.episode,
            train: file.train,
            network: file.network,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.venue.validate()?;
        self.radio.validate()?;
        self.nlos
            .validate()
            .map_err(|e| Error::config("nlos", e.to_string()))?;
        self.mcs_table.validate()?;
        self.zone.validate()?;
        self.episode.validate()?;
        self.train.validate().map_err(|e| Error::config("train", e))?;
        self.network.validate().map_err(|e| Error::config("network", e))?;
        if self.ues.is_empty() {
            return Err(Error::config("ues", "at least one user is required"));
        }
        for (i, ue) in self.ues.iter().enumerate() {
            let path = format!("ues[{i}]");
            let p = ue.position;
            if !p.is_finite() {
                return Err(Error::config(path, "non-finite position"));
            }
            if !self.venue.contains_xy(p.x, p.y) || p.z < 0.0 {
                return Err(Error::config(path, format!("position {p} lies outside the venue")));
            }
            if p.z == 0.0 {
                return Err(Error::config(
                    path,
                    "antenna height must be above ground for the propagation model",
                ));
            }
            if let Some(b) = self.venue.building_containing(&p) {
                return Err(Error::config(
                    path,
                    format!("position {p} lies inside building {b}"),
                ));
            }
            if !(ue.demand_bps.is_finite() && ue.demand_bps > 0.0) {
                return Err(Error::config(format!("{path}.b_i"), "demand must be positive"));
            }
            let entry = self.mcs_table.entry(ue.demanded_mcs).map_err(|_| {
                Error::config(
                    format!("{path}.mcs_i"),
                    format!(
                        "MCS {} is not in table {:?}",
                        ue.demanded_mcs, self.mcs_table.label
                    ),
                )
            })?;
            if ue.demand_bps > entry.phy_rate_bps {
                return Err(Error::config(
                    format!("{path}.b_i"),
                    format!(
                        "demand {} bit/s exceeds the {} bit/s PHY rate of MCS {}",
                        ue.demand_bps, entry.phy_rate_bps, entry.index
                    ),
                ));
            }
        }
        if !self.baseline_position.is_finite() {
            return Err(Error::config("baseline_position", "non-finite position"));
        }
        if !(self.offset_m.is_finite() && self.offset_m > 0.0) {
            return Err(Error::config("offset_m", "must be positive"));
        }
        Ok(())
    }

    pub fn ue_positions(&self) -> Vec<Vec3> {
        self.ues.iter().map(|u| u.position).collect()
    }

    /// Same scenario with a different built-in MCS table, revalidated.
    pub fn with_mcs_table(&self, label: &str) -> Result<Self> {
        let table = McsTable::builtin(label)
            .ok_or_else(|| Error::config("mcs_table", format!("unknown built-in table {label:?}")))?;
        let mut s = self.clone();
        s.mcs_table = table;
        s.validate()?;
        Ok(s)
    }

    /// Resolved scenario as pretty JSON (inline table, explicit users).
    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            schema: SCHEMA.to_string(),
            name: self.name.clone(),
            venue: self.venue.clone(),
            radio: self.radio,
            nlos: self.nlos,
            mcs_table: TableSpec::Inline(self.mcs_table.clone()),
            z_p: ZoneBounds {
                min: self.zone.min_corner,
                max: self.zone.max_corner,
            },
            grid_size: self.zone.grid_size,
            ues: UesSpec::Explicit(
                self.ues
                    .iter()
                    .map(|u| UeSpec {
                        position: u.position,
                        b_i: u.demand_bps,
                        mcs_i: u.demanded_mcs,
                    })
                    .collect(),
            ),
            baseline_position: self.baseline_position,
            offset_m: self.offset_m,
            episode: self.episode,
            train: self.train.clone(),
            network: self.network,
        };
        serde_json::to_string_pretty(&file).expect("scenario serializes")
    }

    /// Scenario with every user's demand and MCS replaced, positions kept.
    pub fn with_demands(&self, demands: &[(f64, u32)]) -> Result<Self> {
        if demands.len() != self.ues.len() {
            return Err(Error::LengthMismatch {
                expected: self.ues.len(),
                got: demands.len(),
            });
        }
        let mut s = self.clone();
        for (ue, &(b, m)) in s.ues.iter_mut().zip(demands) {
            ue.demand_bps = b;
            ue.demanded_mcs = m;
        }
        s.validate()?;
        Ok(s)
    }
}

fn place_random(spec: &RandomUes, venue: &Venue) -> Result<Vec<UserEquipment>> {
    if spec.count == 0 {
        return Err(Error::config("ues.count", "must be at least 1"));
    }
    if spec.demands.is_empty() {
        return Err(Error::config("ues.demands", "at least one demand is required"));
    }
    let h = venue.half_side();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    let mut attempts = 0usize;
    while out.len() < spec.count {
        attempts += 1;
        if attempts > 1_000_000 {
            return Err(Error::config("ues", "could not place users outside buildings"));
        }
        let x = rng.random_range(-h..=h);
        let y = rng.random_range(-h..=h);
        let p = Vec3::new(x, y, spec.z);
        if venue.buildings.iter().any(|b| b.footprint_contains(x, y)) {
            continue;
        }
        let d = &spec.demands[out.len() % spec.demands.len()];
        out.push(UserEquipment::new(out.len(), p, d.b_i, d.mcs_i));
    }
    Ok(out)
}

