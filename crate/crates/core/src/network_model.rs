//! Surrogate shared-medium network model: per-link PHY rate from the link
//! budget, proportional airtime sharing, queueing delay and Jain fairness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::UserEquipment;
use crate::geometry::{Vec3, Venue};
use crate::mcs::{select_mcs, McsTable};
use crate::propagation::{link_budget, NlosEnvironment, RadioConfig};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Packet size used for the delay estimate, bits.
    pub packet_bits: f64,
    /// Delay assigned to dead links and to every link once the medium
    /// saturates; also the upper bound on any delay, s.
    pub delay_cap_s: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            packet_bits: 11_200.0,
            delay_cap_s: 1.0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.packet_bits.is_finite() && self.packet_bits > 0.0) {
            return Err("network.packet_bits must be positive".into());
        }
        if !(self.delay_cap_s.is_finite() && self.delay_cap_s > 0.0) {
            return Err("network.delay_cap_s must be positive".into());
        }
        Ok(())
    }
}

/// PHY rate the link can sustain, 0 when no MCS clears its threshold.
pub fn per_link_rate(
    uav: Vec3,
    ue: &UserEquipment,
    venue: &Venue,
    radio: &RadioConfig,
    env: &NlosEnvironment,
    table: &McsTable,
) -> Result<f64> {
    let budget = link_budget(uav, ue.position, venue, radio, env)?;
    Ok(select_mcs(budget.snr_db, table).map_or(0.0, |e| e.phy_rate_bps))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub rates: Vec<f64>,
    pub demands: Vec<f64>,
    /// Airtime fraction each link asks for; infinite for dead links.
    pub airtime: Vec<f64>,
    /// Sum of airtime over live links.
    pub total_airtime: f64,
    pub achieved: Vec<f64>,
}

impl Allocation {
    pub fn saturated(&self) -> bool {
        self.total_airtime >= 1.0
    }

    pub fn aggregate(&self) -> f64 {
        self.achieved.iter().sum()
    }
}

/// Proportional airtime sharing: demands are met while the live links fit in
/// the medium, otherwise every live link is scaled by the same factor.
pub fn airtime_allocation(rates: &[f64], demands: &[f64]) -> Result<Allocation> {
    if rates.len() != demands.len() {
        return Err(Error::LengthMismatch {
            expected: demands.len(),
            got: rates.len(),
        });
    }
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::NonFinite("link rate"));
    }
    if demands.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::NonFinite("demand"));
    }
    let airtime: Vec<f64> = rates
        .iter()
        .zip(demands)
        .map(|(r, b)| if *r > 0.0 { b / r } else { f64::INFINITY })
        .collect();
    let total_airtime: f64 = airtime.iter().filter(|a| a.is_finite()).sum();
    let scale = if total_airtime <= 1.0 { 1.0 } else { 1.0 / total_airtime };
    let achieved = rates
        .iter()
        .zip(demands)
        .map(|(r, b)| if *r > 0.0 { b * scale } else { 0.0 })
        .collect();
    Ok(Allocation {
        rates: rates.to_vec(),
        demands: demands.to_vec(),
        airtime,
        total_airtime,
        achieved,
    })
}

/// Per-user delay: transmission time inflated by `1 / (1 - A)` on an
/// unsaturated medium, the cap otherwise. The cap also bounds the inflated
/// value, which diverges as `A` approaches 1.
pub fn per_user_delay(alloc: &Allocation, config: &NetworkConfig) -> Vec<f64> {
    let saturated = alloc.saturated();
    alloc
        .rates
        .iter()
        .map(|r| {
            if saturated || *r <= 0.0 {
                config.delay_cap_s
            } else {
                ((config.packet_bits / r) / (1.0 - alloc.total_airtime)).min(config.delay_cap_s)
            }
        })
        .collect()
}

pub fn mean_delay(alloc: &Allocation, config: &NetworkConfig) -> f64 {
    let d = per_user_delay(alloc, config);
    if d.is_empty() {
        return 0.0;
    }
    d.iter().sum::<f64>() / d.len() as f64
}

/// Jain index over `achieved / demand`; 0 when nobody is served.
pub fn jain_fairness(achieved: &[f64], demands: &[f64]) -> f64 {
    let u: Vec<f64> = achieved.iter().zip(demands).map(|(r, b)| r / b).collect();
    let sum: f64 = u.iter().sum();
    let sum_sq: f64 = u.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 || u.is_empty() {
        return 0.0;
    }
    sum * sum / (u.len() as f64 * sum_sq)
}

/// Upper bound on aggregate capacity: every user at the table's top rate.
pub fn capacity_max(users: usize, table: &McsTable) -> f64 {
    users as f64 * table.top_rate_bps()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkMetrics {
    pub position: Vec3,
    pub link_rates_bps: Vec<f64>,
    pub achieved_bps: Vec<f64>,
    pub aggregate_throughput_bps: f64,
    pub mean_delay_s: f64,
    pub jain_fairness: f64,
    pub saturated: bool,
    pub total_airtime: f64,
    pub nlos: usize,
}

/// Link rates from `position` to every user of `scenario`.
pub fn link_rates(scenario: &Scenario, position: Vec3) -> Result<Vec<f64>> {
    scenario
        .ues
        .iter()
        .map(|ue| {
            per_link_rate(
                position,
                ue,
                &scenario.venue,
                &scenario.radio,
                &scenario.nlos,
                &scenario.mcs_table,
            )
        })
        .collect()
}

pub fn metrics_at(scenario: &Scenario, position: Vec3) -> Result<NetworkMetrics> {
    let rates = link_rates(scenario, position)?;
    let demands: Vec<f64> = scenario.ues.iter().map(|u| u.demand_bps).collect();
    let alloc = airtime_allocation(&rates, &demands)?;
    let nlos = crate::geometry::count_los(position, &scenario.ue_positions(), &scenario.venue)?;
    Ok(NetworkMetrics {
        position,
        aggregate_throughput_bps: alloc.aggregate(),
        mean_delay_s: mean_delay(&alloc, &scenario.network),
        jain_fairness: jain_fairness(&alloc.achieved, &alloc.demands),
        saturated: alloc.saturated(),
        total_airtime: alloc.total_airtime,
        link_rates_bps: alloc.rates,
        achieved_bps: alloc.achieved,
        nlos,
    })
}

/// Aggregate surrogate throughput at `position`.
pub fn surrogate_throughput(scenario: &Scenario, position: Vec3) -> Result<f64> {
    let rates = link_rates(scenario, position)?;
    let demands: Vec<f64> = scenario.ues.iter().map(|u| u.demand_bps).collect();
    Ok(airtime_allocation(&rates, &demands)?.aggregate())
}
