//! Property tests over the geometry, propagation, feasibility and learning
//! building blocks.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rltopa::distribution::{distribution, DistributionKind};
use rltopa::dqn::{argmax, EpsilonSchedule, QNetwork, ReplayBuffer, Transition};
use rltopa::env::Observation;
use rltopa::feasibility::{feasible_grid_points, FeasibleRegion, UserEquipment};
use rltopa::geometry::{count_los, grid_points, line_of_sight, PositioningZone, Vec3};
use rltopa::mcs::{select_mcs, McsTable, VHT160_GI800_1SS};
use rltopa::network_model::{airtime_allocation, jain_fairness};
use rltopa::propagation::{
    friis_max_distance, friis_snr, itu1411_los_loss, itu1411_nlos_rooftop_loss, NlosEnvironment, RadioConfig,
};
use rltopa::scenario::reference_venue;

fn point(lo_z: f64, hi_z: f64) -> impl Strategy<Value = Vec3> {
    (-50.0..50.0f64, -50.0..50.0f64, lo_z..hi_z).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn table() -> McsTable {
    McsTable::builtin(VHT160_GI800_1SS).unwrap()
}

proptest! {
    #[test]
    fn line_of_sight_is_symmetric(a in point(0.5, 100.0), b in point(0.5, 100.0)) {
        let venue = reference_venue();
        prop_assert_eq!(
            line_of_sight(a, b, &venue).unwrap(),
            line_of_sight(b, a, &venue).unwrap()
        );
    }

    #[test]
    fn los_count_is_bounded(uav in point(25.0, 100.0), ues in prop::collection::vec(point(1.0, 2.0), 1..12)) {
        let n = count_los(uav, &ues, &reference_venue()).unwrap();
        prop_assert!(n <= ues.len());
    }

    #[test]
    fn high_enough_uav_sees_everyone(x in -50.0..50.0f64, y in -50.0..50.0f64, ues in prop::collection::vec(point(21.0, 22.0), 1..6)) {
        // Every reference building is at most 20 m tall.
        let uav = Vec3::new(x, y, 30.0);
        prop_assert_eq!(count_los(uav, &ues, &reference_venue()).unwrap(), ues.len());
    }

    #[test]
    fn lattice_points_are_unique_and_inside(
        min in point(0.0, 50.0),
        ext in (1.0..20.0f64, 1.0..20.0f64, 1.0..20.0f64),
        grid in 0.5..5.0f64,
    ) {
        let max = min + Vec3::new(ext.0, ext.1, ext.2);
        let zone = PositioningZone::new(min, max, grid).unwrap();
        let pts = grid_points(&zone);
        prop_assert_eq!(pts.len(), zone.len());
        prop_assert!(pts.iter().all(|p| zone.contains(p)));
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.lex_cmp(b));
        sorted.dedup();
        prop_assert_eq!(sorted.len(), pts.len());
    }

    #[test]
    fn friis_round_trip(d in 0.01..5000.0f64, p_t in -10.0..30.0f64, f in 1e9..6e9f64) {
        let radio = RadioConfig { tx_power_dbm: p_t, frequency_hz: f, ..RadioConfig::default() };
        let back = friis_max_distance(friis_snr(d, &radio).unwrap(), &radio);
        prop_assert!((back - d).abs() <= 1e-9 * d);
    }

    #[test]
    fn friis_snr_falls_with_distance(d in 0.1..1000.0f64, k in 1.01..10.0f64) {
        let radio = RadioConfig::default();
        prop_assert!(friis_snr(d * k, &radio).unwrap() < friis_snr(d, &radio).unwrap());
    }

    #[test]
    fn itu_losses_grow_with_distance_and_nlos_dominates(
        d in 1.0..300.0f64,
        k in 1.01..3.0f64,
        h_uav in 20.0..100.0f64,
        h_ue in 1.0..3.0f64,
    ) {
        let radio = RadioConfig::default();
        let env = NlosEnvironment::default();
        let los = itu1411_los_loss(d, &radio, h_uav, h_ue).unwrap();
        let los_far = itu1411_los_loss(d * k, &radio, h_uav, h_ue).unwrap();
        prop_assert!(los_far > los);
        let nlos = itu1411_nlos_rooftop_loss(d, &radio, h_uav, h_ue, &env).unwrap();
        prop_assert!(nlos >= los);
    }

    #[test]
    fn mcs_selection_is_monotone(a in -10.0..60.0f64, b in -10.0..60.0f64) {
        let t = table();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let rate = |s: f64| select_mcs(s, &t).map_or(0.0, |e| e.phy_rate_bps);
        prop_assert!(rate(lo) <= rate(hi));
        if let Some(e) = select_mcs(hi, &t) {
            prop_assert!(e.min_snr_db <= hi);
        }
    }

    #[test]
    fn adding_a_user_never_grows_the_feasible_set(
        ues in prop::collection::vec((point(1.0, 2.0), 0u32..9), 1..5),
        extra in (point(1.0, 2.0), 0u32..9),
    ) {
        let radio = RadioConfig::default();
        let t = table();
        let zone = PositioningZone::new(Vec3::new(-50.0, -50.0, 25.0), Vec3::new(50.0, 50.0, 100.0), 5.0).unwrap();
        let mk = |list: &[(Vec3, u32)]| -> Vec<UserEquipment> {
            list.iter().enumerate().map(|(i, (p, m))| UserEquipment::new(i, *p, 1e6, *m)).collect()
        };
        let base = mk(&ues);
        let mut more_list = ues.clone();
        more_list.push(extra);
        let more = mk(&more_list);
        let region = FeasibleRegion::new(&base, &radio, &t, zone).unwrap();
        let region_more = FeasibleRegion::new(&more, &radio, &t, zone).unwrap();
        let before = feasible_grid_points(&region, &base, &zone).unwrap();
        let after = feasible_grid_points(&region_more, &more, &zone).unwrap();
        prop_assert!(after.len() <= before.len());
        prop_assert!(after.iter().all(|p| before.contains(p)));
    }

    #[test]
    fn epsilon_stays_in_bounds_and_never_rises(
        start in 0.0..1.0f64,
        frac in 0.0..1.0f64,
        power in 0.25..4.0f64,
        horizon in 1usize..10_000,
        step in 0usize..20_000,
    ) {
        let s = EpsilonSchedule { start, end: start * frac, power, horizon };
        let v = s.value(step);
        prop_assert!(v >= s.end && v <= s.start);
        prop_assert!(s.value(step + 1) <= v);
    }

    #[test]
    fn replay_keeps_the_newest(cap in 1usize..50, pushes in 0usize..200) {
        let mut buf = ReplayBuffer::new(cap);
        let obs = Observation([0.0; 5]);
        for i in 0..pushes {
            buf.push(Transition { obs, action: 0, reward: i as f64, next_obs: obs, done: false });
        }
        prop_assert_eq!(buf.len(), pushes.min(cap));
        let kept: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        let expected: Vec<f64> = (pushes.saturating_sub(cap)..pushes).map(|i| i as f64).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn argmax_ignores_a_common_shift(values in prop::collection::vec(-10.0..10.0f64, 7), shift in -5.0..5.0f64) {
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let i = argmax(&values);
        prop_assert!(values.iter().all(|v| *v <= values[i]));
        // A shift can only merge near ties through rounding, so compare values.
        prop_assert!((shifted[argmax(&shifted)] - shifted[i]).abs() < 1e-12);
    }

    #[test]
    fn airtime_scales_delivery_consistently(
        links in prop::collection::vec((1e6..1e9f64, 1e5..5e8f64), 1..12),
    ) {
        let rates: Vec<f64> = links.iter().map(|l| l.0).collect();
        let demands: Vec<f64> = links.iter().map(|l| l.1).collect();
        let a = airtime_allocation(&rates, &demands).unwrap();
        let scale = if a.total_airtime <= 1.0 { 1.0 } else { 1.0 / a.total_airtime };
        for (r, b) in a.achieved.iter().zip(&demands) {
            prop_assert!(*r <= b * (1.0 + 1e-12));
            prop_assert!((r - b * scale).abs() <= 1e-9 * b);
        }
        let j = jain_fairness(&a.achieved, &demands);
        prop_assert!(j > 1.0 - 1e-12 && j <= 1.0 + 1e-12);
    }

    #[test]
    fn distributions_are_monotone(samples in prop::collection::vec(-100.0..100.0f64, 1..200)) {
        let cdf = distribution(&samples, DistributionKind::Cdf).unwrap();
        prop_assert!(cdf.len() == samples.len() && cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        prop_assert!((cdf.last().unwrap().1 - 1.0).abs() < 1e-12);
        let ccdf = distribution(&samples, DistributionKind::Ccdf).unwrap();
        prop_assert!(ccdf.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert!(ccdf.iter().all(|(_, p)| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn forward_matches_a_plain_matrix_evaluator(seed in any::<u64>(), input in prop::array::uniform5(-1.0..1.0f64)) {
        let dims = [5, 32, 32, 7];
        let net = QNetwork::glorot(&dims, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let p = net.params();
        let mut x = input.to_vec();
        let mut off = 0;
        for l in 0..3 {
            let (n_in, n_out) = (dims[l], dims[l + 1]);
            let w = &p[off..off + n_in * n_out];
            let b = &p[off + n_in * n_out..off + n_in * n_out + n_out];
            x = (0..n_out)
                .map(|j| {
                    let s: f64 = b[j] + (0..n_in).map(|i| w[j * n_in + i] * x[i]).sum::<f64>();
                    if l < 2 { s.max(0.0) } else { s }
                })
                .collect();
            off += n_in * n_out + n_out;
        }
        let y = net.forward(&input);
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }
}
