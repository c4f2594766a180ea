//! Link budgets: free-space SNR and its inversion, ITU-R P.1411 line-of-sight
//! and over-rooftop losses, and per-link SNR.
//!
//! Distances are metres, powers dBm, frequency Hz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{line_of_sight, Vec3, Venue};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    #[serde(rename = "f_hz")]
    pub frequency_hz: f64,
    #[serde(rename = "p_t_dbm")]
    pub tx_power_dbm: f64,
    #[serde(rename = "p_n_dbm")]
    pub noise_floor_dbm: f64,
    pub bandwidth_mhz: u32,
    pub guard_interval_ns: u32,
    /// Per-antenna gain; both ends of a link carry it.
    pub antenna_gain_dbi: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            frequency_hz: 5.25e9,
            tx_power_dbm: 20.0,
            noise_floor_dbm: -85.0,
            bandwidth_mhz: 20,
            guard_interval_ns: 800,
            antenna_gain_dbi: 0.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz.is_finite() && self.frequency_hz > 0.0) {
            return Err(Error::config("radio.f_hz", "must be positive"));
        }
        if !matches!(self.bandwidth_mhz, 20 | 40 | 80 | 160) {
            return Err(Error::config("radio.bandwidth_mhz", "must be 20, 40, 80 or 160"));
        }
        for (v, path) in [
            (self.tx_power_dbm, "radio.p_t_dbm"),
            (self.noise_floor_dbm, "radio.p_n_dbm"),
            (self.antenna_gain_dbi, "radio.antenna_gain_dbi"),
        ] {
            if !v.is_finite() {
                return Err(Error::config(path, "must be finite"));
            }
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    /// Combined transmit and receive antenna gain, dB.
    pub fn link_gain_db(&self) -> f64 {
        2.0 * self.antenna_gain_dbi
    }
}

/// Street-canyon parameters for the over-rooftop model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlosEnvironment {
    /// Average rooftop height h_r, m.
    pub h_r: f64,
    /// Street width w, m.
    pub w: f64,
    /// Building separation b, m.
    pub b: f64,
    /// Street orientation relative to the direct path, degrees in [0, 90].
    pub phi_deg: f64,
    /// Metropolitan centre (true) or medium city / suburban (false).
    #[serde(default)]
    pub metropolitan: bool,
}

impl Default for NlosEnvironment {
    fn default() -> Self {
        NlosEnvironment {
            h_r: 17.5,
            w: 20.0,
            b: 30.0,
            phi_deg: 45.0,
            metropolitan: false,
        }
    }
}

impl NlosEnvironment {
    pub fn validate(&self) -> Result<()> {
        for (v, path) in [(self.h_r, "nlos.h_r"), (self.w, "nlos.w"), (self.b, "nlos.b")] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!("{path} must be positive")));
            }
        }
        if !(0.0..=90.0).contains(&self.phi_deg) {
            return Err(Error::InvalidGeometry("nlos.phi_deg must lie in [0, 90]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub snr_db: f64,
    pub los: bool,
}

/// `K = -20 log10(f) - 20 log10(4π/c) - P_N`.
pub fn friis_constant(radio: &RadioConfig) -> f64 {
    -20.0 * radio.frequency_hz.log10()
        - 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT).log10()
        - radio.noise_floor_dbm
}

/// Free-space SNR at distance `d`.
pub fn friis_snr(d: f64, radio: &RadioConfig) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidGeometry(format!("distance {d} must be positive")));
    }
    Ok(radio.tx_power_dbm - 20.0 * d.log10() + friis_constant(radio))
}

/// Largest distance at which the free-space SNR still reaches `snr_min`.
pub fn friis_max_distance(snr_min: f64, radio: &RadioConfig) -> f64 {
    10f64.powf((friis_constant(radio) + radio.tx_power_dbm - snr_min) / 20.0)
}

fn check_positive(values: &[(f64, &str)]) -> Result<()> {
    for &(v, name) in values {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidGeometry(format!("{name} = {v} must be positive")));
        }
    }
    Ok(())
}

/// Median two-slope line-of-sight loss below rooftop.
pub fn itu1411_los_loss(d: f64, radio: &RadioConfig, h_uav: f64, h_ue: f64) -> Result<f64> {
    check_positive(&[(d, "distance"), (h_uav, "UAV height"), (h_ue, "UE height")])?;
    let lambda = radio.wavelength_m();
    let l_bp = (20.0 * (lambda * lambda / (8.0 * std::f64::consts::PI * h_uav * h_ue)).log10()).abs();
    let r_bp = 4.0 * h_uav * h_ue / lambda;
    let slope = if d <= r_bp { 20.0 } else { 40.0 };
    Ok(l_bp + 6.0 + slope * (d / r_bp).log10())
}

fn orientation_loss(phi: f64) -> f64 {
    if phi < 35.0 {
        -10.0 + 0.354 * phi
    } else if phi < 55.0 {
        2.5 + 0.075 * (phi - 35.0)
    } else {
        4.0 - 0.114 * (phi - 55.0)
    }
}

/// Over-rooftop loss before the line-of-sight clamp: free space plus
/// rooftop-to-street and multi-screen diffraction.
///
/// The whole path is taken to run over built-up blocks (the length `l` of
/// path covered by buildings equals `d`).
pub fn itu1411_nlos_unclamped(
    d: f64,
    radio: &RadioConfig,
    h_uav: f64,
    h_ue: f64,
    env: &NlosEnvironment,
) -> Result<f64> {
    check_positive(&[(d, "distance"), (h_uav, "UAV height"), (h_ue, "UE height")])?;
    env.validate()?;
    let (h_base, h_mobile) = if h_uav >= h_ue { (h_uav, h_ue) } else { (h_ue, h_uav) };
    let dh_mobile = env.h_r - h_mobile;
    if dh_mobile <= 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "mobile height {h_mobile} must sit below the rooftop height {}",
            env.h_r
        )));
    }
    let dh_base = h_base - env.h_r;
    if dh_base.abs() < 1e-6 {
        return Err(Error::InvalidGeometry(
            "base height coincides with the rooftop height".into(),
        ));
    }

    let f_mhz = radio.frequency_hz / 1e6;
    let lambda = radio.wavelength_m();
    let (w, b) = (env.w, env.b);

    let l_bf = 32.4 + 20.0 * (d / 1000.0).log10() + 20.0 * f_mhz.log10();
    let l_rts = -8.2 - 10.0 * w.log10() + 10.0 * f_mhz.log10() + 20.0 * dh_mobile.log10()
        + orientation_loss(env.phi_deg);

    let d_s = lambda * d * d / (dh_base * dh_base);
    let covered = d;
    let l_msd = if covered > d_s {
        let above = h_base > env.h_r;
        let l_bsh = if above { -18.0 * (1.0 + dh_base).log10() } else { 0.0 };
        let k_a = if above {
            54.0
        } else if d >= 500.0 {
            54.0 - 0.8 * dh_base
        } else {
            54.0 - 1.6 * dh_base * d / 1000.0
        };
        let k_d = if above { 18.0 } else { 18.0 - 15.0 * dh_base / env.h_r };
        let k_f = if env.metropolitan {
            -8.0 + 4.0 * (f_mhz / 925.0 - 1.0)
        } else {
            -8.0 + 1.5 * (f_mhz / 925.0 - 1.0)
        };
        l_bsh + k_a + k_d * (d / 1000.0).log10() + k_f * f_mhz.log10() - 9.0 * b.log10()
    } else {
        let f_ghz = f_mhz / 1000.0;
        let sqrt_b_lambda = (b / lambda).sqrt();
        let dh_upper = 10f64.powf(
            -sqrt_b_lambda.log10() - d.log10() / 9.0 + (10.0 / 9.0) * (b / 2.35).log10(),
        );
        let dh_lower = (0.00023 * b * b - 0.1827 * b - 9.4978) / f_ghz.log10().powf(2.938)
            + 0.000781 * b
            + 0.06923;
        let q_m = if h_base > env.h_r + dh_upper {
            2.35 * (dh_base / d * sqrt_b_lambda).powf(0.9)
        } else if h_base >= env.h_r + dh_lower {
            b / d
        } else {
            // Magnitude of the diffraction angle keeps Q_M positive below rooftop.
            let theta = (dh_base.abs() / b).atan();
            let rho = (dh_base * dh_base + b * b).sqrt();
            b / (2.0 * std::f64::consts::PI * d)
                * (lambda / rho).sqrt()
                * (1.0 / theta - 1.0 / (2.0 * std::f64::consts::PI + theta))
        };
        -10.0 * (q_m * q_m).log10()
    };

    let excess = l_rts + l_msd;
    Ok(if excess > 0.0 { l_bf + excess } else { l_bf })
}

/// Over-rooftop loss, never below the line-of-sight loss at the same distance.
pub fn itu1411_nlos_rooftop_loss(
    d: f64,
    radio: &RadioConfig,
    h_uav: f64,
    h_ue: f64,
    env: &NlosEnvironment,
) -> Result<f64> {
    let nlos = itu1411_nlos_unclamped(d, radio, h_uav, h_ue, env)?;
    let los = itu1411_los_loss(d, radio, h_uav, h_ue)?;
    Ok(nlos.max(los))
}

/// Distance, visibility, loss and SNR for the UAV–user link.
pub fn link_budget(
    uav: Vec3,
    ue: Vec3,
    venue: &Venue,
    radio: &RadioConfig,
    env: &NlosEnvironment,
) -> Result<LinkBudget> {
    let los = line_of_sight(uav, ue, venue)?;
    link_budget_with_visibility(uav, ue, los, radio, env)
}

/// As [`link_budget`], with the visibility already known.
pub fn link_budget_with_visibility(
    uav: Vec3,
    ue: Vec3,
    los: bool,
    radio: &RadioConfig,
    env: &NlosEnvironment,
) -> Result<LinkBudget> {
    let d = uav.distance(&ue);
    let path_loss_db = if los {
        itu1411_los_loss(d, radio, uav.z, ue.z)?
    } else {
        itu1411_nlos_rooftop_loss(d, radio, uav.z, ue.z, env)?
    };
    let snr_db = radio.tx_power_dbm - path_loss_db - radio.noise_floor_dbm + radio.link_gain_db();
    Ok(LinkBudget {
        distance_m: d,
        path_loss_db,
        snr_db,
        los,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Building;

    fn radio() -> RadioConfig {
        RadioConfig::default()
    }

    #[test]
    fn friis_reference_values() {
        let r = radio();
        let s1 = friis_snr(1.0, &r).unwrap();
        assert!((s1 - 58.1498).abs() < 1e-3, "{s1}");
        let s10 = friis_snr(10.0, &r).unwrap();
        assert!((s1 - s10 - 20.0).abs() < 1e-12);
        let s20 = friis_snr(20.0, &r).unwrap();
        assert!((s10 - s20 - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((20.0 * 2f64.log10() - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn friis_rejects_non_positive_distance() {
        assert!(friis_snr(0.0, &radio()).is_err());
        assert!(friis_snr(-1.0, &radio()).is_err());
    }

    #[test]
    fn friis_inverse_values() {
        let r = radio();
        let s1 = friis_snr(1.0, &r).unwrap();
        assert!((friis_max_distance(s1, &r) - 1.0).abs() < 1e-12);
        // 58.1498 is the rounded 1 m SNR; the exact value is 58.14903.
        assert!((friis_max_distance(58.1498, &r) - 0.999_911).abs() < 1e-6);
        assert!((friis_max_distance(25.0, &r) - 45.45).abs() < 0.01);
        assert!((friis_max_distance(5.0, &r) - 454.413_824_689).abs() < 1e-6);
    }

    #[test]
    fn itu_golden_values() {
        // Independent high-precision evaluation of the closed forms.
        let r = radio();
        let los = itu1411_los_loss(100.0, &r, 30.0, 1.5).unwrap();
        assert!((los - 86.830_369_376_722_89).abs() < 1e-9, "{los}");
        let env = NlosEnvironment::default();
        let nlos = itu1411_nlos_rooftop_loss(100.0, &r, 30.0, 1.5, &env).unwrap();
        assert!((nlos - 128.816_892_792_883_36).abs() < 1e-9, "{nlos}");
        let metro = NlosEnvironment { metropolitan: true, ..env };
        let nlos = itu1411_nlos_rooftop_loss(100.0, &r, 30.0, 1.5, &metro).unwrap();
        assert!((nlos - 172.302_538_704_317_86).abs() < 1e-9, "{nlos}");
    }

    #[test]
    fn los_branches_meet_at_breakpoint() {
        let r = radio();
        let (h1, h2) = (30.0, 1.5);
        let r_bp = 4.0 * h1 * h2 / r.wavelength_m();
        let below = itu1411_los_loss(r_bp * (1.0 - 1e-12), &r, h1, h2).unwrap();
        let above = itu1411_los_loss(r_bp * (1.0 + 1e-12), &r, h1, h2).unwrap();
        assert!((below - above).abs() < 1e-6);
    }

    #[test]
    fn los_rejects_bad_heights() {
        assert!(itu1411_los_loss(10.0, &radio(), 0.0, 1.5).is_err());
        assert!(itu1411_los_loss(10.0, &radio(), 30.0, -1.0).is_err());
    }

    #[test]
    fn nlos_rejects_invalid_geometry() {
        let env = NlosEnvironment::default();
        // Mobile above rooftop.
        assert!(itu1411_nlos_rooftop_loss(100.0, &radio(), 60.0, 18.0, &env).is_err());
        let bad = NlosEnvironment { w: 0.0, ..env };
        assert!(itu1411_nlos_rooftop_loss(100.0, &radio(), 60.0, 1.5, &bad).is_err());
        let bad = NlosEnvironment { phi_deg: 120.0, ..env };
        assert!(itu1411_nlos_rooftop_loss(100.0, &radio(), 60.0, 1.5, &bad).is_err());
    }

    #[test]
    fn link_budget_uses_los_branch_without_buildings() {
        let r = radio();
        let env = NlosEnvironment::default();
        let lb = link_budget(
            Vec3::new(0.0, 0.0, 30.0),
            Vec3::new(40.0, 30.0, 1.5),
            &Venue::empty(100.0),
            &r,
            &env,
        )
        .unwrap();
        assert!(lb.los);
        let expected = itu1411_los_loss(lb.distance_m, &r, 30.0, 1.5).unwrap();
        assert_eq!(lb.path_loss_db, expected);
        assert_eq!(
            lb.snr_db + lb.path_loss_db - r.tx_power_dbm + r.noise_floor_dbm - r.link_gain_db(),
            0.0
        );
    }

    #[test]
    fn blocked_link_uses_rooftop_branch() {
        let r = radio();
        let env = NlosEnvironment::default();
        let venue = Venue::new(
            100.0,
            vec![Building::from_bounds(Vec3::new(-5.0, -5.0, 0.0), Vec3::new(5.0, 5.0, 20.0))],
        )
        .unwrap();
        let uav = Vec3::new(0.0, -40.0, 25.0);
        let ue = Vec3::new(0.0, 40.0, 1.5);
        let blocked = link_budget(uav, ue, &venue, &r, &env).unwrap();
        let clear = link_budget(uav, ue, &Venue::empty(100.0), &r, &env).unwrap();
        assert!(!blocked.los && clear.los);
        assert_eq!(blocked.distance_m, clear.distance_m);
        assert!(blocked.snr_db < clear.snr_db);
    }
}
