//! Scenario description, its TOML document form, and the built-in preset of
//! simulation parameters.
//!
//! An empty document yields the preset. Unknown keys are rejected.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geoloc::{CarGeometry, Pair, TieRule};
use crate::signal::{NoiseSpec, TransmitterSpec};
use crate::speed::SpeedMode;

/// Per-second arrival count: a normal draw rounded to the nearest
/// non-negative integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub mean: f64,
    pub std: f64,
}

impl RateSpec {
    pub const ZERO: RateSpec = RateSpec { mean: 0.0, std: 0.0 };

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.mean <= 0.0 && self.std <= 0.0 {
            return 0;
        }
        let v = if self.std > 0.0 {
            Normal::new(self.mean, self.std).expect("validated").sample(rng)
        } else {
            self.mean
        };
        v.round().max(0.0) as u32
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !self.mean.is_finite() || !(self.std >= 0.0) || !self.std.is_finite() {
            return Err(Error::validation(field, "mean must be finite and std >= 0"));
        }
        Ok(())
    }
}

/// Normal speed distribution, truncated to strictly positive draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedDist {
    pub mean: f64,
    pub std: f64,
}

impl SpeedDist {
    /// Draws until the value exceeds 5% of the mean.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.std == 0.0 {
            return self.mean;
        }
        let n = Normal::new(self.mean, self.std).expect("validated");
        loop {
            let v = n.sample(rng);
            if v > 0.05 * self.mean {
                return v;
            }
        }
    }

    fn validate(&self, field: &str) -> Result<()> {
        if !(self.mean > 0.0) || !(self.std >= 0.0) {
            return Err(Error::validation(field, "mean must be > 0 and std >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreetConfig {
    /// Curb-to-curb width `W` (m), parking lane included.
    pub width: f64,
    pub length: f64,
    pub sidewalk_width: f64,
    pub v_max: f64,
    /// Lateral band `[lo, hi)` of the lane approaching cars drive in.
    pub travel_lane: [f64; 2],
}

impl Default for StreetConfig {
    fn default() -> Self {
        StreetConfig {
            width: 12.8,
            length: 500.0,
            sidewalk_width: 3.0,
            v_max: 15.0,
            travel_lane: [2.6, 6.1],
        }
    }
}

/// Regular chain of identical parked cars, optionally with holes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Front transceiver line of the most upstream car.
    pub start_x: f64,
    pub count: u32,
    /// Front-to-front distance between neighbours.
    pub spacing: f64,
    pub car_length: f64,
    pub car_width: f64,
    pub sidewalk_gap: f64,
    /// Indices of cars removed from the regular layout.
    pub missing: Vec<u32>,
    /// Largest front-to-front distance two neighbours can relay across.
    pub link_range: f64,
    /// Explicit front positions; when non-empty this replaces the regular layout.
    pub positions: Vec<f64>,
    /// Frontage width in which crossings happen, at most the gap to the next car.
    pub frontage: f64,
    /// Let pedestrians cross behind the most upstream car (watched by its rear pair).
    pub rear_crossings: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            start_x: 60.0,
            count: 62,
            spacing: 7.0,
            car_length: 4.5,
            car_width: 1.8,
            sidewalk_gap: 0.4,
            missing: Vec::new(),
            link_range: 15.0,
            positions: Vec::new(),
            frontage: 2.5,
            rear_crossings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PedestrianConfig {
    /// Pedestrians starting a crossing, per second.
    pub arrival: RateSpec,
    pub speed: SpeedDist,
    /// Tentative speed of a newly seen tail.
    pub v0: f64,
    /// Plausible walking speeds; measured tail speeds are clamped into it.
    pub tail_speed_range: [f64; 2],
    /// Mean of the exponential wait at the curb before stepping out (s).
    pub dwell_mean: f64,
    /// Pedestrians walking along the sidewalk without crossing, per second.
    pub walkers: RateSpec,
}

impl Default for PedestrianConfig {
    fn default() -> Self {
        PedestrianConfig {
            arrival: RateSpec {
                mean: 0.11,
                std: 0.32,
            },
            speed: SpeedDist {
                mean: 1.15,
                std: 0.13,
            },
            v0: 1.2,
            tail_speed_range: [0.5, 2.5],
            dwell_mean: 3.0,
            walkers: RateSpec {
                mean: 0.01,
                std: 0.1,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleConfig {
    pub arrival: RateSpec,
    /// Std of the cruising speed below the limit; 0 cruises at `v_max`.
    pub cruise_jitter: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        VehicleConfig {
            arrival: RateSpec { mean: 0.1, std: 0.3 },
            cruise_jitter: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub power: f64,
    pub frequency_ghz: f64,
    pub env_gamma: f64,
    pub sigma: f64,
    pub noise_seed: Option<u64>,
    pub m_slots: u32,
    /// A pair hears a shoe only when both its transceivers are within this range.
    pub rx_range: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        let tx = TransmitterSpec::default();
        RadioConfig {
            power: tx.power,
            frequency_ghz: tx.frequency_ghz,
            // calibrated: at gamma = 1 the 0.3 mW noise swamps the signal beyond ~1.5 m
            env_gamma: 7.0,
            sigma: NoiseSpec::default().sigma,
            noise_seed: None,
            m_slots: 50,
            rx_range: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertSource {
    /// Cautions carry the pipeline's estimates.
    #[default]
    Estimated,
    /// Cautions carry true crossing location and clear time, issued no later
    /// than the crossing starts.
    GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub reaction_r: f64,
    /// Caution reach from a parked car to a passing car (m).
    pub short_range: f64,
    pub tie_rule: TieRule,
    pub alert_source: AlertSource,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            reaction_r: 2.0,
            short_range: 15.0,
            tie_rule: TieRule::Sidewalk,
            alert_source: AlertSource::Estimated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub enabled: bool,
    pub mode: SpeedMode,
    /// Cars aim this far short of the reported crossing location (m).
    pub standoff: f64,
    /// Optional deceleration cap (m/s^2); unlimited when absent.
    pub max_decel: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            enabled: true,
            mode: SpeedMode::Reevaluate,
            standoff: 2.5,
            max_decel: None,
        }
    }
}

/// A pedestrian injected at a fixed tick instead of drawn from the arrival process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedPedestrian {
    pub tick: u32,
    pub x: f64,
    /// Lateral start position; negative is on the sidewalk.
    pub y: f64,
    pub speed: f64,
    #[serde(default)]
    pub dwell: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedVehicle {
    pub tick: u32,
    pub x: f64,
    pub cruise: f64,
}

/// Deliberate perturbations for exercising the acceptance harness.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Faults {
    /// Added to every classification threshold.
    pub threshold_bias: f64,
}

/// Full world description for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub ticks: u32,
    pub street: StreetConfig,
    pub chain: ChainConfig,
    pub pedestrians: PedestrianConfig,
    pub vehicles: VehicleConfig,
    pub radio: RadioConfig,
    pub protocol: ProtocolConfig,
    pub controller: ControllerConfig,
    #[serde(rename = "pedestrian")]
    pub scripted_pedestrians: Vec<ScriptedPedestrian>,
    #[serde(rename = "vehicle")]
    pub scripted_vehicles: Vec<ScriptedVehicle>,
    #[serde(skip)]
    pub faults: Faults,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::preset()
    }
}

/// A crossing location: the frontage watched by one pair of one parked car.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSite {
    pub car: usize,
    pub pair: Pair,
    /// Offsets from the pair line bounding where pedestrians step out.
    pub d_range: (f64, f64),
}

impl ScenarioConfig {
    /// One hour of traffic on the reference street.
    pub fn preset() -> Self {
        ScenarioConfig {
            seed: 1,
            ticks: 3600,
            street: StreetConfig::default(),
            chain: ChainConfig::default(),
            pedestrians: PedestrianConfig::default(),
            vehicles: VehicleConfig::default(),
            radio: RadioConfig::default(),
            protocol: ProtocolConfig::default(),
            controller: ControllerConfig::default(),
            scripted_pedestrians: Vec::new(),
            scripted_vehicles: Vec::new(),
            faults: Faults::default(),
        }
    }

    /// A street with parked cars and nothing else moving.
    pub fn empty_street() -> Self {
        let mut cfg = ScenarioConfig::preset();
        cfg.pedestrians.arrival = RateSpec::ZERO;
        cfg.pedestrians.walkers = RateSpec::ZERO;
        cfg.vehicles.arrival = RateSpec::ZERO;
        cfg
    }

    pub fn tx(&self) -> TransmitterSpec {
        TransmitterSpec {
            power: self.radio.power,
            frequency_ghz: self.radio.frequency_ghz,
            env_gamma: self.radio.env_gamma,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            sigma: self.radio.sigma,
            rng_seed: self.radio.noise_seed,
        }
    }

    /// Resolved parked cars, ordered upstream to downstream.
    pub fn parked_cars(&self) -> Vec<CarGeometry> {
        let c = &self.chain;
        let mut xs: Vec<f64> = if c.positions.is_empty() {
            (0..c.count)
                .filter(|i| !c.missing.contains(i))
                .map(|i| c.start_x + f64::from(i) * c.spacing)
                .collect()
        } else {
            c.positions.clone()
        };
        xs.sort_by(f64::total_cmp);
        xs.into_iter()
            .map(|x| CarGeometry {
                width_w: c.car_width,
                sidewalk_gap_z: c.sidewalk_gap,
                position_x: x,
                street_width_w: self.street.width,
                length: c.car_length,
            })
            .collect()
    }

    /// Every place a crossing may be drawn, in front of each car and behind the
    /// most upstream one.
    pub fn crossing_sites(&self) -> Vec<CrossingSite> {
        let cars = self.parked_cars();
        let mut sites = Vec::with_capacity(cars.len() + 1);
        let margin = 0.3;
        for (i, car) in cars.iter().enumerate() {
            let gap = cars
                .get(i + 1)
                .map(|next| next.rear_x() - car.position_x)
                .unwrap_or(self.chain.frontage);
            let width = gap.min(self.chain.frontage);
            if width > 2.0 * margin {
                sites.push(CrossingSite {
                    car: i,
                    pair: Pair::Front,
                    d_range: (margin, width - margin),
                });
            }
        }
        if self.chain.rear_crossings && !cars.is_empty() {
            sites.push(CrossingSite {
                car: 0,
                pair: Pair::Rear,
                d_range: (margin, self.chain.frontage - margin),
            });
        }
        sites
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.street;
        if !(s.v_max > 0.0) {
            return Err(Error::validation("street.v_max", "must be > 0"));
        }
        if !(s.length > 0.0) {
            return Err(Error::validation("street.length", "must be > 0"));
        }
        if !(s.sidewalk_width > 0.0) {
            return Err(Error::validation("street.sidewalk_width", "must be > 0"));
        }
        let c = &self.chain;
        if !(s.width > c.car_width + c.sidewalk_gap) {
            return Err(Error::validation(
                "street.width",
                format!(
                    "{} must exceed chain.car_width {} + chain.sidewalk_gap {}",
                    s.width, c.car_width, c.sidewalk_gap
                ),
            ));
        }
        let probe = CarGeometry {
            width_w: c.car_width,
            sidewalk_gap_z: c.sidewalk_gap,
            position_x: 0.0,
            street_width_w: s.width,
            length: c.car_length,
        };
        probe.validate("chain")?;
        if !(s.travel_lane[0] < s.travel_lane[1]) || s.travel_lane[1] > s.width || s.travel_lane[0] < 0.0 {
            return Err(Error::validation(
                "street.travel_lane",
                "must be an increasing band inside the street",
            ));
        }
        if c.positions.is_empty() && c.count > 0 && !(c.spacing > c.car_length) {
            return Err(Error::validation("chain.spacing", "must exceed chain.car_length"));
        }
        if !(c.link_range > 0.0) {
            return Err(Error::validation("chain.link_range", "must be > 0"));
        }
        if !(c.frontage >= 0.0) {
            return Err(Error::validation("chain.frontage", "must be >= 0"));
        }
        let p = &self.pedestrians;
        p.arrival.validate("pedestrians.arrival")?;
        p.walkers.validate("pedestrians.walkers")?;
        p.speed.validate("pedestrians.speed")?;
        if !(p.v0 > 0.0) {
            return Err(Error::validation("pedestrians.v0", "must be > 0"));
        }
        let [lo, hi] = p.tail_speed_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::validation(
                "pedestrians.tail_speed_range",
                "must satisfy 0 < lo <= hi",
            ));
        }
        if !(p.dwell_mean >= 0.0) {
            return Err(Error::validation("pedestrians.dwell_mean", "must be >= 0"));
        }
        self.vehicles.arrival.validate("vehicles.arrival")?;
        if !(self.vehicles.cruise_jitter >= 0.0) {
            return Err(Error::validation("vehicles.cruise_jitter", "must be >= 0"));
        }
        self.tx().validate().map_err(|e| match e {
            Error::Validation { field, reason } => {
                Error::validation(field.replace("tx.", "radio."), reason)
            }
            other => other,
        })?;
        self.noise().validate().map_err(|_| {
            Error::validation("radio.sigma", "must be finite and >= 0")
        })?;
        if self.radio.m_slots < 1 {
            return Err(Error::validation("radio.m_slots", "must be >= 1"));
        }
        if !(self.radio.rx_range > 0.0) {
            return Err(Error::validation("radio.rx_range", "must be > 0"));
        }
        let pr = &self.protocol;
        if !(pr.reaction_r >= 0.0) {
            return Err(Error::validation("protocol.reaction_r", "must be >= 0"));
        }
        if !(pr.short_range >= 0.0) {
            return Err(Error::validation("protocol.short_range", "must be >= 0"));
        }
        if !(self.controller.standoff >= 0.0) {
            return Err(Error::validation("controller.standoff", "must be >= 0"));
        }
        if let Some(d) = self.controller.max_decel {
            if !(d > 0.0) {
                return Err(Error::validation("controller.max_decel", "must be > 0"));
            }
        }
        for (i, sp) in self.scripted_pedestrians.iter().enumerate() {
            if !(sp.speed > 0.0) || !(sp.dwell >= 0.0) {
                return Err(Error::validation(
                    format!("pedestrian[{i}]"),
                    "speed must be > 0 and dwell >= 0",
                ));
            }
        }
        for (i, sv) in self.scripted_vehicles.iter().enumerate() {
            if !(sv.cruise > 0.0) {
                return Err(Error::validation(format!("vehicle[{i}].cruise"), "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(source: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_scenario_file(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    load_scenario(&text)
}
