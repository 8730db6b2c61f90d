//! The 1 Hz world loop: pedestrians and approaching cars move, parked cars
//! sense, track, alert and relay, approaching cars adjust speed.
//!
//! Each tick, in order:
//! 1. approaching cars drive over the past second at the speed chosen last
//!    tick; collisions are sampled every 0.1 s;
//! 2. finished pedestrians leave, new ones and new cars arrive;
//! 3. every parked car receives the shoes in range in random slots and
//!    classifies the clear ones per transceiver pair;
//! 4. each pair's cohort tracker folds in its in-street fixes;
//! 5. alerts are issued or re-issued and relayed along the chain;
//! 6. zone members caution nearby cars, which recompute their speed.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::cohort::{CohortParams, CohortTracker, UpdateKind};
use crate::config::{AlertSource, CrossingSite, ScenarioConfig};
use crate::error::Result;
use crate::geoloc::{
    classify_with, lateral_y, longitudinal_d, reciprocal_diff, sidewalk_threshold_c0, CarGeometry, Pair,
    Verdict, TOL_TRIANGLE_EXACT, TOL_TRIANGLE_NOISY,
};
use crate::rng::{stream_rng, SimRng, Stream};
use crate::safety_zone::{
    emit_caution, propagate_alert, should_reissue, zone_distance, AlertMessage, CautionMessage, ChainNode,
    Fallback,
};
use crate::signal::{apply_noise, assign_slots, distance_from_rss, free_space_rss, NoiseSpec, TransmitterSpec};
use crate::speed::{on_event, safe_speed, CarEvent, CarKinematics, SpeedMode};
use crate::trace::{Record, TickTrace};

/// Half-length of the longitudinal collision box (m).
pub const COLLISION_HALF_LENGTH: f64 = 0.5;
/// Zone growth (m) below which a re-issue is rounding noise.
const REISSUE_SLACK: f64 = 1e-6;
/// Sub-steps per tick for collision sampling.
const COLLISION_SAMPLES: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Pedestrian {
    pub id: u32,
    /// Walks along the sidewalk instead of crossing.
    pub walker: bool,
    pub x0: f64,
    pub y0: f64,
    pub speed: f64,
    pub spawn_time: f64,
    /// When lateral motion begins (crossers only).
    pub walk_start: f64,
    /// `+1` or `-1` along the street (walkers only).
    pub direction: f64,
}

impl Pedestrian {
    pub fn x_at(&self, t: f64) -> f64 {
        if self.walker {
            self.x0 + self.direction * self.speed * (t - self.spawn_time)
        } else {
            self.x0
        }
    }

    pub fn y_at(&self, t: f64) -> f64 {
        if self.walker {
            self.y0
        } else {
            self.y0 + self.speed * (t - self.walk_start).max(0.0)
        }
    }

    pub fn lateral_speed_at(&self, t: f64) -> f64 {
        if self.walker || t < self.walk_start {
            0.0
        } else {
            self.speed
        }
    }

    /// When the pedestrian steps off the curb.
    pub fn crossing_start(&self) -> f64 {
        self.walk_start + (-self.y0).max(0.0) / self.speed
    }

    /// When the pedestrian reaches the far side of a street `w` wide.
    pub fn clear_time(&self, w: f64) -> f64 {
        self.walk_start + (w - self.y0) / self.speed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: u32,
    pub kin: CarKinematics,
}

/// One transceiver pair of one parked car and the cohort it tracks.
#[derive(Debug, Clone)]
pub struct Watch {
    pub id: u32,
    pub car: usize,
    pub pair: Pair,
    pub tracker: CohortTracker,
    /// Latest longitudinal estimate of the tail.
    pub last_d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AlertKey {
    Watch(usize),
    Pedestrian(u32),
}

#[derive(Debug, Clone, PartialEq)]
struct ActiveAlert {
    key: AlertKey,
    alert: AlertMessage,
    caution: CautionMessage,
    zone: Vec<usize>,
    fallback: Option<Fallback>,
}

/// Accepted in-street fix, kept for tail bookkeeping.
#[derive(Debug, Clone, Copy)]
struct WatchFix {
    y: f64,
    d: Option<f64>,
    ped: usize,
}

pub struct World {
    cfg: ScenarioConfig,
    cars: Vec<CarGeometry>,
    sites: Vec<CrossingSite>,
    watches: Vec<Watch>,
    peds: Vec<Pedestrian>,
    vehicles: Vec<Vehicle>,
    alerts: Vec<ActiveAlert>,
    /// Pedestrians whose oracle caution has been issued.
    oracle_issued: HashSet<u32>,
    tick: u32,
    next_ped: u32,
    next_vehicle: u32,
    rng_traffic: SimRng,
    rng_slots: SimRng,
    rng_noise: SimRng,
    rng_vehicles: SimRng,
    tx: TransmitterSpec,
    noise: NoiseSpec,
    params: CohortParams,
    trace: TickTrace,
}

impl World {
    pub fn new(cfg: &ScenarioConfig) -> Result<World> {
        cfg.validate()?;
        let cars = cfg.parked_cars();
        let mut watches: Vec<Watch> = (0..cars.len())
            .map(|i| Watch {
                id: i as u32,
                car: i,
                pair: Pair::Front,
                tracker: CohortTracker::new(i as u32),
                last_d: None,
            })
            .collect();
        if cfg.chain.rear_crossings && !cars.is_empty() {
            let id = watches.len() as u32;
            watches.push(Watch {
                id,
                car: 0,
                pair: Pair::Rear,
                tracker: CohortTracker::new(id),
                last_d: None,
            });
        }
        let noise = cfg.noise();
        Ok(World {
            sites: cfg.crossing_sites(),
            cars,
            watches,
            peds: Vec::new(),
            vehicles: Vec::new(),
            alerts: Vec::new(),
            oracle_issued: HashSet::new(),
            tick: 0,
            next_ped: 0,
            next_vehicle: 0,
            rng_traffic: stream_rng(cfg.seed, Stream::Traffic),
            rng_slots: stream_rng(cfg.seed, Stream::Slots),
            rng_noise: stream_rng(noise.rng_seed.unwrap_or(cfg.seed), Stream::Noise),
            rng_vehicles: stream_rng(cfg.seed, Stream::Vehicles),
            tx: cfg.tx(),
            noise,
            params: CohortParams {
                v0: cfg.pedestrians.v0,
                street_width: cfg.street.width,
                tick_len: 1.0,
                speed_range: (cfg.pedestrians.tail_speed_range[0], cfg.pedestrians.tail_speed_range[1]),
            },
            cfg: cfg.clone(),
            trace: TickTrace::default(),
        })
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.cfg.ticks
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn parked_cars(&self) -> &[CarGeometry] {
        &self.cars
    }

    pub fn watches(&self) -> &[Watch] {
        &self.watches
    }

    pub fn pedestrians(&self) -> &[Pedestrian] {
        &self.peds
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn trace(&self) -> &TickTrace {
        &self.trace
    }

    pub fn into_trace(self) -> TickTrace {
        self.trace
    }

    /// Runs the remaining ticks.
    pub fn run_to_end(&mut self) {
        while !self.is_finished() {
            self.step();
        }
    }

    pub fn step(&mut self) {
        self.tick += 1;
        let now = f64::from(self.tick);
        self.drive(now);
        self.retire(now);
        self.spawn(now);
        let fixes = self.sense(now);
        let kinds = self.track(now, &fixes);
        match self.cfg.protocol.alert_source {
            AlertSource::Estimated => self.alert_estimated(now, &kinds),
            AlertSource::GroundTruth => self.alert_oracle(now),
        }
        self.caution(now);
        self.record_state(now);
    }

    fn drive(&mut self, now: f64) {
        let prev = now - 1.0;
        let [lo, hi] = self.cfg.street.travel_lane;
        for v in &mut self.vehicles {
            let x0 = v.kin.position;
            let speed = v.kin.speed;
            for p in self.peds.iter().filter(|p| !p.walker) {
                if p.x0 < x0 - COLLISION_HALF_LENGTH || p.x0 > x0 + speed + COLLISION_HALF_LENGTH {
                    continue;
                }
                let mut worst: Option<(f64, f64, f64)> = None;
                for k in 0..=COLLISION_SAMPLES {
                    let dt = f64::from(k) / f64::from(COLLISION_SAMPLES);
                    let cx = x0 + speed * dt;
                    let py = p.y_at(prev + dt);
                    let offset = cx - p.x0;
                    if py >= lo && py < hi && offset.abs() <= COLLISION_HALF_LENGTH
                        && worst.is_none_or(|(o, _, _)| offset > o)
                    {
                        worst = Some((offset, cx, py));
                    }
                }
                if let Some((offset, x, y)) = worst {
                    self.trace.push(Record::Collision {
                        tick: self.tick,
                        vehicle: v.id,
                        ped: p.id,
                        x,
                        y,
                        offset,
                    });
                }
            }
            v.kin.position = x0 + speed;
        }
    }

    fn retire(&mut self, now: f64) {
        let w = self.cfg.street.width;
        let len = self.cfg.street.length;
        self.peds.retain(|p| {
            if p.walker {
                let x = p.x_at(now);
                (0.0..=len).contains(&x)
            } else {
                p.y_at(now) < w
            }
        });
        self.vehicles.retain(|v| v.kin.position <= len);
    }

    fn spawn(&mut self, now: f64) {
        let tick = self.tick;
        let cfg = &self.cfg;
        let n = cfg.pedestrians.arrival.sample(&mut self.rng_traffic);
        let dwell = (cfg.pedestrians.dwell_mean > 0.0)
            .then(|| Exp::new(1.0 / cfg.pedestrians.dwell_mean).expect("validated"));
        for _ in 0..n {
            if self.sites.is_empty() {
                break;
            }
            let site = self.sites[self.rng_traffic.random_range(0..self.sites.len())];
            let d = self.rng_traffic.random_range(site.d_range.0..=site.d_range.1);
            let x0 = self.cars[site.car].point_ahead(site.pair, d);
            let y0 = -cfg.street.sidewalk_width * self.rng_traffic.random::<f64>();
            let speed = cfg.pedestrians.speed.sample(&mut self.rng_traffic);
            let wait = dwell.map_or(0.0, |e| e.sample(&mut self.rng_traffic));
            // nobody steps out with a bumper already on their line
            if self.vehicles.iter().any(|v| (v.kin.position - x0).abs() <= COLLISION_HALF_LENGTH) {
                self.next_ped += 1;
                continue;
            }
            self.peds.push(Pedestrian {
                id: self.next_ped,
                walker: false,
                x0,
                y0,
                speed,
                spawn_time: now,
                walk_start: now + wait,
                direction: 0.0,
            });
            self.next_ped += 1;
        }
        for sp in cfg.scripted_pedestrians.iter().filter(|s| s.tick == tick) {
            self.peds.push(Pedestrian {
                id: self.next_ped,
                walker: false,
                x0: sp.x,
                y0: sp.y,
                speed: sp.speed,
                spawn_time: now,
                walk_start: now + sp.dwell,
                direction: 0.0,
            });
            self.next_ped += 1;
        }
        let walkers = cfg.pedestrians.walkers.sample(&mut self.rng_traffic);
        for _ in 0..walkers {
            let forward = self.rng_traffic.random_bool(0.5);
            let y0 = -self.rng_traffic.random_range(0.1..=cfg.street.sidewalk_width.max(0.1));
            let speed = cfg.pedestrians.speed.sample(&mut self.rng_traffic);
            self.peds.push(Pedestrian {
                id: self.next_ped,
                walker: true,
                x0: if forward { 0.0 } else { cfg.street.length },
                y0,
                speed,
                spawn_time: now,
                walk_start: now,
                direction: if forward { 1.0 } else { -1.0 },
            });
            self.next_ped += 1;
        }

        let v_max = cfg.street.v_max;
        let n = cfg.vehicles.arrival.sample(&mut self.rng_vehicles);
        for _ in 0..n {
            let cruise = if cfg.vehicles.cruise_jitter > 0.0 {
                let j: f64 = rand_distr::Normal::new(0.0, cfg.vehicles.cruise_jitter)
                    .expect("validated")
                    .sample(&mut self.rng_vehicles);
                (v_max - j.abs()).max(1.0)
            } else {
                v_max
            };
            self.vehicles.push(Vehicle {
                id: self.next_vehicle,
                kin: CarKinematics::new(0.0, v_max, cruise),
            });
            self.next_vehicle += 1;
        }
        for sv in cfg.scripted_vehicles.iter().filter(|s| s.tick == tick) {
            self.vehicles.push(Vehicle {
                id: self.next_vehicle,
                kin: CarKinematics::new(sv.x, v_max, sv.cruise),
            });
            self.next_vehicle += 1;
        }
    }

    fn pair_hears(&self, car: &CarGeometry, pair: Pair, x: f64, y: f64) -> bool {
        let (dl, dr) = car.pair_distances(pair, x, y);
        dl.max(dr) <= self.cfg.radio.rx_range
    }

    /// Receives, slots and classifies every shoe; returns accepted fixes per watch.
    fn sense(&mut self, now: f64) -> Vec<Vec<WatchFix>> {
        let tick = self.tick;
        let mut per_watch: Vec<Vec<WatchFix>> = vec![Vec::new(); self.watches.len()];
        let tol = if self.noise.sigma == 0.0 {
            TOL_TRIANGLE_EXACT
        } else {
            TOL_TRIANGLE_NOISY
        };
        let positions: Vec<(f64, f64)> = self.peds.iter().map(|p| (p.x_at(now), p.y_at(now))).collect();
        for ci in 0..self.cars.len() {
            let car = self.cars[ci];
            let car_watches: Vec<usize> = (0..self.watches.len())
                .filter(|&w| self.watches[w].car == ci)
                .collect();
            let heard: Vec<usize> = (0..self.peds.len())
                .filter(|&pi| {
                    let (x, y) = positions[pi];
                    car_watches
                        .iter()
                        .any(|&w| self.pair_hears(&car, self.watches[w].pair, x, y))
                })
                .collect();
            if heard.is_empty() {
                continue;
            }
            let slots = assign_slots(&heard, self.cfg.radio.m_slots, &mut self.rng_slots);
            let c0 = sidewalk_threshold_c0(&car, &self.tx) + self.cfg.faults.threshold_bias;
            for sa in slots {
                let pi = sa.id;
                let (x, y) = positions[pi];
                let (fl, fr) = car.pair_distances(Pair::Front, x, y);
                let (rl, rr) = car.pair_distances(Pair::Rear, x, y);
                let mut rss = [0.0; 4];
                let mut failed = None;
                for (slot, delta) in rss.iter_mut().zip([fl, fr, rl, rr]) {
                    match free_space_rss(&self.tx, delta) {
                        Ok(v) => *slot = apply_noise(v, &self.noise, &mut self.rng_noise),
                        Err(e) => failed = Some(e),
                    }
                }
                if let Some(e) = failed {
                    self.trace.push(Record::Anomaly {
                        tick,
                        op: "free_space_rss".into(),
                        detail: format!("car {ci} ped {}: {e}", self.peds[pi].id),
                    });
                    continue;
                }
                self.trace.push(Record::Observation {
                    tick,
                    car: ci as u32,
                    ped: self.peds[pi].id,
                    rss,
                    slot: sa.slot,
                    clear: sa.clear,
                });
                if !sa.clear {
                    continue;
                }
                for &wi in &car_watches {
                    let pair = self.watches[wi].pair;
                    if !self.pair_hears(&car, pair, x, y) {
                        continue;
                    }
                    let (l, r) = match pair {
                        Pair::Front => (rss[0], rss[1]),
                        Pair::Rear => (rss[2], rss[3]),
                    };
                    let const_value = match reciprocal_diff(l, r) {
                        Ok(c) => c,
                        Err(e) => {
                            self.trace.push(Record::Anomaly {
                                tick,
                                op: "reciprocal_diff".into(),
                                detail: e.to_string(),
                            });
                            continue;
                        }
                    };
                    let verdict = classify_with(const_value, c0, self.cfg.protocol.tie_rule);
                    let est_d = distance_from_rss(l, &self.tx)
                        .and_then(|dl| distance_from_rss(r, &self.tx).map(|dr| (dl, dr)))
                        .and_then(|(dl, dr)| longitudinal_d(dl, dr, car.width_w, tol))
                        .ok();
                    let est_y = match verdict {
                        Verdict::InStreet => lateral_y(l, r, &car, &self.tx).ok(),
                        Verdict::OnSidewalk => None,
                    };
                    self.trace.push(Record::Fix {
                        tick,
                        watch: self.watches[wi].id,
                        car: ci as u32,
                        pair,
                        ped: self.peds[pi].id,
                        const_value,
                        verdict,
                        est_y,
                        est_d,
                        true_y: y,
                        true_d: car.signed_offset(pair, x).abs(),
                    });
                    if let Some(ey) = est_y {
                        per_watch[wi].push(WatchFix { y: ey, d: est_d, ped: pi });
                    }
                }
            }
        }
        per_watch
    }

    fn track(&mut self, now: f64, fixes: &[Vec<WatchFix>]) -> Vec<Option<UpdateKind>> {
        let w = self.cfg.street.width;
        let (r, v_max) = (self.cfg.protocol.reaction_r, self.cfg.street.v_max);
        let mut kinds = Vec::with_capacity(self.watches.len());
        for (wi, watch) in self.watches.iter_mut().enumerate() {
            if !watch.tracker.is_active() {
                watch.last_d = None;
            }
            let ys: Vec<f64> = fixes[wi].iter().map(|f| f.y).collect();
            let kind = watch.tracker.step(self.tick, &ys, &self.params);
            let tail = fixes[wi].iter().copied().reduce(|a, b| if b.y < a.y { b } else { a });
            if let Some(t) = tail {
                if let Some(d) = t.d {
                    watch.last_d = Some(d);
                }
            }
            if let (Some(kind), Some(state)) = (kind, watch.tracker.state) {
                let truth = tail.map(|t| &self.peds[t.ped]);
                self.trace.push(Record::Cohort {
                    tick: self.tick,
                    watch: watch.id,
                    car: watch.car as u32,
                    pair: watch.pair,
                    kind,
                    tail_y: state.tail_y,
                    speed: state.tail_speed,
                    remaining: state.remaining,
                    distance: zone_distance(state.remaining, r, v_max),
                    tail_ped: truth.map(|p| p.id),
                    true_y: truth.map(|p| p.y_at(now)),
                    true_speed: truth.map(|p| p.lateral_speed_at(now)),
                    true_remaining: truth.map(|p| (p.clear_time(w) - now).max(0.0)),
                });
            }
            kinds.push(kind);
        }
        kinds
    }

    /// Chain from `origin` upstream, cut where neighbours are out of link range.
    fn chain_from(&self, origin: usize) -> Vec<ChainNode> {
        let mut nodes = vec![ChainNode::new(origin as u32, self.cars[origin].position_x)];
        let mut j = origin;
        while j > 0 {
            let gap = self.cars[j].position_x - self.cars[j - 1].position_x;
            if gap > self.cfg.chain.link_range {
                break;
            }
            j -= 1;
            nodes.push(ChainNode::new(j as u32, self.cars[j].position_x));
        }
        nodes
    }

    fn issue(&mut self, key: AlertKey, watch: usize, origin: usize, crossing_x: f64, delta: f64, reissue: bool) {
        let tick = self.tick;
        let distance = zone_distance(delta, self.cfg.protocol.reaction_r, self.cfg.street.v_max);
        let origin_x = self.cars[origin].position_x;
        let alert = AlertMessage {
            origin_x,
            issue_tick: tick,
            distance_to_live: distance,
        };
        let mut chain = self.chain_from(origin);
        let prop = propagate_alert(&mut chain, &alert);
        let caution = emit_caution(&chain[0], &alert, crossing_x - origin_x, delta)
            .expect("origin is always in its own zone");
        self.trace.push(Record::Alert {
            tick,
            watch: self.watches[watch].id,
            car: origin as u32,
            reissue,
            origin_x,
            crossing_x,
            remaining: delta,
            distance,
            clear_time: caution.clear_time,
            in_zone: prop.in_zone.len() as u32,
            fallback: prop.fallback.map(|f| f.range),
        });
        let active = ActiveAlert {
            key,
            alert,
            caution,
            zone: prop.in_zone.iter().map(|&(id, _)| id as usize).collect(),
            fallback: prop.fallback,
        };
        match self.alerts.iter_mut().find(|a| a.key == key) {
            Some(slot) => *slot = active,
            None => self.alerts.push(active),
        }
    }

    fn alert_estimated(&mut self, now: f64, kinds: &[Option<UpdateKind>]) {
        for (wi, kind) in kinds.iter().enumerate() {
            if kind.is_none() {
                continue;
            }
            let watch = &self.watches[wi];
            let Some(state) = watch.tracker.state.filter(|s| s.active) else {
                continue;
            };
            let delta = state.remaining;
            let (r, v_max) = (self.cfg.protocol.reaction_r, self.cfg.street.v_max);
            let d_new = zone_distance(delta, r, v_max);
            let key = AlertKey::Watch(wi);
            let live = self
                .alerts
                .iter()
                .find(|a| a.key == key && a.caution.clear_time > now);
            // the live alert's zone as it stands now, aged since it was sent
            let reissue = match live.map(|a| zone_distance(a.caution.clear_time - now, r, v_max)) {
                None => false,
                Some(d_live) if should_reissue(d_new, d_live + REISSUE_SLACK) => true,
                Some(_) => continue,
            };
            let car = &self.cars[watch.car];
            let crossing_x = car.point_ahead(watch.pair, watch.last_d.unwrap_or(0.0));
            self.issue(key, wi, watch.car, crossing_x, delta, reissue);
        }
    }

    fn owner_watch(&self, x: f64) -> Option<usize> {
        let front = self
            .watches
            .iter()
            .enumerate()
            .filter(|(_, w)| w.pair == Pair::Front && self.cars[w.car].position_x <= x)
            .max_by(|a, b| self.cars[a.1.car].position_x.total_cmp(&self.cars[b.1.car].position_x))
            .map(|(i, _)| i);
        front
            .or_else(|| self.watches.iter().position(|w| w.pair == Pair::Rear))
            .or_else(|| (!self.watches.is_empty()).then_some(0))
    }

    /// Perfect-knowledge alerts, announced as soon as a crosser appears.
    fn alert_oracle(&mut self, now: f64) {
        let w = self.cfg.street.width;
        let due: Vec<(u32, f64, f64)> = self
            .peds
            .iter()
            .filter(|p| !p.walker && !self.oracle_issued.contains(&p.id))
            .map(|p| (p.id, p.x0, p.clear_time(w)))
            .collect();
        for (id, x, clear) in due {
            self.oracle_issued.insert(id);
            let Some(wi) = self.owner_watch(x) else { continue };
            let origin = self.watches[wi].car;
            self.issue(AlertKey::Pedestrian(id), wi, origin, x, clear - now, false);
        }
    }

    fn caution(&mut self, now: f64) {
        self.alerts.retain(|a| a.caution.clear_time > now);
        let short = self.cfg.protocol.short_range;
        let standoff = self.cfg.controller.standoff;
        let enabled = self.cfg.controller.enabled;
        for v in &mut self.vehicles {
            let x = v.kin.position;
            for a in &self.alerts {
                let nearest = a
                    .zone
                    .iter()
                    .map(|&j| (j, (self.cars[j].position_x - x).abs()))
                    .filter(|&(_, dist)| dist <= short)
                    .min_by(|p, q| p.1.total_cmp(&q.1));
                let emitter = match (nearest, a.fallback) {
                    (Some((j, _)), _) => Some(j as u32),
                    (None, Some(fb)) if x >= fb.node_x - fb.range && x <= fb.node_x => None,
                    _ => continue,
                };
                if a.caution.crossing_x <= x {
                    continue;
                }
                let target = a.caution.crossing_x - standoff;
                // already on the line: pass if the box is cleared within this tick, else hold
                if x >= a.caution.crossing_x - COLLISION_HALF_LENGTH
                    && x + v.kin.speed >= a.caution.crossing_x + COLLISION_HALF_LENGTH
                {
                    continue;
                }
                let applied = enabled
                    && on_event(
                        &mut v.kin,
                        CarEvent::Caution {
                            location: target.max(x),
                            clear_time: a.caution.clear_time,
                        },
                        now,
                    );
                self.trace.push(Record::Caution {
                    tick: self.tick,
                    vehicle: v.id,
                    emitter,
                    crossing_x: a.caution.crossing_x,
                    clear_time: a.caution.clear_time,
                    applied,
                });
            }
            let before = v.kin.speed;
            if enabled {
                on_event(&mut v.kin, CarEvent::Expired, now);
                if self.cfg.controller.mode == SpeedMode::Reevaluate {
                    v.kin.speed = safe_speed(&v.kin, now).min(v.kin.cruise);
                }
                if let Some(cap) = self.cfg.controller.max_decel {
                    v.kin.speed = v.kin.speed.max(before - cap);
                }
            } else {
                v.kin.speed = v.kin.cruise;
            }
        }
    }

    fn record_state(&mut self, now: f64) {
        let tick = self.tick;
        for p in &self.peds {
            self.trace.push(Record::Pedestrian {
                tick,
                id: p.id,
                walker: p.walker,
                x: p.x_at(now),
                y: p.y_at(now),
                speed: p.speed,
            });
        }
        for v in &self.vehicles {
            self.trace.push(Record::Vehicle {
                tick,
                id: v.id,
                x: v.kin.position,
                speed: v.kin.speed,
                constraints: v.kin.active_constraints(now) as u32,
            });
        }
    }
}

/// Builds a world and runs it to the configured tick count.
pub fn run(cfg: &ScenarioConfig) -> Result<TickTrace> {
    let mut world = World::new(cfg)?;
    world.run_to_end();
    Ok(world.into_trace())
}
