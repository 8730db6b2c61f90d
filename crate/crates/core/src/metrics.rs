//! Post-processing of a run trace: classification accuracy, error-location
//! curves, estimation RMSEs, ECDFs and the approaching-car speed profile.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::UpdateKind;
use crate::error::{Error, Result};
use crate::geoloc::Verdict;
use crate::trace::{Record, TickTrace};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    fn add(&mut self, truth_street: bool, verdict: Verdict) {
        match (truth_street, verdict) {
            (true, Verdict::InStreet) => self.tp += 1,
            (true, Verdict::OnSidewalk) => self.fn_ += 1,
            (false, Verdict::InStreet) => self.fp += 1,
            (false, Verdict::OnSidewalk) => self.tn += 1,
        }
    }
}

/// `(TP + TN) / total * 100`.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::domain("accuracy", "empty confusion matrix"));
    }
    Ok((cm.tp + cm.tn) as f64 / total as f64 * 100.0)
}

fn fixes(trace: &TickTrace) -> impl Iterator<Item = (u32, f64, Verdict, Option<f64>, Option<f64>, f64)> + '_ {
    trace.iter().filter_map(|r| match r {
        Record::Fix {
            ped,
            true_y,
            verdict,
            est_y,
            est_d,
            true_d,
            ..
        } => Some((*ped, *true_y, *verdict, *est_y, *est_d, *true_d)),
        _ => None,
    })
}

/// Observation-level confusion matrix; a pedestrian is in the street when
/// its true lateral position is positive.
pub fn confusion(trace: &TickTrace) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for (_, y, verdict, ..) in fixes(trace) {
        cm.add(y > 0.0, verdict);
    }
    cm
}

/// Pedestrian-level matrix: each pedestrian contributes one unit per phase
/// (sidewalk, street) in which it was observed, judged by majority verdict.
pub fn pedestrian_confusion(trace: &TickTrace) -> ConfusionMatrix {
    let mut votes: BTreeMap<(u32, bool), (u64, u64)> = BTreeMap::new();
    for (ped, y, verdict, ..) in fixes(trace) {
        let e = votes.entry((ped, y > 0.0)).or_default();
        match verdict {
            Verdict::InStreet => e.0 += 1,
            Verdict::OnSidewalk => e.1 += 1,
        }
    }
    let mut cm = ConfusionMatrix::default();
    for ((_, street), (yes, no)) in votes {
        let verdict = if yes > no { Verdict::InStreet } else { Verdict::OnSidewalk };
        cm.add(street, verdict);
    }
    cm
}

/// Fraction of misclassified observations whose true lateral position is
/// within `band` metres of the sidewalk edge; `None` without errors.
pub fn errors_within(trace: &TickTrace, band: f64) -> Option<f64> {
    let (mut near, mut all) = (0u64, 0u64);
    for (_, y, verdict, ..) in fixes(trace) {
        if (y > 0.0) != (verdict == Verdict::InStreet) {
            all += 1;
            if y.abs() <= band {
                near += 1;
            }
        }
    }
    (all > 0).then(|| near as f64 / all as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationBin {
    /// Lower edge of the bin in signed distance to the edge (street side negative).
    pub lo: f64,
    pub hi: f64,
    pub sidewalk_obs: u64,
    pub street_obs: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    /// Percent of sidewalk observations read as in-street; absent without any.
    pub fppl: Option<f64>,
    pub fnpl: Option<f64>,
}

/// FP/FN percentages binned by signed distance `-y` to the sidewalk edge.
pub fn per_location_rates(trace: &TickTrace, bin_width: f64) -> Vec<LocationBin> {
    let mut bins: BTreeMap<i64, LocationBin> = BTreeMap::new();
    for (_, y, verdict, ..) in fixes(trace) {
        let s = -y;
        let k = (s / bin_width).floor() as i64;
        let b = bins.entry(k).or_insert_with(|| LocationBin {
            lo: k as f64 * bin_width,
            hi: (k + 1) as f64 * bin_width,
            sidewalk_obs: 0,
            street_obs: 0,
            false_pos: 0,
            false_neg: 0,
            fppl: None,
            fnpl: None,
        });
        let street = y > 0.0;
        let said_street = verdict == Verdict::InStreet;
        if street {
            b.street_obs += 1;
            b.false_neg += u64::from(!said_street);
        } else {
            b.sidewalk_obs += 1;
            b.false_pos += u64::from(said_street);
        }
    }
    bins.into_values()
        .map(|mut b| {
            b.fppl = (b.sidewalk_obs > 0).then(|| b.false_pos as f64 / b.sidewalk_obs as f64 * 100.0);
            b.fnpl = (b.street_obs > 0).then(|| b.false_neg as f64 / b.street_obs as f64 * 100.0);
            b
        })
        .collect()
}

/// Estimation RMSEs; a field is `None` when it had no matched samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub e_y: Option<f64>,
    pub e_d: Option<f64>,
    pub e_v: Option<f64>,
    pub e_delta: Option<f64>,
    pub e_distance: Option<f64>,
    /// Clear in-street observations with a lateral estimate.
    pub m_street: u64,
    /// Clear observations with a longitudinal estimate.
    pub m_all: u64,
    /// Pedestrians that were a cohort tail at least once.
    pub n_peds: u64,
}

fn rms(sum_sq: f64, n: u64) -> Option<f64> {
    (n > 0).then(|| (sum_sq / n as f64).sqrt())
}

/// One tail sample: estimate and truth for the tail pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    pub tick: u32,
    pub ped: u32,
    pub est_speed: f64,
    pub true_speed: f64,
    pub est_remaining: f64,
    pub true_remaining: f64,
}

/// Cohort updates driven by a fresh fix of a known tail.
pub fn tail_samples(trace: &TickTrace) -> Vec<TailSample> {
    trace
        .iter()
        .filter_map(|r| match r {
            Record::Cohort {
                tick,
                kind,
                speed,
                remaining,
                tail_ped: Some(ped),
                true_speed: Some(ts),
                true_remaining: Some(tr),
                ..
            } if !matches!(kind, UpdateKind::Coasted | UpdateKind::Completed) => Some(TailSample {
                tick: *tick,
                ped: *ped,
                est_speed: *speed,
                true_speed: *ts,
                est_remaining: *remaining,
                true_remaining: *tr,
            }),
            _ => None,
        })
        .collect()
}

/// `(delta_err, distance_err)` per tail sample, with both zone distances
/// sized by `(delta + r) * v_max`.
pub fn relative_errors(trace: &TickTrace, reaction_r: f64, v_max: f64) -> Vec<(f64, f64)> {
    tail_samples(trace)
        .into_iter()
        .map(|s| {
            let est = crate::safety_zone::zone_distance(s.est_remaining, reaction_r, v_max);
            let act = crate::safety_zone::zone_distance(s.true_remaining, reaction_r, v_max);
            (s.est_remaining - s.true_remaining, est - act)
        })
        .collect()
}

/// E_y over in-street observations, E_d over all observations, and E_v,
/// E_delta, E_D over pedestrians from each one's mean estimate and mean truth.
pub fn rmse_suite(trace: &TickTrace, reaction_r: f64, v_max: f64) -> RmseReport {
    let mut rep = RmseReport::default();
    let (mut sy, mut sd) = (0.0, 0.0);
    for (_, y, _, est_y, est_d, true_d) in fixes(trace) {
        if let (true, Some(ey)) = (y > 0.0, est_y) {
            sy += (ey - y).powi(2);
            rep.m_street += 1;
        }
        if let Some(ed) = est_d {
            sd += (ed - true_d).powi(2);
            rep.m_all += 1;
        }
    }
    rep.e_y = rms(sy, rep.m_street);
    rep.e_d = rms(sd, rep.m_all);

    // per pedestrian: (n, sum est v, sum true v, sum est delta, sum true delta)
    let mut per: BTreeMap<u32, (f64, f64, f64, f64, f64)> = BTreeMap::new();
    for s in tail_samples(trace) {
        let e = per.entry(s.ped).or_default();
        e.0 += 1.0;
        e.1 += s.est_speed;
        e.2 += s.true_speed;
        e.3 += s.est_remaining;
        e.4 += s.true_remaining;
    }
    let (mut sv, mut sdl, mut sdd) = (0.0, 0.0, 0.0);
    for (n, ev, tv, ed, td) in per.values() {
        sv += ((ev - tv) / n).powi(2);
        let delta_err = (ed - td) / n;
        sdl += delta_err.powi(2);
        let d_est = crate::safety_zone::zone_distance(ed / n, reaction_r, v_max);
        let d_act = crate::safety_zone::zone_distance(td / n, reaction_r, v_max);
        sdd += (d_est - d_act).powi(2);
    }
    rep.n_peds = per.len() as u64;
    rep.e_v = rms(sv, rep.n_peds);
    rep.e_delta = rms(sdl, rep.n_peds);
    rep.e_distance = rms(sdd, rep.n_peds);
    rep
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }

    /// `(value, cumulative probability)` at every distinct value.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = p,
                _ => out.push((v, p)),
            }
        }
        out
    }
}

pub fn ecdf(values: &[f64]) -> Result<Ecdf> {
    if values.is_empty() {
        return Err(Error::domain("ecdf", "no values"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("ecdf", "NaN value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Ecdf { sorted })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    pub lo: f64,
    pub hi: f64,
    pub samples: u64,
    pub mean_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    /// Mean approaching-car speed by distance to the nearest in-street
    /// pedestrian ahead.
    pub bins: Vec<ProfileBin>,
    /// Mean over every car-tick, pedestrians or not.
    pub overall_mean: Option<f64>,
}

impl SpeedProfile {
    pub fn bin_at(&self, distance: f64) -> Option<&ProfileBin> {
        self.bins.iter().find(|b| distance >= b.lo && distance < b.hi)
    }
}

/// Bins each car-tick by the distance to the nearest pedestrian ahead that is
/// on the roadway at that tick.
pub fn speed_profile(trace: &TickTrace, bin: f64) -> SpeedProfile {
    // per tick: crossers' x, then vehicles' (x, speed)
    type TickState = (Vec<f64>, Vec<(f64, f64)>);
    let mut by_tick: BTreeMap<u32, TickState> = BTreeMap::new();
    for r in trace.iter() {
        match r {
            Record::Pedestrian { tick, walker: false, x, y, .. } if *y > 0.0 => {
                by_tick.entry(*tick).or_default().0.push(*x);
            }
            Record::Vehicle { tick, x, speed, .. } => {
                by_tick.entry(*tick).or_default().1.push((*x, *speed));
            }
            _ => {}
        }
    }
    let mut acc: BTreeMap<i64, (u64, f64)> = BTreeMap::new();
    let (mut n, mut sum) = (0u64, 0.0);
    for (peds, cars) in by_tick.values() {
        for &(cx, v) in cars {
            n += 1;
            sum += v;
            let ahead = peds
                .iter()
                .map(|&px| px - cx)
                .filter(|&d| d >= 0.0)
                .reduce(f64::min);
            if let Some(d) = ahead {
                let e = acc.entry((d / bin).floor() as i64).or_default();
                e.0 += 1;
                e.1 += v;
            }
        }
    }
    SpeedProfile {
        bins: acc
            .into_iter()
            .map(|(k, (c, s))| ProfileBin {
                lo: k as f64 * bin,
                hi: (k + 1) as f64 * bin,
                samples: c,
                mean_speed: s / c as f64,
            })
            .collect(),
        overall_mean: (n > 0).then(|| sum / n as f64),
    }
}

/// Every scalar of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub ticks: u32,
    pub sigma: f64,
    pub confusion: ConfusionMatrix,
    pub accuracy: Option<f64>,
    pub pedestrian_confusion: ConfusionMatrix,
    pub pedestrian_accuracy: Option<f64>,
    /// Share of misclassifications within 1 m of the sidewalk edge.
    pub errors_within_1m: Option<f64>,
    pub rmse: RmseReport,
    pub crossings: u64,
    /// Crossing pedestrians per second that produced at least one in-street fix.
    pub detected_per_second: f64,
    pub alerts: u64,
    pub collisions: u64,
    /// Largest car-minus-pedestrian offset over all collision samples.
    pub max_collision_offset: Option<f64>,
    pub mean_vehicle_speed: Option<f64>,
    pub anomalies: u64,
}

pub fn summarize(trace: &TickTrace, cfg: &crate::config::ScenarioConfig) -> RunSummary {
    let cm = confusion(trace);
    let pcm = pedestrian_confusion(trace);
    let mut crossers = std::collections::BTreeSet::new();
    let mut detected = std::collections::BTreeSet::new();
    let (mut alerts, mut collisions, mut anomalies) = (0, 0, 0);
    let mut max_off: Option<f64> = None;
    for r in trace.iter() {
        match r {
            Record::Pedestrian { id, walker: false, .. } => {
                crossers.insert(*id);
            }
            Record::Fix {
                ped,
                verdict: Verdict::InStreet,
                true_y,
                ..
            } if *true_y > 0.0 => {
                detected.insert(*ped);
            }
            Record::Alert { .. } => alerts += 1,
            Record::Collision { offset, .. } => {
                collisions += 1;
                max_off = Some(max_off.map_or(*offset, |m: f64| m.max(*offset)));
            }
            Record::Anomaly { .. } => anomalies += 1,
            _ => {}
        }
    }
    RunSummary {
        seed: cfg.seed,
        ticks: cfg.ticks,
        sigma: cfg.radio.sigma,
        confusion: cm,
        accuracy: accuracy(&cm).ok(),
        pedestrian_confusion: pcm,
        pedestrian_accuracy: accuracy(&pcm).ok(),
        errors_within_1m: errors_within(trace, 1.0),
        rmse: rmse_suite(trace, cfg.protocol.reaction_r, cfg.street.v_max),
        crossings: crossers.len() as u64,
        detected_per_second: detected.len() as f64 / f64::from(cfg.ticks.max(1)),
        alerts,
        collisions,
        max_collision_offset: max_off,
        mean_vehicle_speed: speed_profile(trace, 13.0).overall_mean,
        anomalies,
    }
}

fn write_rows<P: AsRef<Path>>(path: P, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one delimited file per curve into `dir`.
pub fn write_curves(dir: &Path, trace: &TickTrace, cfg: &crate::config::ScenarioConfig) -> Result<()> {
    write_rows(
        dir.join("location_rates.csv"),
        &["lo", "hi", "sidewalk_obs", "street_obs", "false_pos", "false_neg", "fppl", "fnpl"],
        per_location_rates(trace, 0.2).into_iter().map(|b| {
            vec![
                b.lo.to_string(),
                b.hi.to_string(),
                b.sidewalk_obs.to_string(),
                b.street_obs.to_string(),
                b.false_pos.to_string(),
                b.false_neg.to_string(),
                opt(b.fppl),
                opt(b.fnpl),
            ]
        }),
    )?;
    let samples = tail_samples(trace);
    let est: Vec<f64> = samples.iter().map(|s| s.est_speed).collect();
    let act: Vec<f64> = samples.iter().map(|s| s.true_speed).collect();
    let mut rows = Vec::new();
    for (name, vals) in [("estimated", est), ("actual", act)] {
        if let Ok(e) = ecdf(&vals) {
            rows.extend(e.steps().into_iter().map(|(x, p)| vec![name.to_string(), x.to_string(), p.to_string()]));
        }
    }
    write_rows(dir.join("speed_ecdf.csv"), &["series", "speed", "p"], rows)?;
    write_rows(
        dir.join("relative_error.csv"),
        &["delta_err", "distance_err"],
        relative_errors(trace, cfg.protocol.reaction_r, cfg.street.v_max)
            .into_iter()
            .map(|(a, b)| vec![a.to_string(), b.to_string()]),
    )?;
    write_rows(
        dir.join("speed_profile.csv"),
        &["lo", "hi", "samples", "mean_speed"],
        speed_profile(trace, 13.0).bins.into_iter().map(|b| {
            vec![b.lo.to_string(), b.hi.to_string(), b.samples.to_string(), b.mean_speed.to_string()]
        }),
    )?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &impl Serialize) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.to_string()))?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
