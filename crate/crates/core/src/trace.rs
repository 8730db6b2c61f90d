//! Per-tick event log of a run, kept in memory and serialized to CSV with a
//! fixed column set.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cohort::UpdateKind;
use crate::error::{Error, Result};
use crate::geoloc::{Pair, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    /// Ground-truth pedestrian position at the end of the tick.
    Pedestrian {
        tick: u32,
        id: u32,
        walker: bool,
        x: f64,
        y: f64,
        speed: f64,
    },
    /// One shoe transmission as received by one parked car (noisy RSS, mW).
    Observation {
        tick: u32,
        car: u32,
        ped: u32,
        rss: [f64; 4],
        slot: u32,
        clear: bool,
    },
    /// Classification of one clear observation by one pair, with truth attached.
    Fix {
        tick: u32,
        watch: u32,
        car: u32,
        pair: Pair,
        ped: u32,
        const_value: f64,
        verdict: Verdict,
        est_y: Option<f64>,
        est_d: Option<f64>,
        true_y: f64,
        true_d: f64,
    },
    Cohort {
        tick: u32,
        watch: u32,
        car: u32,
        pair: Pair,
        kind: UpdateKind,
        tail_y: f64,
        speed: f64,
        remaining: f64,
        distance: f64,
        tail_ped: Option<u32>,
        true_y: Option<f64>,
        true_speed: Option<f64>,
        true_remaining: Option<f64>,
    },
    Alert {
        tick: u32,
        watch: u32,
        car: u32,
        reissue: bool,
        origin_x: f64,
        crossing_x: f64,
        remaining: f64,
        distance: f64,
        clear_time: f64,
        in_zone: u32,
        fallback: Option<f64>,
    },
    /// A caution reaching an approaching car; `emitter` is `None` for the
    /// long-range fallback broadcast.
    Caution {
        tick: u32,
        vehicle: u32,
        emitter: Option<u32>,
        crossing_x: f64,
        clear_time: f64,
        applied: bool,
    },
    Vehicle {
        tick: u32,
        id: u32,
        x: f64,
        speed: f64,
        constraints: u32,
    },
    /// Car front within the collision box of a pedestrian in its lane;
    /// `offset` is car minus pedestrian longitudinal position.
    Collision {
        tick: u32,
        vehicle: u32,
        ped: u32,
        x: f64,
        y: f64,
        offset: f64,
    },
    Anomaly {
        tick: u32,
        op: String,
        detail: String,
    },
}

impl Record {
    pub fn tick(&self) -> u32 {
        match self {
            Record::Pedestrian { tick, .. }
            | Record::Observation { tick, .. }
            | Record::Fix { tick, .. }
            | Record::Cohort { tick, .. }
            | Record::Alert { tick, .. }
            | Record::Caution { tick, .. }
            | Record::Vehicle { tick, .. }
            | Record::Collision { tick, .. }
            | Record::Anomaly { tick, .. } => *tick,
        }
    }
}

/// Trace CSV header, in `Row` field order.
pub const COLUMNS: [&str; 29] = [
    "tick", "record", "entity", "car", "pair", "kind", "x", "y", "d", "speed", "rss_fl", "rss_fr",
    "rss_rl", "rss_rr", "slot", "flag", "verdict", "const_value", "est_y", "est_d", "est_speed",
    "delta", "distance", "clear_time", "true_speed", "true_delta", "count", "range", "detail",
];

/// Flat CSV row; every record type fills the columns it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Row {
    tick: u32,
    record: String,
    entity: Option<u32>,
    car: Option<u32>,
    pair: Option<String>,
    kind: Option<String>,
    x: Option<f64>,
    y: Option<f64>,
    d: Option<f64>,
    speed: Option<f64>,
    rss_fl: Option<f64>,
    rss_fr: Option<f64>,
    rss_rl: Option<f64>,
    rss_rr: Option<f64>,
    slot: Option<u32>,
    flag: Option<bool>,
    verdict: Option<String>,
    const_value: Option<f64>,
    est_y: Option<f64>,
    est_d: Option<f64>,
    est_speed: Option<f64>,
    delta: Option<f64>,
    distance: Option<f64>,
    clear_time: Option<f64>,
    true_speed: Option<f64>,
    true_delta: Option<f64>,
    count: Option<u32>,
    range: Option<f64>,
    detail: Option<String>,
}

fn pair_str(p: Pair) -> String {
    match p {
        Pair::Front => "front",
        Pair::Rear => "rear",
    }
    .to_string()
}

fn parse_pair(s: Option<&str>) -> Result<Pair> {
    match s {
        Some("front") => Ok(Pair::Front),
        Some("rear") => Ok(Pair::Rear),
        other => Err(Error::Parse(format!("bad pair {other:?}"))),
    }
}

fn parse_verdict(s: Option<&str>) -> Result<Verdict> {
    match s {
        Some("in_street") => Ok(Verdict::InStreet),
        Some("on_sidewalk") => Ok(Verdict::OnSidewalk),
        other => Err(Error::Parse(format!("bad verdict {other:?}"))),
    }
}

fn parse_kind(s: Option<&str>) -> Result<UpdateKind> {
    let kinds = [
        UpdateKind::Started,
        UpdateKind::Advanced,
        UpdateKind::Joined,
        UpdateKind::Stationary,
        UpdateKind::Coasted,
        UpdateKind::Completed,
    ];
    kinds
        .into_iter()
        .find(|k| Some(k.as_str()) == s)
        .ok_or_else(|| Error::Parse(format!("bad cohort kind {s:?}")))
}

fn need<T>(v: Option<T>, tick: u32, col: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parse(format!("tick {tick}: missing column {col}")))
}

impl From<&Record> for Row {
    fn from(r: &Record) -> Row {
        match r {
            Record::Pedestrian { tick, id, walker, x, y, speed } => Row {
                tick: *tick,
                record: "ped".into(),
                entity: Some(*id),
                kind: Some(if *walker { "walker" } else { "crosser" }.into()),
                x: Some(*x),
                y: Some(*y),
                speed: Some(*speed),
                ..Row::default()
            },
            Record::Observation { tick, car, ped, rss, slot, clear } => Row {
                tick: *tick,
                record: "obs".into(),
                entity: Some(*ped),
                car: Some(*car),
                rss_fl: Some(rss[0]),
                rss_fr: Some(rss[1]),
                rss_rl: Some(rss[2]),
                rss_rr: Some(rss[3]),
                slot: Some(*slot),
                flag: Some(*clear),
                ..Row::default()
            },
            Record::Fix {
                tick,
                watch,
                car,
                pair,
                ped,
                const_value,
                verdict,
                est_y,
                est_d,
                true_y,
                true_d,
            } => Row {
                tick: *tick,
                record: "fix".into(),
                entity: Some(*ped),
                car: Some(*car),
                pair: Some(pair_str(*pair)),
                count: Some(*watch),
                y: Some(*true_y),
                d: Some(*true_d),
                verdict: Some(verdict.as_str().into()),
                const_value: Some(*const_value),
                est_y: *est_y,
                est_d: *est_d,
                ..Row::default()
            },
            Record::Cohort {
                tick,
                watch,
                car,
                pair,
                kind,
                tail_y,
                speed,
                remaining,
                distance,
                tail_ped,
                true_y,
                true_speed,
                true_remaining,
            } => Row {
                tick: *tick,
                record: "cohort".into(),
                entity: *tail_ped,
                car: Some(*car),
                pair: Some(pair_str(*pair)),
                count: Some(*watch),
                kind: Some(kind.as_str().into()),
                est_y: Some(*tail_y),
                est_speed: Some(*speed),
                delta: Some(*remaining),
                distance: Some(*distance),
                y: *true_y,
                true_speed: *true_speed,
                true_delta: *true_remaining,
                ..Row::default()
            },
            Record::Alert {
                tick,
                watch,
                car,
                reissue,
                origin_x,
                crossing_x,
                remaining,
                distance,
                clear_time,
                in_zone,
                fallback,
            } => Row {
                tick: *tick,
                record: "alert".into(),
                entity: Some(*watch),
                car: Some(*car),
                kind: Some(if *reissue { "reissue" } else { "issue" }.into()),
                x: Some(*origin_x),
                d: Some(*crossing_x),
                delta: Some(*remaining),
                distance: Some(*distance),
                clear_time: Some(*clear_time),
                count: Some(*in_zone),
                range: *fallback,
                ..Row::default()
            },
            Record::Caution {
                tick,
                vehicle,
                emitter,
                crossing_x,
                clear_time,
                applied,
            } => Row {
                tick: *tick,
                record: "caution".into(),
                entity: Some(*vehicle),
                car: *emitter,
                kind: Some(if emitter.is_some() { "node" } else { "fallback" }.into()),
                x: Some(*crossing_x),
                clear_time: Some(*clear_time),
                flag: Some(*applied),
                ..Row::default()
            },
            Record::Vehicle { tick, id, x, speed, constraints } => Row {
                tick: *tick,
                record: "vehicle".into(),
                entity: Some(*id),
                x: Some(*x),
                speed: Some(*speed),
                count: Some(*constraints),
                ..Row::default()
            },
            Record::Collision { tick, vehicle, ped, x, y, offset } => Row {
                tick: *tick,
                record: "collision".into(),
                entity: Some(*vehicle),
                car: Some(*ped),
                x: Some(*x),
                y: Some(*y),
                d: Some(*offset),
                ..Row::default()
            },
            Record::Anomaly { tick, op, detail } => Row {
                tick: *tick,
                record: "anomaly".into(),
                kind: Some(op.clone()),
                detail: Some(detail.clone()),
                ..Row::default()
            },
        }
    }
}

impl TryFrom<Row> for Record {
    type Error = Error;

    fn try_from(r: Row) -> Result<Record> {
        let t = r.tick;
        Ok(match r.record.as_str() {
            "ped" => Record::Pedestrian {
                tick: t,
                id: need(r.entity, t, "entity")?,
                walker: r.kind.as_deref() == Some("walker"),
                x: need(r.x, t, "x")?,
                y: need(r.y, t, "y")?,
                speed: need(r.speed, t, "speed")?,
            },
            "obs" => Record::Observation {
                tick: t,
                car: need(r.car, t, "car")?,
                ped: need(r.entity, t, "entity")?,
                rss: [
                    need(r.rss_fl, t, "rss_fl")?,
                    need(r.rss_fr, t, "rss_fr")?,
                    need(r.rss_rl, t, "rss_rl")?,
                    need(r.rss_rr, t, "rss_rr")?,
                ],
                slot: need(r.slot, t, "slot")?,
                clear: need(r.flag, t, "flag")?,
            },
            "fix" => Record::Fix {
                tick: t,
                watch: need(r.count, t, "count")?,
                car: need(r.car, t, "car")?,
                pair: parse_pair(r.pair.as_deref())?,
                ped: need(r.entity, t, "entity")?,
                const_value: need(r.const_value, t, "const_value")?,
                verdict: parse_verdict(r.verdict.as_deref())?,
                est_y: r.est_y,
                est_d: r.est_d,
                true_y: need(r.y, t, "y")?,
                true_d: need(r.d, t, "d")?,
            },
            "cohort" => Record::Cohort {
                tick: t,
                watch: need(r.count, t, "count")?,
                car: need(r.car, t, "car")?,
                pair: parse_pair(r.pair.as_deref())?,
                kind: parse_kind(r.kind.as_deref())?,
                tail_y: need(r.est_y, t, "est_y")?,
                speed: need(r.est_speed, t, "est_speed")?,
                remaining: need(r.delta, t, "delta")?,
                distance: need(r.distance, t, "distance")?,
                tail_ped: r.entity,
                true_y: r.y,
                true_speed: r.true_speed,
                true_remaining: r.true_delta,
            },
            "alert" => Record::Alert {
                tick: t,
                watch: need(r.entity, t, "entity")?,
                car: need(r.car, t, "car")?,
                reissue: r.kind.as_deref() == Some("reissue"),
                origin_x: need(r.x, t, "x")?,
                crossing_x: need(r.d, t, "d")?,
                remaining: need(r.delta, t, "delta")?,
                distance: need(r.distance, t, "distance")?,
                clear_time: need(r.clear_time, t, "clear_time")?,
                in_zone: need(r.count, t, "count")?,
                fallback: r.range,
            },
            "caution" => Record::Caution {
                tick: t,
                vehicle: need(r.entity, t, "entity")?,
                emitter: r.car,
                crossing_x: need(r.x, t, "x")?,
                clear_time: need(r.clear_time, t, "clear_time")?,
                applied: need(r.flag, t, "flag")?,
            },
            "vehicle" => Record::Vehicle {
                tick: t,
                id: need(r.entity, t, "entity")?,
                x: need(r.x, t, "x")?,
                speed: need(r.speed, t, "speed")?,
                constraints: need(r.count, t, "count")?,
            },
            "collision" => Record::Collision {
                tick: t,
                vehicle: need(r.entity, t, "entity")?,
                ped: need(r.car, t, "car")?,
                x: need(r.x, t, "x")?,
                y: need(r.y, t, "y")?,
                offset: need(r.d, t, "d")?,
            },
            "anomaly" => Record::Anomaly {
                tick: t,
                op: r.kind.unwrap_or_default(),
                detail: r.detail.unwrap_or_default(),
            },
            other => return Err(Error::Parse(format!("tick {t}: unknown record type {other:?}"))),
        })
    }
}

/// Ordered record log of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickTrace {
    pub records: Vec<Record>,
}

impl TickTrace {
    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Record> {
        self.records.iter()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.records {
            w.serialize(Row::from(r))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<TickTrace> {
        let mut rd = csv::Reader::from_reader(input);
        let mut trace = TickTrace::default();
        for row in rd.deserialize::<Row>() {
            let row = row?;
            trace.push(Record::try_from(row)?);
        }
        Ok(trace)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_file(path: &std::path::Path) -> Result<TickTrace> {
        let f = std::fs::File::open(path)?;
        TickTrace::read_csv(std::io::BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TickTrace {
        let mut t = TickTrace::default();
        t.push(Record::Pedestrian { tick: 1, id: 3, walker: false, x: 61.2, y: -0.4, speed: 1.1 });
        t.push(Record::Observation { tick: 1, car: 0, ped: 3, rss: [0.5, 0.25, 0.1, 0.1 / 3.0], slot: 17, clear: true });
        t.push(Record::Fix {
            tick: 1,
            watch: 0,
            car: 0,
            pair: Pair::Front,
            ped: 3,
            const_value: -1.25,
            verdict: Verdict::OnSidewalk,
            est_y: None,
            est_d: Some(1.2),
            true_y: -0.4,
            true_d: 1.2,
        });
        t.push(Record::Cohort {
            tick: 2,
            watch: 0,
            car: 0,
            pair: Pair::Rear,
            kind: UpdateKind::Joined,
            tail_y: 1.0,
            speed: 1.2,
            remaining: 9.833333333333334,
            distance: 177.5,
            tail_ped: Some(3),
            true_y: Some(0.9),
            true_speed: Some(1.1),
            true_remaining: None,
        });
        t.push(Record::Alert {
            tick: 2,
            watch: 0,
            car: 0,
            reissue: false,
            origin_x: 60.0,
            crossing_x: 61.2,
            remaining: 9.8,
            distance: 177.0,
            clear_time: 11.8,
            in_zone: 1,
            fallback: Some(117.0),
        });
        t.push(Record::Caution { tick: 2, vehicle: 1, emitter: None, crossing_x: 61.2, clear_time: 11.8, applied: true });
        t.push(Record::Vehicle { tick: 2, id: 1, x: 30.0, speed: 3.0, constraints: 1 });
        t.push(Record::Collision { tick: 3, vehicle: 1, ped: 3, x: 61.0, y: 3.0, offset: -0.2 });
        t.push(Record::Anomaly { tick: 3, op: "lateral_y".into(), detail: "rss, below floor".into() });
        t
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let bytes = t.to_csv_bytes().unwrap();
        let back = TickTrace::read_csv(&bytes[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_csv_bytes().unwrap(), bytes);
    }

    #[test]
    fn header_is_first_line() {
        let bytes = sample().to_csv_bytes().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("tick,record,entity,car,pair,kind,x,y,d,speed,"));
    }

    #[test]
    fn empty_trace_has_header() {
        let bytes = TickTrace::default().to_csv_bytes().unwrap();
        assert_eq!(TickTrace::read_csv(&bytes[..]).unwrap(), TickTrace::default());
    }

    #[test]
    fn unknown_record_rejected() {
        let text = "tick,record\n1,bogus\n";
        assert!(TickTrace::read_csv(text.as_bytes()).is_err());
    }
}
