//! Safety-zone sizing and alert/caution dissemination along the parked-car
//! chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chain-internal alert: origin location, issue time and Distance-to-Live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlertMessage {
    pub origin_x: f64,
    pub issue_tick: u32,
    pub distance_to_live: f64,
}

/// Parked-to-approaching-car message: where the cohort crosses and when it
/// is expected to be clear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CautionMessage {
    pub crossing_x: f64,
    pub clear_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainNode {
    pub id: u32,
    pub car_x: f64,
    pub in_safety_zone: bool,
}

impl ChainNode {
    pub fn new(id: u32, car_x: f64) -> Self {
        ChainNode {
            id,
            car_x,
            in_safety_zone: false,
        }
    }
}

/// Outcome of relaying one alert down a chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Propagation {
    /// `(node id, hop count)` for every node that joined the zone, origin first.
    pub in_zone: Vec<(u32, u32)>,
    /// First node found beyond the Distance-to-Live; it drops the alert.
    pub discarded_by: Option<u32>,
    /// Long-range broadcast needed because the chain ended inside the zone.
    pub fallback: Option<Fallback>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fallback {
    pub node: u32,
    pub node_x: f64,
    /// Residual zone length covered by the broadcast, measured upstream
    /// from `node_x`.
    pub range: f64,
}

/// `(delta + r) * v_max`.
pub fn zone_distance(delta_t: f64, reaction_r: f64, v_max: f64) -> f64 {
    (delta_t + reaction_r) * v_max
}

/// Relays `alert` hop by hop from `chain[0]` (the origin) and marks every node
/// within the Distance-to-Live. Relaying stops at the first node beyond it.
///
/// `chain` must be ordered from the origin away from it; nodes not reached are
/// left untouched.
pub fn propagate_alert(chain: &mut [ChainNode], alert: &AlertMessage) -> Propagation {
    let mut out = Propagation::default();
    for (hops, node) in chain.iter_mut().enumerate() {
        if (alert.origin_x - node.car_x).abs() <= alert.distance_to_live {
            node.in_safety_zone = true;
            out.in_zone.push((node.id, hops as u32));
        } else {
            out.discarded_by = Some(node.id);
            return out;
        }
    }
    if let Some(last) = chain.last() {
        let range = dsrc_fallback_range(last.car_x, alert.origin_x, alert.distance_to_live)
            .expect("last node is in the zone");
        out.fallback = Some(Fallback {
            node: last.id,
            node_x: last.car_x,
            range,
        });
    }
    out
}

/// Zone length left uncovered when the chain ends at `last_in_zone_x`.
pub fn dsrc_fallback_range(last_in_zone_x: f64, origin_x: f64, distance: f64) -> Result<f64> {
    let residual = distance - (origin_x - last_in_zone_x).abs();
    if residual < 0.0 {
        return Err(Error::domain(
            "dsrc_fallback_range",
            format!("node at {last_in_zone_x} is outside the {distance} m zone of {origin_x}"),
        ));
    }
    Ok(residual)
}

/// Only a strictly larger zone is re-announced.
pub fn should_reissue(d_new: f64, d_old: f64) -> bool {
    d_new > d_old
}

/// Builds the caution a zone member broadcasts. `d` is the signed offset of
/// the crossing from the origin's pair line.
pub fn emit_caution(node: &ChainNode, alert: &AlertMessage, d: f64, delta: f64) -> Result<CautionMessage> {
    if !node.in_safety_zone {
        return Err(Error::logic(
            "emit_caution",
            format!("node {} is not in the safety zone", node.id),
        ));
    }
    Ok(CautionMessage {
        crossing_x: alert.origin_x + d,
        clear_time: f64::from(alert.issue_tick) + delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chain(offsets: &[f64]) -> Vec<ChainNode> {
        offsets
            .iter()
            .enumerate()
            .map(|(i, o)| ChainNode::new(i as u32, 1000.0 - o))
            .collect()
    }

    fn alert(d: f64) -> AlertMessage {
        AlertMessage {
            origin_x: 1000.0,
            issue_tick: 0,
            distance_to_live: d,
        }
    }

    #[test]
    fn zone_distance_examples() {
        assert_relative_eq!(zone_distance(8.0, 2.0, 15.0), 150.0);
        assert_relative_eq!(zone_distance(8.0, 0.0, 15.0), 120.0);
        assert_eq!(zone_distance(0.0, 0.0, 13.0), 0.0);
    }

    #[test]
    fn propagation_stops_at_first_node_beyond() {
        let mut c = chain(&[0.0, 40.0, 90.0, 140.0, 190.0]);
        let p = propagate_alert(&mut c, &alert(150.0));
        let ids: Vec<u32> = p.in_zone.iter().map(|z| z.0).collect();
        assert_eq!(ids, vec![0, 1, 2, 3]);
        assert_eq!(p.in_zone[3].1, 3);
        assert_eq!(p.discarded_by, Some(4));
        assert!(p.fallback.is_none());
        assert!(!c[4].in_safety_zone);

        let mut c = chain(&[0.0, 40.0]);
        let p = propagate_alert(&mut c, &alert(0.0));
        assert_eq!(p.in_zone, vec![(0, 0)]);

        let mut c = chain(&[0.0]);
        let p = propagate_alert(&mut c, &alert(50.0));
        assert_eq!(p.in_zone, vec![(0, 0)]);
        assert_eq!(p.fallback.unwrap().range, 50.0);
    }

    #[test]
    fn fallback_examples() {
        assert_relative_eq!(dsrc_fallback_range(-90.0, 0.0, 150.0).unwrap(), 60.0);
        assert_eq!(dsrc_fallback_range(-150.0, 0.0, 150.0).unwrap(), 0.0);
        assert!(dsrc_fallback_range(-160.0, 0.0, 150.0).is_err());

        let mut c = chain(&[0.0, 40.0, 90.0]);
        let p = propagate_alert(&mut c, &alert(150.0));
        let fb = p.fallback.unwrap();
        assert_eq!(fb.node, 2);
        assert_relative_eq!(fb.range, 60.0);
    }

    #[test]
    fn reissue_rule() {
        assert!(should_reissue(150.0, 120.0));
        assert!(!should_reissue(120.0, 150.0));
        assert!(!should_reissue(150.0, 150.0));
    }

    #[test]
    fn caution_fields() {
        let a = AlertMessage {
            origin_x: 500.0,
            issue_tick: 100,
            distance_to_live: 150.0,
        };
        let mut n = ChainNode::new(1, 480.0);
        assert!(emit_caution(&n, &a, 1.9, 8.0).is_err());
        n.in_safety_zone = true;
        let c = emit_caution(&n, &a, 1.9, 8.0).unwrap();
        assert_relative_eq!(c.crossing_x, 501.9);
        assert_eq!(c.clear_time, 108.0);
        assert_eq!(emit_caution(&n, &a, 1.9, 0.0).unwrap().clear_time, 100.0);
    }
}
