//! Sidewalk/street classification and pedestrian localization from the RSS
//! seen by one transceiver pair of a parked car.
//!
//! Street frame: `x` runs along the street in the direction of traffic, the
//! lateral coordinate `y` is measured from the parked-side sidewalk edge, with
//! `y > 0` in the street and `y <= 0` on the sidewalk. The right (`R`)
//! transceiver of a pair sits at lateral `z`, the left (`L`) one at `z + w`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{TransmitterSpec, RSS_FLOOR};

/// Triangle-inequality slack (m) for exact (noise-free) inputs.
pub const TOL_TRIANGLE_EXACT: f64 = 1e-9;
/// Triangle-inequality slack (m) for noisy distances; violations up to this
/// are read as collinear (`d = 0`).
pub const TOL_TRIANGLE_NOISY: f64 = 0.05;

/// Where a parked car sits and how its transceivers are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarGeometry {
    /// Lateral separation of the left and right transceivers (car width).
    pub width_w: f64,
    /// Lateral gap between the right transceivers and the sidewalk edge.
    pub sidewalk_gap_z: f64,
    /// Longitudinal coordinate of the front transceiver line.
    pub position_x: f64,
    pub street_width_w: f64,
    /// Front-to-rear transceiver separation.
    pub length: f64,
}

impl CarGeometry {
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.width_w > 0.0) {
            return Err(Error::validation(format!("{field}.width_w"), "must be > 0"));
        }
        if !(self.sidewalk_gap_z >= 0.0) {
            return Err(Error::validation(
                format!("{field}.sidewalk_gap_z"),
                "must be >= 0",
            ));
        }
        if !(self.length > 0.0) {
            return Err(Error::validation(format!("{field}.length"), "must be > 0"));
        }
        if !(self.street_width_w > self.width_w + self.sidewalk_gap_z) {
            return Err(Error::validation(
                "street_width_w",
                format!(
                    "{} must exceed car width {} + sidewalk gap {}",
                    self.street_width_w, self.width_w, self.sidewalk_gap_z
                ),
            ));
        }
        Ok(())
    }

    pub fn rear_x(&self) -> f64 {
        self.position_x - self.length
    }

    /// Longitudinal line of the given pair.
    pub fn pair_line_x(&self, pair: Pair) -> f64 {
        match pair {
            Pair::Front => self.position_x,
            Pair::Rear => self.rear_x(),
        }
    }

    /// Signed distance from the pair line, positive away from the car body.
    pub fn signed_offset(&self, pair: Pair, x: f64) -> f64 {
        match pair {
            Pair::Front => x - self.position_x,
            Pair::Rear => self.rear_x() - x,
        }
    }

    /// Coordinate `d` metres out from the pair line, away from the car body.
    pub fn point_ahead(&self, pair: Pair, d: f64) -> f64 {
        match pair {
            Pair::Front => self.position_x + d,
            Pair::Rear => self.rear_x() - d,
        }
    }

    /// Exact distances `(delta_L, delta_R)` from a point to the pair.
    pub fn pair_distances(&self, pair: Pair, x: f64, y: f64) -> (f64, f64) {
        let d = self.signed_offset(pair, x);
        let to_r = y - self.sidewalk_gap_z;
        let to_l = self.sidewalk_gap_z + self.width_w - y;
        (to_l.hypot(d), to_r.hypot(d))
    }
}

/// Transceiver pair used for a localization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    Front,
    Rear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    InStreet,
    OnSidewalk,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::InStreet => "in_street",
            Verdict::OnSidewalk => "on_sidewalk",
        }
    }
}

/// How a reciprocal difference exactly equal to the threshold is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    #[default]
    Sidewalk,
    Street,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub const_value: f64,
    pub verdict: Verdict,
}

/// Localized in-street pedestrian, as seen by one pair at one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedestrianFix {
    pub y: f64,
    /// `None` when the noisy distances are not a triangle within tolerance.
    pub d: Option<f64>,
    pub tick: u32,
}

/// `1/RSS(L) - 1/RSS(R)`.
pub fn reciprocal_diff(rss_l: f64, rss_r: f64) -> Result<f64> {
    if !(rss_l >= RSS_FLOOR) || !(rss_r >= RSS_FLOOR) {
        return Err(Error::domain(
            "reciprocal_diff",
            format!("rss ({rss_l}, {rss_r}) below floor {RSS_FLOOR}"),
        ));
    }
    Ok(1.0 / rss_l - 1.0 / rss_r)
}

/// Reciprocal difference of every point on the sidewalk edge, `(w^2 + 2wz)/(T*gamma)`.
pub fn sidewalk_threshold_c0(geom: &CarGeometry, tx: &TransmitterSpec) -> f64 {
    let w = geom.width_w;
    (w * w + 2.0 * w * geom.sidewalk_gap_z) / tx.strength()
}

pub fn classify(const_value: f64, c0: f64) -> Verdict {
    classify_with(const_value, c0, TieRule::Sidewalk)
}

pub fn classify_with(const_value: f64, c0: f64, tie: TieRule) -> Verdict {
    if const_value < c0 {
        Verdict::InStreet
    } else if const_value > c0 {
        Verdict::OnSidewalk
    } else {
        match tie {
            TieRule::Sidewalk => Verdict::OnSidewalk,
            TieRule::Street => Verdict::InStreet,
        }
    }
}

/// Lateral distance from the sidewalk edge recovered from the pair's RSS.
pub fn lateral_y(rss_l: f64, rss_r: f64, geom: &CarGeometry, tx: &TransmitterSpec) -> Result<f64> {
    let w = geom.width_w;
    let c = reciprocal_diff(rss_l, rss_r)?;
    Ok(w / 2.0 + geom.sidewalk_gap_z - tx.strength() / (2.0 * w) * c)
}

/// Height of the pedestrian above the pair line, from the triangle with sides
/// `delta_l`, `delta_r` and `w` (Heron's formula, in Kahan's cancellation-free
/// arrangement).
///
/// A longest side exceeding the sum of the other two by at most `tol` metres
/// is read as a degenerate triangle (`d = 0`).
pub fn longitudinal_d(delta_l: f64, delta_r: f64, w: f64, tol: f64) -> Result<f64> {
    if !(delta_l >= 0.0 && delta_r >= 0.0 && w > 0.0) {
        return Err(Error::domain(
            "longitudinal_d",
            format!("sides ({delta_l}, {delta_r}, {w}) must be non-negative with w > 0"),
        ));
    }
    let mut s = [delta_l, delta_r, w];
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    let excess = (a - b) - c;
    if excess > tol {
        return Err(Error::domain(
            "longitudinal_d",
            format!("sides ({delta_l}, {delta_r}, {w}) violate the triangle inequality by {excess}"),
        ));
    }
    // 16 * area^2
    let rad16 = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    let area_sq = rad16 / 16.0;
    Ok(2.0 / w * area_sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::free_space_rss;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_car() -> CarGeometry {
        CarGeometry {
            width_w: 1.8,
            sidewalk_gap_z: 0.4,
            position_x: 100.0,
            street_width_w: 12.8,
            length: 4.5,
        }
    }

    fn tx() -> TransmitterSpec {
        TransmitterSpec {
            power: 2.0,
            frequency_ghz: 2.4,
            env_gamma: 1.0,
        }
    }

    /// Exact RSS pair `(L, R)` for a point, via the forward model.
    fn rss_at(car: &CarGeometry, x: f64, y: f64) -> (f64, f64) {
        let (dl, dr) = car.pair_distances(Pair::Front, x, y);
        (
            free_space_rss(&tx(), dl).unwrap(),
            free_space_rss(&tx(), dr).unwrap(),
        )
    }

    #[test]
    fn reciprocal_diff_examples() {
        assert_eq!(reciprocal_diff(0.3, 0.3).unwrap(), 0.0);
        assert_relative_eq!(reciprocal_diff(0.25, 0.5).unwrap(), 2.0);
        assert_relative_eq!(
            reciprocal_diff(0.25, 0.5).unwrap(),
            -reciprocal_diff(0.5, 0.25).unwrap()
        );
        assert!(reciprocal_diff(0.0, 0.5).is_err());
    }

    #[test]
    fn reciprocal_diff_constant_along_parallel_walk() {
        let car = table_car();
        let (l, r) = rss_at(&car, 100.1, 2.0);
        let reference = reciprocal_diff(l, r).unwrap();
        for i in 1..=200 {
            let (l, r) = rss_at(&car, 100.0 + 0.1 * i as f64, 2.0);
            assert_relative_eq!(reciprocal_diff(l, r).unwrap(), reference, epsilon = 1e-9);
        }
    }

    #[test]
    fn threshold_examples() {
        let car = table_car();
        assert_relative_eq!(sidewalk_threshold_c0(&car, &tx()), 2.34, max_relative = 1e-12);
        let flush = CarGeometry {
            sidewalk_gap_z: 0.0,
            ..car
        };
        assert_relative_eq!(sidewalk_threshold_c0(&flush, &tx()), 1.62, max_relative = 1e-12);
        // any point on the edge line reproduces the threshold
        for x in [98.0, 100.3, 101.7, 104.2] {
            let (l, r) = rss_at(&car, x, 0.0);
            assert_relative_eq!(
                reciprocal_diff(l, r).unwrap(),
                sidewalk_threshold_c0(&car, &tx()),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(0.0, 2.34), Verdict::InStreet);
        assert_eq!(classify(2.34, 2.34), Verdict::OnSidewalk);
        assert_eq!(classify_with(2.34, 2.34, TieRule::Street), Verdict::InStreet);

        let car = table_car();
        let c0 = sidewalk_threshold_c0(&car, &tx());
        let (l, r) = rss_at(&car, 101.0, 1.0);
        assert_eq!(classify(reciprocal_diff(l, r).unwrap(), c0), Verdict::InStreet);
        let (l, r) = rss_at(&car, 101.0, -1.0);
        assert_eq!(classify(reciprocal_diff(l, r).unwrap(), c0), Verdict::OnSidewalk);
    }

    #[test]
    fn lateral_examples() {
        let car = table_car();
        // straight out from R
        let (l, r) = rss_at(&car, 101.5, car.sidewalk_gap_z);
        assert_relative_eq!(lateral_y(l, r, &car, &tx()).unwrap(), 0.4, epsilon = 1e-12);
        // midline
        let (l, r) = rss_at(&car, 101.5, 0.4 + 0.9);
        assert_relative_eq!(lateral_y(l, r, &car, &tx()).unwrap(), 1.3, epsilon = 1e-12);
        let (l, r) = rss_at(&car, 101.2, 3.0);
        assert!((lateral_y(l, r, &car, &tx()).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn longitudinal_examples() {
        let w = 1.8;
        assert_relative_eq!(
            longitudinal_d(w, w, w, TOL_TRIANGLE_EXACT).unwrap(),
            w * 3f64.sqrt() / 2.0,
            max_relative = 1e-14
        );
        // collinear: zero up to the rounding of 2.0 + w
        assert!(longitudinal_d(2.0 + w, 2.0, w, TOL_TRIANGLE_EXACT).unwrap() < 1e-6);

        let (x, d) = (0.5, 1.936);
        let dl = ((w - x) * (w - x) + d * d).sqrt();
        let dr = (x * x + d * d).sqrt();
        assert!((longitudinal_d(dl, dr, w, TOL_TRIANGLE_EXACT).unwrap() - d).abs() < 1e-6);

        assert!(longitudinal_d(5.0, 1.0, w, TOL_TRIANGLE_EXACT).is_err());
        // slightly inconsistent noisy distances collapse to the line
        assert_eq!(longitudinal_d(3.81, 2.0, w, TOL_TRIANGLE_NOISY).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn parallel_walk_gives_constant(y in -3.0f64..12.0, d1 in 0.1f64..20.0, d2 in 0.1f64..20.0) {
            let car = table_car();
            let (l1, r1) = rss_at(&car, 100.0 + d1, y);
            let (l2, r2) = rss_at(&car, 100.0 + d2, y);
            let c1 = reciprocal_diff(l1, r1).unwrap();
            let c2 = reciprocal_diff(l2, r2).unwrap();
            prop_assert!((c1 - c2).abs() <= 1e-9 * (1.0 + c1.abs()));
        }

        #[test]
        fn const_strictly_decreasing_in_y(y in -3.0f64..12.0, gap in 0.001f64..3.0, d in 0.1f64..10.0) {
            let car = table_car();
            let (l1, r1) = rss_at(&car, 100.0 + d, y);
            let (l2, r2) = rss_at(&car, 100.0 + d, y + gap);
            prop_assert!(reciprocal_diff(l1, r1).unwrap() > reciprocal_diff(l2, r2).unwrap());
        }

        #[test]
        fn lateral_inverts_forward_model(y in 0.0f64..12.8, d in 0.1f64..6.0) {
            let car = table_car();
            let (l, r) = rss_at(&car, 100.0 + d, y);
            prop_assert!((lateral_y(l, r, &car, &tx()).unwrap() - y).abs() < 1e-9);
        }

        #[test]
        fn heron_recovers_height(x in 0.0f64..1.8, d in 0.0f64..20.0) {
            let w = 1.8;
            let dl = ((w - x) * (w - x) + d * d).sqrt();
            let dr = (x * x + d * d).sqrt();
            let got = longitudinal_d(dl, dr, w, TOL_TRIANGLE_EXACT).unwrap();
            prop_assert!((got - d).abs() < 1e-6, "{} vs {}", got, d);
        }
    }
}
