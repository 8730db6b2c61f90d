//! Physical layer: free-space RSS, Gaussian receiver noise, slotted shoe
//! transmissions and the balls-into-bins clear-transmission count.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest RSS a receiver reports after noise (mW). Keeps reciprocals finite.
pub const RSS_FLOOR: f64 = 1e-6;

/// Shortest shoe-to-transceiver distance the model accepts (m).
pub const DELTA_MIN: f64 = 0.05;

/// Shoe transmitter parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmitterSpec {
    /// Transmit power in mW.
    pub power: f64,
    /// Carrier frequency in GHz. Carried for configuration fidelity; the
    /// free-space model here does not depend on it.
    pub frequency_ghz: f64,
    /// Environmental constant multiplying the transmit power.
    pub env_gamma: f64,
}

impl Default for TransmitterSpec {
    fn default() -> Self {
        TransmitterSpec {
            power: 2.0,
            frequency_ghz: 2.4,
            env_gamma: 1.0,
        }
    }
}

impl TransmitterSpec {
    /// `T * gamma`, the numerator of the free-space law.
    pub fn strength(&self) -> f64 {
        self.power * self.env_gamma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0) {
            return Err(Error::validation("tx.power", "must be > 0"));
        }
        if !(self.env_gamma > 0.0) {
            return Err(Error::validation("tx.env_gamma", "must be > 0"));
        }
        Ok(())
    }
}

/// Additive Gaussian RSS noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Standard deviation in mW. Zero gives the noise-free mode.
    pub sigma: f64,
    /// Optional dedicated seed for the noise stream; defaults to the run seed.
    #[serde(default)]
    pub rng_seed: Option<u64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma: 0.3,
            rng_seed: None,
        }
    }
}

impl NoiseSpec {
    pub fn noise_free() -> Self {
        NoiseSpec {
            sigma: 0.0,
            rng_seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::validation("noise.sigma", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Which corner transceiver of a parked car.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transceiver {
    FrontLeft,
    FrontRight,
    RearLeft,
    RearRight,
}

impl Transceiver {
    pub const ALL: [Transceiver; 4] = [
        Transceiver::FrontLeft,
        Transceiver::FrontRight,
        Transceiver::RearLeft,
        Transceiver::RearRight,
    ];
}

/// RSS at distance `delta` under the free-space model, `T*gamma / delta^2`.
pub fn free_space_rss(tx: &TransmitterSpec, delta: f64) -> Result<f64> {
    if !(delta >= DELTA_MIN) {
        return Err(Error::domain(
            "free_space_rss",
            format!("distance {delta} m below minimum {DELTA_MIN} m"),
        ));
    }
    Ok(tx.strength() / (delta * delta))
}

/// Adds one zero-mean Gaussian draw and clamps at [`RSS_FLOOR`].
pub fn apply_noise<R: Rng + ?Sized>(rss: f64, noise: &NoiseSpec, rng: &mut R) -> f64 {
    if noise.sigma == 0.0 {
        return rss;
    }
    // sigma validated > 0 and finite here
    let draw = Normal::new(0.0, noise.sigma)
        .expect("validated sigma")
        .sample(rng);
    noisy_rss(rss, draw)
}

/// `max(rss + draw, RSS_FLOOR)`; the deterministic half of [`apply_noise`].
pub fn noisy_rss(rss: f64, draw: f64) -> f64 {
    (rss + draw).max(RSS_FLOOR)
}

/// Inverts the free-space law: `sqrt(T*gamma / rss)`.
pub fn distance_from_rss(rss: f64, tx: &TransmitterSpec) -> Result<f64> {
    if !(rss > 0.0) {
        return Err(Error::domain(
            "distance_from_rss",
            format!("rss {rss} mW must be > 0"),
        ));
    }
    Ok((tx.strength() / rss).sqrt())
}

/// One transmitter's slot within a second and whether it was alone in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotAssignment<T> {
    pub id: T,
    pub slot: u32,
    pub clear: bool,
}

/// Draws an independent uniform slot in `[0, m)` for every transmitter and
/// flags those that share a slot with anyone else.
///
/// Panics if `m == 0`.
pub fn assign_slots<T: Copy, R: Rng + ?Sized>(
    ids: &[T],
    m: u32,
    rng: &mut R,
) -> Vec<SlotAssignment<T>> {
    assert!(m >= 1, "slot count must be >= 1");
    let slots: Vec<u32> = ids.iter().map(|_| rng.random_range(0..m)).collect();
    let mut occupancy = std::collections::HashMap::with_capacity(slots.len());
    for &s in &slots {
        *occupancy.entry(s).or_insert(0u32) += 1;
    }
    ids.iter()
        .zip(slots)
        .map(|(&id, slot)| SlotAssignment {
            id,
            slot,
            clear: occupancy[&slot] == 1,
        })
        .collect()
}

/// Number of clear transmissions in one simulated second of `k` transmitters.
pub fn clear_count<R: Rng + ?Sized>(k: usize, m: u32, rng: &mut R) -> usize {
    let ids: Vec<usize> = (0..k).collect();
    assign_slots(&ids, m, rng)
        .into_iter()
        .filter(|a| a.clear)
        .count()
}

/// `E[M] = k (1 - 1/m)^(k-1)`.
pub fn expected_clear(k: u32, m: u32) -> f64 {
    assert!(m >= 1, "slot count must be >= 1");
    if k == 0 {
        return 0.0;
    }
    let k_f = f64::from(k);
    k_f * (1.0 - 1.0 / f64::from(m)).powi(k as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use approx::assert_relative_eq;

    fn tx(t: f64, g: f64) -> TransmitterSpec {
        TransmitterSpec {
            power: t,
            frequency_ghz: 2.4,
            env_gamma: g,
        }
    }

    #[test]
    fn free_space_examples() {
        assert_relative_eq!(free_space_rss(&tx(2.0, 1.0), 2.0).unwrap(), 0.5);
        assert_relative_eq!(
            free_space_rss(&tx(2.0, 1.0), 2f64.sqrt()).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        for (t, g) in [(2.0, 1.0), (0.7, 3.1), (10.0, 0.2)] {
            let a = free_space_rss(&tx(t, g), 1.3).unwrap();
            let b = free_space_rss(&tx(t, g), 2.6).unwrap();
            assert_relative_eq!(b, a / 4.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn free_space_rejects_degenerate_distance() {
        assert!(matches!(
            free_space_rss(&tx(2.0, 1.0), 0.01),
            Err(Error::Domain { .. })
        ));
        assert!(free_space_rss(&tx(2.0, 1.0), f64::NAN).is_err());
    }

    #[test]
    fn noise_examples() {
        let mut rng = stream_rng(1, Stream::Noise);
        assert_eq!(apply_noise(0.5, &NoiseSpec::noise_free(), &mut rng), 0.5);

        let spec = NoiseSpec {
            sigma: 0.3,
            rng_seed: None,
        };
        let a = apply_noise(0.5, &spec, &mut stream_rng(11, Stream::Noise));
        let b = apply_noise(0.5, &spec, &mut stream_rng(11, Stream::Noise));
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, 0.5);

        assert_eq!(noisy_rss(0.01, -0.5), RSS_FLOOR);
    }

    #[test]
    fn distance_examples() {
        let t = tx(2.0, 1.0);
        assert_relative_eq!(distance_from_rss(0.5, &t).unwrap(), 2.0);
        assert_relative_eq!(distance_from_rss(2.0, &t).unwrap(), 1.0);
        assert!(distance_from_rss(0.0, &t).is_err());
        assert!(distance_from_rss(-1.0, &t).is_err());
    }

    #[test]
    fn slot_examples() {
        let mut rng = stream_rng(3, Stream::Slots);
        for m in [1, 2, 50] {
            let one = assign_slots(&[42u32], m, &mut rng);
            assert!(one[0].clear);
            assert!(one[0].slot < m);
        }
        let two = assign_slots(&[1u32, 2], 1, &mut rng);
        assert!(two.iter().all(|a| !a.clear));
        assert!(assign_slots::<u32, _>(&[], 5, &mut rng).is_empty());
    }

    /// Exhaustive enumeration of all m^k slot assignments.
    fn enumerated_expected_clear(k: u32, m: u32) -> f64 {
        let total = m.pow(k);
        let mut clear_sum = 0u64;
        for code in 0..total {
            let mut slots = Vec::with_capacity(k as usize);
            let mut c = code;
            for _ in 0..k {
                slots.push(c % m);
                c /= m;
            }
            for &s in &slots {
                if slots.iter().filter(|&&o| o == s).count() == 1 {
                    clear_sum += 1;
                }
            }
        }
        clear_sum as f64 / f64::from(total)
    }

    #[test]
    fn expected_clear_matches_enumeration() {
        assert_eq!(expected_clear(0, 50), 0.0);
        assert_eq!(expected_clear(1, 50), 1.0);
        assert_relative_eq!(expected_clear(2, 2), 1.0);
        assert_relative_eq!(enumerated_expected_clear(2, 2), 1.0);
        for k in 1..=5 {
            for m in 1..=5 {
                assert_relative_eq!(
                    expected_clear(k, m),
                    enumerated_expected_clear(k, m),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn expected_clear_worked_value() {
        let v = expected_clear(8, 50);
        assert!((v - 6.9).abs() < 0.05, "{v}");
    }
}
