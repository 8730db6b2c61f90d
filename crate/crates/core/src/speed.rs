//! Approaching-car safe speed over one or several crossing constraints, read
//! off the time-space diagram: the car must not reach a crossing location
//! before the cohort there is clear.

use serde::{Deserialize, Serialize};

/// Cautions whose crossing locations are this close are the same crossing.
pub const DUPLICATE_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortConstraint {
    pub location: f64,
    pub clear_time: f64,
    pub received_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMode {
    /// Recompute the binding slope every tick.
    #[default]
    Reevaluate,
    /// Keep the speed chosen at the last event until the next one.
    Hold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarKinematics {
    pub position: f64,
    pub speed: f64,
    pub v_max: f64,
    /// Speed the car drives at when unconstrained (never above `v_max`).
    pub cruise: f64,
    pub constraints: Vec<CohortConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CarEvent {
    Caution { location: f64, clear_time: f64 },
    Expired,
}

impl CarKinematics {
    pub fn new(position: f64, v_max: f64, cruise: f64) -> Self {
        let cruise = cruise.min(v_max);
        CarKinematics {
            position,
            speed: cruise,
            v_max,
            cruise,
            constraints: Vec::new(),
        }
    }

    /// A constraint at the car's own position holds it until clear.
    fn is_live(&self, c: &CohortConstraint, now: f64) -> bool {
        c.location >= self.position && c.clear_time > now
    }

    pub fn active_constraints(&self, now: f64) -> usize {
        self.constraints.iter().filter(|c| self.is_live(c, now)).count()
    }

    /// Drops constraints that are behind the car or already clear.
    pub fn prune(&mut self, now: f64) -> bool {
        let before = self.constraints.len();
        let pos = self.position;
        self.constraints
            .retain(|c| c.location >= pos && c.clear_time > now);
        before != self.constraints.len()
    }
}

/// Largest speed that reaches no live constraint before its clear time.
pub fn safe_speed(car: &CarKinematics, now: f64) -> f64 {
    car.constraints
        .iter()
        .filter(|c| car.is_live(c, now))
        .map(|c| (c.location - car.position) / (c.clear_time - now))
        .fold(car.v_max, f64::min)
}

/// Position after holding the current speed for `dt` seconds.
pub fn advance_position(car: &CarKinematics, dt: f64) -> f64 {
    car.position + car.speed * dt
}

/// Applies a caution or an expiry and returns whether the constraint set changed.
pub fn on_event(car: &mut CarKinematics, event: CarEvent, now: f64) -> bool {
    let changed = match event {
        CarEvent::Caution { location, clear_time } => {
            if location < car.position || clear_time <= now {
                false
            } else {
                let incoming = CohortConstraint {
                    location,
                    clear_time,
                    received_time: now,
                };
                match car
                    .constraints
                    .iter_mut()
                    .find(|c| (c.location - location).abs() <= DUPLICATE_RADIUS)
                {
                    Some(existing) => {
                        // a duplicate never shortens the wait already promised
                        let merged = CohortConstraint {
                            clear_time: incoming.clear_time.max(existing.clear_time),
                            ..incoming
                        };
                        let same = existing.location == merged.location
                            && existing.clear_time == merged.clear_time;
                        if !same {
                            *existing = merged;
                        }
                        !same
                    }
                    None => {
                        car.constraints.push(incoming);
                        true
                    }
                }
            }
        }
        CarEvent::Expired => car.prune(now),
    };
    if changed {
        car.speed = safe_speed(car, now).min(car.cruise);
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn car_at(pos: f64) -> CarKinematics {
        CarKinematics::new(pos, 15.0, 15.0)
    }

    #[test]
    fn single_constraint_slope() {
        let mut car = car_at(0.0);
        car.constraints.push(CohortConstraint {
            location: 100.0,
            clear_time: 10.0,
            received_time: 0.0,
        });
        assert_relative_eq!(safe_speed(&car, 0.0), 10.0);
    }

    #[test]
    fn no_constraints_gives_limit() {
        assert_eq!(safe_speed(&car_at(3.0), 5.0), 15.0);
    }

    #[test]
    fn three_way_minimum() {
        let mut car = car_at(0.0);
        on_event(
            &mut car,
            CarEvent::Caution {
                location: 100.0,
                clear_time: 10.0,
            },
            0.0,
        );
        on_event(
            &mut car,
            CarEvent::Caution {
                location: 60.0,
                clear_time: 8.0,
            },
            0.0,
        );
        assert_relative_eq!(car.speed, 7.5);
    }

    #[test]
    fn advance_examples() {
        let mut car = car_at(0.0);
        on_event(
            &mut car,
            CarEvent::Caution {
                location: 100.0,
                clear_time: 10.0,
            },
            0.0,
        );
        assert_relative_eq!(advance_position(&car, 4.0), 40.0);
        assert_eq!(advance_position(&car, 0.0), 0.0);
        assert_relative_eq!(advance_position(&car_at(0.0), 2.0), 30.0);
    }

    #[test]
    fn duplicates_replace() {
        let mut car = car_at(0.0);
        on_event(
            &mut car,
            CarEvent::Caution {
                location: 100.0,
                clear_time: 10.0,
            },
            0.0,
        );
        on_event(
            &mut car,
            CarEvent::Caution {
                location: 100.3,
                clear_time: 12.0,
            },
            1.0,
        );
        assert_eq!(car.constraints.len(), 1);
        assert_eq!(car.constraints[0].clear_time, 12.0);
        // identical repeat is not an event
        assert!(!on_event(
            &mut car,
            CarEvent::Caution {
                location: 100.3,
                clear_time: 12.0,
            },
            2.0,
        ));
    }

    #[test]
    fn constraint_at_position_holds_car() {
        let mut car = car_at(40.0);
        assert!(on_event(
            &mut car,
            CarEvent::Caution {
                location: 40.0,
                clear_time: 5.0,
            },
            1.0,
        ));
        assert_eq!(car.speed, 0.0);
        on_event(&mut car, CarEvent::Expired, 5.0);
        assert_eq!(safe_speed(&car, 5.0), car.v_max);
    }

    #[test]
    fn duplicate_keeps_later_clear_time() {
        let mut car = car_at(0.0);
        let c = |location, clear_time| CarEvent::Caution { location, clear_time };
        on_event(&mut car, c(100.0, 12.0), 0.0);
        on_event(&mut car, c(100.2, 9.0), 1.0);
        assert_eq!(car.constraints.len(), 1);
        assert_eq!(car.constraints[0].clear_time, 12.0);
        assert_eq!(car.constraints[0].location, 100.2);
    }

    #[test]
    fn behind_or_expired_cautions_dropped() {
        let mut car = car_at(50.0);
        on_event(
            &mut car,
            CarEvent::Caution {
                location: 40.0,
                clear_time: 10.0,
            },
            0.0,
        );
        on_event(
            &mut car,
            CarEvent::Caution {
                location: 80.0,
                clear_time: 3.0,
            },
            3.0,
        );
        assert!(car.constraints.is_empty());
        assert_eq!(car.speed, 15.0);
    }

    #[test]
    fn expiry_restores_looser_slope_then_limit() {
        let mut car = car_at(0.0);
        let cautions = [(50.0, 10.0), (150.0, 20.0)];
        for (l, e) in cautions {
            on_event(
                &mut car,
                CarEvent::Caution {
                    location: l,
                    clear_time: e,
                },
                0.0,
            );
        }
        assert_relative_eq!(car.speed, 5.0);
        car.position = advance_position(&car, 10.0);
        on_event(&mut car, CarEvent::Expired, 10.0);
        assert_relative_eq!(car.speed, 10.0);
        car.position = advance_position(&car, 10.0);
        on_event(&mut car, CarEvent::Expired, 20.0);
        assert_eq!(car.speed, 15.0);
    }
}
