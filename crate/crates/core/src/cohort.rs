//! Per-car crossing-cohort tracking: tail selection and the 1 Hz update of
//! tail speed and remaining crossing time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants the tracker needs from the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortParams {
    /// Speed assumed for a freshly seen tail (m/s).
    pub v0: f64,
    pub street_width: f64,
    /// Seconds between updates.
    pub tick_len: f64,
    /// Measured tail speeds are clamped into this range.
    pub speed_range: (f64, f64),
}

impl Default for CohortParams {
    fn default() -> Self {
        CohortParams {
            v0: 1.2,
            street_width: 12.8,
            tick_len: 1.0,
            speed_range: (0.0, f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohortState {
    pub owner: u32,
    pub tail_y: f64,
    pub tail_speed: f64,
    pub remaining: f64,
    pub last_tick: u32,
    pub active: bool,
}

/// Which rule produced the latest state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateKind {
    Started,
    /// Tail moved further from the sidewalk; speed measured from displacement.
    Advanced,
    /// Tail jumped back toward the sidewalk: a new member joined.
    Joined,
    /// Tail did not move; previous speed kept.
    Stationary,
    /// No clear in-street fix this tick; dead reckoning.
    Coasted,
    Completed,
}

impl UpdateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateKind::Started => "started",
            UpdateKind::Advanced => "advanced",
            UpdateKind::Joined => "joined",
            UpdateKind::Stationary => "stationary",
            UpdateKind::Coasted => "coasted",
            UpdateKind::Completed => "completed",
        }
    }
}

/// Smallest lateral position among the tick's clear in-street fixes.
pub fn select_tail(fixes: &[f64]) -> Option<f64> {
    fixes.iter().copied().reduce(f64::min)
}

/// `(W - y) / v`.
pub fn remaining_time(street_width: f64, y: f64, v: f64) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::domain("remaining_time", format!("speed {v} must be > 0")));
    }
    Ok((street_width - y) / v)
}

pub fn initialize_cohort(owner: u32, first_tail_y: f64, params: &CohortParams, tick: u32) -> CohortState {
    CohortState {
        owner,
        tail_y: first_tail_y,
        tail_speed: params.v0,
        remaining: ((params.street_width - first_tail_y) / params.v0).max(0.0),
        last_tick: tick,
        active: first_tail_y < params.street_width,
    }
}

/// Folds a new tail position into an active cohort.
pub fn update_cohort(
    state: &CohortState,
    new_tail_y: f64,
    params: &CohortParams,
    tick: u32,
) -> (CohortState, UpdateKind) {
    let w = params.street_width;
    let mut next = CohortState {
        tail_y: new_tail_y,
        last_tick: tick,
        ..*state
    };
    if new_tail_y >= w {
        next.remaining = 0.0;
        next.active = false;
        return (next, UpdateKind::Completed);
    }
    let kind = if new_tail_y > state.tail_y {
        let (lo, hi) = params.speed_range;
        next.tail_speed = ((new_tail_y - state.tail_y) / params.tick_len).clamp(lo, hi);
        UpdateKind::Advanced
    } else if new_tail_y < state.tail_y {
        next.tail_speed = params.v0;
        UpdateKind::Joined
    } else {
        UpdateKind::Stationary
    };
    next.remaining = (w - new_tail_y) / next.tail_speed;
    (next, kind)
}

/// Dead-reckons a cohort through a tick without any clear in-street fix.
pub fn coast_cohort(state: &CohortState, params: &CohortParams, tick: u32) -> (CohortState, UpdateKind) {
    let mut next = *state;
    next.last_tick = tick;
    next.tail_y = state.tail_y + state.tail_speed * params.tick_len;
    next.remaining = (state.remaining - params.tick_len).max(0.0);
    if next.tail_y >= params.street_width || next.remaining <= 0.0 {
        next.active = false;
        next.remaining = 0.0;
        return (next, UpdateKind::Completed);
    }
    (next, UpdateKind::Coasted)
}

/// The tracker owned by one transceiver pair of one parked car.
#[derive(Debug, Clone, Default)]
pub struct CohortTracker {
    pub owner: u32,
    pub state: Option<CohortState>,
}

impl CohortTracker {
    pub fn new(owner: u32) -> Self {
        CohortTracker { owner, state: None }
    }

    pub fn is_active(&self) -> bool {
        self.state.is_some_and(|s| s.active)
    }

    /// Advances the tracker by one tick given this tick's accepted in-street
    /// fixes. Returns the rule applied, or `None` when idle.
    pub fn step(&mut self, tick: u32, fixes: &[f64], params: &CohortParams) -> Option<UpdateKind> {
        let tail = select_tail(fixes);
        let (next, kind) = match (self.state.filter(|s| s.active), tail) {
            (None, None) => return None,
            (None, Some(y)) => (initialize_cohort(self.owner, y, params, tick), UpdateKind::Started),
            (Some(s), Some(y)) => update_cohort(&s, y, params, tick),
            (Some(s), None) => coast_cohort(&s, params, tick),
        };
        self.state = Some(next);
        Some(kind)
    }
}
