//! Trend machinery over a risk's score history: least-squares fit, dynamics
//! classification, threshold-crossing forecasts and lifecycle transitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    band_for_driver, Declaration, Direction, Driver, DriverKind, Dynamics, Observation, Presence,
    ProbabilityBand, RiskRecord, RiskStatus, Snapshot,
};
use crate::scoring::{self, CATASTROPHIC_THRESHOLD, EXISTING_FLOOR, PROBABILITY_MAX};
use crate::strategy::classify_band;

/// Default deadband on the trend slope, in score units per period.
pub const DEFAULT_EPSILON: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
    pub t_last: f64,
    /// Level of the fitted line at `t_last`.
    pub x_last: f64,
}

impl TrendFit {
    pub fn from_line(intercept: f64, slope: f64, n: usize, t_last: f64) -> Self {
        TrendFit {
            slope,
            intercept,
            n,
            t_last,
            x_last: intercept + slope * t_last,
        }
    }

    /// Unclamped line value.
    pub fn line(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Ordinary least squares over `(t, x)` points.
pub fn fit_trend(points: &[(f64, f64)]) -> Result<TrendFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientHistory(n));
    }
    let nf = n as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let x_mean = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(t, x) in points {
        let dt = t - t_mean;
        sxx += dt * dt;
        sxy += dt * (x - x_mean);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateTime);
    }
    let slope = sxy / sxx;
    let intercept = x_mean - slope * t_mean;
    let t_last = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(TrendFit::from_line(intercept, slope, n, t_last))
}

pub fn classify_dynamics(fit: &TrendFit, epsilon: f64) -> Dynamics {
    if fit.slope > epsilon {
        Dynamics::Growing
    } else if fit.slope < -epsilon {
        Dynamics::Declining
    } else {
        Dynamics::Stable
    }
}

/// Trend-line score at `t`, floored at zero.
pub fn forecast_score(fit: &TrendFit, t: f64) -> Result<f64> {
    if t < fit.t_last {
        return Err(Error::BackwardForecast {
            t,
            t_last: fit.t_last,
        });
    }
    Ok(fit.line(t).max(0.0))
}

/// First period at which the trend reaches `threshold` from below.
pub fn forecast_crossing(fit: &TrendFit, threshold: f64) -> Option<f64> {
    if fit.x_last >= threshold {
        Some(fit.t_last)
    } else if fit.slope > 0.0 {
        Some(fit.t_last + (threshold - fit.x_last) / fit.slope)
    } else {
        None
    }
}

/// First period at which the trend falls to `threshold` from above.
pub fn forecast_crossing_below(fit: &TrendFit, threshold: f64) -> Option<f64> {
    if fit.x_last <= threshold {
        Some(fit.t_last)
    } else if fit.slope < 0.0 {
        Some(fit.t_last + (threshold - fit.x_last) / fit.slope)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    BandEscalation,
    ProbableToExisting,
    ExistingToCatastrophic,
    DeEscalationToProbable,
    BecameInsignificant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent {
    pub risk_id: String,
    pub t: f64,
    pub kind: TransitionKind,
    pub before: Snapshot,
    pub after: Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsConfig {
    pub epsilon: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Observations since the risk last changed presence: the trailing run of
/// history entries whose kind matches `kind`.
pub fn current_phase(history: &[Observation], kind: DriverKind) -> &[Observation] {
    let start = history
        .iter()
        .rposition(|o| o.kind != kind)
        .map_or(0, |i| i + 1);
    &history[start..]
}

/// Score series on the growing orientation: probable drivers go through the
/// growing branch so that a rising probability always reads as a rising score.
/// Dynamics are classified on this series, which keeps the classification
/// independent of the branch it selects.
fn oriented_series(phase: &[Observation]) -> Vec<(f64, f64)> {
    phase
        .iter()
        .filter_map(|o| {
            let x = match o.kind {
                DriverKind::Probability => scoring::score_probable(o.value, Direction::Growing),
                DriverKind::Severity => scoring::score_existing(o.value),
            };
            x.ok().map(|x| (o.t, x))
        })
        .collect()
}

/// Score series on the risk's current branch.
fn branch_series(phase: &[Observation], direction: Direction) -> Vec<(f64, f64)> {
    phase
        .iter()
        .filter_map(|o| {
            let x = match o.kind {
                DriverKind::Probability => scoring::score_probable(o.value, direction),
                DriverKind::Severity => scoring::score_existing(o.value),
            };
            x.ok().map(|x| (o.t, x))
        })
        .collect()
}

/// Trend of the risk's score over its current phase, on the branch its
/// dynamics select. `None` with fewer than two usable observations.
pub fn phase_trend(risk: &RiskRecord) -> Option<TrendFit> {
    let phase = current_phase(&risk.history, risk.presence.driver_kind());
    fit_trend(&branch_series(phase, risk.dynamics.resolve())).ok()
}

fn refit_dynamics(risk: &mut RiskRecord, cfg: &DynamicsConfig) {
    let phase = current_phase(&risk.history, risk.presence.driver_kind());
    if let Ok(fit) = fit_trend(&oriented_series(phase)) {
        risk.dynamics = classify_dynamics(&fit, cfg.epsilon);
    }
}

pub fn apply_observation(
    risk: &RiskRecord,
    obs: &Observation,
) -> Result<(RiskRecord, Vec<TransitionEvent>)> {
    apply_observation_with(risk, obs, &DynamicsConfig::default())
}

pub fn apply_observation_with(
    risk: &RiskRecord,
    obs: &Observation,
    cfg: &DynamicsConfig,
) -> Result<(RiskRecord, Vec<TransitionEvent>)> {
    if !risk.status.is_live() {
        return Err(Error::RiskRetired(risk.id.clone()));
    }
    obs.kind.validate(obs.value)?;
    let expected = risk.presence.driver_kind();
    if obs.kind != expected {
        return Err(Error::KindMismatch {
            observed: obs.kind.as_str(),
            presence: risk.presence.as_str(),
        });
    }
    let last = risk.last_t().unwrap_or(f64::NEG_INFINITY);
    if !obs.t.is_finite() || obs.t <= last {
        return Err(Error::NonMonotoneTime { t: obs.t, last });
    }

    let mut step = Step {
        risk: risk.clone(),
        t: obs.t,
        events: Vec::new(),
    };
    let before = risk.snapshot();
    step.risk.history.push(obs.clone());
    step.risk.driver = Driver {
        kind: obs.kind,
        value: obs.value,
    };
    refit_dynamics(&mut step.risk, cfg);

    match risk.presence {
        Presence::Probable => step.probable(obs, before),
        Presence::Existing => step.existing(obs, before),
    }

    let after = step.risk.snapshot();
    if let Some(kind) = insignificance_transition(&before, &after) {
        step.push(kind, before);
    }
    Ok((step.risk, step.events))
}

/// `BecameInsignificant` fires when a significant risk's score drops to zero
/// or below.
fn insignificance_transition(before: &Snapshot, after: &Snapshot) -> Option<TransitionKind> {
    (before.score > 0.0 && after.score <= 0.0).then_some(TransitionKind::BecameInsignificant)
}

struct Step {
    risk: RiskRecord,
    t: f64,
    events: Vec<TransitionEvent>,
}

impl Step {
    fn push(&mut self, kind: TransitionKind, before: Snapshot) {
        self.events.push(TransitionEvent {
            risk_id: self.risk.id.clone(),
            t: self.t,
            kind,
            before,
            after: self.risk.snapshot(),
        });
    }

    fn probable(&mut self, obs: &Observation, before: Snapshot) {
        let y = obs.value;
        if obs.declare.is_some() || y >= PROBABILITY_MAX {
            self.materialize();
            self.push(TransitionKind::ProbableToExisting, before);
            if obs.declare == Some(Declaration::Catastrophe) {
                let before = self.risk.snapshot();
                self.declare_catastrophe();
                self.push(TransitionKind::ExistingToCatastrophic, before);
            }
            return;
        }
        let direction = self.risk.dynamics.resolve();
        self.risk.score = scoring::score_probable(y, direction).expect("validated probability");
        self.risk.band = classify_band(y).expect("validated probability");
        if self.risk.score >= CATASTROPHIC_THRESHOLD {
            self.risk.band = ProbabilityBand::High;
            if before.band != ProbabilityBand::High {
                self.push(TransitionKind::BandEscalation, before);
            }
        }
    }

    fn existing(&mut self, obs: &Observation, before: Snapshot) {
        let s = obs.value;
        self.risk.band = band_for_driver(DriverKind::Severity, s);
        if self.risk.status == RiskStatus::Catastrophic {
            self.risk.score = CATASTROPHIC_THRESHOLD;
            return;
        }
        if obs.declare == Some(Declaration::Catastrophe) {
            self.declare_catastrophe();
            self.push(TransitionKind::ExistingToCatastrophic, before);
            return;
        }
        self.risk.score = scoring::score_existing(s).expect("validated severity");
        if let Some(forecast) = self.confirmed_decline() {
            self.deescalate(forecast);
            self.push(TransitionKind::DeEscalationToProbable, before);
        }
    }

    /// Entry at the top of the existing band.
    fn materialize(&mut self) {
        let r = &mut self.risk;
        r.presence = Presence::Existing;
        r.driver = Driver {
            kind: DriverKind::Severity,
            value: 1.0,
        };
        r.score = scoring::score_existing(1.0).expect("severity 1 is in domain");
        r.band = band_for_driver(DriverKind::Severity, 1.0);
    }

    /// Existing scores cap below 1, so catastrophe pins the score at the
    /// catastrophic threshold.
    fn declare_catastrophe(&mut self) {
        self.risk.score = CATASTROPHIC_THRESHOLD;
        self.risk.status = RiskStatus::Catastrophic;
    }

    /// Next-period forecast when both the current and the previous trend put
    /// the risk below the existing floor.
    fn confirmed_decline(&self) -> Option<f64> {
        if self.risk.dynamics.resolve() != Direction::Declining {
            return None;
        }
        let phase = current_phase(&self.risk.history, DriverKind::Severity);
        if phase.len() < 3 {
            return None;
        }
        let next_period = |series: &[Observation]| -> Option<f64> {
            let fit = fit_trend(&branch_series(series, Direction::Declining)).ok()?;
            forecast_score(&fit, fit.t_last + 1.0).ok()
        };
        let now = next_period(phase)?;
        let prev = next_period(&phase[..phase.len() - 1])?;
        (now < EXISTING_FLOOR && prev < EXISTING_FLOOR).then_some(now)
    }

    fn deescalate(&mut self, forecast: f64) {
        let (lo, hi) = scoring::probable_image(Direction::Declining);
        let y = scoring::inverse_probable(forecast.clamp(lo, hi), Direction::Declining)
            .expect("clamped into the declining image");
        let r = &mut self.risk;
        r.presence = Presence::Probable;
        r.dynamics = Dynamics::Declining;
        r.driver = Driver {
            kind: DriverKind::Probability,
            value: y,
        };
        r.score = scoring::score_probable(y, Direction::Declining).expect("inverse is in domain");
        r.band = classify_band(y).expect("inverse is in domain");
    }
}
