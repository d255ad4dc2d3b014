//! The eight risk-behavior strategies and the pure classification rules
//! (probability band, significance, admissibility) built on them.

use serde::Serialize;

use crate::error::Result;
use crate::model::{AdmissibilityDegree, Direction, Origin, Presence, ProbabilityBand};
use crate::scoring::{self, CATASTROPHIC_THRESHOLD};

use AdmissibilityDegree::{Admissible, Critical, Insignificant};
use ProbabilityBand::{High, Low, Medium};

/// Lower edge of the medium band.
pub const MEDIUM_BAND_FLOOR: f64 = 1.0 / 3.0;
/// Lower edge of the high band.
pub const HIGH_BAND_FLOOR: f64 = 2.0 / 3.0;

/// Interval traversed by a quantity as the strategy plays out. `from` is where
/// the traversal starts, so declining existing risks run 0.99 down to 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Traversal {
    pub from: f64,
    pub to: f64,
}

impl Traversal {
    pub fn low(&self) -> f64 {
        self.from.min(self.to)
    }

    pub fn high(&self) -> f64 {
        self.from.max(self.to)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.low() && v <= self.high()
    }
}

/// Range of occurrence probability over which the strategy applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZoneRange {
    Probability { from: f64, to: f64 },
    /// Existing risks: occurrence is certain.
    Certain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRow {
    pub origin: Origin,
    pub presence: Presence,
    pub direction: Direction,
    /// Probability bands listed for the row. Stored verbatim, not enforced.
    pub bands: &'static [ProbabilityBand],
    /// Admissibility degrees listed for the row.
    pub degrees: &'static [AdmissibilityDegree],
    pub zone_range: ZoneRange,
    pub score_range: Traversal,
    pub critical_value: f64,
}

impl StrategyRow {
    /// Score at which an existing risk on this row turns critical.
    ///
    /// Rows that list a critical degree use their critical value. The
    /// existing-declining rows list only the admissible degree; their critical
    /// value 0.49 marks de-escalation instead, so criticality for them begins
    /// at the catastrophic threshold.
    pub fn admissibility_threshold(&self) -> f64 {
        if self.degrees.contains(&Critical) {
            self.critical_value
        } else {
            CATASTROPHIC_THRESHOLD
        }
    }

    /// True for the rows whose critical value is the downward de-escalation
    /// sentinel rather than an upward alarm level.
    pub fn is_deescalation_row(&self) -> bool {
        self.presence == Presence::Existing && self.direction == Direction::Declining
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            match self.origin {
                Origin::External => "external",
                Origin::Internal => "internal",
            },
            self.presence.as_str(),
            match self.direction {
                Direction::Growing => "growing",
                Direction::Declining => "declining",
            }
        )
    }
}

const PROBABLE_DECLINING_ZONE: ZoneRange = ZoneRange::Probability {
    from: scoring::PROBABILITY_MAX,
    to: scoring::PROBABILITY_MIN,
};
const PROBABLE_GROWING_ZONE: ZoneRange = ZoneRange::Probability {
    from: scoring::PROBABILITY_MIN,
    to: scoring::PROBABILITY_MAX,
};
const PROBABLE_DECLINING_SCORES: Traversal = Traversal { from: 0.0, to: 0.49 };
const PROBABLE_GROWING_SCORES: Traversal = Traversal { from: 0.5, to: 1.99 };
const EXISTING_DECLINING_SCORES: Traversal = Traversal { from: 0.99, to: 0.5 };
const EXISTING_GROWING_SCORES: Traversal = Traversal { from: 0.5, to: 0.99 };

/// The strategy table, one row per (origin, presence, direction).
pub static STRATEGY_TABLE: [StrategyRow; 8] = [
    StrategyRow {
        origin: Origin::External,
        presence: Presence::Probable,
        direction: Direction::Declining,
        bands: &[Low],
        degrees: &[Insignificant, Admissible],
        zone_range: PROBABLE_DECLINING_ZONE,
        score_range: PROBABLE_DECLINING_SCORES,
        critical_value: 0.4851,
    },
    StrategyRow {
        origin: Origin::External,
        presence: Presence::Probable,
        direction: Direction::Growing,
        bands: &[Medium, High],
        degrees: &[Admissible, Critical],
        zone_range: PROBABLE_GROWING_ZONE,
        score_range: PROBABLE_GROWING_SCORES,
        critical_value: 1.99,
    },
    StrategyRow {
        origin: Origin::External,
        presence: Presence::Existing,
        direction: Direction::Declining,
        bands: &[Low],
        degrees: &[Admissible],
        zone_range: ZoneRange::Certain,
        score_range: EXISTING_DECLINING_SCORES,
        critical_value: 0.49,
    },
    StrategyRow {
        origin: Origin::External,
        presence: Presence::Existing,
        direction: Direction::Growing,
        bands: &[Medium, High],
        degrees: &[Admissible, Critical],
        zone_range: ZoneRange::Certain,
        score_range: EXISTING_GROWING_SCORES,
        critical_value: 0.99,
    },
    StrategyRow {
        origin: Origin::Internal,
        presence: Presence::Probable,
        direction: Direction::Declining,
        bands: &[Low, Medium],
        degrees: &[Admissible],
        zone_range: PROBABLE_DECLINING_ZONE,
        score_range: PROBABLE_DECLINING_SCORES,
        critical_value: 0.4851,
    },
    StrategyRow {
        origin: Origin::Internal,
        presence: Presence::Probable,
        direction: Direction::Growing,
        bands: &[Medium, High],
        degrees: &[Admissible, Critical],
        zone_range: PROBABLE_GROWING_ZONE,
        score_range: PROBABLE_GROWING_SCORES,
        critical_value: 1.99,
    },
    StrategyRow {
        origin: Origin::Internal,
        presence: Presence::Existing,
        direction: Direction::Declining,
        bands: &[Low, Medium],
        degrees: &[Admissible],
        zone_range: ZoneRange::Certain,
        score_range: EXISTING_DECLINING_SCORES,
        critical_value: 0.49,
    },
    StrategyRow {
        origin: Origin::Internal,
        presence: Presence::Existing,
        direction: Direction::Growing,
        bands: &[Medium, High],
        degrees: &[Admissible, Critical],
        zone_range: ZoneRange::Certain,
        score_range: EXISTING_GROWING_SCORES,
        critical_value: 0.98,
    },
];

pub fn resolve_strategy(
    origin: Origin,
    presence: Presence,
    direction: Direction,
) -> &'static StrategyRow {
    let idx = match origin {
        Origin::External => 0,
        Origin::Internal => 4,
    } + match presence {
        Presence::Probable => 0,
        Presence::Existing => 2,
    } + match direction {
        Direction::Declining => 0,
        Direction::Growing => 1,
    };
    &STRATEGY_TABLE[idx]
}

pub fn classify_band(y: f64) -> Result<ProbabilityBand> {
    crate::model::DriverKind::Probability.validate(y)?;
    Ok(if y < MEDIUM_BAND_FLOOR {
        Low
    } else if y < HIGH_BAND_FLOOR {
        Medium
    } else {
        High
    })
}

/// A risk exists as a factor only when its score is strictly positive.
pub fn is_significant(x: f64) -> bool {
    x > 0.0
}

/// Degree of admissibility for score `x`, where `critical` is the row's
/// criticality threshold. Probable risks turn critical at 1 regardless of it.
pub fn classify_admissibility(presence: Presence, x: f64, critical: f64) -> AdmissibilityDegree {
    if !is_significant(x) {
        return Insignificant;
    }
    match presence {
        Presence::Probable if x >= CATASTROPHIC_THRESHOLD => Critical,
        Presence::Probable => Admissible,
        Presence::Existing if x >= CATASTROPHIC_THRESHOLD => AdmissibilityDegree::Catastrophic,
        Presence::Existing if x >= critical => Critical,
        Presence::Existing => Admissible,
    }
}
