//! Domain vocabulary shared by every module: classification axes, the risk
//! record and its observation history.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring;
use crate::strategy::{self, StrategyRow};

/// Where the risk comes from relative to the enterprise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    External,
    Internal,
}

/// Whether the risk has materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Presence {
    Probable,
    Existing,
}

impl Presence {
    /// The observation kind that drives a risk with this presence.
    pub fn driver_kind(self) -> DriverKind {
        match self {
            Presence::Probable => DriverKind::Probability,
            Presence::Existing => DriverKind::Severity,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Presence::Probable => "probable",
            Presence::Existing => "existing",
        }
    }
}

/// Observed trend of a risk's influence. `Stable` covers slopes inside the
/// deadband and is resolved to `Growing` for every strategy lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    Growing,
    Declining,
    Stable,
}

impl Dynamics {
    pub fn resolve(self) -> Direction {
        match self {
            Dynamics::Declining => Direction::Declining,
            Dynamics::Growing | Dynamics::Stable => Direction::Growing,
        }
    }
}

/// The binary dynamics axis of the strategy table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Growing,
    Declining,
}

impl From<Direction> for Dynamics {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Growing => Dynamics::Growing,
            Direction::Declining => Dynamics::Declining,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityBand {
    Low,
    Medium,
    High,
}

/// Ordered from least to most severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityDegree {
    Insignificant,
    Admissible,
    Critical,
    Catastrophic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskStatus {
    Active,
    Catastrophic,
    Retired,
}

impl RiskStatus {
    /// Active and catastrophic risks both take part in assessment.
    pub fn is_live(self) -> bool {
        !matches!(self, RiskStatus::Retired)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverKind {
    Probability,
    Severity,
}

impl DriverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DriverKind::Probability => "probability",
            DriverKind::Severity => "severity",
        }
    }

    /// Closed domain of admissible driver values.
    pub fn domain(self) -> (f64, f64) {
        match self {
            DriverKind::Probability => (scoring::PROBABILITY_MIN, scoring::PROBABILITY_MAX),
            DriverKind::Severity => (0.0, 1.0),
        }
    }

    pub fn validate(self, value: f64) -> Result<()> {
        let (min, max) = self.domain();
        if value.is_finite() && value >= min && value <= max {
            Ok(())
        } else {
            Err(Error::DriverOutOfDomain {
                kind: self.as_str(),
                value,
                min,
                max,
            })
        }
    }
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DriverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "probability" => Ok(DriverKind::Probability),
            "severity" => Ok(DriverKind::Severity),
            other => Err(format!("unknown observation kind '{other}'")),
        }
    }
}

/// The expert-estimated quantity a risk's score is computed from: occurrence
/// probability for probable risks, impact severity for existing ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub kind: DriverKind,
    pub value: f64,
}

/// Operator declaration attached to an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Declaration {
    /// The probable risk has occurred.
    Materialized,
    /// The existing risk has entered the catastrophic zone.
    Catastrophe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Period index, dimensionless.
    pub t: f64,
    pub kind: DriverKind,
    pub value: f64,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declare: Option<Declaration>,
}

impl Observation {
    pub fn new(t: f64, kind: DriverKind, value: f64) -> Self {
        Observation {
            t,
            kind,
            value,
            note: None,
            declare: None,
        }
    }

    pub fn probability(t: f64, value: f64) -> Self {
        Self::new(t, DriverKind::Probability, value)
    }

    pub fn severity(t: f64, value: f64) -> Self {
        Self::new(t, DriverKind::Severity, value)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn declaring(mut self, declaration: Declaration) -> Self {
        self.declare = Some(declaration);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub id: String,
    pub name: String,
    pub sphere: String,
    pub origin: Origin,
    pub presence: Presence,
    pub dynamics: Dynamics,
    pub band: ProbabilityBand,
    /// Dimensionless risk level x.
    pub score: f64,
    pub driver: Driver,
    pub status: RiskStatus,
    #[serde(default)]
    pub dependencies: Vec<String>,
    #[serde(default)]
    pub history: Vec<Observation>,
}

/// Caller-supplied fields for registering a new risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewRisk {
    pub id: String,
    pub name: String,
    pub sphere: String,
    pub origin: Origin,
    pub presence: Presence,
    /// Initial driver value, interpreted per `presence`.
    pub driver: f64,
    #[serde(default)]
    pub dependencies: Vec<String>,
    #[serde(default)]
    pub dynamics: Option<Dynamics>,
}

impl RiskRecord {
    /// Builds a record from an initial expert estimate. No history is
    /// recorded; the estimate only seeds the driver.
    pub fn from_new(new: NewRisk) -> Result<Self> {
        let kind = new.presence.driver_kind();
        kind.validate(new.driver)?;
        if new.dependencies.iter().any(|d| d == &new.id) {
            return Err(Error::SelfDependency(new.id));
        }
        let dynamics = new.dynamics.unwrap_or(Dynamics::Stable);
        let score = scoring::score_driver(new.presence, kind, new.driver, dynamics.resolve())?;
        Ok(RiskRecord {
            band: band_for_driver(kind, new.driver),
            id: new.id,
            name: new.name,
            sphere: new.sphere,
            origin: new.origin,
            presence: new.presence,
            dynamics,
            score,
            driver: Driver {
                kind,
                value: new.driver,
            },
            status: RiskStatus::Active,
            dependencies: new.dependencies,
            history: Vec::new(),
        })
    }

    pub fn strategy(&self) -> &'static StrategyRow {
        strategy::resolve_strategy(self.origin, self.presence, self.dynamics.resolve())
    }

    pub fn admissibility(&self) -> AdmissibilityDegree {
        strategy::classify_admissibility(
            self.presence,
            self.score,
            self.strategy().admissibility_threshold(),
        )
    }

    pub fn is_significant(&self) -> bool {
        strategy::is_significant(self.score)
    }

    pub fn last_t(&self) -> Option<f64> {
        self.history.last().map(|o| o.t)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            presence: self.presence,
            band: self.band,
            admissibility: self.admissibility(),
            score: self.score,
            status: self.status,
        }
    }
}

/// Band of a driver value. Severity shares the probability thirds after
/// clamping into the probability domain.
pub fn band_for_driver(kind: DriverKind, value: f64) -> ProbabilityBand {
    let y = match kind {
        DriverKind::Probability => value,
        DriverKind::Severity => value.clamp(scoring::PROBABILITY_MIN, scoring::PROBABILITY_MAX),
    };
    strategy::classify_band(y).unwrap_or(ProbabilityBand::High)
}

/// Classification state of one risk at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub presence: Presence,
    pub band: ProbabilityBand,
    pub admissibility: AdmissibilityDegree,
    pub score: f64,
    pub status: RiskStatus,
}
