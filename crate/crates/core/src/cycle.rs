//! The nine-stage proactive assessment cycle run over a register snapshot.
//!
//! Stages 1-5 identify risks (horizon, sphere grouping, identification,
//! per-sphere trend base, per-risk magnitude and vector). Stages 6-7 assess
//! them (probability and admissibility, dynamics and interdependency).
//! Stages 8-9 plan mitigation for existing growing risks and list what to
//! monitor inside the horizon.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::assessment::{self, Crossing};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::model::{
    AdmissibilityDegree, Direction, Driver, Dynamics, Origin, Presence, ProbabilityBand, RiskRecord,
};
use crate::register::{Horizon, Register};
use crate::scoring::{self, Zone};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    pub horizon: Horizon,
    pub taxonomy: Vec<String>,
}

impl CycleConfig {
    pub fn from_register(register: &Register) -> Self {
        CycleConfig {
            horizon: register.horizon.clone(),
            taxonomy: register.taxonomy.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Complete,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereGroup {
    pub sphere: String,
    pub risk_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereTrend {
    pub sphere: String,
    pub risks: usize,
    pub growing: usize,
    pub declining: usize,
    pub stable: usize,
    /// Mean trend slope over the sphere's risks with a fitted trend.
    pub mean_slope: Option<f64>,
    pub total_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskVector {
    pub id: String,
    pub magnitude: f64,
    pub vector: Dynamics,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityRow {
    pub id: String,
    pub origin: Origin,
    pub presence: Presence,
    pub driver: Driver,
    pub band: ProbabilityBand,
    pub zone: Zone,
    pub critical_value: f64,
    pub admissibility: AdmissibilityDegree,
    pub strategic_review: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QualitativeRating {
    Negligible,
    Low,
    Moderate,
    Elevated,
    Severe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rating {
    pub id: String,
    pub dynamics: Dynamics,
    pub depends_on: Vec<String>,
    pub dependents: Vec<String>,
    /// Dependencies currently critical or catastrophic.
    pub critical_upstream: Vec<String>,
    pub rating: QualitativeRating,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorItem {
    pub id: String,
    pub crossings: Vec<Crossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageOutput {
    Horizon { horizon: Horizon },
    SphereGrouping { groups: Vec<SphereGroup> },
    Identification { risk_ids: Vec<String> },
    QualitativeBase { spheres: Vec<SphereTrend> },
    MagnitudeAndVector { risks: Vec<RiskVector> },
    ProbabilityAdmissibility { table: Vec<AdmissibilityRow> },
    DynamicsInterdependency { ratings: Vec<Rating> },
    MitigationPlan { risk_ids: Vec<String> },
    Monitoring { checklist: Vec<MonitorItem> },
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub index: u8,
    pub name: &'static str,
    pub status: StageStatus,
    pub completed_at: Option<DateTime<Utc>>,
    pub output: StageOutput,
}

pub const STAGE_NAMES: [&str; 9] = [
    "horizon selection",
    "sphere grouping",
    "risk identification",
    "qualitative base",
    "magnitude and vector",
    "probability and admissibility",
    "dynamics and interdependency",
    "mitigation plan",
    "monitoring checklist",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub stages: Vec<StageRecord>,
}

impl CycleReport {
    fn pending() -> Self {
        CycleReport {
            stages: STAGE_NAMES
                .iter()
                .zip(1u8..)
                .map(|(name, index)| StageRecord {
                    index,
                    name,
                    status: StageStatus::Incomplete,
                    completed_at: None,
                    output: StageOutput::Pending,
                })
                .collect(),
        }
    }

    /// Marks stage `index` complete. Stages complete strictly in order.
    fn complete(&mut self, index: u8, output: StageOutput) {
        let i = usize::from(index - 1);
        assert!(
            self.stages[..i].iter().all(|s| s.status == StageStatus::Complete),
            "stage {index} completed before its predecessors"
        );
        let stage = &mut self.stages[i];
        stage.status = StageStatus::Complete;
        stage.completed_at = Some(Utc::now());
        stage.output = output;
    }

    pub fn is_complete(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Complete)
    }

    pub fn stage(&self, index: u8) -> &StageRecord {
        &self.stages[usize::from(index - 1)]
    }

    /// Every complete stage has only complete predecessors.
    pub fn is_ordered(&self) -> bool {
        self.stages
            .iter()
            .skip_while(|s| s.status == StageStatus::Complete)
            .all(|s| s.status == StageStatus::Incomplete)
    }
}

fn stage_err(stage: u8, source: Error) -> Error {
    Error::Stage {
        stage,
        source: Box::new(source),
    }
}

fn rate(r: &RiskRecord, critical_upstream: bool) -> QualitativeRating {
    let degree = r.admissibility();
    let growing = r.dynamics.resolve() == Direction::Growing;
    match degree {
        AdmissibilityDegree::Insignificant => QualitativeRating::Negligible,
        AdmissibilityDegree::Catastrophic => QualitativeRating::Severe,
        AdmissibilityDegree::Critical if growing => QualitativeRating::Severe,
        AdmissibilityDegree::Critical => QualitativeRating::Elevated,
        AdmissibilityDegree::Admissible if critical_upstream => QualitativeRating::Elevated,
        AdmissibilityDegree::Admissible if growing => QualitativeRating::Moderate,
        AdmissibilityDegree::Admissible => QualitativeRating::Low,
    }
}

pub fn run_cycle(register: &Register, config: &CycleConfig) -> Result<CycleReport> {
    let mut report = CycleReport::pending();

    config.horizon.validate().map_err(|e| stage_err(1, e))?;
    report.complete(
        1,
        StageOutput::Horizon {
            horizon: config.horizon.clone(),
        },
    );

    if config.taxonomy.is_empty() {
        return Err(Error::EmptyTaxonomy);
    }
    let live: Vec<&RiskRecord> = register.list(true).collect();
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for r in &live {
        if !config.taxonomy.contains(&r.sphere) {
            return Err(stage_err(2, Error::UnknownSphere(r.sphere.clone())));
        }
        groups.entry(r.sphere.as_str()).or_default().push(r.id.clone());
    }
    report.complete(
        2,
        StageOutput::SphereGrouping {
            groups: config
                .taxonomy
                .iter()
                .map(|s| SphereGroup {
                    sphere: s.clone(),
                    risk_ids: groups.remove(s.as_str()).unwrap_or_default(),
                })
                .collect(),
        },
    );

    report.complete(
        3,
        StageOutput::Identification {
            risk_ids: live.iter().map(|r| r.id.clone()).collect(),
        },
    );

    let trends: BTreeMap<&str, Option<dynamics::TrendFit>> = live
        .iter()
        .map(|r| (r.id.as_str(), dynamics::phase_trend(r)))
        .collect();
    let spheres = config
        .taxonomy
        .iter()
        .map(|sphere| {
            let members: Vec<&&RiskRecord> = live.iter().filter(|r| &r.sphere == sphere).collect();
            let slopes: Vec<f64> = members
                .iter()
                .filter_map(|r| trends[r.id.as_str()].map(|f| f.slope))
                .collect();
            let count = |d: Dynamics| members.iter().filter(|r| r.dynamics == d).count();
            SphereTrend {
                sphere: sphere.clone(),
                risks: members.len(),
                growing: count(Dynamics::Growing),
                declining: count(Dynamics::Declining),
                stable: count(Dynamics::Stable),
                mean_slope: (!slopes.is_empty())
                    .then(|| slopes.iter().sum::<f64>() / slopes.len() as f64),
                total_score: members
                    .iter()
                    .filter(|r| r.is_significant())
                    .map(|r| r.score)
                    .sum(),
            }
        })
        .collect();
    report.complete(4, StageOutput::QualitativeBase { spheres });

    report.complete(
        5,
        StageOutput::MagnitudeAndVector {
            risks: live
                .iter()
                .map(|r| RiskVector {
                    id: r.id.clone(),
                    magnitude: r.score,
                    vector: r.dynamics,
                    slope: trends[r.id.as_str()].map(|f| f.slope),
                })
                .collect(),
        },
    );

    let table = live
        .iter()
        .map(|r| {
            let admissibility = r.admissibility();
            AdmissibilityRow {
                id: r.id.clone(),
                origin: r.origin,
                presence: r.presence,
                driver: r.driver,
                band: r.band,
                zone: scoring::classify_zone(r.presence, r.score),
                critical_value: r.strategy().critical_value,
                admissibility,
                strategic_review: r.origin == Origin::External
                    && admissibility >= AdmissibilityDegree::Critical,
            }
        })
        .collect();
    report.complete(6, StageOutput::ProbabilityAdmissibility { table });

    let ratings = live
        .iter()
        .map(|r| {
            let critical_upstream: Vec<String> = r
                .dependencies
                .iter()
                .filter_map(|d| register.get(d).ok())
                .filter(|d| {
                    d.status.is_live() && d.admissibility() >= AdmissibilityDegree::Critical
                })
                .map(|d| d.id.clone())
                .collect();
            Rating {
                id: r.id.clone(),
                dynamics: r.dynamics,
                depends_on: r.dependencies.clone(),
                dependents: live
                    .iter()
                    .filter(|o| o.dependencies.contains(&r.id))
                    .map(|o| o.id.clone())
                    .collect(),
                rating: rate(r, !critical_upstream.is_empty()),
                critical_upstream,
            }
        })
        .collect();
    report.complete(7, StageOutput::DynamicsInterdependency { ratings });

    let plan = assessment::prioritize(&register.risks)
        .into_iter()
        .filter(|id| {
            register.get(id).is_ok_and(|r| {
                r.presence == Presence::Existing && r.dynamics.resolve() == Direction::Growing
            })
        })
        .collect();
    report.complete(8, StageOutput::MitigationPlan { risk_ids: plan });

    let checklist = live
        .iter()
        .filter(|r| r.status == crate::model::RiskStatus::Active && r.is_significant())
        .filter_map(|r| {
            let fit = trends[r.id.as_str()]?;
            let crossings = assessment::forecast_crossings(r, &fit, config.horizon.periods);
            (!crossings.is_empty()).then(|| MonitorItem {
                id: r.id.clone(),
                crossings,
            })
        })
        .collect();
    report.complete(9, StageOutput::Monitoring { checklist });

    Ok(report)
}
