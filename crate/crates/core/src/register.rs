//! The in-memory risk register and its mutation rules. Persistence lives in
//! [`crate::store`].

use std::collections::HashSet;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, DynamicsConfig, TransitionEvent};
use crate::error::{Error, Result};
use crate::model::{NewRisk, Observation, RiskRecord, RiskStatus};

pub const SCHEMA_VERSION: u64 = 1;
pub const DEFAULT_PERIOD_DAYS: u32 = 30;

/// Assessment horizon: the project stage under review and how many periods
/// ahead forecasts look.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    pub stage: String,
    pub periods: u32,
    #[serde(default = "default_period_days")]
    pub period_days: u32,
}

fn default_period_days() -> u32 {
    DEFAULT_PERIOD_DAYS
}

impl Horizon {
    pub fn new(stage: impl Into<String>, periods: u32) -> Self {
        Horizon {
            stage: stage.into(),
            periods,
            period_days: DEFAULT_PERIOD_DAYS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.periods == 0 {
            return Err(Error::InvalidHorizon(self.periods));
        }
        if self.period_days == 0 {
            return Err(Error::InvalidPeriodLength(self.period_days));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Register {
    pub version: u64,
    pub created_at: DateTime<Utc>,
    pub horizon: Horizon,
    /// Calendar date of period index 0.
    pub period_epoch: NaiveDate,
    pub taxonomy: Vec<String>,
    pub risks: Vec<RiskRecord>,
}

/// Partial update of a risk's descriptive fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetadataPatch {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub sphere: Option<String>,
    #[serde(default)]
    pub dependencies: Option<Vec<String>>,
}

impl Register {
    pub fn new(horizon: Horizon, taxonomy: Vec<String>, period_epoch: NaiveDate) -> Result<Self> {
        horizon.validate()?;
        Ok(Register {
            version: SCHEMA_VERSION,
            created_at: Utc::now(),
            horizon,
            period_epoch,
            taxonomy,
            risks: Vec::new(),
        })
    }

    pub fn get(&self, id: &str) -> Result<&RiskRecord> {
        self.risks
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| Error::UnknownRisk(id.to_string()))
    }

    fn get_mut(&mut self, id: &str) -> Result<&mut RiskRecord> {
        self.risks
            .iter_mut()
            .find(|r| r.id == id)
            .ok_or_else(|| Error::UnknownRisk(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.risks.iter().any(|r| r.id == id)
    }

    pub fn list(&self, active_only: bool) -> impl Iterator<Item = &RiskRecord> {
        self.risks
            .iter()
            .filter(move |r| !active_only || r.status.is_live())
    }

    /// Latest period index seen anywhere in the register, 0 when empty.
    pub fn current_period(&self) -> f64 {
        self.risks
            .iter()
            .filter_map(|r| r.last_t())
            .fold(0.0, f64::max)
    }

    /// Period index of a calendar date.
    pub fn period_index(&self, date: NaiveDate) -> f64 {
        let days = (date - self.period_epoch).num_days() as f64;
        days / f64::from(self.horizon.period_days)
    }

    fn check_sphere(&self, sphere: &str) -> Result<()> {
        if self.taxonomy.is_empty() || self.taxonomy.iter().any(|s| s == sphere) {
            Ok(())
        } else {
            Err(Error::UnknownSphere(sphere.to_string()))
        }
    }

    fn check_dependencies(&self, id: &str, deps: &[String]) -> Result<()> {
        for d in deps {
            if d == id {
                return Err(Error::SelfDependency(id.to_string()));
            }
            if !self.contains(d) {
                return Err(Error::DanglingDependency {
                    risk: id.to_string(),
                    missing: d.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn add_risk(&mut self, new: NewRisk) -> Result<&RiskRecord> {
        if self.contains(&new.id) {
            return Err(Error::DuplicateId(new.id));
        }
        self.check_sphere(&new.sphere)?;
        self.check_dependencies(&new.id, &new.dependencies)?;
        let record = RiskRecord::from_new(new)?;
        self.risks.push(record);
        Ok(self.risks.last().expect("just pushed"))
    }

    pub fn update_risk_metadata(&mut self, id: &str, patch: MetadataPatch) -> Result<&RiskRecord> {
        self.get(id)?;
        if let Some(sphere) = &patch.sphere {
            self.check_sphere(sphere)?;
        }
        if let Some(deps) = &patch.dependencies {
            self.check_dependencies(id, deps)?;
        }
        let risk = self.get_mut(id)?;
        if let Some(name) = patch.name {
            risk.name = name;
        }
        if let Some(sphere) = patch.sphere {
            risk.sphere = sphere;
        }
        if let Some(deps) = patch.dependencies {
            risk.dependencies = deps;
        }
        Ok(risk)
    }

    pub fn retire_risk(&mut self, id: &str) -> Result<&RiskRecord> {
        let risk = self.get_mut(id)?;
        if !risk.status.is_live() {
            return Err(Error::RiskRetired(id.to_string()));
        }
        risk.status = RiskStatus::Retired;
        Ok(risk)
    }

    pub fn record_observation(&mut self, id: &str, obs: &Observation) -> Result<Vec<TransitionEvent>> {
        self.record_observation_with(id, obs, &DynamicsConfig::default())
    }

    pub fn record_observation_with(
        &mut self,
        id: &str,
        obs: &Observation,
        cfg: &DynamicsConfig,
    ) -> Result<Vec<TransitionEvent>> {
        let risk = self.get_mut(id)?;
        let (next, events) = dynamics::apply_observation_with(risk, obs, cfg)?;
        *risk = next;
        Ok(events)
    }

    /// Structural invariants checked on load.
    pub fn validate(&self) -> Result<()> {
        self.horizon
            .validate()
            .map_err(|e| Error::InvalidRegister(e.to_string()))?;
        let mut ids = HashSet::new();
        for r in &self.risks {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::InvalidRegister(format!("duplicate risk id '{}'", r.id)));
            }
        }
        for r in &self.risks {
            for d in &r.dependencies {
                if d == &r.id {
                    return Err(Error::InvalidRegister(format!("'{}' depends on itself", r.id)));
                }
                if !ids.contains(d.as_str()) {
                    return Err(Error::InvalidRegister(format!(
                        "'{}' depends on missing id '{d}'",
                        r.id
                    )));
                }
            }
            if !r.history.windows(2).all(|w| w[0].t < w[1].t) {
                return Err(Error::InvalidRegister(format!(
                    "history of '{}' is not strictly increasing in t",
                    r.id
                )));
            }
            if r.status == RiskStatus::Catastrophic && r.score < crate::scoring::CATASTROPHIC_THRESHOLD {
                return Err(Error::InvalidRegister(format!(
                    "catastrophic risk '{}' has score {} below 1",
                    r.id, r.score
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Origin, Presence};

    fn register() -> Register {
        Register::new(
            Horizon::new("operation", 12),
            vec!["macro".into(), "firm".into()],
            NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(),
        )
        .unwrap()
    }

    fn new_risk(id: &str, deps: &[&str]) -> NewRisk {
        NewRisk {
            id: id.into(),
            name: format!("risk {id}"),
            sphere: "firm".into(),
            origin: Origin::Internal,
            presence: Presence::Existing,
            driver: 0.5,
            dependencies: deps.iter().map(|s| s.to_string()).collect(),
            dynamics: None,
        }
    }

    #[test]
    fn zero_period_horizon_is_rejected() {
        let err = Register::new(
            Horizon::new("operation", 0),
            vec![],
            NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidHorizon(0)));
    }

    #[test]
    fn add_get_list_retire() {
        let mut reg = register();
        reg.add_risk(new_risk("A", &[])).unwrap();
        reg.add_risk(new_risk("B", &["A"])).unwrap();
        assert_eq!(reg.risks.len(), 2);
        assert!(matches!(reg.add_risk(new_risk("A", &[])), Err(Error::DuplicateId(_))));
        assert!(matches!(
            reg.add_risk(new_risk("C", &["Z"])),
            Err(Error::DanglingDependency { .. })
        ));
        reg.retire_risk("A").unwrap();
        let active: Vec<_> = reg.list(true).map(|r| r.id.as_str()).collect();
        assert_eq!(active, vec!["B"]);
        assert_eq!(reg.list(false).count(), 2);
        assert!(matches!(reg.retire_risk("A"), Err(Error::RiskRetired(_))));
        assert!(matches!(reg.get("Q"), Err(Error::UnknownRisk(_))));
    }

    #[test]
    fn sphere_must_come_from_taxonomy() {
        let mut reg = register();
        let mut n = new_risk("A", &[]);
        n.sphere = "galaxy".into();
        assert!(matches!(reg.add_risk(n), Err(Error::UnknownSphere(_))));
    }

    #[test]
    fn metadata_patch() {
        let mut reg = register();
        reg.add_risk(new_risk("A", &[])).unwrap();
        reg.add_risk(new_risk("B", &[])).unwrap();
        let patch = MetadataPatch {
            name: Some("renamed".into()),
            dependencies: Some(vec!["A".into()]),
            ..Default::default()
        };
        let r = reg.update_risk_metadata("B", patch).unwrap();
        assert_eq!(r.name, "renamed");
        assert_eq!(r.dependencies, vec!["A".to_string()]);
        let bad = MetadataPatch {
            dependencies: Some(vec!["B".into()]),
            ..Default::default()
        };
        assert!(matches!(
            reg.update_risk_metadata("B", bad),
            Err(Error::SelfDependency(_))
        ));
    }

    #[test]
    fn record_observation_recomputes_score() {
        let mut reg = register();
        reg.add_risk(new_risk("A", &[])).unwrap();
        reg.record_observation("A", &Observation::severity(1.0, 1.0)).unwrap();
        assert!((reg.get("A").unwrap().score - 0.99).abs() < 1e-12);
        let err = reg
            .record_observation("A", &Observation::severity(0.5, 0.2))
            .unwrap_err();
        assert!(matches!(err, Error::NonMonotoneTime { .. }));
        assert_eq!(reg.current_period(), 1.0);
    }

    #[test]
    fn dates_map_to_period_indices() {
        let reg = register();
        let d = NaiveDate::from_ymd_opt(2026, 3, 2).unwrap();
        assert!((reg.period_index(d) - 60.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn validate_catches_broken_invariants() {
        let mut reg = register();
        reg.add_risk(new_risk("A", &[])).unwrap();
        assert!(reg.validate().is_ok());
        let mut broken = reg.clone();
        broken.risks[0].dependencies.push("ghost".into());
        assert!(broken.validate().is_err());
        let mut broken = reg.clone();
        broken.risks.push(broken.risks[0].clone());
        assert!(broken.validate().is_err());
        let mut broken = reg;
        broken.risks[0].history = vec![Observation::severity(2.0, 0.1), Observation::severity(1.0, 0.1)];
        assert!(broken.validate().is_err());
    }
}
