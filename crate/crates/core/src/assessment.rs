//! Register-level figures: the probable/existing decomposition, the integral
//! vulnerability indicator, mitigation priorities, alerts and what-if runs.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, TrendFit};
use crate::error::{Error, Result};
use crate::format::fixed12;
use crate::model::{
    band_for_driver, AdmissibilityDegree, Direction, Dynamics, Origin, Presence, ProbabilityBand,
    RiskRecord, RiskStatus,
};
use crate::register::Register;
use crate::scoring::{self, Zone, CATASTROPHIC_THRESHOLD};
use crate::strategy::Traversal;

/// Default E_p level at which the register raises a vulnerability alert.
pub const DEFAULT_VULNERABILITY_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssessConfig {
    pub vulnerability_threshold: f64,
    /// Forecast window in periods; the register horizon when `None`.
    pub horizon_periods: Option<u32>,
}

impl Default for AssessConfig {
    fn default() -> Self {
        AssessConfig {
            vulnerability_threshold: DEFAULT_VULNERABILITY_THRESHOLD,
            horizon_periods: None,
        }
    }
}

/// Live and significant: the risks that enter the sums and the product.
fn counted(r: &RiskRecord) -> bool {
    r.status.is_live() && r.is_significant()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassSums {
    pub r_v: f64,
    pub r_c: f64,
    pub r: f64,
}

pub fn class_sums(risks: &[RiskRecord]) -> ClassSums {
    let (mut r_v, mut r_c) = (0.0, 0.0);
    for r in risks.iter().filter(|r| counted(r)) {
        match r.presence {
            Presence::Probable => r_v += r.score,
            Presence::Existing => r_c += r.score,
        }
    }
    ClassSums { r_v, r_c, r: r_v + r_c }
}

/// Product of the scores of all live significant risks; 0 when there are none.
pub fn integral_indicator(risks: &[RiskRecord]) -> f64 {
    let mut factors = risks.iter().filter(|r| counted(r)).map(|r| r.score).peekable();
    if factors.peek().is_none() {
        return 0.0;
    }
    factors.product()
}

/// Mitigation priority class, 1 first. `None` for risks outside the ordering.
///
/// 1. existing growing
/// 2. probable growing, medium or high band
/// 3. probable growing, low band
/// 4. existing declining
/// 5. probable declining
pub fn priority_class(r: &RiskRecord) -> Option<u8> {
    if !counted(r) {
        return None;
    }
    Some(match (r.presence, r.dynamics.resolve()) {
        (Presence::Existing, Direction::Growing) => 1,
        (Presence::Probable, Direction::Growing) if r.band != ProbabilityBand::Low => 2,
        (Presence::Probable, Direction::Growing) => 3,
        (Presence::Existing, Direction::Declining) => 4,
        (Presence::Probable, Direction::Declining) => 5,
    })
}

pub fn prioritize(risks: &[RiskRecord]) -> Vec<String> {
    let mut ranked: Vec<(u8, &RiskRecord)> = risks
        .iter()
        .filter_map(|r| priority_class(r).map(|c| (c, r)))
        .collect();
    ranked.sort_by(|(ca, a), (cb, b)| {
        ca.cmp(cb)
            .then(b.score.total_cmp(&a.score))
            .then_with(|| a.id.cmp(&b.id))
    });
    ranked.into_iter().map(|(_, r)| r.id.clone()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    /// Upward crossing of the row's critical value.
    CriticalValue,
    /// Upward crossing of the catastrophic threshold 1.
    Catastrophic,
    /// Downward crossing of the existing-declining de-escalation sentinel.
    DeescalationSentinel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub threshold: f64,
    pub kind: ThresholdKind,
    pub t: f64,
}

/// Forecast threshold crossings of one risk inside `horizon` periods of its
/// last observation.
pub fn forecast_crossings(r: &RiskRecord, fit: &TrendFit, horizon: u32) -> Vec<Crossing> {
    let row = r.strategy();
    let limit = fit.t_last + f64::from(horizon);
    let mut out = Vec::new();
    let mut push = |threshold, kind, t: Option<f64>| {
        if let Some(t) = t.filter(|t| *t <= limit) {
            out.push(Crossing { threshold, kind, t });
        }
    };
    if row.is_deescalation_row() {
        push(
            row.critical_value,
            ThresholdKind::DeescalationSentinel,
            dynamics::forecast_crossing_below(fit, row.critical_value),
        );
    } else {
        push(
            row.critical_value,
            ThresholdKind::CriticalValue,
            dynamics::forecast_crossing(fit, row.critical_value),
        );
    }
    push(
        CATASTROPHIC_THRESHOLD,
        ThresholdKind::Catastrophic,
        dynamics::forecast_crossing(fit, CATASTROPHIC_THRESHOLD),
    );
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alert {
    ThresholdCrossing {
        risk_id: String,
        threshold: f64,
        threshold_kind: ThresholdKind,
        t: f64,
    },
    HighVulnerability {
        e_p: f64,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub label: String,
    pub critical_value: f64,
    pub score_range: Traversal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEntry {
    pub id: String,
    pub name: String,
    pub sphere: String,
    pub origin: Origin,
    pub presence: Presence,
    pub dynamics: Dynamics,
    pub status: RiskStatus,
    pub strategy: StrategySummary,
    pub zone: Zone,
    pub band: ProbabilityBand,
    pub admissibility: AdmissibilityDegree,
    pub score: f64,
    pub significant: bool,
    pub priority_class: Option<u8>,
    pub trend: Option<TrendFit>,
    pub crossings: Vec<Crossing>,
}

/// Headline figures rendered with [`fixed12`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedFigures {
    pub r_v: String,
    pub r_c: String,
    pub r: String,
    pub e_p: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentReport {
    pub r_v: f64,
    pub r_c: f64,
    pub r: f64,
    pub e_p: f64,
    pub fixed: FixedFigures,
    pub vulnerability_threshold: f64,
    pub horizon_periods: u32,
    pub risks: Vec<RiskEntry>,
    pub priorities: Vec<String>,
    pub alerts: Vec<Alert>,
    pub strategic_review: Vec<String>,
}

fn entry(r: &RiskRecord, horizon: u32) -> RiskEntry {
    let row = r.strategy();
    let trend = dynamics::phase_trend(r);
    let crossings = match (&trend, r.status) {
        (Some(fit), RiskStatus::Active) if r.is_significant() => forecast_crossings(r, fit, horizon),
        _ => Vec::new(),
    };
    RiskEntry {
        id: r.id.clone(),
        name: r.name.clone(),
        sphere: r.sphere.clone(),
        origin: r.origin,
        presence: r.presence,
        dynamics: r.dynamics,
        status: r.status,
        strategy: StrategySummary {
            label: row.label(),
            critical_value: scoring::critical_value(row),
            score_range: row.score_range,
        },
        zone: scoring::classify_zone(r.presence, r.score),
        band: r.band,
        admissibility: r.admissibility(),
        score: r.score,
        significant: r.is_significant(),
        priority_class: priority_class(r),
        trend,
        crossings,
    }
}

pub fn assess(register: &Register) -> AssessmentReport {
    assess_with(register, &AssessConfig::default())
}

pub fn assess_with(register: &Register, cfg: &AssessConfig) -> AssessmentReport {
    let risks = &register.risks;
    let horizon = cfg.horizon_periods.unwrap_or(register.horizon.periods);
    let sums = class_sums(risks);
    let e_p = integral_indicator(risks);
    let entries: Vec<RiskEntry> = risks
        .iter()
        .filter(|r| r.status.is_live())
        .map(|r| entry(r, horizon))
        .collect();

    let mut alerts: Vec<Alert> = entries
        .iter()
        .flat_map(|e| {
            e.crossings.iter().map(|c| Alert::ThresholdCrossing {
                risk_id: e.id.clone(),
                threshold: c.threshold,
                threshold_kind: c.kind,
                t: c.t,
            })
        })
        .collect();
    if e_p >= cfg.vulnerability_threshold {
        alerts.push(Alert::HighVulnerability {
            e_p,
            threshold: cfg.vulnerability_threshold,
        });
    }

    let strategic_review = entries
        .iter()
        .filter(|e| {
            e.origin == Origin::External
                && matches!(
                    e.admissibility,
                    AdmissibilityDegree::Critical | AdmissibilityDegree::Catastrophic
                )
        })
        .map(|e| e.id.clone())
        .collect();

    AssessmentReport {
        r_v: sums.r_v,
        r_c: sums.r_c,
        r: sums.r,
        e_p,
        fixed: FixedFigures {
            r_v: fixed12(sums.r_v),
            r_c: fixed12(sums.r_c),
            r: fixed12(sums.r),
            e_p: fixed12(e_p),
        },
        vulnerability_threshold: cfg.vulnerability_threshold,
        horizon_periods: horizon,
        risks: entries,
        priorities: prioritize(risks),
        alerts,
        strategic_review,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Intervention {
    /// Replace the risk's driver value (probability or severity, per presence).
    SetDriver { risk_id: String, value: f64 },
    /// Drop the risk from the hypothetical register.
    Remove { risk_id: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WhatIfScenario {
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub interventions: Vec<Intervention>,
}

impl WhatIfScenario {
    pub fn validate(&self, register: &Register) -> Result<()> {
        for i in &self.interventions {
            match i {
                Intervention::SetDriver { risk_id, value } => {
                    let r = register.get(risk_id)?;
                    if !r.status.is_live() {
                        return Err(Error::RiskRetired(risk_id.clone()));
                    }
                    r.presence.driver_kind().validate(*value)?;
                }
                Intervention::Remove { risk_id } => {
                    register.get(risk_id)?;
                }
            }
        }
        Ok(())
    }
}

/// Hypothetical driver change. Catastrophic status is lifted because the
/// intervention models a mitigation that brings the risk back into its band.
fn set_driver(r: &mut RiskRecord, value: f64) {
    r.driver.value = value;
    r.score = scoring::score_driver(r.presence, r.driver.kind, value, r.dynamics.resolve())
        .expect("validated driver");
    r.band = band_for_driver(r.driver.kind, value);
    if r.presence == Presence::Probable && r.score >= CATASTROPHIC_THRESHOLD {
        r.band = ProbabilityBand::High;
    }
    if r.status == RiskStatus::Catastrophic {
        r.status = RiskStatus::Active;
    }
}

pub fn what_if(register: &Register, scenario: &WhatIfScenario) -> Result<AssessmentReport> {
    what_if_with(register, scenario, &AssessConfig::default())
}

pub fn what_if_with(
    register: &Register,
    scenario: &WhatIfScenario,
    cfg: &AssessConfig,
) -> Result<AssessmentReport> {
    scenario.validate(register)?;
    let mut copy = register.clone();
    for i in &scenario.interventions {
        match i {
            Intervention::SetDriver { risk_id, value } => {
                if let Some(r) = copy.risks.iter_mut().find(|r| &r.id == risk_id) {
                    set_driver(r, *value);
                }
            }
            Intervention::Remove { risk_id } => copy.risks.retain(|r| &r.id != risk_id),
        }
    }
    Ok(assess_with(&copy, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Driver, DriverKind, Observation};
    use crate::register::Horizon;
    use chrono::NaiveDate;

    fn record(id: &str, presence: Presence, dynamics: Dynamics, band: ProbabilityBand, x: f64) -> RiskRecord {
        RiskRecord {
            id: id.into(),
            name: id.into(),
            sphere: "firm".into(),
            origin: Origin::Internal,
            presence,
            dynamics,
            band,
            score: x,
            driver: Driver {
                kind: presence.driver_kind(),
                value: 0.5,
            },
            status: RiskStatus::Active,
            dependencies: vec![],
            history: vec![],
        }
    }

    fn existing(id: &str, x: f64) -> RiskRecord {
        record(id, Presence::Existing, Dynamics::Growing, ProbabilityBand::High, x)
    }

    fn probable(id: &str, x: f64) -> RiskRecord {
        record(id, Presence::Probable, Dynamics::Growing, ProbabilityBand::Medium, x)
    }

    fn register(risks: Vec<RiskRecord>) -> Register {
        let mut reg = Register::new(
            Horizon::new("operation", 12),
            vec!["firm".into()],
            NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(),
        )
        .unwrap();
        reg.risks = risks;
        reg
    }

    #[test]
    fn class_sum_examples() {
        let s = class_sums(&[probable("p", 0.3), existing("a", 0.6), existing("b", 0.7)]);
        assert!((s.r_v - 0.3).abs() < 1e-12);
        assert!((s.r_c - 1.3).abs() < 1e-12);
        assert!((s.r - 1.6).abs() < 1e-12);
        assert_eq!(class_sums(&[]), ClassSums { r_v: 0.0, r_c: 0.0, r: 0.0 });
        let s = class_sums(&[probable("p", 0.3), probable("q", -0.2)]);
        assert_eq!(s.r_v, 0.3);
    }

    #[test]
    fn retired_risks_are_not_counted() {
        let mut gone = existing("g", 0.9);
        gone.status = RiskStatus::Retired;
        let risks = [existing("a", 0.5), gone];
        assert_eq!(class_sums(&risks).r_c, 0.5);
        assert_eq!(integral_indicator(&risks), 0.5);
        assert_eq!(prioritize(&risks), vec!["a".to_string()]);
    }

    #[test]
    fn integral_indicator_examples() {
        assert!((integral_indicator(&[existing("a", 0.5), existing("b", 0.8)]) - 0.4).abs() < 1e-12);
        assert_eq!(integral_indicator(&[existing("a", 0.7)]), 0.7);
        let with_zero = [existing("a", 0.5), probable("z", 0.0), existing("b", 0.8)];
        assert!((integral_indicator(&with_zero) - 0.4).abs() < 1e-12);
        assert_eq!(integral_indicator(&[]), 0.0);
        assert_eq!(integral_indicator(&[probable("z", -1.0)]), 0.0);
    }

    #[test]
    fn priority_examples() {
        let a = existing("A", 0.6);
        let mut b = probable("B", 1.5);
        b.band = ProbabilityBand::High;
        assert_eq!(prioritize(&[b, a]), vec!["A", "B"]);

        let a = probable("A", 1.2);
        let b = probable("B", 0.9);
        assert_eq!(prioritize(&[b, a]), vec!["A", "B"]);

        let a = record("A", Presence::Probable, Dynamics::Declining, ProbabilityBand::Low, 0.2);
        assert_eq!(prioritize(&[a]), vec!["A"]);
    }

    #[test]
    fn priority_classes_and_ties() {
        let risks = vec![
            record("pd", Presence::Probable, Dynamics::Declining, ProbabilityBand::Low, 0.4),
            record("ed", Presence::Existing, Dynamics::Declining, ProbabilityBand::Low, 0.6),
            record("pgl", Presence::Probable, Dynamics::Growing, ProbabilityBand::Low, 0.9),
            record("pgm", Presence::Probable, Dynamics::Stable, ProbabilityBand::Medium, 0.8),
            record("eg2", Presence::Existing, Dynamics::Growing, ProbabilityBand::High, 0.7),
            record("eg1", Presence::Existing, Dynamics::Growing, ProbabilityBand::High, 0.7),
            record("ins", Presence::Existing, Dynamics::Growing, ProbabilityBand::High, 0.0),
        ];
        assert_eq!(prioritize(&risks), vec!["eg1", "eg2", "pgm", "pgl", "ed", "pd"]);
    }

    #[test]
    fn strategic_review_flags_external_critical_risks() {
        let mut r = existing("ext", 0.995);
        r.origin = Origin::External;
        let report = assess(&register(vec![r, existing("int", 0.995)]));
        assert_eq!(report.strategic_review, vec!["ext"]);

        let report = assess(&register(vec![existing("a", 0.6), probable("b", 0.7)]));
        assert!(report.strategic_review.is_empty());
    }

    #[test]
    fn report_figures_agree_with_operations() {
        let risks = vec![existing("a", 0.5), existing("b", 0.8), probable("c", 0.3)];
        let report = assess(&register(risks.clone()));
        assert_eq!(report.e_p, integral_indicator(&risks));
        assert_eq!(report.r, class_sums(&risks).r);
        assert_eq!(report.fixed.e_p, fixed12(report.e_p));
        assert_eq!(report.r, report.r_v + report.r_c);
        assert_eq!(report.priorities, prioritize(&risks));
    }

    #[test]
    fn high_vulnerability_alert() {
        let report = assess(&register(vec![existing("a", 0.85)]));
        assert!(report
            .alerts
            .iter()
            .any(|a| matches!(a, Alert::HighVulnerability { .. })));
        let report = assess(&register(vec![existing("a", 0.5)]));
        assert!(report.alerts.is_empty());
    }

    #[test]
    fn forecast_crossing_alerts_inside_horizon() {
        let mut reg = register(vec![]);
        reg.add_risk(crate::model::NewRisk {
            id: "g".into(),
            name: "growing".into(),
            sphere: "firm".into(),
            origin: Origin::External,
            presence: Presence::Existing,
            driver: 0.5,
            dependencies: vec![],
            dynamics: None,
        })
        .unwrap();
        for (t, s) in [(0.0, 0.5), (1.0, 0.6), (2.0, 0.7)] {
            reg.record_observation("g", &Observation::severity(t, s)).unwrap();
        }
        // scores 0.745, 0.794, 0.843: slope 0.049/period, 0.99 reached at t = 2 + 0.147/0.049 = 5
        let report = assess(&reg);
        let crossings = &report.risks[0].crossings;
        assert_eq!(crossings.len(), 2);
        assert_eq!(crossings[0].kind, ThresholdKind::CriticalValue);
        assert!((crossings[0].t - 5.0).abs() < 1e-9);
        assert_eq!(crossings[1].kind, ThresholdKind::Catastrophic);
        assert!((crossings[1].t - (2.0 + 0.157 / 0.049)).abs() < 1e-9);
        // two crossings plus the E_p = 0.843 vulnerability alert
        assert_eq!(report.alerts.len(), 3);

        let short = assess_with(
            &reg,
            &AssessConfig {
                horizon_periods: Some(2),
                ..Default::default()
            },
        );
        assert!(short
            .alerts
            .iter()
            .all(|a| matches!(a, Alert::HighVulnerability { .. })));
    }

    #[test]
    fn sentinel_crossing_for_existing_declining() {
        let mut r = record("d", Presence::Existing, Dynamics::Declining, ProbabilityBand::Low, 0.6);
        r.history = vec![
            Observation::severity(0.0, 0.6),
            Observation::severity(1.0, 0.4),
            Observation::severity(2.0, 0.2),
        ];
        let fit = dynamics::phase_trend(&r).unwrap();
        let c = forecast_crossings(&r, &fit, 12);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].kind, ThresholdKind::DeescalationSentinel);
        // scores 0.794, 0.696, 0.598: slope -0.098, 0.49 reached at 2 + 0.108/0.098
        assert!((c[0].t - (2.0 + 0.108 / 0.098)).abs() < 1e-9);
    }

    #[test]
    fn what_if_examples() {
        let reg = register(vec![existing("A", 0.5), existing("B", 0.8)]);
        let remove_b = WhatIfScenario {
            label: "drop B".into(),
            interventions: vec![Intervention::Remove { risk_id: "B".into() }],
        };
        assert!((what_if(&reg, &remove_b).unwrap().e_p - 0.5).abs() < 1e-12);
        assert_eq!(reg.risks.len(), 2);

        assert_eq!(what_if(&reg, &WhatIfScenario::default()).unwrap(), assess(&reg));

        let mut top = existing("T", 0.99);
        top.driver = Driver {
            kind: DriverKind::Severity,
            value: 1.0,
        };
        let reg = register(vec![top]);
        let lower = WhatIfScenario {
            label: String::new(),
            interventions: vec![Intervention::SetDriver {
                risk_id: "T".into(),
                value: 0.0,
            }],
        };
        let report = what_if(&reg, &lower).unwrap();
        assert!((report.risks[0].score - 0.5).abs() < 1e-12);
        assert!((reg.risks[0].score - 0.99).abs() < 1e-12);
    }

    #[test]
    fn what_if_errors() {
        let reg = register(vec![existing("A", 0.5)]);
        let unknown = WhatIfScenario {
            label: String::new(),
            interventions: vec![Intervention::Remove { risk_id: "Z".into() }],
        };
        assert!(matches!(what_if(&reg, &unknown), Err(Error::UnknownRisk(_))));
        let bad = WhatIfScenario {
            label: String::new(),
            interventions: vec![Intervention::SetDriver {
                risk_id: "A".into(),
                value: 1.5,
            }],
        };
        assert!(matches!(what_if(&reg, &bad), Err(Error::DriverOutOfDomain { .. })));
    }

    #[test]
    fn intervention_wire_format() {
        let s: WhatIfScenario = serde_json::from_str(
            r#"{"label":"x","interventions":[{"action":"set_driver","risk_id":"A","value":0.2},{"action":"remove","risk_id":"B"}]}"#,
        )
        .unwrap();
        assert_eq!(s.interventions.len(), 2);
    }
}
