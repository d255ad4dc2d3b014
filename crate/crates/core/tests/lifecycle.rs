use chrono::NaiveDate;
use riskwarden_core::assessment::{assess, what_if, Intervention, WhatIfScenario};
use riskwarden_core::cycle::{run_cycle, CycleConfig};
use riskwarden_core::store::{create_register, load_register, read_events, LogKind, RegisterStore};
use riskwarden_core::{
    Dynamics, Error, Horizon, NewRisk, Observation, Origin, Presence, RiskStatus, TransitionKind,
};

fn risk(id: &str, origin: Origin, presence: Presence, driver: f64) -> NewRisk {
    NewRisk {
        id: id.into(),
        name: format!("{id} exposure"),
        sphere: "firm".into(),
        origin,
        presence,
        driver,
        dependencies: vec![],
        dynamics: None,
    }
}

fn store(dir: &std::path::Path) -> RegisterStore {
    let path = dir.join("register.json");
    create_register(
        &path,
        Horizon::new("construction", 8),
        vec!["market".into(), "firm".into()],
        NaiveDate::from_ymd_opt(2026, 1, 1).unwrap(),
    )
    .unwrap();
    RegisterStore::open(&path).unwrap()
}

#[test]
fn existing_risk_recovers_to_probable() {
    let dir = tempfile::tempdir().unwrap();
    let mut st = store(dir.path());
    st.add_risk(risk("LIQ", Origin::Internal, Presence::Existing, 0.9)).unwrap();

    let mut kinds = Vec::new();
    for (t, s) in [(0.0, 0.9), (1.0, 0.85), (2.0, 0.0), (3.0, 0.0)] {
        let events = st.record_observation("LIQ", &Observation::severity(t, s)).unwrap();
        kinds.extend(events.into_iter().map(|e| e.kind));
    }
    assert_eq!(kinds, vec![TransitionKind::DeEscalationToProbable]);
    let r = st.register().get("LIQ").unwrap();
    assert_eq!(r.presence, Presence::Probable);
    assert_eq!(r.dynamics, Dynamics::Declining);

    let reloaded = load_register(st.path()).unwrap();
    assert_eq!(&reloaded, st.register());
    let log = read_events(st.path(), Some(3.0)).unwrap();
    assert!(log.iter().any(|e| e.kind == LogKind::DeEscalationToProbable));
}

#[test]
fn catastrophe_is_absorbing() {
    let dir = tempfile::tempdir().unwrap();
    let mut st = store(dir.path());
    st.add_risk(risk("FIRE", Origin::External, Presence::Existing, 0.5)).unwrap();
    let declared = Observation::severity(0.0, 1.0).declaring(riskwarden_core::Declaration::Catastrophe);
    st.record_observation("FIRE", &declared).unwrap();
    let events = st.record_observation("FIRE", &Observation::severity(1.0, 0.0)).unwrap();
    assert!(events.is_empty());
    let r = st.register().get("FIRE").unwrap();
    assert_eq!(r.status, RiskStatus::Catastrophic);
    assert_eq!(r.score, 1.0);
}

#[test]
fn what_if_lowering_severity_spans_the_existing_range() {
    let dir = tempfile::tempdir().unwrap();
    let mut st = store(dir.path());
    st.add_risk(risk("E", Origin::External, Presence::Existing, 1.0)).unwrap();
    let live = assess(st.register());
    assert!((live.risks[0].score - 0.99).abs() < 1e-12);

    let scenario = WhatIfScenario {
        label: "full mitigation".into(),
        interventions: vec![Intervention::SetDriver {
            risk_id: "E".into(),
            value: 0.0,
        }],
    };
    let hypo = what_if(st.register(), &scenario).unwrap();
    assert!((hypo.risks[0].score - 0.5).abs() < 1e-12);
    assert_eq!(assess(st.register()), live);

    let bad = WhatIfScenario {
        label: String::new(),
        interventions: vec![Intervention::SetDriver {
            risk_id: "E".into(),
            value: 3.0,
        }],
    };
    assert!(matches!(what_if(st.register(), &bad), Err(Error::DriverOutOfDomain { .. })));
}

#[test]
fn cycle_runs_all_stages_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut st = store(dir.path());
    st.add_risk(risk("A", Origin::External, Presence::Probable, 0.8)).unwrap();
    st.add_risk(risk("B", Origin::Internal, Presence::Existing, 0.6)).unwrap();
    let report = run_cycle(st.register(), &CycleConfig::from_register(st.register())).unwrap();
    assert!(report.is_complete());
    assert!(report.is_ordered());
    assert_eq!(report.stages.len(), 9);

    let mut cfg = CycleConfig::from_register(st.register());
    cfg.taxonomy.clear();
    assert!(matches!(run_cycle(st.register(), &cfg), Err(Error::EmptyTaxonomy)));
}

#[test]
fn retired_risks_leave_the_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let mut st = store(dir.path());
    st.add_risk(risk("A", Origin::External, Presence::Existing, 0.0)).unwrap();
    st.add_risk(risk("B", Origin::External, Presence::Existing, 1.0)).unwrap();
    assert!((assess(st.register()).e_p - 0.5 * 0.99).abs() < 1e-12);
    st.retire_risk("B").unwrap();
    let report = assess(st.register());
    assert!((report.e_p - 0.5).abs() < 1e-12);
    assert_eq!(report.priorities, vec!["A"]);
    assert!(matches!(
        st.record_observation("B", &Observation::severity(0.0, 0.5)),
        Err(Error::RiskRetired(_))
    ));
}
