use std::fmt::Write;

use riskwarden_core::assessment::{Alert, AssessmentReport};
use riskwarden_core::cycle::{CycleReport, StageOutput, StageStatus};
use riskwarden_core::dynamics::TransitionEvent;
use riskwarden_core::fixed12;
use riskwarden_core::store::ImportSummary;
use serde::Serialize;

const NAME_WIDTH: usize = 40;

/// The snake_case wire name of a unit enum.
pub fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

fn truncate(name: &str) -> String {
    if name.chars().count() <= NAME_WIDTH {
        name.to_string()
    } else {
        let mut s: String = name.chars().take(NAME_WIDTH - 1).collect();
        s.push('~');
        s
    }
}

pub fn assessment(r: &AssessmentReport) -> String {
    let mut out = String::new();
    let f = &r.fixed;
    writeln!(out, "R_v = {}", f.r_v).unwrap();
    writeln!(out, "R_c = {}", f.r_c).unwrap();
    writeln!(out, "R = {}", f.r).unwrap();
    writeln!(out, "E_p = {}", f.e_p).unwrap();
    writeln!(out).unwrap();

    writeln!(
        out,
        "{:<12} {:<40} {:<9} {:<26} {:<9} {:<6} {:<15} {:<15} {:>5}",
        "ID", "NAME", "STATUS", "STRATEGY", "DYNAMICS", "BAND", "SCORE", "ADMISSIBILITY", "CLASS"
    )
    .unwrap();
    for e in &r.risks {
        let class = e.priority_class.map_or("-".to_string(), |c| c.to_string());
        writeln!(
            out,
            "{:<12} {:<40} {:<9} {:<26} {:<9} {:<6} {:<15} {:<15} {:>5}",
            e.id,
            truncate(&e.name),
            label(&e.status),
            e.strategy.label,
            label(&e.dynamics),
            label(&e.band),
            fixed12(e.score),
            label(&e.admissibility),
            class
        )
        .unwrap();
    }

    writeln!(out, "\nPriorities:").unwrap();
    if r.priorities.is_empty() {
        writeln!(out, "  (none)").unwrap();
    }
    for (i, id) in r.priorities.iter().enumerate() {
        writeln!(out, "  {}. {id}", i + 1).unwrap();
    }

    writeln!(out, "\nAlerts:").unwrap();
    if r.alerts.is_empty() {
        writeln!(out, "  (none)").unwrap();
    }
    for a in &r.alerts {
        match a {
            Alert::ThresholdCrossing {
                risk_id,
                threshold,
                threshold_kind,
                t,
            } => writeln!(
                out,
                "  {risk_id}: forecast reaches {} ({}) at t = {:.3}",
                fixed12(*threshold),
                label(threshold_kind),
                t
            ),
            Alert::HighVulnerability { e_p, threshold } => writeln!(
                out,
                "  E_p = {} is at or above {}",
                fixed12(*e_p),
                fixed12(*threshold)
            ),
        }
        .unwrap();
    }

    writeln!(out, "\nStrategic review:").unwrap();
    if r.strategic_review.is_empty() {
        writeln!(out, "  (none)").unwrap();
    }
    for id in &r.strategic_review {
        writeln!(out, "  {id}").unwrap();
    }
    out
}

pub fn event_line(e: &TransitionEvent) -> String {
    format!(
        "{}\tt {}\t{}\t{} {} -> {} {}",
        e.risk_id,
        e.t,
        label(&e.kind),
        label(&e.before.presence),
        fixed12(e.before.score),
        label(&e.after.presence),
        fixed12(e.after.score),
    )
}

pub fn import_summary(s: &ImportSummary) -> String {
    let mut out = format!("accepted {}\nrejected {}\n", s.accepted, s.rejected.len());
    for r in &s.rejected {
        writeln!(out, "  row {}\t{}\t{}\t{}", r.row, r.risk_id, r.code, r.reason).unwrap();
    }
    for e in &s.events {
        writeln!(out, "{}", event_line(e)).unwrap();
    }
    out
}

fn stage_summary(o: &StageOutput) -> String {
    match o {
        StageOutput::Horizon { horizon } => {
            format!("stage '{}', {} periods of {} days", horizon.stage, horizon.periods, horizon.period_days)
        }
        StageOutput::SphereGrouping { groups } => format!("{} spheres", groups.len()),
        StageOutput::Identification { risk_ids } => format!("{} risks", risk_ids.len()),
        StageOutput::QualitativeBase { spheres } => format!("{} sphere trends", spheres.len()),
        StageOutput::MagnitudeAndVector { risks } => format!("{} vectors", risks.len()),
        StageOutput::ProbabilityAdmissibility { table } => format!("{} rows", table.len()),
        StageOutput::DynamicsInterdependency { ratings } => format!("{} ratings", ratings.len()),
        StageOutput::MitigationPlan { risk_ids } => {
            if risk_ids.is_empty() {
                "nothing to mitigate".into()
            } else {
                risk_ids.join(", ")
            }
        }
        StageOutput::Monitoring { checklist } => format!("{} items", checklist.len()),
        StageOutput::Pending => "-".into(),
    }
}

pub fn cycle(r: &CycleReport) -> String {
    let mut out = String::new();
    for s in &r.stages {
        let mark = match s.status {
            StageStatus::Complete => "done",
            StageStatus::Incomplete => "open",
        };
        writeln!(out, "{}. {:<30} {:<5} {}", s.index, s.name, mark, stage_summary(&s.output)).unwrap();
    }
    out
}
