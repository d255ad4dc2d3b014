//! Mapping between expert drivers and the risk level x.
//!
//! Probable risks use a piecewise-linear bijection of occurrence probability,
//! one branch per direction. Existing risks map an impact severity fraction
//! linearly onto the existing band. Every branch endpoint coincides with a
//! strategy-table endpoint or critical value.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Direction, DriverKind, Presence};
use crate::strategy::StrategyRow;

pub const PROBABILITY_MIN: f64 = 0.01;
pub const PROBABILITY_MAX: f64 = 0.99;

pub const PROBABLE_DECLINING_GAIN: f64 = 0.49;
pub const PROBABLE_GROWING_FLOOR: f64 = 0.5;
/// The growing gain is the rational 149/98 (1.49 over the 0.98-wide domain).
pub const PROBABLE_GROWING_GAIN_NUM: f64 = 149.0;
pub const PROBABLE_GROWING_GAIN_DEN: f64 = 98.0;
pub const EXISTING_FLOOR: f64 = 0.5;
pub const EXISTING_GAIN: f64 = 0.49;
pub const CATASTROPHIC_THRESHOLD: f64 = 1.0;
pub const DEESCALATION_SENTINEL: f64 = 0.49;

/// Slack allowed when checking a score against a branch image, so that the
/// images of the domain endpoints round-trip despite binary rounding.
const IMAGE_SLACK: f64 = 1e-12;

/// Score zone of a risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    InsignificantZone,
    ProbableZone,
    ExistingZone,
    CatastrophicZone,
}

fn check_probability(y: f64) -> Result<()> {
    DriverKind::Probability.validate(y)
}

pub fn score_probable(y: f64, direction: Direction) -> Result<f64> {
    check_probability(y)?;
    Ok(match direction {
        Direction::Declining => PROBABLE_DECLINING_GAIN * (1.0 - y),
        Direction::Growing => {
            PROBABLE_GROWING_FLOOR
                + PROBABLE_GROWING_GAIN_NUM * (y - PROBABILITY_MIN) / PROBABLE_GROWING_GAIN_DEN
        }
    })
}

/// Image of a probable branch over the probability domain, as (low, high).
pub fn probable_image(direction: Direction) -> (f64, f64) {
    match direction {
        Direction::Declining => (
            PROBABLE_DECLINING_GAIN * (1.0 - PROBABILITY_MAX),
            PROBABLE_DECLINING_GAIN * (1.0 - PROBABILITY_MIN),
        ),
        Direction::Growing => (PROBABLE_GROWING_FLOOR, 1.99),
    }
}

pub fn inverse_probable(x: f64, direction: Direction) -> Result<f64> {
    let (lo, hi) = probable_image(direction);
    if !x.is_finite() || x < lo - IMAGE_SLACK || x > hi + IMAGE_SLACK {
        return Err(Error::ScoreOutOfDomain {
            branch: match direction {
                Direction::Declining => "declining",
                Direction::Growing => "growing",
            },
            value: x,
            min: lo,
            max: hi,
        });
    }
    let y = match direction {
        Direction::Declining => 1.0 - x / PROBABLE_DECLINING_GAIN,
        Direction::Growing => {
            PROBABILITY_MIN
                + (x - PROBABLE_GROWING_FLOOR) * PROBABLE_GROWING_GAIN_DEN
                    / PROBABLE_GROWING_GAIN_NUM
        }
    };
    Ok(y.clamp(PROBABILITY_MIN, PROBABILITY_MAX))
}

pub fn score_existing(s: f64) -> Result<f64> {
    DriverKind::Severity.validate(s)?;
    Ok(EXISTING_FLOOR + EXISTING_GAIN * s)
}

/// Scores a driver value for a risk of the given presence.
pub fn score_driver(
    presence: Presence,
    kind: DriverKind,
    value: f64,
    direction: Direction,
) -> Result<f64> {
    if kind != presence.driver_kind() {
        return Err(Error::KindMismatch {
            observed: kind.as_str(),
            presence: presence.as_str(),
        });
    }
    match presence {
        Presence::Probable => score_probable(value, direction),
        Presence::Existing => score_existing(value),
    }
}

pub fn critical_value(row: &StrategyRow) -> f64 {
    row.critical_value
}

pub fn classify_zone(presence: Presence, x: f64) -> Zone {
    if x >= CATASTROPHIC_THRESHOLD {
        Zone::CatastrophicZone
    } else if presence == Presence::Existing {
        Zone::ExistingZone
    } else if x > 0.0 {
        Zone::ProbableZone
    } else {
        Zone::InsignificantZone
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Origin;
    use crate::strategy::resolve_strategy;
    use proptest::prelude::*;

    const EXACT: f64 = 1e-12;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn probable_examples() {
        assert!(close(score_probable(0.01, Direction::Declining).unwrap(), 0.4851, EXACT));
        assert!(close(score_probable(0.99, Direction::Growing).unwrap(), 1.99, EXACT));
        assert!(close(score_probable(0.01, Direction::Growing).unwrap(), 0.5, EXACT));
        // 0.5 + (149/98) * 0.49 = 0.5 + 1.49 * 0.5
        assert!(close(score_probable(0.5, Direction::Growing).unwrap(), 1.245, EXACT));
        assert!(close(score_probable(0.5, Direction::Declining).unwrap(), 0.245, EXACT));
    }

    #[test]
    fn probable_rejects_out_of_domain() {
        for y in [0.0, 0.009, 0.991, 1.5, -1.0, f64::NAN, f64::INFINITY] {
            assert!(score_probable(y, Direction::Growing).is_err(), "{y}");
        }
    }

    #[test]
    fn inverse_examples() {
        assert!(close(inverse_probable(0.4851, Direction::Declining).unwrap(), 0.01, 1e-12));
        assert!(close(inverse_probable(1.99, Direction::Growing).unwrap(), 0.99, 1e-12));
        assert_eq!(inverse_probable(0.5, Direction::Growing).unwrap(), 0.01);
        assert!(inverse_probable(0.49, Direction::Declining).is_err());
        assert!(inverse_probable(0.0, Direction::Declining).is_err());
        assert!(inverse_probable(2.0, Direction::Growing).is_err());
        assert!(inverse_probable(0.45, Direction::Growing).is_err());
    }

    #[test]
    fn existing_examples() {
        assert!(close(score_existing(0.0).unwrap(), 0.5, EXACT));
        assert!(close(score_existing(1.0).unwrap(), 0.99, EXACT));
        assert!(close(score_existing(0.5).unwrap(), 0.745, EXACT));
        assert!(score_existing(1.01).is_err());
        assert!(score_existing(-0.01).is_err());
    }

    #[test]
    fn critical_value_examples() {
        for origin in [Origin::External, Origin::Internal] {
            let row = resolve_strategy(origin, Presence::Probable, Direction::Growing);
            assert_eq!(critical_value(row), 1.99);
            let row = resolve_strategy(origin, Presence::Existing, Direction::Declining);
            assert_eq!(critical_value(row), 0.49);
        }
        let row = resolve_strategy(Origin::Internal, Presence::Existing, Direction::Growing);
        assert_eq!(critical_value(row), 0.98);
    }

    #[test]
    fn zone_examples() {
        assert_eq!(classify_zone(Presence::Existing, 1.2), Zone::CatastrophicZone);
        assert_eq!(classify_zone(Presence::Probable, 0.3), Zone::ProbableZone);
        assert_eq!(classify_zone(Presence::Probable, 0.0), Zone::InsignificantZone);
        assert_eq!(classify_zone(Presence::Existing, 0.7), Zone::ExistingZone);
        assert_eq!(classify_zone(Presence::Probable, 1.5), Zone::CatastrophicZone);
    }

    #[test]
    fn only_the_probable_growing_image_crosses_the_catastrophic_threshold() {
        let (lo, hi) = probable_image(Direction::Growing);
        assert!(lo < CATASTROPHIC_THRESHOLD && hi > CATASTROPHIC_THRESHOLD);
        let (_, hi) = probable_image(Direction::Declining);
        assert!(hi < CATASTROPHIC_THRESHOLD);
        assert!(score_existing(1.0).unwrap() < CATASTROPHIC_THRESHOLD);
    }

    #[test]
    fn driver_kind_must_match_presence() {
        let err = score_driver(Presence::Existing, DriverKind::Probability, 0.5, Direction::Growing)
            .unwrap_err();
        assert_eq!(err.code(), "kind_mismatch");
    }

    proptest! {
        #[test]
        fn branches_are_strictly_monotone(a in 0.01f64..=0.99, b in 0.01f64..=0.99) {
            prop_assume!(a < b);
            prop_assert!(score_probable(a, Direction::Growing).unwrap() < score_probable(b, Direction::Growing).unwrap());
            prop_assert!(score_probable(a, Direction::Declining).unwrap() > score_probable(b, Direction::Declining).unwrap());
        }

        #[test]
        fn inverse_undoes_score(y in 0.01f64..=0.99, growing in any::<bool>()) {
            let d = if growing { Direction::Growing } else { Direction::Declining };
            let x = score_probable(y, d).unwrap();
            prop_assert!((inverse_probable(x, d).unwrap() - y).abs() < 1e-9);
        }

        #[test]
        fn existing_image_stays_in_band(s in 0.0f64..=1.0) {
            let x = score_existing(s).unwrap();
            prop_assert!((0.5..=0.99 + EXACT).contains(&x));
        }
    }
}
