//! Canonical in-memory match state: players, frames, match parameters.
//!
//! Everything downstream (cue extraction, highlight scoring, commentary)
//! consumes the types in this module. Frames are per-round: `k` restarts at 1
//! whenever `round_id` advances, and all engine statistics reset with it.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coarse action category a raw game action id maps onto.
///
/// Exactly six categories, ordered by spectacle. The cue weight table and the
/// comment templates both key off this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Idle,
    Move,
    Guard,
    NormalAttack,
    SpecialAttack,
    SuperAttack,
}

impl ActionClass {
    pub const ALL: [ActionClass; 6] = [
        ActionClass::Idle,
        ActionClass::Move,
        ActionClass::Guard,
        ActionClass::NormalAttack,
        ActionClass::SpecialAttack,
        ActionClass::SuperAttack,
    ];

    /// Stable identifier used in config files and replay action ids.
    pub fn canonical_id(self) -> &'static str {
        match self {
            ActionClass::Idle => "idle",
            ActionClass::Move => "move",
            ActionClass::Guard => "guard",
            ActionClass::NormalAttack => "normal",
            ActionClass::SpecialAttack => "special",
            ActionClass::SuperAttack => "super",
        }
    }

    /// Human-readable label used when filling the «MOVE» template slot.
    pub fn display_name(self) -> &'static str {
        match self {
            ActionClass::Idle => "idle",
            ActionClass::Move => "footsies",
            ActionClass::Guard => "a guard",
            ActionClass::NormalAttack => "a normal attack",
            ActionClass::SpecialAttack => "a special move",
            ActionClass::SuperAttack => "a super move",
        }
    }

    pub fn parse(s: &str) -> Option<ActionClass> {
        ActionClass::ALL
            .into_iter()
            .find(|c| c.canonical_id() == s)
    }
}

/// Maps raw action identifiers (whatever the game logs) onto [`ActionClass`].
///
/// Unmapped ids fall back to `Idle`; each unknown id is warned about once.
#[derive(Debug, Clone, Default)]
pub struct ActionMap {
    entries: BTreeMap<String, ActionClass>,
    warned: HashSet<String>,
}

impl ActionMap {
    /// Map that recognizes only the six canonical ids.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, raw: impl Into<String>, class: ActionClass) {
        self.entries.insert(raw.into(), class);
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, ActionClass)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Resolve a raw id. Canonical ids always work; custom entries take
    /// precedence; anything else is `Idle` with a one-shot warning.
    pub fn classify(&mut self, raw: &str) -> ActionClass {
        if let Some(&class) = self.entries.get(raw) {
            return class;
        }
        if let Some(class) = ActionClass::parse(raw) {
            return class;
        }
        if self.warned.insert(raw.to_string()) {
            log::warn!("unmapped action id {raw:?}, treating as idle");
        }
        ActionClass::Idle
    }
}

/// One player's state at a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    /// Remaining hit points, in `[0, max_hp]`.
    pub hp: u32,
    /// Horizontal position in stage units, in `[0, stage_width]`.
    pub x: f64,
    pub action: ActionClass,
    /// Original action identifier as logged by the game.
    pub action_raw: String,
}

/// One tick of match state.
#[derive(Debug, Clone, PartialEq)]
pub struct GameFrame {
    /// Frame index, 1-based within the round.
    pub k: u64,
    /// Round counter, starts at 1 and never decreases within a stream.
    pub round_id: u64,
    pub p1: PlayerState,
    pub p2: PlayerState,
}

/// Static match parameters. `fps` drives wall-clock scheduling only; none of
/// the scoring math reads it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub max_hp: u32,
    pub stage_width: f64,
    pub fps: u32,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            max_hp: 400,
            stage_width: 960.0,
            fps: 60,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), FrameError> {
        if self.max_hp == 0 || self.stage_width <= 0.0 || !self.stage_width.is_finite() || self.fps == 0 {
            return Err(FrameError::BadConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("frame k={got} does not follow k={prev} (round {round_id})")]
    SequenceGap { prev: u64, got: u64, round_id: u64 },
    #[error("frame k={k}: {field} = {value} outside [0, {max}]")]
    OutOfRange {
        k: u64,
        field: &'static str,
        value: f64,
        max: f64,
    },
    #[error("match config fields must be strictly positive")]
    BadConfig,
}

/// Checks a frame against the match bounds and the in-round sequencing rule.
///
/// `prev_k` is the previously accepted frame index within the same round, or
/// `None` at a round start (where `k` must be 1). Pure: the same inputs always
/// produce the same verdict.
pub fn validate_frame(
    frame: &GameFrame,
    cfg: &MatchConfig,
    prev_k: Option<u64>,
) -> Result<(), FrameError> {
    let expected = prev_k.map_or(1, |p| p + 1);
    if frame.k != expected {
        return Err(FrameError::SequenceGap {
            prev: prev_k.unwrap_or(0),
            got: frame.k,
            round_id: frame.round_id,
        });
    }
    for (label, player) in [("p1", &frame.p1), ("p2", &frame.p2)] {
        if player.hp > cfg.max_hp {
            return Err(FrameError::OutOfRange {
                k: frame.k,
                field: if label == "p1" { "p1.hp" } else { "p2.hp" },
                value: player.hp as f64,
                max: cfg.max_hp as f64,
            });
        }
        if !(player.x >= 0.0 && player.x <= cfg.stage_width) {
            return Err(FrameError::OutOfRange {
                k: frame.k,
                field: if label == "p1" { "p1.x" } else { "p2.x" },
                value: player.x,
                max: cfg.stage_width,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn player(hp: u32, x: f64) -> PlayerState {
        PlayerState {
            hp,
            x,
            action: ActionClass::Idle,
            action_raw: "idle".to_string(),
        }
    }

    fn frame(k: u64, p1: PlayerState, p2: PlayerState) -> GameFrame {
        GameFrame {
            k,
            round_id: 1,
            p1,
            p2,
        }
    }

    #[test]
    fn fresh_round_frame_accepted() {
        let cfg = MatchConfig {
            max_hp: 400,
            stage_width: 960.0,
            fps: 60,
        };
        let f = frame(1, player(400, 100.0), player(400, 800.0));
        assert!(validate_frame(&f, &cfg, None).is_ok());
    }

    #[test]
    fn sequence_gap_rejected() {
        let cfg = MatchConfig::default();
        let f = frame(3, player(400, 100.0), player(400, 800.0));
        assert_eq!(
            validate_frame(&f, &cfg, Some(1)),
            Err(FrameError::SequenceGap {
                prev: 1,
                got: 3,
                round_id: 1
            })
        );
    }

    #[test]
    fn hp_one_past_bound_rejected() {
        let cfg = MatchConfig::default();
        let f = frame(2, player(401, 100.0), player(400, 800.0));
        match validate_frame(&f, &cfg, Some(1)) {
            Err(FrameError::OutOfRange { field: "p1.hp", value, .. }) => {
                assert_eq!(value, 401.0)
            }
            other => panic!("expected OutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn nan_position_rejected() {
        let cfg = MatchConfig::default();
        let f = frame(1, player(400, f64::NAN), player(400, 800.0));
        assert!(matches!(
            validate_frame(&f, &cfg, None),
            Err(FrameError::OutOfRange { field: "p1.x", .. })
        ));
    }

    #[test]
    fn round_start_must_be_k1() {
        let cfg = MatchConfig::default();
        let f = frame(2, player(400, 100.0), player(400, 800.0));
        assert!(matches!(
            validate_frame(&f, &cfg, None),
            Err(FrameError::SequenceGap { .. })
        ));
    }

    #[test]
    fn action_map_falls_back_to_idle() {
        let mut map = ActionMap::new();
        map.insert("hadoken", ActionClass::SpecialAttack);
        assert_eq!(map.classify("hadoken"), ActionClass::SpecialAttack);
        assert_eq!(map.classify("super"), ActionClass::SuperAttack);
        assert_eq!(map.classify("taunt"), ActionClass::Idle);
    }
}
