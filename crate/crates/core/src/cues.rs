//! Turns validated frames into the six per-frame highlight cue values.
//!
//! Cue order is fixed: P1 score, P2 score, P1 action, P2 action, P1 distance,
//! P2 distance. Every cue lands in `[0, 1]`.
//!
//! - Score: cumulative damage dealt, `(max_hp - opponent.hp) / max_hp`.
//! - Action: max class weight over the player's last `window` actions, so a
//!   single flashy move sustains the cue long enough to survive averaging.
//! - Distance: `1 - |p1.x - p2.x| / stage_width`, symmetric, written into
//!   both distance slots.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::state::{ActionClass, GameFrame, MatchConfig};

pub const CUE_COUNT: usize = 6;

/// Identifies one of the six cues; `as_index` gives its slot in a [`CueVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueId {
    P1Score,
    P2Score,
    P1Action,
    P2Action,
    P1Distance,
    P2Distance,
}

impl CueId {
    pub const ALL: [CueId; CUE_COUNT] = [
        CueId::P1Score,
        CueId::P2Score,
        CueId::P1Action,
        CueId::P2Action,
        CueId::P1Distance,
        CueId::P2Distance,
    ];

    pub fn as_index(self) -> usize {
        match self {
            CueId::P1Score => 0,
            CueId::P2Score => 1,
            CueId::P1Action => 2,
            CueId::P2Action => 3,
            CueId::P1Distance => 4,
            CueId::P2Distance => 5,
        }
    }

    /// Short column label used by the timeline export.
    pub fn label(self) -> &'static str {
        match self {
            CueId::P1Score => "p1_score",
            CueId::P2Score => "p2_score",
            CueId::P1Action => "p1_action",
            CueId::P2Action => "p2_action",
            CueId::P1Distance => "p1_distance",
            CueId::P2Distance => "p2_distance",
        }
    }
}

/// The six raw cue values at one frame, in [`CueId::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CueVector {
    pub k: u64,
    pub values: [f64; CUE_COUNT],
}

impl CueVector {
    pub fn get(&self, cue: CueId) -> f64 {
        self.values[cue.as_index()]
    }
}

/// Per-class excitement weight for the action cue.
///
/// Idle is pinned at 0 and weights must not decrease along the
/// idle → super ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionWeightTable {
    pub idle: f64,
    pub r#move: f64,
    pub guard: f64,
    pub normal: f64,
    pub special: f64,
    pub r#super: f64,
}

impl Default for ActionWeightTable {
    fn default() -> Self {
        ActionWeightTable {
            idle: 0.0,
            r#move: 0.1,
            guard: 0.2,
            normal: 0.5,
            special: 0.8,
            r#super: 1.0,
        }
    }
}

impl ActionWeightTable {
    pub fn weight(&self, class: ActionClass) -> f64 {
        match class {
            ActionClass::Idle => self.idle,
            ActionClass::Move => self.r#move,
            ActionClass::Guard => self.guard,
            ActionClass::NormalAttack => self.normal,
            ActionClass::SpecialAttack => self.special,
            ActionClass::SuperAttack => self.r#super,
        }
    }

    /// Idle must weigh 0, all weights in [0,1] and non-decreasing by class.
    pub fn validate(&self) -> Result<(), String> {
        let ordered = [
            self.idle,
            self.r#move,
            self.guard,
            self.normal,
            self.special,
            self.r#super,
        ];
        if self.idle != 0.0 {
            return Err("idle action weight must be 0".to_string());
        }
        if ordered.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err("action weights must lie in [0, 1]".to_string());
        }
        if ordered.windows(2).any(|w| w[1] < w[0]) {
            return Err("action weights must be non-decreasing from idle to super".to_string());
        }
        Ok(())
    }
}

/// Damage dealt so far by `player` (1 or 2), normalized to `[0, 1]`.
pub fn score_cue(frame: &GameFrame, cfg: &MatchConfig, player: u8) -> f64 {
    let opponent_hp = if player == 1 { frame.p2.hp } else { frame.p1.hp };
    (cfg.max_hp - opponent_hp) as f64 / cfg.max_hp as f64
}

/// Max class weight over a recent-action window. The window is expected to
/// already include the current frame's action.
pub fn action_cue(table: &ActionWeightTable, window: &VecDeque<ActionClass>) -> f64 {
    window
        .iter()
        .map(|&class| table.weight(class))
        .fold(0.0, f64::max)
}

/// Proximity of the two players, 1 at zero separation, 0 at full stage width.
pub fn distance_cue(frame: &GameFrame, cfg: &MatchConfig) -> f64 {
    1.0 - (frame.p1.x - frame.p2.x).abs() / cfg.stage_width
}

/// Streaming cue extractor for one round. Holds both players' action windows;
/// [`CueExtractor::reset`] clears them at round boundaries.
#[derive(Debug, Clone)]
pub struct CueExtractor {
    weights: ActionWeightTable,
    window: usize,
    p1_actions: VecDeque<ActionClass>,
    p2_actions: VecDeque<ActionClass>,
}

impl CueExtractor {
    pub fn new(weights: ActionWeightTable, window: usize) -> Self {
        let window = window.max(1);
        CueExtractor {
            weights,
            window,
            p1_actions: VecDeque::with_capacity(window),
            p2_actions: VecDeque::with_capacity(window),
        }
    }

    pub fn reset(&mut self) {
        self.p1_actions.clear();
        self.p2_actions.clear();
    }

    /// Produces the six cues for a validated frame and advances the windows.
    pub fn extract(&mut self, frame: &GameFrame, cfg: &MatchConfig) -> CueVector {
        push_window(&mut self.p1_actions, frame.p1.action, self.window);
        push_window(&mut self.p2_actions, frame.p2.action, self.window);
        let distance = distance_cue(frame, cfg);
        CueVector {
            k: frame.k,
            values: [
                score_cue(frame, cfg, 1),
                score_cue(frame, cfg, 2),
                action_cue(&self.weights, &self.p1_actions),
                action_cue(&self.weights, &self.p2_actions),
                distance,
                distance,
            ],
        }
    }
}

fn push_window(window: &mut VecDeque<ActionClass>, class: ActionClass, cap: usize) {
    if window.len() == cap {
        window.pop_front();
    }
    window.push_back(class);
}
