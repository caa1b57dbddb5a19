//! Deterministic synthetic match generator.
//!
//! Not a game AI — the only contract is that the frame streams are valid,
//! varied enough to exercise every trigger and threshold crossing, and a pure
//! function of [`SimConfig`]. Players random-walk along x, pick timed actions
//! from an aggression-weighted distribution, and attacks that connect inside
//! the hit range deduct class-dependent damage.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::state::{ActionClass, GameFrame, MatchConfig, PlayerState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub rounds: u32,
    /// Frames per round unless a KO ends it early.
    pub round_length_frames: u32,
    /// Attack frequency in [0, 1]; 0 means nobody ever attacks.
    pub aggression: f64,
    pub cfg: MatchConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            rounds: 1,
            round_length_frames: 3600,
            aggression: 0.5,
            cfg: MatchConfig::default(),
        }
    }
}

const HIT_RANGE: f64 = 140.0;
const WALK_SPEED: f64 = 4.0;

fn damage_for(class: ActionClass) -> u32 {
    match class {
        ActionClass::NormalAttack => 10,
        ActionClass::SpecialAttack => 25,
        ActionClass::SuperAttack => 60,
        _ => 0,
    }
}

fn duration_for(class: ActionClass) -> u32 {
    match class {
        ActionClass::Idle => 6,
        ActionClass::Move => 8,
        ActionClass::Guard => 10,
        ActionClass::NormalAttack => 12,
        ActionClass::SpecialAttack => 24,
        ActionClass::SuperAttack => 45,
    }
}

/// Frame within the move at which an attack deals its damage.
fn hit_frame_for(class: ActionClass) -> u32 {
    match class {
        ActionClass::NormalAttack => 4,
        ActionClass::SpecialAttack => 10,
        ActionClass::SuperAttack => 20,
        _ => u32::MAX,
    }
}

#[derive(Debug, Clone)]
struct Fighter {
    hp: u32,
    x: f64,
    action: ActionClass,
    frames_left: u32,
    age: u32,
}

impl Fighter {
    fn spawn(x: f64, hp: u32) -> Fighter {
        Fighter {
            hp,
            x,
            action: ActionClass::Idle,
            frames_left: duration_for(ActionClass::Idle),
            age: 0,
        }
    }
}

/// Streaming frame generator. Implements `Iterator<Item = GameFrame>`.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    rng: ChaCha8Rng,
    round: u32,
    k: u64,
    fighters: Option<[Fighter; 2]>,
    done: bool,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Simulator {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(0);
        Simulator {
            config,
            rng,
            round: 0,
            k: 0,
            fighters: None,
            done: config.rounds == 0,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn start_round(&mut self) {
        let w = self.config.cfg.stage_width;
        self.fighters = Some([
            Fighter::spawn(w * (1.0 / 3.0), self.config.cfg.max_hp),
            Fighter::spawn(w * (2.0 / 3.0), self.config.cfg.max_hp),
        ]);
        self.round += 1;
        self.k = 0;
    }

    fn pick_action(&mut self, me: usize, distance: f64) -> ActionClass {
        let aggression = self.config.aggression;
        let in_range = distance <= HIT_RANGE;
        let attack_p = if aggression <= 0.0 {
            0.0
        } else if in_range {
            0.35 * aggression
        } else {
            0.06 * aggression
        };
        let roll: f64 = self.rng.gen();
        if roll < attack_p {
            // among attacks: mostly normals, supers are rare
            let a: f64 = self.rng.gen();
            if a < 0.70 {
                ActionClass::NormalAttack
            } else if a < 0.93 {
                ActionClass::SpecialAttack
            } else {
                ActionClass::SuperAttack
            }
        } else if roll < attack_p + 0.12 {
            ActionClass::Guard
        } else if roll < attack_p + 0.62 {
            ActionClass::Move
        } else {
            let _ = me;
            ActionClass::Idle
        }
    }

    fn step_round(&mut self) -> Option<GameFrame> {
        let cfg = self.config.cfg;
        let n = self.config.round_length_frames as u64;
        let mut fighters = self.fighters.take()?;

        if self.k >= n || fighters.iter().any(|f| f.hp == 0) {
            return None;
        }
        self.k += 1;

        let distance = (fighters[0].x - fighters[1].x).abs();
        for i in 0..2 {
            if fighters[i].frames_left == 0 {
                fighters[i].action = self.pick_action(i, distance);
                fighters[i].frames_left = duration_for(fighters[i].action);
                fighters[i].age = 0;
            }
        }

        // movement: walkers drift toward the opponent with jitter
        for i in 0..2 {
            if fighters[i].action == ActionClass::Move {
                let other = fighters[1 - i].x;
                let toward = if other > fighters[i].x { 1.0 } else { -1.0 };
                let jitter: f64 = self.rng.gen_range(-1.0..=1.0);
                let dir = if self.rng.gen::<f64>() < 0.75 { toward } else { -toward };
                fighters[i].x =
                    (fighters[i].x + dir * WALK_SPEED + jitter).clamp(0.0, cfg.stage_width);
            }
        }

        // damage lands on the move's hit frame if the opponent is in range
        for i in 0..2 {
            let f = &fighters[i];
            if f.age == hit_frame_for(f.action) {
                let reach = (fighters[0].x - fighters[1].x).abs() <= HIT_RANGE;
                if reach {
                    let dmg = damage_for(f.action);
                    let target = &mut fighters[1 - i];
                    target.hp = target.hp.saturating_sub(dmg);
                }
            }
        }

        for f in &mut fighters {
            f.age += 1;
            f.frames_left = f.frames_left.saturating_sub(1);
        }

        let frame = GameFrame {
            k: self.k,
            round_id: self.round as u64,
            p1: PlayerState {
                hp: fighters[0].hp,
                x: fighters[0].x,
                action: fighters[0].action,
                action_raw: fighters[0].action.canonical_id().to_string(),
            },
            p2: PlayerState {
                hp: fighters[1].hp,
                x: fighters[1].x,
                action: fighters[1].action,
                action_raw: fighters[1].action.canonical_id().to_string(),
            },
        };
        self.fighters = Some(fighters);
        Some(frame)
    }
}

impl Iterator for Simulator {
    type Item = GameFrame;

    fn next(&mut self) -> Option<GameFrame> {
        if self.done {
            return None;
        }
        loop {
            if self.fighters.is_none() {
                if self.round >= self.config.rounds {
                    self.done = true;
                    return None;
                }
                self.start_round();
            }
            if let Some(frame) = self.step_round() {
                return Some(frame);
            }
            self.fighters = None;
        }
    }
}

/// Collects a whole simulation into memory. Fine for test-sized configs.
pub fn simulate(config: SimConfig) -> Vec<GameFrame> {
    Simulator::new(config).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::validate_frame;

    #[test]
    fn zero_aggression_means_no_attacks() {
        let frames = simulate(SimConfig {
            aggression: 0.0,
            round_length_frames: 600,
            ..SimConfig::default()
        });
        assert_eq!(frames.len(), 600);
        for f in &frames {
            assert_eq!(f.p1.hp, 400);
            assert_eq!(f.p2.hp, 400);
            for a in [f.p1.action, f.p2.action] {
                assert!(!matches!(
                    a,
                    ActionClass::NormalAttack | ActionClass::SpecialAttack | ActionClass::SuperAttack
                ));
            }
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = simulate(SimConfig {
            rounds: 2,
            round_length_frames: 400,
            ..SimConfig::default()
        });
        let b = simulate(SimConfig {
            rounds: 2,
            round_length_frames: 400,
            ..SimConfig::default()
        });
        assert_eq!(a, b);
    }

    #[test]
    fn frames_validate_and_sequence() {
        let config = SimConfig {
            rounds: 3,
            round_length_frames: 500,
            ..SimConfig::default()
        };
        let mut prev: Option<(u64, u64)> = None;
        for frame in Simulator::new(config) {
            let prev_k = match prev {
                Some((round, k)) if round == frame.round_id => Some(k),
                _ => None,
            };
            validate_frame(&frame, &config.cfg, prev_k).unwrap();
            prev = Some((frame.round_id, frame.k));
        }
    }

    #[test]
    fn hp_is_non_increasing_within_rounds() {
        let frames = simulate(SimConfig {
            rounds: 2,
            aggression: 1.0,
            round_length_frames: 1200,
            ..SimConfig::default()
        });
        let mut last: Option<(u64, u32, u32)> = None;
        for f in &frames {
            if let Some((round, hp1, hp2)) = last {
                if round == f.round_id {
                    assert!(f.p1.hp <= hp1);
                    assert!(f.p2.hp <= hp2);
                }
            }
            last = Some((f.round_id, f.p1.hp, f.p2.hp));
        }
        // with max aggression somebody actually takes damage
        assert!(frames.iter().any(|f| f.p1.hp < 400 || f.p2.hp < 400));
    }

    #[test]
    fn seed_one_defaults_produce_a_big_damage_step() {
        // pinned once by inspection: a super (60 hp >= 0.15 * 400) lands
        let frames = simulate(SimConfig::default());
        let mut found = false;
        for pair in frames.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.round_id == b.round_id
                && (a.p1.hp.saturating_sub(b.p1.hp) >= 60 || a.p2.hp.saturating_sub(b.p2.hp) >= 60)
            {
                found = true;
                break;
            }
        }
        assert!(found, "expected at least one 60hp single-frame drop");
    }
}
