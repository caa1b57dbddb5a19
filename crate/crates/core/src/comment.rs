//! Bullet-comment generation: trigger predicates over game state, the
//! template/lexicon bank, slot filling, and rate limiting.
//!
//! Situational comments come from pattern-matching frames against eight
//! trigger predicates; highlight comments pair a template with a random
//! positive-emotion word whenever the detector fires. Template selection and
//! «EMO» draws run off one seeded generator, so a fixed (stream, bank, seed)
//! always produces the same text.

use std::collections::HashMap;
use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cues::{CueId, CueVector};
use crate::highlight::Onset;
use crate::state::{ActionClass, GameFrame, MatchConfig};

/// The eight comment trigger predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerId {
    RoundStart,
    BigDamage,
    CloseCombat,
    SpecialMove,
    SuperMove,
    LowHealth,
    RoundEnd,
    HighlightOnset,
}

impl TriggerId {
    pub const ALL: [TriggerId; 8] = [
        TriggerId::RoundStart,
        TriggerId::BigDamage,
        TriggerId::CloseCombat,
        TriggerId::SpecialMove,
        TriggerId::SuperMove,
        TriggerId::LowHealth,
        TriggerId::RoundEnd,
        TriggerId::HighlightOnset,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TriggerId::RoundStart => "round_start",
            TriggerId::BigDamage => "big_damage",
            TriggerId::CloseCombat => "close_combat",
            TriggerId::SpecialMove => "special_move",
            TriggerId::SuperMove => "super_move",
            TriggerId::LowHealth => "low_health",
            TriggerId::RoundEnd => "round_end",
            TriggerId::HighlightOnset => "highlight_onset",
        }
    }

    pub fn parse(s: &str) -> Option<TriggerId> {
        TriggerId::ALL.into_iter().find(|t| t.as_str() == s)
    }

    fn as_index(self) -> usize {
        TriggerId::ALL.iter().position(|t| *t == self).unwrap()
    }
}

/// Numeric thresholds for the situational triggers, plus the limiter knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerParams {
    /// BigDamage fires when an opponent loses at least this HP fraction in
    /// one frame step.
    pub big_damage: f64,
    /// CloseCombat fires when the players are within this fraction of the
    /// stage width (distance cue >= 1 - close_combat).
    pub close_combat: f64,
    /// LowHealth fires when a player's HP crosses below this fraction.
    pub low_health: f64,
    /// Minimum frames between emitted comments of the same trigger.
    pub trigger_cooldown: u64,
    /// The same exact text is not repeated within this many frames.
    pub duplicate_window: u64,
}

impl Default for TriggerParams {
    fn default() -> Self {
        TriggerParams {
            big_damage: 0.15,
            close_combat: 0.1,
            low_health: 0.2,
            trigger_cooldown: 300,
            duplicate_window: 600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentKind {
    Situational,
    Highlight,
}

impl CommentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommentKind::Situational => "situational",
            CommentKind::Highlight => "highlight",
        }
    }

    pub fn parse(s: &str) -> Option<CommentKind> {
        match s {
            "situational" => Some(CommentKind::Situational),
            "highlight" => Some(CommentKind::Highlight),
            _ => None,
        }
    }
}

const SLOTS: [&str; 5] = ["P1", "P2", "ACTOR", "MOVE", "EMO"];

/// One comment template. Slots are written `«P1»`, `«P2»`, `«ACTOR»`,
/// `«MOVE»`, `«EMO»`; only highlight templates may use «EMO».
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub kind: CommentKind,
    pub trigger: TriggerId,
    pub text: String,
}

/// Loaded templates, emotion lexicon and player display names.
#[derive(Debug, Clone, PartialEq)]
pub struct CommentBank {
    templates: Vec<Template>,
    emotions: Vec<String>,
    player_names: [String; 2],
    by_trigger: [Vec<usize>; 8],
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BankError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no template for trigger {0}")]
    MissingTrigger(&'static str),
    #[error("emotion lexicon is empty")]
    EmptyLexicon,
}

/// The bank shipped with the binary; also what `--bank` defaults to.
pub const DEFAULT_BANK: &str = include_str!("default_bank.txt");

impl CommentBank {
    /// Parses the line-oriented bank format:
    /// `kind<TAB>trigger<TAB>template`, `lexicon<TAB>word`,
    /// `player<TAB>1|2<TAB>name`; `#` starts a comment line.
    pub fn load(source: &str) -> Result<CommentBank, BankError> {
        let mut templates: Vec<Template> = Vec::new();
        let mut emotions: Vec<String> = Vec::new();
        let mut player_names = ["P1".to_string(), "P2".to_string()];

        for (idx, raw_line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let tag = fields.next().unwrap_or("");
            match tag {
                "situational" | "highlight" => {
                    let kind = CommentKind::parse(tag).unwrap();
                    let trigger_s = fields.next().ok_or_else(|| BankError::Parse {
                        line: line_no,
                        msg: "missing trigger field".to_string(),
                    })?;
                    let trigger = TriggerId::parse(trigger_s).ok_or_else(|| BankError::Parse {
                        line: line_no,
                        msg: format!("unknown trigger {trigger_s:?}"),
                    })?;
                    let text = fields.next().ok_or_else(|| BankError::Parse {
                        line: line_no,
                        msg: "missing template text".to_string(),
                    })?;
                    if fields.next().is_some() {
                        return Err(BankError::Parse {
                            line: line_no,
                            msg: "too many fields".to_string(),
                        });
                    }
                    validate_slots(text, kind).map_err(|msg| BankError::Parse { line: line_no, msg })?;
                    if (trigger == TriggerId::HighlightOnset) != (kind == CommentKind::Highlight) {
                        return Err(BankError::Parse {
                            line: line_no,
                            msg: "highlight kind goes with the highlight_onset trigger and vice versa"
                                .to_string(),
                        });
                    }
                    let t = Template {
                        kind,
                        trigger,
                        text: text.to_string(),
                    };
                    if !templates.contains(&t) {
                        templates.push(t);
                    }
                }
                "lexicon" => {
                    let word = fields.next().ok_or_else(|| BankError::Parse {
                        line: line_no,
                        msg: "missing lexicon word".to_string(),
                    })?;
                    if word.is_empty() || word.contains(['«', '»']) {
                        return Err(BankError::Parse {
                            line: line_no,
                            msg: "lexicon word must be non-empty plain text".to_string(),
                        });
                    }
                    if !emotions.iter().any(|w| w == word) {
                        emotions.push(word.to_string());
                    }
                }
                "player" => {
                    let which = fields.next().ok_or_else(|| BankError::Parse {
                        line: line_no,
                        msg: "missing player number".to_string(),
                    })?;
                    let name = fields.next().ok_or_else(|| BankError::Parse {
                        line: line_no,
                        msg: "missing player name".to_string(),
                    })?;
                    let slot = match which {
                        "1" => 0,
                        "2" => 1,
                        _ => {
                            return Err(BankError::Parse {
                                line: line_no,
                                msg: format!("player must be 1 or 2, got {which:?}"),
                            })
                        }
                    };
                    player_names[slot] = name.to_string();
                }
                other => {
                    return Err(BankError::Parse {
                        line: line_no,
                        msg: format!("unknown record tag {other:?}"),
                    });
                }
            }
        }

        for trigger in TriggerId::ALL {
            if !templates.iter().any(|t| t.trigger == trigger) {
                return Err(BankError::MissingTrigger(trigger.as_str()));
            }
        }
        if emotions.is_empty() {
            return Err(BankError::EmptyLexicon);
        }

        let mut by_trigger: [Vec<usize>; 8] = Default::default();
        for (i, t) in templates.iter().enumerate() {
            by_trigger[t.trigger.as_index()].push(i);
        }
        Ok(CommentBank {
            templates,
            emotions,
            player_names,
            by_trigger,
        })
    }

    pub fn default_bank() -> CommentBank {
        CommentBank::load(DEFAULT_BANK).expect("built-in bank is valid")
    }

    /// Canonical serialization: templates in load order, then lexicon, then
    /// player names. `write(load(x)) == x` for files already in this shape.
    pub fn write(&self) -> String {
        let mut out = String::new();
        for t in &self.templates {
            out.push_str(t.kind.as_str());
            out.push('\t');
            out.push_str(t.trigger.as_str());
            out.push('\t');
            out.push_str(&t.text);
            out.push('\n');
        }
        for word in &self.emotions {
            out.push_str("lexicon\t");
            out.push_str(word);
            out.push('\n');
        }
        for (i, name) in self.player_names.iter().enumerate() {
            out.push_str("player\t");
            out.push_str(if i == 0 { "1" } else { "2" });
            out.push('\t');
            out.push_str(name);
            out.push('\n');
        }
        out
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn emotions(&self) -> &[String] {
        &self.emotions
    }

    pub fn player_name(&self, player: u8) -> &str {
        &self.player_names[usize::from(player == 2)]
    }

    pub fn set_player_names(&mut self, p1: impl Into<String>, p2: impl Into<String>) {
        self.player_names = [p1.into(), p2.into()];
    }

    fn templates_for(&self, trigger: TriggerId) -> &[usize] {
        &self.by_trigger[trigger.as_index()]
    }
}

/// Rejects stray guillemets, unknown slot names, and «EMO» outside highlight
/// templates.
fn validate_slots(text: &str, kind: CommentKind) -> Result<(), String> {
    let mut rest = text;
    while let Some(start) = rest.find('«') {
        let after = &rest[start + '«'.len_utf8()..];
        let end = after
            .find('»')
            .ok_or_else(|| "unterminated slot marker".to_string())?;
        let slot = &after[..end];
        if !SLOTS.contains(&slot) {
            return Err(format!("unknown slot «{slot}»"));
        }
        if slot == "EMO" && kind != CommentKind::Highlight {
            return Err("«EMO» is only allowed in highlight templates".to_string());
        }
        rest = &after[end + '»'.len_utf8()..];
    }
    if rest.contains('»') || text.split('«').next().unwrap_or("").contains('»') {
        return Err("stray '»' outside a slot marker".to_string());
    }
    Ok(())
}

/// One emitted bullet comment.
#[derive(Debug, Clone, PartialEq)]
pub struct CommentEvent {
    /// Emission time on the stream clock, milliseconds.
    pub t_ms: u64,
    /// Frame index within the round.
    pub k: u64,
    pub round_id: u64,
    pub kind: CommentKind,
    pub trigger: TriggerId,
    /// Fully substituted text: no slot markers remain.
    pub text: String,
    /// H(k) at emission.
    pub score: f64,
    /// Display row, assigned round-robin.
    pub lane: u32,
}

/// A trigger that fired at one frame, with whatever context its templates
/// may need.
#[derive(Debug, Clone, PartialEq)]
pub struct Firing {
    pub trigger: TriggerId,
    /// The player the comment is about, if the trigger singles one out.
    pub actor: Option<u8>,
    /// Move label for «MOVE», for the action triggers.
    pub move_name: Option<String>,
}

/// HP and action classes from the previous frame, needed by the
/// transition-style predicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSummary {
    pub p1_hp: u32,
    pub p2_hp: u32,
    pub p1_action: ActionClass,
    pub p2_action: ActionClass,
}

impl FrameSummary {
    pub fn of(frame: &GameFrame) -> FrameSummary {
        FrameSummary {
            p1_hp: frame.p1.hp,
            p2_hp: frame.p2.hp,
            p1_action: frame.p1.action,
            p2_action: frame.p2.action,
        }
    }

    fn hp(&self, player: u8) -> u32 {
        if player == 1 {
            self.p1_hp
        } else {
            self.p2_hp
        }
    }

    fn action(&self, player: u8) -> ActionClass {
        if player == 1 {
            self.p1_action
        } else {
            self.p2_action
        }
    }
}

fn player_state<'f>(frame: &'f GameFrame, player: u8) -> &'f crate::state::PlayerState {
    if player == 1 {
        &frame.p1
    } else {
        &frame.p2
    }
}

/// Evaluates the situational trigger predicates for one frame.
///
/// `prev` is the previous frame's summary within the same round, or `None`
/// at the round's first frame. Results come back in a fixed order (trigger
/// order, P1 before P2) so downstream emission is deterministic.
pub fn match_triggers(
    frame: &GameFrame,
    cues: &CueVector,
    prev: Option<&FrameSummary>,
    cfg: &MatchConfig,
    params: &TriggerParams,
) -> Vec<Firing> {
    let mut fired = Vec::new();

    if frame.k == 1 {
        fired.push(Firing {
            trigger: TriggerId::RoundStart,
            actor: None,
            move_name: None,
        });
    }

    if let Some(prev) = prev {
        // BigDamage: opponent HP dropped by >= big_damage * max_hp this frame
        let threshold = params.big_damage * cfg.max_hp as f64;
        for player in [1u8, 2u8] {
            let opponent = 3 - player;
            let before = prev.hp(opponent);
            let now = player_state(frame, opponent).hp;
            if before > now && (before - now) as f64 >= threshold {
                fired.push(Firing {
                    trigger: TriggerId::BigDamage,
                    actor: Some(player),
                    move_name: None,
                });
            }
        }
    }

    if cues.get(CueId::P1Distance) >= 1.0 - params.close_combat {
        fired.push(Firing {
            trigger: TriggerId::CloseCombat,
            actor: None,
            move_name: None,
        });
    }

    for (trigger, class) in [
        (TriggerId::SpecialMove, ActionClass::SpecialAttack),
        (TriggerId::SuperMove, ActionClass::SuperAttack),
    ] {
        for player in [1u8, 2u8] {
            let state = player_state(frame, player);
            let was = prev.map_or(ActionClass::Idle, |p| p.action(player));
            if state.action == class && was != class {
                fired.push(Firing {
                    trigger,
                    actor: Some(player),
                    move_name: Some(move_label(state)),
                });
            }
        }
    }

    let low = params.low_health * cfg.max_hp as f64;
    for player in [1u8, 2u8] {
        let now = player_state(frame, player).hp as f64;
        let before = prev.map_or(cfg.max_hp as f64, |p| p.hp(player) as f64);
        if before >= low && now < low {
            fired.push(Firing {
                trigger: TriggerId::LowHealth,
                actor: Some(player),
                move_name: None,
            });
        }
    }

    let dead_now = frame.p1.hp == 0 || frame.p2.hp == 0;
    let dead_before = prev.is_some_and(|p| p.p1_hp == 0 || p.p2_hp == 0);
    if dead_now && !dead_before {
        let actor = match (frame.p1.hp, frame.p2.hp) {
            (0, 0) => None, // double KO, no single winner
            (0, _) => Some(2),
            (_, 0) => Some(1),
            _ => unreachable!(),
        };
        fired.push(Firing {
            trigger: TriggerId::RoundEnd,
            actor,
            move_name: None,
        });
    }

    fired
}

/// Prefers the raw id when it looks like a real move name, otherwise the
/// class label.
fn move_label(state: &crate::state::PlayerState) -> String {
    if ActionClass::parse(&state.action_raw).is_some() {
        state.action.display_name().to_string()
    } else {
        state.action_raw.clone()
    }
}

/// Everything `fill_template` can substitute from.
#[derive(Debug, Clone, Copy)]
pub struct FillContext<'a> {
    pub bank: &'a CommentBank,
    pub actor: Option<u8>,
    pub move_name: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("template needs «{0}» but the context does not provide it")]
pub struct UnresolvableSlot(pub String);

/// Substitutes every slot marker. Deterministic for a fixed rng state; each
/// «EMO» occurrence draws one lexicon word.
pub fn fill_template<R: Rng>(
    template: &Template,
    ctx: &FillContext,
    rng: &mut R,
) -> Result<String, UnresolvableSlot> {
    let mut out = String::with_capacity(template.text.len());
    let mut rest = template.text.as_str();
    while let Some(start) = rest.find('«') {
        out.push_str(&rest[..start]);
        let after = &rest[start + '«'.len_utf8()..];
        let end = after.find('»').expect("validated at load");
        let slot = &after[..end];
        match slot {
            "P1" => out.push_str(ctx.bank.player_name(1)),
            "P2" => out.push_str(ctx.bank.player_name(2)),
            "ACTOR" => match ctx.actor {
                Some(p) => out.push_str(ctx.bank.player_name(p)),
                None => return Err(UnresolvableSlot("ACTOR".to_string())),
            },
            "MOVE" => match ctx.move_name {
                Some(name) => out.push_str(name),
                None => return Err(UnresolvableSlot("MOVE".to_string())),
            },
            "EMO" => {
                let words = ctx.bank.emotions();
                out.push_str(&words[rng.gen_range(0..words.len())]);
            }
            other => return Err(UnresolvableSlot(other.to_string())),
        }
        rest = &after[end + '»'.len_utf8()..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Counters for silently suppressed comments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SuppressionStats {
    pub cooldown: u64,
    pub duplicate: u64,
    pub unfillable: u64,
}

/// Stateful generator: applies per-trigger cooldowns, the duplicate-text
/// window, lane rotation and template selection.
///
/// Limiter state runs on the global stream frame counter and deliberately
/// survives round boundaries; only the scoring engine resets per round.
#[derive(Debug, Clone)]
pub struct CommentEngine<R: Rng> {
    bank: CommentBank,
    params: TriggerParams,
    lanes: u32,
    rng: R,
    last_emit: HashMap<TriggerId, u64>,
    recent_texts: VecDeque<(String, u64)>,
    lane_cursor: u32,
    stats: SuppressionStats,
}

impl<R: Rng> CommentEngine<R> {
    pub fn new(bank: CommentBank, params: TriggerParams, lanes: u32, rng: R) -> Self {
        CommentEngine {
            bank,
            params,
            lanes: lanes.max(1),
            rng,
            last_emit: HashMap::new(),
            recent_texts: VecDeque::new(),
            lane_cursor: 0,
            stats: SuppressionStats::default(),
        }
    }

    pub fn bank(&self) -> &CommentBank {
        &self.bank
    }

    pub fn stats(&self) -> SuppressionStats {
        self.stats
    }

    /// Emits at most one comment per fired trigger plus exactly one highlight
    /// comment per detector onset.
    ///
    /// `global_k` is the stream-wide frame counter the limiter runs on; `k`
    /// and `round_id` identify the frame for the event payload. Highlight
    /// onsets bypass the per-trigger cooldown; they re-draw on duplicate text
    /// and, if the bank is too small to offer an alternative, the
    /// one-comment-per-onset contract wins over the duplicate rule.
    pub fn generate(
        &mut self,
        fired: &[Firing],
        onset: Option<Onset>,
        frame_k: u64,
        round_id: u64,
        global_k: u64,
        t_ms: u64,
        score: f64,
    ) -> Vec<CommentEvent> {
        let mut out = Vec::new();
        self.prune_texts(global_k);

        if let Some(onset) = onset {
            let event = self.emit_highlight(onset, frame_k, round_id, global_k, t_ms);
            out.push(event);
        }

        for firing in fired {
            if let Some(&last) = self.last_emit.get(&firing.trigger) {
                if global_k.saturating_sub(last) < self.params.trigger_cooldown {
                    self.stats.cooldown += 1;
                    continue;
                }
            }
            let Some(text) = self.fill_for(firing) else {
                self.stats.unfillable += 1;
                continue;
            };
            if self.is_duplicate(&text) {
                self.stats.duplicate += 1;
                continue;
            }
            self.last_emit.insert(firing.trigger, global_k);
            self.recent_texts.push_back((text.clone(), global_k));
            out.push(CommentEvent {
                t_ms,
                k: frame_k,
                round_id,
                kind: CommentKind::Situational,
                trigger: firing.trigger,
                text,
                score,
                lane: self.next_lane(),
            });
        }
        out
    }

    fn emit_highlight(
        &mut self,
        onset: Onset,
        frame_k: u64,
        round_id: u64,
        global_k: u64,
        t_ms: u64,
    ) -> CommentEvent {
        let indices = self.bank.templates_for(TriggerId::HighlightOnset).to_vec();
        let ctx = FillContext {
            bank: &self.bank,
            actor: None,
            move_name: None,
        };
        let mut text = String::new();
        for _attempt in 0..32 {
            let idx = indices[self.rng.gen_range(0..indices.len())];
            let template = &self.bank.templates()[idx];
            text = fill_template(template, &ctx, &mut self.rng).expect("highlight slots are self-contained");
            if !self.is_duplicate(&text) {
                break;
            }
        }
        self.recent_texts.push_back((text.clone(), global_k));
        CommentEvent {
            t_ms,
            k: frame_k,
            round_id,
            kind: CommentKind::Highlight,
            trigger: TriggerId::HighlightOnset,
            text,
            score: onset.h,
            lane: self.next_lane(),
        }
    }

    fn fill_for(&mut self, firing: &Firing) -> Option<String> {
        let indices = self.bank.templates_for(firing.trigger).to_vec();
        if indices.is_empty() {
            return None;
        }
        // start from a random template, walk the rest in order so an
        // unfillable pick falls through to a usable one
        let start = self.rng.gen_range(0..indices.len());
        for step in 0..indices.len() {
            let idx = indices[(start + step) % indices.len()];
            let template = &self.bank.templates()[idx];
            let ctx = FillContext {
                bank: &self.bank,
                actor: firing.actor,
                move_name: firing.move_name.as_deref(),
            };
            if let Ok(text) = fill_template(template, &ctx, &mut self.rng) {
                return Some(text);
            }
        }
        None
    }

    fn is_duplicate(&self, text: &str) -> bool {
        self.recent_texts.iter().any(|(t, _)| t == text)
    }

    fn prune_texts(&mut self, global_k: u64) {
        let window = self.params.duplicate_window;
        while let Some((_, at)) = self.recent_texts.front() {
            if global_k.saturating_sub(*at) >= window {
                self.recent_texts.pop_front();
            } else {
                break;
            }
        }
    }

    fn next_lane(&mut self) -> u32 {
        let lane = self.lane_cursor;
        self.lane_cursor = (self.lane_cursor + 1) % self.lanes;
        lane
    }
}
