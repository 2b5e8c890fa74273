//! Tabular Q-learning: per-role Q-tables, the end-of-match backward update,
//! the cosine exploration schedule, and the greedy action selectors with
//! their random and Monte Carlo fallbacks.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::games::{GameSpec, GameState, GoalValue, Move, Role};
use crate::search::{mcs_select, random_move, SearchBudget};

/// Learning rate and discount factor of the value update.
#[derive(Clone, Copy, Debug)]
pub struct LearningParams {
    learning_rate: f64,
    discount_factor: f64,
}

impl LearningParams {
    /// Validates both parameters into [0, 1].
    pub fn new(learning_rate: f64, discount_factor: f64) -> Result<LearningParams> {
        for (name, value) in [("learning rate", learning_rate), ("discount factor", discount_factor)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidParameter(format!(
                    "{name} {value} must be in [0, 1]"
                )));
            }
        }
        Ok(LearningParams {
            learning_rate,
            discount_factor,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn discount_factor(&self) -> f64 {
        self.discount_factor
    }
}

impl Default for LearningParams {
    /// The defaults used across the experiment harness: α=0.1, γ=0.9.
    fn default() -> LearningParams {
        LearningParams {
            learning_rate: 0.1,
            discount_factor: 0.9,
        }
    }
}

/// Exploration rate over match count m: amplitude·cos(mπ/2l) + floor while
/// m ≤ l, and 0 afterwards. A fixed rate is the amplitude-0 special case.
#[derive(Clone, Copy, Debug)]
pub struct EpsilonSchedule {
    amplitude: f64,
    floor: f64,
    learning_matches: u64,
}

impl EpsilonSchedule {
    /// Cosine decay from amplitude+floor down to floor across l matches.
    pub fn cosine(amplitude: f64, floor: f64, learning_matches: u64) -> Result<EpsilonSchedule> {
        if amplitude < 0.0 || floor < 0.0 || amplitude + floor > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon schedule a={amplitude} b={floor} must satisfy a, b >= 0 and a + b <= 1"
            )));
        }
        Ok(EpsilonSchedule {
            amplitude,
            floor,
            learning_matches,
        })
    }

    /// Constant exploration rate for the whole learning phase.
    pub fn fixed(epsilon: f64, learning_matches: u64) -> Result<EpsilonSchedule> {
        EpsilonSchedule::cosine(0.0, epsilon, learning_matches)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn learning_matches(&self) -> u64 {
        self.learning_matches
    }

    /// Exploration rate at match count `m`.
    pub fn epsilon(&self, m: u64) -> f64 {
        if m > self.learning_matches || self.learning_matches == 0 {
            return 0.0;
        }
        let phase = m as f64 * std::f64::consts::PI / (2.0 * self.learning_matches as f64);
        self.amplitude * phase.cos() + self.floor
    }
}

/// State-action values of one role, keyed by canonical state key. Entries
/// exist only for visited pairs; an absent entry means "unlearned" rather
/// than value 0.
#[derive(Clone, Debug, Default)]
pub struct QTable {
    entries: HashMap<String, Vec<(Move, f64)>>,
}

impl QTable {
    pub fn new() -> QTable {
        QTable::default()
    }

    /// Number of stored state-action pairs.
    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct states with stored entries.
    pub fn state_count(&self) -> usize {
        self.entries.len()
    }

    /// Stored value of a state-action pair.
    pub fn value(&self, state_key: &str, mv: Move) -> Option<f64> {
        let row = self.entries.get(state_key)?;
        let at = row.binary_search_by_key(&mv, |(m, _)| *m).ok()?;
        Some(row[at].1)
    }

    /// Inserts or overwrites a state-action value.
    pub fn set(&mut self, state_key: &str, mv: Move, value: f64) {
        *self.slot(state_key, mv) = value;
    }

    /// Mutable access to a state-action value, creating it at 0.
    fn slot(&mut self, state_key: &str, mv: Move) -> &mut f64 {
        if !self.entries.contains_key(state_key) {
            self.entries.insert(state_key.to_owned(), Vec::new());
        }
        let row = self.entries.get_mut(state_key).expect("row just ensured");
        let at = match row.binary_search_by_key(&mv, |(m, _)| *m) {
            Ok(at) => at,
            Err(at) => {
                row.insert(at, (mv, 0.0));
                at
            }
        };
        &mut row[at].1
    }

    /// The stored move with the largest value strictly above 0, lowest move
    /// on ties. `None` when the state is unlearned: no entry exceeds the 0
    /// that the selection loop starts from, so the caller must fall back.
    pub fn lookup_max(&self, state_key: &str) -> Option<(Move, f64)> {
        let row = self.entries.get(state_key)?;
        let mut best: Option<(Move, f64)> = None;
        for &(mv, value) in row {
            if value > 0.0 && best.map_or(true, |(_, b)| value > b) {
                best = Some((mv, value));
            }
        }
        best
    }

    /// Largest stored value for a state, or 0 when none is stored; the
    /// next-state term of the value update.
    pub fn max_stored_value(&self, state_key: &str) -> f64 {
        match self.entries.get(state_key) {
            None => 0.0,
            Some(row) => row.iter().fold(0.0, |acc, &(_, v)| acc.max(v)),
        }
    }

    /// All entries sorted by state key then move, for serialization.
    pub fn sorted_entries(&self) -> Vec<(&str, Move, f64)> {
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort_unstable();
        let mut out = Vec::with_capacity(self.len());
        for key in keys {
            for &(mv, value) in &self.entries[key] {
                out.push((key.as_str(), mv, value));
            }
        }
        out
    }
}

/// One role's decisions within one match: (state key, move) in order, plus
/// the terminal state key and that role's terminal goal. The next-state key
/// of each decision is the state the role faced next, or the terminal key
/// for the last decision.
#[derive(Clone, Debug)]
pub struct MatchRecord {
    decisions: Vec<(String, Move)>,
    terminal_key: String,
    terminal_goal: GoalValue,
}

impl MatchRecord {
    pub fn new(
        decisions: Vec<(String, Move)>,
        terminal_key: String,
        terminal_goal: GoalValue,
    ) -> MatchRecord {
        MatchRecord {
            decisions,
            terminal_key,
            terminal_goal,
        }
    }

    /// Number of recorded decisions.
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// The i-th (state key, move, next state key) triple.
    pub fn triple(&self, i: usize) -> (&str, Move, &str) {
        let (key, mv) = &self.decisions[i];
        let next = match self.decisions.get(i + 1) {
            Some((next_key, _)) => next_key,
            None => &self.terminal_key,
        };
        (key, *mv, next)
    }

    pub fn terminal_key(&self) -> &str {
        &self.terminal_key
    }

    pub fn terminal_goal(&self) -> GoalValue {
        self.terminal_goal
    }
}

/// Applies Q(s,a) ← (1−α)Q(s,a) + α(R + γ·maxₐ′Q(s′,a′)) to every recorded
/// decision, from the terminal backwards. The reward is the terminal goal on
/// the final decision and 0 elsewhere; missing values read as 0.
pub fn q_backward_update(table: &mut QTable, record: &MatchRecord, params: &LearningParams) {
    let alpha = params.learning_rate();
    let gamma = params.discount_factor();
    for i in (0..record.len()).rev() {
        let (state_key, mv, next_key) = record.triple(i);
        let reward = if i + 1 == record.len() {
            record.terminal_goal() as f64
        } else {
            0.0
        };
        let max_next = table.max_stored_value(next_key);
        let slot = table.slot(state_key, mv);
        *slot = (1.0 - alpha) * *slot + alpha * (reward + gamma * max_next);
    }
}

/// ε-greedy selection over the mover's table: explore uniformly with
/// probability `epsilon`, otherwise play the best stored move, falling back
/// to a uniformly random move on unlearned states.
pub fn qplayer_select(
    tables: &[QTable; 2],
    state: &GameState,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Move {
    let num: f64 = rng.gen();
    if num < epsilon {
        return random_move(state, rng);
    }
    let key = state.canonical_key();
    match tables[state.to_move().index()].lookup_max(&key) {
        Some((mv, _)) => mv,
        None => random_move(state, rng),
    }
}

/// Like `qplayer_select`, but unlearned states fall back to a Monte Carlo
/// search under `budget` instead of a random move.
pub fn qmplayer_select(
    tables: &[QTable; 2],
    state: &GameState,
    epsilon: f64,
    budget: &SearchBudget,
    rng: &mut impl Rng,
) -> Move {
    let num: f64 = rng.gen();
    if num < epsilon {
        return random_move(state, rng);
    }
    let key = state.canonical_key();
    match tables[state.to_move().index()].lookup_max(&key) {
        Some((mv, _)) => mv,
        None => mcs_select(state, budget, rng),
    }
}

/// Trains a single decision maker as role 0 against a fixed opponent policy:
/// greedy selection with random fallback, no exploration phase, and the same
/// end-of-match backward update.
pub fn single_player_qlearning<R: Rng>(
    spec: &GameSpec,
    params: &LearningParams,
    matches: u64,
    mut opponent: impl FnMut(&GameState, &mut R) -> Move,
    rng: &mut R,
) -> QTable {
    let mut table = QTable::new();
    for _ in 0..matches {
        let mut state = spec.initial_state();
        let mut decisions: Vec<(String, Move)> = Vec::new();
        while !state.is_terminal() {
            let mv = if state.to_move() == Role::First {
                let key = state.canonical_key();
                let chosen = match table.lookup_max(&key) {
                    Some((mv, _)) => mv,
                    None => random_move(&state, rng),
                };
                decisions.push((key, chosen));
                chosen
            } else {
                opponent(&state, rng)
            };
            state = state.apply(mv).expect("policy returned a legal move");
        }
        let record = MatchRecord::new(
            decisions,
            state.canonical_key(),
            state.goal(Role::First).expect("terminal state"),
        );
        q_backward_update(&mut table, &record, params);
    }
    table
}
