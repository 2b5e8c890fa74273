//! Brute-force ground truth: exact minimax values over the full game tree
//! and reachable-state enumeration, for validating the players against
//! solved positions.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::games::{GameState, GoalValue, Move, Role};

/// Hard ceiling on explored states before giving up.
pub const STATE_CAP: usize = 10_000_000;

/// Memoized minimax solver for one game. Values are goal pairs under
/// perfect play by both roles.
#[derive(Debug, Default)]
pub struct MinimaxOracle {
    cache: HashMap<u128, [GoalValue; 2]>,
}

impl MinimaxOracle {
    pub fn new() -> MinimaxOracle {
        MinimaxOracle::default()
    }

    /// Number of positions solved so far.
    pub fn explored(&self) -> usize {
        self.cache.len()
    }

    /// Both roles' goals under perfect play from `state`.
    pub fn value(&mut self, state: &GameState) -> Result<[GoalValue; 2]> {
        let code = encode(state);
        if let Some(value) = self.cache.get(&code) {
            return Ok(*value);
        }
        if self.cache.len() >= STATE_CAP {
            return Err(Error::StateSpaceTooLarge(STATE_CAP));
        }
        let value = if state.is_terminal() {
            state.goals().expect("terminal state has goals")
        } else {
            let mover = state.to_move().index();
            let mut best: Option<[GoalValue; 2]> = None;
            for mv in state.legal_moves() {
                let child = state.apply(mv).expect("legal move applies");
                let child_value = self.value(&child)?;
                if best.map_or(true, |b| child_value[mover] > b[mover]) {
                    best = Some(child_value);
                }
                if child_value[mover] == 100 {
                    break;
                }
            }
            best.expect("non-terminal state has moves")
        };
        self.cache.insert(code, value);
        Ok(value)
    }

    /// Perfect-play value of each legal move, in move order.
    pub fn move_values(&mut self, state: &GameState) -> Result<Vec<(Move, [GoalValue; 2])>> {
        let mut values = Vec::new();
        for mv in state.legal_moves() {
            let child = state.apply(mv).expect("legal move applies");
            values.push((mv, self.value(&child)?));
        }
        Ok(values)
    }

    /// The lowest-indexed move achieving the position's minimax value.
    pub fn optimal_move(&mut self, state: &GameState) -> Result<Move> {
        let mover = state.to_move().index();
        let values = self.move_values(state)?;
        let best = values
            .iter()
            .max_by(|a, b| a.1[mover].cmp(&b.1[mover]).then(b.0.cmp(&a.0)))
            .expect("non-terminal state has moves");
        Ok(best.0)
    }
}

/// Counts the states reachable from the initial position, halting play at
/// terminal states. Errors once the count exceeds `STATE_CAP`.
pub fn enumerate_states(state: &GameState) -> Result<usize> {
    let mut visited = HashSet::new();
    visited.insert(encode(state));
    explore(state, &mut visited)?;
    Ok(visited.len())
}

fn explore(state: &GameState, visited: &mut HashSet<u128>) -> Result<()> {
    if state.is_terminal() {
        return Ok(());
    }
    for mv in state.legal_moves() {
        let child = state.apply(mv).expect("legal move applies");
        if visited.insert(encode(&child)) {
            if visited.len() > STATE_CAP {
                return Err(Error::StateSpaceTooLarge(STATE_CAP));
            }
            explore(&child, visited)?;
        }
    }
    Ok(())
}

/// Compact position identity: base-3 cell contents plus the mover bit.
/// Independent of `canonical_key`, so the two can cross-check each other.
fn encode(state: &GameState) -> u128 {
    let mut code: u128 = match state.to_move() {
        Role::First => 0,
        Role::Second => 1,
    };
    for cell in state.cells() {
        code = code * 3
            + match cell {
                None => 0,
                Some(Role::First) => 1,
                Some(Role::Second) => 2,
            };
    }
    code
}
