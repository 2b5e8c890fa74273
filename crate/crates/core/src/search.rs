//! Flat Monte Carlo search and UCT-minmax tree search over the game engine,
//! under deterministic playout-count budgets or a wall-clock limit.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::games::{GameState, GoalValue, Move, Role};

/// How much searching a single decision may consume. Playout counts keep
/// runs deterministic; the wall-clock mode trades that for fixed think time.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SearchBudget {
    Playouts(u64),
    WallClockMillis(u64),
}

impl SearchBudget {
    /// Parses `playouts:1000` or `ms:50`.
    pub fn parse(token: &str) -> Result<SearchBudget> {
        let unknown = || Error::UnknownBudget(token.to_string());
        let (mode, amount) = token.split_once(':').ok_or_else(unknown)?;
        let amount: u64 = amount.parse().map_err(|_| unknown())?;
        match mode {
            "playouts" => Ok(SearchBudget::Playouts(amount)),
            "ms" => Ok(SearchBudget::WallClockMillis(amount)),
            _ => Err(unknown()),
        }
    }

    fn allows(&self, used: u64, start: Instant) -> bool {
        match self {
            SearchBudget::Playouts(limit) => used < *limit,
            SearchBudget::WallClockMillis(ms) => start.elapsed() < Duration::from_millis(*ms),
        }
    }
}

impl std::fmt::Display for SearchBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SearchBudget::Playouts(n) => write!(f, "playouts:{n}"),
            SearchBudget::WallClockMillis(ms) => write!(f, "ms:{ms}"),
        }
    }
}

/// Goals of both roles at the terminal state a playout reached.
#[derive(Clone, Copy, Debug)]
pub struct PlayoutResult {
    pub goals: [GoalValue; 2],
}

impl PlayoutResult {
    pub fn goal(&self, role: Role) -> GoalValue {
        self.goals[role.index()]
    }
}

/// A uniformly random legal move. Panics on terminal states.
pub fn random_move(state: &GameState, rng: &mut impl Rng) -> Move {
    let moves = state.legal_moves();
    assert!(!moves.is_empty(), "no legal moves in a terminal state");
    moves[rng.gen_range(0..moves.len())]
}

/// Plays uniformly random moves until the game ends; a terminal input
/// yields its goals directly.
pub fn random_playout(state: &GameState, rng: &mut impl Rng) -> PlayoutResult {
    let mut scratch = state.clone();
    let mut moves = Vec::new();
    playout_from(&mut scratch, &mut moves, rng)
}

/// `random_playout` body over caller-owned scratch buffers, so the search
/// loops can avoid reallocating per playout.
fn playout_from(state: &mut GameState, moves: &mut Vec<Move>, rng: &mut impl Rng) -> PlayoutResult {
    while !state.is_terminal() {
        state.legal_moves_into(moves);
        let mv = moves[rng.gen_range(0..moves.len())];
        state.apply_in_place(mv);
    }
    PlayoutResult {
        goals: state.goals().expect("terminal state has goals"),
    }
}

/// Playout tally of one candidate move in a flat Monte Carlo search.
#[derive(Clone, Copy, Debug)]
pub struct MoveStats {
    pub mv: Move,
    pub playouts: u64,
    pub total_score: f64,
}

impl MoveStats {
    /// Mean score of the move's playouts, when it has any.
    pub fn mean(&self) -> Option<f64> {
        (self.playouts > 0).then(|| self.total_score / self.playouts as f64)
    }
}

/// Outcome of `mcs_search`: the chosen move plus per-move statistics.
#[derive(Clone, Debug)]
pub struct McsReport {
    pub stats: Vec<MoveStats>,
    pub selected: Move,
    pub playouts_used: u64,
}

/// Flat Monte Carlo search: probes the legal moves round-robin, one random
/// playout per probe, and keeps the move with the highest mean goal for the
/// current mover. A single legal move is returned without searching, and the
/// first legal move is the default when nothing scores above 0.
pub fn mcs_search(state: &GameState, budget: &SearchBudget, rng: &mut impl Rng) -> McsReport {
    let moves = state.legal_moves();
    assert!(!moves.is_empty(), "search requires a non-terminal state");
    let mut stats: Vec<MoveStats> = moves
        .iter()
        .map(|&mv| MoveStats {
            mv,
            playouts: 0,
            total_score: 0.0,
        })
        .collect();
    if moves.len() == 1 {
        return McsReport {
            selected: moves[0],
            stats,
            playouts_used: 0,
        };
    }
    let mover = state.to_move();
    let successors: Vec<GameState> = moves
        .iter()
        .map(|&mv| state.apply(mv).expect("legal move applies"))
        .collect();
    let mut scratch = state.clone();
    let mut buffer = Vec::new();
    let start = Instant::now();
    let mut used = 0u64;
    let mut index = 0usize;
    while budget.allows(used, start) {
        scratch.clone_from(&successors[index]);
        let result = playout_from(&mut scratch, &mut buffer, rng);
        stats[index].playouts += 1;
        stats[index].total_score += result.goal(mover) as f64;
        used += 1;
        index = (index + 1) % stats.len();
    }
    let mut selected = 0usize;
    let mut best_mean = 0.0f64;
    for (i, entry) in stats.iter().enumerate() {
        if let Some(mean) = entry.mean() {
            if mean > best_mean {
                best_mean = mean;
                selected = i;
            }
        }
    }
    McsReport {
        selected: stats[selected].mv,
        stats,
        playouts_used: used,
    }
}

/// The move chosen by a flat Monte Carlo search.
pub fn mcs_select(state: &GameState, budget: &SearchBudget, rng: &mut impl Rng) -> Move {
    mcs_search(state, budget, rng).selected
}

/// One node of the search tree: a position, the move that produced it, and
/// its backup statistics.
#[derive(Clone, Debug)]
pub struct MctsNode {
    state: GameState,
    incoming: Option<Move>,
    parent: Option<u32>,
    first_child: u32,
    child_count: u16,
    visits: u64,
    total_value: f64,
}

impl MctsNode {
    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn incoming(&self) -> Option<Move> {
        self.incoming
    }

    pub fn parent(&self) -> Option<u32> {
        self.parent
    }

    /// Ids of the node's children; empty while unexpanded.
    pub fn children(&self) -> std::ops::Range<u32> {
        self.first_child..self.first_child + self.child_count as u32
    }

    pub fn is_leaf(&self) -> bool {
        self.child_count == 0
    }

    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn total_value(&self) -> f64 {
        self.total_value
    }

    /// Mean backed-up value, when the node has been visited.
    pub fn mean_value(&self) -> Option<f64> {
        (self.visits > 0).then(|| self.total_value / self.visits as f64)
    }

    fn fresh(state: GameState, incoming: Option<Move>, parent: Option<u32>) -> MctsNode {
        MctsNode {
            state,
            incoming,
            parent,
            first_child: 0,
            child_count: 0,
            visits: 0,
            total_value: 0.0,
        }
    }
}

/// Arena-backed search tree; node 0 is the root.
#[derive(Clone, Debug)]
pub struct MctsTree {
    nodes: Vec<MctsNode>,
}

impl MctsTree {
    fn new(root_state: GameState) -> MctsTree {
        MctsTree {
            nodes: vec![MctsNode::fresh(root_state, None, None)],
        }
    }

    pub fn root(&self) -> &MctsNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: u32) -> &MctsNode {
        &self.nodes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// UCT child selection with minmax orientation: each child scores
    /// mean value plus the exploration term sqrt(ln(parent visits + 1) /
    /// child visits) when `my_role` is to move at this node, and mean value
    /// minus that term otherwise, so an under-visited child looks promising
    /// to whichever player is choosing. Goals run 0..100 while the
    /// exploration term is sized for rewards in [0,1], so the mean is
    /// normalized before the term is applied. The mover's turn takes the
    /// argmax, the opponent's turn the argmin. Unvisited children are taken
    /// first, in move order, matching the term's infinite-visit limit.
    pub fn uct_minmax(&self, node_id: u32, my_role: Role) -> u32 {
        let node = &self.nodes[node_id as usize];
        let children = node.children();
        debug_assert!(!children.is_empty(), "uct selection needs children");
        for child in children.clone() {
            if self.nodes[child as usize].visits == 0 {
                return child;
            }
        }
        let maximize = node.state.to_move() == my_role;
        let ln_parent = ((node.visits + 1) as f64).ln();
        let mut best = children.start;
        let mut best_score = self.uct_score(best, ln_parent, maximize);
        for child in children.skip(1) {
            let score = self.uct_score(child, ln_parent, maximize);
            if (maximize && score > best_score) || (!maximize && score < best_score) {
                best = child;
                best_score = score;
            }
        }
        best
    }

    fn uct_score(&self, child_id: u32, ln_parent: f64, maximize: bool) -> f64 {
        let child = &self.nodes[child_id as usize];
        let visits = child.visits as f64;
        let mean = child.total_value / visits / 100.0;
        let exploration = (ln_parent / visits).sqrt();
        if maximize {
            mean + exploration
        } else {
            mean - exploration
        }
    }

    /// Creates one child per legal move of the node, in move order.
    fn expand(&mut self, node_id: u32, moves: &mut Vec<Move>) {
        let state = self.nodes[node_id as usize].state.clone();
        state.legal_moves_into(moves);
        let first_child = self.nodes.len() as u32;
        for &mv in moves.iter() {
            let child_state = state.apply(mv).expect("legal move applies");
            self.nodes
                .push(MctsNode::fresh(child_state, Some(mv), Some(node_id)));
        }
        let node = &mut self.nodes[node_id as usize];
        node.first_child = first_child;
        node.child_count = moves.len() as u16;
    }

    #[cfg(test)]
    fn with_root_children(root_state: GameState, children: &[(Move, u64, f64)]) -> MctsTree {
        let mut tree = MctsTree::new(root_state.clone());
        tree.nodes[0].visits = children.iter().map(|(_, v, _)| v).sum();
        tree.nodes[0].first_child = 1;
        tree.nodes[0].child_count = children.len() as u16;
        for &(mv, visits, total_value) in children {
            let mut node = MctsNode::fresh(root_state.apply(mv).unwrap(), Some(mv), Some(0));
            node.visits = visits;
            node.total_value = total_value;
            tree.nodes.push(node);
        }
        tree
    }
}

/// Outcome of `mcts_search`: the chosen move, the final tree, and how many
/// iterations ran.
#[derive(Clone, Debug)]
pub struct MctsReport {
    pub tree: MctsTree,
    pub selected: Move,
    pub iterations: u64,
}

/// UCT-minmax Monte Carlo tree search. Each iteration descends the tree by
/// `uct_minmax`, expands the reached leaf with all its children, descends one
/// more step, plays one random playout, and backs `my_role`'s goal up the
/// visited path. The returned move is the root child with the highest mean.
pub fn mcts_search(
    state: &GameState,
    budget: &SearchBudget,
    my_role: Role,
    rng: &mut impl Rng,
) -> MctsReport {
    let moves = state.legal_moves();
    assert!(!moves.is_empty(), "search requires a non-terminal state");
    let mut tree = MctsTree::new(state.clone());
    if moves.len() == 1 {
        return MctsReport {
            tree,
            selected: moves[0],
            iterations: 0,
        };
    }
    let mut path: Vec<u32> = Vec::new();
    let mut move_buffer: Vec<Move> = Vec::new();
    let mut scratch = state.clone();
    let start = Instant::now();
    let mut iterations = 0u64;
    while budget.allows(iterations, start) {
        path.clear();
        path.push(0);
        let mut current = 0u32;
        while !tree.node(current).is_leaf() {
            current = tree.uct_minmax(current, my_role);
            path.push(current);
        }
        if !tree.node(current).state().is_terminal() {
            tree.expand(current, &mut move_buffer);
            current = tree.uct_minmax(current, my_role);
            path.push(current);
        }
        scratch.clone_from(tree.node(current).state());
        let result = playout_from(&mut scratch, &mut move_buffer, rng);
        let bonus = result.goal(my_role) as f64;
        for &id in &path {
            let node = &mut tree.nodes[id as usize];
            node.visits += 1;
            node.total_value += bonus;
        }
        iterations += 1;
    }
    let mut selected = moves[0];
    let mut best_mean = -1.0f64;
    for child_id in tree.root().children() {
        let child = tree.node(child_id);
        if let Some(mean) = child.mean_value() {
            if mean > best_mean {
                best_mean = mean;
                selected = child.incoming().expect("child has an incoming move");
            }
        }
    }
    MctsReport {
        tree,
        selected,
        iterations,
    }
}

/// The move chosen by a UCT-minmax tree search for `my_role`.
pub fn mcts_select(
    state: &GameState,
    budget: &SearchBudget,
    my_role: Role,
    rng: &mut impl Rng,
) -> Move {
    mcts_search(state, budget, my_role, rng).selected
}
