//! Rule engines for parameterized Tic-Tac-Toe, Connect Four, and Hex behind
//! one uniform interface: legal-move generation, transitions, terminal
//! detection, and goal values in the 100/50/0 convention.

mod win;

use crate::error::{Error, Result};

/// Terminal score of a role: 100 win, 50 draw, 0 loss.
pub type GoalValue = u8;

/// One of the two players. `First` moves first in every match.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Role {
    First,
    Second,
}

impl Role {
    /// Index of the role, 0 for the first mover.
    pub fn index(self) -> usize {
        match self {
            Role::First => 0,
            Role::Second => 1,
        }
    }

    /// The other role.
    pub fn opponent(self) -> Role {
        match self {
            Role::First => Role::Second,
            Role::Second => Role::First,
        }
    }

    /// Role with the given index, if it is 0 or 1.
    pub fn from_index(index: usize) -> Option<Role> {
        match index {
            0 => Some(Role::First),
            1 => Some(Role::Second),
            _ => None,
        }
    }

    fn mark(self) -> char {
        match self {
            Role::First => 'x',
            Role::Second => 'o',
        }
    }
}

/// Which rule set a `GameSpec` uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GameKind {
    TicTacToe,
    ConnectFour,
    Hex,
}

/// A fully parameterized game: kind, board dimensions, and win-line length.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct GameSpec {
    kind: GameKind,
    width: u8,
    height: u8,
    k_in_row: u8,
}

/// Largest board edge the engine accepts; keeps cell counts within 64.
const MAX_DIMENSION: u8 = 8;

impl GameSpec {
    /// Tic-Tac-Toe on an n-by-n board, winning with k aligned marks.
    pub fn tictactoe(n: u8, k: u8) -> Result<GameSpec> {
        check_dimension(n)?;
        if k < 1 || k > n {
            return Err(Error::InvalidGame(format!(
                "tictactoe win length {k} must be in 1..={n}"
            )));
        }
        Ok(GameSpec {
            kind: GameKind::TicTacToe,
            width: n,
            height: n,
            k_in_row: k,
        })
    }

    /// Connect Four on a width-by-height board, winning with k aligned stones.
    pub fn connect_four(width: u8, height: u8, k: u8) -> Result<GameSpec> {
        check_dimension(width)?;
        check_dimension(height)?;
        let longest = width.max(height);
        if k < 1 || k > longest {
            return Err(Error::InvalidGame(format!(
                "connectfour win length {k} must be in 1..={longest}"
            )));
        }
        Ok(GameSpec {
            kind: GameKind::ConnectFour,
            width,
            height,
            k_in_row: k,
        })
    }

    /// Hex on an n-by-n rhombus. Role 0 connects top to bottom, role 1 left
    /// to right.
    pub fn hex(n: u8) -> Result<GameSpec> {
        check_dimension(n)?;
        Ok(GameSpec {
            kind: GameKind::Hex,
            width: n,
            height: n,
            k_in_row: 0,
        })
    }

    /// Parses a text token such as `tictactoe:3x3:3`, `connectfour:4x4:4`,
    /// or `hex:3x3`.
    pub fn parse(token: &str) -> Result<GameSpec> {
        let unknown = || Error::UnknownGame(token.to_string());
        let mut parts = token.split(':');
        let kind = parts.next().ok_or_else(unknown)?;
        let dims = parts.next().ok_or_else(unknown)?;
        let (width, height) = dims.split_once('x').ok_or_else(unknown)?;
        let width: u8 = width.parse().map_err(|_| unknown())?;
        let height: u8 = height.parse().map_err(|_| unknown())?;
        let spec = match kind {
            "tictactoe" | "connectfour" => {
                let k = parts.next().ok_or_else(unknown)?;
                let k: u8 = k.parse().map_err(|_| unknown())?;
                if kind == "tictactoe" {
                    if width != height {
                        return Err(Error::InvalidGame(format!(
                            "tictactoe board must be square, got {width}x{height}"
                        )));
                    }
                    GameSpec::tictactoe(width, k)?
                } else {
                    GameSpec::connect_four(width, height, k)?
                }
            }
            "hex" => {
                if width != height {
                    return Err(Error::InvalidGame(format!(
                        "hex board must be square, got {width}x{height}"
                    )));
                }
                GameSpec::hex(width)?
            }
            _ => return Err(unknown()),
        };
        if parts.next().is_some() {
            return Err(unknown());
        }
        Ok(spec)
    }

    /// Text token for this spec; `parse` inverts it.
    pub fn token(&self) -> String {
        match self.kind {
            GameKind::TicTacToe => {
                format!("tictactoe:{}x{}:{}", self.width, self.height, self.k_in_row)
            }
            GameKind::ConnectFour => {
                format!("connectfour:{}x{}:{}", self.width, self.height, self.k_in_row)
            }
            GameKind::Hex => format!("hex:{}x{}", self.width, self.height),
        }
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn height(&self) -> u8 {
        self.height
    }

    /// Win-line length for Tic-Tac-Toe and Connect Four; 0 for Hex.
    pub fn k_in_row(&self) -> u8 {
        self.k_in_row
    }

    /// Number of board cells.
    pub fn cell_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Number of distinct moves a state can offer.
    pub fn move_range(&self) -> u16 {
        match self.kind {
            GameKind::ConnectFour => self.width as u16,
            _ => self.cell_count() as u16,
        }
    }

    /// The empty starting position with role 0 to move.
    pub fn initial_state(&self) -> GameState {
        GameState {
            spec: *self,
            cells: vec![None; self.cell_count()],
            to_move: Role::First,
            move_count: 0,
            status: Status::Ongoing,
        }
    }
}

fn check_dimension(d: u8) -> Result<()> {
    if (2..=MAX_DIMENSION).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidGame(format!(
            "board dimension {d} must be in 2..={MAX_DIMENSION}"
        )))
    }
}

/// A move: flat cell index for Tic-Tac-Toe and Hex, column index for
/// Connect Four.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Move(pub u16);

impl std::fmt::Display for Move {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Status {
    Ongoing,
    Won(Role),
    Drawn,
}

/// An immutable board position. `apply` returns the successor state; the
/// terminal status is maintained incrementally as moves are applied.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GameState {
    spec: GameSpec,
    cells: Vec<Option<Role>>,
    to_move: Role,
    move_count: u16,
    status: Status,
}

impl GameState {
    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    /// Board contents in row-major order, row 0 at the top.
    pub fn cells(&self) -> &[Option<Role>] {
        &self.cells
    }

    pub fn to_move(&self) -> Role {
        self.to_move
    }

    pub fn move_count(&self) -> u16 {
        self.move_count
    }

    pub fn is_terminal(&self) -> bool {
        self.status != Status::Ongoing
    }

    /// The winning role, if any.
    pub fn winner(&self) -> Option<Role> {
        match self.status {
            Status::Won(role) => Some(role),
            _ => None,
        }
    }

    /// Terminal score for `role`. Errors when the state is not terminal.
    pub fn goal(&self, role: Role) -> Result<GoalValue> {
        match self.status {
            Status::Ongoing => Err(Error::NonTerminal(self.canonical_key())),
            Status::Won(winner) => Ok(if winner == role { 100 } else { 0 }),
            Status::Drawn => Ok(50),
        }
    }

    /// Both roles' terminal scores, ordered by role index.
    pub fn goals(&self) -> Result<[GoalValue; 2]> {
        Ok([self.goal(Role::First)?, self.goal(Role::Second)?])
    }

    /// Legal moves of the position; empty exactly when terminal.
    pub fn legal_moves(&self) -> Vec<Move> {
        let mut moves = Vec::new();
        self.legal_moves_into(&mut moves);
        moves
    }

    /// Fills `moves` with the legal moves, reusing its allocation.
    pub fn legal_moves_into(&self, moves: &mut Vec<Move>) {
        moves.clear();
        if self.is_terminal() {
            return;
        }
        match self.spec.kind {
            GameKind::ConnectFour => {
                for col in 0..self.spec.width as usize {
                    if self.cells[col].is_none() {
                        moves.push(Move(col as u16));
                    }
                }
            }
            _ => {
                for (index, cell) in self.cells.iter().enumerate() {
                    if cell.is_none() {
                        moves.push(Move(index as u16));
                    }
                }
            }
        }
    }

    fn is_legal(&self, mv: Move) -> bool {
        if self.is_terminal() || mv.0 >= self.spec.move_range() {
            return false;
        }
        self.cells[mv.0 as usize].is_none()
    }

    /// Applies a legal move, returning the successor state.
    pub fn apply(&self, mv: Move) -> Result<GameState> {
        if !self.is_legal(mv) {
            return Err(Error::IllegalMove {
                mv: mv.0,
                state: self.canonical_key(),
            });
        }
        let mut next = self.clone();
        next.apply_in_place(mv);
        Ok(next)
    }

    /// Applies a move without legality checks; used by search playouts.
    pub(crate) fn apply_in_place(&mut self, mv: Move) {
        debug_assert!(self.is_legal(mv), "illegal move {mv} applied");
        let cell = match self.spec.kind {
            GameKind::ConnectFour => self.drop_cell(mv.0 as usize),
            _ => mv.0 as usize,
        };
        let mover = self.to_move;
        self.cells[cell] = Some(mover);
        self.move_count += 1;
        self.to_move = mover.opponent();
        self.status = win::status_after(&self.cells, &self.spec, cell, mover, self.move_count);
    }

    /// Lowest empty cell of a Connect Four column (largest row index).
    fn drop_cell(&self, col: usize) -> usize {
        let width = self.spec.width as usize;
        let mut cell = col;
        loop {
            let below = cell + width;
            if below >= self.cells.len() || self.cells[below].is_some() {
                return cell;
            }
            cell = below;
        }
    }

    /// Stable text identity of the position: spec token, cell contents, and
    /// the role to move.
    pub fn canonical_key(&self) -> String {
        let mut key = String::with_capacity(self.spec.token().len() + self.cells.len() + 4);
        key.push_str(&self.spec.token());
        key.push('|');
        for cell in &self.cells {
            key.push(match cell {
                None => '.',
                Some(role) => role.mark(),
            });
        }
        key.push('|');
        key.push(self.to_move.mark());
        key
    }

    /// Multi-line board picture for terminal display.
    pub fn render(&self) -> String {
        let width = self.spec.width as usize;
        let mut out = String::new();
        for row in 0..self.spec.height as usize {
            if self.spec.kind == GameKind::Hex {
                for _ in 0..row {
                    out.push(' ');
                }
            }
            for col in 0..width {
                if col > 0 {
                    out.push(' ');
                }
                out.push(match self.cells[row * width + col] {
                    None => '.',
                    Some(role) => role.mark(),
                });
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ttt3() -> GameSpec {
        GameSpec::tictactoe(3, 3).unwrap()
    }

    fn state_after(spec: GameSpec, moves: &[u16]) -> GameState {
        let mut state = spec.initial_state();
        for &mv in moves {
            state = state.apply(Move(mv)).unwrap();
        }
        state
    }

    #[test]
    fn spec_validation_rejects_bad_dimensions() {
        assert!(GameSpec::tictactoe(1, 1).is_err());
        assert!(GameSpec::tictactoe(9, 3).is_err());
        assert!(GameSpec::tictactoe(3, 4).is_err());
        assert!(GameSpec::connect_four(4, 4, 5).is_err());
        assert!(GameSpec::hex(1).is_err());
        assert!(GameSpec::connect_four(4, 6, 5).is_ok());
    }

    #[test]
    fn token_round_trips() {
        for token in ["tictactoe:3x3:3", "connectfour:4x4:4", "hex:3x3", "tictactoe:5x5:5"] {
            let spec = GameSpec::parse(token).unwrap();
            assert_eq!(spec.token(), token);
        }
    }

    #[test]
    fn parse_rejects_malformed_tokens() {
        for token in [
            "checkers:8x8",
            "tictactoe",
            "tictactoe:3x3",
            "tictactoe:3x4:3",
            "hex:3x3:3",
            "tictactoe:axb:3",
            "",
        ] {
            assert!(GameSpec::parse(token).is_err(), "accepted `{token}`");
        }
    }

    #[test]
    fn initial_state_is_empty_with_first_to_move() {
        for spec in [ttt3(), GameSpec::connect_four(4, 4, 4).unwrap(), GameSpec::hex(3).unwrap()] {
            let state = spec.initial_state();
            assert_eq!(state.cells().len(), spec.cell_count());
            assert!(state.cells().iter().all(|c| c.is_none()));
            assert_eq!(state.to_move(), Role::First);
            assert_eq!(state.move_count(), 0);
            assert!(!state.is_terminal());
        }
    }

    #[test]
    fn tictactoe_initial_offers_nine_moves() {
        assert_eq!(ttt3().initial_state().legal_moves().len(), 9);
    }

    #[test]
    fn connectfour_full_column_is_excluded() {
        let spec = GameSpec::connect_four(4, 4, 4).unwrap();
        let state = state_after(spec, &[2, 2, 2, 2]);
        let moves = state.legal_moves();
        assert_eq!(moves.len(), 3);
        assert!(!moves.contains(&Move(2)));
    }

    #[test]
    fn connectfour_stones_fall_to_the_bottom() {
        let spec = GameSpec::connect_four(4, 4, 4).unwrap();
        let state = state_after(spec, &[2]);
        assert_eq!(state.cells()[3 * 4 + 2], Some(Role::First));
        let state = state.apply(Move(2)).unwrap();
        assert_eq!(state.cells()[2 * 4 + 2], Some(Role::Second));
    }

    #[test]
    fn apply_places_one_mark_and_flips_mover() {
        let state = ttt3().initial_state().apply(Move(4)).unwrap();
        assert_eq!(state.cells()[4], Some(Role::First));
        assert_eq!(state.to_move(), Role::Second);
        assert_eq!(state.move_count(), 1);
    }

    #[test]
    fn apply_rejects_occupied_cell_and_out_of_range() {
        let state = ttt3().initial_state().apply(Move(4)).unwrap();
        assert!(state.apply(Move(4)).is_err());
        assert!(state.apply(Move(9)).is_err());
    }

    #[test]
    fn top_row_line_ends_the_game() {
        let state = state_after(ttt3(), &[0, 3, 1, 4, 2]);
        assert!(state.is_terminal());
        assert_eq!(state.winner(), Some(Role::First));
        assert_eq!(state.goal(Role::First).unwrap(), 100);
        assert_eq!(state.goal(Role::Second).unwrap(), 0);
        assert!(state.legal_moves().is_empty());
    }

    #[test]
    fn full_board_without_line_is_a_draw() {
        let state = state_after(ttt3(), &[0, 4, 8, 1, 7, 6, 2, 5, 3]);
        assert!(state.is_terminal());
        assert_eq!(state.winner(), None);
        assert_eq!(state.goal(Role::First).unwrap(), 50);
        assert_eq!(state.goal(Role::Second).unwrap(), 50);
    }

    #[test]
    fn goal_on_ongoing_state_is_an_error() {
        assert!(ttt3().initial_state().goal(Role::First).is_err());
    }

    #[test]
    fn diagonal_and_column_wins_are_detected() {
        let column = state_after(ttt3(), &[1, 0, 4, 3, 7]);
        assert_eq!(column.winner(), Some(Role::First));
        let diagonal = state_after(ttt3(), &[0, 1, 4, 2, 8]);
        assert_eq!(diagonal.winner(), Some(Role::First));
        let anti = state_after(ttt3(), &[2, 1, 4, 3, 6]);
        assert_eq!(anti.winner(), Some(Role::First));
    }

    #[test]
    fn connectfour_row_win() {
        let spec = GameSpec::connect_four(4, 4, 4).unwrap();
        let state = state_after(spec, &[0, 0, 1, 1, 2, 2, 3]);
        assert_eq!(state.winner(), Some(Role::First));
    }

    #[test]
    fn hex_vertical_chain_wins_for_first_role() {
        let spec = GameSpec::hex(3).unwrap();
        let state = state_after(spec, &[1, 0, 4, 2, 7]);
        assert!(state.is_terminal());
        assert_eq!(state.winner(), Some(Role::First));
        assert_eq!(state.goal(Role::Second).unwrap(), 0);
    }

    #[test]
    fn hex_bent_chain_uses_hex_adjacency() {
        let spec = GameSpec::hex(3).unwrap();
        let state = state_after(spec, &[2, 0, 4, 1, 6]);
        assert!(state.is_terminal());
        assert_eq!(state.winner(), Some(Role::First));
    }

    #[test]
    fn hex_side_chain_wins_for_second_role() {
        let spec = GameSpec::hex(3).unwrap();
        let state = state_after(spec, &[0, 3, 8, 4, 2, 5]);
        assert!(state.is_terminal());
        assert_eq!(state.winner(), Some(Role::Second));
    }

    #[test]
    fn canonical_key_separates_spec_board_and_mover() {
        let a = ttt3().initial_state();
        let b = ttt3().initial_state();
        assert_eq!(a.canonical_key(), b.canonical_key());
        let c = a.apply(Move(0)).unwrap();
        assert_ne!(a.canonical_key(), c.canonical_key());
        let big = GameSpec::tictactoe(4, 4).unwrap().initial_state();
        assert_ne!(a.canonical_key(), big.canonical_key());
        assert_eq!(a.canonical_key(), "tictactoe:3x3:3|.........|x");
        assert_eq!(c.canonical_key(), "tictactoe:3x3:3|x........|o");
    }

    #[test]
    fn render_draws_the_board() {
        let state = state_after(ttt3(), &[0, 4]);
        assert_eq!(state.render(), "x . .\n. o .\n. . .\n");
    }
}
