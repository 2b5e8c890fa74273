//! Terminal detection. `status_after` checks only the lines or chains
//! through the last placed stone; `scan_status` rescans the whole board and
//! backs the equivalence test.

use super::{GameKind, GameSpec, Role, Status};

/// Board status after `mover` placed a stone at `cell`.
pub(crate) fn status_after(
    cells: &[Option<Role>],
    spec: &GameSpec,
    cell: usize,
    mover: Role,
    move_count: u16,
) -> Status {
    let won = match spec.kind {
        GameKind::Hex => hex_connects(cells, spec, cell, mover),
        _ => line_through(cells, spec, cell, mover),
    };
    if won {
        Status::Won(mover)
    } else if move_count as usize == cells.len() {
        Status::Drawn
    } else {
        Status::Ongoing
    }
}

/// Whole-board rescan; the slow reference for `status_after`.
#[cfg(test)]
pub(crate) fn scan_status(cells: &[Option<Role>], spec: &GameSpec, move_count: u16) -> Status {
    for (index, cell) in cells.iter().enumerate() {
        if let Some(role) = *cell {
            let won = match spec.kind {
                GameKind::Hex => hex_connects(cells, spec, index, role),
                _ => line_through(cells, spec, index, role),
            };
            if won {
                return Status::Won(role);
            }
        }
    }
    if move_count as usize == cells.len() {
        Status::Drawn
    } else {
        Status::Ongoing
    }
}

/// True when a straight run of at least `k_in_row` stones of `role` passes
/// through `cell`.
fn line_through(cells: &[Option<Role>], spec: &GameSpec, cell: usize, role: Role) -> bool {
    let width = spec.width as i32;
    let height = spec.height as i32;
    let row = cell as i32 / width;
    let col = cell as i32 % width;
    let target = Some(role);
    for (dr, dc) in [(0, 1), (1, 0), (1, 1), (1, -1)] {
        let mut run = 1;
        for sign in [1, -1] {
            let (mut r, mut c) = (row + sign * dr, col + sign * dc);
            while r >= 0 && r < height && c >= 0 && c < width {
                if cells[(r * width + c) as usize] != target {
                    break;
                }
                run += 1;
                r += sign * dr;
                c += sign * dc;
            }
        }
        if run >= spec.k_in_row as i32 {
            return true;
        }
    }
    false
}

/// Neighbour offsets of the 6-connected hex rhombus.
const HEX_NEIGHBORS: [(i32, i32); 6] = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, 1), (1, -1)];

/// True when the chain of `role` stones through `cell` joins the role's two
/// sides: top and bottom rows for role 0, left and right columns for role 1.
fn hex_connects(cells: &[Option<Role>], spec: &GameSpec, cell: usize, role: Role) -> bool {
    let n = spec.width as i32;
    let target = Some(role);
    let mut visited = 0u64;
    let mut stack = [0u16; 64];
    let mut depth = 0;
    let mut touches_low = false;
    let mut touches_high = false;
    visited |= 1 << cell;
    stack[depth] = cell as u16;
    depth += 1;
    while depth > 0 {
        depth -= 1;
        let current = stack[depth] as i32;
        let (row, col) = (current / n, current % n);
        let edge_coord = match role {
            Role::First => row,
            Role::Second => col,
        };
        touches_low |= edge_coord == 0;
        touches_high |= edge_coord == n - 1;
        if touches_low && touches_high {
            return true;
        }
        for (dr, dc) in HEX_NEIGHBORS {
            let (r, c) = (row + dr, col + dc);
            if r < 0 || r >= n || c < 0 || c >= n {
                continue;
            }
            let next = (r * n + c) as usize;
            if visited & (1 << next) == 0 && cells[next] == target {
                visited |= 1 << next;
                stack[depth] = next as u16;
                depth += 1;
            }
        }
    }
    false
}
