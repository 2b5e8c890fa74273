//! Persistence: Q-table snapshots, win-rate series and tournament matrices
//! as CSV, and run metadata.
//!
//! Every numeric value is serialized with the shortest representation that
//! round-trips exactly, so re-exporting the same data is byte-identical and
//! reloaded Q-tables equal the saved ones.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::games::{GameSpec, Move, Role};
use crate::harness::{AggregatePoint, TournamentMatrix, WinRateSeries};
use crate::learning::QTable;

/// Header data accompanying a Q-table snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub game: String,
    pub role: Role,
    pub learning_rate: f64,
    pub discount_factor: f64,
    pub matches: u64,
}

/// Writes a Q-table snapshot: a tab-separated header line (game token, role
/// index, learning rate, discount factor, match count) followed by one
/// `state_key<TAB>move<TAB>value` line per entry in sorted order.
pub fn save_qtable(table: &QTable, meta: &SnapshotMeta, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}",
        meta.game,
        meta.role.index(),
        meta.learning_rate,
        meta.discount_factor,
        meta.matches
    );
    for (state_key, mv, value) in table.sorted_entries() {
        let _ = writeln!(out, "{state_key}\t{mv}\t{value}");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a snapshot written by [`save_qtable`]; values reload exactly.
pub fn load_qtable(path: &Path) -> Result<(QTable, SnapshotMeta)> {
    let text = fs::read_to_string(path)?;
    let fail = |line: usize, reason: String| Error::Parse {
        path: path.display().to_string(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(1, "missing header line".into()))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 5 {
        return Err(fail(1, format!("header has {} fields, expected 5", fields.len())));
    }
    GameSpec::parse(fields[0]).map_err(|e| fail(1, format!("bad game token: {e}")))?;
    let role = match fields[1] {
        "0" => Role::First,
        "1" => Role::Second,
        other => return Err(fail(1, format!("bad role index `{other}`"))),
    };
    let meta = SnapshotMeta {
        game: fields[0].to_string(),
        role,
        learning_rate: parse_f64(fields[2]).map_err(|r| fail(1, r))?,
        discount_factor: parse_f64(fields[3]).map_err(|r| fail(1, r))?,
        matches: fields[4]
            .parse()
            .map_err(|_| fail(1, format!("bad match count `{}`", fields[4])))?,
    };
    let mut table = QTable::new();
    for (index, line) in lines {
        let number = index + 1;
        let mut parts = line.split('\t');
        let (Some(state_key), Some(mv), Some(value), None) =
            (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(fail(number, "expected state_key<TAB>move<TAB>value".into()));
        };
        let mv: u16 = mv
            .parse()
            .map_err(|_| fail(number, format!("bad move `{mv}`")))?;
        let value = parse_f64(value).map_err(|r| fail(number, r))?;
        if table.value(state_key, Move(mv)).is_some() {
            return Err(fail(number, format!("duplicate entry for `{state_key}` move {mv}")));
        }
        table.set(state_key, Move(mv), value);
    }
    Ok((table, meta))
}

fn parse_f64(text: &str) -> std::result::Result<f64, String> {
    let value: f64 = text
        .parse()
        .map_err(|_| format!("bad number `{text}`"))?;
    if !value.is_finite() {
        return Err(format!("non-finite number `{text}`"));
    }
    Ok(value)
}

/// Writes one repetition's windowed win-rate curve as CSV.
pub fn write_series(series: &WinRateSeries, path: &Path) -> Result<()> {
    let points = series.points();
    if points.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "series holds no complete window of {} matches",
            series.window()
        )));
    }
    let mut out = String::from("match,win_rate,phase,wins,draws,losses\n");
    for point in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            point.match_index,
            point.win_rate,
            phase_label(point.learning),
            point.wins,
            point.draws,
            point.losses
        );
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the across-repetition mean curve as CSV.
pub fn write_aggregate(points: &[AggregatePoint], path: &Path) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("aggregate series is empty".into()));
    }
    let mut out = String::from("match,mean_win_rate,win_rate_variance,phase\n");
    for point in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            point.match_index,
            point.mean_win_rate,
            point.variance,
            phase_label(point.learning)
        );
    }
    fs::write(path, out)?;
    Ok(())
}

fn phase_label(learning: bool) -> &'static str {
    if learning {
        "learning"
    } else {
        "exploitation"
    }
}

/// Writes the tournament win-rate matrix as CSV: header row of column
/// agents, one row per row agent, `-` on the diagonal. Each cell is the
/// column agent's win rate against the row agent.
pub fn write_matrix(matrix: &TournamentMatrix, path: &Path) -> Result<()> {
    write_rate_table(&matrix.agents, &matrix.win_rates, path)
}

/// Writes the symmetric draw-rate companion of [`write_matrix`].
pub fn write_draw_matrix(matrix: &TournamentMatrix, path: &Path) -> Result<()> {
    write_rate_table(&matrix.agents, &matrix.draw_rates, path)
}

fn write_rate_table(agents: &[String], cells: &[Vec<Option<f64>>], path: &Path) -> Result<()> {
    let mut out = String::from("agent");
    for agent in agents {
        let _ = write!(out, ",{agent}");
    }
    out.push('\n');
    for (row, agent) in agents.iter().enumerate() {
        let _ = write!(out, "{agent}");
        for cell in &cells[row] {
            match cell {
                Some(rate) => {
                    let _ = write!(out, ",{rate}");
                }
                None => out.push_str(",-"),
            }
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// What a run writes next to its data files: configuration echo, seed,
/// version, wall time, and free-form notes.
#[derive(Clone, Debug)]
pub struct RunMetadata {
    pub seed: u64,
    pub version: String,
    pub wall_time: Duration,
    pub config: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl RunMetadata {
    pub fn new(seed: u64) -> RunMetadata {
        RunMetadata {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: Duration::ZERO,
            config: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn config_entry(&mut self, key: &str, value: impl std::fmt::Display) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }
}

/// Writes run metadata as `key: value` lines. Wall time makes this the one
/// output file that is not byte-stable across runs.
pub fn write_metadata(meta: &RunMetadata, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "version: {}", meta.version);
    let _ = writeln!(out, "seed: {}", meta.seed);
    let _ = writeln!(out, "wall_time_ms: {}", meta.wall_time.as_millis());
    for (key, value) in &meta.config {
        let _ = writeln!(out, "{key}: {value}");
    }
    for note in &meta.notes {
        let _ = writeln!(out, "note: {note}");
    }
    fs::write(path, out)?;
    Ok(())
}
