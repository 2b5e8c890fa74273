//! Match runner, learning experiments with repetition management, and the
//! cross-play tournament.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::games::{GameSpec, GameState, GoalValue, Move, Role};
use crate::learning::{
    q_backward_update, qmplayer_select, qplayer_select, EpsilonSchedule, LearningParams,
    MatchRecord, QTable,
};
use crate::report;
use crate::search::{mcs_select, mcts_select, random_move, SearchBudget};

/// Which player to field, with everything needed to build it.
#[derive(Clone, Debug)]
pub enum AgentSpec {
    Random,
    QPlayer {
        params: LearningParams,
        schedule: EpsilonSchedule,
        snapshot: Option<String>,
    },
    QMPlayer {
        params: LearningParams,
        schedule: EpsilonSchedule,
        budget: SearchBudget,
        snapshot: Option<String>,
    },
    Mcs {
        budget: SearchBudget,
    },
    Mcts {
        budget: SearchBudget,
    },
}

impl AgentSpec {
    /// Parses an agent token: a kind (`random`, `qplayer`, `qmplayer`,
    /// `mcs`, `mcts`), optionally a search budget (`mcts:playouts:100000`),
    /// and optionally a Q-table snapshot prefix (`qplayer@runs/exp/rep0`).
    /// `flag_budget` overrides the per-kind default budget; a budget inside
    /// the token overrides both.
    pub fn parse(token: &str, flag_budget: Option<SearchBudget>) -> Result<AgentSpec> {
        let unknown = || Error::UnknownAgent(token.to_string());
        let (base, snapshot) = match token.split_once('@') {
            Some((base, path)) if !path.is_empty() => (base, Some(path.to_string())),
            Some(_) => return Err(unknown()),
            None => (token, None),
        };
        let (kind, embedded) = match base.split_once(':') {
            Some((kind, budget)) => (kind, Some(SearchBudget::parse(budget).map_err(|_| unknown())?)),
            None => (base, None),
        };
        let budget = |fallback: u64| {
            embedded
                .or(flag_budget)
                .unwrap_or(SearchBudget::Playouts(fallback))
        };
        let inert_schedule = EpsilonSchedule::fixed(0.0, 0).expect("zero rate is valid");
        let spec = match kind {
            "random" => AgentSpec::Random,
            "qplayer" => AgentSpec::QPlayer {
                params: LearningParams::default(),
                schedule: inert_schedule,
                snapshot: snapshot.clone(),
            },
            "qmplayer" => AgentSpec::QMPlayer {
                params: LearningParams::default(),
                schedule: inert_schedule,
                budget: budget(200),
                snapshot: snapshot.clone(),
            },
            "mcs" => AgentSpec::Mcs { budget: budget(10000) },
            "mcts" => AgentSpec::Mcts { budget: budget(100000) },
            _ => return Err(unknown()),
        };
        let takes_budget = matches!(
            spec,
            AgentSpec::QMPlayer { .. } | AgentSpec::Mcs { .. } | AgentSpec::Mcts { .. }
        );
        if embedded.is_some() && !takes_budget {
            return Err(unknown());
        }
        if snapshot.is_some() && !spec.is_learner() {
            return Err(unknown());
        }
        Ok(spec)
    }

    /// True for the kinds that keep Q-tables.
    pub fn is_learner(&self) -> bool {
        matches!(self, AgentSpec::QPlayer { .. } | AgentSpec::QMPlayer { .. })
    }

    /// Learning parameters of Q kinds.
    pub fn params(&self) -> Option<LearningParams> {
        match self {
            AgentSpec::QPlayer { params, .. } | AgentSpec::QMPlayer { params, .. } => Some(*params),
            _ => None,
        }
    }

    /// Exploration schedule of Q kinds.
    pub fn schedule(&self) -> Option<&EpsilonSchedule> {
        match self {
            AgentSpec::QPlayer { schedule, .. } | AgentSpec::QMPlayer { schedule, .. } => {
                Some(schedule)
            }
            _ => None,
        }
    }

    /// Snapshot prefix of Q kinds.
    pub fn snapshot(&self) -> Option<&str> {
        match self {
            AgentSpec::QPlayer { snapshot, .. } | AgentSpec::QMPlayer { snapshot, .. } => {
                snapshot.as_deref()
            }
            _ => None,
        }
    }

    /// Replaces the learning parameters on Q kinds; no-op otherwise.
    pub fn with_params(mut self, new: LearningParams) -> AgentSpec {
        match &mut self {
            AgentSpec::QPlayer { params, .. } | AgentSpec::QMPlayer { params, .. } => *params = new,
            _ => {}
        }
        self
    }

    /// Replaces the exploration schedule on Q kinds; no-op otherwise.
    pub fn with_schedule(mut self, new: EpsilonSchedule) -> AgentSpec {
        match &mut self {
            AgentSpec::QPlayer { schedule, .. } | AgentSpec::QMPlayer { schedule, .. } => {
                *schedule = new
            }
            _ => {}
        }
        self
    }
}

impl std::fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentSpec::Random => write!(f, "random"),
            AgentSpec::QPlayer { snapshot, .. } => match snapshot {
                Some(path) => write!(f, "qplayer@{path}"),
                None => write!(f, "qplayer"),
            },
            AgentSpec::QMPlayer { budget, snapshot, .. } => match snapshot {
                Some(path) => write!(f, "qmplayer:{budget}@{path}"),
                None => write!(f, "qmplayer:{budget}"),
            },
            AgentSpec::Mcs { budget } => write!(f, "mcs:{budget}"),
            AgentSpec::Mcts { budget } => write!(f, "mcts:{budget}"),
        }
    }
}

/// A playable agent: its spec plus per-role Q-tables for the Q kinds.
#[derive(Clone, Debug)]
pub struct Agent {
    spec: AgentSpec,
    tables: Option<Box<[QTable; 2]>>,
}

impl Agent {
    /// Builds the agent for a game, loading Q-table snapshots when the spec
    /// names one.
    pub fn build(spec: &AgentSpec, game: &GameSpec) -> Result<Agent> {
        let tables = if spec.is_learner() {
            Some(match spec.snapshot() {
                None => Box::new([QTable::new(), QTable::new()]),
                Some(prefix) => Box::new(load_table_pair(prefix, game)?),
            })
        } else {
            None
        };
        Ok(Agent {
            spec: spec.clone(),
            tables,
        })
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    pub fn tables(&self) -> Option<&[QTable; 2]> {
        self.tables.as_deref()
    }

    /// Surrenders the trained tables, ordered by role.
    pub fn into_tables(self) -> Option<Box<[QTable; 2]>> {
        self.tables
    }

    /// Exploration rate this agent uses at learning match `m`; 0 for agents
    /// without a schedule.
    fn epsilon_at(&self, m: u64) -> f64 {
        self.spec.schedule().map_or(0.0, |s| s.epsilon(m))
    }

    /// Picks a move for the current state.
    fn select(&self, state: &GameState, epsilon: f64, rng: &mut impl Rng) -> Move {
        match &self.spec {
            AgentSpec::Random => random_move(state, rng),
            AgentSpec::QPlayer { .. } => {
                qplayer_select(self.tables.as_ref().expect("learner has tables"), state, epsilon, rng)
            }
            AgentSpec::QMPlayer { budget, .. } => qmplayer_select(
                self.tables.as_ref().expect("learner has tables"),
                state,
                epsilon,
                budget,
                rng,
            ),
            AgentSpec::Mcs { budget } => mcs_select(state, budget, rng),
            AgentSpec::Mcts { budget } => mcts_select(state, budget, state.to_move(), rng),
        }
    }

    /// Applies the end-of-match update to the table this agent used as
    /// `role`; no-op for non-learning agents.
    fn learn_from(&mut self, role: Role, record: &MatchRecord) {
        if let (Some(params), Some(tables)) = (self.spec.params(), self.tables.as_mut()) {
            q_backward_update(&mut tables[role.index()], record, &params);
        }
    }
}

fn load_table_pair(prefix: &str, game: &GameSpec) -> Result<[QTable; 2]> {
    let mut tables = [QTable::new(), QTable::new()];
    for role in [Role::First, Role::Second] {
        let path = format!("{prefix}_role{}.tsv", role.index());
        let (table, meta) = report::load_qtable(path.as_ref())?;
        if meta.game != game.token() {
            return Err(Error::SnapshotMismatch {
                path,
                reason: format!("snapshot is for {}, expected {}", meta.game, game.token()),
            });
        }
        if meta.role != role {
            return Err(Error::SnapshotMismatch {
                path,
                reason: format!("snapshot holds role {}, expected {}", meta.role.index(), role.index()),
            });
        }
        tables[role.index()] = table;
    }
    Ok(tables)
}

/// Outcome of one match between two agents.
#[derive(Clone, Debug)]
pub struct MatchResult {
    pub match_index: u64,
    /// Index (0 or 1) of the agent that moved first.
    pub first_mover: usize,
    /// Goals by agent index, not by role.
    pub goals: [GoalValue; 2],
    pub move_count: u16,
    /// Chronological move log, when requested.
    pub moves: Option<Vec<Move>>,
}

/// Plays one match. The first mover alternates with match parity: agent 0
/// opens even-indexed matches. While `learning` is set, each Q-learning
/// agent records its decisions and applies the backward update at the end;
/// otherwise tables stay untouched and exploration is forced off.
pub fn play_match(
    agents: [&mut Agent; 2],
    game: &GameSpec,
    match_index: u64,
    learning: bool,
    log_moves: bool,
    rng: &mut impl Rng,
) -> Result<MatchResult> {
    let [agent0, agent1] = agents;
    let first = (match_index % 2) as usize;
    let mut state = game.initial_state();
    let mut decisions: [Vec<(String, Move)>; 2] = [Vec::new(), Vec::new()];
    let mut moves = log_moves.then(Vec::new);
    while !state.is_terminal() {
        let mover = if state.to_move() == Role::First { first } else { 1 - first };
        let agent: &Agent = if mover == 0 { agent0 } else { agent1 };
        let epsilon = if learning { agent.epsilon_at(match_index) } else { 0.0 };
        let mv = agent.select(&state, epsilon, rng);
        if learning && agent.spec.is_learner() {
            decisions[mover].push((state.canonical_key(), mv));
        }
        if let Some(log) = &mut moves {
            log.push(mv);
        }
        state = state.apply(mv)?;
    }
    let role_of = |index: usize| if index == first { Role::First } else { Role::Second };
    if learning {
        let terminal_key = state.canonical_key();
        for (index, agent) in [agent0, agent1].into_iter().enumerate() {
            if !agent.spec.is_learner() {
                continue;
            }
            let role = role_of(index);
            let record = MatchRecord::new(
                std::mem::take(&mut decisions[index]),
                terminal_key.clone(),
                state.goal(role)?,
            );
            agent.learn_from(role, &record);
        }
    }
    Ok(MatchResult {
        match_index,
        first_mover: first,
        goals: [state.goal(role_of(0))?, state.goal(role_of(1))?],
        move_count: state.move_count(),
        moves,
    })
}

/// One window of a win-rate curve, labeled by its final match.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesPoint {
    /// 1-based index of the last match inside the window.
    pub match_index: u64,
    pub win_rate: f64,
    /// True while the window lies inside the learning phase.
    pub learning: bool,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
}

/// Win/draw tally over the exploitation phase of one repetition.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConvergenceSummary {
    pub matches: u64,
    pub wins: u64,
    pub draws: u64,
    pub win_rate: f64,
    pub draw_rate: f64,
}

/// All match results of one repetition, from the first agent's perspective,
/// with windowed win-rate points derived on demand.
#[derive(Clone, Debug)]
pub struct WinRateSeries {
    results: Vec<MatchResult>,
    window: u64,
    learning_matches: u64,
}

impl WinRateSeries {
    pub fn new(results: Vec<MatchResult>, window: u64, learning_matches: u64) -> WinRateSeries {
        assert!(window > 0, "window must be positive");
        WinRateSeries {
            results,
            window,
            learning_matches,
        }
    }

    pub fn results(&self) -> &[MatchResult] {
        &self.results
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn learning_matches(&self) -> u64 {
        self.learning_matches
    }

    /// Non-overlapping windowed win rates; only full windows are reported.
    /// A window counts as learning when its last match is a learning match.
    pub fn points(&self) -> Vec<SeriesPoint> {
        let window = self.window as usize;
        let mut points = Vec::with_capacity(self.results.len() / window);
        for (chunk_index, chunk) in self.results.chunks_exact(window).enumerate() {
            let mut wins = 0;
            let mut draws = 0;
            for result in chunk {
                match result.goals[0] {
                    100 => wins += 1,
                    50 => draws += 1,
                    _ => {}
                }
            }
            let match_index = (chunk_index as u64 + 1) * self.window;
            points.push(SeriesPoint {
                match_index,
                win_rate: wins as f64 / self.window as f64,
                learning: match_index <= self.learning_matches,
                wins,
                draws,
                losses: self.window - wins - draws,
            });
        }
        points
    }

    /// Win and draw rates across the exploitation phase, where the first
    /// agent plays greedily.
    pub fn convergence(&self) -> ConvergenceSummary {
        let mut summary = ConvergenceSummary::default();
        for result in &self.results {
            if result.match_index < self.learning_matches {
                continue;
            }
            summary.matches += 1;
            match result.goals[0] {
                100 => summary.wins += 1,
                50 => summary.draws += 1,
                _ => {}
            }
        }
        if summary.matches > 0 {
            summary.win_rate = summary.wins as f64 / summary.matches as f64;
            summary.draw_rate = summary.draws as f64 / summary.matches as f64;
        }
        summary
    }
}

/// A full learning experiment: learner vs opponent over repeated runs.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub learner: AgentSpec,
    pub opponent: AgentSpec,
    pub learning_matches: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub window: u64,
}

/// Matches played per repetition: the learning phase plus an exploitation
/// phase half as long.
pub fn total_matches(learning_matches: u64) -> u64 {
    learning_matches + learning_matches.div_ceil(2)
}

/// Result of one repetition: its series, convergence summary, and the
/// learner's trained tables.
#[derive(Clone, Debug)]
pub struct RepetitionOutcome {
    pub series: WinRateSeries,
    pub convergence: ConvergenceSummary,
    pub tables: Option<Box<[QTable; 2]>>,
}

/// One point of the across-repetition mean curve.
#[derive(Clone, Copy, Debug)]
pub struct AggregatePoint {
    pub match_index: u64,
    pub mean_win_rate: f64,
    pub variance: f64,
    pub learning: bool,
}

/// Everything an experiment produces.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub repetitions: Vec<RepetitionOutcome>,
    pub mean_convergence: f64,
    pub convergence_variance: f64,
    pub mean_draw_rate: f64,
    pub mean_series: Vec<AggregatePoint>,
}

/// Runs every repetition of the experiment: l learning matches with the
/// schedule active, then half as many exploitation matches with exploration
/// forced off. Repetitions draw from independent seeded streams and may run
/// in parallel.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    validate_config(config)?;
    let repetitions: Result<Vec<RepetitionOutcome>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, rep))
        .collect();
    let repetitions = repetitions?;
    let rates: Vec<f64> = repetitions.iter().map(|r| r.convergence.win_rate).collect();
    let draw_rates: Vec<f64> = repetitions.iter().map(|r| r.convergence.draw_rate).collect();
    Ok(ExperimentOutcome {
        mean_convergence: mean(&rates),
        convergence_variance: sample_variance(&rates),
        mean_draw_rate: mean(&draw_rates),
        mean_series: aggregate_series(&repetitions),
        repetitions,
    })
}

fn validate_config(config: &ExperimentConfig) -> Result<()> {
    if config.repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be positive".into()));
    }
    if config.window == 0 {
        return Err(Error::InvalidParameter("window must be positive".into()));
    }
    for spec in [&config.learner, &config.opponent] {
        if let Some(schedule) = spec.schedule() {
            if spec.snapshot().is_none() && schedule.learning_matches() != config.learning_matches {
                return Err(Error::InvalidParameter(format!(
                    "schedule spans {} matches but the experiment trains {}",
                    schedule.learning_matches(),
                    config.learning_matches
                )));
            }
        }
    }
    Ok(())
}

fn run_repetition(config: &ExperimentConfig, rep: u32) -> Result<RepetitionOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(rep as u64);
    let mut learner = Agent::build(&config.learner, &config.game)?;
    let mut opponent = Agent::build(&config.opponent, &config.game)?;
    let total = total_matches(config.learning_matches);
    let mut results = Vec::with_capacity(total as usize);
    for m in 0..total {
        let learning = m < config.learning_matches;
        results.push(play_match(
            [&mut learner, &mut opponent],
            &config.game,
            m,
            learning,
            false,
            &mut rng,
        )?);
    }
    let series = WinRateSeries::new(results, config.window, config.learning_matches);
    let convergence = series.convergence();
    Ok(RepetitionOutcome {
        series,
        convergence,
        tables: learner.into_tables(),
    })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

fn aggregate_series(repetitions: &[RepetitionOutcome]) -> Vec<AggregatePoint> {
    let per_rep: Vec<Vec<SeriesPoint>> = repetitions.iter().map(|r| r.series.points()).collect();
    let Some(first) = per_rep.first() else {
        return Vec::new();
    };
    let mut aggregate = Vec::with_capacity(first.len());
    for (i, lead) in first.iter().enumerate() {
        let rates: Vec<f64> = per_rep.iter().map(|points| points[i].win_rate).collect();
        aggregate.push(AggregatePoint {
            match_index: lead.match_index,
            mean_win_rate: mean(&rates),
            variance: sample_variance(&rates),
            learning: lead.learning,
        });
    }
    aggregate
}

/// Trains one QPlayer per schedule variant under otherwise identical
/// conditions (same seed, opponent, and match counts), for comparing
/// exploration schedules.
pub fn epsilon_comparison_experiment(
    game: &GameSpec,
    params: &LearningParams,
    variants: &[EpsilonSchedule],
    opponent: &AgentSpec,
    learning_matches: u64,
    repetitions: u32,
    seed: u64,
    window: u64,
) -> Result<Vec<ExperimentOutcome>> {
    variants
        .iter()
        .map(|schedule| {
            let config = ExperimentConfig {
                game: *game,
                learner: AgentSpec::QPlayer {
                    params: *params,
                    schedule: *schedule,
                    snapshot: None,
                },
                opponent: opponent.clone(),
                learning_matches,
                repetitions,
                seed,
                window,
            };
            run_experiment(&config)
        })
        .collect()
}

/// Pairwise win rates of a set of agents, Table-style: `win_rates[row][col]`
/// is the column agent's win rate against the row agent, `None` on the
/// diagonal.
#[derive(Clone, Debug)]
pub struct TournamentMatrix {
    pub agents: Vec<String>,
    pub n_matches: u64,
    pub win_rates: Vec<Vec<Option<f64>>>,
    pub draw_rates: Vec<Vec<Option<f64>>>,
}

/// Plays every pair of agents for `n_matches` with alternating first mover
/// and no learning. Q-learning agents must carry a snapshot; their tables
/// stay frozen.
pub fn run_tournament(
    specs: &[AgentSpec],
    game: &GameSpec,
    n_matches: u64,
    seed: u64,
) -> Result<TournamentMatrix> {
    if specs.len() < 2 {
        return Err(Error::InvalidParameter(
            "a tournament needs at least two agents".into(),
        ));
    }
    if n_matches == 0 {
        return Err(Error::InvalidParameter("n_matches must be positive".into()));
    }
    for spec in specs {
        if spec.is_learner() && spec.snapshot().is_none() {
            return Err(Error::MissingSnapshot(spec.to_string()));
        }
    }
    let mut agents: Vec<Agent> = specs
        .iter()
        .map(|spec| Agent::build(spec, game))
        .collect::<Result<_>>()?;
    let count = agents.len();
    let mut win_rates = vec![vec![None; count]; count];
    let mut draw_rates = vec![vec![None; count]; count];
    for i in 0..count {
        for j in i + 1..count {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((i * count + j) as u64);
            let (left, right) = agents.split_at_mut(j);
            let tally = run_pair(&mut left[i], &mut right[0], game, n_matches, &mut rng)?;
            win_rates[i][j] = Some(tally.wins[1] as f64 / n_matches as f64);
            win_rates[j][i] = Some(tally.wins[0] as f64 / n_matches as f64);
            let draws = Some(tally.draws as f64 / n_matches as f64);
            draw_rates[i][j] = draws;
            draw_rates[j][i] = draws;
        }
    }
    Ok(TournamentMatrix {
        agents: specs.iter().map(AgentSpec::to_string).collect(),
        n_matches,
        win_rates,
        draw_rates,
    })
}

/// Win/draw tally of a fixed pairing.
#[derive(Clone, Copy, Debug, Default)]
pub struct PairTally {
    pub wins: [u64; 2],
    pub draws: u64,
    pub n_matches: u64,
}

fn run_pair(
    a: &mut Agent,
    b: &mut Agent,
    game: &GameSpec,
    n_matches: u64,
    rng: &mut impl Rng,
) -> Result<PairTally> {
    let mut tally = PairTally {
        n_matches,
        ..PairTally::default()
    };
    for k in 0..n_matches {
        let result = play_match([a, b], game, k, false, false, rng)?;
        match result.goals[0] {
            100 => tally.wins[0] += 1,
            50 => tally.draws += 1,
            _ => tally.wins[1] += 1,
        }
    }
    Ok(tally)
}

/// Plays two agents head to head for `n_matches` with alternating first
/// mover, without learning.
pub fn head_to_head(
    a: &AgentSpec,
    b: &AgentSpec,
    game: &GameSpec,
    n_matches: u64,
    seed: u64,
) -> Result<PairTally> {
    for spec in [a, b] {
        if spec.is_learner() && spec.snapshot().is_none() {
            return Err(Error::MissingSnapshot(spec.to_string()));
        }
    }
    let mut agent_a = Agent::build(a, game)?;
    let mut agent_b = Agent::build(b, game)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_pair(&mut agent_a, &mut agent_b, game, n_matches, &mut rng)
}
