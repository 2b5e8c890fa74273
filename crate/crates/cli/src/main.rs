//! Command-line front end: learning experiments, head-to-head evaluation,
//! cross-play tournaments, single rendered matches, and the exact minimax
//! oracle for small games.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qarena_core::games::{GameSpec, Move, Role};
use qarena_core::harness::{
    head_to_head, play_match, run_experiment, run_tournament, total_matches, Agent, AgentSpec,
    ExperimentConfig, TournamentMatrix,
};
use qarena_core::learning::{EpsilonSchedule, LearningParams};
use qarena_core::oracle::{enumerate_states, MinimaxOracle};
use qarena_core::report::{
    save_qtable, write_aggregate, write_draw_matrix, write_matrix, write_metadata, write_series,
    RunMetadata, SnapshotMeta,
};
use qarena_core::search::SearchBudget;

#[derive(Parser)]
#[command(name = "qarena", version, about = "Seedable Q-learning and Monte Carlo agents for small board games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent against an opponent and export curves plus Q-tables.
    Learn(LearnArgs),
    /// Play two agents head to head and print the tally.
    Compete(CompeteArgs),
    /// Run a round-robin tournament and export the win-rate matrix.
    Tournament(TournamentArgs),
    /// Play one match and render every position.
    Play(PlayArgs),
    /// Query the exact minimax oracle or count reachable states.
    Oracle(OracleArgs),
}

/// Game token, e.g. `tictactoe:3x3:3`, `connectfour:4x4:4`, or `hex:3x3`.
#[derive(Args)]
struct GameArg {
    #[arg(long)]
    game: String,
}

impl GameArg {
    fn parse(&self) -> Result<GameSpec> {
        GameSpec::parse(&self.game).with_context(|| format!("invalid --game `{}`", self.game))
    }
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    game: GameArg,
    /// Learning agent: `qplayer` or `qmplayer`, optionally `@snapshot_prefix`
    /// to warm-start.
    #[arg(long, default_value = "qplayer")]
    agent: String,
    /// Opponent agent token.
    #[arg(long, default_value = "random")]
    opponent: String,
    /// Matches in the learning phase; evaluation adds half as many more.
    #[arg(long, default_value_t = 50000)]
    learning_matches: u64,
    /// Independent repetitions to average over.
    #[arg(long, default_value_t = 5)]
    reps: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for series CSVs, Q-table snapshots, and metadata.
    #[arg(long)]
    out: PathBuf,
    /// Learning rate alpha.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Discount factor gamma.
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Exploration schedule: `cosine:A:B` or `fixed:E`.
    #[arg(long, default_value = "cosine:0.5:0")]
    schedule: String,
    /// Win-rate window in matches.
    #[arg(long, default_value_t = 500)]
    window: u64,
    /// Search budget for search-backed agents: `playouts:N` or `ms:N`.
    #[arg(long)]
    budget: Option<String>,
    /// Worker threads for repetitions.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct CompeteArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long)]
    agent_a: String,
    #[arg(long)]
    agent_b: String,
    #[arg(long, default_value_t = 100)]
    matches: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Search budget for search-backed agents: `playouts:N` or `ms:N`.
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Args)]
struct TournamentArgs {
    #[command(flatten)]
    game: GameArg,
    /// Comma-separated agent tokens, at least two.
    #[arg(long)]
    agents: String,
    /// Matches per agent pair.
    #[arg(long, default_value_t = 100)]
    matches: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for the matrix CSVs and metadata.
    #[arg(long)]
    out: PathBuf,
    /// Search budget for search-backed agents: `playouts:N` or `ms:N`.
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Args)]
struct PlayArgs {
    #[command(flatten)]
    game: GameArg,
    /// First mover.
    #[arg(long, default_value = "random")]
    agent_a: String,
    #[arg(long, default_value = "random")]
    agent_b: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Search budget for search-backed agents: `playouts:N` or `ms:N`.
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum OracleMode {
    /// Solve the position exactly and print both roles' values.
    Minimax,
    /// Count the states reachable from the position.
    Enumerate,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    game: GameArg,
    #[arg(long, value_enum)]
    mode: OracleMode,
    /// Comma-separated move prefix applied before querying.
    #[arg(long)]
    moves: Option<String>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Learn(args) => learn(args),
        Command::Compete(args) => compete(args),
        Command::Tournament(args) => tournament(args),
        Command::Play(args) => play(args),
        Command::Oracle(args) => oracle(args),
    }
}

fn parse_budget(flag: &Option<String>) -> Result<Option<SearchBudget>> {
    flag.as_deref()
        .map(|text| {
            SearchBudget::parse(text).with_context(|| format!("invalid --budget `{text}`"))
        })
        .transpose()
}

fn parse_agent(token: &str, budget: &Option<SearchBudget>) -> Result<AgentSpec> {
    AgentSpec::parse(token, *budget).with_context(|| format!("invalid agent `{token}`"))
}

fn parse_schedule(text: &str, learning_matches: u64) -> Result<EpsilonSchedule> {
    let parts: Vec<&str> = text.split(':').collect();
    let schedule = match parts.as_slice() {
        ["cosine", a, b] => {
            let amplitude: f64 = a.parse().with_context(|| format!("bad amplitude `{a}`"))?;
            let floor: f64 = b.parse().with_context(|| format!("bad floor `{b}`"))?;
            EpsilonSchedule::cosine(amplitude, floor, learning_matches)
        }
        ["fixed", e] => {
            let rate: f64 = e.parse().with_context(|| format!("bad rate `{e}`"))?;
            EpsilonSchedule::fixed(rate, learning_matches)
        }
        _ => bail!("--schedule must be `cosine:A:B` or `fixed:E`, got `{text}`"),
    };
    Ok(schedule?)
}

fn learn(args: LearnArgs) -> Result<()> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("--jobs could not configure the thread pool")?;
    }
    let game = args.game.parse()?;
    let budget = parse_budget(&args.budget)?;
    let params = LearningParams::new(args.alpha, args.gamma)?;
    let schedule = parse_schedule(&args.schedule, args.learning_matches)?;
    let learner = parse_agent(&args.agent, &budget)?;
    if !learner.is_learner() {
        bail!("--agent `{}` does not learn; use qplayer or qmplayer", args.agent);
    }
    let learner = learner.with_params(params).with_schedule(schedule);
    let mut opponent = parse_agent(&args.opponent, &budget)?;
    if opponent.is_learner() && opponent.snapshot().is_none() {
        opponent = opponent.with_params(params).with_schedule(schedule);
    }
    let config = ExperimentConfig {
        game,
        learner: learner.clone(),
        opponent: opponent.clone(),
        learning_matches: args.learning_matches,
        repetitions: args.reps,
        seed: args.seed,
        window: args.window,
    };
    let started = Instant::now();
    let outcome = run_experiment(&config)?;
    let elapsed = started.elapsed();

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create --out `{}`", args.out.display()))?;
    for (rep, repetition) in outcome.repetitions.iter().enumerate() {
        if !repetition.series.points().is_empty() {
            write_series(&repetition.series, &args.out.join(format!("series_rep{rep}.csv")))?;
        }
        if let Some(tables) = &repetition.tables {
            for role in [Role::First, Role::Second] {
                let meta = SnapshotMeta {
                    game: game.token(),
                    role,
                    learning_rate: args.alpha,
                    discount_factor: args.gamma,
                    matches: args.learning_matches,
                };
                let path = args.out.join(format!("qtable_rep{rep}_role{}.tsv", role.index()));
                save_qtable(&tables[role.index()], &meta, &path)?;
            }
        }
    }
    if !outcome.mean_series.is_empty() {
        write_aggregate(&outcome.mean_series, &args.out.join("series_mean.csv"))?;
    }

    let mut meta = RunMetadata::new(args.seed);
    meta.wall_time = elapsed;
    meta.config_entry("command", "learn");
    meta.config_entry("game", game.token());
    meta.config_entry("learner", &learner);
    meta.config_entry("opponent", &opponent);
    meta.config_entry("learning_matches", args.learning_matches);
    meta.config_entry("total_matches", total_matches(args.learning_matches));
    meta.config_entry("repetitions", args.reps);
    meta.config_entry("window", args.window);
    meta.config_entry("schedule", &args.schedule);
    meta.config_entry("learning_rate", args.alpha);
    meta.config_entry("discount_factor", args.gamma);
    if let Some(budget) = &budget {
        meta.config_entry("budget", budget);
    }
    if matches!(learner, AgentSpec::QMPlayer { .. }) {
        meta.note("playout budgets stand in for wall-clock limits so runs are reproducible");
    }
    write_metadata(&meta, &args.out.join("metadata.txt"))?;

    for (rep, repetition) in outcome.repetitions.iter().enumerate() {
        let convergence = &repetition.convergence;
        println!(
            "rep {rep}: win rate {:.4}, draw rate {:.4} over {} evaluation matches",
            convergence.win_rate, convergence.draw_rate, convergence.matches
        );
    }
    println!(
        "convergence win rate: {:.4} (std {:.4} over {} repetitions), draw rate {:.4}",
        outcome.mean_convergence,
        outcome.convergence_variance.sqrt(),
        args.reps,
        outcome.mean_draw_rate
    );
    if args.learning_matches == 0 {
        untrained_baseline(&learner, &opponent, &game, args.window.max(100), args.seed)?;
    }
    Ok(())
}

/// With zero learning matches nothing is played, so estimate the untrained
/// agent's strength separately: an empty-table QPlayer moves uniformly at
/// random and an empty-table QMPlayer falls back to its Monte Carlo search.
fn untrained_baseline(
    learner: &AgentSpec,
    opponent: &AgentSpec,
    game: &GameSpec,
    matches: u64,
    seed: u64,
) -> Result<()> {
    eprintln!("warning: --learning-matches 0 leaves the agent untrained; no experiment matches were played");
    let stand_in = match learner {
        AgentSpec::QMPlayer { budget, .. } => AgentSpec::Mcs { budget: *budget },
        _ => AgentSpec::Random,
    };
    let evaluated_opponent = match opponent {
        spec if spec.is_learner() && spec.snapshot().is_none() => AgentSpec::Random,
        spec => spec.clone(),
    };
    let tally = head_to_head(&stand_in, &evaluated_opponent, game, matches, seed)?;
    let decisive = tally.wins[0] + tally.wins[1];
    let decisive_rate = if decisive > 0 {
        tally.wins[0] as f64 / decisive as f64
    } else {
        0.5
    };
    println!(
        "untrained baseline over {matches} matches: win rate {:.4}, decisive-only {:.4}, draws {}",
        tally.wins[0] as f64 / matches as f64,
        decisive_rate,
        tally.draws
    );
    Ok(())
}

fn compete(args: CompeteArgs) -> Result<()> {
    let game = args.game.parse()?;
    let budget = parse_budget(&args.budget)?;
    let agent_a = parse_agent(&args.agent_a, &budget)?;
    let agent_b = parse_agent(&args.agent_b, &budget)?;
    if args.matches == 0 {
        bail!("--matches must be positive");
    }
    let tally = head_to_head(&agent_a, &agent_b, &game, args.matches, args.seed)?;
    println!("game: {}", game.token());
    println!("a: {agent_a}");
    println!("b: {agent_b}");
    println!(
        "a wins {} ({:.4}), b wins {} ({:.4}), draws {} ({:.4}) over {} matches",
        tally.wins[0],
        tally.wins[0] as f64 / args.matches as f64,
        tally.wins[1],
        tally.wins[1] as f64 / args.matches as f64,
        tally.draws,
        tally.draws as f64 / args.matches as f64,
        args.matches
    );
    Ok(())
}

fn tournament(args: TournamentArgs) -> Result<()> {
    let game = args.game.parse()?;
    let budget = parse_budget(&args.budget)?;
    let specs: Vec<AgentSpec> = args
        .agents
        .split(',')
        .map(|token| parse_agent(token.trim(), &budget))
        .collect::<Result<_>>()?;
    if specs.len() < 2 {
        bail!("--agents needs at least two comma-separated tokens");
    }
    let started = Instant::now();
    let matrix = run_tournament(&specs, &game, args.matches, args.seed)?;
    let elapsed = started.elapsed();

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create --out `{}`", args.out.display()))?;
    write_matrix(&matrix, &args.out.join("matrix.csv"))?;
    write_draw_matrix(&matrix, &args.out.join("draw_rates.csv"))?;
    let mut meta = RunMetadata::new(args.seed);
    meta.wall_time = elapsed;
    meta.config_entry("command", "tournament");
    meta.config_entry("game", game.token());
    meta.config_entry("agents", matrix.agents.join(" "));
    meta.config_entry("matches_per_pair", args.matches);
    if let Some(budget) = &budget {
        meta.config_entry("budget", budget);
    }
    write_metadata(&meta, &args.out.join("metadata.txt"))?;

    print_matrix(&matrix);
    println!("wrote {}", args.out.join("matrix.csv").display());
    Ok(())
}

/// Prints the win-rate matrix aligned, one row per row agent; each cell is
/// the column agent's win rate against the row agent.
fn print_matrix(matrix: &TournamentMatrix) {
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(matrix.agents.len() + 1);
    let mut header = vec!["agent".to_string()];
    header.extend(matrix.agents.iter().cloned());
    rows.push(header);
    for (i, agent) in matrix.agents.iter().enumerate() {
        let mut row = vec![agent.clone()];
        for cell in &matrix.win_rates[i] {
            row.push(match cell {
                Some(rate) => format!("{rate:.3}"),
                None => "-".to_string(),
            });
        }
        rows.push(row);
    }
    let columns = rows[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| rows.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    for row in &rows {
        let mut line = format!("{:<width$}", row[0], width = widths[0]);
        for (cell, width) in row[1..].iter().zip(&widths[1..]) {
            line.push_str(&format!("  {cell:>width$}"));
        }
        println!("{line}");
    }
}

fn play(args: PlayArgs) -> Result<()> {
    use rand::SeedableRng;
    let game = args.game.parse()?;
    let budget = parse_budget(&args.budget)?;
    let spec_a = parse_agent(&args.agent_a, &budget)?;
    let spec_b = parse_agent(&args.agent_b, &budget)?;
    for spec in [&spec_a, &spec_b] {
        if spec.is_learner() && spec.snapshot().is_none() {
            bail!("agent `{spec}` needs a Q-table snapshot (`{spec}@prefix`) to play");
        }
    }
    let mut agent_a = Agent::build(&spec_a, &game)?;
    let mut agent_b = Agent::build(&spec_b, &game)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let result = play_match([&mut agent_a, &mut agent_b], &game, 0, false, true, &mut rng)?;

    println!("game: {}", game.token());
    println!("a ({}): role 0    b ({}): role 1", spec_a, spec_b);
    let mut state = game.initial_state();
    println!("{}", state.render());
    for mv in result.moves.as_deref().unwrap_or(&[]) {
        let mover = state.to_move();
        let owner = if mover == Role::First { "a" } else { "b" };
        state = state.apply(*mv)?;
        println!("{owner} (role {}) plays {mv}", mover.index());
        println!("{}", state.render());
    }
    match state.winner() {
        Some(role) => {
            let owner = if role == Role::First { "a" } else { "b" };
            println!("winner: {owner} (role {})", role.index());
        }
        None => println!("draw"),
    }
    println!("goals: a {} - b {}", result.goals[0], result.goals[1]);
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let game = args.game.parse()?;
    let mut state = game.initial_state();
    if let Some(prefix) = &args.moves {
        for token in prefix.split(',') {
            let index: u16 = token
                .trim()
                .parse()
                .with_context(|| format!("bad move `{token}` in --moves"))?;
            state = state.apply(Move(index))?;
        }
    }
    println!("game: {}", game.token());
    if let Some(prefix) = &args.moves {
        println!("after moves: {prefix}");
    }
    match args.mode {
        OracleMode::Enumerate => {
            let count = enumerate_states(&state)?;
            println!("reachable states: {count}");
        }
        OracleMode::Minimax => {
            let mut oracle = MinimaxOracle::new();
            let value = oracle.value(&state)?;
            println!("value: {}/{}", value[0], value[1]);
            println!(
                "result: {}",
                match value {
                    [100, 0] => "role 0 wins",
                    [0, 100] => "role 1 wins",
                    _ => "draw",
                }
            );
            if !state.is_terminal() {
                let best = oracle.optimal_move(&state)?;
                println!("optimal move: {best}");
            }
        }
    }
    Ok(())
}
