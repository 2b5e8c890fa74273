//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line with the measured values. Tolerances are pinned as
//! constants below.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use qarena_core::games::{GameSpec, GameState, Move};
use qarena_core::harness::{
    epsilon_comparison_experiment, head_to_head, run_experiment, AgentSpec, ExperimentConfig,
};
use qarena_core::learning::{
    q_backward_update, EpsilonSchedule, LearningParams, MatchRecord, QTable,
};
use qarena_core::oracle::MinimaxOracle;
use qarena_core::search::{mcts_select, SearchBudget};

/// Floating-point exactness bound for the schedule and update checks.
const FLOAT_TOLERANCE: f64 = 1e-12;
/// Search agents must win at least this share of 200 matches vs Random.
/// Known to be unreachable when the first mover alternates: exact policy
/// iteration against a uniform-random opponent tops out at 99.48% as first
/// mover and 93.86% as second, a 96.67% ceiling for any player.
const SEARCH_WIN_FLOOR: f64 = 0.99;
/// QPlayer convergence target and allowed deviation at l=50000.
const QPLAYER_TARGET: f64 = 0.865;
const QPLAYER_TOLERANCE: f64 = 0.05;
/// QMPlayer may trail QPlayer by at most this much at any match count.
const QM_REGRESSION_TOLERANCE: f64 = 0.01;
/// QMPlayer must lead QPlayer by at least this much at l=5000.
const QM_EARLY_MARGIN: f64 = 0.05;
/// Trained win rates must clear the untrained baseline by this margin.
const BASELINE_MARGIN: f64 = 0.05;

fn report(number: u8, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance {number:02} {name}: {verdict} ({detail})");
    assert!(pass, "acceptance {number:02} {name}: FAIL ({detail})");
}

fn ttt3() -> GameSpec {
    GameSpec::parse("tictactoe:3x3:3").unwrap()
}

fn qplayer(learning_matches: u64) -> AgentSpec {
    AgentSpec::QPlayer {
        params: LearningParams::default(),
        schedule: EpsilonSchedule::cosine(0.5, 0.0, learning_matches).unwrap(),
        snapshot: None,
    }
}

fn qmplayer(learning_matches: u64) -> AgentSpec {
    AgentSpec::QMPlayer {
        params: LearningParams::default(),
        schedule: EpsilonSchedule::cosine(0.5, 0.0, learning_matches).unwrap(),
        budget: SearchBudget::Playouts(200),
        snapshot: None,
    }
}

fn experiment(game: GameSpec, learner: AgentSpec, learning_matches: u64, reps: u32) -> ExperimentConfig {
    ExperimentConfig {
        game,
        learner,
        opponent: AgentSpec::Random,
        learning_matches,
        repetitions: reps,
        seed: 1,
        window: 500,
    }
}

fn convergence(config: &ExperimentConfig) -> f64 {
    run_experiment(config).unwrap().mean_convergence
}

#[test]
fn acceptance_01_epsilon_schedule_exactness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    for case in 0..100 {
        let amplitude = rng.gen::<f64>();
        let floor = rng.gen::<f64>() * (1.0 - amplitude);
        let learning_matches = rng.gen_range(1..=20000u64);
        let schedule = EpsilonSchedule::cosine(amplitude, floor, learning_matches).unwrap();
        let context = format!("case {case}: a={amplitude} b={floor} l={learning_matches}");
        assert!(
            (schedule.epsilon(0) - (amplitude + floor)).abs() <= FLOAT_TOLERANCE,
            "epsilon(0) != a+b for {context}"
        );
        assert!(
            (schedule.epsilon(learning_matches) - floor).abs() <= FLOAT_TOLERANCE,
            "epsilon(l) != b for {context}"
        );
        assert!(
            schedule.epsilon(learning_matches + 1).abs() <= FLOAT_TOLERANCE,
            "epsilon(l+1) != 0 for {context}"
        );
        let mut previous = f64::INFINITY;
        for m in 0..=learning_matches {
            let value = schedule.epsilon(m);
            assert!(
                value <= previous + FLOAT_TOLERANCE,
                "epsilon increased at m={m} for {context}"
            );
            previous = value;
        }
    }
    let elapsed = started.elapsed();
    report(
        1,
        "epsilon schedule exactness",
        elapsed < Duration::from_secs(1),
        &format!("100 random schedules checked pointwise in {elapsed:?}"),
    );
}

/// Independent scalar transcription of the update recurrence, kept free of
/// the library's QTable machinery.
#[derive(Default)]
struct ScalarMirror {
    values: HashMap<String, HashMap<u16, f64>>,
}

impl ScalarMirror {
    fn apply(&mut self, decisions: &[(String, Move)], terminal_key: &str, goal: u8, alpha: f64, gamma: f64) {
        for i in (0..decisions.len()).rev() {
            let (state, mv) = &decisions[i];
            let next = match decisions.get(i + 1) {
                Some((next_state, _)) => next_state.as_str(),
                None => terminal_key,
            };
            let reward = if i == decisions.len() - 1 { goal as f64 } else { 0.0 };
            let max_next = self
                .values
                .get(next)
                .map(|row| row.values().fold(0.0f64, |best, &v| best.max(v)))
                .unwrap_or(0.0);
            let slot = self
                .values
                .entry(state.clone())
                .or_default()
                .entry(mv.0)
                .or_insert(0.0);
            *slot = (1.0 - alpha) * *slot + alpha * (reward + gamma * max_next);
        }
    }
}

#[test]
fn acceptance_02_q_update_matches_the_scalar_recurrence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let pool: Vec<String> = (0..40).map(|i| format!("state{i}")).collect();
    let mut table = QTable::new();
    let mut mirror = ScalarMirror::default();
    for case in 0..1000 {
        let (alpha, gamma) = if case % 2 == 0 {
            (0.1, 0.9)
        } else {
            (rng.gen::<f64>(), rng.gen::<f64>())
        };
        let length = rng.gen_range(1..=8);
        let decisions: Vec<(String, Move)> = (0..length)
            .map(|_| {
                let key = pool.choose(&mut rng).unwrap().clone();
                (key, Move(rng.gen_range(0..9)))
            })
            .collect();
        let terminal_key = pool.choose(&mut rng).unwrap().clone();
        let goal = *[0u8, 50, 100].choose(&mut rng).unwrap();
        mirror.apply(&decisions, &terminal_key, goal, alpha, gamma);
        let record = MatchRecord::new(decisions, terminal_key, goal);
        let params = LearningParams::new(alpha, gamma).unwrap();
        q_backward_update(&mut table, &record, &params);
    }
    let mut compared = 0;
    for (state, mv, value) in table.sorted_entries() {
        let expected = mirror.values[state][&mv.0];
        assert!(
            (value - expected).abs() <= FLOAT_TOLERANCE,
            "Q({state}, {mv}) = {value}, recurrence says {expected}"
        );
        compared += 1;
    }
    let mirrored: usize = mirror.values.values().map(HashMap::len).sum();
    assert_eq!(compared, mirrored, "entry sets diverged");
    let elapsed = started.elapsed();
    report(
        2,
        "q update oracle equivalence",
        elapsed < Duration::from_secs(5),
        &format!("1000 records, {compared} entries equal to {FLOAT_TOLERANCE:e} in {elapsed:?}"),
    );
}

#[test]
fn acceptance_03_mcts_reaches_perfect_play() {
    let game = ttt3();
    let mut oracle = MinimaxOracle::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC3);
    let mut seen = HashSet::new();
    let mut positions: Vec<(GameState, Vec<(Move, [u8; 2])>)> = Vec::new();
    while positions.len() < 100 {
        let mut state = game.initial_state();
        for _ in 0..rng.gen_range(0..=4) {
            let moves = state.legal_moves();
            state = state.apply(*moves.choose(&mut rng).unwrap()).unwrap();
        }
        if state.legal_moves().len() < 2 || !seen.insert(state.canonical_key()) {
            continue;
        }
        let values = oracle.move_values(&state).unwrap();
        let mover = state.to_move().index();
        if values.iter().any(|(_, value)| value[mover] > 0) {
            positions.push((state, values));
        }
    }
    let budget = SearchBudget::Playouts(100000);
    for (state, values) in &positions {
        let mover = state.to_move();
        let selected = mcts_select(state, &budget, mover, &mut rng);
        let (_, value) = values
            .iter()
            .find(|(mv, _)| *mv == selected)
            .expect("selected move is legal");
        assert!(
            value[mover.index()] > 0,
            "mcts picked the losing move {selected} in\n{}",
            state.render()
        );
    }
    let tally = head_to_head(
        &AgentSpec::Mcts { budget },
        &AgentSpec::Random,
        &game,
        200,
        0xACC3,
    )
    .unwrap();
    let win_rate = tally.wins[0] as f64 / 200.0;
    report(
        3,
        "mcts perfect play",
        win_rate >= SEARCH_WIN_FLOOR,
        &format!(
            "no losing move over 100 oracle-labeled positions; {}W {}D of 200 vs random (rate {win_rate})",
            tally.wins[0], tally.draws
        ),
    );
}

#[test]
fn acceptance_04_mcs_dominates_random() {
    let started = Instant::now();
    let tally = head_to_head(
        &AgentSpec::Mcs {
            budget: SearchBudget::Playouts(10000),
        },
        &AgentSpec::Random,
        &ttt3(),
        200,
        0xACC4,
    )
    .unwrap();
    let win_rate = tally.wins[0] as f64 / 200.0;
    let elapsed = started.elapsed();
    report(
        4,
        "mcs dominance",
        win_rate >= SEARCH_WIN_FLOOR && elapsed < Duration::from_secs(120),
        &format!(
            "{}W {}D of 200 vs random (rate {win_rate}) in {elapsed:?}",
            tally.wins[0], tally.draws
        ),
    );
}

#[test]
fn acceptance_05_qplayer_convergence() {
    let mean = convergence(&experiment(ttt3(), qplayer(50000), 50000, 5));
    report(
        5,
        "qplayer convergence",
        (mean - QPLAYER_TARGET).abs() <= QPLAYER_TOLERANCE,
        &format!("mean exploitation win rate {mean:.4}, target {QPLAYER_TARGET} +- {QPLAYER_TOLERANCE}"),
    );
}

#[test]
fn acceptance_06_qmplayer_outperforms_qplayer() {
    let mut detail = String::new();
    let mut pass = true;
    for learning_matches in [5000u64, 20000, 50000] {
        let q = convergence(&experiment(ttt3(), qplayer(learning_matches), learning_matches, 5));
        let qm = convergence(&experiment(ttt3(), qmplayer(learning_matches), learning_matches, 5));
        pass &= qm >= q - QM_REGRESSION_TOLERANCE;
        if learning_matches == 5000 {
            pass &= qm - q >= QM_EARLY_MARGIN;
        }
        detail.push_str(&format!("l={learning_matches}: qm {qm:.4} vs q {q:.4}; "));
    }
    report(6, "qmplayer outperforms qplayer", pass, detail.trim_end_matches("; "));
}

#[test]
fn acceptance_07_dynamic_epsilon_beats_fixed() {
    let variants = [
        EpsilonSchedule::cosine(0.5, 0.0, 30000).unwrap(),
        EpsilonSchedule::fixed(0.1, 30000).unwrap(),
        EpsilonSchedule::fixed(0.2, 30000).unwrap(),
    ];
    let outcomes = epsilon_comparison_experiment(
        &ttt3(),
        &LearningParams::default(),
        &variants,
        &AgentSpec::Random,
        30000,
        5,
        1,
        500,
    )
    .unwrap();
    let dynamic = outcomes[0].mean_convergence;
    let fixed_01 = outcomes[1].mean_convergence;
    let fixed_02 = outcomes[2].mean_convergence;
    report(
        7,
        "dynamic epsilon advantage",
        dynamic > fixed_01 && dynamic > fixed_02,
        &format!(
            "dynamic {dynamic:.4} vs fixed 0.1 {fixed_01:.4} (margin {:+.4}) and fixed 0.2 {fixed_02:.4} (margin {:+.4})",
            dynamic - fixed_01,
            dynamic - fixed_02
        ),
    );
}

#[test]
fn acceptance_08_convergence_trends_carry_across_games() {
    let untrained = |game: &GameSpec| {
        let tally = head_to_head(&AgentSpec::Random, &AgentSpec::Random, game, 2000, 2).unwrap();
        tally.wins[0] as f64 / 2000.0
    };
    let hex = GameSpec::parse("hex:3x3").unwrap();
    let hex_trained = convergence(&experiment(hex, qplayer(50000), 50000, 3));
    let hex_baseline = untrained(&hex);
    let connect = GameSpec::parse("connectfour:4x4:4").unwrap();
    let connect_trained = convergence(&experiment(connect, qplayer(80000), 80000, 3));
    let connect_baseline = untrained(&connect);
    let ttt3_rate = convergence(&experiment(ttt3(), qplayer(50000), 50000, 3));
    let ttt4 = GameSpec::parse("tictactoe:4x4:4").unwrap();
    let ttt4_rate = convergence(&experiment(ttt4, qplayer(50000), 50000, 3));
    let ttt5 = GameSpec::parse("tictactoe:5x5:5").unwrap();
    let ttt5_rate = convergence(&experiment(ttt5, qplayer(50000), 50000, 3));
    let pass = hex_trained > hex_baseline + BASELINE_MARGIN
        && connect_trained > connect_baseline + BASELINE_MARGIN
        && ttt4_rate < ttt3_rate
        && ttt5_rate < ttt3_rate;
    report(
        8,
        "cross-game convergence trends",
        pass,
        &format!(
            "hex {hex_trained:.4} vs baseline {hex_baseline:.4}; connectfour {connect_trained:.4} vs baseline {connect_baseline:.4}; tictactoe 3x3 {ttt3_rate:.4} > 4x4 {ttt4_rate:.4}, 5x5 {ttt5_rate:.4}"
        ),
    );
}

#[test]
fn acceptance_09_runs_are_byte_identical() {
    let run = |out: &Path| {
        let output = Command::new(env!("CARGO_BIN_EXE_qarena"))
            .args([
                "learn",
                "--game",
                "tictactoe:3x3:3",
                "--agent",
                "qplayer",
                "--opponent",
                "random",
                "--learning-matches",
                "50000",
                "--reps",
                "5",
                "--seed",
                "1",
                "--out",
            ])
            .arg(out)
            .output()
            .unwrap();
        assert!(output.status.success(), "learn run failed");
    };
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    run(&first);
    run(&second);
    let names = |dir: &Path| -> Vec<String> {
        let mut names: Vec<String> = fs::read_dir(dir)
            .unwrap()
            .map(|entry| entry.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        names
    };
    let first_names = names(&first);
    assert_eq!(first_names, names(&second), "output file sets differ");
    let mut compared = 0;
    for name in &first_names {
        if name == "metadata.txt" {
            continue;
        }
        let left = fs::read(first.join(name)).unwrap();
        let right = fs::read(second.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
        compared += 1;
    }
    report(
        9,
        "determinism",
        compared >= 16,
        &format!("{compared} CSV and snapshot files byte-identical across two runs"),
    );
}

#[test]
fn acceptance_10_oracle_facts() {
    let oracle = |game: &str, mode: &str| -> String {
        let output = Command::new(env!("CARGO_BIN_EXE_qarena"))
            .args(["oracle", "--game", game, "--mode", mode])
            .output()
            .unwrap();
        assert!(output.status.success(), "oracle run failed for {game}");
        String::from_utf8(output.stdout).unwrap()
    };
    let ttt_minimax = oracle("tictactoe:3x3:3", "minimax");
    let hex_minimax = oracle("hex:3x3", "minimax");
    let ttt_count = oracle("tictactoe:3x3:3", "enumerate");
    let pass = ttt_minimax.contains("value: 50/50")
        && ttt_minimax.contains("result: draw")
        && hex_minimax.contains("value: 100/0")
        && hex_minimax.contains("result: role 0 wins")
        && ttt_count.contains("reachable states: 5478");
    report(
        10,
        "oracle facts",
        pass,
        "tictactoe 3x3 is a 50/50 draw, hex 3x3 is a first-player win, 5478 reachable states",
    );
}
