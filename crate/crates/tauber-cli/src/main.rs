mod gamefile;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use tauber_core::checks::{
    check_assumption1, check_lemma1, check_operator_laws, DEFAULT_SLACK,
};
use tauber_core::counterexample::{
    distinct_limits_report, oscillation_scan, value_g, value_g1, value_g2, value_g3, value_g4,
    value_g_sym, argmax_f, ActionSetKind, CounterexampleParams,
};
use tauber_core::error::Error as CoreError;
use tauber_core::hidden::{hidden_values, lipschitz_check, BeliefGrid};
use tauber_core::matrix_game::{solve_matrix_game, verify_solution, GameSolution, MatrixGame};
use tauber_core::operator::{tauberian_gap, OperatorHandle};
use tauber_core::stochastic::{game_values, random_game, shapley_operator, GeneratorConfig};
use tauber_core::value::ValueVector;

use gamefile::{load_game_file, to_finite_game, to_hidden_game, InputError};

const EXIT_PROPERTY_FAILURE: u8 = 1;
const EXIT_INPUT_ERROR: u8 = 2;
const EXIT_NUMERICAL_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "tauber", about = "Stochastic-game value experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a game file: n-stage and discounted values per state.
    Solve {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gap table ||v_n - v_{1/n}|| over a horizon schedule.
    Tauber {
        #[arg(long, conflicts_with = "seed")]
        game: Option<PathBuf>,
        /// Generate a random game with this seed instead of reading a file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        actions: usize,
        /// Comma-separated increasing horizon schedule.
        #[arg(long, default_value = "500,1000,2000,5000", value_delimiter = ',')]
        n: Vec<u64>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the one-shot reductions of the distinct-limits construction.
    Counterexample {
        #[arg(long, default_value_t = 2)]
        r: u64,
        #[arg(long, default_value_t = 0.6)]
        x: f64,
        /// Sweep the dyadic grid 2^-j down to this discount.
        #[arg(long, default_value_t = 1e-10)]
        lambda_min: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a hidden game on a belief grid; reports the Lipschitz slope.
    Hidden {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, default_value_t = 20)]
        grid: u32,
        #[arg(long, default_value_t = 50)]
        n: u64,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a randomized property suite; nonzero exit on any violation.
    Check {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: u64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Suite {
    Operator,
    Lemma1,
    Assumption1,
    Matrix,
    /// Adversarial non-nonexpansive fixture; expected to fail.
    Negative,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("TAUBER_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &CliError) -> u8 {
    match e {
        CliError::Input(_) => EXIT_INPUT_ERROR,
        CliError::Core(core) => match core {
            CoreError::InvalidInput(_)
            | CoreError::InvalidDiscount(_)
            | CoreError::DimensionMismatch { .. } => EXIT_INPUT_ERROR,
            _ => EXIT_NUMERICAL_FAILURE,
        },
        CliError::Io(_) => EXIT_NUMERICAL_FAILURE,
    }
}

#[derive(Debug)]
enum CliError {
    Input(InputError),
    Core(CoreError),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        CliError::Input(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// 12 significant digits, reproducible across runs.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Solve {
            game,
            n,
            lambda,
            tol,
            out,
        } => {
            let file = load_game_file(&game)?;
            let game = to_finite_game(&file)?;
            let (v_n, report) = game_values(&game, n, lambda, tol)?;
            let mut text = String::from("state,v_n,v_lambda\n");
            for (k, name) in file.states.iter().enumerate() {
                text.push_str(&format!(
                    "{name},{},{}\n",
                    fmt12(v_n.entries()[k]),
                    fmt12(report.value.entries()[k])
                ));
            }
            emit(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tauber {
            game,
            seed,
            states,
            actions,
            n,
            tol,
            out,
        } => {
            let op = match (game, seed) {
                (Some(path), _) => {
                    let file = load_game_file(&path)?;
                    shapley_operator(&to_finite_game(&file)?)
                }
                (None, seed) => {
                    let config = GeneratorConfig {
                        seed: seed.unwrap_or(0),
                        num_states: states,
                        actions_p1: actions,
                        actions_p2: actions,
                        payoff_range: (-1.0, 1.0),
                        sparsity: 0.0,
                    };
                    shapley_operator(&random_game(&config)?)
                }
            };
            let rows = tauberian_gap(&op, &n, tol)?;
            let mut text = String::from("n,gap\n");
            for row in &rows {
                text.push_str(&format!("{},{}\n", row.n, fmt12(row.gap)));
            }
            let monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-12);
            text.push_str(&format!(
                "# trend,{}\n",
                if monotone { "decreasing" } else { "non-monotone" }
            ));
            emit(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Counterexample {
            r,
            x,
            lambda_min,
            out,
        } => {
            if !(lambda_min > 0.0 && lambda_min <= 1e-3) {
                return Err(CliError::Input(InputError(format!(
                    "lambda_min = {lambda_min} must lie in (0, 1e-3]"
                ))));
            }
            let params = CounterexampleParams {
                r,
                x,
                ..Default::default()
            };
            params.validate()?;
            let mut grid = Vec::new();
            let mut j = 2;
            loop {
                let lambda = 2.0f64.powi(-j);
                grid.push(lambda);
                if lambda <= lambda_min {
                    break;
                }
                j += 1;
            }
            let rows: Vec<Result<String, CoreError>> = grid
                .par_iter()
                .map(|&lambda| {
                    let (a_all, _) = argmax_f(lambda, ActionSetKind::MultiplesOfR, &params)?;
                    let (a_even, _) = argmax_f(lambda, ActionSetKind::EvenMultiplesOfR, &params)?;
                    let (a_odd, _) = argmax_f(lambda, ActionSetKind::OddMultiplesOfR, &params)?;
                    Ok(format!(
                        "{},{},{},{},{},{},{},{a_all},{a_even},{a_odd}\n",
                        fmt12(lambda),
                        fmt12(value_g(lambda, &params)?),
                        fmt12(value_g_sym(lambda, &params)?),
                        fmt12(value_g1(lambda, &params)?),
                        fmt12(value_g2(lambda, &params)?),
                        fmt12(value_g3(lambda, &params)?),
                        fmt12(value_g4(lambda, &params)?),
                    ))
                })
                .collect();
            let mut text = String::from(
                "lambda,value_G,value_G_sym,value_G1,value_G2,value_G3,value_G4,argmax_rN,argmax_2rN,argmax_r_odd\n",
            );
            for row in rows {
                text.push_str(&row?);
            }
            let scan = oscillation_scan(&params, &grid)?;
            let summary = distinct_limits_report(&params, &grid)?;
            text.push_str(&format!("# liminf_estimate,{}\n", fmt12(scan.liminf_estimate)));
            text.push_str(&format!("# limsup_estimate,{}\n", fmt12(scan.limsup_estimate)));
            text.push_str(&format!("# oscillation_gap,{}\n", fmt12(scan.gap())));
            text.push_str(&format!(
                "# discounted_limit_estimate,{}\n",
                fmt12(summary.discounted_limit_estimate)
            ));
            text.push_str(&format!(
                "# n_stage_limit,{} (documented construction constant x; not computed)\n",
                fmt12(summary.n_stage_limit_documented)
            ));
            emit(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Hidden {
            game,
            grid,
            n,
            lambda,
            tol,
            out,
        } => {
            let file = load_game_file(&game)?;
            let spec = to_hidden_game(&file)?;
            let belief_grid = BeliefGrid::new(spec.num_states(), grid)?;
            let (v_n, report) = hidden_values(&spec, &belief_grid, n, lambda, tol)?;
            let mut text = String::from("belief,v_n,v_lambda\n");
            for (idx, node) in belief_grid.nodes().iter().enumerate() {
                let label = node
                    .probs()
                    .iter()
                    .map(|p| format!("{p:.6}"))
                    .collect::<Vec<_>>()
                    .join("|");
                text.push_str(&format!(
                    "{label},{},{}\n",
                    fmt12(v_n.entries()[idx]),
                    fmt12(report.value.entries()[idx])
                ));
            }
            let slope_n = lipschitz_check(&belief_grid, &v_n)?;
            let slope_l = lipschitz_check(&belief_grid, &report.value)?;
            text.push_str(&format!("# max_slope_v_n,{}\n", fmt12(slope_n)));
            text.push_str(&format!("# max_slope_v_lambda,{}\n", fmt12(slope_l)));
            emit(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            suite,
            seed,
            trials,
        } => run_check(suite, seed, trials),
    }
}

fn random_small_game(seed: u64) -> Result<OperatorHandle, CoreError> {
    let config = GeneratorConfig {
        seed,
        num_states: 3,
        actions_p1: 2,
        actions_p2: 2,
        payoff_range: (-1.0, 1.0),
        sparsity: 0.2,
    };
    Ok(shapley_operator(&random_game(&config)?))
}

fn run_check(suite: Suite, seed: u64, trials: u64) -> Result<ExitCode, CliError> {
    let mut failures = 0u64;
    match suite {
        Suite::Operator => {
            for t in 0..trials {
                let op = random_small_game(seed.wrapping_add(t))?;
                let laws = check_operator_laws(&op, 40, seed ^ t)?;
                let a1 = check_assumption1(&op, 40, seed ^ (t << 8), DEFAULT_SLACK)?;
                let ok = laws.passes(DEFAULT_SLACK) && a1.passes;
                println!(
                    "operator trial {t}: {} (expansion {:.3e}, monotonicity {:.3e}, homogeneity {:.3e}, ratio {:.3e})",
                    if ok { "pass" } else { "FAIL" },
                    laws.worst_expansion,
                    laws.worst_monotonicity,
                    laws.worst_homogeneity,
                    a1.max_ratio
                );
                if !ok {
                    failures += 1;
                }
            }
        }
        Suite::Lemma1 => {
            use rand::prelude::*;
            use rand_chacha::ChaCha8Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in 0..trials {
                let op = random_small_game(seed.wrapping_add(t))?;
                let mut worst = f64::INFINITY;
                let mut ok = true;
                for _ in 0..50 {
                    let f = ValueVector::from(
                        (0..op.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>(),
                    );
                    let g = ValueVector::from(
                        (0..op.dim()).map(|_| rng.gen_range(-5.0..5.0)).collect::<Vec<_>>(),
                    );
                    let n = rng.gen_range(1..=50u64);
                    let t_steps = rng.gen_range(1..=n);
                    let lambda = rng.gen_range(0.01..=1.0f64);
                    let report = check_lemma1(&op, &f, &g, lambda, n, t_steps, DEFAULT_SLACK)?;
                    worst = worst
                        .min(report.contraction_slack)
                        .min(report.iterate_bound_slack);
                    ok &= report.contraction_holds && report.iterate_bound_holds;
                }
                println!(
                    "lemma1 trial {t}: {} (worst slack {worst:.3e})",
                    if ok { "pass" } else { "FAIL" }
                );
                if !ok {
                    failures += 1;
                }
            }
        }
        Suite::Assumption1 => {
            for t in 0..trials {
                let op = random_small_game(seed.wrapping_add(t))?;
                let report = check_assumption1(&op, 100, seed ^ t, DEFAULT_SLACK)?;
                println!(
                    "assumption1 trial {t}: {} (max ratio {:.6e}, declared {:.6e})",
                    if report.passes { "pass" } else { "FAIL" },
                    report.max_ratio,
                    report.declared_constant
                );
                if !report.passes {
                    failures += 1;
                }
            }
        }
        Suite::Matrix => {
            use rand::prelude::*;
            use rand_chacha::ChaCha8Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in 0..trials {
                let payoff: Vec<Vec<f64>> = (0..3)
                    .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
                    .collect();
                let game = MatrixGame::new(payoff.clone()).map_err(CoreError::from)?;
                let sol = solve_matrix_game(&game, 1e-9)?;
                let c: f64 = rng.gen_range(-3.0..3.0);
                let shifted = MatrixGame::new(
                    payoff.iter().map(|r| r.iter().map(|x| x + c).collect()).collect(),
                )?;
                let shifted_sol = solve_matrix_game(&shifted, 1e-9)?;
                let alpha: f64 = rng.gen_range(0.2..3.0);
                let scaled = MatrixGame::new(
                    payoff.iter().map(|r| r.iter().map(|x| alpha * x).collect()).collect(),
                )?;
                let scaled_sol = solve_matrix_game(&scaled, 1e-9)?;
                let cross = GameSolution {
                    value: sol.value + c,
                    ..sol.clone()
                };
                let ok = sol.duality_gap <= 1e-9
                    && (shifted_sol.value - sol.value - c).abs() <= 1e-9
                    && (scaled_sol.value - alpha * sol.value).abs() <= 1e-8
                    && verify_solution(&shifted, &cross) <= 1e-9;
                println!(
                    "matrix trial {t}: {} (gap {:.3e})",
                    if ok { "pass" } else { "FAIL" },
                    sol.duality_gap
                );
                if !ok {
                    failures += 1;
                }
            }
        }
        Suite::Negative => {
            // Expanding operator dishonestly declared nonexpansive.
            let op = OperatorHandle::new(3, 1.0, 1.0, |f| Ok(f.scale(2.0).shift(0.1)));
            let laws = check_operator_laws(&op, 100, seed)?;
            let ok = laws.passes(DEFAULT_SLACK);
            println!(
                "negative control: {} (expansion {:.3e})",
                if ok { "pass (unexpected)" } else { "FAIL (expected)" },
                laws.worst_expansion
            );
            if !ok {
                failures += 1;
            }
        }
    }
    if failures > 0 {
        println!("{failures} failing trial(s)");
        Ok(ExitCode::from(EXIT_PROPERTY_FAILURE))
    } else {
        println!("all trials passed");
        Ok(ExitCode::SUCCESS)
    }
}
