//! JSON game files. The base schema carries per-state payoff matrices and
//! transition rows; the hidden variant adds a signal list and a joint
//! kernel over (next state, signal), flattened row-major.

use std::path::Path;

use serde::Deserialize;
use tauber_core::hidden::HiddenGameSpec;
use tauber_core::stochastic::FiniteGame;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub states: Vec<String>,
    pub actions1: Vec<usize>,
    pub actions2: Vec<usize>,
    /// `payoff[k][i][j]`
    pub payoff: Vec<Vec<Vec<f64>>>,
    /// `transition[k][i][j]` -> probability per next state
    pub transition: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(default)]
    pub signals: Option<Vec<String>>,
    /// `kernel[k][i][j]` -> probability per (next state, signal), row-major
    #[serde(default)]
    pub kernel: Option<Vec<Vec<Vec<Vec<f64>>>>>,
}

/// Probability rows are accepted when they sum to 1 within this tolerance,
/// then renormalized exactly.
const LOAD_TOL: f64 = 1e-9;

#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for InputError {}

pub fn load_game_file(path: &Path) -> Result<GameFile, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let file: GameFile = serde_json::from_str(&text)
        .map_err(|e| InputError(format!("malformed game file {}: {e}", path.display())))?;
    validate_shape(&file)?;
    Ok(file)
}

fn validate_shape(file: &GameFile) -> Result<(), InputError> {
    let k = file.states.len();
    if k == 0 {
        return Err(InputError("game file declares no states".into()));
    }
    for (name, len) in [("actions1", file.actions1.len()), ("actions2", file.actions2.len()),
                        ("payoff", file.payoff.len()), ("transition", file.transition.len())] {
        if len != k {
            return Err(InputError(format!("{name} length {len} does not match {k} states")));
        }
    }
    for state in 0..k {
        let (m, n) = (file.actions1[state], file.actions2[state]);
        if m == 0 || n == 0 {
            return Err(InputError(format!("state {state} has an empty action set")));
        }
        if file.payoff[state].len() != m || file.transition[state].len() != m {
            return Err(InputError(format!("state {state}: payoff/transition rows disagree with actions1")));
        }
        for i in 0..m {
            if file.payoff[state][i].len() != n || file.transition[state][i].len() != n {
                return Err(InputError(format!("state {state}: payoff/transition columns disagree with actions2")));
            }
        }
    }
    if file.signals.is_some() != file.kernel.is_some() {
        return Err(InputError("hidden games need both \"signals\" and \"kernel\"".into()));
    }
    Ok(())
}

fn normalize_row(row: &[f64], what: &str) -> Result<Vec<f64>, InputError> {
    if row.iter().any(|&p| p < -LOAD_TOL || !p.is_finite()) {
        return Err(InputError(format!("negative probability in {what}")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > LOAD_TOL {
        return Err(InputError(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(row.iter().map(|&p| p.max(0.0) / sum).collect())
}

pub fn to_finite_game(file: &GameFile) -> Result<FiniteGame, InputError> {
    let k = file.states.len();
    let mut transition = Vec::with_capacity(k);
    for state in 0..k {
        let mut per_i = Vec::new();
        for i in 0..file.actions1[state] {
            let mut per_j = Vec::new();
            for j in 0..file.actions2[state] {
                let row = &file.transition[state][i][j];
                if row.len() != k {
                    return Err(InputError(format!(
                        "transition row at ({state},{i},{j}) has length {}, expected {k}",
                        row.len()
                    )));
                }
                per_j.push(normalize_row(row, &format!("transition row ({state},{i},{j})"))?);
            }
            per_i.push(per_j);
        }
        transition.push(per_i);
    }
    FiniteGame::new(file.payoff.clone(), transition).map_err(|e| InputError(e.to_string()))
}

pub fn to_hidden_game(file: &GameFile) -> Result<HiddenGameSpec, InputError> {
    let signals = file
        .signals
        .as_ref()
        .ok_or_else(|| InputError("game file has no \"signals\" section".into()))?;
    let kernel_in = file
        .kernel
        .as_ref()
        .ok_or_else(|| InputError("game file has no \"kernel\" section".into()))?;
    let k = file.states.len();
    let num_signals = signals.len();
    if num_signals == 0 {
        return Err(InputError("empty signal set".into()));
    }
    // Hidden games need state-independent action sets.
    let (m, n) = (file.actions1[0], file.actions2[0]);
    if file.actions1.iter().any(|&a| a != m) || file.actions2.iter().any(|&a| a != n) {
        return Err(InputError(
            "hidden games require the same action counts in every state".into(),
        ));
    }
    let mut kernel = Vec::with_capacity(k);
    for state in 0..k {
        let mut per_i = Vec::new();
        for i in 0..m {
            let mut per_j = Vec::new();
            for j in 0..n {
                let row = &kernel_in[state][i][j];
                if row.len() != k * num_signals {
                    return Err(InputError(format!(
                        "kernel row at ({state},{i},{j}) has length {}, expected {}",
                        row.len(),
                        k * num_signals
                    )));
                }
                per_j.push(normalize_row(row, &format!("kernel row ({state},{i},{j})"))?);
            }
            per_i.push(per_j);
        }
        kernel.push(per_i);
    }
    HiddenGameSpec::new(num_signals, file.payoff.clone(), kernel)
        .map_err(|e| InputError(e.to_string()))
}
