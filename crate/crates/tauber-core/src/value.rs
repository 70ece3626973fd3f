use crate::error::{Error, Result};

/// A bounded real function on a finite ordered set of states.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector {
    entries: Vec<f64>,
}

impl ValueVector {
    /// Builds a value vector, rejecting non-finite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry {bad} in value vector"
            )));
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![0.0; dim],
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            entries: vec![c; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sup_distance(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|x| alpha * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn shift(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|x| x + c).collect(),
        }
    }

    /// Entrywise `self <= other` up to `slack`.
    pub fn le_entrywise(&self, other: &Self, slack: f64) -> bool {
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| *a <= *b + slack)
    }
}

impl From<Vec<f64>> for ValueVector {
    fn from(entries: Vec<f64>) -> Self {
        Self { entries }
    }
}
