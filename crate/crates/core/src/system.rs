//! N-level system model: level energies, transition dipoles and the derived
//! per-transition quantities (sign, resonant frequency, coupling ratio).
//!
//! All quantities are in atomic units with ħ = 1. Energies may be given
//! relative to an arbitrary zero; only differences enter any formula.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type LevelId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub id: LevelId,
    pub label: String,
    #[serde(rename = "energy_au")]
    pub energy: f64,
}

/// Sign of `E_i - E_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// A transition between two levels: direction sign and resonant frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub sign: Sign,
    pub omega: f64,
}

/// Input format accepted by [`load_system`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemFormat {
    Json,
}

/// Immutable N-level system. Dipoles are stored densely and are symmetric with
/// a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSystem {
    levels: Vec<Level>,
    dipoles: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemFile {
    levels: Vec<Level>,
    #[serde(default)]
    dipoles: Vec<DipoleEntry>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct DipoleEntry {
    i: LevelId,
    j: LevelId,
    mu_au: f64,
}

impl LevelSystem {
    /// Builds a system from levels (any order) and a list of `(i, j, mu)`
    /// couplings. A pair may be listed in both orders only with equal values.
    pub fn new(mut levels: Vec<Level>, dipoles: &[(LevelId, LevelId, f64)]) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::Load(format!(
                "a system needs at least two levels, got {}",
                levels.len()
            )));
        }
        levels.sort_by_key(|l| l.id);
        for (k, level) in levels.iter().enumerate() {
            if k > 0 && levels[k - 1].id == level.id {
                return Err(Error::Load(format!("duplicate level id {}", level.id)));
            }
            if level.id != k {
                return Err(Error::Load(format!(
                    "level ids must be 0..{}; found id {} (\"{}\")",
                    levels.len() - 1,
                    level.id,
                    level.label
                )));
            }
            if !level.energy.is_finite() {
                return Err(Error::Load(format!(
                    "level {} (\"{}\") has non-finite energy",
                    level.id, level.label
                )));
            }
        }

        let n = levels.len();
        let mut seen: BTreeMap<(LevelId, LevelId), f64> = BTreeMap::new();
        for &(i, j, mu) in dipoles {
            if i >= n || j >= n {
                return Err(Error::Load(format!(
                    "dipole ({i}, {j}) refers to a level outside 0..{}",
                    n - 1
                )));
            }
            if !mu.is_finite() {
                return Err(Error::Load(format!("dipole ({i}, {j}) is not finite")));
            }
            if i == j {
                if mu != 0.0 {
                    return Err(Error::Load(format!(
                        "diagonal dipole ({i}, {i}) = {mu} is not allowed; permanent moments are not modelled"
                    )));
                }
                continue;
            }
            let key = (i.min(j), i.max(j));
            match seen.get(&key) {
                Some(&prev) if prev != mu => {
                    return Err(Error::Load(format!(
                        "dipole matrix is not symmetric: mu({i}, {j}) = {mu} but mu({j}, {i}) = {prev}"
                    )));
                }
                _ => {
                    seen.insert(key, mu);
                }
            }
        }

        let mut matrix = vec![0.0; n * n];
        for (&(i, j), &mu) in &seen {
            matrix[i * n + j] = mu;
            matrix[j * n + i] = mu;
        }
        Ok(LevelSystem {
            levels,
            dipoles: matrix,
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn energy(&self, i: LevelId) -> f64 {
        self.levels[i].energy
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn dipole(&self, i: LevelId, j: LevelId) -> f64 {
        self.dipoles[i * self.len() + j]
    }

    /// Nonzero couplings as `(i, j, mu)` with `i < j`, in row-major order.
    pub fn couplings(&self) -> Vec<(LevelId, LevelId, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let mu = self.dipole(i, j);
                if mu != 0.0 {
                    out.push((i, j, mu));
                }
            }
        }
        out
    }

    /// Largest resonant frequency among coupled pairs.
    pub fn max_coupled_frequency(&self) -> f64 {
        self.couplings()
            .iter()
            .map(|&(i, j, _)| (self.energy(i) - self.energy(j)).abs())
            .fold(0.0, f64::max)
    }

    fn check_id(&self, i: LevelId) -> Result<()> {
        if i >= self.len() {
            Err(Error::InvalidPair(format!(
                "level {i} does not exist (system has {} levels)",
                self.len()
            )))
        } else {
            Ok(())
        }
    }

    /// `s_ij = sign(E_i - E_j)` and `omega_ij = |E_i - E_j|`.
    pub fn transition(&self, i: LevelId, j: LevelId) -> Result<Transition> {
        self.check_id(i)?;
        self.check_id(j)?;
        if i == j {
            return Err(Error::InvalidPair(format!(
                "a transition needs two distinct levels, got ({i}, {i})"
            )));
        }
        let diff = self.energy(i) - self.energy(j);
        if diff == 0.0 {
            return Err(Error::Degenerate {
                i,
                j,
                energy: self.energy(i),
            });
        }
        Ok(Transition {
            sign: if diff > 0.0 { Sign::Plus } else { Sign::Minus },
            omega: diff.abs(),
        })
    }

    /// `R_ij = mu_ij / mu_alpha_beta`.
    pub fn coupling_ratio(&self, pair: &TransitionPair, i: LevelId, j: LevelId) -> Result<f64> {
        self.check_id(i)?;
        self.check_id(j)?;
        Ok(self.dipole(i, j) / self.dipole(pair.alpha, pair.beta))
    }

    /// Perturbing levels attached to each selected level. A level coupled to
    /// both alpha and beta appears in both lists.
    pub fn perturber_sets(&self, pair: &TransitionPair) -> Result<PerturberSets> {
        let mut sets = PerturberSets::default();
        for k in 0..self.len() {
            if k == pair.alpha || k == pair.beta {
                continue;
            }
            if self.dipole(pair.alpha, k) != 0.0 {
                self.transition(pair.alpha, k)?;
                sets.alpha_side.push(k);
            }
            if self.dipole(pair.beta, k) != 0.0 {
                self.transition(pair.beta, k)?;
                sets.beta_side.push(k);
            }
        }
        Ok(sets)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SystemFile {
            levels: self.levels.clone(),
            dipoles: self
                .couplings()
                .into_iter()
                .map(|(i, j, mu_au)| DipoleEntry { i, j, mu_au })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// Parses a system description. See the crate README for the JSON layout.
pub fn load_system<R: Read>(mut source: R, format: SystemFormat) -> Result<LevelSystem> {
    match format {
        SystemFormat::Json => {
            let mut text = String::new();
            source.read_to_string(&mut text)?;
            let file: SystemFile = serde_json::from_str(&text)
                .map_err(|e| Error::Load(format!("malformed system JSON: {e}")))?;
            let dipoles: Vec<_> = file.dipoles.iter().map(|d| (d.i, d.j, d.mu_au)).collect();
            LevelSystem::new(file.levels, &dipoles)
        }
    }
}

/// The two selected levels whose population exchange is being driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionPair {
    pub alpha: LevelId,
    pub beta: LevelId,
}

impl TransitionPair {
    pub fn new(sys: &LevelSystem, alpha: LevelId, beta: LevelId) -> Result<Self> {
        sys.check_id(alpha)?;
        sys.check_id(beta)?;
        if alpha == beta {
            return Err(Error::InvalidPair(format!(
                "alpha and beta must differ (both are {alpha})"
            )));
        }
        if sys.dipole(alpha, beta) == 0.0 {
            return Err(Error::InvalidPair(format!(
                "levels {alpha} and {beta} are not directly coupled"
            )));
        }
        sys.transition(alpha, beta)?;
        Ok(TransitionPair { alpha, beta })
    }

    /// The other member of the pair.
    pub fn partner(&self, level: LevelId) -> LevelId {
        if level == self.alpha {
            self.beta
        } else {
            self.alpha
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PerturberSets {
    /// Levels coupled to alpha, excluding beta.
    pub alpha_side: Vec<LevelId>,
    /// Levels coupled to beta, excluding alpha.
    pub beta_side: Vec<LevelId>,
}

impl PerturberSets {
    pub fn is_empty(&self) -> bool {
        self.alpha_side.is_empty() && self.beta_side.is_empty()
    }
}
