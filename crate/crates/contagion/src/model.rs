//! Model specifications: probability-weighted atoms over weights, capital,
//! type, shock probability, and systemic importance.
//!
//! A [`ModelSpec`] is a finitary limiting distribution for a growing network:
//! each atom describes one kind of institution by its in/out weight matrices
//! (row = impact level r, column = counterparty type), its integer capital
//! (0 = initially defaulted, `inf` = never defaults), its own type, an
//! independent ex-post shock probability, and a systemic-importance score.
//! Keeping the distribution finitary makes every expectation in the analytic
//! layer an exact finite sum.
//!
//! Construction goes through [`validate_spec`]; a validated spec is immutable
//! and safe to share across threads. The two transforms the analysis applies
//! to specs — realizing ex-post shocks as capital-0 mass ([`ModelSpec::apply_shock`])
//! and embedding a 1-type subsystem into a larger network with out-weight
//! rescaling ([`embed_subsystem`]) — live here as well.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coord::{CoordArray, CoordSet};
use crate::error::SpecError;

/// Slack allowed when checking that atom probabilities sum to 1; sums within
/// this tolerance are renormalized exactly.
pub const MASS_TOL: f64 = 1e-12;

// ============================================================================
// Capital
// ============================================================================

/// A capital value: a nonnegative integer loss threshold, or infinite
/// (the institution never defaults).
///
/// The derived order places every finite value below `Infinite`, so capital
/// comparisons against accumulated integer losses read naturally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Capital {
    Finite(u64),
    Infinite,
}

impl Capital {
    pub fn is_zero(&self) -> bool {
        matches!(self, Capital::Finite(0))
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<u64> {
        match self {
            Capital::Finite(c) => Some(*c),
            Capital::Infinite => None,
        }
    }
}

impl fmt::Display for Capital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capital::Finite(c) => write!(f, "{c}"),
            Capital::Infinite => write!(f, "inf"),
        }
    }
}

// In spec files a capital is either a nonnegative integer or the string
// "inf".
impl Serialize for Capital {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Capital::Finite(c) => serializer.serialize_u64(*c),
            Capital::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Capital {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CapitalVisitor;

        impl Visitor<'_> for CapitalVisitor {
            type Value = Capital;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative integer or the string \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Capital, E> {
                Ok(Capital::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Capital, E> {
                u64::try_from(v)
                    .map(Capital::Finite)
                    .map_err(|_| E::custom("capital must be nonnegative"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Capital, E> {
                if v == "inf" {
                    Ok(Capital::Infinite)
                } else {
                    Err(E::custom(format!("unrecognized capital string {v:?}")))
                }
            }
        }

        deserializer.deserialize_any(CapitalVisitor)
    }
}

// ============================================================================
// Weight matrices
// ============================================================================

/// An `R x T` matrix of nonnegative weights; entry (r, alpha) is the weight
/// toward impact level r and counterparty type alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    r_levels: usize,
    t_types: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    fn from_rows(r_levels: usize, t_types: usize, rows: &[Vec<f64>]) -> Option<Self> {
        if rows.len() != r_levels || rows.iter().any(|row| row.len() != t_types) {
            return None;
        }
        Some(Self {
            r_levels,
            t_types,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// All-zero matrix (used when embedding installs cross-type columns the
    /// caller fills in later).
    pub fn zeros(r_levels: usize, t_types: usize) -> Self {
        Self {
            r_levels,
            t_types,
            data: vec![0.0; r_levels * t_types],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, alpha: usize) -> f64 {
        debug_assert!(r < self.r_levels && alpha < self.t_types);
        self.data[r * self.t_types + alpha]
    }

    fn set(&mut self, r: usize, alpha: usize, value: f64) {
        self.data[r * self.t_types + alpha] = value;
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.t_types).map(<[f64]>::to_vec).collect()
    }
}

// ============================================================================
// Atoms and validated specs
// ============================================================================

/// One probability-weighted atom of the limiting distribution. Type indices
/// are 0-based in code (`vtype` in `0..T`).
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub prob: f64,
    pub vtype: usize,
    pub in_weights: WeightMatrix,
    pub out_weights: WeightMatrix,
    pub capital: Capital,
    pub shock_prob: f64,
    pub importance: f64,
}

/// A validated model specification: dimensions R and T plus a nonempty atom
/// list with total mass exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    r_levels: usize,
    t_types: usize,
    atoms: Vec<Atom>,
}

impl ModelSpec {
    /// Number of impact levels R.
    pub fn r_levels(&self) -> usize {
        self.r_levels
    }

    /// Number of vertex types T.
    pub fn t_types(&self) -> usize {
        self.t_types
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Largest finite capital across atoms, if any atom has finite capital.
    pub fn max_finite_capital(&self) -> Option<u64> {
        self.atoms.iter().filter_map(|a| a.capital.finite()).max()
    }

    /// Probability mass of capital-0 atoms, ignoring shock probabilities.
    pub fn initial_default_mass(&self) -> f64 {
        // fold from +0.0: an empty `Iterator::sum` yields -0.0
        self.atoms
            .iter()
            .filter(|a| a.capital.is_zero())
            .fold(0.0, |mass, a| mass + a.prob)
    }

    /// True when some atom carries a positive shock probability.
    pub fn has_shocks(&self) -> bool {
        self.atoms.iter().any(|a| a.shock_prob > 0.0)
    }

    /// Realizes ex-post shocks in the distribution: every atom with shock
    /// probability q > 0 and positive capital splits into a capital-0 copy
    /// with mass `prob * q` and an unshocked copy with mass `prob * (1 - q)`.
    /// Output atoms all have shock probability 0, so the transform is
    /// idempotent; total mass and all mean out-weights are preserved
    /// (shocks change capital, never weights).
    pub fn apply_shock(&self) -> ModelSpec {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            let q = atom.shock_prob;
            if q > 0.0 && !atom.capital.is_zero() {
                let shocked = Atom {
                    prob: atom.prob * q,
                    capital: Capital::Finite(0),
                    shock_prob: 0.0,
                    ..atom.clone()
                };
                let survived = Atom {
                    prob: atom.prob - shocked.prob,
                    shock_prob: 0.0,
                    ..atom.clone()
                };
                for piece in [shocked, survived] {
                    if piece.prob > 0.0 {
                        atoms.push(piece);
                    }
                }
            } else {
                atoms.push(Atom {
                    shock_prob: 0.0,
                    ..atom.clone()
                });
            }
        }
        ModelSpec {
            r_levels: self.r_levels,
            t_types: self.t_types,
            atoms,
        }
    }

    /// Mean out-weight array: `zeta[r, alpha, beta]` is the expected
    /// out-weight toward impact r and counterparty type alpha among type-beta
    /// institutions. Every candidate root is bounded above by this array.
    pub fn zeta(&self) -> CoordArray {
        let mut out = CoordArray::zeros(self.r_levels, self.t_types);
        for atom in &self.atoms {
            for r in 0..self.r_levels {
                for alpha in 0..self.t_types {
                    let cur = out.get(r, alpha, atom.vtype);
                    out.set(
                        r,
                        alpha,
                        atom.vtype,
                        cur + atom.prob * atom.out_weights.get(r, alpha),
                    );
                }
            }
        }
        out
    }

    /// Coordinates with positive mean out-weight. Only these can carry a
    /// positive root coordinate, making this the natural universe for shock
    /// sets.
    pub fn live_set(&self) -> CoordSet {
        let zeta = self.zeta();
        let triples: Vec<_> = zeta
            .iter()
            .filter(|&(_, v)| v > 0.0)
            .map(|(coord, _)| coord)
            .collect();
        CoordSet::from_triples(self.r_levels, self.t_types, &triples)
            .expect("zeta iterates in-bounds coordinates")
    }

    /// The raw (serializable) form, with 1-based type indices.
    pub fn to_raw(&self) -> RawSpec {
        RawSpec {
            description: None,
            r_levels: self.r_levels,
            t_types: self.t_types,
            atoms: self
                .atoms
                .iter()
                .map(|a| RawAtom {
                    prob: a.prob,
                    vtype: a.vtype + 1,
                    in_weights: a.in_weights.to_rows(),
                    out_weights: a.out_weights.to_rows(),
                    capital: a.capital,
                    shock_prob: a.shock_prob,
                    importance: a.importance,
                })
                .collect(),
        }
    }

    /// Parses and validates a spec from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self, SpecError> {
        let raw: RawSpec =
            serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        validate_spec(raw)
    }

    /// Reads, parses, and validates a spec file.
    pub fn from_path(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpecError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }
}

// ============================================================================
// Raw (file-format) specs
// ============================================================================

/// The on-disk shape of an atom. Type indices are 1-based in files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAtom {
    pub prob: f64,
    pub vtype: usize,
    pub in_weights: Vec<Vec<f64>>,
    pub out_weights: Vec<Vec<f64>>,
    pub capital: Capital,
    #[serde(default)]
    pub shock_prob: f64,
    #[serde(default = "default_importance")]
    pub importance: f64,
}

fn default_importance() -> f64 {
    1.0
}

/// The on-disk shape of a spec document: dimensions, atoms, and an optional
/// free-text description. A raw spec may carry partial mass while being
/// assembled (see [`embed_subsystem`]); it becomes a [`ModelSpec`] only
/// through [`validate_spec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(rename = "R")]
    pub r_levels: usize,
    #[serde(rename = "T")]
    pub t_types: usize,
    pub atoms: Vec<RawAtom>,
}

impl RawSpec {
    /// Total probability mass currently assigned.
    pub fn assigned_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.prob).sum()
    }
}

// ============================================================================
// Validation
// ============================================================================

fn check_probability(value: f64, what: &str) -> Result<(), SpecError> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(SpecError::NegativeValue(format!(
            "{what} = {value} is not a probability in [0, 1]"
        )));
    }
    Ok(())
}

/// Validates a raw spec document and produces an immutable [`ModelSpec`].
///
/// Checks: nonempty atom list; positive dimensions; every weight matrix
/// exactly R x T with finite nonnegative entries; type indices in range;
/// probabilities in [0, 1]; importance finite and nonnegative; total mass 1
/// within [`MASS_TOL`] (then renormalized exactly).
pub fn validate_spec(raw: RawSpec) -> Result<ModelSpec, SpecError> {
    if raw.atoms.is_empty() {
        return Err(SpecError::EmptyAtomList);
    }
    if raw.r_levels == 0 || raw.t_types == 0 {
        return Err(SpecError::ShapeMismatch(format!(
            "dimensions must be positive, got R = {}, T = {}",
            raw.r_levels, raw.t_types
        )));
    }

    let mut atoms = Vec::with_capacity(raw.atoms.len());
    for (idx, atom) in raw.atoms.iter().enumerate() {
        check_probability(atom.prob, &format!("atom {idx} prob"))?;
        check_probability(atom.shock_prob, &format!("atom {idx} shock_prob"))?;
        if !atom.importance.is_finite() || atom.importance < 0.0 {
            return Err(SpecError::NegativeValue(format!(
                "atom {idx} importance = {} must be finite and >= 0",
                atom.importance
            )));
        }
        if atom.vtype == 0 || atom.vtype > raw.t_types {
            return Err(SpecError::ShapeMismatch(format!(
                "atom {idx} vtype = {} out of range 1..={}",
                atom.vtype, raw.t_types
            )));
        }
        for (name, rows) in [("in_weights", &atom.in_weights), ("out_weights", &atom.out_weights)]
        {
            if let Some(bad) = rows.iter().flatten().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(SpecError::NegativeValue(format!(
                    "atom {idx} {name} entry {bad} must be finite and >= 0"
                )));
            }
        }
        let in_weights = WeightMatrix::from_rows(raw.r_levels, raw.t_types, &atom.in_weights)
            .ok_or_else(|| {
                SpecError::ShapeMismatch(format!(
                    "atom {idx} in_weights is not a {} x {} matrix",
                    raw.r_levels, raw.t_types
                ))
            })?;
        let out_weights = WeightMatrix::from_rows(raw.r_levels, raw.t_types, &atom.out_weights)
            .ok_or_else(|| {
                SpecError::ShapeMismatch(format!(
                    "atom {idx} out_weights is not a {} x {} matrix",
                    raw.r_levels, raw.t_types
                ))
            })?;
        atoms.push(Atom {
            prob: atom.prob,
            vtype: atom.vtype - 1,
            in_weights,
            out_weights,
            capital: atom.capital,
            shock_prob: atom.shock_prob,
            importance: atom.importance,
        });
    }

    let sum: f64 = atoms.iter().map(|a| a.prob).sum();
    if (sum - 1.0).abs() > MASS_TOL {
        return Err(SpecError::NonUnitMass { sum, tol: MASS_TOL });
    }
    for atom in &mut atoms {
        atom.prob /= sum;
    }

    Ok(ModelSpec {
        r_levels: raw.r_levels,
        t_types: raw.t_types,
        atoms,
    })
}

// ============================================================================
// Subsystem embedding
// ============================================================================

/// Inserts a 1-type subsystem into a larger (possibly partially assembled)
/// spec as type `new_type` (1-based), occupying `host_fraction` of the
/// target's mass.
///
/// Each subsystem atom arrives with its mass scaled by `host_fraction` and
/// its out-weights toward the subsystem divided by `host_fraction`: edge
/// probabilities are weight products over n, so a subsystem that now spans
/// only a `host_fraction` share of a larger population must compensate on one
/// side of each product to preserve its internal edge density. Rescaling the
/// out-weights is sufficient; in-weights carry over unchanged. Cross-type
/// weight columns are initialized to 0 for the caller to fill.
///
/// The target stays raw because assembly is typically mid-flight: its atoms
/// may cover less than unit mass until every subsystem is in place.
pub fn embed_subsystem(
    sub: &RawSpec,
    host_fraction: f64,
    new_type: usize,
    target: &RawSpec,
) -> Result<RawSpec, SpecError> {
    if sub.t_types != 1 {
        return Err(SpecError::ShapeMismatch(format!(
            "subsystem must have T = 1, got T = {}",
            sub.t_types
        )));
    }
    if sub.r_levels != target.r_levels {
        return Err(SpecError::ShapeMismatch(format!(
            "subsystem has R = {}, target has R = {}",
            sub.r_levels, target.r_levels
        )));
    }
    if new_type == 0 || new_type > target.t_types {
        return Err(SpecError::ShapeMismatch(format!(
            "new_type = {new_type} out of range 1..={}",
            target.t_types
        )));
    }
    if target.atoms.iter().any(|a| a.vtype == new_type) {
        return Err(SpecError::TypeCollision { new_type });
    }
    if !host_fraction.is_finite() || host_fraction <= 0.0 {
        return Err(SpecError::NegativeValue(format!(
            "host_fraction = {host_fraction} must be positive"
        )));
    }
    let available = 1.0 - target.assigned_mass();
    if host_fraction > available + MASS_TOL {
        return Err(SpecError::MassOverflow {
            host_fraction,
            available,
        });
    }

    let (r, t) = (target.r_levels, target.t_types);
    let col = new_type - 1;
    let mut out = target.clone();
    for atom in &sub.atoms {
        let mut in_weights = WeightMatrix::zeros(r, t);
        let mut out_weights = WeightMatrix::zeros(r, t);
        for row in 0..r {
            in_weights.set(row, col, atom.in_weights[row][0]);
            out_weights.set(row, col, atom.out_weights[row][0] / host_fraction);
        }
        out.atoms.push(RawAtom {
            prob: host_fraction * atom.prob,
            vtype: new_type,
            in_weights: in_weights.to_rows(),
            out_weights: out_weights.to_rows(),
            capital: atom.capital,
            shock_prob: atom.shock_prob,
            importance: atom.importance,
        });
    }
    Ok(out)
}
