//! Dense arrays and index sets over the coordinate space [R] x [T] x [T].
//!
//! Every analytic object in this crate — candidate roots z, function values
//! f(z), directional derivatives, mean out-weight bounds — is a real-valued
//! array indexed by a triple (r, alpha, beta): impact level r, counterparty
//! type alpha, and own type beta. [`CoordArray`] stores such an array
//! densely; [`CoordSet`] selects a subset of coordinates (shift sets, support
//! sets). All indices are 0-based in code; file formats and CLI flags use
//! 1-based indices and convert at the boundary.

use serde::{Deserialize, Serialize};

// ============================================================================
// CoordArray
// ============================================================================

/// A dense `R x T x T` array of reals indexed by (impact, counterparty type,
/// own type).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordArray {
    r_levels: usize,
    t_types: usize,
    data: Vec<f64>,
}

impl CoordArray {
    /// All-zero array of the given dimensions.
    pub fn zeros(r_levels: usize, t_types: usize) -> Self {
        Self {
            r_levels,
            t_types,
            data: vec![0.0; r_levels * t_types * t_types],
        }
    }

    /// Array with every coordinate set to `value`.
    pub fn constant(r_levels: usize, t_types: usize, value: f64) -> Self {
        Self {
            r_levels,
            t_types,
            data: vec![value; r_levels * t_types * t_types],
        }
    }

    /// Builds from a flat buffer laid out as `((r * T) + alpha) * T + beta`.
    ///
    /// Returns `None` when the buffer length does not match the dimensions.
    pub fn from_flat(r_levels: usize, t_types: usize, data: Vec<f64>) -> Option<Self> {
        if data.len() != r_levels * t_types * t_types {
            return None;
        }
        Some(Self {
            r_levels,
            t_types,
            data,
        })
    }

    pub fn r_levels(&self) -> usize {
        self.r_levels
    }

    pub fn t_types(&self) -> usize {
        self.t_types
    }

    /// Number of coordinates, `R * T * T`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn offset(&self, r: usize, alpha: usize, beta: usize) -> usize {
        debug_assert!(r < self.r_levels && alpha < self.t_types && beta < self.t_types);
        (r * self.t_types + alpha) * self.t_types + beta
    }

    #[inline]
    pub fn get(&self, r: usize, alpha: usize, beta: usize) -> f64 {
        self.data[self.offset(r, alpha, beta)]
    }

    #[inline]
    pub fn set(&mut self, r: usize, alpha: usize, beta: usize, value: f64) {
        let k = self.offset(r, alpha, beta);
        self.data[k] = value;
    }

    /// Flat view in `((r * T) + alpha) * T + beta` order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Iterates `((r, alpha, beta), value)` in flat order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        let t = self.t_types;
        self.data
            .iter()
            .enumerate()
            .map(move |(k, &v)| ((k / (t * t), (k / t) % t, k % t), v))
    }

    /// `max_k |self[k]|`.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_k |self[k] - other[k]|`.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// True when every coordinate of `self` is `<=` the matching coordinate
    /// of `other`.
    pub fn le(&self, other: &Self) -> bool {
        self.data.iter().zip(&other.data).all(|(a, b)| a <= b)
    }

    /// Coordinatewise `self + scale * other`.
    pub fn add_scaled(&self, other: &Self, scale: f64) -> Self {
        debug_assert_eq!(self.data.len(), other.data.len());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        Self {
            r_levels: self.r_levels,
            t_types: self.t_types,
            data,
        }
    }

    /// Coordinatewise minimum.
    pub fn min_with(&self, other: &Self) -> Self {
        debug_assert_eq!(self.data.len(), other.data.len());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.min(*b))
            .collect();
        Self {
            r_levels: self.r_levels,
            t_types: self.t_types,
            data,
        }
    }

    /// Coordinatewise maximum.
    pub fn max_with(&self, other: &Self) -> Self {
        debug_assert_eq!(self.data.len(), other.data.len());
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.max(*b))
            .collect();
        Self {
            r_levels: self.r_levels,
            t_types: self.t_types,
            data,
        }
    }
}

// ============================================================================
// CoordSet
// ============================================================================

/// A subset of the coordinate space, stored as sorted flat offsets.
///
/// Used for the shift sets of the stabilized solvers: the full space V, the
/// live set (coordinates with positive mean out-weight), and caller-chosen
/// shock sets I.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordSet {
    r_levels: usize,
    t_types: usize,
    members: Vec<usize>,
}

impl CoordSet {
    /// Empty set over the given dimensions.
    pub fn empty(r_levels: usize, t_types: usize) -> Self {
        Self {
            r_levels,
            t_types,
            members: Vec::new(),
        }
    }

    /// The full coordinate space V = [R] x [T] x [T].
    pub fn full(r_levels: usize, t_types: usize) -> Self {
        Self {
            r_levels,
            t_types,
            members: (0..r_levels * t_types * t_types).collect(),
        }
    }

    /// Builds from (r, alpha, beta) triples, ignoring duplicates.
    ///
    /// Returns `None` if any triple is out of bounds.
    pub fn from_triples(
        r_levels: usize,
        t_types: usize,
        triples: &[(usize, usize, usize)],
    ) -> Option<Self> {
        let mut members: Vec<usize> = triples
            .iter()
            .map(|&(r, alpha, beta)| {
                (r < r_levels && alpha < t_types && beta < t_types)
                    .then(|| (r * t_types + alpha) * t_types + beta)
            })
            .collect::<Option<_>>()?;
        members.sort_unstable();
        members.dedup();
        Some(Self {
            r_levels,
            t_types,
            members,
        })
    }

    pub fn r_levels(&self) -> usize {
        self.r_levels
    }

    pub fn t_types(&self) -> usize {
        self.t_types
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, r: usize, alpha: usize, beta: usize) -> bool {
        let k = (r * self.t_types + alpha) * self.t_types + beta;
        self.members.binary_search(&k).is_ok()
    }

    /// Flat offsets of the members, sorted ascending.
    pub fn offsets(&self) -> &[usize] {
        &self.members
    }

    /// Iterates members as (r, alpha, beta) triples.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let t = self.t_types;
        self.members
            .iter()
            .map(move |&k| (k / (t * t), (k / t) % t, k % t))
    }

    /// True when every member of `self` is a member of `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.members.iter().all(|k| other.members.binary_search(k).is_ok())
    }

    /// Indicator array: 1.0 on members, 0.0 elsewhere.
    pub fn indicator(&self) -> CoordArray {
        let mut out = CoordArray::zeros(self.r_levels, self.t_types);
        for &k in &self.members {
            out.as_mut_slice()[k] = 1.0;
        }
        out
    }
}
