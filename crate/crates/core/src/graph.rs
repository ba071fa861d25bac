//! Follower communication graphs.
//!
//! Followers are indexed `0..n` internally (follower `i` here is vehicle
//! `i + 1` in the platoon; the leader is vehicle 0 and never appears as a
//! node). `a_ij = 1` means follower `i` receives follower `j`'s state, so
//! information flows along the edge `j -> i`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::{Error, Result};

/// The four unidirectional topologies used throughout the literature on
/// platoons: predecessor following, predecessor-leader following, and their
/// two-predecessor variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TopologyKind {
    #[serde(rename = "PF")]
    Pf,
    #[serde(rename = "PLF")]
    Plf,
    #[serde(rename = "TPF")]
    Tpf,
    #[serde(rename = "TPLF")]
    Tplf,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 4] = [Self::Pf, Self::Plf, Self::Tpf, Self::Tplf];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pf => "PF",
            Self::Plf => "PLF",
            Self::Tpf => "TPF",
            Self::Tplf => "TPLF",
        }
    }

    fn two_predecessors(self) -> bool {
        matches!(self, Self::Tpf | Self::Tplf)
    }

    fn leader_broadcast(self) -> bool {
        matches!(self, Self::Plf | Self::Tplf)
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PF" => Ok(Self::Pf),
            "PLF" => Ok(Self::Plf),
            "TPF" => Ok(Self::Tpf),
            "TPLF" => Ok(Self::Tplf),
            _ => Err(Error::UnknownTopologyKind(s.to_string())),
        }
    }
}

/// Follower adjacency plus leader pinning flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Topology {
    adjacency: Vec<Vec<u8>>,
    pinning: Vec<u8>,
}

impl Topology {
    /// Builds a topology from explicit 0/1 rows. Weighted entries and
    /// self-loops are rejected.
    pub fn new(adjacency: Vec<Vec<u8>>, pinning: Vec<u8>) -> Result<Self> {
        let n = adjacency.len();
        if n == 0 {
            return Err(Error::InvalidTopology("a platoon needs at least one follower".into()));
        }
        if pinning.len() != n {
            return Err(Error::InvalidTopology(format!(
                "pinning vector has {} entries for {n} followers",
                pinning.len()
            )));
        }
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidTopology(format!(
                    "adjacency row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|&a| a > 1) {
                return Err(Error::InvalidTopology(format!(
                    "adjacency entry ({}, {}) = {} is not 0 or 1",
                    i + 1,
                    j + 1,
                    row[j]
                )));
            }
            if row[i] != 0 {
                return Err(Error::InvalidTopology(format!("self-loop at follower {}", i + 1)));
            }
        }
        if let Some(i) = pinning.iter().position(|&p| p > 1) {
            return Err(Error::InvalidTopology(format!(
                "pinning entry {} = {} is not 0 or 1",
                i + 1,
                pinning[i]
            )));
        }
        Ok(Self { adjacency, pinning })
    }

    /// One of the named unidirectional topologies for `n` followers.
    ///
    /// In the two-predecessor kinds, follower 2's missing second predecessor
    /// is the leader, so it is pinned as well.
    pub fn standard(kind: TopologyKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("a platoon needs at least one follower".into()));
        }
        let mut adjacency = vec![vec![0u8; n]; n];
        let mut pinning = vec![0u8; n];
        for (i, row) in adjacency.iter_mut().enumerate() {
            if i >= 1 {
                row[i - 1] = 1;
            }
            if kind.two_predecessors() && i >= 2 {
                row[i - 2] = 1;
            }
        }
        pinning[0] = 1;
        if kind.two_predecessors() && n >= 2 {
            pinning[1] = 1;
        }
        if kind.leader_broadcast() {
            pinning.iter_mut().for_each(|p| *p = 1);
        }
        Ok(Self { adjacency, pinning })
    }

    pub fn len(&self) -> usize {
        self.pinning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pinning.is_empty()
    }

    pub fn adjacency_rows(&self) -> &[Vec<u8>] {
        &self.adjacency
    }

    pub fn pinning(&self) -> &[u8] {
        &self.pinning
    }

    /// Whether follower `i` receives follower `j`'s state.
    pub fn receives(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j] == 1
    }

    pub fn is_pinned(&self, i: usize) -> bool {
        self.pinning[i] == 1
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.adjacency[i].iter().map(|&a| a as usize).sum()
    }

    /// `d_ii + p_ii` for every follower.
    pub fn degree_plus_pin(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| (self.in_degree(i) + self.pinning[i] as usize) as f64)
            .collect()
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.adjacency[i][j] as f64)
    }

    /// `L = D - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.in_degree(i) as f64
            } else {
                -(self.adjacency[i][j] as f64)
            }
        })
    }

    /// `G = L + P`, the matrix coupling the followers' tracking errors.
    pub fn grounded_matrix(&self) -> DMatrix<f64> {
        let mut g = self.laplacian();
        for (i, &p) in self.pinning.iter().enumerate() {
            g[(i, i)] += p as f64;
        }
        g
    }

    /// Entry `i` is true when follower `i` hears from at least one other node.
    pub fn pinning_condition(&self) -> Vec<bool> {
        self.degree_plus_pin().into_iter().map(|d| d > 0.0).collect()
    }

    pub fn is_dag(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Kahn's algorithm with a min-ordered frontier: among the followers whose
    /// sources have all been placed, the smallest index goes next.
    pub fn topological_order(&self) -> Result<Permutation> {
        let n = self.len();
        let mut pending: Vec<usize> = (0..n).map(|i| self.in_degree(i)).collect();
        let mut frontier: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(j)) = frontier.pop() {
            order.push(j);
            for (i, count) in pending.iter_mut().enumerate() {
                if self.receives(i, j) {
                    *count -= 1;
                    if *count == 0 {
                        frontier.push(Reverse(i));
                    }
                }
            }
        }
        if order.len() < n {
            return Err(Error::CyclicGraph {
                cycle: self.witness_cycle(&pending),
            });
        }
        Ok(Permutation { order })
    }

    // Every follower left with pending > 0 receives from another such follower,
    // so walking upstream inside that set must revisit a node.
    fn witness_cycle(&self, pending: &[usize]) -> Vec<usize> {
        let n = self.len();
        let stuck = |i: usize| pending[i] > 0;
        let start = (0..n).find(|&i| stuck(i)).expect("cyclic graph has a stuck node");
        let mut seen_at = vec![usize::MAX; n];
        let mut walk = Vec::new();
        let mut node = start;
        while seen_at[node] == usize::MAX {
            seen_at[node] = walk.len();
            walk.push(node);
            node = (0..n)
                .find(|&j| self.receives(node, j) && stuck(j))
                .expect("stuck node has a stuck source");
        }
        // `walk` goes against the information flow; reverse the loop part.
        let mut cycle = walk[seen_at[node]..].to_vec();
        cycle.reverse();
        cycle
    }
}

/// An ordering `{s_1, ..., s_N}` of the followers (stored 0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &s in &order {
            if s >= n || seen[s] {
                return Err(Error::InvalidParameter(format!(
                    "{order:?} is not a permutation of 0..{n}"
                )));
            }
            seen[s] = true;
        }
        Ok(Self { order })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            order: (0..n).collect(),
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    /// The order with 1-based follower labels, as they are usually written.
    pub fn one_based(&self) -> Vec<usize> {
        self.order.iter().map(|s| s + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `Q = [e_{s_1}, ..., e_{s_N}]`, so that `Q^T M Q` reorders the rows and
    /// columns of `M` by the permutation.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut q = DMatrix::zeros(n, n);
        for (k, &s) in self.order.iter().enumerate() {
            q[(s, k)] = 1.0;
        }
        q
    }

    /// `Q^{-1} M Q`; `Q` is orthogonal so this is `Q^T M Q`.
    pub fn similarity(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.len(), |i, j| m[(self.order[i], self.order[j])])
    }
}
