//! Persistence summaries of a connectome.
//!
//! Two summaries are produced: the spanning-tree persistence vector (weights of
//! edges left out of a maximum spanning tree) and the dimension-1 diagram of
//! the Vietoris-Rips filtration on `1 - M`.

mod io;
mod pgh;
mod reduction;
mod rips;

pub use io::{read_diagram_csv, read_vector_csv, write_diagram_csv, write_vector_csv};
pub use pgh::{maximum_spanning_tree, pgh_decomposition, pgh_persistence_vector, Edge, PghDecomposition, WeightedGraph};
pub use reduction::{reduce_filtration, FiltrationPairs, Simplex};
pub use rips::{rips_filtration, vr_h1_diagram, vr_h1_from_dissimilarity};

use crate::error::{Error, Result};

/// Ascending list of non-tree edge weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceVector {
    deaths: Vec<f64>,
}

impl PersistenceVector {
    /// Sorts the input; rejects non-finite values.
    pub fn new(mut deaths: Vec<f64>) -> Result<Self> {
        if let Some(v) = deaths.iter().find(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite persistence value {v}")));
        }
        deaths.sort_by(f64::total_cmp);
        Ok(Self { deaths })
    }

    pub fn deaths(&self) -> &[f64] {
        &self.deaths
    }

    pub fn len(&self) -> usize {
        self.deaths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deaths.is_empty()
    }
}

/// A (birth, death) pair with `death > birth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of diagram points, kept in canonical (birth, death) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    /// Validates finiteness and `death >= birth`; zero-persistence pairs are dropped.
    pub fn new(points: Vec<DiagramPoint>) -> Result<Self> {
        for p in &points {
            if !p.birth.is_finite() || !p.death.is_finite() {
                return Err(Error::data(format!("non-finite diagram point ({}, {})", p.birth, p.death)));
            }
            if p.death < p.birth {
                return Err(Error::data(format!("death {} before birth {}", p.death, p.birth)));
            }
        }
        let mut points: Vec<DiagramPoint> = points.into_iter().filter(|p| p.death > p.birth).collect();
        points.sort_by(|a, b| a.birth.total_cmp(&b.birth).then(a.death.total_cmp(&b.death)));
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(b, d)| DiagramPoint::new(b, d)).collect())
    }

    pub fn points(&self) -> &[DiagramPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
