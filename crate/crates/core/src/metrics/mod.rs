//! Distances between consecutive topological summaries.

pub mod assignment;
mod kernels;
mod matching;

pub use kernels::{heat_distance, heat_kernel, sliced_wasserstein_distance, sliced_wasserstein_kernel};
pub use matching::{bottleneck_distance, wasserstein_distance};

use std::fmt;
use std::str::FromStr;

use crate::connectome::Connectome;
use crate::error::{Error, Result};
use crate::topology::{pgh_persistence_vector, vr_h1_diagram, PersistenceDiagram, PersistenceVector};

pub const DEFAULT_WD_ORDER: f64 = 2.0;
pub const DEFAULT_HK_SIGMA: f64 = 0.1;
pub const DEFAULT_SWK_DIRECTIONS: usize = 50;
pub const DEFAULT_SWK_ORDER: f64 = 1.0;
pub const DEFAULT_SWK_SCALE: f64 = 1.0;

/// 1-Wasserstein distance between sorted persistence vectors.
///
/// The shorter vector is padded with zeros at its (sorted) front, so a missing
/// cycle counts as persistence 0.
pub fn top_distance(u: &PersistenceVector, v: &PersistenceVector) -> f64 {
    let (a, b) = (u.deaths(), v.deaths());
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let pad = long.len() - short.len();
    let head: f64 = long[..pad].iter().map(|x| x.abs()).sum();
    head + short.iter().zip(&long[pad..]).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Which distance drives the topological signal, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceKind {
    Top,
    Wasserstein { p: f64 },
    Bottleneck,
    Heat { sigma: f64 },
    SlicedWasserstein { directions: usize, p: f64, tau: f64 },
}

impl DistanceKind {
    pub fn wasserstein() -> Self {
        DistanceKind::Wasserstein { p: DEFAULT_WD_ORDER }
    }

    pub fn heat() -> Self {
        DistanceKind::Heat { sigma: DEFAULT_HK_SIGMA }
    }

    pub fn sliced() -> Self {
        DistanceKind::SlicedWasserstein {
            directions: DEFAULT_SWK_DIRECTIONS,
            p: DEFAULT_SWK_ORDER,
            tau: DEFAULT_SWK_SCALE,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            DistanceKind::Top => "TOP",
            DistanceKind::Wasserstein { .. } => "WD",
            DistanceKind::Bottleneck => "BD",
            DistanceKind::Heat { .. } => "HK",
            DistanceKind::SlicedWasserstein { .. } => "SWK",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistanceKind::Wasserstein { p } if !(p >= 1.0) => Err(Error::arg(format!("WD order must be >= 1, got {p}"))),
            DistanceKind::Heat { sigma } if !(sigma > 0.0) => Err(Error::arg(format!("HK sigma must be > 0, got {sigma}"))),
            DistanceKind::SlicedWasserstein { directions, p, tau } => {
                if directions == 0 {
                    Err(Error::arg("SWK needs at least one direction"))
                } else if !(p >= 1.0) {
                    Err(Error::arg(format!("SWK order must be >= 1, got {p}")))
                } else if !(tau > 0.0) {
                    Err(Error::arg(format!("SWK scale must be > 0, got {tau}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Whether this kind compares persistence vectors rather than diagrams.
    pub fn uses_vector(&self) -> bool {
        matches!(self, DistanceKind::Top)
    }

    /// The summary of `m` this distance consumes.
    pub fn summarize(&self, m: &Connectome) -> TopoSummary {
        if self.uses_vector() {
            TopoSummary::Vector(pgh_persistence_vector(m))
        } else {
            TopoSummary::Diagram(vr_h1_diagram(m))
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    /// Accepts the tag in either case; parameters take their defaults.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "top" => Ok(DistanceKind::Top),
            "wd" => Ok(DistanceKind::wasserstein()),
            "bd" => Ok(DistanceKind::Bottleneck),
            "hk" => Ok(DistanceKind::heat()),
            "swk" => Ok(DistanceKind::sliced()),
            other => Err(Error::arg(format!("unknown distance kind '{other}'"))),
        }
    }
}

/// Per-epoch topological signature of a connectome.
#[derive(Debug, Clone, PartialEq)]
pub enum TopoSummary {
    Vector(PersistenceVector),
    Diagram(PersistenceDiagram),
}

/// Distance between two summaries of the kind's type.
pub fn summary_distance(kind: &DistanceKind, a: &TopoSummary, b: &TopoSummary) -> Result<f64> {
    kind.validate()?;
    match (kind, a, b) {
        (DistanceKind::Top, TopoSummary::Vector(u), TopoSummary::Vector(v)) => Ok(top_distance(u, v)),
        (DistanceKind::Top, _, _) => Err(Error::arg("TOP compares persistence vectors")),
        (_, TopoSummary::Diagram(x), TopoSummary::Diagram(y)) => match *kind {
            DistanceKind::Wasserstein { p } => Ok(wasserstein_distance(x, y, p)),
            DistanceKind::Bottleneck => Ok(bottleneck_distance(x, y)),
            DistanceKind::Heat { sigma } => heat_distance(x, y, sigma),
            DistanceKind::SlicedWasserstein { directions, p, .. } => sliced_wasserstein_distance(x, y, directions, p),
            DistanceKind::Top => unreachable!(),
        },
        (k, _, _) => Err(Error::arg(format!("{k} compares persistence diagrams"))),
    }
}

/// `delta_t` between the previous and current epoch; the first epoch reports 0.
pub fn epoch_distance(kind: &DistanceKind, prev: Option<&TopoSummary>, cur: &TopoSummary) -> Result<f64> {
    match prev {
        Some(prev) => summary_distance(kind, prev, cur),
        None => {
            let ok = matches!((kind.uses_vector(), cur), (true, TopoSummary::Vector(_)) | (false, TopoSummary::Diagram(_)));
            if ok {
                kind.validate().map(|_| 0.0)
            } else {
                Err(Error::arg(format!("summary does not match distance kind {kind}")))
            }
        }
    }
}
