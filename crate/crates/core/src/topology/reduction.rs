//! Column reduction of a filtered boundary matrix over Z/2.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A simplex with its filtration value. Vertices are kept ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<usize>,
    pub value: f64,
}

impl Simplex {
    pub fn new(mut vertices: Vec<usize>, value: f64) -> Self {
        vertices.sort_unstable();
        Self { vertices, value }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Persistence pairing of a filtration, by position in filtration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FiltrationPairs {
    /// `(birth, death)` positions; the class lives in dimension `dim(birth)`.
    pub pairs: Vec<(usize, usize)>,
    /// Positive simplices that are never killed.
    pub essential: Vec<usize>,
}

/// Symmetric difference of two ascending index lists.
fn add_columns(target: &mut Vec<u32>, other: &[u32]) {
    let mut out = Vec::with_capacity(target.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            std::cmp::Ordering::Less => {
                out.push(target[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&target[i..]);
    out.extend_from_slice(&other[j..]);
    *target = out;
}

/// Reduce boundary columns, highest dimension first, clearing columns whose
/// simplex already appeared as a pivot one dimension up.
///
/// `columns[j]` lists the ascending positions of the faces of simplex `j`;
/// `dims[j]` is its dimension. Columns of dimension 0 are empty.
pub(crate) fn reduce_columns(columns: Vec<Vec<u32>>, dims: &[usize]) -> FiltrationPairs {
    let n = columns.len();
    let max_dim = dims.iter().copied().max().unwrap_or(0);
    let mut columns = columns;
    let mut pivot_owner: Vec<u32> = vec![u32::MAX; n];
    let mut cleared = vec![false; n];
    let mut is_death = vec![false; n];
    let mut pairs = Vec::new();

    for dim in (1..=max_dim).rev() {
        for j in 0..n {
            if dims[j] != dim {
                continue;
            }
            if cleared[j] {
                columns[j].clear();
                continue;
            }
            let mut col = std::mem::take(&mut columns[j]);
            while let Some(&low) = col.last() {
                let owner = pivot_owner[low as usize];
                if owner == u32::MAX {
                    break;
                }
                add_columns(&mut col, &columns[owner as usize]);
            }
            if let Some(&low) = col.last() {
                pivot_owner[low as usize] = j as u32;
                cleared[low as usize] = true;
                is_death[j] = true;
                pairs.push((low as usize, j));
            }
            columns[j] = col;
        }
    }

    let born: std::collections::HashSet<usize> = pairs.iter().map(|p| p.0).collect();
    let essential = (0..n).filter(|j| !is_death[*j] && !born.contains(j)).collect();
    pairs.sort_unstable();
    FiltrationPairs { pairs, essential }
}

/// Reduce an explicit filtration. Simplices must be listed in filtration
/// order with every face before its cofaces.
pub fn reduce_filtration(simplices: &[Simplex]) -> Result<FiltrationPairs> {
    let mut position: HashMap<&[usize], u32> = HashMap::with_capacity(simplices.len());
    for (i, s) in simplices.iter().enumerate() {
        if s.vertices.is_empty() {
            return Err(Error::arg("empty simplex"));
        }
        if position.insert(&s.vertices, i as u32).is_some() {
            return Err(Error::arg(format!("duplicate simplex {:?}", s.vertices)));
        }
    }
    let mut columns = Vec::with_capacity(simplices.len());
    let mut dims = Vec::with_capacity(simplices.len());
    for (i, s) in simplices.iter().enumerate() {
        let mut col = Vec::new();
        if s.dim() > 0 {
            for skip in 0..s.vertices.len() {
                let face: Vec<usize> =
                    s.vertices.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, &v)| v).collect();
                match position.get(face.as_slice()) {
                    Some(&f) if (f as usize) < i => col.push(f),
                    Some(_) => return Err(Error::arg(format!("face {face:?} listed after {:?}", s.vertices))),
                    None => return Err(Error::arg(format!("missing face {face:?} of {:?}", s.vertices))),
                }
            }
        }
        col.sort_unstable();
        columns.push(col);
        dims.push(s.dim());
    }
    Ok(reduce_columns(columns, &dims))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filled_triangle() {
        let s = vec![
            Simplex::new(vec![0], 0.0),
            Simplex::new(vec![1], 0.0),
            Simplex::new(vec![2], 0.0),
            Simplex::new(vec![0, 1], 1.0),
            Simplex::new(vec![1, 2], 1.0),
            Simplex::new(vec![0, 2], 2.0),
            Simplex::new(vec![0, 1, 2], 3.0),
        ];
        let r = reduce_filtration(&s).unwrap();
        // two H0 deaths, one H1 pair (edge 5 killed by triangle 6), one essential vertex
        assert_eq!(r.pairs, vec![(1, 3), (2, 4), (5, 6)]);
        assert_eq!(r.essential, vec![0]);
    }

    #[test]
    fn rejects_out_of_order_faces() {
        let s = vec![Simplex::new(vec![0, 1], 1.0), Simplex::new(vec![0], 0.0), Simplex::new(vec![1], 0.0)];
        assert!(reduce_filtration(&s).is_err());
    }
}
