use ndarray::ArrayView2;

use super::reduction::{reduce_columns, Simplex};
use super::{DiagramPoint, PersistenceDiagram};
use crate::connectome::Connectome;
use crate::error::{Error, Result};

#[derive(Clone, Copy)]
struct Entry {
    value: f64,
    dim: u8,
    verts: [u32; 3],
}

fn validate(d: &ArrayView2<'_, f64>) -> Result<usize> {
    let (r, c) = d.dim();
    if r != c {
        return Err(Error::arg(format!("dissimilarity must be square, got {r}x{c}")));
    }
    for i in 0..r {
        for j in (i + 1)..r {
            let v = d[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::data(format!("dissimilarity {v} at ({i}, {j}) must be finite and >= 0")));
            }
            if v != d[[j, i]] {
                return Err(Error::data(format!("asymmetric dissimilarity at ({i}, {j})")));
            }
        }
    }
    Ok(r)
}

/// 2-skeleton of the clique complex in filtration order:
/// `(value, dimension, lexicographic vertex tuple)`.
fn sorted_entries(d: &ArrayView2<'_, f64>, p: usize) -> Vec<Entry> {
    let n_edges = p * p.saturating_sub(1) / 2;
    let n_tris = if p >= 3 { p * (p - 1) * (p - 2) / 6 } else { 0 };
    let mut entries = Vec::with_capacity(p + n_edges + n_tris);
    for v in 0..p {
        entries.push(Entry { value: 0.0, dim: 0, verts: [v as u32, 0, 0] });
    }
    for i in 0..p {
        for j in (i + 1)..p {
            entries.push(Entry { value: d[[i, j]], dim: 1, verts: [i as u32, j as u32, 0] });
        }
    }
    for i in 0..p {
        for j in (i + 1)..p {
            let dij = d[[i, j]];
            for k in (j + 1)..p {
                let value = dij.max(d[[i, k]]).max(d[[j, k]]);
                entries.push(Entry { value, dim: 2, verts: [i as u32, j as u32, k as u32] });
            }
        }
    }
    entries.sort_by(|a, b| {
        a.value.total_cmp(&b.value).then(a.dim.cmp(&b.dim)).then(a.verts.cmp(&b.verts))
    });
    entries
}

/// The explicit filtration used by [`vr_h1_from_dissimilarity`].
pub fn rips_filtration(d: ArrayView2<'_, f64>) -> Result<Vec<Simplex>> {
    let p = validate(&d)?;
    Ok(sorted_entries(&d, p)
        .into_iter()
        .map(|e| Simplex::new(e.verts[..=e.dim as usize].iter().map(|&v| v as usize).collect(), e.value))
        .collect())
}

/// H1 diagram of the Vietoris-Rips filtration on a dissimilarity matrix.
///
/// Vertices enter at 0, edges at `d[i][j]`, triangles at the max of their
/// edges. Zero-persistence pairs are dropped. The clique complex on all
/// vertices is contractible, so every H1 class dies and there are no
/// infinite bars.
pub fn vr_h1_from_dissimilarity(d: ArrayView2<'_, f64>) -> Result<PersistenceDiagram> {
    let p = validate(&d)?;
    let entries = sorted_entries(&d, p);

    let mut vertex_pos = vec![0u32; p];
    let mut edge_pos = vec![u32::MAX; p * p];
    for (pos, e) in entries.iter().enumerate() {
        let [a, b, _] = e.verts;
        match e.dim {
            0 => vertex_pos[a as usize] = pos as u32,
            1 => edge_pos[a as usize * p + b as usize] = pos as u32,
            _ => {}
        }
    }

    let mut columns = Vec::with_capacity(entries.len());
    let mut dims = Vec::with_capacity(entries.len());
    for e in &entries {
        let [a, b, c] = e.verts.map(|v| v as usize);
        let mut col = match e.dim {
            0 => Vec::new(),
            1 => vec![vertex_pos[a], vertex_pos[b]],
            _ => vec![edge_pos[a * p + b], edge_pos[a * p + c], edge_pos[b * p + c]],
        };
        col.sort_unstable();
        columns.push(col);
        dims.push(e.dim as usize);
    }

    let reduced = reduce_columns(columns, &dims);
    let points = reduced
        .pairs
        .iter()
        .filter(|(birth, _)| entries[*birth].dim == 1)
        .map(|&(birth, death)| DiagramPoint::new(entries[birth].value, entries[death].value))
        .collect();
    PersistenceDiagram::new(points)
}

/// H1 diagram of a connectome, filtered on `1 - M`.
pub fn vr_h1_diagram(m: &Connectome) -> PersistenceDiagram {
    vr_h1_from_dissimilarity(m.dissimilarity().view()).expect("connectome dissimilarities are valid")
}
