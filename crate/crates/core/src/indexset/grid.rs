use std::collections::{BTreeMap, BTreeSet};

use smallvec::SmallVec;

use super::{check_downward_closed, MultiIndex};
use crate::error::Result;
use crate::nodes::{NodeFamily, NodeId};
use crate::rules1d::RuleTable;

/// Identity of a parametric point: `(dim, node)` for every coordinate that
/// is not the origin node, sorted by dimension.
pub type PointId = SmallVec<[(u32, NodeId); 4]>;

/// Sparse coordinates `(dim, y_dim)` of a parametric point; absent
/// dimensions are 0.
pub type Coords = SmallVec<[(u32, f64); 4]>;

/// Expands sparse coordinates to a dense vector of length `dims`.
pub fn dense_coords(coords: &Coords, dims: usize) -> Vec<f64> {
    let mut y = vec![0.0; dims];
    for &(d, v) in coords {
        if (d as usize) < dims {
            y[d as usize] = v;
        }
    }
    y
}

/// One point of the tensor grid of `t`: its identity, coordinates and the
/// per-dimension local node indices (aligned with `t`'s support).
pub struct TensorPoint<'a> {
    pub id: PointId,
    pub coords: Coords,
    pub local: &'a [usize],
}

/// Visits every point `y_{t;m}`, `m ≤ t`, of the tensor grid of levels `t`.
pub fn for_each_tensor_point(
    t: &MultiIndex,
    family: NodeFamily,
    table: &RuleTable,
    mut f: impl FnMut(TensorPoint<'_>) -> Result<()>,
) -> Result<()> {
    let support: Vec<(usize, usize)> = t.iter().map(|(d, v)| (d, v as usize)).collect();
    let points: Vec<&[f64]> = support
        .iter()
        .map(|&(_, lvl)| table.rule(lvl).map(|r| r.points()))
        .collect::<Result<_>>()?;
    let mut local = vec![0usize; support.len()];
    loop {
        let mut id = PointId::new();
        let mut coords = Coords::new();
        for (i, &(d, lvl)) in support.iter().enumerate() {
            let node = family.node_id(lvl, local[i]);
            if !node.is_origin() {
                id.push((d as u32, node));
                coords.push((d as u32, points[i][local[i]]));
            }
        }
        f(TensorPoint { id, coords, local: &local })?;
        // advance the odometer over m ≤ t
        let mut i = 0;
        loop {
            if i == support.len() {
                return Ok(());
            }
            local[i] += 1;
            if local[i] <= support[i].1 {
                break;
            }
            local[i] = 0;
            i += 1;
        }
    }
}

/// Level step of the univariate differences over `set`.
///
/// Downward closed sets use `Δ_m = A_m - A_{m-1}` (step 1). Sets of even
/// indices that are closed under steps of 2 use the even chain
/// `Δ_{2m} = A_{2m} - A_{2m-2}` (step 2), which telescopes to the finest
/// even level and never touches odd-level nodes.
pub fn difference_step(set: &BTreeSet<MultiIndex>) -> Result<u32> {
    match check_downward_closed(set, 1) {
        Ok(()) => Ok(1),
        Err(e) if set.iter().all(MultiIndex::is_even) => check_downward_closed(set, 2).map(|_| 2).map_err(|_| e),
        Err(e) => Err(e),
    }
}

/// Levels `s - step·e`, `e ∈ {0,1}^J` supported on `supp(s)`, paired with
/// `|e|`.
pub fn lower_neighbours(s: &MultiIndex, step: u32) -> Vec<(MultiIndex, u32)> {
    let dims: Vec<usize> = s.iter().map(|(d, _)| d).collect();
    (0u64..(1u64 << dims.len()))
        .map(|mask| {
            let mut t = s.clone();
            for (bit, &d) in dims.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    t.set(d, s.get(d).saturating_sub(step));
                }
            }
            (t, mask.count_ones())
        })
        .collect()
}

/// Deduplicated set of parametric points keyed by node identity.
#[derive(Clone, Debug, Default)]
pub struct Grid {
    pub points: BTreeMap<PointId, Coords>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, id: &PointId) -> bool {
        self.points.contains_key(id)
    }
}

/// `Γ(Λ) = ∪_{s∈Λ} Γ_s`, `Γ_s = {y_{s-e;m} : e ∈ E_s, m ≤ s-e}`.
///
/// For even sets the differences run along the even chain (see
/// [`difference_step`]), so `Γ_s` is built from `s - 2e`.
pub fn grid_of(set: &BTreeSet<MultiIndex>, family: NodeFamily) -> Result<Grid> {
    let step = difference_step(set)?;
    let tensors: BTreeSet<MultiIndex> =
        set.iter().flat_map(|s| lower_neighbours(s, step)).map(|(t, _)| t).collect();
    let max_level = tensors.iter().map(|t| t.max_entry()).max().unwrap_or(0) as usize;
    let table = RuleTable::new(family, max_level)?;
    let mut grid = Grid::default();
    for t in &tensors {
        for_each_tensor_point(t, family, &table, |p| {
            grid.points.entry(p.id).or_insert(p.coords);
            Ok(())
        })?;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexset::p_weight;

    fn set(items: &[&[u32]]) -> BTreeSet<MultiIndex> {
        items.iter().map(|v| MultiIndex::from_dense(v)).collect()
    }

    #[test]
    fn origin_only() {
        let g = grid_of(&set(&[&[]]), NodeFamily::GaussHermite).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.points.keys().next().unwrap().is_empty());
    }

    #[test]
    fn first_unit_index() {
        let g = grid_of(&set(&[&[], &[1]]), NodeFamily::GaussHermite).unwrap();
        assert_eq!(g.len(), 3);
        let mut first: Vec<f64> = g
            .points
            .values()
            .map(|c| dense_coords(c, 3))
            .inspect(|y| assert_eq!(&y[1..], &[0.0, 0.0]))
            .map(|y| y[0])
            .collect();
        first.sort_by(f64::total_cmp);
        assert_eq!(first, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn size_bounded_by_p_weights() {
        for fam in [NodeFamily::GaussHermite, NodeFamily::Szabados] {
            let lam = set(&[&[], &[1], &[2], &[3], &[0, 1], &[1, 1], &[2, 1], &[0, 2], &[4]]);
            let g = grid_of(&lam, fam).unwrap();
            let bound: f64 = lam.iter().map(|s| p_weight(s, 1.0, 2.0)).sum();
            assert!(g.len() as f64 <= bound);
        }
    }

    #[test]
    fn even_sets_use_even_levels_only() {
        let even = set(&[&[], &[2], &[4], &[0, 2], &[2, 2]]);
        assert_eq!(difference_step(&even).unwrap(), 2);
        let g = grid_of(&even, NodeFamily::GaussHermite).unwrap();
        // first axis: levels 4 and 2 share only the origin (5 + 2 points);
        // second axis: ±√3; off-axis: the 2·2 corners of the (2,2) tensor
        assert_eq!(g.len(), 7 + 2 + 4);
        assert!(difference_step(&set(&[&[], &[1, 1]])).is_err());
        assert_eq!(difference_step(&set(&[&[]])).unwrap(), 1);
    }

    #[test]
    fn zero_coordinate_shared_across_levels() {
        // y_{2;1} = 0 coincides with the origin node.
        let g = grid_of(&set(&[&[], &[1], &[2]]), NodeFamily::GaussHermite).unwrap();
        assert_eq!(g.len(), 5);
    }
}
