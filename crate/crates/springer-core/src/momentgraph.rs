//! Combinatorial geometry of the affine Springer fiber: lattice fixed
//! points, one-dimensional orbits with their affine-root stabilizer labels,
//! Bruhat cell dimensions, and the orbit-cell inventories behind point
//! counting.

use crate::rootdata::{RootDatum, RootDatumError, ValuationProfile};
use serde::{Deserialize, Serialize};

/// Which homogeneous space the fiber sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Grassmannian,
    Flag,
}

/// Inclusive box of lattice points used to truncate infinite enumerations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl Window {
    pub fn interval(lo: i64, hi: i64) -> Self {
        Window {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn rank(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&l, &h))| l <= x && x <= h)
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for (l, h) in self.lo.iter().zip(&self.hi) {
            let mut next = Vec::new();
            for p in &out {
                for x in *l..=*h {
                    let mut q: Vec<i64> = p.clone();
                    q.push(x);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    pub fn shifted(&self, by: &[i64]) -> Window {
        Window {
            lo: self.lo.iter().zip(by).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(by).map(|(a, b)| a + b).collect(),
        }
    }
}

/// A torus fixed point: lattice part plus a Weyl index (always 0 in the
/// Grassmannian).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub lattice: Vec<i64>,
    pub weyl: usize,
}

/// A one-dimensional orbit connecting two fixed points, stabilized by the
/// kernel of the affine root `(root, level)`.  `bound` records the
/// valuation bound that admitted the orbit into the fiber.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub root: usize,
    pub level: i64,
    pub bound: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentGraph {
    pub space: Space,
    pub window: Window,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

impl MomentGraph {
    pub fn vertex_index(&self, v: &Vertex) -> Option<usize> {
        self.vertices.iter().position(|x| x == v)
    }
}

/// Dimension of the Bruhat cell through a lattice point: the number of
/// affine roots positive on the fundamental alcove whose level drops below
/// zero at the point.
pub fn bruhat_cell_dimension(d: &RootDatum, ell: &[i64]) -> u32 {
    let mut dim = 0i64;
    for alpha in d.positive_roots() {
        let m = d.pair(ell, alpha);
        // Positive-root contribution: levels 0 <= k < -m; negative-root
        // contribution: levels 1 <= k < m.
        dim += (-m).max(0) + (m - 1).max(0);
    }
    dim as u32
}

/// The alpha-direction coordinate of a lattice point, in half-integers
/// (returned doubled to stay integral).
fn doubled_coordinate(d: &RootDatum, root: usize, p: &[i64]) -> i64 {
    d.pair(p, &d.positive_roots()[root])
}

/// Assemble the fixed points and one-dimensional orbits inside a window.
pub fn build_moment_graph(
    d: &RootDatum,
    v: &ValuationProfile,
    space: Space,
    window: &Window,
) -> Result<MomentGraph, RootDatumError> {
    if window.rank() != d.rank() {
        return Err(RootDatumError::Invalid(
            "window rank does not match the lattice".into(),
        ));
    }
    match space {
        Space::Grassmannian => {
            let points = window.points();
            let vertices: Vec<Vertex> = points
                .iter()
                .map(|p| Vertex {
                    lattice: p.clone(),
                    weyl: 0,
                })
                .collect();
            let mut edges = Vec::new();
            for (ai, a) in points.iter().enumerate() {
                for root in 0..d.num_positive_roots() {
                    let coroot = &d.positive_coroots()[root];
                    for j in 1..=i64::from(v.get(root)) {
                        let b: Vec<i64> = a.iter().zip(coroot).map(|(x, c)| x + j * c).collect();
                        if !window.contains(&b) {
                            continue;
                        }
                        let bi = points.iter().position(|p| *p == b).unwrap();
                        let twice_level =
                            doubled_coordinate(d, root, a) + doubled_coordinate(d, root, &b);
                        debug_assert_eq!(twice_level % 2, 0);
                        edges.push(Edge {
                            a: ai,
                            b: bi,
                            root,
                            level: twice_level / 2,
                            bound: v.get(root),
                        });
                    }
                }
            }
            Ok(MomentGraph {
                space,
                window: window.clone(),
                vertices,
                edges,
            })
        }
        Space::Flag => {
            if d.num_positive_roots() != 1 {
                return Err(RootDatumError::NotRankOne(d.num_positive_roots()));
            }
            let points = window.points();
            let mut vertices = Vec::new();
            for p in &points {
                for w in 0..2 {
                    vertices.push(Vertex {
                        lattice: p.clone(),
                        weyl: w,
                    });
                }
            }
            let mut edges = Vec::new();
            let vv = i64::from(v.get(0));
            for (i, a) in vertices.iter().enumerate() {
                if a.weyl != 0 {
                    continue;
                }
                for (j, b) in vertices.iter().enumerate() {
                    if b.weyl != 1 {
                        continue;
                    }
                    // Both endpoints must sit in one coroot line.
                    let diff: Vec<i64> = a
                        .lattice
                        .iter()
                        .zip(&b.lattice)
                        .map(|(x, y)| y - x)
                        .collect();
                    let coroot = &d.positive_coroots()[0];
                    let Some(steps) = multiple_of(&diff, coroot) else {
                        continue;
                    };
                    let _ = steps;
                    let two_s = doubled_coordinate(d, 0, &a.lattice);
                    let two_t = doubled_coordinate(d, 0, &b.lattice);
                    debug_assert_eq!((two_t - two_s) % 2, 0, "same-line step is even");
                    let t_minus_s = (two_t - two_s) / 2;
                    if -vv <= t_minus_s && t_minus_s <= vv - 1 {
                        let level = (two_s + two_t) / 2;
                        edges.push(Edge {
                            a: i,
                            b: j,
                            root: 0,
                            level,
                            bound: v.get(0),
                        });
                    }
                }
            }
            Ok(MomentGraph {
                space,
                window: window.clone(),
                vertices,
                edges,
            })
        }
    }
}

fn multiple_of(diff: &[i64], coroot: &[i64]) -> Option<i64> {
    let mut ratio: Option<i64> = None;
    for (&x, &c) in diff.iter().zip(coroot) {
        if c == 0 {
            if x != 0 {
                return None;
            }
        } else {
            if x % c != 0 {
                return None;
            }
            let r = x / c;
            if let Some(prev) = ratio {
                if prev != r {
                    return None;
                }
            }
            ratio = Some(r);
        }
    }
    ratio.or(Some(0))
}

/// Which orbit family a cell belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellFamily {
    /// Orbit families indexed `n <= 0` in the Grassmannian directions; on
    /// the flag side these project isomorphically.
    X,
    /// The extra flag families fibering over the projected orbits, indexed
    /// `m <= 1`.
    Y,
}

/// One torus-orbit stratum attached to a lattice translate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub translate: Vec<i64>,
    pub family: CellFamily,
    /// Per-direction orbit indices (Grassmannian products) or the single
    /// orbit index of the rank-one direction.
    pub indices: Vec<i64>,
    pub dim: u32,
    pub defined_over_base: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellInventory {
    pub space: Space,
    pub cells: Vec<Cell>,
}

impl CellInventory {
    /// Poincare polynomial coefficients of the cells at one translate.
    pub fn dims_at(&self, translate: &[i64]) -> Vec<u32> {
        let mut dims: Vec<u32> = self
            .cells
            .iter()
            .filter(|c| c.translate == translate)
            .map(|c| c.dim)
            .collect();
        dims.sort_unstable();
        dims
    }
}

/// Enumerate the orbit strata per lattice translate.
///
/// The Grassmannian inventory covers products of pairwise-orthogonal
/// rank-one directions; the flag inventory is restricted to semisimple rank
/// one.
pub fn cell_inventory(
    d: &RootDatum,
    v: &ValuationProfile,
    space: Space,
    window: &Window,
) -> Result<CellInventory, RootDatumError> {
    let defined_over_base = v.is_equal_valuation();
    match space {
        Space::Grassmannian => {
            // Directions must be orthogonal: the fiber is then a product of
            // rank-one fibers.
            for i in 0..d.num_positive_roots() {
                for j in 0..d.num_positive_roots() {
                    if i != j && d.pair(&d.positive_coroots()[i], &d.positive_roots()[j]) != 0 {
                        return Err(RootDatumError::Invalid(
                            "inventory restricted to rank-one factors".into(),
                        ));
                    }
                }
            }
            let mut tuples: Vec<Vec<i64>> = vec![vec![]];
            for root in 0..d.num_positive_roots() {
                let mut next = Vec::new();
                for t in &tuples {
                    for n in -i64::from(v.get(root))..=0 {
                        let mut t2: Vec<i64> = t.clone();
                        t2.push(n);
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            let mut cells = Vec::new();
            for p in window.points() {
                for t in &tuples {
                    let dim: i64 = t.iter().map(|n| n.abs()).sum();
                    cells.push(Cell {
                        translate: p.clone(),
                        family: CellFamily::X,
                        indices: t.clone(),
                        dim: dim as u32,
                        defined_over_base,
                    });
                }
            }
            Ok(CellInventory { space, cells })
        }
        Space::Flag => {
            if d.num_positive_roots() != 1 {
                return Err(RootDatumError::NotRankOne(d.num_positive_roots()));
            }
            let vv = i64::from(v.get(0));
            let mut cells = Vec::new();
            for p in window.points() {
                for n in -vv..=0 {
                    cells.push(Cell {
                        translate: p.clone(),
                        family: CellFamily::X,
                        indices: vec![n],
                        dim: (-n) as u32,
                        defined_over_base,
                    });
                }
                // The fibered families, indexed by m = n + 1 for the same
                // range of n; the orbit of index m has dimension 1 - m.
                for n in -vv..=0 {
                    let m = n + 1;
                    cells.push(Cell {
                        translate: p.clone(),
                        family: CellFamily::Y,
                        indices: vec![m],
                        dim: (1 - m) as u32,
                        defined_over_base,
                    });
                }
            }
            Ok(CellInventory { space, cells })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::{build_root_datum, DatumSpec};

    fn sl2() -> RootDatum {
        build_root_datum(&DatumSpec::Named {
            cartan: "A1".into(),
            adjoint: false,
        })
        .unwrap()
    }

    #[test]
    fn bruhat_dimensions_sl2() {
        let d = sl2();
        assert_eq!(bruhat_cell_dimension(&d, &[0]), 0);
        assert_eq!(bruhat_cell_dimension(&d, &[-1]), 2);
        assert_eq!(bruhat_cell_dimension(&d, &[1]), 1);
        assert_eq!(bruhat_cell_dimension(&d, &[-2]), 4);
        assert_eq!(bruhat_cell_dimension(&d, &[2]), 3);
    }

    #[test]
    fn grassmannian_graph_sl2_v2() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 2);
        let g = build_moment_graph(&d, &v, Space::Grassmannian, &Window::interval(0, 2)).unwrap();
        assert_eq!(g.vertices.len(), 3);
        let mut labels: Vec<(i64, i64, i64)> = g
            .edges
            .iter()
            .map(|e| {
                (
                    g.vertices[e.a].lattice[0],
                    g.vertices[e.b].lattice[0],
                    e.level,
                )
            })
            .collect();
        labels.sort_unstable();
        assert_eq!(labels, vec![(0, 1, 1), (0, 2, 2), (1, 2, 3)]);
    }

    #[test]
    fn zero_profile_has_no_edges() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 0);
        let g = build_moment_graph(&d, &v, Space::Grassmannian, &Window::interval(-2, 2)).unwrap();
        assert!(g.edges.is_empty());
        let f = build_moment_graph(&d, &v, Space::Flag, &Window::interval(-2, 2)).unwrap();
        assert!(f.edges.is_empty());
    }

    #[test]
    fn flag_graph_sl2_v1() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 1);
        let g = build_moment_graph(&d, &v, Space::Flag, &Window::interval(0, 1)).unwrap();
        // Vertices: l_0, r_0, l_1, r_1.
        assert_eq!(g.vertices.len(), 4);
        let describe = |e: &Edge| {
            (
                g.vertices[e.a].lattice[0],
                g.vertices[e.b].lattice[0],
                e.level,
            )
        };
        let mut got: Vec<(i64, i64, i64)> = g.edges.iter().map(describe).collect();
        got.sort_unstable();
        // l_0 - r_0 (t-s = 0 <= v-1) and l_1 - r_0 (t-s = -1 >= -v); no
        // l_0 - r_1.
        assert_eq!(got, vec![(0, 0, 0), (1, 0, 1), (1, 1, 2)]);
    }

    #[test]
    fn at_most_one_edge_per_pair_in_a_line() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 3);
        let g = build_moment_graph(&d, &v, Space::Grassmannian, &Window::interval(-2, 2)).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for e in &g.edges {
            let key = (e.a.min(e.b), e.a.max(e.b));
            assert!(seen.insert(key), "duplicate edge {key:?}");
        }
        // Exactly one edge iff the distance bound holds.
        for (i, a) in g.vertices.iter().enumerate() {
            for (j, b) in g.vertices.iter().enumerate() {
                if i >= j {
                    continue;
                }
                let dist = (a.lattice[0] - b.lattice[0]).abs();
                let expected = dist <= 3;
                let found = seen.contains(&(i.min(j), i.max(j)));
                assert_eq!(expected, found);
            }
        }
    }

    #[test]
    fn translation_periodicity() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 2);
        let w1 = Window::interval(0, 3);
        let w2 = w1.shifted(&[1]);
        let g1 = build_moment_graph(&d, &v, Space::Grassmannian, &w1).unwrap();
        let g2 = build_moment_graph(&d, &v, Space::Grassmannian, &w2).unwrap();
        let shift_edges = |g: &MomentGraph, by: i64| -> Vec<(i64, i64, i64)> {
            let mut out: Vec<(i64, i64, i64)> = g
                .edges
                .iter()
                .map(|e| {
                    (
                        g.vertices[e.a].lattice[0] + by,
                        g.vertices[e.b].lattice[0] + by,
                        e.level + by * 2,
                    )
                })
                .collect();
            out.sort_unstable();
            out
        };
        // Shifting the window by a lattice vector shifts labels by the
        // pairing with the root (2 for the coroot direction in these
        // coordinates).
        assert_eq!(shift_edges(&g1, 1), shift_edges(&g2, 0));
    }

    #[test]
    fn distinct_roots_share_only_vertices() {
        let d = build_root_datum(&DatumSpec::Named {
            cartan: "A1xA1".into(),
            adjoint: false,
        })
        .unwrap();
        let v = ValuationProfile::new(vec![1, 2]);
        let w = Window {
            lo: vec![-1, -1],
            hi: vec![1, 1],
        };
        let g = build_moment_graph(&d, &v, Space::Grassmannian, &w).unwrap();
        for e in &g.edges {
            // Every edge moves along exactly one coroot direction.
            let a = &g.vertices[e.a].lattice;
            let b = &g.vertices[e.b].lattice;
            let moved: Vec<usize> = (0..2).filter(|&i| a[i] != b[i]).collect();
            assert_eq!(moved.len(), 1);
        }
    }

    #[test]
    fn flag_graph_covers_grassmannian_graph() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 2);
        let w = Window::interval(-2, 2);
        let flag = build_moment_graph(&d, &v, Space::Flag, &w).unwrap();
        let grass = build_moment_graph(&d, &v, Space::Grassmannian, &w).unwrap();
        let grass_pairs: std::collections::BTreeSet<(i64, i64)> = grass
            .edges
            .iter()
            .map(|e| {
                let x = grass.vertices[e.a].lattice[0];
                let y = grass.vertices[e.b].lattice[0];
                (x.min(y), x.max(y))
            })
            .collect();
        for e in &flag.edges {
            let x = flag.vertices[e.a].lattice[0];
            let y = flag.vertices[e.b].lattice[0];
            if x == y {
                continue; // collapses to a loop at the vertex
            }
            assert!(grass_pairs.contains(&(x.min(y), x.max(y))));
        }
    }

    #[test]
    fn inventory_sl2() {
        let d = sl2();
        let w = Window::interval(0, 0);
        for v in 0..4u32 {
            let inv = cell_inventory(&d, &ValuationProfile::equal(&d, v), Space::Grassmannian, &w)
                .unwrap();
            let dims = inv.dims_at(&[0]);
            let expected: Vec<u32> = (0..=v).collect();
            assert_eq!(dims, expected, "poincare profile at v={v}");
        }
    }

    #[test]
    fn inventory_flag_sl2_v1() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 1);
        let inv = cell_inventory(&d, &v, Space::Flag, &Window::interval(0, 0)).unwrap();
        // Orbit strata per translate: the projecting families of dimensions
        // 0 and 1, and the fibered families of dimensions 0 and 1.
        let dims = inv.dims_at(&[0]);
        assert_eq!(dims, vec![0, 0, 1, 1]);
    }

    #[test]
    fn inventory_rejects_non_orthogonal_directions() {
        let d = build_root_datum(&DatumSpec::Named {
            cartan: "A2".into(),
            adjoint: false,
        })
        .unwrap();
        let v = ValuationProfile::equal(&d, 1);
        let w = Window {
            lo: vec![0, 0],
            hi: vec![0, 0],
        };
        assert!(cell_inventory(&d, &v, Space::Grassmannian, &w).is_err());
    }

    #[test]
    fn graph_json_round_trip() {
        let d = sl2();
        let v = ValuationProfile::equal(&d, 2);
        let g = build_moment_graph(&d, &v, Space::Grassmannian, &Window::interval(0, 2)).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: MomentGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back.edges, g.edges);
        assert_eq!(back.vertices, g.vertices);
    }
}
