//! The square survey grid: nodes inside the region joined by 4-adjacent
//! edges whose whole segment stays inside the region.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{PlanarPoint, SurveyRegion};
use crate::math::{ceil, floor};

pub const DEFAULT_SPACING_M: f64 = 350.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: PlanarPoint,
    pub spacing_m: f64,
}

impl GridSpec {
    pub fn new(origin: PlanarPoint, spacing_m: f64) -> Result<Self> {
        if !(spacing_m > 0.0 && spacing_m.is_finite()) || !origin.is_finite() {
            return Err(Error::config("grid spacing must be positive and finite"));
        }
        Ok(Self { origin, spacing_m })
    }

    /// Default grid for a region: 350 m spacing anchored at the bounding-box
    /// minimum corner, shifted by `offset`.
    pub fn for_region(region: &SurveyRegion, spacing_m: f64, offset: PlanarPoint) -> Result<Self> {
        let (lo, _) = region.bbox();
        Self::new(
            PlanarPoint::new(lo.x + offset.x, lo.y + offset.y),
            spacing_m,
        )
    }

    pub fn position(&self, i: i64, j: i64) -> PlanarPoint {
        PlanarPoint::new(
            self.origin.x + i as f64 * self.spacing_m,
            self.origin.y + j as f64 * self.spacing_m,
        )
    }
}

/// Cardinal flight direction of a transect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Heading {
    #[serde(rename = "N")]
    North,
    #[serde(rename = "E")]
    East,
    #[serde(rename = "S")]
    South,
    #[serde(rename = "W")]
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn opposite(self) -> Heading {
        match self {
            Heading::North => Heading::South,
            Heading::East => Heading::West,
            Heading::South => Heading::North,
            Heading::West => Heading::East,
        }
    }

    /// Lattice step `(di, dj)`.
    pub const fn step(self) -> (i64, i64) {
        match self {
            Heading::North => (0, 1),
            Heading::East => (1, 0),
            Heading::South => (0, -1),
            Heading::West => (-1, 0),
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            Heading::North => "N",
            Heading::East => "E",
            Heading::South => "S",
            Heading::West => "W",
        }
    }

    pub fn parse(s: &str) -> Option<Heading> {
        Heading::ALL.into_iter().find(|h| h.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub i: i64,
    pub j: i64,
    pub position: PlanarPoint,
}

/// An undirected grid edge; `a` is the west/south end, `b` the east/north end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridEdge {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridGraph {
    spec: GridSpec,
    nodes: Vec<GridNode>,
    edges: Vec<GridEdge>,
    /// Incident edge per node, indexed by `Heading::index`.
    adjacency: Vec<[Option<usize>; 4]>,
    lookup: BTreeMap<(i64, i64), usize>,
}

impl GridGraph {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GridEdge] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &GridNode {
        &self.nodes[idx]
    }

    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        self.lookup.get(&(i, j)).copied()
    }

    /// Edge leaving `node` towards `heading`, if present.
    pub fn edge_towards(&self, node: usize, heading: Heading) -> Option<usize> {
        self.adjacency[node][heading.index()]
    }

    /// The node at the other end of `edge` from `node`.
    pub fn other_end(&self, edge: usize, node: usize) -> usize {
        let e = self.edges[edge];
        if e.a == node {
            e.b
        } else {
            e.a
        }
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].iter().flatten().count()
    }

    pub fn edge_segment(&self, edge: usize) -> (PlanarPoint, PlanarPoint) {
        let e = self.edges[edge];
        (self.nodes[e.a].position, self.nodes[e.b].position)
    }
}

/// Lays the grid over `region`.
pub fn build_grid(region: &SurveyRegion, spec: &GridSpec) -> Result<GridGraph> {
    let (lo, hi) = region.bbox();
    let s = spec.spacing_m;
    let tol = 1e-9;
    let i0 = ceil((lo.x - spec.origin.x) / s - tol) as i64;
    let i1 = floor((hi.x - spec.origin.x) / s + tol) as i64;
    let j0 = ceil((lo.y - spec.origin.y) / s - tol) as i64;
    let j1 = floor((hi.y - spec.origin.y) / s + tol) as i64;

    let mut nodes = Vec::new();
    let mut lookup = BTreeMap::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let position = spec.position(i, j);
            if region.contains(position) {
                lookup.insert((i, j), nodes.len());
                nodes.push(GridNode { i, j, position });
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyGrid);
    }

    let mut edges = Vec::new();
    let mut adjacency = alloc::vec![[None; 4]; nodes.len()];
    for (a, node) in nodes.iter().enumerate() {
        for heading in [Heading::East, Heading::North] {
            let (di, dj) = heading.step();
            let Some(&b) = lookup.get(&(node.i + di, node.j + dj)) else {
                continue;
            };
            if !region.contains_segment(node.position, nodes[b].position) {
                continue;
            }
            let idx = edges.len();
            edges.push(GridEdge { a, b });
            adjacency[a][heading.index()] = Some(idx);
            adjacency[b][heading.opposite().index()] = Some(idx);
        }
    }

    Ok(GridGraph {
        spec: *spec,
        nodes,
        edges,
        adjacency,
        lookup,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapResult {
    /// Node index for each mapped point, in input order.
    pub nodes: Vec<usize>,
    /// Input indices of points with no node within tolerance.
    pub unmapped: Vec<usize>,
}

/// Maps each launch point to the nearest grid node within `tolerance_m`.
pub fn snap_launch_points(
    points: &[PlanarPoint],
    grid: &GridGraph,
    tolerance_m: f64,
) -> Result<SnapResult> {
    if !(tolerance_m >= 0.0) {
        return Err(Error::config("snap tolerance must be non-negative"));
    }
    let mut nodes = Vec::new();
    let mut unmapped = Vec::new();
    for (k, p) in points.iter().enumerate() {
        let nearest = grid
            .nodes
            .iter()
            .enumerate()
            .map(|(idx, n)| (idx, n.position.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((idx, d)) if d <= tolerance_m => nodes.push(idx),
            _ => unmapped.push(k),
        }
    }
    if nodes.is_empty() {
        return Err(Error::NoLaunchPoint { tolerance_m });
    }
    Ok(SnapResult { nodes, unmapped })
}
