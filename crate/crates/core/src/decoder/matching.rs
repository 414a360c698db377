//! Exact matching of fired detectors on the shortest-path metric.
//!
//! Each fired detector gets a private boundary copy; copies are joined by
//! zero-weight edges so unused ones pair off among themselves. A detector
//! pair is only offered to the matcher when going direct is cheaper than
//! both going to the boundary.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::{Arc, OnceLock};

use super::blossom::max_weight_matching;
use super::DetectorGraph;
use crate::error::{Error, Result};

pub const BRUTE_FORCE_LIMIT: usize = 14;
const UNREACHABLE: i64 = i64::MAX / 4;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Correction {
    /// Matched circuit detector ids; `None` is the boundary.
    pub pairs: Vec<(usize, Option<usize>)>,
    pub flip: bool,
    /// Total matched weight in fixed-point units.
    pub weight: i64,
}

struct Paths {
    dist: Vec<i64>,
    flip: Vec<bool>,
}

/// Decoder with a lazily filled single-source shortest-path cache, safe to
/// share across threads.
pub struct Decoder<'g, T> {
    graph: &'g DetectorGraph<T>,
    cache: Vec<OnceLock<Arc<Paths>>>,
}

impl<'g, T> Decoder<'g, T> {
    pub fn new(graph: &'g DetectorGraph<T>) -> Self {
        Decoder { graph, cache: (0..graph.nodes.len()).map(|_| OnceLock::new()).collect() }
    }

    fn boundary(&self) -> usize {
        self.graph.nodes.len()
    }

    fn paths(&self, source: usize) -> Arc<Paths> {
        self.cache[source].get_or_init(|| Arc::new(self.dijkstra(source))).clone()
    }

    fn dijkstra(&self, source: usize) -> Paths {
        let n = self.graph.nodes.len() + 1;
        let boundary = self.boundary();
        let mut dist = vec![UNREACHABLE; n];
        let mut flip = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0;
        heap.push(Reverse((0i64, source)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] || u == boundary {
                continue;
            }
            for &(v, e) in &self.graph.adjacency[u] {
                let edge = &self.graph.edges[e];
                let nd = d + edge.int_weight;
                if nd < dist[v] {
                    dist[v] = nd;
                    flip[v] = flip[u] ^ edge.flips_observable;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        Paths { dist, flip }
    }

    fn nodes_of(&self, fired: &[usize]) -> Result<Vec<usize>> {
        let mut nodes: Vec<usize> = fired
            .iter()
            .map(|&d| self.graph.node_of.get(&d).copied().ok_or(Error::UnknownDetector(d)))
            .collect::<Result<_>>()?;
        nodes.sort_unstable();
        nodes.dedup();
        Ok(nodes)
    }

    pub fn decode(&self, fired: &[usize]) -> Result<Correction> {
        let nodes = self.nodes_of(fired)?;
        let k = nodes.len();
        if k == 0 {
            return Ok(Correction::default());
        }
        let paths: Vec<Arc<Paths>> = nodes.iter().map(|&n| self.paths(n)).collect();
        let b = self.boundary();
        let mut edges: Vec<(usize, usize, i64)> = Vec::new();
        for i in 0..k {
            let di = paths[i].dist[b];
            let mut reachable = di < UNREACHABLE;
            if reachable {
                edges.push((i, k + i, di));
            }
            for j in i + 1..k {
                let dij = paths[i].dist[nodes[j]];
                if dij >= UNREACHABLE {
                    continue;
                }
                reachable = true;
                let dj = paths[j].dist[b];
                if di >= UNREACHABLE || dj >= UNREACHABLE || dij < di + dj {
                    edges.push((i, j, dij));
                }
            }
            if !reachable && !(0..i).any(|j| paths[j].dist[nodes[i]] < UNREACHABLE) {
                return Err(Error::UnreachableDetector(self.graph.nodes[nodes[i]]));
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                edges.push((k + i, k + j, 0));
            }
        }
        let big = edges.iter().map(|e| e.2).max().unwrap_or(0) + 1;
        let inverted: Vec<(usize, usize, i64)> = edges.iter().map(|&(i, j, w)| (i, j, big - w)).collect();
        let mates = max_weight_matching(2 * k, &inverted, true);

        let mut c = Correction::default();
        for i in 0..k {
            let Some(m) = mates[i] else {
                return Err(Error::UnreachableDetector(self.graph.nodes[nodes[i]]));
            };
            if m == k + i {
                c.pairs.push((self.graph.nodes[nodes[i]], None));
                c.flip ^= paths[i].flip[b];
                c.weight += paths[i].dist[b];
            } else if m < k {
                if m > i {
                    c.pairs.push((self.graph.nodes[nodes[i]], Some(self.graph.nodes[nodes[m]])));
                    c.flip ^= paths[i].flip[nodes[m]];
                    c.weight += paths[i].dist[nodes[m]];
                }
            } else {
                return Err(Error::UnreachableDetector(self.graph.nodes[nodes[i]]));
            }
        }
        Ok(c)
    }

    /// Exhaustive minimum over all pairings (with boundary), for at most
    /// [`BRUTE_FORCE_LIMIT`] fired detectors.
    pub fn brute_force(&self, fired: &[usize]) -> Result<Correction> {
        let nodes = self.nodes_of(fired)?;
        let k = nodes.len();
        if k > BRUTE_FORCE_LIMIT {
            return Err(Error::TooManyDetectors { max: BRUTE_FORCE_LIMIT, got: k });
        }
        let paths: Vec<Arc<Paths>> = nodes.iter().map(|&n| self.paths(n)).collect();
        let b = self.boundary();
        let full = (1usize << k) - 1;
        // best[mask] = (weight, choice) for matching the detectors in mask
        let mut best = vec![(UNREACHABLE, usize::MAX); 1 << k];
        best[0] = (0, usize::MAX);
        for mask in 1..=full {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut cand = (UNREACHABLE, usize::MAX);
            let db = paths[i].dist[b];
            if db < UNREACHABLE && best[rest].0 < UNREACHABLE {
                cand = (db + best[rest].0, i);
            }
            let mut bits = rest;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let dij = paths[i].dist[nodes[j]];
                let sub = best[rest & !(1 << j)].0;
                if dij < UNREACHABLE && sub < UNREACHABLE && dij + sub < cand.0 {
                    cand = (dij + sub, j);
                }
            }
            best[mask] = cand;
        }
        if best[full].0 >= UNREACHABLE {
            return Err(Error::UnreachableDetector(self.graph.nodes[nodes[0]]));
        }
        let mut c = Correction { weight: best[full].0, ..Default::default() };
        let mut mask = full;
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            let j = best[mask].1;
            if j == i {
                c.pairs.push((self.graph.nodes[nodes[i]], None));
                c.flip ^= paths[i].flip[b];
                mask &= !(1 << i);
            } else {
                c.pairs.push((self.graph.nodes[nodes[i]], Some(self.graph.nodes[nodes[j]])));
                c.flip ^= paths[i].flip[nodes[j]];
                mask &= !(1 << i) & !(1 << j);
            }
        }
        Ok(c)
    }
}

/// One-shot decode (no cache reuse across calls).
pub fn decode<T>(graph: &DetectorGraph<T>, fired: &[usize]) -> Result<Correction> {
    Decoder::new(graph).decode(fired)
}

pub fn brute_force_decode<T>(graph: &DetectorGraph<T>, fired: &[usize]) -> Result<Correction> {
    Decoder::new(graph).brute_force(fired)
}
