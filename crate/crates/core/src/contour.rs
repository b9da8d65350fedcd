//! Marching squares on a rectangular grid of samples.
//!
//! Saddle cells are resolved with the saddle value of the bilinear
//! interpolant, so the emitted lines are level sets of one continuous
//! surface and lines of different levels cannot cross.

use std::collections::HashMap;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub level: f64,
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// From node (i, k) to (i + 1, k).
    H(usize, usize),
    /// From node (i, k) to (i, k + 1).
    V(usize, usize),
}

/// Field sampled at `(xs[i], ys[k])`, stored row-major: `z[k * xs.len() + i]`.
pub struct Field<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub z: &'a [f64],
}

impl Field<'_> {
    fn at(&self, i: usize, k: usize) -> f64 {
        self.z[k * self.xs.len() + i]
    }

    fn crossing(&self, e: Edge, level: f64) -> (f64, f64) {
        let ((i0, k0), (i1, k1)) = match e {
            Edge::H(i, k) => ((i, k), (i + 1, k)),
            Edge::V(i, k) => ((i, k), (i, k + 1)),
        };
        let (z0, z1) = (self.at(i0, k0), self.at(i1, k1));
        let s = if z1 == z0 {
            0.5
        } else {
            (level - z0) / (z1 - z0)
        };
        let lerp = |a: f64, b: f64| a + s * (b - a);
        (
            lerp(self.xs[i0], self.xs[i1]),
            lerp(self.ys[k0], self.ys[k1]),
        )
    }
}

/// Segments of the `level` set, as pairs of crossed edges.
fn segments(f: &Field, level: f64) -> Vec<(Edge, Edge)> {
    let (nx, ny) = (f.xs.len(), f.ys.len());
    let mut out = Vec::new();
    if nx < 2 || ny < 2 {
        return out;
    }
    for k in 0..ny - 1 {
        for i in 0..nx - 1 {
            // corners in order 00, 10, 11, 01
            let v = [
                f.at(i, k),
                f.at(i + 1, k),
                f.at(i + 1, k + 1),
                f.at(i, k + 1),
            ];
            if v.iter().any(|x| x.is_nan()) {
                continue;
            }
            let above = v.map(|x| x >= level);
            let (bottom, right, top, left) = (
                Edge::H(i, k),
                Edge::V(i + 1, k),
                Edge::H(i, k + 1),
                Edge::V(i, k),
            );
            // the two edges meeting at each corner
            let around = [(bottom, left), (bottom, right), (right, top), (left, top)];
            let flips = (0..4).filter(|&c| above[c] != above[(c + 1) % 4]).count();
            match flips {
                0 => {}
                2 => {
                    let crossed: Vec<Edge> = [(0, bottom), (1, right), (2, top), (3, left)]
                        .into_iter()
                        .filter(|&(c, _)| above[c] != above[(c + 1) % 4])
                        .map(|(_, e)| e)
                        .collect();
                    out.push((crossed[0], crossed[1]));
                }
                _ => {
                    let denom = v[0] + v[2] - v[1] - v[3];
                    let saddle = if denom == 0.0 {
                        0.25 * v.iter().sum::<f64>()
                    } else {
                        (v[0] * v[2] - v[1] * v[3]) / denom
                    };
                    let centre_above = saddle >= level;
                    for c in 0..4 {
                        if above[c] != centre_above {
                            out.push(around[c]);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Level lines of `field` at each of `levels`, chained into polylines.
pub fn level_lines(field: &Field, levels: &[f64]) -> Vec<Polyline> {
    assert_eq!(
        field.z.len(),
        field.xs.len() * field.ys.len(),
        "field size mismatch"
    );
    let mut lines = Vec::new();
    for &level in levels {
        let segs = segments(field, level);
        let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
        for (n, (a, b)) in segs.iter().enumerate() {
            by_edge.entry(*a).or_default().push(n);
            by_edge.entry(*b).or_default().push(n);
        }
        let mut used = vec![false; segs.len()];
        let open_end = |n: usize| {
            let (a, b) = segs[n];
            if by_edge[&a].len() == 1 {
                Some(a)
            } else if by_edge[&b].len() == 1 {
                Some(b)
            } else {
                None
            }
        };
        // open chains first, starting from their free ends, then loops
        let starts: Vec<(usize, Option<Edge>)> = (0..segs.len())
            .filter_map(|n| open_end(n).map(|e| (n, Some(e))))
            .chain((0..segs.len()).map(|n| (n, None)))
            .collect();
        for (start, free) in starts {
            if used[start] {
                continue;
            }
            let first = free.unwrap_or(segs[start].0);
            let mut edges = vec![first];
            let mut current = start;
            let mut at = first;
            loop {
                used[current] = true;
                let (a, b) = segs[current];
                let next_edge = if a == at { b } else { a };
                edges.push(next_edge);
                at = next_edge;
                match by_edge[&at].iter().copied().find(|&n| !used[n]) {
                    Some(n) => current = n,
                    None => break,
                }
            }
            let closed = edges.len() > 2 && edges.first() == edges.last();
            lines.push(Polyline {
                level,
                points: edges.iter().map(|&e| field.crossing(e, level)).collect(),
                closed,
            });
        }
    }
    lines
}
