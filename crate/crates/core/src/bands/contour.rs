//! Marching squares on a periodic grid.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::lattice::Momentum2;

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    /// Vertices in order. Coordinates are not wrapped; consecutive vertices may
    /// differ by a reciprocal lattice vector where a line crosses the zone edge.
    pub points: Vec<Momentum2>,
    pub closed: bool,
}

impl Polyline {
    pub fn segment_count(&self) -> usize {
        match (self.points.len(), self.closed) {
            (0 | 1, _) => 0,
            (n, true) => n,
            (n, false) => n - 1,
        }
    }

    /// Vertex indices of segment `k`.
    pub fn segment(&self, k: usize) -> (usize, usize) {
        (k, (k + 1) % self.points.len())
    }
}

/// Zero level set of `f` sampled on an n×n grid over [−b/2, b/2)², periodic
/// with period `b`. Nodes where `f` returns `None` are excluded, and so is
/// every cell touching one.
pub fn iso_contours<F>(f: F, period: f64, n: usize) -> Vec<Polyline>
where
    F: Fn(Momentum2) -> Option<f64> + Sync,
{
    let h = period / n as f64;
    let node = |i: usize, j: usize| Momentum2::new(-0.5 * period + i as f64 * h, -0.5 * period + j as f64 * h);
    let values: Vec<Option<f64>> = (0..n * n).into_par_iter().map(|k| f(node(k / n, k % n))).collect();
    let at = |i: usize, j: usize| values[(i % n) * n + (j % n)];

    // Edge ids: 2·(i·n + j) for (i,j)–(i+1,j), 2·(i·n + j) + 1 for (i,j)–(i,j+1).
    let hedge = |i: usize, j: usize| 2 * ((i % n) * n + (j % n));
    let vedge = |i: usize, j: usize| 2 * ((i % n) * n + (j % n)) + 1;
    let crossing = |id: usize| -> Momentum2 {
        let base = id / 2;
        let (i, j) = (base / n, base % n);
        let (di, dj) = if id % 2 == 0 { (1, 0) } else { (0, 1) };
        let v0 = at(i, j).unwrap_or(0.0);
        let v1 = at(i + di, j + dj).unwrap_or(0.0);
        let t = if v0 == v1 { 0.5 } else { v0 / (v0 - v1) };
        node(i, j) + Momentum2::new(di as f64 * t * h, dj as f64 * t * h)
    };

    let mut segments: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let Some(v) = c.iter().copied().collect::<Option<Vec<f64>>>() else { continue };
            let bits = v.iter().enumerate().fold(0u8, |acc, (k, x)| acc | (((*x >= 0.0) as u8) << k));
            // edges: 0 bottom, 1 right, 2 top, 3 left
            let e = [hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)];
            let centre_pos = v.iter().sum::<f64>() >= 0.0;
            let pairs: &[(usize, usize)] = match bits {
                0 | 15 => &[],
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(2, 3)],
                5 => {
                    if centre_pos {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if centre_pos {
                        &[(0, 3), (1, 2)]
                    } else {
                        &[(0, 1), (2, 3)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                segments.push((e[a], e[b]));
            }
        }
    }

    let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(k);
        by_edge.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let mut forward = vec![a, b];
        let mut closed = false;
        walk(&mut forward, &segments, &by_edge, &mut used);
        if forward.len() > 2 && forward.first() == forward.last() {
            forward.pop();
            closed = true;
        } else {
            let mut backward = vec![b, a];
            walk(&mut backward, &segments, &by_edge, &mut used);
            backward.reverse();
            backward.pop();
            backward.pop();
            backward.extend(forward);
            forward = backward;
        }
        let mut points: Vec<Momentum2> = forward.iter().map(|&id| crossing(id)).collect();
        unwrap_path(&mut points, period);
        lines.push(Polyline { points, closed });
    }
    lines
}

fn walk(path: &mut Vec<usize>, segments: &[(usize, usize)], by_edge: &HashMap<usize, Vec<usize>>, used: &mut [bool]) {
    loop {
        let tip = *path.last().unwrap();
        let next = by_edge[&tip].iter().copied().find(|&k| !used[k]);
        let Some(k) = next else { break };
        used[k] = true;
        let (a, b) = segments[k];
        let other = if a == tip { b } else { a };
        path.push(other);
        if other == path[0] {
            break;
        }
    }
}

/// Makes consecutive vertices continuous across the periodic boundary.
fn unwrap_path(points: &mut [Momentum2], period: f64) {
    for k in 1..points.len() {
        let prev = points[k - 1];
        let p = &mut points[k];
        p.kx -= period * ((p.kx - prev.kx) / period).round();
        p.ky -= period * ((p.ky - prev.ky) / period).round();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_one_closed_loop() {
        let lines = iso_contours(|q| Some(q.norm() - 1.0), 4.0, 64);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].closed);
        for p in &lines[0].points {
            assert!((p.norm() - 1.0).abs() < 2e-3);
        }
        let len: f64 = (0..lines[0].segment_count())
            .map(|k| {
                let (a, b) = lines[0].segment(k);
                (lines[0].points[a] - lines[0].points[b]).norm()
            })
            .sum();
        assert!((len - 2.0 * std::f64::consts::PI).abs() < 1e-2);
    }

    #[test]
    fn periodic_line_wraps_around() {
        // cos(2πx/b) = 0 gives two straight lines closing through the boundary
        let b = 2.0;
        let lines = iso_contours(|q| Some((std::f64::consts::PI * q.kx).cos() + 1e-3), b, 32);
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.closed));
    }

    #[test]
    fn excluded_region_cuts_lines() {
        let lines = iso_contours(|q| (q.ky.abs() > 0.3).then(|| q.norm() - 1.0), 4.0, 64);
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| !l.closed));
    }
}
