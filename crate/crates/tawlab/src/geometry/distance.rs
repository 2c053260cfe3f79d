//! Grid-Dijkstra distance computations for the conformal metric g = c⁻²δ.
//!
//! Distances are computed on a wide-stencil uniform grid graph (coprime
//! moves up to 4 cells, 48 edges per node, worst-direction overshoot
//! ≤ 0.8%) with Simpson-integrated slowness 1/c as the edge weight,
//! optionally restricted to the closed exterior of an obstacle domain (for
//! the exterior distance dist₀, where long edges are rejected if they hop
//! the obstacle). Point-to-point queries are additionally followed by a
//! local ray refinement: repeated node-skipping plus a small transverse
//! relaxation of the polyline, with lengths re-measured by Simpson
//! quadrature. Multi-source fields (no refinement) serve the sup/inf set
//! distances and τ-weighted searches.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::math::{vec2, Vec2};
use crate::speed::SpeedField;

#[derive(Clone, Copy, Debug)]
pub struct DistanceGridSpec {
    pub half_width: f64,
    pub n: usize,
}

impl DistanceGridSpec {
    pub fn new(half_width: f64, n: usize) -> Self {
        DistanceGridSpec { half_width, n }
    }

    /// Covers the domain with a margin of a few cells.
    pub fn for_domain(domain: &Domain, n: usize) -> Self {
        let r = domain.outer_radius();
        DistanceGridSpec { half_width: r * (1.0 + 8.0 / n as f64) + 0.1, n }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    fn stride(&self) -> usize {
        self.n + 1
    }

    fn node_pos(&self, i: usize, j: usize) -> Vec2 {
        vec2(
            -self.half_width + i as f64 * self.h(),
            -self.half_width + j as f64 * self.h(),
        )
    }

    fn nearest_node(&self, p: Vec2) -> (usize, usize) {
        let h = self.h();
        let i = ((p.x + self.half_width) / h).round().clamp(0.0, self.n as f64) as usize;
        let j = ((p.y + self.half_width) / h).round().clamp(0.0, self.n as f64) as usize;
        (i, j)
    }

    fn in_box(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_width && p.y.abs() <= self.half_width
    }
}

#[derive(PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on dist
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A solved multi-source distance field on the grid.
pub struct DistanceField {
    pub spec: DistanceGridSpec,
    pub dist: Vec<f64>,
    prev: Vec<u32>,
}

const NO_PREV: u32 = u32::MAX;

/// Constraint on which grid nodes participate.
#[derive(Clone, Copy)]
pub enum NodeFilter<'a> {
    All,
    /// Keep nodes with β ≥ −band (the closed exterior plus a thin collar),
    /// for the obstacle-aware exterior distance.
    Exterior { domain: &'a Domain, band: f64 },
}

impl NodeFilter<'_> {
    fn allows(&self, p: Vec2) -> bool {
        match self {
            NodeFilter::All => true,
            NodeFilter::Exterior { domain, band } => domain.signed_boundary_distance(p) >= -band,
        }
    }
}

/// Multi-source Dijkstra. Each source is (position, initial offset ≥ 0); the
/// field value at x is min over sources of (offset + metric distance).
pub fn distance_field(
    c: &SpeedField,
    sources: &[(Vec2, f64)],
    spec: DistanceGridSpec,
    filter: NodeFilter,
) -> DistanceField {
    let stride = spec.stride();
    let n_nodes = stride * stride;
    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut prev = vec![NO_PREV; n_nodes];
    let mut heap = BinaryHeap::new();

    let allowed: Vec<bool> = (0..n_nodes)
        .map(|idx| filter.allows(spec.node_pos(idx % stride, idx / stride)))
        .collect();
    let cval: Vec<f64> = (0..n_nodes)
        .map(|idx| c.value(spec.node_pos(idx % stride, idx / stride)))
        .collect();

    for &(p, offset) in sources {
        if !spec.in_box(p) {
            continue;
        }
        let (i, j) = spec.nearest_node(p);
        let idx = j * stride + i;
        if !allowed[idx] {
            continue;
        }
        // connect the off-grid source to its nearest node
        let d0 = offset + segment_metric_length(c, p, spec.node_pos(i, j));
        if d0 < dist[idx] {
            dist[idx] = d0;
            heap.push(HeapItem { dist: d0, node: idx });
        }
    }

    let h = spec.h();
    // directions with coprime components up to |·| ≤ 4 per axis keep the
    // worst angular gap at 14° (≤ 0.8% path overshoot before refinement)
    let base: [(isize, isize); 7] = [(1, 0), (1, 1), (2, 1), (3, 1), (4, 1), (3, 2), (4, 3)];
    let mut offsets: Vec<(isize, isize, f64)> = Vec::new();
    for &(a, b) in &base {
        let len = ((a * a + b * b) as f64).sqrt() * h;
        let mut dirs = vec![(a, b), (-a, -b), (b, a), (-b, -a), (a, -b), (-a, b), (b, -a), (-b, a)];
        dirs.sort_unstable();
        dirs.dedup();
        for (di, dj) in dirs {
            offsets.push((di, dj, len));
        }
    }
    let restricted = matches!(filter, NodeFilter::Exterior { .. });

    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        let i = (node % stride) as isize;
        let j = (node / stride) as isize;
        for &(di, dj, len) in &offsets {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni > spec.n as isize || nj > spec.n as isize {
                continue;
            }
            let nidx = nj as usize * stride + ni as usize;
            if !allowed[nidx] {
                continue;
            }
            let p = spec.node_pos(i as usize, j as usize);
            let q = spec.node_pos(ni as usize, nj as usize);
            // long edges must not hop across the obstacle: test the nearest
            // lattice nodes along the segment against the precomputed mask
            if restricted && (di.abs().max(dj.abs()) > 1) {
                let samples = di.abs().max(dj.abs()) as usize * 2;
                let ok = (1..samples).all(|k| {
                    let t = k as f64 / samples as f64;
                    let (si, sj) = spec.nearest_node(p + (q - p) * t);
                    allowed[sj * stride + si]
                });
                if !ok {
                    continue;
                }
            }
            // Simpson slowness along the edge (reduces to the two-point
            // average for unit moves up to the midpoint term)
            let cm = c.value((p + q) * 0.5);
            let w = len * (1.0 / cval[node] + 4.0 / cm + 1.0 / cval[nidx]) / 6.0;
            let nd = d + w;
            if nd < dist[nidx] {
                dist[nidx] = nd;
                prev[nidx] = node as u32;
                heap.push(HeapItem { dist: nd, node: nidx });
            }
        }
    }

    DistanceField { spec, dist, prev }
}

impl DistanceField {
    /// Bilinear interpolation of the field (∞ if any corner is unreached).
    pub fn value(&self, p: Vec2) -> f64 {
        let spec = &self.spec;
        if !spec.in_box(p) {
            return f64::INFINITY;
        }
        let h = spec.h();
        let fx = ((p.x + spec.half_width) / h).clamp(0.0, spec.n as f64 - 1e-9);
        let fy = ((p.y + spec.half_width) / h).clamp(0.0, spec.n as f64 - 1e-9);
        let i = fx.floor() as usize;
        let j = fy.floor() as usize;
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let s = spec.stride();
        let v00 = self.dist[j * s + i];
        let v10 = self.dist[j * s + i + 1];
        let v01 = self.dist[(j + 1) * s + i];
        let v11 = self.dist[(j + 1) * s + i + 1];
        if !(v00.is_finite() && v10.is_finite() && v01.is_finite() && v11.is_finite()) {
            // fall back to the nearest node
            let (ni, nj) = spec.nearest_node(p);
            return self.dist[nj * s + ni];
        }
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    fn path_to(&self, node: usize) -> Vec<Vec2> {
        let mut out = Vec::new();
        let mut cur = node;
        let s = self.spec.stride();
        loop {
            out.push(self.spec.node_pos(cur % s, cur / s));
            let p = self.prev[cur];
            if p == NO_PREV {
                break;
            }
            cur = p as usize;
        }
        out.reverse();
        out
    }
}

/// Metric length of a straight segment: Simpson quadrature of 1/c.
fn segment_metric_length(c: &SpeedField, a: Vec2, b: Vec2) -> f64 {
    let len = (b - a).norm();
    if len == 0.0 {
        return 0.0;
    }
    // panel count scaled to the segment length at unit resolution
    let panels = ((len * 16.0).ceil() as usize).clamp(2, 64);
    let mut acc = 0.0;
    let n = 2 * panels;
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w / c.value(a + (b - a) * t);
    }
    acc * len / (3.0 * n as f64)
}

fn segment_feasible(domain: &Domain, band: f64, a: Vec2, b: Vec2) -> bool {
    let len = (b - a).norm();
    let steps = ((len / band.max(1e-9)) * 4.0).ceil() as usize + 1;
    (0..=steps).all(|k| {
        let t = k as f64 / steps as f64;
        domain.signed_boundary_distance(a + (b - a) * t) >= -band
    })
}

/// One local ray refinement: node-skipping sweeps followed by a transverse
/// relaxation, both measured by quadrature and (optionally) constrained to
/// stay within `band` of the obstacle exterior.
fn refine_path(
    c: &SpeedField,
    mut path: Vec<Vec2>,
    obstacle: Option<(&Domain, f64)>,
    h: f64,
) -> f64 {
    let feasible = |a: Vec2, b: Vec2| match obstacle {
        None => true,
        Some((d, band)) => segment_feasible(d, band, a, b),
    };
    // pass 1: greedy shortcutting until stable
    for _ in 0..200 {
        if path.len() <= 2 {
            break;
        }
        let mut changed = false;
        let mut out: Vec<Vec2> = Vec::with_capacity(path.len());
        out.push(path[0]);
        let mut k = 1;
        while k < path.len() - 1 {
            let a = *out.last().unwrap();
            let mid = path[k];
            let b = path[k + 1];
            let through = segment_metric_length(c, a, mid) + segment_metric_length(c, mid, b);
            let direct = segment_metric_length(c, a, b);
            if direct <= through - 1e-14 && feasible(a, b) {
                changed = true;
                // skip mid
            } else {
                out.push(mid);
            }
            k += 1;
        }
        out.push(*path.last().unwrap());
        path = out;
        if !changed {
            break;
        }
    }
    // pass 2: transverse relaxation of interior nodes
    for _ in 0..3 {
        for k in 1..path.len().saturating_sub(1) {
            let a = path[k - 1];
            let b = path[k + 1];
            let v = path[k];
            let tang = (b - a).normalized();
            let perp = tang.perp();
            let mid = (a + b) * 0.5;
            let mut best = v;
            let mut best_len = segment_metric_length(c, a, v) + segment_metric_length(c, v, b);
            for &cand in &[
                mid,
                v + perp * (0.5 * h),
                v - perp * (0.5 * h),
                v + perp * (0.25 * h),
                v - perp * (0.25 * h),
            ] {
                if !feasible(a, cand) || !feasible(cand, b) {
                    continue;
                }
                let l = segment_metric_length(c, a, cand) + segment_metric_length(c, cand, b);
                if l < best_len {
                    best_len = l;
                    best = cand;
                }
            }
            path[k] = best;
        }
    }
    path.windows(2).map(|w| segment_metric_length(c, w[0], w[1])).sum()
}

/// Distance between two points in the metric g = c⁻²δ (unconstrained; the
/// speed field is defined on the whole box, c = 1 outside Ω).
pub fn metric_distance(c: &SpeedField, a: Vec2, b: Vec2, spec: DistanceGridSpec) -> Result<f64> {
    if !spec.in_box(a) || !spec.in_box(b) {
        return Err(Error::precondition(
            "metric_distance endpoints must lie inside the computational box",
        ));
    }
    if (a - b).norm() == 0.0 {
        return Ok(0.0);
    }
    let field = distance_field(c, &[(a, 0.0)], spec, NodeFilter::All);
    let (bi, bj) = spec.nearest_node(b);
    let bidx = bj * spec.stride() + bi;
    if !field.dist[bidx].is_finite() {
        return Err(Error::Accuracy("no grid path between the endpoints".into()));
    }
    let mut path = field.path_to(bidx);
    // connect the off-grid endpoints
    if let Some(first) = path.first().copied() {
        if (first - a).norm() > 1e-12 {
            path.insert(0, a);
        }
    }
    if (b - *path.last().unwrap()).norm() > 1e-12 {
        path.push(b);
    }
    Ok(refine_path(c, path, None, spec.h()))
}

/// Exterior distance dist₀: infimum of lengths of curves staying outside Ω
/// (unit speed there). Endpoints must be outside or on ∂Ω.
pub fn exterior_distance(domain: &Domain, a: Vec2, b: Vec2, spec: DistanceGridSpec) -> Result<f64> {
    let h = spec.h();
    domain.precondition_outside(a, h)?;
    domain.precondition_outside(b, h)?;
    if (a - b).norm() == 0.0 {
        return Ok(0.0);
    }
    let unit = SpeedField::constant(1.0);
    let filter = NodeFilter::Exterior { domain, band: h };
    let field = distance_field(&unit, &[(a, 0.0)], spec, filter);
    let (bi, bj) = spec.nearest_node(b);
    let bidx = bj * spec.stride() + bi;
    if !field.dist[bidx].is_finite() {
        return Err(Error::Accuracy("no exterior grid path between the endpoints".into()));
    }
    let mut path = field.path_to(bidx);
    if let Some(first) = path.first().copied() {
        if (first - a).norm() > 1e-12 {
            path.insert(0, a);
        }
    }
    if (b - *path.last().unwrap()).norm() > 1e-12 {
        path.push(b);
    }
    Ok(refine_path(&unit, path, Some((domain, h)), h))
}

/// The asymmetric set distance sup_{a∈A} inf_{b∈B} metric(a,b), literally
/// over the given samplings with a caller-supplied pairwise metric.
pub fn set_distance(
    a_pts: &[Vec2],
    b_pts: &[Vec2],
    metric: &dyn Fn(Vec2, Vec2) -> f64,
) -> Result<f64> {
    if a_pts.is_empty() || b_pts.is_empty() {
        return Err(Error::precondition("set_distance requires non-empty samplings"));
    }
    let mut sup = 0.0f64;
    for &a in a_pts {
        let mut inf = f64::INFINITY;
        for &b in b_pts {
            let d = metric(a, b);
            if d < inf {
                inf = d;
            }
        }
        sup = sup.max(inf);
    }
    Ok(sup)
}
