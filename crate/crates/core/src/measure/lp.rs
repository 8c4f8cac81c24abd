use std::collections::HashMap;

use rayon::prelude::*;

use super::DiscreteMeasure;
use crate::flow::FlowNetwork;
use crate::space::MetricSpace;
use crate::Error;

/// Flow deficits below this count as zero.
const FLOW_TOL: f64 = 1e-12;
/// Width at which the real-valued bisection stops.
const BISECTION_TOL: f64 = 1e-10;
/// Up to this many candidate distances the search runs over them exactly.
const LEVEL_SEARCH_PAIRS: usize = 1 << 22;
/// Most pairs kept in memory; beyond this distances are recomputed per probe.
const SPARSE_PAIRS: usize = 1 << 23;
/// Smallest probe of the doubling search.
const FIRST_PROBE: f64 = 1.0 / 1048576.0;
const CHUNK: usize = 1024;

/// Lévy-Prokhorov distance between two finite-support measures.
///
/// `rho <= eps` exactly when a transport plan using only pairs at distance at
/// most `eps` moves mass at least `1 - eps`; the largest such mass is a
/// maximum flow on the bipartite support graph. Nearest-neighbour distances
/// give a lower bound; a doubling search from there brackets the answer and
/// keeps only the pairs inside the bracket. The deficit `1 - F(eps)` only
/// changes at pairwise distances, so when the bracket holds few enough of
/// them the search runs over those and the result is exact up to rounding in
/// the flow. Otherwise it bisects on `eps` to width `1e-10` and snaps to the
/// closed form on the final step.
pub fn lp_distance<S: MetricSpace>(
    space: &S,
    mu: &DiscreteMeasure<S::Point>,
    nu: &DiscreteMeasure<S::Point>,
) -> Result<f64, Error> {
    for m in [mu, nu] {
        if m.kind() != space.kind() {
            return Err(Error::SpaceMismatch(m.kind(), space.kind()));
        }
    }
    let a: Vec<f64> = mu.atoms().iter().map(|x| x.1).collect();
    let b: Vec<f64> = nu.atoms().iter().map(|x| x.1).collect();
    let (ma, na) = (mu.atoms(), nu.atoms());
    Ok(solve(
        &a,
        &b,
        &|i, j| space.distance(&ma[i].0, &na[j].0),
        LEVEL_SEARCH_PAIRS,
    ))
}

/// [`lp_distance`] for weights `a`, `b` and a distance matrix `d[i][j]`.
pub fn lp_distance_matrix(a: &[f64], b: &[f64], d: &[Vec<f64>]) -> f64 {
    solve(a, b, &|i, j| d[i][j], LEVEL_SEARCH_PAIRS)
}

/// Reference value from the definition: for every subset `A` of the support
/// of `mu`, the least `eps` with `mu(A) <= nu(A^eps) + eps`, maximised over
/// `A`. Exponential in the support size.
pub fn lp_oracle_matrix(a: &[f64], b: &[f64], d: &[Vec<f64>]) -> f64 {
    assert!(a.len() <= 20, "subset enumeration is exponential");
    let mut worst: f64 = 0.0;
    let mut to_set = vec![f64::INFINITY; b.len()];
    for mask in 1u32..(1 << a.len()) {
        let mass: f64 = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).sum();
        for (j, t) in to_set.iter_mut().enumerate() {
            *t = (0..a.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| d[i][j])
                .fold(f64::INFINITY, f64::min);
        }
        // on [t_l, t_{l+1}) the violation is mass - nu(A^t_l); take the first
        // level where eps catches up with it
        let mut order: Vec<usize> = (0..b.len()).collect();
        order.sort_by(|&x, &y| to_set[x].total_cmp(&to_set[y]));
        let mut levels = vec![0.0];
        levels.extend(order.iter().map(|&j| to_set[j]));
        let mut eps_a = f64::INFINITY;
        for &v in &levels {
            let covered: f64 = (0..b.len()).filter(|&j| to_set[j] <= v).map(|j| b[j]).sum();
            eps_a = eps_a.min(v.max(mass - covered));
        }
        worst = worst.max(eps_a.min(1.0));
    }
    worst
}

type Dist<'a> = &'a (dyn Fn(usize, usize) -> f64 + Sync);

fn solve(a: &[f64], b: &[f64], dist: Dist, level_pairs: usize) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    if a.len() < b.len() {
        let flipped = |i: usize, j: usize| dist(j, i);
        solve_oriented(b, a, &flipped, level_pairs)
    } else {
        solve_oriented(a, b, dist, level_pairs)
    }
}

/// `big` has at least as many atoms as `small`; `dist(i, j)` pairs them.
fn solve_oriented(big: &[f64], small: &[f64], dist: Dist, level_pairs: usize) -> f64 {
    let mut lo = 0.0;
    let mut hi = (1.25 * lower_bound(big, small, dist)).clamp(FIRST_PROBE, 1.0);
    loop {
        let Some(sparse) = Sparse::collect(big, small, dist, hi) else {
            let dense = Dense { big, small, dist };
            let (lo, hi) = bracket(&dense, lo, hi);
            return search(&dense, lo, hi, level_pairs);
        };
        if sparse.deficit(hi) <= hi {
            return search(&sparse, lo, hi, level_pairs);
        }
        lo = hi;
        hi = (2.0 * hi).min(1.0);
    }
}

/// Double `hi` until it is feasible; `lo` trails as the last infeasible probe.
fn bracket(adj: &impl Adjacency, mut lo: f64, mut hi: f64) -> (f64, f64) {
    while hi < 1.0 && adj.deficit(hi) > hi {
        lo = hi;
        hi = (2.0 * hi).min(1.0);
    }
    (lo, hi)
}

/// Atoms with no partner within `eps` cannot be moved, so the deficit is at
/// least the mass of such atoms on either side; the least `eps` that covers
/// that bound is a lower bound for the distance.
fn lower_bound(big: &[f64], small: &[f64], dist: Dist) -> f64 {
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..big.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut nn_small = vec![f64::INFINITY; small.len()];
            let nn_big = (c * CHUNK..big.len().min((c + 1) * CHUNK))
                .map(|i| {
                    let mut m = f64::INFINITY;
                    for (j, s) in nn_small.iter_mut().enumerate() {
                        let d = dist(i, j);
                        m = m.min(d);
                        *s = s.min(d);
                    }
                    m
                })
                .collect();
            (nn_big, nn_small)
        })
        .collect();
    let mut nn_small = vec![f64::INFINITY; small.len()];
    let mut nn_big = Vec::with_capacity(big.len());
    for (nb, ns) in partial {
        nn_big.extend(nb);
        nn_small.iter_mut().zip(ns).for_each(|(x, y)| *x = x.min(y));
    }
    let unmatched = |nn: &[f64], w: &[f64]| {
        let mut v: Vec<(f64, f64)> = nn.iter().copied().zip(w.iter().copied()).collect();
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        // tail[k] = mass of entries k.. in sorted order
        let mut tail = vec![0.0; v.len() + 1];
        for k in (0..v.len()).rev() {
            tail[k] = tail[k + 1] + v[k].1;
        }
        (v, tail)
    };
    let (vb, tb) = unmatched(&nn_big, big);
    let (vs, ts) = unmatched(&nn_small, small);
    let g = |eps: f64| {
        let kb = vb.partition_point(|x| x.0 <= eps);
        let ks = vs.partition_point(|x| x.0 <= eps);
        tb[kb].max(ts[ks])
    };
    std::iter::once(0.0)
        .chain(vb.iter().chain(&vs).map(|x| x.0))
        .map(|v| v.max(g(v)))
        .fold(1.0, f64::min)
}

trait Adjacency {
    /// `1 - F(eps)`, with rounding noise flushed to zero.
    fn deficit(&self, eps: f64) -> f64;
    /// Distinct distances in `(lo, hi]`, or `None` if there are more than `limit`.
    fn levels(&self, lo: f64, hi: f64, limit: usize) -> Option<Vec<f64>>;
    /// Largest distance at most `eps`, or 0.
    fn level_start(&self, eps: f64) -> f64;
}

/// Least feasible `eps` given that `lo` is infeasible (or 0) and `hi` feasible.
fn search(adj: &impl Adjacency, lo: f64, hi: f64, level_pairs: usize) -> f64 {
    if adj.deficit(0.0) == 0.0 {
        return 0.0;
    }
    if let Some(mut levels) = adj.levels(lo, hi, level_pairs) {
        // the deficit g is constant between consecutive distances and on
        // [lo, first level) it equals g(lo); h(l) = max(v_l, g_l) has v
        // increasing and g non-increasing, so the minimum sits where v first
        // catches g or just before
        levels.insert(0, lo);
        let (mut l, mut r) = (0usize, levels.len());
        while l < r {
            let mid = (l + r) / 2;
            if levels[mid] >= adj.deficit(levels[mid]) {
                r = mid;
            } else {
                l = mid + 1;
            }
        }
        let best = if l == levels.len() {
            adj.deficit(levels[l - 1])
        } else if l == 0 {
            levels[0]
        } else {
            levels[l].min(adj.deficit(levels[l - 1]))
        };
        return best.min(1.0);
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if adj.deficit(mid) <= mid {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // on the level containing hi the deficit is constant, so the infimum of
    // the feasible set within that level is max(level start, deficit)
    adj.level_start(hi).max(adj.deficit(hi)).min(hi)
}

fn flush(flow: f64) -> f64 {
    let g = 1.0 - flow;
    if g < FLOW_TOL {
        0.0
    } else {
        g
    }
}

/// For each atom of the big side, its partners within the collection radius
/// sorted by distance.
struct Sparse<'a> {
    big: &'a [f64],
    small: &'a [f64],
    near: Vec<Vec<(u32, f64)>>,
}

impl<'a> Sparse<'a> {
    fn collect(big: &'a [f64], small: &'a [f64], dist: Dist, radius: f64) -> Option<Self> {
        let kept = std::sync::atomic::AtomicUsize::new(0);
        let near: Option<Vec<Vec<(u32, f64)>>> = (0..big.len())
            .into_par_iter()
            .map(|i| {
                let mut v: Vec<(u32, f64)> = (0..small.len())
                    .map(|j| (j as u32, dist(i, j)))
                    .filter(|x| x.1 <= radius)
                    .collect();
                let total = kept.fetch_add(v.len(), std::sync::atomic::Ordering::Relaxed);
                if total + v.len() > SPARSE_PAIRS {
                    return None;
                }
                v.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
                Some(v)
            })
            .collect();
        Some(Self {
            big,
            small,
            near: near?,
        })
    }
}

impl Adjacency for Sparse<'_> {
    fn deficit(&self, eps: f64) -> f64 {
        let words = self.small.len().div_ceil(64);
        let masks = self.near.iter().map(|v| {
            let mut m = vec![0u64; words];
            for &(j, d) in v {
                if d > eps {
                    break;
                }
                m[j as usize / 64] |= 1 << (j % 64);
            }
            m
        });
        flush(grouped_flow(self.big, self.small, masks))
    }

    fn levels(&self, lo: f64, hi: f64, limit: usize) -> Option<Vec<f64>> {
        let mut v: Vec<f64> = self
            .near
            .iter()
            .flatten()
            .map(|x| x.1)
            .filter(|&d| d > lo && d <= hi)
            .collect();
        if v.len() > limit {
            return None;
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        Some(v)
    }

    fn level_start(&self, eps: f64) -> f64 {
        self.near
            .iter()
            .flatten()
            .map(|x| x.1)
            .filter(|&d| d <= eps)
            .fold(0.0, f64::max)
    }
}

/// Recomputes distances on every query.
struct Dense<'a> {
    big: &'a [f64],
    small: &'a [f64],
    dist: Dist<'a>,
}

impl Adjacency for Dense<'_> {
    fn deficit(&self, eps: f64) -> f64 {
        let words = self.small.len().div_ceil(64);
        let masks: Vec<Vec<u64>> = (0..self.big.len())
            .into_par_iter()
            .map(|i| {
                let mut m = vec![0u64; words];
                for j in 0..self.small.len() {
                    if (self.dist)(i, j) <= eps {
                        m[j / 64] |= 1 << (j % 64);
                    }
                }
                m
            })
            .collect();
        flush(grouped_flow(self.big, self.small, masks.into_iter()))
    }

    fn levels(&self, lo: f64, hi: f64, limit: usize) -> Option<Vec<f64>> {
        let count = (0..self.big.len())
            .into_par_iter()
            .map(|i| {
                (0..self.small.len())
                    .filter(|&j| {
                        let d = (self.dist)(i, j);
                        d > lo && d <= hi
                    })
                    .count()
            })
            .sum::<usize>();
        if count > limit {
            return None;
        }
        let mut v: Vec<f64> = (0..self.big.len())
            .flat_map(|i| (0..self.small.len()).map(move |j| (i, j)))
            .map(|(i, j)| (self.dist)(i, j))
            .filter(|&d| d > lo && d <= hi)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Some(v)
    }

    fn level_start(&self, eps: f64) -> f64 {
        (0..self.big.len())
            .into_par_iter()
            .map(|i| {
                (0..self.small.len())
                    .map(|j| (self.dist)(i, j))
                    .filter(|&d| d <= eps)
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Maximum mass movable from `big` to `small` when big atom `i` may reach the
/// small atoms flagged in `masks[i]`. Big atoms with the same neighbourhood
/// are merged first, in index order so the result is reproducible.
fn grouped_flow(big: &[f64], small: &[f64], masks: impl Iterator<Item = Vec<u64>>) -> f64 {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut groups: Vec<f64> = Vec::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    for (m, &w) in masks.zip(big) {
        if m.iter().all(|&x| x == 0) {
            continue;
        }
        if let Some(&g) = index.get(&m) {
            groups[g] += w;
            continue;
        }
        let js = (0..small.len())
            .filter(|&j| m[j / 64] >> (j % 64) & 1 == 1)
            .collect();
        index.insert(m, groups.len());
        groups.push(w);
        edges.push(js);
    }
    let source = 0;
    let sink = 1 + groups.len() + small.len();
    let mut net = FlowNetwork::new(sink + 1);
    for (g, (w, js)) in groups.iter().zip(&edges).enumerate() {
        net.add_edge(source, 1 + g, *w);
        for &j in js {
            net.add_edge(1 + g, 1 + groups.len() + j, f64::INFINITY);
        }
    }
    for (j, &w) in small.iter().enumerate() {
        net.add_edge(1 + groups.len() + j, sink, w);
    }
    net.max_flow(source, sink)
}
