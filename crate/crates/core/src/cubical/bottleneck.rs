use std::collections::VecDeque;

use super::Bar;

/// Bottleneck distance between two diagrams of one degree.
///
/// Infinite bars only match infinite bars, at cost `|Δbirth|`; if the
/// counts differ the distance is `+inf`. Finite points may match each other
/// at L∞ cost or go to the diagonal at half their persistence. The finite
/// part is found by binary search over candidate costs with a perfect
/// matching test.
pub fn bottleneck(a: &[Bar], b: &[Bar]) -> f64 {
    let (a_inf, a_fin): (Vec<Bar>, Vec<Bar>) = a.iter().partition(|x| x.is_infinite());
    let (b_inf, b_fin): (Vec<Bar>, Vec<Bar>) = b.iter().partition(|x| x.is_infinite());
    if a_inf.len() != b_inf.len() {
        return f64::INFINITY;
    }
    let mut ab: Vec<f64> = a_inf.iter().map(|x| x.birth).collect();
    let mut bb: Vec<f64> = b_inf.iter().map(|x| x.birth).collect();
    ab.sort_by(f64::total_cmp);
    bb.sort_by(f64::total_cmp);
    let essential = ab
        .iter()
        .zip(&bb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    essential.max(finite_bottleneck(&a_fin, &b_fin))
}

fn linf(p: &Bar, q: &Bar) -> f64 {
    (p.birth - q.birth).abs().max((p.death - q.death).abs())
}

fn diag(p: &Bar) -> f64 {
    (p.death - p.birth) / 2.0
}

fn finite_bottleneck(a: &[Bar], b: &[Bar]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut candidates: Vec<f64> = a.iter().chain(b).map(diag).collect();
    for p in a {
        for q in b {
            candidates.push(linf(p, q));
        }
    }
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    // the largest candidate (every point to the diagonal) is always feasible
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(a, b, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Left side: points of `a`, then diagonal copies of `b`. Right side: points
/// of `b`, then diagonal copies of `a`.
fn perfect_matching(a: &[Bar], b: &[Bar], r: f64) -> bool {
    let (m, k) = (a.len(), b.len());
    let size = m + k;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            if linf(p, q) <= r {
                adj[i].push(j);
            }
        }
        if diag(p) <= r {
            adj[i].push(k + i);
        }
    }
    for (j, q) in b.iter().enumerate() {
        if diag(q) <= r {
            adj[m + j].push(j);
        }
        adj[m + j].extend(k..k + m);
    }
    hopcroft_karp(&adj, size) == size
}

fn hopcroft_karp(adj: &[Vec<usize>], right: usize) -> usize {
    const NONE: usize = usize::MAX;
    let left = adj.len();
    let mut match_l = vec![NONE; left];
    let mut match_r = vec![NONE; right];
    let mut dist = vec![0usize; left];
    let mut matched = 0;

    loop {
        let mut queue = VecDeque::new();
        for u in 0..left {
            if match_l[u] == NONE {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = NONE;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NONE {
                    found = true;
                } else if dist[w] == NONE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            return matched;
        }
        let mut next = vec![0usize; left];
        for u in 0..left {
            if match_l[u] == NONE && augment(u, adj, &mut match_l, &mut match_r, &mut dist, &mut next) {
                matched += 1;
            }
        }
    }
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    while next[u] < adj[u].len() {
        let v = adj[u][next[u]];
        next[u] += 1;
        let w = match_r[v];
        if w == usize::MAX
            || (dist[w] == dist[u] + 1 && augment(w, adj, match_l, match_r, dist, next))
        {
            match_l[u] = v;
            match_r[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}
