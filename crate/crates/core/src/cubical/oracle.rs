//! Independent checks for the reduction: Betti numbers of a sublevel
//! subcomplex by dense GF(2) elimination, and H0 by union-find.

use super::CubicalComplex;

/// Betti numbers `β_0 .. β_{n-1}` of `{cells : grade <= t}`, from ranks of
/// the boundary maps. Dense and cubic; only meant for small complexes.
pub fn betti_oracle(c: &CubicalComplex, t: f64) -> Vec<usize> {
    let top = c.topology();
    let n = top.ambient_dim();
    let cells: Vec<Vec<usize>> = (0..=n)
        .map(|k| {
            top.cells_of_dim(k)
                .iter()
                .map(|&id| id as usize)
                .filter(|&id| c.grade(id) <= t)
                .collect()
        })
        .collect();
    // rank[k] = rank of the boundary map C_k -> C_{k-1}
    let mut rank = vec![0usize; n + 2];
    for k in 1..=n {
        let mut row_of = std::collections::HashMap::new();
        for (r, &id) in cells[k - 1].iter().enumerate() {
            row_of.insert(id, r);
        }
        let words = cells[k - 1].len().div_ceil(64);
        let columns: Vec<Vec<u64>> = cells[k]
            .iter()
            .map(|&id| {
                let mut bits = vec![0u64; words];
                for f in top.faces(id) {
                    let r = row_of[&f];
                    bits[r / 64] ^= 1 << (r % 64);
                }
                bits
            })
            .collect();
        rank[k] = gf2_rank(columns, cells[k - 1].len());
    }
    (0..n)
        .map(|k| cells[k].len() - rank[k] - rank[k + 1])
        .collect()
}

/// Row-echelon elimination over GF(2) on bit-packed vectors.
fn gf2_rank(mut vectors: Vec<Vec<u64>>, nbits: usize) -> usize {
    let mut rank = 0;
    for bit in 0..nbits {
        let (w, mask) = (bit / 64, 1u64 << (bit % 64));
        let Some(p) = (rank..vectors.len()).find(|&i| vectors[i][w] & mask != 0) else {
            continue;
        };
        vectors.swap(rank, p);
        let pivot = vectors[rank].clone();
        for (i, v) in vectors.iter_mut().enumerate() {
            if i != rank && v[w] & mask != 0 {
                v.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Connected components of the vertex–edge graph at threshold `t`.
pub fn component_count(c: &CubicalComplex, t: f64) -> usize {
    let top = c.topology();
    let vertices: Vec<usize> = top
        .cells_of_dim(0)
        .iter()
        .map(|&id| id as usize)
        .filter(|&id| c.grade(id) <= t)
        .collect();
    let mut index = vec![usize::MAX; c.num_cells()];
    for (i, &v) in vertices.iter().enumerate() {
        index[v] = i;
    }
    let mut uf = UnionFind::new(vertices.len());
    for &e in top.cells_of_dim(1) {
        let e = e as usize;
        if c.grade(e) <= t {
            let mut ends = top.faces(e);
            let (a, b) = (ends.next().unwrap(), ends.next().unwrap());
            uf.union(index[a], index[b]);
        }
    }
    uf.components()
}
