use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;
use crate::error::{Error, Result};

/// Reverse Cuthill–McKee ordering of the symmetrized pattern of `a`.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_pattern(a);
    let deg = |v: usize| adj.1[v + 1] - adj.1[v];
    let nbrs = |v: usize| &adj.0[adj.1[v]..adj.1[v + 1]];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    let mut scratch: Vec<u32> = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(start, &nbrs, &deg, &mut level);
        let base = order.len();
        visited[root] = true;
        order.push(root);
        let mut head = base;
        while head < order.len() {
            let v = order[head];
            head += 1;
            scratch.clear();
            scratch.extend(nbrs(v).iter().copied().filter(|&w| !visited[w as usize]));
            scratch.sort_by_key(|&w| (deg(w as usize), w));
            for &w in &scratch {
                visited[w as usize] = true;
                order.push(w as usize);
            }
        }
    }
    order.reverse();
    order
}

fn symmetric_pattern(a: &CsrMatrix) -> (Vec<u32>, Vec<usize>) {
    let n = a.nrows();
    let mut count = vec![0usize; n + 1];
    for i in 0..n {
        for &j in a.row(i).0 {
            let j = j as usize;
            if j != i {
                count[i + 1] += 1;
                count[j + 1] += 1;
            }
        }
    }
    for i in 0..n {
        count[i + 1] += count[i];
    }
    let mut fill = count.clone();
    let mut adj = vec![0u32; count[n]];
    for i in 0..n {
        for &j in a.row(i).0 {
            let j = j as usize;
            if j != i {
                adj[fill[i]] = j as u32;
                fill[i] += 1;
                adj[fill[j]] = i as u32;
                fill[j] += 1;
            }
        }
    }
    // dedup each list
    let mut out = Vec::with_capacity(adj.len());
    let mut ptr = vec![0usize; n + 1];
    for i in 0..n {
        let s = &mut adj[count[i]..count[i + 1]];
        s.sort_unstable();
        let mut last = u32::MAX;
        for &w in s.iter() {
            if w != last {
                out.push(w);
                last = w;
            }
        }
        ptr[i + 1] = out.len();
    }
    (out, ptr)
}

fn pseudo_peripheral<'a>(
    start: usize,
    nbrs: &impl Fn(usize) -> &'a [u32],
    deg: &impl Fn(usize) -> usize,
    level: &mut [usize],
) -> usize {
    // BFS from `root`; returns (depth, min-degree node of the last level)
    let mut bfs = |root: usize| {
        let mut touched = vec![root];
        level[root] = 0;
        let mut head = 0;
        while head < touched.len() {
            let v = touched[head];
            head += 1;
            for &w in nbrs(v) {
                let w = w as usize;
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    touched.push(w);
                }
            }
        }
        let depth = level[*touched.last().unwrap()];
        let mut cand = *touched.last().unwrap();
        for &t in &touched {
            if level[t] == depth && deg(t) < deg(cand) {
                cand = t;
            }
        }
        for &t in &touched {
            level[t] = usize::MAX;
        }
        (depth, cand)
    };
    let mut root = start;
    let (mut depth, mut cand) = bfs(root);
    loop {
        let (d, c) = bfs(cand);
        if d <= depth {
            return root;
        }
        root = cand;
        depth = d;
        cand = c;
    }
}

/// Banded LU with partial pivoting on a bandwidth-reducing permutation.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<f64>,
    pivots: Vec<u32>,
    perm: Vec<usize>,
}

/// Factorizes a square sparse matrix. A zero pivot column yields
/// [`Error::Singular`] naming the (original) row index of the failed pivot.
pub fn sparse_lu(a: &CsrMatrix) -> Result<SparseLu> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    let perm = reverse_cuthill_mckee(a);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0usize, 0usize);
    for i in 0..n {
        for &j in a.row(i).0 {
            let (pi, pj) = (inv[i], inv[j as usize]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
    }
    let kv = kl + ku;
    let ldab = 2 * kl + ku + 1;
    let mut ab = vec![0.0; ldab * n];
    let idx = |i: usize, c: usize| kv + i - c + c * ldab;
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            ab[idx(inv[i], inv[j as usize])] = v;
        }
    }
    let mut pivots = vec![0u32; n];
    let mut ju = 0usize;
    for j in 0..n {
        let km = kl.min(n - 1 - j);
        let col = j * ldab + kv;
        let mut jp = 0;
        let mut best = ab[col].abs();
        for t in 1..=km {
            let v = ab[col + t].abs();
            if v > best {
                best = v;
                jp = t;
            }
        }
        pivots[j] = (j + jp) as u32;
        if best == 0.0 {
            return Err(Error::Singular { pivot: perm[j], rank: j });
        }
        ju = ju.max((j + ku + jp).min(n - 1));
        if jp != 0 {
            for c in j..=ju {
                ab.swap(idx(j, c), idx(j + jp, c));
            }
        }
        if km > 0 {
            let inv_p = 1.0 / ab[col];
            for t in 1..=km {
                ab[col + t] *= inv_p;
            }
            for c in j + 1..=ju {
                let ujc = ab[idx(j, c)];
                if ujc == 0.0 {
                    continue;
                }
                let base_c = idx(j + 1, c);
                for t in 0..km {
                    ab[base_c + t] -= ab[col + 1 + t] * ujc;
                }
            }
        }
    }
    Ok(SparseLu { n, kl, kv, ldab, ab, pivots, perm })
}

impl SparseLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth of the permuted factor storage.
    pub fn bandwidth(&self) -> (usize, usize) {
        (self.kl, self.kv)
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        let (kl, kv, ldab) = (self.kl, self.kv, self.ldab);
        for j in 0..n {
            let l = self.pivots[j] as usize;
            if l != j {
                y.swap(l, j);
            }
            let lm = kl.min(n - 1 - j);
            let yj = y[j];
            if yj != 0.0 {
                let col = j * ldab + kv + 1;
                for t in 0..lm {
                    y[j + 1 + t] -= self.ab[col + t] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            y[j] /= self.ab[col];
            let yj = y[j];
            if yj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    y[i] -= self.ab[col - (j - i)] * yj;
                }
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lap1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn tridiagonal_hand_solution() {
        // -x_{i-1} + 2x_i - x_{i+1} = 1 with zero ends: x_i = i(6-i)/2
        let lu = sparse_lu(&lap1d(5)).unwrap();
        let mut x = vec![0.0; 5];
        lu.solve(&[1.0; 5], &mut x);
        for (i, xi) in x.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!((xi - k * (6.0 - k) / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_row_is_singular() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (0, 1, 1.0), (2, 2, 1.0), (2, 1, 1.0)]);
        assert!(matches!(sparse_lu(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn saddle_point_needs_pivoting() {
        // [[2, 1], [1, 0]] with a zero diagonal entry
        let a = CsrMatrix::from_dense(2, 2, &[2.0, 1.0, 1.0, 0.0]);
        let lu = sparse_lu(&a).unwrap();
        let mut x = vec![0.0; 2];
        lu.solve(&[3.0, 1.0], &mut x);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rcm_is_a_permutation_and_narrows_a_shuffled_chain() {
        let n = 40;
        let shuffle: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
        let mut t = Vec::new();
        for i in 0..n {
            t.push((shuffle[i], shuffle[i], 2.0));
            if i + 1 < n {
                t.push((shuffle[i], shuffle[i + 1], -1.0));
                t.push((shuffle[i + 1], shuffle[i], -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let p = reverse_cuthill_mckee(&a);
        let mut seen = p.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
        assert_eq!(sparse_lu(&a).unwrap().bandwidth().0, 1);
    }
}
