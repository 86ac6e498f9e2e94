//! Banded symmetric linear systems.
//!
//! The Newton systems of this crate come from planar shell meshes, so after
//! a reverse Cuthill-McKee reordering their Hessians have a modest band.
//! A dedicated band LDLT keeps the factorization dependency-free and fast
//! enough to run thousands of times per simulation.

use alloc::vec::Vec;

/// Symmetric matrix stored as its lower band: row `i` holds columns
/// `i - bandwidth ..= i`.
pub struct BandSystem {
    n: usize,
    bandwidth: usize,
    matrix: Vec<f64>,
    factor: Vec<f64>,
    pivots: Vec<f64>,
    factored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotPositiveDefinite {
    pub pivot_index: usize,
}

impl BandSystem {
    pub fn new(n: usize, bandwidth: usize) -> Self {
        let stride = bandwidth + 1;
        Self {
            n,
            bandwidth,
            matrix: alloc::vec![0.0; n * stride],
            factor: alloc::vec![0.0; n * stride],
            pivots: alloc::vec![0.0; n],
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn reset(&mut self) {
        self.matrix.fill(0.0);
        self.factored = false;
    }

    /// Accumulate into the lower triangle; requires `i >= j`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.matrix[k] += v;
        self.factored = false;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[self.idx(i, j)]
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.n {
            let v = self.matrix[self.idx(i, i)].abs();
            if v > m {
                m = v;
            }
        }
        m
    }

    /// Infinity norm (max absolute row sum) of the assembled matrix.
    pub fn infinity_norm(&self) -> f64 {
        let b = self.bandwidth;
        let stride = b + 1;
        let mut row_sums = alloc::vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(b)..=i {
                let a = self.matrix[i * stride + j + b - i].abs();
                row_sums[i] += a;
                if i != j {
                    row_sums[j] += a;
                }
            }
        }
        row_sums.iter().fold(0.0, |m, &s| if s > m { s } else { m })
    }

    /// LDLT-factor `A + shift * I`, leaving `A` untouched. Fails on the
    /// first pivot at or below `pivot_floor`, signalling an indefinite or
    /// near-singular system.
    pub fn factor(&mut self, shift: f64, pivot_floor: f64) -> Result<(), NotPositiveDefinite> {
        let b = self.bandwidth;
        let stride = b + 1;
        self.factor.copy_from_slice(&self.matrix);
        if shift != 0.0 {
            for i in 0..self.n {
                self.factor[i * stride + b] += shift;
            }
        }
        for j in 0..self.n {
            let kmin_j = j.saturating_sub(b);
            // d_j = a_jj - sum_k l_jk^2 d_k
            let mut dj = self.factor[j * stride + b];
            for k in kmin_j..j {
                let ljk = self.factor[j * stride + k + b - j];
                dj -= ljk * ljk * self.pivots[k];
            }
            if !(dj > pivot_floor) {
                self.factored = false;
                return Err(NotPositiveDefinite { pivot_index: j });
            }
            self.pivots[j] = dj;
            self.factor[j * stride + b] = dj;
            let imax = (j + b).min(self.n - 1);
            for i in (j + 1)..=imax {
                let kmin = i.saturating_sub(b);
                let mut s = self.factor[i * stride + j + b - i];
                for k in kmin..j {
                    s -= self.factor[i * stride + k + b - i]
                        * self.factor[j * stride + k + b - j]
                        * self.pivots[k];
                }
                self.factor[i * stride + j + b - i] = s / dj;
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve `(A + shift I) x = rhs` in place using the last factorization.
    pub fn solve(&self, rhs: &mut [f64]) {
        assert!(self.factored, "factor() must succeed before solve()");
        assert_eq!(rhs.len(), self.n);
        let b = self.bandwidth;
        let stride = b + 1;
        // forward substitution with unit lower triangle
        for i in 0..self.n {
            let kmin = i.saturating_sub(b);
            let mut s = rhs[i];
            for k in kmin..i {
                s -= self.factor[i * stride + k + b - i] * rhs[k];
            }
            rhs[i] = s;
        }
        // diagonal
        for i in 0..self.n {
            rhs[i] /= self.pivots[i];
        }
        // backward substitution with the transpose
        for i in (0..self.n).rev() {
            let kmax = (i + b).min(self.n - 1);
            let mut s = rhs[i];
            for k in (i + 1)..=kmax {
                s -= self.factor[k * stride + i + b - k] * rhs[k];
            }
            rhs[i] = s;
        }
    }

    /// `out = (A) v` from the assembled band (no shift), for residual checks.
    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.fill(0.0);
        let b = self.bandwidth;
        let stride = b + 1;
        for i in 0..self.n {
            let kmin = i.saturating_sub(b);
            for j in kmin..=i {
                let a = self.matrix[i * stride + j + b - i];
                out[i] += a * v[j];
                if i != j {
                    out[j] += a * v[i];
                }
            }
        }
    }
}

/// Reverse Cuthill-McKee ordering of an undirected graph given as sorted
/// adjacency lists. Returns `order` with `order[new] = old`; disconnected
/// components are processed in ascending order of their minimum-degree node.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut visited = alloc::vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue: Vec<usize> = Vec::with_capacity(n);

    loop {
        // next unvisited node of minimum degree
        let mut root = None;
        for v in 0..n {
            if !visited[v] {
                match root {
                    None => root = Some(v),
                    Some(r) if adjacency[v].len() < adjacency[r].len() => root = Some(v),
                    _ => {}
                }
            }
        }
        let Some(mut root) = root else { break };
        root = pseudo_peripheral(adjacency, root, &visited);

        queue.clear();
        queue.push(root);
        visited[root] = true;
        let mut head = 0;
        while head < queue.len() {
            let v = queue[head];
            head += 1;
            order.push(v);
            let mut fresh: Vec<usize> = adjacency[v]
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            fresh.sort_unstable_by_key(|&w| (adjacency[w].len(), w));
            for w in fresh {
                visited[w] = true;
                queue.push(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adjacency: &[Vec<usize>], start: usize, visited: &[bool]) -> usize {
    let mut root = start;
    let mut last_ecc = 0usize;
    for _ in 0..4 {
        let (levels, ecc) = bfs_levels(adjacency, root, visited);
        if ecc <= last_ecc && last_ecc > 0 {
            break;
        }
        last_ecc = ecc;
        // farthest level, minimum degree
        let mut best = root;
        let mut best_deg = usize::MAX;
        for (v, &lvl) in levels.iter().enumerate() {
            if lvl == ecc && !visited[v] && adjacency[v].len() < best_deg {
                best = v;
                best_deg = adjacency[v].len();
            }
        }
        root = best;
    }
    root
}

fn bfs_levels(adjacency: &[Vec<usize>], root: usize, visited: &[bool]) -> (Vec<usize>, usize) {
    let n = adjacency.len();
    let mut level = alloc::vec![usize::MAX; n];
    let mut queue = alloc::vec![root];
    level[root] = 0;
    let mut head = 0;
    let mut ecc = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &w in &adjacency[v] {
            if level[w] == usize::MAX && !visited[w] {
                level[w] = level[v] + 1;
                ecc = ecc.max(level[w]);
                queue.push(w);
            }
        }
    }
    (level, ecc)
}
