//! Sparse symmetric quasi-definite factorisation used by the interior-point
//! solver: minimum-degree ordering followed by an up-looking LDLᵀ.

use std::collections::BTreeSet;

const NONE: usize = usize::MAX;

/// Elimination order by the minimum-degree heuristic on the graph of a
/// symmetric pattern. Ties go to the lowest index, so the order is
/// deterministic.
pub(crate) fn minimum_degree(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in edges {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (adj[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some((_, v)) = queue.pop_first() {
        order.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            let old = adj[u].len();
            merged.clear();
            // sorted union of adj[u] \ {v} and nbrs \ {u}
            let (a, b) = (&adj[u], &nbrs);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let next = match (a.get(i), b.get(j)) {
                    (Some(&x), Some(&y)) if x == y => {
                        i += 1;
                        j += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        i += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        j += 1;
                        y
                    }
                    (Some(&x), None) => {
                        i += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        j += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != v && next != u {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
            let new = adj[u].len();
            if new != old {
                queue.remove(&(old, u));
                queue.insert((new, u));
            }
        }
    }
    order
}

/// Symmetric matrix stored as the upper triangle of its permuted form,
/// together with its LDLᵀ factor.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricFactor {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// iperm[old] = new
    iperm: Vec<usize>,
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
    /// Position of the diagonal entry of each original index.
    diag_pos: Vec<usize>,
    /// Expected sign of each pivot, original indexing.
    sign: Vec<f64>,
    // factor
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    pub(crate) dynamic_pivots: usize,
}

impl SymmetricFactor {
    /// `entries` lists off-diagonal positions (original indices, either
    /// triangle) with constant values; duplicates are summed. Diagonal
    /// values are supplied later through [`set_diag`](Self::set_diag).
    pub(crate) fn new(n: usize, entries: &[(usize, usize, f64)], sign: Vec<f64>) -> Self {
        let edges: Vec<(usize, usize)> = entries.iter().map(|&(i, j, _)| (i, j)).collect();
        let perm = minimum_degree(n, &edges);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        // (col, row) pairs in permuted upper triangle
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len() + n);
        for &(i, j, v) in entries {
            if i == j {
                continue;
            }
            let (a, b) = (iperm[i], iperm[j]);
            let (r, c) = if a < b { (a, b) } else { (b, a) };
            trip.push((c, r, v));
        }
        for k in 0..n {
            trip.push((k, k, 0.0));
        }
        trip.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut colptr = vec![0usize; n + 1];
        let mut rowind = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for &(c, r, v) in &trip {
            if last == Some((c, r)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((c, r));
            rowind.push(r);
            values.push(v);
            colptr[c + 1] = rowind.len();
        }
        for c in 0..n {
            if colptr[c + 1] < colptr[c] {
                colptr[c + 1] = colptr[c];
            }
        }
        let mut diag_pos = vec![0; n];
        for c in 0..n {
            // diagonal is the last entry of each upper-triangular column
            let p = colptr[c + 1] - 1;
            debug_assert_eq!(rowind[p], c);
            diag_pos[perm[c]] = p;
        }
        let (etree, lnz) = elimination_tree(n, &colptr, &rowind);
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let nnz = lp[n];
        Self {
            n,
            perm,
            iperm,
            colptr,
            rowind,
            values,
            diag_pos,
            sign,
            etree,
            lp,
            li: vec![0; nnz],
            lx: vec![0.0; nnz],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            dynamic_pivots: 0,
        }
    }

    pub(crate) fn set_diag(&mut self, i: usize, value: f64) {
        self.values[self.diag_pos[i]] = value;
    }

    /// Numeric LDLᵀ of the stored matrix plus `reg`·sign on the diagonal.
    /// Pivots with the wrong sign or tiny magnitude are replaced by
    /// `sign·pivot_floor`.
    pub(crate) fn factor(&mut self, reg: f64, pivot_floor: f64) {
        let n = self.n;
        let mut y_vals = vec![0.0; n];
        let mut y_marked = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_space: Vec<usize> = self.lp[..n].to_vec();
        self.dynamic_pivots = 0;
        for k in 0..n {
            let s = self.sign[self.perm[k]];
            let mut dk = 0.0;
            let mut nnz_y = 0;
            for p in self.colptr[k]..self.colptr[k + 1] {
                let b = self.rowind[p];
                if b == k {
                    dk = self.values[p] + s * reg;
                    continue;
                }
                y_vals[b] = self.values[p];
                if !y_marked[b] {
                    y_marked[b] = true;
                    elim[0] = b;
                    let mut ne = 1;
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if y_marked[next] {
                            break;
                        }
                        y_marked[next] = true;
                        elim[ne] = next;
                        ne += 1;
                        next = self.etree[next];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let c = y_idx[i];
                let end = next_space[c];
                let yc = y_vals[c];
                for j in self.lp[c]..end {
                    y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[end] = k;
                let l = yc * self.dinv[c];
                self.lx[end] = l;
                dk -= yc * l;
                next_space[c] += 1;
                y_vals[c] = 0.0;
                y_marked[c] = false;
            }
            if !(s * dk > pivot_floor) {
                dk = s * pivot_floor;
                self.dynamic_pivots += 1;
            }
            self.d[k] = dk;
            self.dinv[k] = 1.0 / dk;
        }
    }

    /// Solves with the factor; `rhs` is in original indexing.
    pub(crate) fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = (0..n).map(|k| rhs[self.perm[k]]).collect();
        for c in 0..n {
            let xc = x[c];
            if xc != 0.0 {
                for j in self.lp[c]..self.lp[c + 1] {
                    x[self.li[j]] -= self.lx[j] * xc;
                }
            }
        }
        for k in 0..n {
            x[k] *= self.dinv[k];
        }
        for c in (0..n).rev() {
            let mut acc = x[c];
            for j in self.lp[c]..self.lp[c + 1] {
                acc -= self.lx[j] * x[self.li[j]];
            }
            x[c] = acc;
        }
        for k in 0..n {
            rhs[self.perm[k]] = x[k];
        }
    }

    /// y = K x with the stored (unregularised) values, original indexing.
    pub(crate) fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for c in 0..n {
            let oc = self.perm[c];
            for p in self.colptr[c]..self.colptr[c + 1] {
                let r = self.rowind[p];
                let or = self.perm[r];
                let v = self.values[p];
                y[or] += v * x[oc];
                if r != c {
                    y[oc] += v * x[or];
                }
            }
        }
        y
    }

    /// Solve followed by `steps` rounds of iterative refinement against the
    /// unregularised matrix.
    pub(crate) fn solve_refined(&self, rhs: &[f64], steps: usize) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for _ in 0..steps {
            let kx = self.mul(&x);
            let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, k)| b - k).collect();
            let err = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if err <= 1e-14 * (1.0 + scale) {
                break;
            }
            self.solve_in_place(&mut r);
            for (xi, ri) in x.iter_mut().zip(&r) {
                *xi += ri;
            }
        }
        x
    }

    #[allow(dead_code)]
    pub(crate) fn inverse_permutation(&self) -> &[usize] {
        &self.iperm
    }
}

fn elimination_tree(n: usize, colptr: &[usize], rowind: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut work = vec![NONE; n];
    let mut lnz = vec![0usize; n];
    let mut etree = vec![NONE; n];
    for j in 0..n {
        work[j] = j;
        for p in colptr[j]..colptr[j + 1] {
            let mut i = rowind[p];
            if i >= j {
                continue;
            }
            while work[i] != j {
                if etree[i] == NONE {
                    etree[i] = j;
                }
                lnz[i] += 1;
                work[i] = j;
                i = etree[i];
            }
        }
    }
    (etree, lnz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ordering_is_a_permutation() {
        let edges = vec![(0, 1), (1, 2), (2, 3), (3, 0), (4, 0)];
        let mut order = minimum_degree(5, &edges);
        assert_eq!(order[0], 4);
        order.sort();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn quasidefinite_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n1 = rng.random_range(2..8);
            let n2 = rng.random_range(1..5);
            let n = n1 + n2;
            let mut dense = DMatrix::<f64>::zeros(n, n);
            let mut entries = Vec::new();
            let mut diag = vec![0.0; n];
            for i in 0..n1 {
                diag[i] = rng.random_range(0.5..3.0);
            }
            for i in n1..n {
                diag[i] = -rng.random_range(0.1..2.0);
            }
            for i in 0..n {
                for j in 0..i {
                    let both_primal = i < n1 && j < n1;
                    let both_dual = i >= n1 && j >= n1;
                    if both_dual || rng.random_bool(0.5) {
                        continue;
                    }
                    let v = rng.random_range(-1.0..1.0) * if both_primal { 0.3 } else { 1.0 };
                    entries.push((i, j, v));
                    dense[(i, j)] += v;
                    dense[(j, i)] += v;
                }
            }
            for i in 0..n {
                dense[(i, i)] = diag[i];
            }
            let sign = (0..n).map(|i| if i < n1 { 1.0 } else { -1.0 }).collect();
            let mut f = SymmetricFactor::new(n, &entries, sign);
            for i in 0..n {
                f.set_diag(i, diag[i]);
            }
            f.factor(0.0, 1e-14);
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = f.solve_refined(&b, 2);
            let r = &dense * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b);
            assert!(r.amax() < 1e-10, "residual {}", r.amax());
        }
    }
}
