//! Minimum-cost assignment of candidate shelves to free agents.

/// Cost of an agent-shelf pair that must not be used when avoidable.
pub const UNREACHABLE_COST: i64 = 1 << 40;

/// Dense cost matrix, rows are agents and columns are shelves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        CostMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        CostMatrix { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    fn transposed(&self) -> CostMatrix {
        let mut t = CostMatrix::new(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

/// Result of [`hungarian`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    /// Column matched to each row, if any.
    pub row_to_col: Vec<Option<usize>>,
    pub cost: i64,
}

impl Assignment {
    /// Matched (row, column) pairs in row order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col.iter().enumerate().filter_map(|(r, c)| c.map(|c| (r, c)))
    }
}

/// Matches `min(rows, cols)` pairs with minimum total cost.
///
/// Shortest augmenting paths with potentials, O(n^2 m). Ties resolve in scan
/// order: rows are inserted in increasing order and each augmentation picks
/// the lowest-index column among equally short ones.
pub fn hungarian(costs: &CostMatrix) -> Assignment {
    if costs.rows == 0 || costs.cols == 0 {
        return Assignment { row_to_col: vec![None; costs.rows], cost: 0 };
    }
    if costs.rows > costs.cols {
        let t = hungarian(&costs.transposed());
        let mut row_to_col = vec![None; costs.rows];
        for (c, r) in t.row_to_col.iter().enumerate() {
            if let Some(r) = r {
                row_to_col[*r] = Some(c);
            }
        }
        return Assignment { row_to_col, cost: t.cost };
    }
    let (n, m) = (costs.rows, costs.cols);
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; column 0 is a virtual start
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = costs.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![None; n];
    let mut cost = 0;
    for j in 1..=m {
        if owner[j] != 0 {
            row_to_col[owner[j] - 1] = Some(j - 1);
            cost += costs.get(owner[j] - 1, j - 1);
        }
    }
    Assignment { row_to_col, cost }
}
