//! Exact linear and bottleneck assignment on dense square cost matrices.

/// Minimum-cost perfect matching by shortest augmenting paths with dual
/// potentials, `O(n³)`. `cost` is row-major `n × n`; returns `col[row]`.
pub fn linear_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let c = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];
    // 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col = vec![0; n];
    for j in 1..=n {
        col[row_of[j] - 1] = j - 1;
    }
    col
}

/// Perfect matching using only edges with `cost ≤ threshold`, if one exists
/// (Hopcroft–Karp).
fn threshold_matching(cost: &[f64], n: usize, threshold: f64) -> Option<Vec<usize>> {
    const NIL: usize = usize::MAX;
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| cost[i * n + j] <= threshold).collect()).collect();
    let mut match_row = vec![NIL; n];
    let mut match_col = vec![NIL; n];
    let mut dist = vec![0usize; n];
    loop {
        // BFS layering from free rows
        let mut queue = std::collections::VecDeque::new();
        for i in 0..n {
            if match_row[i] == NIL {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                let k = match_col[j];
                if k == NIL {
                    found = true;
                } else if dist[k] == usize::MAX {
                    dist[k] = dist[i] + 1;
                    queue.push_back(k);
                }
            }
        }
        if !found {
            break;
        }
        fn augment(
            i: usize,
            adj: &[Vec<usize>],
            match_row: &mut [usize],
            match_col: &mut [usize],
            dist: &mut [usize],
        ) -> bool {
            for &j in &adj[i] {
                let k = match_col[j];
                if k == usize::MAX || (dist[k] == dist[i] + 1 && augment(k, adj, match_row, match_col, dist)) {
                    match_row[i] = j;
                    match_col[j] = i;
                    return true;
                }
            }
            dist[i] = usize::MAX;
            false
        }
        for i in 0..n {
            if match_row[i] == NIL {
                augment(i, &adj, &mut match_row, &mut match_col, &mut dist);
            }
        }
    }
    match_row.iter().all(|&j| j != NIL).then_some(match_row)
}

/// Perfect matching minimising the largest matched cost: binary search over
/// the sorted distinct costs with a feasibility matching at each threshold.
pub fn bottleneck_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let mut levels = cost.to_vec();
    levels.sort_by(|a, b| a.total_cmp(b));
    levels.dedup();
    // every row and every column needs at least one admissible edge
    let row_min = (0..n).map(|i| cost[i * n..(i + 1) * n].iter().cloned().fold(f64::INFINITY, f64::min));
    let col_min = (0..n).map(|j| (0..n).map(|i| cost[i * n + j]).fold(f64::INFINITY, f64::min));
    let floor = row_min.chain(col_min).fold(f64::NEG_INFINITY, f64::max);
    let mut lo = levels.partition_point(|&c| c < floor);
    let mut hi = levels.len() - 1;
    let mut best = threshold_matching(cost, n, levels[hi]).expect("complete graph has a perfect matching");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match threshold_matching(cost, n, levels[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    best
}
