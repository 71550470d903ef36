/// Minimum-cost assignment of every row to a distinct column (`rows ≤ cols`).
///
/// Shortest-augmenting-path Hungarian method with row/column potentials,
/// O(rows² · cols). Returns the column chosen for each row.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols");
    debug_assert!(cost.iter().all(|row| row.len() == m));

    // 1-based; column 0 is the virtual source of each augmenting search
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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

    let mut col_for_row = vec![0usize; n];
    for j in 1..=m {
        if row_of[j] != 0 {
            col_for_row[row_of[j] - 1] = j - 1;
        }
    }
    col_for_row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + go(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(cost, 0, &mut vec![false; cost[0].len()])
    }

    #[test]
    fn classic_square() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = solve_assignment(&c);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert_eq!(total, 5.0);
        assert_eq!(total, brute_force(&c));
    }

    #[test]
    fn rectangular_matches_brute_force() {
        let c = vec![
            vec![0.7, 0.2, 0.9, 0.4, 0.6],
            vec![0.1, 0.8, 0.3, 0.5, 0.2],
            vec![0.6, 0.6, 0.1, 0.9, 0.3],
        ];
        let a = solve_assignment(&c);
        let mut cols = a.clone();
        cols.sort();
        cols.dedup();
        assert_eq!(cols.len(), 3);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert!((total - brute_force(&c)).abs() < 1e-12);
    }
}
