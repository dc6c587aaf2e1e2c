//! Exact integer lattice algebra: Hermite and Smith normal forms,
//! determinants and unimodular completion.

use alloc::vec;
use alloc::vec::Vec;

/// Dense integer matrix stored as rows.
pub type IntMatrix = Vec<Vec<i64>>;

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

fn to_i128(m: &[Vec<i64>]) -> Vec<Vec<i128>> {
    m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect()
}

fn to_i64(m: Vec<Vec<i128>>) -> IntMatrix {
    m.into_iter()
        .map(|r| r.into_iter().map(|x| x as i64).collect())
        .collect()
}

/// Row-style Hermite normal form of the lattice spanned by `rows`.
///
/// Returns the nonzero rows: echelon form, positive pivots, entries above
/// each pivot reduced into `[0, pivot)`.
pub fn hermite_rows(rows: &[Vec<i64>]) -> IntMatrix {
    if rows.is_empty() {
        return Vec::new();
    }
    let cols = rows[0].len();
    let mut m = to_i128(rows);
    let mut pivot_row = 0;
    for c in 0..cols {
        if pivot_row == m.len() {
            break;
        }
        // Euclid down the column until a single nonzero entry remains.
        loop {
            let mut best: Option<usize> = None;
            for (i, row) in m.iter().enumerate().skip(pivot_row) {
                if row[c] != 0 && best.map_or(true, |b| row[c].abs() < m[b][c].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            m.swap(pivot_row, b);
            let mut done = true;
            for i in pivot_row + 1..m.len() {
                if m[i][c] != 0 {
                    let q = m[i][c].div_euclid(m[pivot_row][c]);
                    for j in 0..cols {
                        m[i][j] -= q * m[pivot_row][j];
                    }
                    if m[i][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[pivot_row][c] == 0 {
            continue;
        }
        if m[pivot_row][c] < 0 {
            for x in m[pivot_row].iter_mut() {
                *x = -*x;
            }
        }
        let p = m[pivot_row][c];
        for i in 0..pivot_row {
            let q = m[i][c].div_euclid(p);
            if q != 0 {
                for j in 0..cols {
                    m[i][j] -= q * m[pivot_row][j];
                }
            }
        }
        pivot_row += 1;
    }
    m.truncate(pivot_row);
    to_i64(m)
}

/// Column reduction `B W = [H | 0]` with `W` unimodular and `H` lower
/// triangular. Returns `(H, W)`; `None` if the rows of `B` are dependent.
pub fn column_reduce(b: &[Vec<i64>]) -> Option<(IntMatrix, IntMatrix)> {
    let m = b.len();
    let d = b.first().map_or(0, |r| r.len());
    if m > d {
        return None;
    }
    let mut bb = to_i128(b);
    let mut w: Vec<Vec<i128>> = (0..d)
        .map(|i| (0..d).map(|j| (i == j) as i128).collect())
        .collect();
    for i in 0..m {
        for j in i + 1..d {
            if bb[i][j] == 0 {
                continue;
            }
            let (g, s, t) = ext_gcd(bb[i][i], bb[i][j]);
            let (u, v) = (bb[i][i] / g, bb[i][j] / g);
            // [ci, cj] <- [s ci + t cj, -v ci + u cj], determinant s u + t v = 1.
            let combine = |rows: &mut Vec<Vec<i128>>| {
                for row in rows.iter_mut() {
                    let (x, y) = (row[i], row[j]);
                    row[i] = s * x + t * y;
                    row[j] = -v * x + u * y;
                }
            };
            combine(&mut bb);
            combine(&mut w);
        }
        if bb[i][i] == 0 {
            return None;
        }
        if bb[i][i] < 0 {
            for row in bb.iter_mut().chain(w.iter_mut()) {
                row[i] = -row[i];
            }
        }
    }
    let h = bb.iter().map(|r| r[..m].to_vec()).collect();
    Some((to_i64(h), to_i64(w)))
}

/// Diagonal of the Smith normal form (the elementary divisors).
pub fn smith_diagonal(rows: &[Vec<i64>]) -> Vec<i64> {
    let mut m = to_i128(rows);
    let r = m.len();
    let c = m.first().map_or(0, |x| x.len());
    let mut diag = Vec::new();
    for t in 0..r.min(c) {
        // Bring the smallest nonzero entry of the trailing block to (t, t).
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    if m[i][j] != 0
                        && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((bi, bj)) = best else {
                return diag;
            };
            m.swap(t, bi);
            for row in m.iter_mut() {
                row.swap(t, bj);
            }
            let p = m[t][t];
            let mut clean = true;
            for i in t + 1..r {
                let q = m[i][t].div_euclid(p);
                for j in t..c {
                    m[i][j] -= q * m[t][j];
                }
                clean &= m[i][t] == 0;
            }
            for j in t + 1..c {
                let q = m[t][j].div_euclid(p);
                for row in m.iter_mut().skip(t) {
                    row[j] -= q * row[t];
                }
                clean &= m[t][j] == 0;
            }
            if !clean {
                continue;
            }
            // Divisibility of the remaining block by the pivot.
            let mut bad = None;
            'outer: for i in t + 1..r {
                for j in t + 1..c {
                    if m[i][j] % p != 0 {
                        bad = Some(i);
                        break 'outer;
                    }
                }
            }
            match bad {
                Some(i) => {
                    for j in t..c {
                        m[t][j] += m[i][j];
                    }
                }
                None => break,
            }
        }
        diag.push(m[t][t].abs() as i64);
    }
    diag
}

/// Exact determinant (fraction-free Bareiss elimination).
pub fn det(a: &[Vec<i64>]) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut m = to_i128(a);
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return 0;
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Inverse of a unimodular matrix via its adjugate.
pub fn inverse_unimodular(a: &[Vec<i64>]) -> Option<IntMatrix> {
    let n = a.len();
    let dt = det(a);
    if dt.abs() != 1 {
        return None;
    }
    let mut inv = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: IntMatrix = a
                .iter()
                .enumerate()
                .filter(|&(r, _)| r != i)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != j)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let cof = if (i + j) % 2 == 0 { det(&minor) } else { -det(&minor) };
            inv[j][i] = (cof * dt) as i64;
        }
    }
    Some(inv)
}

pub fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> IntMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[Vec<i64>]) -> IntMatrix {
    let cols = a.first().map_or(0, |r| r.len());
    (0..cols).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn mat_vec_f64(a: &[Vec<i64>], v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(&x, &y)| x as f64 * y).sum())
        .collect()
}

pub fn mat_vec(a: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(&x, &y)| x * y).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_of_dependent_rows() {
        let h = hermite_rows(&[vec![0, 2], vec![0, 3], vec![0, -1]]);
        assert_eq!(h, vec![vec![0, 1]]);
        let h = hermite_rows(&[vec![4, -2], vec![2, -1]]);
        assert_eq!(h, vec![vec![2, -1]]);
    }

    #[test]
    fn hnf_full_rank() {
        let h = hermite_rows(&[vec![2, 1], vec![1, 3]]);
        assert_eq!(h.len(), 2);
        assert_eq!(det(&h).abs(), 5);
        assert!(h[0][0] > 0 && h[1][0] == 0 && h[1][1] > 0);
        assert!(h[0][1] >= 0 && h[0][1] < h[1][1]);
    }

    #[test]
    fn column_reduction_identity() {
        let b = vec![vec![2, -1, 3]];
        let (h, w) = column_reduce(&b).unwrap();
        assert_eq!(h, vec![vec![1]]);
        assert_eq!(det(&w).abs(), 1);
        let bw = mat_mul(&b, &w);
        assert_eq!(bw, vec![vec![1, 0, 0]]);
    }

    #[test]
    fn smith_detects_non_saturation() {
        assert_eq!(smith_diagonal(&[vec![2, 0]]), vec![2]);
        assert_eq!(smith_diagonal(&[vec![2, -1]]), vec![1]);
        assert_eq!(smith_diagonal(&[vec![2, 4], vec![6, 8]]), vec![2, 4]);
    }

    #[test]
    fn determinant_and_inverse() {
        let a = vec![vec![2, 1, 0], vec![1, 1, 0], vec![3, 5, 1]];
        assert_eq!(det(&a), 1);
        let inv = inverse_unimodular(&a).unwrap();
        let id = mat_mul(&a, &inv);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(id[i][j], (i == j) as i64);
            }
        }
        assert!(inverse_unimodular(&[vec![2, 0], vec![0, 1]]).is_none());
    }
}
