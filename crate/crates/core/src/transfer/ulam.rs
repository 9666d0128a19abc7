//! Row-stochastic Ulam matrices.

use super::CircleMap;
use rayon::prelude::*;

/// Sparse row-stochastic discretization of a transfer operator on `n`
/// uniform circle cells: `row(i)` holds `(j, p)` pairs with `p` the
/// fraction of cell `i` mapped into cell `j`.
#[derive(Debug, Clone)]
pub struct UlamMatrix {
    n_cells: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl UlamMatrix {
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Density action `out[j] = sum_i values[i] * P[i][j]`.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; self.n_cells];
        for (i, row) in self.rows.iter().enumerate() {
            let v = values[i];
            if v != 0.0 {
                for &(j, p) in row {
                    out[j] += v * p;
                }
            }
        }
        out
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| (row.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Sparse CSV export `i,j,p`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,p\n");
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                s.push_str(&format!("{i},{j},{p}\n"));
            }
        }
        s
    }

    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        UlamMatrix {
            n_cells: rows.len(),
            rows,
        }
    }
}

fn normalize_row(row: &mut Vec<(usize, f64)>) {
    row.sort_by_key(|&(j, _)| j);
    row.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 += a.1;
            true
        } else {
            false
        }
    });
    row.retain(|&(_, p)| p > 0.0);
    let total: f64 = row.iter().map(|&(_, p)| p).sum();
    if total > 0.0 {
        for e in row.iter_mut() {
            e.1 /= total;
        }
    }
}

/// Default sampling density for [`ulam`].
pub const DEFAULT_SAMPLES_PER_CELL: usize = 64;

/// Ulam matrix by the sampled estimator: `samples_per_cell` equally spaced
/// points per cell are mapped and binned, and rows renormalized to sum
/// to 1. Deterministic by construction.
pub fn ulam<M: CircleMap + Sync>(map: &M, n_cells: usize, samples_per_cell: usize) -> UlamMatrix {
    let n = n_cells.max(2);
    let s = samples_per_cell.max(1);
    let h = 1.0 / n as f64;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(s.min(8));
            let w = 1.0 / s as f64;
            for k in 0..s {
                let x = (i as f64 + (k as f64 + 0.5) / s as f64) * h;
                let y = map.apply(x);
                let mut j = (y * n as f64).floor() as usize;
                if j >= n {
                    j = n - 1;
                }
                row.push((j, w));
            }
            normalize_row(&mut row);
            row
        })
        .collect();
    UlamMatrix::from_rows(rows)
}

/// Ulam matrix from exact interval images, valid for maps with a strictly
/// increasing lift (all maps in this crate). The image of each cell is an
/// interval of the lift; interior cell boundaries are pulled back with
/// `lift_inverse`, so the row entries are exact interval preimage lengths.
pub fn ulam_exact<M: CircleMap + Sync>(map: &M, n_cells: usize) -> UlamMatrix {
    let n = n_cells.max(2);
    let h = 1.0 / n as f64;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 * h;
            let b = (i + 1) as f64 * h;
            let ya = map.lift(a);
            let yb = map.lift(b);
            debug_assert!(yb > ya);
            let mut row: Vec<(usize, f64)> = Vec::new();
            // walk the grid boundaries crossed by [ya, yb]
            let first = (ya / h).floor() as i64;
            let last = (yb / h).floor() as i64;
            let mut x_prev = a;
            let mut cell_prev = first;
            for m in first + 1..=last {
                let boundary = m as f64 * h;
                let x = map.lift_inverse(boundary, x_prev.min(b), b).clamp(a, b);
                push_span(&mut row, cell_prev, (x - x_prev) / h, n);
                x_prev = x;
                cell_prev = m;
            }
            push_span(&mut row, cell_prev, (b - x_prev) / h, n);
            normalize_row(&mut row);
            row
        })
        .collect();
    UlamMatrix::from_rows(rows)
}

fn push_span(row: &mut Vec<(usize, f64)>, lifted_cell: i64, weight: f64, n: usize) {
    if weight <= 0.0 {
        return;
    }
    let j = lifted_cell.rem_euclid(n as i64) as usize;
    row.push((j, weight));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ExpandingCircleMap;

    #[test]
    fn exact_rows_are_stochastic() {
        for (q, eps) in [(2u64, 0.0), (2, 0.05), (3, 0.02), (5, 0.0)] {
            let m = ulam_exact(&ExpandingCircleMap::new(q, eps).unwrap(), 97);
            assert!(m.row_sum_defect() < 1e-9, "q={q} eps={eps}");
            for i in 0..97 {
                for &(j, p) in m.row(i) {
                    assert!(j < 97);
                    assert!((0.0..=1.0 + 1e-12).contains(&p), "entry {p}");
                }
            }
        }
    }

    #[test]
    fn sampled_rows_are_stochastic() {
        let m = ulam(&ExpandingCircleMap::new(3, 0.05).unwrap(), 64, 64);
        assert!(m.row_sum_defect() < 1e-12);
    }

    #[test]
    fn csv_export_shape() {
        let m = ulam_exact(&ExpandingCircleMap::doubling(), 4);
        let csv = m.to_csv();
        assert!(csv.starts_with("i,j,p\n"));
        // doubling on 4 cells: two entries per row
        assert_eq!(csv.lines().count(), 1 + 8);
    }
}
