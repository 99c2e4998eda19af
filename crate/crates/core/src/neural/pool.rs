use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Output of [`maxpool1d`]: pooled rows and the source row of each maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub output: Array2<f64>,
    /// `argmax[[w, c]]` = input row that won window `w` in channel `c`.
    pub argmax: Array2<usize>,
    pub input_rows: usize,
}

/// Non-overlapping max pooling along the sequence axis with stride `pool`.
/// Trailing rows that do not fill a window are dropped.
pub fn maxpool1d(x: ArrayView2<f64>, pool: usize) -> Result<Pooled> {
    if pool == 0 || x.nrows() < pool {
        return Err(Error::shape(
            "maxpool1d",
            format!("sequence length {} shorter than pool {pool}", x.nrows()),
        ));
    }
    let windows = x.nrows() / pool;
    let channels = x.ncols();
    let mut output = Array2::zeros((windows, channels));
    let mut argmax = Array2::zeros((windows, channels));
    for w in 0..windows {
        for c in 0..channels {
            let mut best = w * pool;
            for r in w * pool + 1..(w + 1) * pool {
                if x[[r, c]] > x[[best, c]] {
                    best = r;
                }
            }
            output[[w, c]] = x[[best, c]];
            argmax[[w, c]] = best;
        }
    }
    Ok(Pooled { output, argmax, input_rows: x.nrows() })
}

/// Routes each pooled gradient to the row that produced the maximum.
pub fn maxpool1d_backward(pooled: &Pooled, dy: ArrayView2<f64>) -> Array2<f64> {
    let mut dx = Array2::zeros((pooled.input_rows, dy.ncols()));
    for ((w, c), &g) in dy.indexed_iter() {
        dx[[pooled.argmax[[w, c]], c]] += g;
    }
    dx
}

/// Column-wise maximum over rows with `mask != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMax {
    pub values: Array1<f64>,
    /// Winning row per column; `None` when no row was eligible.
    pub argmax: Vec<Option<usize>>,
    /// True when the mask selected no rows and the result is the zero vector.
    pub degenerate: bool,
}

/// Elementwise max over masked rows, first occurrence winning ties.
pub fn masked_max_over_rows(x: ArrayView2<f64>, mask: &[u8]) -> TimeMax {
    let cols = x.ncols();
    let mut values = Array1::zeros(cols);
    let mut argmax = vec![None; cols];
    for (r, row) in x.rows().into_iter().enumerate() {
        if mask.get(r).copied().unwrap_or(0) == 0 {
            continue;
        }
        for c in 0..cols {
            match argmax[c] {
                Some(_) if row[c] <= values[c] => {}
                _ => {
                    values[c] = row[c];
                    argmax[c] = Some(r);
                }
            }
        }
    }
    let degenerate = argmax.iter().all(Option::is_none);
    TimeMax { values, argmax, degenerate }
}

pub fn masked_max_backward(pooled: &TimeMax, rows: usize, dy: ArrayView1<f64>) -> Array2<f64> {
    let mut dx = Array2::zeros((rows, dy.len()));
    for (c, (arg, &g)) in pooled.argmax.iter().zip(dy.iter()).enumerate() {
        if let Some(r) = arg {
            dx[[*r, c]] += g;
        }
    }
    dx
}
