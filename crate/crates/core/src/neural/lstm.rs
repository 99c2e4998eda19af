//! LSTM and bidirectional LSTM with backpropagation through time.
//!
//! Gate layout in the packed `4h` axis is `[input, forget, candidate, output]`.
//! Masked time steps carry the previous hidden and cell state forward unchanged.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::activations::sigmoid;
use super::tensor::{ensure_finite, Param};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// Input weights, `D × 4h`.
    pub w: Param,
    /// Recurrent weights, `h × 4h`.
    pub u: Param,
    /// Bias, `1 × 4h`.
    pub b: Param,
    pub hidden: usize,
}

#[derive(Debug, Clone)]
struct Step {
    t: usize,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    g: Array1<f64>,
    o: Array1<f64>,
    tanh_c: Array1<f64>,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    /// Processing order of time indices and, for unmasked steps, their activations.
    steps: Vec<(usize, Option<Step>)>,
    input_rows: usize,
}

impl Lstm {
    pub fn new<R: Rng>(name: &str, inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let mut b = Param::zeros(format!("{name}.b"), 1, 4 * hidden, false);
        // forget-gate bias starts at 1
        b.value.slice_mut(s![0, hidden..2 * hidden]).fill(1.0);
        Lstm {
            w: Param::uniform(format!("{name}.w"), inputs, 4 * hidden, Param::glorot_limit(inputs, 4 * hidden), true, rng),
            u: Param::uniform(format!("{name}.u"), hidden, 4 * hidden, Param::glorot_limit(hidden, 4 * hidden), true, rng),
            b,
            hidden,
        }
    }

    pub fn zeros(name: &str, inputs: usize, hidden: usize) -> Self {
        Lstm {
            w: Param::zeros(format!("{name}.w"), inputs, 4 * hidden, true),
            u: Param::zeros(format!("{name}.u"), hidden, 4 * hidden, true),
            b: Param::zeros(format!("{name}.b"), 1, 4 * hidden, false),
            hidden,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.value.nrows()
    }

    /// Runs the recurrence over `x` (`L × D`); `reverse` walks from the last row.
    /// Returns `H` (`L × h`) where row `t` is the state after consuming row `t`.
    pub fn forward(&self, x: ArrayView2<f64>, mask: &[u8], reverse: bool) -> Result<(Array2<f64>, LstmCache)> {
        if x.ncols() != self.inputs() {
            return Err(Error::shape(
                "lstm",
                format!("input width {} but weights expect {}", x.ncols(), self.inputs()),
            ));
        }
        if mask.len() != x.nrows() {
            return Err(Error::shape("lstm", format!("mask length {} vs {} rows", mask.len(), x.nrows())));
        }
        let h = self.hidden;
        let len = x.nrows();
        let mut out = Array2::zeros((len, h));
        let mut h_prev = Array1::<f64>::zeros(h);
        let mut c_prev = Array1::<f64>::zeros(h);
        let mut steps = Vec::with_capacity(len);
        let order: Box<dyn Iterator<Item = usize>> = if reverse { Box::new((0..len).rev()) } else { Box::new(0..len) };
        for t in order {
            if mask[t] == 0 {
                out.row_mut(t).assign(&h_prev);
                steps.push((t, None));
                continue;
            }
            let a = x.row(t).dot(&self.w.value) + h_prev.dot(&self.u.value) + self.b.value.row(0);
            let i = a.slice(s![0..h]).mapv(sigmoid);
            let f = a.slice(s![h..2 * h]).mapv(sigmoid);
            let g = a.slice(s![2 * h..3 * h]).mapv(f64::tanh);
            let o = a.slice(s![3 * h..4 * h]).mapv(sigmoid);
            let c = &f * &c_prev + &i * &g;
            let tanh_c = c.mapv(f64::tanh);
            let h_t = &o * &tanh_c;
            out.row_mut(t).assign(&h_t);
            steps.push((t, Some(Step { t, h_prev, c_prev, i, f, g, o, tanh_c })));
            h_prev = h_t;
            c_prev = c;
        }
        ensure_finite("lstm", &out)?;
        Ok((out, LstmCache { steps, input_rows: len }))
    }

    /// Backpropagation through time. `dh` is the gradient w.r.t. every row of `H`.
    /// Accumulates parameter gradients and returns the gradient w.r.t. `x`.
    pub fn backward(&mut self, x: ArrayView2<f64>, cache: &LstmCache, dh: ArrayView2<f64>) -> Array2<f64> {
        let h = self.hidden;
        let mut dx = Array2::zeros((cache.input_rows, self.inputs()));
        let mut dh_next = Array1::<f64>::zeros(h);
        let mut dc_next = Array1::<f64>::zeros(h);
        let mut da = Array1::<f64>::zeros(4 * h);
        for (t, step) in cache.steps.iter().rev() {
            let dh_t = &dh.row(*t) + &dh_next;
            let Some(st) = step else {
                // state copied through: gradients flow straight back
                dh_next = dh_t;
                continue;
            };
            debug_assert_eq!(st.t, *t);
            let d_o = &dh_t * &st.tanh_c;
            let dc = &dc_next + &(&dh_t * &st.o * &st.tanh_c.mapv(|v| 1.0 - v * v));
            let d_i = &dc * &st.g;
            let d_g = &dc * &st.i;
            let d_f = &dc * &st.c_prev;
            dc_next = &dc * &st.f;
            da.slice_mut(s![0..h]).assign(&(&d_i * &st.i.mapv(|v| v * (1.0 - v))));
            da.slice_mut(s![h..2 * h]).assign(&(&d_f * &st.f.mapv(|v| v * (1.0 - v))));
            da.slice_mut(s![2 * h..3 * h]).assign(&(&d_g * &st.g.mapv(|v| 1.0 - v * v)));
            da.slice_mut(s![3 * h..4 * h]).assign(&(&d_o * &st.o.mapv(|v| v * (1.0 - v))));
            outer_add(&mut self.w.grad, x.row(*t), da.view());
            outer_add(&mut self.u.grad, st.h_prev.view(), da.view());
            self.b.grad.row_mut(0).scaled_add(1.0, &da);
            dx.row_mut(*t).assign(&self.w.value.dot(&da));
            dh_next = self.u.value.dot(&da);
        }
        dx
    }

    pub fn params(&self) -> [&Param; 3] {
        [&self.w, &self.u, &self.b]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 3] {
        [&mut self.w, &mut self.u, &mut self.b]
    }
}

/// `m += a bᵀ`
fn outer_add(m: &mut Array2<f64>, a: ArrayView1<f64>, b: ArrayView1<f64>) {
    for (mut row, &ai) in m.rows_mut().into_iter().zip(a.iter()) {
        if ai != 0.0 {
            row.scaled_add(ai, &b);
        }
    }
}

/// Forward and backward LSTMs whose outputs are concatenated per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub forward: Lstm,
    pub backward: Lstm,
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

impl BiLstm {
    pub fn new<R: Rng>(name: &str, inputs: usize, hidden: usize, rng: &mut R) -> Self {
        BiLstm {
            forward: Lstm::new(&format!("{name}.fwd"), inputs, hidden, rng),
            backward: Lstm::new(&format!("{name}.bwd"), inputs, hidden, rng),
        }
    }

    pub fn zeros(name: &str, inputs: usize, hidden: usize) -> Self {
        BiLstm {
            forward: Lstm::zeros(&format!("{name}.fwd"), inputs, hidden),
            backward: Lstm::zeros(&format!("{name}.bwd"), inputs, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    /// Returns `L × 2h`: forward states in the left half, backward states in the right.
    pub fn forward(&self, x: ArrayView2<f64>, mask: &[u8]) -> Result<(Array2<f64>, BiLstmCache)> {
        let (hf, fwd) = self.forward.forward(x, mask, false)?;
        let (hb, bwd) = self.backward.forward(x, mask, true)?;
        let out = concatenate(Axis(1), &[hf.view(), hb.view()]).expect("equal row counts");
        Ok((out, BiLstmCache { fwd, bwd }))
    }

    pub fn backward_pass(&mut self, x: ArrayView2<f64>, cache: &BiLstmCache, dh: ArrayView2<f64>) -> Array2<f64> {
        let h = self.hidden();
        let dxf = self.forward.backward(x, &cache.fwd, dh.slice(s![.., 0..h]));
        let dxb = self.backward.backward(x, &cache.bwd, dh.slice(s![.., h..2 * h]));
        dxf + dxb
    }

    pub fn params(&self) -> Vec<&Param> {
        self.forward.params().into_iter().chain(self.backward.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.forward.params_mut().into_iter().chain(self.backward.params_mut()).collect()
    }
}
