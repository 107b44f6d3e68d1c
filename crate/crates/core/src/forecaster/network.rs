use serde::{Deserialize, Serialize};

use super::{finite_output, ForecastModel, Layout, Streaming};
use crate::error::Result;
use crate::scalar::Scalar;

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

#[inline]
fn relu<T: Scalar>(x: T) -> T {
    x.max(T::zero())
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a4, a_rest) = a[..n].split_at(n - n % 4);
    let (b4, b_rest) = b[..n].split_at(n - n % 4);
    let mut acc = [T::zero(); 4];
    for (x, y) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail = a_rest.iter().zip(b_rest).fold(T::zero(), |s, (&x, &y)| s + x * y);
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Every activation of one forward pass; `L = W - kernel + 1` LSTM steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace<T> {
    /// `L x filters`, post-ReLU.
    pub conv: Vec<T>,
    /// `L x 4 units`: sigmoid input, sigmoid forget, tanh candidate, sigmoid output.
    pub gates: Vec<T>,
    /// `(L + 1) x units`, starting from the zero state.
    pub cells: Vec<T>,
    /// `L x units`, `tanh` of the cell after each step.
    pub cell_tanh: Vec<T>,
    /// `(L + 1) x units`.
    pub hidden: Vec<T>,
    /// Post-ReLU dense activations.
    pub dense: Vec<T>,
    pub output: Vec<T>,
}

/// LSTM state after a prefix of the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamState<T> {
    /// Number of convolution/LSTM steps consumed.
    pub step: usize,
    pub hidden: Vec<T>,
    pub cell: Vec<T>,
}

impl<T: Scalar> ForecastModel<T> {
    pub(crate) fn steps(&self) -> usize {
        self.window_length - self.layout.kernel + 1
    }

    /// Convolution output at time step `t`, reading rows `t .. t + kernel`.
    fn conv_step(&self, input: &[T], t: usize, out: &mut [T]) {
        let Layout { kernel, features, .. } = self.layout;
        let span = kernel * features;
        let rows = &input[t * features..t * features + span];
        let weights = &self.params[self.layout.conv_w..self.layout.conv_b];
        let bias = &self.params[self.layout.conv_b..self.layout.lstm_wx];
        for (f, o) in out.iter_mut().enumerate() {
            *o = relu(bias[f] + dot(&weights[f * span..(f + 1) * span], rows));
        }
    }

    /// Input side of the gate pre-activations, `b + Wx x`, for one step.
    fn input_projection(&self, x: &[T], out: &mut [T]) {
        let filters = self.layout.filters;
        let wx = &self.params[self.layout.lstm_wx..self.layout.lstm_wh];
        let b = &self.params[self.layout.lstm_b..self.layout.dense_w];
        for (r, o) in out.iter_mut().enumerate() {
            *o = b[r] + dot(&wx[r * filters..(r + 1) * filters], x);
        }
    }

    /// Completes a step whose `gates` hold the input projection.
    fn recurrent_step(&self, h: &[T], c: &[T], gates: &mut [T], h_next: &mut [T], c_next: &mut [T], c_tanh: &mut [T]) {
        let units = self.layout.units;
        let wh = &self.params[self.layout.lstm_wh..self.layout.lstm_b];
        for r in 0..4 * units {
            let a = gates[r] + dot(&wh[r * units..(r + 1) * units], h);
            gates[r] = if r / units == 2 { a.tanh() } else { sigmoid(a) };
        }
        for u in 0..units {
            let (i, f, g, o) = (gates[u], gates[units + u], gates[2 * units + u], gates[3 * units + u]);
            c_next[u] = f * c[u] + i * g;
            c_tanh[u] = c_next[u].tanh();
            h_next[u] = o * c_tanh[u];
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn lstm_step(&self, x: &[T], h: &[T], c: &[T], gates: &mut [T], h_next: &mut [T], c_next: &mut [T], c_tanh: &mut [T]) {
        self.input_projection(x, gates);
        self.recurrent_step(h, c, gates, h_next, c_next, c_tanh);
    }

    fn head(&self, h: &[T], dense: &mut [T], output: &mut [T]) {
        let Layout { units, dense: d, .. } = self.layout;
        let wd = &self.params[self.layout.dense_w..self.layout.dense_b];
        let bd = &self.params[self.layout.dense_b..self.layout.out_w];
        for (j, o) in dense.iter_mut().enumerate() {
            *o = relu(bd[j] + dot(&wd[j * units..(j + 1) * units], h));
        }
        let wo = &self.params[self.layout.out_w..self.layout.out_b];
        let bo = &self.params[self.layout.out_b..];
        for (j, o) in output.iter_mut().enumerate() {
            *o = bo[j] + dot(&wo[j * d..(j + 1) * d], dense);
        }
    }

    /// Forward pass over a row-major `W x k` slice.
    pub(crate) fn run(&self, input: &[T]) -> ForwardTrace<T> {
        let Layout { filters, units, dense, outputs, .. } = self.layout;
        let steps = self.steps();
        let mut trace = ForwardTrace {
            conv: vec![T::zero(); steps * filters],
            gates: vec![T::zero(); steps * 4 * units],
            cells: vec![T::zero(); (steps + 1) * units],
            cell_tanh: vec![T::zero(); steps * units],
            hidden: vec![T::zero(); (steps + 1) * units],
            dense: vec![T::zero(); dense],
            output: vec![T::zero(); outputs],
        };
        for t in 0..steps {
            self.conv_step(input, t, &mut trace.conv[t * filters..(t + 1) * filters]);
            let (h_prev, h_next) = trace.hidden.split_at_mut((t + 1) * units);
            let (c_prev, c_next) = trace.cells.split_at_mut((t + 1) * units);
            self.lstm_step(
                &trace.conv[t * filters..(t + 1) * filters],
                &h_prev[t * units..],
                &c_prev[t * units..],
                &mut trace.gates[t * 4 * units..(t + 1) * 4 * units],
                &mut h_next[..units],
                &mut c_next[..units],
                &mut trace.cell_tanh[t * units..(t + 1) * units],
            );
        }
        let last = &trace.hidden[steps * units..];
        self.head(last, &mut trace.dense, &mut trace.output);
        trace
    }

    /// Accumulates `dLoss/dParams` into `grads` given `dLoss/dOutput`.
    pub(crate) fn backward(&self, input: &[T], trace: &ForwardTrace<T>, d_output: &[T], grads: &mut [T]) {
        let l = self.layout;
        let (filters, units, d, features, kernel) = (l.filters, l.units, l.dense, l.features, l.kernel);
        let steps = self.steps();
        let last_h = &trace.hidden[steps * units..];

        // output layer
        let wo = &self.params[l.out_w..l.out_b];
        let mut d_dense = vec![T::zero(); d];
        for (j, &dy) in d_output.iter().enumerate() {
            grads[l.out_b + j] += dy;
            axpy(dy, &trace.dense, &mut grads[l.out_w + j * d..l.out_w + (j + 1) * d]);
            axpy(dy, &wo[j * d..(j + 1) * d], &mut d_dense);
        }
        // dense layer (ReLU)
        let wd = &self.params[l.dense_w..l.dense_b];
        let mut dh = vec![T::zero(); units];
        for j in 0..d {
            if trace.dense[j] <= T::zero() {
                continue;
            }
            let g = d_dense[j];
            grads[l.dense_b + j] += g;
            axpy(g, last_h, &mut grads[l.dense_w + j * units..l.dense_w + (j + 1) * units]);
            axpy(g, &wd[j * units..(j + 1) * units], &mut dh);
        }

        // LSTM, backwards through time
        let wx = &self.params[l.lstm_wx..l.lstm_wh];
        let wh = &self.params[l.lstm_wh..l.lstm_b];
        let mut dc = vec![T::zero(); units];
        let mut da = vec![T::zero(); 4 * units];
        let mut d_conv = vec![T::zero(); filters];
        let span = kernel * features;
        for t in (0..steps).rev() {
            let gates = &trace.gates[t * 4 * units..(t + 1) * 4 * units];
            let c_prev = &trace.cells[t * units..(t + 1) * units];
            let c_tanh = &trace.cell_tanh[t * units..(t + 1) * units];
            for u in 0..units {
                let (i, f, g, o) = (gates[u], gates[units + u], gates[2 * units + u], gates[3 * units + u]);
                let tc = c_tanh[u];
                let d_o = dh[u] * tc;
                dc[u] += dh[u] * o * (T::one() - tc * tc);
                let d_i = dc[u] * g;
                let d_g = dc[u] * i;
                let d_f = dc[u] * c_prev[u];
                dc[u] *= f;
                da[u] = d_i * i * (T::one() - i);
                da[units + u] = d_f * f * (T::one() - f);
                da[2 * units + u] = d_g * (T::one() - g * g);
                da[3 * units + u] = d_o * o * (T::one() - o);
            }
            let x = &trace.conv[t * filters..(t + 1) * filters];
            let h_prev = &trace.hidden[t * units..(t + 1) * units];
            dh.iter_mut().for_each(|v| *v = T::zero());
            d_conv.iter_mut().for_each(|v| *v = T::zero());
            for (r, &g) in da.iter().enumerate() {
                if g == T::zero() {
                    continue;
                }
                grads[l.lstm_b + r] += g;
                axpy(g, x, &mut grads[l.lstm_wx + r * filters..l.lstm_wx + (r + 1) * filters]);
                axpy(g, h_prev, &mut grads[l.lstm_wh + r * units..l.lstm_wh + (r + 1) * units]);
                axpy(g, &wx[r * filters..(r + 1) * filters], &mut d_conv);
                axpy(g, &wh[r * units..(r + 1) * units], &mut dh);
            }
            // convolution (ReLU)
            let rows = &input[t * features..t * features + span];
            for f in 0..filters {
                if x[f] <= T::zero() {
                    continue;
                }
                let g = d_conv[f];
                grads[l.conv_b + f] += g;
                axpy(g, rows, &mut grads[l.conv_w + f * span..l.conv_w + (f + 1) * span]);
            }
        }
    }
}

impl<T: Scalar> Streaming<T> for ForecastModel<T> {
    fn begin(&self) -> StreamState<T> {
        StreamState {
            step: 0,
            hidden: vec![T::zero(); self.layout.units],
            cell: vec![T::zero(); self.layout.units],
        }
    }

    fn advance(&self, state: &mut StreamState<T>, input: &[T], rows: usize) {
        self.advance_projected(state, input, rows, &[], rows);
    }

    fn project(&self, input: &[T]) -> Vec<T> {
        let Layout { filters, units, .. } = self.layout;
        let mut x = vec![T::zero(); filters];
        let mut out = vec![T::zero(); self.steps() * 4 * units];
        for (t, chunk) in out.chunks_exact_mut(4 * units).enumerate() {
            self.conv_step(input, t, &mut x);
            self.input_projection(&x, chunk);
        }
        out
    }

    fn advance_projected(&self, state: &mut StreamState<T>, input: &[T], rows: usize, projected: &[T], from_row: usize) {
        let Layout { filters, units, kernel, .. } = self.layout;
        let end = (rows + 1).saturating_sub(kernel).min(self.steps());
        let mut x = vec![T::zero(); filters];
        let mut gates = vec![T::zero(); 4 * units];
        let mut h = vec![T::zero(); units];
        let mut c = vec![T::zero(); units];
        let mut c_tanh = vec![T::zero(); units];
        while state.step < end {
            let t = state.step;
            if t >= from_row {
                gates.copy_from_slice(&projected[t * 4 * units..(t + 1) * 4 * units]);
            } else {
                self.conv_step(input, t, &mut x);
                self.input_projection(&x, &mut gates);
            }
            self.recurrent_step(&state.hidden, &state.cell, &mut gates, &mut h, &mut c, &mut c_tanh);
            std::mem::swap(&mut state.hidden, &mut h);
            std::mem::swap(&mut state.cell, &mut c);
            state.step += 1;
        }
    }

    fn finish(&self, state: &StreamState<T>) -> Result<Vec<T>> {
        debug_assert_eq!(state.step, self.steps(), "stream not fully advanced");
        let mut dense = vec![T::zero(); self.layout.dense];
        let mut output = vec![T::zero(); self.layout.outputs];
        self.head(&state.hidden, &mut dense, &mut output);
        finite_output(output)
    }
}
