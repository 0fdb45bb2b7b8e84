//! LSTM-with-projection mapping networks and their exact BPTT gradients.
//!
//! Each recurrent block is a standard LSTM cell (input, forget, candidate
//! and output gates, no peepholes) whose hidden state is projected down to a
//! lower dimension; the projected state is both the block output and the
//! recurrent input at the next timestep. A linear head maps the last block's
//! projection to the output features. Recurrence runs left to right with
//! zero initial states, reset at every utterance boundary.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::params::{glorot_uniform, sigmoid, tanh, Tensors};

/// Gate order within the stacked 4H gate vectors.
const GATE_I: usize = 0;
const GATE_F: usize = 1;
const GATE_G: usize = 2;
const GATE_O: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MappingSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden: usize,
    pub proj: usize,
    pub layers: usize,
}

impl MappingSpec {
    /// Noisy-to-clean network `F`: 87 -> 2x(512 LSTM, 256 proj) -> 29.
    pub fn noisy_to_clean() -> Self {
        MappingSpec {
            input_dim: 87,
            output_dim: 29,
            hidden: 512,
            proj: 256,
            layers: 2,
        }
    }

    /// Clean-to-noisy network `G`: 29 -> 2x(512 LSTM, 256 proj) -> 87.
    pub fn clean_to_noisy() -> Self {
        MappingSpec {
            input_dim: 29,
            output_dim: 87,
            hidden: 512,
            proj: 256,
            layers: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.output_dim == 0
            || self.hidden == 0
            || self.proj == 0
            || self.layers == 0
        {
            return Err(Error::Config("all network dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Parameters of one LSTM-P block. Gate weights are stacked [i; f; g; o].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmpParams {
    /// 4H x In
    pub w_x: Mat,
    /// 4H x P (recurrent input is the previous projection)
    pub w_r: Mat,
    /// 1 x 4H
    pub b: Mat,
    /// P x H projection
    pub w_p: Mat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingParams {
    pub layers: Vec<LstmpParams>,
    /// Out x P
    pub w_out: Mat,
    /// 1 x Out
    pub b_out: Mat,
}

impl Tensors for MappingParams {
    fn tensors(&self) -> Vec<(String, &Mat)> {
        let mut v = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            v.push((format!("layer{i}.w_x"), &l.w_x));
            v.push((format!("layer{i}.w_r"), &l.w_r));
            v.push((format!("layer{i}.b"), &l.b));
            v.push((format!("layer{i}.w_p"), &l.w_p));
        }
        v.push(("head.w".into(), &self.w_out));
        v.push(("head.b".into(), &self.b_out));
        v
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Mat)> {
        let mut v = Vec::new();
        for (i, l) in self.layers.iter_mut().enumerate() {
            v.push((format!("layer{i}.w_x"), &mut l.w_x));
            v.push((format!("layer{i}.w_r"), &mut l.w_r));
            v.push((format!("layer{i}.b"), &mut l.b));
            v.push((format!("layer{i}.w_p"), &mut l.w_p));
        }
        v.push(("head.w".into(), &mut self.w_out));
        v.push(("head.b".into(), &mut self.b_out));
        v
    }
}

#[derive(Debug, Clone)]
pub struct MappingNetwork {
    pub spec: MappingSpec,
    pub params: MappingParams,
}

/// Per-layer activations retained for BPTT. All matrices are T x width.
pub struct LayerCache {
    /// layer input, T x In
    inputs: Mat,
    /// activated gates, T x 4H
    gates: Mat,
    /// cell state, T x H
    c: Mat,
    /// tanh(c), T x H
    tanh_c: Mat,
    /// hidden (pre-projection), T x H
    h: Mat,
    /// projection (layer output), T x P
    r: Mat,
}

pub struct MapCache {
    layers: Vec<LayerCache>,
    t_len: usize,
}

impl MapCache {
    pub fn t_len(&self) -> usize {
        self.t_len
    }
}

impl MappingNetwork {
    pub fn zeros(spec: MappingSpec) -> Result<Self> {
        spec.validate()?;
        let mut layers = Vec::with_capacity(spec.layers);
        for l in 0..spec.layers {
            let in_dim = if l == 0 { spec.input_dim } else { spec.proj };
            layers.push(LstmpParams {
                w_x: Mat::zeros(4 * spec.hidden, in_dim),
                w_r: Mat::zeros(4 * spec.hidden, spec.proj),
                b: Mat::zeros(1, 4 * spec.hidden),
                w_p: Mat::zeros(spec.proj, spec.hidden),
            });
        }
        Ok(MappingNetwork {
            spec,
            params: MappingParams {
                layers,
                w_out: Mat::zeros(spec.output_dim, spec.proj),
                b_out: Mat::zeros(1, spec.output_dim),
            },
        })
    }

    /// Glorot-uniform weights, zero biases except the forget-gate bias,
    /// which is set to 1. Deterministic for a given RNG state.
    pub fn init(spec: MappingSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut net = Self::zeros(spec)?;
        for l in &mut net.params.layers {
            glorot_uniform(&mut l.w_x, rng);
            glorot_uniform(&mut l.w_r, rng);
            glorot_uniform(&mut l.w_p, rng);
            for j in 0..spec.hidden {
                l.b[(0, GATE_F * spec.hidden + j)] = 1.0;
            }
        }
        glorot_uniform(&mut net.params.w_out, rng);
        Ok(net)
    }

    /// Left-to-right forward pass over a T x input_dim sequence. Returns the
    /// T x output_dim output and the cache needed for `backward`.
    pub fn forward(&self, input: &Mat) -> Result<(Mat, MapCache)> {
        if input.rows() == 0 {
            return Err(Error::Data("empty sequence (T=0)".into()));
        }
        if input.cols() != self.spec.input_dim {
            return Err(Error::Dim(format!(
                "input dim {} vs network input {}",
                input.cols(),
                self.spec.input_dim
            )));
        }
        let t_len = input.rows();
        let (h_dim, p_dim) = (self.spec.hidden, self.spec.proj);
        let mut caches = Vec::with_capacity(self.spec.layers);
        let mut layer_in = input.clone();

        for lp in &self.params.layers {
            let in_dim = layer_in.cols();
            let mut cache = LayerCache {
                inputs: layer_in,
                gates: Mat::zeros(t_len, 4 * h_dim),
                c: Mat::zeros(t_len, h_dim),
                tanh_c: Mat::zeros(t_len, h_dim),
                h: Mat::zeros(t_len, h_dim),
                r: Mat::zeros(t_len, p_dim),
            };
            let mut r_prev = vec![0.0; p_dim];
            let mut c_prev = vec![0.0; h_dim];
            let mut a = vec![0.0; 4 * h_dim];
            for t in 0..t_len {
                debug_assert_eq!(cache.inputs.cols(), in_dim);
                a.copy_from_slice(lp.b.row(0));
                lp.w_x.mul_vec_add(cache.inputs.row(t), &mut a);
                lp.w_r.mul_vec_add(&r_prev, &mut a);
                {
                    let gates = cache.gates.row_mut(t);
                    for j in 0..h_dim {
                        gates[GATE_I * h_dim + j] = sigmoid(a[GATE_I * h_dim + j]);
                        gates[GATE_F * h_dim + j] = sigmoid(a[GATE_F * h_dim + j]);
                        gates[GATE_G * h_dim + j] = tanh(a[GATE_G * h_dim + j]);
                        gates[GATE_O * h_dim + j] = sigmoid(a[GATE_O * h_dim + j]);
                    }
                }
                for j in 0..h_dim {
                    let gates = cache.gates.row(t);
                    let cv = gates[GATE_F * h_dim + j] * c_prev[j]
                        + gates[GATE_I * h_dim + j] * gates[GATE_G * h_dim + j];
                    let tc = tanh(cv);
                    cache.c[(t, j)] = cv;
                    cache.tanh_c[(t, j)] = tc;
                    cache.h[(t, j)] = gates[GATE_O * h_dim + j] * tc;
                    c_prev[j] = cv;
                }
                {
                    let r = cache.r.row_mut(t);
                    r.fill(0.0);
                    lp.w_p.mul_vec_add(cache.h.row(t), r);
                    r_prev.copy_from_slice(r);
                }
            }
            layer_in = cache.r.clone();
            caches.push(cache);
        }

        // linear head
        let mut out = Mat::zeros(t_len, self.spec.output_dim);
        for t in 0..t_len {
            let row = out.row_mut(t);
            row.copy_from_slice(self.params.b_out.row(0));
            self.params.w_out.mul_vec_add(layer_in.row(t), row);
        }
        Ok((out, MapCache { layers: caches, t_len }))
    }

    /// Exact BPTT. `out_grads` holds dLoss/dOutput per frame; returns the
    /// parameter gradients and dLoss/dInput per frame.
    pub fn backward(&self, cache: &MapCache, out_grads: &Mat) -> Result<(MappingParams, Mat)> {
        if cache.layers.len() != self.spec.layers {
            return Err(Error::State("cache does not match this network".into()));
        }
        let t_len = cache.t_len;
        if out_grads.rows() != t_len || out_grads.cols() != self.spec.output_dim {
            return Err(Error::Dim(format!(
                "out_grads {}x{} vs expected {}x{}",
                out_grads.rows(),
                out_grads.cols(),
                t_len,
                self.spec.output_dim
            )));
        }
        let (h_dim, p_dim) = (self.spec.hidden, self.spec.proj);
        let mut grads = self.params.zeroed();

        // head backward: upstream for the last layer's projections
        let last_r = &cache.layers[self.spec.layers - 1].r;
        let mut upstream = Mat::zeros(t_len, p_dim);
        for t in 0..t_len {
            let dy = out_grads.row(t);
            grads.w_out.add_outer(dy, last_r.row(t));
            for (b, d) in grads.b_out.row_mut(0).iter_mut().zip(dy) {
                *b += d;
            }
            self.params.w_out.mul_tvec_add(dy, upstream.row_mut(t));
        }

        // layers, top to bottom
        for l in (0..self.spec.layers).rev() {
            let lp = &self.params.layers[l];
            let lc = &cache.layers[l];
            let lg = &mut grads.layers[l];
            let mut dinput = Mat::zeros(t_len, lc.inputs.cols());

            let mut carry_dr = vec![0.0; p_dim];
            let mut carry_dc = vec![0.0; h_dim];
            let mut dr = vec![0.0; p_dim];
            let mut dh = vec![0.0; h_dim];
            let mut da = vec![0.0; 4 * h_dim];
            for t in (0..t_len).rev() {
                for (d, (u, c)) in dr.iter_mut().zip(upstream.row(t).iter().zip(&carry_dr)) {
                    *d = u + c;
                }
                lg.w_p.add_outer(&dr, lc.h.row(t));
                dh.fill(0.0);
                lp.w_p.mul_tvec_add(&dr, &mut dh);

                let gates = lc.gates.row(t);
                for j in 0..h_dim {
                    let i_g = gates[GATE_I * h_dim + j];
                    let f_g = gates[GATE_F * h_dim + j];
                    let g_g = gates[GATE_G * h_dim + j];
                    let o_g = gates[GATE_O * h_dim + j];
                    let tc = lc.tanh_c[(t, j)];
                    let c_prev = if t > 0 { lc.c[(t - 1, j)] } else { 0.0 };

                    let do_ = dh[j] * tc;
                    let dc = carry_dc[j] + dh[j] * o_g * (1.0 - tc * tc);
                    let di = dc * g_g;
                    let dg = dc * i_g;
                    let df = dc * c_prev;
                    carry_dc[j] = dc * f_g;

                    da[GATE_I * h_dim + j] = di * i_g * (1.0 - i_g);
                    da[GATE_F * h_dim + j] = df * f_g * (1.0 - f_g);
                    da[GATE_G * h_dim + j] = dg * (1.0 - g_g * g_g);
                    da[GATE_O * h_dim + j] = do_ * o_g * (1.0 - o_g);
                }

                lg.w_x.add_outer(&da, lc.inputs.row(t));
                if t > 0 {
                    lg.w_r.add_outer(&da, lc.r.row(t - 1));
                }
                for (b, d) in lg.b.row_mut(0).iter_mut().zip(&da) {
                    *b += d;
                }
                lp.w_x.mul_tvec_add(&da, dinput.row_mut(t));
                carry_dr.fill(0.0);
                if t > 0 {
                    lp.w_r.mul_tvec_add(&da, &mut carry_dr);
                }
            }
            upstream = dinput;
        }
        Ok((grads, upstream))
    }
}
