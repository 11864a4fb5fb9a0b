use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{PredictionMap, TaskSpec};
use crate::rng;

use super::loss::{loss_with_grad, LossSpec};

/// Hidden width of [`Arch::ShallowConv`].
pub const SHALLOW_WIDTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    /// One 5×5 convolution straight to the output head.
    PatchLinear,
    /// Three 3×3 convolutions (width 16) with ReLU between them.
    ShallowConv,
}

impl Arch {
    pub fn tag(self) -> u8 {
        match self {
            Arch::PatchLinear => 0,
            Arch::ShallowConv => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Arch::PatchLinear),
            1 => Some(Arch::ShallowConv),
            _ => None,
        }
    }

    fn layers(self, cin: usize, cout: usize) -> Vec<ConvShape> {
        let dims: Vec<(usize, usize, usize)> = match self {
            Arch::PatchLinear => vec![(5, cin, cout)],
            Arch::ShallowConv => vec![
                (3, cin, SHALLOW_WIDTH),
                (3, SHALLOW_WIDTH, SHALLOW_WIDTH),
                (3, SHALLOW_WIDTH, cout),
            ],
        };
        let mut off = 0;
        dims.into_iter()
            .map(|(k, cin, cout)| {
                let s = ConvShape {
                    k,
                    cin,
                    cout,
                    w_off: off,
                    b_off: off + k * k * cin * cout,
                };
                off = s.b_off + cout;
                s
            })
            .collect()
    }

    pub fn param_count(self, cin: usize, cout: usize) -> usize {
        self.layers(cin, cout)
            .last()
            .map(|l| l.b_off + l.cout)
            .unwrap_or(0)
    }
}

/// Zero-padded "same" convolution; weights laid out `[ky][kx][cin][cout]`.
#[derive(Debug, Clone, Copy)]
struct ConvShape {
    k: usize,
    cin: usize,
    cout: usize,
    w_off: usize,
    b_off: usize,
}

impl ConvShape {
    fn forward(&self, params: &[f64], input: &[f64], h: usize, w: usize) -> Vec<f64> {
        let (k, cin, cout) = (self.k, self.cin, self.cout);
        let pad = (k / 2) as isize;
        let weights = &params[self.w_off..self.b_off];
        let bias = &params[self.b_off..self.b_off + cout];
        let mut out = vec![0.0; h * w * cout];
        for y in 0..h {
            for x in 0..w {
                let o = &mut out[(y * w + x) * cout..(y * w + x + 1) * cout];
                o.copy_from_slice(bias);
                for ky in 0..k {
                    let iy = y as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let ix = x as isize + kx as isize - pad;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let ip = (iy as usize * w + ix as usize) * cin;
                        let wb = (ky * k + kx) * cin * cout;
                        for i in 0..cin {
                            let v = input[ip + i];
                            let row = &weights[wb + i * cout..wb + (i + 1) * cout];
                            for (acc, wv) in o.iter_mut().zip(row) {
                                *acc += v * wv;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulate parameter gradients into `grad`; return the input gradient
    /// when requested.
    fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        gout: &[f64],
        h: usize,
        w: usize,
        grad: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let (k, cin, cout) = (self.k, self.cin, self.cout);
        let pad = (k / 2) as isize;
        let weights = &params[self.w_off..self.b_off];
        let (gw_all, gb_all) = grad.split_at_mut(self.b_off);
        let gw = &mut gw_all[self.w_off..];
        let gb = &mut gb_all[..cout];
        let mut gin = want_input_grad.then(|| vec![0.0; h * w * cin]);
        for y in 0..h {
            for x in 0..w {
                let g = &gout[(y * w + x) * cout..(y * w + x + 1) * cout];
                for (b, gv) in gb.iter_mut().zip(g) {
                    *b += gv;
                }
                for ky in 0..k {
                    let iy = y as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let ix = x as isize + kx as isize - pad;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        let ip = (iy as usize * w + ix as usize) * cin;
                        let wb = (ky * k + kx) * cin * cout;
                        for i in 0..cin {
                            let v = input[ip + i];
                            let r = wb + i * cout..wb + (i + 1) * cout;
                            for (acc, gv) in gw[r.clone()].iter_mut().zip(g) {
                                *acc += v * gv;
                            }
                            if let Some(gin) = gin.as_mut() {
                                let dot: f64 = weights[r].iter().zip(g).map(|(a, b)| a * b).sum();
                                gin[ip + i] += dot;
                            }
                        }
                    }
                }
            }
        }
        gin
    }
}

/// A trainable transformation from one task's view to another's.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeModel {
    pub src: TaskSpec,
    pub dst: TaskSpec,
    pub arch: Arch,
    params: Vec<f64>,
}

struct Trace {
    /// Input to each layer; `acts[0]` is the model input.
    acts: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl EdgeModel {
    /// Fresh model with seeded He-style initialization.
    pub fn new(src: TaskSpec, dst: TaskSpec, arch: Arch, seed: u64) -> Self {
        let layers = arch.layers(src.channels, dst.channels);
        let mut params = vec![0.0; arch.param_count(src.channels, dst.channels)];
        let mut rng = rng::stream(
            seed,
            &[rng::label("init"), rng::label(&src.name), rng::label(&dst.name)],
        );
        let last = layers.len() - 1;
        for (li, l) in layers.iter().enumerate() {
            let fan_in = (l.k * l.k * l.cin) as f64;
            let std = if li == last {
                0.5 / fan_in.sqrt()
            } else {
                (2.0 / fan_in).sqrt()
            };
            for p in &mut params[l.w_off..l.b_off] {
                let z: f64 = rng.sample(StandardNormal);
                *p = z * std;
            }
        }
        Self {
            src,
            dst,
            arch,
            params,
        }
    }

    /// Model with explicit parameters (length must match the architecture).
    pub fn with_params(src: TaskSpec, dst: TaskSpec, arch: Arch, params: Vec<f64>) -> Result<Self> {
        let expected = arch.param_count(src.channels, dst.channels);
        if params.len() != expected {
            return Err(Error::Shape(format!(
                "{arch:?} {}→{} needs {expected} parameters, got {}",
                src.name,
                dst.name,
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerics("non-finite parameter".into()));
        }
        Ok(Self {
            src,
            dst,
            arch,
            params,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn loss_spec(&self) -> LossSpec {
        LossSpec::for_kind(self.dst.kind)
    }

    fn layers(&self) -> Vec<ConvShape> {
        self.arch.layers(self.src.channels, self.dst.channels)
    }

    fn head(&self, logits: &mut [f64]) {
        let c = self.dst.channels;
        if self.dst.is_classification() {
            for px in logits.chunks_exact_mut(c) {
                let max = px.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in px.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in px.iter_mut() {
                    *v /= sum;
                }
            }
        } else {
            for v in logits.iter_mut() {
                *v = 1.0 / (1.0 + (-*v).exp());
            }
        }
    }

    fn run(&self, input: &[f64], h: usize, w: usize, keep: bool) -> Trace {
        let layers = self.layers();
        let mut acts = Vec::with_capacity(layers.len());
        let mut cur = input.to_vec();
        let last = layers.len() - 1;
        for (li, l) in layers.iter().enumerate() {
            let mut next = l.forward(&self.params, &cur, h, w);
            if li < last {
                for v in next.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            if keep {
                acts.push(std::mem::replace(&mut cur, next));
            } else {
                cur = next;
            }
        }
        self.head(&mut cur);
        Trace { acts, output: cur }
    }

    fn check_input(&self, input: &PredictionMap) -> Result<()> {
        if input.channels() != self.src.channels {
            return Err(Error::Shape(format!(
                "edge {}→{} expects {} input channels, got {}",
                self.src.name,
                self.dst.name,
                self.src.channels,
                input.channels()
            )));
        }
        Ok(())
    }

    /// Head outputs on a raw channel-last buffer.
    pub fn forward_raw(&self, input: &[f64], h: usize, w: usize) -> Vec<f64> {
        self.run(input, h, w, false).output
    }

    pub fn forward(&self, input: &PredictionMap) -> Result<PredictionMap> {
        self.check_input(input)?;
        let (h, w, _) = input.dims();
        let out = self.forward_raw(&input.to_f64(), h, w);
        let mut map = PredictionMap::from_f64(h, w, self.dst.channels, &out)?;
        if self.dst.is_classification() {
            map.renormalize_simplex();
        }
        Ok(map)
    }

    /// Penultimate representation: last hidden activations for
    /// `ShallowConv`, pre-head logits for `PatchLinear`.
    pub fn features(&self, input: &PredictionMap) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let (h, w, _) = input.dims();
        let layers = self.layers();
        let mut cur = input.to_f64();
        let n_hidden = layers.len().saturating_sub(1).max(1);
        for l in layers.iter().take(n_hidden) {
            cur = l.forward(&self.params, &cur, h, w);
            if layers.len() > 1 {
                for v in cur.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        Ok(cur)
    }

    /// Loss and its gradient w.r.t. every parameter for one sample.
    pub fn loss_and_grad(
        &self,
        input: &[f64],
        target: &[f64],
        h: usize,
        w: usize,
        grad: &mut [f64],
    ) -> f64 {
        let trace = self.run(input, h, w, true);
        let c = self.dst.channels;
        let (loss, dout) = loss_with_grad(&trace.output, target, h, w, c, self.loss_spec());

        // back through the head
        let mut g: Vec<f64> = if self.dst.is_classification() {
            let mut dz = vec![0.0; dout.len()];
            for ((p, gp), dzp) in trace
                .output
                .chunks_exact(c)
                .zip(dout.chunks_exact(c))
                .zip(dz.chunks_exact_mut(c))
            {
                let dot: f64 = p.iter().zip(gp).map(|(a, b)| a * b).sum();
                for k in 0..c {
                    dzp[k] = p[k] * (gp[k] - dot);
                }
            }
            dz
        } else {
            trace
                .output
                .iter()
                .zip(&dout)
                .map(|(s, gv)| gv * s * (1.0 - s))
                .collect()
        };

        let layers = self.layers();
        for li in (0..layers.len()).rev() {
            let input_act = &trace.acts[li];
            let gin = layers[li].backward(&self.params, input_act, &g, h, w, grad, li > 0);
            if let Some(mut gin) = gin {
                // ReLU on the previous layer's output
                for (gv, a) in gin.iter_mut().zip(input_act) {
                    if *a <= 0.0 {
                        *gv = 0.0;
                    }
                }
                g = gin;
            }
        }
        loss
    }
}
