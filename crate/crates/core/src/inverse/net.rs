//! Forward and backward passes of the inverse model.
//!
//! Parameters live in one flat vector; every layer keeps offsets into it.
//! A batch is `b` chunks of `l` consecutive frames, stored row-major as
//! `n = b * l` rows. The temporal block is causal within a chunk: the
//! attention variant attends to at most `context` frames back with fixed
//! per-head linear distance penalties, the recurrent variant is a GRU that
//! starts from a zero state at the first frame of each chunk.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::linalg::{add_col_sums, add_row_bias, gemm, gemm_strided, relu_backward, relu_inplace, sigmoid};
use super::{Architecture, ModelConfig};
use crate::domain::{RealEvent, N_SLOTS};

pub(crate) const N_IN: usize = N_SLOTS;
pub(crate) const N_EVENTS: usize = RealEvent::COUNT;
const HUBER_DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: usize,
    b: usize,
    i: usize,
    o: usize,
}

impl Dense {
    fn w<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.w..self.w + self.i * self.o]
    }

    fn b<'a>(&self, p: &'a [f64]) -> &'a [f64] {
        &p[self.b..self.b + self.o]
    }

    fn forward(&self, p: &[f64], x: &[f64], n: usize) -> Vec<f64> {
        let mut y = vec![0.0; n * self.o];
        gemm(n, self.i, self.o, x, false, self.w(p), false, &mut y, 0.0);
        add_row_bias(&mut y, self.b(p));
        y
    }

    /// Accumulates weight and bias gradients; returns `dx` when asked.
    fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64], n: usize, want_dx: bool) -> Option<Vec<f64>> {
        gemm(self.i, n, self.o, x, true, dy, false, &mut g[self.w..self.w + self.i * self.o], 1.0);
        add_col_sums(&mut g[self.b..self.b + self.o], dy);
        want_dx.then(|| {
            let mut dx = vec![0.0; n * self.i];
            gemm(n, self.o, self.i, dy, false, self.w(p), true, &mut dx, 0.0);
            dx
        })
    }
}

struct Layout {
    n: usize,
}

impl Layout {
    fn dense(&mut self, i: usize, o: usize) -> Dense {
        let d = Dense {
            w: self.n,
            b: self.n + i * o,
            i,
            o,
        };
        self.n += i * o + o;
        d
    }
}

#[derive(Debug, Clone)]
enum Mixer {
    Attention {
        q: Dense,
        k: Dense,
        v: Dense,
        o: Dense,
        heads: usize,
        slopes: Vec<f64>,
    },
    Recurrent {
        wx: Dense,
        wh: Dense,
    },
}

/// Network topology derived from a [`ModelConfig`].
#[derive(Debug, Clone)]
pub(crate) struct Net {
    t: usize,
    context: usize,
    enc1: Dense,
    enc2: Dense,
    proj: Dense,
    mixer: Mixer,
    ff1: Dense,
    ff2: Dense,
    ev: Dense,
    p1: Dense,
    p2: Dense,
    pub n_params: usize,
}

/// Inputs and targets of one batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub b: usize,
    pub l: usize,
    /// `n x 5` normalized inputs; rows of masked frames are zero.
    pub x: Vec<f64>,
    /// Frames that contribute to the loss.
    pub valid: Vec<bool>,
    pub label: Vec<u8>,
    pub pos: Vec<[f64; 2]>,
}

impl Batch {
    pub fn new(b: usize, l: usize) -> Self {
        let n = b * l;
        Self {
            b,
            l,
            x: vec![0.0; n * N_IN],
            valid: vec![false; n],
            label: vec![0; n],
            pos: vec![[0.0; 2]; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.b * self.l
    }
}

#[derive(Debug, Default)]
struct MixCache {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Attention weights, `n x heads x context`, index `d` = distance back.
    p: Vec<f64>,
    a: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    nn: Vec<f64>,
    ghn: Vec<f64>,
    h: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Debug, Default)]
pub(crate) struct Cache {
    n: usize,
    b: usize,
    l: usize,
    e1: Vec<f64>,
    e2: Vec<f64>,
    u: Vec<f64>,
    mix: MixCache,
    y: Vec<f64>,
    f1: Vec<f64>,
    z: Vec<f64>,
    h1: Vec<f64>,
    pub logits: Vec<f64>,
    pub pos: Vec<f64>,
}

/// Loss summary of one batch. `loss` already carries the weight passed to
/// [`Net::loss_backward`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossStats {
    pub loss: f64,
    pub frames: usize,
    pub correct: usize,
}

impl Net {
    pub fn new(cfg: &ModelConfig) -> Self {
        let (s, t) = (cfg.state_hidden, cfg.traj_hidden);
        let mut lay = Layout { n: 0 };
        let enc1 = lay.dense(N_IN, s);
        let enc2 = lay.dense(s, s);
        let proj = lay.dense(s, t);
        let mixer = match cfg.architecture {
            Architecture::SelfAttention => {
                let heads = cfg.n_heads_attn;
                let slopes = (0..heads)
                    .map(|h| 2f64.powf(-8.0 * (h + 1) as f64 / heads as f64))
                    .collect();
                Mixer::Attention {
                    q: lay.dense(t, t),
                    k: lay.dense(t, t),
                    v: lay.dense(t, t),
                    o: lay.dense(t, t),
                    heads,
                    slopes,
                }
            }
            Architecture::Recurrent => Mixer::Recurrent {
                wx: lay.dense(t, 3 * t),
                wh: lay.dense(t, 3 * t),
            },
        };
        let ff1 = lay.dense(t, 2 * t);
        let ff2 = lay.dense(2 * t, t);
        let ev = lay.dense(t, N_EVENTS);
        let p1 = lay.dense(t, t);
        let p2 = lay.dense(t, 2);
        Self {
            t,
            context: cfg.context,
            enc1,
            enc2,
            proj,
            mixer,
            ff1,
            ff2,
            ev,
            p1,
            p2,
            n_params: lay.n,
        }
    }

    /// Random initial parameters. `pos_bias` seeds the position output bias
    /// so training starts from the mean position.
    pub fn init(&self, rng: &mut impl Rng, pos_bias: [f64; 2]) -> Vec<f64> {
        let mut p = vec![0.0; self.n_params];
        let mut fill = |d: &Dense, scale: f64, rng: &mut dyn rand::RngCore| {
            let std = scale / (d.i as f64).sqrt();
            let dist = Normal::new(0.0, std).expect("positive std");
            for w in &mut p[d.w..d.w + d.i * d.o] {
                *w = dist.sample(rng);
            }
        };
        let relu = std::f64::consts::SQRT_2;
        fill(&self.enc1, relu, rng);
        fill(&self.enc2, relu, rng);
        fill(&self.proj, 1.0, rng);
        match &self.mixer {
            Mixer::Attention { q, k, v, o, .. } => {
                fill(q, 1.0, rng);
                fill(k, 1.0, rng);
                fill(v, 1.0, rng);
                fill(o, 0.5, rng);
            }
            Mixer::Recurrent { wx, wh } => {
                fill(wx, 1.0, rng);
                fill(wh, 1.0, rng);
            }
        }
        fill(&self.ff1, relu, rng);
        fill(&self.ff2, 0.5, rng);
        fill(&self.ev, 1.0, rng);
        fill(&self.p1, relu, rng);
        fill(&self.p2, 1.0, rng);
        // Small positive ReLU biases keep the zero rows of masked frames off the kink.
        for d in [&self.enc1, &self.enc2, &self.ff1, &self.p1] {
            p[d.b..d.b + d.o].fill(0.01);
        }
        p[self.p2.b] = pos_bias[0];
        p[self.p2.b + 1] = pos_bias[1];
        p
    }

    pub fn forward(&self, p: &[f64], batch: &Batch) -> Cache {
        let (b, l) = (batch.b, batch.l);
        let n = b * l;
        let mut c = Cache {
            n,
            b,
            l,
            ..Default::default()
        };
        c.e1 = self.enc1.forward(p, &batch.x, n);
        relu_inplace(&mut c.e1);
        c.e2 = self.enc2.forward(p, &c.e1, n);
        relu_inplace(&mut c.e2);
        c.u = self.proj.forward(p, &c.e2, n);
        let mixed = match &self.mixer {
            Mixer::Attention { q, k, v, o, heads, slopes } => {
                c.mix.q = q.forward(p, &c.u, n);
                c.mix.k = k.forward(p, &c.u, n);
                c.mix.v = v.forward(p, &c.u, n);
                self.attend(&mut c.mix, b, l, *heads, slopes);
                o.forward(p, &c.mix.a, n)
            }
            Mixer::Recurrent { wx, wh } => {
                self.recur(p, &mut c.mix, &c.u, b, l, wx, wh);
                c.mix.h.clone()
            }
        };
        c.y = c.u.clone();
        for (y, m) in c.y.iter_mut().zip(&mixed) {
            *y += m;
        }
        c.f1 = self.ff1.forward(p, &c.y, n);
        relu_inplace(&mut c.f1);
        c.z = self.ff2.forward(p, &c.f1, n);
        for (z, y) in c.z.iter_mut().zip(&c.y) {
            *z += y;
        }
        c.logits = self.ev.forward(p, &c.z, n);
        c.h1 = self.p1.forward(p, &c.z, n);
        relu_inplace(&mut c.h1);
        c.pos = self.p2.forward(p, &c.h1, n);
        c
    }

    fn attend(&self, m: &mut MixCache, b: usize, l: usize, heads: usize, slopes: &[f64]) {
        let t = self.t;
        let dh = t / heads;
        let ctx = self.context;
        let scale = 1.0 / (dh as f64).sqrt();
        let n = b * l;
        m.p = vec![0.0; n * heads * ctx];
        m.a = vec![0.0; n * t];
        let mut s = vec![0.0; ctx];
        for bi in 0..b {
            for i in 0..l {
                let row = bi * l + i;
                let span = ctx.min(i + 1);
                for (h, &slope) in slopes.iter().enumerate() {
                    let off = h * dh;
                    let qi = &m.q[row * t + off..row * t + off + dh];
                    let mut max = f64::NEG_INFINITY;
                    for (d, sd) in s.iter_mut().enumerate().take(span) {
                        let kj = &m.k[(row - d) * t + off..(row - d) * t + off + dh];
                        let dot: f64 = qi.iter().zip(kj).map(|(a, b)| a * b).sum();
                        *sd = dot * scale - slope * d as f64;
                        max = max.max(*sd);
                    }
                    let pr = &mut m.p[(row * heads + h) * ctx..(row * heads + h) * ctx + ctx];
                    let mut sum = 0.0;
                    for d in 0..span {
                        pr[d] = (s[d] - max).exp();
                        sum += pr[d];
                    }
                    for v in pr.iter_mut().take(span) {
                        *v /= sum;
                    }
                    let ai = &mut m.a[row * t + off..row * t + off + dh];
                    for (d, &w) in pr.iter().enumerate().take(span) {
                        let vj = &m.v[(row - d) * t + off..(row - d) * t + off + dh];
                        for (a, v) in ai.iter_mut().zip(vj) {
                            *a += w * v;
                        }
                    }
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn recur(&self, p: &[f64], m: &mut MixCache, u: &[f64], b: usize, l: usize, wx: &Dense, wh: &Dense) {
        let t = self.t;
        let n = b * l;
        let gx = wx.forward(p, u, n);
        let mut gh = vec![0.0; n * 3 * t];
        m.z = vec![0.0; n * t];
        m.r = vec![0.0; n * t];
        m.nn = vec![0.0; n * t];
        m.ghn = vec![0.0; n * t];
        m.h = vec![0.0; n * t];
        let bh = wh.b(p);
        for step in 0..l {
            if step > 0 {
                let src = &m.h[(step - 1) * t..];
                let dst = &mut gh[step * 3 * t..];
                gemm_strided(b, t, 3 * t, src, l * t, wh.w(p), false, dst, l * 3 * t, 0.0);
            }
            for bi in 0..b {
                let row = bi * l + step;
                for j in 0..t {
                    let g = &gh[row * 3 * t..row * 3 * t + 3 * t];
                    let x = &gx[row * 3 * t..row * 3 * t + 3 * t];
                    let z = sigmoid(x[j] + g[j] + bh[j]);
                    let r = sigmoid(x[t + j] + g[t + j] + bh[t + j]);
                    let ghn = g[2 * t + j] + bh[2 * t + j];
                    let nv = (x[2 * t + j] + r * ghn).tanh();
                    let hp = if step > 0 { m.h[(row - 1) * t + j] } else { 0.0 };
                    m.z[row * t + j] = z;
                    m.r[row * t + j] = r;
                    m.ghn[row * t + j] = ghn;
                    m.nn[row * t + j] = nv;
                    m.h[row * t + j] = (1.0 - z) * nv + z * hp;
                }
            }
        }
    }

    /// Cross-entropy plus Huber position loss on valid frames, each frame
    /// weighted by `weight`; writes the parameter gradient into `grad`
    /// (overwritten). Returns the weighted loss.
    pub fn loss_backward(
        &self,
        p: &[f64],
        batch: &Batch,
        c: &Cache,
        lambda_sta: f64,
        lambda_pos: f64,
        weight: f64,
        grad: &mut [f64],
    ) -> LossStats {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let n = c.n;
        let mut stats = LossStats::default();
        let mut dlog = vec![0.0; n * N_EVENTS];
        let mut dpos = vec![0.0; n * 2];
        for row in 0..n {
            if !batch.valid[row] {
                continue;
            }
            stats.frames += 1;
            let y = batch.label[row] as usize;
            let lg = &c.logits[row * N_EVENTS..(row + 1) * N_EVENTS];
            let pr = softmax(lg);
            let arg = argmax(&pr);
            if arg == y {
                stats.correct += 1;
            }
            stats.loss += weight * lambda_sta * cross_entropy(&pr, y);
            for k in 0..N_EVENTS {
                let one = if k == y { 1.0 } else { 0.0 };
                dlog[row * N_EVENTS + k] = weight * lambda_sta * (pr[k] - one);
            }
            if y != RealEvent::Absence.index() {
                for d in 0..2 {
                    let r = c.pos[row * 2 + d] - batch.pos[row][d];
                    let (l, g) = huber(r);
                    stats.loss += weight * lambda_pos * l;
                    dpos[row * 2 + d] = weight * lambda_pos * g;
                }
            }
        }

        let mut dz = self.ev.backward(p, grad, &c.z, &dlog, n, true).expect("dx");
        let mut dh1 = self.p2.backward(p, grad, &c.h1, &dpos, n, true).expect("dx");
        relu_backward(&mut dh1, &c.h1);
        let dz_pos = self.p1.backward(p, grad, &c.z, &dh1, n, true).expect("dx");
        for (a, b) in dz.iter_mut().zip(&dz_pos) {
            *a += b;
        }
        let mut df1 = self.ff2.backward(p, grad, &c.f1, &dz, n, true).expect("dx");
        relu_backward(&mut df1, &c.f1);
        let mut dy = self.ff1.backward(p, grad, &c.y, &df1, n, true).expect("dx");
        for (a, b) in dy.iter_mut().zip(&dz) {
            *a += b;
        }
        let mut du = dy.clone();
        match &self.mixer {
            Mixer::Attention { q, k, v, o, heads, slopes } => {
                let da = o.backward(p, grad, &c.mix.a, &dy, n, true).expect("dx");
                let (dq, dk, dv) = self.attend_backward(&c.mix, &da, c.b, c.l, *heads, slopes);
                for (d, layer) in [(dq, q), (dk, k), (dv, v)] {
                    let dx = layer.backward(p, grad, &c.u, &d, n, true).expect("dx");
                    for (a, b) in du.iter_mut().zip(&dx) {
                        *a += b;
                    }
                }
            }
            Mixer::Recurrent { wx, wh } => {
                let dx = self.recur_backward(p, grad, &c.mix, &c.u, &dy, c.b, c.l, wx, wh);
                for (a, b) in du.iter_mut().zip(&dx) {
                    *a += b;
                }
            }
        }
        let mut de2 = self.proj.backward(p, grad, &c.e2, &du, n, true).expect("dx");
        relu_backward(&mut de2, &c.e2);
        let mut de1 = self.enc2.backward(p, grad, &c.e1, &de2, n, true).expect("dx");
        relu_backward(&mut de1, &c.e1);
        self.enc1.backward(p, grad, &batch.x, &de1, n, false);
        stats
    }

    /// Outputs of the recurrent variant at frames `first..n` of one
    /// sequence, each from a GRU run over the `context` frames ending there
    /// (`first >= context - 1`). Per-frame stages are computed once.
    pub fn recurrent_windows(&self, p: &[f64], x: &[f64], n: usize, first: usize, block: usize) -> (Vec<f64>, Vec<f64>) {
        let Mixer::Recurrent { wx, wh } = &self.mixer else {
            panic!("recurrent_windows on an attention model");
        };
        let (t, c) = (self.t, self.context);
        debug_assert!(first + 1 >= c);
        let mut e1 = self.enc1.forward(p, x, n);
        relu_inplace(&mut e1);
        let mut e2 = self.enc2.forward(p, &e1, n);
        relu_inplace(&mut e2);
        let u = self.proj.forward(p, &e2, n);
        let gx = wx.forward(p, &u, n);
        let bh = wh.b(p);
        let mut logits = Vec::with_capacity((n - first) * N_EVENTS);
        let mut pos = Vec::with_capacity((n - first) * 2);
        let mut i = first;
        while i < n {
            let m = block.min(n - i);
            let mut h = vec![0.0; m * t];
            let mut gh = vec![0.0; m * 3 * t];
            for k in 0..c {
                if k > 0 {
                    gemm(m, t, 3 * t, &h, false, wh.w(p), false, &mut gh, 0.0);
                }
                for w in 0..m {
                    let row = i + w + 1 - c + k;
                    let x = &gx[row * 3 * t..(row + 1) * 3 * t];
                    let g = &gh[w * 3 * t..(w + 1) * 3 * t];
                    for j in 0..t {
                        let z = sigmoid(x[j] + g[j] + bh[j]);
                        let r = sigmoid(x[t + j] + g[t + j] + bh[t + j]);
                        let nv = (x[2 * t + j] + r * (g[2 * t + j] + bh[2 * t + j])).tanh();
                        let hp = h[w * t + j];
                        h[w * t + j] = (1.0 - z) * nv + z * hp;
                    }
                }
            }
            let mut y = h;
            for w in 0..m {
                for j in 0..t {
                    y[w * t + j] += u[(i + w) * t + j];
                }
            }
            let (lg, ps) = self.post(p, &y, m);
            logits.extend_from_slice(&lg);
            pos.extend_from_slice(&ps);
            i += m;
        }
        (logits, pos)
    }

    fn post(&self, p: &[f64], y: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut f1 = self.ff1.forward(p, y, n);
        relu_inplace(&mut f1);
        let mut z = self.ff2.forward(p, &f1, n);
        for (a, b) in z.iter_mut().zip(y) {
            *a += b;
        }
        let logits = self.ev.forward(p, &z, n);
        let mut h1 = self.p1.forward(p, &z, n);
        relu_inplace(&mut h1);
        (logits, self.p2.forward(p, &h1, n))
    }

    fn attend_backward(
        &self,
        m: &MixCache,
        da: &[f64],
        b: usize,
        l: usize,
        heads: usize,
        slopes: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let t = self.t;
        let dh = t / heads;
        let ctx = self.context;
        let scale = 1.0 / (dh as f64).sqrt();
        let n = b * l;
        let mut dq = vec![0.0; n * t];
        let mut dk = vec![0.0; n * t];
        let mut dv = vec![0.0; n * t];
        let mut dp = vec![0.0; ctx];
        for bi in 0..b {
            for i in 0..l {
                let row = bi * l + i;
                let span = ctx.min(i + 1);
                for h in 0..slopes.len() {
                    let off = h * dh;
                    let pr = &m.p[(row * heads + h) * ctx..(row * heads + h) * ctx + ctx];
                    let dai = &da[row * t + off..row * t + off + dh];
                    let mut sum = 0.0;
                    for d in 0..span {
                        let j = row - d;
                        let vj = &m.v[j * t + off..j * t + off + dh];
                        dp[d] = dai.iter().zip(vj).map(|(a, b)| a * b).sum();
                        sum += pr[d] * dp[d];
                        for (x, a) in dv[j * t + off..j * t + off + dh].iter_mut().zip(dai) {
                            *x += pr[d] * a;
                        }
                    }
                    for d in 0..span {
                        let j = row - d;
                        let ds = pr[d] * (dp[d] - sum) * scale;
                        if ds == 0.0 {
                            continue;
                        }
                        for e in 0..dh {
                            dq[row * t + off + e] += ds * m.k[j * t + off + e];
                            dk[j * t + off + e] += ds * m.q[row * t + off + e];
                        }
                    }
                }
            }
        }
        (dq, dk, dv)
    }

    #[allow(clippy::too_many_arguments)]
    fn recur_backward(
        &self,
        p: &[f64],
        grad: &mut [f64],
        m: &MixCache,
        u: &[f64],
        dh_out: &[f64],
        b: usize,
        l: usize,
        wx: &Dense,
        wh: &Dense,
    ) -> Vec<f64> {
        let t = self.t;
        let n = b * l;
        let mut dgx = vec![0.0; n * 3 * t];
        let mut dgh = vec![0.0; n * 3 * t];
        let mut carry = vec![0.0; b * t];
        for step in (0..l).rev() {
            for bi in 0..b {
                let row = bi * l + step;
                for j in 0..t {
                    let idx = row * t + j;
                    let dh = dh_out[idx] + carry[bi * t + j];
                    let (z, r, nv) = (m.z[idx], m.r[idx], m.nn[idx]);
                    let hp = if step > 0 { m.h[idx - t] } else { 0.0 };
                    let dz = dh * (hp - nv);
                    let dn = dh * (1.0 - z);
                    let dan = dn * (1.0 - nv * nv);
                    let dr = dan * m.ghn[idx];
                    let daz = dz * z * (1.0 - z);
                    let dar = dr * r * (1.0 - r);
                    let g = row * 3 * t;
                    dgx[g + j] = daz;
                    dgx[g + t + j] = dar;
                    dgx[g + 2 * t + j] = dan;
                    dgh[g + j] = daz;
                    dgh[g + t + j] = dar;
                    dgh[g + 2 * t + j] = dan * r;
                    carry[bi * t + j] = dh * z;
                }
            }
            if step > 0 {
                let src = &dgh[step * 3 * t..];
                gemm_strided(b, 3 * t, t, src, l * 3 * t, wh.w(p), true, &mut carry, t, 1.0);
            }
        }
        let mut hprev = vec![0.0; n * t];
        for bi in 0..b {
            for step in 1..l {
                let row = bi * l + step;
                hprev[row * t..(row + 1) * t].copy_from_slice(&m.h[(row - 1) * t..row * t]);
            }
        }
        wh.backward(p, grad, &hprev, &dgh, n, false);
        wx.backward(p, grad, u, &dgx, n, true).expect("dx")
    }
}

pub(crate) fn softmax(x: &[f64]) -> [f64; N_EVENTS] {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; N_EVENTS];
    let mut sum = 0.0;
    for (o, v) in out.iter_mut().zip(x) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn cross_entropy(probs: &[f64; N_EVENTS], y: usize) -> f64 {
    -(probs[y].max(f64::MIN_POSITIVE)).ln()
}

/// Loss of one frame, matching what [`Net::loss_backward`] accumulates.
pub(crate) fn frame_loss(logits: &[f64], pos: &[f64], y: usize, target: [f64; 2], lambda_sta: f64, lambda_pos: f64) -> f64 {
    let mut l = lambda_sta * cross_entropy(&softmax(logits), y);
    if y != RealEvent::Absence.index() {
        l += lambda_pos * (huber(pos[0] - target[0]).0 + huber(pos[1] - target[1]).0);
    }
    l
}

/// Huber loss and its derivative.
fn huber(r: f64) -> (f64, f64) {
    if r.abs() <= HUBER_DELTA {
        (0.5 * r * r, r)
    } else {
        (HUBER_DELTA * (r.abs() - 0.5 * HUBER_DELTA), HUBER_DELTA * r.signum())
    }
}
