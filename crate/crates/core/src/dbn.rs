//! Binary RBMs and their stacking into a DBN whose top data layer carries
//! the code from below, one unit per rule feature, and the separator unit.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::encoding::BitVector;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"EODADBN\0";
const VERSION: u32 = 1;

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = [0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f32 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f32>() + tail
}

#[inline]
fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn bernoulli(p: &[f32], out: &mut [f32], rng: &mut impl Rng) {
    for (o, &pi) in out.iter_mut().zip(p) {
        *o = (rng.gen::<f32>() < pi) as u8 as f32;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub cd_steps: usize,
    pub learning_rate: f32,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_init_scale: f32,
    pub gibbs_steps_sampling: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            cd_steps: 1,
            learning_rate: 0.1,
            epochs: 60,
            batch_size: 32,
            weight_init_scale: 0.01,
            gibbs_steps_sampling: 6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cd_steps == 0 {
            return Err(Error::config("cd_steps", "must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be finite and non-negative"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        if !(self.weight_init_scale >= 0.0 && self.weight_init_scale.is_finite()) {
            return Err(Error::config("weight_init_scale", "must be finite and non-negative"));
        }
        if self.gibbs_steps_sampling == 0 {
            return Err(Error::config("gibbs_steps_sampling", "must be at least 1"));
        }
        Ok(())
    }
}

/// Weights are stored hidden-major: row `j` holds hidden unit `j`'s weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rbm {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub w: Vec<f32>,
    pub b: Vec<f32>,
    pub c: Vec<f32>,
}

impl Rbm {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Rbm {
            n_visible,
            n_hidden,
            w: vec![0.0; n_visible * n_hidden],
            b: vec![0.0; n_visible],
            c: vec![0.0; n_hidden],
        }
    }

    pub fn random(n_visible: usize, n_hidden: usize, scale: f32, rng: &mut impl Rng) -> Self {
        let mut r = Self::zeros(n_visible, n_hidden);
        if scale > 0.0 {
            let normal = Normal::new(0.0f32, scale).expect("finite scale");
            r.w.iter_mut().for_each(|x| *x = normal.sample(rng));
        }
        r
    }

    pub fn row(&self, j: usize) -> &[f32] {
        &self.w[j * self.n_visible..(j + 1) * self.n_visible]
    }

    pub fn weight(&self, j: usize, i: usize) -> f32 {
        self.w[j * self.n_visible + i]
    }

    fn check_visible(&self, v: &[f32]) -> Result<()> {
        if v.len() != self.n_visible {
            return Err(Error::Dimension(format!("expected {} visible units, got {}", self.n_visible, v.len())));
        }
        Ok(())
    }

    pub fn hidden_probs(&self, v: &[f32], out: &mut [f32]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = sigmoid(self.c[j] + dot(self.row(j), v));
        }
    }

    pub fn visible_probs(&self, h: &[f32], out: &mut [f32]) {
        out.copy_from_slice(&self.b);
        for (j, &hj) in h.iter().enumerate() {
            if hj != 0.0 {
                axpy(hj, self.row(j), out);
            }
        }
        out.iter_mut().for_each(|x| *x = sigmoid(*x));
    }

    /// `F(v) = -b.v - sum_h log(1 + exp(c_h + W_h.v))`.
    pub fn free_energy(&self, v: &[f32]) -> Result<f64> {
        self.check_visible(v)?;
        let mut f = -self.b.iter().zip(v).map(|(&b, &x)| b as f64 * x as f64).sum::<f64>();
        for j in 0..self.n_hidden {
            let a = self.c[j] as f64 + self.row(j).iter().zip(v).map(|(&w, &x)| w as f64 * x as f64).sum::<f64>();
            f -= if a > 30.0 { a } else { a.exp().ln_1p() };
        }
        Ok(f)
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.b).chain(&self.c).all(|x| x.is_finite())
    }

    /// Adds the CD-k statistics of one example to `grad`: positive phase
    /// from `v0`, negative phase after `k` alternating Gibbs half-steps using
    /// visible probabilities.
    fn accumulate_cd(&self, v0: &[f32], k: usize, grad: &mut Rbm, s: &mut Scratch, rng: &mut impl Rng) {
        self.hidden_probs(v0, &mut s.hp0);
        s.hp.copy_from_slice(&s.hp0);
        s.v.copy_from_slice(v0);
        for _ in 0..k {
            bernoulli(&s.hp, &mut s.h, rng);
            self.visible_probs(&s.h, &mut s.v);
            self.hidden_probs(&s.v, &mut s.hp);
        }
        for j in 0..self.n_hidden {
            let row = &mut grad.w[j * self.n_visible..(j + 1) * self.n_visible];
            axpy(s.hp0[j], v0, row);
            axpy(-s.hp[j], &s.v, row);
            grad.c[j] += s.hp0[j] - s.hp[j];
        }
        for i in 0..self.n_visible {
            grad.b[i] += v0[i] - s.v[i];
        }
    }

    /// Mean CD-k update direction over `data`.
    pub fn cd_gradient(&self, data: &[Vec<f32>], k: usize, rng: &mut impl Rng) -> Result<Rbm> {
        let mut grad = Rbm::zeros(self.n_visible, self.n_hidden);
        let mut s = Scratch::new(self);
        for v in data {
            self.check_visible(v)?;
            self.accumulate_cd(v, k, &mut grad, &mut s, rng);
        }
        let scale = 1.0 / data.len().max(1) as f32;
        grad.w.iter_mut().chain(&mut grad.b).chain(&mut grad.c).for_each(|x| *x *= scale);
        Ok(grad)
    }

    /// One Gibbs sweep `v -> h -> v`, re-imposing `clamps` on the new `v`.
    pub fn gibbs_sweep(&self, v: &mut [f32], clamps: &[(usize, bool)], s: &mut Scratch, rng: &mut impl Rng) {
        self.hidden_probs(v, &mut s.hp);
        bernoulli(&s.hp, &mut s.h, rng);
        self.visible_probs(&s.h, &mut s.v);
        bernoulli(&s.v, v, rng);
        for &(i, bit) in clamps {
            v[i] = bit as u8 as f32;
        }
    }
}

/// Per-RBM working buffers.
#[derive(Debug, Clone)]
pub struct Scratch {
    hp0: Vec<f32>,
    hp: Vec<f32>,
    h: Vec<f32>,
    v: Vec<f32>,
}

impl Scratch {
    pub fn new(r: &Rbm) -> Self {
        Scratch {
            hp0: vec![0.0; r.n_hidden],
            hp: vec![0.0; r.n_hidden],
            h: vec![0.0; r.n_hidden],
            v: vec![0.0; r.n_visible],
        }
    }
}

pub fn rbm_free_energy(r: &Rbm, v: &BitVector) -> Result<f64> {
    r.free_energy(&to_f32(v.as_slice()))
}

fn to_f32(bits: &[u8]) -> Vec<f32> {
    bits.iter().map(|&b| b as f32).collect()
}

/// Trains `r` on `data` with mini-batch CD-k for `cfg.epochs` epochs.
pub fn rbm_train_cd(r: &Rbm, data: &[Vec<f32>], cfg: &TrainConfig, rng: &mut impl Rng) -> Result<Rbm> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    for v in data {
        r.check_visible(v)?;
    }
    let mut r = r.clone();
    let mut grad = Rbm::zeros(r.n_visible, r.n_hidden);
    let mut s = Scratch::new(&r);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch_no = 0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.w.fill(0.0);
            grad.b.fill(0.0);
            grad.c.fill(0.0);
            for &i in batch {
                r.accumulate_cd(&data[i], cfg.cd_steps, &mut grad, &mut s, rng);
            }
            let step = cfg.learning_rate / batch.len() as f32;
            axpy(step, &grad.w, &mut r.w);
            axpy(step, &grad.b, &mut r.b);
            axpy(step, &grad.c, &mut r.c);
            if !r.is_finite() {
                return Err(Error::NonFinite { batch: batch_no });
            }
            batch_no += 1;
        }
    }
    Ok(r)
}

/// One training example: bottom visible bits, rule-feature bits, label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainExample {
    pub visible: BitVector,
    pub ilp: BitVector,
    pub label: bool,
}

/// A stack of RBMs. `layer_sizes = [v, h1, ..., hL]`; layer `l < L-1` maps
/// `sizes[l] -> sizes[l+1]`, and the top RBM's visible layer is
/// `[sizes[L-1] code | ilp features | separator]` with `sizes[L]` hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnModel {
    pub layers: Vec<Rbm>,
    pub layer_sizes: Vec<usize>,
    pub ilp_feature_count: usize,
}

/// A generated bottom-layer sample with the probabilities it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: BitVector,
    pub probs: Vec<f32>,
}

impl DbnModel {
    pub fn new(layer_sizes: &[usize], ilp_feature_count: usize, init_scale: f32, rng: &mut impl Rng) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::config("layer_sizes", "need at least two positive sizes"));
        }
        let l = layer_sizes.len() - 1;
        let layers = (0..l)
            .map(|i| {
                let vis = layer_sizes[i] + if i == l - 1 { ilp_feature_count + 1 } else { 0 };
                Rbm::random(vis, layer_sizes[i + 1], init_scale, rng)
            })
            .collect();
        Ok(DbnModel {
            layers,
            layer_sizes: layer_sizes.to_vec(),
            ilp_feature_count,
        })
    }

    pub fn top(&self) -> &Rbm {
        self.layers.last().expect("at least one layer")
    }

    pub fn visible_width(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Width of the lower code inside the top visible layer.
    pub fn code_width(&self) -> usize {
        self.layer_sizes[self.layer_sizes.len() - 2]
    }

    pub fn feature_index(&self, k: usize) -> usize {
        self.code_width() + k
    }

    pub fn separator_index(&self) -> usize {
        self.code_width() + self.ilp_feature_count
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.layer_sizes.len() - 1;
        if self.layers.len() != l {
            return Err(Error::Dimension("layer count does not match layer sizes".into()));
        }
        for (i, r) in self.layers.iter().enumerate() {
            let vis = self.layer_sizes[i] + if i == l - 1 { self.ilp_feature_count + 1 } else { 0 };
            if r.n_visible != vis || r.n_hidden != self.layer_sizes[i + 1] {
                return Err(Error::Dimension(format!("layer {i} has shape {}x{}", r.n_visible, r.n_hidden)));
            }
            if r.w.len() != vis * r.n_hidden || r.b.len() != vis || r.c.len() != r.n_hidden {
                return Err(Error::Dimension(format!("layer {i} parameter lengths are inconsistent")));
            }
        }
        Ok(())
    }

    fn check_example(&self, e: &TrainExample) -> Result<()> {
        if e.visible.len() != self.visible_width() {
            return Err(Error::Dimension(format!(
                "example has {} visible bits, model expects {}",
                e.visible.len(),
                self.visible_width()
            )));
        }
        if e.ilp.len() != self.ilp_feature_count {
            return Err(Error::Dimension(format!(
                "example has {} feature bits, model expects {}",
                e.ilp.len(),
                self.ilp_feature_count
            )));
        }
        Ok(())
    }

    /// Samples each example's code at the top of the lower stack.
    fn codes(&self, data: &[TrainExample], rng: &mut impl Rng) -> Vec<Vec<f32>> {
        let lower = &self.layers[..self.layers.len() - 1];
        data.iter()
            .map(|e| {
                let mut x = to_f32(e.visible.as_slice());
                for r in lower {
                    let mut p = vec![0.0; r.n_hidden];
                    r.hidden_probs(&x, &mut p);
                    let mut h = vec![0.0; r.n_hidden];
                    bernoulli(&p, &mut h, rng);
                    x = h;
                }
                x
            })
            .collect()
    }

    fn top_input(&self, code: &[f32], e: &TrainExample) -> Vec<f32> {
        let mut v = code.to_vec();
        v.extend(e.ilp.as_slice().iter().map(|&b| b as f32));
        v.push(e.label as u8 as f32);
        v
    }

    /// Mean absolute error of the separator unit after one deterministic
    /// up-down pass through the top RBM with the separator hidden from it.
    pub fn label_reconstruction_error(&self, data: &[TrainExample], rng: &mut impl Rng) -> Result<f64> {
        for e in data {
            self.check_example(e)?;
        }
        if data.is_empty() {
            return Err(Error::Empty("evaluation data"));
        }
        let top = self.top();
        let sep = self.separator_index();
        let codes = self.codes(data, rng);
        let mut hp = vec![0.0; top.n_hidden];
        let mut vp = vec![0.0; top.n_visible];
        let mut err = 0.0;
        for (code, e) in codes.iter().zip(data) {
            let mut v = self.top_input(code, e);
            v[sep] = 0.5;
            top.hidden_probs(&v, &mut hp);
            top.visible_probs(&hp, &mut vp);
            err += (vp[sep] as f64 - e.label as u8 as f64).abs();
        }
        Ok(err / data.len() as f64)
    }

    /// Mean squared error of the bottom layer after a deterministic pass up
    /// the whole stack and back down.
    pub fn reconstruction_error(&self, data: &[TrainExample]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Empty("evaluation data"));
        }
        let l = self.layers.len();
        let mut total = 0.0;
        for e in data {
            self.check_example(e)?;
            let mut x = to_f32(e.visible.as_slice());
            for (i, r) in self.layers.iter().enumerate() {
                if i == l - 1 {
                    x = self.top_input(&x, e);
                }
                let mut h = vec![0.0; r.n_hidden];
                r.hidden_probs(&x, &mut h);
                x = h;
            }
            for (i, r) in self.layers.iter().enumerate().rev() {
                let mut v = vec![0.0; r.n_visible];
                r.visible_probs(&x, &mut v);
                if i == l - 1 {
                    v.truncate(self.code_width());
                }
                x = v;
            }
            total += x
                .iter()
                .zip(e.visible.as_slice())
                .map(|(&p, &b)| (p as f64 - b as f64).powi(2))
                .sum::<f64>()
                / x.len() as f64;
        }
        Ok(total / data.len() as f64)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Little-endian container: magic, version, size count, sizes, feature
    /// count, then per layer `W` (row-major, hidden-major), `b`, `c`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend(VERSION.to_le_bytes());
        out.extend((self.layer_sizes.len() as u32).to_le_bytes());
        for &s in &self.layer_sizes {
            out.extend((s as u32).to_le_bytes());
        }
        out.extend((self.ilp_feature_count as u32).to_le_bytes());
        for r in &self.layers {
            for x in r.w.iter().chain(&r.b).chain(&r.c) {
                out.extend(x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::Corrupt(format!("model checkpoint: {m}"));
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(|| corrupt("truncated"))?;
            pos += n;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let mut u32_at = || -> Result<u32> { Ok(u32::from_le_bytes(take(4)?.try_into().expect("4 bytes"))) };
        let version = u32_at()?;
        if version != VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let n = u32_at()? as usize;
        if !(2..=64).contains(&n) {
            return Err(corrupt("implausible layer count"));
        }
        let sizes = (0..n).map(|_| u32_at().map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let features = u32_at()? as usize;
        if sizes.contains(&0) || sizes.iter().any(|&s| s > 1 << 16) || features > 1 << 16 {
            return Err(corrupt("implausible sizes"));
        }
        let mut model = DbnModel {
            layers: Vec::new(),
            layer_sizes: sizes.clone(),
            ilp_feature_count: features,
        };
        for i in 0..n - 1 {
            let vis = sizes[i] + if i == n - 2 { features + 1 } else { 0 };
            let mut r = Rbm::zeros(vis, sizes[i + 1]);
            for x in r.w.iter_mut().chain(&mut r.b).chain(&mut r.c) {
                *x = f32::from_le_bytes(take(4)?.try_into().expect("4 bytes"));
            }
            if !r.is_finite() {
                return Err(corrupt("non-finite parameter"));
            }
            model.layers.push(r);
        }
        if pos != bytes.len() {
            return Err(corrupt("trailing bytes"));
        }
        model.validate()?;
        Ok(model)
    }
}

/// Greedy layer-wise training: each lower RBM on the sampled hidden states
/// of the one below, then the top RBM on `[code | features | label]`.
/// Training starts from `m`'s current weights.
pub fn dbn_train(m: &DbnModel, data: &[TrainExample], cfg: &TrainConfig, rng: &mut impl Rng) -> Result<DbnModel> {
    cfg.validate()?;
    m.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    for e in data {
        m.check_example(e)?;
    }
    let mut out = m.clone();
    let l = out.layers.len();
    let mut x: Vec<Vec<f32>> = data.iter().map(|e| to_f32(e.visible.as_slice())).collect();
    for i in 0..l - 1 {
        out.layers[i] = rbm_train_cd(&out.layers[i], &x, cfg, rng)?;
        let r = &out.layers[i];
        let mut p = vec![0.0; r.n_hidden];
        x = x
            .iter()
            .map(|v| {
                r.hidden_probs(v, &mut p);
                let mut h = vec![0.0; r.n_hidden];
                bernoulli(&p, &mut h, rng);
                h
            })
            .collect();
    }
    let top: Vec<Vec<f32>> = x.iter().zip(data).map(|(c, e)| out.top_input(c, e)).collect();
    out.layers[l - 1] = rbm_train_cd(&out.layers[l - 1], &top, cfg, rng)?;
    Ok(out)
}

fn check_clamps(m: &DbnModel, clamps: &[(usize, bool)]) -> Result<()> {
    let n = m.top().n_visible;
    if let Some(&(i, _)) = clamps.iter().find(|(i, _)| *i >= n) {
        return Err(Error::Dimension(format!("clamp index {i} outside the {n}-unit top layer")));
    }
    Ok(())
}

/// Like [`dbn_sample`], calling `observe` with the top visible state after
/// initialisation and after every Gibbs sweep.
pub fn dbn_sample_observed(
    m: &DbnModel,
    clamps: &[(usize, bool)],
    n: usize,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
    observe: &mut dyn FnMut(&[f32]),
) -> Result<Vec<Sample>> {
    cfg.validate()?;
    check_clamps(m, clamps)?;
    let top = m.top();
    let mut s = Scratch::new(top);
    let mut v = vec![0f32; top.n_visible];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        v.iter_mut().for_each(|x| *x = rng.gen_bool(0.5) as u8 as f32);
        for &(i, bit) in clamps {
            v[i] = bit as u8 as f32;
        }
        observe(&v);
        for _ in 0..cfg.gibbs_steps_sampling {
            top.gibbs_sweep(&mut v, clamps, &mut s, rng);
            observe(&v);
        }
        let mut x = v[..m.code_width()].to_vec();
        // single-layer model: the code is the bottom layer
        let mut probs = s.v[..m.code_width()].to_vec();
        for r in m.layers[..m.layers.len() - 1].iter().rev() {
            probs = vec![0.0; r.n_visible];
            r.visible_probs(&x, &mut probs);
            x = vec![0.0; r.n_visible];
            bernoulli(&probs, &mut x, rng);
        }
        out.push(Sample {
            bits: BitVector::from_bits(x.iter().map(|&b| b as u8)),
            probs,
        });
    }
    Ok(out)
}

/// Draws `n` bottom-layer samples: random top visible state except the
/// clamped units, `gibbs_steps_sampling` sweeps re-imposing clamps, then
/// one sampled pass down the lower layers.
pub fn dbn_sample(
    m: &DbnModel,
    clamps: &[(usize, bool)],
    n: usize,
    cfg: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Sample>> {
    dbn_sample_observed(m, clamps, n, cfg, rng, &mut |_| {})
}

/// Copies `prev` and widens its feature block to `feature_count` units.
/// Existing units keep their weights; new feature units start from
/// `N(0, init_scale)` weights and zero bias.
pub fn dbn_warm_start(prev: &DbnModel, feature_count: usize, init_scale: f32, rng: &mut impl Rng) -> Result<DbnModel> {
    prev.validate()?;
    if feature_count < prev.ilp_feature_count {
        return Err(Error::Dimension(format!(
            "cannot shrink the feature block from {} to {feature_count}",
            prev.ilp_feature_count
        )));
    }
    let mut m = prev.clone();
    let extra = feature_count - prev.ilp_feature_count;
    if extra == 0 {
        return Ok(m);
    }
    let old = prev.top();
    let insert_at = prev.separator_index();
    let mut top = Rbm::zeros(old.n_visible + extra, old.n_hidden);
    let fresh = Rbm::random(extra, old.n_hidden, init_scale, rng);
    for j in 0..old.n_hidden {
        let row = &mut top.w[j * top.n_visible..(j + 1) * top.n_visible];
        row[..insert_at].copy_from_slice(&old.row(j)[..insert_at]);
        row[insert_at..insert_at + extra].copy_from_slice(fresh.row(j));
        row[insert_at + extra..].copy_from_slice(&old.row(j)[insert_at..]);
    }
    top.b[..insert_at].copy_from_slice(&old.b[..insert_at]);
    top.b[insert_at + extra..].copy_from_slice(&old.b[insert_at..]);
    top.c.copy_from_slice(&old.c);
    *m.layers.last_mut().expect("at least one layer") = top;
    m.ilp_feature_count = feature_count;
    m.validate()?;
    Ok(m)
}
