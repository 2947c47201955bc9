use crate::embed::{EncodedSentence, WordRow};
use crate::tensor::{Graph, Tensor, Var};
use crate::train::{Dropout, DropoutMode};

use super::{AttentionParams, LstmCellParams, ModelConfig, ModelError, ModelParams, ModelVariant};

type Result<T> = std::result::Result<T, ModelError>;

/// An LSTM cell's tensors as graph nodes.
#[derive(Debug, Clone, Copy)]
pub struct CellVars {
    pub w: Var,
    pub u: Var,
    pub b: Var,
    pub hidden: usize,
}

impl CellVars {
    fn bind<'a>(g: &mut Graph<'a>, p: &'a LstmCellParams, trainable: Option<&mut Vec<Var>>) -> Self {
        let (w, u, b) = match trainable {
            Some(list) => {
                let vars = (g.param_ref(&p.w), g.param_ref(&p.u), g.param_ref(&p.b));
                list.extend([vars.0, vars.1, vars.2]);
                vars
            }
            None => (g.constant_ref(&p.w), g.constant_ref(&p.u), g.constant_ref(&p.b)),
        };
        CellVars {
            w,
            u,
            b,
            hidden: p.hidden(),
        }
    }
}

/// A model's tensors bound into one graph.
#[derive(Debug, Clone)]
pub struct Bound {
    word: Var,
    unk: Var,
    pos: Var,
    shape: Var,
    encoder: (CellVars, CellVars),
    attention: Option<(Var, Var)>,
    upper: Option<(CellVars, CellVars)>,
    out_w: Var,
    out_b: Var,
    /// Parameter leaves, in [`ModelParams::trainable_mut`] order. Empty when
    /// bound for inference.
    pub trainable: Vec<Var>,
}

impl Bound {
    fn new<'a>(g: &mut Graph<'a>, p: &'a ModelParams, train: bool) -> Self {
        let mut trainable = Vec::new();
        let flags = p.embeddings.trainable;
        let e = &p.embeddings;
        let leaf = |g: &mut Graph<'a>, t: &'a Tensor, on: bool, list: &mut Vec<Var>| {
            if train && on {
                let v = g.param_ref(t);
                list.push(v);
                v
            } else {
                g.constant_ref(t)
            }
        };
        let word = leaf(g, &e.word, flags.word, &mut trainable);
        let unk = leaf(g, &e.unk, flags.unk, &mut trainable);
        let pos = leaf(g, &e.pos, flags.pos, &mut trainable);
        let shape = leaf(g, &e.shape, flags.shape, &mut trainable);
        let cells = |g: &mut Graph<'a>, b: &'a super::BiLstmParams, list: &mut Vec<Var>| {
            let list = train.then_some(list);
            match list {
                Some(l) => (CellVars::bind(g, &b.fwd, Some(l)), CellVars::bind(g, &b.bwd, Some(l))),
                None => (CellVars::bind(g, &b.fwd, None), CellVars::bind(g, &b.bwd, None)),
            }
        };
        let encoder = cells(g, &p.encoder, &mut trainable);
        let attention = p.attention.as_ref().map(|a| {
            (
                leaf(g, &a.v, true, &mut trainable),
                leaf(g, &a.b, true, &mut trainable),
            )
        });
        let upper = p.upper.as_ref().map(|u| cells(g, u, &mut trainable));
        let out_w = leaf(g, &p.output.w, true, &mut trainable);
        let out_b = leaf(g, &p.output.b, true, &mut trainable);
        Bound {
            word,
            unk,
            pos,
            shape,
            encoder,
            attention,
            upper,
            out_w,
            out_b,
            trainable,
        }
    }
}

/// Output of one sentence's forward pass.
#[derive(Debug, Clone)]
pub struct SentenceVars {
    /// `[1 × k]`
    pub probs: Var,
    /// `[m × 1]` attention weights over `attended`.
    pub scores: Option<Var>,
    /// Sentence-local positions the attention weights refer to.
    pub attended: Vec<usize>,
}

/// Forward-pass builder over one graph. Holding a [`Dropout`] stream means
/// training mode.
pub struct Forward<'a, 'd> {
    pub g: Graph<'a>,
    pub bound: Bound,
    config: ModelConfig,
    dropout: Option<&'d mut Dropout>,
}

impl<'a, 'd> Forward<'a, 'd> {
    /// Binds `params` for inference: every tensor is a constant.
    pub fn inference(params: &'a ModelParams) -> Self {
        let mut g = Graph::new();
        let bound = Bound::new(&mut g, params, false);
        Forward {
            g,
            bound,
            config: params.config,
            dropout: None,
        }
    }

    /// Binds `params` for training: trainable tensors become parameter
    /// leaves listed in `bound.trainable`.
    pub fn training(params: &'a ModelParams, dropout: Option<&'d mut Dropout>) -> Self {
        let mut g = Graph::new();
        let bound = Bound::new(&mut g, params, true);
        Forward {
            g,
            bound,
            config: params.config,
            dropout,
        }
    }

    fn drop(&mut self, x: Var, mode: DropoutMode) -> Result<Var> {
        match self.dropout.as_deref_mut() {
            Some(d) => Ok(d.apply(&mut self.g, x, mode)?),
            None => Ok(x),
        }
    }

    /// `[n × (dw + dp + ds)]` token matrix.
    pub fn embed(&mut self, enc: &EncodedSentence) -> Result<Var> {
        if enc.is_empty() {
            return Err(ModelError::EmptySentence);
        }
        let words: Vec<(usize, usize)> = enc
            .words
            .iter()
            .map(|w| match *w {
                WordRow::Vocab(i) => (0, i),
                WordRow::Unk(tag) => (1, tag.index()),
            })
            .collect();
        let pos: Vec<(usize, usize)> = enc.pos.iter().map(|&p| (0, p)).collect();
        let shapes: Vec<(usize, usize)> = enc.shapes.iter().map(|&s| (0, s)).collect();
        let b = &self.bound;
        let (word, unk, pt, st) = (b.word, b.unk, b.pos, b.shape);
        let wv = self.g.gather_rows(&[word, unk], &words)?;
        let pv = self.g.gather_rows(&[pt], &pos)?;
        let sv = self.g.gather_rows(&[st], &shapes)?;
        let x = self.g.concat(&[wv, pv, sv], 1)?;
        self.drop(x, DropoutMode::PerTimestep)
    }

    fn logits_to_probs(&mut self, h: Var) -> Result<Vec<Var>> {
        let z = self.g.matmul(h, self.bound.out_w)?;
        let z = self.g.add(z, self.bound.out_b)?;
        let rows = self.g.value(z).rows();
        (0..rows)
            .map(|r| {
                let row = if rows == 1 { z } else { self.g.slice(z, 0, r, 1)? };
                Ok(self.g.softmax(row)?)
            })
            .collect()
    }

    /// Pooled `[1 × 2u]` representation of one sentence from its own tokens.
    fn pooled(&mut self, enc: &EncodedSentence) -> Result<(Var, Option<Var>, Vec<usize>)> {
        let x = self.embed(enc)?;
        let states = encode_graph(&mut self.g, x, &enc.mask, self.bound.encoder)?;
        let valid: Vec<usize> = (0..enc.len()).filter(|&t| enc.mask[t]).collect();
        if valid.is_empty() {
            return Err(ModelError::EmptySentence);
        }
        if self.config.variant == ModelVariant::Bilstm {
            let h = last_pool_graph(&mut self.g, states, &enc.mask)?;
            Ok((h, None, Vec::new()))
        } else {
            let (v, b) = self.bound.attention.ok_or(ModelError::NoAttention)?;
            let (h, a) = attention_graph(&mut self.g, states, &valid, v, b)?;
            Ok((h, Some(a), valid))
        }
    }

    /// `bilstm` and `bilstm-att`: the sentence on its own.
    pub fn flat(&mut self, enc: &EncodedSentence) -> Result<SentenceVars> {
        let (h, scores, attended) = self.pooled(enc)?;
        let h = self.drop(h, DropoutMode::PerCall)?;
        let probs = self.logits_to_probs(h)?.remove(0);
        Ok(SentenceVars {
            probs,
            scores,
            attended,
        })
    }

    /// `x-bilstm-att`: sentence `index` of `section` with up to `context`
    /// unmasked tokens of its neighbours on each side.
    pub fn with_context(&mut self, section: &[EncodedSentence], index: usize) -> Result<SentenceVars> {
        let (window, offset) = context_window(section, index, self.config.context)?;
        let current = &section[index];
        let x = self.embed(&window)?;
        let states = encode_graph(&mut self.g, x, &window.mask, self.bound.encoder)?;
        let attended: Vec<usize> = (0..current.len()).filter(|&t| current.mask[t]).collect();
        if attended.is_empty() {
            return Err(ModelError::EmptySentence);
        }
        let rows: Vec<usize> = attended.iter().map(|t| offset + t).collect();
        let (v, b) = self.bound.attention.ok_or(ModelError::NoAttention)?;
        let (h, a) = attention_graph(&mut self.g, states, &rows, v, b)?;
        let h = self.drop(h, DropoutMode::PerCall)?;
        let probs = self.logits_to_probs(h)?.remove(0);
        Ok(SentenceVars {
            probs,
            scores: Some(a),
            attended,
        })
    }

    /// `h-bilstm-att`: one result per sentence whose `sentence_mask` entry
    /// is true, in order. Masked sentences are skipped by the upper BiLSTM.
    pub fn hierarchical(&mut self, section: &[EncodedSentence], sentence_mask: &[bool]) -> Result<Vec<SentenceVars>> {
        let upper = self
            .bound
            .upper
            .ok_or_else(|| ModelError::Config("model has no upper encoder".into()))?;
        let mut embs = Vec::new();
        let mut parts = Vec::new();
        for (enc, _) in section.iter().zip(sentence_mask).filter(|(_, m)| **m) {
            let (h, scores, attended) = self.pooled(enc)?;
            embs.push(self.drop(h, DropoutMode::PerCall)?);
            parts.push((scores, attended));
        }
        if embs.is_empty() {
            return Err(ModelError::EmptySentence);
        }
        let s = self.g.concat(&embs, 0)?;
        let mask = vec![true; embs.len()];
        let states = encode_graph(&mut self.g, s, &mask, upper)?;
        let probs = self.logits_to_probs(states)?;
        Ok(probs
            .into_iter()
            .zip(parts)
            .map(|(probs, (scores, attended))| SentenceVars {
                probs,
                scores,
                attended,
            })
            .collect())
    }

    /// Per-sentence outputs for any variant; `None` for masked sentences.
    pub fn section(&mut self, section: &[EncodedSentence], sentence_mask: &[bool]) -> Result<Vec<Option<SentenceVars>>> {
        match self.config.variant {
            ModelVariant::HBilstmAtt => {
                let mut it = self.hierarchical(section, sentence_mask)?.into_iter();
                Ok(sentence_mask.iter().map(|&m| if m { it.next() } else { None }).collect())
            }
            ModelVariant::XBilstmAtt => (0..section.len())
                .map(|i| sentence_mask[i].then(|| self.with_context(section, i)).transpose())
                .collect(),
            _ => section
                .iter()
                .zip(sentence_mask)
                .map(|(s, &m)| m.then(|| self.flat(s)).transpose())
                .collect(),
        }
    }
}

/// Tokens of the sentence at `index` with clipped section context on both
/// sides, and the offset of the sentence inside the window.
fn context_window(section: &[EncodedSentence], index: usize, c: usize) -> Result<(EncodedSentence, usize)> {
    let current = section
        .get(index)
        .ok_or_else(|| ModelError::Config(format!("sentence index {index} out of range")))?;
    let valid = |s: &EncodedSentence| -> Vec<usize> { (0..s.len()).filter(|&t| s.mask[t]).collect() };
    let mut left: Vec<(usize, usize)> = Vec::new();
    for (si, s) in section[..index].iter().enumerate() {
        left.extend(valid(s).into_iter().map(|t| (si, t)));
    }
    let left = &left[left.len().saturating_sub(c)..];
    let mut right: Vec<(usize, usize)> = Vec::new();
    for (si, s) in section.iter().enumerate().skip(index + 1) {
        if right.len() >= c {
            break;
        }
        right.extend(valid(s).into_iter().map(|t| (si, t)));
    }
    right.truncate(c);
    let mut w = EncodedSentence {
        words: Vec::new(),
        pos: Vec::new(),
        shapes: Vec::new(),
        mask: Vec::new(),
        label: current.label,
    };
    let mut push = |s: &EncodedSentence, t: usize, m: bool| {
        w.words.push(s.words[t]);
        w.pos.push(s.pos[t]);
        w.shapes.push(s.shapes[t]);
        w.mask.push(m);
    };
    for &(si, t) in left {
        push(&section[si], t, true);
    }
    for t in 0..current.len() {
        push(current, t, current.mask[t]);
    }
    for &(si, t) in &right {
        push(&section[si], t, true);
    }
    Ok((w, left.len()))
}

/// One LSTM step from the precomputed input projection `xw = x·W + b`.
/// `None` state stands for zeros.
fn step(g: &mut Graph<'_>, xw: Var, h: Option<Var>, c: Option<Var>, cell: CellVars) -> Result<(Var, Var)> {
    let u = cell.hidden;
    let z = match h {
        Some(h) => {
            let hu = g.matmul(h, cell.u)?;
            g.add(xw, hu)?
        }
        None => xw,
    };
    let s = g.sigmoid(z)?;
    let gz = g.slice(z, 1, 2 * u, u)?;
    let gc = g.tanh(gz)?;
    let i = g.slice(s, 1, 0, u)?;
    let o = g.slice(s, 1, 3 * u, u)?;
    let ig = g.mul(i, gc)?;
    let c_new = match c {
        Some(c) => {
            let f = g.slice(s, 1, u, u)?;
            let fc = g.mul(f, c)?;
            g.add(fc, ig)?
        }
        None => ig,
    };
    let tc = g.tanh(c_new)?;
    let h_new = g.mul(o, tc)?;
    Ok((h_new, c_new))
}

/// Runs one direction; masked positions carry the previous state.
fn run_direction(g: &mut Graph<'_>, x: Var, mask: &[bool], cell: CellVars, reverse: bool) -> Result<Var> {
    let n = mask.len();
    let xw = g.matmul(x, cell.w)?;
    let xw = g.add(xw, cell.b)?;
    let mut rows: Vec<Option<Var>> = vec![None; n];
    let (mut h, mut c) = (None, None);
    let mut zero = None;
    let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
    for t in order {
        if mask[t] {
            let x_t = if n == 1 { xw } else { g.slice(xw, 0, t, 1)? };
            let (hn, cn) = step(g, x_t, h, c, cell)?;
            h = Some(hn);
            c = Some(cn);
        }
        rows[t] = Some(match h {
            Some(h) => h,
            None => *zero.get_or_insert_with(|| g.constant(Tensor::zeros(&[1, cell.hidden]))),
        });
    }
    let rows: Vec<Var> = rows.into_iter().map(|r| r.expect("every row visited")).collect();
    if rows.len() == 1 {
        Ok(rows[0])
    } else {
        Ok(g.concat(&rows, 0)?)
    }
}

fn encode_graph(g: &mut Graph<'_>, x: Var, mask: &[bool], cells: (CellVars, CellVars)) -> Result<Var> {
    if g.value(x).rows() != mask.len() {
        return Err(ModelError::Config(format!(
            "{} input rows but {} mask entries",
            g.value(x).rows(),
            mask.len()
        )));
    }
    let f = run_direction(g, x, mask, cells.0, false)?;
    let b = run_direction(g, x, mask, cells.1, true)?;
    Ok(g.concat(&[f, b], 1)?)
}

fn last_pool_graph(g: &mut Graph<'_>, states: Var, mask: &[bool]) -> Result<Var> {
    let first = mask.iter().position(|m| *m).ok_or(ModelError::EmptySentence)?;
    let last = mask.iter().rposition(|m| *m).expect("some position is unmasked");
    let u = g.value(states).cols() / 2;
    let fr = g.slice(states, 0, last, 1)?;
    let f = g.slice(fr, 1, 0, u)?;
    let br = g.slice(states, 0, first, 1)?;
    let b = g.slice(br, 1, u, u)?;
    Ok(g.concat(&[f, b], 1)?)
}

/// Attention over the listed state rows: `(h [1×2u], weights [m×1])`.
fn attention_graph(g: &mut Graph<'_>, states: Var, rows: &[usize], v: Var, b: Var) -> Result<(Var, Var)> {
    if rows.is_empty() {
        return Err(ModelError::EmptySentence);
    }
    let n = g.value(states).rows();
    let hs = if rows.len() == n && rows.iter().enumerate().all(|(i, r)| i == *r) {
        states
    } else {
        let picks: Vec<(usize, usize)> = rows.iter().map(|&r| (0, r)).collect();
        g.gather_rows(&[states], &picks)?
    };
    let e = g.matmul(hs, v)?;
    let e = g.add(e, b)?;
    let e = g.tanh(e)?;
    let a = g.softmax(e)?;
    let at = g.transpose(a)?;
    let h = g.matmul(at, hs)?;
    Ok((h, a))
}

/// Class probabilities and, for attention variants, per-token weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Vec<f64>,
    /// One weight per token of the sentence; zero on masked tokens.
    pub scores: Option<Vec<f64>>,
}

impl Prediction {
    /// Arg-max class, lowest index on ties.
    pub fn label(&self) -> usize {
        argmax(&self.probs)
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn read_prediction(g: &Graph<'_>, s: &SentenceVars, len: usize) -> Prediction {
    let scores = s.scores.map(|a| {
        let mut full = vec![0.0; len];
        for (&t, &w) in s.attended.iter().zip(g.value(a).data()) {
            full[t] = w;
        }
        full
    });
    Prediction {
        probs: g.value(s.probs).data().to_vec(),
        scores,
    }
}

/// Predictions for every sentence of an encoded section, dropout off.
pub fn predict_section(params: &ModelParams, section: &[EncodedSentence]) -> Result<Vec<Prediction>> {
    if params.config.variant.is_hierarchical() {
        let mut fw = Forward::inference(params);
        let outs = fw.hierarchical(section, &vec![true; section.len()])?;
        return Ok(outs
            .iter()
            .zip(section)
            .map(|(o, s)| read_prediction(&fw.g, o, s.len()))
            .collect());
    }
    (0..section.len())
        .map(|i| {
            let mut fw = Forward::inference(params);
            let out = if params.config.variant == ModelVariant::XBilstmAtt {
                fw.with_context(section, i)?
            } else {
                fw.flat(&section[i])?
            };
            Ok(read_prediction(&fw.g, &out, section[i].len()))
        })
        .collect()
}

/// Class probabilities for one sentence under `bilstm` or `bilstm-att`.
pub fn classify_flat(params: &ModelParams, sentence: &EncodedSentence) -> Result<Prediction> {
    if !matches!(params.config.variant, ModelVariant::Bilstm | ModelVariant::BilstmAtt) {
        return Err(ModelError::Config(format!("{} is not a flat variant", params.config.variant)));
    }
    let mut fw = Forward::inference(params);
    let out = fw.flat(sentence)?;
    Ok(read_prediction(&fw.g, &out, sentence.len()))
}

/// Context-window prediction for sentence `index`; any attention variant's
/// parameters can be used, the window size comes from `params.config`.
pub fn classify_with_context(params: &ModelParams, section: &[EncodedSentence], index: usize) -> Result<Prediction> {
    let mut fw = Forward::inference(params);
    let out = fw.with_context(section, index)?;
    Ok(read_prediction(&fw.g, &out, section[index].len()))
}

/// `[m × k]` probabilities from the hierarchical model, one row per sentence
/// whose mask entry is true (all sentences when `sentence_mask` is `None`).
pub fn classify_section_hier(
    params: &ModelParams,
    section: &[EncodedSentence],
    sentence_mask: Option<&[bool]>,
) -> Result<Vec<Prediction>> {
    let all = vec![true; section.len()];
    let mask = sentence_mask.unwrap_or(&all);
    let mut fw = Forward::inference(params);
    let outs = fw.hierarchical(section, mask)?;
    let lens = section.iter().zip(mask).filter(|(_, m)| **m).map(|(s, _)| s.len());
    Ok(outs.iter().zip(lens).map(|(o, n)| read_prediction(&fw.g, o, n)).collect())
}

fn as_row(x: &Tensor) -> Result<Tensor> {
    Ok(x.clone().reshaped(vec![1, x.len()])?)
}

/// One LSTM step on plain tensors: `(h, c)` as `[1 × u]` rows.
pub fn lstm_cell_step(x: &Tensor, h_prev: &Tensor, c_prev: &Tensor, p: &LstmCellParams) -> Result<(Tensor, Tensor)> {
    p.validate()?;
    let mut g = Graph::new();
    let cell = CellVars::bind(&mut g, p, None);
    let x = g.constant(as_row(x)?);
    let h = g.constant(as_row(h_prev)?);
    let c = g.constant(as_row(c_prev)?);
    if g.value(h).cols() != cell.hidden || g.value(c).cols() != cell.hidden {
        return Err(ModelError::Config(format!("state size differs from hidden size {}", cell.hidden)));
    }
    let xw = g.matmul(x, cell.w)?;
    let xw = g.add(xw, cell.b)?;
    let (h, c) = step(&mut g, xw, Some(h), Some(c), cell)?;
    Ok((g.value(h).clone(), g.value(c).clone()))
}

/// `[n × 2u]` states, row `t` = `[h→_t ; h←_t]`, zero initial state.
pub fn bilstm_encode(
    embs: &Tensor,
    fwd: &LstmCellParams,
    bwd: &LstmCellParams,
    mask: Option<&[bool]>,
) -> Result<Tensor> {
    fwd.validate()?;
    bwd.validate()?;
    let all = vec![true; embs.rows()];
    let mask = mask.unwrap_or(&all);
    let mut g = Graph::new();
    let cells = (CellVars::bind(&mut g, fwd, None), CellVars::bind(&mut g, bwd, None));
    let x = g.constant_ref(embs);
    let s = encode_graph(&mut g, x, mask, cells)?;
    Ok(g.value(s).clone())
}

/// Forward half of the last unmasked row joined to the backward half of the
/// first unmasked row.
pub fn last_state_pool(states: &Tensor, mask: Option<&[bool]>) -> Result<Tensor> {
    let all = vec![true; states.rows()];
    let mask = mask.unwrap_or(&all);
    let mut g = Graph::new();
    let s = g.constant_ref(states);
    let h = last_pool_graph(&mut g, s, mask)?;
    Ok(g.value(h).clone())
}

/// `(h, scores)` with one score per row, zero on masked rows.
pub fn attention_pool(states: &Tensor, p: &AttentionParams, mask: Option<&[bool]>) -> Result<(Tensor, Vec<f64>)> {
    let n = states.rows();
    let all = vec![true; n];
    let mask = mask.unwrap_or(&all);
    let rows: Vec<usize> = (0..n).filter(|&t| mask[t]).collect();
    let mut g = Graph::new();
    let s = g.constant_ref(states);
    let v = g.constant_ref(&p.v);
    let b = g.constant_ref(&p.b);
    let (h, a) = attention_graph(&mut g, s, &rows, v, b)?;
    let mut scores = vec![0.0; n];
    for (&t, &w) in rows.iter().zip(g.value(a).data()) {
        scores[t] = w;
    }
    Ok((g.value(h).clone(), scores))
}
