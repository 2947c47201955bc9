//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use deontic::embed::{EmbeddingDims, EmbeddingSetup, EncodedSentence};
use deontic::model::{Forward, LstmCellParams, ModelConfig, ModelParams, ModelVariant};
use deontic::tensor::{finite_diff_grad, Graph, Tensor, Var, DEFAULT_STEP};
use deontic::text::{ClassLabel, Sentence};
use deontic::train::Dropout;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rand_tensor(rng: &mut impl Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn norm(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖a − n‖ / max(‖a‖, ‖n‖)`, zero when both are zero.
pub fn rel_err(analytic: &Tensor, numeric: &Tensor) -> f64 {
    assert_eq!(analytic.shape(), numeric.shape());
    let diff: Vec<f64> = analytic.data().iter().zip(numeric.data()).map(|(a, n)| a - n).collect();
    let scale = norm(analytic.data()).max(norm(numeric.data()));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Reduces any node to a scalar with fixed pseudo-random weights, so that
/// ops whose outputs sum to a constant (softmax) still get a real check.
fn weighted_loss(g: &mut Graph<'_>, out: Var) -> Var {
    if g.value(out).len() == 1 {
        return out;
    }
    let shape = g.shape(out).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(shape.iter().sum::<usize>() as u64 + 99);
    let w = g.constant(rand_tensor(&mut rng, &shape, -1.0, 1.0));
    let m = g.mul(out, w).unwrap();
    g.sum(m).unwrap()
}

/// Largest relative error over all inputs of `build` between backprop and
/// central differences.
pub fn op_gradient_error(inputs: &[Tensor], build: impl Fn(&mut Graph<'_>, &[Var]) -> Var) -> f64 {
    let eval = |xs: &[Tensor]| -> f64 {
        let mut g = Graph::new();
        let vars: Vec<Var> = xs.iter().map(|x| g.constant(x.clone())).collect();
        let out = build(&mut g, &vars);
        let loss = weighted_loss(&mut g, out);
        g.value(loss).item()
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|x| g.param(x.clone())).collect();
    let out = build(&mut g, &vars);
    let loss = weighted_loss(&mut g, out);
    let grads = g.backward(loss).unwrap();
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.get(*v).unwrap();
        let numeric = finite_diff_grad(
            |x| {
                let mut xs = inputs.to_vec();
                xs[i] = x.clone();
                eval(&xs)
            },
            &inputs[i],
            DEFAULT_STEP,
        );
        worst = worst.max(rel_err(analytic, &numeric));
    }
    worst
}

/// One gradient check per tensor op, as `(name, max relative error)`.
pub fn all_op_gradient_errors() -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut m = |r: usize, c: usize| rand_tensor(&mut rng, &[r, c], -1.0, 1.0);
    let a = m(2, 3);
    let b = m(3, 4);
    let c = m(2, 3);
    let row = m(1, 3);
    let col = m(4, 1);
    let s = Tensor::scalar(0.7);
    let pos = a.map(|x| x.abs() + 0.5);
    let logits = m(1, 6);
    let tall = m(5, 3);
    let other = m(2, 3);
    type Build = Box<dyn Fn(&mut Graph<'_>, &[Var]) -> Var>;
    let cases: Vec<(&'static str, Vec<Tensor>, Build)> = vec![
        ("matmul", vec![a.clone(), b.clone()], Box::new(|g, v| g.matmul(v[0], v[1]).unwrap())),
        ("matmul_column", vec![b.clone(), col.clone()], Box::new(|g, v| g.matmul(v[0], v[1]).unwrap())),
        ("tanh", vec![a.clone()], Box::new(|g, v| g.tanh(v[0]).unwrap())),
        ("sigmoid", vec![a.clone()], Box::new(|g, v| g.sigmoid(v[0]).unwrap())),
        ("neg", vec![a.clone()], Box::new(|g, v| g.unary(deontic::tensor::UnaryOp::Neg, v[0]).unwrap())),
        ("exp", vec![a.clone()], Box::new(|g, v| g.unary(deontic::tensor::UnaryOp::Exp, v[0]).unwrap())),
        ("log", vec![pos], Box::new(|g, v| g.unary(deontic::tensor::UnaryOp::Log, v[0]).unwrap())),
        ("add", vec![a.clone(), c.clone()], Box::new(|g, v| g.add(v[0], v[1]).unwrap())),
        ("sub", vec![a.clone(), c.clone()], Box::new(|g, v| g.sub(v[0], v[1]).unwrap())),
        ("mul", vec![a.clone(), c.clone()], Box::new(|g, v| g.mul(v[0], v[1]).unwrap())),
        ("add_row_broadcast", vec![a.clone(), row.clone()], Box::new(|g, v| g.add(v[0], v[1]).unwrap())),
        ("mul_row_broadcast", vec![row.clone(), a.clone()], Box::new(|g, v| g.mul(v[0], v[1]).unwrap())),
        ("sub_scalar_broadcast", vec![a.clone(), s.clone()], Box::new(|g, v| g.sub(v[0], v[1]).unwrap())),
        ("mul_scalar_broadcast", vec![s.clone(), a.clone()], Box::new(|g, v| g.mul(v[0], v[1]).unwrap())),
        ("softmax_row", vec![logits.clone()], Box::new(|g, v| g.softmax(v[0]).unwrap())),
        ("softmax_column", vec![col.clone()], Box::new(|g, v| g.softmax(v[0]).unwrap())),
        ("concat_rows", vec![a.clone(), tall.clone()], Box::new(|g, v| g.concat(&[v[0], v[1]], 0).unwrap())),
        ("concat_cols", vec![a.clone(), other.clone()], Box::new(|g, v| g.concat(&[v[0], v[1], v[0]], 1).unwrap())),
        ("slice_rows", vec![tall.clone()], Box::new(|g, v| g.slice(v[0], 0, 1, 3).unwrap())),
        ("slice_cols", vec![tall.clone()], Box::new(|g, v| g.slice(v[0], 1, 1, 2).unwrap())),
        (
            "cross_entropy",
            vec![logits.clone()],
            Box::new(|g, v| {
                let p = g.softmax(v[0]).unwrap();
                g.cross_entropy(p, 2).unwrap()
            }),
        ),
        ("sum", vec![a.clone()], Box::new(|g, v| g.sum(v[0]).unwrap())),
        (
            "sum_scalars",
            vec![s.clone(), Tensor::scalar(-0.4)],
            Box::new(|g, v| {
                let sq = g.mul(v[0], v[0]).unwrap();
                g.sum_scalars(&[sq, v[1], v[0]]).unwrap()
            }),
        ),
        ("scale", vec![a.clone()], Box::new(|g, v| g.scale(v[0], -2.5).unwrap())),
        ("reshape", vec![a.clone()], Box::new(|g, v| g.reshape(v[0], &[3, 2]).unwrap())),
        ("transpose", vec![tall.clone()], Box::new(|g, v| g.transpose(v[0]).unwrap())),
        (
            "gather_rows",
            vec![tall.clone(), a.clone()],
            Box::new(|g, v| g.gather_rows(&[v[0], v[1]], &[(0, 4), (1, 0), (0, 4), (1, 1), (0, 0)]).unwrap()),
        ),
        (
            "composite",
            vec![a.clone(), b.clone(), row.clone()],
            Box::new(|g, v| {
                let h = g.matmul(v[0], v[1]).unwrap();
                let t = g.transpose(h).unwrap();
                let top = g.slice(t, 0, 0, 3).unwrap();
                let r = g.matmul(v[2], top).unwrap();
                let e = g.tanh(r).unwrap();
                g.softmax(e).unwrap()
            }),
        ),
    ];
    cases
        .into_iter()
        .map(|(name, inputs, build)| (name, op_gradient_error(&inputs, build)))
        .collect()
}

pub const TINY_HIDDEN: usize = 3;
pub const TINY_EMBED: usize = 4;
pub const TINY_VOCAB: usize = 10;

/// A three-sentence section of at most five tokens per sentence; "due" is
/// out of vocabulary.
pub fn tiny_section() -> Vec<Sentence> {
    vec![
        Sentence::from_text("Supplier shall pay fees .", Some(ClassLabel::Obligation)),
        Sentence::from_text("Supplier shall not pay .", Some(ClassLabel::Prohibition)),
        Sentence::from_text("Fees are due .", Some(ClassLabel::None)),
    ]
}

/// Tiny model with every table trainable and a ten-row word table.
pub fn tiny_model(variant: ModelVariant, seed: u64) -> ModelParams {
    let dims = EmbeddingDims {
        word: TINY_EMBED,
        pos: TINY_EMBED,
        shape: TINY_EMBED,
    };
    let words = ["Supplier", "shall", "pay", "fees", ".", "not", "Fees", "are", "the"];
    let setup = EmbeddingSetup {
        min_count: 1,
        train_words: true,
        ..EmbeddingSetup::with_dims(dims)
    };
    let mut table = setup.build(&words, seed).unwrap();
    table.trainable.word = true;
    assert_eq!(table.vocab().len(), TINY_VOCAB);
    let cfg = ModelConfig {
        dims,
        dropout: 0.0,
        context: 2,
        ..ModelConfig::new(variant, TINY_HIDDEN)
    };
    ModelParams::init(cfg, table, seed).unwrap()
}

/// Mean cross-entropy over the section's labeled sentences. With
/// `dropout_seed`, a fresh stream with that seed drives the masks, so
/// repeated evaluations see identical masks.
pub fn section_loss(params: &ModelParams, section: &[EncodedSentence], dropout_seed: Option<u64>) -> (f64, Vec<Tensor>) {
    let mut stream = dropout_seed.map(|s| Dropout::new(0.5, s).unwrap());
    let mut fw = Forward::training(params, stream.as_mut());
    let outs = fw.section(section, &vec![true; section.len()]).unwrap();
    let mut losses = Vec::new();
    for (out, s) in outs.iter().zip(section) {
        if let (Some(o), Some(gold)) = (out, s.label) {
            losses.push(fw.g.cross_entropy(o.probs, gold).unwrap());
        }
    }
    let total = fw.g.sum_scalars(&losses).unwrap();
    let mean = fw.g.scale(total, 1.0 / losses.len() as f64).unwrap();
    let value = fw.g.value(mean).item();
    let grads = fw.g.backward(mean).unwrap();
    let analytic = fw.bound.trainable.iter().map(|&v| grads.get(v).unwrap().clone()).collect();
    (value, analytic)
}

/// Largest relative error over the model's trainable tensors.
pub fn model_gradient_error(variant: ModelVariant, dropout_seed: Option<u64>) -> f64 {
    let params = tiny_model(variant, 23);
    let section: Vec<EncodedSentence> = tiny_section().iter().map(|s| params.embeddings.encode(s)).collect();
    let (_, analytic) = section_loss(&params, &section, dropout_seed);
    let count = params.trainable().len();
    assert_eq!(analytic.len(), count);
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let base = params.trainable()[k].clone();
        let numeric = finite_diff_grad(
            |x| {
                let mut p = params.clone();
                *p.trainable_mut()[k] = x.clone();
                section_loss(&p, &section, dropout_seed).0
            },
            &base,
            DEFAULT_STEP,
        );
        worst = worst.max(rel_err(&analytic[k], &numeric));
    }
    worst
}

/// Gate-by-gate LSTM step with explicit loops over scalars.
pub fn scalar_lstm_step(x: &[f64], h: &[f64], c: &[f64], p: &LstmCellParams) -> (Vec<f64>, Vec<f64>) {
    let u = h.len();
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let z = |j: usize| {
        let mut acc = p.b.data()[j];
        for (k, xk) in x.iter().enumerate() {
            acc += xk * p.w.get(k, j);
        }
        for (k, hk) in h.iter().enumerate() {
            acc += hk * p.u.get(k, j);
        }
        acc
    };
    let mut h2 = vec![0.0; u];
    let mut c2 = vec![0.0; u];
    for j in 0..u {
        let i = sig(z(j));
        let f = sig(z(u + j));
        let g = z(2 * u + j).tanh();
        let o = sig(z(3 * u + j));
        c2[j] = f * c[j] + i * g;
        h2[j] = o * c2[j].tanh();
    }
    (h2, c2)
}

/// `(tp, fp, fn)` for class `c` by direct counting.
pub fn naive_counts(gold: &[usize], pred: &[usize], c: usize) -> (usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for i in 0..gold.len() {
        match (gold[i] == c, pred[i] == c) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            _ => {}
        }
    }
    (tp, fp, fn_)
}

/// Average precision by sweeping every distinct score as a threshold:
/// `Σ (R(t) − R(t_prev)) · P(t)` with predictions `score ≥ t`.
pub fn threshold_sweep_ap(scores: &[f64], gold: &[bool]) -> Option<f64> {
    let positives = gold.iter().filter(|g| **g).count();
    if positives == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let predicted = scores.iter().filter(|&&s| s >= t).count();
        let hits = scores.iter().zip(gold).filter(|(&s, &g)| s >= t && g).count();
        let recall = hits as f64 / positives as f64;
        let precision = hits as f64 / predicted as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Some(ap)
}

fn random_string(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    const ALPHABET: [char; 6] = ['a', 'b', 'c', 'd', 'é', ' '];
    let n = rng.gen_range(0..=max_len);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

/// Bit-parallel distances against the plain dynamic program on random
/// pairs, including lengths past one machine word.
pub fn check_levenshtein_oracle(cases: usize, seed: u64) -> Result<(), String> {
    use deontic::corpus::{levenshtein, levenshtein_dp, levenshtein_seq};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let max = if case % 4 == 0 { 200 } else { 40 };
        let a = random_string(&mut rng, max);
        let b = if rng.gen_bool(0.3) {
            let mut b: Vec<char> = a.chars().collect();
            for _ in 0..rng.gen_range(0..4) {
                if !b.is_empty() {
                    let k = rng.gen_range(0..b.len());
                    b[k] = 'x';
                }
            }
            b.into_iter().collect()
        } else {
            random_string(&mut rng, max)
        };
        let ac: Vec<char> = a.chars().collect();
        let bc: Vec<char> = b.chars().collect();
        let expected = levenshtein_dp(&ac, &bc);
        let got = levenshtein(&a, &b);
        if got != expected {
            return Err(format!("case {case}: {a:?} vs {b:?}: {got} != {expected}"));
        }
        let seq = levenshtein_seq(&bc, &ac);
        if seq != expected {
            return Err(format!("case {case}: reversed sequence form gave {seq}, expected {expected}"));
        }
    }
    Ok(())
}

/// Library LSTM cell against [`scalar_lstm_step`]; returns the largest
/// absolute difference seen.
pub fn check_lstm_oracle(cases: usize, seed: u64) -> Result<f64, String> {
    use deontic::model::lstm_cell_step;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let d = rng.gen_range(1..=6);
        let u = rng.gen_range(1..=5);
        let p = LstmCellParams {
            w: rand_tensor(&mut rng, &[d, 4 * u], -1.5, 1.5),
            u: rand_tensor(&mut rng, &[u, 4 * u], -1.5, 1.5),
            b: rand_tensor(&mut rng, &[1, 4 * u], -1.0, 1.0),
        };
        let x = rand_tensor(&mut rng, &[1, d], -2.0, 2.0);
        let h = rand_tensor(&mut rng, &[1, u], -1.0, 1.0);
        let c = rand_tensor(&mut rng, &[1, u], -2.0, 2.0);
        let (h2, c2) = lstm_cell_step(&x, &h, &c, &p).map_err(|e| e.to_string())?;
        let (eh, ec) = scalar_lstm_step(x.data(), h.data(), c.data(), &p);
        for (got, want) in h2.data().iter().chain(c2.data()).zip(eh.iter().chain(&ec)) {
            worst = worst.max((got - want).abs());
        }
        if worst > 1e-12 {
            return Err(format!("case {case}: difference {worst:e}"));
        }
    }
    Ok(worst)
}

/// Scores on a coarse grid so ties are common.
fn random_distribution(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| f64::from(rng.gen_range(1..=8u8))).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

fn naive_argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

fn naive_prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Counts, P/R/F1, per-class and micro AUC against direct counting and the
/// threshold sweep, on random label sets.
pub fn check_metric_oracles(cases: usize, seed: u64) -> Result<(), String> {
    use deontic::eval::{micro_macro, pr_auc, ConfusionCounts, MetricsOptions};
    let k = ClassLabel::COUNT;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    for case in 0..cases {
        let n = rng.gen_range(1..=80);
        let gold: Vec<usize> = (0..n)
            .map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(0..k) })
            .collect();
        let probs: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(&mut rng, k)).collect();
        let pred: Vec<usize> = probs.iter().map(|p| naive_argmax(p)).collect();

        let counts = ConfusionCounts::from_labels(&gold, &pred, k);
        for c in 0..k {
            let (tp, fp, fn_) = naive_counts(&gold, &pred, c);
            if (counts.tp[c], counts.fp[c], counts.fn_[c]) != (tp, fp, fn_) {
                return Err(format!("case {case} class {c}: counts differ"));
            }
        }

        let include_none = rng.gen_bool(0.5);
        let labels: Vec<ClassLabel> = gold.iter().map(|&g| ClassLabel::from_index(g).unwrap()).collect();
        let report = micro_macro(
            &labels,
            &probs,
            MetricsOptions {
                micro_includes_none: include_none,
            },
        );
        let mut f1_sum = 0.0;
        for c in 0..k {
            let (tp, fp, fn_) = naive_counts(&gold, &pred, c);
            let (p, r, f) = naive_prf(tp, fp, fn_);
            let row = &report.classes[c];
            if row.support != tp + fn_ {
                return Err(format!("case {case} class {c}: support {} != {}", row.support, tp + fn_));
            }
            if !close(row.metrics.precision, p, 1e-12) || !close(row.metrics.recall, r, 1e-12) || !close(row.metrics.f1, f, 1e-12) {
                return Err(format!("case {case} class {c}: P/R/F1 differ"));
            }
            f1_sum += f;
            let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
            let is_pos: Vec<bool> = gold.iter().map(|&g| g == c).collect();
            let want = threshold_sweep_ap(&scores, &is_pos);
            match (row.metrics.auc, want) {
                (None, None) => {}
                (Some(a), Some(b)) if close(a, b, 1e-9) => {}
                (a, b) => return Err(format!("case {case} class {c}: AUC {a:?} vs oracle {b:?}")),
            }
            if pr_auc(&scores, &is_pos).map(|a| close(a, want.unwrap(), 1e-9)) == Some(false) {
                return Err(format!("case {case} class {c}: pr_auc differs from oracle"));
            }
        }
        if !close(report.macro_avg.f1, f1_sum / k as f64, 1e-12) {
            return Err(format!("case {case}: macro F1 differs"));
        }

        let pooled: Vec<usize> = (0..k).filter(|&c| include_none || c != 0).collect();
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        let mut flat_scores = Vec::new();
        let mut flat_gold = Vec::new();
        for &c in &pooled {
            let t = naive_counts(&gold, &pred, c);
            tp += t.0;
            fp += t.1;
            fn_ += t.2;
        }
        for i in 0..n {
            for &c in &pooled {
                flat_scores.push(probs[i][c]);
                flat_gold.push(gold[i] == c);
            }
        }
        let (p, r, f) = naive_prf(tp, fp, fn_);
        let m = &report.micro_avg;
        if !close(m.precision, p, 1e-12) || !close(m.recall, r, 1e-12) || !close(m.f1, f, 1e-12) {
            return Err(format!("case {case}: micro P/R/F1 differ"));
        }
        match (m.auc, threshold_sweep_ap(&flat_scores, &flat_gold)) {
            (None, None) => {}
            (Some(a), Some(b)) if close(a, b, 1e-9) => {}
            (a, b) => return Err(format!("case {case}: micro AUC {a:?} vs oracle {b:?}")),
        }
    }
    Ok(())
}

/// Similarity straight from the dynamic program over section texts.
pub fn oracle_similarity(a: &str, b: &str) -> f64 {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    let m = ac.len().max(bc.len());
    if m == 0 {
        return 1.0;
    }
    1.0 - deontic::corpus::levenshtein_dp(&ac, &bc) as f64 / m as f64
}

/// Cross-split pairs at or above `threshold`, found by checking every pair.
/// Pairs whose length ratio already rules them out are skipped.
pub fn exhaustive_leaks(texts: &[String], splits: &[deontic::corpus::Split], threshold: f64) -> Vec<(usize, usize)> {
    let lens: Vec<usize> = texts.iter().map(|t| t.chars().count()).collect();
    let mut out = Vec::new();
    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            if splits[i] == splits[j] {
                continue;
            }
            let m = lens[i].max(lens[j]);
            if m > 0 && 1.0 - lens[i].abs_diff(lens[j]) as f64 / (m as f64) < threshold {
                continue;
            }
            if oracle_similarity(&texts[i], &texts[j]) >= threshold {
                out.push((i, j));
            }
        }
    }
    out
}
