//! Reverse-mode gradients on a tiny softmax classifier, checked against
//! central finite differences.

use deontic::tensor::{finite_diff_grad, Graph, Tensor, DEFAULT_STEP};

fn loss_of(w: &Tensor, x: &Tensor, gold: usize) -> f64 {
    let mut g = Graph::new();
    let xv = g.constant_ref(x);
    let wv = g.constant_ref(w);
    let logits = g.matmul(xv, wv).unwrap();
    let h = g.tanh(logits).unwrap();
    let p = g.softmax(h).unwrap();
    let loss = g.cross_entropy(p, gold).unwrap();
    g.value(loss).item()
}

fn main() {
    let x = Tensor::row(vec![0.5, -1.0, 2.0]).unwrap();
    let w = Tensor::matrix(3, 4, (0..12).map(|i| (i as f64 * 0.37).sin() * 0.5).collect()).unwrap();
    let gold = 2;

    let mut g = Graph::new();
    let xv = g.constant_ref(&x);
    let wv = g.param_ref(&w);
    let logits = g.matmul(xv, wv).unwrap();
    let h = g.tanh(logits).unwrap();
    let p = g.softmax(h).unwrap();
    let loss = g.cross_entropy(p, gold).unwrap();
    let grads = g.backward(loss).unwrap();
    let analytic = grads.get(wv).unwrap();

    let numeric = finite_diff_grad(|w| loss_of(w, &x, gold), &w, DEFAULT_STEP);

    println!("loss           {:.6}", g.value(loss).item());
    println!("probabilities  {:?}", g.value(p).data());
    println!("graph nodes    {}", g.len());
    println!("max |analytic - numeric| = {:.3e}", analytic.max_abs_diff(&numeric));
    for r in 0..3 {
        let a: Vec<String> = analytic.row_slice(r).iter().map(|v| format!("{v:+.5}")).collect();
        println!("dL/dW[{r}]  {}", a.join(" "));
    }
}
