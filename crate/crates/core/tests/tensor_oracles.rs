//! Forward values checked against plain-loop reference implementations.

use gazeformer::tensor::nn::{multi_head_attention, AttentionParams};
use gazeformer::tensor::{Graph, Tensor};
use proptest::prelude::*;

fn mat(rows: usize, cols: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, rows * cols)
}

fn naive_matmul(a: &[f64], b: &[f64], n: usize, m: usize, k: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * k];
    for i in 0..n {
        for j in 0..k {
            for t in 0..m {
                out[i * k + j] += a[i * m + t] * b[t * k + j];
            }
        }
    }
    out
}

/// Row softmax with the max shift done in a second pass and sums in
/// Kahan-compensated form.
fn naive_softmax_rows(x: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        let row = &x[i * m..(i + 1) * m];
        let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &v in row {
            let y = (v - hi).exp() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        for j in 0..m {
            out[i * m + j] = (row[j] - hi).exp() / sum;
        }
    }
    out
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #[test]
    fn matmul_matches_triple_loop((n, m, k, a, b) in (1usize..6, 1usize..6, 1usize..6)
        .prop_flat_map(|(n, m, k)| (Just(n), Just(m), Just(k), mat(n, m), mat(m, k))))
    {
        let ta = Tensor::matrix(n, m, a.clone()).unwrap();
        let tb = Tensor::matrix(m, k, b.clone()).unwrap();
        let got = ta.matmul(&tb).unwrap();
        prop_assert_eq!(got.shape(), &[n, k]);
        prop_assert!(close(got.data(), &naive_matmul(&a, &b, n, m, k), 1e-12));
    }

    #[test]
    fn softmax_matches_reference((n, m, x) in (1usize..5, 1usize..7)
        .prop_flat_map(|(n, m)| (Just(n), Just(m), prop::collection::vec(-50.0..50.0f64, n * m))))
    {
        let t = Tensor::matrix(n, m, x.clone()).unwrap();
        let rows = t.softmax(1).unwrap();
        prop_assert!(close(rows.data(), &naive_softmax_rows(&x, n, m), 1e-12));
        let cols = t.softmax(0).unwrap().transpose().unwrap();
        let xt = t.transpose().unwrap();
        prop_assert!(close(cols.data(), &naive_softmax_rows(xt.data(), m, n), 1e-12));
    }
}

#[test]
fn softmax_survives_large_logits() {
    let t = Tensor::matrix(1, 3, vec![1000.0, 1000.0, -1000.0]).unwrap();
    let s = t.softmax(1).unwrap();
    assert!(close(s.data(), &[0.5, 0.5, 0.0], 1e-15));
}

#[test]
fn attention_matches_per_head_loops() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let (nq, nk, d, heads) = (3, 5, 6, 3);
    let hd = d / heads;
    let mut rand_vec = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let q = rand_vec(nq * d);
    let k = rand_vec(nk * d);
    let v = rand_vec(nk * d);
    let w: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(d * d)).collect();
    let b: Vec<Vec<f64>> = (0..4).map(|_| rand_vec(d)).collect();

    let project = |x: &[f64], rows: usize, i: usize| -> Vec<f64> {
        let mut y = naive_matmul(x, &w[i], rows, d, d);
        for r in 0..rows {
            for c in 0..d {
                y[r * d + c] += b[i][c];
            }
        }
        y
    };
    let (qp, kp, vp) = (project(&q, nq, 0), project(&k, nk, 1), project(&v, nk, 2));
    let mut joined = vec![0.0; nq * d];
    for h in 0..heads {
        for i in 0..nq {
            let scores: Vec<f64> = (0..nk)
                .map(|j| (0..hd).map(|c| qp[i * d + h * hd + c] * kp[j * d + h * hd + c]).sum::<f64>() / (hd as f64).sqrt())
                .collect();
            let weights = naive_softmax_rows(&scores, 1, nk);
            for c in 0..hd {
                joined[i * d + h * hd + c] = (0..nk).map(|j| weights[j] * vp[j * d + h * hd + c]).sum();
            }
        }
    }
    let expected = project(&joined, nq, 3);

    let mut g = Graph::new();
    let qn = g.constant(Tensor::matrix(nq, d, q).unwrap());
    let kn = g.constant(Tensor::matrix(nk, d, k).unwrap());
    let vn = g.constant(Tensor::matrix(nk, d, v).unwrap());
    let mut wn = w.iter().map(|x| g.constant(Tensor::matrix(d, d, x.clone()).unwrap())).collect::<Vec<_>>();
    let mut bn = b.iter().map(|x| g.constant(Tensor::vector(x.clone()))).collect::<Vec<_>>();
    let p = AttentionParams {
        wq: wn.remove(0),
        bq: bn.remove(0),
        wk: wn.remove(0),
        bk: bn.remove(0),
        wv: wn.remove(0),
        bv: bn.remove(0),
        wo: wn.remove(0),
        bo: bn.remove(0),
    };
    let out = multi_head_attention(&mut g, qn, kn, vn, heads, &p).unwrap();
    assert_eq!(g.value(out).shape(), &[nq, d]);
    assert!(close(g.value(out).data(), &expected, 1e-12));
}
