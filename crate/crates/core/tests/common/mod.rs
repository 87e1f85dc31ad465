#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use samplab_core::{SortedDistribution, TokenId};

pub const SIZES: [usize; 4] = [2, 8, 64, 1024];
pub const ALPHAS: [f64; 3] = [0.1, 1.0, 10.0];

/// Symmetric Dirichlet draw via normalized Gamma variates.
pub fn dirichlet<R: Rng>(rng: &mut R, n: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).unwrap();
    loop {
        let g: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 && total.is_finite() {
            return g.into_iter().map(|x| x / total).collect();
        }
    }
}

/// The `i`-th member of the random suite cycles through every size and
/// concentration.
pub fn suite_member<R: Rng>(rng: &mut R, i: usize) -> SortedDistribution {
    let n = SIZES[i % SIZES.len()];
    let alpha = ALPHAS[(i / SIZES.len()) % ALPHAS.len()];
    SortedDistribution::from_probs(&dirichlet(rng, n, alpha)).unwrap()
}

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// Naive BLEU: plain loops over n-gram vectors, no hashing or indexing.
pub fn brute_sentence_bleu(cand: &[TokenId], refs: &[&[TokenId]], max_n: usize, eps: f64) -> f64 {
    let c = cand.len();
    let mut r = usize::MAX;
    for rf in refs {
        let d = rf.len().abs_diff(c);
        if r == usize::MAX || d < r.abs_diff(c) || (d == r.abs_diff(c) && rf.len() < r) {
            r = rf.len();
        }
    }
    let orders = max_n.min(c);
    let mut product = 1.0;
    for n in 1..=orders {
        let grams: Vec<&[TokenId]> = cand.windows(n).collect();
        let mut seen: Vec<&[TokenId]> = Vec::new();
        let mut matched = 0usize;
        for g in &grams {
            if seen.contains(g) {
                continue;
            }
            seen.push(g);
            let in_cand = grams.iter().filter(|x| *x == g).count();
            let in_ref = refs
                .iter()
                .map(|rf| rf.windows(n).filter(|x| x == g).count())
                .max()
                .unwrap_or(0);
            matched += in_cand.min(in_ref);
        }
        let total = grams.len() as f64;
        let p = if matched > 0 {
            matched as f64 / total
        } else if n >= 2 {
            eps / total
        } else {
            return 0.0;
        };
        product *= p;
    }
    let bp = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    bp * product.powf(1.0 / orders as f64)
}

pub fn brute_corpus_bleu(gen: &[Vec<TokenId>], refs: &[Vec<TokenId>], max_n: usize, eps: f64) -> f64 {
    let refs: Vec<&[TokenId]> = refs.iter().map(Vec::as_slice).collect();
    gen.iter()
        .map(|g| brute_sentence_bleu(g, &refs, max_n, eps))
        .sum::<f64>()
        / gen.len() as f64
}

pub fn brute_self_bleu(gen: &[Vec<TokenId>], max_n: usize, eps: f64) -> f64 {
    let mut total = 0.0;
    for (i, g) in gen.iter().enumerate() {
        let others: Vec<&[TokenId]> = gen
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, s)| s.as_slice())
            .collect();
        total += brute_sentence_bleu(g, &others, max_n, eps);
    }
    total / gen.len() as f64
}

pub fn brute_ngram_entropy(gen: &[Vec<TokenId>], n: usize) -> f64 {
    let mut grams: Vec<&[TokenId]> = gen.iter().flat_map(|s| s.windows(n)).collect();
    grams.sort();
    let total = grams.len() as f64;
    let mut h = 0.0;
    let mut i = 0;
    while i < grams.len() {
        let j = i + grams[i..].iter().take_while(|g| **g == grams[i]).count();
        let r = (j - i) as f64 / total;
        h -= r * r.ln();
        i = j;
    }
    h
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for k in i..=j {
                r[idx[k]] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Linear interpolation of `ys` at `x` over points sorted by `xs`, clamped to
/// the end values outside the range.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if x <= pts[0].0 {
        return pts[0].1;
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return if x1 > x0 { y0 + (y1 - y0) * (x - x0) / (x1 - x0) } else { y1 };
        }
    }
    pts[pts.len() - 1].1
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn sample_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}
