use dpshare_core::evaluation::{
    confusion, evaluate, wilcoxon_exact_p, wilcoxon_signed_rank, Averaging, EXACT_MAX_N,
};
use dpshare_core::rng;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn confusion_matches_pairwise_counting() {
    let mut s = rng::stream(1);
    let truth: Vec<usize> = (0..1000).map(|_| s.random_range(0..4)).collect();
    let pred: Vec<usize> = (0..1000).map(|_| s.random_range(0..4)).collect();
    let cm = confusion(&truth, &pred, 4).unwrap();
    for t in 0..4 {
        for p in 0..4 {
            let n = truth.iter().zip(&pred).filter(|(a, b)| **a == t && **b == p).count() as u64;
            assert_eq!(cm.counts[t][p], n);
        }
    }
    assert_eq!(cm.total(), 1000);
    assert_eq!(cm.trace(), truth.iter().zip(&pred).filter(|(a, b)| a == b).count() as u64);
}

#[test]
fn accuracy_is_permutation_invariant_and_fs_is_a_harmonic_mean() {
    let mut s = rng::stream(2);
    for _ in 0..200 {
        let n = s.random_range(1..60);
        let truth: Vec<usize> = (0..n).map(|_| s.random_range(0..3)).collect();
        let pred: Vec<usize> = (0..n).map(|_| s.random_range(0..3)).collect();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut s);
        let t2: Vec<usize> = idx.iter().map(|&i| truth[i]).collect();
        let p2: Vec<usize> = idx.iter().map(|&i| pred[i]).collect();
        for avg in [Averaging::Macro, Averaging::Binary { positive: 1 }] {
            let a = evaluate(&truth, &pred, 3, avg).unwrap();
            let b = evaluate(&t2, &p2, 3, avg).unwrap();
            assert_eq!(a.accuracy, b.accuracy);
            if a.precision + a.recall > 0.0 {
                assert!(a.f1 >= a.precision.min(a.recall) - 1e-15);
                assert!(a.f1 <= a.precision.max(a.recall) + 1e-15);
            } else {
                assert_eq!(a.f1, 0.0);
            }
        }
    }
}

/// Brute force over all 2^n sign assignments of the mid-ranks.
fn enumerate_p(x: &[f64], y: &[f64]) -> f64 {
    let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let n = d.len();
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        for r in &mut ranks[i..=j] {
            *r = (i + j + 2) as f64 / 2.0;
        }
        i = j + 1;
    }
    let mean = (n * (n + 1)) as f64 / 4.0;
    let observed: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let cut = (observed - mean).abs();
    let mut hits = 0u64;
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| ranks[k]).sum();
        if (w - mean).abs() >= cut - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

#[test]
fn exact_p_matches_enumeration() {
    let mut s = rng::stream(3);
    for _ in 0..200 {
        let n = s.random_range(2..=14);
        // coarse grid so ties and zero differences occur
        let x: Vec<f64> = (0..n).map(|_| s.random_range(0..8) as f64 * 0.5).collect();
        let y: Vec<f64> = (0..n).map(|_| s.random_range(0..8) as f64 * 0.5).collect();
        let nonzero = x.iter().zip(&y).filter(|(a, b)| a != b).count();
        if nonzero < 2 {
            continue;
        }
        let lib = wilcoxon_exact_p(&x, &y).unwrap();
        assert!((lib - enumerate_p(&x, &y)).abs() < 1e-12);
        let r = wilcoxon_signed_rank(&x, &y, 0.05).unwrap();
        assert_eq!(r.exact_p_value.is_some(), r.n_effective <= EXACT_MAX_N);
    }
}

#[test]
fn asymptotic_p_at_twenty_pairs() {
    // the normal approximation is close to the exact law at n = 20
    let mut s = rng::stream(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..20).map(|_| s.random::<f64>()).collect();
        let y: Vec<f64> = (0..20).map(|_| s.random::<f64>() + 0.1).collect();
        let a = wilcoxon_signed_rank(&x, &y, 0.05).unwrap().p_value;
        let e = wilcoxon_exact_p(&x, &y).unwrap();
        assert!((0.0..=1.0).contains(&a));
        worst = worst.max((a - e).abs());
    }
    assert!(worst < 0.03, "{worst}");
}
