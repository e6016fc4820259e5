use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uti2speech::eval::{mcd, mcd_waveforms, ranksum_exact, ranksum_normal, ranksum_test, MCD_SCALE};
use uti2speech::ingest::{Waveform, SAMPLE_RATE};
use uti2speech::toy::{vowel, VOWEL_A};
use uti2speech::Matrix;

/// Two-sided exact p by listing every way to assign the pooled values to
/// the first group.
fn brute_force_p(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n1 = a.len();
    let u_of = |idx: &[usize]| -> f64 {
        let mut u = 0.0;
        for (i, &v) in pooled.iter().enumerate() {
            if !idx.contains(&i) {
                for &j in idx {
                    let x = pooled[j];
                    u += if x > v {
                        1.0
                    } else if x == v {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        u
    };
    let observed = u_of(&(0..n1).collect::<Vec<_>>());
    let mean = (n1 * b.len()) as f64 / 2.0;
    let (mut hits, mut total) = (0u64, 0u64);
    let mut idx: Vec<usize> = (0..n1).collect();
    loop {
        total += 1;
        if (u_of(&idx) - mean).abs() >= (observed - mean).abs() - 1e-9 {
            hits += 1;
        }
        // next combination in lexicographic order
        let n = pooled.len();
        let mut i = n1;
        while i > 0 && idx[i - 1] == n - n1 + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..n1 {
            idx[j] = idx[j - 1] + 1;
        }
    }
    (observed, hits as f64 / total as f64)
}

fn scores(rng: &mut ChaCha8Rng, n: usize, shift: i64) -> Vec<f64> {
    (0..n).map(|_| (rng.random_range(0..20) + shift) as f64).collect()
}

#[test]
fn exact_matches_enumeration_up_to_seven() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n1 in 1..=7 {
        for n2 in 1..=7 {
            for trial in 0..3 {
                let a = scores(&mut rng, n1, trial);
                let b = scores(&mut rng, n2, 0);
                let r = ranksum_test(&a, &b).unwrap();
                let (u, p) = brute_force_p(&a, &b);
                assert!(r.exact);
                assert_eq!(r.u, u, "{a:?} {b:?}");
                assert!((r.p - p).abs() < 1e-12, "{n1}+{n2}: {} vs {p}", r.p);
            }
        }
    }
}

#[test]
fn normal_approximation_is_close_at_eight_to_ten() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for n1 in 8..=10 {
        for n2 in 8..=10 {
            for shift in 0..6 {
                let a: Vec<f64> = (0..n1)
                    .map(|_| rng.random_range(0.0..1.0) + shift as f64 * 0.1)
                    .collect();
                let b: Vec<f64> = (0..n2).map(|_| rng.random_range(0.0..1.0)).collect();
                let approx = ranksum_test(&a, &b).unwrap();
                assert!(!approx.exact);
                let exact = ranksum_exact(&a, &b).unwrap();
                worst = worst.max((approx.p - exact.p).abs());
            }
        }
    }
    assert!(worst < 0.02, "worst gap {worst}");
}

#[test]
fn swap_and_identity() {
    let a = [55.0, 60.0, 62.0, 70.0, 71.0, 80.0, 81.0, 90.0, 91.0];
    let b = [20.0, 30.0, 35.0, 40.0, 62.0, 45.0, 50.0, 52.0];
    let ab = ranksum_normal(&a, &b).unwrap();
    let ba = ranksum_normal(&b, &a).unwrap();
    assert!((ab.p - ba.p).abs() < 1e-15);
    assert_eq!(ab.u + ba.u, (a.len() * b.len()) as f64);
    assert!(ab.significant());
    assert!(ranksum_test(&a, &a).unwrap().p >= 0.99);
}

proptest! {
    #[test]
    fn monotone_transform_invariance(a in proptest::collection::vec(0u8..=100, 1..12), b in proptest::collection::vec(0u8..=100, 1..12)) {
        let fa: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let fb: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let g = |v: &f64| (v * 0.1).exp() - 3.0;
        let ta: Vec<f64> = fa.iter().map(g).collect();
        let tb: Vec<f64> = fb.iter().map(g).collect();
        let r1 = ranksum_test(&fa, &fb).unwrap();
        let r2 = ranksum_test(&ta, &tb).unwrap();
        prop_assert_eq!(r1.u, r2.u);
        prop_assert!((r1.p - r2.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r1.p));
        let r3 = ranksum_test(&fb, &fa).unwrap();
        prop_assert!((r1.p - r3.p).abs() < 1e-12);
    }

    #[test]
    fn mcd_symmetry_and_scaling(rows in proptest::collection::vec(proptest::collection::vec(-2.0..2.0f64, 25), 1..6),
                                d in 1usize..25, k in 0.1..10.0f64) {
        let a = Matrix::from_rows(&rows);
        let mut b = a.clone();
        b.set(0, d, b.get(0, d) + 1.0);
        let mut c = a.clone();
        c.set(0, d, c.get(0, d) + k);
        let ab = mcd(&a, &b).unwrap();
        prop_assert!((ab - mcd(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((ab * rows.len() as f64 - MCD_SCALE).abs() < 1e-9);
        prop_assert!((mcd(&a, &c).unwrap() - k * ab).abs() < 1e-9);
    }
}

#[test]
fn mcd_on_audio() {
    let n = SAMPLE_RATE as usize;
    let v = vowel(150.0, &VOWEL_A, n, 0.4);
    let wav = Waveform::new(v.clone(), SAMPLE_RATE).unwrap();
    assert_eq!(mcd_waveforms(&wav, &wav).unwrap().0, 0.0);

    let louder = Waveform::new(v.iter().map(|x| 2.0 * x).collect(), SAMPLE_RATE).unwrap();
    let (d, frames) = mcd_waveforms(&wav, &louder).unwrap();
    assert!(d.abs() < 1e-9, "{d}");
    assert_eq!(frames, n / 270 + 1);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Waveform::new((0..n).map(|_| rng.random_range(-0.3..0.3)).collect(), SAMPLE_RATE).unwrap();
    assert!(mcd_waveforms(&wav, &noise).unwrap().0 > 4.0);
}
