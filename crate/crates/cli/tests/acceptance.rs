//! Acceptance checks for the whole toolkit, one line per criterion.
//! Runs as a plain binary so every line is printed, pass or fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use uti2speech::cnn::{
    evaluate, train, train_with, Cnn, CnnArchitecture, CnnModel, Dataset, EarlyStopping, TrainConfig,
};
use uti2speech::eval::{mcd, mcd_waveforms, ranksum_exact, ranksum_normal, ranksum_test, waveform_to_melcepstra};
use uti2speech::features::{mel_spectrogram, MelFilterbank, StftConfig, LOG_FLOOR};
use uti2speech::ingest::{Waveform, SAMPLE_RATE};
use uti2speech::postproc::{griffin_lim, savgol_coefficients, savgol_smooth, GriffinLimConfig, SmoothingConfig};
use uti2speech::toy::{sawtooth, sine, vowel, VOWEL_A};
use uti2speech::vocoder::{
    analyze, estimate_mvf, is_valid_lsp, synthesize, track_contf0, F0Config, MvfConfig, VocoderConfig,
};
use uti2speech::Matrix;
use uti2speech_cli::PipelineConfig;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn wav(x: Vec<f64>) -> Waveform {
    Waveform::new(x, SAMPLE_RATE).unwrap()
}

fn frame_rate() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    std::fs::write(&p, "[features]\nsample_rate = 22050\nfps = 81.67\n").unwrap();
    let cfg = PipelineConfig::load(&p, &[]).map_err(|e| e.to_string())?;
    let hop = cfg.hop()?;
    ensure!(hop == 270, "hop {hop}");
    Ok(format!("22050 Hz / 81.67 fps -> hop {hop}"))
}

fn mel_pipeline() -> Outcome {
    let fb = MelFilterbank::standard();
    ensure!(
        (fb.n_mels(), fb.n_bins()) == (80, 513),
        "filterbank {}x{}",
        fb.n_mels(),
        fb.n_bins()
    );
    let df = SAMPLE_RATE as f64 / 1024.0;
    let worst_area = fb
        .weights()
        .iter_rows()
        .map(|r| (r.iter().sum::<f64>() * df - 1.0).abs())
        .fold(0.0, f64::max);
    ensure!(worst_area < 1e-3, "row area off by {worst_area}");
    let cfg = StftConfig::default();
    let silent = mel_spectrogram(&wav(vec![0.0; 22050]), &cfg, &fb).unwrap();
    ensure!(
        silent.values.as_slice().iter().all(|&v| v == LOG_FLOOR.ln()),
        "silence is not at the log floor"
    );
    let centers = fb.center_frequencies();
    let expect = (0..80)
        .min_by(|&a, &b| (centers[a] - 1000.0).abs().total_cmp(&(centers[b] - 1000.0).abs()))
        .unwrap();
    let tone = mel_spectrogram(&wav(sine(1000.0, 22050, 0.5)), &cfg, &fb).unwrap();
    for (t, row) in tone.values.iter_rows().enumerate().skip(2).take(tone.n_frames() - 4) {
        let arg = (0..80).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        ensure!(arg == expect, "frame {t}: peak in band {arg}, expected {expect}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let long = wav((0..10 * SAMPLE_RATE as usize)
        .map(|_| rng.random_range(-0.5..0.5))
        .collect());
    let t0 = Instant::now();
    mel_spectrogram(&long, &cfg, &fb).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "10 s of audio took {secs:.2} s");
    Ok(format!(
        "area err {worst_area:.1e}, 1 kHz in band {expect}, 10 s audio in {secs:.2} s"
    ))
}

fn probe(model: &Cnn<f64>, x: &[f64], t: &[f64], seed: u64) -> (f64, Vec<Vec<u32>>) {
    let c = model.forward_train(x, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    (uti2speech::cnn::mse(&c.output, t), c.pool_routes().to_vec())
}

fn set_param(model: &mut Cnn<f64>, layer: usize, bias: bool, k: usize, v: f64) {
    let l = &mut model.layers_mut()[layer];
    if bias {
        l.bias[k] = v
    } else {
        l.weight[k] = v
    }
}

/// Largest relative error of any analytic gradient against central
/// differences; the step shrinks where it would cross a max-pool kink.
fn worst_gradient_error() -> (f64, usize) {
    let arch = CnnArchitecture::reduced(4);
    let mut model = Cnn::<f64>::new(arch.clone(), 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for l in model.layers_mut() {
        l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
    }
    let x: Vec<f64> = (0..arch.input_len()).map(|_| rng.random_range(0.0..1.0)).collect();
    let t: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cache = model.forward_train(&x, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
    let routes = cache.pool_routes().to_vec();
    let grads = model.backward(&cache, &t).unwrap();
    let (mut worst, mut checked) = (0.0f64, 0);
    for li in 0..model.layers().len() {
        for bias in [false, true] {
            let analytic = if bias {
                grads.layers[li].1.clone()
            } else {
                grads.layers[li].0.clone()
            };
            for (k, a) in analytic.into_iter().enumerate() {
                let orig = if bias {
                    model.layers()[li].bias[k]
                } else {
                    model.layers()[li].weight[k]
                };
                let mut eps = 1e-3;
                let numeric = loop {
                    set_param(&mut model, li, bias, k, orig + eps);
                    let (up, ru) = probe(&model, &x, &t, 99);
                    set_param(&mut model, li, bias, k, orig - eps);
                    let (down, rd) = probe(&model, &x, &t, 99);
                    set_param(&mut model, li, bias, k, orig);
                    if (ru == routes && rd == routes) || eps < 1e-7 {
                        break (up - down) / (2.0 * eps);
                    }
                    eps /= 10.0;
                };
                worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8));
                checked += 1;
            }
        }
    }
    (worst, checked)
}

fn toy_task(arch: &CnnArchitecture, seed: u64) -> Dataset<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut xs, mut ts) = (Vec::new(), Vec::new());
    for _ in 0..32 {
        let base: f64 = rng.random_range(0.2..0.8);
        let x: Vec<f32> = (0..arch.input_len())
            .map(|_| (base + rng.random_range(-0.2..0.2)).clamp(0.0, 1.0) as f32)
            .collect();
        let m = x.iter().map(|&v| v as f64).sum::<f64>() / x.len() as f64;
        xs.push(x);
        ts.push(vec![(2.0 * m - 1.0) as f32, (0.5 - m) as f32, (3.0 * m - 1.5) as f32]);
    }
    Dataset::new(xs, ts).unwrap()
}

fn cnn_gradients() -> Outcome {
    let (worst, checked) = worst_gradient_error();
    ensure!(worst < 1e-4, "worst relative gradient error {worst:.2e}");

    let arch = CnnArchitecture {
        dropout: 0.0,
        ..CnnArchitecture::toy(3)
    };
    let data = toy_task(&arch, 1);
    let mut model = CnnModel::new(arch, 2).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        batch_size: 4,
        max_epochs: 100,
        patience: 100,
        seed: 3,
    };
    let t0 = Instant::now();
    let h = train(&mut model, &data, &data, &cfg).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let mse = evaluate(&model, &data).unwrap();
    ensure!(mse < 1e-3, "train MSE {mse:.2e} after {} epochs", h.epochs.len());
    ensure!(secs < 60.0, "overfit took {secs:.1} s");
    Ok(format!(
        "{checked} params, worst rel err {worst:.1e}; overfit MSE {mse:.1e} (best epoch {}) in {secs:.1} s",
        h.best_epoch
    ))
}

fn early_stopping() -> Outcome {
    let losses = [1.0, 0.9, 0.91, 0.92, 0.93];
    ensure!(
        EarlyStopping::replay(3, &losses) == (5, 2),
        "replay {:?}",
        EarlyStopping::replay(3, &losses)
    );
    let arch = CnnArchitecture::reduced(3);
    let data = toy_task(&arch, 4);
    let mut model = CnnModel::new(arch, 5).unwrap();
    let snap = |m: &CnnModel| -> Vec<Vec<f32>> {
        m.layers()
            .iter()
            .flat_map(|l| [l.weight.clone(), l.bias.clone()])
            .collect()
    };
    let mut snaps = Vec::new();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        ..Default::default()
    };
    let h = train_with(
        &mut model,
        &data,
        &cfg,
        |_, e| Ok(losses.get(e - 1).copied().unwrap_or(0.0)),
        |_, m| snaps.push(snap(m)),
    )
    .map_err(|e| e.to_string())?;
    ensure!(h.epochs.len() == 5 && h.stopped_early, "ran {} epochs", h.epochs.len());
    ensure!(h.best_epoch == 2, "best epoch {}", h.best_epoch);
    ensure!(snap(&model) == snaps[1], "restored weights are not those of epoch 2");
    Ok("stopped after epoch 5, restored epoch 2".into())
}

fn vocoder_round_trip() -> Outcome {
    let n = 3 * SAMPLE_RATE as usize;
    let x = wav(vowel(150.0, &VOWEL_A, n, 0.5));
    let cfg = VocoderConfig::default();
    let t0 = Instant::now();
    let p = analyze(&x, &cfg).map_err(|e| e.to_string())?;
    let y = synthesize(&p, &cfg.synth()).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "3 s of audio took {secs:.1} s");
    let valid = p.frames.iter().filter(|f| is_valid_lsp(&f.lsp)).count();
    ensure!(
        valid == p.len(),
        "LSP order broken in {} of {} frames",
        p.len() - valid,
        p.len()
    );
    let f0 = track_contf0(&y, &F0Config::default()).unwrap();
    let worst = f0[5..f0.len() - 5]
        .iter()
        .map(|v| (v.exp() - 150.0).abs() / 150.0)
        .fold(0.0, f64::max);
    ensure!(worst < 0.05, "output F0 off by {:.1}%", worst * 100.0);
    let (a, b) = (waveform_to_melcepstra(&x).unwrap(), waveform_to_melcepstra(&y).unwrap());
    let t = a.rows().min(b.rows());
    let d = mcd(&a.truncated(t), &b.truncated(t)).unwrap();
    ensure!(d < 3.0, "copy-synthesis MCD {d:.2} dB");
    Ok(format!(
        "F0 within {:.2}%, MCD {d:.2} dB, LSPs valid in {valid}/{valid} frames, {secs:.1} s",
        worst * 100.0
    ))
}

fn highpass_noise(n: usize, cutoff: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.7..1.7), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spec);
    for (k, c) in spec.iter_mut().enumerate() {
        if (k.min(n - k) as f64 * SAMPLE_RATE as f64 / n as f64) < cutoff {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}

fn f0_and_mvf() -> Outcome {
    let f0 = track_contf0(&wav(sawtooth(120.0, 22050, 0.5)), &F0Config::default()).unwrap();
    let worst = f0.iter().map(|v| (v.exp() - 120.0).abs()).fold(0.0, f64::max);
    ensure!(worst <= 2.0, "sawtooth F0 off by {worst:.2} Hz");

    // harmonics of 150 Hz up to 4 kHz with weak noise above
    let n = 22050;
    let sr = SAMPLE_RATE as f64;
    let hp = highpass_noise(n, 4000.0, 1);
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let h: f64 = (1..=26)
                .map(|k| (2.0 * std::f64::consts::PI * k as f64 * 150.0 * i as f64 / sr).cos())
                .sum();
            0.02 * h + 0.05 * hp[i]
        })
        .collect();
    let x = wav(x);
    let lf0 = track_contf0(&x, &F0Config::default()).unwrap();
    let mvf: Vec<f64> = estimate_mvf(&x, &lf0, &MvfConfig::default())
        .unwrap()
        .into_iter()
        .map(f64::exp)
        .collect();
    let steady = &mvf[5..mvf.len() - 5];
    let (lo, hi) = steady
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    ensure!(lo >= 3500.0 && hi <= 4500.0, "MVF spans {lo:.0}-{hi:.0} Hz");
    Ok(format!("sawtooth F0 within {worst:.2} Hz; MVF {lo:.0}-{hi:.0} Hz"))
}

fn mcd_anchors() -> Outcome {
    let a = Matrix::from_rows(&[vec![0.2; 25]]);
    ensure!(mcd(&a, &a).unwrap() == 0.0, "identity is not 0");
    let mut b = a.clone();
    b.set(0, 3, b.get(0, 3) + 1.0);
    let unit = mcd(&a, &b).unwrap();
    ensure!((unit - 6.1415).abs() < 1e-3, "unit difference gives {unit}");
    let x = vowel(120.0, &VOWEL_A, 20000, 0.3);
    let (d, _) = mcd_waveforms(&wav(x.clone()), &wav(x.iter().map(|v| 2.0 * v).collect())).unwrap();
    ensure!(d < 1e-9, "2x amplitude gives {d:e} dB");
    Ok(format!("identity 0, unit {unit:.4} dB, 2x amplitude {d:.1e} dB"))
}

fn savgol() -> Outcome {
    let h = savgol_coefficients(&SmoothingConfig::default()).unwrap();
    // least squares: fit a cubic to 5 points and evaluate it at the centre
    let v = Matrix::from_rows(
        &(-2..=2)
            .map(|i| (0..4).map(|p| (i as f64).powi(p)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    );
    // first row of (V^T V)^-1 by Gauss-Jordan on [V^T V | I], then times V^T
    let mut aug: Vec<Vec<f64>> = (0..4)
        .map(|r| {
            let gram = (0..4).map(|c| (0..5).map(|i| v.get(i, r) * v.get(i, c)).sum());
            gram.chain((0..4).map(|c| (r == c) as u8 as f64)).collect()
        })
        .collect();
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        aug[col].iter_mut().for_each(|x| *x /= d);
        for r in 0..4 {
            if r != col {
                let f = aug[r][col];
                let src = aug[col].clone();
                aug[r].iter_mut().zip(&src).for_each(|(x, s)| *x -= f * s);
            }
        }
    }
    let oracle: Vec<f64> = (0..5)
        .map(|i| (0..4).map(|k| aug[0][4 + k] * v.get(i, k)).sum())
        .collect();
    let closed = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|c| c / 35.0);
    for k in 0..5 {
        ensure!(
            (h[k] - oracle[k]).abs() < 1e-12,
            "tap {k}: {} vs oracle {}",
            h[k],
            oracle[k]
        );
        ensure!((oracle[k] - closed[k]).abs() < 1e-12, "oracle tap {k}: {}", oracle[k]);
    }
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|i| {
            let x = i as f64 * 0.3 - 2.0;
            vec![x * x * x - 2.0 * x + 1.0, 0.5 * x * x, 4.0 - x]
        })
        .collect();
    let m = Matrix::from_rows(&rows);
    let s = savgol_smooth(&m, &SmoothingConfig::default()).unwrap();
    // edges are mirror-padded, so only frames covered by the full kernel
    // reproduce a cubic
    let worst = (2..28)
        .flat_map(|i| (0..3).map(move |c| (i, c)))
        .map(|(i, c)| (m.get(i, c) - s.get(i, c)).abs())
        .fold(0.0, f64::max);
    ensure!(worst < 1e-9, "cubic changed by {worst:e}");
    Ok(format!(
        "kernel matches least squares, interior cubic error {worst:.1e}"
    ))
}

fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n1, n) = (a.len(), pooled.len());
    let u_of = |idx: &[usize]| -> f64 {
        let mut u = 0.0;
        for (i, &v) in pooled.iter().enumerate() {
            if !idx.contains(&i) {
                for &j in idx {
                    u += if pooled[j] > v {
                        1.0
                    } else if pooled[j] == v {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        u
    };
    let mut idx: Vec<usize> = (0..n1).collect();
    let mean = (n1 * b.len()) as f64 / 2.0;
    let observed = (u_of(&idx) - mean).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    loop {
        total += 1;
        if (u_of(&idx) - mean).abs() >= observed - 1e-9 {
            hits += 1;
        }
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
    hits as f64 / total as f64
}

fn ranksum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut pairs = 0;
    for n1 in 1..=7 {
        for n2 in 1..=7 {
            let a: Vec<f64> = (0..n1).map(|_| rng.random_range(0..20) as f64 + 2.0).collect();
            let b: Vec<f64> = (0..n2).map(|_| rng.random_range(0..20) as f64).collect();
            let (got, want) = (ranksum_test(&a, &b).unwrap().p, brute_force_p(&a, &b));
            ensure!((got - want).abs() < 1e-12, "{n1}+{n2}: p {got} vs enumeration {want}");
            pairs += 1;
        }
    }
    let mut gap: f64 = 0.0;
    for n1 in 8..=10 {
        for n2 in 8..=10 {
            for shift in 0..6 {
                let a: Vec<f64> = (0..n1)
                    .map(|_| rng.random_range(0.0..1.0) + shift as f64 * 0.1)
                    .collect();
                let b: Vec<f64> = (0..n2).map(|_| rng.random_range(0.0..1.0)).collect();
                gap = gap.max((ranksum_normal(&a, &b).unwrap().p - ranksum_exact(&a, &b).unwrap().p).abs());
            }
        }
    }
    ensure!(gap < 0.02, "normal approximation off by {gap:.4}");
    let same: Vec<f64> = (0..9).map(|i| (i * 7 % 5) as f64).collect();
    let p = ranksum_test(&same, &same).unwrap().p;
    ensure!(p >= 0.99, "identical samples p {p}");
    Ok(format!(
        "{pairs} size pairs exact, normal gap {gap:.4}, identical p {p:.3}"
    ))
}

const PIPELINE: &str = r#"
[paths]
corpus = "corpus"
output = "out"

[network]
preset = "toy"

[train]
max_epochs = 5
batch_size = 8

[toy]
utterances = 3
frames = 60
"#;

fn run_pipeline(dir: &Path) -> Result<(), String> {
    std::fs::write(dir.join("p.toml"), PIPELINE).unwrap();
    let stages: [&[&str]; 8] = [
        &["toy-corpus"],
        &["split"],
        &["extract"],
        &["train"],
        &["predict"],
        &["synth", "--engine", "export"],
        &["synth", "--engine", "griffinlim"],
        &["eval"],
    ];
    for args in stages {
        let out = Command::new(env!("CARGO_BIN_EXE_uti2speech"))
            .args(args)
            .arg("--config")
            .arg(dir.join("p.toml"))
            .output()
            .unwrap();
        ensure!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        );
    }
    Ok(())
}

fn end_to_end_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let t0 = Instant::now();
    run_pipeline(a.path())?;
    run_pipeline(b.path())?;
    let secs = t0.elapsed().as_secs_f64();
    let mut compared = 0;
    for sub in ["model", "synth"] {
        let mut names: Vec<_> = std::fs::read_dir(a.path().join("out").join(sub))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for name in names {
            let rel = Path::new("out").join(sub).join(&name);
            let (x, y) = (
                std::fs::read(a.path().join(&rel)).unwrap(),
                std::fs::read(b.path().join(&rel)),
            );
            ensure!(y.as_ref().is_ok_and(|y| *y == x), "{} differs", rel.display());
            compared += 1;
        }
    }
    ensure!(compared >= 7, "only {compared} artifacts");
    ensure!(secs < 300.0, "two runs took {secs:.0} s");
    Ok(format!(
        "{compared} model/conditioning/WAV files identical, two runs in {secs:.1} s"
    ))
}

fn dominant_bin(x: &[f64], n_fft: usize) -> usize {
    let fft = FftPlanner::new().plan_fft_forward(n_fft);
    let mut acc = vec![0.0; n_fft / 2 + 1];
    for start in (0..x.len().saturating_sub(n_fft)).step_by(n_fft / 2) {
        let mut buf: Vec<Complex64> = x[start..start + n_fft]
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf) {
            *a += c.norm_sqr();
        }
    }
    (0..acc.len()).max_by(|&a, &b| acc[a].total_cmp(&acc[b])).unwrap()
}

fn griffin_lim_check() -> Outcome {
    let mel = mel_spectrogram(
        &wav(sine(1000.0, 22050, 0.5)),
        &StftConfig::default(),
        &MelFilterbank::standard(),
    )
    .unwrap();
    let out = griffin_lim(&mel, &GriffinLimConfig::default()).map_err(|e| e.to_string())?;
    let expect = (1000.0f64 * 1024.0 / SAMPLE_RATE as f64).round() as i64;
    let got = dominant_bin(&out.wav.samples, 1024) as i64;
    ensure!((got - expect).abs() <= 1, "dominant bin {got}, expected {expect}");
    ensure!(out.residuals.len() == 60, "{} iterations", out.residuals.len());
    for (i, w) in out.residuals.windows(2).enumerate() {
        ensure!(
            w[1] <= w[0] + 1e-6,
            "residual rose at iteration {}: {} -> {}",
            i + 2,
            w[0],
            w[1]
        );
    }
    Ok(format!(
        "bin {got} (expected {expect}), residual {:.3} -> {:.3}",
        out.residuals[0], out.residuals[59]
    ))
}

fn main() {
    let checks: [Check; 11] = [
        ("frame-rate arithmetic", frame_rate),
        ("mel pipeline", mel_pipeline),
        ("cnn gradients and overfit", cnn_gradients),
        ("early stopping", early_stopping),
        ("continuous vocoder round trip", vocoder_round_trip),
        ("contf0 and mvf", f0_and_mvf),
        ("mcd anchors", mcd_anchors),
        ("savitzky-golay", savgol),
        ("ranksum", ranksum),
        ("end-to-end determinism", end_to_end_determinism),
        ("griffin-lim", griffin_lim_check),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
