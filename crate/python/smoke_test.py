"""Smoke test for the pyuti2speech extension.

Build the module and put it on the path, e.g.

    cargo build --release -p uti2speech-py --features extension-module
    cp target/release/libpyuti2speech.so python/pyuti2speech.so
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import pyuti2speech as u  # noqa: E402


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        ids = u.write_toy_corpus(tmp, 3, frames=30)
        check(ids == ["toy000", "toy001", "toy002"], ids)
        split = u.split_dataset(ids, seed=0)
        check(sorted(split["train"] + split["val"] + split["test"]) == ids, split)

        wav = u.Waveform.load(os.path.join(tmp, "toy000.wav"))
        check(wav.sample_rate == u.SAMPLE_RATE and len(wav) == 30 * u.HOP, len(wav))
        frames = u.read_ultrasound(os.path.join(tmp, "toy000.bin"), os.path.join(tmp, "toy000.meta"))
        t = u.align_frames(len(frames), len(wav))
        check(t == 30 and len(frames[0]) == 64 * 128, (t, len(frames[0])))

        mel = u.MelSpectrogram.from_wav(wav)
        check(mel.n_frames == len(wav) // u.HOP + 1 and mel.n_mels == u.N_MELS, mel.n_frames)
        targets = mel.values[:t]

        net = u.Cnn(u.N_MELS, preset="toy", seed=1, dropout=0.0)
        x = [net.fit_input(f) for f in frames[:t]]
        check(len(x[0]) == net.input_shape[0] * net.input_shape[1], net.input_shape)
        try:
            net.predict(x)
            raise AssertionError("untrained model predicted")
        except u.Uti2SpeechError:
            pass
        log = net.train(x, targets, x, targets, max_epochs=3, batch_size=8)
        check(1 <= len(log) <= 3 and all(math.isfinite(v) for _, a, b in log for v in (a, b)), log)
        pred = net.predict(x)
        check(len(pred) == t and len(pred[0]) == u.N_MELS, len(pred))

        path = os.path.join(tmp, "net.cnn")
        net.save(path)
        # weights are stored exactly; target statistics at f32 precision
        again = u.Cnn.load(path).predict(x)
        worst = max(abs(a - b) / max(1.0, abs(a)) for ra, rb in zip(pred, again) for a, b in zip(ra, rb))
        check(worst < 1e-5, f"model file round trip: {worst}")

        cond = u.prepare_conditioning(u.MelSpectrogram(pred))
        check(cond.hop == 256, cond.hop)
        out, residuals = u.griffin_lim(cond, iterations=5)
        check(len(residuals) == 5 and out.rms() > 0.0, residuals)
        d, n = u.mcd_waveforms(wav, wav)
        check(d == 0.0 and n == t + 1, (d, n))

        cp = u.ContParams.analyze(wav)
        check(len(cp) == len(mel.values) and len(cp.to_matrix()[0]) == cp.order + 3, cp.order)
        check(len(cp.synthesize(seed=0)) > 0, "vocoder output")

    _, p, exact = u.ranksum_test([1.0, 2.0], [3.0, 4.0])
    check(exact and abs(p - 1.0 / 3.0) < 1e-12, p)
    report = u.mushra_report("l1,a,s1,10\nl1,b,s1,90\n")
    check("a\tb\t0\t1.000000\texact\tfalse" in report, report)
    print("pyuti2speech smoke test passed")


if __name__ == "__main__":
    main()
