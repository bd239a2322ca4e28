#!/usr/bin/env python3
"""Minimal vocoder stand-in for tests and demos.

Implements the same command contract as a real vocoder wrapper:

    toyworld.py analyze <in.wav> <out.svcf>
    toyworld.py synth   <in.svcf> <out.wav>

Analysis: autocorrelation F0 (70-1000 Hz) plus a smoothed power-spectrum
envelope per 5 ms frame. Synthesis: phase-continuous harmonics with shaped
noise. Good enough to round-trip pitch and broad spectral shape; not meant
to sound pretty.
"""

import argparse
import struct
import sys
import wave

import numpy as np

RATE = 16000
SHIFT = 80          # 5 ms
WIN = 400           # 25 ms
NFFT = 1024
BINS = NFFT // 2 + 1
F0_MIN, F0_MAX = 70.0, 1000.0
MAGIC = b"SVCF"
VERSION = 1


def read_wav(path):
    with wave.open(str(path), "rb") as w:
        if w.getframerate() != RATE or w.getnchannels() != 1 or w.getsampwidth() != 2:
            sys.exit(f"{path}: need {RATE} Hz mono 16-bit, got "
                     f"{w.getframerate()} Hz {w.getnchannels()}ch "
                     f"{8 * w.getsampwidth()}-bit")
        data = w.readframes(w.getnframes())
    return np.frombuffer(data, dtype="<i2").astype(np.float64) / 32768.0


def write_wav(path, samples):
    q = np.clip(samples, -1.0, 1.0)
    q = np.rint(q * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(RATE)
        w.writeframes(q.tobytes())


def write_svcf(path, f0, sp, ap):
    n = len(f0)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<6I", VERSION, RATE, SHIFT * 1_000_000 // RATE,
                            n, BINS, BINS))
        rows = np.hstack([f0.reshape(-1, 1), sp, ap]).astype("<f4")
        f.write(rows.tobytes())


def read_svcf(path):
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            sys.exit(f"{path}: not a feature file")
        version, rate, shift_us, n, sp_dim, ap_dim = struct.unpack("<6I", f.read(24))
        if version != VERSION or sp_dim != BINS or ap_dim != BINS:
            sys.exit(f"{path}: unsupported layout")
        if rate != RATE or shift_us != SHIFT * 1_000_000 // RATE:
            sys.exit(f"{path}: expected {RATE} Hz / 5 ms frames")
        rows = np.frombuffer(f.read(n * (1 + 2 * BINS) * 4), dtype="<f4")
    rows = rows.reshape(n, 1 + 2 * BINS).astype(np.float64)
    return rows[:, 0], rows[:, 1:1 + BINS], rows[:, 1 + BINS:]


def frame_f0(frame):
    x = frame - frame.mean()
    if np.sqrt(np.mean(x ** 2)) < 1e-3:
        return 0.0
    r = np.correlate(x, x, mode="full")[len(x) - 1:]
    if r[0] <= 0:
        return 0.0
    r /= r[0]
    lo = int(RATE / F0_MAX)
    hi = min(int(RATE / F0_MIN) + 1, len(r) - 1)
    tau = lo + int(np.argmax(r[lo:hi]))
    if r[tau] < 0.30:
        return 0.0
    # Parabolic peak refinement.
    if 1 <= tau < len(r) - 1:
        a, b, c = r[tau - 1], r[tau], r[tau + 1]
        denom = a - 2 * b + c
        if abs(denom) > 1e-12:
            tau = tau + 0.5 * (a - c) / denom
    f0 = RATE / tau
    return float(np.clip(f0, F0_MIN, F0_MAX))


def analyze(in_wav, out_svcf):
    x = read_wav(in_wav)
    n_frames = max(1, int(np.ceil(len(x) / SHIFT)))
    pad = np.concatenate([np.zeros(WIN // 2), x, np.zeros(WIN)])
    window = np.hanning(WIN)
    kernel = np.ones(17) / 17.0

    f0 = np.zeros(n_frames)
    sp = np.zeros((n_frames, BINS))
    ap = np.zeros((n_frames, BINS))
    for t in range(n_frames):
        frame = pad[t * SHIFT:t * SHIFT + WIN]
        f0[t] = frame_f0(frame)
        power = np.abs(np.fft.rfft(frame * window, NFFT)) ** 2 / WIN
        env = np.convolve(power, kernel, mode="same")
        sp[t] = np.maximum(env, 1e-9)
        ap[t] = 0.1 if f0[t] > 0 else 0.9
    write_svcf(out_svcf, f0, sp, ap)


def synth(in_svcf, out_wav):
    f0, sp, ap = read_svcf(in_svcf)
    n_frames = len(f0)
    n_samples = n_frames * SHIFT
    out = np.zeros(n_samples)
    rng = np.random.default_rng(0)
    bin_hz = RATE / NFFT

    max_harm = int(0.475 * RATE / F0_MIN)
    phase = np.zeros(max_harm)
    for t in range(n_frames):
        sl = slice(t * SHIFT, (t + 1) * SHIFT)
        periodic = np.sqrt(np.maximum(sp[t] * (1.0 - ap[t]), 0.0))
        if f0[t] > 0:
            k = np.arange(1, int(0.475 * RATE / f0[t]) + 1)
            bins = np.minimum(np.rint(k * f0[t] / bin_hz).astype(int), BINS - 1)
            amp = periodic[bins]
            step = 2 * np.pi * k * f0[t] / RATE
            ph = phase[:len(k)] + np.outer(np.arange(1, SHIFT + 1), step)
            out[sl] += (np.sin(ph) * amp).sum(axis=1)
            phase[:len(k)] = np.mod(ph[-1], 2 * np.pi)
            phase[len(k):] = 0.0
        else:
            phase[:] = 0.0
        noise_amp = np.sqrt(np.mean(sp[t] * ap[t]))
        out[sl] += rng.standard_normal(SHIFT) * noise_amp

    peak = np.max(np.abs(out))
    if peak > 0.9:
        out *= 0.9 / peak
    write_wav(out_wav, out)


def main():
    p = argparse.ArgumentParser(description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)
    a = sub.add_parser("analyze")
    a.add_argument("in_wav")
    a.add_argument("out_svcf")
    s = sub.add_parser("synth")
    s.add_argument("in_svcf")
    s.add_argument("out_wav")
    args = p.parse_args()
    if args.cmd == "analyze":
        analyze(args.in_wav, args.out_svcf)
    else:
        synth(args.in_svcf, args.out_wav)


if __name__ == "__main__":
    main()
