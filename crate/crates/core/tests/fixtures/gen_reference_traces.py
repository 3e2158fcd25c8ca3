"""Regenerate reference_traces.json from river.

Usage: python3 gen_reference_traces.py > reference_traces.json

The corpus holds 100 binary error streams (25 each of constant, step, ramp and
noisy Bernoulli). Each detector is run with its default parameters over every
stream, with a fresh instance per stream, and every index at which
``drift_detected`` is true is recorded. KSWIN uses seed 42.
"""

import json
import random

import river
from river import drift
from river.drift import binary

KSWIN_SEED = 42


def corpus():
    rng = random.Random(20240131)
    streams = []
    for i in range(25):
        n = rng.randint(1500, 3000)
        v = i % 2 if i < 20 else 0
        streams.append(("constant", [v] * n))
    for _ in range(25):
        n = rng.randint(1500, 3000)
        cut = rng.randint(300, n - 300)
        p0 = rng.uniform(0.0, 0.3)
        p1 = rng.uniform(0.3, 0.9)
        s = [int(rng.random() < (p0 if t < cut else p1)) for t in range(n)]
        streams.append(("step", s))
    for _ in range(25):
        n = rng.randint(1500, 3000)
        start = rng.randint(200, n // 2)
        width = rng.randint(100, 800)
        p0 = rng.uniform(0.0, 0.3)
        p1 = rng.uniform(0.4, 0.9)
        s = []
        for t in range(n):
            frac = min(max((t - start) / width, 0.0), 1.0)
            s.append(int(rng.random() < p0 + (p1 - p0) * frac))
        streams.append(("ramp", s))
    for _ in range(25):
        n = rng.randint(1500, 3000)
        p = rng.uniform(0.05, 0.5)
        s = [int(rng.random() < p) for _ in range(n)]
        streams.append(("noisy", s))
    return streams


DETECTORS = {
    "adwin": lambda: drift.ADWIN(),
    "ddm": lambda: binary.DDM(),
    "eddm": lambda: binary.EDDM(),
    "hddm_a": lambda: binary.HDDM_A(),
    "hddm_w": lambda: binary.HDDM_W(),
    "kswin": lambda: drift.KSWIN(seed=KSWIN_SEED),
    "page_hinkley": lambda: drift.PageHinkley(),
}


def trace(make, stream):
    det = make()
    out = []
    for i, x in enumerate(stream):
        det.update(x)
        if det.drift_detected:
            out.append(i)
    return out


def main():
    streams = corpus()
    doc = {
        "river_version": river.__version__,
        "kswin_seed": KSWIN_SEED,
        "streams": [],
    }
    for kind, s in streams:
        doc["streams"].append(
            {
                "kind": kind,
                "bits": "".join(str(b) for b in s),
                "traces": {name: trace(make, s) for name, make in DETECTORS.items()},
            }
        )
    print(json.dumps(doc))


if __name__ == "__main__":
    main()
