"""Compiled vs numpy kernel timings, plus forecast+classify latency on each backend.

    python benchmarks/bench_kernels.py [--repeats N] [--rows N] [--width N]

The latency half re-imports the package under ``MOTIONAUTH_BACKEND`` in a
subprocess so the whole model stack runs on one backend at a time.
"""

import argparse
import json
import os
import subprocess
import sys

from motionauth.eval.bench import kernel_benchmark

LATENCY_SNIPPET = """
import json
from motionauth import kernels
from motionauth.authenticator import AuthModel, ClassifierConfig
from motionauth.eval.bench import timing_benchmark
from motionauth.forecaster import ForecasterModel, ForecastSpec
from motionauth.nn import ModelConfig
cfg = ModelConfig(d_model=64, n_head=4, d_q=16, d_k=16, d_v=16, d_hidden=128,
                  n_encoder_layers=1, n_decoder_layers=1)
spec = ForecastSpec.make(45, 30)
auth = AuthModel("bench", ClassifierConfig(variant="tf", input_length=75, d_model=64, n_head=4,
                                           d_k=16, d_v=16, d_hidden=128))
s = timing_benchmark(ForecasterModel(cfg), auth, spec, repetitions=100)
print(json.dumps({"backend": kernels.BACKEND, "median_ms": s.median_ms, "p95_ms": s.p95_ms}))
"""


def latency(backend):
    env = {**os.environ, "MOTIONAUTH_BACKEND": backend}
    out = subprocess.run([sys.executable, "-c", LATENCY_SNIPPET], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--rows", type=int, default=4096)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--json", action="store_true", help="print raw JSON")
    args = p.parse_args(argv)

    kern = kernel_benchmark(args.repeats, args.rows, args.width)
    lat = {b: latency(b) for b in kern}
    if args.json:
        print(json.dumps({"kernels": kern, "latency": lat}, indent=2))
        return 0

    names = list(next(iter(kern.values())))
    backends = list(kern)
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for n in names:
        row = f"{n:<22}" + "".join(f"{kern[b][n]:>10.3f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{kern['python'][n] / kern['cython'][n]:>11.2f}x"
        print(row)
    print()
    for b, r in lat.items():
        print(f"forecast+classify ({b}): median {r['median_ms']:.2f} ms, p95 {r['p95_ms']:.2f} ms")
    return 0


if __name__ == "__main__":
    sys.exit(main())
