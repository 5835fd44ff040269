"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 3]

Both backends are imported directly, so one run compares them side by side.
Outputs must agree; the script exits non-zero if they do not.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from synth import make_corpus  # noqa: E402
from weibosent import _purepy  # noqa: E402

try:
    from weibosent import _speedups
except ImportError:
    _speedups = None


def best_of(fn, repeat):
    times = []
    result = None
    for _ in range(repeat):
        started = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - started)
    return min(times), result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200_000, help="posts in the synthetic corpus")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    if _speedups is None:
        print("compiled extension not built; only the Python backend is available")
    records = make_corpus(args.n, seed=1).records
    contents = [r.content for r in records]
    skip = [random.Random(i).random() < 0.2 for i in range(len(contents))]

    cases = {
        "normalize_content": lambda m: [m.normalize_content(t) for t in contents],
        "char_counts": lambda m: m.char_counts(contents, False),
        "group_duplicates": lambda m: m.group_duplicates(contents, skip),
    }
    backends = [("python", _purepy)] + ([("cython", _speedups)] if _speedups else [])

    print(f"{len(contents)} posts, best of {args.repeat}")
    print(f"{'kernel':<20}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    mismatch = False
    for case, fn in cases.items():
        timings, outputs = [], []
        for _, mod in backends:
            t, out = best_of(lambda: fn(mod), args.repeat)
            timings.append(t)
            outputs.append(out)
        if len(outputs) == 2 and outputs[0] != outputs[1]:
            mismatch = True
            print(f"{case}: backends disagree", file=sys.stderr)
        speed = f"{timings[0] / timings[1]:.1f}x" if len(timings) == 2 else "-"
        print(f"{case:<20}" + "".join(f"{t:>11.3f}s" for t in timings) + f"{speed:>10}")
    return 1 if mismatch else 0


if __name__ == "__main__":
    sys.exit(main())
