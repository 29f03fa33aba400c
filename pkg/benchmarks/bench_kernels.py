"""Time the compiled and numpy kernels on the package's real workloads.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from dielens import _kernels_py
from dielens.lens import FeedModel, attach_matching, element_weights, plan_lens
from dielens.tmm import stack_from_plan
from dielens.xformer import MediumPair, synth_binomial

try:
    from dielens import _kernels_ext
except ImportError:
    _kernels_ext = None


def workloads():
    media = MediumPair(1.0, 2.738)
    sections = synth_binomial(media, 3, 80e9)
    eps, thick = stack_from_plan(sections)._arrays()
    freqs = np.linspace(50e9, 110e9, 6001)
    plan = attach_matching(plan_lens(), sections)
    x, y, _, _ = plan.arrays()
    w = element_weights(plan, FeedModel(), 80e9)
    th, ph = np.meshgrid(np.linspace(0, np.pi / 2, 91), np.linspace(0, 2 * np.pi, 181), indexing="ij")
    ux, uy = (np.sin(th) * np.cos(ph)).ravel(), (np.sin(th) * np.sin(ph)).ravel()
    k = 2 * np.pi * 80e9 / 299792458.0 * 1e-3
    return {
        "impedance_gamma (3 layers x 6001 f)": lambda m: m.impedance_gamma(eps, thick, 1.0, 2.738, freqs),
        "abcd_sweep (3 layers x 6001 f)": lambda m: m.abcd_sweep(eps, thick, 1.0, 2.738, freqs),
        f"aperture_field ({len(x)} elements x {ux.size} dirs)": lambda m: m.aperture_field(x, y, w, ux, uy, k),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"numpy": _kernels_py}
    if _kernels_ext is not None:
        backends["cython"] = _kernels_ext
    else:
        print("compiled extension not built; timing numpy only")
    print(f"{'kernel':<48}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in workloads().items():
        times = {b: min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for b, m in backends.items()}
        row = f"{name:<48}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
        if len(times) > 1:
            row += f"{times['numpy'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
