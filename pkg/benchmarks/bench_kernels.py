"""Micro-benchmark: compiled kernels vs the pure-numpy fallback.

Times the three hot paths (batched answer distributions, the parameter
shift loss gradient, and the Jacobi eigensolver) for every backend that
``orderfx.kernels.implementations()`` exposes. With ORDERFX_BACKEND=numpy
only the fallback appears and no speedup line is printed.

Run: python3 benchmarks/bench_kernels.py --n 3 --repeats 50
"""

import argparse
import time

import numpy as np

from orderfx.ansatz import AnsatzConfig, random_observable_params
from orderfx.datasets import all_orders
from orderfx.kernels import BACKEND, implementations


def build_inputs(n: int, n_qubits: int | None, rng: np.random.Generator):
    cfg = AnsatzConfig(n_observables=n, n_qubits=n_qubits)
    model = np.stack(
        [random_observable_params(cfg, rng) for _ in range(n)])
    orders = all_orders(n)
    order_thetas = np.stack(
        [model[np.asarray(order) - 1] for order in orders])
    slots = np.zeros((len(orders), n), dtype=np.int64)
    for i, order in enumerate(orders):
        for k, q in enumerate(order):
            slots[i, q - 1] = k
    dim = 2 ** cfg.n_qubits
    targets = np.full((len(orders), dim), 1.0 / dim)
    herm = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    herm = np.ascontiguousarray(herm + herm.conj().T)
    return cfg, order_thetas, slots, targets, herm


def time_calls(fn, repeats: int) -> float:
    fn()  # warmup (and JIT compile for the numba backend)
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) * 1000.0 / repeats


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=3,
                        help="number of observables (default 3)")
    parser.add_argument("--qubits", type=int, default=None,
                        help="qubit count (default: one per observable)")
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    cfg, thetas, slots, targets, herm = build_inputs(
        args.n, args.qubits, rng)
    nq = cfg.n_qubits
    print(f"active backend: {BACKEND}; {len(thetas)} orders, "
          f"{nq} qubits, {args.repeats} repeats")

    # The raw grad and Jacobi kernels work in place, so every call gets a
    # fresh copy; the copy cost is shared by both backends.
    cases = {
        "batch_probs": lambda impl: impl["batch_probs"](thetas, nq),
        "grad_loss": lambda impl: impl["grad_loss"](
            thetas.copy(), slots, targets, nq),
        "jacobi_eigvals": lambda impl: impl["jacobi_eigvals"](
            herm.copy(), 1e-12, 100),
    }
    timings: dict[str, dict[str, float]] = {name: {} for name in cases}
    impls = implementations()
    for backend, impl in impls.items():
        for name, call in cases.items():
            timings[name][backend] = time_calls(
                lambda call=call, impl=impl: call(impl), args.repeats)

    for name, per_backend in timings.items():
        parts = [f"{backend} {ms:8.3f} ms"
                 for backend, ms in sorted(per_backend.items())]
        line = f"{name:<16}" + "   ".join(parts)
        if "numba" in per_backend and "numpy" in per_backend:
            line += (f"   speedup "
                     f"{per_backend['numpy'] / per_backend['numba']:.1f}x")
        print(line)


if __name__ == "__main__":
    main()
