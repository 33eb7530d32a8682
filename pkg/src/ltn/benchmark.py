"""Timing comparison of the assembly backends (numba jit vs pure numpy)."""

from __future__ import annotations

import time

import numpy as np

from .assembly_kernels import HAVE_NUMBA, assemble_pair_matrix
from .geometry import build_meshes, standard_layout
from .kernels import KernelSpec


def time_backend(nodes, kernel: KernelSpec, backend: str, repeats: int) -> tuple:
    # warm-up call compiles the jit path and pre-touches caches
    A = assemble_pair_matrix(nodes, kernel.epsilon, kernel.scale,
                             kernel.is_singular, backend=backend)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        assemble_pair_matrix(nodes, kernel.epsilon, kernel.scale,
                             kernel.is_singular, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, A


def run_benchmark(kernel: str = "singular", epsilon: float = 0.065,
                  h: float = 2.0 ** -7, repeats: int = 3) -> dict:
    spec = KernelSpec(kernel, epsilon)
    mesh_n, _ = build_meshes(standard_layout(epsilon), h)
    nodes = mesh_n.nodes
    lines = [f"assembly benchmark: kernel={kernel} eps={epsilon} h={h} "
             f"({mesh_n.n_elements} elements)"]
    results = {"lines": lines, "times": {}}
    t_np, A_np = time_backend(nodes, spec, "numpy", repeats)
    results["times"]["numpy"] = t_np
    lines.append(f"  numpy : {t_np * 1e3:8.2f} ms")
    if HAVE_NUMBA:
        t_nb, A_nb = time_backend(nodes, spec, "numba", repeats)
        results["times"]["numba"] = t_nb
        rel = np.max(np.abs(A_nb - A_np)) / np.max(np.abs(A_np))
        lines.append(f"  numba : {t_nb * 1e3:8.2f} ms   (speedup {t_np / t_nb:.1f}x, "
                     f"max rel diff {rel:.2e})")
        results["max_rel_diff"] = float(rel)
    else:
        lines.append("  numba : not available")
    return results
