"""Element-pair quadrature kernels for the nonlocal stiffness matrix.

The matrix entry for basis functions phi_i, phi_j is

    A[i, j] = int int (phi_i(y) - phi_i(x)) (phi_j(y) - phi_j(x)) gamma(x, y) dy dx

over the meshed interval squared.  Everything is reduced to the relative
coordinate s = y - x:  for each unordered element pair the s-range splits at
the points where the x-integration limits switch (and at the horizon cutoff),
and on each resulting piece the inner x-integral of the basis products is a
polynomial, integrated exactly by a 2-point Gauss rule.  For the integrable
kernel the s-integrand is then itself polynomial (4-point Gauss, exact).  For
the singular kernel the s-integrand is polynomial divided by s; pieces that
touch s = 0 only arise for pairs sharing a node, where the inner integral
vanishes linearly in s and cancels the pole, so plain Gauss is again exact;
pieces bounded away from zero use geometrically graded panels toward the
singularity so the 1/s weight is resolved to machine precision.

Same-element contributions need no quadrature at all: piecewise-linear
differences within one element are slope * s, giving closed-form moments.

This is the hot loop of the package.  Two interchangeable implementations
are provided: a numba-compiled element-pair loop and a vectorized pure-numpy
path.  Selection: LTN_BACKEND=numba|numpy in the environment, default is
numba when importable.  `ltn benchmark` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap(args[0]) if args and callable(args[0]) else wrap


# Quadrature sizes: exactness needs 2 x-points and 4 s-points; the singular
# path gets 10 points on 6 graded panels so the 1/s tail is machine-exact.
_XN, _XW = np.polynomial.legendre.leggauss(2)
_SN_INT, _SW_INT = np.polynomial.legendre.leggauss(4)
_SN_SING, _SW_SING = np.polynomial.legendre.leggauss(10)
_K_SING = 6
_TINY = 1e-14


class AssemblyError(RuntimeError):
    """Raised when the pair quadrature produces a non-finite entry."""


def resolve_backend(backend=None) -> str:
    choice = backend or os.environ.get("LTN_BACKEND", "auto")
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"unknown assembly backend {choice!r}")
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return choice


def _same_element_weight(L: float, eps: float, scale: float, singular: bool) -> float:
    """Closed-form gamma-weighted second moment over one element pair."""
    if singular:
        moment = L**3 / 3.0 if L <= eps else eps**3 / 3.0 + (L - eps) * eps**2
    else:
        moment = L**4 / 6.0 if L <= eps else eps**4 / 6.0 + 2.0 * (L - eps) * eps**3 / 3.0
    return scale * moment / L**2


@njit(cache=True)
def _assemble_loop(nodes, eps, scale, singular, sn_i, sw_i, sn_s, sw_s, xn, xw, ksing):
    n = nodes.size - 1
    A = np.zeros((2 * n, 2 * n))
    # same-element blocks: closed form
    for e in range(n):
        L = nodes[e + 1] - nodes[e]
        if singular:
            moment = L**3 / 3.0 if L <= eps else eps**3 / 3.0 + (L - eps) * eps**2
        else:
            moment = L**4 / 6.0 if L <= eps else eps**4 / 6.0 + 2.0 * (L - eps) * eps**3 / 3.0
        w = scale * moment / (L * L)
        A[2 * e, 2 * e] += w
        A[2 * e + 1, 2 * e + 1] += w
        A[2 * e, 2 * e + 1] -= w
        A[2 * e + 1, 2 * e] -= w

    sn = sn_s if singular else sn_i
    sw = sw_s if singular else sw_i
    npan = ksing if singular else 1
    block = np.zeros((4, 4))
    d = np.zeros(4)
    bp = np.zeros(4)
    for i in range(n):
        aE = nodes[i]
        bE = nodes[i + 1]
        hE = bE - aE
        for j in range(i + 1, n):
            aF = nodes[j]
            bF = nodes[j + 1]
            hF = bF - aF
            slo = aF - bE
            if slo >= eps:
                break
            shi = min(bF - aE, eps)
            bp[0] = slo
            b1 = min(aF - aE, shi)
            b2 = min(bF - bE, shi)
            bp[1] = min(b1, b2)
            bp[2] = max(b1, b2)
            bp[3] = shi
            block[:, :] = 0.0
            for p in range(3):
                u = bp[p]
                v = bp[p + 1]
                if v - u <= _TINY * eps:
                    continue
                for k in range(npan):
                    if singular and u > _TINY * eps:
                        r = (v / u) ** (1.0 / npan)
                        pa = u * r**k
                        pb = u * r ** (k + 1)
                    else:
                        pa = u + (v - u) * k / npan
                        pb = u + (v - u) * (k + 1) / npan
                    mid = 0.5 * (pa + pb)
                    half = 0.5 * (pb - pa)
                    for g in range(sn.size):
                        s = mid + half * sn[g]
                        swt = half * sw[g]
                        ker = scale / s if singular else scale
                        xlo = max(aE, aF - s)
                        xhi = min(bE, bF - s)
                        wdt = xhi - xlo
                        if wdt <= 0.0:
                            continue
                        xm = 0.5 * (xlo + xhi)
                        xh = 0.5 * wdt
                        for q in range(2):
                            x = xm + xh * xn[q]
                            y = x + s
                            c = 2.0 * swt * ker * xh * xw[q]
                            d[0] = -(bE - x) / hE
                            d[1] = -(x - aE) / hE
                            d[2] = (bF - y) / hF
                            d[3] = (y - aF) / hF
                            for a in range(4):
                                ca = c * d[a]
                                for b in range(4):
                                    block[a, b] += ca * d[b]
            for a in range(4):
                ga = 2 * i + a if a < 2 else 2 * j + a - 2
                for b in range(4):
                    gb = 2 * i + b if b < 2 else 2 * j + b - 2
                    A[ga, gb] += block[a, b]
    return A


def _assemble_numpy(nodes, eps, scale, singular):
    n = nodes.size - 1
    A = np.zeros((2 * n, 2 * n))

    sizes = np.diff(nodes)
    w_same = np.array([_same_element_weight(L, eps, scale, singular) for L in sizes])
    idx = 2 * np.arange(n)
    A[idx, idx] += w_same
    A[idx + 1, idx + 1] += w_same
    A[idx, idx + 1] -= w_same
    A[idx + 1, idx] -= w_same

    # unordered cross pairs (i < j) with nonzero horizon intersection
    jmax = np.searchsorted(nodes, nodes[1:-1] + eps, side="left")
    i_list = []
    j_list = []
    for i in range(n - 1):
        hi = min(int(jmax[i]), n)
        if hi > i + 1:
            i_list.append(np.full(hi - i - 1, i))
            j_list.append(np.arange(i + 1, hi))
    if not i_list:
        return A
    I = np.concatenate(i_list)
    J = np.concatenate(j_list)
    aE, bE = nodes[I], nodes[I + 1]
    aF, bF = nodes[J], nodes[J + 1]
    hE, hF = bE - aE, bF - aF

    slo = aF - bE
    shi = np.minimum(bF - aE, eps)
    m1 = np.minimum(np.minimum(aF - aE, bF - bE), shi)
    m2 = np.minimum(np.maximum(aF - aE, bF - bE), shi)
    U = np.stack([slo, m1, m2], axis=1)                      # (P, 3)
    V = np.stack([m1, m2, shi], axis=1)
    valid = (V - U) > _TINY * eps

    if singular:
        sn, sw, K = _SN_SING, _SW_SING, _K_SING
    else:
        sn, sw, K = _SN_INT, _SW_INT, 1
    G = sn.size

    t = np.arange(K + 1) / K
    Usafe = np.where(U > _TINY * eps, U, 1.0)
    geo = Usafe[..., None] * (V / Usafe)[..., None] ** t      # (P, 3, K+1)
    uni = U[..., None] + (V - U)[..., None] * t
    edges = np.where((U > _TINY * eps)[..., None], geo, uni) if singular else uni

    pa, pb = edges[..., :-1], edges[..., 1:]                  # (P, 3, K)
    mid, half = 0.5 * (pa + pb), 0.5 * (pb - pa)
    S = mid[..., None] + half[..., None] * sn                 # (P, 3, K, G)
    SW = (half[..., None] * sw) * valid[..., None, None]
    ker = scale / np.where(S > 0, S, 1.0) if singular else np.full_like(S, scale)

    sh = (-1, 1, 1, 1)
    xlo = np.maximum(aE.reshape(sh), aF.reshape(sh) - S)
    xhi = np.minimum(bE.reshape(sh), bF.reshape(sh) - S)
    wdt = np.maximum(xhi - xlo, 0.0)
    X = 0.5 * (xlo + xhi)[..., None] + 0.5 * wdt[..., None] * _XN   # (P,3,K,G,2)
    Y = X + S[..., None]
    W = (2.0 * SW * ker * 0.5 * wdt)[..., None] * _XW

    sh = (-1, 1, 1, 1, 1)
    D = np.stack([-(bE.reshape(sh) - X) / hE.reshape(sh),
                  -(X - aE.reshape(sh)) / hE.reshape(sh),
                  (bF.reshape(sh) - Y) / hF.reshape(sh),
                  (Y - aF.reshape(sh)) / hF.reshape(sh)], axis=-1)  # (P,3,K,G,2,4)
    block = np.einsum("pskqxa,pskqxb,pskqx->pab", D, D, W, optimize=True)

    dofs = np.stack([2 * I, 2 * I + 1, 2 * J, 2 * J + 1], axis=1)   # (P, 4)
    rows = np.broadcast_to(dofs[:, :, None], block.shape)
    cols = np.broadcast_to(dofs[:, None, :], block.shape)
    np.add.at(A, (rows.ravel(), cols.ravel()), block.ravel())
    return A


def assemble_pair_matrix(nodes, eps: float, scale: float, singular: bool,
                         backend=None) -> np.ndarray:
    """Dense nonlocal stiffness over all DG dofs (2 per element)."""
    nodes = np.ascontiguousarray(nodes, dtype=float)
    which = resolve_backend(backend)
    if which == "numba":
        A = _assemble_loop(nodes, float(eps), float(scale), bool(singular),
                           _SN_INT, _SW_INT, _SN_SING, _SW_SING, _XN, _XW, _K_SING)
    else:
        A = _assemble_numpy(nodes, float(eps), float(scale), bool(singular))
    if not np.all(np.isfinite(A)):
        raise AssemblyError("pair quadrature produced non-finite entries "
                            "(singular point sampled?)")
    return A
