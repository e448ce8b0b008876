"""Periodized Daubechies wavelet transforms.

The scaling filter is constructed from the binomial product-filter recipe
(spectral factorization, minimum-phase root selection) instead of a typed-in
coefficient table; the QMF identities are asserted at construction, so a
construction error cannot silently corrupt downstream band powers.

With periodized extension and an orthonormal filter every analysis step is
an orthogonal map, which makes the packet decomposition exactly energy
preserving (the property the feature tests lean on).
"""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import ParameterError


def daubechies_filter(p: int) -> np.ndarray:
    """Orthonormal Daubechies scaling filter with `p` vanishing moments (2p taps)."""
    if p < 1:
        raise ParameterError("need at least 1 vanishing moment")
    if p == 1:
        h = np.array([1.0, 1.0]) / np.sqrt(2.0)
        return h
    # Laurent polynomial P((2 - z - 1/z)/4) accumulated over powers z^-(p-1)..z^(p-1).
    y_poly = np.array([-0.25, 0.5, -0.25])  # z^-1, z^0, z^1
    acc = np.zeros(2 * p - 1)
    term = np.array([1.0])  # y^0
    center = p - 1
    for k in range(p):
        c = comb(p - 1 + k, k)
        off = center - k
        acc[off : off + term.size] += c * term
        term = np.convolve(term, y_poly)
    # acc, read as a regular polynomial, is z^(p-1) * P(y(z)); its roots pair (r, 1/r).
    roots = np.roots(acc[::-1])
    inside = roots[np.abs(roots) < 1.0]
    if inside.size != p - 1:
        raise ParameterError(f"spectral factorization failed for p={p}")
    q = np.real(np.poly(inside))
    h = q.copy()
    for _ in range(p):
        h = np.convolve(h, [0.5, 0.5])
    h *= np.sqrt(2.0) / h.sum()
    _check_qmf(h)
    return h


def _check_qmf(h: np.ndarray, tol: float = 1e-8) -> None:
    if abs(h.sum() - np.sqrt(2.0)) > tol:
        raise ParameterError("filter does not sum to sqrt(2)")
    L = h.size
    for m in range(1, L // 2):
        if abs(np.dot(h[: L - 2 * m], h[2 * m :])) > tol:
            raise ParameterError(f"filter violates orthonormality at lag {2 * m}")
    if abs(np.dot(h, h) - 1.0) > tol:
        raise ParameterError("filter is not unit norm")


DB8 = daubechies_filter(8)


def _qmf_pair(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return h, g


def analysis_step(x: np.ndarray, h: np.ndarray = DB8) -> tuple[np.ndarray, np.ndarray]:
    """One periodized analysis step: x (even length) -> (approx, detail)."""
    n = x.size
    if n % 2 or n < 2:
        raise ParameterError(f"analysis step needs an even-length input, got {n}")
    h, g = _qmf_pair(h)
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(h.size)[None, :]) % n
    windows = x[idx]
    return windows @ h, windows @ g


def dwt(x: np.ndarray, levels: int, h: np.ndarray = DB8) -> list[np.ndarray]:
    """Multi-level DWT; returns [cA_L, cD_L, cD_L-1, ..., cD_1]."""
    x = np.asarray(x, dtype=float)
    details = []
    approx = x
    for _ in range(levels):
        approx, d = analysis_step(approx, h)
        details.append(d)
    return [approx] + details[::-1]


def wavelet_packet(x: np.ndarray, depth: int, h: np.ndarray = DB8) -> list[np.ndarray]:
    """Full packet decomposition; leaves returned in ascending frequency order.

    Downsampling a highpass branch mirrors its spectrum, so the low/high
    children of a node swap frequency order whenever the node's own
    frequency index is odd (Gray-code ordering).
    """
    x = np.asarray(x, dtype=float)
    nodes = {0: x}  # frequency index -> coefficients
    for _ in range(depth):
        nxt: dict[int, np.ndarray] = {}
        for f, data in nodes.items():
            lo, hi = analysis_step(data, h)
            if f % 2 == 0:
                nxt[2 * f], nxt[2 * f + 1] = lo, hi
            else:
                nxt[2 * f + 1], nxt[2 * f] = lo, hi
        nodes = nxt
    return [nodes[f] for f in range(2 ** depth)]


def split_node(coeffs: np.ndarray, freq_index: int, h: np.ndarray = DB8) -> tuple[np.ndarray, np.ndarray]:
    """Split one packet node; returns its two children in ascending frequency order."""
    lo, hi = analysis_step(coeffs, h)
    return (lo, hi) if freq_index % 2 == 0 else (hi, lo)
