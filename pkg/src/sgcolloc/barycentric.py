"""Barycentric Lagrange interpolation in one variable."""

from __future__ import annotations

import numpy as np

# relative distance below which an evaluation point is treated as a node
_HIT_TOL = 1e-15


def barycentric_weights(nodes) -> np.ndarray:
    """Weights ``1 / prod_{j != i} (x_i - x_j)``, rescaled to max magnitude 1.

    The common scale factor cancels in the second barycentric form, so the
    rescaling only guards against overflow for long node lists.
    """
    x = np.asarray(nodes, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("need at least one node")
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(diff == 0.0):
        raise ValueError("interpolation nodes must be pairwise distinct")
    # product in log-space, sign tracked separately
    sign = np.prod(np.sign(diff), axis=1)
    logmag = -np.sum(np.log(np.abs(diff)), axis=1)
    return sign * np.exp(logmag - logmag.max())


def lagrange_basis(nodes, y, weights=None) -> np.ndarray:
    """Values of all Lagrange basis polynomials at ``y``.

    Returns an array of shape ``y.shape + (len(nodes),)``. Points that
    coincide with a node (to within ``1e-15`` of the node span) get the
    exact Kronecker-delta row.
    """
    x = np.asarray(nodes, dtype=float)
    y = np.asarray(y, dtype=float)
    if weights is None:
        weights = barycentric_weights(x)
    flat = y.reshape(-1)
    if x.size == 1:
        return np.ones(y.shape + (1,))
    span = x.max() - x.min()
    diff = flat[:, None] - x[None, :]
    hit = np.abs(diff) <= _HIT_TOL * span
    hit_rows = hit.any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights[None, :] / diff
        out = terms / terms.sum(axis=1, keepdims=True)
    if np.any(hit_rows):
        rows = np.nonzero(hit_rows)[0]
        out[rows] = 0.0
        cols = np.argmax(hit[rows], axis=1)
        out[rows, cols] = 1.0
    return out.reshape(y.shape + (x.size,))


def barycentric_eval(nodes, values, y, weights=None):
    """Evaluate the Lagrange interpolant through ``(nodes, values)`` at ``y``."""
    x = np.asarray(nodes, dtype=float)
    v = np.asarray(values, dtype=float)
    if x.shape != v.shape:
        raise ValueError("nodes and values must have the same length")
    basis = lagrange_basis(x, y, weights)
    out = basis @ v
    # an exact node hit returns the stored value untouched
    yv = np.asarray(y, dtype=float).reshape(-1)
    flat = out.reshape(-1)
    span = x.max() - x.min() if x.size > 1 else 1.0
    d = np.abs(yv[:, None] - x[None, :]) <= _HIT_TOL * span
    rows = np.nonzero(d.any(axis=1))[0]
    if rows.size:
        flat[rows] = v[np.argmax(d[rows], axis=1)]
    out = flat.reshape(np.shape(y))
    return float(out) if out.ndim == 0 else out
