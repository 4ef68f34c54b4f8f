"""Length-minimizing curves by direct discretization of the arc-length
functional s[gamma] = integral of F(gamma, dgamma/dt) dt.

A polyline's length is the sum of F(midpoint, segment) over segments: by
positive 1-homogeneity in the direction argument the parametrization
cancels, so no dt shows up.  Interior nodes are optimized by gradient
descent with backtracking; gradients come from the forward dual engine
(the metric data evaluates generically through the expression trees).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .metric import FamilyDomainError, SpaceSpec, finsler_norm
from .numerics import Jet2


class SegmentDomainError(ArithmeticError):
    """Metric evaluation failed on one polyline segment."""

    def __init__(self, segment: int, cause: Exception):
        super().__init__(f"segment {segment}: {cause}")
        self.segment = segment


def _segment_length(spec: SpaceSpec, mid, delta):
    """F(midpoint, delta) with scalars of any type; raises on domain exit."""
    d = spec.dim
    a = [[spec.a[i][j].eval(mid) for j in range(d)] for i in range(d)]
    b = [spec.b[i].eval(mid) for i in range(d)]
    alpha2 = sum(a[i][j] * delta[i] * delta[j] for i in range(d) for j in range(d))
    if alpha2 <= 0.0:
        raise ArithmeticError("degenerate segment direction")
    alpha = alpha2.sqrt() if hasattr(alpha2, "sqrt") else float(alpha2) ** 0.5
    beta = sum(b[i] * delta[i] for i in range(d))
    return finsler_norm(spec.family, spec.k, alpha, beta)


def polyline_length(spec: SpaceSpec, nodes) -> float:
    """Sum of F(midpoint, segment difference) over consecutive node pairs."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 2 or nodes.shape[0] < 2 or nodes.shape[1] != spec.dim:
        raise ValueError(f"nodes must be an (m+1) x {spec.dim} array with m >= 1")
    total = 0.0
    for s in range(nodes.shape[0] - 1):
        mid = list(0.5 * (nodes[s] + nodes[s + 1]))
        delta = list(nodes[s + 1] - nodes[s])
        try:
            total += float(_segment_length(spec, mid, delta))
        except (ArithmeticError, ex.DomainError, FamilyDomainError) as err:
            raise SegmentDomainError(s, err) from err
    return total


@dataclass
class GeodesicResult:
    """Optimized polyline with its length and first-order stationarity."""

    nodes: np.ndarray
    length: float
    grad_norm: float       # max-norm of the length gradient at the final nodes
    iterations: int
    converged: bool
    trace: list[float]     # length after each accepted step
    message: str = ""


def _length_and_grad(spec: SpaceSpec, endpoints, interior_flat):
    """Length as a function of the stacked interior coordinates, plus its
    gradient via one first-order dual pass per coordinate."""
    p, q = endpoints
    d = spec.dim
    m_int = len(interior_flat) // d

    def assemble(scalars):
        nodes = [list(p)]
        for i in range(m_int):
            nodes.append([scalars[i * d + j] for j in range(d)])
        nodes.append(list(q))
        return nodes

    def total(scalars):
        nodes = assemble(scalars)
        out = 0.0
        for s in range(len(nodes) - 1):
            mid = [(nodes[s][j] + nodes[s + 1][j]) * 0.5 for j in range(d)]
            delta = [nodes[s + 1][j] - nodes[s][j] for j in range(d)]
            out = out + _segment_length(spec, mid, delta)
        return out

    value = float(total([float(v) for v in interior_flat]))
    n = len(interior_flat)
    grad = np.zeros(n)
    for i in range(n):
        seeded = [
            Jet2(float(v), 1.0 if j == i else 0.0) for j, v in enumerate(interior_flat)
        ]
        out = total(seeded)
        grad[i] = out.d1 if isinstance(out, Jet2) else 0.0
    return value, grad


def minimize(
    spec: SpaceSpec,
    p,
    q,
    segments: int = 16,
    iters: int = 500,
    tol: float = 1e-8,
    seed: int = 0,
) -> GeodesicResult:
    """Gradient descent with backtracking on the discretized arc length.

    Interior nodes start on the straight chord plus a small deterministic
    perturbation.  A trial step that leaves the metric's domain is rejected
    by the backtracking loop; persistent rejection ends with a
    non-converged result rather than an exception.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != (spec.dim,) or q.shape != (spec.dim,):
        raise ValueError(f"endpoints must have dimension {spec.dim}")
    if not np.any(q - p):
        raise ValueError("endpoints must differ")
    if segments < 1:
        raise ValueError("need at least one segment")

    rng = np.random.default_rng(seed)
    ts = np.linspace(0.0, 1.0, segments + 1)[1:-1]
    chord = np.array([p + t * (q - p) for t in ts])
    scale = 0.01 * np.linalg.norm(q - p)
    interior = chord + scale * rng.normal(size=chord.shape) if len(chord) else chord
    flat = interior.flatten()

    def nodes_of(flat_vec):
        inner = flat_vec.reshape(-1, spec.dim) if len(flat_vec) else np.empty((0, spec.dim))
        return np.vstack([p[None, :], inner, q[None, :]])

    if len(flat) == 0:  # single segment: nothing to optimize
        length = polyline_length(spec, nodes_of(flat))
        return GeodesicResult(nodes_of(flat), length, 0.0, 0, True, [length])

    try:
        value, grad = _length_and_grad(spec, (p, q), flat)
    except (ArithmeticError, ex.DomainError) as err:
        return GeodesicResult(nodes_of(flat), float("nan"), float("inf"), 0, False,
                              [], message=f"initial polyline left the domain: {err}")

    trace = [value]
    step = 1.0
    it = 0
    converged = False
    message = ""
    for it in range(1, iters + 1):
        gn = float(np.abs(grad).max())
        if gn <= tol:
            converged = True
            message = "stationary point reached"
            break
        g2 = float(grad @ grad)
        accepted = False
        t = step
        while t >= 1e-16:
            trial = flat - t * grad
            try:
                tval, tgrad = _length_and_grad(spec, (p, q), trial)
            except (ArithmeticError, ex.DomainError):
                t *= 0.5  # domain violation: reject the trial step
                continue
            if tval <= value - 1e-4 * t * g2:
                flat, value, grad = trial, tval, tgrad
                trace.append(value)
                step = min(t * 2.0, 1e3)
                accepted = True
                break
            t *= 0.5
        if not accepted:
            message = "line search stalled: persistent step rejection"
            break
    else:
        message = "iteration budget exhausted"

    gn = float(np.abs(grad).max())
    if not converged:
        converged = gn <= tol
        if converged:
            message = "stationary point reached"
    return GeodesicResult(
        nodes=nodes_of(flat), length=value, grad_norm=gn,
        iterations=it, converged=converged, trace=trace, message=message,
    )
