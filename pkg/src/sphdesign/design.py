"""Design criterion: defect functional, per-degree residuals, verification.

A configuration X = {x_1..x_N} on S^d is a spherical t-design exactly when
the equal-weight average of every polynomial of degree <= t matches its
integral.  In kernel form that is equivalent to the vanishing of

    defect(X) = (1/N^2) * sum_{i,j} K(<x_i, x_j>),

a nonnegative functional (it is the squared norm of the averaged kernel
sections).  Splitting the kernel by harmonic degree gives residuals
rho_1..rho_t with defect = sum_k rho_k.

All pairwise double sums are accumulated with math.fsum per row and then
across rows.  fsum returns the correctly rounded sum of its inputs, so the
results are independent of point ordering: permutation invariance holds
exactly, not just approximately.  The pair inner products go through
einsum rather than BLAS matmul for the same reason: BLAS tiling makes the
last ulp of a dot product depend on its position in the output matrix.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .kernel import (
    KernelModel,
    _degree_scan,
    clamp_cosine,
    kernel_derivative,
    kernel_value,
)
from .sphere_geometry import PointConfiguration

_PAIR_BLOCK_ROWS = 256


def lower_bound(d: int, t: int) -> int:
    """Minimal possible size of a spherical t-design on S^d.

    Two-case binomial formula: C(d+k, d) + C(d+k-1, d) for t = 2k and
    2*C(d+k, d) for t = 2k+1.  Exact integer arithmetic.
    """
    if d < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {d}")
    if t < 1:
        raise ValueError(f"degree must be >= 1, got {t}")
    k = t // 2
    if t % 2 == 0:
        return math.comb(d + k, d) + math.comb(d + k - 1, d)
    return 2 * math.comb(d + k, d)


def _check_dimensions(model: KernelModel, config: PointConfiguration):
    if model.d != config.d:
        raise ValueError(
            f"model is on S^{model.d} but configuration is on S^{config.d}"
        )


def _row_blocks(n: int):
    for start in range(0, n, _PAIR_BLOCK_ROWS):
        yield start, min(start + _PAIR_BLOCK_ROWS, n)


def defect(model: KernelModel, config: PointConfiguration) -> float:
    """Kernel defect of the configuration; zero exactly at t-designs."""
    _check_dimensions(model, config)
    pts = config.points
    n = config.n
    row_sums = []
    for lo, hi in _row_blocks(n):
        s = clamp_cosine(np.einsum("ik,jk->ij", pts[lo:hi], pts))
        values = kernel_value(model, s)
        row_sums.extend(math.fsum(row) for row in values)
    return math.fsum(row_sums) / n**2


def degree_residuals(model: KernelModel, config: PointConfiguration) -> np.ndarray:
    """Per-degree residuals rho_1..rho_t; nonnegative and summing to the defect."""
    _check_dimensions(model, config)
    pts = config.points
    n = config.n
    rows = [[] for _ in range(model.t)]
    for lo, hi in _row_blocks(n):
        s = clamp_cosine(np.einsum("ik,jk->ij", pts[lo:hi], pts))
        for k, p, _ in _degree_scan(model.d, model.t, s):
            rows[k - 1].extend(math.fsum(row) for row in p)
    return np.array(
        [model.dims[k] * math.fsum(rows[k]) / n**2 for k in range(model.t)]
    )


def defect_gradient(model: KernelModel, config: PointConfiguration) -> np.ndarray:
    """Spherical gradient of the defect: one tangent row per point."""
    _check_dimensions(model, config)
    pts = config.points
    n = config.n
    grad = np.empty(pts.shape)
    for lo, hi in _row_blocks(n):
        s = clamp_cosine(np.einsum("ik,jk->ij", pts[lo:hi], pts))
        w = (2.0 / n**2) * kernel_derivative(model, s)
        raw = w @ pts
        radial = np.einsum("rj,rj->r", w, s)
        grad[lo:hi] = raw - radial[:, None] * pts[lo:hi]
    return grad


@dataclass
class DesignReport:
    """Verification outcome for one configuration at one degree."""

    d: int
    t: int
    n: int
    defect: float
    residuals: np.ndarray
    verdict: bool
    tolerance: float
    lower_bound: int
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "t": self.t,
            "n": self.n,
            "defect": self.defect,
            "residuals": [float(r) for r in self.residuals],
            "verdict": bool(self.verdict),
            "tolerance": self.tolerance,
            "lower_bound": self.lower_bound,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


DEFAULT_TOLERANCE = 1e-10


def verify_design(
    model: KernelModel,
    config: PointConfiguration,
    tolerance: float = DEFAULT_TOLERANCE,
    meta: dict | None = None,
) -> DesignReport:
    """Full verification report; verdict is defect <= tolerance.

    On S^2 the kernel defect is additionally cross-checked against the
    squared empirical means of the explicit real harmonic basis; a
    disagreement beyond rounding scale indicates an internal bug and
    raises.
    """
    if tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    residuals = degree_residuals(model, config)
    total = defect(model, config)
    report_meta = dict(meta or {})
    if model.d == 2:
        from .harmonics import mean_residuals

        basis_means = mean_residuals(model.t, config.points)
        cross = float(math.fsum(r * r for r in basis_means))
        scale = float(kernel_value(model, 1.0))
        gap = abs(cross - total)
        report_meta["harmonic_cross_check"] = cross
        report_meta["harmonic_cross_check_gap"] = gap
        if gap > 1e-9 * max(total, cross) + 1e-12 * scale:
            raise AssertionError(
                f"kernel defect {total!r} disagrees with harmonic cross-check {cross!r}"
            )
    return DesignReport(
        d=model.d,
        t=model.t,
        n=config.n,
        defect=total,
        residuals=residuals,
        verdict=bool(total <= tolerance),
        tolerance=tolerance,
        lower_bound=lower_bound(model.d, model.t),
        meta=report_meta,
    )


# ---------------------------------------------------------------------------
# catalog of exact reference configurations


def _polygon(n: int) -> np.ndarray:
    phis = 2.0 * math.pi * np.arange(n) / n
    return np.stack([np.cos(phis), np.sin(phis)], axis=1)


def _simplex(d: int) -> np.ndarray:
    # columns of the Helmert-style orthonormal basis of the hyperplane
    # orthogonal to (1, ..., 1) in R^{d+2}; pairwise inner products -1/(d+1)
    m = d + 2
    rows = []
    for j in range(1, d + 2):
        h = np.zeros(m)
        h[:j] = 1.0
        h[j] = -j
        h /= math.sqrt(j * (j + 1))
        rows.append(h)
    basis = np.stack(rows, axis=0)  # (d+1, d+2)
    verts = basis.T
    return verts / np.linalg.norm(verts, axis=1, keepdims=True)


def _cross_polytope(d: int) -> np.ndarray:
    eye = np.eye(d + 1)
    return np.concatenate([eye, -eye], axis=0)


def _cube(d: int) -> np.ndarray:
    corners = np.array(
        [[(1.0 if (i >> b) & 1 else -1.0) for b in range(d + 1)]
         for i in range(2 ** (d + 1))]
    )
    return corners / math.sqrt(d + 1)


def _icosahedron() -> np.ndarray:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = []
    for a in (1.0, -1.0):
        for b in (phi, -phi):
            verts += [[0.0, a, b], [a, b, 0.0], [b, 0.0, a]]
    return np.array(verts) / math.sqrt(1.0 + phi * phi)


def _dodecahedron() -> np.ndarray:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    inv = 1.0 / phi
    verts = [
        [sx, sy, sz]
        for sx in (1.0, -1.0)
        for sy in (1.0, -1.0)
        for sz in (1.0, -1.0)
    ]
    for a in (inv, -inv):
        for b in (phi, -phi):
            verts += [[0.0, a, b], [a, b, 0.0], [b, 0.0, a]]
    return np.array(verts) / math.sqrt(3.0)


def _d4_minimal_vectors() -> np.ndarray:
    verts = []
    for i in range(4):
        for j in range(i + 1, 4):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    v = np.zeros(4)
                    v[i] = si
                    v[j] = sj
                    verts.append(v)
    return np.array(verts) / math.sqrt(2.0)


def _24_cell() -> np.ndarray:
    eye = np.eye(4)
    units = np.concatenate([eye, -eye], axis=0)
    halves = np.array(
        [[(0.5 if (i >> b) & 1 else -0.5) for b in range(4)] for i in range(16)]
    )
    return np.concatenate([units, halves], axis=0)


_PARAMETRIC = {
    "polygon": (_polygon, lambda n: n >= 1),
    "simplex": (_simplex, lambda d: 1 <= d <= 8),
    "cross-polytope": (_cross_polytope, lambda d: 1 <= d <= 8),
    "cube": (_cube, lambda d: 1 <= d <= 8),
}

_FIXED = {
    "icosahedron": (_icosahedron, 2),
    "dodecahedron": (_dodecahedron, 2),
    "d4-minimal-vectors": (_d4_minimal_vectors, 3),
    "24-cell": (_24_cell, 3),
}


def catalog_design(name: str) -> PointConfiguration:
    """Exact-coordinate reference configuration by name.

    Parametric names take an integer argument, e.g. "polygon(7)",
    "simplex(3)", "cross-polytope(2)", "cube(3)"; fixed names are
    "icosahedron", "dodecahedron", "d4-minimal-vectors", "24-cell".
    """
    match = re.fullmatch(r"\s*([a-z0-9-]+)\s*(?:\(\s*(\d+)\s*\))?\s*", name)
    if not match:
        raise ValueError(f"unknown catalog name {name!r}")
    base, arg = match.group(1), match.group(2)
    if base in _FIXED:
        if arg is not None:
            raise ValueError(f"{base} takes no argument")
        builder, d = _FIXED[base]
        return PointConfiguration(d=d, points=builder())
    if base in _PARAMETRIC:
        if arg is None:
            raise ValueError(f"{base} requires an integer argument, e.g. {base}(3)")
        builder, valid = _PARAMETRIC[base]
        value = int(arg)
        if not valid(value):
            raise ValueError(f"{base}({value}) is out of range")
        pts = builder(value)
        if base == "polygon":
            return PointConfiguration(d=1, points=pts)
        return PointConfiguration(d=value, points=pts)
    raise ValueError(f"unknown catalog name {name!r}")
