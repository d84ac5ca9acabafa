"""Discrete Sobolev-norm diagnostics for nodal P1 fields."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DomainError
from .fem import gradient
from .geometry import Mesh
from .material import SINGULARITY_FLOOR

# 7-point degree-5 rule on the reference triangle (barycentric points, weights summing to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_Q7_POINTS = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
_Q7_WEIGHTS = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


@dataclass(frozen=True)
class NormConfig:
    p: float = 4.0
    beta1: float = 0.05
    beta2: float = 100.0

    def __post_init__(self):
        if not self.p > 2:
            raise DomainError(f"norm exponent must exceed 2, got {self.p}")
        if not 0.0 < self.beta1 < 0.5:
            raise DomainError(f"beta1 must lie in (0, 1/2), got {self.beta1}")
        if not self.beta2 > 0:
            raise DomainError(f"beta2 must be positive, got {self.beta2}")


def _complete_homogeneous(vals: np.ndarray, k: int) -> np.ndarray:
    """``h_k(a, b, c) = sum over i+j+l=k of a^i b^j c^l`` row-wise."""
    a, b, c = vals[:, 0], vals[:, 1], vals[:, 2]
    total = np.zeros(len(vals))
    for i in range(k + 1):
        for j in range(k - i + 1):
            total += a**i * b**j * c ** (k - i - j)
    return total


def _integrate_abs_power(mesh: Mesh, field: np.ndarray, p: float) -> float:
    """``int |f_h|^p`` of the P1 interpolant, element by element."""
    fe = field[mesh.triangles]
    area = mesh.element_areas
    out = np.zeros(mesh.n_elements)
    integer = float(p).is_integer()
    if integer:
        k = int(p)
        if k % 2 == 0:
            exact = np.ones(mesh.n_elements, dtype=bool)
        else:
            exact = np.all(fe >= 0, axis=1) | np.all(fe <= 0, axis=1)
        vals = np.abs(fe[exact]) if k % 2 else fe[exact]
        out[exact] = 2.0 * area[exact] / ((k + 1) * (k + 2)) * _complete_homogeneous(vals, k)
    else:
        exact = np.zeros(mesh.n_elements, dtype=bool)
    rest = ~exact
    if np.any(rest):
        at_points = fe[rest] @ _Q7_POINTS.T                    # (R, 7)
        out[rest] = area[rest] * (np.abs(at_points) ** p @ _Q7_WEIGHTS)
    return float(out.sum())


def lp_norm(mesh: Mesh, field, p: float) -> float:
    """L_p norm of the piecewise-linear interpolant of a nodal field.

    Integer exponents are integrated exactly on every element whose values
    do not change sign (all elements when ``p`` is even); other elements use
    a 7-point degree-5 rule.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    f = np.asarray(field, dtype=float).reshape(mesh.n_nodes)
    return _integrate_abs_power(mesh, f, p) ** (1.0 / p)


def grad_lp_norm(mesh: Mesh, field, p: float) -> float:
    """L_p norm of the (element-constant) gradient magnitude."""
    g = np.linalg.norm(gradient(mesh, field), axis=1)
    return float((mesh.element_areas @ g**p) ** (1.0 / p))


def w1p_norm(mesh: Mesh, field, p: float) -> float:
    """``(||f||_p^p + ||grad f||_p^p)^(1/p)``."""
    return (lp_norm(mesh, field, p) ** p + grad_lp_norm(mesh, field, p) ** p) ** (1.0 / p)


@dataclass(frozen=True)
class Membership:
    inside: bool
    reason: Optional[str] = None
    value: Optional[float] = None

    def __bool__(self):
        return self.inside


def membership_Y(mesh: Mesh, omega, cfg: NormConfig) -> Membership:
    """Check ``0 <= omega <= 1 - beta1`` nodally and ``||omega||_{1,p} <= beta2``."""
    w = np.asarray(omega, dtype=float).reshape(mesh.n_nodes)
    lo, hi = float(w.min()), float(w.max())
    if lo < 0.0:
        return Membership(False, f"pointwise: min omega {lo:.6g} < 0", lo)
    if hi > 1.0 - cfg.beta1:
        return Membership(False, f"pointwise: max omega {hi:.6g} > 1 - beta1 = {1.0 - cfg.beta1:.6g}", hi)
    norm = w1p_norm(mesh, w, cfg.p)
    if norm > cfg.beta2:
        return Membership(False, f"norm: ||omega||_W1p = {norm:.6g} > beta2 = {cfg.beta2:.6g}", norm)
    return Membership(True)


def localization_measure(mesh: Mesh, omega, p: float, floor: float = SINGULARITY_FLOOR) -> float:
    """``||grad omega||_p / min(1 - omega)``; ``math.inf`` once ``min(1 - omega) < floor``."""
    w = np.asarray(omega, dtype=float).reshape(mesh.n_nodes)
    psi = float(np.min(1.0 - w))
    if psi < floor:
        return math.inf
    return grad_lp_norm(mesh, w, p) / psi


def sup_over_time(values: Iterable[float]) -> float:
    vals = list(values)
    if not vals:
        raise DomainError("sup over an empty time series")
    return max(vals)


def sup_norm_check(mesh: Mesh, field, p: float):
    """Discrete C0 norm and its ratio to the W^{1,p} norm (0 for the zero field)."""
    f = np.asarray(field, dtype=float).reshape(mesh.n_nodes)
    sup = float(np.max(np.abs(f)))
    norm = w1p_norm(mesh, f, p)
    return sup, (sup / norm if norm > 0 else 0.0)
