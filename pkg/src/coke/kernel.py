"""Kernel functions and Gram matrices.

Two built-in stationary families are provided:

``matern_exp``
    K(z, w) = 4 / (sqrt(pi) * rho) * exp(-2 * sqrt(2) * ||z - w|| / rho)

    This is the exponential (Matern-1/2 shaped) kernel used in the simulation
    study, with its normalising constant kept verbatim.

``gaussian``
    K(z, w) = amplitude * exp(-||z - w||^2 / (2 rho^2))

A ``custom`` family wraps an arbitrary user callable ``func(Z, W) -> matrix``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInput, Unsupported

FAMILIES = ("matern_exp", "gaussian", "custom")


def _default_amplitude(family: str, rho: float) -> float:
    if family == "matern_exp":
        return 4.0 / (math.sqrt(math.pi) * rho)
    return 1.0


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its scale ``rho`` and amplitude.

    ``amplitude=None`` picks the family default (``4/(sqrt(pi) rho)`` for
    ``matern_exp``, 1 otherwise). For ``custom``, ``func`` is required and
    ``bound`` optionally declares sup_z K(z, z).
    """

    family: str = "matern_exp"
    rho: float = 5.0
    amplitude: float | None = None
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(
        default=None, compare=False, repr=False
    )
    bound: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise InvalidInput(f"kernel scale must be positive, got {self.rho}")
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", _default_amplitude(self.family, self.rho))
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise InvalidInput(f"kernel amplitude must be positive, got {self.amplitude}")
        if self.family == "custom" and self.func is None:
            raise InvalidInput("custom kernel needs a func")

    def _from_distances(self, d: np.ndarray) -> np.ndarray:
        if self.family == "matern_exp":
            return self.amplitude * np.exp(-2.0 * math.sqrt(2.0) * d / self.rho)
        return self.amplitude * np.exp(-(d * d) / (2.0 * self.rho**2))

    def to_dict(self) -> dict:
        if self.family == "custom":
            raise Unsupported("custom kernels cannot be serialised")
        return {"family": self.family, "rho": self.rho, "amplitude": self.amplitude}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(family=d["family"], rho=float(d["rho"]), amplitude=float(d["amplitude"]))


def _as_matrix(Z, name: str) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.ndim != 2:
        raise InvalidInput(f"{name} must be a matrix, got shape {Z.shape}")
    return Z


def gram(spec: KernelSpec, Z_rows, Z_cols=None) -> np.ndarray:
    """Dense Gram matrix with entries ``K(Z_rows[i], Z_cols[j])``.

    With ``Z_cols`` omitted (or the very same array) the result is built
    from the upper triangle and mirrored, so it is exactly symmetric.
    """
    A = _as_matrix(Z_rows, "Z_rows")
    same = Z_cols is None or Z_cols is Z_rows
    B = A if same else _as_matrix(Z_cols, "Z_cols")
    if A.shape[1] != B.shape[1]:
        raise InvalidInput(f"covariate dimension mismatch: {A.shape[1]} vs {B.shape[1]}")

    if spec.family == "custom":
        K = np.asarray(spec.func(A, B), dtype=float)
    else:
        K = spec._from_distances(cdist(A, B))
    if same:
        upper = np.triu(K)
        K = upper + np.triu(K, 1).T
    return K


def evaluate(spec: KernelSpec, z, w) -> float:
    """K(z, w) for two covariate vectors."""
    z = np.asarray(z, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if z.shape != w.shape:
        raise InvalidInput(f"dimension mismatch: {z.shape[0]} vs {w.shape[0]}")
    return float(gram(spec, z[None, :], w[None, :])[0, 0])


def sup_bound(spec: KernelSpec) -> float:
    """The kernel bound xi = sup_z K(z, z)."""
    if spec.family == "custom":
        if spec.bound is None:
            raise Unsupported("custom kernel has no declared bound")
        return float(spec.bound)
    # stationary: K(z, z) is the amplitude everywhere
    return float(spec.amplitude)
