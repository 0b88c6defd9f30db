"""Truncated Fock-Bargmann space over C^n with Gaussian weights t.

Orthonormal basis ``e_a(z) = z^a / sqrt(t^a a!)`` for multi-indices with
total degree ``|a| <= D``, ordered by degree and then lexicographically
(descending in the first coordinate, so ``(1,0)`` precedes ``(0,1)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np
from scipy.special import gammainc, gammaln


class DimensionError(ValueError):
    """Vector lengths that do not match the mode count."""


def as_phase(z, n: int | None = None) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if z.ndim != 1:
        raise DimensionError(f"phase vector must be 1-d, got shape {z.shape}")
    if n is not None and z.shape[0] != n:
        raise DimensionError(f"expected {n} modes, got {z.shape[0]}")
    if not np.all(np.isfinite(z)):
        raise ValueError("phase vector has non-finite entries")
    return z


@dataclass(frozen=True)
class WeightVector:
    t: tuple

    def __post_init__(self):
        t = tuple(float(x) for x in np.atleast_1d(self.t))
        if len(t) < 1:
            raise ValueError("weight vector needs at least one mode")
        if not all(np.isfinite(x) and x > 0 for x in t):
            raise ValueError(f"weights must be finite and positive, got {t}")
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return len(self.t)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.t)

    @classmethod
    def dyadic(cls, n: int) -> "WeightVector":
        """Truncation ``t_k = 2^-k``, k = 1..n, of a summable sequence."""
        return cls(tuple(2.0 ** -k for k in range(1, n + 1)))

    @classmethod
    def ones(cls, n: int) -> "WeightVector":
        return cls((1.0,) * n)

    def scaled(self, c: float) -> "WeightVector":
        return WeightVector(tuple(c * x for x in self.t))


def _weights(t) -> np.ndarray:
    if isinstance(t, WeightVector):
        return t.array
    return WeightVector(t).array


def enumerate_basis(n: int, D: int) -> list[tuple[int, ...]]:
    """All multi-indices of total degree ``<= D`` in canonical order."""
    if n < 1 or D < 0:
        raise ValueError("need n >= 1 and D >= 0")
    out: list[tuple[int, ...]] = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for first in range(remaining, -1, -1):
            rec(prefix + (first,), remaining - first, slots - 1)

    for d in range(D + 1):
        rec((), d, n)
    return out


@dataclass(frozen=True, eq=False)
class FockSpace:
    n: int
    D: int
    t: WeightVector = field(default=None)

    def __post_init__(self):
        t = self.t if self.t is not None else WeightVector.ones(self.n)
        if not isinstance(t, WeightVector):
            t = WeightVector(t)
        if t.n != self.n:
            raise DimensionError(f"weights have {t.n} modes, space has {self.n}")
        object.__setattr__(self, "t", t)

    def __eq__(self, other):
        return (isinstance(other, FockSpace) and self.n == other.n
                and self.D == other.D and self.t == other.t)

    def __hash__(self):
        return hash((self.n, self.D, self.t))

    @cached_property
    def basis(self) -> list[tuple[int, ...]]:
        return enumerate_basis(self.n, self.D)

    @cached_property
    def index_array(self) -> np.ndarray:
        return np.ascontiguousarray(np.array(self.basis, dtype=np.intp).reshape(-1, self.n))

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.index_array.sum(axis=1)

    @property
    def dim(self) -> int:
        return comb(self.n + self.D, self.n)

    def low_degree(self, k: int) -> np.ndarray:
        """Basis positions with total degree ``<= k`` (a leading block)."""
        return np.flatnonzero(self.degrees <= k)

    def position(self, alpha) -> int:
        return self.basis.index(tuple(alpha))

    def with_degree(self, D: int) -> "FockSpace":
        return FockSpace(self.n, D, self.t)


def inner_t(z, w, t) -> complex:
    tt = _weights(t)
    z, w = as_phase(z, tt.size), as_phase(w, tt.size)
    return complex(np.sum(z * np.conj(w) / tt))


def sigma_t(z, w, t) -> float:
    """Symplectic form ``Im <z, w>_t``.

    Real arithmetic on purpose: a fused complex product can leave a 1e-17 residue
    for ``w = 2^j z``, where the form is exactly zero.
    """
    tt = _weights(t)
    z, w = as_phase(z, tt.size), as_phase(w, tt.size)
    return float(np.sum((z.imag * w.real - z.real * w.imag) / tt))


def norm_t_sq(z, t) -> float:
    return inner_t(z, z, t).real


def h_half_norm_sq(z, t) -> float:
    """Weighted sequence norm ``sum |z_k|^2 / t_k``; equals ``norm_t_sq`` at finite n."""
    tt = _weights(t)
    z = as_phase(z, tt.size)
    return float(np.sum(np.abs(z) ** 2 / tt))


def _log_norms(space: FockSpace) -> np.ndarray:
    # log sqrt(t^a a!) per basis element
    a = space.index_array
    return 0.5 * (a @ np.log(space.t.array) + gammaln(a + 1.0).sum(axis=1))


def monomial_coeffs(w, space: FockSpace) -> np.ndarray:
    """``conj(w)^a / sqrt(t^a a!)`` per basis element (kernel coefficients without the Gaussian factor)."""
    w = as_phase(w, space.n)
    a = space.index_array
    cw = np.conj(w)
    pw = np.prod(cw[None, :] ** a, axis=1)
    return pw * np.exp(-_log_norms(space))


def coherent_coeffs(w, space: FockSpace) -> np.ndarray:
    """Coefficients of the normalized kernel ``k_w`` in the truncated basis (not renormalized)."""
    return np.exp(-0.5 * norm_t_sq(w, space.t)) * monomial_coeffs(w, space)


def kernel_coeffs(w, space: FockSpace) -> np.ndarray:
    """Coefficients of the reproducing kernel ``K_w = e^{|w|^2/2} k_w``."""
    return monomial_coeffs(w, space)


def coherent_norm_defect(w, space: FockSpace) -> float:
    """``1 - |P_D k_w|^2``: the Poisson tail beyond degree D (exact, not estimated)."""
    x = norm_t_sq(w, space.t)
    if x == 0.0:
        return 0.0
    # sum_{d>D} e^{-x} x^d / d! = P(D+1, x)
    return float(gammainc(space.D + 1, x))


def kernel_pairing_tail(z, w, space: FockSpace) -> float:
    """Bound on ``|<K_z, K_w> - e^{<w,z>_t}|`` from truncating at degree D."""
    x = np.sqrt(norm_t_sq(z, space.t) * norm_t_sq(w, space.t))
    if x == 0.0:
        return 0.0
    return float(np.exp(x) * gammainc(space.D + 1, x))


def evaluate_polynomial(coeffs, w, space: FockSpace) -> complex:
    """Value at w of ``sum_a c_a e_a``."""
    w = as_phase(w, space.n)
    return complex(np.sum(np.asarray(coeffs) * np.conj(monomial_coeffs(w, space))))
