"""Operator matrices on the truncated space.

Entries are stored as ``A[b, a] = <A e_a, e_b>`` over the canonical basis.  The
resolvent is stored in the concrete convention ``R(lam, z) = (T(z) - i lam)^-1``;
the abstract convention used for the algebraic relations is ``(i lam - T(z))^-1 = -R``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import ArpackError, svds
from scipy.special import gammaln

from . import kernels
from .fock import FockSpace, as_phase, coherent_coeffs, coherent_norm_defect
from .quadrature import GaussianRule, IntegrationFailure
from .symbols import eval_batch

HERMITIAN_TOL = 1e-12
CONCRETE = "concrete"
ABSTRACT = "abstract"


class SpaceMismatch(ValueError):
    pass


@dataclass(eq=False)
class OperatorMatrix:
    space: FockSpace
    entries: np.ndarray
    hermitian: bool = False
    convention: str = field(default=CONCRETE)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.complex128)
        N = self.space.dim
        if self.entries.shape != (N, N):
            raise ValueError(f"entries have shape {self.entries.shape}, basis has {N} elements")
        if self.hermitian:
            dev = np.max(np.abs(self.entries - self.entries.conj().T)) if N else 0.0
            if dev > HERMITIAN_TOL:
                raise ValueError(f"Hermitian flag set but |A - A*|_max = {dev:.2e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def block(self, k: int) -> np.ndarray:
        """Compression to the span of basis vectors of degree <= k."""
        idx = self.space.low_degree(k)
        return self.entries[np.ix_(idx, idx)]

    def __matmul__(self, other):
        return op_mul(self, other)

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_add(self, op_scale(other, -1.0))

    def __neg__(self):
        return op_scale(self, -1.0)

    def __rmul__(self, c):
        return op_scale(self, c)

    @property
    def H(self):
        return op_adjoint(self)


def _same(a: OperatorMatrix, b: OperatorMatrix):
    if a.space != b.space:
        raise SpaceMismatch(f"spaces differ: (n={a.space.n}, D={a.space.D}) vs (n={b.space.n}, D={b.space.D})")


def op_mul(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    _same(a, b)
    return OperatorMatrix(a.space, a.entries @ b.entries)


def op_add(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    _same(a, b)
    return OperatorMatrix(a.space, a.entries + b.entries, hermitian=a.hermitian and b.hermitian)


def op_scale(a: OperatorMatrix, c) -> OperatorMatrix:
    c = complex(c)
    return OperatorMatrix(a.space, c * a.entries, hermitian=a.hermitian and c.imag == 0.0)


def op_adjoint(a: OperatorMatrix) -> OperatorMatrix:
    return OperatorMatrix(a.space, a.entries.conj().T.copy(), hermitian=a.hermitian)


def op_norm(a) -> float:
    """Largest singular value (dense SVD below 600 rows, ARPACK above)."""
    m = a.entries if isinstance(a, OperatorMatrix) else np.asarray(a)
    if m.size == 0:
        return 0.0
    if min(m.shape) <= 600:
        return float(np.linalg.norm(m, 2))
    try:
        s = svds(m, k=1, return_singular_vectors=False, tol=1e-12)
    except ArpackError:
        # clustered top singular values (identity-like operators) can stall ARPACK
        return float(np.linalg.norm(m, 2))
    return float(s[0])


def identity(space: FockSpace) -> OperatorMatrix:
    return OperatorMatrix(space, np.eye(space.dim), hermitian=True)


# ---------------------------------------------------------------- canonical operators

@lru_cache(maxsize=32)
def _raising_structure(space: FockSpace):
    """Per mode j: (dst, src, sqrt(alpha_j + 1)) for a_j^dagger within the cutoff."""
    pos = {a: i for i, a in enumerate(space.basis)}
    out = []
    for j in range(space.n):
        dst, src, coef = [], [], []
        for i, a in enumerate(space.basis):
            b = list(a)
            b[j] += 1
            k = pos.get(tuple(b))
            if k is not None:
                dst.append(k)
                src.append(i)
                coef.append(np.sqrt(a[j] + 1.0))
        out.append((np.array(dst, dtype=np.intp), np.array(src, dtype=np.intp), np.array(coef)))
    return out


def canonical_toeplitz(z, space: FockSpace) -> OperatorMatrix:
    """Toeplitz operator of the symbol ``w -> 2 sigma_t(w, z)``, built from ladder matrices.

    Equals ``-i sum_j (conj(z_j) a_j^dagger - z_j a_j) / sqrt(t_j)``.
    """
    z = as_phase(z, space.n)
    t = space.t.array
    T = np.zeros((space.dim, space.dim), dtype=np.complex128)
    for j, (dst, src, coef) in enumerate(_raising_structure(space)):
        c = -1j * np.conj(z[j]) / np.sqrt(t[j]) * coef
        T[dst, src] += c
    T = T + T.conj().T
    return OperatorMatrix(space, T, hermitian=True)


def displacement_parameters(z, space: FockSpace) -> np.ndarray:
    return np.conj(as_phase(z, space.n)) / np.sqrt(space.t.array)


def mode_matrices(z, space: FockSpace) -> np.ndarray:
    alphas = displacement_parameters(z, space)
    return np.ascontiguousarray(np.stack([kernels.displacement(complex(a), space.D + 1) for a in alphas]))


def weyl_block(z, space: FockSpace, rows=None, cols=None) -> np.ndarray:
    """Entries of the compressed Weyl operator restricted to basis positions rows x cols."""
    idx = space.index_array
    r = idx if rows is None else np.ascontiguousarray(idx[rows])
    c = idx if cols is None else np.ascontiguousarray(idx[cols])
    return kernels.tensor_select(mode_matrices(z, space), r, c)


def weyl_matrix(z, space: FockSpace) -> OperatorMatrix:
    """Compression of ``W_z g(w) = k_z(w) g(w - z)``; per mode a displacement matrix."""
    return OperatorMatrix(space, weyl_block(z, space))


def gaussian_moment_kernel(b: int, c: int, zeta: complex, t: float) -> complex:
    """``int w^b conj(w)^c e^{w conj(zeta)/t} dmu_t(w)``; zero when c < b."""
    if c < b:
        return 0.0 + 0j
    return complex(np.conj(zeta) ** (c - b) * factorial(c) * t ** b / factorial(c - b))


def weyl_mode_binomial(z: complex, t: float, dim: int) -> np.ndarray:
    """Single-mode Weyl entries from the binomial expansion of ``(w - z)^a`` (reference only)."""
    out = np.zeros((dim, dim), dtype=np.complex128)
    pre = np.exp(-abs(z) ** 2 / (2 * t))
    for a in range(dim):
        for b in range(dim):
            acc = 0j
            for i in range(min(a, b) + 1):
                acc += comb(a, i) * (-z) ** (a - i) * gaussian_moment_kernel(i, b, z, t)
            out[b, a] = pre * acc / np.sqrt(t ** a * factorial(a) * t ** b * factorial(b))
    return out


def weyl_matrix_binomial(z, space: FockSpace) -> OperatorMatrix:
    z = as_phase(z, space.n)
    mats = np.ascontiguousarray(np.stack([weyl_mode_binomial(complex(z[j]), space.t.t[j], space.D + 1)
                                          for j in range(space.n)]))
    return OperatorMatrix(space, kernels.tensor_select(mats, space.index_array, space.index_array))


# ---------------------------------------------------------------- Toeplitz by quadrature

def _basis_values(points: np.ndarray, space: FockSpace) -> np.ndarray:
    """``e_a(p)`` for each point (rows) and basis element (columns)."""
    a = space.index_array
    logn = 0.5 * (a @ np.log(space.t.array) + gammaln(a + 1.0).sum(axis=1))
    vals = np.ones((points.shape[0], a.shape[0]), dtype=np.complex128)
    for j in range(space.n):
        powers = points[:, j:j + 1] ** np.arange(space.D + 1)[None, :]
        vals *= powers[:, a[:, j]]
    return vals * np.exp(-logn)[None, :]


def toeplitz_quadrature(symbol, space: FockSpace, q: int = 40, hermitian: bool = False) -> OperatorMatrix:
    """``<T_phi e_a, e_b> = int phi e_a conj(e_b) dmu_t`` by tensor Gauss-Hermite.

    ``symbol`` is a SymbolExpr or a vectorized callback on ``(N, n)`` point arrays.
    """
    rule = GaussianRule(q, space.t)
    if callable(symbol):
        f = symbol
    else:
        def f(pts):
            return eval_batch(symbol, pts, space.t)
    T = np.zeros((space.dim, space.dim), dtype=np.complex128)
    for pts, wts in rule.chunks(chunk=1 << 15):
        E = _basis_values(pts, space)
        phi = np.asarray(f(pts), dtype=np.complex128)
        if not np.all(np.isfinite(phi)):
            raise IntegrationFailure("symbol returned non-finite values")
        T += (E.conj() * (wts * phi)[:, None]).T @ E
    if hermitian:
        T = 0.5 * (T + T.conj().T)
    return OperatorMatrix(space, T, hermitian=hermitian)


# ---------------------------------------------------------------- resolvents

@dataclass(frozen=True)
class ResolventDescriptor:
    lam: complex
    z: tuple

    def __post_init__(self):
        lam = complex(self.lam)
        if lam.real == 0.0:
            raise ValueError(f"lambda = {lam} lies on the imaginary axis")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "z", tuple(complex(x) for x in np.atleast_1d(self.z)))


def resolvent_entries(lam: complex, T: np.ndarray) -> np.ndarray:
    N = T.shape[0]
    return sla.solve(T - 1j * lam * np.eye(N), np.eye(N), check_finite=False)


def resolvent_matrix(desc: ResolventDescriptor, space: FockSpace, convention: str = CONCRETE,
                     check: bool = True) -> OperatorMatrix:
    """Solve ``(T_D - i lam) X = I``; ``convention='abstract'`` returns ``-X``."""
    if not isinstance(desc, ResolventDescriptor):
        desc = ResolventDescriptor(*desc)
    T = canonical_toeplitz(desc.z, space).entries
    X = resolvent_entries(desc.lam, T)
    if check and space.dim:
        bound = 1.0 / abs(desc.lam.real)
        nrm = op_norm(X)
        if nrm > bound * (1 + 1e-9):
            raise RuntimeError(f"spectral bound violated: |R| = {nrm} > {bound}")
    if convention == ABSTRACT:
        X = -X
    elif convention != CONCRETE:
        raise ValueError(f"unknown convention {convention!r}")
    return OperatorMatrix(space, X, convention=convention)


def to_abstract(R: OperatorMatrix) -> OperatorMatrix:
    if R.convention == ABSTRACT:
        return R
    return OperatorMatrix(R.space, -R.entries, convention=ABSTRACT)


def expectation(A, w, space: FockSpace | None = None) -> tuple[complex, float]:
    """``<A k_w, k_w>`` with the kernel truncated at degree D, plus the norm defect."""
    sp = A.space if isinstance(A, OperatorMatrix) else space
    M = A.entries if isinstance(A, OperatorMatrix) else np.asarray(A)
    k = coherent_coeffs(w, sp)
    return complex(np.vdot(k, M @ k)), coherent_norm_defect(w, sp)
