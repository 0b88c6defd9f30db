"""Integration backends.

* Tensor Gauss-Hermite rules for the Gaussian measure ``mu_t`` on C^n, plus a
  projected variant for integrands that depend on a few real-linear functionals.
* A globally adaptive tensor Gauss-Kronrod (7/15) rule on ``(0, inf)^m`` for
  Laplace-type integrands, after the substitution ``s_j = u_j / rate_j``.
* A seeded Monte Carlo estimator for the Gaussian measure.
"""
from __future__ import annotations

import heapq
import itertools
import zlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammainc, gammaln, roots_hermite

from .fock import WeightVector


class IntegrationFailure(RuntimeError):
    """Non-finite integrand values."""


class ToleranceNotMet(RuntimeError):
    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate {estimate!r}, error {error:.3e})"
                         if np.isscalar(estimate) else f"{message} (error {error:.3e})")
        self.estimate = estimate
        self.error = error


def _weights(t) -> np.ndarray:
    return t.array if isinstance(t, WeightVector) else WeightVector(t).array


@lru_cache(maxsize=64)
def hermite_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``pi^-1/2 int f(x) e^{-x^2} dx`` (weights sum to 1)."""
    if q < 1:
        raise ValueError("rule order must be >= 1")
    x, w = roots_hermite(q)
    return x, w / np.sqrt(np.pi)


@dataclass(frozen=True)
class GaussianRule:
    """Tensor rule with q points per real axis (2n axes)."""
    q: int
    t: WeightVector

    def __post_init__(self):
        if not isinstance(self.t, WeightVector):
            object.__setattr__(self, "t", WeightVector(self.t))
        if self.q < 1:
            raise ValueError("rule order must be >= 1")

    @property
    def size(self) -> int:
        return self.q ** (2 * self.t.n)

    def mode_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Complex nodes and weights for one standardized mode (t = 1)."""
        x, w = hermite_rule(self.q)
        return (x[:, None] + 1j * x[None, :]).ravel(), (w[:, None] * w[None, :]).ravel()

    def chunks(self, chunk: int = 1 << 18):
        """Yield (points (N, n), weights (N,)) blocks covering the full tensor grid."""
        u, wu = self.mode_nodes()
        sq = np.sqrt(self.t.array)
        n = self.t.n
        per = u.size
        total = per ** n
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total))
            pts = np.empty((idx.size, n), dtype=np.complex128)
            wts = np.ones(idx.size)
            rem = idx
            for j in range(n - 1, -1, -1):
                k = rem % per
                rem = rem // per
                pts[:, j] = sq[j] * u[k]
                wts *= wu[k]
            yield pts, wts


def _check_finite(vals):
    if not np.all(np.isfinite(vals)):
        raise IntegrationFailure("integrand returned non-finite values")


def integrate_gaussian(f, t, q: int = 40, vectorized: bool = True, max_nodes: int = 1 << 26):
    """Tensor Gauss-Hermite estimate of ``int f dmu_t``.

    ``f`` receives an ``(N, n)`` array of points when ``vectorized`` (else one point).
    """
    rule = GaussianRule(q, t if isinstance(t, WeightVector) else WeightVector(t))
    if rule.size > max_nodes:
        raise ValueError(f"tensor rule has {rule.size} nodes (limit {max_nodes}); "
                         "use the projected rule or Monte Carlo")
    acc = 0.0 + 0j
    for pts, wts in rule.chunks():
        vals = f(pts) if vectorized else np.array([f(p) for p in pts])
        vals = np.asarray(vals)
        _check_finite(vals)
        acc = acc + np.tensordot(wts, vals, axes=(0, 0))
    return acc


def functional_matrix(pairs, t_meas) -> np.ndarray:
    """Coefficients of real-linear functionals in standardized coordinates.

    Each entry of ``pairs`` is ``(alpha, beta)`` (length-n real arrays) for the
    functional ``sum_j alpha_j Re v_j + beta_j Im v_j`` with ``v ~ mu_t``.  Returns
    ``A`` of shape (2n, m) such that the functional equals ``A.T @ u`` where ``u``
    has density ``pi^-n e^{-|u|^2}``.
    """
    sq = np.sqrt(_weights(t_meas))
    cols = [np.concatenate([np.asarray(a, float) * sq, np.asarray(b, float) * sq]) for a, b in pairs]
    return np.stack(cols, axis=1)


def sigma_functional(z, t_sym) -> tuple[np.ndarray, np.ndarray]:
    """(alpha, beta) for ``v -> sigma_t(v, z) = Im <v, z>_t``."""
    z = np.asarray(z, dtype=np.complex128)
    tt = _weights(t_sym)
    return -z.imag / tt, z.real / tt


def re_inner_functional(z, t_sym) -> tuple[np.ndarray, np.ndarray]:
    """(alpha, beta) for ``v -> Re <v, z>_t``."""
    z = np.asarray(z, dtype=np.complex128)
    tt = _weights(t_sym)
    return z.real / tt, z.imag / tt


def integrate_gaussian_projected(F, A: np.ndarray, q: int = 200, rank_tol: float = 1e-12):
    """``E[F(A.T u)]`` for standardized u, using a rule on the span of A's columns.

    ``F`` receives an ``(N, m)`` real array of functional values.  Exact (up to the
    1-d rule) for any F, since only the projection onto span(A) matters.
    """
    A = np.atleast_2d(np.asarray(A, float))
    m = A.shape[1]
    if not np.any(A):
        return F(np.zeros((1, m)))[0]
    U, S, Vh = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(S > rank_tol * S[0]))
    M = S[:r, None] * Vh[:r]                      # (r, m)
    x, w = hermite_rule(q)
    grids = np.meshgrid(*([x] * r), indexing="ij")
    C = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack(np.meshgrid(*([w] * r), indexing="ij"), 0).reshape(r, -1), axis=0)
    vals = np.asarray(F(C @ M))
    _check_finite(vals)
    return np.tensordot(W, vals, axes=(0, 0))


def monte_carlo_gaussian(f, t, N: int, seed: int, tag: str = "", chunk: int = 1 << 16):
    """Monte Carlo estimate of ``int f dmu_t`` with its standard error.

    The stream is Philox keyed by ``(seed, crc32(tag))`` so parallel callers with
    distinct tags draw independent, reproducible samples.
    """
    if N < 2:
        raise ValueError("need at least two samples")
    tt = _weights(t)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(tag.encode()),))
    rng = np.random.Generator(np.random.Philox(ss))
    s1 = 0.0 + 0j
    s2 = 0.0
    done = 0
    scale = np.sqrt(tt / 2.0)
    while done < N:
        k = min(chunk, N - done)
        g = rng.standard_normal((k, 2, tt.size))
        pts = scale * (g[:, 0] + 1j * g[:, 1])
        vals = np.asarray(f(pts), dtype=np.complex128)
        _check_finite(vals)
        s1 += vals.sum()
        s2 += float(np.sum(np.abs(vals) ** 2))
        done += k
    mean = s1 / N
    var = max(s2 / N - abs(mean) ** 2, 0.0) * N / (N - 1)
    return complex(mean), float(np.sqrt(var / N))


# ---------------------------------------------------------------- semi-infinite

# Gauss-Kronrod 7/15 on [-1, 1]
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.0])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
XK15 = np.concatenate([-_XK[:-1], _XK[::-1]])
WK15 = np.concatenate([_WK[:-1], _WK[::-1]])
WG7 = np.zeros(15)
# Gauss nodes are the odd-position Kronrod nodes (indices 1, 3, 5, 7 from the ends)
for _i, _g in zip((1, 3, 5, 7), _WG):
    WG7[_i] = _g
    WG7[14 - _i] = _g


@dataclass(frozen=True)
class SemiInfiniteRule:
    """Adaptive rule on ``(0, inf)^m``.

    ``rates`` are the exponential decay rates (Re Lambda_j > 0).  The envelope
    assumption ``|f(s)| <= amplitude * prod s_j^p_j e^{-rate_j s_j}`` is used only
    for the truncation-tail estimate beyond ``u = cutoff``.
    """
    m: int
    rates: tuple
    budget: int = 200_000
    epsrel: float = 1e-10
    epsabs: float = 1e-14
    powers: tuple = field(default=None)
    amplitude: float = 1.0
    cutoff: float = None

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if len(rates) != self.m or any(not r > 0 for r in rates):
            raise ValueError(f"need {self.m} positive rates, got {rates}")
        object.__setattr__(self, "rates", rates)
        p = self.powers if self.powers is not None else (0,) * self.m
        object.__setattr__(self, "powers", tuple(float(x) for x in p))
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", 40.0 + 2.0 * max(self.powers, default=0.0))

    def doubled(self) -> "SemiInfiniteRule":
        from dataclasses import replace
        return replace(self, budget=2 * self.budget)

    def tail_bound(self) -> float:
        """Envelope mass outside ``[0, cutoff]^m`` in u-coordinates."""
        full = 1.0
        inside = 1.0
        for p, r in zip(self.powers, self.rates):
            g = np.exp(gammaln(p + 1.0)) / r ** (p + 1.0)
            full *= g
            inside *= g * gammainc(p + 1.0, self.cutoff)
        return float(self.amplitude * max(full - inside, 0.0))


@dataclass
class SemiInfiniteResult:
    value: object
    error: float
    evaluations: int
    converged: bool
    boxes: int


def _box_rule(lo, hi, m):
    """Tensor K15 nodes in box [lo, hi] and the K15 / G7 weight vectors."""
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    axes = [mid[j] + half[j] * XK15 for j in range(m)]
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    vol = float(np.prod(half))
    wk = vol * _tensor(WK15, m)
    wg = vol * _tensor(WG7, m)
    return grid, wk, wg


@lru_cache(maxsize=8)
def _tensor_cached(which: str, m: int):
    base = WK15 if which == "k" else WG7
    out = base
    for _ in range(m - 1):
        out = np.multiply.outer(out, base)
    return out.ravel()


def _tensor(base, m):
    return _tensor_cached("k" if base is WK15 else "g", m)


def integrate_semiinfinite(f, rule: SemiInfiniteRule, strict: bool = True) -> SemiInfiniteResult:
    """Globally adaptive Gauss-Kronrod cubature of ``int_{(0,inf)^m} f(s) ds``.

    ``f`` receives an ``(N, m)`` array of s-values and returns an array whose first
    axis is N (trailing axes make the integrand vector or matrix valued).
    """
    m = rule.m
    rates = np.array(rule.rates)
    jac = 1.0 / float(np.prod(rates))
    U = rule.cutoff
    edges = [0.0] + [b for b in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0) if b < U] + [U]
    evals = 0
    heap: list = []
    counter = itertools.count()
    total = None
    err_total = 0.0

    def evaluate(lo, hi):
        nonlocal evals
        grid, wk, wg = _box_rule(lo, hi, m)
        vals = np.asarray(f(grid / rates[None, :]))
        _check_finite(vals)
        evals += grid.shape[0]
        k = np.tensordot(wk, vals, axes=(0, 0)) * jac
        g = np.tensordot(wg, vals, axes=(0, 0)) * jac
        return k, float(np.max(np.abs(k - g)))

    for cell in itertools.product(range(len(edges) - 1), repeat=m):
        lo = np.array([edges[c] for c in cell])
        hi = np.array([edges[c + 1] for c in cell])
        val, err = evaluate(lo, hi)
        total = val if total is None else total + val
        err_total += err
        heapq.heappush(heap, (-err, next(counter), lo, hi, val))

    tail = rule.tail_bound()

    def target():
        return max(rule.epsabs, rule.epsrel * float(np.max(np.abs(total))))

    while err_total + tail > target() and evals < rule.budget and heap:
        negerr, _, lo, hi, val = heapq.heappop(heap)
        j = int(np.argmax(hi - lo))
        mid = 0.5 * (lo[j] + hi[j])
        hi1 = hi.copy()
        hi1[j] = mid
        lo2 = lo.copy()
        lo2[j] = mid
        v1, e1 = evaluate(lo, hi1)
        v2, e2 = evaluate(lo2, hi)
        total = total - val + v1 + v2
        err_total += e1 + e2 + negerr
        heapq.heappush(heap, (-e1, next(counter), lo, hi1, v1))
        heapq.heappush(heap, (-e2, next(counter), lo2, hi, v2))

    # resum to avoid drift from incremental updates
    total = sum((item[4] for item in heap[1:]), heap[0][4])
    err_total = float(sum(-item[0] for item in heap))
    error = err_total + tail
    ok = error <= target() or error <= rule.epsabs
    res = SemiInfiniteResult(total, error, evals, ok, len(heap))
    if strict and not ok:
        raise ToleranceNotMet("semi-infinite integral did not meet tolerance", total, error)
    return res
