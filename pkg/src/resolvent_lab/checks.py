"""Verification battery for the operator identities of the resolvent algebra.

Residuals of truncation-limited identities are measured on the test subspace
``V_k`` spanned by basis vectors of degree ``<= k`` (default ``k = D // 2``), as
the norm of the compression ``P_k X P_k``.  The column form ``|X P_k|`` is
reported alongside as a diagnostic.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import factorial

import numpy as np
from scipy.special import gammainc

from .fock import FockSpace, as_phase, norm_t_sq, sigma_t
from .operators import (ABSTRACT, ResolventDescriptor, canonical_toeplitz, op_norm,
                        resolvent_entries, resolvent_matrix, weyl_block, weyl_matrix)
from .quadrature import SemiInfiniteRule, integrate_semiinfinite

MACHINE_TOL = 1e-10
HALVING_FLOOR = 1e-13


class ParameterDomainError(ValueError):
    pass


@dataclass
class RelationReport:
    relation: str
    params: dict
    residual: float
    tolerance: float
    passed: bool
    convention: str = ABSTRACT
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EpsilonModel:
    """Truncation tolerance ``eps(D) = c |f| |g| sqrt(max(|f|,|g|)^2 / (D/2))``.

    A heuristic shape; the constant is calibrated on a declared fixture family.
    """
    c: float = 1.0

    def __call__(self, D: int, f, g, t) -> float:
        nf = np.sqrt(norm_t_sq(f, t))
        ng = np.sqrt(norm_t_sq(g, t))
        return float(self.c * nf * ng * np.sqrt(max(nf, ng) ** 2 / (D / 2.0)))


# calibrate_epsilon() (seed 7, 40 draws, D in 8, 16, 32, safety 2) returns c = 1.816
# rounded up here.
DEFAULT_EPS = EpsilonModel(c=1.82)
CALIBRATION_SEED = 7


def calibration_family(seed: int, draws: int):
    """Seeded draws for n = 1, t = 1: f, g uniform in the unit disc, real lam, mu with
    1 <= |lam|, |mu| <= 2 and random signs, resampled until |lam + mu| >= 1/2."""
    rng = np.random.default_rng(seed)

    def disc():
        return np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())

    def real():
        return float(rng.choice([-1.0, 1.0]) * rng.uniform(1.0, 2.0))

    out = []
    for _ in range(draws):
        f, g, lam, mu = disc(), disc(), real(), real()
        while abs(lam + mu) < 0.5:
            mu = real()
        out.append({"lam": lam, "mu": mu, "f": [f], "g": [g]})
    return out


def calibrate_epsilon(seed: int = CALIBRATION_SEED, draws: int = 40, Ds=(8, 16, 32),
                      safety: float = 2.0) -> dict:
    shape = EpsilonModel(1.0)
    worst = {"relation-5": 0.0, "relation-6": 0.0, "shift": 0.0}
    for p in calibration_family(seed, draws):
        for D in Ds:
            sp = FockSpace(1, D)
            e = shape(D, p["f"], p["g"], sp.t)
            for rid in (5, 6):
                r = check_relation(rid, p, sp, tol=np.inf).residual
                worst[f"relation-{rid}"] = max(worst[f"relation-{rid}"], r / e)
            r = shift_covariance_residual((p["lam"], p["f"]), p["g"], sp)["residual"]
            worst["shift"] = max(worst["shift"], r / e)
    return {"worst_ratio": worst, "c": safety * max(worst.values())}


def subspace_norms(X: np.ndarray, space: FockSpace, k: int | None = None) -> tuple[float, float]:
    """(|P_k X P_k|, |X P_k|) for the degree <= k test subspace."""
    k = space.D // 2 if k is None else k
    idx = space.low_degree(k)
    return op_norm(X[np.ix_(idx, idx)]), op_norm(X[:, idx])


def _abstract(lam, z, space):
    return resolvent_matrix(ResolventDescriptor(lam, z), space, ABSTRACT, check=False).entries


def _real(x, name):
    x = complex(x)
    if x.imag != 0.0:
        raise ParameterDomainError(f"{name} must be real for this relation, got {x}")
    if x.real == 0.0:
        raise ParameterDomainError(f"{name} must be nonzero")
    return x.real


def _offaxis(x, name):
    x = complex(x)
    if x.real == 0.0:
        raise ParameterDomainError(f"{name} = {x} lies on the imaginary axis")
    return x


def relation_operator(rid: int, params: dict, space: FockSpace) -> np.ndarray:
    """LHS - RHS of relation ``rid`` in the abstract convention."""
    n = space.n
    I = np.eye(space.dim)
    if rid == 1:
        lam = _offaxis(params["lam"], "lam")
        return _abstract(lam, np.zeros(n), space) + (1j / lam) * I
    f = as_phase(params.get("f", np.zeros(n)), n)
    if rid == 2:
        lam = _offaxis(params["lam"], "lam")
        return _abstract(lam, f, space).conj().T - _abstract(-np.conj(lam), f, space)
    if rid == 3:
        lam = _offaxis(params["lam"], "lam")
        nu = _real(params["nu"], "nu")
        return nu * _abstract(nu * lam, nu * f, space) - _abstract(lam, f, space)
    if rid == 4:
        lam = _offaxis(params["lam"], "lam")
        mu = _offaxis(params["mu"], "mu")
        A, B = _abstract(lam, f, space), _abstract(mu, f, space)
        return A - B - 1j * (mu - lam) * (A @ B)
    g = as_phase(params.get("g", np.zeros(n)), n)
    lam = _real(params["lam"], "lam")
    mu = _real(params["mu"], "mu")
    # the form sigma generating these relations is twice the weighted form
    s = 2.0 * sigma_t(f, g, space.t)
    A, B = _abstract(lam, f, space), _abstract(mu, g, space)
    if rid == 5:
        return A @ B - B @ A - 1j * s * (A @ B @ B @ A)
    if rid == 6:
        if lam + mu == 0.0:
            raise ParameterDomainError("relation (6) needs lam + mu != 0")
        C = _abstract(lam + mu, f + g, space)
        return A @ B - C @ (A + B + 1j * s * (A @ A @ B))
    raise ParameterDomainError(f"unknown relation id {rid}")


def check_relation(rid: int, params: dict, space: FockSpace, tol: float | None = None,
                   eps: EpsilonModel = DEFAULT_EPS, k: int | None = None) -> RelationReport:
    X = relation_operator(rid, params, space)
    clean = {key: (complex(v) if np.isscalar(v) else [complex(x) for x in np.atleast_1d(v)])
             for key, v in params.items()}
    if rid <= 4:
        res = op_norm(X)
        tol = MACHINE_TOL if tol is None else tol
        return RelationReport(f"relation-{rid}", clean, res, tol, res <= tol)
    block, cols = subspace_norms(X, space, k)
    if tol is None:
        tol = eps(space.D, params.get("f", np.zeros(space.n)), params.get("g", np.zeros(space.n)), space.t)
    return RelationReport(f"relation-{rid}", clean, block, tol, block <= tol,
                          extras={"column_residual": cols, "test_degree": space.D // 2 if k is None else k})


def halving_profile(residuals, floor: float = HALVING_FLOOR) -> dict:
    """Ratios r_i / r_{i+1}; a step passes if it at least halves or is already at the floor."""
    steps = []
    for a, b in zip(residuals[:-1], residuals[1:]):
        ratio = a / b if b > 0 else float("inf")
        steps.append({"ratio": ratio, "passed": bool(a <= floor or ratio >= 2.0)})
    return {"residuals": list(map(float, residuals)), "steps": steps,
            "passed": all(s["passed"] for s in steps)}


def relation_d_sweep(rid: int, params: dict, n: int = 1, t=None, Ds=(8, 16, 32)) -> dict:
    res = []
    cols = []
    for D in Ds:
        sp = FockSpace(n, D, t)
        rep = check_relation(rid, params, sp, tol=np.inf)
        res.append(rep.residual)
        cols.append(rep.extras["column_residual"])
    out = halving_profile(res)
    out["column_residuals"] = cols
    out["Ds"] = list(Ds)
    return out


def ccr_residual(z, w, space: FockSpace, k: int | None = None) -> dict:
    """Truncated Weyl relation ``W_z W_w - e^{-i sigma_t(z, w)} W_{z+w}`` on degree <= k vectors."""
    z, w = as_phase(z, space.n), as_phase(w, space.n)
    X = (weyl_matrix(z, space).entries @ weyl_matrix(w, space).entries
         - np.exp(-1j * sigma_t(z, w, space.t)) * weyl_matrix(z + w, space).entries)
    block, cols = subspace_norms(X, space, k)
    return {"residual": cols, "block_residual": block, "D": space.D}


# ---------------------------------------------------------------- Laplace representations

LAPLACE_FORMS = {
    # name: (integrand sign, exponent sign, weyl direction sign, target lambda sign, Re lam sign)
    "repr": (-1j, -1, +1, -1, +1),   # (T + i lam)^-1 = -i int e^{-lam s} W_{sz}
    "repr2": (1j, -1, -1, +1, +1),   # (T - i lam)^-1 = i int e^{-lam s} W_{-sz}
    "repr3": (1j, -1, -1, +1, +1),   # R(lam) = i int e^{-lam s} W_{-sz}, Re lam > 0
    "repr4": (-1j, +1, +1, +1, -1),  # R(lam) = -i int e^{lam s} W_{sz}, Re lam < 0
}


def laplace_block(lam, z, space: FockSpace, form: str, k: int, epsrel=1e-11, budget=400_000):
    """Entrywise Laplace integral of compressed Weyl blocks on the degree <= k subspace."""
    pref, esign, wsign, _, _ = LAPLACE_FORMS[form]
    idx = space.low_degree(k)
    z = as_phase(z, space.n)

    def f(s):
        s = s[:, 0]
        out = np.empty((s.size, idx.size, idx.size), dtype=np.complex128)
        for i, si in enumerate(s):
            out[i] = np.exp(esign * lam * si) * weyl_block(wsign * si * z, space, idx, idx)
        return pref * out

    rule = SemiInfiniteRule(1, (abs(complex(lam).real),), budget=budget, epsrel=epsrel)
    return integrate_semiinfinite(f, rule)


def laplace_representation_residual(desc, space: FockSpace, form: str = "auto", k: int | None = None,
                                    epsrel=1e-11, budget=400_000) -> dict:
    if not isinstance(desc, ResolventDescriptor):
        desc = ResolventDescriptor(*desc)
    lam = desc.lam
    if form == "auto":
        form = "repr3" if lam.real > 0 else "repr4"
    _, _, _, tsign, rsign = LAPLACE_FORMS[form]
    if np.sign(lam.real) != rsign:
        raise ParameterDomainError(f"form {form} needs sign(Re lam) = {rsign}")
    k = space.D // 2 if k is None else k
    idx = space.low_degree(k)
    R = resolvent_matrix(ResolventDescriptor(tsign * lam, desc.z), space).entries[np.ix_(idx, idx)]
    quad = laplace_block(lam, desc.z, space, form, k, epsrel, budget)
    return {"form": form, "residual": op_norm(R - quad.value), "quad_error": quad.error,
            "evaluations": quad.evaluations, "test_degree": k, "D": space.D}


# ---------------------------------------------------------------- Neumann series, powers

def neumann_series_residual(lam0, lam, z, space: FockSpace, K: int = 20) -> dict:
    """Residuals of the partial sums ``sum_{k<=K} (i(lam - lam0))^k R0^{k+1}`` (concrete convention)."""
    lam0, lam = _offaxis(lam0, "lam0"), _offaxis(lam, "lam")
    if not abs(lam - lam0) < abs(lam0):
        raise ParameterDomainError("need |lam - lam0| < |lam0|")
    q_inf = abs(lam - lam0) / abs(lam0.real)     # |lam - lam0| * |R0| for the full operator
    if q_inf >= 1.0:
        raise ParameterDomainError(
            f"|lam - lam0| / |Re lam0| = {q_inf:.3f} >= 1: the disc condition |lam - lam0| < |lam0| "
            "does not guarantee convergence off the real axis")
    R0 = resolvent_matrix(ResolventDescriptor(lam0, z), space).entries
    R = resolvent_matrix(ResolventDescriptor(lam, z), space).entries
    nR0 = op_norm(R0)
    q = abs(lam - lam0) * nR0
    c = 1j * (lam - lam0)
    term = R0.copy()
    partial = np.zeros_like(R0)
    res = []
    for _ in range(K + 1):
        partial = partial + term
        res.append(op_norm(R - partial))
        term = c * (term @ R0)
    ratios = [b / a for a, b in zip(res[:-1], res[1:]) if a > 1e-15]
    return {"residuals": res, "ratios": ratios, "q": q, "norm_R0": nR0,
            "max_ratio": max(ratios) if ratios else 0.0}


def contour_derivative(F, lam0: complex, order: int, radius: float, points: int = 64) -> np.ndarray:
    """``d^order F / d lam^order`` at lam0 by the trapezoidal Cauchy integral on a circle.

    This is the holomorphic counterpart of complex-step differentiation; the error
    decays like ``(radius / rho)^points`` with rho the distance to the nearest pole.
    """
    theta = 2 * np.pi * np.arange(points) / points
    acc = 0
    for th in theta:
        acc = acc + F(lam0 + radius * np.exp(1j * th)) * np.exp(-1j * order * th)
    return acc * factorial(order) / (points * radius ** order)


def power_formula_residual(lam0, z, space: FockSpace, k: int, points: int = 64) -> dict:
    """Compare ``R(lam0)^k`` with scaled ``(k-1)``-th lam-derivatives of R.

    Reports the coefficient derived from the Neumann series ``(-i)^(k-1)/(k-1)!``
    in the concrete convention, and the printed ``i^(k-1)/(k-1)!`` in both conventions.
    """
    lam0 = _offaxis(lam0, "lam0")
    T = canonical_toeplitz(z, space).entries
    radius = 0.5 * abs(lam0.real)

    def conc(l):
        return resolvent_entries(l, T)

    def abst(l):
        return -resolvent_entries(l, T)

    out = {"k": k, "radius": radius, "points": points}
    for name, F in (("concrete", conc), ("abstract", abst)):
        Rk = np.linalg.matrix_power(F(lam0), k)
        d = contour_derivative(F, lam0, k - 1, radius, points) if k > 1 else F(lam0)
        scale = max(op_norm(Rk), 1e-300)
        for label, coef in (("derived", (-1j) ** (k - 1)), ("printed", 1j ** (k - 1))):
            if name == "abstract" and label == "derived":
                continue
            out[f"{name}_{label}"] = op_norm(Rk - coef / factorial(k - 1) * d) / scale
    return out


# ---------------------------------------------------------------- shift covariance

def shift_covariance_residual(desc, w, space: FockSpace, k: int | None = None) -> dict:
    """``W_w R(lam, z) W_{-w} - R(lam + 2i sigma_t(z, w), z)`` on the test subspace."""
    if not isinstance(desc, ResolventDescriptor):
        desc = ResolventDescriptor(*desc)
    w = as_phase(w, space.n)
    lam2 = desc.lam + 2j * sigma_t(desc.z, w, space.t)
    R = resolvent_matrix(desc, space).entries
    R2 = resolvent_matrix(ResolventDescriptor(lam2, desc.z), space).entries
    Ww = weyl_matrix(w, space).entries
    Wm = weyl_matrix(-w, space).entries
    X = Ww @ R @ Wm - R2
    block, cols = subspace_norms(X, space, k)
    return {"residual": block, "column_residual": cols, "shifted_lambda": lam2, "D": space.D}


def shift_d_sweep(desc, w, n=1, t=None, Ds=(8, 16, 32)) -> dict:
    res = [shift_covariance_residual(desc, w, FockSpace(n, D, t))["residual"] for D in Ds]
    out = halving_profile(res)
    out["Ds"] = list(Ds)
    return out


# ---------------------------------------------------------------- Toeplitz series

def series_tail_bound(lam, z, t, M: int) -> float:
    """``int e^{-Re lam s} P(M+1, s^2 |z|^2 / 2) ds`` (regularized lower gamma)."""
    a = norm_t_sq(z, t)
    lr = complex(lam).real
    if a == 0.0:
        return 0.0

    def f(s):
        s = s[:, 0]
        return np.exp(-lr * s) * gammainc(M + 1, 0.5 * a * s * s)

    rule = SemiInfiniteRule(1, (lr,), epsrel=1e-10, epsabs=1e-300, powers=(0,))
    return float(integrate_semiinfinite(f, rule, strict=False).value.real)


def toeplitz_resolvent_power_blocks(lam, z, space: FockSpace, orders, rows, sign: int = +1,
                                    epsrel=1e-12, budget=2_000_000):
    """Blocks of ``T_{(lam + sign*2i sigma_t(., z))^-j}`` for each j in ``orders``.

    Built as ``1/(j-1)! int s^(j-1) e^{-lam s - s^2 |z|^2/2} W_{-sign s z} ds``; exact
    compressions, independent of the cutoff D.
    """
    a = norm_t_sq(z, space.t)
    z = as_phase(z, space.n)
    orders = list(orders)
    logf = np.array([np.log(float(factorial(j - 1))) for j in orders])

    def f(s):
        s = s[:, 0]
        out = np.empty((s.size, len(orders), rows.size, rows.size), dtype=np.complex128)
        for i, si in enumerate(s):
            base = np.exp(-lam * si - 0.5 * a * si * si) * weyl_block(-sign * si * z, space, rows, rows)
            if si > 0:
                pw = np.exp((np.array(orders) - 1) * np.log(si) - logf)
            else:
                pw = np.array([1.0 if j == 1 else 0.0 for j in orders])
            out[i] = pw[:, None, None] * base[None]
        return out

    rule = SemiInfiniteRule(1, (complex(lam).real,), epsrel=epsrel, epsabs=1e-15, budget=budget,
                            powers=(max(orders) - 1,), amplitude=1.0 / np.exp(logf.max()))
    return integrate_semiinfinite(f, rule)


def series_expansion_residual(desc, space: FockSpace, M_max: int = 8, k: int | None = None,
                              symbol_sign: int = +1) -> dict:
    """Residuals ``|P_k (i R_abs - S_M) P_k|`` for M = 0..M_max.

    ``S_M = sum_{j<=M} |z|^{2j} / (2^j j!) (2j)! T_{(lam + symbol_sign 2i sigma_t(., z))^-(2j+1)}``.
    ``symbol_sign=+1`` is the form obtained from expanding ``W_{-sz}``; ``-1`` is the printed form.

    The reference ``P_k i R_abs P_k`` is the exact compression, integrated from Weyl
    blocks; ``residuals_truncated`` uses the cutoff-D resolvent instead and carries
    its truncation gap on top of the series remainder.
    """
    if not isinstance(desc, ResolventDescriptor):
        desc = ResolventDescriptor(*desc)
    lam = desc.lam
    if lam.real <= 0:
        raise ParameterDomainError("series expansion needs Re lam > 0")
    z = np.array(desc.z)
    k = space.D // 2 if k is None else k
    idx = space.low_degree(k)
    iR_trunc = 1j * resolvent_matrix(desc, space, ABSTRACT).entries[np.ix_(idx, idx)]
    ref = laplace_block(lam, z, space, "repr3", k)
    iR = -1j * ref.value
    a = norm_t_sq(z, space.t)
    orders = [2 * j + 1 for j in range(M_max + 1)]
    quad = toeplitz_resolvent_power_blocks(lam, z, space, orders, idx, sign=symbol_sign)
    partial = np.zeros_like(iR)
    res, res_trunc, bounds = [], [], []
    for j in range(M_max + 1):
        coef = a ** j / (2.0 ** j * factorial(j)) * factorial(2 * j)
        partial = partial + coef * quad.value[j]
        res.append(op_norm(iR - partial))
        res_trunc.append(op_norm(iR_trunc - partial))
        bounds.append(series_tail_bound(lam, z, space.t, j))
    return {"residuals": res, "tail_bounds": bounds, "residuals_truncated": res_trunc,
            "truncation_gap": op_norm(iR_trunc - iR), "quad_error": quad.error + ref.error,
            "test_degree": k, "D": space.D, "norm_half_sq": a, "symbol_sign": symbol_sign}
