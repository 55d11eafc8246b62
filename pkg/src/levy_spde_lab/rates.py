"""Dissipativity constant and explicit deviation functions.

All suprema here are one-dimensional concave maximisations of the form
sup_{lam >= 0} (r lam - phi(lam)) with phi convex, phi(0) = phi'(0) = 0. They
are solved by bracketing the root of phi'(lam) = r and polishing with Brent's
method, so accuracy is set by the root, not by a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .noise import JumpSpec

__all__ = [
    "INFINITE",
    "compute_K",
    "big_lambda",
    "big_lambda_derivative",
    "gamma",
    "gamma_star",
    "alpha_T",
    "alpha_path_T",
    "alpha_conjugate",
    "eta",
    "RateFunctionSet",
]

INFINITE = math.inf
"""Marker for an unbounded conjugate; returned deliberately, never by overflow."""

LAMBDA_1 = math.pi**2
_EXP_LIMIT = 700.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def compute_K(constants: dict, variant: str = "lipschitz") -> tuple[float, bool]:
    """Dissipativity constant K and whether it is positive.

    lipschitz: K = 2 lambda_1 - (2 C_f + C_sigma^2 + C_G)
    cubic:     K = 2 lambda_1 - 2 C_1 - C_sigma^2 - C_G
    """
    c_sigma = float(constants.get("c_sigma", 0.0))
    c_g = float(constants.get("c_g", 0.0))
    if c_sigma < 0 or c_g < 0:
        raise ValueError("C_sigma and C_G must be nonnegative")
    if variant == "lipschitz":
        c_f = float(constants["c_f"])
        if c_f < 0:
            raise ValueError("C_f must be nonnegative")
        k = 2 * LAMBDA_1 - (2 * c_f + c_sigma**2 + c_g)
    elif variant == "cubic":
        k = 2 * LAMBDA_1 - 2 * float(constants["c1"]) - c_sigma**2 - c_g
    else:
        raise ValueError(f"unknown model variant {variant!r}")
    return k, k > 0


def _jump_quadrature(jumps: JumpSpec | None):
    if jumps is None:
        return np.zeros(0), np.zeros(0)
    return jumps.envelope_nodes, jumps.weights


def _exp_minus_linear(x):
    """e^x - x - 1, accurate for small x."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    out = np.expm1(np.where(small, 0.0, x)) - np.where(small, 0.0, x)
    xs = np.where(small, x, 0.0)
    series = xs * xs * (0.5 + xs * (1 / 6 + xs * (1 / 24 + xs * (1 / 120 + xs * (1 / 720)))))
    return np.where(small, series, out)


def _check_exponent(lam, g):
    if g.size and lam * float(np.max(g)) > _EXP_LIMIT:
        raise OverflowError(f"Lambda({lam}) overflows: exponent {lam * float(np.max(g)):.1f}")


def big_lambda(lam: float, jumps: JumpSpec | None) -> float:
    """Lambda(lam) = int (exp(lam G-bar(v)) - lam G-bar(v) - 1) theta(dv)."""
    if lam < 0:
        raise ValueError("Lambda is evaluated at lam >= 0")
    g, w = _jump_quadrature(jumps)
    _check_exponent(lam, g)
    return float(np.sum(w * _exp_minus_linear(lam * g)))


def big_lambda_derivative(lam: float, jumps: JumpSpec | None) -> float:
    g, w = _jump_quadrature(jumps)
    _check_exponent(lam, g)
    return float(np.sum(w * g * np.expm1(lam * g)))


def eta(t, K: float):
    """eta(t) = (1 - exp(-K t)) / K."""
    return -np.expm1(-K * np.asarray(t, dtype=float)) / K


def _semi_legendre(r: float, phi: Callable, dphi: Callable) -> float:
    """sup_{lam >= 0} (r lam - phi(lam)) for convex phi with phi(0) = phi'(0) = 0."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if r == 0 or dphi(0.0) >= r:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(2000):
        if dphi(hi) >= r:
            break
        lo, hi = hi, hi * 2.0
    else:
        return INFINITE
    lam = brentq(lambda s: dphi(s) - r, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    return max(r * lam - phi(lam), 0.0)


def gamma(lam: float, a: float, sigma_bar: float, jumps: JumpSpec | None) -> float:
    """gamma_a(lam) = Lambda(lam) + a sigma_bar^2 lam^2 / 2."""
    return big_lambda(lam, jumps) + a * sigma_bar**2 * lam**2 / 2


def _degenerate(sigma_bar, jumps):
    g, w = _jump_quadrature(jumps)
    return sigma_bar == 0 and not np.any((g > 0) & (w > 0))


def gamma_star(r: float, a: float, sigma_bar: float, jumps: JumpSpec | None) -> float:
    """gamma*_a(r) = sup_{lam >= 0} (r lam - gamma_a(lam)).

    Returns :data:`INFINITE` for r > 0 when there is no noise at all.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if _degenerate(sigma_bar, jumps):
        return 0.0 if r == 0 else INFINITE
    q = a * sigma_bar**2
    return _semi_legendre(
        r,
        lambda s: big_lambda(s, jumps) + q * s * s / 2,
        lambda s: big_lambda_derivative(s, jumps) + q * s,
    )


def _require_K(K):
    if not K > 0:
        raise ValueError(f"K = {K} must be positive for the deviation bounds")


def _invariant_time_integral(lam, K, T, jumps, derivative=False):
    """int_0^T Lambda(exp(-K t) lam) dt via s = exp(-K t).

    The integral becomes (1/K) int_{exp(-KT)}^1 Lambda(s lam) / s ds, smooth on
    [0, 1], so a single Gauss-Legendre rule covers any horizon including T = inf.
    """
    g, w = _jump_quadrature(jumps)
    if g.size == 0 or lam == 0:
        return 0.0
    s0 = math.exp(-K * T) if math.isfinite(T) else 0.0
    s = 0.5 * (1 - s0) * _GL_NODES + 0.5 * (1 + s0)
    ws = 0.5 * (1 - s0) * _GL_WEIGHTS
    _check_exponent(lam, g)
    y = np.outer(s * lam, g)
    if derivative:
        vals = np.sum(w * g * np.expm1(y), axis=1)
    else:
        vals = np.sum(w * _exp_minus_linear(y), axis=1) / s
    return float(np.sum(ws * vals)) / K


def _path_nodes(T, K):
    """Composite Gauss-Legendre nodes on [0, T], panels no longer than 10 / K."""
    panels = max(1, math.ceil(K * T / 10.0))
    edges = np.linspace(0.0, T, panels + 1)
    t, wt = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        t.append(0.5 * (b - a) * _GL_NODES + 0.5 * (b + a))
        wt.append(0.5 * (b - a) * _GL_WEIGHTS)
    return np.concatenate(t), np.concatenate(wt)


def alpha_T(r: float, T: float, K: float, sigma_bar: float, jumps: JumpSpec | None) -> float:
    """Deviation function for the time-T transition law.

    sup_{lam > 0} { r lam - int_0^T Lambda(exp(-K t) lam) dt
                    - sigma_bar^2 lam^2 (1 - exp(-2 K T)) / (4 K) }

    ``T = math.inf`` gives the large-time limit.
    """
    _require_K(K)
    if T <= 0:
        raise ValueError("T must be positive")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if _degenerate(sigma_bar, jumps):
        return 0.0 if r == 0 else INFINITE
    q = sigma_bar**2 * (-math.expm1(-2 * K * T) if math.isfinite(T) else 1.0) / (2 * K)
    return _semi_legendre(
        r,
        lambda s: _invariant_time_integral(s, K, T, jumps) + q * s * s / 2,
        lambda s: _invariant_time_integral(s, K, T, jumps, derivative=True) + q * s,
    )


def alpha_path_T(r: float, T: float, K: float, sigma_bar: float, jumps: JumpSpec | None) -> float:
    """Deviation function for the path law under the L1-in-time metric.

    sup_{lam > 0} { lam r - int_0^T Lambda(eta(t) lam) dt
                    - (sigma_bar^2 lam^2 / 2) int_0^T eta(t)^2 dt }
    """
    _require_K(K)
    if not (T > 0 and math.isfinite(T)):
        raise ValueError("T must be positive and finite")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if _degenerate(sigma_bar, jumps):
        return 0.0 if r == 0 else INFINITE
    t, wt = _path_nodes(T, K)
    e = eta(t, K)
    q = sigma_bar**2 * float(np.sum(wt * e * e))
    g, w = _jump_quadrature(jumps)

    def phi(s):
        if g.size == 0 or s == 0:
            return q * s * s / 2
        _check_exponent(s * e.max(), g)
        return float(np.sum(wt * np.sum(w * _exp_minus_linear(np.outer(e * s, g)), axis=1))) + q * s * s / 2

    def dphi(s):
        if g.size == 0 or s == 0:
            return q * s
        _check_exponent(s * e.max(), g)
        return float(np.sum(wt * e * np.sum(w * g * np.expm1(np.outer(e * s, g)), axis=1))) + q * s

    return _semi_legendre(r, phi, dphi)


def eta_squared_integral(T: float, K: float) -> float:
    """int_0^T eta(t)^2 dt by the same composite quadrature used in alpha_path_T."""
    t, wt = _path_nodes(T, K)
    e = eta(t, K)
    return float(np.sum(wt * e * e))


def alpha_conjugate(alpha: Callable[[float], float], lam: float, r_max: float = 1.0, grid: int = 129) -> float:
    """alpha*(lam) = sup_{r >= 0} (r lam - alpha(r)).

    Grid search on [0, r_max] (doubling r_max while the maximiser sits on the
    right edge), then bounded Brent refinement between the neighbours of the
    best grid point. Raises ValueError if alpha is visibly non-convex.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0:
        return 0.0
    for _ in range(200):
        rs = np.linspace(0.0, r_max, grid)
        vals = np.array([alpha(float(r)) for r in rs])
        finite = np.isfinite(vals)
        f = vals[finite]
        if f.size >= 3:
            second = f[:-2] - 2 * f[1:-1] + f[2:]
            scale = max(1.0, float(np.max(np.abs(f))))
            if np.any(second < -1e-9 * scale):
                raise ValueError("alpha is not convex on the evaluation grid")
        obj = np.where(finite, lam * rs - np.where(finite, vals, 0.0), -np.inf)
        i = int(np.argmax(obj))
        if i < grid - 1 or not finite[-1]:
            break
        r_max *= 2.0
    else:
        raise OverflowError("semi-Legendre transform did not stabilise")
    lo, hi = rs[max(i - 1, 0)], rs[min(i + 1, grid - 1)]
    best = float(obj[i])
    if hi > lo:
        res = minimize_scalar(
            lambda r: -(lam * r - alpha(float(r))),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12 * max(r_max, 1.0)},
        )
        if np.isfinite(res.fun):
            best = max(best, -float(res.fun))
    return best


@dataclass(frozen=True)
class RateFunctionSet:
    """Evaluators for K, Lambda, gamma_a, gamma*_a, alpha_T, alpha^P_T and eta."""

    K: float
    sigma_bar: float
    jumps: JumpSpec | None
    T: float

    @classmethod
    def from_model(cls, model, T: float) -> RateFunctionSet:
        return cls(model.K, model.sigma_bar, model.jumps_at_modes(), T)

    @property
    def positive(self) -> bool:
        return self.K > 0

    def big_lambda(self, lam):
        return big_lambda(lam, self.jumps)

    def gamma(self, lam, a):
        return gamma(lam, a, self.sigma_bar, self.jumps)

    def gamma_star(self, r, a):
        return gamma_star(r, a, self.sigma_bar, self.jumps)

    def alpha_T(self, r, T=None):
        return alpha_T(r, self.T if T is None else T, self.K, self.sigma_bar, self.jumps)

    def alpha_path_T(self, r, T=None):
        return alpha_path_T(r, self.T if T is None else T, self.K, self.sigma_bar, self.jumps)

    def eta(self, t):
        return eta(t, self.K)

    def alpha_T_lower(self, r):
        """(1/K) gamma*_{1/2}(K r), the lower bound of alpha_T."""
        return self.gamma_star(self.K * r, 0.5) / self.K

    def alpha_path_T_lower(self, r, T=None):
        """T gamma*_1(r K / T), the lower bound of alpha^P_T."""
        T = self.T if T is None else T
        return T * self.gamma_star(r * self.K / T, 1.0)

    def alpha_invariant(self, r):
        """Deviation function for the invariant law: (1/K) gamma*_{1/2}(K r)."""
        return self.alpha_T_lower(r)

    @cached_property
    def _scale_hint(self):
        return max(self.sigma_bar, 1e-3)

    def alpha_invariant_conjugate(self, lam):
        return alpha_conjugate(self.alpha_invariant, lam, r_max=self._scale_hint * max(lam, 1.0) / self.K)
