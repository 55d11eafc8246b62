"""Sine-basis representation of L2(0, 1) and the deterministic operators.

Fields are stored as coefficient vectors against e_k(xi) = sqrt(2) sin(k pi xi),
k = 1..n, which diagonalise the Dirichlet Laplacian with eigenvalues
lambda_k = (k pi)^2. Most functions accept either a :class:`SpectralField` or a
raw array whose last axis holds the modes, so that ensembles can be processed
as ``(members, modes)`` batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

__all__ = [
    "SpectralField",
    "Reaction",
    "ZeroReaction",
    "AffineReaction",
    "BoundedReaction",
    "CubicReaction",
    "BlowUpError",
    "eigenvalues",
    "hnorm",
    "project",
    "pad",
    "semigroup_factor",
    "sine_transform",
    "inverse_sine_transform",
    "eval_reaction",
    "dealiased_grid_size",
]


class BlowUpError(FloatingPointError):
    """Raised when a field becomes non-finite or exceeds the blow-up threshold."""

    def __init__(self, message, step=None, member=None):
        super().__init__(message)
        self.step = step
        self.member = member


def _coeffs(x) -> np.ndarray:
    if isinstance(x, SpectralField):
        return x.coeffs
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class SpectralField:
    """A point of the Galerkin space H_n, as sine coefficients."""

    coeffs: np.ndarray = field()

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        if c.size < 1:
            raise ValueError("a spectral field needs at least one mode")
        if not np.all(np.isfinite(c)):
            raise BlowUpError("spectral field has non-finite coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, n: int) -> SpectralField:
        return cls(np.zeros(n))

    @classmethod
    def basis(cls, k: int, n: int, amplitude: float = 1.0) -> SpectralField:
        """amplitude * e_k embedded in n modes (k is 1-based)."""
        if not 1 <= k <= n:
            raise ValueError(f"mode {k} outside 1..{n}")
        c = np.zeros(n)
        c[k - 1] = amplitude
        return cls(c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def norm(self, theta: float = 0.0) -> float:
        return float(hnorm(self, theta))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)

    def __len__(self):
        return self.coeffs.size

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())


def eigenvalues(n: int) -> np.ndarray:
    """Dirichlet eigenvalues (k pi)^2 for k = 1..n."""
    k = np.arange(1, n + 1, dtype=float)
    return (k * np.pi) ** 2


def hnorm(x, theta: float = 0.0):
    """H_theta norm, (sum_k lambda_k^theta x_k^2)^(1/2), over the last axis.

    theta = 0 is the L2 norm, theta = 1 the V = H^1_0 norm and theta = -1 the
    dual norm on V*.
    """
    c = _coeffs(x)
    if theta == 0:
        return np.sqrt(np.sum(c * c, axis=-1))
    w = eigenvalues(c.shape[-1]) ** theta
    return np.sqrt(np.sum(w * c * c, axis=-1))


def project(x, n: int):
    """Orthogonal projection P_n onto the first n modes."""
    if n < 1:
        raise ValueError("projection needs n >= 1")
    if isinstance(x, SpectralField):
        return SpectralField(x.coeffs[:n])
    return np.asarray(x, dtype=float)[..., :n]


def pad(x, n: int):
    """Embed x into n >= len(x) modes by zero padding."""
    c = _coeffs(x)
    if c.shape[-1] > n:
        raise ValueError(f"cannot pad {c.shape[-1]} modes into {n}")
    out = np.zeros(c.shape[:-1] + (n,))
    out[..., : c.shape[-1]] = c
    return SpectralField(out) if isinstance(x, SpectralField) else out


def semigroup_factor(k, t):
    """Action exp(-(k pi)^2 t) of the heat semigroup S(t) on mode k."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("semigroup time must be nonnegative")
    k = np.asarray(k, dtype=float)
    out = np.exp(-((k * np.pi) ** 2) * t)
    return float(out) if out.ndim == 0 else out


def grid_points(grid_size: int) -> np.ndarray:
    """Uniform interior grid xi_j = j / (grid_size + 1), j = 1..grid_size."""
    return np.arange(1, grid_size + 1) / (grid_size + 1)


def sine_transform(x, grid_size: int):
    """Evaluate x(xi_j) = sum_k x_k sqrt(2) sin(k pi xi_j) on the interior grid."""
    c = _coeffs(x)
    n = c.shape[-1]
    if grid_size < n:
        raise ValueError(f"grid of {grid_size} points cannot carry {n} modes")
    padded = np.zeros(c.shape[:-1] + (grid_size,))
    padded[..., :n] = c
    # DST-I: y_j = 2 sum_k c_k sin(pi j k / (N + 1))
    return scipy.fft.dst(padded, type=1, axis=-1, workers=1) / np.sqrt(2.0)


def inverse_sine_transform(samples, n: int | None = None):
    """Recover sine coefficients from interior grid samples.

    Exact for band-limited data; the result is truncated to ``n`` modes
    (default: all ``grid_size`` of them).
    """
    u = np.asarray(samples, dtype=float)
    grid_size = u.shape[-1]
    n = grid_size if n is None else n
    if n > grid_size:
        raise ValueError(f"{grid_size} samples cannot determine {n} modes")
    c = scipy.fft.dst(u, type=1, axis=-1, workers=1) / (np.sqrt(2.0) * (grid_size + 1))
    return c[..., :n]


def dealiased_grid_size(n: int) -> int:
    """Grid size for exact Galerkin projection of cubic products of n modes."""
    return 3 * n


class Reaction:
    """Base class for reaction terms f: H_n -> H_n.

    Subclasses implement :meth:`__call__` on coefficient arrays of shape
    ``(..., n)`` and expose ``lipschitz`` (``None`` when f is not globally
    Lipschitz) and ``variant``.
    """

    variant = "abstract"
    lipschitz: float | None = None

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def truncated(self, n: int) -> Reaction:
        return self

    def describe(self) -> dict:
        return {"type": self.variant}


class ZeroReaction(Reaction):
    variant = "zero"
    lipschitz = 0.0

    def __call__(self, coeffs):
        return np.zeros_like(coeffs, dtype=float)


@dataclass(frozen=True)
class AffineReaction(Reaction):
    """Diagonal affine map f(x)_k = slopes_k x_k + offset_k."""

    slopes: np.ndarray
    offset: np.ndarray
    variant = "affine"

    def __post_init__(self):
        s = np.array(self.slopes, dtype=float).reshape(-1)
        b = np.array(self.offset, dtype=float).reshape(-1)
        if b.size == 1 and s.size > 1:
            b = np.full(s.size, b[0])
        if s.shape != b.shape:
            raise ValueError("slopes and offset must have the same length")
        object.__setattr__(self, "slopes", s)
        object.__setattr__(self, "offset", b)

    @property
    def lipschitz(self):
        return float(np.max(np.abs(self.slopes)))

    def __call__(self, coeffs):
        n = coeffs.shape[-1]
        return self.slopes[:n] * coeffs + self.offset[:n]

    def truncated(self, n):
        return AffineReaction(self.slopes[:n], self.offset[:n])

    def describe(self):
        return {"type": "affine", "slopes": self.slopes.tolist(), "offset": self.offset.tolist()}


@dataclass(frozen=True)
class BoundedReaction(Reaction):
    """Pointwise map u -> amplitude * tanh(u / scale), evaluated on a grid.

    Lipschitz in H with constant amplitude / scale: the discrete sine
    transform is an isometry between coefficients and grid samples, and the
    projection back onto n modes is a contraction.
    """

    amplitude: float
    scale: float = 1.0
    variant = "bounded"

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    @property
    def lipschitz(self):
        return abs(self.amplitude) / self.scale

    def __call__(self, coeffs):
        n = coeffs.shape[-1]
        grid = dealiased_grid_size(n)
        u = sine_transform(coeffs, grid)
        return inverse_sine_transform(self.amplitude * np.tanh(u / self.scale), n)

    def describe(self):
        return {"type": "bounded", "amplitude": self.amplitude, "scale": self.scale}


@dataclass(frozen=True)
class CubicReaction(Reaction):
    """f(u) = -u^3 + c1 u applied pointwise, projected back onto n modes.

    The grid has 3n points, so the projection of the cubic product is exact
    (aliased frequencies land above mode n).
    """

    c1: float
    variant = "cubic"
    lipschitz = None

    def __call__(self, coeffs):
        n = coeffs.shape[-1]
        u = sine_transform(coeffs, dealiased_grid_size(n))
        return inverse_sine_transform(-(u**3), n) + self.c1 * coeffs

    def describe(self):
        return {"type": "cubic", "c1": self.c1}


def eval_reaction(spec: Reaction, x):
    """Spectral coefficients of f(x); raises BlowUpError on non-finite output."""
    c = _coeffs(x)
    out = spec(c)
    if not np.all(np.isfinite(out)):
        raise BlowUpError(f"{spec.variant} reaction produced non-finite values")
    return SpectralField(out) if isinstance(x, SpectralField) else out
