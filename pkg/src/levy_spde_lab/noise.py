"""Driving noises: spectral Brownian increments and finite-activity jumps.

Randomness comes from counter-based Philox streams keyed by
``(master seed, purpose tag, member index, ...)``, so every trajectory owns a
stream that does not depend on how an ensemble is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import SpectralField, _coeffs

__all__ = [
    "BROWNIAN",
    "JUMPS",
    "INITIAL",
    "BOOTSTRAP",
    "rng_stream",
    "power_profile",
    "ConstantDiffusion",
    "BoundedDiffusion",
    "DiagonalJumpCoefficient",
    "JumpSpec",
    "sample_brownian_increment",
    "sample_poisson_events",
    "apply_diffusion",
    "compensator_mean",
]

# purpose tags for stream derivation
BROWNIAN = 0
JUMPS = 1
INITIAL = 2
BOOTSTRAP = 3


def rng_stream(master_seed: int, tag: int, *index: int) -> np.random.Generator:
    """Independent Philox generator for ``(master_seed, tag, *index)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(tag),) + tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


def power_profile(n: int, amplitude: float, decay: float = 0.0) -> np.ndarray:
    """amplitude * k^(-decay) for k = 1..n."""
    k = np.arange(1, n + 1, dtype=float)
    return amplitude * k ** (-float(decay))


def sample_brownian_increment(n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """n independent N(0, dt) draws, one per mode."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return rng.standard_normal(n) * np.sqrt(dt)


@dataclass(frozen=True)
class ConstantDiffusion:
    """sigma(x) = diag(s_k): additive noise s_k d(beta_k) on mode k."""

    scales: np.ndarray
    variant = "constant"

    def __post_init__(self):
        object.__setattr__(self, "scales", np.array(self.scales, dtype=float).reshape(-1))

    @property
    def n_modes(self):
        return self.scales.size

    @property
    def c_sigma(self) -> float:
        return 0.0

    @property
    def sigma_bar(self) -> float:
        return float(np.sqrt(np.sum(self.scales**2)))

    def column_scales(self, coeffs):
        return np.broadcast_to(self.scales[: coeffs.shape[-1]], coeffs.shape)

    def apply(self, coeffs, dW):
        return self.scales[: coeffs.shape[-1]] * dW

    def hs_norm(self, coeffs):
        return np.sqrt(np.sum(self.column_scales(coeffs) ** 2, axis=-1))

    def truncated(self, n):
        return ConstantDiffusion(self.scales[:n])

    def describe(self):
        return {"type": "constant", "scales": self.scales.tolist()}


@dataclass(frozen=True)
class BoundedDiffusion:
    """sigma(x) = diag(s_k (base + modulation * tanh(x_k))).

    Hilbert-Schmidt norm is at most (|base| + |modulation|) * ||s||, and the
    map is Lipschitz in HS norm with constant |modulation| * max |s_k|.
    """

    scales: np.ndarray
    base: float = 1.0
    modulation: float = 0.0
    variant = "bounded"

    def __post_init__(self):
        object.__setattr__(self, "scales", np.array(self.scales, dtype=float).reshape(-1))

    @property
    def n_modes(self):
        return self.scales.size

    @property
    def c_sigma(self) -> float:
        return float(abs(self.modulation) * np.max(np.abs(self.scales)))

    @property
    def sigma_bar(self) -> float:
        return float((abs(self.base) + abs(self.modulation)) * np.sqrt(np.sum(self.scales**2)))

    def column_scales(self, coeffs):
        return self.scales[: coeffs.shape[-1]] * (self.base + self.modulation * np.tanh(coeffs))

    def apply(self, coeffs, dW):
        return self.column_scales(coeffs) * dW

    def hs_norm(self, coeffs):
        return np.sqrt(np.sum(self.column_scales(coeffs) ** 2, axis=-1))

    def truncated(self, n):
        return BoundedDiffusion(self.scales[:n], self.base, self.modulation)

    def describe(self):
        return {
            "type": "bounded",
            "scales": self.scales.tolist(),
            "base": self.base,
            "modulation": self.modulation,
        }


def apply_diffusion(spec, x, dW):
    """sigma(x) dW in spectral coefficients."""
    c = _coeffs(x)
    dW = np.asarray(dW, dtype=float)
    if dW.shape[-1] != c.shape[-1]:
        raise ValueError(f"noise has {dW.shape[-1]} modes, field has {c.shape[-1]}")
    if c.shape[-1] > spec.n_modes:
        raise ValueError(f"diffusion defined on {spec.n_modes} modes only")
    out = spec.apply(c, dW)
    return SpectralField(out) if isinstance(x, SpectralField) else out


@dataclass(frozen=True)
class DiagonalJumpCoefficient:
    """G(x, v) = v * (offset_k + modulation_k * tanh(x_k)), mode by mode."""

    offset: np.ndarray
    modulation: np.ndarray

    def __post_init__(self):
        b = np.array(self.offset, dtype=float).reshape(-1)
        a = np.array(self.modulation, dtype=float).reshape(-1)
        if a.size == 1 and b.size > 1:
            a = np.full(b.size, a[0])
        if b.size == 1 and a.size > 1:
            b = np.full(a.size, b[0])
        if a.shape != b.shape:
            raise ValueError("offset and modulation must have the same length")
        object.__setattr__(self, "offset", b)
        object.__setattr__(self, "modulation", a)

    @property
    def n_modes(self):
        return self.offset.size

    def profile(self, coeffs):
        n = coeffs.shape[-1]
        return self.offset[:n] + self.modulation[:n] * np.tanh(coeffs)

    def __call__(self, coeffs, marks):
        return np.asarray(marks, dtype=float)[..., None] * self.profile(coeffs)

    @property
    def sup_norm(self) -> float:
        """sup_x ||offset + modulation * tanh(x)||_H."""
        return float(np.sqrt(np.sum((np.abs(self.offset) + np.abs(self.modulation)) ** 2)))

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.abs(self.modulation))) if self.modulation.size else 0.0

    def truncated(self, n):
        return DiagonalJumpCoefficient(self.offset[:n], self.modulation[:n])

    def describe(self):
        return {"offset": self.offset.tolist(), "modulation": self.modulation.tolist()}


@dataclass(frozen=True)
class JumpSpec:
    """Finite-activity Poisson random measure with intensity dt * theta(dv).

    ``nodes``/``weights`` are a quadrature for theta (weights sum to the total
    mass). For discrete mark spaces they are the marks themselves and the
    quadrature is exact. ``sampler(rng, size)`` draws marks from theta / mass.
    """

    nodes: np.ndarray
    weights: np.ndarray
    coefficient: DiagonalJumpCoefficient
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    mark_space: dict

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if nodes.shape != weights.shape or nodes.size == 0:
            raise ValueError("quadrature nodes and weights must be nonempty and aligned")
        if np.any(weights < 0) or not np.isfinite(weights).all():
            raise ValueError("mark measure weights must be finite and nonnegative")
        if weights.sum() <= 0:
            raise ValueError("mark measure must have positive total mass")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def discrete(cls, marks, weights, coefficient) -> JumpSpec:
        """theta = sum_i weights_i delta_{marks_i}."""
        marks = np.array(marks, dtype=float).reshape(-1)
        weights = np.array(weights, dtype=float).reshape(-1)
        probs = weights / weights.sum()

        def sampler(rng, size):
            return marks[rng.choice(marks.size, size=size, p=probs)]

        space = {"type": "discrete", "marks": marks.tolist(), "weights": weights.tolist()}
        return cls(marks, weights, coefficient, sampler, space)

    @classmethod
    def uniform(cls, low, high, rate, coefficient, n_nodes=64) -> JumpSpec:
        """theta = rate * Uniform(low, high), Gauss-Legendre quadrature."""
        if not high > low:
            raise ValueError("uniform mark interval needs high > low")
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        # integrands involve |v|, so split at the kink to keep the rule exact-ish
        edges = [low, 0.0, high] if low < 0.0 < high else [low, high]
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            nodes.append(0.5 * (b - a) * x + 0.5 * (b + a))
            weights.append(0.5 * w * (b - a) / (high - low) * rate)
        nodes, weights = np.concatenate(nodes), np.concatenate(weights)

        def sampler(rng, size):
            return rng.uniform(low, high, size=size)

        space = {"type": "uniform", "low": low, "high": high, "rate": rate}
        return cls(nodes, weights, coefficient, sampler, space)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def moment(self, p: float) -> float:
        """Quadrature of |v|^p against theta."""
        return float(np.sum(self.weights * np.abs(self.nodes) ** p))

    def envelope(self, marks):
        """G-bar(v) = |v| * sup_x ||g(x)||, so that ||G(x, v)|| <= G-bar(v)."""
        return np.abs(np.asarray(marks, dtype=float)) * self.coefficient.sup_norm

    @property
    def envelope_nodes(self) -> np.ndarray:
        return self.envelope(self.nodes)

    @property
    def c_g(self) -> float:
        """Constant serving both the Lipschitz and growth halves of H3."""
        g = self.coefficient
        return self.moment(2) * max(g.lipschitz**2, g.sup_norm**2)

    @property
    def c_g_lipschitz(self) -> float:
        """Lipschitz half of H3 alone: int ||G(x,v) - G(y,v)||^2 <= this * ||x-y||^2."""
        return self.moment(2) * self.coefficient.lipschitz**2

    @property
    def c_g_prime(self) -> float:
        """Sixth-moment constant of H5."""
        return self.moment(6) * self.coefficient.sup_norm**6

    @property
    def n_modes(self):
        return self.coefficient.n_modes

    def __call__(self, coeffs, marks):
        return self.coefficient(coeffs, marks)

    def compensator(self, coeffs):
        """int G(x, v) theta(dv) on coefficient arrays."""
        first = float(np.sum(self.weights * self.nodes))
        return first * self.coefficient.profile(coeffs)

    def truncated(self, n):
        return JumpSpec(self.nodes, self.weights, self.coefficient.truncated(n), self.sampler, self.mark_space)

    def describe(self):
        return {"marks": self.mark_space, "coefficient": self.coefficient.describe()}


def sample_poisson_events(dt: float, spec: JumpSpec, rng: np.random.Generator):
    """Events of the Poisson random measure in a window of length dt.

    Returns a time-sorted list of ``(offset, mark)`` with offsets in [0, dt).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    count = rng.poisson(spec.total_mass * dt)
    if count == 0:
        return []
    marks = spec.sampler(rng, count)
    offsets = rng.uniform(0.0, dt, size=count)
    order = np.argsort(offsets, kind="stable")
    return [(float(offsets[i]), float(marks[i])) for i in order]


def compensator_mean(spec: JumpSpec, x):
    """int_X G(x, v) theta(dv), the per-unit-time compensator of the jumps."""
    c = _coeffs(x)
    out = spec.compensator(c)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("compensator quadrature produced non-finite values")
    return SpectralField(out) if isinstance(x, SpectralField) else out
