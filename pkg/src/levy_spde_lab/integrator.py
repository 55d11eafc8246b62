"""Semi-implicit Euler time stepping of the n-mode Galerkin system.

Each step solves, mode by mode,

    y_k (1 + lambda_k dt) = x_k + dt f_k(x) + (sigma(x) dW)_k
                            + sum_events G_k(x, v) - dt * int G_k(x, v) theta(dv)

so the stiff Laplacian is implicit and every other term explicit.

Ensembles are processed in fixed-size member chunks. Each member draws its
noise from its own stream in fixed-length time blocks, which keeps results
independent of thread count and chunk scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .noise import BROWNIAN, INITIAL, JUMPS, ConstantDiffusion, JumpSpec, rng_stream
from .spectral import BlowUpError, Reaction, SpectralField, ZeroReaction, _coeffs, eigenvalues, hnorm

__all__ = [
    "ModelSpec",
    "PointMass",
    "GaussianLaw",
    "Path",
    "TrajectoryEnsemble",
    "step",
    "simulate_path",
    "simulate_coupled_pair",
    "simulate_ensemble",
    "multiresolution_pair",
    "multiresolution_errors",
    "n_steps_for",
    "BLOWUP_THRESHOLD",
]

BLOWUP_THRESHOLD = 1e6
MEMBER_CHUNK = 128
TIME_BLOCK = 1024


@dataclass(frozen=True)
class ModelSpec:
    """Galerkin model: mode count, reaction, diffusion and jump specs.

    ``constants`` may override the certified constants (``c_f``, ``c1``,
    ``c_sigma``, ``sigma_bar``, ``c_g``, ``c_g_prime``); overrides are only
    accepted when they are at least as large as the certified ones, except
    ``c1`` which must match the cubic reaction.
    """

    n_modes: int
    reaction: Reaction = field(default_factory=ZeroReaction)
    diffusion: object = None
    jumps: JumpSpec | None = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.diffusion is None:
            object.__setattr__(self, "diffusion", ConstantDiffusion(np.zeros(self.n_modes)))
        if self.diffusion.n_modes < self.n_modes:
            raise ValueError("diffusion scales shorter than n_modes")
        if self.jumps is not None and self.jumps.n_modes < self.n_modes:
            raise ValueError("jump coefficient shorter than n_modes")
        certified = self._certified()
        for key, value in self.constants.items():
            if key not in certified:
                raise ValueError(f"unknown model constant {key!r}")
            if key == "c1":
                if not math.isclose(value, certified["c1"]):
                    raise ValueError("declared c1 disagrees with the cubic reaction")
            elif certified[key] is not None and value < certified[key] - 1e-12:
                raise ValueError(f"declared {key}={value} below certified {certified[key]}")

    @property
    def variant(self) -> str:
        return "cubic" if self.reaction.variant == "cubic" else "lipschitz"

    def _certified(self) -> dict:
        jumps = self.jumps
        return {
            "c_f": self.reaction.lipschitz,
            "c1": getattr(self.reaction, "c1", None),
            "c_sigma": self.diffusion.truncated(self.n_modes).c_sigma,
            "sigma_bar": self.diffusion.truncated(self.n_modes).sigma_bar,
            "c_g": 0.0 if jumps is None else jumps.truncated(self.n_modes).c_g,
            "c_g_prime": 0.0 if jumps is None else jumps.truncated(self.n_modes).c_g_prime,
        }

    def constant(self, key: str):
        if key in self.constants:
            return self.constants[key]
        return self._certified()[key]

    @property
    def K(self) -> float:
        from .rates import compute_K

        if self.variant == "cubic":
            value, _ = compute_K(
                {"c1": self.constant("c1"), "c_sigma": self.constant("c_sigma"), "c_g": self.constant("c_g")},
                "cubic",
            )
        else:
            value, _ = compute_K(
                {"c_f": self.constant("c_f"), "c_sigma": self.constant("c_sigma"), "c_g": self.constant("c_g")},
                "lipschitz",
            )
        return value

    @property
    def sigma_bar(self) -> float:
        return self.constant("sigma_bar")

    def jumps_at_modes(self) -> JumpSpec | None:
        return None if self.jumps is None else self.jumps.truncated(self.n_modes)

    def truncated(self, n: int) -> ModelSpec:
        """Same model projected onto the first n modes."""
        if n > self.n_modes:
            raise ValueError(f"cannot refine a {self.n_modes}-mode model to {n} modes")
        return ModelSpec(
            n,
            self.reaction.truncated(n),
            self.diffusion.truncated(n),
            None if self.jumps is None else self.jumps.truncated(n),
        )

    def describe(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "variant": self.variant,
            "reaction": self.reaction.describe(),
            "diffusion": self.diffusion.truncated(self.n_modes).describe(),
            "jumps": None if self.jumps is None else self.jumps_at_modes().describe(),
            "constants": {k: self.constant(k) for k in self._certified()},
            "K": self.K,
        }


@dataclass(frozen=True)
class PointMass:
    coeffs: np.ndarray

    def sample(self, rng, n):
        c = np.zeros(n)
        src = np.asarray(self.coeffs, dtype=float).reshape(-1)[:n]
        c[: src.size] = src
        return c


@dataclass(frozen=True)
class GaussianLaw:
    """Independent Gaussians on the leading modes with given variances."""

    mean: np.ndarray
    variances: np.ndarray

    def sample(self, rng, n):
        c = PointMass(self.mean).sample(rng, n)
        var = np.asarray(self.variances, dtype=float).reshape(-1)[:n]
        c[: var.size] += np.sqrt(var) * rng.standard_normal(var.size)
        return c


@dataclass(frozen=True)
class Path:
    """A stored trajectory: ``coeffs[i]`` is the field at ``times[i]``."""

    times: np.ndarray
    coeffs: np.ndarray

    def field_at(self, i: int) -> SpectralField:
        return SpectralField(self.coeffs[i])

    def norms(self, theta: float = 0.0) -> np.ndarray:
        return hnorm(self.coeffs, theta)


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """m stored paths on a common grid, with provenance.

    ``paths`` has shape ``(m, len(times), n)``; for synchronous pairs
    ``partner_paths`` holds the coupled copies.
    """

    times: np.ndarray
    paths: np.ndarray
    coupling: str
    seed: int
    members: np.ndarray
    dt: float
    partner_paths: np.ndarray | None = None

    @property
    def m(self) -> int:
        return self.paths.shape[0]

    def path(self, i: int) -> Path:
        return Path(self.times, self.paths[i])

    def provenance(self) -> dict:
        return {
            "master_seed": self.seed,
            "stream_map": {
                "brownian": [BROWNIAN, "member"],
                "jumps": [JUMPS, "member"],
                "initial": [INITIAL, "member", "lane"],
            },
            "members": [int(self.members[0]), int(self.members[-1]) + 1] if self.members.size else [],
            "coupling": self.coupling,
        }


def n_steps_for(T: float, dt: float) -> int:
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return n


def _advance(model: ModelSpec, x, dt, dW, jump_sum, lam):
    """Vectorised semi-implicit update on coefficient arrays ``(..., n)``."""
    rhs = x + dt * model.reaction(x) + model.diffusion.apply(x, dW)
    if model.jumps is not None:
        rhs = rhs + jump_sum - dt * model.jumps.compensator(x)
    return rhs / (1.0 + lam * dt)


def step(model: ModelSpec, x, dt: float, dW, events=()):
    """One semi-implicit step from x with Brownian increment dW and jump events.

    ``events`` is a sequence of ``(offset, mark)``; all jumps are evaluated at
    the pre-step state and applied at step end in time order.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    c = _coeffs(x)
    n = model.n_modes
    dW = np.asarray(dW, dtype=float)
    if c.shape[-1] != n or dW.shape[-1] != n:
        raise ValueError(f"expected {n} modes, got field {c.shape[-1]} and noise {dW.shape[-1]}")
    jump_sum = np.zeros_like(c)
    if events and model.jumps is None:
        raise ValueError("jump events given to a model without jumps")
    for _, mark in sorted(events):
        jump_sum = jump_sum + model.jumps(c, mark)
    y = _advance(model, c, dt, dW, jump_sum, eigenvalues(n))
    if not np.all(np.isfinite(y)) or np.any(hnorm(y) > BLOWUP_THRESHOLD):
        raise BlowUpError("step produced a non-finite or exploding field", step=0)
    return SpectralField(y) if isinstance(x, SpectralField) else y


class _MemberNoise:
    """Per-member noise streams, drawn in fixed time blocks."""

    def __init__(self, seed, member, n_noise, dt, jumps):
        self.brownian = rng_stream(seed, BROWNIAN, member)
        self.jump_rng = rng_stream(seed, JUMPS, member) if jumps is not None else None
        self.n_noise = n_noise
        self.sqdt = math.sqrt(dt)
        self.dt = dt
        self.jumps = jumps

    def block(self, n_steps):
        dW = self.brownian.standard_normal((n_steps, self.n_noise)) * self.sqdt
        if self.jumps is None:
            return dW, None, None
        rng = self.jump_rng
        counts = rng.poisson(self.jumps.total_mass * self.dt, size=n_steps)
        total = int(counts.sum())
        marks = self.jumps.sampler(rng, total)
        offsets = rng.uniform(0.0, self.dt, size=total)
        steps = np.repeat(np.arange(n_steps), counts)
        order = np.lexsort((offsets, steps))
        return dW, counts, marks[order]


def _stack_jumps(blocks, n_steps):
    """Pad per-member mark lists into ``(B, n_steps, max_count)``."""
    counts = np.stack([b[1] for b in blocks])
    width = int(counts.max()) if counts.size else 0
    marks = np.zeros(counts.shape + (max(width, 1),))
    for i, (_, c, mk) in enumerate(blocks):
        if mk.size == 0:
            continue
        steps = np.repeat(np.arange(n_steps), c)
        starts = np.concatenate(([0], np.cumsum(c)[:-1]))
        slot = np.arange(mk.size) - np.repeat(starts, c)
        marks[i, steps, slot] = mk
    return counts, marks


@dataclass
class _Lane:
    model: ModelSpec
    x: np.ndarray
    lam: np.ndarray = None
    snaps: list = None

    def __post_init__(self):
        self.lam = eigenvalues(self.model.n_modes)
        self.snaps = [self.x.copy()]


def _run_chunk(lanes: list[_Lane], members, seed, dt, n_steps, stride, n_noise, jumps):
    noises = [_MemberNoise(seed, int(i), n_noise, dt, jumps) for i in members]
    done = 0
    while done < n_steps:
        nb = min(TIME_BLOCK, n_steps - done)
        blocks = [nz.block(nb) for nz in noises]
        dW = np.stack([b[0] for b in blocks])
        if jumps is not None:
            counts, marks = _stack_jumps(blocks, nb)
        for j in range(nb):
            global_step = done + j
            for lane in lanes:
                x = lane.x
                n = lane.model.n_modes
                jump_sum = None
                if jumps is not None:
                    jump_sum = np.zeros_like(x)
                    cj = counts[:, j]
                    for e in range(int(cj.max())):
                        hit = cj > e
                        jump_sum[hit] += lane.model.jumps(x[hit], marks[hit, j, e])
                y = _advance(lane.model, x, dt, dW[:, j, :n], jump_sum, lane.lam)
                norms = hnorm(y)
                bad = ~(norms <= BLOWUP_THRESHOLD)
                if bad.any():
                    who = int(members[int(np.argmax(bad))])
                    raise BlowUpError(
                        f"member {who} blew up at step {global_step + 1}",
                        step=global_step + 1,
                        member=who,
                    )
                lane.x = y
                if (global_step + 1) % stride == 0:
                    lane.snaps.append(y.copy())
        done += nb
    return [np.stack(lane.snaps, axis=1) for lane in lanes]


def _observation_times(n_steps, dt, stride):
    if stride < 1 or n_steps % stride:
        raise ValueError(f"stride {stride} must divide the {n_steps} steps")
    return np.arange(0, n_steps + 1, stride) * dt


def _run(
    lane_specs: Sequence[tuple[ModelSpec, Callable[[int], np.ndarray]]],
    members: np.ndarray,
    seed: int,
    T: float,
    dt: float,
    stride: int = 1,
    threads: int = 1,
    reduce: Callable | None = None,
):
    """Run all lanes on shared noise for every member; returns per-lane outputs.

    ``lane_specs`` pairs a model with ``init(member) -> coefficients``. The
    noise dimension is the largest lane's mode count; smaller lanes see the
    leading components. ``reduce(times, lane_arrays)`` post-processes each
    chunk (to avoid storing full snapshots).
    """
    n_steps = n_steps_for(T, dt)
    times = _observation_times(n_steps, dt, stride)
    n_noise = max(mdl.n_modes for mdl, _ in lane_specs)
    top = max(lane_specs, key=lambda s: s[0].n_modes)[0]
    jumps = top.jumps_at_modes()
    chunks = [members[i : i + MEMBER_CHUNK] for i in range(0, len(members), MEMBER_CHUNK)]

    def work(chunk):
        lanes = [
            _Lane(mdl, np.stack([np.asarray(init(int(i)), dtype=float) for i in chunk]))
            for mdl, init in lane_specs
        ]
        out = _run_chunk(lanes, chunk, seed, dt, n_steps, stride, n_noise, jumps)
        return reduce(times, out) if reduce is not None else out

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = [work(c) for c in chunks]
    if reduce is not None:
        return times, results
    merged = [np.concatenate([r[k] for r in results]) for k in range(len(lane_specs))]
    return times, merged


def _fixed(x0, n):
    c = _coeffs(x0)
    if c.shape[-1] != n:
        raise ValueError(f"initial field has {c.shape[-1]} modes, model has {n}")
    return lambda _member: c


def simulate_path(model: ModelSpec, x0, T: float, dt: float, seed: int, member: int = 0, stride: int = 1) -> Path:
    """Single trajectory; bit-reproducible in (model, x0, T, dt, seed)."""
    times, (arr,) = _run([(model, _fixed(x0, model.n_modes))], np.array([member]), seed, T, dt, stride)
    return Path(times, arr[0])


def simulate_coupled_pair(model, x0, y0, T, dt, seed, member=0, stride=1) -> tuple[Path, Path]:
    """Two trajectories driven by identical Brownian increments and jump events."""
    n = model.n_modes
    times, (a, b) = _run(
        [(model, _fixed(x0, n)), (model, _fixed(y0, n))], np.array([member]), seed, T, dt, stride
    )
    return Path(times, a[0]), Path(times, b[0])


def _law_init(law, seed, lane, n):
    if isinstance(law, (SpectralField, np.ndarray, list, tuple)):
        law = PointMass(_coeffs(law))
    return lambda member: law.sample(rng_stream(seed, INITIAL, member, lane), n)


def simulate_ensemble(
    model: ModelSpec,
    initial_law,
    m: int,
    T: float,
    dt: float,
    seed: int,
    coupling: str = "independent",
    partner_law=None,
    stride: int = 1,
    threads: int = 1,
    first_member: int = 0,
) -> TrajectoryEnsemble:
    """Monte Carlo ensemble of m members with disjoint noise streams.

    ``coupling="synchronous"`` runs each member as a pair started from
    ``initial_law`` and ``partner_law`` on shared noise.
    """
    if m < 1:
        raise ValueError("ensemble needs m >= 1")
    n = model.n_modes
    members = np.arange(first_member, first_member + m)
    lanes = [(model, _law_init(initial_law, seed, 0, n))]
    if coupling == "synchronous":
        if partner_law is None:
            raise ValueError("synchronous coupling needs a partner initial law")
        lanes.append((model, _law_init(partner_law, seed, 1, n)))
    elif coupling != "independent":
        raise ValueError(f"unknown coupling mode {coupling!r}")
    times, arrays = _run(lanes, members, seed, T, dt, stride, threads)
    return TrajectoryEnsemble(
        times=times,
        paths=arrays[0],
        coupling=coupling,
        seed=seed,
        members=members,
        dt=dt,
        partner_paths=arrays[1] if coupling == "synchronous" else None,
    )


def multiresolution_pair(model: ModelSpec, n_lo: int, x0, T, dt, seed, member=0, stride=1) -> tuple[Path, Path]:
    """Run the model at its own resolution and at n_lo modes on shared noise.

    The coarse run sees the leading n_lo Brownian components and the same
    jump events. Its path is returned zero-padded to the fine mode count.
    """
    if n_lo > model.n_modes:
        raise ValueError("n_lo must not exceed the model's mode count")
    c = _coeffs(x0)
    coarse = model.truncated(n_lo)
    times, (hi, lo) = _run(
        [(model, _fixed(c, model.n_modes)), (coarse, _fixed(c[:n_lo], n_lo))],
        np.array([member]),
        seed,
        T,
        dt,
        stride,
    )
    padded = np.zeros_like(hi[0])
    padded[:, :n_lo] = lo[0]
    return Path(times, hi[0]), Path(times, padded)


def multiresolution_errors(
    model: ModelSpec,
    coarse_modes: Sequence[int],
    x0,
    T: float,
    dt: float,
    m: int,
    seed: int,
    stride: int = 1,
    threads: int = 1,
) -> dict[int, np.ndarray]:
    """Per-member sup over stored times of ||X^fine - X^coarse||_H^2.

    Returns ``{n_lo: array of m errors}``; all resolutions share the noise of
    the fine model.
    """
    c = _coeffs(x0)
    n_hi = model.n_modes
    lanes = [(model, _fixed(c, n_hi))]
    for n_lo in coarse_modes:
        if n_lo > n_hi:
            raise ValueError(f"coarse resolution {n_lo} exceeds reference {n_hi}")
        lanes.append((model.truncated(n_lo), _fixed(c[:n_lo], n_lo)))

    def reduce(times, arrays):
        hi = arrays[0]
        out = []
        for lo in arrays[1:]:
            k = lo.shape[-1]
            gap = np.sum((hi[..., :k] - lo) ** 2, axis=-1) + np.sum(hi[..., k:] ** 2, axis=-1)
            out.append(gap.max(axis=1))
        return out

    _, chunks = _run(lanes, np.arange(m), seed, T, dt, stride, threads, reduce=reduce)
    return {n_lo: np.concatenate([ch[i] for ch in chunks]) for i, n_lo in enumerate(coarse_modes)}


def with_constants(model: ModelSpec, **constants) -> ModelSpec:
    return replace(model, constants={**model.constants, **constants})
