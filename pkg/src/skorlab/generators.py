"""Deterministic construction of synthetic laws and convergent sequences.

Every generator enumerates its atoms exhaustively (no sampling), so the laws
feed exact downstream computations.  A cap on the atom count keeps the
exhaustive enumerations within memory.  All kinds are fully determined by
their parameters; the seed field is echoed into reports but no kind draws
random numbers.  The random tree builder at the bottom is a library helper
for property tests, driven by a caller-supplied generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .laws import DiscreteProcessLaw
from .paths import CadlagPath, Coordinate, Partition, TimeHorizon

__all__ = [
    "ATOM_CAP",
    "GeneratorSpec",
    "generate",
    "random_tree_law",
    "walk_window_second_moment",
]

ATOM_CAP = 1 << 16

_KINDS = (
    "scaled_random_walk",
    "binomial_tree",
    "compensated_jump",
    "drifted",
    "perturbed_sequence",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """Kind plus keyword parameters; nested specs appear under 'base'."""

    kind: str
    params: tuple[tuple[str, object], ...]
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown generator kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(self.params))

    @classmethod
    def make(cls, kind: str, seed: int = 0, **params) -> "GeneratorSpec":
        items = []
        for key, value in params.items():
            if isinstance(value, dict):
                value = cls.make(**value)
            if isinstance(value, list):
                value = tuple(value)
            items.append((key, value))
        return cls(kind=kind, params=tuple(items), seed=seed)

    def get(self, key, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default

    def require(self, key):
        sentinel = object()
        got = self.get(key, sentinel)
        if got is sentinel:
            raise ValidationError(f"generator kind {self.kind!r} needs parameter {key!r}")
        return got


def _check_cap(n_atoms: int) -> None:
    if n_atoms > ATOM_CAP:
        raise DomainError(f"{n_atoms} atoms exceed the cap {ATOM_CAP}")


def _bit_signs(n: int) -> np.ndarray:
    """(2^n, n) matrix of +-1 columns enumerating all sign words."""
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)) & 1
    return 1.0 - 2.0 * bits


def _scaled_random_walk(spec: GeneratorSpec) -> DiscreteProcessLaw:
    n = int(spec.require("n_steps"))
    T = float(spec.require("T"))
    if n < 1 or not T > 0.0:
        raise ValidationError("scaled_random_walk needs n_steps >= 1 and T > 0")
    _check_cap(1 << n)
    step = math.sqrt(T / n)
    signs = _bit_signs(n)
    values = np.zeros((1 << n, n + 1, 1))
    values[:, 1:, 0] = np.cumsum(signs * step, axis=1)
    times = tuple(T * k / n for k in range(n + 1))
    weights = tuple(0.5**n for _ in range(1 << n))
    return DiscreteProcessLaw.from_values(TimeHorizon.finite(T), times, values, weights)


def _binomial_tree(spec: GeneratorSpec) -> DiscreteProcessLaw:
    depth = int(spec.require("depth"))
    up = float(spec.require("up"))
    down = float(spec.require("down"))
    p_up = float(spec.require("p_up"))
    x0 = float(spec.get("x0", 0.0))
    if depth < 1:
        raise ValidationError("binomial_tree needs depth >= 1")
    if not 0.0 < p_up < 1.0:
        raise ValidationError("p_up must lie strictly between 0 and 1")
    _check_cap(1 << depth)
    signs = _bit_signs(depth)  # +1 row entries mean an up move
    ups = signs > 0
    increments = np.where(ups, up, down)
    values = np.empty((1 << depth, depth + 1, 1))
    values[:, 0, 0] = x0
    values[:, 1:, 0] = x0 + np.cumsum(increments, axis=1)
    n_up = ups.sum(axis=1)
    weights = tuple(p_up**k * (1.0 - p_up) ** (depth - k) for k in n_up)
    times = tuple(float(k) for k in range(depth + 1))
    return DiscreteProcessLaw.from_values(TimeHorizon.finite(float(depth)), times, values, weights)


def _compensated_jump(spec: GeneratorSpec) -> DiscreteProcessLaw:
    jump_size = float(spec.require("jump_size"))
    jump_prob = float(spec.require("jump_prob"))
    grid = tuple(float(t) for t in spec.require("grid"))
    if not 0.0 < jump_prob < 1.0:
        raise ValidationError("jump_prob must lie strictly between 0 and 1")
    if len(grid) < 2:
        raise ValidationError("compensated_jump needs a grid with at least two times")
    steps = len(grid) - 1
    _check_cap(1 << steps)
    occurred = _bit_signs(steps) > 0
    increments = np.where(occurred, jump_size - jump_prob * jump_size, -jump_prob * jump_size)
    values = np.zeros((1 << steps, steps + 1, 1))
    values[:, 1:, 0] = np.cumsum(increments, axis=1)
    n_jump = occurred.sum(axis=1)
    weights = tuple(jump_prob**k * (1.0 - jump_prob) ** (steps - k) for k in n_jump)
    return DiscreteProcessLaw.from_values(TimeHorizon.finite(grid[-1]), grid, values, weights)


def _drifted(spec: GeneratorSpec) -> DiscreteProcessLaw:
    base = generate(spec.require("base"))
    if not isinstance(base, DiscreteProcessLaw):
        raise ValidationError("drifted needs a base generating a single law")
    drift = float(spec.require("drift"))
    K = len(base.grid)
    shift = drift * np.arange(K)[None, :, None]
    values = base.values + shift
    return DiscreteProcessLaw.from_values(base.horizon, base.grid.times, values, base.weights)


def _shift_grid(law: DiscreteProcessLaw, delta: float) -> DiscreteProcessLaw:
    """Move every interior grid time (and matching breakpoints) by delta."""
    old = law.grid.times
    gaps = [w - u for u, w in zip(old, old[1:])]
    if not -min(gaps) < delta < min(gaps):
        raise DomainError("grid shift would reorder the grid")
    moved = {t: t + delta for t in old[1:-1]}

    def shift_time(t: float) -> float:
        return moved.get(t, t)

    new_times = tuple(shift_time(t) for t in old)
    paths = tuple(
        CadlagPath(
            p.horizon,
            tuple(
                Coordinate(tuple(shift_time(s) for s in c.breakpoints), c.values)
                for c in p.coords
            ),
        )
        for p in law.paths
    )
    return DiscreteProcessLaw(Partition(new_times), paths, law.weights)


def _shift_weights(law: DiscreteProcessLaw, delta: float) -> DiscreteProcessLaw:
    if law.n_atoms < 2:
        raise DomainError("weight shifts need at least two atoms")
    if not delta < law.weights[0]:
        raise DomainError("weight shift exceeds the first atom's mass")
    w = list(law.weights)
    w[0] -= delta
    w[-1] += delta
    return DiscreteProcessLaw(law.grid, law.paths, tuple(w))


def _perturbed_sequence(spec: GeneratorSpec) -> list[DiscreteProcessLaw]:
    base = generate(spec.require("base"))
    if not isinstance(base, DiscreteProcessLaw):
        raise ValidationError("perturbed_sequence needs a base generating a single law")
    count = int(spec.require("count"))
    mode = str(spec.require("perturbation"))
    scale = float(spec.require("scale"))
    if count < 1:
        raise ValidationError("count must be positive")
    if mode == "jump_shift":
        return [_shift_grid(base, scale / k) for k in range(1, count + 1)]
    if mode == "weight_shift":
        return [_shift_weights(base, scale / k) for k in range(1, count + 1)]
    raise ValidationError(f"unknown perturbation {mode!r}")


def generate(spec: GeneratorSpec) -> DiscreteProcessLaw | list[DiscreteProcessLaw]:
    """Build the law (or law sequence) a spec describes."""
    if not isinstance(spec, GeneratorSpec):
        raise ValidationError("generate expects a GeneratorSpec")
    builder = {
        "scaled_random_walk": _scaled_random_walk,
        "binomial_tree": _binomial_tree,
        "compensated_jump": _compensated_jump,
        "drifted": _drifted,
        "perturbed_sequence": _perturbed_sequence,
    }[spec.kind]
    return builder(spec)


def walk_window_second_moment(n: int, T: float) -> float:
    """E[(time average of a scaled n-step walk over [0,T])^2], in closed form.

    The average is (1/n) sum of the partial sums S_0..S_{n-1}; covariances
    E[S_k S_l] = min(k,l) T/n give E = (T/n^3) sum_{k,l} min(k,l).  Exact, so
    it extends the materialized laws past the atom cap.
    """
    if n < 1 or not T > 0.0:
        raise DomainError("need n >= 1 and T > 0")
    pair_sum = sum(m * (2 * (n - m) - 1) for m in range(1, n))
    return T * pair_sum / n**3


def random_tree_law(
    rng: np.random.Generator,
    max_times: int = 5,
    max_atoms: int = 16,
    d: int = 1,
    increments=(-1.0, -0.5, 0.0, 0.5, 1.0),
    martingale: bool = False,
    max_children: int = 3,
    times_count: int | None = None,
) -> DiscreteProcessLaw:
    """Random branching law on a short grid, for property tests.

    Integer masses keep the weights exactly normalized after one division.
    With martingale=True each branching is recentred so conditional increment
    means vanish to rounding.  max_children=2 keeps the information-class
    counts small enough for exhaustive vertex sweeps.  times_count pins the
    grid length so laws drawn in a loop share one horizon.
    """
    K = int(rng.integers(2, max_times + 1)) if times_count is None else int(times_count)
    if K < 2:
        raise DomainError("a law needs at least two grid times")
    times = tuple(0.5 * k for k in range(K))
    x0 = np.array([float(rng.choice(increments)) for _ in range(d)])
    leaves: list[tuple[np.ndarray, int]] = [(x0[None, :], 720_720)]
    for _ in range(1, K):
        budget = max_atoms - len(leaves)
        grown: list[tuple[np.ndarray, int]] = []
        for hist, mass in leaves:
            can_branch = budget > 0 and mass >= 64
            extra = int(rng.integers(0, min(budget, max_children - 1) + 1)) if can_branch else 0
            budget -= extra
            n_children = 1 + extra
            if n_children == 1:
                parts = [mass]
            else:
                cuts = rng.multinomial(mass - n_children, np.full(n_children, 1.0 / n_children))
                parts = [int(c) + 1 for c in cuts]
            incs = np.array(
                [[float(rng.choice(increments)) for _ in range(d)] for _ in range(n_children)]
            )
            if martingale:
                probs = np.array(parts, dtype=float) / mass
                incs = incs - probs @ incs
            for j in range(n_children):
                grown.append((np.vstack([hist, hist[-1] + incs[j]]), parts[j]))
        leaves = grown
    total = sum(m for _, m in leaves)
    values = np.stack([h for h, _ in leaves])
    weights = tuple(m / total for _, m in leaves)
    return DiscreteProcessLaw.from_values(TimeHorizon.finite(times[-1]), times, values, weights)
