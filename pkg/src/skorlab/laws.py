"""Finitely supported process laws on a shared time grid.

A law is a weighted family of step-path atoms whose breakpoints all lie on one
grid.  The filtration is the exact one: two atoms share an information class
at a grid time iff their paths agree up to it.  Conditional expectations,
Doob decomposition, conditional variation, elementary stochastic integrals,
and the norm functionals are all finite sums over atoms, so every result is
exact up to float arithmetic.  Atom order is canonical and all reductions
follow it, which keeps results bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, ValidationError
from .paths import CadlagPath, Coordinate, Partition, TimeHorizon

__all__ = [
    "DiscreteProcessLaw",
    "PrefixClass",
    "IntegrandLeg",
    "ElementaryIntegrand",
    "DoobDecomposition",
    "Classification",
    "NormsReport",
    "conditional_expectation",
    "conditional_increment_means",
    "martingale_check",
    "doob_decomposition",
    "conditional_variation",
    "elementary_integral",
    "elementary_integral_by_coordinate",
    "sign_integrand",
    "classify",
    "norms",
    "negate",
    "clamp",
    "extreme_enumeration",
    "ExtremeEnumeration",
    "vertex_slot_coords",
]

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class PrefixClass:
    """Atoms whose paths agree on the grid up to index k."""

    k: int
    indices: tuple[int, ...]
    weight: float


@dataclass(frozen=True)
class DiscreteProcessLaw:
    grid: Partition
    paths: tuple[CadlagPath, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        grid = self.grid if isinstance(self.grid, Partition) else Partition(tuple(self.grid))
        paths = tuple(self.paths)
        weights = tuple(float(w) for w in self.weights)
        if not paths:
            raise ValidationError("a law needs at least one atom")
        if len(paths) != len(weights):
            raise ValidationError("one weight per atom required")
        for w in weights:
            if not (math.isfinite(w) and w > 0.0):
                raise ValidationError(f"atom weights must be positive and finite, got {w}")
        total = math.fsum(weights)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ValidationError(
                f"atom weights sum to {total!r}; must equal 1 within {_WEIGHT_TOL}"
            )
        horizon = paths[0].horizon
        d = paths[0].d
        for p in paths:
            if p.horizon != horizon:
                raise ValidationError("all atoms must share the horizon")
            if p.d != d:
                raise ValidationError("all atoms must share the dimension")
        if horizon.is_finite and grid.times[-1] != horizon.T:
            raise ValidationError("the grid must end at the horizon for finite horizons")
        grid_set = set(grid.times)
        for p in paths:
            for c in p.coords:
                for s in c.breakpoints:
                    if s not in grid_set:
                        raise ValidationError(f"atom breakpoint {s} is off the grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_values(cls, horizon: TimeHorizon, times, values, weights) -> "DiscreteProcessLaw":
        """Build atoms from per-atom value arrays of shape (atoms, gridpoints, d)."""
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 3:
            raise ValidationError("values must have shape (atoms, grid points, d)")
        times = tuple(float(t) for t in times)
        paths = tuple(
            CadlagPath(horizon, tuple(Coordinate(times, tuple(atom[:, i])) for i in range(arr.shape[2])))
            for atom in arr
        )
        return cls(Partition(times), paths, tuple(weights))

    @property
    def horizon(self) -> TimeHorizon:
        return self.paths[0].horizon

    @property
    def d(self) -> int:
        return self.paths[0].d

    @property
    def n_atoms(self) -> int:
        return len(self.paths)

    @cached_property
    def values(self) -> np.ndarray:
        """Per-atom right-continuous values at grid times, shape (atoms, K, d).

        The +0.0 folds -0.0 into +0.0 so prefix grouping by raw bytes matches
        float equality.
        """
        gt = np.asarray(self.grid.times)
        out = np.empty((self.n_atoms, len(gt), self.d))
        for a, p in enumerate(self.paths):
            for i, c in enumerate(p.coords):
                idx = np.searchsorted(np.asarray(c.breakpoints), gt, side="right") - 1
                out[a, :, i] = np.asarray(c.values)[idx]
        out += 0.0
        out.flags.writeable = False
        return out

    @cached_property
    def weight_array(self) -> np.ndarray:
        out = np.asarray(self.weights)
        out.flags.writeable = False
        return out

    @cached_property
    def _grid_lookup(self) -> dict[float, int]:
        return {t: k for k, t in enumerate(self.grid.times)}

    def grid_index(self, t: float) -> int:
        try:
            return self._grid_lookup[float(t)]
        except KeyError:
            raise DomainError(f"time {t} is not on the grid") from None

    @cached_property
    def _class_cache(self) -> dict[int, tuple[PrefixClass, ...]]:
        return {}

    def prefix_classes(self, k: int) -> tuple[PrefixClass, ...]:
        """Atoms grouped by exact path equality on grid[0..k]; classes at k+1
        refine classes at k.  Ordered by first member."""
        if not 0 <= k < len(self.grid):
            raise DomainError(f"grid index {k} out of range")
        cached = self._class_cache.get(k)
        if cached is not None:
            return cached
        groups: dict[bytes, list[int]] = {}
        prefix = self.values[:, : k + 1, :]
        for a in range(self.n_atoms):
            groups.setdefault(prefix[a].tobytes(), []).append(a)
        classes = tuple(
            PrefixClass(k=k, indices=tuple(idx), weight=math.fsum(self.weights[a] for a in idx))
            for idx in groups.values()
        )
        self._class_cache[k] = classes
        return classes

    def expectation(self, per_atom) -> float:
        return float(np.dot(self.weight_array, np.asarray(per_atom, dtype=float)))


def conditional_expectation(law: DiscreteProcessLaw, Z, k: int) -> np.ndarray:
    """E[Z | information at grid index k], broadcast back to atoms.

    Z is per-atom (leading axis = atoms, any trailing shape); the result has
    the class's weighted mean at every member atom.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] != law.n_atoms:
        raise DomainError("Z must have one leading entry per atom")
    out = np.empty_like(Z)
    w = law.weight_array
    for cls in law.prefix_classes(k):
        idx = list(cls.indices)
        out[idx] = np.tensordot(w[idx], Z[idx], axes=(0, 0)) / cls.weight
    return out


def conditional_increment_means(law: DiscreteProcessLaw, values=None) -> np.ndarray:
    """E[V_k - V_{k-1} | info at k-1] per atom, shape (atoms, K-1, d)."""
    v = law.values if values is None else np.asarray(values, dtype=float)
    A, K, d = v.shape
    out = np.zeros((A, max(K - 1, 0), d))
    for k in range(1, K):
        out[:, k - 1, :] = conditional_expectation(law, v[:, k, :] - v[:, k - 1, :], k - 1)
    return out


def martingale_check(law: DiscreteProcessLaw, tol: float = 1e-12, values=None) -> bool:
    cem = conditional_increment_means(law, values)
    return bool(cem.size == 0 or np.max(np.abs(cem)) <= tol)


@dataclass(frozen=True)
class DoobDecomposition:
    """X = martingale_part + predictable_part at every grid time, exactly;
    the predictable part starts at 0 and its increments are constant on the
    information classes of the previous grid time."""

    martingale_part: np.ndarray
    predictable_part: np.ndarray


def doob_decomposition(law: DiscreteProcessLaw) -> DoobDecomposition:
    cem = conditional_increment_means(law)
    A, K, d = law.values.shape
    drift = np.zeros((A, K, d))
    if K > 1:
        drift[:, 1:, :] = np.cumsum(cem, axis=1)
    return DoobDecomposition(martingale_part=law.values - drift, predictable_part=drift)


def conditional_variation(
    law: DiscreteProcessLaw, i: int, t: float, partition: Partition | None = None
) -> float:
    """Expected initial magnitude plus accumulated absolute conditional
    increment means of coordinate i up to t.

    Without a partition the full grid up to t is used; that value dominates
    every sub-partition (tower property plus the conditional triangle
    inequality), so the finest grid attains the partition supremum.
    """
    if not 0 <= i < law.d:
        raise DomainError(f"coordinate index {i} out of range for d={law.d}")
    k_t = law.grid_index(t)
    if partition is None:
        ks = list(range(k_t + 1))
    else:
        ks = [law.grid_index(s) for s in partition.times]
        if ks[-1] > k_t:
            raise DomainError("partition reaches past t")
    w = law.weight_array
    v = law.values[:, :, i]
    total = float(w @ np.abs(v[:, ks[0]]))
    for k_prev, k_cur in zip(ks, ks[1:]):
        cem = conditional_expectation(law, v[:, k_cur] - v[:, k_prev], k_prev)
        total += float(w @ np.abs(cem))
    return total


# -- elementary integrands -------------------------------------------------


@dataclass(frozen=True)
class IntegrandLeg:
    """Coefficient on the interval (left, right], one value per atom."""

    left: float
    right: float
    coeffs: tuple[float, ...]

    def __post_init__(self):
        left = float(self.left)
        right = float(self.right)
        if not (math.isfinite(left) and math.isfinite(right) and 0.0 <= left < right):
            raise DomainError("a leg needs finite times with 0 <= left < right")
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise DomainError("a leg needs at least one coefficient")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True)
class ElementaryIntegrand:
    """Bounded predictable step integrand: an initial coefficient at time 0
    plus per-coordinate legs with coefficients fixed at each leg's left
    endpoint.  Coefficients are stored per atom and must be constant on the
    information classes at the relevant time (checked against the law in
    validate_for)."""

    h0: tuple[tuple[float, ...], ...]
    legs: tuple[tuple[IntegrandLeg, ...], ...]
    bound: float = 1.0

    def __post_init__(self):
        h0 = tuple(tuple(float(c) for c in row) for row in self.h0)
        legs = tuple(tuple(row) for row in self.legs)
        bound = float(self.bound)
        if not (math.isfinite(bound) and bound > 0.0):
            raise DomainError("integrand bound must be positive and finite")
        if not h0 or len(legs) != len(h0):
            raise DomainError("h0 and legs must cover the same coordinates")
        n = len(h0[0])
        if n == 0 or any(len(row) != n for row in h0):
            raise DomainError("h0 needs one coefficient per atom, per coordinate")
        for row in legs:
            prev_right = 0.0
            for leg in row:
                if len(leg.coeffs) != n:
                    raise DomainError("leg coefficients must cover every atom")
                if leg.left < prev_right:
                    raise DomainError("legs must be disjoint and ascending")
                prev_right = leg.right
        for row in h0:
            for c in row:
                if abs(c) > bound:
                    raise DomainError(f"coefficient {c} exceeds the bound {bound}")
        for row in legs:
            for leg in row:
                for c in leg.coeffs:
                    if abs(c) > bound:
                        raise DomainError(f"coefficient {c} exceeds the bound {bound}")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "legs", legs)
        object.__setattr__(self, "bound", bound)

    @property
    def d(self) -> int:
        return len(self.h0)

    @property
    def n_atoms(self) -> int:
        return len(self.h0[0])

    def validate_for(self, law: DiscreteProcessLaw) -> None:
        if self.d != law.d:
            raise DomainError("integrand and law dimensions differ")
        if self.n_atoms != law.n_atoms:
            raise DomainError("integrand and law atom counts differ")
        for i in range(self.d):
            _require_class_constant(law, 0, self.h0[i])
            for leg in self.legs[i]:
                k_left = law.grid_index(leg.left)
                law.grid_index(leg.right)
                _require_class_constant(law, k_left, leg.coeffs)


def _require_class_constant(law: DiscreteProcessLaw, k: int, coeffs) -> None:
    for cls in law.prefix_classes(k):
        first = coeffs[cls.indices[0]]
        for a in cls.indices[1:]:
            if coeffs[a] != first:
                raise ValidationError(
                    f"integrand coefficients differ inside an information class at grid index {k}"
                )


def elementary_integral_by_coordinate(
    law: DiscreteProcessLaw, H: ElementaryIntegrand, t: float, values=None
) -> np.ndarray:
    """(atoms, d) array of the per-coordinate integral pieces (H^i . V^i)_t,
    including the time-0 mass H0*V0.  V defaults to the law's values; passing
    another array of the same shape integrates H against that process
    instead (the Doob parts, say)."""
    H.validate_for(law)
    k_t = law.grid_index(t)
    v = law.values if values is None else np.asarray(values, dtype=float)
    out = np.zeros((law.n_atoms, law.d))
    for i in range(H.d):
        out[:, i] = np.asarray(H.h0[i]) * v[:, 0, i]
        for leg in H.legs[i]:
            kl = min(law.grid_index(leg.left), k_t)
            kr = min(law.grid_index(leg.right), k_t)
            if kr > kl:
                out[:, i] += np.asarray(leg.coeffs) * (v[:, kr, i] - v[:, kl, i])
    return out


def elementary_integral(law: DiscreteProcessLaw, H: ElementaryIntegrand, t: float) -> np.ndarray:
    """Per-atom value of the stochastic integral through t, including the
    time-0 mass: sum over coordinates of H0*X0 plus leg coefficients times
    the capped increments."""
    return elementary_integral_by_coordinate(law, H, t).sum(axis=1)


def sign_integrand(law: DiscreteProcessLaw, t: float) -> ElementaryIntegrand:
    """The variation-attaining integrand: initial coefficients sign(X_0),
    leg coefficients the signs of the conditional increment means (sign(0)
    is 0).  Its expected integral through t equals the summed conditional
    variations exactly."""
    k_t = law.grid_index(t)
    cem = conditional_increment_means(law)
    h0 = tuple(
        tuple(float(x) for x in np.sign(law.values[:, 0, i]) + 0.0) for i in range(law.d)
    )
    legs = []
    for i in range(law.d):
        legs.append(
            tuple(
                IntegrandLeg(
                    left=law.grid.times[k - 1],
                    right=law.grid.times[k],
                    coeffs=tuple(float(x) for x in np.sign(cem[:, k - 1, i]) + 0.0),
                )
                for k in range(1, k_t + 1)
            )
        )
    return ElementaryIntegrand(h0=h0, legs=tuple(legs))


# -- classification and norms ----------------------------------------------


@dataclass(frozen=True)
class Classification:
    martingale: bool
    supermartingale: tuple[bool, ...]
    quasimartingale_statistic: float


def classify(law: DiscreteProcessLaw, tol: float = 1e-9) -> Classification:
    """Martingale/supermartingale flags from conditional increment means, and
    the quasimartingale statistic: the largest grid-time value of expected
    absolute level plus summed conditional variations."""
    if tol < 0.0:
        raise DomainError("tol must be nonnegative")
    cem = conditional_increment_means(law)
    if cem.size:
        martingale = bool(np.max(np.abs(cem)) <= tol)
        supermartingale = tuple(bool(np.max(cem[:, :, i]) <= tol) for i in range(law.d))
    else:
        martingale = True
        supermartingale = tuple(True for _ in range(law.d))
    w = law.weight_array
    level = np.abs(law.values).sum(axis=2)  # (A, K) absolute coordinate sums
    e_abs = w @ level
    var_running = float(w @ np.abs(law.values[:, 0, :]).sum(axis=1))
    statistic = e_abs[0] + var_running
    for k in range(1, len(law.grid)):
        var_running += float(w @ np.abs(cem[:, k - 1, :]).sum(axis=1))
        statistic = max(statistic, e_abs[k] + var_running)
    return Classification(
        martingale=martingale,
        supermartingale=supermartingale,
        quasimartingale_statistic=float(statistic),
    )


@dataclass(frozen=True)
class NormsReport:
    p: float
    lp_sup: float
    hardy: float
    emery_lower: float
    emery_is_lower_bound: bool
    emery_exhaustive: bool
    library_size: int


def norms(law: DiscreteProcessLaw, p: float = 1.0, family=None) -> NormsReport:
    """Maximal L^p norm, Hardy-type norm from the Doob decomposition, and a
    certified lower bound on the Emery-type norm.

    The Emery figure maximizes ||(H . X)_T||_p over an integrand library: the
    supplied family, or by default the sign integrands at every grid time plus
    every extreme vertex assignment when the slot count is small enough
    (exact there, since the objective is convex in H).
    """
    if p < 1.0:
        raise DomainError("p must be at least 1")
    w = law.weight_array
    lp_sup = float((w @ np.array([path.sup_norm() ** p for path in law.paths])) ** (1.0 / p))
    dec = doob_decomposition(law)
    m_sup = np.max(np.abs(dec.martingale_part), axis=(1, 2))
    a_var = np.abs(np.diff(dec.predictable_part, axis=1)).sum(axis=(1, 2))
    hardy = float((w @ (m_sup + a_var) ** p) ** (1.0 / p))

    T = law.grid.times[-1]
    best = 0.0
    size = 0
    exhaustive = False
    if family is None:
        for t in law.grid.times:
            vals = elementary_integral(law, sign_integrand(law, t), T)
            best = max(best, float((w @ np.abs(vals) ** p) ** (1.0 / p)))
            size += 1
        enum = extreme_enumeration(law, T)
        if enum is not None:
            vals = enum.values()
            norms_p = (np.abs(vals) ** p) @ w
            best = max(best, float(np.max(norms_p) ** (1.0 / p)))
            size += vals.shape[0]
            exhaustive = True
    else:
        for H in family:
            vals = elementary_integral(law, H, T)
            best = max(best, float((w @ np.abs(vals) ** p) ** (1.0 / p)))
            size += 1
    return NormsReport(
        p=float(p),
        lp_sup=lp_sup,
        hardy=hardy,
        emery_lower=best,
        emery_is_lower_bound=True,
        emery_exhaustive=exhaustive,
        library_size=size,
    )


# -- exhaustive extreme-point enumeration -----------------------------------


@dataclass(frozen=True)
class ExtremeEnumeration:
    """All +-1 vertex assignments of one coefficient slot per (information
    class, leg or initial mass, coordinate).  Convex objectives over the
    coefficient box are maximized at these vertices, so sweeping them is
    exact for norm-type figures and a certified lower bound for tail
    probabilities."""

    law: DiscreteProcessLaw
    t: float
    signs: np.ndarray       # (n, S) in {-1, +1}
    slot_coord: np.ndarray  # (S,) coordinate owning each slot

    def _slot_matrix(self, arr) -> np.ndarray:
        law = self.law
        v = law.values if arr is None else np.asarray(arr, dtype=float)
        k_t = law.grid_index(self.t)
        rows = []
        for i in range(law.d):
            for cls in law.prefix_classes(0):
                row = np.zeros(law.n_atoms)
                row[list(cls.indices)] = v[list(cls.indices), 0, i]
                rows.append(row)
        for k in range(1, k_t + 1):
            for i in range(law.d):
                for cls in law.prefix_classes(k - 1):
                    row = np.zeros(law.n_atoms)
                    idx = list(cls.indices)
                    row[idx] = v[idx, k, i] - v[idx, k - 1, i]
                    rows.append(row)
        return np.array(rows)

    def values(self, arr=None) -> np.ndarray:
        """(n, atoms) integral values (H . V)_t for every vertex integrand;
        V defaults to the law's values."""
        return self.signs @ self._slot_matrix(arr)

    def coordinate_values(self, i: int, arr=None) -> np.ndarray:
        """Same, but only coordinate i's slots contribute: (H^i . V^i)_t."""
        mask = self.slot_coord == i
        return self.signs[:, mask] @ self._slot_matrix(arr)[mask]


def vertex_slot_coords(law: DiscreteProcessLaw, t: float) -> np.ndarray:
    """Coordinate owning each coefficient slot, in slot-matrix row order."""
    k_t = law.grid_index(t)
    coords = []
    for i in range(law.d):
        coords.extend(i for _ in law.prefix_classes(0))
    for k in range(1, k_t + 1):
        for i in range(law.d):
            coords.extend(i for _ in law.prefix_classes(k - 1))
    return np.asarray(coords, dtype=int)


def extreme_enumeration(
    law: DiscreteProcessLaw, t: float, slot_cap: int = 16
) -> ExtremeEnumeration | None:
    """Enumerate vertex integrands when the slot count fits under slot_cap
    (2^slots rows); None otherwise."""
    slot_coord = vertex_slot_coords(law, t)
    S = len(slot_coord)
    if S > slot_cap:
        return None
    bits = (np.arange(1 << S)[:, None] >> np.arange(S)) & 1
    signs = 1.0 - 2.0 * bits
    return ExtremeEnumeration(law=law, t=t, signs=signs, slot_coord=slot_coord)


# -- law transforms ----------------------------------------------------------


def _map_values(law: DiscreteProcessLaw, fn) -> DiscreteProcessLaw:
    paths = tuple(
        CadlagPath(
            p.horizon,
            tuple(Coordinate(c.breakpoints, tuple(fn(v) for v in c.values)) for c in p.coords),
        )
        for p in law.paths
    )
    return DiscreteProcessLaw(law.grid, paths, law.weights)


def negate(law: DiscreteProcessLaw) -> DiscreteProcessLaw:
    """The law of -X."""
    return _map_values(law, lambda v: -v)


def clamp(law: DiscreteProcessLaw, c: float) -> DiscreteProcessLaw:
    """The law of the coordinatewise truncation (-c) v (X ^ c)."""
    if not c > 0.0:
        raise DomainError("truncation level must be positive")
    return _map_values(law, lambda v: min(max(v, -c), c))
