"""Brute-force checks and seeded random instances.

Nothing in here reuses the closed forms it is meant to validate: band risk
is re-derived by enumerating every extreme density of the band polytope,
and group capital by a grid search over capital levels and surplus
allocations.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np

from . import _kernels
from .errors import PreconditionError, SizeError, ValidationError
from .group import LiabilityVector
from .measure import ProbSpace
from .risk import AVaR, Band, ScenarioSet, Vertices

MAX_ENUM_ATOMS = 12
_INT64_SAFE = 2 ** 60


def enumerate_band_extremes(space: ProbSpace, L, H, max_atoms: int = MAX_ENUM_ATOMS) -> list:
    """Every vertex of ``{phi : L <= phi <= H, E_P[phi] = 1}``.

    A vertex sits on a bound at every atom except at most one. Subsets of
    atoms at the upper bound are scanned exhaustively; the leftover budget
    goes to one further atom if it fits there. Returns an empty list when the
    polytope is empty.
    """
    n = space.n_atoms
    if n > max_atoms:
        raise SizeError(f"extreme-point enumeration limited to {max_atoms} atoms, got {n}")
    L, H = space.var(L), space.var(H)
    if not space.all_le(L, H):
        raise ValidationError("invariant 'L <= H' violated")
    p = space.weights
    ell = space.mean(L)
    w = p * (H - L)
    target = 1 - ell
    if target < -space.tol or w.sum() < target - space.tol:
        return []

    if space.exact:
        den = lcm(*(v.denominator for v in list(w) + [target]))
        wi = [int(v * den) for v in w]
        ti = int(target * den)
        if sum(wi) < _INT64_SAFE:
            sums, ok = _kernels.band_extreme_pairs(np.array(wi, dtype=np.int64), ti, 0)
            sums = [int(s) for s in sums]
        else:
            sums, ok = _kernels.numpy_band_extreme_pairs(np.array(wi, dtype=object), ti, 0)
        ok = np.asarray(ok, dtype=bool)
        rest_of = [ti - s for s in sums]
        w_int = wi
    else:
        wf = np.asarray(w, dtype=float)
        sums, ok = _kernels.band_extreme_pairs(wf, float(target), space.tol)
        rest_of = [float(target) - s for s in sums]
        w_int = list(wf)

    keys = {}
    positive = sum(1 << j for j in range(n) if w_int[j] > space.tol)

    def record(mask, j, rest):
        mask &= positive
        if j >= 0 and abs(rest) <= space.tol:
            j = -1
        elif j >= 0 and abs(rest - w_int[j]) <= space.tol:
            mask |= (1 << j) & positive
            j = -1
        key = (mask, j, rest if j >= 0 else 0)
        keys.setdefault(key, None)

    for mask in range(1 << n):
        rest = rest_of[mask]
        if abs(rest) <= space.tol:
            record(mask, -1, 0)
    for mask, j in zip(*np.nonzero(ok)):
        record(int(mask), int(j), rest_of[mask])

    out = []
    for mask, j, rest in keys:
        phi = L.copy()
        for a in range(n):
            if (mask >> a) & 1:
                phi[a] = H[a]
        if j >= 0:
            amount = Fraction(rest, den) if space.exact else rest
            phi[j] = L[j] + amount / p[j]
        out.append(phi)
    # sort for a deterministic order independent of the kernel backend
    out.sort(key=lambda v: tuple(v))
    dedup = []
    for phi in out:
        if not dedup or not space.all_eq(dedup[-1], phi):
            dedup.append(phi)
    return dedup


def scenario_extremes(space: ProbSpace, sset: ScenarioSet) -> list:
    if isinstance(sset, Vertices):
        return list(sset.densities)
    band = sset.as_band() if isinstance(sset, AVaR) else sset
    return enumerate_band_extremes(space, band.L, band.H)


def enumerated_rho(space: ProbSpace, sset: ScenarioSet, xi):
    """``max E_phi[-xi]`` over the enumerated extreme densities."""
    xi = space.var(xi)
    return max(space.mean(phi * -xi) for phi in scenario_extremes(space, sset))


def _allocation_constraints(p, dens, X, S, m):
    """Rows ``C u + d <= 0`` encoding ``E_phi[X_i - Y_i] <= 0`` for two units.

    ``u`` is unit 1's surplus on each solvent atom; unit 2 gets the rest.
    """
    solvent = S <= m
    default = ~solvent
    ratio = np.where(default, 1.0 - m / np.where(default, S, 1.0), 0.0)
    rows_C, rows_d = [], []
    for phi in dens:
        pphi = p * phi
        d1 = float((pphi * X[0] * ratio).sum())
        d2 = float((pphi * X[1] * ratio).sum()) - float((pphi * (m - S))[solvent].sum())
        rows_C.append(-pphi[solvent])
        rows_d.append(d1)
        rows_C.append(pphi[solvent])
        rows_d.append(d2)
    C = np.array(rows_C, dtype=float).reshape(len(rows_d), int(solvent.sum()))
    return C, np.array(rows_d), (m - S)[solvent]


def brute_force_capital(space: ProbSpace, sset: ScenarioSet, X, grid: float = 1e-3,
                        refine: float = 1e-5, n_grid: int = 16, levels: int = 40) -> float:
    """Grid-search estimate of the minimal group capital for two units on at most three atoms.

    Capital levels are scanned upward in steps of ``grid`` starting from the
    aggregate lower bound; at each level the worst residual
    ``max_{i, phi} E_phi[X_i - Y_i]`` is minimised over surplus allocations by
    a zooming grid. The first coarse level that works is refined backwards in
    steps of ``refine``.
    """
    if not isinstance(X, LiabilityVector):
        X = LiabilityVector(space, X)
    if space.n_atoms > 3 or X.n_units != 2:
        raise PreconditionError("brute force is limited to 2 units on at most 3 atoms")
    p = np.array([float(v) for v in space.weights])
    dens = [np.array([float(v) for v in phi]) for phi in scenario_extremes(space, sset)]
    Xf = np.array([[float(v) for v in row] for row in X.X])
    S = Xf.sum(axis=0)
    top = float(S.max())
    lower = max(0.0, max(float((p * phi * S).sum()) for phi in dens))

    def feasible(m):
        C, d, widths = _allocation_constraints(p, dens, Xf, S, m)
        val, _ = _kernels.minmax_affine_grid(C, d, widths, n_grid, levels)
        return val <= 1e-12

    start = np.floor(lower / grid) * grid
    steps = int(np.ceil((top - start) / grid)) + 1
    hit = None
    for j in range(max(steps, 1)):
        m = min(start + j * grid, top)
        if m < lower - grid:
            continue
        if feasible(m):
            hit = m
            break
    if hit is None:
        hit = top
    lo_edge = max(0.0, hit - grid)
    fine = int(round((hit - lo_edge) / refine))
    for j in range(fine + 1):
        m = lo_edge + j * refine
        if m >= hit:
            break
        if feasible(m):
            return m
    return hit


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for a reproducible random instance.

    ``kind`` is one of ``"band0"`` (upper band only), ``"band"`` (lower and
    upper band), ``"avar"`` or ``"vertices"``. Liabilities are integers in
    ``[0, max_value]``.
    """

    n_atoms: int
    n_units: int = 2
    kind: str = "band0"
    max_value: int = 6
    seed: int = 0
    exact: bool = True
    n_vertices: int | None = None
    zero_prob: float = 0.3

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValidationError("invariant 'n_atoms >= 1' violated")
        if self.n_units < 2:
            raise ValidationError("invariant 'n_units >= 2' violated")
        if self.kind not in ("band0", "band", "avar", "vertices"):
            raise ValidationError(f"unknown scenario kind {self.kind!r}")
        if self.max_value < 1:
            raise ValidationError("invariant 'max_value >= 1' violated")


_H_TARGETS = [Fraction(6, 5), Fraction(3, 2), Fraction(2), Fraction(5, 2), Fraction(3)]


def random_weights(rng: np.random.Generator, n: int) -> list:
    raw = [int(v) for v in rng.integers(1, 10, size=n)]
    tot = sum(raw)
    return [Fraction(v, tot) for v in raw]


def random_upper(rng: np.random.Generator, p: list) -> list:
    n = len(p)
    while True:
        raw = [int(v) for v in rng.integers(0, 7, size=n)]
        mean = sum(pi * r for pi, r in zip(p, raw))
        if mean > 0:
            break
    h = _H_TARGETS[int(rng.integers(len(_H_TARGETS)))]
    return [Fraction(r) * h / mean for r in raw]


def random_lower(rng: np.random.Generator, p: list, H: list) -> list:
    h = sum(pi * v for pi, v in zip(p, H))
    while True:
        v = [Fraction(int(t), 10) for t in rng.integers(0, 10, size=len(p))]
        L = [vi * Hi / h for vi, Hi in zip(v, H)]
        if sum(pi * li for pi, li in zip(p, L)) > 0:
            return L


def random_density(rng: np.random.Generator, p: list) -> list:
    while True:
        raw = [int(v) for v in rng.integers(0, 6, size=len(p))]
        mean = sum(pi * r for pi, r in zip(p, raw))
        if mean > 0:
            return [Fraction(r) / mean for r in raw]


def random_liabilities(rng: np.random.Generator, n_units: int, n_atoms: int,
                       max_value: int, zero_prob: float) -> list:
    vals = rng.integers(0, max_value + 1, size=(n_units, n_atoms))
    zeros = rng.random(size=(n_units, n_atoms)) < zero_prob
    return [[int(0 if z else v) for v, z in zip(row, zrow)] for row, zrow in zip(vals, zeros)]


def random_instance(spec: InstanceSpec) -> tuple:
    """``(space, scenario_set, liabilities)`` drawn deterministically from ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    p = random_weights(rng, spec.n_atoms)
    space = ProbSpace(p, exact=spec.exact)
    if spec.kind == "vertices":
        k = spec.n_vertices or int(rng.integers(1, 5))
        sset = Vertices(space, [random_density(rng, p) for _ in range(k)])
    elif spec.kind == "avar":
        sset = AVaR(space, Fraction(int(rng.integers(1, 11)), 10))
    else:
        H = random_upper(rng, p)
        L = random_lower(rng, p, H) if spec.kind == "band" else [0] * spec.n_atoms
        if spec.kind == "band" and sum(pi * h for pi, h in zip(p, H)) <= 1:
            H = [2 * v for v in H]
        sset = Band(space, L, H)
    X = LiabilityVector(space, random_liabilities(rng, spec.n_units, spec.n_atoms,
                                                  spec.max_value, spec.zero_prob))
    return space, sset, X
