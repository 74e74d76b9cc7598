"""Coherent risk measures given by a scenario set of densities.

``rho(xi) = max_{phi in S} E_P[phi * (-xi)]`` for three kinds of scenario
set ``S``:

* :class:`Vertices` - the convex hull of an explicit list of densities;
* :class:`Band` - all densities squeezed between ``L`` and ``H``;
* :class:`AVaR` - all densities bounded by ``1/level``.

Band sets are evaluated in closed form by :func:`band_split`, which builds the
maximising density by filling the budget ``1 - E[L]`` with ``H - L`` on the
atoms where ``xi`` is smallest.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .errors import ConfigurationError, DimensionError, PreconditionError, ValidationError
from .measure import ProbSpace, comonotone_check, pos_neg_split


@dataclass(frozen=True, eq=False)
class Vertices:
    """Scenario set spanned by a finite list of densities."""

    space: ProbSpace
    densities: np.ndarray = field(repr=False)

    def __init__(self, space: ProbSpace, densities):
        dens = [space.density(d) for d in densities]
        if not dens:
            raise ConfigurationError("invariant 'scenario set is nonempty' violated: no vertices")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "densities", np.array(dens, dtype=dens[0].dtype))

    kind = "vertices"

    def __len__(self) -> int:
        return len(self.densities)


@dataclass(frozen=True, eq=False)
class Band:
    """Scenario set ``{phi : L <= phi <= H, E_P[phi] = 1}``."""

    space: ProbSpace
    L: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)

    kind = "band"

    def __init__(self, space: ProbSpace, L, H):
        L = space.var(L)
        H = space.var(H)
        if not space.all_le(space.zero, L):
            raise ValidationError("invariant '0 <= L' violated")
        if not space.all_le(L, H):
            raise ValidationError("invariant 'L <= H' violated")
        ell, h = space.mean(L), space.mean(H)
        if not space.le(ell, 1):
            raise ConfigurationError(f"invariant 'E_P[L] <= 1' violated (E_P[L] = {ell})")
        if not space.le(1, h):
            raise ConfigurationError(f"invariant 'E_P[H] >= 1' violated (E_P[H] = {h})")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "H", H)

    @classmethod
    def upper(cls, space: ProbSpace, H) -> "Band":
        """The set ``{0 <= phi <= H}``."""
        return cls(space, space.constant(0), H)

    @property
    def ell(self):
        return self.space.mean(self.L)

    @property
    def h(self):
        return self.space.mean(self.H)


@dataclass(frozen=True, eq=False)
class AVaR:
    """All densities bounded by ``1/level``; ``rho`` is the average value at risk."""

    space: ProbSpace
    level: object

    kind = "avar"

    def __init__(self, space: ProbSpace, level):
        level = space.scalar(level)
        if not 0 < level <= 1:
            raise ConfigurationError(f"invariant '0 < level <= 1' violated (level = {level})")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "level", level)

    def as_band(self) -> Band:
        return Band(self.space, self.space.constant(0), self.space.constant(self.space.one / self.level))


ScenarioSet = Union[Vertices, Band, AVaR]


def _check_space(space: ProbSpace, sset: ScenarioSet) -> None:
    if sset.space is not space and sset.space != space:
        raise ConfigurationError("scenario set was built on a different probability space")


@dataclass(frozen=True)
class BandSplit:
    """Closed-form maximiser of a band risk measure.

    ``optimizer`` equals ``H`` where ``xi < q``, ``L`` where ``xi > q`` and
    ``c*H + (1-c)*L`` where ``xi == q``.
    """

    q: object
    c: object
    optimizer: np.ndarray
    ell: object
    h: object
    gamma: object

    def __eq__(self, other):  # arrays inside; compare field by field
        if not isinstance(other, BandSplit):
            return NotImplemented
        return (self.q == other.q and self.c == other.c and self.ell == other.ell
                and self.h == other.h and bool(np.all(self.optimizer == other.optimizer)))


def band_split(space: ProbSpace, L, H, xi) -> BandSplit:
    """Quantile threshold ``q``, tie weight ``c`` and optimiser for the band ``[L, H]``.

    ``F(x) = E[L] + E[(H - L) 1{xi <= x}]`` is a step function; ``q`` is the
    first value of ``xi`` where it reaches one and ``c`` interpolates the jump
    at ``q`` so that the optimiser integrates to one.
    """
    L, H, xi = space.var(L), space.var(H), space.var(xi)
    if not space.all_le(space.zero, L) or not space.all_le(L, H):
        raise ValidationError("invariant '0 <= L <= H' violated")
    ell, h = space.mean(L), space.mean(H)
    if not space.le(ell, 1):
        raise ConfigurationError(f"invariant 'E_P[L] <= 1' violated (E_P[L] = {ell})")
    if not h > 1 + space.tol:
        raise ConfigurationError(f"band split needs E_P[H] > 1 (got {h})")

    w = space.weights * (H - L)
    order = sorted(range(space.n_atoms), key=xi.__getitem__)
    F_prev = ell
    q = None
    pos = 0
    n = space.n_atoms
    while pos < n:
        v = xi[order[pos]]
        mass = space.zero
        while pos < n and xi[order[pos]] == v:
            mass += w[order[pos]]
            pos += 1
        F_here = F_prev + mass
        if F_here >= 1 - space.tol:
            q = v
            break
        F_prev = F_here
    if q is None:  # unreachable: F(max xi) = h > 1
        raise AssertionError("cumulative band mass never reached one")
    if F_here == F_prev:
        c = space.zero
    else:
        c = (1 - F_prev) / (F_here - F_prev)
        if not space.exact:
            c = min(max(c, 0.0), 1.0)
    tie = c * H + (1 - c) * L
    opt = np.where(xi < q, H, np.where(xi == q, tie, L))
    if space.exact:
        opt = opt.astype(object)
    gamma = (1 - ell) / (h - ell)
    return BandSplit(q=q, c=c, optimizer=opt, ell=ell, h=h, gamma=gamma)


def rho_eval(space: ProbSpace, sset: ScenarioSet, xi) -> tuple:
    """Return ``(rho(xi), witness)`` where the witness density attains the maximum.

    Vertex sets return the lowest-index maximising vertex; band and AV@R sets
    return the canonical optimiser of :func:`band_split`.
    """
    _check_space(space, sset)
    xi = space.var(xi)
    if isinstance(sset, Vertices):
        vals = sset.densities @ (space.weights * -xi)
        best = max(vals)
        k = next(i for i, v in enumerate(vals) if v >= best - space.tol)
        return vals[k], sset.densities[k].copy()
    if isinstance(sset, AVaR):
        sset = sset.as_band()
    if isinstance(sset, Band):
        if sset.h <= 1 + space.tol:
            # E[H] = 1 leaves H as the only density
            return space.mean(sset.H * -xi), sset.H.copy()
        split = band_split(space, sset.L, sset.H, xi)
        return space.mean(split.optimizer * -xi), split.optimizer
    raise ConfigurationError(f"unknown scenario set type {type(sset).__name__}")


def rho(space: ProbSpace, sset: ScenarioSet, xi):
    """Value of the risk measure only."""
    return rho_eval(space, sset, xi)[0]


def rho_batch(space: ProbSpace, sset: ScenarioSet, xis) -> np.ndarray:
    """``rho`` of every row of ``xis``.

    Float-mode band and AV@R sets go through the compiled kernel; everything
    else is evaluated row by row.
    """
    _check_space(space, sset)
    xis = space.array(xis)
    if xis.ndim != 2 or xis.shape[1] != space.n_atoms:
        raise DimensionError(f"expected shape (k, {space.n_atoms}), got {xis.shape}")
    band = sset.as_band() if isinstance(sset, AVaR) else sset
    if not space.exact and isinstance(band, Band):
        p = np.asarray(space.weights, dtype=float)
        return _kernels.band_rho_batch(p, band.L, band.H, np.ascontiguousarray(xis))
    return space.array([rho(space, sset, xi) for xi in xis])


def avar(space: ProbSpace, level, xi, base=None):
    """Average value at risk: the mean loss ``-xi`` over the worst ``level`` tail.

    The atom straddling the tail boundary contributes only the fraction of its
    mass that is needed. ``base`` is an optional density ``dR/dP`` changing the
    reference measure to ``R``; atoms with zero ``R``-mass are ignored.
    """
    level = space.scalar(level)
    if not 0 < level <= 1:
        raise PreconditionError(f"AV@R level must lie in (0, 1], got {level}")
    xi = space.var(xi)
    mass = space.weights if base is None else space.weights * space.var(base)
    order = sorted((k for k in range(space.n_atoms) if mass[k] > 0), key=xi.__getitem__)
    remaining = level
    total = space.zero
    for k in order:
        take = mass[k] if mass[k] < remaining else remaining
        total += take * -xi[k]
        remaining -= take
        if remaining <= 0:
            break
    return total / level


def lh_decomposition(space: ProbSpace, L, H, xi) -> tuple:
    """Split a band risk into its lower-bound part and an AV@R part.

    Returns ``(E_P[L * -xi], (1 - ell) * AV@R at level gamma under the
    measure with density (H - L)/(h - ell))``. Their sum equals the band
    risk of ``xi``.
    """
    L, H, xi = space.var(L), space.var(H), space.var(xi)
    ell, h = space.mean(L), space.mean(H)
    if not ell > 0:
        raise PreconditionError("decomposition needs E_P[L] > 0")
    if not ell < 1:
        raise PreconditionError("decomposition needs E_P[L] < 1")
    if not h > 1:
        raise PreconditionError("decomposition needs E_P[H] > 1")
    if not space.all_le(L, H):
        raise ValidationError("invariant 'L <= H' violated")
    gamma = (1 - ell) / (h - ell)
    spread = (H - L) / (h - ell)
    ell_part = space.mean(L * -xi)
    avar_part = (1 - ell) * avar(space, gamma, xi, base=spread)
    return ell_part, avar_part


def comonotone_additivity_check(space: ProbSpace, sset: ScenarioSet, xi, eta) -> bool:
    """Whether ``rho(xi + eta) == rho(xi) + rho(eta)`` for a comonotone pair."""
    xi, eta = space.var(xi), space.var(eta)
    if not comonotone_check(xi, eta):
        raise PreconditionError("xi and eta are not comonotone")
    return space.eq(rho(space, sset, xi + eta), rho(space, sset, xi) + rho(space, sset, eta))


@dataclass(frozen=True)
class LinearityVerdict:
    """Outcome of the three linearity tests on a family ``xi_1, ..., xi_n``.

    ``additive``: sum of risks equals risk of the sum.
    ``scaled_additive``: the same with random nonnegative weights (sampled).
    ``shared_witness``: each ``rho(xi_i)`` is attained by the witness of the sum.
    """

    additive: bool
    scaled_additive: bool
    shared_witness: bool
    witness: np.ndarray = field(repr=False)

    @property
    def consistent(self) -> bool:
        return self.additive == self.scaled_additive == self.shared_witness

    @property
    def linear(self) -> bool:
        return self.additive and self.scaled_additive and self.shared_witness


def linearity_certificate(space: ProbSpace, sset: ScenarioSet, xis: Sequence,
                          n_samples: int = 8, seed: int = 0) -> LinearityVerdict:
    if len(xis) < 2:
        raise PreconditionError("linearity certificate needs at least two variables")
    xis = [space.var(x) for x in xis]
    total = sum(xis[1:], xis[0])
    rho_total, witness = rho_eval(space, sset, total)
    risks = [rho(space, sset, x) for x in xis]

    additive = space.eq(sum(risks[1:], risks[0]), rho_total)
    shared = all(space.eq(r, space.mean(witness * -x)) for r, x in zip(risks, xis))

    rng = np.random.default_rng(seed)
    weight_sets = [[1] * len(xis)]
    for _ in range(n_samples):
        weight_sets.append([Fraction(int(rng.integers(0, 21)), int(rng.integers(1, 8)))
                            for _ in xis])
    scaled = True
    for lam in weight_sets:
        lam = [space.scalar(v) for v in lam]
        mix = sum((lv * x for lv, x in zip(lam[1:], xis[1:])), lam[0] * xis[0])
        if not space.eq(rho(space, sset, mix), sum(lv * r for lv, r in zip(lam, risks))):
            scaled = False
            break
    return LinearityVerdict(additive=additive, scaled_additive=scaled,
                            shared_witness=shared, witness=witness)


def split_risk(space: ProbSpace, sset: ScenarioSet, xi) -> tuple:
    """``(rho(xi^+), rho(-xi^-))``; for comonotonic sets these sum to ``rho(xi)``."""
    pos, neg = pos_neg_split(space.var(xi))
    return rho(space, sset, pos), rho(space, sset, -neg)
