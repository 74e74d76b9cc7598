"""Capital for a group of N units that must each stay acceptable on their own.

A group holding capital ``m`` pays its units through an admissible payoff
``Y``: when the total liability ``S = sum_i X_i`` exceeds ``m`` the capital
is shared in proportion to liabilities, otherwise each unit receives at
least its liability and the surplus is split somehow. The minimal capital
``K(X)`` is the least ``m`` for which some admissible ``Y`` makes every
``Y_i - X_i`` acceptable. It is never below the aggregate capital
``rho(-S)``; the two coincide exactly when the risk measure lets the group
diversify as if it were one unit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import lp as lpmod
from .errors import DimensionError, PreconditionError, ValidationError
from .measure import ProbSpace, positive_part, safe_ratio
from .risk import AVaR, Band, ScenarioSet, Vertices, band_split, lh_decomposition, rho, rho_eval


@dataclass(frozen=True, eq=False)
class LiabilityVector:
    """Nonnegative liabilities, one row per unit and one column per atom."""

    space: ProbSpace
    X: np.ndarray = field(repr=False)

    def __init__(self, space: ProbSpace, X):
        X = space.array(X)
        if X.ndim != 2 or X.shape[1] != space.n_atoms:
            raise DimensionError(f"liabilities must have shape (N, {space.n_atoms}), got {X.shape}")
        if X.shape[0] < 2:
            raise ValidationError("invariant 'N >= 2 units' violated")
        if any(v < 0 for v in X.ravel()):
            raise ValidationError("invariant 'liabilities are nonnegative' violated")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "X", X)

    @property
    def n_units(self) -> int:
        return self.X.shape[0]

    @property
    def total(self) -> np.ndarray:
        return self.X.sum(axis=0)

    def scaled(self, factor) -> "LiabilityVector":
        return LiabilityVector(self.space, self.X * self.space.scalar(factor))


@dataclass(frozen=True, eq=False)
class PayoffVector:
    """Payoffs ``Y`` (same shape as the liabilities) paid out of capital ``m``."""

    Y: np.ndarray
    m: object


def _liabilities(space: ProbSpace, X) -> LiabilityVector:
    if isinstance(X, LiabilityVector):
        return X
    return LiabilityVector(space, X)


def standard_payoff(X: LiabilityVector, m, alphas) -> PayoffVector:
    """Payoff that shares any solvency surplus in fixed proportions ``alphas``.

    Where ``S <= m`` unit ``k`` gets ``X_k + alpha_k (m - S)``; where ``S > m``
    it gets ``X_k m / S``.
    """
    space = X.space
    m = space.scalar(m)
    if m < 0:
        raise PreconditionError(f"capital must be nonnegative, got {m}")
    alphas = space.array(alphas, shape=(X.n_units,))
    if any(a < -space.tol for a in alphas) or not space.eq(alphas.sum(), 1):
        raise PreconditionError("alphas must be a probability vector")
    S = X.total
    solvent = np.array([s <= m for s in S])
    surplus = X.X + np.outer(alphas, space.constant(m) - S)
    default = X.X * safe_ratio(space.constant(m), S)[None, :]
    Y = np.where(solvent[None, :], surplus, default)
    if space.exact:
        Y = Y.astype(object)
    return PayoffVector(Y=Y, m=m)


def is_admissible(X: LiabilityVector, Y, m=None) -> bool:
    """Check the default-proportional / solvent-floor rules atom by atom."""
    space = X.space
    if isinstance(Y, PayoffVector):
        m = Y.m if m is None else m
        Y = Y.Y
    m = space.scalar(m)
    Y = space.array(Y)
    if Y.shape != X.X.shape:
        raise DimensionError(f"payoff shape {Y.shape} does not match liabilities {X.X.shape}")
    if not space.all_le(space.zero, Y):
        return False
    S = X.total
    if not space.all_eq(Y.sum(axis=0), space.constant(m)):
        return False
    for w, s in enumerate(S):
        if s > m + space.tol:
            if not space.all_eq(Y[:, w], X.X[:, w] * m / s):
                return False
        elif not space.all_le(X.X[:, w], Y[:, w]):
            return False
    return True


def aggregate_capital(space: ProbSpace, sset: ScenarioSet, X) -> tuple:
    """``(rho(-S), witness)``: the capital the group would need as a single unit."""
    X = _liabilities(space, X)
    return rho_eval(space, sset, -X.total)


def _shortfall(space, S, K):
    """``((K - S)^+, (K - S)^-)`` as arrays."""
    gap = space.constant(K) - S
    return positive_part(gap), positive_part(-gap)


def offsetting_alphas(space: ProbSpace, sset: ScenarioSet, X) -> tuple:
    """Surplus shares that make every unit break even under the aggregate witness.

    Unit ``i`` gets ``E_Q*[(X_i/S)(S - K)^+] / E_Q*[(K - S)^+]``. When the
    denominator vanishes every share works equally well and the uniform
    vector is returned.
    """
    X = _liabilities(space, X)
    K, witness = aggregate_capital(space, sset, X)
    S = X.total
    surplus, deficit = _shortfall(space, S, K)
    den = space.mean(witness * surplus)
    N = X.n_units
    if den == 0 or (not space.exact and abs(den) <= space.tol):
        return space.array([space.one / N] * N), witness
    shares = safe_ratio(X.X, S[None, :]) * deficit[None, :]
    alphas = space.mean(shares * witness[None, :]) / den
    return space.array(alphas), witness


def cohesion_condition(space: ProbSpace, sset: ScenarioSet, X) -> bool:
    """``rho(-(K - S)^-) == sum_i rho(-(X_i/S)(K - S)^-)``.

    For comonotonic sets (bands, AV@R) this holds exactly when the group can
    operate on the aggregate capital ``K``. For vertex sets the value is still
    computed but carries no such guarantee.
    """
    X = _liabilities(space, X)
    K, _ = aggregate_capital(space, sset, X)
    _, deficit = _shortfall(space, X.total, K)
    lhs = rho(space, sset, -deficit)
    shares = safe_ratio(X.X, X.total[None, :]) * deficit[None, :]
    rhs = sum((rho(space, sset, -row) for row in shares), space.zero)
    return space.eq(lhs, rhs)


def residual_risks(space: ProbSpace, sset: ScenarioSet, X: LiabilityVector, Y) -> np.ndarray:
    """``rho(Y_i - X_i)`` for every unit."""
    Y = Y.Y if isinstance(Y, PayoffVector) else Y
    return space.array([rho(space, sset, Y[i] - X.X[i]) for i in range(X.n_units)])


@dataclass(frozen=True)
class OffsettingVerdict:
    """The four characterisations of an offsetting payoff at capital ``K``.

    ``acceptable``: every net worth ``Y_i - X_i`` is acceptable.
    ``zero_residuals``: ``rho(Y_i - X_i) = E_Q*[X_i - Y_i] = 0`` for all units.
    ``additive_centered``: residual risks add up to the risk of the total net
    worth and every ``E_Q*[X_i - Y_i]`` vanishes.
    ``minimal``: ``K(X) = K`` and ``Y`` minimises the total residual risk over
    admissible payoffs at ``K``.
    """

    acceptable: bool
    zero_residuals: bool
    additive_centered: bool
    minimal: bool | None
    residuals: np.ndarray = field(repr=False)
    centered: np.ndarray = field(repr=False)

    @property
    def offsetting(self) -> bool:
        return self.acceptable

    @property
    def consistent(self) -> bool:
        """First three conditions agree (the fourth is reported separately)."""
        return self.acceptable == self.zero_residuals == self.additive_centered


def verify_offsetting(space: ProbSpace, sset: ScenarioSet, X, Y,
                      group_capital=None, check_minimal: bool = True) -> OffsettingVerdict:
    """Evaluate all four offsetting conditions for a payoff at the aggregate capital.

    ``group_capital`` may carry a precomputed ``K(X)``; otherwise it is
    computed when ``check_minimal`` is set.
    """
    X = _liabilities(space, X)
    K, witness = aggregate_capital(space, sset, X)
    Ymat = Y.Y if isinstance(Y, PayoffVector) else space.array(Y)
    if not is_admissible(X, Ymat, K):
        raise PreconditionError("payoff is not admissible at the aggregate capital")
    residuals = residual_risks(space, sset, X, Ymat)
    centered = space.mean((X.X - Ymat) * witness[None, :])
    acceptable = all(space.le(r, 0) for r in residuals)
    zero = all(space.eq(r, 0) for r in residuals) and all(space.eq(c, 0) for c in centered)
    total = residuals.sum()
    additive = space.eq(total, rho(space, sset, (Ymat - X.X).sum(axis=0)))
    additive_centered = additive and all(space.eq(c, 0) for c in centered)
    minimal = None
    if group_capital is None and check_minimal:
        group_capital = minimal_group_capital(space, sset, X).K_group
    if group_capital is not None:
        # the infimum of the total residual risk at K is rho(K - S) = 0
        minimal = space.eq(group_capital, K) and space.eq(total, 0)
    return OffsettingVerdict(acceptable=acceptable, zero_residuals=zero,
                             additive_centered=additive_centered, minimal=minimal,
                             residuals=residuals, centered=centered)


@dataclass
class CapitalReport:
    """Everything :func:`minimal_group_capital` found out about one liability vector.

    ``payoff`` is an offsetting payoff at ``K_group``: the standard payoff with
    ``alphas`` when that one works (``payoff_kind == "standard"``), otherwise
    the optimiser returned by the linear program (``"lp"``). ``residuals`` are
    the unit risks ``rho(Y_i - X_i)`` of that payoff.
    """

    K_aggregate: object
    K_group: object
    alphas: np.ndarray
    witness: np.ndarray
    cohesion_holds: bool
    residuals: np.ndarray
    payoff: np.ndarray
    payoff_kind: str
    cohesion_condition: bool
    comonotonic_set: bool
    lp_solves: int = 0

    @property
    def gap(self):
        return self.K_group - self.K_aggregate


def _breakpoints(space: ProbSpace, S: np.ndarray) -> list:
    pts = sorted(set(S) | {space.zero})
    return [v for v in pts if v >= 0]


class _PieceProgram:
    """Linear program for one interval of capital on which the default set is fixed.

    Variables: ``m`` then the surplus ``u[i, s]`` of unit ``i`` on each solvent
    atom ``s``. Each density ``phi`` adds one row per unit encoding
    ``E_phi[X_i - Y_i] <= 0``.
    """

    def __init__(self, space: ProbSpace, X: LiabilityVector, lo, hi):
        self.space = space
        self.X = X
        S = X.total
        self.S = S
        self.default = [w for w in range(space.n_atoms) if S[w] > lo]
        self.solvent = [w for w in range(space.n_atoms) if not S[w] > lo]
        N, k = X.n_units, len(self.solvent)
        self.n_vars = 1 + N * k
        zero = space.zero
        self.prog = lpmod.LinearProgram([1] + [0] * (N * k), [], lower=[lo] + [0] * (N * k))
        self.prog.add([1] + [0] * (N * k), lpmod.LE, hi)
        for j, w in enumerate(self.solvent):
            row = [zero] * self.n_vars
            row[0] = -1
            for i in range(N):
                row[1 + i * k + j] = 1
            self.prog.add(row, lpmod.EQ, -S[w])
        self.n_cuts = 0

    def add_density(self, phi: np.ndarray) -> None:
        space, X = self.space, self.X
        pphi = space.weights * phi
        N, k = X.n_units, len(self.solvent)
        for i in range(N):
            row = [space.zero] * self.n_vars
            for j, w in enumerate(self.solvent):
                row[1 + i * k + j] = -pphi[w]
            coef_m = space.zero
            const = space.zero
            for w in self.default:
                coef_m -= pphi[w] * X.X[i, w] / self.S[w]
                const -= pphi[w] * X.X[i, w]
            row[0] = coef_m
            self.prog.add(row, lpmod.LE, const)
        self.n_cuts += 1

    def payoff(self, x: np.ndarray) -> tuple:
        space, X = self.space, self.X
        m = x[0]
        N, k = X.n_units, len(self.solvent)
        Y = X.X.copy()
        for w in self.default:
            Y[:, w] = X.X[:, w] * m / self.S[w]
        for j, w in enumerate(self.solvent):
            for i in range(N):
                Y[i, w] = X.X[i, w] + x[1 + i * k + j]
        return m, Y

    def solve(self):
        return lpmod.solve(self.prog, exact=self.space.exact, tol=self.space.tol)


def _initial_densities(space, sset, method):
    if method == "enumerate":
        from .oracle import enumerate_band_extremes
        if isinstance(sset, Vertices):
            return list(sset.densities)
        band = sset.as_band() if isinstance(sset, AVaR) else sset
        return enumerate_band_extremes(space, band.L, band.H)
    if method == "auto" and isinstance(sset, Vertices):
        return list(sset.densities)
    return []


def _same_density(space, a, b) -> bool:
    return space.all_eq(a, b)


def minimal_group_capital(space: ProbSpace, sset: ScenarioSet, X,
                          method: str = "auto", max_rounds: int = 500) -> CapitalReport:
    """Smallest capital ``K(X)`` admitting an offsetting payoff, computed exactly.

    Capital is scanned over the intervals between consecutive distinct values
    of ``S``; on each interval the set of defaulting atoms is fixed and the
    problem is a linear program in ``m`` and the surplus shares. Intervals are
    visited in increasing order, so the first feasible one holds the minimum.

    ``method``:
        ``"auto"`` - vertex sets use all vertices as constraints, band sets
        generate constraints lazily from the witness of each violated unit;
        ``"enumerate"`` - constraints from every extreme density up front
        (band sets with at most 12 atoms);
        ``"cutting-plane"`` - lazy constraints for every kind of set.
    """
    if method not in ("auto", "enumerate", "cutting-plane"):
        raise ValueError(f"unknown method {method!r}")
    X = _liabilities(space, X)
    K, witness = aggregate_capital(space, sset, X)
    alphas, _ = offsetting_alphas(space, sset, X)
    S = X.total
    seeds = _initial_densities(space, sset, method)
    pts = _breakpoints(space, S)
    pieces = list(zip(pts[:-1], pts[1:])) or [(pts[0], pts[0])]

    solves = 0
    found = None
    for lo, hi in pieces:
        piece = _PieceProgram(space, X, lo, hi)
        cuts = [witness] + [d for d in seeds if not _same_density(space, d, witness)]
        for d in cuts:
            piece.add_density(d)
        for _ in range(max_rounds):
            res = piece.solve()
            solves += 1
            if res.status != "optimal":
                break
            m, Y = piece.payoff(res.x)
            new = []
            for i in range(X.n_units):
                r, wit = rho_eval(space, sset, Y[i] - X.X[i])
                if not r > space.tol or any(_same_density(space, wit, c) for c in new):
                    continue
                if any(_same_density(space, wit, c) for c in cuts):
                    raise RuntimeError("cutting plane stalled on a repeated density")
                new.append(wit)
            if not new:
                found = (m, Y)
                break
            for d in new:
                piece.add_density(d)
            cuts.extend(new)
        else:
            raise RuntimeError("cutting plane did not converge")
        if found is not None:
            break
    if found is None:  # cannot happen: m = max S is always feasible
        raise RuntimeError("no feasible capital level found")

    K_group, Y_lp = found
    comonotonic = not isinstance(sset, Vertices)
    std = standard_payoff(X, K_group, alphas)
    std_res = residual_risks(space, sset, X, std)
    if all(space.le(r, 0) for r in std_res):
        payoff, kind, residuals = std.Y, "standard", std_res
    else:
        payoff, kind, residuals = Y_lp, "lp", residual_risks(space, sset, X, Y_lp)
    return CapitalReport(
        K_aggregate=K, K_group=K_group, alphas=alphas, witness=witness,
        cohesion_holds=space.eq(K_group, K), residuals=residuals, payoff=payoff,
        payoff_kind=kind, cohesion_condition=cohesion_condition(space, sset, X),
        comonotonic_set=comonotonic, lp_solves=solves)


def random_split(space: ProbSpace, Z: np.ndarray, n_units: int, rng: np.random.Generator,
                 resolution: int = 1000) -> np.ndarray:
    """Split ``Z`` atom by atom with independent uniform simplex weights."""
    rows = np.empty((n_units, space.n_atoms), dtype=object if space.exact else float)
    for w in range(space.n_atoms):
        cuts = np.sort(rng.integers(0, resolution + 1, size=n_units - 1))
        edges = np.concatenate([[0], cuts, [resolution]])
        shares = np.diff(edges)
        for i in range(n_units):
            share = Fraction(int(shares[i]), resolution) if space.exact else shares[i] / resolution
            rows[i, w] = share * Z[w]
    return rows


@dataclass
class FixedLiabilityVerdict:
    """Outcome of testing cohesion over all splits of a fixed total liability ``Z``.

    ``status`` is ``"hypothesis not satisfied"`` when ``rho(-Z) < -q(-Z)``; no
    claim is made then. Otherwise it is ``"confirmed"`` when every sampled
    split had ``K(X) = rho(-Z)`` and ``"violated"`` if one did not.
    """

    status: str
    hypothesis_holds: bool
    sufficient_condition: bool | None
    rho_Z: object
    q: object
    trials: int
    failures: list = field(default_factory=list)


def fixed_liability_cohesion(space: ProbSpace, L, H, Z, trials: int = 20, n_units: int = 2,
                             seed: int = 0) -> FixedLiabilityVerdict:
    L, H, Z = space.var(L), space.var(H), space.var(Z)
    if any(z < 0 for z in Z):
        raise PreconditionError("Z must be nonnegative")
    band = Band(space, L, H)
    split = band_split(space, L, H, -Z)
    K = space.mean(split.optimizer * Z)
    hypothesis = space.le(-split.q, K)
    sufficient = None
    if 0 < band.ell < 1:
        _, avar_part = lh_decomposition(space, L, H, -Z)
        gamma_avar = avar_part / (1 - band.ell)
        sufficient = space.le(gamma_avar, space.mean(L * Z) / band.ell)
    if not hypothesis:
        return FixedLiabilityVerdict("hypothesis not satisfied", False, sufficient, K, split.q, 0)
    rng = np.random.default_rng(seed)
    failures = []
    for t in range(trials):
        X = LiabilityVector(space, random_split(space, Z, n_units, rng))
        report = minimal_group_capital(space, band, X)
        if not space.eq(report.K_group, K):
            failures.append((t, X.X, report.K_group))
    status = "violated" if failures else "confirmed"
    return FixedLiabilityVerdict(status, True, sufficient, K, split.q, trials, failures)
