"""Finite probability spaces, random variables and densities.

Random variables and densities are plain 1-d numpy arrays, one entry per
atom. In exact mode the arrays hold :class:`fractions.Fraction` objects
(``dtype=object``); in float mode they are ``float64``. A :class:`ProbSpace`
knows its mode and converts user input accordingly, so the rest of the
package never has to care which arithmetic is in use.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, ValidationError

# Spaces up to this many atoms default to exact rational arithmetic.
EXACT_ATOM_LIMIT = 64
DEFAULT_TOL = 1e-9

RandVar = np.ndarray
Density = np.ndarray


def to_fraction(x) -> Fraction:
    """Convert ``x`` to a Fraction, reading floats and strings as decimals.

    ``0.4`` becomes ``2/5`` rather than the binary expansion of the double.
    Strings may be decimals (``"0.125"``) or ratios (``"1/3"``).
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, np.integer, Rational)):
        return Fraction(int(x)) if isinstance(x, np.integer) else Fraction(x)
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValidationError(f"non-finite value {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot read {x!r} as a number") from exc
    raise TypeError(f"unsupported number type {type(x).__name__}")


def to_float(x) -> float:
    if isinstance(x, str):
        return float(to_fraction(x))
    value = float(x)
    if not np.isfinite(value):
        raise ValidationError(f"non-finite value {x!r}")
    return value


def is_exact_array(a: np.ndarray) -> bool:
    return a.dtype == object


class ProbSpace:
    """A finite sample space with strictly positive atom weights.

    Parameters
    ----------
    weights
        Probability of each atom. Must be strictly positive and sum to one
        (exactly in exact mode, within ``1e-12`` in float mode).
    exact
        Use rational arithmetic. Defaults to ``True`` for spaces with at most
        64 atoms.
    tol
        Comparison tolerance used in float mode. Ignored in exact mode.
    """

    def __init__(self, weights: Iterable, exact: bool | None = None, tol: float = DEFAULT_TOL):
        raw = list(weights)
        if len(raw) == 0:
            raise ValidationError("space must have at least one atom")
        if exact is None:
            exact = len(raw) <= EXACT_ATOM_LIMIT
        self.exact = bool(exact)
        self.tol = 0 if self.exact else float(tol)
        if self.exact:
            p = np.array([to_fraction(w) for w in raw], dtype=object)
        else:
            p = np.array([to_float(w) for w in raw], dtype=float)
        if any(w <= 0 for w in p):
            raise ValidationError("invariant 'every atom weight is strictly positive' violated")
        total = p.sum()
        if self.exact:
            if total != 1:
                raise ValidationError(f"invariant 'weights sum to one' violated (sum = {total})")
        elif abs(total - 1.0) > 1e-12:
            raise ValidationError(f"invariant 'weights sum to one' violated (sum = {total!r})")
        p.setflags(write=False)
        self.weights = p

    @classmethod
    def uniform(cls, n: int, exact: bool | None = None, tol: float = DEFAULT_TOL) -> "ProbSpace":
        if exact is None:
            exact = n <= EXACT_ATOM_LIMIT
        w = [Fraction(1, n)] * n if exact else [1.0 / n] * n
        if not exact:
            # make the float weights sum to one as closely as possible
            w[-1] = 1.0 - sum(w[:-1])
        return cls(w, exact=exact, tol=tol)

    @property
    def n_atoms(self) -> int:
        return len(self.weights)

    def __repr__(self) -> str:
        mode = "exact" if self.exact else "float"
        return f"ProbSpace(n_atoms={self.n_atoms}, mode={mode})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbSpace):
            return NotImplemented
        return (self.exact == other.exact and self.n_atoms == other.n_atoms
                and all(a == b for a, b in zip(self.weights, other.weights)))

    def __hash__(self) -> int:
        return hash((self.exact, tuple(self.weights)))

    # -- conversion --------------------------------------------------------
    def scalar(self, x):
        return to_fraction(x) if self.exact else to_float(x)

    @property
    def zero(self):
        return Fraction(0) if self.exact else 0.0

    @property
    def one(self):
        return Fraction(1) if self.exact else 1.0

    def array(self, values, shape: tuple | None = None) -> np.ndarray:
        """Convert nested values to an array in this space's arithmetic."""
        if isinstance(values, np.ndarray) and values.dtype == (object if self.exact else float):
            arr = values.copy()
        else:
            arr = np.asarray(values, dtype=object)
            conv = to_fraction if self.exact else to_float
            flat = [conv(v) for v in arr.ravel()]
            arr = np.array(flat, dtype=object if self.exact else float).reshape(arr.shape)
        if shape is not None and arr.shape != shape:
            raise DimensionError(f"expected shape {shape}, got {arr.shape}")
        return arr

    def var(self, values) -> RandVar:
        """A random variable on this space."""
        if np.isscalar(values) or isinstance(values, Fraction):
            return self.constant(values)
        return self.array(values, shape=(self.n_atoms,))

    def constant(self, c) -> RandVar:
        c = self.scalar(c)
        return np.array([c] * self.n_atoms, dtype=object if self.exact else float)

    def density(self, values) -> Density:
        """A validated density ``dQ/dP``: nonnegative with ``E_P[phi] = 1``."""
        phi = self.var(values)
        if any(v < -self.tol for v in phi):
            raise ValidationError("invariant 'density is nonnegative' violated")
        if not self.eq(self.mean(phi), 1):
            raise ValidationError(
                f"invariant 'density has unit mean' violated (E_P[phi] = {self.mean(phi)})")
        return phi

    def ones(self) -> Density:
        return self.constant(1)

    # -- comparisons -------------------------------------------------------
    def eq(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tol

    def le(self, a, b) -> bool:
        return a <= b if self.exact else a <= b + self.tol

    def all_le(self, a, b) -> bool:
        return bool(np.all(a <= b)) if self.exact else bool(np.all(a <= b + self.tol))

    def all_eq(self, a, b) -> bool:
        if self.exact:
            return bool(np.all(a == b))
        return bool(np.all(np.abs(np.asarray(a) - np.asarray(b)) <= self.tol))

    # -- integration -------------------------------------------------------
    def mean(self, xi: np.ndarray):
        """``E_P[xi]`` for a 1-d array, or row-wise for a 2-d array."""
        if xi.shape[-1] != self.n_atoms:
            raise DimensionError(f"expected {self.n_atoms} atoms, got {xi.shape[-1]}")
        return xi @ self.weights if xi.ndim > 1 else (self.weights * xi).sum()

    def expectation(self, xi: np.ndarray, density: np.ndarray | None = None):
        if density is None:
            return self.mean(xi)
        return self.mean(density * xi)


def _check_same_shape(*arrays: np.ndarray) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise DimensionError(f"shape mismatch: {sorted(shapes)}")


def expectation(space: ProbSpace, density: Density, xi: RandVar):
    """``sum_w p_w phi_w xi_w``."""
    density = space.var(density)
    xi = space.var(xi)
    return space.mean(density * xi)


def comonotone_check(xi: RandVar, eta: RandVar) -> bool:
    """True when no pair of atoms orders ``xi`` and ``eta`` in opposite ways.

    Sorting lexicographically by ``(xi, eta)`` reduces the pairwise test to a
    single monotonicity check of ``eta`` along that order.
    """
    xi = np.asarray(xi)
    eta = np.asarray(eta)
    _check_same_shape(xi, eta)
    order = sorted(range(len(xi)), key=lambda k: (xi[k], eta[k]))
    e = [eta[k] for k in order]
    return all(e[k] <= e[k + 1] for k in range(len(e) - 1))


def pos_neg_split(xi: RandVar) -> tuple[RandVar, RandVar]:
    """Return ``(xi^+, xi^-)`` with ``xi = xi^+ - xi^-``."""
    xi = np.asarray(xi)
    zero = Fraction(0) if is_exact_array(xi) else 0.0
    pos = np.array([v if v > 0 else zero for v in xi], dtype=xi.dtype)
    neg = np.array([-v if v < 0 else zero for v in xi], dtype=xi.dtype)
    return pos, neg


def positive_part(xi: np.ndarray) -> np.ndarray:
    zero = Fraction(0) if is_exact_array(xi) else 0.0
    if is_exact_array(xi):
        out = np.empty(xi.shape, dtype=object)
        flat = xi.ravel()
        out.ravel()[:] = [v if v > 0 else zero for v in flat]
        return out
    return np.maximum(xi, 0.0)


def safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise ``num/den`` with the convention ``x/0 = 0``."""
    if is_exact_array(num) or is_exact_array(den):
        num_b, den_b = np.broadcast_arrays(num, den)
        out = np.empty(num_b.shape, dtype=object)
        out.ravel()[:] = [Fraction(a) / b if b != 0 else Fraction(0)
                          for a, b in zip(num_b.ravel(), den_b.ravel())]
        return out
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, num / np.where(den != 0, den, 1.0), 0.0)


def distinct_sorted(values: Sequence) -> list:
    return sorted(set(values))
