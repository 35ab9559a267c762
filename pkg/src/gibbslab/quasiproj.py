"""Quasi-projection operators from a primal/dual pair of compactly supported
functions.

The level-n, shift-t operator applied to a signal f is

    [Q_{n,t} f](x) = sum_k <f, 2^n phi_tilde(2^n . - k + t)> phi(2^n x - k + t)

with <f, g> = integral f(y) conj(g(y))^T dy.  All k-sums here are finite and
truncated exactly by support arithmetic; no tail is ever dropped.

Signals are either function handles (see funcmodel), plain callables, or the
two analytic built-ins that make coefficients exact:

  * ``Sgn(x0)``     -- the sign function centered at x0; coefficients come
                       from half-line integrals of phi_tilde,
                       <sgn(.-x0), 2^n phi_tilde(2^n . - k + t)>
                         = conj(2 T(2^n x0 + t - k) - mass)^T
                       with T(s) the right tail integral of phi_tilde;
  * ``Monomial(j)`` -- x^j; coefficients come from the binomial expansion in
                       cached moments of phi_tilde, exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, PreconditionError
from .funcmodel import (
    FunctionHandle,
    PiecewisePoly,
    SampledFunction,
    function_from_json_dict,
    function_to_json_dict,
    inner_product,
    piecewise_quadrature,
    simpson_sum,
)

__all__ = [
    "Sgn",
    "Monomial",
    "GridSpec",
    "QuasiProjectionPair",
    "apply",
    "check_qp1",
    "kernel_K",
    "kernel_criterion",
    "poly_reproduction",
    "accuracy_order",
    "approximation_rate",
]

MOMENT_CACHE_ORDER = 6


@dataclass(frozen=True)
class Sgn:
    """Built-in signal sgn(x - x0)."""

    x0: float = 0.0


@dataclass(frozen=True)
class Monomial:
    """Built-in signal x^degree."""

    degree: int = 0


@dataclass(frozen=True)
class GridSpec:
    """Dyadic evaluation grid: points i 2^-level covering [lo, hi].

    ``lo``/``hi`` default to the pair's support-interaction window.
    """

    level: int = 12
    lo: float | None = None
    hi: float | None = None

    def resolve(self, lo_default: float, hi_default: float) -> tuple[int, np.ndarray]:
        if not 1 <= self.level <= 16:
            raise PreconditionError(f"grid level must satisfy 1 <= level <= 16, got {self.level}")
        lo = lo_default if self.lo is None else float(self.lo)
        hi = hi_default if self.hi is None else float(self.hi)
        if lo >= hi:
            raise PreconditionError(f"empty grid window [{lo}, {hi}]")
        h = 2.0**-self.level
        i0 = int(math.floor(lo / h))
        i1 = int(math.ceil(hi / h))
        return i0, np.arange(i0, i1 + 1) * h


class QuasiProjectionPair:
    """Immutable primal/dual pair with cached moments and support bookkeeping.

    ``support_bound`` is the smallest integer N with both supports inside
    [-N, N]; the operator applied to a jump signal differs from the signal
    only inside [x0 - (2N+1) 2^-n, x0 + (2N+1) 2^-n].
    """

    def __init__(self, phi: FunctionHandle, phi_tilde: FunctionHandle):
        if phi.ncomponents != phi_tilde.ncomponents:
            raise DimensionMismatchError(
                f"component mismatch: phi has {phi.ncomponents}, phi_tilde has {phi_tilde.ncomponents}"
            )
        self.phi = phi
        self.phi_tilde = phi_tilde
        radius = max(abs(v) for f in (phi, phi_tilde) for v in f.support)
        self.support_bound = max(1, int(math.ceil(radius - 1e-12)))
        self._moments = {}

    @property
    def ncomponents(self) -> int:
        return self.phi.ncomponents

    def moment(self, side: str, j: int) -> np.ndarray:
        """Cached j-th moment of phi (side='phi') or phi_tilde (side='tilde')."""
        key = (side, j)
        if key not in self._moments:
            f = self.phi if side == "phi" else self.phi_tilde
            self._moments[key] = np.asarray(f.moment(j), dtype=np.float64)
        return self._moments[key]

    def fhat0(self, side: str, j: int) -> np.ndarray:
        """fhat^(j)(0) of the chosen side, from the cached moments."""
        return (-1j) ** j * self.moment(side, j).astype(np.complex128)

    def swapped(self) -> "QuasiProjectionPair":
        """The dual-role pair: primal and dual functions exchanged."""
        return QuasiProjectionPair(self.phi_tilde, self.phi)

    def shifted(self, c: float) -> "QuasiProjectionPair":
        """Pair (phi(.+c), phi_tilde(.+c)); only for piecewise-poly members."""
        if not (isinstance(self.phi, PiecewisePoly) and isinstance(self.phi_tilde, PiecewisePoly)):
            raise PreconditionError("shifted pairs need piecewise-polynomial members")
        return QuasiProjectionPair(self.phi.shift(-c), self.phi_tilde.shift(-c))

    def to_json_dict(self) -> dict:
        return {
            "phi": function_to_json_dict(self.phi),
            "phi_tilde": function_to_json_dict(self.phi_tilde),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "QuasiProjectionPair":
        return cls(
            function_from_json_dict(d["phi"]),
            function_from_json_dict(d["phi_tilde"]),
        )


def _tilde_grid_level(f, fallback: int) -> int:
    return f.level if hasattr(f, "level") else fallback


def _signal_values(f, xs: np.ndarray) -> np.ndarray:
    """Scalar signal values on xs, shape (n,)."""
    if isinstance(f, (PiecewisePoly, SampledFunction)) or hasattr(f, "evaluate"):
        vals = f.evaluate(xs)
        vals = np.asarray(vals)
        if vals.ndim == 2:
            if vals.shape[1] != 1:
                raise DimensionMismatchError("signals must be scalar (one component)")
            vals = vals[:, 0]
        return vals
    return np.asarray(f(xs), dtype=np.float64)


def _coefficients(pair: QuasiProjectionPair, f, n: int, t: float, ks: np.ndarray) -> np.ndarray:
    """Rows <f, 2^n phi_tilde(2^n . - k + t)> for each k; shape (len(ks), r)."""
    pt = pair.phi_tilde
    r = pair.ncomponents
    if isinstance(f, Sgn):
        s = (2.0**n) * f.x0 + t - ks
        mass = pair.moment("tilde", 0)
        tails_right = mass[None, :] - pt.cumulative(s)
        return np.conj(2.0 * tails_right - mass[None, :]).astype(np.complex128)
    if isinstance(f, Monomial):
        j = f.degree
        if j < 0:
            raise PreconditionError("monomial degree must be nonnegative")
        out = np.zeros((ks.size, r), dtype=np.complex128)
        base = ks.astype(np.float64) - t
        for i in range(j + 1):
            mi = np.conj(pair.moment("tilde", i).astype(np.complex128))
            out += math.comb(j, i) * (base ** (j - i))[:, None] * mi[None, :]
        return out * 2.0 ** (-n * j)
    if isinstance(f, PiecewisePoly) and isinstance(pt, PiecewisePoly):
        if f.ncomponents != 1:
            raise DimensionMismatchError("signals must be scalar (one component)")
        out = np.zeros((ks.size, r), dtype=np.complex128)
        for i, k in enumerate(ks):
            g = pt.compose_affine(2.0**n, t - k)
            out[i] = (2.0**n) * inner_product(f, g)[0]
        return out
    # generic route: quadrature over the dual support in the substituted variable
    level = _tilde_grid_level(pt, 12)
    if isinstance(pt, PiecewisePoly):
        # piece-aligned panels: no panel straddles a breakpoint of the dual,
        # so smooth signals keep the full Simpson order
        us, wvals = piecewise_quadrature(pt, level)
        tw = np.conj(wvals)
        out = np.zeros((ks.size, r), dtype=np.complex128)
        for i, k in enumerate(ks):
            out[i] = _signal_values(f, (us + k - t) * 2.0**-n) @ tw
        return out
    lo, hi = pt.support
    h = 2.0**-level
    us = np.arange(int(math.floor(lo / h)), int(math.ceil(hi / h)) + 1) * h
    tvals = np.conj(pt.evaluate(us))
    out = np.zeros((ks.size, r), dtype=np.complex128)
    for i, k in enumerate(ks):
        fv = _signal_values(f, (us + k - t) * 2.0**-n)
        out[i] = simpson_sum(fv[:, None] * tvals, h, axis=0)
    return out


def apply(
    pair: QuasiProjectionPair,
    f,
    n: int = 0,
    t: float = 0.0,
    grid: GridSpec | None = None,
) -> SampledFunction:
    """Samples of [Q_{n,t} f] on the grid; the k-sum is support-exact.

    For ``Sgn`` inputs the grid window must contain the full interaction zone
    [x0 - (2N+1) 2^-n, x0 + (2N+1) 2^-n]; outside it the output provably
    equals the sign itself, and overshoot scans rely on seeing all of it.
    """
    if n < 0 or n != int(n):
        raise PreconditionError(f"level n must be a nonnegative integer, got {n}")
    n = int(n)
    grid = grid or GridSpec()
    N = pair.support_bound
    if isinstance(f, Sgn):
        margin = (2 * N + 3) * 2.0**-n
        lo_default, hi_default = f.x0 - margin, f.x0 + margin
    else:
        lo_default, hi_default = -(2 * N + 3), 2 * N + 3
    i0, xs = grid.resolve(lo_default, hi_default)
    if isinstance(f, Sgn):
        zone = (2 * N + 1) * 2.0**-n
        if xs[0] > f.x0 - zone + 1e-12 or xs[-1] < f.x0 + zone - 1e-12:
            raise PreconditionError(
                f"grid window [{xs[0]:g}, {xs[-1]:g}] is smaller than the sign "
                f"interaction zone [{f.x0 - zone:g}, {f.x0 + zone:g}]"
            )

    plo, phi_hi = pair.phi.support
    z = (2.0**n) * xs + t
    klo = int(math.floor(z[0] - phi_hi))
    khi = int(math.ceil(z[-1] - plo))
    ks = np.arange(klo, khi + 1)
    coeff = _coefficients(pair, f, n, t, ks)

    vals = np.zeros(xs.size, dtype=np.complex128)
    for i, k in enumerate(ks):
        # z is increasing, so the translate's support picks out one slice
        sl = slice(np.searchsorted(z, k + plo), np.searchsorted(z, k + phi_hi, side="right"))
        if sl.start >= sl.stop:
            continue
        pv = pair.phi.evaluate(z[sl] - k)
        vals[sl] += pv @ coeff[i]
    if np.max(np.abs(vals.imag)) > 1e-9 * max(1.0, np.max(np.abs(vals.real))):
        raise PreconditionError("operator output is genuinely complex; real pairs expected")
    return SampledFunction(grid.level, i0, vals.real[:, None])


def check_qp1(pair: QuasiProjectionPair, level: int = 10, tol: float = 1e-9) -> dict:
    """Verify the two conditions equivalent to Q1 = 1.

    The zero-frequency condition conj(phi_tilde_hat(0))^T phi_hat(0) = 1 is
    checked exactly from moments; the remaining frequencies are checked in the
    time domain as constancy of sum_k conj(phi_tilde_hat(0))^T phi(x-k) over
    one period.
    """
    m0 = pair.fhat0("phi", 0)
    mt0 = pair.fhat0("tilde", 0)
    norm_residual = abs(np.conj(mt0) @ m0 - 1.0)

    h = 2.0**-level
    xs = np.arange(0, 2**level) * h
    plo, phi_hi = pair.phi.support
    acc = np.zeros(xs.size, dtype=np.complex128)
    for k in range(int(math.floor(-phi_hi)), int(math.ceil(1 - plo)) + 1):
        acc += pair.phi.evaluate(xs - k) @ np.conj(mt0)
    const_residual = float(np.max(np.abs(acc - 1.0)))
    return {
        "ok": bool(norm_residual <= tol and const_residual <= tol),
        "residuals": {"normalization": float(norm_residual), "constancy": const_residual},
    }


def kernel_K(pair: QuasiProjectionPair, x: float, y: float) -> complex:
    """K(x, y) = sum_k conj(phi_tilde(y-k))^T phi(x-k)."""
    plo, phi_hi = pair.phi.support
    tlo, thi = pair.phi_tilde.support
    klo = max(math.floor(x - phi_hi), math.floor(y - thi))
    khi = min(math.ceil(x - plo), math.ceil(y - tlo))
    acc = 0.0 + 0.0j
    for k in range(int(klo), int(khi) + 1):
        tv = pair.phi_tilde.evaluate(np.array([y - k]))[0]
        pv = pair.phi.evaluate(np.array([x - k]))[0]
        acc += np.conj(tv) @ pv
    return complex(acc)


def kernel_criterion(
    pair: QuasiProjectionPair,
    window: float | None = None,
    level: int = 12,
    tol: float = 1e-9,
) -> dict:
    """Half-line kernel test for absence of overshoot at the origin.

    G(x) = integral_0^inf K(x, y) dy = sum_k conj(T(-k))^T phi(x-k) with T the
    right-tail integral of phi_tilde.  No overshoot at 0 iff G <= 1 for x > 0
    and G >= 0 for x < 0 (the identities are exact beyond the window).
    """
    N = pair.support_bound
    W = float(window) if window is not None else 2.0 * N + 1.0
    h = 2.0**-level
    xs = np.arange(1, int(math.ceil(W / h)) + 1) * h
    xs = np.concatenate([-xs[::-1], xs])
    plo, phi_hi = pair.phi.support
    tlo, thi = pair.phi_tilde.support
    mass = pair.moment("tilde", 0)
    ks = np.arange(int(math.floor(xs[0] - phi_hi)), int(math.ceil(xs[-1] - plo)) + 1)
    tails = mass[None, :] - pair.phi_tilde.cumulative(-ks.astype(np.float64))
    G = np.zeros(xs.size, dtype=np.complex128)
    for i, k in enumerate(ks):
        G += pair.phi.evaluate(xs - k) @ np.conj(tails[i])
    G = G.real
    pos = xs > 0
    viol_pos = float(np.max(G[pos] - 1.0))
    viol_neg = float(np.max(-G[~pos]))
    if viol_pos >= viol_neg:
        idx = int(np.argmax(G[pos] - 1.0))
        worst_x, worst_value = float(xs[pos][idx]), float(G[pos][idx])
    else:
        idx = int(np.argmax(-G[~pos]))
        worst_x, worst_value = float(xs[~pos][idx]), float(G[~pos][idx])
    return {
        "ok": bool(max(viol_pos, viol_neg) <= tol),
        "worst_x": worst_x,
        "worst_value": worst_value,
    }


def poly_reproduction(pair: QuasiProjectionPair, m: int, grid: GridSpec | None = None) -> dict:
    """Sup-norm residuals of Q x^j - x^j on the grid window, for j < m."""
    if m < 1:
        raise PreconditionError("m must be a positive integer")
    grid = grid or GridSpec()
    out = {}
    for j in range(m):
        sf = apply(pair, Monomial(j), 0, 0.0, grid)
        xs = sf.xs()
        out[j] = float(np.max(np.abs(sf.values[:, 0] - xs**j)))
    return out


def accuracy_order(
    pair: QuasiProjectionPair,
    m_max: int = 6,
    tol: float = 1e-8,
    grid: GridSpec | None = None,
) -> int:
    """Largest m <= m_max with every degree-(< m) reproduction residual < tol."""
    residuals = poly_reproduction(pair, m_max, grid)
    order = 0
    for j in range(m_max):
        if residuals[j] < tol:
            order = j + 1
        else:
            break
    return order


def approximation_rate(
    pair: QuasiProjectionPair,
    f,
    n_range=range(2, 8),
    level: int = 12,
    window: tuple[float, float] = (-4.0, 4.0),
) -> float:
    """Empirical L2 decay exponent: fit of -log2 ||Q_n f - f|| against n."""
    lo, hi = window
    grid = GridSpec(level, lo, hi)
    errs = []
    ns = list(n_range)
    for n in ns:
        sf = apply(pair, f, n, 0.0, grid)
        xs = sf.xs()
        diff = sf.values[:, 0] - _signal_values(f, xs)
        err2 = simpson_sum(np.abs(diff)[:, None] ** 2, 2.0**-level, axis=0)[0]
        errs.append(math.sqrt(max(err2, 1e-300)))
    slope = np.polyfit(ns, np.log2(errs), 1)[0]
    return float(-slope)
