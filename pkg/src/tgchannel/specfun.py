"""Complex Kummer/Whittaker special functions and the phase of M_+.

Everything here works on the principal branch Arg in (-pi, pi]. Points on
the negative real axis sit on the cut and must carry an explicit Branch
telling from which half-plane the value is the limit of. All evaluators
accept numpy arrays of arguments; the scalar wrappers return ComplexEval
(value + derivative) pairs.
"""

from __future__ import annotations

import cmath
import enum
import math
import threading
from bisect import bisect_left, insort
from dataclasses import dataclass

import numpy as np

from .errors import BranchError, ConvergenceError, DomainError, RegimeError

Z_MAX = 60.0
_SERIES_RTOL = 1e-16
_SERIES_STREAK = 8
_SERIES_MAX_TERMS = 600
_EULER = 0.5772156649015328606

_TWO_LN2_MINUS_EULER = 2.0 * math.log(2.0) - _EULER


class Branch(enum.Enum):
    PLUS = +1
    MINUS = -1


class Regime(enum.Enum):
    SUB_QUARTER = "SubQuarter"      # beta^2 < 1/4, mu > 0, nu = 0
    QUARTER = "Quarter"             # beta^2 = 1/4, mu = nu = 0
    SUPER_QUARTER = "SuperQuarter"  # beta^2 > 1/4, mu = 0, nu > 0


@dataclass(frozen=True)
class PhysicalParams:
    """Mode number m, buoyancy beta, and the derived branch exponents.

    mu = Re sqrt(1/4 - beta^2) and nu = Im sqrt(1/4 - beta^2); exactly one
    of them is nonzero except at beta^2 = 1/4 where both vanish.
    """

    m: int
    beta: float
    mu: float
    nu: float
    regime: Regime

    def __post_init__(self):
        if self.m < 1 or int(self.m) != self.m:
            raise DomainError(f"mode number m must be a positive integer, got {self.m}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.mu != 0.0 and self.nu != 0.0:
            raise DomainError("mu and nu cannot both be nonzero")
        resid = self.mu**2 - self.nu**2 - (0.25 - self.beta**2)
        if abs(resid) > 1e-12:
            raise DomainError(f"mu^2 - nu^2 != 1/4 - beta^2 (residual {resid:.3e})")

    @classmethod
    def from_mode(cls, m: int, beta: float) -> "PhysicalParams":
        disc = 0.25 - beta * beta
        if abs(disc) < 1e-12:
            return cls(m=m, beta=beta, mu=0.0, nu=0.0, regime=Regime.QUARTER)
        if disc > 0:
            return cls(m=m, beta=beta, mu=math.sqrt(disc), nu=0.0,
                       regime=Regime.SUB_QUARTER)
        return cls(m=m, beta=beta, mu=0.0, nu=math.sqrt(-disc),
                   regime=Regime.SUPER_QUARTER)

    @property
    def gamma(self) -> complex:
        return complex(self.mu, self.nu)


@dataclass(frozen=True)
class BranchedArg:
    """A complex argument plus the half-plane it limits from on the cut."""

    zeta: complex
    branch: Branch | None = None


@dataclass(frozen=True)
class ComplexEval:
    value: complex
    derivative: complex


@dataclass(frozen=True)
class ScaledPair:
    """Regime pair (M_+, M_-), or (M_0, W_0) at beta^2 = 1/4."""

    first: ComplexEval
    second: ComplexEval


def _as_branched(arg) -> BranchedArg:
    if isinstance(arg, BranchedArg):
        return arg
    return BranchedArg(complex(arg), None)


def _check_kummer_b(b: complex):
    if b.imag == 0 and b.real <= 0 and b.real == int(b.real):
        raise DomainError(f"Kummer b parameter is a nonpositive integer: {b}")


def _kahan_add(total, comp, term):
    y = term - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def _kummer_series_raw(a: complex, b: complex, z: np.ndarray) -> np.ndarray:
    """Raw power series sum_s (a)_s/((b)_s s!) z^s with compensated summation.

    Callers must ensure Re z >= 0 (no alternating-sign cancellation).
    """
    z = np.asarray(z, dtype=complex)
    total = np.ones_like(z)
    comp = np.zeros_like(z)
    term = np.ones_like(z)
    streak = np.zeros(z.shape, dtype=int)
    for s in range(_SERIES_MAX_TERMS):
        term = term * ((a + s) / ((b + s) * (s + 1))) * z
        total, comp = _kahan_add(total, comp, term)
        small = np.abs(term) <= _SERIES_RTOL * np.abs(total)
        streak = np.where(small, streak + 1, 0)
        if np.all(streak >= _SERIES_STREAK):
            return total
    raise ConvergenceError(
        f"Kummer series did not converge within {_SERIES_MAX_TERMS} terms "
        f"(max |z| = {np.max(np.abs(z)):.3g})")


def _kummer_series(a: complex, b: complex, z: np.ndarray) -> np.ndarray:
    """Kummer M(a, b, z) for array z, |z| <= Z_MAX.

    Arguments with Re z < 0 go through the transformation
    M(a,b,z) = e^z M(b-a, b, -z) to avoid alternating-series cancellation.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    neg = z.real < 0
    if np.any(~neg):
        out[~neg] = _kummer_series_raw(a, b, z[~neg])
    if np.any(neg):
        zn = z[neg]
        out[neg] = np.exp(zn) * _kummer_series_raw(b - a, b, -zn)
    return out


def kummer_m(a: complex, b: complex, z: complex) -> complex:
    """Confluent hypergeometric M(a, b, z) by convergent power series."""
    _check_kummer_b(complex(b))
    if abs(z) > Z_MAX:
        raise OverflowError(f"|z| = {abs(z):.3g} exceeds Z_MAX = {Z_MAX}")
    return complex(_kummer_series(complex(a), complex(b), np.array([z]))[0])


def _log_array(z: np.ndarray, branch: Branch | None) -> np.ndarray:
    """Principal log, with the cut (negative real axis) resolved by `branch`."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("log of zero argument")
    on_cut = (z.imag == 0) & (z.real < 0)
    L = np.log(np.abs(z)) + 1j * np.arctan2(z.imag, z.real)
    if np.any(on_cut):
        if branch is None:
            raise BranchError(
                "argument on the negative real axis requires an explicit branch")
        L[on_cut] = np.log(np.abs(z[on_cut])) + 1j * branch.value * math.pi
    return L


def _whittaker_m_array(gamma: complex, z: np.ndarray,
                       branch: Branch | None = None):
    """M_{0,gamma}(z) and d/dz on arrays; returns (value, derivative)."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > Z_MAX):
        raise OverflowError(
            f"|zeta| up to {np.max(np.abs(z)):.3g} exceeds Z_MAX = {Z_MAX}")
    L = _log_array(z, branch)
    a = 0.5 + gamma
    b = 1.0 + 2.0 * gamma
    _check_kummer_b(b)
    s1 = _kummer_series(a, b, z)
    s2 = _kummer_series(a + 1, b + 1, z)
    pref = np.exp(-0.5 * z + a * L)
    val = pref * s1
    dval = -0.5 * val + a * val / z + 0.5 * pref * s2
    return val, dval


def _w0_series_raw(z: np.ndarray, L: np.ndarray):
    """Direct W_{0,0} series; callers ensure Re z >= 0."""
    c = np.ones_like(z)          # (1/2)_s / (s!)^2 * z^s
    d = _TWO_LN2_MINUS_EULER     # 2 psi(1+s) - psi(1/2+s), closed harmonic form
    A = c * d                    # sum c_s d_s
    B = c.copy()                 # sum c_s  (= M(1/2, 1, z))
    C = c * (0.5 * d)            # sum c_s (s+1/2) d_s
    Dm = c * 0.5                 # sum c_s (s+1/2)
    compA = np.zeros_like(z)
    compB = np.zeros_like(z)
    compC = np.zeros_like(z)
    compD = np.zeros_like(z)
    streak = np.zeros(z.shape, dtype=int)
    scale = np.abs(L) + 2.0
    for s in range(_SERIES_MAX_TERMS):
        c = c * ((0.5 + s) / ((s + 1.0) ** 2)) * z
        d = d + 2.0 / (s + 1.0) - 2.0 / (2.0 * s + 1.0)
        A, compA = _kahan_add(A, compA, c * d)
        B, compB = _kahan_add(B, compB, c)
        C, compC = _kahan_add(C, compC, c * ((s + 1.5) * d))
        Dm, compD = _kahan_add(Dm, compD, c * (s + 1.5))
        tol = _SERIES_RTOL * (np.abs(A) + np.abs(B) + 1.0)
        small = np.abs(c) * (abs(d) + 1.0) * scale <= tol * (s + 2.0)
        streak = np.where(small, streak + 1, 0)
        if np.all(streak >= _SERIES_STREAK):
            break
    else:
        raise ConvergenceError("W_{0,0} series did not converge")
    inv_sqrt_pi = 1.0 / math.sqrt(math.pi)
    epref = np.exp(-0.5 * z) * inv_sqrt_pi
    val = epref * np.exp(0.5 * L) * (A - L * B)
    dval = -0.5 * val + epref * np.exp(-0.5 * L) * (C - L * Dm - B)
    return val, dval


def _whittaker_w0_array(z: np.ndarray, branch: Branch | None = None):
    """W_{0,0}(z) and d/dz on arrays; returns (value, derivative).

    Left half-plane arguments are reflected through the continuation
    identity W(z e^{+-i pi}) = sqrt(pi) M_{0,0}(z) +- i W(z), keeping the
    series on Re z >= 0 where it does not cancel.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > Z_MAX):
        raise OverflowError(
            f"|zeta| up to {np.max(np.abs(z)):.3g} exceeds Z_MAX = {Z_MAX}")
    if np.any(z == 0):
        raise DomainError("W_{0,0} evaluated at zero")
    val = np.empty_like(z)
    dval = np.empty_like(z)
    neg = z.real < 0
    if np.any(~neg):
        zp = z[~neg]
        val[~neg], dval[~neg] = _w0_series_raw(zp, _log_array(zp, branch))
    if np.any(neg):
        zn = z[neg]
        on_cut = zn.imag == 0
        if np.any(on_cut) and branch is None:
            raise BranchError(
                "argument on the negative real axis requires an explicit branch")
        sign = np.where(zn.imag > 0, 1.0,
                        np.where(zn.imag < 0, -1.0,
                                 float(branch.value) if branch is not None else 1.0))
        zr = -zn  # Re > 0, off the cut
        wv, wd = _w0_series_raw(zr, _log_array(zr, None))
        mv, md = _whittaker_m_array(0.0, zr, None)
        sq = math.sqrt(math.pi)
        val[neg] = sq * mv + 1j * sign * wv
        dval[neg] = -(sq * md + 1j * sign * wd)
    return val, dval


def _finite_eval(val: complex, dval: complex) -> ComplexEval:
    if not (np.isfinite(val) and np.isfinite(dval)):
        raise OverflowError("non-finite special function value")
    return ComplexEval(complex(val), complex(dval))


def whittaker_m(gamma: complex, arg) -> ComplexEval:
    """Whittaker M_{0,gamma}(zeta) with its zeta-derivative."""
    a = _as_branched(arg)
    v, d = _whittaker_m_array(complex(gamma), np.array([a.zeta]), a.branch)
    return _finite_eval(v[0], d[0])


def whittaker_w0(arg) -> ComplexEval:
    """Whittaker W_{0,0}(zeta) with its zeta-derivative."""
    a = _as_branched(arg)
    v, d = _whittaker_w0_array(np.array([a.zeta]), a.branch)
    return _finite_eval(v[0], d[0])


def scaled_pair_arrays(params: PhysicalParams, z: np.ndarray,
                       branch: Branch | None = None):
    """Regime pair evaluated at 2m*zeta on arrays.

    Returns (first, dfirst, second, dsecond); derivatives are with respect
    to zeta (the 2m chain-rule factor is applied).
    """
    z = np.asarray(z, dtype=complex)
    w = 2.0 * params.m * z
    if np.any(np.abs(w) > Z_MAX):
        raise OverflowError(
            f"2m|zeta| up to {np.max(np.abs(w)):.3g} exceeds Z_MAX = {Z_MAX}")
    tm = 2.0 * params.m
    if params.regime is Regime.QUARTER:
        v1, d1 = _whittaker_m_array(0.0, w, branch)
        v2, d2 = _whittaker_w0_array(w, branch)
    else:
        g = params.gamma
        v1, d1 = _whittaker_m_array(g, w, branch)
        v2, d2 = _whittaker_m_array(-g, w, branch)
    return v1, tm * d1, v2, tm * d2


def scaled_pair(params: PhysicalParams, arg) -> ScaledPair:
    """(M_+, M_-) for beta^2 != 1/4, (M_0, W_0) for beta^2 = 1/4."""
    a = _as_branched(arg)
    v1, d1, v2, d2 = scaled_pair_arrays(params, np.array([a.zeta]), a.branch)
    return ScaledPair(_finite_eval(v1[0], d1[0]), _finite_eval(v2[0], d2[0]))


def gamma_abs_sq(nu: float) -> float:
    """|Gamma(1 + i nu)|^2 = pi nu / sinh(pi nu), with the nu = 0 limit 1."""
    if nu < 0:
        raise DomainError("nu must be nonnegative")
    x = math.pi * nu
    if x == 0.0:
        return 1.0
    if x > 30.0:
        return 2.0 * x * math.exp(-x) / (1.0 - math.exp(-2.0 * x))
    return x / math.sinh(x)


class _PhaseTable:
    """Unwrapped phase of M_+(x) = M_{0, i nu}(2mx) for one parameter set.

    Anchored near zero by Theta(x) = nu log(2mx) + Arg(E(2mx)) with
    M_+(x) = (2mx)^{1/2 + i nu} E(2mx); extended along the axis by
    accumulating principal angles of successive ratios, halving the step
    until each increment is below 0.1 rad (so no increment can wrap).
    """

    MAX_STEP_RAD = 0.1

    def __init__(self, params: PhysicalParams):
        self.params = params
        self.x0 = 1e-6 / (2.0 * params.m)
        self._lock = threading.Lock()
        self._xs: list[float] = [self.x0]
        self._thetas: list[float] = [self._anchor_value(self.x0)]

    def _mplus(self, x: float) -> tuple[complex, float]:
        """M_+(x) and the local phase speed Im(M_+'(x)/M_+(x))."""
        v, d = _whittaker_m_array(self.params.gamma, np.array([2.0 * self.params.m * x]))
        val = complex(v[0])
        rate = (2.0 * self.params.m * complex(d[0]) / val).imag
        return val, rate

    def _anchor_value(self, x: float) -> float:
        w = 2.0 * self.params.m * x
        e_factor = cmath.exp(-0.5 * w) * complex(
            _kummer_series(0.5 + self.params.gamma, 1.0 + 2.0 * self.params.gamma,
                           np.array([complex(w)]))[0])
        return self.params.nu * math.log(w) + cmath.phase(e_factor)

    def _walk(self, x_from: float, theta_from: float, x_to: float) -> float:
        """Accumulate exact principal-angle increments along [x_from, x_to].

        Step size is controlled by the alias-free estimate |Im(M'/M)| * h,
        halved until the predicted increment is below 0.1 rad; the actual
        increment is then the principal angle of the ratio, which cannot
        wrap once the true increment is that small.
        """
        theta = theta_from
        xc = x_from
        mc, rate_c = self._mplus(xc)
        while xc != x_to:
            h = x_to - xc
            while True:
                xn = xc + h
                mn, rate_n = self._mplus(xn)
                est = abs(h) * max(abs(rate_c), abs(rate_n))
                if est < self.MAX_STEP_RAD or abs(h) < 1e-14 * max(1.0, abs(xc)):
                    break
                h *= 0.5
            theta += cmath.phase(mn / mc)
            xc, mc, rate_c = xn, mn, rate_n
        return theta

    def theta(self, x: float) -> float:
        if x <= 0:
            raise DomainError("phase defined for x > 0")
        if x <= self.x0:
            return self._anchor_value(x)
        with self._lock:
            i = bisect_left(self._xs, x)
            if i < len(self._xs) and self._xs[i] == x:
                return self._thetas[i]
            # nearest known point in log distance
            cands = []
            if i > 0:
                cands.append(i - 1)
            if i < len(self._xs):
                cands.append(i)
            j = min(cands, key=lambda k: abs(math.log(x / self._xs[k])))
            val = self._walk(self._xs[j], self._thetas[j], x)
            insort(self._xs, x)
            self._thetas.insert(self._xs.index(x), val)
            return val


_PHASE_TABLES: dict[tuple[int, float], _PhaseTable] = {}
_PHASE_LOCK = threading.Lock()


def _phase_table(params: PhysicalParams) -> _PhaseTable:
    key = (params.m, params.beta)
    with _PHASE_LOCK:
        tab = _PHASE_TABLES.get(key)
        if tab is None:
            tab = _PhaseTable(params)
            _PHASE_TABLES[key] = tab
        return tab


def phase_theta(params: PhysicalParams, x: float) -> float:
    """Continuous (unwrapped) phase Theta(x) = Arg M_+(x), beta^2 > 1/4 only."""
    if params.regime is not Regime.SUPER_QUARTER:
        raise RegimeError("phase of M_+ requires beta^2 > 1/4")
    return _phase_table(params).theta(float(x))
