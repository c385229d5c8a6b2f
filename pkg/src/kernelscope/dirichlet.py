"""Dirichlet series three ways: truncation, matrix recursion, zeta quotients.

The recursion route continues the Dirichlet vector G(s) = sum U_n n^{-s}
of a linear representation below its abscissa.  With digits r = 0..k-1,
averaged digit matrix Abar, generalized binomial C, and a split point Q,
the tail H(s) = G(s) - sum_{n<Q} U_n n^{-s} satisfies

    (I - k^{1-s} Abar) H(s) = sum_{Q <= n < kQ} U_n n^{-s}
        + sum_{r>=1} A_r sum_{m>=1} C(s+m-1, m) (-r)^m k^{-(s+m)} H(s+m),

an expansion in r/(kQ): Q grows with |Im s| so the correction series
never develops the e^{~|t|/2} cancellation the Q = 1 form suffers, and
solving for H rather than G keeps the tail's relative precision.  Each
evaluation carries a budget of descent levels; at budget zero the tail is
summed directly (valid for Re s above 1 plus the coefficient growth
degree).  Near-singular systems at the requested point are refused as
candidate poles; hitting one strictly inside the recursion (a removable
coefficient-times-pole limit, e.g. zeta at s = 0 needing the value at the
pole s+1 = 1) is resolved by averaging two evaluations offset by +-i h,
which is O(h^2) accurate for an analytic target.
"""

from __future__ import annotations

import cmath
import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .automaton import LinearRepresentation, average_matrix, pole_lattice
from .errors import CapacityError, DomainError
from .seqgen import FunctionId, ValueTable
from .zeta import zeta_em

BASE_STRIP_SIGMA = 1.25
_DIRECT_TOL = 1e-9
_DIRECT_CAP = 1 << 21
_NEAR_SINGULAR_DET = 1e-8
_OFFSET_H = 1e-4
_M_CAP = 200


@dataclass(frozen=True)
class EvalResult:
    """A Dirichlet-series value with method tag and error bookkeeping.

    ``value`` is None exactly when the evaluation was refused at a
    candidate pole (near_singular set, det_magnitude filled in).
    """

    s: complex
    value: complex | None
    method: str
    error_estimate: float
    near_singular: bool = False
    det_magnitude: float | None = None
    truncated: bool = False
    terms: int | None = None
    offset_averaged: bool = False

    def to_json(self) -> dict:
        return {
            "s": [self.s.real, self.s.imag],
            "value": None if self.value is None else [self.value.real, self.value.imag],
            "method": self.method,
            "error_estimate": self.error_estimate,
            "near_singular": self.near_singular,
            "det_magnitude": self.det_magnitude,
            "truncated": self.truncated,
            "terms": self.terms,
            "offset_averaged": self.offset_averaged,
        }


def direct_sum(t: ValueTable, s: complex, N_terms: int) -> EvalResult:
    """Plain truncation sum_{n <= N_terms} f(n) n^{-s}.

    Requires Re s >= 1.25 + d for the recorded growth degree d of f, so
    the integral tail bound C N^{1+d-sigma}/(sigma-1-d) is meaningful.
    """
    s = complex(s)
    C, d = t.id.growth_bound()
    sigma = s.real
    if sigma < 1.25 + d:
        raise DomainError(
            f"direct summation of {t.id} needs Re s >= {1.25 + d} "
            f"(growth degree {d}), got {sigma}"
        )
    if not 1 <= N_terms <= t.N:
        raise CapacityError(
            f"N_terms={N_terms} outside the table range 1..{t.N} for {t.id}"
        )
    total = 0j
    chunk = 1 << 19
    for lo in range(1, N_terms + 1, chunk):
        hi = min(N_terms, lo + chunk - 1)
        n = np.arange(lo, hi + 1, dtype=np.float64)
        total += complex(
            np.sum(t.values[lo : hi + 1].astype(np.float64) * np.exp(-s * np.log(n)))
        )
    tail = C * N_terms ** (1 + d - sigma) / (sigma - 1 - d)
    rounding = 1e-15 * math.log2(N_terms + 1) * (1 + abs(total))
    return EvalResult(
        s=s,
        value=total,
        method="direct",
        error_estimate=tail + rounding,
        truncated=True,
        terms=N_terms,
    )


class _InnerSingular(Exception):
    def __init__(self, at: complex, det: float):
        self.at = at
        self.det = det
        super().__init__(f"near-singular inner system at {at} (|det|={det:.3e})")


class ContinuationContext:
    """s-independent precomputation shared across evaluations of one rep.

    Holds the forward-filled U_n arrays (keyed by power-of-two length) and
    float copies of the digit matrices; grid scans reuse one context for
    every grid point.
    """

    def __init__(self, rep: LinearRepresentation):
        self.rep = rep
        abar_fr = average_matrix(rep)
        self.abar = np.array([[float(x) for x in row] for row in abar_fr])
        self.mats = [np.asarray(a, dtype=np.float64) for a in rep.matrices]
        self.seed_scale = max(1.0, float(np.abs(rep.seeds).max()))
        self._u_cache: dict[int, np.ndarray] = {}

    def vector_values(self, N: int) -> np.ndarray:
        """U_1..U_N as an (N+1, dim) array, from the recursion alone.

        Chunked so every index n // k lands in an already-filled block.
        """
        if N in self._u_cache:
            return self._u_cache[N]
        rep = self.rep
        k, dim = rep.k, rep.dim
        out = np.zeros((N + 1, dim), dtype=np.float64)
        top = min(k - 1, N)
        out[1 : top + 1] = rep.seeds[:top]
        lo = k
        while lo <= N:
            hi = min(N, lo * k - 1)
            idx = np.arange(lo, hi + 1)
            for r in range(k):
                sel = idx[idx % k == r]
                if len(sel):
                    out[sel] = out[sel // k] @ self.mats[r].T
            lo = hi + 1
        self._u_cache[N] = out
        return out


def split_point(k: int, t_extreme: float) -> int:
    """First summation index Q of the tail the binomial series expands.

    The series in m behaves like the Taylor series of (1-x)^{-s} at
    x = r/(kQ); its terms peak near exp(|Im s| x/(1-x)) before decaying,
    so Q grows with the height to cap the cancellation mass at ~e^4.
    """
    return max(1, math.ceil(abs(t_extreme) * (k - 1) / (4 * k)) + 1)


@dataclass
class _EngineState:
    ctx: ContinuationContext
    m_max: int
    cap: int
    Q: int
    memo: dict = field(default_factory=dict)
    truncated: bool = False
    max_terms: int = 0


def _direct_tail_vector(state: _EngineState, s: complex) -> tuple[np.ndarray, float]:
    """H(s) = sum_{q >= Q} U_q q^{-s} by truncation with an integral tail."""
    sigma = s.real
    C, d = state.ctx.rep.growth
    if sigma < 1 + d + 0.25:
        raise DomainError(
            f"recursion budget exhausted at Re s = {sigma}; the direct strip "
            f"needs Re s >= {1 + d + 0.25} -- increase levels"
        )
    power = sigma - 1 - d
    need = (C / (_DIRECT_TOL * power)) ** (1 / power)
    if not math.isfinite(need) or need >= state.cap:
        N = state.cap
    else:
        # quantized so the U-array cache stays small
        N = 1 << max(6, math.ceil(math.log2(need + 1)))
        N = min(N, state.cap)
    N = max(N, 2 * state.Q)
    tail = C * N ** (-power) / power
    if N >= state.cap and tail > _DIRECT_TOL:
        state.truncated = True
    state.max_terms = max(state.max_terms, N)
    u = state.ctx.vector_values(N)
    total = np.zeros(state.ctx.rep.dim, dtype=np.complex128)
    mass = 0.0
    chunk = 1 << 19
    for lo in range(state.Q, N + 1, chunk):
        hi = min(N, lo + chunk - 1)
        n = np.arange(lo, hi + 1, dtype=np.float64)
        block = np.exp(-s * np.log(n))
        total += block @ u[lo : hi + 1]
        mass += float(np.abs(block) @ np.abs(u[lo : hi + 1]).max(axis=1))
    # rounding scales with the summed mass, not an absolute floor: deep
    # tails are tiny and their errors must stay tiny relative to them
    rounding = 1e-15 * math.log2(N + 1) * mass
    return total, tail + rounding


def _head_vector(
    ctx: ContinuationContext, s: complex, lo: int, hi: int
) -> np.ndarray:
    """sum_{n=lo}^{hi-1} U_n n^{-s} (explicit short head)."""
    dim = ctx.rep.dim
    if hi <= lo:
        return np.zeros(dim, dtype=np.complex128)
    u = ctx.vector_values(max(hi - 1, ctx.rep.k - 1))
    n = np.arange(lo, hi, dtype=np.float64)
    return np.exp(-s * np.log(n)) @ u[lo:hi]


def _m_horizon(state: _EngineState, s: complex) -> int:
    """Cut the correction series where its coefficient envelope dies.

    The m-th term is bounded by |C(s+m-1, m)| ((k-1)/(k Q))^m k^{-sigma}
    times a bounded tail value; the envelope uses the same recurrence as
    the coefficients, so an exactly-zero coefficient factor (s at a
    nonpositive integer) zeroes the envelope too.
    """
    k = state.ctx.rep.k
    ratio = (k - 1) / (k * state.Q)
    scale = state.ctx.seed_scale
    c = 1.0
    prev_tiny = False
    for m in range(1, state.m_max + 1):
        c = c * abs(s + m - 1) / m
        tiny = c * ratio**m * scale < 1e-16
        if m >= 4 and tiny and prev_tiny:
            return m
        prev_tiny = tiny
    state.truncated = True
    return state.m_max


def _g_vector(
    state: _EngineState, s: complex, budget: int, top: bool
) -> tuple[np.ndarray, float]:
    """Tail vector H(s) = G(s) - P_Q(s); the caller adds the head back."""
    key = (round(s.real, 12), round(s.imag, 12), budget)
    if key in state.memo:
        return state.memo[key]
    if budget == 0:
        res = _direct_tail_vector(state, s)
        state.memo[key] = res
        return res
    ctx = state.ctx
    rep, k, Q = ctx.rep, ctx.rep.k, state.Q
    system = np.eye(rep.dim, dtype=np.complex128) - k ** (1 - s) * ctx.abar
    det = abs(np.linalg.det(system))
    if det < _NEAR_SINGULAR_DET:
        if top:
            raise _TopSingular(s, det)
        raise _InnerSingular(s, det)
    m_eff = _m_horizon(state, s)
    gs = np.empty((m_eff, rep.dim), dtype=np.complex128)
    g_errs = np.empty(m_eff)
    for m in range(1, m_eff + 1):
        gs[m - 1], g_errs[m - 1] = _g_vector(state, s + m, budget - 1, top=False)
    ms = np.arange(1, m_eff + 1)
    coefs = np.cumprod((s + ms - 1) / ms)  # C(s+m-1, m)
    kpow = k ** (-(s + ms))
    # the n < Q head cancels out of the system exactly, so the right-hand
    # side and the solution stay on the tail's scale (no lost precision)
    rhs = _head_vector(ctx, s, Q, k * Q)
    # error propagation is relative: a child's absolute error only matters
    # at the scale its term actually contributes to the right-hand side
    g_scale = np.abs(gs).max(axis=1)
    rel_children = g_errs / np.maximum(g_scale, 1e-300)
    err_rhs = 0.0
    for r in range(1, k):
        w = coefs * np.float_power(-r, ms) * kpow
        rhs += ctx.mats[r] @ (w @ gs)
        mass = np.abs(w) * g_scale
        err_rhs += 4.0 * float(mass @ rel_children) + 4e-16 * float(mass.sum())
    sol = np.linalg.solve(system, rhs)
    inv_norm = float(np.linalg.norm(np.linalg.inv(system), np.inf))
    err = inv_norm * (err_rhs + 1e-16 * float(np.abs(rhs).max()))
    res = (sol, err)
    state.memo[key] = res
    return res


class _TopSingular(Exception):
    def __init__(self, at: complex, det: float):
        self.at = at
        self.det = det
        super().__init__(f"candidate pole at {at} (|det|={det:.3e})")


def default_levels(s: complex) -> int:
    """Enough descent that budget-zero nodes land where truncation is easy."""
    return max(2, math.ceil(3.5 - complex(s).real))


def continue_via_recursion(
    rep: LinearRepresentation,
    s: complex,
    levels: int | None = None,
    m_max: int = _M_CAP,
    *,
    offset_h: float = _OFFSET_H,
    ctx: ContinuationContext | None = None,
) -> EvalResult:
    """Analytic continuation of the output coordinate's Dirichlet series.

    ``levels`` bounds the descent depth; the continued region is
    Re s > 1.25 - levels.  At a candidate pole of the series itself the
    value is refused (near_singular, det_magnitude).  A near-singular
    system met strictly inside the recursion is removable and handled by
    +-i h offset averaging.
    """
    s = complex(s)
    if levels is None:
        levels = default_levels(s)
    if levels < 0:
        raise DomainError(f"levels must be >= 0, got {levels}")
    if s.real <= BASE_STRIP_SIGMA - levels:
        raise DomainError(
            f"s={s} outside the continued region Re s > {BASE_STRIP_SIGMA - levels} "
            f"for levels={levels}"
        )
    if m_max < 2:
        raise DomainError(f"m_max must be >= 2, got {m_max}")
    if ctx is None:
        ctx = ContinuationContext(rep)
    top_det = _top_det(ctx, s)
    Q = split_point(rep.k, s.imag)

    def run(at: complex) -> tuple[np.ndarray, float, _EngineState]:
        state = _EngineState(ctx=ctx, m_max=m_max, cap=_DIRECT_CAP, Q=Q)
        vec, err = _g_vector(state, at, levels, top=True)
        return vec + _head_vector(ctx, at, 1, Q), err, state

    try:
        vec, err, state = run(s)
        return EvalResult(
            s=s,
            value=complex(vec[rep.output_coord]),
            method="recursion",
            error_estimate=err,
            det_magnitude=top_det,
            truncated=state.truncated,
            terms=state.max_terms or None,
        )
    except _TopSingular as exc:
        return EvalResult(
            s=s,
            value=None,
            method="recursion",
            error_estimate=math.inf,
            near_singular=True,
            det_magnitude=exc.det,
        )
    except _InnerSingular:
        pass
    # removable inner singularity: average evaluations offset off the axis
    acc = 0j
    worst = 0.0
    truncated = False
    terms = 0
    for off in (1j * offset_h, -1j * offset_h):
        try:
            vec, err, state = run(s + off)
        except (_TopSingular, _InnerSingular) as exc:
            return EvalResult(
                s=s,
                value=None,
                method="recursion",
                error_estimate=math.inf,
                near_singular=True,
                det_magnitude=getattr(exc, "det", None),
            )
        acc += complex(vec[rep.output_coord])
        worst = max(worst, err)
        truncated |= state.truncated
        terms = max(terms, state.max_terms)
    return EvalResult(
        s=s,
        value=acc / 2,
        method="recursion",
        error_estimate=worst + offset_h**2,
        det_magnitude=top_det,
        truncated=truncated,
        terms=terms or None,
        offset_averaged=True,
    )


def _top_det(ctx: ContinuationContext, s: complex) -> float:
    system = (
        np.eye(ctx.rep.dim, dtype=np.complex128) - ctx.rep.k ** (1 - s) * ctx.abar
    )
    return float(abs(np.linalg.det(system)))


# --- closed forms -----------------------------------------------------------

IDENTITY_TAGS = (
    "mu",
    "lambda",
    "q_m",
    "phi",
    "rho",
    "tau_of_square",
    "tau_squared",
    "chi_P",
    "chi_PP",
    "omega",
    "big_omega",
)

_IDENTITY_FORMS = {
    "mu": "1/zeta(s)",
    "lambda": "zeta(2s)/zeta(s)",
    "q_m": "zeta(s)/zeta(ms)",
    "phi": "zeta(s-1)/zeta(s)",
    "rho": "zeta(s)^2/zeta(2s)",
    "tau_of_square": "zeta(s)^3/zeta(2s)",
    "tau_squared": "zeta(s)^4/zeta(2s)",
    "chi_P": "sum_n mu(n)/n log zeta(ns)",
    "chi_PP": "sum_j sum_n mu(n)/n log zeta(jns)",
    "omega": "zeta(s) sum_n mu(n)/n log zeta(ns)",
    "big_omega": "zeta(s) sum_n phi(n)/n log zeta(ns)",
}

_LOG_SERIES_TAGS = {"chi_P", "chi_PP", "omega", "big_omega"}


@dataclass(frozen=True)
class IdentityId:
    """One closed-form identity, with its half-plane of validity."""

    tag: str
    param: int | None = None

    def __post_init__(self):
        if self.tag not in IDENTITY_TAGS:
            raise DomainError(f"unknown identity tag {self.tag!r}")
        if self.tag == "q_m":
            if self.param is None or self.param < 2:
                raise DomainError("q_m requires a parameter m >= 2")
        elif self.param is not None:
            raise DomainError(f"{self.tag} takes no parameter")

    @property
    def sigma_min(self) -> float:
        return 2.0 if self.tag == "phi" else 1.0

    @property
    def form(self) -> str:
        return _IDENTITY_FORMS[self.tag]

    def function_id(self) -> FunctionId:
        return FunctionId(self.tag, self.param)

    def __str__(self):
        return self.tag if self.param is None else f"{self.tag}({self.param})"


def _mu_small(limit: int) -> list[int]:
    mu = [1] * (limit + 1)
    mu[0] = 0
    for p in range(2, limit + 1):
        if all(p % q for q in range(2, int(math.isqrt(p)) + 1)):
            for x in range(p, limit + 1, p):
                mu[x] = -mu[x]
            for x in range(p * p, limit + 1, p * p):
                mu[x] = 0
    return mu


def _phi_small(limit: int) -> list[int]:
    phi = list(range(limit + 1))
    for p in range(2, limit + 1):
        if all(p % q for q in range(2, int(math.isqrt(p)) + 1)):
            for x in range(p, limit + 1, p):
                phi[x] -= phi[x] // p
    return phi


_MU_SMALL = _mu_small(512)
_PHI_SMALL = _phi_small(512)


def _log_zeta(w: complex, tol: float) -> complex:
    # principal branch; callers restrict arguments to Re w >= 2 where
    # zeta(w) stays in the right half-plane around 1
    if abs(w - 1) < 1e-6:
        raise _NearZetaSingular(w, abs(w - 1))
    val = zeta_em(w, tol).value
    if abs(val) < 1e-6:
        raise _NearZetaSingular(w, abs(val))
    return cmath.log(val)


def _prime_zeta(s: complex, tol: float) -> complex:
    """P(s) = sum over square-free n of mu(n)/n log zeta(ns)."""
    acc = 0j
    sigma = s.real
    for n in range(1, 400):
        envelope = 6.0 * 2.0 ** (-n * sigma) / n
        if envelope < 1e-16:
            break
        if _MU_SMALL[n] == 0:
            continue
        acc += _MU_SMALL[n] / n * _log_zeta(n * s, tol)
    return acc


def _totient_log_series(s: complex, tol: float) -> complex:
    """sum_n phi(n)/n log zeta(ns); terms decay like 2^{-n sigma}."""
    acc = 0j
    sigma = s.real
    for n in range(1, 400):
        envelope = 6.0 * 2.0 ** (-n * sigma)
        if envelope < 1e-16:
            break
        acc += _PHI_SMALL[n] / n * _log_zeta(n * s, tol)
    return acc


def _prime_power_zeta(s: complex, tol: float) -> complex:
    """sum_{j>=1} sum_n mu(n)/n log zeta(jns)."""
    acc = 0j
    sigma = s.real
    for j in range(1, 400):
        envelope = 6.0 * 2.0 ** (-j * sigma)
        if envelope < 1e-16:
            break
        acc += _prime_zeta(j * s, tol)
    return acc


def zeta_quotient_eval(
    ident: IdentityId, s: complex, zeta_tol: float = 1e-12
) -> EvalResult:
    """Evaluate the closed form of one identity at s.

    Validity: Re s > 1 (phi: Re s > 2).  The log-zeta series forms are
    additionally restricted to real s > 1 or Re s >= 2, where every
    zeta(ns) stays near 1 in the right half-plane and the principal
    branch is the continuous one.  Arguments within 1e-6 of the zeta pole
    or a zeta zero are refused as near-singular.
    """
    s = complex(s)
    if s.real <= ident.sigma_min:
        raise DomainError(
            f"identity {ident} is valid for Re s > {ident.sigma_min}, got {s}"
        )
    if ident.tag in _LOG_SERIES_TAGS and s.imag != 0 and s.real < 2:
        raise DomainError(
            f"the log-zeta series for {ident} is evaluated only at real s > 1 "
            "or Re s >= 2 (principal-branch region)"
        )

    def z(w: complex) -> complex:
        w = complex(w)
        if abs(w - 1) < 1e-6:
            raise _NearZetaSingular(w, abs(w - 1))
        val = zeta_em(w, zeta_tol).value
        if abs(val) < 1e-6:
            raise _NearZetaSingular(w, abs(val))
        return val

    tag = ident.tag
    try:
        if tag == "mu":
            value = 1 / z(s)
        elif tag == "lambda":
            value = z(2 * s) / z(s)
        elif tag == "q_m":
            value = z(s) / z(ident.param * s)
        elif tag == "phi":
            value = z(s - 1) / z(s)
        elif tag == "rho":
            value = z(s) ** 2 / z(2 * s)
        elif tag == "tau_of_square":
            value = z(s) ** 3 / z(2 * s)
        elif tag == "tau_squared":
            value = z(s) ** 4 / z(2 * s)
        elif tag == "chi_P":
            value = _prime_zeta(s, zeta_tol)
        elif tag == "chi_PP":
            value = _prime_power_zeta(s, zeta_tol)
        elif tag == "omega":
            value = z(s) * _prime_zeta(s, zeta_tol)
        else:  # big_omega
            value = z(s) * _totient_log_series(s, zeta_tol)
    except _NearZetaSingular as exc:
        return EvalResult(
            s=s,
            value=None,
            method="zeta_quotient",
            error_estimate=math.inf,
            near_singular=True,
            det_magnitude=exc.distance,
        )
    est = 1e-10 * (1 + abs(value))
    return EvalResult(
        s=s, value=value, method="zeta_quotient", error_estimate=est
    )


class _NearZetaSingular(Exception):
    def __init__(self, at: complex, distance: float):
        self.at = at
        self.distance = distance
        super().__init__(f"zeta argument {at} within {distance:.2e} of a pole/zero")


@dataclass(frozen=True)
class IdentitySample:
    s: complex
    lhs: complex
    rhs: complex
    residual: float
    bound: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "s": [self.s.real, self.s.imag],
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "residual": self.residual,
            "bound": self.bound,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class IdentityReport:
    ident: IdentityId
    N_terms: int
    samples: tuple[IdentitySample, ...]

    @property
    def all_passed(self) -> bool:
        return all(x.passed for x in self.samples)

    def to_json(self) -> dict:
        return {
            "identity": str(self.ident),
            "form": self.ident.form,
            "N_terms": self.N_terms,
            "all_passed": self.all_passed,
            "samples": [x.to_json() for x in self.samples],
        }


def verify_identity(
    ident: IdentityId,
    t: ValueTable,
    s_samples: list[complex],
    N_terms: int,
    slack: float = 1e-9,
) -> IdentityReport:
    """Truncated sum vs closed form; PASS iff residual <= tail bound + slack."""
    want = ident.function_id()
    if (t.id.tag, t.id.param, t.id.modulus) != (want.tag, want.param, None):
        raise DomainError(
            f"identity {ident} describes {want}, but the table holds {t.id}"
        )
    samples = []
    for s in s_samples:
        lhs = direct_sum(t, s, N_terms)
        rhs = zeta_quotient_eval(ident, s)
        if rhs.value is None:
            raise DomainError(
                f"closed form for {ident} is near-singular at s={s}"
            )
        residual = abs(lhs.value - rhs.value)
        bound = lhs.error_estimate + slack
        samples.append(
            IdentitySample(
                s=complex(s),
                lhs=lhs.value,
                rhs=rhs.value,
                residual=residual,
                bound=bound,
                passed=residual <= bound,
            )
        )
    return IdentityReport(ident=ident, N_terms=N_terms, samples=tuple(samples))


def landau_walfisz_singularities(n_max: int) -> list[Fraction]:
    """{1/n : n <= n_max square-free}, descending.

    These are the real singular points of the prime zeta function coming
    from the pole of zeta: one for every square-free n.  They accumulate
    at 0, and the line Re s = 0 is a natural boundary, which is why no
    continuation of P(s) past it is attempted anywhere in this package.
    """
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    mu = _mu_small(n_max) if n_max > 512 else _MU_SMALL
    return [Fraction(1, n) for n in range(1, n_max + 1) if mu[n] != 0]


# --- grid scanning ----------------------------------------------------------


class _ColumnEngine:
    """Batched continuation along one vertical grid line Re s = x.

    Every node of the scalar recursion becomes an array over the column's
    imaginary parts: systems are solved with numpy's stacked solver and
    the base-strip sums become one matmul against a shared n^{-s} matrix.
    Points whose top system is near-singular are refused; points that hit
    a near-singular system strictly inside the recursion are recomputed
    by the scalar engine (offset averaging).  Agreement with the scalar
    engine is a test invariant, not an assumption.
    """

    def __init__(self, ctx: ContinuationContext, x: float, ys: np.ndarray,
                 levels: int, m_max: int):
        self.ctx = ctx
        self.x = x
        self.ys = ys
        self.s_col = x + 1j * ys
        self.ny = len(ys)
        self.levels = levels
        self.m_max = m_max
        self.Q = split_point(ctx.rep.k, float(np.abs(ys).max(initial=0.0)))
        self.memo: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}
        self.inner_bad = np.zeros(self.ny, dtype=bool)
        self.top_bad = np.zeros(self.ny, dtype=bool)
        self.top_det = np.full(self.ny, math.nan)
        self.truncated = False
        self._e_matrix: np.ndarray | None = None
        self._e_len = 0
        self._logn: np.ndarray | None = None

    def _base_n(self, sigma: float) -> tuple[int, float]:
        C, d = self.ctx.rep.growth
        if sigma < 1 + d + 0.25:
            raise DomainError(
                f"column at Re s = {sigma} is below the direct strip; "
                "increase levels"
            )
        power = sigma - 1 - d
        need = (C / (_DIRECT_TOL * power)) ** (1 / power)
        if not math.isfinite(need) or need >= _DIRECT_CAP:
            N = _DIRECT_CAP
        else:
            N = min(_DIRECT_CAP, 1 << max(6, math.ceil(math.log2(need + 1))))
        tail = C * N ** (-power) / power
        if N >= _DIRECT_CAP and tail > _DIRECT_TOL:
            self.truncated = True
        return N, tail

    def _e(self, N: int) -> np.ndarray:
        # shared n^{-s_j} matrix, grown on demand
        if self._e_matrix is None or N > self._e_len:
            n = np.arange(1, N + 1, dtype=np.float64)
            self._logn = np.log(n)
            self._e_matrix = np.exp(np.outer(-self.s_col, self._logn))
            self._e_len = N
        return self._e_matrix[:, :N]

    def _base(self, offset: int) -> tuple[np.ndarray, np.ndarray]:
        # tail H(s + offset) = sum_{q >= Q} U_q q^{-s-offset}
        N, tail = self._base_n(self.x + offset)
        N = max(N, 2 * self.Q)
        u = self.ctx.vector_values(N)[self.Q :]
        logn = self._logn_for(N)[self.Q - 1 :]
        scaled = u * np.exp(-offset * logn)[:, None]
        vals = self._e(N)[:, self.Q - 1 :] @ scaled
        mass = float(
            np.exp(-(self.x + offset) * logn) @ np.abs(u).max(axis=1)
        )
        rounding = 1e-15 * math.log2(N + 1) * mass
        err = np.full(self.ny, tail + rounding)
        return vals, err

    def _head(self, offset: int, lo: int, hi: int) -> np.ndarray:
        """sum_{n=lo}^{hi-1} U_n n^{-s-offset} for the whole column."""
        dim = self.ctx.rep.dim
        if hi <= lo:
            return np.zeros((self.ny, dim), dtype=np.complex128)
        u = self.ctx.vector_values(max(hi - 1, self.ctx.rep.k - 1))[lo:hi]
        logn = self._logn_for(hi - 1)[lo - 1 :]
        scaled = u * np.exp(-offset * logn)[:, None]
        return self._e(hi - 1)[:, lo - 1 :] @ scaled

    def _logn_for(self, N: int) -> np.ndarray:
        self._e(N)
        return self._logn[:N]

    def _node(self, offset: int, budget: int) -> tuple[np.ndarray, np.ndarray]:
        key = (offset, budget)
        if key in self.memo:
            return self.memo[key]
        if budget == 0:
            res = self._base(offset)
            self.memo[key] = res
            return res
        ctx = self.ctx
        rep, k, dim = ctx.rep, ctx.rep.k, ctx.rep.dim
        s_vec = self.s_col + offset
        fac = k ** (1 - s_vec)
        if dim == 1:
            diag = 1 - fac * ctx.abar[0, 0]
            det = np.abs(diag)
            system = None
        else:
            system = (
                np.eye(dim)[None, :, :] - fac[:, None, None] * ctx.abar[None, :, :]
            )
            det = np.abs(np.linalg.det(system))
        singular = det < _NEAR_SINGULAR_DET
        if offset == 0:
            self.top_det[:] = det
            self.top_bad |= singular
        else:
            self.inner_bad |= singular
        if singular.any():
            if dim == 1:
                diag = np.where(singular, 1.0, diag)
            else:
                system[singular] = np.eye(dim)
        y_extreme = float(np.abs(self.ys).max(initial=0.0))
        m_eff = self._m_horizon(complex(self.x + offset, y_extreme))
        gs = np.empty((m_eff, self.ny, dim), dtype=np.complex128)
        g_errs = np.empty((m_eff, self.ny))
        for m in range(1, m_eff + 1):
            gs[m - 1], g_errs[m - 1] = self._node(offset + m, budget - 1)
        ms = np.arange(1, m_eff + 1)
        coefs = np.cumprod((s_vec[:, None] + ms[None, :] - 1) / ms[None, :], axis=1)
        kpow = k ** (-(s_vec[:, None] + ms[None, :]))
        # the n < Q head cancels out of the system exactly (see _g_vector)
        rhs = self._head(offset, self.Q, k * self.Q)
        g_scale = np.abs(gs).max(axis=2)  # (m_eff, ny)
        rel_children = g_errs / np.maximum(g_scale, 1e-300)
        err_rhs = np.zeros(self.ny)
        for r in range(1, k):
            w = coefs * np.float_power(-r, ms)[None, :] * kpow  # (ny, m_eff)
            contrib = np.einsum("ym,myd->yd", w, gs)
            rhs += contrib @ ctx.mats[r].T
            mass = np.abs(w) * g_scale.T
            err_rhs += 4.0 * np.einsum("ym,my->y", mass, rel_children)
            err_rhs += 4e-16 * mass.sum(axis=1)
        if dim == 1:
            sol = rhs / diag[:, None]
            inv_norm = 1.0 / np.where(singular, 1.0, det)
        else:
            sol = np.linalg.solve(system, rhs[:, :, None])[:, :, 0]
            inv_norm = np.abs(np.linalg.inv(system)).sum(axis=2).max(axis=1)
        err = inv_norm * (err_rhs + 1e-16 * np.abs(rhs).max(initial=0.0))
        res = (sol, err)
        self.memo[key] = res
        return res

    def _m_horizon(self, s: complex) -> int:
        k = self.ctx.rep.k
        ratio = (k - 1) / (k * self.Q)
        scale = self.ctx.seed_scale
        c = 1.0
        prev_tiny = False
        for m in range(1, self.m_max + 1):
            c = c * abs(s + m - 1) / m
            tiny = c * ratio**m * scale < 1e-16
            if m >= 4 and tiny and prev_tiny:
                return m
            prev_tiny = tiny
        self.truncated = True
        return self.m_max

    def run(self) -> list[EvalResult]:
        vec, err = self._node(0, self.levels)
        vec = vec + self._head(0, 1, self.Q)
        out_coord = self.ctx.rep.output_coord
        results: list[EvalResult] = []
        for j, s in enumerate(self.s_col):
            s = complex(s)
            det = float(self.top_det[j])
            det = None if math.isnan(det) else det
            if self.top_bad[j]:
                results.append(
                    EvalResult(
                        s=s, value=None, method="recursion",
                        error_estimate=math.inf, near_singular=True,
                        det_magnitude=det,
                    )
                )
            elif self.inner_bad[j]:
                # removable inner singularity: scalar engine with offsets
                results.append(
                    continue_via_recursion(
                        self.ctx.rep, s, levels=self.levels,
                        m_max=self.m_max, ctx=self.ctx,
                    )
                )
            else:
                results.append(
                    EvalResult(
                        s=s, value=complex(vec[j, out_coord]),
                        method="recursion", error_estimate=float(err[j]),
                        det_magnitude=det,
                        truncated=self.truncated,
                    )
                )
        return results


def continue_column(
    rep: LinearRepresentation,
    x: float,
    ys,
    levels: int | None = None,
    m_max: int = _M_CAP,
    ctx: ContinuationContext | None = None,
) -> list[EvalResult]:
    """Batched continuation at the points x + i y for every y in ys."""
    if levels is None:
        levels = default_levels(complex(x, 0.0))
    if x <= BASE_STRIP_SIGMA - levels:
        raise DomainError(
            f"Re s = {x} outside the continued region for levels={levels}"
        )
    if ctx is None:
        ctx = ContinuationContext(rep)
    ys = np.asarray(list(ys), dtype=np.float64)
    if len(ys) == 0:
        return []
    return _ColumnEngine(ctx, x, ys, levels, m_max).run()


@dataclass(frozen=True)
class ScanPoint:
    s: complex
    abs_value: float  # nan when refused
    det_magnitude: float
    near_singular: bool
    flagged: bool


@dataclass(frozen=True)
class ScanResult:
    a: float
    b: float
    T: float
    step: float
    points: tuple[ScanPoint, ...]
    clusters: tuple[complex, ...]
    predicted: tuple[complex, ...]

    @property
    def observed_count(self) -> int:
        return len(self.clusters)

    @property
    def predicted_count(self) -> int:
        return len(self.predicted)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im", "abs_value", "det_magnitude", "flags"])
        for p in self.points:
            flags = []
            if p.near_singular:
                flags.append("near_singular")
            if p.flagged:
                flags.append("cluster_candidate")
            w.writerow(
                [
                    repr(p.s.real),
                    repr(p.s.imag),
                    "nan" if math.isnan(p.abs_value) else repr(p.abs_value),
                    repr(p.det_magnitude),
                    "|".join(flags),
                ]
            )

    def to_json(self) -> dict:
        return {
            "rectangle": {"a": self.a, "b": self.b, "T": self.T, "step": self.step},
            "observed_clusters": [[c.real, c.imag] for c in self.clusters],
            "predicted_in_rectangle": [[c.real, c.imag] for c in self.predicted],
            "observed_count": self.observed_count,
            "predicted_count": self.predicted_count,
        }


def pole_scan(
    rep: LinearRepresentation,
    a: float,
    b: float,
    T: float,
    step: float,
    levels: int | None = None,
    threads: int = 1,
) -> ScanResult:
    """Grid-evaluate the continuation and cluster pole candidates.

    A grid point is a candidate when the evaluation was refused outright,
    or when the system determinant is small at scan scale AND the value
    blows up like a pole (removable determinant zeros stay bounded, so
    they are reported in the CSV but not clustered).  Observed clusters
    are a subset of the predicted lattice; equality is never asserted.
    Degenerate rectangles (a == b) are allowed.
    """
    if b < a:
        raise DomainError(f"need a <= b, got a={a}, b={b}")
    if T < 0 or step <= 0:
        raise DomainError("need T >= 0 and step > 0")
    if levels is None:
        levels = default_levels(complex(a, 0.0))
    if a <= BASE_STRIP_SIGMA - levels:
        raise DomainError(
            f"rectangle extends left of the continued region "
            f"Re s > {BASE_STRIP_SIGMA - levels} for levels={levels}"
        )
    res = np.arange(0, int((b - a) / step + 1e-9) + 1) * step + a
    ims = np.arange(0, int(T / step + 1e-9) + 1) * step
    ctx = ContinuationContext(rep)

    def probe_column(x: float) -> list[ScanPoint]:
        out = continue_column(rep, float(x), ims, levels=levels, ctx=ctx)
        pts = []
        for ev in out:
            det = ev.det_magnitude if ev.det_magnitude is not None else math.nan
            absval = math.nan if ev.value is None else abs(ev.value)
            pts.append(
                ScanPoint(
                    s=ev.s, abs_value=absval, det_magnitude=det,
                    near_singular=ev.near_singular, flagged=False,
                )
            )
        return pts

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = list(pool.map(probe_column, res))
    else:
        columns = [probe_column(x) for x in res]
    # row-major grid order (imaginary part outer) for the CSV export
    raw = [col[j] for j in range(len(ims)) for col in columns]

    det_eta = max(_NEAR_SINGULAR_DET, step * math.log(rep.k))
    blowup = 1.0 / step
    points = [
        replace(
            p,
            flagged=p.near_singular
            or (p.det_magnitude < det_eta and p.abs_value > blowup),
        )
        for p in raw
    ]
    clusters = _cluster([p.s for p in points if p.flagged], points, 1.6 * step)
    m_hi = int(T * math.log(rep.k) / (2 * math.pi)) + 2
    l_hi = max(0, int(math.ceil(2 - a))) + 1
    lattice = pole_lattice(rep, m_max=m_hi, l_max=l_hi)
    predicted = tuple(p.s for p in lattice.in_rectangle(a, b, T))
    return ScanResult(
        a=a, b=b, T=T, step=step,
        points=tuple(points),
        clusters=clusters,
        predicted=predicted,
    )


def _cluster(flagged: list[complex], points: list[ScanPoint], radius: float):
    """Union-find grouping of flagged grid points; one representative each."""
    n = len(flagged)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(flagged[i] - flagged[j]) <= radius:
                parent[find(i)] = find(j)
    by_root: dict[int, list[complex]] = {}
    for i, z in enumerate(flagged):
        by_root.setdefault(find(i), []).append(z)
    score = {p.s: p for p in points}
    reps = []
    for members in by_root.values():
        def badness(z):
            p = score[z]
            if p.near_singular:
                return (-math.inf, 0.0)
            return (-p.abs_value, p.det_magnitude)
        reps.append(min(members, key=badness))
    return tuple(sorted(reps, key=lambda z: (z.imag, z.real)))
