"""Sieve-based generation of arithmetic-function value tables.

Every supported function is generated up to a bound N from one smallest-
prime-factor sieve.  Values are stored as int64 behind an a-priori exact
overflow bound, so construction refuses (CapacityError) instead of
silently wrapping.

Tables are index-aligned: ``values[n]`` is f(n) for 1 <= n <= N and
``values[0]`` is unused padding (always 0).  Exports emit n = 1..N only.
Sequences are indexed from 1; there is no f(0).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ConstructionError, DomainError, RangeError

DEFAULT_MAX_N = 10_000_000

_PARAMETERLESS_TAGS = (
    "lambda",
    "mu",
    "abs_mu",
    "phi",
    "tau",
    "omega",
    "big_omega",
    "rho",
    "r_half_rho",
    "chi_P",
    "chi_PP",
    "nth_prime",
    "tau_of_square",
    "tau_squared",
    "const_one",
    "thue_morse_pm",
    "sum_binary_digits",
    "identity_n",
)

# tag -> minimal admissible parameter
_PARAMETERIZED_TAGS = {"tau_k": 1, "sigma_m": 0, "q_m": 2}

ALL_TAGS = _PARAMETERLESS_TAGS + tuple(_PARAMETERIZED_TAGS)


def max_table_size() -> int:
    """Capacity cap for sieves and tables; KERNELSCOPE_MAX_N overrides."""
    raw = os.environ.get("KERNELSCOPE_MAX_N")
    if raw is None:
        return DEFAULT_MAX_N
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DomainError(f"KERNELSCOPE_MAX_N must be an integer, got {raw!r}") from exc
    if cap < 2:
        raise DomainError(f"KERNELSCOPE_MAX_N must be >= 2, got {cap}")
    return cap


@dataclass(frozen=True)
class FunctionId:
    """Identifier of a supported arithmetic function, plus parameters.

    ``param`` is the k of tau_k, the m of sigma_m/q_m; None elsewhere.
    ``modulus`` is set by reduce_mod and marks a reduced table.
    """

    tag: str
    param: int | None = None
    modulus: int | None = None

    def __post_init__(self):
        if self.tag in _PARAMETERIZED_TAGS:
            low = _PARAMETERIZED_TAGS[self.tag]
            if self.param is None or self.param < low:
                raise DomainError(f"{self.tag} requires an integer parameter >= {low}")
        elif self.tag in _PARAMETERLESS_TAGS:
            if self.param is not None:
                raise DomainError(f"{self.tag} takes no parameter")
        else:
            raise DomainError(f"unknown function tag {self.tag!r}")
        if self.modulus is not None and self.modulus < 2:
            raise DomainError("modulus must be >= 2")

    def __str__(self):
        s = self.tag if self.param is None else f"{self.tag}({self.param})"
        if self.modulus is not None:
            s += f" mod {self.modulus}"
        return s

    def growth_bound(self) -> tuple[float, float]:
        """(C, d) with |f(n)| <= C * n**d for all n >= 1.

        Used for Dirichlet tail bounds.  Each pair is an elementary bound:
        tau(n) <= 8.45 n^{1/4} is the product over p of max_e (e+1) p^{-e/4}
        (primes >= 17 contribute 1), Omega(n) <= log2(n) <= 2.13 n^{1/4},
        sigma_m(n) <= zeta(m) n^m for m >= 2, p(n) <= 2 n^{5/4}.
        """
        if self.modulus is not None:
            return float(self.modulus - 1) if self.modulus > 1 else 1.0, 0.0
        tag, m = self.tag, self.param
        if tag in ("lambda", "mu", "abs_mu", "q_m", "chi_P", "chi_PP",
                   "const_one", "thue_morse_pm"):
            return 1.0, 0.0
        if tag in ("omega", "big_omega"):
            return 2.2, 0.25
        if tag in ("tau", "rho"):
            return 8.45, 0.25
        if tag == "tau_of_square":
            return 8.45, 0.5
        if tag == "tau_squared":
            return 72.0, 0.5
        if tag == "sum_binary_digits":
            return 2.6, 0.25
        if tag in ("phi", "identity_n"):
            return 1.0, 1.0
        if tag == "r_half_rho":
            return 4.25, 0.25
        if tag == "nth_prime":
            return 2.0, 1.25
        if tag == "tau_k":
            return 8.45 ** (m - 1), 0.25 * (m - 1)
        if tag == "sigma_m":
            if m == 0:
                return 8.45, 0.25
            if m == 1:
                return 1.3, 1.25
            return 2.0, float(m)
        raise ConstructionError(f"no growth bound recorded for {self}")


@dataclass(frozen=True)
class FactorTable:
    """Smallest-prime-factor sieve up to N.

    ``spf[n]`` is the smallest prime factor of n for 2 <= n <= N;
    spf[0] = spf[1] = 0.  n is prime exactly when spf[n] == n.
    """

    N: int
    spf: np.ndarray
    primes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.spf.flags.writeable = False
        self.primes.flags.writeable = False


def build_factor_table(N: int) -> FactorTable:
    """Sieve smallest prime factors for 2..N (O(N log log N))."""
    cap = max_table_size()
    if not 2 <= N <= cap:
        raise CapacityError(f"factor table bound must satisfy 2 <= N <= {cap}, got {N}")
    spf = np.zeros(N + 1, dtype=np.int64)
    for p in range(2, math.isqrt(N) + 1):
        if spf[p] == 0:
            sl = spf[p * p :: p]
            sl[sl == 0] = p
    untouched = spf[2:] == 0
    spf[2:][untouched] = np.arange(2, N + 1, dtype=np.int64)[untouched]
    primes = np.flatnonzero(spf == np.arange(N + 1, dtype=np.int64))
    primes = primes[primes >= 2]
    return FactorTable(N=N, spf=spf, primes=primes)


@dataclass(frozen=True)
class ValueTable:
    """An arithmetic function tabulated on 1..N.

    ``values`` has length N+1 and is index-aligned (values[0] is padding);
    it is frozen after construction and safe to share across threads.
    """

    id: FunctionId
    N: int
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.N + 1:
            raise ConstructionError("values must be index-aligned with length N+1")
        self.values.flags.writeable = False

    def value(self, n: int) -> int:
        if not 1 <= n <= self.N:
            raise RangeError(f"index {n} outside table range 1..{self.N}")
        return int(self.values[n])

    def to_json(self) -> dict:
        return {
            "id": self.id.tag,
            "params": {"param": self.id.param, "modulus": self.id.modulus},
            "N": self.N,
            "values": [int(v) for v in self.values[1:]],
        }

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "value"])
        for n in range(1, self.N + 1):
            w.writerow([n, int(self.values[n])])


def _signature_max(N: int, coef, cap: int) -> int:
    """Exact max over n <= N of prod coef(e_i) across prime signatures.

    Valid for prime-independent |f(p^e)| = coef(e): sorting exponents
    decreasingly onto the smallest primes cannot decrease the value or
    push the support above N, so only non-increasing signatures are tried.
    Search aborts early once ``cap`` is exceeded.
    """
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]
    best = 1

    def rec(i, room, acc, e_max):
        nonlocal best
        if acc > best:
            best = acc
            if best > cap:
                return
        if i >= len(primes):
            return
        p = primes[i]
        pe, e = p, 1
        while pe <= room and e <= e_max:
            c = abs(coef(e))
            if c:
                rec(i + 1, room // pe, acc * c, e)
                if best > cap:
                    return
            pe *= p
            e += 1

    rec(0, N, 1, N.bit_length() + 1)
    return best


_INT64_MAX = 2**63 - 1


def _multiplicative_table(N: int, primes: np.ndarray, fpe, bound: int) -> np.ndarray:
    """Tabulate a multiplicative f with f(p^e) = fpe(p, e) for all n <= N.

    ``bound`` must dominate |f| on 1..N (checked by the caller against
    int64); every intermediate value here is itself a value of f at some
    divisor, so the bound covers the whole computation.
    """
    if bound > _INT64_MAX:
        raise CapacityError(
            f"values would exceed int64 (max |f| bound {bound} > {_INT64_MAX})"
        )
    out = np.ones(N + 1, dtype=np.int64)
    out[0] = 0
    for p in primes:
        p = int(p)
        prev = 1
        pe, e = p, 1
        while pe <= N:
            cur = int(fpe(p, e))
            if prev == 0:
                if cur != 0:
                    raise ConstructionError(
                        f"fpe({p},{e}) nonzero after fpe({p},{e-1}) == 0"
                    )
                break
            sl = out[pe::pe]
            if cur == 0:
                sl[...] = 0
            else:
                np.floor_divide(sl, prev, out=sl)
                sl *= cur
            prev = cur
            pe *= p
            e += 1
    return out


def _omega_table(N: int, primes: np.ndarray) -> np.ndarray:
    out = np.zeros(N + 1, dtype=np.int64)
    for p in primes:
        out[int(p) :: int(p)] += 1
    return out


def _big_omega_table(N: int, primes: np.ndarray) -> np.ndarray:
    out = np.zeros(N + 1, dtype=np.int64)
    for p in primes:
        pe = int(p)
        while pe <= N:
            out[pe::pe] += 1
            pe *= int(p)
    return out


def _mu_table(N: int, primes: np.ndarray) -> np.ndarray:
    out = np.ones(N + 1, dtype=np.int64)
    out[0] = 0
    for p in primes:
        out[int(p) :: int(p)] *= -1
    for p in primes[primes <= math.isqrt(N)]:
        sq = int(p) * int(p)
        out[sq::sq] = 0
    return out


def _phi_table(N: int, primes: np.ndarray) -> np.ndarray:
    out = np.arange(N + 1, dtype=np.int64)
    for p in primes:
        sl = out[int(p) :: int(p)]
        sl -= sl // int(p)
    return out


def _q_m_table(N: int, primes: np.ndarray, m: int) -> np.ndarray:
    out = np.ones(N + 1, dtype=np.int64)
    out[0] = 0
    for p in primes:
        pm = int(p) ** m
        if pm > N:
            break
        out[pm::pm] = 0
    return out


def _chi_prime_table(N: int, ft: FactorTable) -> np.ndarray:
    out = np.zeros(N + 1, dtype=np.int64)
    out[2:] = ft.spf[2 : N + 1] == np.arange(2, N + 1, dtype=np.int64)
    return out


def _chi_prime_power_table(N: int, ft: FactorTable) -> np.ndarray:
    out = _chi_prime_table(N, ft)
    for p in ft.primes[ft.primes <= math.isqrt(N)]:
        pe = int(p) * int(p)
        while pe <= N:
            out[pe] = 1
            pe *= int(p)
    return out


def _nth_prime_table(N: int, ft: FactorTable) -> np.ndarray:
    if len(ft.primes) < N:
        raise RangeError(
            f"need the first {N} primes but the sieve up to {ft.N} "
            f"holds only {len(ft.primes)}"
        )
    out = np.zeros(N + 1, dtype=np.int64)
    out[1:] = ft.primes[:N]
    return out


def _binomial(a: int, b: int) -> int:
    return math.comb(a, b)


def generate(fid: FunctionId, N: int, ft: FactorTable) -> ValueTable:
    """Tabulate the function named by ``fid`` on 1..N from the sieve ``ft``.

    Values come from prime factorizations via the per-prime-power sieves
    below; completely multiplicative structure is exploited where it
    exists.  Raises CapacityError when int64 cannot hold the result.
    """
    if N < 1:
        raise DomainError(f"table bound must be >= 1, got {N}")
    if fid.tag != "nth_prime" and ft.N < N:
        raise CapacityError(f"factor table covers 2..{ft.N}, need {N}")
    if fid.modulus is not None:
        raise DomainError("generate() produces unreduced tables; use reduce_mod")
    primes = ft.primes[ft.primes <= N]
    tag, m = fid.tag, fid.param

    if tag == "const_one":
        vals = np.ones(N + 1, dtype=np.int64)
        vals[0] = 0
    elif tag == "identity_n":
        vals = np.arange(N + 1, dtype=np.int64)
    elif tag == "thue_morse_pm":
        bits = np.bitwise_count(np.arange(N + 1, dtype=np.uint64)).astype(np.int64)
        vals = 1 - 2 * (bits & 1)
        vals[0] = 0
    elif tag == "sum_binary_digits":
        vals = np.bitwise_count(np.arange(N + 1, dtype=np.uint64)).astype(np.int64)
    elif tag == "omega":
        vals = _omega_table(N, primes)
    elif tag == "big_omega":
        vals = _big_omega_table(N, primes)
    elif tag == "lambda":
        vals = 1 - 2 * (_big_omega_table(N, primes) & 1)
        vals[0] = 0
    elif tag == "mu":
        vals = _mu_table(N, primes)
    elif tag == "abs_mu":
        vals = np.abs(_mu_table(N, primes))
    elif tag == "phi":
        vals = _phi_table(N, primes)
    elif tag == "rho":
        vals = np.int64(1) << _omega_table(N, primes)
        vals[0] = 0
    elif tag == "r_half_rho":
        # 2 r(n) = rho(n) has no integer solution at n = 1 (rho(1) = 1);
        # r(1) = 0 keeps (r mod 2) equal to the prime-power indicator.
        vals = (np.int64(1) << _omega_table(N, primes)) >> 1
        vals[0] = 0
    elif tag == "q_m":
        vals = _q_m_table(N, primes, m)
    elif tag == "chi_P":
        vals = _chi_prime_table(N, ft)
    elif tag == "chi_PP":
        vals = _chi_prime_power_table(N, ft)
    elif tag == "nth_prime":
        vals = _nth_prime_table(N, ft)
    elif tag == "tau":
        bound = _signature_max(N, lambda e: e + 1, _INT64_MAX)
        vals = _multiplicative_table(N, primes, lambda p, e: e + 1, bound)
    elif tag == "tau_of_square":
        bound = _signature_max(N, lambda e: 2 * e + 1, _INT64_MAX)
        vals = _multiplicative_table(N, primes, lambda p, e: 2 * e + 1, bound)
    elif tag == "tau_squared":
        bound = _signature_max(N, lambda e: (e + 1) ** 2, _INT64_MAX)
        vals = _multiplicative_table(N, primes, lambda p, e: (e + 1) ** 2, bound)
    elif tag == "tau_k":
        bound = _signature_max(N, lambda e: _binomial(e + m - 1, e), _INT64_MAX)
        vals = _multiplicative_table(
            N, primes, lambda p, e: _binomial(e + m - 1, e), bound
        )
    elif tag == "sigma_m":
        if m == 0:
            bound = _signature_max(N, lambda e: e + 1, _INT64_MAX)
            vals = _multiplicative_table(N, primes, lambda p, e: e + 1, bound)
        else:
            # sigma_m(n) <= n^m * zeta(m) for m >= 2; <= n (1 + ln n) for m = 1
            if m == 1:
                bound = N * (2 + math.ceil(math.log(max(N, 2))))
            else:
                bound = 2 * N**m
            vals = _multiplicative_table(
                N,
                primes,
                lambda p, e: (p ** (m * (e + 1)) - 1) // (p**m - 1),
                bound,
            )
    else:
        raise DomainError(f"unknown function tag {tag!r}")

    vals[0] = 0
    return ValueTable(id=fid, N=N, values=vals)


def reduce_mod(t: ValueTable, m: int) -> ValueTable:
    """Entrywise least non-negative residue mod m; the id records m."""
    if m < 2:
        raise DomainError(f"modulus must be >= 2, got {m}")
    if t.id.modulus is not None:
        raise DomainError("table is already reduced; reduce the unreduced table")
    fid = FunctionId(t.id.tag, t.id.param, modulus=m)
    vals = np.mod(t.values, m)
    vals[0] = 0
    return ValueTable(id=fid, N=t.N, values=vals)
