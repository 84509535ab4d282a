"""Physical problem data and exact rate/constraint evaluation.

The network serves N users, grouped into G slices, from M base stations over
K OFDMA sub-carriers.  Rates follow the Shannon formula

    R[m,k,n] = log2(1 + P[m,k,n] * h[m,k,n] / (sigma2 + I[m,k,n]))

in bps/Hz per sub-carrier, where the inter-cell interference seen by user n is

    I[m,k,n] = sum_{m' != m} h[m',k,n] * (power BS m' spends on sub-carrier k).

Note on the interference channel index: interference at user n arrives
through *that user's own* channel from each interfering BS (h[m',k,n]),
which is the physically standard convention.  Some formulations index the
interferer's user instead; we treat that as a notational slip and document
the choice here.

Constraint families:
    C1  per-slice minimum aggregate rate,
    C2  per-BS power budget,
    C3  at most one user per (BS, sub-carrier),
    C4  each user attaches to at most one BS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RELAXED = "relaxed"
BINARY = "binary"


@dataclass(frozen=True)
class NetworkInstance:
    """Immutable problem data. Safe to share across parallel workers.

    gains:     h[m, k, n], strictly positive linear channel power gains
    noise_power: sigma^2 in watts per sub-carrier
    p_max:     per-BS transmit power budget in watts, shape (M,)
    r_rsv:     per-slice minimum aggregate rate in bps/Hz (summed over
               assigned tuples), shape (G,)
    users_per_slice: N_g per slice; users are numbered slice by slice
    bs_xy, user_xy: 2-D coordinates in meters, kept for scenario analysis
    """

    gains: np.ndarray
    noise_power: float
    p_max: np.ndarray
    r_rsv: np.ndarray
    users_per_slice: tuple[int, ...]
    bs_xy: np.ndarray = field(default=None, repr=False)
    user_xy: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "p_max", np.atleast_1d(np.asarray(self.p_max, dtype=float)))
        object.__setattr__(self, "r_rsv", np.atleast_1d(np.asarray(self.r_rsv, dtype=float)))
        object.__setattr__(self, "users_per_slice", tuple(int(x) for x in self.users_per_slice))
        if gains.ndim != 3:
            raise ValueError("gains must have shape (M, K, N)")
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
            raise ValueError("channel gains must be strictly positive and finite")
        if self.noise_power <= 0:
            raise ValueError("noise power must be positive")
        if self.p_max.shape != (self.M,) or np.any(self.p_max <= 0):
            raise ValueError("p_max must hold one positive budget per BS")
        if self.r_rsv.shape != (self.G,) or np.any(self.r_rsv < 0):
            raise ValueError("r_rsv must hold one nonnegative rate per slice")
        if sum(self.users_per_slice) != self.N:
            raise ValueError("users_per_slice must sum to the user count")

    @property
    def M(self) -> int:
        return self.gains.shape[0]

    @property
    def K(self) -> int:
        return self.gains.shape[1]

    @property
    def N(self) -> int:
        return self.gains.shape[2]

    @property
    def G(self) -> int:
        return len(self.users_per_slice)

    @property
    def slice_of_user(self) -> np.ndarray:
        """Slice index of each global user, shape (N,)."""
        return np.repeat(np.arange(self.G), self.users_per_slice)

    def slice_members(self, g: int) -> np.ndarray:
        """Global user indices belonging to slice g."""
        start = int(sum(self.users_per_slice[:g]))
        return np.arange(start, start + self.users_per_slice[g])


@dataclass
class Uaf:
    """User association factor tensor beta[m, k, n] with its relaxation mode."""

    beta: np.ndarray
    mode: str = RELAXED

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        if self.mode not in (RELAXED, BINARY):
            raise ValueError(f"unknown mode {self.mode!r}")
        if np.any(self.beta < 0) or np.any(self.beta > 1):
            raise ValueError("beta entries must lie in [0, 1]")
        if self.mode == BINARY and not np.all((self.beta == 0) | (self.beta == 1)):
            raise ValueError("binary Uaf must contain only 0/1 entries")

    def serving_bs(self) -> np.ndarray:
        """Per-user serving BS index (-1 if unassigned). Binary mode only."""
        if self.mode != BINARY:
            raise ValueError("serving_bs requires a binary Uaf")
        per_bs = self.beta.sum(axis=1)  # (M, N)
        served = per_bs.sum(axis=0) > 0
        home = np.argmax(per_bs, axis=0)
        return np.where(served, home, -1)


@dataclass
class PowerAlloc:
    """Transmit power tensor P[m, k, n] in watts."""

    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if np.any(self.p < 0):
            raise ValueError("powers must be nonnegative")

    @classmethod
    def uniform(cls, inst: NetworkInstance) -> "PowerAlloc":
        """P_max/K per sub-carrier per BS, split evenly across users."""
        p = np.broadcast_to(
            inst.p_max[:, None, None] / (inst.K * inst.N), (inst.M, inst.K, inst.N)
        ).copy()
        return cls(p)


def carrier_power(power: PowerAlloc, beta: Uaf | None = None) -> np.ndarray:
    """Power each BS spends per sub-carrier, shape (M, K).

    With a binary beta the sum is masked to assigned tuples; otherwise the
    power tensor is assumed to be pre-masked and is summed as is.
    """
    p = power.p
    if beta is not None and beta.mode == BINARY:
        p = p * beta.beta
    return p.sum(axis=2)


def interference(
    inst: NetworkInstance,
    power: PowerAlloc,
    beta: Uaf | None,
    m: int,
    k: int,
    n: int,
) -> float:
    """Inter-cell interference (watts) at user n on sub-carrier k of cell m."""
    spent = carrier_power(power, beta)[:, k]
    if not (0 <= m < inst.M and 0 <= k < inst.K and 0 <= n < inst.N):
        raise IndexError("interference index out of range")
    other = np.arange(inst.M) != m
    return float(np.sum(inst.gains[other, k, n] * spent[other]))


def rate(
    inst: NetworkInstance,
    power: PowerAlloc,
    beta: Uaf | None,
    m: int,
    k: int,
    n: int,
) -> float:
    """Achievable rate (bps/Hz) of user n on sub-carrier k of BS m."""
    i = interference(inst, power, beta, m, k, n)
    sig = power.p[m, k, n] * inst.gains[m, k, n]
    return float(np.log2(1.0 + sig / (inst.noise_power + i)))


def interference_table(inst: NetworkInstance, per_mk_power: np.ndarray) -> np.ndarray:
    """I[m, k, n] for given per-(BS, sub-carrier) spent power, vectorized."""
    # rx[m', k, n] = power BS m' radiates on k, seen through user n's channel
    rx = per_mk_power[:, :, None] * inst.gains
    total = rx.sum(axis=0, keepdims=True)
    return total - rx


def prospective_rate_table(inst: NetworkInstance, per_mk_power: np.ndarray) -> np.ndarray:
    """Rate every user would get from every (m, k) at the current powers.

    Each candidate tuple (m, k, n) is scored as if BS m handed its current
    sub-carrier-k power to user n, with all other cells transmitting at
    their current per-carrier powers.  This is the fixed rate table the
    user-association step optimizes over.
    """
    i = interference_table(inst, per_mk_power)
    sig = per_mk_power[:, :, None] * inst.gains
    return np.log2(1.0 + sig / (inst.noise_power + i))


@dataclass
class RateTable:
    """Per-tuple rates plus beta-weighted slice and network aggregates."""

    r: np.ndarray
    per_slice_rate: np.ndarray
    total_rate: float

    @classmethod
    def for_allocation(cls, inst: NetworkInstance, power: PowerAlloc, beta: Uaf) -> "RateTable":
        spent = carrier_power(power, beta)
        i = interference_table(inst, spent)
        p = power.p * beta.beta if beta.mode == BINARY else power.p
        r = np.log2(1.0 + p * inst.gains / (inst.noise_power + i))
        weighted = beta.beta * r
        per_slice = np.array(
            [weighted[:, :, inst.slice_members(g)].sum() for g in range(inst.G)]
        )
        return cls(r=r, per_slice_rate=per_slice, total_rate=float(per_slice.sum()))


def total_objective(inst: NetworkInstance, power: PowerAlloc, beta: Uaf) -> float:
    """Network objective: sum over all tuples of beta * rate (bps/Hz)."""
    return RateTable.for_allocation(inst, power, beta).total_rate


@dataclass
class ConstraintReport:
    """Residuals and verdicts for C1-C4.

    c1_residual[g] = achieved slice rate - r_rsv[g]          (want >= 0)
    c2_residual[m] = p_max[m] - spent power of BS m          (want >= 0)
    c3_ok / c4_ok are exact in binary mode.
    """

    c1_residual: np.ndarray
    c2_residual: np.ndarray
    c3_ok: bool
    c4_ok: bool
    c3_max_load: float

    def feasible(self, tol: float = 1e-6) -> bool:
        return (
            bool(np.all(self.c1_residual >= -tol))
            and bool(np.all(self.c2_residual >= -tol))
            and self.c3_ok
            and self.c4_ok
        )


def evaluate_constraints(inst: NetworkInstance, power: PowerAlloc, beta: Uaf) -> ConstraintReport:
    table = RateTable.for_allocation(inst, power, beta)
    c1 = table.per_slice_rate - inst.r_rsv
    p = power.p * beta.beta if beta.mode == BINARY else power.p
    c2 = inst.p_max - p.sum(axis=(1, 2))
    load = beta.beta.sum(axis=2)  # users per (m, k)
    if beta.mode == BINARY:
        c3_ok = bool(np.all(load <= 1))
        per_bs = beta.beta.sum(axis=1) > 0  # (M, N) BS usage per user
        c4_ok = bool(np.all(per_bs.sum(axis=0) <= 1))
    else:
        c3_ok = bool(np.all(load <= 1 + 1e-9))
        per_bs = beta.beta.sum(axis=1) > 0
        c4_ok = bool(np.all(per_bs.sum(axis=0) <= 1))
    return ConstraintReport(
        c1_residual=c1,
        c2_residual=c2,
        c3_ok=c3_ok,
        c4_ok=c4_ok,
        c3_max_load=float(load.max()) if load.size else 0.0,
    )
