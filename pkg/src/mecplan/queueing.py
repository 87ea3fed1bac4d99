"""Closed-form delay and reliability formulas for the two server types.

Local servers are slotted FCFS queues with deterministic service
(Geo/D/1); MEC servers are processor-sharing queues fed by short packets
and heavy-tailed background jobs. Time is measured in slots throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "LocalServerSpec",
    "MecServerSpec",
    "ParetoWorkload",
    "geo_d1_ccdf",
    "local_violation_prob",
    "mec_workload",
    "ps_short_ccdf",
    "mec_violation_prob",
    "overall_loss",
    "long_tail_asymptote",
    "max_local_rate",
]


def _clamp01(p: float) -> float:
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class LocalServerSpec:
    """Local FCFS server: ``d_loc`` slots per packet, Bernoulli(lambda0) input."""

    d_loc: int
    lambda0: float

    def __post_init__(self):
        if self.d_loc < 1 or int(self.d_loc) != self.d_loc:
            raise ValueError("d_loc must be a positive integer (slots)")
        if not 0.0 <= self.lambda0 < 1.0:
            raise ValueError("lambda0 must be in [0, 1)")
        if self.lambda0 * self.d_loc >= 1.0:
            raise ValueError(
                f"unstable local server: lambda0*d_loc = {self.lambda0 * self.d_loc}"
            )


@dataclass(frozen=True)
class MecServerSpec:
    """PS server fed by short packets plus background long packets.

    s_rate            service rate (cycles/slot)
    c_s               cycles per short packet
    c_l_mean          mean cycles per long packet
    lambda_long       long-packet arrival rate (packets/slot)
    lambda_short_sum  total short-packet offload rate into the server
    """

    s_rate: float
    c_s: float
    c_l_mean: float
    lambda_long: float
    lambda_short_sum: float = 0.0

    def __post_init__(self):
        if min(self.s_rate, self.c_s, self.c_l_mean, self.lambda_long) <= 0:
            raise ValueError("s_rate, c_s, c_l_mean and lambda_long must be positive")
        if self.lambda_short_sum < 0:
            raise ValueError("lambda_short_sum must be >= 0")


@dataclass(frozen=True)
class ParetoWorkload:
    """Heavy-tailed long/short cycle ratio: Pr{ratio > x} = (c0_ratio/x)^v."""

    c0_ratio: float
    v: float

    def __post_init__(self):
        if not 1.0 < self.v < 2.0:
            raise ValueError("tail exponent v must be in (1, 2)")
        if self.c0_ratio < 1.0:
            raise ValueError("c0_ratio must be >= 1")

    @property
    def p_a(self) -> float:
        return self.c0_ratio**self.v

    @property
    def mean_ratio(self) -> float:
        return self.v * self.c0_ratio / (self.v - 1.0)


def geo_d1_ccdf(lambda0: float, d_loc: int, i: int) -> float:
    """CCDF of the Geo/D/1/FCFS queueing delay at integer delay ``i``.

    Valid only on the low-latency window 0 <= i <= d_loc - 1; outside that
    window the closed form does not apply and a ValueError is raised.
    """
    if not 0 <= i <= d_loc - 1:
        raise ValueError(
            f"i={i} outside the validity window [0, {d_loc - 1}] of the "
            "Geo/D/1 closed form"
        )
    if not 0.0 <= lambda0 < 1.0 or lambda0 * d_loc >= 1.0:
        raise ValueError("requires 0 <= lambda0 and lambda0*d_loc < 1")
    if lambda0 == 0.0:
        return 0.0
    p = 1.0 - (1.0 - lambda0) ** (-i - 1) * (1.0 - lambda0 * d_loc)
    return _clamp01(p)


def local_violation_prob(spec: LocalServerSpec, d_max: int) -> float:
    """Probability the local sojourn (wait + service) exceeds ``d_max`` slots."""
    if d_max < spec.d_loc:
        return 1.0  # service alone blows the budget
    return geo_d1_ccdf(spec.lambda0, spec.d_loc, d_max - spec.d_loc)


def mec_workload(spec: MecServerSpec) -> float:
    """Offered load of the PS server (stability requires < 1)."""
    return (
        spec.lambda_short_sum * spec.c_s + spec.lambda_long * spec.c_l_mean
    ) / spec.s_rate


def ps_short_ccdf(rho: float, q: int) -> float:
    """Short-packet delay tail: Pr{sojourn > c_s(q+1)/s_rate} ~ rho^q."""
    if q < 0:
        raise ValueError("q must be >= 0")
    if rho < 0.0:
        raise ValueError("rho must be >= 0")
    if rho >= 1.0:
        return 1.0
    if rho == 0.0:
        return 1.0 if q == 0 else 0.0
    return _clamp01(rho**q)


def mec_violation_prob(spec: MecServerSpec, d_max: int) -> float:
    """Probability an offloaded packet misses ``d_max``, two slots going to radio.

    The real-valued tail exponent s_rate*(d_max-2)/c_s - 1 comes from the
    short-packet CCDF; a negative exponent means the deadline is missed
    even by an idle server.
    """
    rho = mec_workload(spec)
    if rho >= 1.0:
        return 1.0
    exponent = spec.s_rate * (d_max - 2) / spec.c_s - 1.0
    if exponent < 0.0:
        return 1.0
    if rho == 0.0:
        return 1.0 if exponent == 0.0 else 0.0
    return _clamp01(rho**exponent)


def overall_loss(
    eps_u: float, eps_d: float, eps_mec: float, mode: str = "exact"
) -> float:
    """Compose UL/DL decoding losses with the processing-deadline loss."""
    for name, val in (("eps_u", eps_u), ("eps_d", eps_d), ("eps_mec", eps_mec)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name}={val} outside [0, 1]")
    if mode == "exact":
        return _clamp01(1.0 - (1.0 - eps_u) * (1.0 - eps_d) * (1.0 - eps_mec))
    if mode == "linearized":
        return _clamp01(eps_u + eps_d + eps_mec)
    raise ValueError(f"unknown mode {mode!r}")


def long_tail_asymptote(pw: ParetoWorkload, spec: MecServerSpec, x: float) -> float:
    """Large-delay power-law tail of the long-packet PS sojourn at ``x`` slots."""
    if x <= 0:
        raise ValueError("x must be positive")
    rho = mec_workload(spec)
    if rho >= 1.0:
        raise ValueError("asymptote requires a stable server (rho < 1)")
    pkts_per_slot = spec.s_rate / spec.c_s
    return pw.p_a * pkts_per_slot ** (-pw.v) * (1.0 - rho) ** (-pw.v) * x ** (-pw.v)


def max_local_rate(
    d_loc: int, d_max: int, eps_th: float, tol: float = 1e-12
) -> float:
    """Largest Bernoulli rate the local server sustains at loss target ``eps_th``.

    Binary search over [0, 1/d_loc); the violation probability is strictly
    increasing in the rate on the validity window. At eps_th = 1 the
    constraint is inactive and the stability limit comes back directly.
    """
    if not 0.0 < eps_th <= 1.0:
        raise ValueError("eps_th must be in (0, 1]")
    if d_max < d_loc:
        return 0.0  # nothing can be served in time locally
    i = d_max - d_loc
    if i > d_loc - 1:
        raise ValueError(
            f"d_max - d_loc = {i} outside the Geo/D/1 validity window "
            f"[0, {d_loc - 1}]"
        )
    limit = 1.0 / d_loc - tol

    def violation(lam):
        if lam <= 0.0:
            return 0.0
        return 1.0 - (1.0 - lam) ** (-i - 1) * (1.0 - lam * d_loc)

    if violation(limit) <= eps_th:
        return limit
    lo, hi = 0.0, limit  # violation(lo) <= eps_th < violation(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if violation(mid) <= eps_th:
            lo = mid
        else:
            hi = mid
    return lo
