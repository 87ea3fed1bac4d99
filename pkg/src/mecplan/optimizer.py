"""Cross-layer solvers for worst-case packet loss under a delay budget.

All solvers share the same outer loop: bisection on a per-device loss
threshold, with an inner step that finds the cheapest bandwidth (total
subcarriers) meeting the threshold. They differ in how offload rates and
the association are chosen inside one iteration. A brute-force oracle for
small instances and the two closed-form asymptotic associations are
included for validation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import FadingModel, _gamma_average, avg_decoding_error, q_func
from .queueing import (
    LocalServerSpec,
    local_violation_prob,
    max_local_rate,
    mec_violation_prob,
    mec_workload,
)
from .scenario import Scenario

__all__ = [
    "Allocation",
    "SolveReport",
    "CompBottleneck",
    "InfeasibleError",
    "ErrorTable",
    "check_allocation",
    "device_loss",
    "min_subcarriers_device",
    "assign_and_allocate",
    "plb_solve",
    "extended_plb_solve",
    "assoc_comm_bottleneck",
    "assoc_comp_bottleneck",
    "brute_force_solve",
]


class InfeasibleError(RuntimeError):
    """The instance admits no feasible operating point."""


@dataclass
class Allocation:
    """One operating point: association, offload split, subcarriers.

    ``x`` is the K x M 0/1 association matrix (all-zero row = local
    processing), ``lambda_off`` the offload rates, ``n_u``/``n_d`` the
    per-device subcarrier counts (0 when not offloading).
    """

    x: np.ndarray
    lambda_off: np.ndarray
    lambda_local: np.ndarray
    n_u: np.ndarray
    n_d: np.ndarray

    @classmethod
    def empty(cls, n_devices: int, n_aps: int) -> "Allocation":
        return cls(
            x=np.zeros((n_devices, n_aps), dtype=np.int64),
            lambda_off=np.zeros((n_devices, n_aps)),
            lambda_local=np.zeros(n_devices),
            n_u=np.zeros(n_devices, dtype=np.int64),
            n_d=np.zeros(n_devices, dtype=np.int64),
        )

    def ap_of(self, k: int) -> int | None:
        row = np.nonzero(self.x[k])[0]
        return int(row[0]) if len(row) else None

    def total_subcarriers(self) -> int:
        return int(self.n_u.sum() + self.n_d.sum())

    def ap_short_load(self, m: int) -> float:
        return float(self.lambda_off[:, m].sum())


def check_allocation(alloc: Allocation, scen: Scenario) -> list[str]:
    """Machine-checkable constraint predicates; returns violated tags."""
    bad = []
    x = alloc.x
    if not np.isin(x, (0, 1)).all() or (x.sum(axis=1) > 1).any():
        bad.append("association-single-ap")
    if (alloc.lambda_off < -1e-12).any() or ((x == 0) & (alloc.lambda_off > 1e-12)).any():
        bad.append("offload-requires-association")
    lam_u = np.array([d.lambda_u for d in scen.devices])
    if not np.allclose(alloc.lambda_off.sum(axis=1) + alloc.lambda_local, lam_u, atol=1e-9):
        bad.append("rate-conservation")
    n_tot = alloc.n_u + alloc.n_d
    offloading = x.sum(axis=1) == 1
    if (n_tot[~offloading] != 0).any():
        bad.append("subcarriers-without-association")
    in_range = (
        (alloc.n_u[offloading] >= 1).all()
        and (alloc.n_u[offloading] <= scen.radio.n_c).all()
        and (alloc.n_d[offloading] >= 1).all()
        and (alloc.n_d[offloading] <= scen.radio.n_c).all()
    )
    if offloading.any() and not in_range:
        bad.append("subcarrier-range")
    if alloc.total_subcarriers() > scen.radio.n_max:
        bad.append("subcarrier-budget")
    for m in range(scen.n_aps):
        if mec_workload(scen.mec_spec(m, alloc.ap_short_load(m))) >= 1.0:
            bad.append(f"stability-ap{m}")
    return bad


class ErrorTable:
    """Fading-averaged decoding errors per (device, AP, direction, n).

    The decoding error of a link depends only on the link budget and the
    subcarrier count, never on loss targets, so one table serves every
    bisection iteration of a solve.
    """

    def __init__(self, scen: Scenario):
        self.scen = scen
        k, m, n_c = scen.n_devices, scen.n_aps, scen.radio.n_c
        fading = FadingModel.gamma(scen.radio.n_t)
        self.ul = np.empty((k, m, n_c))
        self.dl = np.empty((k, m, n_c))
        for i in range(k):
            for j in range(m):
                up = scen.link(i, j, "uplink")
                down = scen.link(i, j, "downlink")
                for n in range(1, n_c + 1):
                    self.ul[i, j, n - 1] = avg_decoding_error(n, up, fading)
                    self.dl[i, j, n - 1] = avg_decoding_error(n, down, fading)

    def radio_sum(self, k: int, m: int, n_u: int, n_d: int) -> float:
        return float(self.ul[k, m, n_u - 1] + self.dl[k, m, n_d - 1])


def _min_pair_exact(eu: np.ndarray, ed: np.ndarray, budget: float):
    """Cheapest (n_u, n_d) with eu[n_u-1] + ed[n_d-1] <= budget, or None.

    eu/ed are non-increasing in n; sweeping n_u upward lets the matching
    minimal n_d only move downward (equal totals resolve to the smaller
    n_u). Exact on the integer grid.
    """
    if budget <= 0.0:
        return None
    n_c = len(eu)
    if eu[-1] + ed[-1] > budget:
        return None
    best = None
    nd = n_c
    for nu in range(1, n_c + 1):
        residual = budget - eu[nu - 1]
        if residual < ed[n_c - 1]:
            continue  # no n_d rescues this n_u
        while nd > 1 and ed[nd - 2] <= residual:
            nd -= 1
        total = nu + nd
        if best is None or total < best[0]:
            best = (total, nu, nd)
    if best is None:
        return None
    return best[1], best[2]


def _continuous_error(n: float, link, fading) -> float:
    """Fading-averaged decoding error with a real-valued subcarrier count.

    The closed form is smooth in n, so the continuous relaxation just
    evaluates it off the integer grid.
    """
    if fading.kind == "deterministic":
        return float(_cond_real(fading.g, n, link))
    return _gamma_average(lambda g: _cond_real(g, n, link), link, n, fading.shape)


def _cond_real(g, n: float, link):
    snr = link.snr(g)
    uses = link.t_s * n * link.w0
    v = 1.0 - 1.0 / (1.0 + snr) ** 2
    arg = np.sqrt(uses / v) * (np.log1p(snr) - link.b * np.log(2.0) / uses)
    return q_func(arg)


def _min_pair_relaxed(k: int, m: int, budget: float, scen: Scenario):
    """Continuous relaxation + ceiling (the classical inner step).

    Kept as a fidelity mode; the exact grid mode dominates it and is the
    default.
    """
    if budget <= 0.0:
        return None
    fading = FadingModel.gamma(scen.radio.n_t)
    up = scen.link(k, m, "uplink")
    down = scen.link(k, m, "downlink")
    n_c = scen.radio.n_c

    def eps_u(n):
        return _continuous_error(n, up, fading)

    def eps_d(n):
        return _continuous_error(n, down, fading)

    if eps_u(n_c) + eps_d(n_c) > budget:
        return None

    def needed_dl(nu):
        res = budget - eps_u(nu)
        if res <= 0 or eps_d(n_c) > res:
            return None
        if eps_d(1.0) <= res:
            return 1.0
        lo, hi = 1.0, float(n_c)
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if eps_d(mid) <= res:
                hi = mid
            else:
                lo = mid
        return hi

    def total(nu):
        nd = needed_dl(nu)
        return math.inf if nd is None else nu + nd

    # golden-section on the convex total
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 1.0, float(n_c)
    a = hi - inv_phi * (hi - lo)
    b = lo + inv_phi * (hi - lo)
    fa, fb = total(a), total(b)
    for _ in range(40):
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - inv_phi * (hi - lo)
            fa = total(a)
        else:
            lo, a, fa = a, b, fb
            b = lo + inv_phi * (hi - lo)
            fb = total(b)
    nu_star = 0.5 * (lo + hi)
    nd_star = needed_dl(nu_star)
    if nd_star is None:
        return None
    n_u = min(n_c, math.ceil(nu_star - 1e-12))
    n_d = min(n_c, math.ceil(nd_star - 1e-12))
    return n_u, n_d


def min_subcarriers_device(
    k: int,
    m: int,
    eps_th: float,
    eps_mec_m: float,
    scen: Scenario,
    table: ErrorTable | None = None,
    inner: str = "exact",
):
    """Cheapest (n_u, n_d) with radio + computing loss within ``eps_th``.

    Returns None when the budget is unreachable (including eps_mec already
    exceeding it).
    """
    if not 0.0 < eps_th <= 1.0:
        raise ValueError("eps_th must be in (0, 1]")
    budget = eps_th - eps_mec_m
    if inner == "relaxed":
        return _min_pair_relaxed(k, m, budget, scen)
    if table is None:
        table = ErrorTable(scen)
    return _min_pair_exact(table.ul[k, m], table.dl[k, m], budget)


def assign_and_allocate(
    eps_th: float,
    eps_mec: np.ndarray,
    scen: Scenario,
    table: ErrorTable,
    inner: str = "exact",
) -> list[tuple[int, int, int] | None]:
    """Per-device best AP and subcarrier pair at threshold ``eps_th``.

    Each device independently picks the AP minimizing its subcarrier total
    (ties to the lowest AP index); None marks an infeasible device.
    """
    out = []
    for k in range(scen.n_devices):
        best = None
        for m in range(scen.n_aps):
            pair = min_subcarriers_device(k, m, eps_th, float(eps_mec[m]), scen, table, inner)
            if pair is None:
                continue
            total = pair[0] + pair[1]
            if best is None or total < best[0]:
                best = (total, m, pair[0], pair[1])
        out.append(None if best is None else (best[1], best[2], best[3]))
    return out


@dataclass
class SolveReport:
    """Solver outcome plus the full bisection trace."""

    status: str
    epsilon_a: float
    allocation: Allocation | None
    trace: list[dict] = field(default_factory=list)
    per_device: list[dict] = field(default_factory=list)
    solver: str = ""
    eps_init: float = 1.0
    delta_eps: float = 1e-9

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def to_dict(self) -> dict:
        alloc = self.allocation
        association = None
        offload = None
        n_u = None
        n_d = None
        if alloc is not None:
            association = [alloc.ap_of(k) for k in range(len(alloc.n_u))]
            offload = [float(alloc.lambda_off[k].sum()) for k in range(len(alloc.n_u))]
            n_u = [int(v) for v in alloc.n_u]
            n_d = [int(v) for v in alloc.n_d]
        return {
            "status": self.status,
            "epsilon_a": self.epsilon_a,
            "association": association,
            "offload_rates": offload,
            "subcarriers_ul": n_u,
            "subcarriers_dl": n_d,
            "trace": self.trace,
            "per_device_breakdown": self.per_device,
            "solver": self.solver,
            "iterations": self.iterations,
        }


def _mec_eps(scen: Scenario, m: int, rho: float) -> float:
    if rho >= 1.0:
        return 1.0
    exponent = scen.aps[m].s_rate * (scen.d_max_slots - 2) / scen.compute.c_s - 1.0
    if exponent < 0.0:
        return 1.0
    if rho == 0.0:
        return 1.0 if exponent == 0.0 else 0.0
    return min(rho**exponent, 1.0)


def device_loss(k: int, alloc: Allocation, scen: Scenario, table: ErrorTable | None = None) -> float:
    """Worst branch of device k's loss under the given allocation."""
    parts = _loss_parts(k, alloc, scen, table)
    return parts["loss"]


def _loss_parts(k, alloc, scen, table=None):
    dev = scen.devices[k]
    lam_local = float(alloc.lambda_local[k])
    if lam_local > 0.0 or alloc.ap_of(k) is None:
        if lam_local * dev.d_loc >= 1.0:
            eps_loc = 1.0  # locally unstable
        else:
            spec = LocalServerSpec(d_loc=dev.d_loc, lambda0=lam_local)
            eps_loc = local_violation_prob(spec, scen.d_max_slots)
    else:
        eps_loc = 0.0
    m = alloc.ap_of(k)
    eps_u = eps_d = eps_mec = 0.0
    branch = eps_loc
    if m is not None:
        fading = FadingModel.gamma(scen.radio.n_t)
        if table is not None:
            eps_u = float(table.ul[k, m, alloc.n_u[k] - 1])
            eps_d = float(table.dl[k, m, alloc.n_d[k] - 1])
        else:
            eps_u = avg_decoding_error(int(alloc.n_u[k]), scen.link(k, m, "uplink"), fading)
            eps_d = avg_decoding_error(int(alloc.n_d[k]), scen.link(k, m, "downlink"), fading)
        rho = mec_workload(scen.mec_spec(m, alloc.ap_short_load(m)))
        eps_mec = _mec_eps(scen, m, rho)
        branch = max(eps_loc, min(eps_u + eps_d + eps_mec, 1.0))
    return {
        "device": k,
        "eps_local": eps_loc,
        "eps_ul": eps_u,
        "eps_dl": eps_d,
        "eps_mec": eps_mec,
        "loss": branch,
    }


def _bisect(eps_init, delta_eps, feasibility):
    """Shared outer loop: returns (status, eps_a, payload, trace).

    ``feasibility(eps_th)`` returns (total_subcarriers or None, payload).
    The search area is (0, eps_init]; the initial endpoint is checked
    first so the report can distinguish outright infeasibility.
    """
    if not 0.0 < delta_eps < eps_init <= 1.0:
        raise ValueError("need 0 < delta_eps < eps_init <= 1")
    total0, payload0 = feasibility(eps_init)
    if total0 is None:
        return "infeasible_at_init", math.nan, None, []
    best_payload = payload0
    lb, ub = 0.0, eps_init
    trace = []
    i = 1
    while ub - lb > delta_eps:
        th = 0.5 * (lb + ub)
        total, payload = feasibility(th)
        feasible = total is not None
        trace.append(
            {
                "i": i,
                "eps_lb": lb,
                "eps_ub": ub,
                "eps_th": th,
                "total_subcarriers": -1 if total is None else int(total),
                "feasible": feasible,
            }
        )
        if feasible:
            ub = th
            best_payload = payload
        else:
            lb = th
        i += 1
    return "optimal", ub, best_payload, trace


def plb_solve(
    scen: Scenario,
    eps_init: float = 1.0,
    delta_eps: float = 1e-9,
    inner: str = "exact",
) -> SolveReport:
    """Loss-balancing bisection for eMBB-dominated clusters.

    Every device offloads everything; the computing loss per AP is the
    constant implied by the all-offload workload upper bound, so the inner
    step decouples per device.
    """
    if not scen.typical_scenario:
        raise ValueError(
            "plb_solve requires the typical_scenario flag (eMBB-dominated "
            "load); use extended_plb_solve otherwise"
        )
    table = ErrorTable(scen)
    eps_mec = np.array(
        [_mec_eps(scen, m, scen.rho_upper_bound(m)) for m in range(scen.n_aps)]
    )

    def feasibility(eps_th):
        assignment = assign_and_allocate(eps_th, eps_mec, scen, table, inner)
        if any(a is None for a in assignment):
            return None, None
        total = sum(a[1] + a[2] for a in assignment)
        if total > scen.radio.n_max:
            return None, None
        return total, assignment

    status, eps_a, assignment, trace = _bisect(eps_init, delta_eps, feasibility)
    report = SolveReport(
        status=status,
        epsilon_a=eps_a,
        allocation=None,
        trace=trace,
        solver="plb",
        eps_init=eps_init,
        delta_eps=delta_eps,
    )
    if status != "optimal":
        return report
    alloc = Allocation.empty(scen.n_devices, scen.n_aps)
    for k, (m, n_u, n_d) in enumerate(assignment):
        alloc.x[k, m] = 1
        alloc.lambda_off[k, m] = scen.devices[k].lambda_u
        alloc.n_u[k] = n_u
        alloc.n_d[k] = n_d
    report.allocation = alloc
    report.per_device = [_loss_parts(k, alloc, scen, table) for k in range(scen.n_devices)]
    return report


def extended_plb_solve(
    scen: Scenario,
    eps_init: float = 1.0,
    delta_eps: float = 1e-9,
    inner: str = "exact",
) -> SolveReport:
    """General solver: optimize offload rates, association, then bandwidth.

    Inside each bisection step: (1) push as much traffic as the local
    server tolerates at the threshold, (2) associate devices greedily
    against running workload estimates, (3) re-solve the bandwidth with
    the final workloads.
    """
    table = ErrorTable(scen)
    eps_mec_ub = np.array(
        [_mec_eps(scen, m, scen.rho_upper_bound(m)) for m in range(scen.n_aps)]
    )
    lam_u = np.array([d.lambda_u for d in scen.devices])
    base_rho = np.array(
        [
            scen.aps[m].lambda_long * scen.compute.c_l_mean / scen.aps[m].s_rate
            for m in range(scen.n_aps)
        ]
    )

    def feasibility(eps_th):
        # step 1: max local rates
        lam_local = np.empty(scen.n_devices)
        for k, dev in enumerate(scen.devices):
            if scen.d_max_slots < dev.d_loc:
                lam_local[k] = 0.0
            else:
                lam_local[k] = max_local_rate(dev.d_loc, scen.d_max_slots, eps_th)
        offload = np.maximum(0.0, lam_u - lam_local)
        lam_local = lam_u - offload
        offloaders = [k for k in range(scen.n_devices) if offload[k] > 0.0]

        # step 2: greedy association against running workloads, using the
        # all-offload bandwidth as the radio-loss estimate
        radio_est = np.full((scen.n_devices, scen.n_aps), 1.0)
        for k in offloaders:
            for m in range(scen.n_aps):
                pair = _min_pair_exact(table.ul[k, m], table.dl[k, m], eps_th - eps_mec_ub[m])
                if pair is not None:
                    radio_est[k, m] = table.radio_sum(k, m, pair[0], pair[1])
        rho_hat = base_rho.copy()
        chosen = {}
        for k in offloaders:
            scores = [
                radio_est[k, m] + _mec_eps(scen, m, float(rho_hat[m]))
                for m in range(scen.n_aps)
            ]
            m_hat = int(np.argmin(scores))
            chosen[k] = m_hat
            rho_hat[m_hat] += offload[k] * scen.compute.c_s / scen.aps[m_hat].s_rate

        # step 3: final bandwidth under the settled workloads
        assignment = {}
        total = 0
        for k in offloaders:
            m = chosen[k]
            eps_mec_final = _mec_eps(scen, m, float(rho_hat[m]))
            pair = _min_pair_exact(table.ul[k, m], table.dl[k, m], eps_th - eps_mec_final)
            if pair is None:
                return None, None
            assignment[k] = (m, pair[0], pair[1])
            total += pair[0] + pair[1]
        if total > scen.radio.n_max:
            return None, None
        return total, (lam_local, offload, assignment)

    status, eps_a, payload, trace = _bisect(eps_init, delta_eps, feasibility)
    report = SolveReport(
        status=status,
        epsilon_a=eps_a,
        allocation=None,
        trace=trace,
        solver="extended_plb",
        eps_init=eps_init,
        delta_eps=delta_eps,
    )
    if status != "optimal":
        return report
    lam_local, offload, assignment = payload
    alloc = Allocation.empty(scen.n_devices, scen.n_aps)
    alloc.lambda_local[:] = lam_local
    for k, (m, n_u, n_d) in assignment.items():
        alloc.x[k, m] = 1
        alloc.lambda_off[k, m] = offload[k]
        alloc.n_u[k] = n_u
        alloc.n_d[k] = n_d
    report.allocation = alloc
    report.per_device = [_loss_parts(k, alloc, scen, table) for k in range(scen.n_devices)]
    return report


def assoc_comm_bottleneck(scen: Scenario, table: ErrorTable | None = None) -> np.ndarray:
    """Optimal association when decoding errors dominate: best gain wins.

    A device stays local when its fully-local violation probability does
    not exceed the best achievable radio loss (evaluated at the per-device
    subcarrier cap).
    """
    if table is None:
        table = ErrorTable(scen)
    x = np.zeros((scen.n_devices, scen.n_aps), dtype=np.int64)
    n_c = scen.radio.n_c
    for k, dev in enumerate(scen.devices):
        m_star = int(np.argmax(scen.alpha[k]))
        radio_best = table.radio_sum(k, m_star, n_c, n_c)
        if scen.d_max_slots < dev.d_loc:
            eps_loc = 1.0
        else:
            spec = LocalServerSpec(
                d_loc=dev.d_loc,
                lambda0=min(dev.lambda_u, 1.0 / dev.d_loc - 1e-12),
            )
            eps_loc = local_violation_prob(spec, scen.d_max_slots)
        if eps_loc <= radio_best:
            continue  # zero row: local processing
        x[k, m_star] = 1
    return x


@dataclass
class CompBottleneck:
    """Water-level workload target and a rounded association."""

    rho_star: float
    lambda_targets: np.ndarray  # per-AP short-packet arrival targets
    members: list[int]  # APs below the water level
    x: np.ndarray
    achieved_rho: np.ndarray


def assoc_comp_bottleneck(scen: Scenario) -> CompBottleneck:
    """Optimal association when computing dominates: balance workloads.

    Solves the water-filling level over the servers whose background load
    sits below it, then rounds to a discrete association by
    longest-processing-time greedy placement.
    """
    c_s = scen.compute.c_s
    total_short = float(sum(d.lambda_u for d in scen.devices))
    beta = np.array(
        [
            scen.aps[m].lambda_long * scen.compute.c_l_mean / scen.aps[m].s_rate
            for m in range(scen.n_aps)
        ]
    )
    s = np.array([ap.s_rate for ap in scen.aps])
    order = np.argsort(beta, kind="stable")

    def level(m_th):
        idx = order[:m_th]
        return (total_short * c_s + (beta[idx] * s[idx]).sum()) / s[idx].sum()

    def admits(m_th):
        return level(m_th) > beta[order[m_th - 1]]

    lo, hi = 1, scen.n_aps  # admits(1) always holds: the level sits above beta_1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if admits(mid):
            lo = mid
        else:
            hi = mid - 1
    m_th = lo
    rho_star = level(m_th)
    if rho_star >= 1.0:
        raise InfeasibleError(
            f"balanced workload {rho_star:.3f} >= 1: cluster cannot absorb the load"
        )
    members = [int(m) for m in order[:m_th]]
    targets = np.zeros(scen.n_aps)
    for m in members:
        targets[m] = (rho_star * s[m] - beta[m] * s[m]) / c_s

    # greedy rounding: heaviest offload first onto the least-loaded member
    x = np.zeros((scen.n_devices, scen.n_aps), dtype=np.int64)
    rho_hat = beta.copy().astype(float)
    by_load = sorted(range(scen.n_devices), key=lambda k: (-scen.devices[k].lambda_u, k))
    for k in by_load:
        m_best = min(members, key=lambda m: (rho_hat[m], m))
        x[k, m_best] = 1
        rho_hat[m_best] += scen.devices[k].lambda_u * c_s / s[m_best]
    return CompBottleneck(
        rho_star=float(rho_star),
        lambda_targets=targets,
        members=members,
        x=x,
        achieved_rho=rho_hat,
    )


# -- brute force -------------------------------------------------------------

_BRUTE_MAX_DEVICES = 4
_BRUTE_MAX_APS = 3
_BRUTE_MAX_NC = 6


def _pareto_options(table: ErrorTable, k: int, m: int, n_c: int):
    """(radio_sum, ntot) options sorted by radio_sum with prefix-min ntot."""
    sums = []
    totals = []
    for nu in range(1, n_c + 1):
        for nd in range(1, n_c + 1):
            sums.append(table.ul[k, m, nu - 1] + table.dl[k, m, nd - 1])
            totals.append(nu + nd)
    sums = np.array(sums)
    totals = np.array(totals, dtype=np.int64)
    order = np.argsort(sums, kind="stable")
    sums = sums[order]
    totals = totals[order]
    best = np.minimum.accumulate(totals)
    return sums, best


def _min_total_for(sums, best, budget):
    """Smallest subcarrier total achieving radio_sum <= budget, or None."""
    idx = np.searchsorted(sums, budget, side="right") - 1
    if idx < 0:
        return None
    return int(best[idx])


def brute_force_solve(scen: Scenario, rate_grid: int = 5) -> SolveReport:
    """Exhaustive min-max oracle on a small instance.

    Typical instances enumerate association x subcarrier grids with the
    all-offload computing loss; general instances additionally grid the
    offload rate. Guarded to stay tractable.
    """
    if (
        scen.n_devices > _BRUTE_MAX_DEVICES
        or scen.n_aps > _BRUTE_MAX_APS
        or scen.radio.n_c > _BRUTE_MAX_NC
    ):
        raise ValueError(
            f"instance too large for enumeration (limits: K<={_BRUTE_MAX_DEVICES}, "
            f"M<={_BRUTE_MAX_APS}, n_c<={_BRUTE_MAX_NC})"
        )
    table = ErrorTable(scen)
    if scen.typical_scenario:
        return _brute_typical(scen, table)
    return _brute_general(scen, table, rate_grid)


def _brute_typical(scen: Scenario, table: ErrorTable) -> SolveReport:
    n_c = scen.radio.n_c
    eps_mec = np.array(
        [_mec_eps(scen, m, scen.rho_upper_bound(m)) for m in range(scen.n_aps)]
    )
    # per-device loss/cost menu over (m, n_u, n_d)
    menus = []
    candidates = set()
    for k in range(scen.n_devices):
        losses = []
        costs = []
        for m in range(scen.n_aps):
            for nu in range(1, n_c + 1):
                for nd in range(1, n_c + 1):
                    loss = min(table.radio_sum(k, m, nu, nd) + eps_mec[m], 1.0)
                    losses.append(loss)
                    costs.append(nu + nd)
                    candidates.add(loss)
        losses = np.array(losses)
        costs = np.array(costs, dtype=np.int64)
        order = np.argsort(losses, kind="stable")
        menus.append((losses[order], np.minimum.accumulate(costs[order])))

    best_t = None
    for t in sorted(candidates):
        total = 0
        ok = True
        for losses, best in menus:
            need = _min_total_for(losses, best, t)
            if need is None:
                ok = False
                break
            total += need
        if ok and total <= scen.radio.n_max:
            best_t = t
            break
    if best_t is None:
        return SolveReport(
            status="infeasible", epsilon_a=math.nan, allocation=None, solver="brute_force"
        )
    alloc = _reconstruct_typical(scen, table, eps_mec, best_t)
    report = SolveReport(
        status="optimal", epsilon_a=float(best_t), allocation=alloc, solver="brute_force"
    )
    report.per_device = [_loss_parts(k, alloc, scen, table) for k in range(scen.n_devices)]
    return report


def _reconstruct_typical(scen, table, eps_mec, t):
    n_c = scen.radio.n_c
    alloc = Allocation.empty(scen.n_devices, scen.n_aps)
    for k in range(scen.n_devices):
        best = None
        for m in range(scen.n_aps):
            for nu in range(1, n_c + 1):
                for nd in range(1, n_c + 1):
                    if table.radio_sum(k, m, nu, nd) + eps_mec[m] <= t:
                        key = (nu + nd, m, nu, nd)
                        if best is None or key < best:
                            best = key
        _, m, nu, nd = best
        alloc.x[k, m] = 1
        alloc.lambda_off[k, m] = scen.devices[k].lambda_u
        alloc.n_u[k] = nu
        alloc.n_d[k] = nd
    return alloc


def _brute_general(scen: Scenario, table: ErrorTable, rate_grid: int) -> SolveReport:
    n_c = scen.radio.n_c
    # device choices: ("local", 0) or (m, offload_rate)
    choices = []
    for k, dev in enumerate(scen.devices):
        opts = [("local", 0.0)]
        for m in range(scen.n_aps):
            for g in range(1, rate_grid):
                opts.append((m, dev.lambda_u * g / (rate_grid - 1)))
        choices.append(opts)

    pareto = {
        (k, m): _pareto_options(table, k, m, n_c)
        for k in range(scen.n_devices)
        for m in range(scen.n_aps)
    }

    def local_eps(k, lam_local):
        dev = scen.devices[k]
        if lam_local <= 0.0:
            return 0.0
        if scen.d_max_slots < dev.d_loc:
            return 1.0
        if lam_local * dev.d_loc >= 1.0:
            return 1.0
        spec = LocalServerSpec(d_loc=dev.d_loc, lambda0=lam_local)
        return local_violation_prob(spec, scen.d_max_slots)

    best = None  # (t, combo, assignment detail)
    for combo in itertools.product(*choices):
        lam_ap = np.zeros(scen.n_aps)
        for k, (m, lam) in enumerate(combo):
            if m != "local":
                lam_ap[m] += lam
        eps_mec = np.array(
            [
                _mec_eps(scen, m, mec_workload(scen.mec_spec(m, float(lam_ap[m]))))
                for m in range(scen.n_aps)
            ]
        )
        floors = []  # per-device unavoidable loss floor under this combo
        ok = True
        for k, (m, lam) in enumerate(combo):
            e_loc = local_eps(k, scen.devices[k].lambda_u - lam)
            if m == "local":
                floors.append(e_loc)
            else:
                floors.append(max(e_loc, eps_mec[m]))
        # candidate thresholds: floors plus radio-achievable losses
        cand = set(floors)
        for k, (m, lam) in enumerate(combo):
            if m == "local":
                continue
            sums, _ = pareto[(k, m)]
            cand.update(np.minimum(sums + eps_mec[m], 1.0).tolist())
        for t in sorted(cand):
            if best is not None and t >= best[0]:
                break
            if any(f > t for f in floors):
                continue
            total = 0
            feas = True
            for k, (m, lam) in enumerate(combo):
                if m == "local":
                    continue
                sums, btot = pareto[(k, m)]
                need = _min_total_for(sums, btot, t - eps_mec[m])
                if need is None:
                    feas = False
                    break
                total += need
            if feas and total <= scen.radio.n_max:
                if best is None or t < best[0]:
                    best = (t, combo, eps_mec.copy())
                break

    if best is None:
        return SolveReport(
            status="infeasible", epsilon_a=math.nan, allocation=None, solver="brute_force"
        )
    t_star, combo, eps_mec = best
    alloc = Allocation.empty(scen.n_devices, scen.n_aps)
    for k, (m, lam) in enumerate(combo):
        alloc.lambda_local[k] = scen.devices[k].lambda_u - lam
        if m == "local":
            alloc.lambda_local[k] = scen.devices[k].lambda_u
            continue
        alloc.x[k, m] = 1
        alloc.lambda_off[k, m] = lam
        best_pair = None
        for nu in range(1, n_c + 1):
            for nd in range(1, n_c + 1):
                if table.radio_sum(k, m, nu, nd) + eps_mec[m] <= t_star:
                    key = (nu + nd, nu, nd)
                    if best_pair is None or key < best_pair:
                        best_pair = key
        alloc.n_u[k] = best_pair[1]
        alloc.n_d[k] = best_pair[2]
    report = SolveReport(
        status="optimal", epsilon_a=float(t_star), allocation=alloc, solver="brute_force"
    )
    report.per_device = [_loss_parts(k, alloc, scen, table) for k in range(scen.n_devices)]
    return report
