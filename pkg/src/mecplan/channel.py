"""Finite-blocklength radio model.

Implements the normal approximation of the achievable rate over a
quasi-static flat-fading channel and the resulting decoding error
probabilities, plus the fading average used by the planners. All
probabilities are per transmitted packet; one packet occupies one slot
on ``n_sub`` subcarriers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import erfc, erfcinv, gammaln
from scipy.stats import gamma as _gamma_dist

__all__ = [
    "LinkBudget",
    "FadingModel",
    "QuadratureError",
    "q_func",
    "q_inv",
    "achievable_rate",
    "conditional_error",
    "avg_decoding_error",
    "min_subcarriers",
]

# Arguments beyond +-40 correspond to probabilities < 1e-300; they carry no
# information at double precision and only risk NaN propagation.
_Q_ARG_CLAMP = 40.0

_SQRT2 = np.sqrt(2.0)


class QuadratureError(RuntimeError):
    """Fading average did not converge within the node budget."""


@dataclass(frozen=True)
class LinkBudget:
    """Radio parameters of one device-AP link in one direction.

    alpha      large-scale channel gain (linear)
    p_sub      transmit power per subcarrier per antenna (W)
    n0w0       noise power per subcarrier (W)
    n_t        number of AP antennas
    t_s        slot duration (s)
    w0         subcarrier bandwidth (Hz)
    b          packet size (bits)
    direction  "uplink" or "downlink"
    """

    alpha: float
    p_sub: float
    n0w0: float
    n_t: int
    t_s: float
    w0: float
    b: float
    direction: str = "uplink"

    def __post_init__(self):
        if self.alpha <= 0 or self.p_sub <= 0 or self.n0w0 <= 0:
            raise ValueError("alpha, p_sub and n0w0 must be positive")
        if self.n_t < 1:
            raise ValueError("n_t must be >= 1")
        if self.t_s <= 0 or self.w0 <= 0 or self.b <= 0:
            raise ValueError("t_s, w0 and b must be positive")
        if self.direction not in ("uplink", "downlink"):
            raise ValueError(f"unknown direction {self.direction!r}")

    def snr(self, g):
        """Receive SNR for small-scale power gain ``g``."""
        return self.alpha * np.asarray(g, dtype=float) * self.p_sub / self.n0w0


@dataclass(frozen=True)
class FadingModel:
    """Small-scale power gain model.

    ``deterministic`` fixes the gain to ``g``. ``gamma`` models per-branch
    Rayleigh fading combined over ``shape`` antennas (maximum-ratio
    combining), i.e. Gamma(shape, 1) with unit mean per branch.
    """

    kind: str
    g: float = 1.0
    shape: int = 1

    @classmethod
    def deterministic(cls, g: float) -> "FadingModel":
        if g <= 0:
            raise ValueError("deterministic gain must be positive")
        return cls(kind="deterministic", g=g)

    @classmethod
    def gamma(cls, shape: int) -> "FadingModel":
        if shape < 1:
            raise ValueError("gamma shape must be >= 1")
        return cls(kind="gamma", shape=shape)


def q_func(x):
    """Gaussian tail probability Q(x), clamped against underflow NaNs."""
    x = np.clip(np.asarray(x, dtype=float), -_Q_ARG_CLAMP, _Q_ARG_CLAMP)
    out = 0.5 * erfc(x / _SQRT2)
    if out.ndim == 0:
        return float(out)
    return out


def q_inv(eps: float) -> float:
    """Inverse of the Gaussian Q-function on (0, 1)."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"q_inv requires eps in (0, 1), got {eps}")
    return float(_SQRT2 * erfcinv(2.0 * eps))


def achievable_rate(g: float, n_sub: int, link: LinkBudget, eps: float) -> float:
    """Normal-approximation rate (bits/s) at decoding error target ``eps``.

    R = (n W0 / ln 2) [ln(1 + snr) - sqrt(V / (Ts n W0)) Qinv(eps)] with
    dispersion V = 1 - 1/(1+snr)^2. May be negative for very weak links;
    returned unmodified.
    """
    if g <= 0:
        raise ValueError("g must be positive")
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    snr = link.snr(g)
    uses = link.t_s * n_sub * link.w0  # channel uses in one slot
    v = 1.0 - 1.0 / (1.0 + snr) ** 2
    shannon = np.log1p(snr)
    penalty = np.sqrt(v / uses) * q_inv(eps)
    return float(n_sub * link.w0 / np.log(2.0) * (shannon - penalty))


def conditional_error(g, n_sub: int, link: LinkBudget):
    """Decoding error probability conditioned on small-scale gain ``g``.

    Obtained by pinning the rate to b bits per slot in the normal
    approximation. Vectorized over ``g``.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    snr = link.snr(g)
    uses = link.t_s * n_sub * link.w0
    v = 1.0 - 1.0 / (1.0 + snr) ** 2
    arg = np.sqrt(uses / v) * (np.log1p(snr) - link.b * np.log(2.0) / uses)
    return q_func(arg)


# Quadrature over the Gamma(shape, 1) fading law: composite Gauss-Legendre
# on equal-mass panels, with extra panels pinned to the decoding-error
# transition (the integrand is a sharp sigmoid in g whose center has a
# closed form). Panel doubling verifies convergence.
_PANEL_SCHEDULE = (32, 64, 128)
_PANEL_NODES = 16
_TRANSITION_PANELS = 32
_QUANTILE_TAIL = 1e-14
_ARG_SPAN = 44.0  # covers the Q-function argument beyond its clamp
_REL_TOL = 1e-9
_ABS_TOL = 1e-12


@lru_cache(maxsize=8)
def _legendre_rule(n_nodes: int):
    return leggauss(n_nodes)


@lru_cache(maxsize=256)
def _gamma_quantile_edges(shape: int, n_panels: int):
    qs = np.linspace(_QUANTILE_TAIL, 1.0 - _QUANTILE_TAIL, n_panels + 1)
    return _gamma_dist(shape).ppf(qs)


def _gamma_pdf(g, shape: int):
    return np.exp((shape - 1.0) * np.log(g) - g - gammaln(shape))


def _transition_window(link: LinkBudget, n_sub: float):
    """Gain interval over which the conditional error swings 1 -> 0."""
    snr_scale = link.alpha * link.p_sub / link.n0w0
    uses = link.t_s * n_sub * link.w0
    bits_per_use = link.b * np.log(2.0) / uses
    g_center = np.expm1(bits_per_use) / snr_scale
    v_center = 1.0 - np.exp(-2.0 * bits_per_use)
    slope = np.sqrt(uses / v_center) * snr_scale / (1.0 + snr_scale * g_center)
    half = _ARG_SPAN / slope
    return g_center - half, g_center + half


def _gamma_average(fn, link: LinkBudget, n_sub: float, shape: int) -> float:
    """E[fn(g)] over g ~ Gamma(shape, 1), resolving the error transition."""
    xg, wg = _legendre_rule(_PANEL_NODES)
    t_lo, t_hi = _transition_window(link, n_sub)
    prev = None
    for n_panels in _PANEL_SCHEDULE:
        edges = _gamma_quantile_edges(shape, n_panels)
        lo, hi = max(edges[0], t_lo), min(edges[-1], t_hi)
        if lo < hi:
            cuts = np.concatenate(
                [edges, np.linspace(lo, hi, _TRANSITION_PANELS + 1)]
            )
            edges = np.unique(cuts)
        a, b = edges[:-1], edges[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        g = mid[:, None] + half[:, None] * xg[None, :]
        w = half[:, None] * wg[None, :] * _gamma_pdf(g, shape)
        val = float((w * fn(g)).sum())
        if prev is not None:
            delta = abs(val - prev)
            if delta <= _ABS_TOL or delta <= _REL_TOL * max(abs(val), abs(prev)):
                return min(max(val, 0.0), 1.0)
        prev = val
    raise QuadratureError(
        f"fading average did not converge (n_sub={n_sub}, shape={shape}, "
        f"last value {prev:.6e} after panel schedule {_PANEL_SCHEDULE})"
    )


def avg_decoding_error(n_sub: int, link: LinkBudget, fading: FadingModel) -> float:
    """Decoding error probability averaged over the fading distribution.

    Deterministic fading reduces exactly to :func:`conditional_error`;
    gamma fading is integrated as above with panel doubling until the
    value moves by less than 1e-9 relative (1e-12 absolute floor, below
    which probabilities are indistinguishable at the planner's scale).
    """
    if fading.kind == "deterministic":
        return float(conditional_error(fading.g, n_sub, link))
    if fading.kind != "gamma":
        raise ValueError(f"unknown fading kind {fading.kind!r}")
    if fading.shape != link.n_t:
        raise ValueError(
            f"gamma fading shape {fading.shape} != link antenna count {link.n_t}"
        )
    return _gamma_average(
        lambda g: conditional_error(g, n_sub, link), link, n_sub, fading.shape
    )


def min_subcarriers(
    eps_target: float, link: LinkBudget, fading: FadingModel, n_c: int
) -> int | None:
    """Smallest subcarrier count in [1, n_c] meeting ``eps_target``.

    Returns None when even ``n_c`` subcarriers miss the target.
    """
    if not 0.0 < eps_target < 1.0:
        raise ValueError("eps_target must be in (0, 1)")
    if n_c < 1:
        raise ValueError("n_c must be >= 1")
    for n in range(1, n_c + 1):
        if avg_decoding_error(n, link, fading) <= eps_target:
            return n
    return None
