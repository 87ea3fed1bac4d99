"""Scenario construction and persistence.

A Scenario bundles the cluster topology (APs with compute, devices with
traffic), the radio numerology, and the QoS budget. Large-scale gains are
derived deterministically from positions, the path-loss law and seeded
lognormal shadowing, so a saved file reproduces the exact same instance.

Units: powers enter in dBm and are converted to W on construction; rates
are packets/slot, compute in CPU cycles/slot, delays in slots.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import LinkBudget
from .queueing import MecServerSpec, ParetoWorkload

__all__ = [
    "ScenarioError",
    "ScenarioFormatError",
    "SchemaVersionError",
    "SchemaFieldError",
    "ScenarioValidationError",
    "ApSpec",
    "DeviceSpec",
    "RadioConfig",
    "ComputeConfig",
    "Scenario",
    "ScenarioConfig",
    "path_loss_db",
    "dbm_to_watt",
    "generate_scenario",
    "save_scenario",
    "load_scenario",
    "with_n_t",
    "with_s_rate_factor",
    "with_symbol_budget",
    "with_first_devices",
]

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    pass


class ScenarioFormatError(ScenarioError):
    """File is not parseable as a scenario document."""


class SchemaVersionError(ScenarioError):
    """Document declares an unsupported schema version."""


class SchemaFieldError(ScenarioError):
    """Document contains unknown or missing fields."""


class ScenarioValidationError(ScenarioError):
    """Parsed values violate a scenario invariant."""


def path_loss_db(d: float) -> float:
    """Distance-based path loss; distances below 1 m clamp to the model floor."""
    return 35.3 + 37.6 * math.log10(max(d, 1.0))


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ApSpec:
    x: float
    y: float
    s_rate: float  # cycles/slot
    lambda_long: float  # packets/slot


@dataclass(frozen=True)
class DeviceSpec:
    x: float
    y: float
    lambda_u: float  # packets/slot
    d_loc: int  # local service time, slots


@dataclass(frozen=True)
class RadioConfig:
    w0: float  # subcarrier bandwidth, Hz
    t_s: float  # slot duration, s
    n_max: int  # subcarriers in the cluster
    n_c: int  # per-device cap (coherence bandwidth / w0)
    n_t: int  # AP antennas
    p_ul_dbm: float  # device transmit power
    p_dl_dbm: float  # AP transmit power
    n0_dbm_hz: float  # noise spectral density
    b_bits: float  # packet size
    shadowing_std_db: float  # lognormal shadowing std


@dataclass(frozen=True)
class ComputeConfig:
    c_s: float  # cycles per short packet
    c0_ratio: float  # minimum long/short cycle ratio
    pareto_v: float  # long-packet tail exponent

    @property
    def pareto(self) -> ParetoWorkload:
        return ParetoWorkload(c0_ratio=self.c0_ratio, v=self.pareto_v)

    @property
    def c_l_mean(self) -> float:
        return self.pareto.mean_ratio * self.c_s


@dataclass
class Scenario:
    seed: int
    aps: list[ApSpec]
    devices: list[DeviceSpec]
    radio: RadioConfig
    compute: ComputeConfig
    d_max_ms: float
    typical_scenario: bool = False
    schema_version: int = SCHEMA_VERSION
    alpha: np.ndarray = field(init=False, repr=False)  # K x M linear gains

    def __post_init__(self):
        self._validate()
        self.alpha = self._gain_matrix()

    # -- construction ---------------------------------------------------

    def _validate(self):
        if not self.aps or not self.devices:
            raise ScenarioValidationError("need at least one AP and one device")
        r = self.radio
        if min(r.w0, r.t_s, r.b_bits) <= 0 or r.n_max < 1 or r.n_c < 1 or r.n_t < 1:
            raise ScenarioValidationError("radio parameters out of range")
        if r.shadowing_std_db < 0:
            raise ScenarioValidationError("shadowing std must be >= 0")
        c = self.compute
        if c.c_s <= 0 or c.c0_ratio < 1 or not 1.0 < c.pareto_v < 2.0:
            raise ScenarioValidationError("compute parameters out of range")
        for ap in self.aps:
            if ap.s_rate <= 0 or ap.lambda_long <= 0:
                raise ScenarioValidationError("AP rates must be positive")
        for dev in self.devices:
            if not 0.0 < dev.lambda_u < 1.0:
                raise ScenarioValidationError("device rate must be in (0, 1)")
            if dev.d_loc < 1:
                raise ScenarioValidationError("d_loc must be >= 1 slot")
        if self.d_max_slots < 3:
            raise ScenarioValidationError(
                f"delay budget of {self.d_max_slots} slots leaves no room for "
                "UL + DL + processing"
            )

    def _gain_matrix(self) -> np.ndarray:
        k, m = len(self.devices), len(self.aps)
        alpha = np.empty((k, m))
        for i, dev in enumerate(self.devices):
            for j, ap in enumerate(self.aps):
                # one shadowing stream per (device, AP) index so that gains
                # survive device subsetting and AP-count changes unchanged
                rng = np.random.Generator(
                    np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(1, i, j)))
                )
                z = rng.standard_normal() * self.radio.shadowing_std_db
                d = math.hypot(dev.x - ap.x, dev.y - ap.y)
                alpha[i, j] = 10.0 ** (-(path_loss_db(d) + z) / 10.0)
        return alpha

    # -- derived quantities ----------------------------------------------

    @property
    def n_devices(self) -> int:
        return len(self.devices)

    @property
    def n_aps(self) -> int:
        return len(self.aps)

    @property
    def d_max_slots(self) -> int:
        return int(math.floor(self.d_max_ms * 1e-3 / self.radio.t_s + 1e-9))

    @property
    def noise_per_subcarrier(self) -> float:
        return dbm_to_watt(self.n0_dbm_plus_bw())

    def n0_dbm_plus_bw(self) -> float:
        return self.radio.n0_dbm_hz + 10.0 * math.log10(self.radio.w0)

    @property
    def p_sub_ul(self) -> float:
        """UL power per subcarrier: device budget split over n_c subcarriers."""
        return dbm_to_watt(self.radio.p_ul_dbm) / self.radio.n_c

    @property
    def p_sub_dl(self) -> float:
        """DL power per subcarrier per antenna: AP budget over n_max * n_t."""
        return dbm_to_watt(self.radio.p_dl_dbm) / (self.radio.n_max * self.radio.n_t)

    def link(self, k: int, m: int, direction: str) -> LinkBudget:
        p_sub = self.p_sub_ul if direction == "uplink" else self.p_sub_dl
        return LinkBudget(
            alpha=float(self.alpha[k, m]),
            p_sub=p_sub,
            n0w0=self.noise_per_subcarrier,
            n_t=self.radio.n_t,
            t_s=self.radio.t_s,
            w0=self.radio.w0,
            b=self.radio.b_bits,
            direction=direction,
        )

    def mec_spec(self, m: int, lambda_short_sum: float) -> MecServerSpec:
        ap = self.aps[m]
        return MecServerSpec(
            s_rate=ap.s_rate,
            c_s=self.compute.c_s,
            c_l_mean=self.compute.c_l_mean,
            lambda_long=ap.lambda_long,
            lambda_short_sum=lambda_short_sum,
        )

    def rho_upper_bound(self, m: int) -> float:
        """Workload of AP m if every device offloaded everything to it."""
        total_short = sum(d.lambda_u for d in self.devices) * self.compute.c_s
        ap = self.aps[m]
        return (total_short + ap.lambda_long * self.compute.c_l_mean) / ap.s_rate

    def short_to_long_load_ratio(self) -> float:
        total_short = sum(d.lambda_u for d in self.devices) * self.compute.c_s
        min_long = min(ap.lambda_long * self.compute.c_l_mean for ap in self.aps)
        return total_short / min_long


# -- generation -----------------------------------------------------------

# Baseline system parameters; see README for the provenance of each value.
DEFAULTS = dict(
    p_ul_dbm=23.0,
    p_dl_dbm=46.0,
    t_s=0.125e-3,
    d_max_ms=1.0,
    w0=120e3,
    n_max=256,
    coherence_bw=1.2e6,
    b_bits=256.0,
    c0_ratio=10.0,
    pareto_v=1.5,
    lambda_long=0.1,
    n0_dbm_hz=-174.0,
    d_ap=500.0,
    shadowing_std_db=8.0,
    n_t=16,
    s_rate_over_cs=6.0,
    c_s=1.0,
    lambda_u_range=(0.05, 0.1),
    d_loc_cycle=(5, 6),
)

# Short traffic must be negligible next to the background load before the
# all-offload simplification applies.
TYPICAL_LOAD_RATIO = 0.1


@dataclass(frozen=True)
class ScenarioConfig:
    """Generator knobs; anything not set falls back to the baseline table."""

    n_aps: int = 4
    n_devices: int = 20
    seed: int = 0
    d_ap: float = DEFAULTS["d_ap"]
    shadowing_std_db: float = DEFAULTS["shadowing_std_db"]
    n_t: int = DEFAULTS["n_t"]
    s_rate_over_cs: float = DEFAULTS["s_rate_over_cs"]
    c_s: float = DEFAULTS["c_s"]
    lambda_long: float = DEFAULTS["lambda_long"]
    lambda_u_range: tuple = DEFAULTS["lambda_u_range"]
    d_loc_cycle: tuple = DEFAULTS["d_loc_cycle"]
    w0: float = DEFAULTS["w0"]
    t_s: float = DEFAULTS["t_s"]
    n_max: int = DEFAULTS["n_max"]
    coherence_bw: float = DEFAULTS["coherence_bw"]
    b_bits: float = DEFAULTS["b_bits"]
    c0_ratio: float = DEFAULTS["c0_ratio"]
    pareto_v: float = DEFAULTS["pareto_v"]
    p_ul_dbm: float = DEFAULTS["p_ul_dbm"]
    p_dl_dbm: float = DEFAULTS["p_dl_dbm"]
    n0_dbm_hz: float = DEFAULTS["n0_dbm_hz"]
    d_max_ms: float = DEFAULTS["d_max_ms"]


def _ap_grid(n_aps: int, d_ap: float) -> list[tuple[float, float]]:
    side = math.ceil(math.sqrt(n_aps))
    return [(d_ap * (i % side), d_ap * (i // side)) for i in range(n_aps)]


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Draw a scenario: grid APs, uniform devices, seeded traffic and gains."""
    streams = np.random.SeedSequence(cfg.seed).spawn(2)
    # stream 0: placement and traffic; stream 1 is reserved for shadowing
    # inside Scenario so that loads reproduce gains without the generator
    rng = np.random.Generator(np.random.Philox(streams[0]))

    positions = _ap_grid(cfg.n_aps, cfg.d_ap)
    s_rate = cfg.s_rate_over_cs * cfg.c_s
    aps = [ApSpec(x=x, y=y, s_rate=s_rate, lambda_long=cfg.lambda_long) for x, y in positions]

    xs = [p[0] for p in positions]
    ys = [p[1] for p in positions]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    if hi_x == lo_x:  # degenerate grid row/column: pad to a square cell
        hi_x = lo_x + cfg.d_ap
    if hi_y == lo_y:
        hi_y = lo_y + cfg.d_ap

    lam_lo, lam_hi = cfg.lambda_u_range
    devices = []
    for k in range(cfg.n_devices):
        x = rng.uniform(lo_x, hi_x)
        y = rng.uniform(lo_y, hi_y)
        lam = rng.uniform(lam_lo, lam_hi)
        d_loc = cfg.d_loc_cycle[k % len(cfg.d_loc_cycle)]
        devices.append(DeviceSpec(x=x, y=y, lambda_u=lam, d_loc=d_loc))

    n_c = int(cfg.coherence_bw / cfg.w0 + 1e-9)
    radio = RadioConfig(
        w0=cfg.w0,
        t_s=cfg.t_s,
        n_max=cfg.n_max,
        n_c=n_c,
        n_t=cfg.n_t,
        p_ul_dbm=cfg.p_ul_dbm,
        p_dl_dbm=cfg.p_dl_dbm,
        n0_dbm_hz=cfg.n0_dbm_hz,
        b_bits=cfg.b_bits,
        shadowing_std_db=cfg.shadowing_std_db,
    )
    compute = ComputeConfig(c_s=cfg.c_s, c0_ratio=cfg.c0_ratio, pareto_v=cfg.pareto_v)
    scen = Scenario(
        seed=cfg.seed,
        aps=aps,
        devices=devices,
        radio=radio,
        compute=compute,
        d_max_ms=cfg.d_max_ms,
    )
    scen.typical_scenario = scen.short_to_long_load_ratio() <= TYPICAL_LOAD_RATIO
    return scen


# -- persistence -----------------------------------------------------------

_TOP_FIELDS = {
    "schema_version",
    "seed",
    "aps",
    "devices",
    "radio",
    "compute",
    "qos",
    "typical_scenario",
}
_AP_FIELDS = {"x", "y", "s_rate", "lambda_long"}
_DEV_FIELDS = {"x", "y", "lambda_u", "d_loc"}
_RADIO_FIELDS = {
    "w0",
    "t_s",
    "n_max",
    "n_c",
    "n_t",
    "p_ul_dbm",
    "p_dl_dbm",
    "n0_dbm_hz",
    "b_bits",
    "shadowing_std_db",
}
_COMPUTE_FIELDS = {"c_s", "c_l_min_ratio", "pareto_v"}
_QOS_FIELDS = {"d_max_ms"}


def save_scenario(scen: Scenario, path) -> None:
    doc = {
        "schema_version": scen.schema_version,
        "seed": scen.seed,
        "typical_scenario": scen.typical_scenario,
        "aps": [
            {"x": a.x, "y": a.y, "s_rate": a.s_rate, "lambda_long": a.lambda_long}
            for a in scen.aps
        ],
        "devices": [
            {"x": d.x, "y": d.y, "lambda_u": d.lambda_u, "d_loc": d.d_loc}
            for d in scen.devices
        ],
        "radio": {
            "w0": scen.radio.w0,
            "t_s": scen.radio.t_s,
            "n_max": scen.radio.n_max,
            "n_c": scen.radio.n_c,
            "n_t": scen.radio.n_t,
            "p_ul_dbm": scen.radio.p_ul_dbm,
            "p_dl_dbm": scen.radio.p_dl_dbm,
            "n0_dbm_hz": scen.radio.n0_dbm_hz,
            "b_bits": scen.radio.b_bits,
            "shadowing_std_db": scen.radio.shadowing_std_db,
        },
        "compute": {
            "c_s": scen.compute.c_s,
            "c_l_min_ratio": scen.compute.c0_ratio,
            "pareto_v": scen.compute.pareto_v,
        },
        "qos": {"d_max_ms": scen.d_max_ms},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _check_fields(section: str, got: dict, allowed: set):
    unknown = set(got) - allowed
    if unknown:
        raise SchemaFieldError(f"unknown field(s) in {section}: {sorted(unknown)}")
    missing = allowed - set(got)
    if missing:
        raise SchemaFieldError(f"missing field(s) in {section}: {sorted(missing)}")


def load_scenario(path) -> Scenario:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"not a valid scenario document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"schema version {version!r} unsupported (expected {SCHEMA_VERSION})"
        )
    _check_fields("document", doc, _TOP_FIELDS)
    for i, ap in enumerate(doc["aps"]):
        _check_fields(f"aps[{i}]", ap, _AP_FIELDS)
    for i, dev in enumerate(doc["devices"]):
        _check_fields(f"devices[{i}]", dev, _DEV_FIELDS)
    _check_fields("radio", doc["radio"], _RADIO_FIELDS)
    _check_fields("compute", doc["compute"], _COMPUTE_FIELDS)
    _check_fields("qos", doc["qos"], _QOS_FIELDS)

    r = doc["radio"]
    c = doc["compute"]
    return Scenario(
        seed=int(doc["seed"]),
        aps=[ApSpec(**ap) for ap in doc["aps"]],
        devices=[
            DeviceSpec(x=d["x"], y=d["y"], lambda_u=d["lambda_u"], d_loc=int(d["d_loc"]))
            for d in doc["devices"]
        ],
        radio=RadioConfig(
            w0=r["w0"],
            t_s=r["t_s"],
            n_max=int(r["n_max"]),
            n_c=int(r["n_c"]),
            n_t=int(r["n_t"]),
            p_ul_dbm=r["p_ul_dbm"],
            p_dl_dbm=r["p_dl_dbm"],
            n0_dbm_hz=r["n0_dbm_hz"],
            b_bits=r["b_bits"],
            shadowing_std_db=r["shadowing_std_db"],
        ),
        compute=ComputeConfig(
            c_s=c["c_s"], c0_ratio=c["c_l_min_ratio"], pareto_v=c["pareto_v"]
        ),
        d_max_ms=doc["qos"]["d_max_ms"],
        typical_scenario=bool(doc["typical_scenario"]),
    )


# -- sweep helpers ----------------------------------------------------------


def with_n_t(scen: Scenario, n_t: int) -> Scenario:
    return _rebuild(scen, radio=replace(scen.radio, n_t=int(n_t)))


def with_s_rate_factor(scen: Scenario, s_rate_over_cs: float) -> Scenario:
    aps = [replace(a, s_rate=s_rate_over_cs * scen.compute.c_s) for a in scen.aps]
    return _rebuild(scen, aps=aps)


def with_symbol_budget(scen: Scenario, w0: float) -> Scenario:
    """Rescale (w0, t_s) at fixed t_s*w0 symbol budget.

    Per-slot quantities follow the slot duration: arrival rates and service
    rates scale with t_s, slot-denominated delays scale inversely.
    """
    scale = scen.radio.w0 / w0  # = t_s_new / t_s_old at fixed t_s * w0
    t_s = scen.radio.t_s * scale
    radio = replace(
        scen.radio,
        w0=w0,
        t_s=t_s,
        n_c=int(scen.radio.n_c * scen.radio.w0 / w0 + 1e-9),
    )
    aps = [
        replace(a, s_rate=a.s_rate * scale, lambda_long=a.lambda_long * scale)
        for a in scen.aps
    ]
    devices = [
        replace(
            d,
            lambda_u=d.lambda_u * scale,
            d_loc=max(1, round(d.d_loc / scale)),
        )
        for d in scen.devices
    ]
    return _rebuild(scen, radio=radio, aps=aps, devices=devices)


def with_first_devices(scen: Scenario, k: int) -> Scenario:
    if not 1 <= k <= scen.n_devices:
        raise ScenarioValidationError(
            f"cannot take {k} devices from a {scen.n_devices}-device scenario"
        )
    return _rebuild(scen, devices=scen.devices[:k])


def _rebuild(scen: Scenario, **changes) -> Scenario:
    out = Scenario(
        seed=changes.get("seed", scen.seed),
        aps=changes.get("aps", scen.aps),
        devices=changes.get("devices", scen.devices),
        radio=changes.get("radio", scen.radio),
        compute=changes.get("compute", scen.compute),
        d_max_ms=changes.get("d_max_ms", scen.d_max_ms),
        typical_scenario=scen.typical_scenario,
    )
    return out
