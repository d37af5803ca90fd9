"""Run configuration: typed container, invariant validation, strict JSON I/O.

The JSON document mirrors the field names below verbatim. Parsing is strict:
unknown keys anywhere in the document are an error, because a silently
ignored typo in, say, ``min_bit_errors`` would invalidate results invisibly.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .signal_chain import OfdmParams

DETECTOR_NAMES = ("MRC", "ZF", "MMSE", "MFB")
PERFECT_POWER_CONTROL = "perfect-power-control"

_SEED_LIMIT = 1 << 64


@dataclass(frozen=True)
class Violation:
    """One broken invariant: a stable code, the offending field, and a message."""

    code: str
    field: str
    message: str

    def __str__(self):
        return f"{self.code} ({self.field}): {self.message}"


class ConfigError(Exception):
    """Raised on invalid or unparsable configuration; carries all violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class StoppingRule:
    """Error-counting stop condition for one BER point.

    A point stops once ``min_bit_errors`` have been counted, or once
    ``max_bits`` have been simulated, whichever comes first. Defaults give a
    roughly +/-14% relative 95% interval at stop with bounded runtime.
    """

    min_bit_errors: int = 200
    max_bits: int = 20_000_000
    confidence_level: float = 0.95


@dataclass(frozen=True)
class PowerScaling:
    """Optional preset: transmit power scaled down as reference_power / M."""

    reference_power: float
    enabled: bool = False


@dataclass(frozen=True)
class RunConfig:
    """Declarative description of one sweep.

    large_scale_mode is either the string "perfect-power-control" (all users
    at unit gain) or a tuple of K nonnegative linear power gains.
    """

    num_users: int
    antenna_list: tuple
    ebno_grid_db: tuple
    detectors: tuple
    master_seed: int
    large_scale_mode: object = PERFECT_POWER_CONTROL
    ofdm: OfdmParams = field(default_factory=OfdmParams)
    stopping: StoppingRule = field(default_factory=StoppingRule)
    power_scaling: PowerScaling = None

    def d_vector(self) -> np.ndarray:
        """Linear large-scale gains as a length-K array."""
        if self.large_scale_mode == PERFECT_POWER_CONTROL:
            return np.ones(self.num_users)
        return np.asarray(self.large_scale_mode, dtype=float)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x) -> bool:
    return (_is_int(x) or isinstance(x, float)) and np.isfinite(x)


def config_violations(cfg: RunConfig):
    """Check every RunConfig invariant; return the (possibly empty) violation list."""
    out = []

    if not _is_int(cfg.num_users) or cfg.num_users < 1:
        out.append(Violation("BadUserCount", "num_users", "num_users must be an integer >= 1"))

    if not cfg.antenna_list:
        out.append(Violation("BadAntennaList", "antenna_list", "antenna_list must be non-empty"))
    else:
        for m in cfg.antenna_list:
            if not _is_int(m) or m < 1:
                out.append(Violation("BadAntennaList", "antenna_list",
                                     f"antenna count {m!r} is not an integer >= 1"))
                break
        if len(set(cfg.antenna_list)) != len(cfg.antenna_list):
            out.append(Violation("BadAntennaList", "antenna_list",
                                 "duplicate antenna counts would duplicate sweep points"))

    if not cfg.ebno_grid_db:
        out.append(Violation("EmptyGrid", "ebno_grid_db", "ebno_grid_db must be non-empty"))
    elif not all(_is_real(e) for e in cfg.ebno_grid_db):
        out.append(Violation("EmptyGrid", "ebno_grid_db", "grid entries must be finite reals"))
    elif any(b <= a for a, b in zip(cfg.ebno_grid_db, cfg.ebno_grid_db[1:])):
        out.append(Violation("NonMonotoneGrid", "ebno_grid_db",
                             "ebno_grid_db must be strictly increasing"))

    if not cfg.detectors:
        out.append(Violation("EmptyDetectors", "detectors", "detectors must be non-empty"))
    else:
        for d in cfg.detectors:
            if d not in DETECTOR_NAMES:
                out.append(Violation("UnknownDetector", "detectors",
                                     f"unknown detector {d!r}; expected subset of {DETECTOR_NAMES}"))
        if len(set(cfg.detectors)) != len(cfg.detectors):
            out.append(Violation("UnknownDetector", "detectors", "duplicate detector names"))

    needs_full_rank = any(d in ("ZF", "MMSE") for d in cfg.detectors)
    if needs_full_rank and _is_int(cfg.num_users) and cfg.antenna_list:
        bad = [m for m in cfg.antenna_list if _is_int(m) and m < cfg.num_users]
        if bad:
            out.append(Violation("ZfRequiresMGeqK", "antenna_list",
                                 f"ZF/MMSE need M >= K; offending antenna counts: {bad}"))

    if cfg.large_scale_mode != PERFECT_POWER_CONTROL:
        d = cfg.large_scale_mode
        if not isinstance(d, tuple) or not d or not all(_is_real(x) and x >= 0 for x in d):
            out.append(Violation("BadLargeScale", "large_scale_mode",
                                 "explicit d-vector must be a tuple of nonnegative reals"))
        elif _is_int(cfg.num_users) and len(d) != cfg.num_users:
            out.append(Violation("BadLargeScale", "large_scale_mode",
                                 f"d-vector length {len(d)} != num_users {cfg.num_users}"))

    for msg in cfg.ofdm.violations():
        out.append(Violation("BadOfdm", "ofdm", msg))

    st = cfg.stopping
    if not _is_int(st.min_bit_errors) or st.min_bit_errors < 1:
        out.append(Violation("BadStopping", "stopping.min_bit_errors",
                             "min_bit_errors must be an integer >= 1"))
    if not _is_int(st.max_bits) or st.max_bits < max(st.min_bit_errors, 1):
        out.append(Violation("BadStopping", "stopping.max_bits",
                             "max_bits must be an integer >= min_bit_errors"))
    if not _is_real(st.confidence_level) or not (0.0 < st.confidence_level < 1.0):
        out.append(Violation("BadConfidenceLevel", "stopping.confidence_level",
                             "confidence_level must lie strictly inside (0, 1)"))

    if not _is_int(cfg.master_seed) or not (0 <= cfg.master_seed < _SEED_LIMIT):
        out.append(Violation("BadSeed", "master_seed",
                             "master_seed must be an integer in [0, 2^64)"))

    ps = cfg.power_scaling
    if ps is not None:
        if not _is_real(ps.reference_power) or ps.reference_power <= 0:
            out.append(Violation("BadPowerScaling", "power_scaling.reference_power",
                                 "reference_power must be a positive real"))
        if not isinstance(ps.enabled, bool):
            out.append(Violation("BadPowerScaling", "power_scaling.enabled",
                                 "enabled must be a boolean"))

    return out


def validate_config(cfg: RunConfig) -> RunConfig:
    """Return ``cfg`` unchanged if every invariant holds, else raise ConfigError."""
    violations = config_violations(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


# ---------------------------------------------------------------------------
# strict JSON (de)serialization
# ---------------------------------------------------------------------------

def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError([Violation("BadDocument", where, "expected a JSON object")])
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError([
            Violation("UnknownField", f"{where}.{k}" if where else k, "unknown field")
            for k in unknown
        ])


def config_from_dict(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON document (strict, then validated)."""
    _check_keys(doc, ("num_users", "antenna_list", "ebno_grid_db", "detectors",
                      "large_scale_mode", "ofdm", "stopping", "master_seed",
                      "power_scaling"), "")

    missing = [k for k in ("num_users", "antenna_list", "ebno_grid_db",
                           "detectors", "master_seed") if k not in doc]
    if missing:
        raise ConfigError([Violation("MissingField", k, "required field missing")
                           for k in missing])

    mode = doc.get("large_scale_mode", PERFECT_POWER_CONTROL)
    if isinstance(mode, dict):
        _check_keys(mode, ("d",), "large_scale_mode")
        if "d" not in mode:
            raise ConfigError([Violation("MissingField", "large_scale_mode.d",
                                         "explicit mode requires a d vector")])
        mode = tuple(mode["d"])
    elif mode != PERFECT_POWER_CONTROL:
        raise ConfigError([Violation(
            "BadLargeScale", "large_scale_mode",
            f'expected "{PERFECT_POWER_CONTROL}" or an object {{"d": [...]}}')])

    ofdm_doc = doc.get("ofdm", {})
    _check_keys(ofdm_doc, ("num_subcarriers", "cyclic_prefix"), "ofdm")
    ofdm = OfdmParams(**{**{"num_subcarriers": 2048, "cyclic_prefix": 128}, **ofdm_doc})

    stop_doc = doc.get("stopping", {})
    _check_keys(stop_doc, ("min_bit_errors", "max_bits", "confidence_level"), "stopping")
    stopping = StoppingRule(**stop_doc)

    ps = None
    if doc.get("power_scaling") is not None:
        ps_doc = doc["power_scaling"]
        _check_keys(ps_doc, ("reference_power", "enabled"), "power_scaling")
        if "reference_power" not in ps_doc:
            raise ConfigError([Violation("MissingField", "power_scaling.reference_power",
                                         "required field missing")])
        ps = PowerScaling(reference_power=ps_doc["reference_power"],
                          enabled=ps_doc.get("enabled", False))

    def _tup(x, where):
        if not isinstance(x, list):
            raise ConfigError([Violation("BadDocument", where, "expected a JSON array")])
        return tuple(x)

    cfg = RunConfig(
        num_users=doc["num_users"],
        antenna_list=_tup(doc["antenna_list"], "antenna_list"),
        ebno_grid_db=_tup(doc["ebno_grid_db"], "ebno_grid_db"),
        detectors=_tup(doc["detectors"], "detectors"),
        master_seed=doc["master_seed"],
        large_scale_mode=mode,
        ofdm=ofdm,
        stopping=stopping,
        power_scaling=ps,
    )
    return validate_config(cfg)


def config_to_dict(cfg: RunConfig) -> dict:
    """Inverse of config_from_dict; round-trips through JSON exactly."""
    mode = cfg.large_scale_mode
    doc = {
        "num_users": cfg.num_users,
        "antenna_list": list(cfg.antenna_list),
        "ebno_grid_db": list(cfg.ebno_grid_db),
        "detectors": list(cfg.detectors),
        "large_scale_mode": mode if mode == PERFECT_POWER_CONTROL else {"d": list(mode)},
        "ofdm": {"num_subcarriers": cfg.ofdm.num_subcarriers,
                 "cyclic_prefix": cfg.ofdm.cyclic_prefix},
        "stopping": {"min_bit_errors": cfg.stopping.min_bit_errors,
                     "max_bits": cfg.stopping.max_bits,
                     "confidence_level": cfg.stopping.confidence_level},
        "master_seed": cfg.master_seed,
    }
    if cfg.power_scaling is not None:
        doc["power_scaling"] = {"reference_power": cfg.power_scaling.reference_power,
                                "enabled": cfg.power_scaling.enabled}
    return doc


def loads_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([Violation("BadDocument", "", f"invalid JSON: {exc}")]) from exc
    return config_from_dict(doc)


def load_config(path) -> RunConfig:
    """Read and strictly parse a JSON run configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_config(fh.read())


def dumps_config(cfg: RunConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)
