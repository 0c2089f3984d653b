"""Config-file parsing for the batch CLI.

The file format is plain ``key = value`` lines; blank lines and ``#``
comments are ignored. The scheduler, allocator, and precoder keys accept
comma-separated lists, and the harness runs every combination. All other
keys are scalars. The full key table with defaults lives in the README.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .channel import ChannelModelParams
from .errors import ConfigError
from .pipeline import ALLOCATORS, PRECODERS, SCHEDULERS, RunConfig
from .scheduling import ES_DEFAULT_CAP


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_str_list(text: str) -> tuple:
    return tuple(v.strip().lower() for v in text.split(",") if v.strip())


def _parse_optional_float(text: str):
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


# key -> (parser, default); None default means the key is required.
_SCHEMA = {
    "m": (int, None),
    "k": (int, None),
    "c": (int, 1),
    "n": (int, None),            # network-wide scheduled count (n = C * n_c)
    "n_c": (int, None),          # per-cluster count; alternative to n
    "snr_grid_db": (_parse_float_list, (-10.0, 0.0, 10.0, 20.0)),
    "trials": (int, 100),
    "seed": (int, 12345),
    "schedulers": (_parse_str_list, ("esg",)),
    "allocators": (_parse_str_list, ("ga",)),
    "precoders": (_parse_str_list, ("mmse",)),
    "noise_var": (float, 1.0),
    "p_budget": (float, 1.0),
    "ga_step": (_parse_optional_float, None),
    "ga_iters": (int, 200),
    "ga_step_mode": (str, "kernel"),
    "es_cap": (int, ES_DEFAULT_CAP),
    "per_param_factor": (int, 3),
    "empty_cluster": (str, "regenerate"),
    "carrier_freq_mhz": (float, 1900.0),
    "ap_height_m": (float, 15.0),
    "ue_height_m": (float, 1.5),
    "d0_m": (float, 10.0),
    "d1_m": (float, 50.0),
    "shadow_sigma_db": (float, 8.0),
    "area_side_m": (float, 400.0),
    "csi_error_fraction": (float, 0.0),
    "snr_ref_distance_m": (float, 18.0),
}

_REQUIRED = ("m", "k")

# Singular spellings accepted for the combo-list keys.
_ALIASES = {"scheduler": "schedulers", "allocator": "allocators",
            "precoder": "precoders"}


@dataclass(frozen=True)
class SweepConfig:
    """A base run configuration plus the combo lists to expand."""

    base: RunConfig
    schedulers: tuple
    allocators: tuple
    precoders: tuple

    @property
    def combos(self) -> list:
        return [(s, a, p) for s in self.schedulers
                for a in self.allocators for p in self.precoders]


def _read_pairs(path: Path) -> dict:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    pairs = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        pairs[_ALIASES.get(key, key)] = value
    return pairs


def _coerce(pairs: dict) -> dict:
    values = {}
    for key, text in pairs.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        parser, _ = _SCHEMA[key]
        try:
            values[key] = parser(text)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid value for {key!r}: {text!r} ({exc})") from exc
    for key, (_, default) in _SCHEMA.items():
        if key not in values and key not in ("n", "n_c") and key not in _REQUIRED:
            values[key] = default
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required config key {key!r}")
    return values


def _resolve_n_per_cluster(values: dict) -> int:
    c = values["c"]
    if "n_c" in values and "n" in values:
        if values["n"] != values["n_c"] * c:
            raise ConfigError(
                f"n={values['n']} and n_c={values['n_c']} disagree for c={c}")
        return values["n_c"]
    if "n_c" in values:
        return values["n_c"]
    if "n" in values:
        if values["n"] % c != 0:
            raise ConfigError(
                f"n={values['n']} must be divisible by the cluster count c={c}")
        return values["n"] // c
    raise ConfigError("missing required config key 'n' (or 'n_c')")


def build_sweep(values: dict) -> SweepConfig:
    n_per_cluster = _resolve_n_per_cluster(values)
    for name, allowed in (("schedulers", SCHEDULERS), ("allocators", ALLOCATORS),
                          ("precoders", PRECODERS)):
        for entry in values[name]:
            if entry not in allowed:
                raise ConfigError(
                    f"{name} entry {entry!r} not in {tuple(allowed)}")
        if not values[name]:
            raise ConfigError(f"{name} must not be empty")
    channel = ChannelModelParams(
        carrier_freq_mhz=values["carrier_freq_mhz"],
        ap_height_m=values["ap_height_m"],
        ue_height_m=values["ue_height_m"],
        d0_m=values["d0_m"],
        d1_m=values["d1_m"],
        shadow_sigma_db=values["shadow_sigma_db"],
        area_side_m=values["area_side_m"],
        csi_error_fraction=values["csi_error_fraction"])
    base = RunConfig(
        num_aps=values["m"], num_ues=values["k"], num_clusters=values["c"],
        n_per_cluster=n_per_cluster, channel=channel,
        scheduler=values["schedulers"][0], allocator=values["allocators"][0],
        precoder=values["precoders"][0],
        snr_grid_db=values["snr_grid_db"],
        snr_ref_distance_m=values["snr_ref_distance_m"], trials=values["trials"],
        master_seed=values["seed"], noise_var=values["noise_var"],
        p_budget_total=values["p_budget"], ga_step=values["ga_step"],
        ga_iters=values["ga_iters"], ga_step_mode=values["ga_step_mode"],
        es_cap=values["es_cap"], per_param_factor=values["per_param_factor"],
        empty_cluster=values["empty_cluster"])
    return SweepConfig(base=base, schedulers=values["schedulers"],
                       allocators=values["allocators"],
                       precoders=values["precoders"])


def parse_config(path, overrides=()) -> SweepConfig:
    """Parse a config file, apply ``key=value`` overrides, and validate.

    Validation errors raise :class:`ConfigError` naming the offending key
    and constraint. ChannelModelParams and RunConfig invariant violations
    are re-raised as config errors as well.
    """
    pairs = _read_pairs(Path(path))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like KEY=VALUE, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        key = _ALIASES.get(key.lower(), key.lower())
        if key not in _SCHEMA:
            raise ConfigError(f"unknown override key {key!r}")
        pairs[key] = value
    values = _coerce(pairs)
    try:
        return build_sweep(values)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
