"""Experiment configuration: flat YAML schema, validation, and hashing."""

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import yaml

from .exceptions import InvalidInput
from .model import LoadingScheme

KNOWN_METHODS = ("heterojive", "ajive", "stacksvd")
KNOWN_WEIGHT_SOURCES = ("data_driven", "oracle", "equal", "fixed")


class ConfigError(InvalidInput):
    """A configuration file or value is malformed."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, normalized experiment description.

    All fields are plain scalars or tuples so instances pickle cleanly and
    hash stably. ``d``, ``r_k``, and ``s`` stay scalar when given as
    scalars and broadcast at run time, so one config can serve a whole
    grid of view counts.
    """

    n: int
    d: object  # int or tuple of int
    r: int
    r_k: object  # int or tuple of int
    k_grid: tuple
    scheme: str
    s: object  # float or tuple of float
    gamma: float
    theta: Optional[float]
    sigma: Optional[float]
    sigma_lo: Optional[float]
    sigma_hi: Optional[float]
    replicates: int
    seed: int
    methods: tuple
    weight_source: str
    weights: Optional[tuple]
    t_max: int
    tol: float
    refresh_each_iter: bool

    @property
    def single_k(self):
        """The view count when the grid has exactly one entry."""
        if len(self.k_grid) != 1:
            raise ConfigError(
                f"this operation needs a single K, but K_grid has "
                f"{len(self.k_grid)} entries"
            )
        return self.k_grid[0]

    def to_canonical_dict(self):
        """Normalized plain-value mapping; the input to the config hash."""
        return {
            "n": self.n,
            "d": list(self.d) if isinstance(self.d, tuple) else self.d,
            "r": self.r,
            "r_k": list(self.r_k) if isinstance(self.r_k, tuple) else self.r_k,
            "K_grid": list(self.k_grid),
            "scheme": self.scheme,
            "s": list(self.s) if isinstance(self.s, tuple) else self.s,
            "gamma": self.gamma,
            "theta": self.theta,
            "sigma": self.sigma,
            "sigma_lo": self.sigma_lo,
            "sigma_hi": self.sigma_hi,
            "replicates": self.replicates,
            "seed": self.seed,
            "methods": list(self.methods),
            "weight_source": self.weight_source,
            "weights": None if self.weights is None else list(self.weights),
            "t_max": self.t_max,
            "tol": self.tol,
            "refresh_each_iter": self.refresh_each_iter,
        }


def config_hash(config):
    """Stable hex digest of a normalized config.

    Two configs hash equal exactly when every normalized field is equal;
    writing a default explicitly does not change the hash.
    """
    payload = json.dumps(
        config.to_canonical_dict(), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def cell_seed(master_seed, method, n_views, replicate):
    """Deterministic per-cell seed, stable across runs and processes.

    First 8 bytes of sha256 over the cell identity, so any subset of cells
    can be recomputed independently with identical streams.
    """
    text = f"{int(master_seed)}|{method}|{int(n_views)}|{int(replicate)}"
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _want_int(raw, name, minimum=None, maximum=None):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {raw}")
    if maximum is not None and raw > maximum:
        raise ConfigError(f"{name} must be <= {maximum}, got {raw}")
    return raw


def _want_float(raw, name, minimum=None, strict_min=None):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{name} must be a number, got {raw!r}")
    value = float(raw)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    if strict_min is not None and value <= strict_min:
        raise ConfigError(f"{name} must be > {strict_min}, got {value}")
    return value


def _want_bool(raw, name):
    if not isinstance(raw, bool):
        raise ConfigError(f"{name} must be true or false, got {raw!r}")
    return raw


def _want_int_or_list(raw, name, minimum):
    if isinstance(raw, list):
        if not raw:
            raise ConfigError(f"{name} must not be an empty list")
        return tuple(_want_int(v, f"{name}[{i}]", minimum=minimum) for i, v in enumerate(raw))
    return _want_int(raw, name, minimum=minimum)


def _want_float_or_list(raw, name, strict_min=None, minimum=None):
    if isinstance(raw, list):
        if not raw:
            raise ConfigError(f"{name} must not be an empty list")
        return tuple(
            _want_float(v, f"{name}[{i}]", minimum=minimum, strict_min=strict_min)
            for i, v in enumerate(raw)
        )
    return _want_float(raw, name, minimum=minimum, strict_min=strict_min)


_KNOWN_KEYS = {
    "n", "d", "r", "r_k", "K", "K_grid", "scheme", "s", "gamma", "theta",
    "sigma", "sigma_lo", "sigma_hi", "replicates", "seed", "methods",
    "weight_source", "weights", "t_max", "tol", "refresh_each_iter",
}


def parse_config_mapping(raw):
    """Validate a flat mapping of config fields into an ExperimentConfig.

    Unknown keys are rejected by name; every type or range violation names
    the offending field.
    """
    if not isinstance(raw, dict):
        raise ConfigError(
            f"config must be a flat mapping of fields to values, got {type(raw).__name__}"
        )
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for required in ("n", "d", "r"):
        if required not in raw:
            raise ConfigError(f"missing required config key: {required}")

    n = _want_int(raw["n"], "n", minimum=1)
    d = _want_int_or_list(raw["d"], "d", minimum=1)
    r = _want_int(raw["r"], "r", minimum=1)
    r_k = _want_int_or_list(raw.get("r_k", r), "r_k", minimum=0)

    if "K" in raw and "K_grid" in raw:
        raise ConfigError("give either K or K_grid, not both")
    if "K_grid" in raw:
        grid_raw = raw["K_grid"]
        if not isinstance(grid_raw, list) or not grid_raw:
            raise ConfigError("K_grid must be a nonempty list of integers")
        k_grid = tuple(_want_int(v, f"K_grid[{i}]", minimum=1) for i, v in enumerate(grid_raw))
        if any(b <= a for a, b in zip(k_grid, k_grid[1:])):
            raise ConfigError("K_grid must be strictly ascending")
    elif "K" in raw:
        k_grid = (_want_int(raw["K"], "K", minimum=1),)
    else:
        raise ConfigError("missing required config key: K (or K_grid)")

    scheme_raw = raw.get("scheme", "random")
    if not isinstance(scheme_raw, str):
        raise ConfigError(f"scheme must be a string, got {scheme_raw!r}")
    try:
        scheme = LoadingScheme.parse(scheme_raw).value
    except InvalidInput as exc:
        raise ConfigError(f"scheme: {exc}") from exc

    s = _want_float_or_list(raw.get("s", 1.0), "s", strict_min=0.0)
    gamma = _want_float(raw.get("gamma", 1.0), "gamma", minimum=0.0)

    theta_raw = raw.get("theta", None)
    if theta_raw is None:
        theta = None
    else:
        theta = _want_float(theta_raw, "theta", minimum=0.0)
        if theta > 1.0:
            raise ConfigError(f"theta must be in [0, 1], got {theta}")

    has_fixed = "sigma" in raw
    has_range = "sigma_lo" in raw or "sigma_hi" in raw
    if has_fixed and has_range:
        raise ConfigError("give either sigma or the sigma_lo/sigma_hi range, not both")
    if has_range:
        if "sigma_lo" not in raw or "sigma_hi" not in raw:
            raise ConfigError("sigma_lo and sigma_hi must be given together")
        sigma_lo = _want_float(raw["sigma_lo"], "sigma_lo", minimum=0.0)
        sigma_hi = _want_float(raw["sigma_hi"], "sigma_hi", minimum=0.0)
        if sigma_hi < sigma_lo:
            raise ConfigError(
                f"sigma_hi ({sigma_hi}) must be >= sigma_lo ({sigma_lo})"
            )
        sigma = None
    else:
        sigma = _want_float(raw.get("sigma", 0.0), "sigma", minimum=0.0)
        sigma_lo = None
        sigma_hi = None

    replicates = _want_int(raw.get("replicates", 1), "replicates", minimum=1)
    seed = _want_int(raw.get("seed", 0), "seed", minimum=0)

    methods_raw = raw.get("methods", list(KNOWN_METHODS))
    if isinstance(methods_raw, str):
        methods_raw = [methods_raw]
    if not isinstance(methods_raw, list) or not methods_raw:
        raise ConfigError("methods must be a nonempty list of method names")
    methods = []
    for m in methods_raw:
        if m not in KNOWN_METHODS:
            raise ConfigError(
                f"unknown method {m!r}; valid methods: {', '.join(KNOWN_METHODS)}"
            )
        if m not in methods:
            methods.append(m)

    weight_source = raw.get("weight_source", "data_driven")
    if weight_source not in KNOWN_WEIGHT_SOURCES:
        raise ConfigError(
            f"unknown weight_source {weight_source!r}; valid sources: "
            f"{', '.join(KNOWN_WEIGHT_SOURCES)}"
        )
    weights_raw = raw.get("weights", None)
    if weight_source == "fixed":
        if weights_raw is None:
            raise ConfigError("weight_source 'fixed' requires the weights key")
        weights = _want_float_or_list(weights_raw, "weights", minimum=0.0)
        if not isinstance(weights, tuple):
            raise ConfigError("weights must be a list of numbers")
    elif weights_raw is not None:
        raise ConfigError("the weights key requires weight_source 'fixed'")
    else:
        weights = None

    t_max = _want_int(raw.get("t_max", 20), "t_max", minimum=1)
    tol = _want_float(raw.get("tol", 1e-8), "tol", strict_min=0.0)
    refresh = _want_bool(raw.get("refresh_each_iter", False), "refresh_each_iter")

    return ExperimentConfig(
        n=n,
        d=d,
        r=r,
        r_k=r_k,
        k_grid=k_grid,
        scheme=scheme,
        s=s,
        gamma=gamma,
        theta=theta,
        sigma=sigma,
        sigma_lo=sigma_lo,
        sigma_hi=sigma_hi,
        replicates=replicates,
        seed=seed,
        methods=tuple(methods),
        weight_source=weight_source,
        weights=weights,
        t_max=t_max,
        tol=tol,
        refresh_each_iter=refresh,
    )


def load_config(path):
    """Parse and validate a YAML config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse YAML in {path}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"config file {path} is empty")
    return parse_config_mapping(raw)
