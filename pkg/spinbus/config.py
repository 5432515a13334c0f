"""
Run configuration loading and hashing
"""

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import yaml

from . import settings
from .exceptions.errors import ConfigError, StorageError
from .schema import Schema
from .utils.helpers import as_yaml_tree, sha256_hex

EXPERIMENTS = (
    "spectrum",
    "coupler-character",
    "flux-propagation",
    "susceptibility",
    "jeff-compare",
    "noise",
    "hierarchy-bench",
)


def build_schema() -> Schema:
    """Versioned schema of a run config; every section is optional."""
    circuit = (
        Schema("circuit")
        .add_field("coupler", str, default="sm-table-1-coupler")
        .add_field("qubit", str, default="sm-table-1-qubit")
        .add_field("fx", list, default=[], item_type=float)
        .add_field("basis_size", int, default=settings.BASIS_SIZE, minimum=20)
        .add_field("n_couplers", int, default=7, minimum=1)
        .add_field("qubit_delta", float, default=1.0, minimum=0.0)
    )
    sweep = (
        Schema("sweep")
        .add_field("ratios", list, default=[], item_type=float)
        .add_field("delta_c", float, default=5.0, minimum=0.0)
        .add_field("n_couplers", int, default=7, minimum=1)
        .add_field("j_qc", float, default=0.25)
        .add_field("delta_q", float, default=2.0, minimum=0.0)
        .add_field("source", (str, int), default="c7")
        .add_field("target", (str, int), default="c1")
        .add_field("points", int, default=settings.SWEEP_POINTS, minimum=21)
        .add_field("half_width", float, default=settings.SOURCE_OFFSET, minimum=0.0)
        .add_field("persistent_current", float, default=settings.DEFAULT_PERSISTENT_CURRENT,
                   minimum=0.0)
        .add_field("resamples", int, default=settings.SLOPE_RESAMPLES, minimum=2)
        .add_field("jitter", float, default=settings.SLOPE_JITTER, minimum=0.0)
    )
    noise = (
        Schema("noise")
        .add_field("amplitude", float, default=3.0, minimum=0.0)
        .add_field("alpha", float, default=0.9)
        .add_field("f_low", float, default=1e-3)
        .add_field("f_high", float, default=1e6)
        .add_field("n_runs", int, default=10, minimum=2)
        .add_field("include_x", bool, default=False)
        .add_field("n_levels", int, default=8, minimum=1)
    )
    solver = (
        Schema("solver")
        .add_field("method", str, default="dense", choices=("dense", "lanczos"))
        .add_field("levels", int, default=0, minimum=0)
    )
    hierarchy = (
        Schema("hierarchy")
        .add_field("group_sizes", list, default=[1, 2, 3, 2, 1], item_type=int)
        .add_field("k_ladder", list, default=[1, 2, 3, 4, 6, 8], item_type=int)
        .add_field("n_levels", int, default=4, minimum=1)
        .add_field("tolerance", float, default=1e-3, minimum=0.0)
    )
    return (
        Schema("config")
        .add_field("schema_version", int, default=settings.SCHEMA_VERSION)
        .add_field("experiment", str, choices=EXPERIMENTS)
        .add_field("seed", int, default=0, minimum=0)
        .add_field("fixture", str, default="paper-chain-homogeneous")
        .add_field("chain", dict)
        .add_field("circuit", circuit)
        .add_field("sweep", sweep)
        .add_field("noise", noise)
        .add_field("solver", solver)
        .add_field("hierarchy", hierarchy)
    )


@dataclass
class RunConfig:
    """
    Validated config plus the per-invocation options kept out of the hash.

    Attributes:
        experiment: subcommand name
        data: validated semantic fields, defaults filled in
        out_dir: output directory
        threads: worker threads for sweeps
    """

    experiment: str
    data: dict = field(default_factory=dict)
    out_dir: str = "results"
    threads: int = 1

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def config_hash(self) -> str:
        return config_hash(self.data)

    def section(self, name: str) -> dict:
        return self.data[name]


def config_hash(data: dict) -> str:
    """SHA-256 of the canonical JSON of the semantic fields."""
    return sha256_hex(data)


def read_config_file(path: str) -> dict:
    """Parse a YAML or JSON config file; JSON is picked by extension."""
    if not os.path.exists(path):
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise StorageError(f"Cannot read config {path}: {e}") from e
    try:
        if path.endswith(".json"):
            raw = json.loads(text)
        else:
            raw = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot parse config {path}: {e}") from e
    return raw or {}


def resolve_threads(flag: Optional[int] = None, environ=None) -> int:
    """--threads flag, else the SPINBUS_THREADS environment variable, else 1."""
    if flag is not None:
        value, source = flag, "--threads"
    else:
        environ = os.environ if environ is None else environ
        raw = environ.get(settings.THREADS_ENV)
        if raw is None or raw == "":
            return 1
        try:
            value, source = int(raw), settings.THREADS_ENV
        except ValueError:
            raise ConfigError(f"{settings.THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{source} must be >= 1, got {value}")
    return value


def load_config(experiment: str, raw: Optional[dict] = None, out_dir: str = "results",
                seed: Optional[int] = None, threads: Optional[int] = None) -> RunConfig:
    """
    Validate a raw config for the given subcommand.

    Raises:
        ConfigError: schema violation, experiment mismatch or unsupported version
    """
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"Unknown experiment '{experiment}', expected one of {list(EXPERIMENTS)}")
    raw = as_yaml_tree(raw or {})
    if seed is not None:
        raw["seed"] = seed
    data = build_schema().validate(raw)

    if data["schema_version"] != settings.SCHEMA_VERSION:
        raise ConfigError(
            f"Config schema_version {data['schema_version']} is not supported "
            f"(expected {settings.SCHEMA_VERSION})"
        )
    if data["experiment"] is not None and data["experiment"] != experiment:
        raise ConfigError(
            f"Config is for '{data['experiment']}' but subcommand is '{experiment}'"
        )
    data["experiment"] = experiment
    return RunConfig(experiment=experiment, data=data, out_dir=out_dir,
                     threads=resolve_threads(threads))


def load_config_file(experiment: str, path: Optional[str] = None, **options) -> RunConfig:
    raw = read_config_file(path) if path else {}
    return load_config(experiment, raw, **options)
