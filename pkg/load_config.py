import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from errors import ConfigError
from estimators.persistence import MIN_REPLICAS
from local_time import DxPolicy
from scenery_objects import Family, ProcessSpec

# directory that contains the bundled experiment files
CONFIGS_DIR = Path(__file__).resolve().parent / "configs"

MAX_SEED = 2 ** 64 - 1
# smallest budgets the estimators accept
MIN_COUNTS = {"n_replicas": MIN_REPLICAS, "n_ks_replicas": 2}


def _dyadic(lo, hi):
    return [float(2 ** k) for k in range(lo, hi + 1)]


@dataclass
class ExperimentConfig:
    """One experiment: the driving process, grids, budgets and output location."""

    family: str
    delta: Optional[float] = None
    zeta: float = 0.0
    hurst: Optional[float] = None
    dt: float = 2.0 ** -6
    n_steps: Optional[int] = None
    T_grid: list = field(default_factory=lambda: _dyadic(4, 12))
    n_replicas: int = 20_000
    n_sim_replicas: int = 10
    master_seed: int = 0
    barrier: float = 1.0
    dx_kappa: float = 0.5
    dx_floor: float = 1e-6
    dx: Optional[float] = None
    out_dir: str = "out"
    workers: int = 1
    shards: int = 8
    molchan_T_grid: list = field(default_factory=lambda: _dyadic(8, 12)[::2])
    molchan_dt: float = 2.0 ** -6
    n_molchan_replicas: int = 2_000
    n_tail_replicas: int = 100_000
    n_ks_replicas: int = 10_000
    ks_dt: float = 2.0 ** -6
    n_check_paths: int = 10_000
    n_slepian_paths: int = 50
    n_slepian_sceneries: int = 1_000
    max_x_grid: list = field(default_factory=lambda: [0.5, 1.0, 2.0])

    def spec(self):
        return ProcessSpec(self.family, delta=self.delta, zeta=self.zeta, hurst=self.hurst)

    def dx_policy(self):
        return DxPolicy(self.dx_kappa, self.dx_floor, self.dx)

    def steps(self):
        """Steps of a simulate replica: n_steps, or the largest horizon of T_grid."""
        if self.n_steps is not None:
            return self.n_steps
        return int(round(max(self.T_grid) / self.dt))

    def to_dict(self):
        return asdict(self)

    def with_overrides(self, seed=None, workers=None, out=None):
        data = self.to_dict()
        if seed is not None:
            data["master_seed"] = seed
        if workers is not None:
            data["workers"] = workers
        if out is not None:
            data["out_dir"] = str(out)
        return config_from_dict(data)


KEYS = [f.name for f in fields(ExperimentConfig)]


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_count(v, minimum=1):
    return isinstance(v, int) and not isinstance(v, bool) and v >= minimum


def _check_time_grid(grid, dt):
    if not isinstance(grid, list) or not grid or not all(_is_number(t) for t in grid):
        return "must be a nonempty list of numbers"
    if grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        return "must be positive and strictly increasing"
    if _is_number(dt) and dt > 0:
        for t in grid:
            k = round(t / dt)
            if k < 1 or abs(k * dt - t) > 1e-9 * t:
                return f"{t} is not a positive multiple of dt={dt}"
    return None


def _process_problems(data):
    problems = {}
    try:
        family = Family(data.get("family"))
    except ValueError:
        problems["family"] = f"must be one of {[f.value for f in Family]}"
        return problems
    if family == Family.STABLE_LEVY:
        delta = data.get("delta")
        if not _is_number(delta) or not (1.0 < delta <= 2.0):
            problems["delta"] = f"stability index must lie in (1, 2], got {delta}"
        zeta = data.get("zeta", 0.0)
        if not _is_number(zeta) or not (-1.0 <= zeta <= 1.0):
            problems["zeta"] = f"skewness must lie in [-1, 1], got {zeta}"
    if family == Family.FRACTIONAL_BM:
        hurst = data.get("hurst")
        if not _is_number(hurst) or not (0.0 < hurst < 1.0):
            problems["hurst"] = f"Hurst index must lie in (0, 1), got {hurst}"
    return problems


def config_from_dict(data):
    """Validate a flat key-value mapping; every problem is reported in one ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError({"<root>": "config must be a JSON object"})
    problems = {k: "unknown key" for k in data if k not in KEYS}
    if "family" not in data:
        problems["family"] = "required"
    else:
        problems.update(_process_problems(data))

    merged = {**ExperimentConfig("brownian").to_dict(), **{k: v for k, v in data.items() if k in KEYS}}

    for key in ("dt", "molchan_dt", "ks_dt", "dx_kappa", "dx_floor"):
        if not _is_number(merged[key]) or merged[key] <= 0:
            problems[key] = "must be a positive number"
    if merged["dx"] is not None and (not _is_number(merged["dx"]) or merged["dx"] <= 0):
        problems["dx"] = "must be a positive number or null"
    if merged["n_steps"] is not None and not _is_count(merged["n_steps"]):
        problems["n_steps"] = "must be a positive integer or null"
    for key in (
        "n_replicas",
        "n_sim_replicas",
        "workers",
        "shards",
        "n_molchan_replicas",
        "n_tail_replicas",
        "n_ks_replicas",
        "n_check_paths",
        "n_slepian_paths",
        "n_slepian_sceneries",
    ):
        if not _is_count(merged[key]):
            problems[key] = "must be a positive integer"
    for key, minimum in MIN_COUNTS.items():
        if key not in problems and not _is_count(merged[key], minimum):
            problems[key] = f"must be at least {minimum}"
    if not _is_count(merged["master_seed"], 0) or merged["master_seed"] > MAX_SEED:
        problems["master_seed"] = "must be an unsigned 64-bit integer"
    if not _is_number(merged["zeta"]):
        problems.setdefault("zeta", "must be a number")
    if not _is_number(merged["barrier"]):
        problems["barrier"] = "must be a finite number"
    for key, dt_key in (("T_grid", "dt"), ("molchan_T_grid", "molchan_dt")):
        reason = _check_time_grid(merged[key], merged[dt_key])
        if reason:
            problems[key] = reason
    if "molchan_T_grid" not in problems and len(merged["molchan_T_grid"]) < 2:
        problems["molchan_T_grid"] = "needs at least two horizons"
    xs = merged["max_x_grid"]
    if not isinstance(xs, list) or not xs or not all(_is_number(x) and x >= 0 for x in xs):
        problems["max_x_grid"] = "must be a nonempty list of nonnegative numbers"
    if not isinstance(merged["out_dir"], str) or not merged["out_dir"]:
        problems["out_dir"] = "must be a nonempty path"

    if problems:
        raise ConfigError(problems)

    for key in ("T_grid", "molchan_T_grid", "max_x_grid"):
        merged[key] = [float(v) for v in merged[key]]
    for key in ("dt", "molchan_dt", "ks_dt", "dx_kappa", "dx_floor", "barrier", "zeta"):
        merged[key] = float(merged[key])
    return ExperimentConfig(**merged)


def parse_config_json(path):
    """parse a json experiment file into an ExperimentConfig."""
    with open(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError({"<root>": f"not valid JSON ({e})"}) from e
    return config_from_dict(data)


def save_config_json(config, path):
    with open(path, "w") as f:
        json.dump(config.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def bundled_config(name):
    """Load one of the experiment files shipped in configs/."""
    path = CONFIGS_DIR / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"No bundled config named {name}")
    return parse_config_json(path)
