"""CSV and JSON outputs. Everything is written under one output directory."""

import json
import logging
from pathlib import Path

import numpy as np

from errors import ParameterError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"


class ArtifactWriter:
    def __init__(self, out_dir):
        self.out_dir = Path(out_dir).resolve()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    def path_for(self, name):
        path = (self.out_dir / name).resolve()
        if self.out_dir not in path.parents:
            raise ParameterError(f"refusing to write {name} outside {self.out_dir}")
        return path

    def write_csv(self, name, header, columns):
        path = self.path_for(name)
        table = np.column_stack([np.asarray(c, dtype=float) for c in columns])
        np.savetxt(path, table, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")
        self.written.append(path)
        logger.debug("wrote %s (%d rows)", path, table.shape[0])
        return path

    def write_json(self, name, payload, config=None, shards=None):
        body = {"schema_version": SCHEMA_VERSION}
        if config is not None:
            body["config"] = config.to_dict()
        if shards is not None:
            body["shards"] = shards
        body.update(payload)
        path = self.path_for(name)
        with open(path, "w") as f:
            json.dump(to_jsonable(body), f, indent=2, sort_keys=True)
            f.write("\n")
        self.written.append(path)
        return path

    # per-replica files

    def write_path(self, index, path):
        return self.write_csv(f"replica_{index:04d}_path.csv", "t,y", [path.times(), path.values])

    def write_local_time(self, index, field):
        t = np.repeat(field.checkpoints, field.grid.bins)
        x = np.tile(field.grid.centers(), field.checkpoints.size)
        return self.write_csv(f"replica_{index:04d}_local_time.csv", "t,x,L", [t, x, field.L.ravel()])

    def write_delta(self, index, delta_path):
        return self.write_csv(
            f"replica_{index:04d}_delta.csv",
            "t,delta,running_sup,cond_var",
            [delta_path.checkpoints, delta_path.delta, delta_path.running_sup, delta_path.cond_var],
        )

    # campaign tables

    def write_persistence(self, estimate):
        return self.write_csv(
            "persistence.csv",
            "T,F_hat,ci_lo,ci_hi,survivors,n_replicas",
            [
                estimate.T_grid,
                estimate.F_hat,
                estimate.ci_lo,
                estimate.ci_hi,
                estimate.survivors,
                np.full(estimate.T_grid.size, estimate.n_replicas),
            ],
        )

    def write_molchan(self, estimate):
        return self.write_csv(
            "molchan.csv",
            "T,I_hat,ci_lo,ci_hi,normalized,norm_ci_lo,norm_ci_hi,excluded",
            [
                estimate.T_grid,
                estimate.I_hat,
                estimate.ci_lo,
                estimate.ci_hi,
                estimate.normalized,
                estimate.norm_ci_lo,
                estimate.norm_ci_hi,
                estimate.excluded,
            ],
        )


def to_jsonable(value):
    """numpy scalars and arrays to plain JSON types; non-finite floats to null."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value
