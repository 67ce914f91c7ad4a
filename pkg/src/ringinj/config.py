"""Shared run configuration: seeds, sample counts, quadrature tolerances."""

from __future__ import annotations

import dataclasses
import json
import os
import zlib

import numpy as np

#: Default upper cap used when an integrand is singular at t = 1.
DEFAULT_R_MAX = 1.0 - 1e-6
#: Fallback injectivity radius when even the capped tail integral diverges.
DEFAULT_R_CAP = 0.9

ENV_CONFIG_VAR = "RINGINJ_CONFIG"


@dataclasses.dataclass
class RunConfig:
    """Knobs shared by every numerical operation.

    All Monte-Carlo draws are reproducible bit-for-bit given (seed,
    sample_count); quadrature is deterministic.
    """

    seed: int = 20240801
    sample_count: int = 20000
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 48
    divergence_threshold: float = 1e3
    r_max: float = DEFAULT_R_MAX
    r_cap: float = DEFAULT_R_CAP
    cap_constant: float | None = None  # override; None -> pinned table
    witness_tol: float = 1e-9
    profile_nodes: int = 257
    mc_retry: int = 8
    axis_distance: float = 1.1
    winding_order: int | None = None  # None -> minimal feasible order
    normalize_by_K: bool = True
    domain_margin: float = 0.1

    def __post_init__(self):
        if self.sample_count < 1000:
            raise ValueError("sample_count must be at least 10^3")
        if not 0.0 < self.r_cap <= self.r_max < 1.0:
            raise ValueError("need 0 < r_cap <= r_max < 1")

    def rng(self, tag: str) -> np.random.Generator:
        """Counter-based generator keyed by (seed, tag).

        Independent of call order, so concurrent use cannot reorder draws.
        """
        key = (self.seed & 0xFFFFFFFF) ^ zlib.crc32(tag.encode())
        return np.random.Generator(np.random.Philox(key=key))


def load_default_config() -> RunConfig:
    """RunConfig from the JSON file named by $RINGINJ_CONFIG, else defaults."""
    path = os.environ.get(ENV_CONFIG_VAR)
    if not path:
        return RunConfig()
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(raw) - fields
    if unknown:
        raise ValueError(f"unknown config keys in {path}: {sorted(unknown)}")
    return RunConfig(**raw)
