"""Human-editable scenario files describing runs and sweep matrices.

The format is flat ``key = value`` text with ``#`` comments.  List-valued
keys take comma-separated entries; ``seeds`` also accepts ``lo..hi``
ranges.  Unknown keys are rejected with their line number so typos cannot
silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .node import Mode, StabilizationParams
from .simcore import SimConfig, TopologySpec
from .topology import FailureKind, FailureModel


class ScenarioError(ValueError):
    """Malformed scenario file content, annotated with a line number."""


MODE_NAMES = {m.value: m for m in Mode}

_LIST_KEYS = {"topologies", "sizes", "modes", "failures", "seeds"}
_SCALAR_KEYS = {
    "reserve", "addr_width", "start_jitter_ms", "link_delay_ms",
    "link_jitter_ms", "app_start_ms", "horizon_ms", "baseline_capacity",
    "baseline_advert_ms", "sp_child", "sp_parent", "sp_leaf", "sp_root",
    "dio_min_exp", "topology_file",
}


def parse_failure(token: str) -> FailureModel:
    """Parse 'none', 'tx:0.05', or 'rx:0.10' style failure tokens."""
    token = token.strip().lower()
    if token == "none":
        return FailureModel()
    if ":" not in token:
        raise ValueError(f"failure token needs kind:rate, got {token!r}")
    kind, rate = token.split(":", 1)
    if kind not in ("tx", "rx"):
        raise ValueError(f"unknown failure kind {kind!r}")
    return FailureModel(FailureKind(kind), float(rate))


def _parse_seeds(text: str) -> list[int]:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    return seeds


@dataclass
class ScenarioMatrix:
    """Sweep axes plus the shared run parameters."""

    topologies: list[str] = field(default_factory=lambda: ["grid"])
    sizes: list[int] = field(default_factory=lambda: [9])
    modes: list[Mode] = field(default_factory=lambda: [Mode.GREEDY])
    failures: list[FailureModel] = field(default_factory=lambda: [FailureModel()])
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    base: SimConfig = field(default_factory=SimConfig)
    topology_file: str = ""

    def entries(self) -> list[tuple[str, SimConfig]]:
        out = []
        for topo_kind in self.topologies:
            for n in self.sizes:
                spec = TopologySpec(topo_kind, n, self.topology_file)
                for mode in self.modes:
                    for failure in self.failures:
                        scenario_id = f"{topo_kind}-n{n}-{mode.value}-{failure.label()}"
                        for seed in self.seeds:
                            cfg = replace(self.base, topology=spec, mode=mode,
                                          failure=failure, seed=seed)
                            out.append((scenario_id, cfg))
        return out


def parse_scenario(path: str) -> ScenarioMatrix:
    matrix = ScenarioMatrix()
    params = {}
    base_kwargs = {}

    def fail(lineno, message):
        raise ScenarioError(f"{path}:{lineno}: {message}")

    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                fail(lineno, f"expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _LIST_KEYS and key not in _SCALAR_KEYS:
                fail(lineno, f"unknown key {key!r}")
            try:
                if key == "topologies":
                    matrix.topologies = [t.strip() for t in value.split(",") if t.strip()]
                    for t in matrix.topologies:
                        if t not in ("grid", "uniform", "file"):
                            raise ValueError(f"unknown topology {t!r}")
                elif key == "sizes":
                    matrix.sizes = [int(v) for v in value.split(",") if v.strip()]
                elif key == "modes":
                    matrix.modes = [MODE_NAMES[v.strip()] for v in value.split(",") if v.strip()]
                elif key == "failures":
                    matrix.failures = [parse_failure(v) for v in value.split(",") if v.strip()]
                elif key == "seeds":
                    matrix.seeds = _parse_seeds(value)
                elif key == "topology_file":
                    matrix.topology_file = value
                elif key == "reserve":
                    base_kwargs["reserve"] = Fraction(value)
                elif key == "addr_width":
                    base_kwargs["addr_width"] = int(value)
                elif key == "baseline_capacity":
                    base_kwargs["baseline_capacity"] = int(value)
                elif key == "baseline_advert_ms":
                    base_kwargs["baseline_advert_interval_ms"] = float(value)
                elif key in ("sp_child", "sp_parent", "sp_leaf", "sp_root", "dio_min_exp"):
                    params[key] = int(value)
                else:  # remaining duration knobs
                    field_name = {
                        "start_jitter_ms": "start_jitter_max_ms",
                        "link_delay_ms": "link_delay_ms",
                        "link_jitter_ms": "link_jitter_ms",
                        "app_start_ms": "app_start_ms",
                        "horizon_ms": "horizon_ms",
                    }[key]
                    base_kwargs[field_name] = float(value)
            except ScenarioError:
                raise
            except (KeyError, ValueError) as exc:
                fail(lineno, f"bad value for {key!r}: {exc}")

    if params:
        base_kwargs["params"] = StabilizationParams(**params)
    matrix.base = replace(SimConfig(), **base_kwargs)
    if not matrix.seeds:
        raise ScenarioError(f"{path}: at least one seed is required")
    return matrix
