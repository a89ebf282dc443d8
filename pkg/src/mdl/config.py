"""JSON run configurations: a list of scenario descriptors plus output settings.

Example::

    {
      "output_dir": "reports",
      "format": "both",
      "seed": 7,
      "workers": 2,
      "scenarios": [
        {"id": "t2-sign", "theorem": "T2", "model": {"kind": "iid_sign"},
         "p": 2, "q": 3, "x_grid": [4], "n_grid": [16], "trials": 100000}
      ]
    }

``seed`` and ``workers`` at the top level are optional; a top-level seed
replaces every scenario seed. LEM3 scenarios take ``"tail"`` (a tail string
such as ``"pareto:2"``) in place of ``"model"``; LEM2 scenarios need neither.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .errors import InputError
from .process_zoo import model_from_dict
from .tails import parse_tail
from .verify_harness import Scenario

FORMATS = ("csv", "json", "both")
SCENARIO_KEYS = {"id", "theorem", "model", "tail", "x_grid", "n_grid", "p", "q", "s", "trials",
                 "seed", "confidence", "slack", "mode", "convention", "options"}
CONFIG_KEYS = {"scenarios", "output_dir", "format", "seed", "workers"}


class ConfigError(InputError):
    """Malformed configuration, with the 1-based line it refers to when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class RunConfig:
    scenarios: tuple[Scenario, ...]
    output_dir: Path = Path("reports")
    format: str = "csv"
    seed: int | None = None
    workers: int | None = None


def _line_of(text: str, scenario_id: str | None) -> int | None:
    if scenario_id is None:
        return None
    m = re.search(r'"id"\s*:\s*' + re.escape(json.dumps(scenario_id)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _grid(values, name: str, sid: str) -> tuple:
    if not isinstance(values, list) or not values:
        raise InputError(f"scenario {sid!r}: {name} must be a nonempty list")
    out = []
    for v in values:
        if isinstance(v, list):
            if not all(isinstance(u, int) and not isinstance(u, bool) for u in v):
                raise InputError(f"scenario {sid!r}: {name} vectors must hold integers")
            out.append(tuple(v))
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(v)
        else:
            raise InputError(f"scenario {sid!r}: bad {name} entry {v!r}")
    return tuple(out)


def scenario_from_dict(spec: dict[str, Any]) -> Scenario:
    """Build and validate a Scenario from its JSON descriptor."""
    if not isinstance(spec, dict):
        raise InputError("each scenario must be an object")
    sid = spec.get("id")
    if not isinstance(sid, str) or not sid:
        raise InputError("scenario id must be a nonempty string")
    unknown = set(spec) - SCENARIO_KEYS
    if unknown:
        raise InputError(f"scenario {sid!r}: unknown fields {sorted(unknown)}")
    theorem = spec.get("theorem")
    if theorem == "LEM3":
        model = parse_tail(spec.get("tail", "exp"))
    elif theorem == "LEM2":
        model = None
    else:
        if "model" not in spec:
            raise InputError(f"scenario {sid!r}: missing model")
        model = model_from_dict(spec["model"])
    n_grid = () if theorem in ("LEM2", "LEM3") and "n_grid" not in spec else \
        _grid(spec.get("n_grid"), "n_grid", sid)
    kwargs = {k: spec[k] for k in ("p", "q", "s", "trials", "seed", "confidence", "slack",
                                   "mode", "convention") if k in spec}
    options = spec.get("options", {})
    if not isinstance(options, dict):
        raise InputError(f"scenario {sid!r}: options must be an object")
    sc = Scenario(id=sid, theorem=theorem, model=model,
                  x_grid=tuple(float(x) for x in _grid(spec.get("x_grid"), "x_grid", sid)),
                  n_grid=n_grid, options=options, **kwargs)
    sc.validate()
    return sc


def parse_config(text: str, base_dir: Path | None = None) -> RunConfig:
    """Parse and validate a configuration; errors carry line numbers."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", 1)
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown fields {sorted(unknown)}", 1)
    fmt = raw.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", 1)
    seed = raw.get("seed")
    workers = raw.get("workers")
    if workers is not None and (not isinstance(workers, int) or workers < 1):
        raise ConfigError("workers must be a positive integer", 1)
    items = raw.get("scenarios")
    if not isinstance(items, list) or not items:
        raise ConfigError("scenarios must be a nonempty list", 1)
    scenarios, seen = [], set()
    for item in items:
        sid = item.get("id") if isinstance(item, dict) else None
        line = _line_of(text, sid) if isinstance(sid, str) else None
        try:
            sc = scenario_from_dict(item)
            if seed is not None:
                sc = replace(sc, seed=seed)
                sc.validate()
        except ConfigError:
            raise
        except (InputError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc), line) from exc
        if sc.id in seen:
            raise ConfigError(f"duplicate scenario id {sc.id!r}", line)
        seen.add(sc.id)
        scenarios.append(sc)
    out = Path(raw.get("output_dir", "reports"))
    if base_dir is not None and not out.is_absolute():
        out = base_dir / out
    return RunConfig(tuple(scenarios), out, fmt, seed, workers)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text, path.parent)
