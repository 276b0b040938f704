"""Run configuration: a schema-checked YAML file shared by the CLI and service.

One parser serves every entry point: the CLI loads the file into a plain
dict, the HTTP service receives the same dict as JSON, and both call
:func:`parse_config`.  Validation errors carry a dotted field path
(``market.regimes[1].jump.eta``) pointing at the offending entry, and
unknown keys are rejected rather than ignored so that typos cannot
silently fall back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import yaml

from .distributions import (
    Discrete,
    MarkDistribution,
    NegativePower,
    PointMass,
    PositivePower,
)
from .errors import ConfigError
from .market import MarketParams, RegimeSpec

__all__ = [
    "UtilitySpec",
    "McSettings",
    "RunConfig",
    "parse_config",
    "load_config",
    "loads_config",
    "jump_from_dict",
    "jump_to_dict",
    "market_to_dict",
    "config_schema",
    "EXAMPLE_CONFIG",
]

_UTILITY_KINDS = ("log", "power")

_JUMP_PARAM_KEYS = {
    "negative_power": ("eta",),
    "positive_power": ("eta",),
    "point_mass": ("y",),
    "discrete": ("ys", "ps"),
}


@dataclass(frozen=True)
class UtilitySpec:
    """Objective selection: kind in {log, power}; alpha only for power."""

    kind: str
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _UTILITY_KINDS:
            raise ConfigError(
                f"utility kind must be one of {_UTILITY_KINDS}, got {self.kind!r}",
                where="utility.kind",
            )
        if self.kind == "power":
            if self.alpha is None:
                raise ConfigError(
                    "power utility requires alpha in (0, 1)", where="utility.alpha"
                )
            if not (0.0 < self.alpha < 1.0 and math.isfinite(self.alpha)):
                raise ConfigError(
                    f"alpha must lie in (0, 1), got {self.alpha!r}",
                    where="utility.alpha",
                )
        elif self.alpha is not None:
            raise ConfigError(
                "alpha is only meaningful for power utility", where="utility.alpha"
            )


@dataclass(frozen=True)
class McSettings:
    """Monte Carlo controls shared by the verify/value endpoints."""

    n_paths: int = 20000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.n_paths, int) or self.n_paths < 100:
            raise ConfigError(
                f"n_paths must be an integer >= 100, got {self.n_paths!r}",
                where="mc.n_paths",
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(
                f"seed must be a nonnegative integer, got {self.seed!r}",
                where="mc.seed",
            )
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError(
                f"workers must be an integer >= 1, got {self.workers!r}",
                where="mc.workers",
            )


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI subcommand or service endpoint needs for one run."""

    market: MarketParams
    utility: UtilitySpec
    x0: float
    mc: McSettings
    output: Optional[str] = None
    intervals: Optional[tuple[tuple[float, float], ...]] = None


# ----------------------------------------------------------------------
# dict -> objects
# ----------------------------------------------------------------------

def _require_mapping(node: Any, where: str) -> Mapping:
    if not isinstance(node, Mapping):
        raise ConfigError(
            f"expected a mapping, got {type(node).__name__}", where=where
        )
    return node


def _reject_unknown(node: Mapping, allowed: Sequence[str], where: str) -> None:
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key(s) {unknown}; allowed: {sorted(allowed)}", where=where
        )


def _real(node: Mapping, key: str, where: str, required: bool = True,
          default: float = 0.0) -> float:
    if key not in node:
        if required:
            raise ConfigError(f"missing required key {key!r}", where=where)
        return default
    val = node[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(
            f"{key} must be a number, got {val!r}", where=f"{where}.{key}"
        )
    return float(val)


def jump_from_dict(node: Any, where: str) -> MarkDistribution:
    """Build a mark distribution from {kind, params}."""
    node = _require_mapping(node, where)
    _reject_unknown(node, ("kind", "params"), where)
    kind = node.get("kind")
    if kind not in _JUMP_PARAM_KEYS:
        raise ConfigError(
            f"jump kind must be one of {sorted(_JUMP_PARAM_KEYS)}, got {kind!r}",
            where=f"{where}.kind",
        )
    params = _require_mapping(node.get("params", {}), f"{where}.params")
    _reject_unknown(params, _JUMP_PARAM_KEYS[kind], f"{where}.params")
    try:
        if kind == "negative_power":
            return NegativePower(_real(params, "eta", f"{where}.params"))
        if kind == "positive_power":
            return PositivePower(_real(params, "eta", f"{where}.params"))
        if kind == "point_mass":
            return PointMass(_real(params, "y", f"{where}.params"))
        ys = params.get("ys")
        ps = params.get("ps")
        if not isinstance(ys, Sequence) or not isinstance(ps, Sequence):
            raise ConfigError(
                "discrete jumps need list-valued ys and ps",
                where=f"{where}.params",
            )
        return Discrete(tuple(float(y) for y in ys), tuple(float(p) for p in ps))
    except ConfigError as exc:
        if exc.where and exc.where.startswith(where):
            raise
        raise ConfigError(str(exc), where=f"{where}.params") from None


def jump_to_dict(jump: MarkDistribution) -> dict:
    """Inverse of :func:`jump_from_dict` (config_dict nests the params)."""
    d = jump.config_dict()
    kind = d.pop("kind")
    return {"kind": kind, "params": d}


def _regime_from_dict(node: Any, index: int) -> RegimeSpec:
    where = f"market.regimes[{index}]"
    node = _require_mapping(node, where)
    _reject_unknown(node, ("r", "mu", "lambda", "jump"), where)
    rate = _real(node, "r", where)
    drift = _real(node, "mu", where)
    intensity = _real(node, "lambda", where)
    if "jump" not in node:
        raise ConfigError("missing required key 'jump'", where=where)
    jump = jump_from_dict(node["jump"], f"{where}.jump")
    try:
        return RegimeSpec(rate=rate, drift=drift, intensity=intensity, jump=jump)
    except ConfigError as exc:
        detail = exc.where or "value"
        detail = detail.removeprefix("regime.")
        raise ConfigError(str(exc).split(": ", 1)[-1], where=f"{where}.{detail}") from None


def _market_from_dict(node: Any) -> MarketParams:
    where = "market"
    node = _require_mapping(node, where)
    _reject_unknown(node, ("regimes", "transition", "horizon", "s0"), where)
    regimes_node = node.get("regimes")
    if not isinstance(regimes_node, Sequence) or isinstance(regimes_node, (str, bytes)):
        raise ConfigError("regimes must be a list", where=f"{where}.regimes")
    regimes = tuple(
        _regime_from_dict(r, i) for i, r in enumerate(regimes_node)
    )
    transition = None
    if node.get("transition") is not None:
        rows = node["transition"]
        if not isinstance(rows, Sequence):
            raise ConfigError(
                "transition must be a list of rows", where=f"{where}.transition"
            )
        try:
            transition = tuple(tuple(float(p) for p in row) for row in rows)
        except (TypeError, ValueError):
            raise ConfigError(
                "transition rows must be lists of numbers",
                where=f"{where}.transition",
            ) from None
    horizon = _real(node, "horizon", where)
    s0 = _real(node, "s0", where, required=False, default=1.0)
    return MarketParams(
        regimes=regimes, horizon=horizon, transition=transition, s0=s0
    )


def parse_config(data: Any) -> RunConfig:
    """Validate a parsed config mapping and build the run objects."""
    root = _require_mapping(data, "config")
    _reject_unknown(
        root, ("market", "utility", "x0", "mc", "output", "intervals"), "config"
    )
    if "market" not in root:
        raise ConfigError("missing required section 'market'", where="config")
    market = _market_from_dict(root["market"])

    # An empty YAML section ("utility:" with no body) loads as None; treat
    # it like an absent section.
    util_node = _require_mapping(root.get("utility") or {"kind": "log"}, "utility")
    _reject_unknown(util_node, ("kind", "alpha"), "utility")
    alpha = util_node.get("alpha")
    if alpha is not None:
        alpha = _real(util_node, "alpha", "utility")
    utility = UtilitySpec(kind=util_node.get("kind", "log"), alpha=alpha)

    x0 = _real(root, "x0", "config", required=False, default=1.0)
    if not (x0 > 0 and math.isfinite(x0)):
        raise ConfigError(f"x0 must be finite and > 0, got {x0!r}", where="x0")

    mc_node = _require_mapping(root.get("mc") or {}, "mc")
    _reject_unknown(mc_node, ("n_paths", "seed", "workers"), "mc")
    mc = McSettings(**dict(mc_node))

    output = root.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("output must be a directory path string", where="output")

    intervals = None
    if root.get("intervals") is not None:
        rows = root["intervals"]
        if not isinstance(rows, Sequence) or len(rows) != market.n_regimes:
            raise ConfigError(
                f"intervals must list one [lo, hi] pair per regime "
                f"({market.n_regimes} expected)",
                where="intervals",
            )
        parsed = []
        for i, pair in enumerate(rows):
            if (not isinstance(pair, Sequence)) or len(pair) != 2:
                raise ConfigError(
                    "each entry must be a [lo, hi] pair", where=f"intervals[{i}]"
                )
            lo, hi = float(pair[0]), float(pair[1])
            if not lo < hi:
                raise ConfigError(
                    f"need lo < hi, got [{lo}, {hi}]", where=f"intervals[{i}]"
                )
            parsed.append((lo, hi))
        intervals = tuple(parsed)

    return RunConfig(
        market=market, utility=utility, x0=x0, mc=mc,
        output=output, intervals=intervals,
    )


def loads_config(text: str) -> RunConfig:
    """Parse a YAML document into a RunConfig."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError(f"invalid YAML{at}: {exc}", where="config") from None
    return parse_config(data)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_config(fh.read())


# ----------------------------------------------------------------------
# objects -> dict (service payloads, config echo)
# ----------------------------------------------------------------------

def market_to_dict(market: MarketParams) -> dict:
    return {
        "regimes": [
            {
                "r": reg.rate,
                "mu": reg.drift,
                "lambda": reg.intensity,
                "jump": jump_to_dict(reg.jump),
            }
            for reg in market.regimes
        ],
        "transition": [list(row) for row in market.transition],
        "horizon": market.horizon,
        "s0": market.s0,
    }


EXAMPLE_CONFIG = """\
market:
  horizon: 2.0
  s0: 1.0
  # optional; defaults to the uniform off-diagonal matrix, and two-regime
  # markets must use the alternating chain [[0, 1], [1, 0]]
  transition: [[0.0, 1.0], [1.0, 0.0]]
  regimes:
    # drifts chosen so the log-optimal fractions land at -0.5 and 0.5
    - r: 0.01
      mu: 0.1041316199748897
      lambda: 0.3
      jump: {kind: negative_power, params: {eta: 1.5}}
    - r: 0.01
      mu: -0.4395559215387595
      lambda: 1.2
      jump: {kind: positive_power, params: {eta: 2.5}}
utility:
  kind: log            # log | power
  # alpha: 0.3         # required iff kind is power; must lie in (0, 1)
x0: 1.0
mc:
  n_paths: 20000
  seed: 1234
  workers: 1
output: out
# intervals:           # optional per-regime root-search constraints [lo, hi]
#   - [-5.0, 0.99]
#   - [0.0, 1.5]
"""


def config_schema() -> str:
    """Human-readable schema for the YAML config, shown by print-schema."""
    return (
        "Configuration file (YAML).  Unknown keys are rejected; every\n"
        "validation error names the offending field by its dotted path.\n"
        "\n"
        "market:                 required section\n"
        "  regimes:              list of >= 2 regime blocks, each with\n"
        "    r: float            riskless rate while the regime is active\n"
        "    mu: float           price drift while the regime is active\n"
        "    lambda: float > 0   regime exit intensity (event rate)\n"
        "    jump:               mark distribution of the relative price jump\n"
        "      kind: one of negative_power | positive_power | point_mass | discrete\n"
        "      params:\n"
        "        negative_power: {eta: float > 0}    support (-1, 0)\n"
        "        positive_power: {eta: float > 1}    support (0, inf)\n"
        "        point_mass:     {y: float != 0, > -1}\n"
        "        discrete:       {ys: [floats], ps: [weights summing to 1]}\n"
        "  transition:           optional m x m row-stochastic matrix of\n"
        "                        post-event regime probabilities; zero diagonal\n"
        "                        (no self-transitions).  Two-regime markets must\n"
        "                        alternate: [[0, 1], [1, 0]] (the default).\n"
        "  horizon: float > 0    planning horizon T\n"
        "  s0: float > 0         initial price (default 1.0)\n"
        "\n"
        "utility:                optional (default log)\n"
        "  kind: log | power\n"
        "  alpha: float in (0,1) required iff kind is power\n"
        "\n"
        "x0: float > 0           initial wealth (default 1.0)\n"
        "\n"
        "mc:                     optional Monte Carlo controls\n"
        "  n_paths: int >= 100   (default 20000)\n"
        "  seed: int >= 0        base seed; paths are keyed (seed, path index)\n"
        "  workers: int >= 1     parallel workers; estimates are bit-identical\n"
        "                        for any worker count\n"
        "\n"
        "output: path            directory for CSV/report files (default '.')\n"
        "\n"
        "intervals:              optional list of [lo, hi] per regime, bounding\n"
        "                        the root search for the optimal fraction\n"
        "\n"
        "Example:\n"
        "\n" + EXAMPLE_CONFIG
    )
