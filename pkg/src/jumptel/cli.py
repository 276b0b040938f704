"""Command-line front end.

Thin client over the HTTP service: every subcommand loads the YAML config,
applies the global overrides, sends the request through
:class:`jumptel.client.ServiceClient` (in-process unless ``--server`` names
a remote instance), and renders the response as text and CSV.

Exit codes: 0 success; 2 validation error (bad config or flags); 3 numerical
failure (no admissible root, divergent integral, ruin); 4 verification
failure (a check missed its tolerance).
"""

from __future__ import annotations

import csv
import math
import os
import sys
from typing import Any, Optional, Sequence

import click
import yaml

from .client import ServiceClient, ServiceError
from .config import config_schema, parse_config
from .errors import ConfigError, JumptelError, NumericalError

# Column typing for CSV rendering: i = integer, f = float (17 significant
# digits), s = string, b = boolean (rendered 1/0).
_TABLE_FORMATS = {
    "simulate": "ififff",
    "g-curves": "iffs",
    "pi-vs-mu": "iffs",
    "solve": "ifffffff",
    "verify": "ssfffffsbfs",
}

SOLVE_CSV_COLUMNS = [
    "regime", "fraction", "residual", "bracket_lo", "bracket_hi",
    "consistent_drift", "drift_residual", "value_at_x0",
]
VERIFY_CSV_COLUMNS = [
    "suite", "name", "reference", "estimate", "stderr", "se_multiples",
    "tolerance", "measure", "passed", "elapsed_seconds", "note",
]


def _fmt_cell(value: Any, kind: str) -> str:
    if value is None:
        return "NaN"
    if kind == "f":
        v = float(value)
        return "NaN" if math.isnan(v) else "%.17g" % v
    if kind == "i":
        return "%d" % int(value)
    if kind == "b":
        return "1" if value else "0"
    return str(value)


def _write_csv(path: str, columns: Sequence[str], rows: Sequence[Sequence[Any]],
               formats: str) -> None:
    if len(columns) != len(formats):
        raise AssertionError("column/format mismatch (internal)")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                _fmt_cell(v, k) for v, k in zip(row, formats)
            )


def _load_config_dict(path: str, seed: Optional[int], workers: Optional[int],
                      out_dir: Optional[str]) -> dict:
    """Read YAML, apply global overrides, and validate locally so that bad
    configs fail fast with a field path before any request is sent."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh.read())
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}", where="config") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", where="config")
    if seed is not None or workers is not None:
        mc = data.get("mc") or {}
        if not isinstance(mc, dict):
            raise ConfigError("mc must be a mapping", where="mc")
        if seed is not None:
            mc["seed"] = seed
        if workers is not None:
            mc["workers"] = workers
        data["mc"] = mc
    if out_dir is not None:
        data["output"] = out_dir
    parse_config(data)
    return data


def _out_path(config: dict, out: Optional[str], default_name: str) -> str:
    if out is not None:
        parent = os.path.dirname(out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return out
    out_dir = config.get("output") or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, default_name)


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(server=ctx.obj.get("server"))


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map library errors to the documented exit codes."""
    try:
        return fn()
    except ConfigError as exc:
        _fail(2, str(exc))
    except (NumericalError, JumptelError) as exc:
        if isinstance(exc, ServiceError):
            _fail(1, str(exc))
        _fail(3, str(exc))
    except OSError as exc:
        _fail(1, str(exc))


@click.group()
@click.option("--seed", type=int, default=None,
              help="Override mc.seed from the config.")
@click.option("--workers", type=int, default=None,
              help="Override mc.workers from the config.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Override the config's output directory.")
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL; by default the service runs "
                   "in-process.")
@click.pass_context
def main(ctx: click.Context, seed: Optional[int], workers: Optional[int],
         out_dir: Optional[str], server: Optional[str]) -> None:
    """Regime-switching pure-jump market toolkit."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, workers=workers, out_dir=out_dir, server=server)


def _config_from_ctx(ctx: click.Context, config_path: str) -> dict:
    return _load_config_dict(
        config_path, ctx.obj["seed"], ctx.obj["workers"], ctx.obj["out_dir"]
    )


@main.command()
@click.argument("config_path", metavar="CONFIG",
                type=click.Path(exists=True, dir_okay=False))
@click.option("--paths", default=1, show_default=True,
              help="Number of paths to simulate.")
@click.option("--grid", type=float, default=None, metavar="DT",
              help="Regular sampling step; event times are always included.")
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Output CSV path (default: <output dir>/simulate.csv).")
@click.option("--start-regime", default=0, show_default=True)
@click.pass_context
def simulate(ctx: click.Context, config_path: str, paths: int,
             grid: Optional[float], out: Optional[str],
             start_regime: int) -> None:
    """Simulate paths and write (path_id, t, regime, X, S, V) rows."""

    def go():
        config = _config_from_ctx(ctx, config_path)
        with _client(ctx) as client:
            resp = client.simulate(config, n_paths=paths, grid_dt=grid,
                                   start_regime=start_regime)
        target = _out_path(config, out, "simulate.csv")
        _write_csv(target, resp["columns"], resp["rows"],
                   _TABLE_FORMATS["simulate"])
        click.echo(f"wrote {len(resp['rows'])} rows ({paths} path(s), "
                   f"seed {resp['seed']}) to {target}")

    _guard(go)


@main.command()
@click.argument("config_path", metavar="CONFIG",
                type=click.Path(exists=True, dir_okay=False))
@click.option("--utility", type=click.Choice(["log", "power"]), default=None,
              help="Override the config's utility kind.")
@click.option("--alpha", type=float, default=None,
              help="Risk-aversion exponent for --utility power.")
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Output CSV path (default: <output dir>/solve.csv).")
@click.pass_context
def solve(ctx: click.Context, config_path: str, utility: Optional[str],
          alpha: Optional[float], out: Optional[str]) -> None:
    """Solve the optimal constant fractions and report the solution."""

    def go():
        config = _config_from_ctx(ctx, config_path)
        override = None
        if utility is not None:
            override = {"kind": utility}
            if alpha is not None:
                override["alpha"] = alpha
        elif alpha is not None:
            raise ConfigError("--alpha requires --utility power", where="alpha")
        with _client(ctx) as client:
            resp = client.solve(config, utility=override)

        click.echo(f"utility: {resp['utility']}"
                   + (f" (alpha = {resp['alpha']:g})"
                      if resp.get("alpha") is not None else ""))
        for reg in resp["regimes"]:
            line = (f"regime {reg['index']}: fraction = {reg['fraction']:.12g}"
                    f"  residual = {reg['residual']:.3g}"
                    f"  bracket = [{reg['bracket_lo']:.12g}, "
                    f"{reg['bracket_hi']:.12g}]")
            click.echo(line)
            if reg.get("consistent_drift") is not None:
                click.echo(
                    f"          consistent drift = {reg['consistent_drift']:.12g}"
                    f"  configured-minus-consistent = "
                    f"{reg['drift_residual']:.3g}")
            if reg.get("value_at_x0") is not None:
                click.echo(
                    f"          value at x0 = {reg['value_at_x0']:.12g}")
        click.echo(f"consumption rule: {resp['consumption_rule']}")
        if resp.get("consistent") is not None:
            click.echo("drift consistency: "
                       + ("consistent with joint optimality"
                          if resp["consistent"] else
                          "NOT consistent (configured drift differs from "
                          "the value the portfolio condition requires)"))
        if resp.get("pair_value") is not None:
            click.echo(f"consumption-inclusive value at x0: "
                       f"{resp['pair_value']:.12g}")

        rows = [
            [reg["index"], reg["fraction"], reg["residual"],
             reg["bracket_lo"], reg["bracket_hi"],
             reg.get("consistent_drift"), reg.get("drift_residual"),
             reg.get("value_at_x0")]
            for reg in resp["regimes"]
        ]
        target = _out_path(config, out, "solve.csv")
        _write_csv(target, SOLVE_CSV_COLUMNS, rows, _TABLE_FORMATS["solve"])
        click.echo(f"wrote solution table to {target}")

    _guard(go)


def _parse_range(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(
            f"range must be start:stop:count, got {text!r}", where="range"
        )
    try:
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(
            f"range must be two numbers and a count, got {text!r}",
            where="range",
        ) from None
    if n < 0:
        raise ConfigError("range count must be >= 0", where="range")
    return start, stop, n


@main.command("figure-data")
@click.argument("config_path", metavar="CONFIG",
                type=click.Path(exists=True, dir_okay=False))
@click.option("--figure", type=click.Choice(["g-curves", "pi-vs-mu"]),
              required=True)
@click.option("--range", "range_", required=True, metavar="A:B:N",
              help="N evenly spaced points from A to B.")
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def figure_data(ctx: click.Context, config_path: str, figure: str,
                range_: str, out: Optional[str]) -> None:
    """Emit plot-ready CSV tables (drift-condition curves, root vs drift)."""

    def go():
        config = _config_from_ctx(ctx, config_path)
        start, stop, n = _parse_range(range_)
        with _client(ctx) as client:
            resp = client.figure_data(config, figure, start, stop, n)
        name = figure.replace("-", "_") + ".csv"
        target = _out_path(config, out, name)
        _write_csv(target, resp["columns"], resp["rows"],
                   _TABLE_FORMATS[figure])
        click.echo(f"wrote {len(resp['rows'])} rows to {target}")

    _guard(go)


@main.command()
@click.argument("config_path", metavar="CONFIG",
                type=click.Path(exists=True, dir_okay=False))
@click.option("--suite",
              type=click.Choice(["moments", "martingale", "budget", "value",
                                 "all"]),
              default="all", show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Output CSV path (default: <output dir>/verify.csv).")
@click.pass_context
def verify(ctx: click.Context, config_path: str, suite: str,
           out: Optional[str]) -> None:
    """Cross-check closed forms against Monte Carlo; exit 4 on failure."""

    def go():
        config = _config_from_ctx(ctx, config_path)
        with _client(ctx) as client:
            resp = client.verify(config, suite=suite)

        width = max((len(c["name"]) for c in resp["checks"]), default=10)
        for c in resp["checks"]:
            status = "PASS" if c["passed"] else "FAIL"
            if c["measure"] == "se":
                detail = (f"closed {c['reference']: .10g}  "
                          f"mc {c['estimate']: .10g}  "
                          f"se {c['stderr']:.3g}  "
                          f"dist {c['se_multiples']: .2f} SE "
                          f"(limit {c['tolerance']:g})")
            elif c["measure"] == "below":
                detail = (f"mean {c['estimate']: .10g}  "
                          f"se {c['stderr']:.3g}  must be < "
                          f"{c['reference']:g} by {c['tolerance']:g} SE")
            else:
                detail = (f"value {c['estimate']: .10g}  "
                          f"target {c['reference']: .10g}  "
                          f"|diff| <= {c['tolerance']:g}")
            line = f"[{status}] {c['suite']}: {c['name']:<{width}}  {detail}"
            if c.get("note"):
                line += f"  ({c['note']})"
            click.echo(line)
        click.echo(
            f"suite '{resp['suite']}': "
            + ("all checks passed"
               if resp["passed"] else f"{resp['n_failed']} check(s) FAILED")
            + f" in {resp['elapsed_seconds']:.1f}s"
        )

        rows = [
            [c["suite"], c["name"], c["reference"], c["estimate"],
             c["stderr"], c.get("se_multiples"), c["tolerance"],
             c["measure"], c["passed"], c["elapsed_seconds"], c["note"]]
            for c in resp["checks"]
        ]
        target = _out_path(config, out, "verify.csv")
        _write_csv(target, VERIFY_CSV_COLUMNS, rows, _TABLE_FORMATS["verify"])
        click.echo(f"wrote check table to {target}")
        if not resp["passed"]:
            sys.exit(4)

    _guard(go)


@main.command("print-schema")
def print_schema() -> None:
    """Print the config file schema with an example."""
    click.echo(config_schema())


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service under uvicorn."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
