"""FastAPI application: validation, computation, and error mapping.

Every endpoint takes the same config payload the YAML file holds, parses it
with the shared :func:`jumptel.config.parse_config`, and returns plain data
(tables as column names + rows).  Presentation — CSV files, human-readable
reports — lives in the CLI.

Library failures map onto two HTTP categories mirroring the CLI exit codes:
validation problems (422, category "validation") and numerical failures
such as no admissible root or a divergent integral (400, category
"numerical").
"""

from __future__ import annotations

import dataclasses
import math
from typing import Any, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..config import RunConfig, config_schema, parse_config
from ..distributions import TIGHT_QUADRATURE
from ..errors import (
    ConfigError,
    JumptelError,
    ModelViolationError,
    NumericalError,
    RuinError,
)
from ..market import MarketParams
from ..mc import _path_rng
from ..paths import sample_path_values, simulate_regime_path
from ..policies import (
    LogPolicySolution,
    PowerPolicySolution,
    log_drift_gap,
    log_pair_value,
    power_pair_value,
    power_terminal_value,
    solve_log_fraction,
    solve_log_fractions,
    solve_power_fractions,
)
from ..verify import run_suite
from .schemas import (
    CheckModel,
    FigureDataRequest,
    FigureDataResponse,
    HealthResponse,
    RegimeSolutionModel,
    SimulateRequest,
    SimulateResponse,
    SolveRequest,
    SolveResponse,
    VerifyRequest,
    VerifyResponse,
)

SIMULATE_COLUMNS = ["path_id", "t", "regime", "X", "S", "V"]
FIGURE_COLUMNS = {
    "g-curves": ["regime", "pi", "g", "note"],
    "pi-vs-mu": ["regime", "mu", "pi", "note"],
}


def _parse(req_config) -> RunConfig:
    return parse_config(req_config.to_config_dict())


def _solve_utility(cfg: RunConfig, kind: str, alpha: Optional[float]):
    if kind == "log":
        return solve_log_fractions(cfg.market, intervals=cfg.intervals)
    return solve_power_fractions(cfg.market, alpha, intervals=cfg.intervals)


def _simulate_rows(cfg: RunConfig, n_paths: int, grid_dt: Optional[float],
                   start_regime: int) -> list[list[Any]]:
    market = cfg.market
    solution = _solve_utility(cfg, cfg.utility.kind, cfg.utility.alpha)
    policy = solution.policy
    grid = None
    if grid_dt is not None:
        if not (grid_dt > 0 and math.isfinite(grid_dt)):
            raise ConfigError("grid step must be finite and > 0", where="grid_dt")
        grid = np.arange(0.0, market.horizon, grid_dt)
    rows: list[list[Any]] = []
    for k in range(n_paths):
        rng = _path_rng(cfg.mc.seed, k)
        path = simulate_regime_path(market, rng, start_regime=start_regime)
        sample = sample_path_values(market, path, grid=grid, policy=policy,
                                    x0=cfg.x0)
        for j, t in enumerate(sample.times):
            rows.append([
                k,
                float(t),
                int(sample.regimes[j]),
                float(sample.telegraph[j]),
                float(sample.prices[j]),
                float(sample.wealth[j]),
            ])
    return rows


def _figure_rows(cfg: RunConfig, figure: str, start: float, stop: float,
                 n: int) -> list[list[Any]]:
    market = cfg.market
    if n > 0 and not start <= stop:
        raise ConfigError("range start must be <= stop", where="range")
    pts = np.linspace(start, stop, n)
    rows: list[list[Any]] = []
    for i in range(market.n_regimes):
        for x in pts:
            x = float(x)
            if figure == "g-curves":
                try:
                    g = log_drift_gap(market, i, x, TIGHT_QUADRATURE)
                    rows.append([i, x, g, ""])
                except NumericalError as exc:
                    rows.append([i, x, None, f"{type(exc).__name__}: {exc}"])
            else:
                regimes = list(market.regimes)
                regimes[i] = dataclasses.replace(regimes[i], drift=x)
                swapped = MarketParams(
                    regimes=tuple(regimes),
                    horizon=market.horizon,
                    transition=market.transition,
                    s0=market.s0,
                )
                interval = None if cfg.intervals is None else cfg.intervals[i]
                try:
                    res = solve_log_fraction(swapped, i, interval,
                                             TIGHT_QUADRATURE)
                    rows.append([i, x, res.root, ""])
                except NumericalError as exc:
                    rows.append([i, x, None, f"{type(exc).__name__}: {exc}"])
    return rows


def _solve_response(cfg: RunConfig, kind: str, alpha: Optional[float]) -> SolveResponse:
    market = cfg.market
    x0 = cfg.x0
    solution = _solve_utility(cfg, kind, alpha)
    two = market.alternating_two_regime
    regime_rows: list[RegimeSolutionModel] = []
    if isinstance(solution, LogPolicySolution):
        for i, pi in enumerate(solution.fractions):
            regime_rows.append(RegimeSolutionModel(
                index=i,
                fraction=pi,
                residual=solution.residuals[i],
                bracket_lo=solution.brackets[i][0],
                bracket_hi=solution.brackets[i][1],
                value_at_x0=(
                    log_pair_value(market, x0, i, solution.fractions,
                                   TIGHT_QUADRATURE) if two else None
                ),
            ))
        rule = ("c_t = wealth_t / (horizon + 1 - t); equivalently "
                "x0/(horizon+1) units of self-financing wealth per unit time")
        return SolveResponse(
            utility="log", alpha=None, x0=x0,
            fractions=list(solution.fractions),
            regimes=regime_rows, consumption_rule=rule,
        )
    sol: PowerPolicySolution = solution
    for i, pi in enumerate(sol.fractions):
        regime_rows.append(RegimeSolutionModel(
            index=i,
            fraction=pi,
            residual=sol.budget_residuals[i],
            bracket_lo=sol.brackets[i][0],
            bracket_hi=sol.brackets[i][1],
            consistent_drift=sol.consistent_drifts[i],
            drift_residual=sol.drift_residuals[i],
            value_at_x0=(
                power_terminal_value(market, x0, sol.alpha, sol.fractions, i,
                                     settings=TIGHT_QUADRATURE)
                if two else None
            ),
        ))
    rule = ("c_t = x0/(horizon+1) * H_t^(1/(alpha-1)) with H the state-price "
            "density of the solution tilt")
    return SolveResponse(
        utility="power", alpha=sol.alpha, x0=x0,
        fractions=list(sol.fractions),
        regimes=regime_rows, consumption_rule=rule,
        consistent=sol.consistent,
        pair_value=power_pair_value(market, x0, sol.alpha) if sol.consistent else None,
    )


def create_app() -> FastAPI:
    from .. import __version__

    app = FastAPI(
        title="jumptel",
        version=__version__,
        description=(
            "Regime-switching pure-jump market toolkit: exact simulation, "
            "closed-form moments, and optimal portfolio/consumption solvers."
        ),
    )

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(
            status_code=422,
            content={"detail": {
                "category": "validation",
                "message": str(exc),
                "where": exc.where,
            }},
        )

    @app.exception_handler(JumptelError)
    async def _numerical_error(request: Request, exc: JumptelError):
        # Everything deliberate that is not a config problem is a numerical
        # failure from the caller's perspective (no root, divergence, ruin,
        # a path violating model invariants, ...).
        return JSONResponse(
            status_code=400,
            content={"detail": {
                "category": "numerical",
                "message": str(exc),
                "type": type(exc).__name__,
            }},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/schema", response_class=PlainTextResponse)
    def schema() -> str:
        return config_schema()

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        cfg = _parse(req.config)
        if req.n_paths < 1:
            raise ConfigError("n_paths must be >= 1", where="n_paths")
        if not 0 <= req.start_regime < cfg.market.n_regimes:
            raise ConfigError("start regime out of range", where="start_regime")
        rows = _simulate_rows(cfg, req.n_paths, req.grid_dt, req.start_regime)
        return SimulateResponse(
            columns=SIMULATE_COLUMNS, rows=rows,
            n_paths=req.n_paths, seed=cfg.mc.seed,
        )

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> SolveResponse:
        cfg = _parse(req.config)
        util = req.utility if req.utility is not None else None
        if util is not None:
            kind, alpha = util.kind, util.alpha
            if kind == "power" and alpha is None:
                raise ConfigError(
                    "power utility requires alpha in (0, 1)",
                    where="utility.alpha",
                )
        else:
            kind, alpha = cfg.utility.kind, cfg.utility.alpha
        return _solve_response(cfg, kind, alpha)

    @app.post("/figure-data", response_model=FigureDataResponse)
    def figure_data(req: FigureDataRequest) -> FigureDataResponse:
        cfg = _parse(req.config)
        rows = _figure_rows(
            cfg, req.figure, req.range.start, req.range.stop, req.range.n
        )
        return FigureDataResponse(
            figure=req.figure, columns=FIGURE_COLUMNS[req.figure], rows=rows,
        )

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest) -> VerifyResponse:
        cfg = _parse(req.config)
        report = run_suite(cfg, req.suite)
        checks = [
            CheckModel(
                suite=c.suite,
                name=c.name,
                reference=c.reference,
                estimate=c.estimate,
                stderr=c.stderr,
                tolerance=c.tolerance,
                measure=c.measure,
                passed=c.passed,
                se_multiples=(c.se_multiples if c.stderr > 0.0 else None),
                elapsed_seconds=c.elapsed_seconds,
                note=c.note,
            )
            for c in report.checks
        ]
        return VerifyResponse(
            suite=report.suite,
            passed=report.passed,
            n_failed=report.n_failed,
            elapsed_seconds=report.elapsed_seconds,
            checks=checks,
        )

    return app
