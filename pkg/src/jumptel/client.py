"""Client for the jumptel service: in-process by default, remote by URL.

The CLI never computes anything itself — it always goes through this
client, so a command behaves identically whether it runs against the
embedded app or a remote ``jumptel serve``.  Service error payloads are
mapped back onto the library's exception types (category "validation" →
ConfigError, "numerical" → NumericalError) so callers see one error model.
"""

from __future__ import annotations

import asyncio
import json
from typing import Any, Optional

import httpx

from .errors import ConfigError, JumptelError, NumericalError

__all__ = ["ServiceClient", "ServiceError"]


class ServiceError(JumptelError):
    """The service answered with an error this client cannot classify."""

    def __init__(self, status_code: int, message: str):
        self.status_code = status_code
        super().__init__(f"HTTP {status_code}: {message}")


def _raise_for(response: httpx.Response) -> None:
    if response.is_success:
        return
    try:
        detail = response.json().get("detail")
    except (json.JSONDecodeError, ValueError):
        detail = None
    if isinstance(detail, dict):
        category = detail.get("category")
        message = detail.get("message", "")
        if category == "validation":
            raise ConfigError(message, where=detail.get("where"))
        if category == "numerical":
            raise NumericalError(message)
    if response.status_code == 422:
        # Shape errors caught by the request models before our handlers.
        raise ConfigError(
            json.dumps(detail) if detail is not None else response.text,
            where="request",
        )
    raise ServiceError(response.status_code, response.text[:500])


class ServiceClient:
    """Synchronous client; context-manage or .close() when done.

    Without a ``server`` URL the app is instantiated in this process and
    each request is dispatched straight into it over httpx's ASGI
    transport, so no socket is opened.
    """

    def __init__(self, server: Optional[str] = None, timeout: float = 600.0):
        self._app = None
        self._client: Optional[httpx.Client] = None
        if server is None:
            from .service import create_app

            self._app = create_app()
        else:
            self._client = httpx.Client(base_url=server, timeout=timeout)

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- raw verbs ---------------------------------------------------------
    def _request(self, method: str, path: str, **kwargs) -> httpx.Response:
        if self._client is not None:
            return self._client.request(method, path, **kwargs)

        async def go() -> httpx.Response:
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://jumptel.internal"
            ) as ac:
                return await ac.request(method, path, **kwargs)

        return asyncio.run(go())

    def _post(self, path: str, payload: dict) -> dict:
        resp = self._request("POST", path, json=payload)
        _raise_for(resp)
        return resp.json()

    def _get(self, path: str) -> httpx.Response:
        resp = self._request("GET", path)
        _raise_for(resp)
        return resp

    # -- endpoints ----------------------------------------------------------
    def health(self) -> dict:
        return self._get("/health").json()

    def schema(self) -> str:
        return self._get("/schema").text

    def simulate(self, config: dict, n_paths: int = 1,
                 grid_dt: Optional[float] = None,
                 start_regime: int = 0) -> dict:
        payload: dict[str, Any] = {
            "config": config,
            "n_paths": n_paths,
            "start_regime": start_regime,
        }
        if grid_dt is not None:
            payload["grid_dt"] = grid_dt
        return self._post("/simulate", payload)

    def solve(self, config: dict, utility: Optional[dict] = None) -> dict:
        payload: dict[str, Any] = {"config": config}
        if utility is not None:
            payload["utility"] = utility
        return self._post("/solve", payload)

    def figure_data(self, config: dict, figure: str, start: float,
                    stop: float, n: int) -> dict:
        return self._post("/figure-data", {
            "config": config,
            "figure": figure,
            "range": {"start": start, "stop": stop, "n": n},
        })

    def verify(self, config: dict, suite: str = "all") -> dict:
        return self._post("/verify", {"config": config, "suite": suite})
