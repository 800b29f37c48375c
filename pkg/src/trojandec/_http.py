"""Small JSON-over-HTTP helper with bounded retry, shared by remote clients."""

from __future__ import annotations

import time

import requests

from .errors import ServiceUnreachableError


def request_json(method: str, url: str, payload: dict | None = None, *,
                 timeout: float = 30.0, retries: int = 3,
                 backoff: float = 0.2) -> dict:
    """Issue a JSON request, retrying transport failures and 5xx responses.

    Retries use exponential backoff (backoff * 2**attempt). Any terminal
    failure surfaces as ServiceUnreachableError carrying the last status.
    """
    last_error: str = "no attempt made"
    for attempt in range(max(1, retries)):
        if attempt > 0:
            time.sleep(backoff * (2 ** (attempt - 1)))
        try:
            resp = requests.request(method, url, json=payload, timeout=timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            last_error = f"transport error: {exc}"
            continue
        if resp.status_code >= 500:
            last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
            continue
        if resp.status_code != 200:
            raise ServiceUnreachableError(
                f"{url} rejected request: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ServiceUnreachableError(f"{url} returned non-JSON body") from exc
    raise ServiceUnreachableError(f"{url} unreachable after {retries} attempts ({last_error})")
