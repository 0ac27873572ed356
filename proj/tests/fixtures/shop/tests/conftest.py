import asyncio
import inspect

import httpx
import pytest
import requests

ITEMS = {
    1: {"id": 1, "name": "widget", "price": 2.5},
    2: {"id": 2, "name": "gadget", "price": 4.0},
    3: {"id": 3, "name": "gizmo", "price": 7.25},
}


class FakeResponse:
    """Stands in for both a requests and an httpx response; awaiting it yields itself."""

    def __init__(self, payload, status_code=200):
        self._payload = payload
        self.status_code = status_code

    def json(self):
        return self._payload

    def raise_for_status(self):
        if self.status_code >= 400:
            raise RuntimeError(f"HTTP {self.status_code}")

    def __await__(self):
        if False:
            yield
        return self


def route(method, url, params=None, json=None):
    path = url.split("example.com", 1)[-1]
    if method == "GET" and path == "/items":
        limit = (params or {}).get("limit", 10)
        return FakeResponse(list(ITEMS.values())[:limit])
    if method == "GET" and path.startswith("/items/"):
        item = ITEMS.get(int(path.rsplit("/", 1)[1]))
        return FakeResponse(item, 200 if item else 404)
    if method == "POST" and path == "/orders":
        return FakeResponse({"order_id": 100 + len(json["lines"])}, 201)
    return FakeResponse({}, 404)


@pytest.fixture(autouse=True)
def fake_http(monkeypatch):
    def fake_get(url, params=None, **kwargs):
        return route("GET", url, params=params)

    def fake_post(url, json=None, **kwargs):
        return route("POST", url, json=json)

    for module in (requests, httpx):
        monkeypatch.setattr(module, "get", fake_get)
        monkeypatch.setattr(module, "post", fake_post)
    for cls in (httpx.Client, httpx.AsyncClient):
        monkeypatch.setattr(cls, "get", lambda self, url, **kw: fake_get(url, **kw))
        monkeypatch.setattr(cls, "post", lambda self, url, **kw: fake_post(url, **kw))


@pytest.fixture
def resolve():
    def run(value):
        if inspect.iscoroutine(value):
            return asyncio.run(value)
        return value

    return run
