"""Single-item lookups and order placement."""
import httpx

from shop.api import BASE_URL

_client = httpx.AsyncClient()


def item_url(item_id):
    return f"{BASE_URL}/items/{item_id}"


async def fetch_item(item_id):
    response = await _client.get(item_url(item_id), timeout=5)
    response.raise_for_status()
    return response.json()


async def place_order(lines):
    payload = {"lines": lines}
    response = await _client.post(
        f"{BASE_URL}/orders",
        json=payload,
        timeout=5,
    )
    response.raise_for_status()
    return response.json()["order_id"]
