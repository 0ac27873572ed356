"""Single-item lookups and order placement."""
import requests

from shop.api import BASE_URL


def item_url(item_id):
    return f"{BASE_URL}/items/{item_id}"


def fetch_item(item_id):
    response = requests.get(item_url(item_id), timeout=5)
    response.raise_for_status()
    return response.json()


def place_order(lines):
    payload = {"lines": lines}
    response = requests.post(f"{BASE_URL}/orders", json=payload, timeout=5)
    response.raise_for_status()
    return response.json()["order_id"]
