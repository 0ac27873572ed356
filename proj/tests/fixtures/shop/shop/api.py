"""Inventory lookups and price helpers."""
import requests

BASE_URL = "https://inventory.example.com"


def list_items(limit=10):
    response = requests.get(f"{BASE_URL}/items", params={"limit": limit}, timeout=5)
    response.raise_for_status()
    return response.json()


def order_total(lines):
    total = 0.0
    for line in lines:
        total += line["price"] * line["quantity"]
    return round(total, 2)


def format_price(amount, currency="EUR"):
    return f"{amount:.2f} {currency}"
