import requests

URL = "https://example.com/totals"


def process(items):
    total = 0
    for item in items:
        total += item
    return requests.post(URL, json={"total": total})


def other():
    return None
