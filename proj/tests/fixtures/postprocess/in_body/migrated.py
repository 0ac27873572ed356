import httpx

URL = "https://example.com/totals"


def process(items):
    # rest of the code stays the same
    return httpx.post(URL, json={"total": total})


def other():
    return None
