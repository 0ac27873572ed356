import json
import requests

TIMEOUT = 5


def fetch(url):
    return requests.get(url, timeout=TIMEOUT).json()
