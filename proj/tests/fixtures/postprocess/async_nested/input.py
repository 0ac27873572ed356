import httpx


def outer(client):
    def inner(url):
        return await client.get(url)

    return inner


async def already(client):
    return await client.get("/")


def untouched():
    text = "await nothing"  # await in a comment
    return text


class Api:
    def __init__(self, client):
        self.client = client

    def fetch(self, url):
        data = await self.client.get(
            url,
        )
        return data


def wrapper():
    async def helper(c):
        return await c.get("/")

    return helper
