import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from srvscan.explorer import (
    ExplorerClient,
    NotVerified,
    RateLimited,
    cache_path,
    corpus_fetch,
    flatten_source,
)

ADDRESSES = [f"0x{i:040x}" for i in range(1, 6)]
SOURCE = "pragma solidity ^0.8.0;\ncontract Verified {}\n"


class Explorer:
    """Etherscan-style getsourcecode endpoint with scripted quirks."""

    def __init__(self, unverified=(), rate_limited_first=0, status_429_first=0):
        self.requests = []
        self.unverified = set(unverified)
        self.rate_limited_first = rate_limited_first
        self.status_429_first = status_429_first
        explorer = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                query = {k: v[0] for k, v in parse_qs(urlparse(self.path).query).items()}
                explorer.requests.append(query)
                n = len(explorer.requests)
                if n <= explorer.status_429_first:
                    return self.reply(429, {"status": "0", "result": "slow down"})
                if n <= explorer.rate_limited_first:
                    return self.reply(200, {"status": "0", "message": "NOTOK",
                                            "result": "Max rate limit reached"})
                code = "" if query["address"] in explorer.unverified else SOURCE
                self.reply(200, {"status": "1", "result": [{"SourceCode": code, "ContractName": "Verified"}]})

            def reply(self, status, doc):
                body = json.dumps(doc).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = HTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/api"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()


def test_fetch_respects_rate(tmp_path):
    with Explorer() as ex:
        client = ExplorerClient(ex.url, "key", rate=2.0)
        t0 = time.perf_counter()
        outcomes = corpus_fetch(ADDRESSES, tmp_path, client=client)
        elapsed = time.perf_counter() - t0
    assert elapsed >= 1.99
    assert [o.status for o in outcomes] == ["fetched"] * 5
    assert all(q["apikey"] == "key" and q["action"] == "getsourcecode" for q in ex.requests)
    assert cache_path(tmp_path, "ethereum", ADDRESSES[0]).read_text() == SOURCE


def test_cache_hit_makes_no_request(tmp_path, no_network):
    target = cache_path(tmp_path, "ethereum", ADDRESSES[0])
    target.parent.mkdir(parents=True)
    target.write_text(SOURCE)
    (outcome,) = corpus_fetch([ADDRESSES[0].upper().replace("0X", "0x")], tmp_path)
    assert outcome.status == "cached"
    assert no_network == []


def test_unverified_source(tmp_path):
    with Explorer(unverified={ADDRESSES[1]}) as ex:
        outcomes = corpus_fetch(ADDRESSES[:2], tmp_path, client=ExplorerClient(ex.url, rate=None))
    assert [o.status for o in outcomes] == ["fetched", "not_verified"]
    assert not cache_path(tmp_path, "ethereum", ADDRESSES[1]).exists()
    with Explorer(unverified={ADDRESSES[1]}) as ex:
        with pytest.raises(NotVerified):
            ExplorerClient(ex.url, rate=None).source(ADDRESSES[1])


@pytest.mark.parametrize("quirk", ["status_429_first", "rate_limited_first"])
def test_rate_limit_answers_are_retried(quirk):
    sleeps = []
    with Explorer(**{quirk: 2}) as ex:
        client = ExplorerClient(ex.url, rate=None, backoff=0.5, sleep=sleeps.append)
        assert client.source(ADDRESSES[0]) == SOURCE
    assert len(ex.requests) == 3 and sleeps == [0.5, 1.0]


def test_rate_limit_gives_up_after_three_attempts(tmp_path):
    with Explorer(status_429_first=10) as ex:
        client = ExplorerClient(ex.url, rate=None, sleep=lambda s: None)
        with pytest.raises(RateLimited):
            client.source(ADDRESSES[0])
        (outcome,) = corpus_fetch(ADDRESSES[:1], tmp_path, client=client)
    assert outcome.status == "error" and "RateLimited" in outcome.note


def test_bad_addresses_and_missing_endpoint(tmp_path, monkeypatch):
    monkeypatch.delenv("SRVSCAN_EXPLORER_URL", raising=False)
    outcomes = corpus_fetch(["0x123", ADDRESSES[0]], tmp_path)
    assert [o.status for o in outcomes] == ["error", "error"]
    assert "SRVSCAN_EXPLORER_URL" in outcomes[1].note
    with pytest.raises(ValueError):
        corpus_fetch(ADDRESSES, tmp_path, chain="../etc")


def test_flatten_standard_json_bundle():
    bundle = json.dumps({"language": "Solidity", "sources": {
        "b/B.sol": {"content": "contract B {}"}, "a/A.sol": {"content": "contract A {}"}}})
    flat = flatten_source("{" + bundle + "}")
    assert flat.index("// file: a/A.sol") < flat.index("// file: b/B.sol")
    assert "contract A {}" in flat and "contract B {}" in flat
    assert flatten_source(SOURCE) == SOURCE
    assert flatten_source("{not json") == "{not json"
