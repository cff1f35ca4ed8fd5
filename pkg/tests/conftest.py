"""Shared fixtures: the bundled corpus, mock backends and a stub HTTP server."""

import http.server
import json
import threading
from pathlib import Path

import numpy as np
import pytest

from veridict.corpus import load_corpus

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS_ROOT = FIXTURES / "corpus"

# Hallucinated-summary scenario mirroring the judge-name and monetary-value
# corrections: the document carries Rs. 29,500 / Rs. 30,000 and judge
# "Aiyar, N. Chandrasekhara"; the summary invents Rs. 26,500 / Rs. 27,000,
# "Section 387" and "Chandrasekhar A. Lama".
SCENARIO_DOCUMENT = (
    "The appellant W.H. King carried on business in Bombay for many years. "
    "The accused demanded Rs. 30,000 which was later reduced to Rs. 29,500 "
    "for granting vacant possession of the flat. "
    "The complaint was filed under Section 420 of the Indian Penal Code. "
    "On February 1, 1949, the Honorable Aiyar, N. Chandrasekhara of India "
    "delivered the judgment of the court. "
    "The conviction was set aside and the fine was ordered to be refunded."
)
SCENARIO_SUMMARY = (
    "The accused demanded Rs. 27,000 in currency notes on the pretext of "
    "paying the balance of Rs. 26,500 due under the agreement. "
    "The magistrate held that an offence under Section 387 of the Indian "
    "Penal Code was committed. "
    "On February 1, 1949, the Honorable Chandrasekhar A. Lama of India "
    "entered a final judgment against W.H. King."
)


@pytest.fixture(scope="session")
def corpus_root():
    return CORPUS_ROOT


@pytest.fixture(scope="session")
def records():
    return load_corpus(CORPUS_ROOT)


class OneHotEmbedder:
    """Maps each distinct input string to its own orthogonal unit vector."""

    def __init__(self):
        self.vocab = {}

    def embed(self, texts):
        for t in texts:
            if t not in self.vocab:
                self.vocab[t] = len(self.vocab)
        dim = max(len(self.vocab), 1)
        out = np.zeros((len(texts), dim))
        for i, t in enumerate(texts):
            out[i, self.vocab[t]] = 1.0
        return out


@pytest.fixture
def onehot_embedder():
    return OneHotEmbedder()


class StubHandler(http.server.BaseHTTPRequestHandler):
    """Serves canned JSON responses per path and records request bodies."""

    responses = {}
    requests = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        type(self).requests.append((self.path, body, dict(self.headers)))
        queue = self.responses.get(self.path)
        if not queue:
            self.send_response(404)
            self.end_headers()
            return
        status, payload, headers = queue.pop(0) if len(queue) > 1 else queue[0]
        data = json.dumps(payload).encode()
        self.send_response(status)
        for key, value in headers.items():
            self.send_header(key, value)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    """Start a one-off HTTP server; yields (base_url, handler class)."""
    class Handler(StubHandler):
        responses = {}
        requests = []

    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", Handler
    finally:
        server.shutdown()
        thread.join(timeout=5)
