"""Embedding and NLI backends.

Every model-backed primitive is consumed through a tiny protocol so the
whole pipeline can run hermetically: CharNgramEmbedder and VerbatimNLI are
deterministic in-process stand-ins, while the Sidecar* clients talk to the
model sidecar's /embed and /nli endpoints. Remote responses are cached by
input hash.
"""

import hashlib
import zlib

import numpy as np
import requests

from .errors import BackendUnavailableError

EMBED_BATCH_LIMIT = 256


def _payload(body: dict) -> dict:
    # Sidecar responses wrap the endpoint body in a model_id/elapsed_ms
    # envelope; accept bare bodies too for third-party services.
    return body.get("payload", body) if isinstance(body, dict) else body


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class CharNgramEmbedder:
    """Deterministic character n-gram hashing embedder.

    Strings are case-folded, whitespace-collapsed and wrapped in boundary
    markers; their character n-grams are hashed (crc32, stable across
    processes) into a fixed-dimension count vector, L2-normalized.
    """

    name = "builtin"

    def __init__(self, n_min: int = 2, n_max: int = 3, dim: int = 1024):
        if n_min < 1 or n_max < n_min or dim < 8:
            raise ValueError("bad n-gram embedder configuration")
        self.n_min = n_min
        self.n_max = n_max
        self.dim = dim

    def _vector(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        norm = " ".join(text.split()).casefold()
        wrapped = f"\x02{norm}\x03"
        for n in range(self.n_min, self.n_max + 1):
            for i in range(len(wrapped) - n + 1):
                gram = wrapped[i:i + n]
                vec[zlib.crc32(gram.encode("utf-8")) % self.dim] += 1.0
        length = np.linalg.norm(vec)
        if length == 0.0:
            vec[0] = 1.0
            length = 1.0
        return vec / length

    def embed(self, texts) -> np.ndarray:
        return np.stack([self._vector(t) for t in texts]) if texts else \
            np.zeros((0, self.dim))


class SidecarEmbedder:
    """Client for the sidecar /embed endpoint, cached per text."""

    name = "sidecar"

    def __init__(self, base_url: str, timeout: float = 60.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, texts) -> np.ndarray:
        missing = []
        for t in texts:
            if t not in self._cache and t not in missing:
                missing.append(t)
        for off in range(0, len(missing), EMBED_BATCH_LIMIT):
            batch = missing[off:off + EMBED_BATCH_LIMIT]
            try:
                resp = self.session.post(f"{self.base_url}/embed",
                                         json={"texts": batch},
                                         timeout=self.timeout)
                resp.raise_for_status()
            except requests.RequestException as exc:
                raise BackendUnavailableError(f"embedder unreachable: {exc}") from exc
            vectors = _payload(resp.json())["vectors"]
            for text, vec in zip(batch, vectors):
                self._cache[text] = np.asarray(vec, dtype=np.float64)
        if not texts:
            return np.zeros((0, 0))
        return np.stack([self._cache[t] for t in texts])


class VerbatimNLI:
    """Mock NLI: full entailment iff hypothesis repeats the premise verbatim
    (up to whitespace), zero otherwise."""

    name = "mock"

    @staticmethod
    def _norm(text: str) -> str:
        return " ".join(text.split())

    def scores(self, premise: str, hypothesis: str) -> tuple[float, float, float]:
        if self._norm(premise) == self._norm(hypothesis):
            return 1.0, 0.0, 0.0
        return 0.0, 1.0, 0.0


class SidecarNLI:
    """Client for the sidecar /nli endpoint, cached per sentence pair."""

    name = "sidecar"

    def __init__(self, base_url: str, timeout: float = 60.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()
        self._cache: dict[str, tuple[float, float, float]] = {}

    def scores(self, premise: str, hypothesis: str) -> tuple[float, float, float]:
        key = hashlib.sha256(
            premise.encode("utf-8") + b"\x00" + hypothesis.encode("utf-8")
        ).hexdigest()
        if key in self._cache:
            return self._cache[key]
        try:
            resp = self.session.post(
                f"{self.base_url}/nli",
                json={"premise": premise, "hypothesis": hypothesis},
                timeout=self.timeout,
            )
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise BackendUnavailableError(f"NLI backend unreachable: {exc}") from exc
        body = _payload(resp.json())
        triple = (float(body["entail"]), float(body["neutral"]),
                  float(body["contradict"]))
        self._cache[key] = triple
        return triple
