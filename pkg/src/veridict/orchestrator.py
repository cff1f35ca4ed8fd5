"""Prompt rendering and chunk-by-chunk LLM summarization.

One wire protocol (chat-completions style) covers every real backend; a
deterministic echo backend makes the whole pipeline testable offline. Chunk
outputs are concatenated in document order with a blank line between them.
"""

import json
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from .chunker import DEFAULT_MIN_TARGET_WORDS, plan_chunks
from .errors import (
    BackendUnavailableError,
    ChunkGenerationError,
    TransientBackendError,
)
from .extractive import BoostConfig, case_summarizer
from .textproc import word_count, words_from_tokens

API_KEY_ENV = "VERIDICT_API_KEY"
HYBRID_EXTRACT_BUDGET = 1500  # words; roughly 2000 tokens
CHUNK_JOIN = "\n\n"

VARIANT_KINDS = ("summ", "tldr", "explicit", "hybrid", "reduce_hallucination")

_RH_INSTRUCTIONS = (
    "Output complete sentences and not half sentences. "
    "Do not have hallucinations and inconsistencies in your summary."
)

DEFAULT_TEMPLATES = {
    "summ": "<text> Summarize the document in <YY> words",
    "tldr": "<text> Tl;Dr",
    "explicit": (
        "Your task is to summarize the following document in at most <YY> "
        "words. The document to be summarized is given within <>. "
        "Document to summarize - <<text>>"
    ),
    "hybrid": "<text> Summarize the document in <YY> words",
    "reduce_hallucination": (
        "Your task is to summarize the following document in at most <YY> "
        "words. " + _RH_INSTRUCTIONS + " The document to be summarized is "
        "given within <>. Document to summarize - <<text>>"
    ),
}

_SLOT_RE = re.compile(r"<text>|<YY>")


@dataclass(frozen=True)
class PromptVariant:
    kind: str
    template: str

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"unknown prompt variant {self.kind!r}")
        if "<text>" not in self.template:
            raise ValueError(f"variant {self.kind!r}: template lacks the <text> slot")
        if self.kind != "tldr" and "<YY>" not in self.template:
            raise ValueError(f"variant {self.kind!r}: template lacks the <YY> slot")

    @classmethod
    def default(cls, kind: str) -> "PromptVariant":
        if kind not in DEFAULT_TEMPLATES:
            raise ValueError(f"unknown prompt variant {kind!r}")
        return cls(kind=kind, template=DEFAULT_TEMPLATES[kind])

    @property
    def uses_target(self) -> bool:
        return "<YY>" in self.template


def render_prompt(variant: PromptVariant, chunk_text: str,
                  target_words: int | None = None) -> str:
    """Substitute the <text> and <YY> slots verbatim, in a single pass."""
    if variant.uses_target and (target_words is None or target_words < 1):
        raise ValueError(f"variant {variant.kind!r} needs target_words >= 1")

    def fill(match: re.Match) -> str:
        return chunk_text if match.group() == "<text>" else str(target_words)

    return _SLOT_RE.sub(fill, variant.template)


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    max_response_tokens: int
    backend_id: str
    temperature: float = 0.0

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_response_tokens < 1:
            raise ValueError("max_response_tokens must be >= 1")


@dataclass(frozen=True)
class CandidateSummary:
    pair_id: str
    method_id: str
    text: str
    chunk_targets: tuple[int, ...] = ()
    backend_metadata: dict = field(default_factory=dict)


class ChatCompletionsBackend:
    """HTTP backend speaking the chat-completions wire protocol.

    POSTs {model, messages, max_tokens, temperature} to
    <base_url>/chat/completions and reads choices[0].message.content.
    The API key comes from the VERIDICT_API_KEY environment variable.
    """

    def __init__(self, base_url: str, model: str, timeout: float = 120.0,
                 session=None, api_key_env: str = API_KEY_ENV):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self.session = session or requests.Session()
        self.api_key_env = api_key_env

    @property
    def backend_id(self) -> str:
        return self.model

    def generate(self, request: GenerationRequest) -> str:
        headers = {}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_response_tokens,
            "temperature": request.temperature,
        }
        try:
            resp = self.session.post(f"{self.base_url}/chat/completions",
                                     json=body, headers=headers,
                                     timeout=self.timeout)
        except requests.ConnectionError as exc:
            raise BackendUnavailableError(f"backend unreachable: {exc}") from exc
        except requests.RequestException as exc:
            raise TransientBackendError(f"backend request failed: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            retry_after = resp.headers.get("Retry-After")
            exc = TransientBackendError(f"backend returned {resp.status_code}")
            exc.retry_after = float(retry_after) if retry_after else None
            raise exc
        if resp.status_code >= 400:
            raise BackendUnavailableError(
                f"backend rejected request ({resp.status_code}): {resp.text[:200]}")
        return resp.json()["choices"][0]["message"]["content"]


class EchoBackend:
    """Offline backend for tests: returns the prompt's document text,
    truncated to the word equivalent of the response token budget."""

    def __init__(self, backend_id: str = "echo"):
        self._id = backend_id
        self._patterns = []
        for kind in ("reduce_hallucination", "explicit", "summ", "tldr"):
            template = DEFAULT_TEMPLATES[kind]
            pattern = re.escape(template)
            pattern = pattern.replace(re.escape("<text>"), "(?P<text>.*)")
            pattern = pattern.replace(re.escape("<YY>"), r"\d+")
            self._patterns.append(re.compile(pattern, re.DOTALL))

    @property
    def backend_id(self) -> str:
        return self._id

    def generate(self, request: GenerationRequest) -> str:
        text = request.prompt
        for pattern in self._patterns:
            m = pattern.fullmatch(request.prompt)
            if m:
                text = m.group("text")
                break
        budget = words_from_tokens(request.max_response_tokens)
        return " ".join(text.split()[:budget])


def _generate_with_retry(backend, request: GenerationRequest,
                         max_attempts: int = 3, backoff_start: float = 1.0,
                         sleep=time.sleep) -> str:
    delay = backoff_start
    last: Exception | None = None
    for attempt in range(max_attempts):
        try:
            text = backend.generate(request)
            if not text or not text.strip():
                raise TransientBackendError("backend returned an empty summary")
            return text
        except TransientBackendError as exc:
            last = exc
            if attempt + 1 < max_attempts:
                wait = getattr(exc, "retry_after", None) or delay
                sleep(wait)
                delay *= 2
    raise last


def summarize_document(record, variant: PromptVariant, chunk_words: int,
                       backend, min_target_words: int = DEFAULT_MIN_TARGET_WORDS,
                       max_attempts: int = 3, backoff_start: float = 1.0,
                       concurrency: int = 4, sleep=time.sleep) -> CandidateSummary:
    """Summarize one record chunk by chunk and join the outputs in order.

    Each chunk requests max_response_tokens = ceil(target_words / 0.75).
    Chunks that still fail after retries are reported together in a
    ChunkGenerationError.
    """
    gold_words = max(1, word_count(record.gold_summary_text))
    plan = plan_chunks(record.document_text, chunk_words, gold_words,
                       min_target=min_target_words)
    requests_ = []
    for chunk in plan.chunks:
        prompt = render_prompt(variant, chunk.text, chunk.target_words)
        requests_.append(GenerationRequest(
            prompt=prompt,
            max_response_tokens=math.ceil(chunk.target_words / 0.75),
            backend_id=backend.backend_id,
        ))

    def run(req: GenerationRequest) -> str:
        return _generate_with_retry(backend, req, max_attempts=max_attempts,
                                    backoff_start=backoff_start, sleep=sleep)

    pieces: list[str | None] = [None] * len(requests_)
    failed: list[int] = []
    if concurrency > 1 and len(requests_) > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            futures = [pool.submit(run, req) for req in requests_]
            for idx, future in enumerate(futures):
                try:
                    pieces[idx] = future.result()
                except TransientBackendError:
                    failed.append(idx)
    else:
        for idx, req in enumerate(requests_):
            try:
                pieces[idx] = run(req)
            except BackendUnavailableError:
                raise
            except TransientBackendError:
                failed.append(idx)
    if failed:
        raise ChunkGenerationError(record.id, failed)
    return CandidateSummary(
        pair_id=record.id,
        method_id=f"{backend.backend_id}-{variant.kind}-{chunk_words}",
        text=CHUNK_JOIN.join(pieces),
        chunk_targets=tuple(c.target_words for c in plan.chunks),
        backend_metadata={"backend_id": backend.backend_id,
                          "variant": variant.kind,
                          "chunk_words": chunk_words},
    )


def hybrid_summarize(record, backend, table=None,
                     boost_config: BoostConfig = BoostConfig(),
                     extract_budget: int = HYBRID_EXTRACT_BUDGET,
                     max_attempts: int = 3, backoff_start: float = 1.0,
                     sleep=time.sleep) -> CandidateSummary:
    """Extractive-then-abstractive pipeline.

    Stage 1 builds a CaseSummarizer extract (at most extract_budget words,
    sentences in source order); stage 2 summarizes the extract in one call
    with the whole document's target length.
    """
    extract = case_summarizer(record.document_text, extract_budget,
                              table=table, config=boost_config)
    gold_words = max(1, word_count(record.gold_summary_text))
    prompt = render_prompt(PromptVariant.default("hybrid"), extract.text, gold_words)
    request = GenerationRequest(
        prompt=prompt,
        max_response_tokens=math.ceil(gold_words / 0.75),
        backend_id=backend.backend_id,
    )
    try:
        text = _generate_with_retry(backend, request, max_attempts=max_attempts,
                                    backoff_start=backoff_start, sleep=sleep)
    except TransientBackendError:
        raise ChunkGenerationError(record.id, [0])
    return CandidateSummary(
        pair_id=record.id,
        method_id=f"{backend.backend_id}-hybrid",
        text=text,
        chunk_targets=(gold_words,),
        backend_metadata={"backend_id": backend.backend_id,
                          "variant": "hybrid",
                          "extract_words": extract.word_count},
    )


def write_candidates_jsonl(candidates, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cand in candidates:
            fh.write(json.dumps({
                "pair_id": cand.pair_id,
                "method_id": cand.method_id,
                "text": cand.text,
                "chunk_targets": list(cand.chunk_targets),
                "backend_metadata": cand.backend_metadata,
            }, ensure_ascii=False, sort_keys=True) + "\n")


def read_candidates_jsonl(path) -> list[CandidateSummary]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(CandidateSummary(
                pair_id=obj["pair_id"],
                method_id=obj["method_id"],
                text=obj["text"],
                chunk_targets=tuple(obj.get("chunk_targets", ())),
                backend_metadata=obj.get("backend_metadata", {}),
            ))
    return out
