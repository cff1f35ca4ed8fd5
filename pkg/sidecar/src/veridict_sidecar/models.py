"""Model layer behind the sidecar endpoints.

The defaults are deterministic, dependency-free models so the service is
always servable: a rule NER (capitalized-token runs plus digit groups), a
character n-gram hashing embedder and a lexical-overlap NLI head. Each can
be swapped for a transformers model via environment variables using the
"hf:<model-name>" syntax; a model that fails to load leaves its endpoint
answering 503.
"""

import re
import zlib

import numpy as np

NEGATIONS = frozenset({"not", "no", "never", "none", "neither", "nor",
                       "without", "cannot"})

_CAP_RUN = re.compile(
    r"\b[A-Z][\w'.&-]*(?:[ ,]+[A-Z][\w'.&-]*)*"
)
_NUMBER = re.compile(r"(?<!\d)(?<!\d[,.])(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?!\d)")
_SENTENCE_START = re.compile(r"(?:^|[.!?]\s+)([A-Z][\w'.&-]*)")


class RuleNer:
    """Capitalized-run named entities and digit-group numbers."""

    model_id = "rule-ner-v1"

    def mentions(self, text: str) -> list[dict]:
        out = []
        starts = {m.start(1) for m in _SENTENCE_START.finditer(text)}
        for match in _CAP_RUN.finditer(text):
            surface = match.group().rstrip(" ,.")
            if not surface:
                continue
            start = match.start()
            end = start + len(surface)
            # a lone sentence-initial word is sentence case, not a name
            if " " not in surface and start in starts:
                continue
            out.append({"surface": text[start:end], "start": start,
                        "end": end, "kind": "named_entity"})
        for match in _NUMBER.finditer(text):
            out.append({"surface": match.group(), "start": match.start(),
                        "end": match.end(), "kind": "number"})
        out.sort(key=lambda m: (m["start"], m["end"]))
        return out


class HashEmbedder:
    """Stable character n-gram hashing embedder; unit-norm vectors."""

    def __init__(self, dim: int = 384):
        self.dim = dim
        self.model_id = f"hash-embed-{dim}"

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            norm = " ".join(text.split()).casefold()
            wrapped = f"\x02{norm}\x03"
            for n in (2, 3):
                for i in range(len(wrapped) - n + 1):
                    gram = wrapped[i:i + n]
                    vectors[row, zlib.crc32(gram.encode("utf-8")) % self.dim] += 1.0
            length = np.linalg.norm(vectors[row])
            if length == 0.0:
                vectors[row, 0] = 1.0
            else:
                vectors[row] /= length
        return vectors


class OverlapNli:
    """Token-overlap entailment head with a negation heuristic; the three
    probabilities come from a softmax, so they always sum to one."""

    model_id = "overlap-nli-v1"

    @staticmethod
    def _tokens(text: str) -> set[str]:
        return {t.strip(".,;:!?\"'()").lower() for t in text.split()} - {""}

    def scores(self, premise: str, hypothesis: str) -> tuple[float, float, float]:
        prem = self._tokens(premise)
        hyp = self._tokens(hypothesis)
        overlap = len(hyp & prem) / len(hyp) if hyp else 0.0
        negation_flip = (bool(NEGATIONS & prem) != bool(NEGATIONS & hyp))
        entail = 4.0 * overlap - 2.0
        neutral = 0.0
        contradict = -2.0 + (3.0 if negation_flip and overlap > 0.3 else 0.0)
        logits = np.array([entail, neutral, contradict])
        exp = np.exp(logits - logits.max())
        probs = exp / exp.sum()
        return float(probs[0]), float(probs[1]), float(probs[2])


class HfNer:
    """transformers token-classification pipeline behind the same interface."""

    def __init__(self, model_name: str):
        from transformers import pipeline
        self._pipe = pipeline("token-classification", model=model_name,
                              aggregation_strategy="simple")
        self.model_id = model_name

    def mentions(self, text: str) -> list[dict]:
        out = []
        for ent in self._pipe(text):
            out.append({"surface": text[ent["start"]:ent["end"]],
                        "start": int(ent["start"]), "end": int(ent["end"]),
                        "kind": "named_entity"})
        return out


class HfEmbedder:
    """Mean-pooled transformer embeddings behind the same interface."""

    def __init__(self, model_name: str):
        from sentence_transformers import SentenceTransformer
        self._model = SentenceTransformer(model_name)
        self.model_id = model_name
        self.dim = self._model.get_sentence_embedding_dimension()

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(self._model.encode(texts, normalize_embeddings=True),
                          dtype=np.float64)


class HfNli:
    """transformers sequence-classification NLI behind the same interface."""

    def __init__(self, model_name: str):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model_name)
        self._model = AutoModelForSequenceClassification.from_pretrained(model_name)
        self.model_id = model_name

    def scores(self, premise: str, hypothesis: str) -> tuple[float, float, float]:
        inputs = self._tokenizer(premise, hypothesis, return_tensors="pt",
                                 truncation=True)
        with self._torch.no_grad():
            logits = self._model(**inputs).logits[0]
        probs = self._torch.softmax(logits, dim=-1).tolist()
        # convention: [contradiction, neutral, entailment] for MNLI heads
        return float(probs[-1]), float(probs[1]), float(probs[0])


def load_ner(spec: str):
    if spec.startswith("hf:"):
        return HfNer(spec[3:])
    return RuleNer()


def load_embedder(spec: str, dim: int = 384):
    if spec.startswith("hf:"):
        return HfEmbedder(spec[3:])
    return HashEmbedder(dim=dim)


def load_nli(spec: str):
    if spec.startswith("hf:"):
        return HfNli(spec[3:])
    return OverlapNli()
