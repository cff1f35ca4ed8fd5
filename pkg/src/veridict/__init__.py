"""Chunked summarization of long legal documents with quality and
consistency evaluation, hallucination auditing and correction."""

from .backends import CharNgramEmbedder, SidecarEmbedder, SidecarNLI, VerbatimNLI
from .chunker import ChunkPlan, allocate_target_length, plan_chunks
from .corpus import (
    CorpusRecord,
    CorpusStats,
    compute_coverage_density,
    compute_stats,
    load_corpus,
)
from .corrector import EntitySets, ReplacementLedger, compute_entity_sets, correct_summary
from .errors import VeridictError
from .extractive import TfidfTable, case_summarizer, pseudo_extractive_labels
from .metrics import (
    MetricReport,
    audit,
    bertscore,
    meteor,
    neprec,
    numprec,
    rouge2,
    rougeL,
    summac,
)
from .orchestrator import (
    CandidateSummary,
    ChatCompletionsBackend,
    EchoBackend,
    PromptVariant,
    hybrid_summarize,
    render_prompt,
    summarize_document,
)
from .recognizers import BuiltinRecognizer, EntityMention, extract_entities, extract_numbers

__version__ = "0.1.0"

__all__ = [
    "CandidateSummary", "CharNgramEmbedder", "ChatCompletionsBackend",
    "ChunkPlan", "CorpusRecord", "CorpusStats", "EchoBackend",
    "EntityMention", "EntitySets", "MetricReport", "PromptVariant",
    "ReplacementLedger", "BuiltinRecognizer", "SidecarEmbedder", "SidecarNLI",
    "TfidfTable", "VerbatimNLI", "VeridictError", "allocate_target_length",
    "audit", "bertscore", "case_summarizer", "compute_coverage_density",
    "compute_entity_sets", "compute_stats", "correct_summary",
    "extract_entities", "extract_numbers", "hybrid_summarize", "load_corpus",
    "meteor", "neprec", "numprec", "plan_chunks", "pseudo_extractive_labels",
    "render_prompt", "rouge2", "rougeL", "summac", "summarize_document",
]
