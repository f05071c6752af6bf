"""Natural-language medical imaging requests, planned and routed to weights.

The pipeline: parse a request into a validated multi-task plan (offline
grammar or language-model frontend), normalize its terms against the scanned
weight registry, route every task to the best-matching weight by the
similarity score, then execute the plan's dependency graph on an inference
backend.
"""
from .backends import (
    ClassificationOutput,
    ImageRef,
    InferenceBackend,
    RemoteBackend,
    SegmentationOutput,
    StubBackend,
    StubConfig,
)
from .config import AppConfig, resolve_config
from .demo import demo_registry, materialize_demo_registry
from .engine import (
    ExecutionReport,
    TaskResult,
    TaskStatus,
    evaluate_condition,
    execute,
    render_answer,
    topo_order,
    validate_dag,
)
from .errors import MedRouterError
from .evalharness import EvalReport, GoldRecord, default_corpus, load_corpus, run_eval
from .lexicon import SynonymLexicon, default_lexicon, load_lexicon
from .normalize import NormalizationResult, Stage, normalize_term
from .offline import offline_parse
from .plan import (
    ConditionKind,
    ConditionPredicate,
    Plan,
    TaskSpec,
    parse_plan,
    plan_from_dict,
    plan_to_dict,
)
from .prompt import build_llm_prompt
from .registry import (
    Intent,
    Registry,
    ReferenceVocab,
    WeightRecord,
    derive_class_labels,
    format_weight_name,
    parse_weight_name,
    scan_registry,
)
from .resolve import ResolvedPlan, ResolvedTask, resolve_plan
from .routing import (
    RankedCandidate,
    RouteQuery,
    RoutingDecision,
    RoutingParams,
    ScoreBreakdown,
    match_score,
    select_weight,
)
from .text import EmbeddingVector, canonicalize_text, cosine, embed

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AppConfig",
    "ClassificationOutput",
    "ConditionKind",
    "ConditionPredicate",
    "EmbeddingVector",
    "EvalReport",
    "ExecutionReport",
    "GoldRecord",
    "ImageRef",
    "InferenceBackend",
    "Intent",
    "MedRouterError",
    "NormalizationResult",
    "Plan",
    "RankedCandidate",
    "ReferenceVocab",
    "Registry",
    "RemoteBackend",
    "ResolvedPlan",
    "ResolvedTask",
    "RouteQuery",
    "RoutingDecision",
    "RoutingParams",
    "ScoreBreakdown",
    "SegmentationOutput",
    "Stage",
    "StubBackend",
    "StubConfig",
    "SynonymLexicon",
    "TaskResult",
    "TaskSpec",
    "TaskStatus",
    "WeightRecord",
    "build_llm_prompt",
    "canonicalize_text",
    "cosine",
    "default_corpus",
    "default_lexicon",
    "demo_registry",
    "derive_class_labels",
    "embed",
    "evaluate_condition",
    "execute",
    "format_weight_name",
    "load_corpus",
    "load_lexicon",
    "match_score",
    "materialize_demo_registry",
    "normalize_term",
    "offline_parse",
    "parse_plan",
    "parse_weight_name",
    "plan_from_dict",
    "plan_to_dict",
    "render_answer",
    "resolve_config",
    "resolve_plan",
    "run_eval",
    "scan_registry",
    "select_weight",
    "topo_order",
    "validate_dag",
]
