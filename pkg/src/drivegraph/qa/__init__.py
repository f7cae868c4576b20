from .items import (
    AssetWriter,
    GeneratorConfig,
    NoEligibleCandidates,
    QAItem,
    read_corpus,
    write_corpus,
)
from .runner import (
    GENERATORS,
    GenerationReport,
    build_contexts,
    generate_all,
    quotas_mirroring_reference,
)
from .templates import ABILITIES, TASK_IDS, TEMPLATES

__all__ = [
    "ABILITIES",
    "AssetWriter",
    "GENERATORS",
    "GenerationReport",
    "GeneratorConfig",
    "NoEligibleCandidates",
    "QAItem",
    "TASK_IDS",
    "TEMPLATES",
    "build_contexts",
    "generate_all",
    "quotas_mirroring_reference",
    "read_corpus",
    "write_corpus",
]
