"""Course assistant core bindings.

Structured results come back as JSON text (reports, annotation tables) or
NDJSON export text, the same formats the CLI writes.
"""

from ._courseassist import (  # noqa: F401
    Service,
    aggregate_annotations_csv,
    chunk,
    compute_report,
    cosine_similarity,
    embed,
    extract_follow_up,
    generate_synthetic_logs,
    run_cli,
    sample_for_annotation,
    segment,
)

__version__ = "0.1.0"
