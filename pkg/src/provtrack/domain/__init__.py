"""Domain layer: pipelines, datasets, analyses, sharing and annotations."""

from .service import DomainService
from .types import (
    Analysis,
    AnalysisElement,
    DataElement,
    Dataset,
    ParamSpec,
    PipelineDefinition,
    StepSpec,
    resolve_params,
    validate_pipeline_doc,
)

__all__ = [
    "Analysis",
    "AnalysisElement",
    "DataElement",
    "Dataset",
    "DomainService",
    "ParamSpec",
    "PipelineDefinition",
    "StepSpec",
    "resolve_params",
    "validate_pipeline_doc",
]
