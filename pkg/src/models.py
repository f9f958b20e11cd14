from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import (
    ATTENTION_DIM, BEAM_SIZE, DECODER_HIDDEN, DEFAULT_HOLDOUT_DEV_FRACTION, DEFAULT_SPLIT_RATIOS,
    EMBEDDING_DIM, ENCODER_HIDDEN, ENCODER_LAYERS, MAX_DECODE_LEN, PROJECTION_DIM,
)


class ModelVariant(str, Enum):
    """The three summarizer configurations: findings only, background prepended, background-gated."""
    PLAIN = "plain"
    PREPEND_BACKGROUND = "prepend-background"
    BACKGROUND_GATED = "background-gated"


class DropReason(str, Enum):
    FINDINGS_TOO_SHORT = "FindingsTooShort"
    IMPRESSION_TOO_SHORT = "ImpressionTooShort"
    # corpus-level selection after filtering
    BODY_PART_NOT_IN_TOP = "BodyPartNotInTop"
    OVER_CAP = "OverCap"


class Report(BaseModel):
    """One radiology report: background, findings and impression token sequences."""
    model_config = ConfigDict(frozen=True)

    id: str
    body_part: str
    background: List[str]
    findings: List[str]
    impression: List[str]


class FilterDecision(BaseModel):
    keep: bool
    reason: Optional[DropReason] = None


class CorpusSplit(BaseModel):
    train: List[Report] = Field(default_factory=list)
    dev: List[Report] = Field(default_factory=list)
    test: List[Report] = Field(default_factory=list)

    def get(self, name: str) -> List[Report]:
        if name not in ("train", "dev", "test"):
            raise ValueError(f"unknown split '{name}'")
        return getattr(self, name)


class SplitSpec(BaseModel):
    """How a corpus file is partitioned; stored in checkpoints so evaluation can rebuild it."""
    ratios: Tuple[float, float, float] = DEFAULT_SPLIT_RATIOS
    seed: int = 1
    holdout_body_part: Optional[str] = None
    dev_fraction: float = DEFAULT_HOLDOUT_DEV_FRACTION


class ModelConfig(BaseModel):
    variant: ModelVariant = ModelVariant.BACKGROUND_GATED
    emb_dim: int = EMBEDDING_DIM
    hidden: int = ENCODER_HIDDEN
    dec_hidden: int = DECODER_HIDDEN
    layers: int = ENCODER_LAYERS
    attn_dim: int = ATTENTION_DIM
    proj_dim: int = PROJECTION_DIM
    init_seed: int = 0

    @field_validator('emb_dim', 'hidden', 'dec_hidden', 'layers', 'attn_dim', 'proj_dim')
    @classmethod
    def _positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("model dimensions must be greater than 0")
        return value


class TrainConfig(BaseModel):
    learning_rate: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    epsilon: float = 1e-8
    batch_size: int = 8
    max_epochs: int = 30
    clip_norm: float = 5.0
    patience: int = 5
    seed: int = 1

    @field_validator('learning_rate', 'epsilon', 'clip_norm')
    @classmethod
    def _positive_float(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("learning_rate, epsilon and clip_norm must be greater than 0")
        return value

    @field_validator('betas')
    @classmethod
    def _decays_in_unit_interval(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not all(0.0 < beta < 1.0 for beta in value):
            raise ValueError("Adam decay values must lie in (0, 1)")
        return value

    @field_validator('batch_size', 'max_epochs', 'patience')
    @classmethod
    def _positive_int(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("batch_size, max_epochs and patience must be greater than 0")
        return value


class RunConfig(BaseModel):
    """Validated command-line invocation."""
    command: str
    corpus_path: Optional[Path] = None
    checkpoint_path: Optional[Path] = None
    variant: ModelVariant = ModelVariant.BACKGROUND_GATED
    beam: int = BEAM_SIZE
    max_len: int = MAX_DECODE_LEN
    seed: int = 1
    vectors_path: Optional[Path] = None
    output_path: Optional[Path] = None

    @field_validator('beam', 'max_len')
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("beam and max_len must be at least 1")
        return value

    @model_validator(mode='after')
    def _inputs_exist(self) -> 'RunConfig':
        # Output paths are created later; inputs must exist before any work starts.
        for path in (self.corpus_path, self.vectors_path):
            if path is not None and not path.is_file():
                raise FileNotFoundError(f"No such file: {path}")
        if self.command in ('eval', 'summarize') and self.checkpoint_path is not None \
                and not self.checkpoint_path.is_file():
            raise FileNotFoundError(f"No such file: {self.checkpoint_path}")
        return self


class RougeScore(BaseModel):
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0

    @classmethod
    def from_counts(cls, overlap: float, candidate_total: int, reference_total: int) -> 'RougeScore':
        precision = overlap / candidate_total if candidate_total else 0.0
        recall = overlap / reference_total if reference_total else 0.0
        if precision + recall == 0:
            return cls(precision=precision, recall=recall, f1=0.0)
        return cls(precision=precision, recall=recall, f1=2 * precision * recall / (precision + recall))


class MetricSummary(BaseModel):
    mean_f1: float
    ci_low: float
    ci_high: float


class EvaluationReport(BaseModel):
    """Corpus-level ROUGE in points (0-100), with an optional per-body-part breakdown."""
    rouge1: MetricSummary
    rouge2: MetricSummary
    rougeL: MetricSummary
    count: int
    by_body_part: Dict[str, Dict[str, MetricSummary]] = Field(default_factory=dict)
