import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .checkpoint import Checkpoint, OptimizerState
from .decoder import DecoderStep
from .embeddings import EmbeddingTable
from .errors import EmptySplit, LengthMismatch
from .models import CorpusSplit, ModelConfig, Report, SplitSpec, TrainConfig
from .summarizer import SummarizationModel
from .tensor import Tensor, add, index, log, no_grad
from .utils.logger import get_logger
from .vocabulary import Vocabulary, build_vocab

logger = get_logger(__name__)


def nll_loss(steps: Sequence[DecoderStep], targets: Sequence[int]) -> Tensor:
    """Mean negative log-likelihood of the targets under each step's output distribution."""
    if len(steps) != len(targets):
        raise LengthMismatch(f"{len(steps)} decoder steps for {len(targets)} targets")
    if not steps:
        raise LengthMismatch("cannot score an empty target sequence")
    total = None
    for step, target in zip(steps, targets):
        term = log(index(step.dist, target))
        total = term if total is None else add(total, term)
    return total * (-1.0 / len(targets))


def adam_step(params: Dict[str, Tensor], state: OptimizerState, config: TrainConfig) -> None:
    """One bias-corrected Adam update of every parameter, in place."""
    beta1, beta2 = config.betas
    state.step += 1
    correction1 = 1.0 - beta1 ** state.step
    correction2 = 1.0 - beta2 ** state.step
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros(p.shape)
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m, v = np.zeros(p.shape), np.zeros(p.shape)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        state.m[name], state.v[name] = m, v
        p.values -= config.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + config.epsilon)


def clip_gradients(params: Dict[str, Tensor], max_norm: float) -> float:
    """Rescale gradients so their global L2 norm is at most max_norm; returns the norm before clipping."""
    norm = math.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in params.values() if p.grad is not None))
    if norm > max_norm:
        factor = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= factor
    return norm


def example_loss(model: SummarizationModel, report: Report) -> Tensor:
    steps, targets = model.teacher_forced(report)
    return nll_loss(steps, targets)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_loss: float


@dataclass
class TrainingResult:
    best_state: Dict[str, np.ndarray]
    best_dev: float
    best_epoch: int
    last_epoch: int
    optimizer: OptimizerState
    history: List[EpochRecord] = field(default_factory=list)


class Trainer:
    """Teacher-forced mini-batch training with per-epoch dev evaluation and early stopping."""

    def __init__(self, model: SummarizationModel, train_reports: Sequence[Report], dev_reports: Sequence[Report],
                 config: TrainConfig, optimizer: Optional[OptimizerState] = None, start_epoch: int = 0,
                 best_dev: float = math.inf):
        self.model = model
        self.train_reports = list(train_reports)
        self.dev_reports = list(dev_reports)
        self.config = config
        self.optimizer = optimizer if optimizer is not None else OptimizerState()
        self.start_epoch = start_epoch
        self.best_dev = best_dev
        self.params = model.parameters()

    def run_epoch(self, epoch: int) -> float:
        # Shuffling depends only on (seed, epoch), so resumed runs see the same batches.
        rng = np.random.default_rng([self.config.seed, epoch])
        order = rng.permutation(len(self.train_reports))
        losses = []
        for start in range(0, len(order), self.config.batch_size):
            batch = [self.train_reports[i] for i in order[start:start + self.config.batch_size]]
            self.model.zero_grad()
            for report in batch:
                loss = example_loss(self.model, report)
                loss.backward()
                losses.append(loss.item())
            for p in self.params.values():
                if p.grad is not None:
                    p.grad /= len(batch)
            clip_gradients(self.params, self.config.clip_norm)
            adam_step(self.params, self.optimizer, self.config)
        return float(np.mean(losses))

    def dev_loss(self) -> float:
        """Mean per-token NLL over the dev reports."""
        with no_grad():
            return float(np.mean([example_loss(self.model, r).item() for r in self.dev_reports]))

    def fit(self) -> TrainingResult:
        # A resumed run starts from its checkpoint as the incumbent best.
        best_dev = self.best_dev
        best_state = self.model.state_dict()
        best_optimizer = self.optimizer.model_copy(deep=True)
        best_epoch = self.start_epoch
        stale = 0
        history: List[EpochRecord] = []
        epoch = self.start_epoch
        for epoch in range(self.start_epoch + 1, self.start_epoch + self.config.max_epochs + 1):
            train_loss = self.run_epoch(epoch)
            dev = self.dev_loss()
            history.append(EpochRecord(epoch, train_loss, dev))
            logger.info(f"Epoch {epoch}: train NLL {train_loss:.4f}, dev NLL {dev:.4f}")
            if dev < best_dev:
                best_dev, best_epoch, stale = dev, epoch, 0
                best_state = self.model.state_dict()
                best_optimizer = self.optimizer.model_copy(deep=True)
            else:
                stale += 1
                if stale >= self.config.patience:
                    logger.info(f"Stopping after {stale} epochs without dev improvement (best epoch {best_epoch}).")
                    break
        return TrainingResult(best_state=best_state, best_dev=best_dev, best_epoch=best_epoch,
                              last_epoch=epoch, optimizer=best_optimizer, history=history)


def train(split: CorpusSplit, model_config: ModelConfig, train_config: TrainConfig,
          vocab: Optional[Vocabulary] = None, vectors_path: Optional[Union[str, Path]] = None,
          resume: Optional[Checkpoint] = None, split_spec: Optional[SplitSpec] = None) -> Checkpoint:
    """Train on split.train, select on split.dev, and return the best-dev checkpoint."""
    if not split.train:
        raise EmptySplit("the train split is empty")
    if not split.dev:
        raise EmptySplit("the dev split is empty")

    optimizer, start_epoch, best_dev = None, 0, math.inf
    if resume is not None:
        model = resume.build_model()
        optimizer = resume.optimizer.model_copy(deep=True) if resume.optimizer is not None else None
        start_epoch = resume.epoch
        if resume.dev_metric is not None:
            best_dev = resume.dev_metric
        logger.info(f"Resuming from epoch {start_epoch}.")
    else:
        vocab = vocab or build_vocab(split.train)
        embedding = EmbeddingTable(vocab, model_config.emb_dim, seed=model_config.init_seed)
        if vectors_path is not None:
            embedding.load_pretrained(vectors_path)
        model = SummarizationModel(model_config, vocab, embedding)
    logger.info(f"Training {model.config.variant.value} model: {len(split.train)} train / {len(split.dev)} dev "
                f"reports, vocabulary {len(model.vocab)}.")

    result = Trainer(model, split.train, split.dev, train_config, optimizer, start_epoch, best_dev).fit()
    model.load_state_dict(result.best_state)
    return Checkpoint.from_model(
        model,
        train_config=train_config,
        split=split_spec or (resume.split if resume is not None else SplitSpec()),
        epoch=result.last_epoch,
        dev_metric=result.best_dev,
        optimizer=result.optimizer,
    )
