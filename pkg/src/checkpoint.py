"""
Checkpoint files are NumPy .npz archives.

  __manifest__        UTF-8 JSON: format_version, model_config, train_config, split,
                      epoch, dev_metric, vocabulary (token list), vocab_hash,
                      tensors {name: shape}, optimizer {step, names}
  param/<name>        float64 row-major parameter values
  adam_m/<name>       Adam first moments (present when optimizer state was saved)
  adam_v/<name>       Adam second moments
"""
import json
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import CheckpointFormatError
from .models import ModelConfig, SplitSpec, TrainConfig
from .summarizer import SummarizationModel
from .vocabulary import Vocabulary

FORMAT_VERSION = 1


class OptimizerState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    step: int = 0
    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)


class Checkpoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    params: Dict[str, np.ndarray]
    vocab_tokens: List[str]
    architecture: ModelConfig
    train_config: TrainConfig = Field(default_factory=TrainConfig)
    split: SplitSpec = Field(default_factory=SplitSpec)
    epoch: int = 0
    dev_metric: Optional[float] = None
    optimizer: Optional[OptimizerState] = None

    @property
    def vocab(self) -> Vocabulary:
        return Vocabulary(self.vocab_tokens)

    def build_model(self) -> SummarizationModel:
        model = SummarizationModel(self.architecture, self.vocab)
        model.load_state_dict(self.params)
        return model

    @classmethod
    def from_model(cls, model: SummarizationModel, **fields) -> 'Checkpoint':
        return cls(params=model.state_dict(), vocab_tokens=model.vocab.tokens,
                   architecture=model.config, **fields)


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> None:
    vocab = checkpoint.vocab
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_config": checkpoint.architecture.model_dump(mode="json"),
        "train_config": checkpoint.train_config.model_dump(mode="json"),
        "split": checkpoint.split.model_dump(mode="json"),
        "epoch": checkpoint.epoch,
        "dev_metric": checkpoint.dev_metric,
        "vocabulary": vocab.tokens,
        "vocab_hash": vocab.fingerprint(),
        "tensors": {name: list(arr.shape) for name, arr in checkpoint.params.items()},
        "optimizer": None,
    }
    # np.array keeps scalar parameters at shape ().
    arrays = {f"param/{name}": np.array(arr, dtype=np.float64, order="C") for name, arr in checkpoint.params.items()}
    if checkpoint.optimizer is not None:
        manifest["optimizer"] = {"step": checkpoint.optimizer.step, "names": sorted(checkpoint.optimizer.m)}
        for name in checkpoint.optimizer.m:
            arrays[f"adam_m/{name}"] = np.array(checkpoint.optimizer.m[name], dtype=np.float64, order="C")
            arrays[f"adam_v/{name}"] = np.array(checkpoint.optimizer.v[name], dtype=np.float64, order="C")
    arrays["__manifest__"] = np.array(json.dumps(manifest))
    # A file handle keeps numpy from appending ".npz" to the requested path.
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    try:
        archive = np.load(path, allow_pickle=False)
    except ValueError as e:
        raise CheckpointFormatError(f"{path} is not a checkpoint archive") from e
    with archive:
        if "__manifest__" not in archive.files:
            raise CheckpointFormatError(f"{path} has no manifest")
        manifest = json.loads(str(archive["__manifest__"]))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint format {manifest.get('format_version')}")
        vocab = Vocabulary(manifest["vocabulary"])
        if vocab.fingerprint() != manifest["vocab_hash"]:
            raise CheckpointFormatError("vocabulary does not match its recorded hash")

        params = {}
        for name, shape in manifest["tensors"].items():
            arr = archive[f"param/{name}"]
            if list(arr.shape) != shape:
                raise CheckpointFormatError(f"{name}: stored shape {arr.shape} != manifest {shape}")
            params[name] = arr
        optimizer = None
        if manifest.get("optimizer"):
            names = manifest["optimizer"]["names"]
            optimizer = OptimizerState(
                step=manifest["optimizer"]["step"],
                m={n: archive[f"adam_m/{n}"] for n in names},
                v={n: archive[f"adam_v/{n}"] for n in names},
            )
    return Checkpoint(
        params=params,
        vocab_tokens=vocab.tokens,
        architecture=ModelConfig(**manifest["model_config"]),
        train_config=TrainConfig(**manifest["train_config"]),
        split=SplitSpec(**manifest["split"]),
        epoch=manifest["epoch"],
        dev_metric=manifest["dev_metric"],
        optimizer=optimizer,
    )
