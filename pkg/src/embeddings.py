from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .constants import EMBEDDING_DIM, EMBEDDING_INIT_SCALE
from .errors import DimensionMismatch, IdOutOfRange, MalformedLine
from .tensor import Tensor, take_rows
from .utils.logger import get_logger
from .vocabulary import Vocabulary

logger = get_logger(__name__)


class EmbeddingTable:
    """|V| x d trainable matrix shared by both encoders and the decoder."""

    def __init__(self, vocab: Vocabulary, dim: int = EMBEDDING_DIM, seed: int = 0,
                 matrix: Optional[np.ndarray] = None):
        self.vocab = vocab
        self.dim = dim
        self.seed = seed
        if matrix is None:
            matrix = self._random_init(len(vocab), dim, seed)
        if matrix.shape != (len(vocab), dim):
            raise DimensionMismatch(f"embedding matrix {matrix.shape} does not match ({len(vocab)}, {dim})")
        self.matrix = Tensor(matrix, requires_grad=True, name="embedding")

    @staticmethod
    def _random_init(rows: int, dim: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return rng.uniform(-EMBEDDING_INIT_SCALE, EMBEDDING_INIT_SCALE, size=(rows, dim))

    def lookup(self, ids: Sequence[int]) -> Tensor:
        size = self.matrix.shape[0]
        for i in ids:
            if not 0 <= i < size:
                raise IdOutOfRange(f"token id {i} outside vocabulary of size {size}")
        return take_rows(self.matrix, ids)

    def load_pretrained(self, path: Union[str, Path]) -> int:
        """
        Overwrite rows of tokens found in a word-vector text file; returns the match count.
        Lines are "token v1 ... vd" split on any whitespace. A first line of two integers
        (the word2vec "count dim" header) is skipped.
        """
        matrix = self._random_init(len(self.vocab), self.dim, self.seed)
        matched = 0
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                parts = line.split()
                if not parts or (lineno == 1 and _is_header(parts)):
                    continue
                if len(parts) < 2:
                    raise MalformedLine(lineno, "expected a token followed by its vector")
                token, raw = parts[0], parts[1:]
                if len(raw) != self.dim:
                    raise DimensionMismatch(f"line {lineno}: vector has {len(raw)} values, table expects {self.dim}")
                try:
                    vector = np.array([float(v) for v in raw], dtype=np.float64)
                except ValueError as e:
                    raise MalformedLine(lineno, str(e)) from e
                if not np.all(np.isfinite(vector)):
                    raise MalformedLine(lineno, "non-finite value")
                if token in self.vocab:
                    matrix[self.vocab.id(token)] = vector
                    matched += 1
        self.matrix.values[...] = matrix
        if matched == 0:
            logger.warning(f"No vocabulary token found in {path}; embeddings keep their random initialization.")
        else:
            logger.info(f"Initialized {matched} of {len(self.vocab)} embeddings from {path}.")
        return matched


def _is_header(parts: List[str]) -> bool:
    return len(parts) == 2 and all(p.isdigit() for p in parts)
