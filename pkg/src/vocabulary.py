import hashlib
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Union

from .constants import (
    DEFAULT_VOCAB_MAX_SIZE, DEFAULT_VOCAB_MIN_COUNT, EOS_ID, RESERVED_TOKENS, UNK_ID,
)
from .errors import MalformedLine
from .models import Report


class Vocabulary:
    """Bijective token/id mapping; ids 0-3 are PAD, UNK, SOS, EOS."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:len(RESERVED_TOKENS)]) != RESERVED_TOKENS:
            tokens = list(RESERVED_TOKENS) + [t for t in tokens if t not in RESERVED_TOKENS]
        self._itos: List[str] = tokens
        self._stoi: Dict[str, int] = {token: i for i, token in enumerate(tokens)}
        if len(self._stoi) != len(self._itos):
            raise ValueError("vocabulary tokens must be unique")

    def __len__(self) -> int:
        return len(self._itos)

    def __contains__(self, token: str) -> bool:
        return token in self._stoi

    @property
    def tokens(self) -> List[str]:
        return list(self._itos)

    def id(self, token: str) -> int:
        return self._stoi.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self._itos[idx]

    def encode(self, tokens: Iterable[str], append_eos: bool = False) -> List[int]:
        ids = [self.id(t) for t in tokens]
        if append_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self._itos[i] for i in ids]

    def fingerprint(self) -> str:
        """sha256 over the ordered token list; used to detect corpus/checkpoint mismatches."""
        return hashlib.sha256("\n".join(self._itos).encode("utf-8")).hexdigest()

    def save(self, path: Union[str, Path]) -> None:
        # One token per line; the line number is the id.
        Path(path).write_text("\n".join(self._itos) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'Vocabulary':
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        for lineno, (expected, found) in enumerate(zip(RESERVED_TOKENS, lines), 1):
            if expected != found:
                raise MalformedLine(lineno, f"expected reserved token {expected!r}")
        if len(lines) < len(RESERVED_TOKENS):
            raise MalformedLine(len(lines) + 1, "missing reserved tokens")
        return cls(lines)


def build_vocab(reports: Sequence[Report], max_size: int = DEFAULT_VOCAB_MAX_SIZE,
                min_count: int = DEFAULT_VOCAB_MIN_COUNT) -> Vocabulary:
    """Reserved tokens first, then by descending frequency with lexicographic tie-break."""
    if not reports:
        raise ValueError("cannot build a vocabulary from no reports")
    counts = Counter()
    for report in reports:
        counts.update(report.background)
        counts.update(report.findings)
        counts.update(report.impression)
    for reserved in RESERVED_TOKENS:
        counts.pop(reserved, None)

    candidates = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    headroom = max(0, max_size - len(RESERVED_TOKENS))
    return Vocabulary(list(RESERVED_TOKENS) + candidates[:headroom])
