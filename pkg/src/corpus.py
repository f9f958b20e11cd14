import json
import math
import re
from collections import Counter
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from .constants import DEFAULT_HOLDOUT_DEV_FRACTION, MIN_FINDINGS_TOKENS, MIN_IMPRESSION_TOKENS
from .errors import AmbiguousSections, EmptyCorpus, MalformedRecord, MissingSection, UnknownBodyPart
from .models import CorpusSplit, DropReason, FilterDecision, Report
from .utils.logger import get_logger

logger = get_logger(__name__)

SECTIONS = ("background", "findings", "impression")

# De-identification placeholders such as <date> stay whole; other punctuation is detached.
_TOKEN_RE = re.compile(r"<\w+>|\w+(?:['\-]\w+)*|[^\w\s]")


def tokenize(text: str) -> List[str]:
    """Lowercase, split on whitespace and detach punctuation."""
    return _TOKEN_RE.findall(text.lower())


def _section_tokens(raw: Mapping[str, Any], name: str) -> List[str]:
    value = raw.get(name)
    if value is None:
        raise MissingSection(name)
    if isinstance(value, str):
        tokens = tokenize(value)
    elif isinstance(value, list) and value and all(isinstance(part, list) for part in value):
        # A list of token lists means the record carries several sections of this kind.
        if len(value) > 1:
            raise AmbiguousSections(f"{len(value)} {name} sections cannot be aligned")
        tokens = [str(t) for t in value[0] if str(t).strip()]
    elif isinstance(value, list):
        tokens = [str(t) for t in value if str(t).strip()]
    else:
        raise MissingSection(name)
    if not tokens:
        raise MissingSection(name)
    return tokens


def parse_report(raw: Mapping[str, Any], require_impression: bool = True) -> Report:
    """Isolate the three sections of one corpus record. Reports to be summarized may omit the impression."""
    sections = {"findings": _section_tokens(raw, "findings")}
    if require_impression or raw.get("impression") is not None:
        sections["impression"] = _section_tokens(raw, "impression")
    else:
        sections["impression"] = []
    sections["background"] = _section_tokens(raw, "background")
    return Report(id=str(raw.get("id", "")), body_part=str(raw.get("body_part", "unknown")), **sections)


def filter_report(report: Report) -> FilterDecision:
    if len(report.findings) < MIN_FINDINGS_TOKENS:
        return FilterDecision(keep=False, reason=DropReason.FINDINGS_TOO_SHORT)
    if len(report.impression) < MIN_IMPRESSION_TOKENS:
        return FilterDecision(keep=False, reason=DropReason.IMPRESSION_TOO_SHORT)
    return FilterDecision(keep=True)


def ingest_records(records: Iterable[Tuple[int, Mapping[str, Any]]]) -> Tuple[List[Report], List[Dict[str, str]]]:
    """Parse and filter raw records; returns kept reports and a per-record outcome ledger."""
    kept: List[Report] = []
    ledger: List[Dict[str, str]] = []
    for lineno, raw in records:
        record_id = str(raw.get("id", f"line-{lineno}"))
        body_part = str(raw.get("body_part", "unknown"))
        try:
            report = parse_report(raw)
        except (MissingSection, AmbiguousSections) as e:
            ledger.append({"id": record_id, "body_part": body_part, "outcome": e.category})
            continue
        except ValidationError as e:
            raise MalformedRecord(lineno, str(e)) from e
        decision = filter_report(report)
        if decision.keep:
            kept.append(report)
            ledger.append({"id": record_id, "body_part": body_part, "outcome": "kept"})
        else:
            ledger.append({"id": record_id, "body_part": body_part, "outcome": decision.reason.value})
    return kept, ledger


def _allocate(n: int, ratios: Sequence[float]) -> List[int]:
    # Largest-remainder rounding keeps every size within one of its exact share.
    exact = [n * r for r in ratios]
    sizes = [math.floor(x + 1e-9) for x in exact]
    leftover = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:leftover]:
        sizes[i] += 1
    return sizes


def split_corpus(reports: Sequence[Report], ratios: Sequence[float] = (0.7, 0.1, 0.2), seed: int = 1) -> CorpusSplit:
    if not reports:
        raise EmptyCorpus("cannot split an empty corpus")
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must be three non-negative fractions summing to 1, got {ratios}")
    n_train, n_dev, _ = _allocate(len(reports), ratios)
    order = np.random.default_rng(seed).permutation(len(reports))
    shuffled = [reports[i] for i in order]
    return CorpusSplit(
        train=shuffled[:n_train],
        dev=shuffled[n_train:n_train + n_dev],
        test=shuffled[n_train + n_dev:],
    )


def holdout_body_part(reports: Sequence[Report], part: str,
                      dev_fraction: float = DEFAULT_HOLDOUT_DEV_FRACTION, seed: int = 1) -> CorpusSplit:
    """Reserve every report of one body part as test data; split the rest into train/dev."""
    test = [r for r in reports if r.body_part == part]
    if not test:
        raise UnknownBodyPart(f"body part '{part}' does not occur in the corpus")
    remainder = [r for r in reports if r.body_part != part]
    if not remainder:
        logger.warning(f"Every report is '{part}'; train and dev are empty.")
        return CorpusSplit(test=test)
    split = split_corpus(remainder, (1.0 - dev_fraction, dev_fraction, 0.0), seed)
    return CorpusSplit(train=split.train, dev=split.dev, test=test)


def restrict_body_parts(reports: Sequence[Report], top_k: int) -> List[Report]:
    """Keep only the top_k most frequent body parts (ties broken by name)."""
    counts = Counter(r.body_part for r in reports)
    keep = {part for part, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]}
    return [r for r in reports if r.body_part in keep]


def cap_body_parts(reports: Sequence[Report], cap: int, seed: int = 1) -> List[Report]:
    """Subsample body parts with more than `cap` reports down to `cap`, preserving input order."""
    rng = np.random.default_rng(seed)
    by_part: Dict[str, List[int]] = {}
    for i, report in enumerate(reports):
        by_part.setdefault(report.body_part, []).append(i)
    selected = set()
    for part in sorted(by_part):
        indices = by_part[part]
        if len(indices) > cap:
            indices = sorted(rng.choice(indices, size=cap, replace=False).tolist())
            logger.info(f"Subsampled body part '{part}' to {cap} reports.")
        selected.update(indices)
    return [r for i, r in enumerate(reports) if i in selected]


def iter_records(path: Union[str, Path]) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """Yield (line number, JSON object) for each non-blank line of a corpus file."""
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise MalformedRecord(lineno, f"invalid JSON ({e.msg})") from e
            if not isinstance(record, dict):
                raise MalformedRecord(lineno, "record is not a JSON object")
            yield lineno, record


def read_corpus(path: Union[str, Path]) -> List[Report]:
    reports = []
    for lineno, record in iter_records(path):
        try:
            reports.append(parse_report(record))
        except ValidationError as e:
            raise MalformedRecord(lineno, str(e)) from e
    return reports


def write_corpus(reports: Iterable[Report], path: Union[str, Path]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for report in reports:
            f.write(json.dumps(report.model_dump(), ensure_ascii=False) + "\n")
            count += 1
    return count


# Synthetic corpus ---------------------------------------------------------

SYNTHETIC_BODY_PARTS = ("ankle", "knee", "shoulder", "wrist", "elbow", "hand", "foot", "hip")
LATERALITIES = ("left", "right")

_HISTORIES = ("pain", "swelling ; pain", "trauma", "fall", "follow up")
_VIEWS = ("2", "3", "4")
_COMPARISONS = ("none", "no prior study available", "<date>")

_BASE_FINDINGS = {
    "alignment": "there is normal mineralization and alignment .",
    "fracture": "no fracture or osseous lesion is identified .",
    "joint": "the joint spaces are maintained .",
    "effusion": "there is no joint effusion .",
    "soft": "the soft tissues are normal .",
}

# condition -> (positive finding or None, base finding it contradicts, impression template)
_CONDITIONS = {
    "normal": (None, None, "normal {lat} {part} radiographs ."),
    "fracture": ("there is an acute fracture of the distal {part} .", "fracture",
                 "acute fracture of the {lat} {part} ."),
    "effusion": ("there is a small joint effusion .", "effusion",
                 "small joint effusion of the {lat} {part} ."),
    "degenerative": ("there are mild degenerative changes of the {part} .", "joint",
                     "mild degenerative changes of the {lat} {part} ."),
}


def _pick(rng: np.random.Generator, options: Sequence[str]) -> str:
    return options[int(rng.integers(len(options)))]


def generate_synthetic_corpus(n: int, seed: int = 1) -> List[Report]:
    """
    Desk-scale reports whose laterality appears only in the background and the impression,
    so a summarizer that ignores the background cannot recover it.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    lateralities = list(LATERALITIES) * (n // 2)
    if n % 2:
        lateralities.append(_pick(rng, LATERALITIES))
    lateralities = [lateralities[i] for i in rng.permutation(n)]
    conditions = list(_CONDITIONS)

    reports = []
    for i, lat in enumerate(lateralities):
        part = _pick(rng, SYNTHETIC_BODY_PARTS)
        condition = _pick(rng, conditions)
        positive, contradicted, impression = _CONDITIONS[condition]

        background = (
            f"history : {_pick(rng, _HISTORIES)} . "
            f"technique : {_pick(rng, _VIEWS)} views of the {lat} {part} were acquired . "
            f"comparison : {_pick(rng, _COMPARISONS)} ."
        )
        base = [key for key in _BASE_FINDINGS if key != contradicted]
        chosen = [base[j] for j in sorted(rng.choice(len(base), size=3, replace=False).tolist())]
        sentences = [_BASE_FINDINGS[key] for key in chosen]
        if positive:
            sentences.insert(int(rng.integers(len(sentences) + 1)), positive.format(part=part))

        reports.append(Report(
            id=f"synthetic-{i:05d}",
            body_part=part,
            background=background.split(),
            findings=" ".join(sentences).split(),
            impression=impression.format(lat=lat, part=part).split(),
        ))
    return reports
