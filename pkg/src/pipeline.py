import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from .baselines import BASELINES, extract_summary
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .constants import BEAM_SIZE, MAX_DECODE_LEN, SUMMARY_SENTENCES
from .corpus import (
    cap_body_parts, generate_synthetic_corpus, holdout_body_part, ingest_records, iter_records,
    parse_report, read_corpus, restrict_body_parts, split_corpus, write_corpus,
)
from .errors import ConfigConflict, EmptyCorpus, UnknownMethod, VocabMismatch
from .inference import summarize
from .models import CorpusSplit, DropReason, EvaluationReport, ModelConfig, Report, SplitSpec, TrainConfig
from .rouge import evaluation_report
from .training import train
from .utils.config import Config
from .utils.logger import get_logger
from .vocabulary import build_vocab

logger = get_logger(__name__)

PathLike = Union[str, Path]


def build_split(reports: Sequence[Report], spec: SplitSpec) -> CorpusSplit:
    """Partition a corpus the way a SplitSpec describes: body-part holdout or seeded ratios."""
    if spec.holdout_body_part is not None:
        return holdout_body_part(reports, spec.holdout_body_part, spec.dev_fraction, spec.seed)
    return split_corpus(reports, spec.ratios, spec.seed)


def select_reports(reports: Sequence[Report], split_name: str, spec: SplitSpec) -> List[Report]:
    if split_name == "all":
        return list(reports)
    return build_split(reports, spec).get(split_name)


def _mark_selection(ledger: List[Dict[str, str]], passed: Sequence[Report], restricted: Sequence[Report],
                    selected: Sequence[Report]) -> None:
    # Ledger rows marked "kept" line up with `passed`; selection returns the same report objects.
    in_top = {id(r) for r in restricted}
    in_cap = {id(r) for r in selected}
    rows = [row for row in ledger if row["outcome"] == "kept"]
    for row, report in zip(rows, passed):
        if id(report) not in in_top:
            row["outcome"] = DropReason.BODY_PART_NOT_IN_TOP.value
        elif id(report) not in in_cap:
            row["outcome"] = DropReason.OVER_CAP.value


def cmd_ingest(raw_path: PathLike, out_path: PathLike, top_body_parts: Optional[int] = None,
               cap_per_body_part: Optional[int] = None, seed: int = 1) -> pd.DataFrame:
    """
    Parse, filter and write a raw corpus.
    Args:
        raw_path: JSONL file of raw records.
        out_path: destination for the canonical filtered corpus.
        top_body_parts: keep only this many of the most frequent body parts.
        cap_per_body_part: subsample larger body parts down to this many reports.
    Returns:
        pd.DataFrame: per-body-part tally of kept and dropped records by outcome.
    """
    kept, ledger = ingest_records(iter_records(raw_path))
    if not ledger:
        logger.warning(f"{raw_path} contains no records.")
        write_corpus([], out_path)
        return pd.DataFrame()

    passed = kept
    restricted = restrict_body_parts(passed, top_body_parts) if top_body_parts is not None else passed
    kept = cap_body_parts(restricted, cap_per_body_part, seed) if cap_per_body_part is not None else restricted
    _mark_selection(ledger, passed, restricted, kept)
    written = write_corpus(kept, out_path)

    frame = pd.DataFrame(ledger)
    tally = pd.crosstab(frame["body_part"], frame["outcome"], margins=True, margins_name="total")
    dropped = int((frame["outcome"] != "kept").sum())
    logger.info(f"Ingested {len(ledger)} records: {written} written, {dropped} dropped.")
    return tally


def _check_resume_architecture(requested: ModelConfig, stored: ModelConfig) -> None:
    """Architecture fields set explicitly for a resumed run must match the checkpoint."""
    given = requested.model_fields_set - {"init_seed"}
    conflicts = sorted(name for name in given if getattr(requested, name) != getattr(stored, name))
    if conflicts:
        details = ", ".join(f"{name}={getattr(requested, name)!s} (checkpoint: {getattr(stored, name)!s})"
                            for name in conflicts)
        raise ConfigConflict(f"--resume keeps the checkpoint architecture; conflicting settings: {details}")


def cmd_train(corpus_path: PathLike, checkpoint_path: PathLike, model_config: ModelConfig,
              train_config: TrainConfig, split_spec: Optional[SplitSpec] = None,
              vectors_path: Optional[PathLike] = None, resume_path: Optional[PathLike] = None) -> Checkpoint:
    """Split the corpus, train one model variant and write its best-dev checkpoint."""
    resume = load_checkpoint(resume_path) if resume_path is not None else None
    if resume is not None:
        _check_resume_architecture(model_config, resume.architecture)
        split_spec = resume.split
    split_spec = split_spec or SplitSpec()

    reports = read_corpus(corpus_path)
    if not reports:
        raise EmptyCorpus(f"{corpus_path} contains no reports")
    split = build_split(reports, split_spec)
    checkpoint = train(split, model_config, train_config, vectors_path=vectors_path,
                       resume=resume, split_spec=split_spec)
    save_checkpoint(checkpoint, checkpoint_path)
    logger.info(f"Saved checkpoint to {checkpoint_path} (epoch {checkpoint.epoch}, "
                f"best dev NLL {checkpoint.dev_metric:.4f}).")
    return checkpoint


def _decode_all(checkpoint: Checkpoint, reports: Sequence[Report], beam: int, max_len: int,
                max_workers: int) -> List[str]:
    model = checkpoint.build_model()
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(lambda r: summarize(model, r, beam=beam, max_len=max_len), reports))


def _write_predictions(path: PathLike, rows: Sequence[Dict[str, str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def _score(reports: Sequence[Report], predictions: Sequence[str], config: Config,
           output_path: Optional[PathLike], predictions_path: Optional[PathLike]) -> EvaluationReport:
    rows = sorted(
        ({"id": r.id, "prediction": p, "reference": " ".join(r.impression), "body_part": r.body_part}
         for r, p in zip(reports, predictions)),
        key=lambda row: row["id"],
    )
    pairs: List[Tuple[List[str], List[str]]] = [(row["prediction"].split(), row["reference"].split()) for row in rows]
    report = evaluation_report(pairs, [row["body_part"] for row in rows],
                               resamples=config.BOOTSTRAP_SAMPLES, seed=config.BOOTSTRAP_SEED)
    if predictions_path is not None:
        _write_predictions(predictions_path, [{k: row[k] for k in ("id", "prediction", "reference")}
                                              for row in rows])
    if output_path is not None:
        Path(output_path).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return report


def cmd_eval(checkpoint_path: PathLike, corpus_path: PathLike, split: str = "test", beam: int = BEAM_SIZE,
             max_len: int = MAX_DECODE_LEN, output_path: Optional[PathLike] = None,
             predictions_path: Optional[PathLike] = None, config: Optional[Config] = None) -> EvaluationReport:
    """
    Decode every report of a split and score the predictions.
    With split "all" the whole corpus is decoded, e.g. a corpus from another institution.
    """
    config = config or Config()
    checkpoint = load_checkpoint(checkpoint_path)
    reports = read_corpus(corpus_path)
    if not reports:
        raise EmptyCorpus(f"{corpus_path} contains no reports")
    if split != "all":
        corpus_split = build_split(reports, checkpoint.split)
        if build_vocab(corpus_split.train).fingerprint() != checkpoint.vocab.fingerprint():
            raise VocabMismatch(f"{corpus_path} does not rebuild the vocabulary of {checkpoint_path}")
        reports = corpus_split.get(split)
    logger.info(f"Decoding {len(reports)} reports (beam {beam}, max length {max_len}).")
    predictions = _decode_all(checkpoint, reports, beam, max_len, config.MAX_WORKERS)
    return _score(reports, predictions, config, output_path, predictions_path)


def cmd_summarize(checkpoint_path: PathLike, raw_report: str, beam: int = BEAM_SIZE,
                  max_len: int = MAX_DECODE_LEN) -> str:
    """Summarize one JSON report; the impression section is optional."""
    report = parse_report(json.loads(raw_report), require_impression=False)
    model = load_checkpoint(checkpoint_path).build_model()
    return summarize(model, report, beam=beam, max_len=max_len)


def cmd_baseline(method: str, corpus_path: PathLike, split: str = "test", split_spec: Optional[SplitSpec] = None,
                 prepend_background: bool = False, n: int = SUMMARY_SENTENCES,
                 output_path: Optional[PathLike] = None, predictions_path: Optional[PathLike] = None,
                 config: Optional[Config] = None) -> EvaluationReport:
    """Score an extractive baseline over one split of a corpus."""
    if method not in BASELINES:
        raise UnknownMethod(f"unknown baseline '{method}', expected one of {sorted(BASELINES)}")
    config = config or Config()
    reports = read_corpus(corpus_path)
    if not reports:
        raise EmptyCorpus(f"{corpus_path} contains no reports")
    reports = select_reports(reports, split, split_spec or SplitSpec())
    with ThreadPoolExecutor(max_workers=config.MAX_WORKERS) as executor:
        predictions = list(executor.map(
            lambda r: " ".join(extract_summary(r, method, n, prepend_background)), reports))
    return _score(reports, predictions, config, output_path, predictions_path)


def cmd_gen_synthetic(out_path: PathLike, n: int, seed: int = 1) -> int:
    count = write_corpus(generate_synthetic_corpus(n, seed), out_path)
    logger.info(f"Wrote {count} synthetic reports to {out_path}.")
    return count
