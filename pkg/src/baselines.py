"""
Extractive baselines over the sentences of a single report: continuous LexRank and LSA.

Both return sentences verbatim and in document order. idf statistics come from the report's
own sentences, so neither method needs corpus-level state.
"""
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .constants import LEXRANK_DAMPING, LEXRANK_THRESHOLD, POWER_ITERATION_TOL, SUMMARY_SENTENCES
from .errors import EmptyInput, UnknownMethod
from .models import Report

Sentence = List[str]

SENTENCE_END = {".", "?", "!"}
MAX_POWER_ITERATIONS = 10_000
MAX_JACOBI_SWEEPS = 100


def split_sentences(tokens: Sequence[str]) -> List[Sentence]:
    """Cut a token stream after every sentence-final punctuation token."""
    sentences, current = [], []
    for token in tokens:
        current.append(token)
        if token in SENTENCE_END:
            sentences.append(current)
            current = []
    if current:
        sentences.append(current)
    return sentences


@dataclass
class SentenceGraph:
    sentences: List[Sentence]
    adjacency: np.ndarray       # idf-modified cosine, symmetric, diagonal 1
    threshold: float

    @classmethod
    def build(cls, sentences: Sequence[Sentence], threshold: float = LEXRANK_THRESHOLD) -> 'SentenceGraph':
        terms = sorted({t for s in sentences for t in s})
        index = {t: i for i, t in enumerate(terms)}
        n = len(sentences)
        df = Counter(t for s in sentences for t in set(s))
        idf = np.array([1.0 + math.log((n + 1) / (df[t] + 1)) for t in terms])

        vectors = np.zeros((n, len(terms)))
        for i, sentence in enumerate(sentences):
            for term, count in Counter(sentence).items():
                vectors[i, index[term]] = count
        vectors *= idf
        norms = np.linalg.norm(vectors, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        unit = vectors / safe[:, None]
        adjacency = unit @ unit.T
        np.fill_diagonal(adjacency, 1.0)
        return cls(sentences=list(sentences), adjacency=adjacency, threshold=threshold)

    def transition(self) -> np.ndarray:
        """Row-normalized weights of edges above the threshold, without self-loops. Isolated rows stay zero."""
        weights = np.where(self.adjacency > self.threshold, self.adjacency, 0.0)
        np.fill_diagonal(weights, 0.0)
        totals = weights.sum(axis=1, keepdims=True)
        return np.divide(weights, totals, out=np.zeros_like(weights), where=totals > 0)


def centrality(transition: np.ndarray, damping: float = LEXRANK_DAMPING,
               tol: float = POWER_ITERATION_TOL) -> np.ndarray:
    """Fixed point of p = damping/n + (1 - damping) * M^T p by power iteration."""
    n = transition.shape[0]
    p = np.full(n, 1.0 / n)
    for _ in range(MAX_POWER_ITERATIONS):
        nxt = damping / n + (1.0 - damping) * transition.T @ p
        if np.abs(nxt - p).sum() < tol:
            return nxt
        p = nxt
    return p


def _top_in_document_order(scores: np.ndarray, n: int) -> List[int]:
    order = sorted(range(len(scores)), key=lambda i: (-round(float(scores[i]), 12), i))
    return sorted(order[:n])


def lexrank(sentences: Sequence[Sentence], n: int = SUMMARY_SENTENCES) -> List[Sentence]:
    if not sentences:
        raise EmptyInput("LexRank needs at least one sentence")
    graph = SentenceGraph.build(sentences)
    scores = centrality(graph.transition())
    return [list(sentences[i]) for i in _top_in_document_order(scores, n)]


@dataclass
class TermSentenceMatrix:
    terms: List[str]
    matrix: np.ndarray          # terms x sentences, raw term frequencies

    @classmethod
    def build(cls, sentences: Sequence[Sentence]) -> 'TermSentenceMatrix':
        terms = sorted({t for s in sentences for t in s})
        index = {t: i for i, t in enumerate(terms)}
        matrix = np.zeros((len(terms), len(sentences)))
        for j, sentence in enumerate(sentences):
            for term, count in Counter(sentence).items():
                matrix[index[term], j] = count
        return cls(terms=terms, matrix=matrix)


def _complete_basis(columns: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the columns not flagged in keep with unit vectors orthogonal to everything before them."""
    out = columns.copy()
    rows = out.shape[0]
    basis = [out[:, j] for j in range(out.shape[1]) if keep[j]]
    for j in range(out.shape[1]):
        if keep[j]:
            continue
        for k in range(rows):
            candidate = np.zeros(rows)
            candidate[k] = 1.0
            for b in basis:
                candidate -= (b @ candidate) * b
            norm = np.linalg.norm(candidate)
            if norm > 0.5:
                out[:, j] = candidate / norm
                basis.append(out[:, j])
                break
    return out


def svd(m) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Thin SVD by one-sided (Hestenes) Jacobi rotations: m = U diag(S) V^T with S non-increasing.
    U is r x k, S has k entries and V is c x k, where k = min(r, c).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] < m.shape[1]:
        v, s, u = svd(m.T)
        return u, s, v

    a = m.copy()
    cols = a.shape[1]
    v = np.eye(cols)
    eps = np.finfo(np.float64).eps
    for _ in range(MAX_JACOBI_SWEEPS):
        rotated = False
        for i in range(cols - 1):
            for j in range(i + 1, cols):
                alpha = a[:, i] @ a[:, i]
                beta = a[:, j] @ a[:, j]
                gamma = a[:, i] @ a[:, j]
                if abs(gamma) <= eps * math.sqrt(alpha * beta) or gamma == 0.0:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                ai, aj = a[:, i].copy(), a[:, j].copy()
                a[:, i], a[:, j] = c * ai - s * aj, s * ai + c * aj
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i], v[:, j] = c * vi - s * vj, s * vi + c * vj
        if not rotated:
            break

    sigma = np.linalg.norm(a, axis=0)
    order = sorted(range(cols), key=lambda k: (-sigma[k], k))
    sigma, a, v = sigma[order], a[:, order], v[:, order]
    nonzero = sigma > eps * max(sigma[0] if cols else 0.0, 1.0) * max(m.shape)
    u = np.divide(a, sigma, out=np.zeros_like(a), where=nonzero[None, :])
    return _complete_basis(u, nonzero), sigma, v


def lsa_summarize(sentences: Sequence[Sentence], n: int = SUMMARY_SENTENCES) -> List[Sentence]:
    """
    For each concept in decreasing singular value, pick the unselected sentence with the largest
    absolute right-singular-vector component. Remaining picks, if any, follow document order.
    """
    if not sentences:
        raise EmptyInput("LSA needs at least one sentence")
    matrix = TermSentenceMatrix.build(sentences).matrix
    _, sigma, v = svd(matrix)
    picked: List[int] = []
    target = min(n, len(sentences))
    tol = 1e-10 * max(float(sigma[0]), 1.0) if len(sigma) else 0.0
    for k in range(len(sigma)):
        if len(picked) >= target or sigma[k] <= tol:
            break
        weights = np.round(np.abs(v[:, k]), 12)
        remaining = [i for i in range(len(sentences)) if i not in picked]
        picked.append(min(remaining, key=lambda i: (-weights[i], i)))
    for i in range(len(sentences)):
        if len(picked) >= target:
            break
        if i not in picked:
            picked.append(i)
    return [list(sentences[i]) for i in sorted(picked)]


BASELINES: Dict[str, Callable[[Sequence[Sentence], int], List[Sentence]]] = {
    "lexrank": lexrank,
    "lsa": lsa_summarize,
}


def extract_summary(report: Report, method: str, n: int = SUMMARY_SENTENCES,
                    prepend_background: bool = False) -> List[str]:
    """Run a baseline on the findings (optionally preceded by the background) and flatten the picks."""
    if method not in BASELINES:
        raise UnknownMethod(f"unknown baseline '{method}', expected one of {sorted(BASELINES)}")
    tokens = list(report.background) + list(report.findings) if prepend_background else list(report.findings)
    picks = BASELINES[method](split_sentences(tokens), n)
    return [token for sentence in picks for token in sentence]
