import numpy as np
import pytest

from src.baselines import (SentenceGraph, TermSentenceMatrix, centrality, extract_summary, lexrank, lsa_summarize,
                           split_sentences, svd)
from src.errors import EmptyInput, UnknownMethod
from src.models import Report

DAMPING = 0.15


def reconstruct(u, s, v):
    return u @ np.diag(s) @ v.T


@pytest.mark.parametrize("m, expected", [
    ([[3.0, 0.0], [0.0, 1.0]], [3.0, 1.0]),
    ([[1.0, 0.0], [0.0, 3.0]], [3.0, 1.0]),
    ([[0.0, 1.0], [1.0, 0.0]], [1.0, 1.0]),
    ([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]], [2.0, 0.0]),
    ([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0]),
])
def test_svd_small_matrices(m, expected):
    u, s, v = svd(m)
    np.testing.assert_allclose(s, expected, atol=1e-12)
    np.testing.assert_allclose(reconstruct(u, s, v), m, atol=1e-12)
    np.testing.assert_allclose(u.T @ u, np.eye(len(s)), atol=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_svd_random_matrices(seed):
    rng = np.random.default_rng(seed)
    rows, cols = rng.integers(1, 9, size=2)
    m = rng.normal(size=(rows, cols))
    u, s, v = svd(m)
    k = min(rows, cols)
    assert u.shape == (rows, k) and s.shape == (k,) and v.shape == (cols, k)
    assert np.all(np.diff(s) <= 1e-12)
    np.testing.assert_allclose(s, np.linalg.svd(m, compute_uv=False), atol=1e-9)
    assert np.max(np.abs(reconstruct(u, s, v) - m)) < 1e-8
    np.testing.assert_allclose(u.T @ u, np.eye(k), atol=1e-9)
    np.testing.assert_allclose(v.T @ v, np.eye(k), atol=1e-9)


def test_svd_rank_deficient_basis_is_completed():
    m = np.outer([1.0, 2.0, 0.0, 1.0], [1.0, -1.0, 2.0])
    u, s, v = svd(m)
    assert s[1] == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(u.T @ u, np.eye(3), atol=1e-9)
    np.testing.assert_allclose(reconstruct(u, s, v), m, atol=1e-10)


def stationary(transition):
    n = transition.shape[0]
    google = DAMPING / n * np.ones((n, n)) + (1 - DAMPING) * transition
    values, vectors = np.linalg.eig(google.T)
    p = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    return p / p.sum()


@pytest.mark.parametrize("seed", range(50))
def test_centrality_matches_dense_eigenvector(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    weights = rng.uniform(0.2, 1.0, size=(n, n))
    weights = (weights + weights.T) / 2
    np.fill_diagonal(weights, 0.0)
    transition = weights / weights.sum(axis=1, keepdims=True)
    scores = centrality(transition)
    np.testing.assert_allclose(scores, stationary(transition), atol=1e-7)
    assert scores.sum() == pytest.approx(1.0)


def test_isolated_sentence_keeps_teleport_mass():
    sentences = [["no", "effusion", "."], ["no", "effusion", "."], ["mild", "swelling"]]
    graph = SentenceGraph.build(sentences)
    assert graph.adjacency[0, 2] == pytest.approx(0.0)
    scores = centrality(graph.transition())
    assert scores[2] == pytest.approx(DAMPING / 3)
    assert scores[0] == pytest.approx(scores[1])
    assert scores[0] == pytest.approx(1 / 3, abs=1e-7)


def test_adjacency_is_symmetric_with_unit_diagonal():
    sentences = [["a", "b", "."], ["b", "c", "."], ["c", "."], ["d"]]
    adjacency = SentenceGraph.build(sentences).adjacency
    np.testing.assert_allclose(adjacency, adjacency.T)
    np.testing.assert_array_equal(np.diag(adjacency), np.ones(4))
    assert np.all((adjacency >= 0) & (adjacency <= 1 + 1e-12))


def test_transition_drops_weak_edges_and_self_loops():
    sentences = [["a", "b", "."], ["b", "c", "."], ["d", "e"]]
    graph = SentenceGraph.build(sentences, threshold=0.1)
    transition = graph.transition()
    np.testing.assert_array_equal(np.diag(transition), np.zeros(3))
    np.testing.assert_array_equal(transition[2], np.zeros(3))
    np.testing.assert_allclose(transition[:2].sum(axis=1), [1.0, 1.0])


def test_scores_are_permutation_invariant():
    sentences = [["no", "fracture", "."], ["no", "fracture", "or", "dislocation", "."],
                 ["soft", "tissue", "swelling", "."], ["no", "dislocation", "."], ["joint", "space", "normal", "."]]
    scores = centrality(SentenceGraph.build(sentences).transition())
    perm = [3, 0, 4, 2, 1]
    permuted = centrality(SentenceGraph.build([sentences[i] for i in perm]).transition())
    np.testing.assert_allclose(permuted, scores[perm], atol=1e-9)


def test_lexrank_ties_keep_document_order():
    sentences = [["normal", "knee", "."]] * 5
    assert lexrank(sentences, n=3) == [["normal", "knee", "."]] * 3


def test_lexrank_prefers_central_sentences():
    sentences = [["no", "effusion", "."], ["mild", "swelling"], ["no", "effusion", "."]]
    assert lexrank(sentences, n=2) == [["no", "effusion", "."], ["no", "effusion", "."]]


@pytest.mark.parametrize("summarize", [lexrank, lsa_summarize])
def test_short_documents_are_returned_whole(summarize):
    sentences = [["a", "b", "."], ["c", "."]]
    assert summarize(sentences, n=3) == sentences


@pytest.mark.parametrize("summarize", [lexrank, lsa_summarize])
def test_empty_document(summarize):
    with pytest.raises(EmptyInput):
        summarize([], n=3)


def test_lsa_single_sentence():
    assert lsa_summarize([["only", "one", "."]], n=3) == [["only", "one", "."]]


def test_lsa_picks_one_sentence_per_concept():
    sentences = [["a", "a", "a"], ["b"], ["c", "c"]]
    matrix = TermSentenceMatrix.build(sentences)
    assert matrix.terms == ["a", "b", "c"]
    np.testing.assert_array_equal(matrix.matrix, np.diag([3.0, 1.0, 2.0]))
    assert lsa_summarize(sentences, n=2) == [["a", "a", "a"], ["c", "c"]]


def test_lsa_falls_back_to_document_order_past_the_rank():
    sentences = [["a"], ["a", "a"], ["a", "a", "a"]]
    # rank one: the only concept picks the heaviest sentence, the rest fill in order
    assert lsa_summarize(sentences, n=2) == [["a"], ["a", "a", "a"]]


def test_split_sentences():
    assert split_sentences(["a", ".", "b", "?", "c", "!", "d"]) == [["a", "."], ["b", "?"], ["c", "!"], ["d"]]
    assert split_sentences([]) == []


@pytest.fixture
def report():
    return Report(
        id="r9",
        body_part="ankle",
        background=["right", "ankle", "pain", "."],
        findings="no fracture . no dislocation . soft tissue swelling . joint space preserved .".split(),
        impression=["no", "fracture"],
    )


@pytest.mark.parametrize("method", ["lexrank", "lsa"])
def test_extract_summary_is_verbatim(report, method):
    summary = extract_summary(report, method, n=2)
    sentences = split_sentences(summary)
    assert len(sentences) == 2
    findings = split_sentences(report.findings)
    assert all(s in findings for s in sentences)
    assert sentences == sorted(sentences, key=findings.index)


@pytest.mark.parametrize("method", ["lexrank", "lsa"])
def test_extract_summary_with_background(report, method):
    summary = extract_summary(report, method, n=10, prepend_background=True)
    assert summary == report.background + report.findings


def test_unknown_method(report):
    with pytest.raises(UnknownMethod):
        extract_summary(report, "textrank")
