"""Linear-chain CRF over sentence label sequences.

Emission scores come from a pluggable sentence encoder; this module owns the
chain: sequence scoring, the forward algorithm for the log-partition function,
Viterbi decoding, and the exact negative-log-likelihood gradient used for
training. All computations run in log space with max-shifted log-sum-exp.

Shapes: emissions are (n, L); transitions (L, L) where entry [i, j] scores
label j following label i; start and stop are length-L vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidLabel


@dataclass
class CrfParameters:
    """Transition, start, and stop scores of a linear-chain CRF."""

    transitions: np.ndarray
    start: np.ndarray
    stop: np.ndarray

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.stop = np.asarray(self.stop, dtype=np.float64)
        L = self.num_labels
        if self.transitions.shape != (L, L):
            raise ValueError(f"transitions must be square, got {self.transitions.shape}")
        if self.start.shape != (L,) or self.stop.shape != (L,):
            raise ValueError("start/stop must be length-L vectors")
        for name, arr in (("transitions", self.transitions), ("start", self.start), ("stop", self.stop)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def num_labels(self) -> int:
        return self.start.shape[0]

    @classmethod
    def zeros(cls, num_labels: int) -> "CrfParameters":
        return cls(
            transitions=np.zeros((num_labels, num_labels)),
            start=np.zeros(num_labels),
            stop=np.zeros(num_labels),
        )

    def copy(self) -> "CrfParameters":
        return CrfParameters(self.transitions.copy(), self.start.copy(), self.stop.copy())


@dataclass
class CrfGradients:
    """Partial derivatives of the NLL, mirroring the emission and chain parameters."""

    emissions: np.ndarray
    transitions: np.ndarray
    start: np.ndarray
    stop: np.ndarray


def _logsumexp(a: np.ndarray, axis: int | None = None):
    if axis is None:
        shift = np.max(a)
        return float(shift + np.log(np.sum(np.exp(a - shift))))
    shift = np.max(a, axis=axis, keepdims=True)
    out = shift + np.log(np.sum(np.exp(a - shift), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _check_instance(emissions: np.ndarray, crf: CrfParameters) -> np.ndarray:
    emissions = np.asarray(emissions, dtype=np.float64)
    if emissions.ndim != 2:
        raise ValueError("emissions must be a 2-D (n, L) matrix")
    if emissions.shape[0] < 1:
        raise ValueError("need at least one sentence")
    if emissions.shape[1] != crf.num_labels:
        raise ValueError(
            f"emission width {emissions.shape[1]} does not match {crf.num_labels} labels"
        )
    if not np.all(np.isfinite(emissions)):
        raise ValueError("emissions contain non-finite entries")
    return emissions


def _check_labels(labels, n: int, num_labels: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise InvalidLabel(f"expected {n} labels, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_labels):
        raise InvalidLabel(f"label codes must lie in 0..{num_labels - 1}")
    return labels


def score_sequence(emissions: np.ndarray, crf: CrfParameters, labels) -> float:
    """Unnormalized log-score of one label sequence:
    start[y0] + sum_t em[t][yt] + sum_t T[yt][yt+1] + stop[y_last].
    """
    emissions = _check_instance(emissions, crf)
    n = emissions.shape[0]
    labels = _check_labels(labels, n, crf.num_labels)
    score = crf.start[labels[0]] + crf.stop[labels[-1]]
    score += emissions[np.arange(n), labels].sum()
    if n > 1:
        score += crf.transitions[labels[:-1], labels[1:]].sum()
    return float(score)


def _forward(emissions: np.ndarray, crf: CrfParameters) -> np.ndarray:
    """alpha[t][j] = log-sum over prefixes ending at t with label j (emissions included)."""
    n = emissions.shape[0]
    alpha = np.empty_like(emissions)
    alpha[0] = crf.start + emissions[0]
    for t in range(1, n):
        # alpha[t-1][i] + T[i][j], reduced over i
        alpha[t] = emissions[t] + _logsumexp(alpha[t - 1][:, None] + crf.transitions, axis=0)
    return alpha


def _backward(emissions: np.ndarray, crf: CrfParameters) -> np.ndarray:
    """beta[t][i] = log-sum over suffixes from t with label i (emissions after t included)."""
    n = emissions.shape[0]
    beta = np.empty_like(emissions)
    beta[n - 1] = crf.stop
    for t in range(n - 2, -1, -1):
        beta[t] = _logsumexp(crf.transitions + emissions[t + 1] + beta[t + 1], axis=1)
    return beta


def log_partition(emissions: np.ndarray, crf: CrfParameters) -> float:
    """log of the summed exponentiated scores of all L**n label sequences."""
    emissions = _check_instance(emissions, crf)
    alpha = _forward(emissions, crf)
    return float(_logsumexp(alpha[-1] + crf.stop))


def viterbi_decode(emissions: np.ndarray, crf: CrfParameters) -> tuple[list[int], float]:
    """Highest-scoring label sequence and its score.

    Ties are broken toward the lowest label code at every backtracking step,
    so the result is unique and deterministic.
    """
    emissions = _check_instance(emissions, crf)
    n, L = emissions.shape
    delta = np.empty((n, L))
    back = np.zeros((n, L), dtype=np.int64)
    delta[0] = crf.start + emissions[0]
    for t in range(1, n):
        candidates = delta[t - 1][:, None] + crf.transitions  # (from, to)
        back[t] = np.argmax(candidates, axis=0)  # first max = lowest code
        delta[t] = emissions[t] + candidates[back[t], np.arange(L)]
    final = delta[n - 1] + crf.stop
    last = int(np.argmax(final))
    labels = [last]
    for t in range(n - 1, 0, -1):
        last = int(back[t, last])
        labels.append(last)
    labels.reverse()
    return labels, float(final[labels[-1]])


def nll_and_gradient(
    emissions: np.ndarray, crf: CrfParameters, gold_labels
) -> tuple[float, CrfGradients]:
    """Negative log-likelihood of the gold sequence and its exact gradients.

    loss = log_partition - score_sequence(gold). Gradients are expectation
    minus observation: posterior marginals from forward-backward minus the
    gold indicator counts.
    """
    emissions = _check_instance(emissions, crf)
    n, L = emissions.shape
    gold = _check_labels(gold_labels, n, crf.num_labels)

    alpha = _forward(emissions, crf)
    beta = _backward(emissions, crf)
    log_z = float(_logsumexp(alpha[-1] + crf.stop))
    loss = log_z - score_sequence(emissions, crf, gold)

    # unary marginals P(y_t = j)
    unary = np.exp(alpha + beta - log_z)

    d_emissions = unary.copy()
    d_emissions[np.arange(n), gold] -= 1.0

    d_start = unary[0].copy()
    d_start[gold[0]] -= 1.0
    d_stop = unary[-1].copy()
    d_stop[gold[-1]] -= 1.0

    d_transitions = np.zeros((L, L))
    for t in range(n - 1):
        pairwise = np.exp(
            alpha[t][:, None] + crf.transitions + emissions[t + 1][None, :] + beta[t + 1][None, :] - log_z
        )
        d_transitions += pairwise
        d_transitions[gold[t], gold[t + 1]] -= 1.0

    return loss, CrfGradients(d_emissions, d_transitions, d_start, d_stop)
