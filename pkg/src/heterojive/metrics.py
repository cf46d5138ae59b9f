"""Evaluation metrics for estimated subspaces and labeled embeddings."""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateInput, InvalidInput
from .linalg import projector_distance
from .validation import check_matrix, check_orthonormal


@dataclass(frozen=True)
class LabeledEmbedding:
    """Row-wise scores paired with a class label per row.

    Attributes
    ----------
    scores : numpy.ndarray, shape (n, q)
    labels : numpy.ndarray, shape (n,)
        Any hashable label type; compared by equality.
    """

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = check_matrix(self.scores, name="scores", allow_empty_cols=False)
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != scores.shape[0]:
            raise InvalidInput(
                f"labels must be a vector with one entry per score row "
                f"({scores.shape[0]}), got shape {labels.shape}"
            )
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def classes(self):
        return np.unique(self.labels)


def subspace_error(estimate, truth):
    """Operator-norm distance between two subspace projectors.

    Parameters
    ----------
    estimate, truth : array-like
        Orthonormal bases of equal rank in the same ambient space.

    Returns
    -------
    float
        ||P_est - P_true||_2, in [0, 1]; 0 iff the spans coincide, 1 iff
        some direction of one span is orthogonal to all of the other.

    Examples
    --------
    >>> import numpy as np
    >>> e1 = np.array([[1.0], [0.0]])
    >>> e2 = np.array([[0.0], [1.0]])
    >>> subspace_error(e1, e2)
    1.0
    """
    estimate = check_orthonormal(estimate, name="estimate", allow_empty_cols=False)
    truth = check_orthonormal(truth, name="truth", allow_empty_cols=False)
    if estimate.shape[1] != truth.shape[1]:
        raise InvalidInput(
            f"rank mismatch: estimate has {estimate.shape[1]} columns, "
            f"truth has {truth.shape[1]}"
        )
    return projector_distance(estimate, truth)


def swiss_score(embedding, labels=None):
    """Within-class share of the total sum of squares. Lower is better.

    Computes sum_c sum_{i in c} ||x_i - mean_c||**2 divided by
    sum_i ||x_i - grand mean||**2. Invariant to translation, global
    scaling, and right-multiplication of the scores by an orthogonal
    matrix.

    Parameters
    ----------
    embedding : LabeledEmbedding or array-like
        Either a labeled embedding, or a score matrix with ``labels``
        passed separately.
    labels : array-like, optional

    Returns
    -------
    float
        In [0, 1]; 0 means classes collapse to distinct points, values
        near 1 mean the class structure explains none of the variance.

    Raises
    ------
    InvalidInput
        With fewer than two distinct classes.
    DegenerateInput
        When all rows are identical, so the score is 0/0.
    """
    if not isinstance(embedding, LabeledEmbedding):
        if labels is None:
            raise InvalidInput(
                "pass a LabeledEmbedding or a score matrix together with labels"
            )
        embedding = LabeledEmbedding(scores=embedding, labels=labels)
    elif labels is not None:
        raise InvalidInput("labels were given twice")
    scores = embedding.scores
    classes = embedding.classes
    if classes.shape[0] < 2:
        raise InvalidInput(
            f"need at least two distinct classes, got {classes.shape[0]}"
        )
    centered = scores - scores.mean(axis=0, keepdims=True)
    total = float(np.sum(centered**2))
    if total <= 0.0:
        raise DegenerateInput(
            "all rows are identical; the within/total variance ratio is undefined"
        )
    within = 0.0
    for label in classes:
        members = scores[embedding.labels == label]
        within += float(np.sum((members - members.mean(axis=0, keepdims=True)) ** 2))
    return within / total
