import importlib

import numpy as np
import pytest

from diffeval.core import ConfidenceMatrix, CorrectnessMatrix, DifficultyVector
from diffeval.kernels import _numpy_impl

# import the numba lane module directly (the package attribute may be None
# when dispatch is forced to numpy, but the lane itself stays testable)
try:
    _numba_impl = importlib.import_module("diffeval.kernels._numba_impl")
    KERNEL_LANES = [
        pytest.param(_numpy_impl, id="numpy"),
        pytest.param(_numba_impl, id="numba"),
    ]
except ImportError:  # numba not installed
    KERNEL_LANES = [pytest.param(_numpy_impl, id="numpy")]


@pytest.fixture(params=KERNEL_LANES)
def kernel_lane(request):
    return request.param


def make_difficulty(scores, ids=None, n_models=1):
    scores = list(scores)
    if ids is None:
        ids = [f"i{k:04d}" for k in range(len(scores))]
    return DifficultyVector(
        instance_ids=tuple(ids),
        scores=scores,
        n_models=[n_models] * len(scores),
    )


def make_confidence(values, mask=None, model_ids=None, instance_ids=None):
    values = np.asarray(values, dtype=float)
    n_models, n_instances = values.shape
    if model_ids is None:
        model_ids = [f"m{k:03d}" for k in range(n_models)]
    if instance_ids is None:
        instance_ids = [f"i{k:04d}" for k in range(n_instances)]
    return ConfidenceMatrix(
        model_ids=tuple(model_ids),
        instance_ids=tuple(instance_ids),
        values=values,
        mask=mask,
    )


def make_correctness(rows, candidate_ids=None, instance_ids=None):
    rows = np.asarray(rows, dtype=bool)
    k, n = rows.shape
    if candidate_ids is None:
        candidate_ids = [f"c{j:02d}" for j in range(k)]
    if instance_ids is None:
        instance_ids = [f"i{k:04d}" for k in range(n)]
    return CorrectnessMatrix(
        candidate_ids=tuple(candidate_ids),
        instance_ids=tuple(instance_ids),
        correct=rows,
    )
