import json

import numpy as np
import pytest

from bestsep import matrixfile, states
from bestsep.errors import MalformedFile, NotHermitian, NotNormalized, NotPsd


def test_round_trip_bit_exact(tmp_path):
    rho = states.random_density(2, 3, 4, 8)
    path = tmp_path / "m.json"
    matrixfile.write(path, rho, "random")
    back, label = matrixfile.read(path)
    assert label == "random"
    assert np.array_equal(back.matrix, rho.matrix)
    assert (back.dimA, back.dimB) == (2, 3)


def test_dumps_layout():
    text = matrixfile.dumps(states.werner(0.5).matrix, 2, 2, "w")
    doc = json.loads(text)
    assert doc["matrix"][1][2] == [-0.25, 0]
    assert doc["label"] == "w"
    assert "-0," not in text.replace(" ", "")


def _doc(**kw):
    doc = {"dimA": 1, "dimB": 2, "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}
    doc.update(kw)
    return json.dumps(doc)


def test_loads_valid_and_unlabelled():
    rho, label = matrixfile.loads(_doc())
    assert label is None and rho.dim == 2


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        "[1, 2]",
        json.dumps({"dimA": 1, "matrix": []}),
        _doc(dimA=0),
        _doc(dimA=True),
        _doc(dimB=3),
        _doc(matrix=[[1, 0], [0, 1]]),
        _doc(matrix=[[["a", 0], [0, 0]], [[0, 0], [1, 0]]]),
        _doc(label=5),
    ],
)
def test_malformed(text):
    with pytest.raises(MalformedFile):
        matrixfile.loads(text)


def test_validation_errors():
    with pytest.raises(NotHermitian):
        matrixfile.loads(_doc(matrix=[[[0.5, 0], [0.1, 0]], [[0, 0], [0.5, 0]]]))
    with pytest.raises(NotPsd):
        matrixfile.loads(_doc(matrix=[[[1.2, 0], [0, 0]], [[0, 0], [-0.2, 0]]]))
    with pytest.raises(NotNormalized):
        matrixfile.loads(_doc(matrix=[[[0.45, 0], [0, 0]], [[0, 0], [0.45, 0]]]))
    rho, _ = matrixfile.loads(_doc(matrix=[[[0.45, 0], [0, 0]], [[0, 0], [0.45, 0]]]), allow_unnormalized=True)
    assert rho.trace == pytest.approx(0.9)


def test_trace_tolerance():
    ok = _doc(matrix=[[[0.5 + 4e-7, 0], [0, 0]], [[0, 0], [0.5, 0]]])
    matrixfile.loads(ok)
    bad = _doc(matrix=[[[0.5 + 4e-6, 0], [0, 0]], [[0, 0], [0.5, 0]]])
    with pytest.raises(NotNormalized):
        matrixfile.loads(bad)


def test_missing_file(tmp_path):
    with pytest.raises(MalformedFile):
        matrixfile.read(tmp_path / "nope.json")
