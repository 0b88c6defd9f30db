import os
import subprocess
import sys

import numpy as np
import pytest

from resolvent_lab import _kernels_py, kernels


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("alpha", [0.0, 0.7 - 0.2j, 1.5j, -2.0 + 1.0j])
def test_displacement_backends_agree(alpha):
    ref = _kernels_py.displacement(complex(alpha), 20)
    np.testing.assert_allclose(kernels.displacement(complex(alpha), 20), ref, atol=1e-14)


def test_displacement_first_entry():
    a = 0.3 + 0.4j
    assert kernels.displacement(a, 5)[0, 0] == pytest.approx(np.exp(-abs(a) ** 2 / 2))


def test_tensor_select_backends_agree(rng):
    mats = rng.normal(size=(3, 6, 6)) + 1j * rng.normal(size=(3, 6, 6))
    rows = rng.integers(0, 6, size=(10, 3)).astype(np.intp)
    cols = rng.integers(0, 6, size=(7, 3)).astype(np.intp)
    ref = _kernels_py.tensor_select(mats, rows, cols)
    np.testing.assert_allclose(kernels.tensor_select(np.ascontiguousarray(mats), rows, cols), ref, atol=1e-13)
    b, a = 4, 2
    assert ref[b, a] == pytest.approx(np.prod([mats[j, rows[b, j], cols[a, j]] for j in range(3)]))


def test_pure_python_fallback_env():
    env = dict(os.environ, RESOLVENT_LAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from resolvent_lab import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
