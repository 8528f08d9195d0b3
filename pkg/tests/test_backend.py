import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from bicsurf import _backend
from bicsurf.green import PLANE, SPHERE, potential
from bicsurf.measure import SignedMeasure, area_measure

compiled = pytest.mark.skipif(_backend._compiled is None, reason="compiled kernels not built")


def unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def inputs(rng, name):
    if name in ("sphere_green_sum", "torus_green_sum"):
        X = unit(rng, 37) if name.startswith("sphere") else rng.uniform(size=(37, 2))
        Y = unit(rng, 211) if name.startswith("sphere") else rng.uniform(size=(211, 2))
        Y[5] = X[3]  # a coincident pair exercises the skip rule
        return X, Y, rng.uniform(0, 1, 211), rng.normal(size=211), rng.normal(size=37)
    if name == "plane_log_sum":
        X, Y = rng.normal(size=(37, 2)), rng.normal(size=(211, 2))
        Y[0] = X[0]
        return X, Y, rng.normal(size=211)
    D = rng.uniform(-2, 2, size=(300, 2))
    return (D,) if name == "torus_green_exact" else (D, 24)


@compiled
@pytest.mark.parametrize("name", _backend.NAMES)
def test_compiled_matches_python(name):
    rng = np.random.default_rng(0)
    args = inputs(rng, name)
    a = getattr(_backend, name)(*args, backend="compiled")
    b = getattr(_backend, name)(*args, backend="python")
    assert a.shape == b.shape
    assert_allclose(a, b, rtol=1e-11, atol=1e-13)


@compiled
def test_potential_backends_agree():
    rng = np.random.default_rng(1)
    mu = SignedMeasure("sphere", (((0, 0, 1.0), 2.0), ((1.0, 0, 0), 1.0))) - area_measure("sphere", density=0.75 / np.pi)
    x = unit(rng, 25)
    assert_allclose(potential(SPHERE, mu, x, backend="compiled"), potential(SPHERE, mu, x, backend="python"),
                    rtol=1e-11, atol=1e-13)
    nu = SignedMeasure("plane", (((0.0, 0.0), 1.0), ((0.5, 0.5), -2.0)))
    z = rng.normal(size=(25, 2))
    assert_allclose(potential(PLANE, nu, z, backend="compiled"), potential(PLANE, nu, z, backend="python"),
                    rtol=1e-12)


def test_python_backend_module():
    assert _backend.get("plane_log_sum", "python").__module__.endswith("_kernels_py")


def test_env_forces_python():
    env = dict(os.environ, BIC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from bicsurf import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.skipif(_backend._compiled is not None, reason="compiled kernels present")
def test_compiled_unavailable_raises():
    with pytest.raises(ImportError):
        _backend.get("plane_log_sum", "compiled")
