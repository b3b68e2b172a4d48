import os
import subprocess
import sys

import numpy as np
import pytest

from nehari_flow import _pykernels, kernels, potential
from nehari_flow.domain import make_domain

ck = pytest.importorskip("nehari_flow._ckernels")


@pytest.fixture
def arrays():
    rng = np.random.default_rng(7)
    m = 9
    dom = make_domain((1, 1, 1), m)
    q = rng.standard_normal((m, m, m))
    q[q < -1] = 0.0  # exercise the zero skip
    return dom, q


def test_backends_agree_on_direct_sum(arrays):
    dom, q = arrays
    table = potential.kernel_table(dom).table
    a = ck.direct_convolve(q, table)
    b = _pykernels.direct_convolve(q, table)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13 * np.max(np.abs(b)))


def test_backends_agree_on_stencils(arrays):
    _, u = arrays
    np.testing.assert_allclose(ck.neg_laplacian(u, 4.0), _pykernels.neg_laplacian(u, 4.0), rtol=1e-14, atol=1e-12)
    assert ck.edge_sum_sq(u) == pytest.approx(_pykernels.edge_sum_sq(u), rel=1e-13)


def test_compiled_backend_selected_by_default():
    assert kernels.BACKEND == "cython"


def test_pure_fallback_selected_by_env():
    env = dict(os.environ, NEHARI_FLOW_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import nehari_flow; print(nehari_flow.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
