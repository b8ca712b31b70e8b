import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lipscope import _kernels_py, kernels

compiled = pytest.importorskip("lipscope._kernels", reason="compiled extension not built")


def sym_stack(m, p, seed):
    A = np.random.default_rng(seed).standard_normal((m, p, p))
    return A + np.swapaxes(A, 1, 2)


@pytest.mark.parametrize("p", [1, 2, 3, 4, 8, 33, 64])
def test_jacobi_backends_agree_bitwise(p):
    H = sym_stack(30, p, p)
    np.testing.assert_array_equal(compiled.spectral_norms(H), _kernels_py.spectral_norms(H))


def test_power_iteration_backends_agree():
    H = sym_stack(5, 72, 1)
    np.testing.assert_allclose(compiled.spectral_norms(H), _kernels_py.spectral_norms(H), rtol=1e-12)


def test_spectral_norms_edge_shapes():
    for mod in (compiled, _kernels_py):
        assert mod.spectral_norms(np.zeros((0, 3, 3))).shape == (0,)
        np.testing.assert_array_equal(mod.spectral_norms(np.zeros((2, 4, 4))), [0.0, 0.0])
        with pytest.raises(ValueError):
            mod.spectral_norms(np.zeros((3, 3)))


def test_spectral_norms_leave_input_untouched():
    H = sym_stack(3, 5, 0)
    before = H.copy()
    compiled.spectral_norms(H)
    _kernels_py.spectral_norms(H)
    np.testing.assert_array_equal(H, before)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 200), st.integers(0, 10**6))
def test_upper_hull_backends_agree(m, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 20, m).astype(float)  # repeated abscissae exercise the tie rule
    h = rng.random(m) * 10
    order = np.lexsort((-h, a))
    np.testing.assert_array_equal(compiled.upper_hull(a[order], h[order]),
                                  _kernels_py.upper_hull(a[order], h[order]))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 50)),
       st.lists(st.tuples(st.floats(0, 60), st.floats(0, 5)), min_size=0, max_size=10))
def test_lp_vertex_backends_agree(a, cands):
    h = np.sqrt(a)
    c0 = np.array([c[0] for c in cands], dtype=float)
    c1 = np.array([c[1] for c in cands], dtype=float)
    assert compiled.lp_best_vertex(a, h, c0, c1) == _kernels_py.lp_best_vertex(a, h, c0, c1)


def test_lp_vertex_none_feasible():
    a = np.array([1.0, 2.0])
    h = np.array([5.0, 5.0])
    for mod in (compiled, _kernels_py):
        assert mod.lp_best_vertex(a, h, np.array([1.0]), np.array([0.0])) == -1


def test_backend_selected_at_import():
    assert kernels.BACKEND == "cython"
    code = "from lipscope import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, LIPSCOPE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_pure_python_backend_end_to_end(monkeypatch):
    monkeypatch.setenv("LIPSCOPE_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.spectral_norms is _kernels_py.spectral_norms
    finally:
        monkeypatch.delenv("LIPSCOPE_PURE_PYTHON")
        importlib.reload(kernels)
