import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from depctl import _kernels_py, kernels

import oracles

try:
    from depctl import _ext
except ImportError:
    _ext = None

BACKENDS = [("python", _kernels_py)] + ([("compiled", _ext)] if _ext else [])


def random_hermitian_psd(rng, b, n):
    h = rng.standard_normal((b, n, n)) + 1j * rng.standard_normal((b, n, n))
    return h @ np.conj(np.swapaxes(h, 1, 2))


@pytest.mark.parametrize("backend,impl", BACKENDS)
@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
def test_jacobi_reconstruction_and_unitarity(backend, impl, n):
    rng = np.random.default_rng(100 + n)
    a = random_hermitian_psd(rng, 16, n)
    lam, vecs, _ = impl.jacobi_eigh_batch(np.ascontiguousarray(a))
    assert np.all(np.diff(lam, axis=1) >= -1e-12)
    recon = np.einsum("bij,bj,bkj->bik", vecs, lam, np.conj(vecs))
    norm = np.linalg.norm(a.reshape(16, -1), axis=1)
    resid = np.linalg.norm((a - recon).reshape(16, -1), axis=1) / norm
    assert np.max(resid) < 1e-10
    gram = np.einsum("bji,bjk->bik", np.conj(vecs), vecs)
    assert np.max(np.abs(gram - np.eye(n))) < 1e-10


@pytest.mark.parametrize("backend,impl", BACKENDS)
def test_jacobi_det_identity_against_lu_oracle(backend, impl):
    rng = np.random.default_rng(5)
    a = random_hermitian_psd(rng, 8, 6)
    lam, _, _ = impl.jacobi_eigh_batch(np.ascontiguousarray(a))
    for k in range(8):
        det_oracle = oracles.lu_det(np.eye(6) + a[k])
        det_eig = float(np.prod(1.0 + lam[k]))
        assert det_eig == pytest.approx(abs(det_oracle), rel=1e-9)


@pytest.mark.skipif(_ext is None, reason="compiled extension unavailable")
def test_backends_agree():
    rng = np.random.default_rng(17)
    a = random_hermitian_psd(rng, 12, 7)
    lam_c, _, _ = _ext.jacobi_eigh_batch(np.ascontiguousarray(a))
    lam_p, _, _ = _kernels_py.jacobi_eigh_batch(a)
    assert np.allclose(lam_c, lam_p, rtol=1e-10, atol=1e-10)
    x = rng.standard_normal((40, 100))
    assert np.allclose(
        _ext.lindley_batch(np.ascontiguousarray(x)), _kernels_py.lindley_batch(x),
        rtol=1e-12, atol=1e-12,
    )


def test_zero_matrix_handled():
    lam, vecs, _ = kernels.jacobi_eigh_batch(np.zeros((2, 3, 3), dtype=complex))
    assert np.all(lam == 0.0)


@pytest.mark.parametrize("backend,impl", BACKENDS)
def test_lindley_matches_maxplus_oracle(backend, impl):
    rng = np.random.default_rng(23)
    x = rng.standard_normal((30, 64))
    got = impl.lindley_batch(np.ascontiguousarray(x))
    for p in range(30):
        assert np.allclose(got[p], oracles.lindley_maxplus(x[p]), atol=1e-9)


@given(
    arrays(np.float64, st.integers(min_value=1, max_value=40),
           elements=st.floats(min_value=-10, max_value=10, allow_nan=False))
)
@settings(max_examples=60, deadline=None)
def test_lindley_maxplus_property(x):
    got = kernels.lindley_batch(np.ascontiguousarray(x[None, :]))[0]
    assert np.allclose(got, oracles.lindley_maxplus(x), atol=1e-9)
    assert np.all(got >= 0.0)


def test_backend_reports_a_known_name():
    assert kernels.backend() in ("compiled", "python")
