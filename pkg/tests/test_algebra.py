import numpy as np
import pytest
from hypothesis import given, strategies as st

from catnet import algebra
from catnet.skeleton import Activation, NoIdentityError, Skeleton

from conftest import random_skeleton, skeletons

REQ = algebra.identity_requirement()


def chain_pair(draw_seed, depth1, depth2, mid):
    rng = np.random.default_rng(draw_seed)
    d1 = [int(v) for v in rng.integers(1, 6, depth1 + 1)]
    d1[-1] = mid
    d2 = [int(v) for v in rng.integers(1, 6, depth2 + 1)]
    d2[0] = mid
    return random_skeleton(rng, d2), random_skeleton(rng, d1)


def test_identity_network_realizes_identity():
    x = np.linspace(-3, 3, 13)[:, None]
    np.testing.assert_allclose(REQ.id_skeleton(x), x, atol=1e-15)
    assert REQ.id_skeleton.dims == (1, 2, 1)


def test_identity_for_generalized_relu():
    a = Activation(1.0, 0.25)
    req = algebra.identity_requirement(a)
    x = np.linspace(-2, 2, 9)[:, None]
    np.testing.assert_allclose(req.id_skeleton(x, a), x, atol=1e-14)
    with pytest.raises(NoIdentityError):
        algebra.identity_requirement(Activation(1.0, -1.0))

@given(st.integers(0, 10 ** 6), st.integers(1, 4), st.integers(1, 4), st.integers(1, 5))
def test_concat_realizes_composition_and_count(seed, D1, D2, mid):
    phi2, phi1 = chain_pair(seed, D1, D2, mid)
    phi = algebra.concat(phi2, phi1)
    x = np.random.default_rng(seed + 1).standard_normal((20, phi1.in_dim))
    np.testing.assert_allclose(phi(x), phi2(phi1(x)), rtol=1e-10, atol=1e-10)
    assert phi.depth == D1 + D2 - 1
    assert phi.param_count == algebra.concat_param_count(phi2, phi1)


@given(st.lists(skeletons(max_depth=3, max_width=4), min_size=1, max_size=4))
def test_parallel_stacks_members(phis):
    phis = [algebra.extend_depth(p, max(q.depth for q in phis), REQ) for p in phis]
    par = algebra.parallel(*phis)
    rng = np.random.default_rng(len(phis))
    xs = [rng.standard_normal((7, p.in_dim)) for p in phis]
    out = par(np.hstack(xs))
    np.testing.assert_allclose(out, np.hstack([p(x) for p, x in zip(phis, xs)]), atol=1e-10)


@given(skeletons(max_depth=3), st.integers(0, 3))
def test_extend_depth_preserves_function(phi, extra):
    ext = algebra.extend_depth(phi, phi.depth + extra, REQ)
    assert ext.depth == phi.depth + extra
    x = np.random.default_rng(extra).standard_normal((11, phi.in_dim))
    np.testing.assert_allclose(ext(x), phi(x), rtol=1e-10, atol=1e-10)


@given(st.lists(skeletons(max_depth=4, max_width=4), min_size=2, max_size=4))
def test_diag_parallel_function_dims_and_bound(phis):
    psi = algebra.diag_parallel(REQ, *phis)
    assert psi.depth == sum(p.depth for p in phis)
    assert psi.dims == algebra.diag_parallel_dims(2, phis)
    assert psi.param_count < algebra.diag_parallel_bound(2, phis)
    rng = np.random.default_rng(3)
    xs = [rng.standard_normal((9, p.in_dim)) for p in phis]
    np.testing.assert_allclose(psi(np.hstack(xs)), np.hstack([p(x) for p, x in zip(phis, xs)]),
                               rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("D", [2, 3, 4])
def test_diag_parallel_sharpness(n, D):
    one = Skeleton([(np.ones((1, 1)), np.zeros(1))] * D)
    psi = algebra.diag_parallel(REQ, *([one] * n))
    assert psi.param_count == (2 * n ** 3 - n ** 2) * 2 * D


@given(skeletons(max_depth=4, max_width=5))
def test_sandwich_bound(phi):
    s = algebra.sandwich(phi, REQ)
    assert s.param_count <= algebra.sandwich_bound(2, phi)
    x = np.random.default_rng(0).standard_normal((5, phi.in_dim))
    np.testing.assert_allclose(s(x), phi(x), rtol=1e-10, atol=1e-10)


def test_sandwich_of_scalar_affine_map():
    s = algebra.sandwich(Skeleton([(np.array([[3.0]]), np.array([1.0]))]), REQ)
    assert s.dims == (1, 2, 2, 1)
    assert s.param_count == 13


def test_diag_parallel_dims_for_depth_two_chains():
    rng = np.random.default_rng(0)
    a = random_skeleton(rng, [1, 1, 1])
    b = random_skeleton(rng, [1, 1, 1])
    assert algebra.diag_parallel(REQ, a, b).dims == (2, 3, 4, 3, 2)
