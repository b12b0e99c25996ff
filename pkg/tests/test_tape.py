"""Reverse-mode differentiation primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaccel import tape
from qaccel.tape import Var


def fd_gradient(fn, x, delta=1e-6):
    """Central finite differences of a scalar function of a flat array."""
    g = np.zeros_like(x)
    for i in range(x.size):
        plus, minus = x.copy(), x.copy()
        plus.flat[i] += delta
        minus.flat[i] -= delta
        g.flat[i] = (fn(plus) - fn(minus)) / (2 * delta)
    return g


class TestForwardValues:
    def test_arithmetic(self):
        a, b = Var(np.array([1.0, 2.0])), Var(np.array([3.0, 4.0]))
        assert np.array_equal((a + b).value, [4.0, 6.0])
        assert np.array_equal((a - b).value, [-2.0, -2.0])
        assert np.array_equal((a * b).value, [3.0, 8.0])
        assert np.array_equal((-a).value, [-1.0, -2.0])

    def test_matmul(self):
        m = Var(np.arange(6.0).reshape(2, 3))
        v = Var(np.array([1.0, 0.0, -1.0]))
        assert np.array_equal((m @ v).value, [-2.0, -2.0])

    def test_composites(self):
        x = Var(np.array([0.5, -0.5]))
        assert np.allclose(tape.tanh(x).value, np.tanh([0.5, -0.5]))
        assert np.allclose(tape.square(x).value, [0.25, 0.25])
        assert tape.vsum(x).value == 0.0
        assert tape.concat([x, x]).value.shape == (4,)
        assert np.array_equal(
            tape.reshape(Var(np.arange(4.0)), (2, 2)).value,
            np.arange(4.0).reshape(2, 2),
        )


class TestGradients:
    def test_chain(self):
        # f(x) = sum(tanh(W x)^2)
        rng = np.random.default_rng(0)
        w_val = rng.normal(size=(3, 2))
        x_val = rng.normal(size=2)

        def build(wv, xv):
            w, x = Var(wv), Var(xv)
            y = tape.vsum(tape.square(tape.tanh(w @ x)))
            return y, w, x

        y, w, x = build(w_val, x_val)
        tape.backward(y)
        assert np.allclose(
            w.grad,
            fd_gradient(lambda wv: build(wv, x_val)[0].value, w_val.copy()),
            atol=1e-7,
        )
        assert np.allclose(
            x.grad,
            fd_gradient(lambda xv: build(w_val, xv)[0].value, x_val.copy()),
            atol=1e-7,
        )

    def test_fan_out_accumulates(self):
        # x used twice: d/dx (x*x + x*x) = 4x
        x = Var(np.array([3.0]))
        y = tape.vsum(x * x + x * x)
        tape.backward(y)
        assert np.allclose(x.grad, [12.0])

    def test_getitem_and_concat(self):
        x = Var(np.array([1.0, 2.0, 3.0]))
        y = tape.vsum(tape.square(tape.concat([x[0:2], x[1:3]])))
        tape.backward(y)
        # element 1 appears twice
        assert np.allclose(x.grad, [2.0, 8.0, 6.0])

    def test_broadcast_unbroadcast(self):
        a = Var(np.array([1.0, 2.0]))
        b = Var(np.array(3.0))
        y = tape.vsum(a * b)
        tape.backward(y)
        assert np.allclose(a.grad, [3.0, 3.0])
        assert np.allclose(b.grad, 3.0)

    def test_gradient_helper(self):
        x = Var(np.array([1.0, -2.0]))
        y = tape.vsum(tape.square(x))
        (gx,) = tape.gradient(y, [x])
        assert np.allclose(gx, [2.0, -4.0])

    def test_matmul_matrix_matrix(self):
        rng = np.random.default_rng(1)
        a_val, b_val = rng.normal(size=(2, 3)), rng.normal(size=(3, 2))

        def build(av, bv):
            a, b = Var(av), Var(bv)
            return tape.vsum(tape.square(a @ b)), a, b

        y, a, b = build(a_val, b_val)
        tape.backward(y)
        assert np.allclose(
            a.grad,
            fd_gradient(lambda v: build(v, b_val)[0].value, a_val.copy()),
            atol=1e-6,
        )
        assert np.allclose(
            b.grad,
            fd_gradient(lambda v: build(a_val, v)[0].value, b_val.copy()),
            atol=1e-6,
        )

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 10_000))
    def test_random_expression_matches_fd(self, dim, seed):
        rng = np.random.default_rng(seed)
        x_val = rng.normal(size=dim)
        w_val = rng.normal(size=(dim, dim))

        def f(xv):
            x, w = Var(xv), Var(w_val)
            h = tape.tanh(w @ x + x)
            return tape.vsum(tape.square(h) * h)

        x_var, w = Var(x_val), Var(w_val)
        h = tape.tanh(w @ x_var + x_var)
        y = tape.vsum(tape.square(h) * h)
        tape.backward(y)
        assert np.allclose(
            x_var.grad, fd_gradient(lambda v: f(v).value, x_val.copy()), atol=1e-6
        )
