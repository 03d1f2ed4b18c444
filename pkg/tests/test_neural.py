import json

import numpy as np
import pytest

from msie.errors import DimensionMismatch
from msie.neural import (
    DenseLayer,
    DenseNet,
    TrainConfig,
    backward,
    forward,
    grad_check,
    half_mse,
    sgd_step,
)


def squared_loss(target):
    def fn(out):
        d = out - target
        return 0.5 * float((d * d).sum()), d
    return fn


def test_forward_examples():
    ident = DenseNet([DenseLayer(np.eye(2), np.zeros(2), "identity")])
    np.testing.assert_array_equal(forward(ident, [3.0, -4.0])[0], [3.0, -4.0])
    relu = DenseNet([DenseLayer(np.eye(2), np.zeros(2), "relu")])
    np.testing.assert_array_equal(forward(relu, [-1.0, 2.0])[0], [0.0, 2.0])
    sig = DenseNet([DenseLayer(np.zeros((3, 2)), np.zeros(3), "sigmoid")])
    np.testing.assert_array_equal(forward(sig, [5.0, -7.0])[0], [0.5, 0.5, 0.5])
    with pytest.raises(DimensionMismatch):
        forward(ident, [1.0, 2.0, 3.0])


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(0)
    net = DenseNet.build([4, 5, 3, 2], ["relu", "sigmoid", "identity"], rng)
    x = rng.normal(size=(6, 4))
    target = rng.normal(size=(6, 2))
    assert grad_check(net, squared_loss(target), x, eps=1e-5) < 1e-4


@pytest.mark.parametrize("seed", range(8))
def test_backward_random_architectures(seed):
    rng = np.random.default_rng(100 + seed)
    depth = int(rng.integers(1, 5))
    dims = [int(d) for d in rng.integers(1, 17, size=depth + 1)]
    acts = [str(a) for a in rng.choice(["relu", "sigmoid", "identity"], size=depth)]
    net = DenseNet.build(dims, acts, rng)
    x = rng.normal(size=(3, dims[0]))
    target = rng.normal(size=(3, dims[-1]))
    assert grad_check(net, squared_loss(target), x) < 1e-4


def test_zero_loss_grad_gives_zero_gradients():
    rng = np.random.default_rng(1)
    net = DenseNet.build([3, 4, 2], ["relu", "identity"], rng)
    out, cache = forward(net, rng.normal(size=(5, 3)))
    grads = backward(net, cache, np.zeros_like(out))
    assert all(np.all(g == 0) for g in grads)
    assert [g.shape for g in grads] == [p.shape for p in net.parameters()]


def test_dead_relu_has_zero_incoming_gradient():
    W = np.array([[1.0, 1.0], [1.0, -1.0]])
    b = np.array([-10.0, 0.0])  # first unit is dead for small inputs
    net = DenseNet([DenseLayer(W, b, "relu"), DenseLayer(np.ones((1, 2)), np.zeros(1), "identity")])
    out, cache = forward(net, np.array([[1.0, -1.0]]))
    grads = backward(net, cache, np.ones_like(out))
    np.testing.assert_array_equal(grads[0][0], [0.0, 0.0])
    assert grads[1][0] == 0.0
    assert np.any(grads[0][1] != 0.0)


def test_backward_shape_checks():
    net = DenseNet.build([2, 3], "identity", np.random.default_rng(0))
    out, cache = forward(net, np.ones((4, 2)))
    with pytest.raises(DimensionMismatch):
        backward(net, cache, np.ones((4, 5)))
    with pytest.raises(DimensionMismatch):
        backward(net, cache[:0], np.ones((4, 3)))


def test_sgd_step_examples():
    net = DenseNet([DenseLayer(np.array([[1.0]]), np.array([0.0]), "identity")])
    sgd_step(net, [np.array([[0.5]]), np.array([0.0])], 0.1)
    assert net.layers[0].weight[0, 0] == pytest.approx(0.95)

    rng = np.random.default_rng(2)
    a = DenseNet.build([3, 2], "relu", rng)
    before = [p.copy() for p in a.parameters()]
    g = [rng.normal(size=p.shape) for p in a.parameters()]
    sgd_step(a, g, 0.0)
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), before))

    b, c = a.copy(), a.copy()
    g2 = [rng.normal(size=p.shape) for p in a.parameters()]
    sgd_step(sgd_step(b, g, 0.1), g2, 0.1)
    sgd_step(c, [x + y for x, y in zip(g, g2)], 0.1)
    for p, q in zip(b.parameters(), c.parameters()):
        np.testing.assert_allclose(p, q, atol=1e-15)


def test_grad_check_detects_sabotage_and_handles_empty_net():
    rng = np.random.default_rng(3)
    net = DenseNet.build([3, 4, 1], ["sigmoid", "identity"], rng)
    x = rng.normal(size=(5, 3))
    loss = squared_loss(rng.normal(size=(5, 1)))

    def corrupted(net, x):
        out, cache = forward(net, x)
        grads = backward(net, cache, loss(out)[1])
        grads[0] = grads[0] * 1.5
        return grads

    assert grad_check(net, loss, x, analytic=corrupted) > 1e-2
    assert grad_check(DenseNet([]), loss, x) == 0.0


def test_init_is_seeded_and_scaled():
    a = DenseNet.build([10, 20, 1], ["relu", "identity"], np.random.default_rng(5))
    b = DenseNet.build([10, 20, 1], ["relu", "identity"], np.random.default_rng(5))
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))
    assert np.abs(a.layers[0].weight).max() <= np.sqrt(6 / 10)
    assert np.abs(a.layers[1].weight).max() <= np.sqrt(6 / 21)
    assert all(np.all(l.bias == 0) for l in a.layers)


def test_checkpoint_round_trip():
    net = DenseNet.build([3, 4, 2], ["relu", "sigmoid"], np.random.default_rng(6))
    clone = DenseNet.from_dict(json.loads(json.dumps(net.to_dict())))
    x = np.random.default_rng(7).normal(size=(4, 3))
    np.testing.assert_array_equal(clone(x), net(x))


def test_half_mse_and_train_config():
    loss, grad = half_mse(np.array([[1.0], [3.0]]), np.array([[0.0], [1.0]]))
    assert loss == pytest.approx(0.5 * (1 + 4) / 2)
    np.testing.assert_allclose(grad, [[0.5], [1.0]])
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
