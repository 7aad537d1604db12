import numpy as np
import pytest

from boatland.errors import CheckpointError, NumericError
from boatland.neural import (
    AdamState,
    Gradients,
    Mlp,
    DenseLayer,
    adam_step,
    backward,
    clone,
    forward,
    init_mlp,
    param_count,
    read_checkpoint,
    write_checkpoint,
)
from oracles import fd_param_gradients, max_rel_err


def test_param_count_paper_shapes():
    rng = np.random.default_rng(0)
    actor = init_mlp((4, 300, 200, 2), ("relu", "relu", "tanh"), rng)
    critic = init_mlp((6, 300, 200, 1), ("relu", "relu", "identity"), rng)
    # 4*300+300 + 300*200+200 + 200*2+2
    assert param_count(actor) == 62102
    # 6*300+300 + 300*200+200 + 200*1+1
    assert param_count(critic) == 62501


def test_init_deterministic_and_bounded():
    a = init_mlp((4, 8, 2), ("relu", "tanh"), np.random.default_rng(5))
    b = init_mlp((4, 8, 2), ("relu", "tanh"), np.random.default_rng(5))
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.weights, lb.weights)
        assert np.array_equal(la.biases, lb.biases)
    assert np.abs(a.layers[0].weights).max() <= 1.0 / np.sqrt(4)
    assert np.abs(a.layers[-1].weights).max() <= 3e-3
    assert np.abs(a.layers[-1].biases).max() <= 3e-3


def test_initial_tanh_head_near_zero():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        net = init_mlp((4, 300, 200, 2), ("relu", "relu", "tanh"), rng)
        x = rng.standard_normal(4)
        x /= np.linalg.norm(x)
        out, _ = forward(net, x)
        assert np.abs(out).max() < 0.1


def test_forward_identity_layer():
    net = Mlp([DenseLayer(np.eye(3), np.zeros(3), "identity")])
    x = np.array([0.3, -1.2, 4.0])
    out, _ = forward(net, x)
    assert np.array_equal(out, x)


def test_forward_tanh_range_and_relu_cutoff():
    rng = np.random.default_rng(1)
    net = init_mlp((3, 6, 2), ("relu", "tanh"), rng)
    for _ in range(50):
        out, _ = forward(net, rng.standard_normal(3) * 10)
        assert (np.abs(out) < 1.0).all()
    relu_net = Mlp([DenseLayer(np.eye(2), np.zeros(2), "relu")])
    out, _ = forward(relu_net, np.array([-3.0, 2.0]))
    assert out[0] == 0.0 and out[1] == 2.0


def test_forward_dimension_check():
    net = init_mlp((4, 3), ("identity",), np.random.default_rng(0))
    with pytest.raises(ValueError):
        forward(net, np.zeros(5))


def test_backward_rejects_foreign_cache():
    rng = np.random.default_rng(2)
    a = init_mlp((3, 4, 2), ("relu", "tanh"), rng)
    b = init_mlp((3, 4, 2), ("relu", "tanh"), rng)
    _, cache = forward(a, np.zeros(3))
    with pytest.raises(ValueError):
        backward(b, cache, np.zeros(2))


ACTS = ("relu", "tanh", "identity")


@pytest.mark.parametrize("hidden", ACTS)
@pytest.mark.parametrize("head", ACTS)
def test_gradients_match_finite_differences(hidden, head):
    rng = np.random.default_rng(hash((hidden, head)) % 2**31)
    net = init_mlp((3, 5, 2), (hidden, head), rng)
    x = rng.standard_normal(3) * 0.7
    g = rng.standard_normal(2)
    _, cache = forward(net, x)
    grads, _ = backward(net, cache, g)
    fd = fd_param_gradients(net, x, g)
    analytic = []
    for i in range(len(net.layers)):
        analytic.extend([grads.d_weights[i], grads.d_biases[i]])
    for a, f in zip(analytic, fd):
        assert max_rel_err(a, f) <= 1e-4


def test_input_gradient_of_linear_layer_is_w_transpose_g():
    rng = np.random.default_rng(3)
    W = rng.standard_normal((4, 3))
    net = Mlp([DenseLayer(W, np.zeros(4), "identity")])
    g = rng.standard_normal(4)
    _, cache = forward(net, np.zeros(3))
    _, gin = backward(net, cache, g)
    assert np.allclose(gin, W.T @ g, atol=1e-12)


def test_zero_output_grad_gives_zero_gradients():
    rng = np.random.default_rng(4)
    net = init_mlp((3, 5, 2), ("relu", "tanh"), rng)
    _, cache = forward(net, rng.standard_normal(3))
    grads, gin = backward(net, cache, np.zeros(2))
    assert not gin.any()
    for i in range(len(net.layers)):
        assert not grads.d_weights[i].any()
        assert not grads.d_biases[i].any()


def test_forward_backward_no_side_effects():
    rng = np.random.default_rng(5)
    net = init_mlp((3, 5, 2), ("relu", "tanh"), rng)
    before = [(l.weights.copy(), l.biases.copy()) for l in net.layers]
    x = rng.standard_normal(3)
    out, cache = forward(net, x)
    backward(net, cache, np.ones(2))
    out2, _ = forward(net, x)
    assert np.array_equal(out, out2)
    for (w0, b0), layer in zip(before, net.layers):
        assert np.array_equal(w0, layer.weights)
        assert np.array_equal(b0, layer.biases)


def test_batch_forward_matches_vector_forward():
    rng = np.random.default_rng(6)
    net = init_mlp((3, 5, 2), ("relu", "tanh"), rng)
    xs = rng.standard_normal((7, 3))
    batch_out, _ = forward(net, xs)
    for i in range(7):
        single, _ = forward(net, xs[i])
        assert np.allclose(batch_out[i], single, atol=1e-12)


def test_adam_zero_gradient_keeps_parameters():
    net = init_mlp((2, 2), ("identity",), np.random.default_rng(7))
    w0 = net.layers[0].weights.copy()
    state = AdamState.for_net(net)
    g = Gradients([np.zeros((2, 2))], [np.zeros(2)])
    adam_step(net, g, state, 0.1)
    assert np.array_equal(net.layers[0].weights, w0)


def test_adam_first_step_moves_by_lr():
    net = Mlp([DenseLayer(np.array([[1.0]]), np.array([0.0]), "identity")])
    state = AdamState.for_net(net)
    adam_step(net, Gradients([np.array([[1.0]])], [np.array([0.0])]), state, 0.1)
    assert net.layers[0].weights[0, 0] == pytest.approx(0.9, abs=1e-8)


def test_adam_converges_on_quadratic():
    net = Mlp([DenseLayer(np.array([[1.0]]), np.array([0.0]), "identity")])
    state = AdamState.for_net(net)
    for _ in range(500):
        w = net.layers[0].weights[0, 0]
        adam_step(net, Gradients([np.array([[2.0 * w]])], [np.array([0.0])]),
                  state, 0.05)
        if abs(net.layers[0].weights[0, 0]) < 0.01:
            break
    assert abs(net.layers[0].weights[0, 0]) < 0.01


def test_adam_rejects_nan_gradients():
    net = init_mlp((2, 2), ("identity",), np.random.default_rng(8))
    w0 = net.layers[0].weights.copy()
    state = AdamState.for_net(net)
    bad = Gradients([np.array([[np.nan, 0.0], [0.0, 0.0]])], [np.zeros(2)])
    with pytest.raises(NumericError):
        adam_step(net, bad, state, 0.1)
    assert np.array_equal(net.layers[0].weights, w0)
    assert state.step == 0


def test_clone_is_independent():
    net = init_mlp((2, 3, 1), ("relu", "identity"), np.random.default_rng(9))
    cp = clone(net)
    cp.layers[0].weights += 1.0
    assert not np.array_equal(cp.layers[0].weights, net.layers[0].weights)


def test_checkpoint_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(10)
    tensors = {
        "actor.L0.w": rng.standard_normal((4, 3)),
        "actor.L0.b": rng.standard_normal(4),
        "meta": np.array([1.0, 0.99]),
    }
    p1 = tmp_path / "a.ckpt"
    p2 = tmp_path / "b.ckpt"
    write_checkpoint(p1, tensors)
    back = read_checkpoint(p1)
    assert list(back) == list(tensors)
    for k in tensors:
        assert np.array_equal(back[k], tensors[k])
    write_checkpoint(p2, back)
    assert p1.read_bytes() == p2.read_bytes()


def test_checkpoint_errors_carry_offsets(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(b"NOTMAGIC" + b"\x00" * 8)
    with pytest.raises(CheckpointError) as exc:
        read_checkpoint(p)
    assert exc.value.offset == 0

    good = tmp_path / "good.ckpt"
    write_checkpoint(good, {"t": np.arange(6.0).reshape(2, 3)})
    raw = good.read_bytes()
    trunc = tmp_path / "trunc.ckpt"
    trunc.write_bytes(raw[:-5])
    with pytest.raises(CheckpointError) as exc:
        read_checkpoint(trunc)
    assert exc.value.offset is not None and exc.value.offset > 0
    assert "offset" in str(exc.value)
