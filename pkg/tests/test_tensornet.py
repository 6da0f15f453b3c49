import math

import numpy as np
import pytest

from policymap import tensornet as tn
from policymap.tensornet import kernels


def finite_diff(loss_fn, arr, h=1e-4):
    """Central-difference gradient of a scalar loss over every entry of arr."""
    g = np.zeros_like(arr, dtype=np.float64)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        orig = arr[i]
        arr[i] = orig + h
        lp = loss_fn()
        arr[i] = orig - h
        lm = loss_fn()
        arr[i] = orig
        g[i] = (lp - lm) / (2 * h)
        it.iternext()
    return g


def rel_err(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return np.abs(a - b).max() / denom


# --------------------------------------------------------------- conv layers


def test_conv_shapes_84_to_21_to_3(rng):
    c1 = tn.ConvLayer(3, 32, 4, stride=4, activation="relu", rng=rng)
    c2 = tn.ConvLayer(32, 64, 7, stride=7, activation="sigmoid", rng=rng)
    x = rng.random((3, 84, 84), dtype=np.float32)
    y1 = c1.forward(x)
    assert y1.shape == (32, 21, 21)
    y2 = c2.forward(y1)
    assert y2.shape == (64, 3, 3)


def test_conv_zero_input_biasfree_relu_gives_zero(rng):
    layer = tn.ConvLayer(3, 8, 4, stride=4, activation="relu", bias=False, rng=rng)
    out = layer.forward(np.zeros((3, 84, 84), dtype=np.float32))
    assert np.all(out == 0)
    assert layer.bias is None


def test_conv_shape_mismatch_names_both_shapes(rng):
    layer = tn.ConvLayer(3, 8, 4, stride=4, rng=rng)
    with pytest.raises(ValueError) as err:
        layer.forward(np.zeros((4, 84, 84), dtype=np.float32))
    msg = str(err.value)
    assert "(4, 84, 84)" in msg and "(8, 3, 4, 4)" in msg


def test_conv_rejects_bad_hyperparams():
    with pytest.raises(ValueError):
        tn.ConvLayer(3, 8, 0)
    with pytest.raises(ValueError):
        tn.ConvLayer(3, 8, 3, stride=0)


# -------------------------------------------------------------- linear layer


def test_linear_zero_input_zero_output(rng):
    layer = tn.LinearLayer(4, 3, activation="tanh", bias=False, rng=rng)
    assert np.all(layer.forward(np.zeros(4, dtype=np.float32)) == 0)


def test_linear_identity_passthrough():
    layer = tn.LinearLayer(3, 3, bias=False)
    layer.weight.data = np.eye(3, dtype=np.float32)
    x = np.array([0.3, -1.5, 2.0], dtype=np.float32)
    assert np.array_equal(tn.linear_forward(x, layer), x)


def test_linear_hand_example():
    layer = tn.LinearLayer(2, 2, bias=False)
    layer.weight.data = np.array([[1, 1], [2, 0]], dtype=np.float32)
    out = layer.forward(np.array([1, 2], dtype=np.float32))
    assert np.allclose(out, [3, 2])


def test_linear_dimension_mismatch_rejected(rng):
    layer = tn.LinearLayer(4, 2, rng=rng)
    with pytest.raises(ValueError):
        layer.forward(np.zeros(5, dtype=np.float32))


# ------------------------------------------------------------------- softmax


def test_softmax_uniform():
    p = tn.softmax(np.zeros(5))
    assert np.allclose(p, 0.2, atol=1e-12)
    assert abs(p.sum() - 1.0) < 1e-9


def test_softmax_shift_invariance_no_overflow():
    p = tn.softmax(np.array([3.0, 1003.0]))
    assert np.all(np.isfinite(p))
    assert p[1] > 0.999
    q = tn.softmax(np.array([3.0, 1003.0]) - 1000.0)
    assert np.abs(p - q).max() < 1e-9


def test_softmax_log_ratios():
    p = tn.softmax(np.log(np.array([1.0, 2.0, 3.0])))
    assert np.allclose(p, [1 / 6, 2 / 6, 3 / 6], atol=1e-12)


def test_softmax_sums_to_one_randomized(rng):
    for _ in range(200):
        n = int(rng.integers(1, 12))
        p = tn.softmax(rng.standard_normal(n) * 10)
        assert abs(p.sum() - 1.0) < 1e-9
        assert np.all(p > 0)


def test_softmax_rejects_nonfinite():
    with pytest.raises(ValueError):
        tn.softmax(np.array([1.0, np.nan]))


# ------------------------------------------------------------ losses/entropy


def test_cross_entropy_uniform_is_log5():
    assert abs(tn.cross_entropy_loss(np.zeros(5), 2) - math.log(5)) < 1e-9


def test_cross_entropy_hand_value():
    # -ln(e / (e + 1))
    expected = -math.log(math.e / (math.e + 1.0))
    assert abs(tn.cross_entropy_loss(np.array([1.0, 0.0]), 0) - expected) < 1e-9
    assert abs(expected - 0.3132616875182229) < 1e-12


def test_cross_entropy_monotone_toward_zero():
    losses = [
        tn.cross_entropy_loss(np.array([scale, 0.0, 0.0]), 0) for scale in (1, 5, 20, 80)
    ]
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-9


def test_cross_entropy_bad_target_rejected():
    with pytest.raises(ValueError):
        tn.cross_entropy_loss(np.zeros(5), 5)
    with pytest.raises(ValueError):
        tn.cross_entropy_loss(np.zeros(5), -1)


def test_entropy_uniform_and_deterministic():
    assert abs(tn.entropy(np.zeros(5)) - math.log(5)) < 1e-9
    assert tn.entropy(np.array([100.0, 0.0, 0.0])) < 1e-6


def test_entropy_hand_value():
    logits = np.log(np.array([2.0, 1.0, 1.0]))  # p = [0.5, 0.25, 0.25]
    assert abs(tn.entropy(logits) - 1.0397207708399179) < 1e-9


def test_entropy_bounds_randomized(rng):
    for _ in range(100):
        n = int(rng.integers(2, 9))
        h = tn.entropy(rng.standard_normal(n) * 5)
        assert -1e-12 <= h <= math.log(n) + 1e-9


# ------------------------------------------------------------------ backward


def test_backward_linear_squared_loss_closed_form(rng):
    layer = tn.LinearLayer(3, 2, bias=False, rng=rng, dtype=np.float64)
    x = rng.standard_normal(3)
    y = rng.standard_normal(2)
    g = tn.Graph()
    pred = layer.forward(x, g)
    resid = pred - y

    def loss_bwd(gs):
        return 2.0 * resid * gs

    g.record_loss(loss_bwd)
    g.backward()
    expected = 2.0 * np.outer(resid, x)
    assert rel_err(layer.weight.grad, expected) < 1e-12


def test_backward_before_forward_rejected():
    g = tn.Graph()
    with pytest.raises(RuntimeError):
        g.backward()


def test_backward_without_loss_rejected(rng):
    layer = tn.LinearLayer(3, 2, rng=rng)
    g = tn.Graph()
    layer.forward(np.zeros(3, dtype=np.float32), g)
    with pytest.raises(RuntimeError):
        g.backward()


def test_frozen_layer_receives_no_gradient(rng):
    layer = tn.LinearLayer(3, 2, bias=False, rng=rng)
    layer.plastic = False
    g = tn.Graph()
    out = layer.forward(rng.random(3, dtype=np.float32), g)
    g.record_loss(lambda gs: np.ones_like(out) * gs)
    g.backward()
    assert layer.weight.grad is None


@pytest.mark.parametrize("activation", ["relu", "sigmoid", "tanh", "none"])
def test_conv_gradients_match_finite_differences(activation, rng):
    for _ in range(10):
        c = int(rng.integers(1, 4))
        oc = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        s = int(rng.integers(1, k + 1))
        h = int(rng.integers(k, k + 5))
        w = int(rng.integers(k, k + 5))
        layer = tn.ConvLayer(c, oc, k, stride=s, activation=activation, rng=rng,
                             dtype=np.float64)
        x = rng.standard_normal((c, h, w))
        gout = rng.standard_normal(layer.output_shape((c, h, w)))

        def loss():
            return float((layer.forward(x) * gout).sum())

        g = tn.Graph()
        out = layer.forward(x, g)
        g.record_loss(lambda gs: gout * gs)
        g.backward()
        assert rel_err(layer.kernel.grad, finite_diff(loss, layer.kernel.data)) < 1e-3
        assert rel_err(layer.bias.grad, finite_diff(loss, layer.bias.data)) < 1e-3


@pytest.mark.parametrize("activation", ["relu", "sigmoid", "tanh", "none"])
def test_linear_gradients_match_finite_differences(activation, rng):
    for _ in range(10):
        n_in = int(rng.integers(1, 7))
        n_out = int(rng.integers(1, 7))
        layer = tn.LinearLayer(n_in, n_out, activation=activation, rng=rng, dtype=np.float64)
        x = rng.standard_normal(n_in)
        gout = rng.standard_normal(n_out)

        def loss():
            return float((layer.forward(x) * gout).sum())

        g = tn.Graph()
        layer.forward(x, g)
        g.record_loss(lambda gs: gout * gs)
        g.backward()
        assert rel_err(layer.weight.grad, finite_diff(loss, layer.weight.data)) < 1e-3
        assert rel_err(layer.bias.grad, finite_diff(loss, layer.bias.data)) < 1e-3


def test_loss_op_gradients_match_finite_differences(rng):
    logits = rng.standard_normal((4, 5))
    targets = rng.integers(0, 5, size=4)

    def loss():
        return tn.policy_ce_loss(logits, targets, 0.05)[0]

    g = tn.Graph()
    tn.policy_ce_loss(logits, targets, 0.05, g)
    grad = None

    class Catch:
        def __call__(self, gs):
            nonlocal grad
            grad = gs
            return gs

    # rebuild graph so the loss closure's output is observable
    g = tn.Graph()
    catch = Catch()
    g.record(catch)
    tn.policy_ce_loss(logits, targets, 0.05, g)
    g.backward()
    assert rel_err(grad, finite_diff(loss, logits)) < 1e-3


def test_huber_gradients_match_finite_differences(rng):
    q = rng.standard_normal((6, 5)) * 2
    actions = rng.integers(0, 5, size=6)
    targets = rng.standard_normal(6)

    def loss():
        return tn.huber_q_loss(q, actions, targets)

    grad = None
    g = tn.Graph()

    def catch(gs):
        nonlocal grad
        grad = gs
        return gs

    g.record(catch)
    tn.huber_q_loss(q, actions, targets, g)
    g.backward()
    assert rel_err(grad, finite_diff(loss, q)) < 1e-3


# ---------------------------------------------------------------------- adam


def test_adam_zero_gradient_leaves_params(rng):
    p = tn.Parameter(rng.random((3, 3)).astype(np.float32))
    state = tn.AdamState([p])
    before = p.data.copy()
    p.grad = np.zeros_like(p.data)
    tn.adam_step(state)
    assert np.array_equal(p.data, before)


def test_adam_step1_magnitude_near_lr(rng):
    p = tn.Parameter(np.zeros((4,), dtype=np.float32))
    state = tn.AdamState([p], lr=1e-3)
    p.grad = np.full(4, 0.37, dtype=np.float32)
    tn.adam_step(state)
    assert np.allclose(np.abs(p.data), 1e-3, rtol=1e-4)
    assert np.all(np.sign(p.data) == -1)
    assert state.step_count == 1


def test_adam_bitwise_determinism(rng):
    def run():
        r = np.random.default_rng(5)
        p = tn.Parameter(r.random((8, 8)).astype(np.float32))
        state = tn.AdamState([p], lr=1e-3)
        for _ in range(20):
            p.grad = r.standard_normal((8, 8)).astype(np.float32)
            tn.adam_step(state)
        return p.data

    assert np.array_equal(run(), run())


def test_adam_shape_mismatch_rejected(rng):
    p = tn.Parameter(np.zeros((3,), dtype=np.float32))
    state = tn.AdamState([p])
    p.grad = np.zeros((3,), dtype=np.float32)
    p.data = np.zeros((4,), dtype=np.float32)  # corrupt after state creation
    with pytest.raises(ValueError):
        tn.adam_step(state)


def test_adam_untracked_param_rejected(rng):
    p = tn.Parameter(np.zeros((3,), dtype=np.float32))
    q = tn.Parameter(np.zeros((3,), dtype=np.float32))
    state = tn.AdamState([p])
    q.grad = np.zeros((3,), dtype=np.float32)
    with pytest.raises(KeyError):
        tn.adam_step(state, [q])


# ---------------------------------------------------------------- projection


def test_project_nonnegative_examples():
    layer = tn.LinearLayer(2, 2, bias=False, nonnegative=True)
    layer.weight.data = np.array([[-0.5, 0.3], [0.0, -0.1]], dtype=np.float32)
    tn.project_nonnegative(layer)
    assert np.array_equal(layer.weight.data, np.array([[0, 0.3], [0, 0]], dtype=np.float32))


def test_project_nonnegative_idempotent(rng):
    layer = tn.LinearLayer(4, 4, bias=False, nonnegative=True, rng=rng)
    tn.project_nonnegative(layer)
    once = layer.weight.data.copy()
    tn.project_nonnegative(layer)
    assert np.array_equal(layer.weight.data, once)


def test_project_unflagged_rejected(rng):
    layer = tn.LinearLayer(2, 2, rng=rng)
    with pytest.raises(ValueError):
        tn.project_nonnegative(layer)


def test_projection_during_training_keeps_weights_nonnegative(rng):
    layer = tn.LinearLayer(6, 3, bias=False, nonnegative=True, rng=rng)
    state = tn.AdamState(layer.parameters(), lr=1e-2)
    for step in range(100):
        x = rng.random((8, 6)).astype(np.float32)
        g = tn.Graph()
        out = layer.forward(x, g)
        target = rng.standard_normal(out.shape).astype(np.float32)
        resid = out - target
        g.record_loss(lambda gs, resid=resid: (2.0 * resid / resid.size) * gs)
        g.backward()
        tn.adam_step(state)
        tn.project_nonnegative(layer)
        assert layer.weight.data.min() >= 0.0, f"negative weight at step {step}"


# --------------------------------------------------------------- checkpoints


def test_checkpoint_roundtrip_bitwise(tmp_path, rng):
    tensors = {
        "a.weight": rng.standard_normal((3, 4)).astype(np.float32),
        "b.bias": rng.standard_normal(7).astype(np.float32),
        "c": rng.standard_normal((2, 2, 2, 2)).astype(np.float32),
    }
    path = tmp_path / "t.ckpt"
    tn.save_checkpoint(path, tensors)
    loaded = tn.load_checkpoint(path)
    assert list(loaded) == list(tensors)
    for k in tensors:
        assert np.array_equal(loaded[k], tensors[k])


def test_checkpoint_header_layout(tmp_path):
    path = tmp_path / "t.ckpt"
    tn.save_checkpoint(path, {"x": np.zeros((2, 3), dtype=np.float32)})
    raw = path.read_bytes()
    assert raw[:4] == b"RWCK"
    assert int.from_bytes(raw[4:8], "little") == 1  # version
    assert int.from_bytes(raw[8:12], "little") == 1  # count
    assert int.from_bytes(raw[12:14], "little") == 1  # name length
    assert raw[14:15] == b"x"
    assert raw[15] == 2  # rank
    assert int.from_bytes(raw[16:20], "little") == 2
    assert int.from_bytes(raw[20:24], "little") == 3


def test_checkpoint_rejects_non_float32(tmp_path):
    with pytest.raises(TypeError):
        tn.save_checkpoint(tmp_path / "t.ckpt", {"x": np.zeros(3, dtype=np.float64)})


def test_checkpoint_bad_magic_rejected(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError):
        tn.load_checkpoint(p)


# ------------------------------------------------------------------- kernels


def test_conv_backends_agree(rng):
    if not kernels.NUMBA_ENABLED:
        pytest.skip("numba backend not active")
    for _ in range(5):
        b = int(rng.integers(1, 3))
        c = int(rng.integers(1, 4))
        k = int(rng.integers(1, 5))
        s = int(rng.integers(1, k + 1))
        h = int(rng.integers(k, k + 8))
        w = int(rng.integers(k, k + 8))
        x = rng.standard_normal((b, c, h, w)).astype(np.float32)
        wt = rng.standard_normal((3, c, k, k)).astype(np.float32)
        fa = kernels.conv2d_forward_numba(x, wt, s)
        fb = kernels.conv2d_forward_numpy(x, wt, s)
        assert np.abs(fa - fb).max() < 1e-4
        g = rng.standard_normal(fa.shape).astype(np.float32)
        dka, dxa = kernels.conv2d_backward_numba(x, wt, s, g, True)
        dkb, dxb = kernels.conv2d_backward_numpy(x, wt, s, g, True)
        assert np.abs(dka - dkb).max() < 1e-3
        assert np.abs(dxa - dxb).max() < 1e-3


def test_check_finite_raises():
    with pytest.raises(FloatingPointError):
        tn.check_finite(np.array([1.0, np.inf]))
    tn.check_finite(np.array([1.0, 2.0]))
