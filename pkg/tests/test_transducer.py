import numpy as np
import pytest
import torch

from mocha_attention import oracles
from mocha_attention.transducer import (
    MECHANISMS,
    ModelConfig,
    TaskSpec,
    TrainConfig,
    Transducer,
    collate,
    greedy_transduce,
    load_run,
    make_dataset,
    save_run,
    train,
)
from mocha_attention.transducer.tasks import END, IGNORE, START, target_for
from mocha_attention.transducer.train import token_loss

TINY = dict(d_h=4, d_s=4, d=3, vocab_size=6)


def tiny(mechanism, **kw):
    return Transducer(ModelConfig(mechanism=mechanism, **{**TINY, **kw}))


# -- Tasks ---------------------------------------------------------------


def test_pair_swap_target():
    assert target_for("pair_swap", [2, 3, 4, 5]) == [3, 2, 5, 4]
    assert target_for("copy", [4, 2]) == [4, 2]


def test_pair_swap_rejects_odd_sources():
    with pytest.raises(ValueError):
        target_for("pair_swap", [2, 3, 4])
    with pytest.raises(ValueError):
        TaskSpec(kind="pair_swap", min_len=3, max_len=3)


def test_pair_swap_only_samples_even_lengths():
    data = make_dataset(TaskSpec(kind="pair_swap", min_len=5, max_len=9, num_samples=200))
    assert {len(s) for s, _ in data} <= {6, 8}


def test_task_validation():
    with pytest.raises(ValueError):
        TaskSpec(kind="reverse")
    with pytest.raises(ValueError):
        TaskSpec(min_len=4, max_len=3)
    with pytest.raises(ValueError):
        TaskSpec(vocab_size=2)


def test_dataset_is_seeded():
    assert make_dataset(TaskSpec(num_samples=20)) == make_dataset(TaskSpec(num_samples=20))
    assert make_dataset(TaskSpec(num_samples=20)) != make_dataset(TaskSpec(num_samples=20, seed=1))


def test_collate_layout():
    b = collate([([2, 3], [3, 2]), ([4, 5, 6, 7], [5, 4, 7, 6])])
    assert b.x.tolist() == [[2, 3, END, END, END], [4, 5, 6, 7, END]]
    assert b.x_mask.sum(1).tolist() == [3, 5]
    assert b.y_in.tolist()[0][:3] == [START, 3, 2]
    assert b.y_out.tolist()[0] == [3, 2, END, IGNORE, IGNORE]


# -- Model ---------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(mechanism="local")
    with pytest.raises(ValueError):
        ModelConfig(chunk_size=0)
    assert ModelConfig(mechanism="monotonic", chunk_size=4).width == 1


def test_encoder_is_causal():
    model = tiny("soft")
    x = torch.tensor([[2, 3, 4, 5, 1]])
    full = model.encode(x)
    torch.testing.assert_close(model.encode(x[:, :3]), full[:, :3], rtol=0, atol=1e-15)


def test_encoder_rejects_out_of_range_tokens():
    with pytest.raises(ValueError):
        tiny("soft").encode(torch.tensor([[2, 6]]))


def test_zero_weights_give_uniform_logits():
    model = tiny("mocha")
    with torch.no_grad():
        for param in model.parameters():
            param.zero_()
        model.energy.v.fill_(1.0)
        model.chunk_energy.v.fill_(1.0)
    batch = collate([([2, 3, 4, 5], [3, 2, 5, 4])])
    loss, logits = token_loss(model, batch, training=False)
    assert torch.count_nonzero(logits) == 0
    assert loss.item() == pytest.approx(np.log(6), abs=1e-12)


def test_decode_step_is_deterministic_and_bias_shifts_logits():
    model = tiny("soft")
    state, ctx = torch.randn(1, 4, dtype=torch.float64), torch.randn(1, 4, dtype=torch.float64)
    _, a = model.decode_step(torch.tensor([2]), state, ctx)
    _, b = model.decode_step(torch.tensor([2]), state, ctx)
    assert torch.equal(a, b)
    with torch.no_grad():
        model.out.bias += 1.5
    _, c = model.decode_step(torch.tensor([2]), state, ctx)
    torch.testing.assert_close(c - a, torch.full_like(a, 1.5), rtol=0, atol=1e-12)


@pytest.mark.parametrize("mechanism", MECHANISMS)
def test_forward_shape_and_same_seed_same_model(mechanism):
    batch = collate(make_dataset(TaskSpec(num_samples=3, vocab_size=6)))
    a = tiny(mechanism)(batch.x, batch.x_mask, batch.y_in, training=False)
    b = tiny(mechanism)(batch.x, batch.x_mask, batch.y_in, training=False)
    assert a.shape == (3, batch.y_in.shape[1], 6)
    assert torch.equal(a, b)


@pytest.mark.parametrize("mechanism", ["monotonic", "mocha", "matcha"])
def test_padding_does_not_change_logits(mechanism):
    model = tiny(mechanism)
    pair = ([2, 3, 4, 5], [3, 2, 5, 4])
    alone = collate([pair])
    padded = collate([pair, ([2] * 8, [2] * 8)])
    a = model(alone.x, alone.x_mask, alone.y_in, training=False)[0]
    b = model(padded.x, padded.x_mask, padded.y_in, training=False)[0, :a.shape[0]]
    torch.testing.assert_close(a, b, rtol=0, atol=1e-12)


@pytest.mark.parametrize("mechanism", MECHANISMS)
def test_loss_gradient_matches_finite_differences(mechanism):
    model = tiny(mechanism, sigma=0.0)
    batch = collate([([2, 3, 4, 5], [3, 2, 5, 4])])
    params = list(model.parameters())
    flat = torch.nn.utils.parameters_to_vector(params).detach()
    loss, _ = token_loss(model, batch, training=True)
    analytic = torch.nn.utils.parameters_to_vector(torch.autograd.grad(loss, params)).numpy()
    idx = np.random.default_rng(0).choice(flat.numel(), size=25, replace=False)

    def f(sub):
        x = flat.clone()
        x[idx] = torch.as_tensor(sub)
        torch.nn.utils.vector_to_parameters(x, params)
        with torch.no_grad():
            return token_loss(model, batch, training=True)[0].item()

    numeric = oracles.finite_difference_gradient(f, flat[idx].numpy())
    np.testing.assert_allclose(analytic[idx], numeric, rtol=1e-4, atol=1e-9)


# -- Decoding ------------------------------------------------------------


@pytest.mark.parametrize("mechanism", ["monotonic", "mocha", "matcha"])
def test_greedy_stops_never_move_backwards(mechanism):
    model = tiny(mechanism, r_init=0.0)
    for seed in range(5):
        source = np.random.default_rng(seed).integers(2, 6, size=8).tolist()
        out = greedy_transduce(model, source, max_len=12)
        stops = [s for s in out.trace.stops if s is not None]
        assert stops == sorted(stops)
        assert out.trace.weights.shape[1] == len(source) + 1


@pytest.mark.parametrize("mechanism", ["monotonic", "mocha", "matcha"])
def test_greedy_energy_queries_stay_behind_stop(mechanism):
    model = tiny(mechanism, r_init=0.0)
    touched = []
    out = greedy_transduce(model, [2, 3, 4, 5, 2, 3], max_len=10, touched=touched)
    assert touched
    reached = max((s for s in out.trace.stops if s is not None), default=None)
    if all(s is not None for s in out.trace.stops):
        assert max(touched) <= reached


@pytest.mark.parametrize("mechanism", ["monotonic", "mocha", "matcha"])
def test_saturated_stops_make_expected_and_hard_decoding_agree(mechanism):
    model = tiny(mechanism)
    with torch.no_grad():
        model.energy.r.fill_(30.0)
    source = [2, 3, 4, 5, 4]
    hard = greedy_transduce(model, source, max_len=8)
    soft = greedy_transduce(model, source, max_len=8, expected=True)
    assert hard.tokens == soft.tokens
    np.testing.assert_allclose(hard.trace.weights, soft.trace.weights, atol=1e-9)


def test_soft_trace_rows_are_distributions():
    out = greedy_transduce(tiny("soft"), [2, 3, 4], max_len=5)
    np.testing.assert_allclose(out.trace.weights.sum(1), 1.0, atol=1e-12)


# -- Training ------------------------------------------------------------

SHORT = TrainConfig(steps=6, batch_size=4, eval_every=3, probe_size=8)
SMALL_TASK = TaskSpec(num_samples=50, min_len=3, max_len=5, vocab_size=6)


def test_training_is_deterministic():
    a = train(SMALL_TASK, ModelConfig(mechanism="mocha", **TINY), SHORT)
    b = train(SMALL_TASK, ModelConfig(mechanism="mocha", **TINY), SHORT)
    assert a.curve == b.curve and len(a.curve) == 2
    for pa, pb in zip(a.model.parameters(), b.model.parameters()):
        assert torch.equal(pa, pb)


def test_target_accuracy_stops_early():
    result = train(SMALL_TASK, ModelConfig(**TINY), TrainConfig(steps=50, batch_size=4, eval_every=2,
                                                                probe_size=8, target_accuracy=0.0))
    assert result.steps_run == 2


def test_run_directory_round_trip(tmp_path):
    config = ModelConfig(mechanism="matcha", **TINY)
    result = train(SMALL_TASK, config, SHORT)
    save_run(tmp_path, SMALL_TASK, config, SHORT, result)
    assert (tmp_path / "loss.csv").read_text().splitlines()[0] == "step,loss,accuracy"
    task, model = load_run(tmp_path)
    assert task == SMALL_TASK and model.config == config
    batch = collate(make_dataset(SMALL_TASK)[:3])
    with torch.no_grad():
        torch.testing.assert_close(
            model(batch.x, batch.x_mask, batch.y_in, training=False),
            result.model(batch.x, batch.x_mask, batch.y_in, training=False),
            rtol=0, atol=0,
        )
