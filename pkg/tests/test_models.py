"""Architecture tests: shapes, residual identity, positional-encoding
effects, parameter-count oracles, and one-step learnability."""
import numpy as np
import pytest

from ecg_har.errors import InvalidArgumentError, ShapeError
from ecg_har.labels import NUM_CLASSES
from ecg_har.models import (
    CnnSeConfig,
    EncoderLayer,
    MeanOverTime,
    ModelGraph,
    ResidualBlock,
    ResNetConfig,
    TransformerConfig,
    Transpose12,
    build_cnn_se,
    build_cnn_transformer,
    build_model,
    build_resnet,
    config_from_dict,
    config_to_dict,
    parameter_count,
)
from ecg_har.nn import (
    Context,
    Conv1d,
    Dense,
    GlobalAvgPool1d,
    MaxPool1d,
    PositionalEncoding,
    Sequential,
    weighted_cross_entropy,
)
from ecg_har.nn.core import EVAL

from gradcheck import check_module

DESK_BUILDERS = [
    ("cnn", lambda seed: build_cnn_se(CnnSeConfig.desk_scale(), seed)),
    ("resnet", lambda seed: build_resnet(ResNetConfig.desk_scale(), seed)),
    ("transformer", lambda seed: build_cnn_transformer(TransformerConfig.desk_scale(), seed)),
]


# ------------------------------------------------------------ contract shapes

@pytest.mark.parametrize("kind,builder", DESK_BUILDERS)
@pytest.mark.parametrize("batch", [1, 2, 8])
def test_forward_shape_and_finite(kind, builder, batch):
    graph = builder(seed=0)
    x = np.random.default_rng(3).normal(size=(batch, 18, 256)).astype(np.float32)
    logits = graph.forward(x, EVAL)
    assert logits.shape == (batch, NUM_CLASSES)
    assert np.all(np.isfinite(logits))


@pytest.mark.parametrize("kind,builder", DESK_BUILDERS)
def test_eval_forward_deterministic(kind, builder):
    graph = builder(seed=1)
    x = np.random.default_rng(4).normal(size=(2, 18, 256)).astype(np.float32)
    a = graph.forward(x, EVAL)
    b = graph.forward(x, EVAL)
    np.testing.assert_array_equal(a, b)


def test_cnn_temporal_length_16_before_gap():
    graph = build_cnn_se(CnnSeConfig.desk_scale())
    x = np.random.default_rng(0).normal(size=(2, 18, 256)).astype(np.float32)
    h = x
    for step in graph.net.steps:
        if isinstance(step, GlobalAvgPool1d):
            assert h.shape[2] == 16  # 256 halved by four stride-2 pools
            break
        h = step.forward(h, EVAL)
    else:
        pytest.fail("no GlobalAvgPool1d in the CNN graph")


def test_cnn_window_too_short_for_four_poolings():
    graph = build_cnn_se(CnnSeConfig.desk_scale())
    x = np.zeros((2, 18, 8), dtype=np.float32)
    with pytest.raises(ShapeError):
        graph.forward(x, EVAL)


def test_transformer_token_shape():
    cfg = TransformerConfig.desk_scale()
    graph = build_cnn_transformer(cfg)
    x = np.random.default_rng(5).normal(size=(2, 18, 256)).astype(np.float32)
    h = x
    for step in graph.net.steps:
        h = step.forward(h, EVAL)
        if isinstance(step, PositionalEncoding):
            assert h.shape == (2, 128, cfg.d_model)  # one stride-2 pool halves 256
            break
    else:
        pytest.fail("no PositionalEncoding in the transformer graph")


def test_transformer_default_config_matches_documented_sizes():
    cfg = TransformerConfig()
    assert (cfg.d_model, cfg.heads, cfg.encoder_layers) == (512, 8, 8)
    assert cfg.max_seq_len == 12000
    assert cfg.front_channels == (128, 256)


def test_transformer_max_seq_len_below_token_count_rejected():
    with pytest.raises(InvalidArgumentError):
        TransformerConfig(max_seq_len=64)


def test_config_json_round_trip():
    for kind, cfg in [("cnn", CnnSeConfig.desk_scale()),
                      ("resnet", ResNetConfig.desk_scale()),
                      ("transformer", TransformerConfig.desk_scale())]:
        assert config_from_dict(kind, config_to_dict(cfg)) == cfg


def test_build_model_dispatch():
    assert build_model("cnn", desk_scale=True).name == "cnn"
    assert build_model("resnet", desk_scale=True).config == ResNetConfig.desk_scale()
    with pytest.raises(InvalidArgumentError):
        build_model("mlp")


# ------------------------------------------------------------ residual identity

def test_residual_identity_for_every_identity_block():
    graph = build_resnet(ResNetConfig.desk_scale(), seed=2)
    blocks = [m for m in graph.net.steps if isinstance(m, ResidualBlock)]
    identity_blocks = [b for b in blocks if b.proj is None]
    assert identity_blocks, "expected at least one identity-shortcut block"
    for block in identity_blocks:
        for conv in (block.conv1, block.conv2):
            conv.weight.value[...] = 0.0
            conv.bias.value[...] = 0.0
        c = block.conv1.in_channels
        x = np.random.default_rng(6).normal(size=(3, c, 20)).astype(np.float32)
        np.testing.assert_allclose(block.forward(x, EVAL), np.maximum(x, 0.0),
                                   rtol=1e-6, atol=1e-6)


def test_projection_blocks_at_stage_boundaries():
    graph = build_resnet(ResNetConfig.desk_scale())
    blocks = [m for m in graph.net.steps if isinstance(m, ResidualBlock)]
    per_stage = ResNetConfig.desk_scale().blocks_per_stage
    has_proj = [b.proj is not None for b in blocks]
    # only the first block of stages 2-4 downsamples/projects
    expected = [(i % per_stage == 0 and i >= per_stage) for i in range(len(blocks))]
    assert has_proj == expected


# ------------------------------------------------------------ positional encoding

def _tiny_encoder(with_pe, seed=7):
    rng = np.random.default_rng(seed)
    d, t = 8, 10
    layers = []
    if with_pe:
        layers.append(PositionalEncoding(64, d))
    layers += [
        EncoderLayer(d, 2, 16, 0.0, rng, "enc1"),
        EncoderLayer(d, 2, 16, 0.0, rng, "enc2"),
        MeanOverTime(),
        Dense(d, NUM_CLASSES, rng, "head"),
    ]
    return Sequential(*layers), d, t


def test_encoder_without_pe_is_permutation_invariant_after_mean():
    net, d, t = _tiny_encoder(with_pe=False)
    rng = np.random.default_rng(8)
    tokens = rng.normal(size=(2, t, d)).astype(np.float32)
    perm = rng.permutation(t)
    base = net.forward(tokens, EVAL)
    permuted = net.forward(tokens[:, perm, :], EVAL)
    np.testing.assert_allclose(permuted, base, rtol=1e-4, atol=1e-5)


def test_encoder_with_pe_breaks_permutation_invariance():
    net, d, t = _tiny_encoder(with_pe=True)
    rng = np.random.default_rng(9)
    tokens = rng.normal(size=(2, t, d)).astype(np.float32)
    perm = np.roll(np.arange(t), 1)
    base = net.forward(tokens, EVAL)
    permuted = net.forward(tokens[:, perm, :], EVAL)
    assert np.max(np.abs(permuted - base)) > 1e-3


# ------------------------------------------------------------ parameter counts

def test_parameter_count_dense():
    graph = ModelGraph("d", Sequential(Dense(10, 6)), None)
    assert parameter_count(graph) == 66


def test_parameter_count_conv():
    graph = ModelGraph("c", Sequential(Conv1d(2, 4, 3)), None)
    assert parameter_count(graph) == 28


def _dense_params(din, dout):
    return din * dout + dout


def _conv_params(cin, cout, k):
    return cin * cout * k + cout


def _se_params(c, r):
    return _dense_params(c, c // r) + _dense_params(c // r, c)


def test_cnn_se_default_parameter_count_closed_form():
    cfg = CnnSeConfig()
    expected = 0
    cin = cfg.in_channels
    for i, cout in enumerate(cfg.block_filters):
        expected += _conv_params(cin, cout, cfg.kernel_size)
        expected += 2 * cout  # batchnorm gamma + beta
        if i >= 2:
            expected += _se_params(cout, cfg.se_reduction)
        cin = cout
    expected += _dense_params(cin, cfg.head_hidden)
    expected += _dense_params(cfg.head_hidden, cfg.classes)
    assert parameter_count(build_cnn_se(cfg)) == expected


def test_parameter_names_unique_all_models():
    for _, builder in DESK_BUILDERS:
        names = [p.name for p in builder(seed=0).parameters()]
        assert len(names) == len(set(names))


# ------------------------------------------------------------ gradients of composites

def test_padded_maxpool_gradients():
    check_module(lambda rng: MaxPool1d(3, 2, padding=1), (2, 3, 9), seed=11)


def test_residual_block_gradients_identity_shortcut():
    check_module(lambda rng: ResidualBlock(3, 3, 2, 1, 0.0, rng, "rb"),
                 (2, 3, 12), seed=12)


def test_residual_block_gradients_projection_shortcut():
    check_module(lambda rng: ResidualBlock(3, 5, 2, 2, 0.0, rng, "rb"),
                 (2, 3, 12), seed=13)


def test_encoder_layer_gradients():
    check_module(lambda rng: EncoderLayer(4, 2, 8, 0.0, rng, "enc"),
                 (2, 5, 4), seed=14)


def test_transpose_and_mean_over_time_gradients():
    check_module(lambda rng: Transpose12(), (2, 3, 5), seed=15)
    check_module(lambda rng: MeanOverTime(), (2, 4, 3), seed=16)


# ------------------------------------------------------------ learning sanity

@pytest.mark.parametrize("kind,builder", DESK_BUILDERS)
def test_one_gradient_step_decreases_loss(kind, builder):
    graph = builder(seed=3)
    rng = np.random.default_rng(17)
    x = rng.normal(size=(1, 18, 256)).astype(np.float32)
    labels = np.array([2])
    weights = np.ones(NUM_CLASSES)

    def loss_value():
        # fixed dropout stream so both evaluations see the same network
        ctx = Context(train=True, rng=np.random.default_rng(99))
        logits = graph.forward(x, ctx)
        loss, dlogits = weighted_cross_entropy(logits, labels, weights)
        return loss, dlogits

    graph.zero_grad()
    before, dlogits = loss_value()
    graph.backward(dlogits)
    for p in graph.parameters():
        p.value -= 1e-3 * p.grad
    after, _ = loss_value()
    assert after < before
