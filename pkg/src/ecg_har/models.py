"""The three classifier architectures over (B, 18, 256) windows.

Each builder returns a ModelGraph whose forward maps a window batch to six
logits. Paper-faithful defaults are kept alongside reduced "desk-scale"
variants (width divided by 8, two encoder layers) for fast CI runs.
"""
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import InvalidArgumentError
from .labels import NUM_CLASSES
from .nn import (
    GELU,
    BatchNorm1d,
    Context,
    Conv1d,
    Dense,
    Dropout,
    GlobalAvgPool1d,
    LayerNorm,
    MaxPool1d,
    Module,
    MultiHeadAttention,
    PositionalEncoding,
    ReLU,
    SEBlock,
    Sequential,
)
from .preprocess import NUM_CHANNELS, WINDOW_LENGTH


# --------------------------------------------------------------- configs

@dataclass(frozen=True)
class CnnSeConfig:
    block_filters: tuple = (64, 128, 256, 512)
    kernel_size: int = 5
    se_reduction: int = 16
    head_hidden: int = 128
    dropout_p: float = 0.3
    in_channels: int = NUM_CHANNELS
    classes: int = NUM_CLASSES

    def __post_init__(self):
        if len(self.block_filters) != 4 or self.classes != NUM_CLASSES:
            raise InvalidArgumentError("CnnSeConfig requires 4 blocks and 6 classes")

    @classmethod
    def desk_scale(cls):
        return cls(block_filters=(8, 16, 32, 64), se_reduction=4, head_hidden=16)


@dataclass(frozen=True)
class ResNetConfig:
    stem_filters: int = 256
    stage_filters: tuple = (256, 512, 1024, 2048)
    blocks_per_stage: int = 4
    stage_dilations: tuple = (1, 2, 4, 8)
    dropout_block: float = 0.4
    dropout_head: float = 0.4
    in_channels: int = NUM_CHANNELS
    classes: int = NUM_CLASSES

    def __post_init__(self):
        if len(self.stage_filters) != 4 or len(self.stage_dilations) != 4:
            raise InvalidArgumentError("ResNetConfig requires 4 stages and 4 dilations")

    @classmethod
    def desk_scale(cls):
        return cls(stem_filters=32, stage_filters=(32, 64, 128, 256), blocks_per_stage=2)


@dataclass(frozen=True)
class TransformerConfig:
    d_model: int = 512
    heads: int = 8
    encoder_layers: int = 8
    ff_dim: int = 512
    dropout: float = 0.2
    front_channels: tuple = (128, 256)
    front_kernel: int = 5
    se_reduction: int = 16
    max_seq_len: int = 12000
    in_channels: int = NUM_CHANNELS
    classes: int = NUM_CLASSES

    def __post_init__(self):
        if self.d_model % self.heads != 0:
            raise InvalidArgumentError("d_model must be divisible by heads")
        if self.max_seq_len < WINDOW_LENGTH // 2:
            raise InvalidArgumentError("max_seq_len below the front-end token count")

    @classmethod
    def desk_scale(cls):
        return cls(d_model=64, encoder_layers=2, ff_dim=64, front_channels=(16, 32),
                   se_reduction=4)


def config_to_dict(config) -> dict:
    return asdict(config)


def config_from_dict(kind: str, data: dict):
    cls = {"cnn": CnnSeConfig, "resnet": ResNetConfig, "transformer": TransformerConfig}[kind]
    data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    return cls(**data)


# --------------------------------------------------------------- building blocks

class ResidualBlock(Module):
    """conv-BN-ReLU-dropout-conv-BN plus shortcut, then ReLU.

    The first block of a downsampling stage uses stride 2 and a 1x1
    projection shortcut; otherwise the shortcut is the identity.
    """

    def __init__(self, in_ch, out_ch, dilation, stride, dropout_p, rng, name):
        super().__init__()
        self.conv1 = self.add_child(Conv1d(in_ch, out_ch, 3, stride=stride,
                                           padding=dilation, dilation=dilation,
                                           rng=rng, name=f"{name}.conv1"))
        self.bn1 = self.add_child(BatchNorm1d(out_ch, name=f"{name}.bn1"))
        self.relu1 = self.add_child(ReLU())
        self.drop = self.add_child(Dropout(dropout_p))
        self.conv2 = self.add_child(Conv1d(out_ch, out_ch, 3, padding=dilation,
                                           dilation=dilation, rng=rng, name=f"{name}.conv2"))
        self.bn2 = self.add_child(BatchNorm1d(out_ch, name=f"{name}.bn2"))
        if in_ch != out_ch or stride != 1:
            self.proj = self.add_child(Conv1d(in_ch, out_ch, 1, stride=stride,
                                              rng=rng, name=f"{name}.proj"))
            self.proj_bn = self.add_child(BatchNorm1d(out_ch, name=f"{name}.proj_bn"))
        else:
            self.proj = None
        self.relu_out = self.add_child(ReLU())

    def forward(self, x, ctx):
        h = self.conv1.forward(x, ctx)
        h = self.bn1.forward(h, ctx)
        h = self.relu1.forward(h, ctx)
        h = self.drop.forward(h, ctx)
        h = self.conv2.forward(h, ctx)
        h = self.bn2.forward(h, ctx)
        if self.proj is not None:
            s = self.proj_bn.forward(self.proj.forward(x, ctx), ctx)
        else:
            s = x
        return self.relu_out.forward(h + s, ctx)

    def backward(self, dy):
        d = self.relu_out.backward(dy)
        dh = self.bn2.backward(d)
        dh = self.conv2.backward(dh)
        dh = self.drop.backward(dh)
        dh = self.relu1.backward(dh)
        dh = self.bn1.backward(dh)
        dx = self.conv1.backward(dh)
        if self.proj is not None:
            dx = dx + self.proj.backward(self.proj_bn.backward(d))
        else:
            dx = dx + d
        return dx


class Transpose12(Module):
    """(B, C, T) <-> (B, T, C)."""

    def forward(self, x, ctx=None):
        return np.ascontiguousarray(x.transpose(0, 2, 1))

    def backward(self, dy):
        return np.ascontiguousarray(dy.transpose(0, 2, 1))


class MeanOverTime(Module):
    """(B, T, d) -> (B, d)."""

    def forward(self, x, ctx=None):
        self._t = x.shape[1]
        return x.mean(axis=1)

    def backward(self, dy):
        return np.repeat(dy[:, None, :], self._t, axis=1) / self._t


class EncoderLayer(Module):
    """Post-norm transformer encoder layer: MHA and feed-forward sub-layers."""

    def __init__(self, d_model, heads, ff_dim, dropout, rng, name):
        super().__init__()
        self.mha = self.add_child(MultiHeadAttention(d_model, heads, rng, f"{name}.mha"))
        self.drop1 = self.add_child(Dropout(dropout))
        self.ln1 = self.add_child(LayerNorm(d_model, name=f"{name}.ln1"))
        self.ff = self.add_child(Sequential(
            Dense(d_model, ff_dim, rng, f"{name}.ff1"),
            GELU(),
            Dense(ff_dim, d_model, rng, f"{name}.ff2"),
        ))
        self.drop2 = self.add_child(Dropout(dropout))
        self.ln2 = self.add_child(LayerNorm(d_model, name=f"{name}.ln2"))

    def forward(self, x, ctx):
        h = self.ln1.forward(x + self.drop1.forward(self.mha.forward(x, ctx), ctx), ctx)
        return self.ln2.forward(h + self.drop2.forward(self.ff.forward(h, ctx), ctx), ctx)

    def backward(self, dy):
        d = self.ln2.backward(dy)
        dh = d + self.ff.backward(self.drop2.backward(d))
        d = self.ln1.backward(dh)
        return d + self.mha.backward(self.drop1.backward(d))


# --------------------------------------------------------------- model graph

class ModelGraph(Module):
    """A named classifier: forward (B, 18, 256) -> (B, 6) logits."""

    def __init__(self, name: str, net: Module, config):
        super().__init__()
        self.name = name
        self.config = config
        self.net = self.add_child(net)
        names = [p.name for p in self.parameters()]
        if len(names) != len(set(names)):
            raise InvalidArgumentError("parameter names must be unique")

    def forward(self, x, ctx=Context(train=False)):
        return self.net.forward(x, ctx)

    def backward(self, dy):
        return self.net.backward(dy)


def parameter_count(graph: Module) -> int:
    return int(sum(np.prod(p.shape) for p in graph.parameters()))


# --------------------------------------------------------------- builders

def build_cnn_se(config: CnnSeConfig | None = None, seed: int = 0) -> ModelGraph:
    """Four conv-BN-GELU-pool blocks with SE gates after the deeper two,
    global average pooling, and a two-layer head."""
    cfg = config or CnnSeConfig()
    rng = np.random.default_rng(seed)
    layers = []
    in_ch = cfg.in_channels
    for i, out_ch in enumerate(cfg.block_filters):
        layers += [
            Conv1d(in_ch, out_ch, cfg.kernel_size, padding=cfg.kernel_size // 2,
                   rng=rng, name=f"block{i + 1}.conv"),
            BatchNorm1d(out_ch, name=f"block{i + 1}.bn"),
            GELU(),
            MaxPool1d(2, 2),
        ]
        if i >= 2:  # SE recalibration on the deeper blocks
            layers.append(SEBlock(out_ch, cfg.se_reduction, rng, f"block{i + 1}.se"))
        in_ch = out_ch
    layers += [
        GlobalAvgPool1d(),
        Dense(in_ch, cfg.head_hidden, rng, "head.fc1"),
        GELU(),
        Dropout(cfg.dropout_p),
        Dense(cfg.head_hidden, cfg.classes, rng, "head.fc2"),
    ]
    return ModelGraph("cnn", Sequential(*layers), cfg)


def build_resnet(config: ResNetConfig | None = None, seed: int = 0) -> ModelGraph:
    """Stem conv + four dilated residual stages + GAP head."""
    cfg = config or ResNetConfig()
    rng = np.random.default_rng(seed)
    layers = [
        Conv1d(cfg.in_channels, cfg.stem_filters, 7, stride=2, padding=3,
               rng=rng, name="stem.conv"),
        BatchNorm1d(cfg.stem_filters, name="stem.bn"),
        ReLU(),
        MaxPool1d(3, 2, padding=1),
    ]
    in_ch = cfg.stem_filters
    for s, (out_ch, dilation) in enumerate(zip(cfg.stage_filters, cfg.stage_dilations)):
        for b in range(cfg.blocks_per_stage):
            stride = 2 if (s > 0 and b == 0) else 1
            layers.append(ResidualBlock(in_ch, out_ch, dilation, stride,
                                        cfg.dropout_block, rng, f"stage{s + 1}.block{b + 1}"))
            in_ch = out_ch
    layers += [
        GlobalAvgPool1d(),
        Dropout(cfg.dropout_head),
        Dense(in_ch, cfg.classes, rng, "head.fc"),
    ]
    return ModelGraph("resnet", Sequential(*layers), cfg)


def build_cnn_transformer(config: TransformerConfig | None = None, seed: int = 0) -> ModelGraph:
    """Conv/SE front end, pointwise projection to d_model, positional
    encoding, post-norm encoder stack, temporal mean, linear head."""
    cfg = config or TransformerConfig()
    rng = np.random.default_rng(seed)
    c1, c2 = cfg.front_channels
    k = cfg.front_kernel
    front = [
        Conv1d(cfg.in_channels, c1, k, padding=k // 2, rng=rng, name="front.conv1"),
        BatchNorm1d(c1, name="front.bn1"),
        GELU(),
        Conv1d(c1, c2, k, padding=k // 2, rng=rng, name="front.conv2"),
        BatchNorm1d(c2, name="front.bn2"),
        GELU(),
        MaxPool1d(2, 2),
        SEBlock(c2, cfg.se_reduction, rng, "front.se"),
        Conv1d(c2, cfg.d_model, 1, rng=rng, name="front.proj"),
        Transpose12(),
        PositionalEncoding(cfg.max_seq_len, cfg.d_model),
    ]
    encoders = [
        EncoderLayer(cfg.d_model, cfg.heads, cfg.ff_dim, cfg.dropout, rng, f"enc{i + 1}")
        for i in range(cfg.encoder_layers)
    ]
    head = [MeanOverTime(), Dense(cfg.d_model, cfg.classes, rng, "head.fc")]
    return ModelGraph("transformer", Sequential(*front, *encoders, *head), cfg)


MODEL_BUILDERS = {
    "cnn": (build_cnn_se, CnnSeConfig),
    "resnet": (build_resnet, ResNetConfig),
    "transformer": (build_cnn_transformer, TransformerConfig),
}


def build_model(kind: str, desk_scale: bool = False, config=None, seed: int = 0) -> ModelGraph:
    if kind not in MODEL_BUILDERS:
        raise InvalidArgumentError(f"unknown model kind {kind!r}")
    builder, cfg_cls = MODEL_BUILDERS[kind]
    if config is None:
        config = cfg_cls.desk_scale() if desk_scale else cfg_cls()
    return builder(config, seed)
