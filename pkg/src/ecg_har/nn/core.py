"""Module/parameter plumbing for the explicit-graph network core.

Training runs in float32; gradient checking converts a module to float64
via `astype`. Modules cache whatever their backward pass needs during
forward, so a backward call must follow the matching forward call.
"""
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Context:
    """Per-forward state: mode flag and the RNG driving dropout."""

    train: bool = False
    rng: np.random.Generator | None = None

EVAL = Context(train=False)


class Parameter:
    """A named trainable array with an accumulated gradient."""

    def __init__(self, value: np.ndarray, name: str):
        self.value = value
        self.grad = np.zeros_like(value)
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.value.shape})"


class Module:
    """Base class; subclasses register parameters and children in order."""

    def __init__(self):
        self._params: list[Parameter] = []
        self._children: list[Module] = []
        self._buffers: list[tuple] = []  # (qualified name, attribute)

    def register(self, name: str, value: np.ndarray) -> Parameter:
        p = Parameter(np.ascontiguousarray(value), name)
        self._params.append(p)
        return p

    def register_buffer(self, name: str, attr: str) -> None:
        """Mark a non-trainable array attribute as persistent state."""
        self._buffers.append((name, attr))

    def named_buffers(self) -> list:
        """(name, owner module, attribute) for every persistent buffer."""
        out = [(name, self, attr) for name, attr in self._buffers]
        for child in self._children:
            out.extend(child.named_buffers())
        return out

    def add_child(self, module: "Module") -> "Module":
        self._children.append(module)
        return module

    def parameters(self) -> list[Parameter]:
        out = list(self._params)
        for child in self._children:
            out.extend(child.parameters())
        return out

    def zero_grad(self):
        for p in self.parameters():
            p.grad[...] = 0.0

    def astype(self, dtype) -> "Module":
        """Convert parameters (and buffers) in place; returns self."""
        for p in self._params:
            p.value = p.value.astype(dtype)
            p.grad = p.grad.astype(dtype)
        for name, buf in list(vars(self).items()):
            if isinstance(buf, np.ndarray) and name not in ("_params",):
                setattr(self, name, buf.astype(dtype))
        for child in self._children:
            child.astype(dtype)
        return self

    def forward(self, x, ctx: Context):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def __call__(self, x, ctx: Context = EVAL):
        return self.forward(x, ctx)


class Sequential(Module):
    def __init__(self, *modules: Module):
        super().__init__()
        for m in modules:
            self.add_child(m)

    @property
    def steps(self):
        return self._children

    def forward(self, x, ctx):
        for m in self._children:
            x = m.forward(x, ctx)
        return x

    def backward(self, dy):
        for m in reversed(self._children):
            dy = m.backward(dy)
        return dy


def fan_in_uniform(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)
