"""
Differentiable tensors and the gradient tape
Reverse-mode differentiation over numpy arrays
"""

import logging
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from utils.error_handler import UsageError

logger = logging.getLogger(__name__)

_local = threading.local()


def _tape_stack() -> List["GradientTape"]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


class Tensor:
    """A float64 array that may take part in reverse-mode differentiation"""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def __add__(self, other):
        from kernels import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from kernels import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from kernels import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from kernels import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from kernels import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from kernels import ops
        return ops.mul(other, self)

    def __neg__(self):
        from kernels import ops
        return ops.mul(self, -1.0)

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"


def as_tensor(value) -> Tensor:
    """Wrap arrays and scalars as constant tensors; tensors pass through"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass
class TapeRecord:
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class GradientTape:
    """Ordered record of differentiable operations executed inside its context"""

    def __init__(self):
        self.records: List[TapeRecord] = []
        self.consumed = False

    def __enter__(self) -> "GradientTape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        elif self in stack:
            stack.remove(self)
        return False

    def __len__(self) -> int:
        return len(self.records)

    def activation_bytes(self) -> int:
        """Bytes held by recorded intermediate outputs"""
        return sum(record.output.data.nbytes for record in self.records)


def active_tape() -> Optional[GradientTape]:
    stack = _tape_stack()
    return stack[-1] if stack else None


def record(op: str, output: np.ndarray, inputs: Iterable[Tensor],
           vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]) -> Tensor:
    """Wrap an op result and record it on the innermost active tape when an input is tracked"""
    inputs = tuple(inputs)
    tape = active_tape()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(output, requires_grad=tracked)
    if tracked:
        tape.records.append(TapeRecord(op=op, output=out, inputs=inputs, vjp=vjp))
    return out


class Gradients:
    """Gradients produced by one backward pass, looked up by tensor"""

    def __init__(self, grads: Dict[int, np.ndarray], tensors: Dict[int, Tensor]):
        self._grads = grads
        self._tensors = tensors

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        grad = self._grads.get(id(tensor))
        if grad is None or self._tensors.get(id(tensor)) is not tensor:
            return np.zeros_like(tensor.data)
        return grad

    def __contains__(self, tensor: Tensor) -> bool:
        return self._tensors.get(id(tensor)) is tensor

    def for_params(self, named: Dict[str, Tensor]) -> Dict[str, np.ndarray]:
        return {name: self[tensor] for name, tensor in named.items()}


def backward(tape: GradientTape, loss: Tensor) -> Gradients:
    """Run the reverse pass over a tape; a tape can be consumed only once"""
    if tape.consumed:
        raise UsageError("gradient tape was already consumed; record a new tape for another backward pass")
    if not tape.records:
        raise UsageError("backward called on an empty tape")
    if loss.size != 1:
        raise UsageError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape.consumed = True

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    tensors: Dict[int, Tensor] = {id(loss): loss}

    for rec in reversed(tape.records):
        upstream = grads.get(id(rec.output))
        if upstream is None:
            continue
        for inp, grad in zip(rec.inputs, rec.vjp(upstream)):
            if grad is None or not inp.requires_grad:
                continue
            if grad.shape != inp.shape:
                grad = np.broadcast_to(grad, inp.shape)
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad
                tensors[key] = inp

    logger.debug(f"backward: {len(tape.records)} records, {len(grads)} gradients")
    return Gradients(grads, tensors)
