"""Plain-text network checkpoints.

A checkpoint is a single JSON document carrying the layer sequence,
every parameter tensor (shape, dtype, row-major values), the optimizer
state and the global step, plus optional header metadata (agent
configuration, a human-readable dimension-flow note).  Values are
written with full round-trip precision, so load(save(x)) is bit-exact.
"""

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from slingdqn.nn.layers import LayerSpec
from slingdqn.nn.optim import OptimizerState

FORMAT_NAME = "slingdqn-checkpoint"
FORMAT_VERSION = 1

_DTYPES = {"float32": np.float32, "float64": np.float64}


def _tensor_to_doc(arr):
    if arr.dtype.name not in _DTYPES:
        raise ValueError(f"unsupported checkpoint dtype {arr.dtype}")
    return {
        "shape": list(arr.shape),
        "dtype": arr.dtype.name,
        "data": arr.ravel().tolist(),
    }


def _tensor_from_doc(doc):
    dtype = _DTYPES[doc["dtype"]]
    return np.array(doc["data"], dtype=dtype).reshape(doc["shape"])


def _spec_to_doc(spec):
    doc = {"kind": spec.kind}
    if spec.kind == "conv":
        doc.update(
            kernel=list(spec.kernel),
            stride=list(spec.stride),
            padding=[list(spec.padding[0]), list(spec.padding[1])],
            in_channels=spec.in_channels,
            out_channels=spec.out_channels,
        )
    elif spec.kind in ("dense", "dueling-split"):
        doc.update(in_dim=spec.in_dim, out_dim=spec.out_dim)
    return doc


def _spec_from_doc(doc):
    kind = doc["kind"]
    if kind == "conv":
        return LayerSpec(
            kind,
            kernel=tuple(doc["kernel"]),
            stride=tuple(doc["stride"]),
            padding=(tuple(doc["padding"][0]), tuple(doc["padding"][1])),
            in_channels=doc["in_channels"],
            out_channels=doc["out_channels"],
        )
    if kind in ("dense", "dueling-split"):
        return LayerSpec(kind, in_dim=doc["in_dim"], out_dim=doc["out_dim"])
    return LayerSpec(kind)


def _opt_to_doc(state):
    doc = {"kind": state.kind, "step": state.step}
    if state.m is not None:
        doc["m"] = [[_tensor_to_doc(t) for t in layer] for layer in state.m]
        doc["v"] = [[_tensor_to_doc(t) for t in layer] for layer in state.v]
    return doc


def _opt_from_doc(doc):
    if doc is None:
        return None
    m = v = None
    if "m" in doc:
        m = [[_tensor_from_doc(t) for t in layer] for layer in doc["m"]]
        v = [[_tensor_from_doc(t) for t in layer] for layer in doc["v"]]
    return OptimizerState(kind=doc["kind"], step=doc["step"], m=m, v=v)


@dataclass
class Checkpoint:
    specs: tuple
    params: list
    opt_state: OptimizerState
    step: int
    agent_config: dict
    header: dict


def save(path, specs, params, opt_state=None, step=0, agent_config=None, header=None):
    """Write a checkpoint atomically (temp file + rename)."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "step": int(step),
        "header": header or {},
        "agent_config": agent_config,
        "layers": [_spec_to_doc(s) for s in specs],
        "params": [[_tensor_to_doc(p) for p in layer] for layer in params],
        "optimizer": _opt_to_doc(opt_state) if opt_state is not None else None,
    }
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(doc, f, separators=(",", ":"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path):
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"{path} is not a {FORMAT_NAME} file")
    specs = tuple(_spec_from_doc(d) for d in doc["layers"])
    params = [[_tensor_from_doc(t) for t in layer] for layer in doc["params"]]
    return Checkpoint(
        specs=specs,
        params=params,
        opt_state=_opt_from_doc(doc.get("optimizer")),
        step=doc["step"],
        agent_config=doc.get("agent_config"),
        header=doc.get("header") or {},
    )
