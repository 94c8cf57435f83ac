#!/usr/bin/env python3
# Copyright 2026 The EgoPose Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes small ONNX graphs and their reference outputs for the interpreter tests.

Each case is <name>.onnx plus <name>.json holding the feeds and the outputs of
onnx.reference.ReferenceEvaluator. Run from the repo root:

    python3 tools/make_onnx_oracles.py tests/data/onnx
"""

import argparse
import json
import pathlib

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper
from onnx.reference import ReferenceEvaluator

OPSET = 13


def f32(rng, *shape):
    return rng.standard_normal(shape).astype(np.float32)


def model(nodes, inputs, outputs, inits=()):
    graph = helper.make_graph(
        nodes,
        "case",
        [helper.make_tensor_value_info(n, TensorProto.FLOAT, s) for n, s in inputs],
        [helper.make_tensor_value_info(n, TensorProto.FLOAT, s) for n, s in outputs],
        [numpy_helper.from_array(v, n) for n, v in inits],
    )
    m = helper.make_model(graph, opset_imports=[helper.make_opsetid("", OPSET)])
    m.ir_version = 8
    return m


def cases(rng):
    yield "conv", model(
        [helper.make_node("Conv", ["x", "w", "b"], ["y"], pads=[1, 1, 1, 1], strides=[2, 2])],
        [("x", [1, 3, 9, 8])],
        [("y", None)],
        [("w", f32(rng, 4, 3, 3, 3)), ("b", f32(rng, 4))],
    ), {"x": f32(rng, 1, 3, 9, 8)}

    yield "conv_group_dilated", model(
        [helper.make_node("Conv", ["x", "w"], ["y"], group=2, dilations=[2, 1], pads=[2, 0, 1, 1])],
        [("x", [1, 4, 7, 6])],
        [("y", None)],
        [("w", f32(rng, 6, 2, 3, 2))],
    ), {"x": f32(rng, 1, 4, 7, 6)}

    yield "conv_same_upper", model(
        [helper.make_node("Conv", ["x", "w", "b"], ["y"], auto_pad="SAME_UPPER", strides=[2, 2])],
        [("x", [1, 2, 7, 6])],
        [("y", None)],
        [("w", f32(rng, 3, 2, 4, 3)), ("b", f32(rng, 3))],
    ), {"x": f32(rng, 1, 2, 7, 6)}

    yield "gemm", model(
        [helper.make_node("Gemm", ["a", "b", "c"], ["y"], alpha=0.5, beta=2.0, transB=1)],
        [("a", [3, 5])],
        [("y", None)],
        [("b", f32(rng, 4, 5)), ("c", f32(rng, 4))],
    ), {"a": f32(rng, 3, 5)}

    yield "gemm_transa", model(
        [helper.make_node("Gemm", ["a", "b"], ["y"], transA=1)],
        [("a", [5, 3])],
        [("y", None)],
        [("b", f32(rng, 5, 2))],
    ), {"a": f32(rng, 5, 3)}

    yield "matmul", model(
        [helper.make_node("MatMul", ["a", "b"], ["y"])],
        [("a", [2, 3, 4])],
        [("y", None)],
        [("b", f32(rng, 4, 5))],
    ), {"a": f32(rng, 2, 3, 4)}

    yield "matmul_batched", model(
        [helper.make_node("MatMul", ["a", "b"], ["y"])],
        [("a", [2, 3, 4]), ("b", [2, 4, 2])],
        [("y", None)],
    ), {"a": f32(rng, 2, 3, 4), "b": f32(rng, 2, 4, 2)}

    yield "broadcast", model(
        [
            helper.make_node("Add", ["x", "row"], ["s"]),
            helper.make_node("Mul", ["s", "col"], ["m"]),
            helper.make_node("Sub", ["m", "scalar"], ["d"]),
            helper.make_node("Div", ["d", "den"], ["y"]),
        ],
        [("x", [2, 3, 4])],
        [("y", None)],
        [
            ("row", f32(rng, 4)),
            ("col", f32(rng, 3, 1)),
            ("scalar", np.array(0.75, dtype=np.float32)),
            ("den", (np.abs(f32(rng, 2, 1, 4)) + 0.5).astype(np.float32)),
        ],
    ), {"x": f32(rng, 2, 3, 4)}

    yield "shape_ops", model(
        [
            helper.make_node("Relu", ["x"], ["r"]),
            helper.make_node("Transpose", ["r"], ["t"], perm=[0, 2, 3, 1]),
            helper.make_node("Reshape", ["t", "shape"], ["rs"]),
            helper.make_node("Unsqueeze", ["rs", "ax0"], ["u"]),
            helper.make_node("Squeeze", ["u", "ax0"], ["sq"]),
            helper.make_node("Sigmoid", ["sq"], ["sg"]),
            helper.make_node("Concat", ["sg", "sq"], ["y"], axis=-1),
        ],
        [("x", [1, 3, 4, 5])],
        [("y", None)],
        [
            ("shape", np.array([0, -1, 3], dtype=np.int64)),
            ("ax0", np.array([0], dtype=np.int64)),
        ],
    ), {"x": f32(rng, 1, 3, 4, 5)}

    yield "gap_flatten", model(
        [
            helper.make_node("GlobalAveragePool", ["x"], ["g"]),
            helper.make_node("Flatten", ["g"], ["f"], axis=1),
            helper.make_node("Identity", ["f"], ["y"]),
        ],
        [("x", [2, 3, 5, 4])],
        [("y", None)],
    ), {"x": f32(rng, 2, 3, 5, 4)}

    const = helper.make_node(
        "Constant", [], ["k"], value=numpy_helper.from_array(f32(rng, 2, 3), "k")
    )
    yield "constant", model(
        [const, helper.make_node("Add", ["x", "k"], ["y"])],
        [("x", [2, 3])],
        [("y", None)],
    ), {"x": f32(rng, 2, 3)}


def tensor_json(a):
    a = np.asarray(a)
    return {"shape": list(a.shape), "data": [float(v) for v in a.astype(np.float64).ravel()]}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=pathlib.Path)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for name, m, feeds in cases(rng):
        outputs = ReferenceEvaluator(m).run(None, feeds)
        # Declare the concrete output shapes, then validate the finished model.
        for o, v in zip(m.graph.output, outputs):
            o.CopyFrom(helper.make_tensor_value_info(o.name, TensorProto.FLOAT, list(np.asarray(v).shape)))
        onnx.checker.check_model(m)
        (args.out / f"{name}.onnx").write_bytes(m.SerializeToString())
        doc = {
            "inputs": {k: tensor_json(v) for k, v in feeds.items()},
            "outputs": {o.name: tensor_json(v) for o, v in zip(m.graph.output, outputs)},
        }
        (args.out / f"{name}.json").write_text(json.dumps(doc) + "\n")
        print(name, [np.asarray(v).shape for v in outputs])


if __name__ == "__main__":
    main()
