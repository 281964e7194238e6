#!/usr/bin/env python3
"""Tour of the tensor core: values, the tape, and reverse-mode gradients.

Every model in this package is built from a handful of differentiable
primitives over float64 tensors.  This script builds small graphs, runs
backward passes, and checks one gradient against finite differences.
"""

import numpy as np

from scenemask import SplitMix64, Tensor, backward, conv2d, gap, relu, sigmoid
from scenemask.tensor import mul, tsum

# --- gradients of a tiny expression ---------------------------------------
# loss = sum(x * x); the gradient is 2x, accumulated on the tape's leaves
x = Tensor(np.array([1.0, -2.0, 3.0]))
loss = tsum(mul(x, x))
backward(loss)
print("loss  =", loss.item())
print("dloss/dx =", x.grad, "(expect 2x)")

# --- a convolution that does nothing --------------------------------------
# a centered delta kernel reproduces its input exactly
image = Tensor(np.arange(9.0).reshape(1, 3, 3))
delta = np.zeros((1, 1, 3, 3))
delta[0, 0, 1, 1] = 1.0
out = conv2d(image, Tensor(delta), Tensor(np.zeros(1)), stride=1, padding=1)
print("\nconv with identity kernel reproduces input:", np.array_equal(out.data, image.data))

# --- pooling and nonlinearities --------------------------------------------
rng = SplitMix64(0)
features = Tensor(rng.uniforms(4 * 6 * 6).reshape(4, 6, 6) * 2 - 1)
pooled = gap(relu(features))
print("\nper-channel means of relu'd features:", np.round(pooled.data, 3))

# --- trust, but verify: finite differences ---------------------------------
# central differences are the independent oracle used throughout the tests
z = Tensor(rng.uniforms(5) * 4 - 2)
backward(tsum(sigmoid(z)))
step = 1e-5
numeric = np.zeros(5)
for i in range(5):
    orig = z.data[i]
    z.data[i] = orig + step
    up = tsum(sigmoid(Tensor(z.data))).item()
    z.data[i] = orig - step
    down = tsum(sigmoid(Tensor(z.data))).item()
    z.data[i] = orig
    numeric[i] = (up - down) / (2 * step)
print("\nanalytic sigmoid grad:", np.round(z.grad, 6))
print("numeric  sigmoid grad:", np.round(numeric, 6))
print("max abs difference:   ", np.max(np.abs(z.grad - numeric)))
