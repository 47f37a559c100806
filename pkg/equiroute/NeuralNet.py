import logging
from dataclasses import dataclass
import numpy as np
from .Utils import NumericsError, glorot_uniform, make_rng

# Minimal dense-network engine in 64-bit floats: dense layers with exact backward passes,
# a sequential stack, Adam with decoupled weight decay and a central-difference gradient checker.
# Layers hold references to their parameter arrays, so in-place optimizer updates are seen by
# every layer sharing a parameter dictionary.

ACTIVATIONS = ('identity', 'relu')


class DenseLayer:
    """
    Affine map followed by an activation: y = act(x W^T + b), with W of shape (out, in).
    """

    def __init__(self, weight, bias, activation = 'identity'):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation '{activation}'")
        if weight.ndim != 2 or bias.shape != (weight.shape[0],):
            raise ValueError(f"inconsistent layer shapes: weight {weight.shape}, bias {bias.shape}")
        self.weight = weight
        self.bias = bias
        self.activation = activation

    @classmethod
    def init(cls, rng, fan_in, fan_out, activation = 'identity'):
        return cls(glorot_uniform(rng, fan_out, fan_in), np.zeros(fan_out), activation)

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]

    def _check_input(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"shape mismatch: input {x.shape} for layer {self.in_dim}->{self.out_dim}")

    def forward(self, x):
        self._check_input(x)
        pre = x @ self.weight.T + self.bias
        return np.maximum(pre, 0.0) if self.activation == 'relu' else pre

    def backward(self, x, grad_out):
        self._check_input(x)
        if grad_out.shape != (x.shape[0], self.out_dim):
            raise ValueError(f"shape mismatch: grad_out {grad_out.shape}, expected {(x.shape[0], self.out_dim)}")
        if self.activation == 'relu':
            grad_out = grad_out * (x @ self.weight.T + self.bias > 0.0)
        grad_w = grad_out.T @ x
        grad_b = grad_out.sum(axis=0)
        grad_x = grad_out @ self.weight
        return grad_x, grad_w, grad_b


class Sequential:
    def __init__(self, layers):
        self.layers = list(layers)

    def forward(self, x):
        return self.forward_cached(x)[0]

    def forward_cached(self, x):
        inputs = []
        for layer in self.layers:
            inputs.append(x)
            x = layer.forward(x)
        return x, inputs

    def backward(self, inputs, grad_out):
        # returns grad wrt the stack input and (grad_w, grad_b) per layer
        grads = [None] * len(self.layers)
        for i in reversed(range(len(self.layers))):
            grad_out, grad_w, grad_b = self.layers[i].backward(inputs[i], grad_out)
            grads[i] = (grad_w, grad_b)
        return grad_out, grads


def build_stack(params, prefix, activations):
    return Sequential([DenseLayer(params[f"{prefix}.{i}.weight"], params[f"{prefix}.{i}.bias"], act) for i, act in enumerate(activations)])


def init_stack(rng, prefix, dims, activations):
    params = {}
    for i, act in enumerate(activations):
        layer = DenseLayer.init(rng, dims[i], dims[i + 1], act)
        params[f"{prefix}.{i}.weight"] = layer.weight
        params[f"{prefix}.{i}.bias"] = layer.bias
    return params


def stack_grads(prefix, grads):
    out = {}
    for i, (grad_w, grad_b) in enumerate(grads):
        out[f"{prefix}.{i}.weight"] = grad_w
        out[f"{prefix}.{i}.bias"] = grad_b
    return out


def copy_params(params):
    return {name: np.array(value, dtype=np.float64, copy=True) for name, value in params.items()}


def l2_penalty(params, l2):
    loss = l2 * sum(float(np.sum(value * value)) for value in params.values())
    grads = {name: 2.0 * l2 * value for name, value in params.items()}
    return loss, grads


class Adam:
    """
    Adam with bias correction. weight_decay applies lr * weight_decay * param outside the moment
    estimates, which implements an l2 regularizer without mixing it into the adaptive scaling.
    """

    def __init__(self, lr = 1e-3, beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8, weight_decay = 0.0):
        if weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {weight_decay}")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.weight_decay = weight_decay
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        for k in params:
            if grads[k].shape != params[k].shape:
                raise ValueError(f"shape mismatch for '{k}': param {params[k].shape}, grad {grads[k].shape}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = self.lr / bc1

        for k in params:
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(params[k])
                self.v[k] = np.zeros_like(params[k])
            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * (g * g)
            update = step_size * self.m[k] / (np.sqrt(self.v[k] / bc2) + self.epsilon)
            if self.weight_decay > 0:
                update += self.lr * self.weight_decay * params[k]
            params[k] -= update
        return params


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    checked: int
    tol: float

    @property
    def passed(self):
        return self.max_rel_error < self.tol


def _coordinates(params, max_coords, seed):
    names = sorted(params)
    total = sum(params[name].size for name in names)
    if max_coords is None or total <= max_coords:
        return [(name, idx) for name in names for idx in np.ndindex(params[name].shape)]
    rng = make_rng(seed)
    flat = np.sort(rng.choice(total, size=max_coords, replace=False))
    coords, offset, cursor = [], 0, 0
    for name in names:
        size = params[name].size
        while cursor < len(flat) and flat[cursor] < offset + size:
            coords.append((name, np.unravel_index(flat[cursor] - offset, params[name].shape)))
            cursor += 1
        offset += size
    return coords


def grad_check(loss_fn, params, h = 1e-5, tol = 1e-4, max_coords = None, seed = 0, refine = 1, floor = 1e-5):
    """
    Compare the analytic gradient of loss_fn against central differences (L(θ+h) - L(θ-h)) / 2h.

    loss_fn(params) must return (loss, grads) with grads keyed like params. Each checked coordinate
    reports |g_a - g_n| / max(|g_a|, |g_n|, floor). With refine > 1 a coordinate that misses tol is
    retried at h/10, h/100, ... and keeps its best error, which steps over relu and abs kinks lying
    within h of the current point. Parameters are restored exactly after each probe.
    """
    if not h > 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")

    loss, analytic = loss_fn(params)
    if not np.isfinite(loss):
        raise NumericsError(f"non-finite loss {loss}")

    worst = (0.0, '', ())
    coords = _coordinates(params, max_coords, seed)
    for name, idx in coords:
        array = params[name]
        original = array[idx]
        best = np.inf
        step = h
        for _ in range(max(1, refine)):
            array[idx] = original + step
            plus = loss_fn(params)[0]
            array[idx] = original - step
            minus = loss_fn(params)[0]
            array[idx] = original
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise NumericsError(f"non-finite loss while probing {name}{idx}")
            numeric = (plus - minus) / (2.0 * step)
            a = analytic[name][idx]
            error = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            best = min(best, error)
            if best < tol:
                break
            step /= 10.0
        if best > worst[0]:
            worst = (best, name, tuple(int(i) for i in idx))

    logging.info(f"grad_check: {len(coords)} coordinates, max relative error {worst[0]:.3e} at {worst[1]}{worst[2]}")
    return GradCheckReport(max_rel_error=float(worst[0]), worst_param=worst[1], worst_index=worst[2], checked=len(coords), tol=tol)
