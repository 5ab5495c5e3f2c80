"""
Dense feed-forward networks with rectified linear hidden layers, exact backpropagation and Adam.

Inputs are batches of row vectors; a single vector is treated as a batch of one.
Everything is computed in 64-bit floating point.
"""

import copy
import json
import struct

import numpy as np

from stlpack.errors import CheckpointError, DimensionError, NonFiniteError, StaleCacheError

OUTPUT_ACTIVATIONS = ('identity', 'tanh')

_MAGIC = b'STLPMLP\x00'
_FORMAT_VERSION = 1
_ACTIVATION_TAGS = {'relu': 0, 'identity': 1, 'tanh': 2}
_TAG_NAMES = {v: k for k, v in _ACTIVATION_TAGS.items()}


class MlpParams:
    """Layer weights `(fan_in, fan_out)` and biases `(fan_out,)`.

    `version` is bumped by every optimizer step so that stale forward caches are detected.
    """

    def __init__(self, weights, biases, output_activation='identity'):
        if output_activation not in OUTPUT_ACTIVATIONS:
            raise DimensionError('Unknown output activation: %s' % output_activation)
        if len(weights) != len(biases) or not weights:
            raise DimensionError('Need one bias per weight matrix')
        for i, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise DimensionError('Layer %s has weight %s and bias %s' % (i, w.shape, b.shape))
            if i and weights[i - 1].shape[1] != w.shape[0]:
                raise DimensionError('Layer %s does not chain with layer %s' % (i, i - 1))
        self.weights = list(weights)
        self.biases = list(biases)
        self.output_activation = output_activation
        self.version = 0

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def arrays(self):
        """Parameter arrays in the order `W0, b0, W1, b1, ...`; gradients use the same order.
        """
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @property
    def n_params(self):
        return sum(a.size for a in self.arrays())


class ForwardCache:

    def __init__(self, params, inputs, pre_activations, output):
        self.params = params
        self.version = params.version
        self.inputs = inputs
        self.pre_activations = pre_activations
        self.output = output


def init(layer_sizes, output_activation, rng):
    """Creates a network with fan-in scaled uniform weights and zero biases.

    Args:
        layer_sizes (list): Input size, hidden sizes, output size.
        output_activation (str): `identity` or `tanh`.
        rng (numpy.random.Generator): Random stream.

    Returns:
        MlpParams: The parameters.
    """
    if len(layer_sizes) < 2:
        raise DimensionError('A network needs at least input and output sizes')
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, output_activation)


def copy_params(params):
    """Independent snapshot of the parameters."""
    return copy.deepcopy(params)


def forward(params, x):
    """Runs the network.

    Returns:
        tuple: `(output, cache)`; the output has one row per input row.

    Raises:
        DimensionError: Raised when the input width does not match the first layer.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[0]:
        raise DimensionError('Network expects inputs of width %s, got shape %s'
                             % (params.weights[0].shape[0], x.shape))
    inputs, pre_activations = [], []
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        a = h @ w + b
        pre_activations.append(a)
        if i < last:
            h = np.maximum(a, 0.0)
        elif params.output_activation == 'tanh':
            h = np.tanh(a)
        else:
            h = a
    return h, ForwardCache(params, inputs, pre_activations, h)


def backward(params, cache, output_gradient):
    """Backpropagates the gradient of a scalar loss with respect to the network output.

    Returns:
        tuple: `(param_grads, input_grad)`; `param_grads` follows `params.arrays()`.

    Raises:
        StaleCacheError: Raised when `cache` does not belong to the current parameters.
    """
    if cache.params is not params or cache.version != params.version:
        raise StaleCacheError('Forward cache is from other or older parameters')
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    if g.shape != cache.output.shape:
        raise DimensionError('Output gradient shape %s does not match output %s' % (g.shape, cache.output.shape))
    if params.output_activation == 'tanh':
        g = g * (1.0 - cache.output ** 2)
    grads = [None] * (2 * len(params.weights))
    for i in range(len(params.weights) - 1, -1, -1):
        grads[2 * i] = cache.inputs[i].T @ g
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ params.weights[i].T
        if i > 0:
            g = g * (cache.pre_activations[i - 1] > 0)
    return grads, g


class AdamState:
    """First and second moment accumulators for a list of parameter arrays.
    """

    def __init__(self, arrays, lr=3e-4, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.step = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon


def adam_state(params, **hyper):
    """Fresh optimizer state for an `MlpParams` or a list of arrays."""
    arrays = params.arrays() if isinstance(params, MlpParams) else params
    return AdamState(arrays, **hyper)


def adam_step(params, gradients, opt, check_finite=False):
    """Applies one bias-corrected Adam update in place.

    Args:
        params: `MlpParams` or a list of arrays.
        gradients (list): One gradient per parameter array.
        opt (AdamState): Optimizer state, updated in place.
        check_finite (bool, optional): Verify that every parameter is finite after the update.

    Raises:
        DimensionError: Raised when gradient shapes do not match.
        NonFiniteError: Raised by the finiteness check.
    """
    arrays = params.arrays() if isinstance(params, MlpParams) else params
    if len(arrays) != len(gradients) or len(arrays) != len(opt.m):
        raise DimensionError('Expected %s gradient arrays, got %s' % (len(arrays), len(gradients)))
    for p, g, m in zip(arrays, gradients, opt.m):
        if np.shape(g) != p.shape or m.shape != p.shape:
            raise DimensionError('Gradient shape %s does not match parameter %s' % (np.shape(g), p.shape))
    opt.step += 1
    correction1 = 1.0 - opt.beta1 ** opt.step
    correction2 = 1.0 - opt.beta2 ** opt.step
    for p, g, m, v in zip(arrays, gradients, opt.m, opt.v):
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * np.square(g)
        p -= opt.lr * (m / correction1) / (np.sqrt(v / correction2) + opt.epsilon)
    if isinstance(params, MlpParams):
        params.version += 1
    if check_finite and not all(np.all(np.isfinite(p)) for p in arrays):
        raise NonFiniteError('Adam step produced non-finite parameters')


def save_params(params, path):
    """Writes the binary checkpoint and its JSON sidecar `<path>.json`.

    Layout: magic, format version, layer count, layer sizes (uint32), activation tags (uint8),
    then per layer the row-major weights followed by the biases as little-endian float64.
    """
    n_layers = len(params.weights)
    tags = [_ACTIVATION_TAGS['relu']] * (n_layers - 1) + [_ACTIVATION_TAGS[params.output_activation]]
    sizes = params.layer_sizes
    with open(path, 'wb') as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack('<II', _FORMAT_VERSION, n_layers))
        fh.write(struct.pack('<%dI' % len(sizes), *sizes))
        fh.write(struct.pack('<%dB' % n_layers, *tags))
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype='<f8').tobytes())
            fh.write(np.ascontiguousarray(b, dtype='<f8').tobytes())
    with open(path + '.json', 'w', encoding='utf-8') as fh:
        json.dump({
            'magic': _MAGIC.rstrip(b'\x00').decode('ascii'),
            'version': _FORMAT_VERSION,
            'layer_sizes': sizes,
            'activations': [_TAG_NAMES[t] for t in tags],
        }, fh, indent=2)


def load_params(path):
    """Reads a checkpoint written by `save_params`.

    Raises:
        CheckpointError: Raised for a wrong magic, unknown version or truncated file.
    """
    try:
        with open(path, 'rb') as fh:
            blob = fh.read()
    except OSError as ex:
        raise CheckpointError('Cannot read checkpoint %s: %s' % (path, ex))
    if not blob.startswith(_MAGIC):
        raise CheckpointError('%s is not a network checkpoint' % path)
    offset = len(_MAGIC)
    try:
        version, n_layers = struct.unpack_from('<II', blob, offset)
        offset += 8
        if version != _FORMAT_VERSION:
            raise CheckpointError('Unsupported checkpoint version %s in %s' % (version, path))
        sizes = struct.unpack_from('<%dI' % (n_layers + 1), blob, offset)
        offset += 4 * (n_layers + 1)
        tags = struct.unpack_from('<%dB' % n_layers, blob, offset)
        offset += n_layers
    except struct.error as ex:
        raise CheckpointError('Truncated checkpoint header in %s: %s' % (path, ex))
    if n_layers == 0 or tags[-1] not in _TAG_NAMES or _TAG_NAMES[tags[-1]] not in OUTPUT_ACTIVATIONS:
        raise CheckpointError('Invalid layer description in %s' % path)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        n_w, n_b = fan_in * fan_out, fan_out
        if offset + 8 * (n_w + n_b) > len(blob):
            raise CheckpointError('Truncated weights in %s' % path)
        weights.append(np.frombuffer(blob, '<f8', n_w, offset).reshape(fan_in, fan_out).astype(np.float64))
        offset += 8 * n_w
        biases.append(np.frombuffer(blob, '<f8', n_b, offset).astype(np.float64))
        offset += 8 * n_b
    if offset != len(blob):
        raise CheckpointError('Trailing bytes in %s' % path)
    return MlpParams(weights, biases, _TAG_NAMES[tags[-1]])
