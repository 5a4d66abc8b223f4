# -*- coding: utf-8 -*-
#
# This module defines the dense Tensor object and the reverse-mode
# differentiation used to train the depth network.
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program; if not, write to the Free Software
# Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA  02111-1307  USA

"""Minimal 64-bit tensor engine with reverse-mode automatic differentiation.

Every operation returns a new, read-only Tensor. Tensors that depend on a
tensor with ``requiresGrad`` record their parents and an adjoint function;
``Tensor.backward()`` replays the recorded operations in reverse execution
order.
"""

import itertools
import logging
import struct

import numpy as np
import scipy.sparse
import scipy.special

log = logging.getLogger('SweepTool.TENSOR')

# Threshold between the quadratic and linear branches of the Huber norm
HUBER_DELTA = 1.0

# Smallest denominator used for relative gradient-check errors
GRADCHECK_FLOOR = 1e-6

TENSOR_MAGIC = b'SWTNSR01'

_checked = False
_sequence = itertools.count()


def setCheckedMode(enabled=True):
    """
    Turns the trap for non-finite values on or off.

    In checked mode, any operation producing NaN or Inf raises a
    FloatingPointError naming the operation.
    """
    global _checked
    _checked = bool(enabled)


def isCheckedMode():
    return _checked


class Tensor(object):
    """
    Dense array of 64-bit floats with optional gradient.

    Parameters
    ----------
    values : array_like
        Values (copied)
    requiresGrad : bool, optional
        If True, backward() populates the grad attribute of this tensor

    Examples
    --------
    ::

        >>> x = Tensor([1.0, 2.0], requiresGrad=True)
        >>> (x * x).sum().backward()
        >>> x.grad
        array([2., 4.])

    """
    def __init__(self, values, requiresGrad=False, parents=(), adjoint=None,
                 op='leaf', copy=True):
        if copy:
            values = np.array(values, dtype=np.float64)
        else:
            values = np.asarray(values, dtype=np.float64)
        values.setflags(write=False)
        self.values = values
        self.op = op
        self.grad = None
        tracked = tuple(p for p in parents if p.requiresGrad)
        self.requiresGrad = bool(requiresGrad) or len(tracked) > 0
        if len(tracked) > 0:
            self._parents = tuple(parents)
            self._adjoint = adjoint
        else:
            self._parents = ()
            self._adjoint = None
        self._seq = next(_sequence)
        if _checked and not np.all(np.isfinite(values)):
            raise FloatingPointError("Operation '{0}' produced non-finite "
                                     "values.".format(op))

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def size(self):
        return self.values.size

    def item(self):
        return float(self.values.reshape(-1)[0])

    def __len__(self):
        return self.values.shape[0]

    def __repr__(self):
        return 'Tensor(shape={0}, op={1!r}, requiresGrad={2})'.format(
            self.shape, self.op, self.requiresGrad)

    def zeroGrad(self):
        self.grad = None

    def backward(self):
        """
        Populates the gradients of every tensor this scalar depends on.

        Gradients accumulate over repeated calls; use zeroGrad() to reset.
        """
        if self.values.size != 1:
            raise ValueError('backward() needs a scalar loss (got shape '
                             '{0}).'.format(self.shape))
        Graph(self).backward(np.ones_like(self.values))

    # Arithmetic
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return subtract(self, other)

    def __rsub__(self, other):
        return subtract(other, self)

    def __mul__(self, other):
        return multiply(self, other)

    def __rmul__(self, other):
        return multiply(other, self)

    def __truediv__(self, other):
        return divide(self, other)

    def __rtruediv__(self, other):
        return divide(other, self)

    def __neg__(self):
        return multiply(self, -1.0)

    def __abs__(self):
        return absolute(self)

    def __getitem__(self, key):
        return index(self, key)

    def relu(self):
        return relu(self)

    def sum(self, axis=None, keepdims=False):
        return reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return reduce_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


class Graph(object):
    """
    The recorded operations a tensor depends on, in execution order.
    """
    def __init__(self, output):
        nodes = {}
        stack = [output]
        while stack:
            node = stack.pop()
            if id(node) in nodes:
                continue
            nodes[id(node)] = node
            stack.extend(node._parents)
        self.nodes = sorted(nodes.values(), key=lambda t: t._seq)
        self.output = output

    def __len__(self):
        return len(self.nodes)

    def backward(self, grad):
        """
        Propagates grad (the adjoint of the output) to every tracked tensor.
        """
        pending = {id(self.output): grad}
        for node in reversed(self.nodes):
            g = pending.pop(id(node), None)
            if g is None or not node.requiresGrad:
                continue
            g = np.asarray(g, dtype=np.float64)
            if node.grad is None:
                node.grad = np.array(g)
            else:
                node.grad = node.grad + g
            if node._adjoint is None:
                continue
            parentGrads = node._adjoint(g)
            for parent, pg in zip(node._parents, parentGrads):
                if pg is None or not parent.requiresGrad:
                    continue
                if id(parent) in pending:
                    pending[id(parent)] = pending[id(parent)] + pg
                else:
                    pending[id(parent)] = pg


def _asTensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _unbroadcast(grad, shape):
    """
    Sums grad over the axes that numpy broadcasting added or stretched.
    """
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a, b):
    a, b = _asTensor(a), _asTensor(b)

    def adjoint(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)
    return Tensor(a.values + b.values, parents=(a, b), adjoint=adjoint,
                  op='add', copy=False)


def subtract(a, b):
    a, b = _asTensor(a), _asTensor(b)

    def adjoint(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)
    return Tensor(a.values - b.values, parents=(a, b), adjoint=adjoint,
                  op='subtract', copy=False)


def multiply(a, b):
    a, b = _asTensor(a), _asTensor(b)

    def adjoint(g):
        return (_unbroadcast(g * b.values, a.shape),
                _unbroadcast(g * a.values, b.shape))
    return Tensor(a.values * b.values, parents=(a, b), adjoint=adjoint,
                  op='multiply', copy=False)


def divide(a, b):
    a, b = _asTensor(a), _asTensor(b)
    out = a.values / b.values

    def adjoint(g):
        return (_unbroadcast(g / b.values, a.shape),
                _unbroadcast(-g * out / b.values, b.shape))
    return Tensor(out, parents=(a, b), adjoint=adjoint, op='divide', copy=False)


def absolute(x):
    def adjoint(g):
        return (g * np.sign(x.values),)
    return Tensor(np.abs(x.values), parents=(x,), adjoint=adjoint,
                  op='abs', copy=False)


def relu(x):
    def adjoint(g):
        return (g * (x.values > 0),)
    return Tensor(np.maximum(x.values, 0.0), parents=(x,), adjoint=adjoint,
                  op='relu', copy=False)


def reduce_sum(x, axis=None, keepdims=False):
    def adjoint(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape),)
    return Tensor(np.sum(x.values, axis=axis, keepdims=keepdims), parents=(x,),
                  adjoint=adjoint, op='sum', copy=False)


def reduce_mean(x, axis=None, keepdims=False):
    if axis is None:
        count = x.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([x.shape[a] for a in axes]))
    return reduce_sum(x, axis=axis, keepdims=keepdims) * (1.0 / count)


def reshape(x, shape):
    def adjoint(g):
        return (g.reshape(x.shape),)
    return Tensor(x.values.reshape(shape), parents=(x,), adjoint=adjoint,
                  op='reshape', copy=False)


def index(x, key):
    def adjoint(g):
        full = np.zeros(x.shape)
        np.add.at(full, key, g)
        return (full,)
    return Tensor(x.values[key], parents=(x,), adjoint=adjoint, op='index')


def expand(x, shape):
    """
    Broadcasts x to shape (the gradient sums over the repeated axes).
    """
    def adjoint(g):
        return (_unbroadcast(g, x.shape),)
    return Tensor(np.broadcast_to(x.values, shape), parents=(x,),
                  adjoint=adjoint, op='expand')


def concatenate(tensors, axis=0):
    tensors = [_asTensor(t) for t in tensors]
    sizes = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def adjoint(g):
        return tuple(np.split(g, sizes, axis=axis))
    return Tensor(np.concatenate([t.values for t in tensors], axis=axis),
                  parents=tuple(tensors), adjoint=adjoint, op='concatenate',
                  copy=False)


def _conv(x, weight, bias, stride, dilation, padding, nd, op):
    """
    N-dimensional cross-correlation shared by conv2d and conv3d.
    """
    xv, wv = x.values, weight.values
    if xv.ndim != nd + 2 or wv.ndim != nd + 2:
        raise ValueError('{0} needs a {1}-D input and weight (got shapes {2} and '
                         '{3}).'.format(op, nd + 2, xv.shape, wv.shape))
    if xv.shape[1] != wv.shape[1]:
        raise ValueError('{0}: input has {1} channels but the weight expects '
                         '{2}.'.format(op, xv.shape[1], wv.shape[1]))
    kernel = wv.shape[2:]
    if any(k % 2 == 0 for k in kernel):
        raise ValueError('{0}: kernel size must be odd (got {1}).'.format(op, kernel))
    if stride < 1 or dilation < 1 or padding < 0:
        raise ValueError('{0}: invalid stride, dilation or padding ({1}, {2}, '
                         '{3}).'.format(op, stride, dilation, padding))
    if bias is not None and bias.shape != (wv.shape[0],):
        raise ValueError('{0}: bias shape {1} does not match {2} output '
                         'channels.'.format(op, bias.shape, wv.shape[0]))
    spatial = xv.shape[2:]
    outSize = tuple((s + 2*padding - dilation*(k - 1) - 1) // stride + 1
                    for s, k in zip(spatial, kernel))
    if any(o < 1 for o in outSize):
        raise ValueError('{0}: input of size {1} is too small for the '
                         'kernel.'.format(op, spatial))

    lead = (slice(None), slice(None))
    xp = np.pad(xv, [(0, 0), (0, 0)] + [(padding, padding)] * nd)
    taps = list(itertools.product(*[range(k) for k in kernel]))

    def window(tap):
        return lead + tuple(slice(i*dilation, i*dilation + stride*(o - 1) + 1, stride)
                            for i, o in zip(tap, outSize))

    cols = np.empty(xv.shape[:2] + kernel + outSize)
    for tap in taps:
        cols[lead + tap] = xp[window(tap)]
    kernelAxes = list(range(2, 2 + nd))
    out = np.tensordot(cols, wv, axes=([1] + kernelAxes, [1] + kernelAxes))
    out = np.moveaxis(out, -1, 1)
    if bias is not None:
        out = out + bias.values.reshape((1, -1) + (1,) * nd)
    parents = (x, weight) if bias is None else (x, weight, bias)

    def adjoint(g):
        outAxes = list(range(2, 2 + nd))
        colOutAxes = list(range(2 + nd, 2 + 2*nd))
        gw = np.tensordot(g, cols, axes=([0] + outAxes, [0] + colOutAxes))
        gx = None
        if x.requiresGrad:
            gcols = np.tensordot(g, wv, axes=([1], [0]))
            order = [0, nd + 1] + list(range(nd + 2, 2*nd + 2)) + list(range(1, nd + 1))
            gcols = gcols.transpose(order)
            gxp = np.zeros(xp.shape)
            for tap in taps:
                gxp[window(tap)] += gcols[lead + tap]
            gx = gxp[lead + tuple(slice(padding, padding + s) for s in spatial)]
        grads = (gx, gw)
        if bias is not None:
            grads = grads + (g.sum(axis=tuple([0] + outAxes)),)
        return grads
    return Tensor(out, parents=parents, adjoint=adjoint, op=op, copy=False)


def conv2d(x, weight, bias=None, stride=1, dilation=1, padding=0):
    """
    2-D cross-correlation.

    Parameters
    ----------
    x : Tensor
        Input of shape N x C x H x W
    weight : Tensor
        Filters of shape O x C x k x k (k odd)
    bias : Tensor, optional
        Per-output-channel bias of shape O
    stride, dilation, padding : int, optional
        Standard convolution parameters

    Returns
    -------
    out : Tensor
        N x O x H' x W' with H' = (H + 2 padding - dilation (k - 1) - 1) // stride + 1

    """
    return _conv(x, weight, bias, stride, dilation, padding, 2, 'conv2d')


def conv3d(x, weight, bias=None, stride=1, padding=0, dilation=1):
    """
    3-D cross-correlation of an N x C x D x H x W input with O x C x k x k x k
    filters.
    """
    return _conv(x, weight, bias, stride, dilation, padding, 3, 'conv3d')


def _bilinear_operator(coords, mask, height, width):
    """
    Sparse (height*width) x M matrix holding the bilinear weights of M samples.
    """
    x = coords[..., 0].ravel()
    y = coords[..., 1].ravel()
    usable = mask.ravel() & np.isfinite(x) & np.isfinite(y)
    x = np.where(usable, x, 0.0)
    y = np.where(usable, y, 0.0)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    samples = np.arange(x.size)
    rows, cols, vals = [], [], []
    for dy, dx, weight in ((0, 0, (1 - fy) * (1 - fx)), (0, 1, (1 - fy) * fx),
                           (1, 0, fy * (1 - fx)), (1, 1, fy * fx)):
        xi = x0 + dx
        yi = y0 + dy
        keep = (usable & (weight != 0) & (xi >= 0) & (xi <= width - 1) &
                (yi >= 0) & (yi <= height - 1))
        rows.append(yi[keep] * width + xi[keep])
        cols.append(samples[keep])
        vals.append(weight[keep])
    return scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(height * width, x.size))


def grid_sample_bilinear(feature, coords, mask=None):
    """
    Samples a feature map at continuous pixel coordinates.

    Samples outside the map, or where mask is False, are zero. Gradients flow to
    the feature values only.

    Parameters
    ----------
    feature : Tensor
        N x C x H x W map
    coords : array
        G x H' x W' x 2 (or H' x W' x 2) pixel coordinates (x, y)
    mask : array, optional
        G x H' x W' boolean mask of usable samples

    Returns
    -------
    out : Tensor
        N x C x G x H' x W' samples

    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 3:
        coords = coords[None]
    if coords.ndim != 4 or coords.shape[-1] != 2:
        raise ValueError('Sampling coordinates must have shape G x H x W x 2 '
                         '(got {0}).'.format(coords.shape))
    gridShape = coords.shape[:3]
    if mask is None:
        mask = np.ones(gridShape, dtype=bool)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), gridShape)
    N, C, H, W = feature.shape
    S = _bilinear_operator(coords, mask, H, W)
    flat = feature.values.reshape(N * C, H * W)
    out = S.T.dot(flat.T).T.reshape((N, C) + gridShape)

    def adjoint(g):
        gflat = g.reshape(N * C, -1)
        return (S.dot(gflat.T).T.reshape(N, C, H, W),)
    return Tensor(out, parents=(feature,), adjoint=adjoint,
                  op='grid_sample_bilinear', copy=False)


def avg_pool2d(x, window):
    """
    Non-overlapping average pooling.

    When window does not divide the input size, the last row and column of
    windows average over the pixels they cover.
    """
    if isinstance(window, bool) or int(window) != window or window < 1:
        raise ValueError('Pooling window must be a positive integer (got '
                         '{0!r}).'.format(window))
    window = int(window)
    N, C, H, W = x.shape
    Ho = -(-H // window)
    Wo = -(-W // window)
    padded = np.zeros((N, C, Ho * window, Wo * window))
    padded[:, :, :H, :W] = x.values
    sums = padded.reshape(N, C, Ho, window, Wo, window).sum(axis=(3, 5))
    rowCount = np.minimum(window, H - window * np.arange(Ho))
    colCount = np.minimum(window, W - window * np.arange(Wo))
    counts = np.outer(rowCount, colCount).astype(float)

    def adjoint(g):
        spread = np.repeat(np.repeat(g / counts, window, axis=2), window, axis=3)
        return (spread[:, :, :H, :W],)
    return Tensor(sums / counts, parents=(x,), adjoint=adjoint, op='avg_pool2d',
                  copy=False)


def _interpolation_matrix(nOut, nIn):
    src = (np.arange(nOut) + 0.5) * (float(nIn) / nOut) - 0.5
    src = np.clip(src, 0.0, nIn - 1)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, nIn - 1)
    w1 = src - i0
    A = np.zeros((nOut, nIn))
    np.add.at(A, (np.arange(nOut), i0), 1.0 - w1)
    np.add.at(A, (np.arange(nOut), i1), w1)
    return A


def upsample_bilinear(x, height, width):
    """
    Bilinear resize of an N x C x H x W tensor with pixel centers aligned.
    """
    if height < 1 or width < 1:
        raise ValueError('Output size must be at least 1x1.')
    Ay = _interpolation_matrix(height, x.shape[2])
    Ax = _interpolation_matrix(width, x.shape[3])
    rowsDone = np.tensordot(x.values, Ax, axes=([3], [1]))
    out = np.tensordot(Ay, rowsDone, axes=([1], [2])).transpose(1, 2, 0, 3)

    def adjoint(g):
        t = np.tensordot(g, Ax, axes=([3], [0]))
        return (np.tensordot(Ay, t, axes=([0], [2])).transpose(1, 2, 0, 3),)
    return Tensor(out, parents=(x,), adjoint=adjoint, op='upsample_bilinear',
                  copy=False)


def softmax(x, axis=-1):
    s = scipy.special.softmax(x.values, axis=axis)

    def adjoint(g):
        return (s * (g - np.sum(g * s, axis=axis, keepdims=True)),)
    return Tensor(s, parents=(x,), adjoint=adjoint, op='softmax', copy=False)


def huber(pred, target, mask=None):
    """
    Huber (smooth L1) norm averaged over the masked elements.

    Parameters
    ----------
    pred : Tensor
        Prediction
    target : Tensor or array
        Target of the same shape; carries no gradient
    mask : array, optional
        Boolean mask of the elements to average over

    Returns
    -------
    loss : Tensor
        Scalar

    """
    if isinstance(target, Tensor):
        if target.requiresGrad:
            raise ValueError('The Huber target must not require a gradient.')
        target = target.values
    target = np.asarray(target, dtype=float)
    if target.shape != pred.shape:
        raise ValueError('Prediction and target shapes differ ({0} vs '
                         '{1}).'.format(pred.shape, target.shape))
    if mask is None:
        mask = np.ones(pred.shape, dtype=bool)
    mask = np.broadcast_to(np.asarray(mask, dtype=bool), pred.shape)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise ValueError('The Huber loss needs at least one valid element.')
    err = np.where(mask, pred.values - target, 0.0)
    absErr = np.abs(err)
    quadratic = absErr <= HUBER_DELTA
    perElement = np.where(quadratic, 0.5 * err**2,
                          HUBER_DELTA * (absErr - 0.5 * HUBER_DELTA))

    def adjoint(g):
        slope = np.where(quadratic, err, HUBER_DELTA * np.sign(err))
        return (g * slope * mask / count,)
    return Tensor(np.sum(perElement) / count, parents=(pred,), adjoint=adjoint,
                  op='huber', copy=False)


def grad_check_report(f, x, h=1e-5, maxElements=None, seed=0):
    """
    Compares reverse-mode gradients with central finite differences.

    Parameters
    ----------
    f : callable
        Scalar-valued function of x
    x : Tensor or dict of Tensors
        Point at which the gradient is checked
    h : float, optional
        Finite-difference step
    maxElements : int, optional
        If given, at most this many randomly chosen elements of each tensor
        are checked
    seed : int, optional
        Seed for the element choice

    Returns
    -------
    errors : dict
        Maximum relative error per input tensor name ('x' for a single tensor)

    """
    single = isinstance(x, Tensor)
    inputs = {'x': x} if single else dict(x)

    def call(tensors):
        return f(tensors['x']) if single else f(tensors)

    leaves = dict((k, Tensor(v.values, requiresGrad=True)) for k, v in inputs.items())
    out = call(leaves)
    out.backward()
    constants = dict((k, Tensor(v.values)) for k, v in inputs.items())
    rng = np.random.default_rng(seed)
    errors = {}
    for name in sorted(leaves):
        leaf = leaves[name]
        analytic = np.zeros(leaf.shape) if leaf.grad is None else leaf.grad
        analytic = analytic.ravel()
        indices = np.arange(leaf.size)
        if maxElements is not None and leaf.size > maxElements:
            indices = np.sort(rng.choice(leaf.size, maxElements, replace=False))
        worst = 0.0
        for i in indices:
            shifted = []
            for step in (h, -h):
                vals = leaf.values.copy().ravel()
                vals[i] += step
                trial = dict(constants)
                trial[name] = Tensor(vals.reshape(leaf.shape))
                shifted.append(call(trial).item())
            numeric = (shifted[0] - shifted[1]) / (2.0 * h)
            scale = max(abs(analytic[i]), abs(numeric), GRADCHECK_FLOOR)
            worst = max(worst, abs(analytic[i] - numeric) / scale)
        errors[name] = worst
        log.debug("Gradient check of '{0}': max relative error {1:.3g}".format(
            name, worst))
    return errors


def grad_check(f, x, h=1e-5, maxElements=None, seed=0):
    """
    Returns the maximum relative error between reverse-mode and central
    finite-difference gradients of f at x (see grad_check_report).
    """
    return max(grad_check_report(f, x, h=h, maxElements=maxElements,
                                 seed=seed).values())


def tensor_to_bytes(tensor):
    """
    Serializes values as: magic, u32 rank, u32 dims, little-endian f64 payload.
    """
    values = tensor.values if isinstance(tensor, Tensor) else np.asarray(tensor)
    header = TENSOR_MAGIC + struct.pack('<I', values.ndim)
    header += struct.pack('<{0}I'.format(values.ndim), *values.shape)
    return header + np.ascontiguousarray(values, dtype='<f8').tobytes()


def tensor_from_bytes(buf, offset=0):
    """
    Reads one serialized tensor.

    Returns
    -------
    tensor : Tensor
    offset : int
        Position just after the tensor record

    """
    if buf[offset:offset+8] != TENSOR_MAGIC:
        raise IOError('Bad tensor magic at byte {0}.'.format(offset))
    offset += 8
    if len(buf) < offset + 4:
        raise IOError('Truncated tensor header at byte {0}.'.format(offset))
    rank = struct.unpack_from('<I', buf, offset)[0]
    offset += 4
    if len(buf) < offset + 4*rank:
        raise IOError('Truncated tensor shape at byte {0}.'.format(offset))
    shape = struct.unpack_from('<{0}I'.format(rank), buf, offset)
    offset += 4 * rank
    count = int(np.prod(shape)) if rank > 0 else 1
    if len(buf) < offset + 8*count:
        raise IOError('Truncated tensor payload at byte {0}.'.format(offset))
    values = np.frombuffer(buf, dtype='<f8', count=count, offset=offset)
    offset += 8 * count
    return Tensor(values.reshape(shape).astype(np.float64)), offset
