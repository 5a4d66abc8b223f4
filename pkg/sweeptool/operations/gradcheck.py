#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# This operation implements the finite-difference gradient check suite
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

import logging

import numpy as np

from ..operations_lib import stepKey

log = logging.getLogger('SweepTool.GRADCHECK')
log.debug('Loading GRADCHECK module.')

ELEMENTWISE_TOLERANCE = 1e-6
OPERATOR_TOLERANCE = 1e-5
PIPELINE_TOLERANCE = 1e-3


def run(step, parset, SM=None):

    seed = parset.getInt(stepKey(step, 'Seed'), 0)
    size = parset.getInt(stepKey(step, 'Size'), 16)
    outFile = parset.getString(stepKey(step, 'OutFile'), '')

    try:
        gradcheck(seed=seed, size=size, outFile=outFile or None)
        result = 0
    except Exception as e:
        log.error(e)
        result = 1

    return result


def _away_from_zero(rng, shape, margin=0.05):
    x = rng.uniform(margin, 1.0, size=shape)
    return x * rng.choice([-1.0, 1.0], size=shape)


def operator_checks(seed=0):
    """
    Returns (name, function, input, tolerance) for every differentiable op.
    """
    from .. import tensor as T
    from ..tensor import Tensor

    rng = np.random.default_rng(seed)
    checks = []

    y = Tensor(_away_from_zero(rng, (3, 4)))
    checks.append(('elementwise', lambda x: ((x * y + x / (abs(x) + 1.0) - x * x)
                                             .relu() * 2.0 - x).sum(),
                   Tensor(_away_from_zero(rng, (3, 4))), ELEMENTWISE_TOLERANCE))

    w2 = Tensor(rng.normal(size=(3, 2, 3, 3)))
    b2 = Tensor(rng.normal(size=3))
    r2 = rng.normal(size=(1, 3, 6, 6))
    checks.append(('conv2d', lambda x: (T.conv2d(x, w2, b2, dilation=2, padding=2)
                                        * r2).sum(),
                   Tensor(rng.normal(size=(1, 2, 6, 6))), OPERATOR_TOLERANCE))

    w3 = Tensor(rng.normal(size=(1, 2, 3, 3, 3)) * 0.3)
    target = rng.uniform(0.5, 2.0, size=(1, 4, 4))
    depths = np.arange(1, 5, dtype=float).reshape(1, 4, 1, 1)
    checks.append(('conv3d+softmax+huber',
                   lambda x: T.huber((T.softmax(T.conv3d(x, w3, padding=1)
                                                .reshape(1, 4, 4, 4), axis=1)
                                      * depths).sum(axis=1), target),
                   Tensor(rng.normal(size=(1, 2, 4, 4, 4))), OPERATOR_TOLERANCE))

    ys, xs = np.mgrid[0:5, 0:5].astype(float)
    coords = np.stack([xs + 0.3, ys - 0.3], axis=-1)[None]
    rs = rng.normal(size=(1, 2, 1, 5, 5))
    checks.append(('grid_sample_bilinear',
                   lambda x: (T.grid_sample_bilinear(x, coords) * rs).sum(),
                   Tensor(rng.normal(size=(1, 2, 5, 5))), ELEMENTWISE_TOLERANCE))

    rp = rng.normal(size=(1, 2, 3, 3))
    checks.append(('avg_pool2d', lambda x: (T.avg_pool2d(x, 2) * rp).sum(),
                   Tensor(rng.normal(size=(1, 2, 5, 5))), ELEMENTWISE_TOLERANCE))

    ru = rng.normal(size=(1, 2, 8, 6))
    checks.append(('upsample_bilinear',
                   lambda x: (T.upsample_bilinear(x, 8, 6) * ru).sum(),
                   Tensor(rng.normal(size=(1, 2, 4, 3))), ELEMENTWISE_TOLERANCE))

    rsm = rng.normal(size=(2, 5))
    checks.append(('softmax', lambda x: (T.softmax(x, axis=1) * rsm).sum(),
                   Tensor(rng.normal(size=(2, 5))), OPERATOR_TOLERANCE))

    ht = rng.normal(size=(4, 4))
    checks.append(('huber', lambda x: T.huber(x, ht),
                   Tensor(ht + _away_from_zero(rng, (4, 4)) * 1.5),
                   ELEMENTWISE_TOLERANCE))
    return checks


def pipeline_check(seed=0, size=16, maxElements=3):
    """
    Gradient check of the full toy-scale forward pass and loss.

    Returns
    -------
    errors : dict
        Maximum relative error per parameter tensor

    """
    from ..network import NetworkConfig, init_params
    from ..scene import SceneSpec, generate_scene
    from ..tensor import grad_check_report
    from ..trainer import scene_loss

    blocks = tuple(b for b in (16, 8, 4, 2) if b <= size and size % b == 0)
    config = NetworkConfig.toy(sppBlocks=blocks)
    scene = generate_scene(SceneSpec(nViews=2, width=size, height=size), seed)
    params = init_params(config, seed)

    def loss(tensors):
        return scene_loss(scene, tensors, config).total
    return grad_check_report(loss, params, h=1e-6, maxElements=maxElements,
                             seed=seed)


def gradcheck(seed=0, size=16, outFile=None):
    """
    Runs the gradient check suite.

    Every differentiable operation and the full toy-scale pipeline are compared
    with central finite differences.

    Parameters
    ----------
    seed : int, optional
        Seed of the random inputs
    size : int, optional
        Image size of the pipeline check
    outFile : str, optional
        If given, the result table is written to this file

    Returns
    -------
    table : astropy.table.Table
        Columns check, error, tolerance, passed

    Raises
    ------
    RuntimeError
        If any check fails

    """
    from astropy.table import Table
    from ..tensor import grad_check
    from ..tableio import write_table
    from ..operations_lib import formatTable

    table = Table(names=('check', 'error', 'tolerance', 'passed'),
                  dtype=('U64', 'f8', 'f8', 'bool'))
    for name, f, x, tolerance in operator_checks(seed):
        error = grad_check(f, x)
        table.add_row((name, error, tolerance, error < tolerance))
    for name, error in sorted(pipeline_check(seed, size).items()):
        table.add_row(('pipeline:' + name, error, PIPELINE_TOLERANCE,
                       error < PIPELINE_TOLERANCE))
    log.info('Gradient checks:\n' + '\n'.join(formatTable(table, precision=8)))
    if outFile is not None:
        write_table(table, outFile)
    failed = [row['check'] for row in table if not row['passed']]
    if failed:
        raise RuntimeError('Gradient check failed for: {0}'.format(', '.join(failed)))
    log.info('All {0} gradient checks passed'.format(len(table)))
    return table
