# -*- coding: utf-8 -*-
#
# This module defines functions used for more than one operation.
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

from . import trainer
from .parset import Parset
from .scene import SceneSpec

log = logging.getLogger('SweepTool.OPERATIONS')

STEP_PREFIX = 'SweepTool.Steps'

# Seeds of generated training scenes start here; held-out scenes start at
# HELD_OUT_SEED so the two sets never overlap
TRAIN_SEED = 1000
HELD_OUT_SEED = 900000


def stepKey(step, option):
    """
    Returns the parset key of an operation option.

    Examples
    --------
    ::

        >>> stepKey('train', 'OutDir')
        'SweepTool.Steps.train.OutDir'

    """
    return '.'.join([STEP_PREFIX, step, option])


def readConfig(configFile):
    """
    Reads a configuration file, returning an empty Parset for ''.
    """
    if configFile is None or configFile == '':
        return Parset()
    return Parset(configFile)


def trainingSettings(parset):
    """
    Reads the training keys of a configuration.

    Returns
    -------
    settings : dict
        batchSize, learningRate, lam, trainScenes, imageSize, nViews, layout,
        logInterval, checkedMode, dataSeed, heldOutScenes

    """
    return {
        'batchSize': parset.getInt('batchSize', trainer.DEFAULT_BATCH_SIZE),
        'learningRate': parset.getFloat('learningRate', trainer.DEFAULT_LEARNING_RATE),
        'lam': parset.getFloat('lambda', trainer.DEFAULT_LAMBDA),
        'trainScenes': parset.getInt('trainScenes', 50),
        'heldOutScenes': parset.getInt('heldOutScenes', 10),
        'imageSize': parset.getInt('imageSize', 32),
        'nViews': parset.getInt('nViews', 2),
        'layout': parset.getString('layout', 'textured-planes'),
        'logInterval': parset.getInt('logInterval', 10),
        'checkedMode': parset.getBool('checkedMode', True),
        'dataSeed': parset.getInt('dataSeed', TRAIN_SEED),
        'noiseSigma': parset.getFloat('noiseSigma', 0.0),
        'texturelessSize': parset.getFloat('texturelessSize', 0.0),
    }


def sceneSpec(settings, config=None, **changes):
    """
    Builds the SceneSpec implied by training settings.

    The depth range is kept inside [dMin, L dMin] of config (inverse mode) so
    that every ground-truth pixel can be supervised.
    """
    kwargs = dict(layout=settings['layout'], nViews=settings['nViews'],
                  width=settings['imageSize'], height=settings['imageSize'],
                  noiseSigma=settings['noiseSigma'],
                  texturelessSize=settings['texturelessSize'])
    if config is not None:
        lo = config.dMin * 2.0
        hi = config.L * config.dMin * 0.875 if config.samplingMode == 'inverse' \
            else config.dMax * 0.875
        if hi > lo:
            kwargs['depthRange'] = (lo, hi)
    kwargs.update(changes)
    return SceneSpec(**kwargs)


def formatTable(table, precision=4):
    """
    Returns the lines of a table with floats rounded for display.
    """
    out = table.copy()
    for name in out.colnames:
        if out[name].dtype.kind == 'f':
            out[name].info.format = '.{0}f'.format(precision)
    return out.pformat(max_lines=-1, max_width=-1)
