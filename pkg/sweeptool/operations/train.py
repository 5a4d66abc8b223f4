#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# This operation implements end-to-end training of the depth network
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
import os

from ..operations_lib import stepKey, readConfig, trainingSettings, sceneSpec

log = logging.getLogger('SweepTool.TRAIN')
log.debug('Loading TRAIN module.')

LOSS_CURVE_FILE = 'loss_curve.csv'


def run(step, parset, SM=None):

    configFile = parset.getString(stepKey(step, 'ConfigFile'), '')
    outDir = parset.getString(stepKey(step, 'OutDir'), '')
    steps = parset.getInt(stepKey(step, 'Steps'), 0)
    seed = parset.getInt(stepKey(step, 'Seed'), 0)
    dataDir = parset.getString(stepKey(step, 'DataDir'), '')

    if outDir == '':
        outDir = '.'
    if dataDir == '':
        dataDir = None

    try:
        train_from_config(readConfig(configFile), outDir, steps, seed, dataDir, SM)
        result = 0
    except Exception as e:
        log.error(e)
        result = 1

    return result


def load_training_scenes(config, settings, dataDir=None):
    """
    Loads scenes from dataDir, or generates settings['trainScenes'] scenes.
    """
    from ..scene import generate_dataset
    from ..tableio import load_dataset

    if dataDir is not None:
        scenes = load_dataset(dataDir)
        log.info('Loaded {0} training scenes from {1}'.format(len(scenes), dataDir))
    else:
        spec = sceneSpec(settings, config)
        scenes = generate_dataset(spec, settings['trainScenes'],
                                  seed=settings['dataSeed'])
        log.info('Generated {0} training scenes ({1} layout, {2}x{2})'.format(
            len(scenes), spec.layout, spec.width))
    return scenes


def train_from_config(parset, outDir, steps, seed=0, dataDir=None, SM=None):
    """
    Trains a model as described by a configuration and writes a checkpoint.

    The checkpoint (model.cfg and weights.bin) and the loss curve
    (loss_curve.csv) are written to outDir.

    Returns
    -------
    SM : SweepModel
        The trained model

    """
    from ..network import NetworkConfig
    from ..sweepmodel import SweepModel
    from ..tableio import write_table

    settings = trainingSettings(parset)
    if SM is None:
        SM = SweepModel(NetworkConfig.fromParset(parset), seed=seed)
    scenes = load_training_scenes(SM.config, settings, dataDir)
    curve = train(SM, scenes, steps, seed=seed, batchSize=settings['batchSize'],
                  learningRate=settings['learningRate'], lam=settings['lam'],
                  logInterval=settings['logInterval'],
                  checkedMode=settings['checkedMode'])
    extra = {'steps': steps, 'seed': seed, 'batchSize': settings['batchSize'],
             'learningRate': settings['learningRate'], 'lambda': settings['lam']}
    SM.write(outDir, extra=extra)
    write_table(curve, os.path.join(outDir, LOSS_CURVE_FILE))
    log.info('Wrote checkpoint and loss curve to {0}'.format(outDir))
    return SM


def train(SM, scenes, steps, seed=0, smoothing=20, **kwargs):
    """
    Trains a model in place.

    Parameters
    ----------
    SM : SweepModel
        Model to train
    scenes : list of SyntheticScene
        Training scenes
    steps : int
        Number of optimizer steps
    seed : int, optional
        Sampling seed
    smoothing : int, optional
        Window of the moving average reported at the end
    **kwargs
        Passed on to trainer.train()

    Returns
    -------
    curve : astropy.table.Table
        Columns step, loss, initial, refined

    """
    from ..trainer import train as run_training, smooth_losses

    SM.params, curve = run_training(scenes, SM.config, steps, seed=seed,
                                    params=SM.params, **kwargs)
    if len(curve) > 0:
        smoothed = smooth_losses(curve['loss'], smoothing)
        log.info('Smoothed loss: {0:.5f} at the start, {1:.5f} at the end'.format(
            smoothed[min(smoothing, len(smoothed)) - 1], smoothed[-1]))
    SM._addHistory('TRAIN ({0} steps, seed = {1}, {2} scenes)'.format(
        steps, seed, len(scenes)))
    return curve
