#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# This operation implements the ablation study (cost variant, aggregation,
# plane sampling) and the number-of-views study
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
from collections import OrderedDict

import numpy as np

from ..operations_lib import stepKey, readConfig

log = logging.getLogger('SweepTool.ABLATE')
log.debug('Loading ABLATE module.')

ABLATION_FILE = 'ablation.csv'
VIEWS_FILE = 'views.csv'

# Image noise of the held-out scenes of the number-of-views study
VIEW_STUDY_NOISE = 0.02


def run(step, parset, SM=None):

    configFile = parset.getString(stepKey(step, 'ConfigFile'), '')
    outDir = parset.getString(stepKey(step, 'OutDir'), '')
    steps = parset.getInt(stepKey(step, 'Steps'), 0)
    seed = parset.getInt(stepKey(step, 'Seed'), 0)
    dataDir = parset.getString(stepKey(step, 'DataDir'), '')
    maxViews = parset.getInt(stepKey(step, 'MaxViews'), 3)

    if outDir == '':
        outDir = '.'
    if dataDir == '':
        dataDir = None

    try:
        ablate(readConfig(configFile), outDir, steps, seed=seed, dataDir=dataDir,
               maxViews=maxViews)
        result = 0
    except Exception as e:
        log.error(e)
        result = 1

    return result


def variants(config):
    """
    Returns the ablation configurations derived from config.

    The uniform-sampling variant sweeps [dMin, L dMin] so that it covers the
    same depths as the inverse-sampling planes.
    """
    return OrderedDict([
        ('full', config),
        ('abs-diff', config.copy(costVariant='abs-diff')),
        ('no-aggregation', config.copy(aggregation=False)),
        ('uniform', config.copy(samplingMode='uniform',
                                dMax=config.L * config.dMin)),
    ])


def confidence_summary(SM, scenes, views=None):
    """
    Mean confidence of the initial and refined probability volumes.

    Returns
    -------
    summary : dict
        marginInitial, marginRefined, curvatureInitial, curvatureRefined

    """
    from ..metrics import confidence
    from .infer import infer_scene

    before = []
    after = []
    for scene in scenes:
        initialDepth, refinedDepth, volume = infer_scene(SM, scene, views)
        before.append(confidence(volume.initialProb.values[0]))
        after.append(confidence(volume.prob.values[0]))
    return {'marginInitial': float(np.mean([c.winner_margin for c in before])),
            'marginRefined': float(np.mean([c.winner_margin for c in after])),
            'curvatureInitial': float(np.mean([c.curvature for c in before])),
            'curvatureRefined': float(np.mean([c.curvature for c in after]))}


def view_study(SM, scenes, maxViews):
    """
    Evaluates a model with 1..maxViews paired views on the same scenes.

    Returns
    -------
    table : astropy.table.Table
        Columns views, median_abs_rel, mean_abs_rel

    """
    from astropy.table import Table
    from ..metrics import depth_metrics
    from .infer import infer_scene

    if maxViews < 1:
        raise ValueError('maxViews must be at least 1.')
    for scene in scenes:
        if scene.nViews < maxViews:
            raise ValueError('Scene {0} has only {1} paired views (need '
                             '{2}).'.format(scene.name, scene.nViews, maxViews))
    table = Table(names=('views', 'median_abs_rel', 'mean_abs_rel'),
                  dtype=('i8', 'f8', 'f8'))
    for n in range(1, maxViews + 1):
        absRel = [depth_metrics(infer_scene(SM, scene, n)[1], scene.depth).abs_rel
                  for scene in scenes]
        table.add_row((n, np.median(absRel), np.mean(absRel)))
        log.info('{0} paired view(s): median abs_rel = {1:.4f}'.format(
            n, np.median(absRel)))
    return table


def ablate(parset, outDir, steps, seed=0, dataDir=None, maxViews=3):
    """
    Trains every ablation variant on the same scenes and compares them.

    Each variant is trained with the same seeds and data, evaluated on held-out
    scenes, and its checkpoint is written to outDir/<variant>/. The full model,
    trained with one paired view per sample, is then run with 1..maxViews
    views on noise-added held-out scenes.

    Parameters
    ----------
    parset : Parset
        Network and training configuration
    outDir : str
        Output directory (ablation.csv, views.csv and one checkpoint per variant)
    steps : int
        Training steps per variant
    seed : int, optional
        Training seed shared by all variants
    dataDir : str, optional
        Training scenes; generated from the configuration if not given
    maxViews : int, optional
        Largest number of paired views of the view study

    Returns
    -------
    table : astropy.table.Table
        One row per variant
    viewTable : astropy.table.Table
        One row per view count

    """
    from astropy.table import Table
    from ..metrics import DepthMetrics
    from ..network import NetworkConfig
    from ..operations_lib import (trainingSettings, sceneSpec, formatTable,
                                  HELD_OUT_SEED)
    from ..scene import generate_dataset
    from ..sweepmodel import SweepModel
    from ..tableio import write_table
    from ..trainer import smooth_losses
    from .evaluate import evaluate_model
    from .train import load_training_scenes, train

    settings = trainingSettings(parset)
    base = NetworkConfig.fromParset(parset)
    scenes = load_training_scenes(base, settings, dataDir)
    heldOut = generate_dataset(sceneSpec(settings, base), settings['heldOutScenes'],
                               seed=HELD_OUT_SEED)
    if not os.path.isdir(outDir):
        os.makedirs(outDir)

    names = ('variant',) + DepthMetrics._fields + (
        'loss_ratio', 'margin_initial', 'margin_refined', 'curvature_initial',
        'curvature_refined')
    table = Table(names=names, dtype=('U32',) + ('f8',) * (len(names) - 1))
    models = OrderedDict()
    for name, config in variants(base).items():
        log.info("Training variant '{0}'".format(name))
        SM = SweepModel(config, seed=seed)
        curve = train(SM, scenes, steps, seed=seed,
                      batchSize=settings['batchSize'],
                      learningRate=settings['learningRate'], lam=settings['lam'],
                      logInterval=settings['logInterval'],
                      checkedMode=settings['checkedMode'])
        SM.write(os.path.join(outDir, name))
        models[name] = SM
        mean = evaluate_model(SM, heldOut)[-1]
        if len(curve) > 0:
            smoothed = smooth_losses(curve['loss'])
            ratio = smoothed[-1] / smoothed[min(20, len(smoothed)) - 1]
        else:
            ratio = 1.0
        conf = confidence_summary(SM, heldOut) if config.L >= 3 else \
            dict.fromkeys(('marginInitial', 'marginRefined', 'curvatureInitial',
                           'curvatureRefined'), np.nan)
        table.add_row([name] + [mean[f] for f in DepthMetrics._fields] +
                      [ratio, conf['marginInitial'], conf['marginRefined'],
                       conf['curvatureInitial'], conf['curvatureRefined']])
    write_table(table, os.path.join(outDir, ABLATION_FILE))
    log.info('Ablation:\n' + '\n'.join(formatTable(table)))

    noisy = generate_dataset(
        sceneSpec(settings, base, nViews=maxViews,
                  noiseSigma=max(settings['noiseSigma'], VIEW_STUDY_NOISE)),
        settings['heldOutScenes'], seed=HELD_OUT_SEED)
    viewTable = view_study(models['full'], noisy, maxViews)
    write_table(viewTable, os.path.join(outDir, VIEWS_FILE))
    log.info('Number of views:\n' + '\n'.join(formatTable(viewTable)))
    return table, viewTable
