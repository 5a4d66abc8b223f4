#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# This operation implements evaluation of predicted depth maps
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

from ..operations_lib import stepKey

log = logging.getLogger('SweepTool.EVALUATE')
log.debug('Loading EVALUATE module.')


def run(step, parset, SM=None):

    predDir = parset.getString(stepKey(step, 'PredDir'), '')
    gtDir = parset.getString(stepKey(step, 'GtDir'), '')
    outFile = parset.getString(stepKey(step, 'OutFile'), '')
    threshold = parset.getFloat(stepKey(step, 'Threshold'), 0.1)

    if outFile == '':
        outFile = None

    try:
        evaluate(predDir, gtDir, outFile, threshold=threshold)
        result = 0
    except Exception as e:
        log.error(e)
        result = 1

    return result


def _pred_path(predDir, name):
    from ..tableio import DEPTH_FILE

    nested = os.path.join(predDir, name, DEPTH_FILE)
    if os.path.exists(nested):
        return nested
    flat = os.path.join(predDir, DEPTH_FILE)
    if os.path.exists(flat):
        return flat
    raise IOError('No predicted depth for {0} in {1}.'.format(name, predDir))


def scene_errors(scene, pred):
    """
    Geometric and photometric error of a prediction (photometric error
    against the first paired view).

    Returns
    -------
    errors : dict
        'geometric' and 'photometric'

    """
    from ..metrics import geometric_error, photometric_error

    return {'geometric': geometric_error(pred, scene.depth),
            'photometric': photometric_error(scene.referenceImage,
                                             scene.pairedImages[0], pred,
                                             scene.intrinsics,
                                             scene.pairedPoses[0])}


def evaluate(predDir, gtDir, outFile=None, threshold=0.1):
    """
    Compares predicted depth maps with ground truth.

    Parameters
    ----------
    predDir : str
        Directory holding scene_<seed>/depth.pfm predictions (or a single
        depth.pfm)
    gtDir : str
        A scene directory or a directory of scene directories
    outFile : str, optional
        If given, the metric table is written to this file: a 'scene' column
        followed by the DepthMetrics fields, one row per scene and a final
        'mean' row
    threshold : float, optional
        Completeness threshold on the per-pixel relative error

    Returns
    -------
    table : astropy.table.Table

    Examples
    --------
    ::

        >>> evaluate('pred/', 'data/', 'metrics.csv')

    """
    from ..metrics import depth_metrics
    from ..tableio import find_scenes, load_scene, metricsTable, read_pfm
    from ..operations_lib import formatTable

    scenePaths = find_scenes(gtDir)
    if len(scenePaths) == 0:
        raise IOError('No ground-truth scenes found in {0}.'.format(gtDir))
    rows = []
    names = []
    for path in scenePaths:
        scene = load_scene(path)
        if scene.depth is None:
            raise IOError('Scene {0} has no ground-truth depth.'.format(path))
        pred = read_pfm(_pred_path(predDir, scene.name))
        rows.append(depth_metrics(pred, scene.depth, threshold=threshold))
        names.append(scene.name)
        errors = scene_errors(scene, pred)
        log.info('{0}: abs_rel = {1:.4f}, geometric = {2:.4f}, photometric = '
                 '{3:.4f}'.format(scene.name, rows[-1].abs_rel, errors['geometric'],
                                  errors['photometric']))
    table = metricsTable(rows, names)
    log.info('Metrics:\n' + '\n'.join(formatTable(table)))
    if outFile is not None:
        table.write(outFile, format='metrics')
        log.info('Wrote {0}'.format(outFile))
    return table


def evaluate_model(SM, scenes, views=None, threshold=0.1):
    """
    Runs a model on scenes and tabulates the metrics of the refined depth.

    Returns
    -------
    table : astropy.table.Table
        'scene' column, DepthMetrics fields and a final 'mean' row

    """
    from ..metrics import depth_metrics
    from ..tableio import metricsTable
    from .infer import infer_scene

    rows = []
    for scene in scenes:
        initialDepth, refinedDepth, volume = infer_scene(SM, scene, views)
        rows.append(depth_metrics(refinedDepth, scene.depth, threshold=threshold))
    return metricsTable(rows, [scene.name for scene in scenes])
