#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# This operation implements depth prediction for scene directories
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

log = logging.getLogger('SweepTool.INFER')
log.debug('Loading INFER module.')

INITIAL_DEPTH_FILE = 'depth_initial.pfm'
META_FILE = 'meta.txt'


def run(step, parset, SM=None):

    checkpoint = parset.getString(stepKey(step, 'Checkpoint'), '')
    sceneDir = parset.getString(stepKey(step, 'SceneDir'), '')
    outDir = parset.getString(stepKey(step, 'OutDir'), '')
    views = parset.getInt(stepKey(step, 'Views'), 0)

    if outDir == '':
        outDir = '.'
    if views <= 0:
        views = None

    try:
        if SM is None:
            from ..sweepmodel import SweepModel
            SM = SweepModel(checkpoint=checkpoint)
        infer(SM, sceneDir, outDir, views=views)
        result = 0
    except Exception as e:
        log.error(e)
        result = 1

    return result


def infer_scene(SM, scene, views=None):
    """
    Predicts the depth of a scene's reference view.

    Parameters
    ----------
    SM : SweepModel
        Model
    scene : SyntheticScene
        Input scene
    views : int, optional
        Number of paired views to use, taken in file order (default: all)

    Returns
    -------
    initialDepth : DepthMap
    refinedDepth : DepthMap
    volume : CostVolume

    """
    from ..trainer import forward_scene

    if views is None:
        views = scene.nViews
    if views < 1 or views > scene.nViews:
        raise ValueError('Scene {0} has {1} paired views; cannot use '
                         '{2}.'.format(scene.name, scene.nViews, views))
    return forward_scene(scene, SM.params, SM.config, range(views))


def infer(SM, sceneDir, outDir, views=None):
    """
    Predicts depth for every scene in sceneDir and writes the results.

    For each scene, outDir/scene_<seed>/ receives depth.pfm (refined depth),
    depth_initial.pfm and meta.txt (view count, checkpoint, configuration and
    confidence of both cost volumes).

    Parameters
    ----------
    SM : SweepModel
        Model
    sceneDir : str
        A scene directory or a directory of scene directories
    outDir : str
        Output directory
    views : int, optional
        Number of paired views to use (default: all)

    Returns
    -------
    paths : list of str
        The output scene directories

    Examples
    --------
    ::

        >>> SM = sweeptool.load('run1/')
        >>> infer(SM, 'data/', 'pred/', views=1)

    """
    from ..metrics import confidence
    from ..tableio import DEPTH_FILE, find_scenes, load_scene, write_meta, write_pfm

    scenePaths = find_scenes(sceneDir)
    if len(scenePaths) == 0:
        raise IOError('No scenes found in {0}.'.format(sceneDir))
    paths = []
    for path in scenePaths:
        scene = load_scene(path)
        initialDepth, refinedDepth, volume = infer_scene(SM, scene, views)
        used = scene.nViews if views is None else views
        meta = {'scene': scene.name, 'views': used, 'checkpoint': SM.checkpoint,
                'CH': SM.config.CH, 'L': SM.config.L, 'dMin': SM.config.dMin,
                'costVariant': SM.config.costVariant,
                'aggregation': SM.config.aggregation,
                'samplingMode': SM.config.samplingMode}
        if SM.config.L >= 3:
            before = confidence(volume.initialProb.values[0])
            after = confidence(volume.prob.values[0])
            meta.update({'winnerMarginInitial': before.winner_margin,
                         'curvatureInitial': before.curvature,
                         'winnerMarginRefined': after.winner_margin,
                         'curvatureRefined': after.curvature})
        out = os.path.join(outDir, scene.name)
        if not os.path.isdir(out):
            os.makedirs(out)
        write_pfm(os.path.join(out, DEPTH_FILE), refinedDepth)
        write_pfm(os.path.join(out, INITIAL_DEPTH_FILE), initialDepth)
        write_meta(os.path.join(out, META_FILE), meta)
        log.info('Wrote prediction for {0} ({1} paired view(s)) to {2}'.format(
            scene.name, used, out))
        paths.append(out)
    SM._addHistory("INFER ('{0}', views = {1})".format(sceneDir, views))
    return paths
