#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# This operation implements generation of synthetic scene directories
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

from ..operations_lib import stepKey, readConfig

log = logging.getLogger('SweepTool.GENERATE')
log.debug('Loading GENERATE module.')


def run(step, parset, SM=None):

    outDir = parset.getString(stepKey(step, 'OutDir'), '')
    layout = parset.getString(stepKey(step, 'Spec'), 'planes')
    nViews = parset.getInt(stepKey(step, 'NViews'), 2)
    seed = parset.getInt(stepKey(step, 'Seed'), 0)
    count = parset.getInt(stepKey(step, 'Count'), 1)
    size = parset.getInt(stepKey(step, 'Size'), 0)
    noise = parset.getFloat(stepKey(step, 'Noise'), -1.0)
    configFile = parset.getString(stepKey(step, 'ConfigFile'), '')

    if outDir == '':
        outDir = '.'

    try:
        config = readConfig(configFile)
        if size <= 0:
            size = config.getInt('imageSize', 32)
        if noise < 0:
            noise = config.getFloat('noiseSigma', 0.0)
        generate(outDir, layout, nViews, seed, count=count, size=size,
                 noiseSigma=noise,
                 texturelessSize=config.getFloat('texturelessSize', 0.0))
        result = 0
    except Exception as e:
        log.error(e)
        result = 1

    return result


def generate(outDir, layout='planes', nViews=2, seed=0, count=1, size=32,
             noiseSigma=0.0, texturelessSize=0.0):
    """
    Generates synthetic scenes and writes them to disk.

    Scene k (k = 0..count-1) uses seed + k and is written to
    outDir/scene_<seed+k>/.

    Parameters
    ----------
    outDir : str
        Output directory
    layout : str, optional
        'planes' (or 'textured-planes'), 'box-room' or 'sphere-field'
    nViews : int, optional
        Number of paired views per scene
    seed : int, optional
        Seed of the first scene
    count : int, optional
        Number of scenes
    size : int, optional
        Image width and height in pixels
    noiseSigma : float, optional
        Standard deviation of the image noise
    texturelessSize : float, optional
        Side of the constant-intensity patch as a fraction of the image width

    Returns
    -------
    paths : list of str
        The scene directories

    Examples
    --------
    Write one textured-planes scene with three paired views::

        >>> generate('data/', 'planes', nViews=3, seed=7)
        ['data/scene_7']

    """
    from ..scene import SceneSpec, generate_scene
    from ..tableio import save_scene

    spec = SceneSpec(layout=layout, nViews=nViews, width=size, height=size,
                     noiseSigma=noiseSigma, texturelessSize=texturelessSize)
    if count < 1:
        raise ValueError('Scene count must be at least 1 (got {0}).'.format(count))
    paths = []
    for k in range(count):
        scene = generate_scene(spec, seed + k)
        paths.append(save_scene(scene, outDir))
        log.info('Wrote {0} ({1} paired views)'.format(paths[-1], scene.nViews))
    return paths
