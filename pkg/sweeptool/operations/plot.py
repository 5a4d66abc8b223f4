#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# This operation implements plotting of a scene with its predicted depth
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

log = logging.getLogger('SweepTool.PLOT')
log.debug('Loading PLOT module.')


def run(step, parset, SM=None):

    sceneDir = parset.getString(stepKey(step, 'SceneDir'), '')
    predDir = parset.getString(stepKey(step, 'PredDir'), '')
    outFile = parset.getString(stepKey(step, 'OutFile'), '')

    if outFile == '':
        outFile = None

    try:
        from ..tableio import DEPTH_FILE, load_scene, read_pfm
        from .infer import INITIAL_DEPTH_FILE

        scene = load_scene(sceneDir)
        predPath = os.path.join(predDir, scene.name)
        if not os.path.exists(os.path.join(predPath, DEPTH_FILE)):
            predPath = predDir
        pred = read_pfm(os.path.join(predPath, DEPTH_FILE))
        initialFile = os.path.join(predPath, INITIAL_DEPTH_FILE)
        initial = read_pfm(initialFile) if os.path.exists(initialFile) else None
        plot(scene, pred, fileName=outFile, initialDepth=initial)
        result = 0
    except Exception as e:
        log.error(e)
        result = 1

    return result


def plot(scene, pred, fileName=None, initialDepth=None):
    """
    Shows the reference image, ground-truth depth, predicted depth and the
    relative error of a scene.

    Parameters
    ----------
    scene : SyntheticScene
        Scene (ground truth is optional)
    pred : DepthMap
        Predicted (refined) depth
    fileName : str, optional
        If given, the plot is saved to a file instead of displayed
    initialDepth : DepthMap, optional
        If given, the initial depth is shown as well

    Examples:
    ---------
    Plot and save to a PNG file::

        >>> plot(scene, pred, 'scene_7.png')

    """
    try:
        if 'DISPLAY' not in os.environ or fileName is not None:
            import matplotlib
            if matplotlib.get_backend() != 'Agg':
                matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception as e:
        raise ImportError('PyPlot could not be imported. Plotting is not '
                          'available: {0}'.format(e))
    import numpy as np

    panels = [('Reference image', scene.referenceImage, 'gray')]
    hasGt = scene.depth is not None
    depths = [pred.asArray(np.nan)]
    if hasGt:
        depths.append(scene.depth.asArray(np.nan))
    if initialDepth is not None:
        depths.append(initialDepth.asArray(np.nan))
    vmin = np.nanmin([np.nanmin(d) for d in depths])
    vmax = np.nanmax([np.nanmax(d) for d in depths])
    if hasGt:
        panels.append(('Ground truth (m)', depths[1], 'viridis'))
    if initialDepth is not None:
        panels.append(('Initial depth (m)', depths[-1], 'viridis'))
    panels.append(('Predicted depth (m)', depths[0], 'viridis'))
    if hasGt:
        with np.errstate(invalid='ignore', divide='ignore'):
            error = np.abs(depths[0] - depths[1]) / depths[1]
        panels.append(('Relative error', error, 'magma'))

    fig, axes = plt.subplots(1, len(panels), figsize=(3.2 * len(panels), 3.4))
    for ax, (title, image, cmap) in zip(np.atleast_1d(axes), panels):
        if cmap == 'viridis':
            im = ax.imshow(image, cmap=cmap, vmin=vmin, vmax=vmax)
        else:
            im = ax.imshow(image, cmap=cmap)
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.suptitle(scene.name)

    if fileName is not None:
        fig.savefig(fileName, bbox_inches='tight')
        plt.close(fig)
        log.info('Wrote {0}'.format(fileName))
    else:
        plt.show()
