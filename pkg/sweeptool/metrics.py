# -*- coding: utf-8 -*-
#
# This module defines the depth-map quality measures and the cost-volume
# confidence measures.
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
from collections import namedtuple

import numpy as np

from . import geometry
from . import tensor as T
from .network import DepthMap
from .tensor import Tensor

log = logging.getLogger('SweepTool.METRICS')

COMPLETENESS_THRESHOLD = 0.1

DepthMetrics = namedtuple('DepthMetrics', ['abs_rel', 'abs_diff', 'sq_rel', 'rmse',
                                           'rmse_log', 'a1', 'a2', 'a3',
                                           'completeness', 'abs_rel_inv'])

ConfidenceReport = namedtuple('ConfidenceReport', ['winner_margin', 'curvature'])


def _values(depth):
    if isinstance(depth, DepthMap):
        return depth.values, depth.valid
    if isinstance(depth, Tensor):
        values = depth.values
    else:
        values = np.asarray(depth, dtype=float)
    return values, np.isfinite(values) & (values > 0)


def _shared_mask(pred, gt, mask=None):
    p, pValid = _values(pred)
    g, gValid = _values(gt)
    if p.shape != g.shape:
        raise ValueError('Prediction and ground truth shapes differ ({0} vs '
                         '{1}).'.format(p.shape, g.shape))
    with np.errstate(invalid='ignore'):
        valid = pValid & gValid & (p > 0) & (g > 0)
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    if not np.any(valid):
        raise ValueError('No pixel is valid in both the prediction and the ground '
                         'truth.')
    return p[valid], g[valid]


def depth_metrics(pred, gt, threshold=COMPLETENESS_THRESHOLD, mask=None):
    """
    Computes the standard depth error measures over the shared valid pixels.

    Parameters
    ----------
    pred : DepthMap or array
        Predicted depth
    gt : DepthMap or array
        Ground-truth depth
    threshold : float, optional
        Per-pixel relative error below which a pixel counts as complete
    mask : array, optional
        Extra mask of pixels to include

    Returns
    -------
    metrics : DepthMetrics

    Examples
    --------
    ::

        >>> depth_metrics(np.array([2.0]), np.array([1.0])).abs_rel
        1.0

    """
    p, g = _shared_mask(pred, gt, mask)
    diff = p - g
    relErr = np.abs(diff) / g
    thresh = np.maximum(p / g, g / p)
    return DepthMetrics(
        abs_rel=float(np.mean(relErr)),
        abs_diff=float(np.mean(np.abs(diff))),
        sq_rel=float(np.mean(diff**2 / g)),
        rmse=float(np.sqrt(np.mean(diff**2))),
        rmse_log=float(np.sqrt(np.mean((np.log(p) - np.log(g))**2))),
        a1=float(np.mean(thresh < 1.25)),
        a2=float(np.mean(thresh < 1.25**2)),
        a3=float(np.mean(thresh < 1.25**3)),
        completeness=float(np.mean(relErr < threshold)),
        abs_rel_inv=float(np.mean(np.abs(1.0 / p - 1.0 / g) * g)))


def mean_metrics(rows):
    """
    Averages a list of DepthMetrics field by field.
    """
    if len(rows) == 0:
        raise ValueError('No metric rows to average.')
    return DepthMetrics(*[float(np.mean([getattr(r, f) for r in rows]))
                          for f in DepthMetrics._fields])


def geometric_error(pred, gt, mask=None):
    """
    Mean absolute difference of inverse depths (disparity with unit scale).
    """
    p, g = _shared_mask(pred, gt, mask)
    return float(np.mean(np.abs(1.0 / p - 1.0 / g)))


def warp_image(image, depth, K, pose):
    """
    Warps a paired image into the reference view using reference-view depth.

    Returns
    -------
    warped : array
        H x W image sampled from the paired view
    valid : array
        Pixels whose projection lands inside the paired image

    """
    values, valid = _values(depth)
    if values.ndim != 2:
        raise ValueError('Depth must be an H x W map (got shape '
                         '{0}).'.format(values.shape))
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = image[None]
    grid = geometry.project_depth_map(K, pose, np.where(valid, values, np.nan))
    feature = Tensor(image[None])
    warped = T.grid_sample_bilinear(feature, grid.coords, grid.inBounds)
    return warped.values[0, :, 0], grid.inBounds[0]


def photometric_error(refImage, pairedImage, pred, K, pose, mask=None):
    """
    Mean absolute intensity difference between the reference image and the
    paired image warped through the predicted depth.

    Only pixels whose projection lands inside the paired image contribute,
    further restricted to mask (H x W boolean) when it is given.
    """
    warped, inBounds = warp_image(pairedImage, pred, K, pose)
    ref = np.asarray(refImage, dtype=float)
    if ref.ndim == 2:
        ref = ref[None]
    if ref.shape[1:] != inBounds.shape:
        raise ValueError('Reference image and depth map sizes differ.')
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != inBounds.shape:
            raise ValueError('Mask shape {0} does not match the depth map '
                             '{1}.'.format(mask.shape, inBounds.shape))
        inBounds = inBounds & mask
    if not np.any(inBounds):
        raise ValueError('No pixel projects inside the paired image.')
    return float(np.mean(np.abs(ref - warped)[:, inBounds]))


def confidence(prob, axis=0, mask=None):
    """
    Winner margin and curvature of per-pixel label probabilities.

    The winner margin is p(first) - p(second). The curvature is
    p(l*) - (p(l*-1) + p(l*+1)) / 2 at the most probable label l*; at the first
    or last label the missing neighbour is replaced by the existing one.

    Parameters
    ----------
    prob : array or Tensor
        Probabilities, normalized along axis
    axis : int, optional
        Label axis
    mask : array, optional
        Pixels to average over

    Returns
    -------
    report : ConfidenceReport

    """
    if isinstance(prob, Tensor):
        prob = prob.values
    prob = np.moveaxis(np.asarray(prob, dtype=float), axis, 0)
    L = prob.shape[0]
    if L < 3:
        raise ValueError('Curvature needs at least 3 labels (got {0}).'.format(L))
    flat = prob.reshape(L, -1)
    top2 = np.sort(flat, axis=0)[-2:]
    margin = top2[1] - top2[0]

    best = np.argmax(flat, axis=0)
    cols = np.arange(flat.shape[1])
    below = np.where(best > 0, best - 1, best + 1)
    above = np.where(best < L - 1, best + 1, best - 1)
    curvature = flat[best, cols] - 0.5 * (flat[below, cols] + flat[above, cols])

    if mask is not None:
        keep = np.asarray(mask, dtype=bool).ravel()
        margin = margin[keep]
        curvature = curvature[keep]
    return ConfidenceReport(winner_margin=float(np.mean(margin)),
                            curvature=float(np.mean(curvature)))
