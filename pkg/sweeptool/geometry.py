# -*- coding: utf-8 -*-
#
# This module defines the pinhole camera model, the plane hypotheses and the
# plane-sweep warp used by SweepTool.
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

"""Cameras, plane hypotheses and warp grids.

Poses follow one convention throughout: ``(R, t)`` maps a point given in
reference-camera coordinates to paired-camera coordinates, ``X_i = R X + t``.
Integer pixel coordinates denote pixel centers.
"""

import logging
import numpy as np

log = logging.getLogger('SweepTool.GEOMETRY')

INVERSE = 'inverse'
UNIFORM = 'uniform'
samplingModes = (INVERSE, UNIFORM)

# Projected depths at or below this are behind the paired camera
BEHIND_CAMERA_EPS = 1e-9

# Far end of the depth range for uniform sampling (meters)
DEFAULT_DMAX = 10.0


class CameraIntrinsics(object):
    """
    Pinhole intrinsics.

    Parameters
    ----------
    fx, fy : float
        Focal lengths in pixels
    cx, cy : float
        Principal point in pixels
    width, height : int
        Image size in pixels

    """
    def __init__(self, fx, fy, cx, cy, width, height):
        self.fx = float(fx)
        self.fy = float(fy)
        self.cx = float(cx)
        self.cy = float(cy)
        self.width = int(width)
        self.height = int(height)
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError('Focal lengths must be positive (got fx={0}, '
                             'fy={1}).'.format(fx, fy))
        if self.width < 1 or self.height < 1:
            raise ValueError('Image size must be at least 1x1 (got {0}x{1}).'.format(
                width, height))
        # Pixel centers sit at integer coordinates, so the image covers
        # [-0.5, width - 0.5] x [-0.5, height - 0.5]
        if not (-0.5 <= self.cx <= self.width - 0.5 and
                -0.5 <= self.cy <= self.height - 0.5):
            raise ValueError('Principal point ({0}, {1}) lies outside the {2}x{3} '
                             'image.'.format(cx, cy, width, height))

    @property
    def K(self):
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def __eq__(self, other):
        return (isinstance(other, CameraIntrinsics) and
                (self.fx, self.fy, self.cx, self.cy, self.width, self.height) ==
                (other.fx, other.fy, other.cx, other.cy, other.width, other.height))

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return ('CameraIntrinsics(fx={0!r}, fy={1!r}, cx={2!r}, cy={3!r}, '
                'width={4}, height={5})'.format(self.fx, self.fy, self.cx,
                                                self.cy, self.width, self.height))


class CameraPose(object):
    """
    Rigid motion from the reference camera to a paired camera.

    Parameters
    ----------
    R : array
        3x3 rotation matrix
    t : array
        Translation 3-vector in meters

    """
    def __init__(self, R, t, tolerance=1e-9):
        self.R = np.array(R, dtype=float).reshape(3, 3)
        self.t = np.array(t, dtype=float).reshape(3)
        self.R.setflags(write=False)
        self.t.setflags(write=False)
        if np.max(np.abs(self.R.T.dot(self.R) - np.eye(3))) > tolerance:
            raise ValueError('R is not orthonormal: max |R^T R - I| = {0:g}'.format(
                np.max(np.abs(self.R.T.dot(self.R) - np.eye(3)))))
        if abs(np.linalg.det(self.R) - 1.0) > tolerance:
            raise ValueError('R is not a proper rotation: det(R) = {0!r}'.format(
                np.linalg.det(self.R)))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def fromWorldToCamera(cls, refR, refT, R, t):
        """
        Builds the reference-to-paired pose from two world-to-camera poses.

        Parameters
        ----------
        refR, refT : array
            World-to-camera rotation and translation of the reference view
        R, t : array
            World-to-camera rotation and translation of the paired view

        """
        refR = np.asarray(refR, dtype=float)
        R = np.asarray(R, dtype=float)
        relR = R.dot(refR.T)
        relT = np.asarray(t, dtype=float) - relR.dot(np.asarray(refT, dtype=float))
        return cls(relR, relT)

    def isIdentity(self):
        return np.array_equal(self.R, np.eye(3)) and not np.any(self.t)

    def inverse(self):
        """
        Returns the pose mapping paired-camera coordinates back to the reference.
        """
        return CameraPose(self.R.T, -self.R.T.dot(self.t))

    def center(self):
        """
        Returns the paired camera center in reference coordinates.
        """
        return -self.R.T.dot(self.t)

    def __repr__(self):
        return 'CameraPose(R={0}, t={1})'.format(self.R.tolist(), self.t.tolist())


class PlaneHypothesisSet(object):
    """
    The fronto-parallel planes swept through the reference frustum.

    Label l (1-based) sits at depths[l-1]. In inverse mode the labels run from
    the far plane (l = 1) to d_min (l = L).
    """
    def __init__(self, depths, dMin, mode, dMax=None):
        self.depths = np.array(depths, dtype=float)
        self.depths.setflags(write=False)
        self.dMin = float(dMin)
        self.dMax = None if dMax is None else float(dMax)
        self.mode = mode

    def __len__(self):
        return len(self.depths)

    @property
    def L(self):
        return len(self.depths)

    def __repr__(self):
        return 'PlaneHypothesisSet(L={0}, dMin={1}, mode={2!r})'.format(
            len(self), self.dMin, self.mode)


class WarpGrid(object):
    """
    Source-pixel coordinates in a paired view for every reference pixel and plane.

    Attributes
    ----------
    coords : array
        L x H x W x 2 continuous (x, y) coordinates; NaN behind the camera
    inBounds : array
        L x H x W boolean mask of usable samples
    depth : array
        L x H x W depth of each sample in the paired camera

    """
    def __init__(self, coords, inBounds, depth):
        self.coords = coords
        self.inBounds = inBounds
        self.depth = depth

    @property
    def shape(self):
        return self.inBounds.shape


def sample_planes(L, dMin, mode=INVERSE, dMax=DEFAULT_DMAX):
    """
    Generates the swept plane depths.

    Parameters
    ----------
    L : int
        Number of planes (depth labels)
    dMin : float
        Minimum scene depth in meters
    mode : str, optional
        'inverse' for planes uniformly spaced in 1/d (d_l = L d_min / l), or
        'uniform' for planes uniformly spaced in depth between dMin and dMax
    dMax : float, optional
        Far end of the range in uniform mode

    Returns
    -------
    planes : PlaneHypothesisSet

    Examples
    --------
    The full-size planes::

        >>> planes = sample_planes(64, 0.5)
        >>> planes.depths[0], planes.depths[-1]
        (32.0, 0.5)

    """
    if isinstance(L, bool) or int(L) != L or L < 1:
        raise ValueError('The number of planes must be a positive integer '
                         '(got {0!r}).'.format(L))
    if not dMin > 0:
        raise ValueError('dMin must be positive (got {0!r}).'.format(dMin))
    L = int(L)
    dMin = float(dMin)
    if mode == INVERSE:
        labels = np.arange(1, L+1, dtype=float)
        depths = (L * dMin) / labels
        return PlaneHypothesisSet(depths, dMin, mode, dMax=L*dMin)
    elif mode == UNIFORM:
        if L == 1:
            return PlaneHypothesisSet([dMin], dMin, mode, dMax=dMax)
        if not dMax > dMin:
            raise ValueError('dMax ({0!r}) must exceed dMin ({1!r}) in uniform '
                             'mode.'.format(dMax, dMin))
        step = (float(dMax) - dMin) / (L - 1)
        depths = float(dMax) - step * np.arange(L, dtype=float)
        depths[-1] = dMin
        return PlaneHypothesisSet(depths, dMin, mode, dMax=dMax)
    else:
        raise ValueError("Sampling mode '{0}' not understood. Must be one of: "
                         "{1}".format(mode, ', '.join(samplingModes)))


def project_pixel(u, d, K, pose):
    """
    Projects one reference pixel at depth d into the paired view.

    Parameters
    ----------
    u : sequence
        Pixel (x, y), optionally homogeneous (x, y, 1)
    d : float
        Depth in meters along the reference optical axis
    K : CameraIntrinsics
        Shared intrinsics
    pose : CameraPose
        Reference-to-paired pose

    Returns
    -------
    x, y : float
        Continuous pixel coordinates in the paired view (NaN when behind)
    z : float
        Depth of the point in the paired camera
    valid : bool
        False when the point lies behind the paired camera

    """
    x, y = float(u[0]), float(u[1])
    if pose.isIdentity():
        return x, y, float(d), True
    ray = np.array([(x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0])
    point = pose.R.dot(ray * d) + pose.t
    z = point[2]
    if z <= BEHIND_CAMERA_EPS:
        return np.nan, np.nan, z, False
    return K.fx * point[0] / z + K.cx, K.fy * point[1] / z + K.cy, z, True


def _project_lattice(K, pose, depth, width, height):
    """
    Projects the reference pixel lattice for a stack of depth layers.

    depth is broadcastable to (L, height, width).
    """
    depth = np.asarray(depth, dtype=float)
    ys, xs = np.mgrid[0:height, 0:width].astype(float)
    L = np.broadcast(depth, np.empty((1, height, width))).shape[0]
    depth = np.broadcast_to(depth, (L, height, width))
    if pose.isIdentity():
        coords = np.empty((L, height, width, 2))
        coords[..., 0] = xs
        coords[..., 1] = ys
        z = depth.copy()
    else:
        rays = np.stack([(xs - K.cx) / K.fx, (ys - K.cy) / K.fy,
                         np.ones_like(xs)])
        rotated = np.tensordot(pose.R, rays, axes=(1, 0))
        points = rotated[None, :, :, :] * depth[:, None, :, :] + \
            pose.t[None, :, None, None]
        z = points[:, 2]
        behind = z <= BEHIND_CAMERA_EPS
        with np.errstate(divide='ignore', invalid='ignore'):
            coords = np.stack([K.fx * points[:, 0] / z + K.cx,
                               K.fy * points[:, 1] / z + K.cy], axis=-1)
        coords[behind] = np.nan
    with np.errstate(invalid='ignore'):
        inBounds = ((z > BEHIND_CAMERA_EPS) &
                    (coords[..., 0] >= 0) & (coords[..., 0] <= width - 1) &
                    (coords[..., 1] >= 0) & (coords[..., 1] <= height - 1))
    return WarpGrid(coords, inBounds, z)


def compute_warp_grid(K, pose, planes, width=None, height=None):
    """
    Computes the plane-sweep warp of the reference lattice for every plane.

    Parameters
    ----------
    K : CameraIntrinsics
        Intrinsics at the resolution of the sampled maps (rescale with
        scale_intrinsics for downsampled features)
    pose : CameraPose
        Reference-to-paired pose
    planes : PlaneHypothesisSet
        Swept planes
    width, height : int, optional
        Lattice size; defaults to the intrinsics image size

    Returns
    -------
    grid : WarpGrid
        coords[l, y, x] is the projection of (x, y) at depth planes.depths[l]

    """
    if width is None:
        width = K.width
    if height is None:
        height = K.height
    if width < 1 or height < 1:
        raise ValueError('Warp grid size must be at least 1x1.')
    depths = np.asarray(planes.depths, dtype=float)[:, None, None]
    grid = _project_lattice(K, pose, depths, width, height)
    log.debug('Computed warp grid of shape {0} ({1:.1f}% in bounds)'.format(
        grid.shape, 100.0 * np.mean(grid.inBounds)))
    return grid


def project_depth_map(K, pose, depth):
    """
    Warps the reference lattice into a paired view using a per-pixel depth.

    Parameters
    ----------
    K : CameraIntrinsics
        Intrinsics matching the depth map size
    pose : CameraPose
        Reference-to-paired pose
    depth : array
        H x W depth map in meters

    Returns
    -------
    grid : WarpGrid
        Grid with a single layer (L = 1)

    """
    depth = np.asarray(depth, dtype=float)
    height, width = depth.shape
    grid = _project_lattice(K, pose, depth[None], width, height)
    grid.inBounds &= np.isfinite(depth)[None] & (depth[None] > 0)
    return grid


def scale_intrinsics(K, sx, sy=None):
    """
    Rescales intrinsics for a resampled image, keeping pixel centers aligned.

    Parameters
    ----------
    K : CameraIntrinsics
        Input intrinsics
    sx : float
        Horizontal scale (e.g. 0.25 for quarter-resolution features)
    sy : float, optional
        Vertical scale; defaults to sx

    Returns
    -------
    K : CameraIntrinsics

    Notes
    -----
    The principal point maps as c' = (c + 0.5) * s - 0.5. The scaled image size
    is rounded half up, floor(size * s + 0.5).

    """
    if sy is None:
        sy = sx
    if not (sx > 0 and sy > 0):
        raise ValueError('Scale factors must be positive (got {0!r}, '
                         '{1!r}).'.format(sx, sy))
    return CameraIntrinsics(K.fx * sx, K.fy * sy,
                            (K.cx + 0.5) * sx - 0.5, (K.cy + 0.5) * sy - 0.5,
                            int(np.floor(K.width * sx + 0.5)),
                            int(np.floor(K.height * sy + 0.5)))
