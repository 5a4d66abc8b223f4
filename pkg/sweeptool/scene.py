# -*- coding: utf-8 -*-
#
# This module defines the synthetic multiview scene generator: procedural
# layouts are ray cast from every camera, giving exact reference-view depth.
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
from scipy.spatial.transform import Rotation

from .geometry import CameraIntrinsics, CameraPose, project_depth_map
from .network import DepthMap

log = logging.getLogger('SweepTool.SCENE')

TEXTURED_PLANES = 'textured-planes'
BOX_ROOM = 'box-room'
SPHERE_FIELD = 'sphere-field'
layouts = (TEXTURED_PLANES, BOX_ROOM, SPHERE_FIELD)

# Short names accepted on the command line
layoutAliases = {'planes': TEXTURED_PLANES, 'box-room': BOX_ROOM,
                 'sphere-field': SPHERE_FIELD}

MAX_RETRIES = 20
TEXTURELESS_VALUE = 0.5

# The finest texture octave spans at least this many pixels per cycle on every
# surface, measured at FOOTPRINT_PERCENTILE of the surface's pixel footprints
TEXTURE_PIXELS_PER_CYCLE = 12.0
FOOTPRINT_PERCENTILE = 95.0

# Largest relative disagreement between the projected depth of a reference
# point and the paired view's depth at that location for the point to count
# as visible in the paired view
COVISIBILITY_TOLERANCE = 0.01
_HIT_EPS = 1e-9


class SceneSpec(object):
    """
    Recipe for a synthetic scene.

    Parameters
    ----------
    layout : str
        One of 'textured-planes', 'box-room' or 'sphere-field' (or 'planes')
    nViews : int
        Number of paired views (N >= 1)
    width, height : int
        Image size in pixels
    baseline : tuple of float
        (min, max) distance in meters of paired camera centers from the
        reference camera
    rotationJitter : float
        Standard deviation in radians of the paired-camera rotation
    octaves : int
        Octaves of the procedural value-noise texture
    textureScale : float, optional
        Upper limit on the lattice frequency of the first octave in cycles per
        meter. The texture of every surface is band-limited to the camera
        sampling regardless (see TEXTURE_PIXELS_PER_CYCLE)
    depthRange : tuple of float
        (min, max) depth in meters that reference-view depth must lie in
    texturelessSize : float
        Side of a square constant-intensity patch, as a fraction of the image
        width (0 for none)
    noiseSigma : float
        Standard deviation of Gaussian noise added to every image
    focalScale : float
        Focal length in units of the image width
    planes : list of (normal, offset), optional
        Explicit infinite planes n.X = offset (reference-camera frame); when
        given, they replace the layout geometry

    """
    def __init__(self, layout=TEXTURED_PLANES, nViews=2, width=32, height=32,
                 baseline=(0.1, 0.3), rotationJitter=0.02, octaves=3,
                 textureScale=None, depthRange=(1.0, 3.5), texturelessSize=0.0,
                 noiseSigma=0.0, focalScale=0.8, planes=None):
        layout = layoutAliases.get(layout, layout)
        if layout not in layouts:
            raise ValueError("Layout '{0}' not understood. Must be one of: "
                             "{1}".format(layout, ', '.join(layouts)))
        if int(nViews) < 1:
            raise ValueError('At least one paired view is needed (got '
                             '{0}).'.format(nViews))
        if int(width) < 2 or int(height) < 2:
            raise ValueError('Image size must be at least 2x2.')
        baseline = tuple(float(b) for b in baseline)
        if len(baseline) != 2 or not 0 < baseline[0] <= baseline[1]:
            raise ValueError('Baseline range must satisfy 0 < min <= max (got '
                             '{0}).'.format(baseline))
        depthRange = tuple(float(d) for d in depthRange)
        if len(depthRange) != 2 or not 0 < depthRange[0] < depthRange[1]:
            raise ValueError('Depth range must satisfy 0 < min < max (got '
                             '{0}).'.format(depthRange))
        if octaves < 1:
            raise ValueError('Texture needs at least one octave.')
        if not 0 <= texturelessSize < 1:
            raise ValueError('Textureless patch size must be in [0, 1).')
        if noiseSigma < 0 or focalScale <= 0 or rotationJitter < 0:
            raise ValueError('Noise, jitter and focal scale must be non-negative '
                             '(focal scale positive).')
        self.layout = layout
        self.nViews = int(nViews)
        self.width = int(width)
        self.height = int(height)
        self.baseline = baseline
        self.rotationJitter = float(rotationJitter)
        self.octaves = int(octaves)
        self.textureScale = None if textureScale is None else float(textureScale)
        if self.textureScale is not None and not self.textureScale > 0:
            raise ValueError('Texture scale must be positive (got '
                             '{0}).'.format(textureScale))
        self.depthRange = depthRange
        self.texturelessSize = float(texturelessSize)
        self.noiseSigma = float(noiseSigma)
        self.focalScale = float(focalScale)
        self.planes = None
        if planes is not None:
            self.planes = []
            for normal, offset in planes:
                normal = np.asarray(normal, dtype=float)
                norm = np.linalg.norm(normal)
                if norm == 0:
                    raise ValueError('Plane normal must be non-zero.')
                self.planes.append((normal / norm, float(offset) / norm))

    def intrinsics(self):
        f = self.focalScale * self.width
        return CameraIntrinsics(f, f, (self.width - 1) / 2.0,
                                (self.height - 1) / 2.0, self.width, self.height)

    def __repr__(self):
        return 'SceneSpec(layout={0!r}, nViews={1}, size={2}x{3})'.format(
            self.layout, self.nViews, self.width, self.height)


class SyntheticScene(object):
    """
    Rendered views of a synthetic scene with exact reference-view depth.

    Attributes
    ----------
    images : list of array
        H x W intensities in [0, 1]; images[0] is the reference view
    depth : DepthMap
        Reference-view depth
    intrinsics : CameraIntrinsics
        Intrinsics shared by all views
    poses : list of CameraPose
        Reference-to-view poses; poses[0] is the identity
    seed : int
        Generation seed
    radiance : list of array or None
        Noise-free, unquantized renders of every view (generated scenes only)
    covisible : list of array or None
        For every paired view, the reference pixels that are visible in it
        and whose bilinear neighbourhood lies on one surface (generated
        scenes only)

    """
    def __init__(self, images, depth, intrinsics, poses, seed=0, spec=None,
                 radiance=None, covisible=None):
        if len(images) != len(poses):
            raise ValueError('Got {0} images but {1} poses.'.format(len(images),
                                                                    len(poses)))
        if len(images) < 2:
            raise ValueError('A scene needs a reference and at least one paired '
                             'view.')
        self.images = [np.asarray(im, dtype=float) for im in images]
        self.depth = depth
        self.intrinsics = intrinsics
        self.poses = list(poses)
        self.seed = seed
        self.spec = spec
        self.radiance = radiance
        self.covisible = covisible

    @property
    def referenceImage(self):
        return self.images[0]

    @property
    def pairedImages(self):
        return self.images[1:]

    @property
    def pairedPoses(self):
        return self.poses[1:]

    @property
    def nViews(self):
        return len(self.images) - 1

    @property
    def name(self):
        return 'scene_{0}'.format(self.seed)

    def __repr__(self):
        return 'SyntheticScene(seed={0}, nViews={1}, size={2}x{3})'.format(
            self.seed, self.nViews, self.intrinsics.width, self.intrinsics.height)


class SolidTexture(object):
    """
    Multi-octave 3-D value noise evaluated at world points.

    Octave o samples the noise lattice at frequency * 2**o cycles per meter,
    with amplitude 2**-o. The frequency may be given per point, so that
    every surface carries its own band limit.
    """
    def __init__(self, rng, octaves=3, tableSize=256):
        self.perm = rng.permutation(tableSize)
        self.table = rng.random(tableSize)
        self.octaves = octaves
        self.offsets = rng.random((octaves, 3)) * tableSize
        self.size = tableSize

    def _hash(self, i, j, k):
        n = self.size
        return self.perm[(self.perm[(self.perm[i % n] + j) % n] + k) % n]

    def _octave(self, points):
        base = np.floor(points).astype(np.int64)
        frac = points - base
        w = frac * frac * (3.0 - 2.0 * frac)
        out = np.zeros(len(points))
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    corner = self.table[self._hash(base[:, 0] + dx, base[:, 1] + dy,
                                                   base[:, 2] + dz)]
                    weight = ((w[:, 0] if dx else 1 - w[:, 0]) *
                              (w[:, 1] if dy else 1 - w[:, 1]) *
                              (w[:, 2] if dz else 1 - w[:, 2]))
                    out += weight * corner
        return out

    def __call__(self, points, frequency):
        points = np.asarray(points, dtype=float)
        frequency = np.broadcast_to(np.asarray(frequency, dtype=float),
                                    (len(points),))[:, None]
        total = np.zeros(len(points))
        norm = 0.0
        for o in range(self.octaves):
            amplitude = 0.5**o
            total += amplitude * self._octave(points * (frequency * 2**o) +
                                              self.offsets[o])
            norm += amplitude
        return total / norm


def _plane_hits(origin, dirs, normal, offset, bounds=None):
    denom = dirs.dot(normal)
    with np.errstate(divide='ignore', invalid='ignore'):
        s = (offset - origin.dot(normal)) / denom
    s = np.where(np.abs(denom) > _HIT_EPS, s, np.inf)
    s = np.where(s > _HIT_EPS, s, np.inf)
    if bounds is not None:
        (xMin, xMax), (yMin, yMax) = bounds
        with np.errstate(invalid='ignore'):
            points = origin[None] + s[:, None] * dirs
            inside = ((points[:, 0] >= xMin) & (points[:, 0] <= xMax) &
                      (points[:, 1] >= yMin) & (points[:, 1] <= yMax))
        s = np.where(inside, s, np.inf)
    return s


def _sphere_hits(origin, dirs, center, radius):
    oc = origin - center
    a = np.sum(dirs * dirs, axis=1)
    b = 2.0 * dirs.dot(oc)
    c = oc.dot(oc) - radius**2
    disc = b * b - 4 * a * c
    root = np.sqrt(np.maximum(disc, 0.0))
    near = (-b - root) / (2 * a)
    far = (-b + root) / (2 * a)
    s = np.where(near > _HIT_EPS, near, np.where(far > _HIT_EPS, far, np.inf))
    return np.where(disc >= 0, s, np.inf)


class _Layout(object):
    """
    A set of primitives in the reference-camera (world) frame.
    """
    def __init__(self):
        self.planes = []
        self.spheres = []

    def addPlane(self, normal, offset, bounds=None):
        normal = np.asarray(normal, dtype=float)
        norm = np.linalg.norm(normal)
        self.planes.append((normal / norm, float(offset) / norm, bounds))

    def addSphere(self, center, radius):
        self.spheres.append((np.asarray(center, dtype=float), float(radius)))

    def contains(self, point):
        return any(np.linalg.norm(point - c) <= r for c, r in self.spheres)

    def __len__(self):
        return len(self.planes) + len(self.spheres)

    def cast(self, origin, dirs):
        """
        Returns the ray parameter of the nearest hit (inf where nothing is hit)
        and the index of the primitive hit (-1 where nothing is hit). Planes are
        numbered before spheres.
        """
        hits = [_plane_hits(origin, dirs, normal, offset, bounds)
                for normal, offset, bounds in self.planes]
        hits += [_sphere_hits(origin, dirs, center, radius)
                 for center, radius in self.spheres]
        best = np.full(len(dirs), np.inf)
        ids = np.full(len(dirs), -1, dtype=np.int64)
        for i, s in enumerate(hits):
            closer = s < best
            best = np.where(closer, s, best)
            ids[closer] = i
        return best, ids


def _build_layout(spec, rng):
    layout = _Layout()
    lo, hi = spec.depthRange
    if spec.planes is not None:
        for normal, offset in spec.planes:
            layout.addPlane(normal, offset)
        return layout

    if spec.layout == TEXTURED_PLANES:
        back = rng.uniform(lo + 0.5 * (hi - lo), lo + 0.7 * (hi - lo))
        tilt = rng.uniform(-0.15, 0.15, size=2)
        layout.addPlane((tilt[0], tilt[1], 1.0), back)
        for i in range(int(rng.integers(1, 3))):
            depth = rng.uniform(lo + 0.1 * (hi - lo), lo + 0.6 * (hi - lo))
            cx, cy = rng.uniform(-0.4, 0.4, size=2) * depth
            half = rng.uniform(0.2, 0.45, size=2) * depth
            tilt = rng.uniform(-0.3, 0.3, size=2)
            normal = np.array([tilt[0], tilt[1], 1.0])
            layout.addPlane(normal, normal.dot([cx, cy, depth]),
                            bounds=((cx - half[0], cx + half[0]),
                                    (cy - half[1], cy + half[1])))
    elif spec.layout == BOX_ROOM:
        back = rng.uniform(lo + 0.7 * (hi - lo), hi - 0.05 * (hi - lo))
        f = spec.focalScale
        # Side walls far enough that their nearest visible depth exceeds lo
        halfW = rng.uniform(1.1, 1.5) * lo * 0.5 / f
        halfH = halfW * spec.height / float(spec.width)
        layout.addPlane((0.0, 0.0, 1.0), back)
        layout.addPlane((1.0, 0.0, 0.0), halfW)
        layout.addPlane((-1.0, 0.0, 0.0), halfW)
        layout.addPlane((0.0, 1.0, 0.0), halfH)
        layout.addPlane((0.0, -1.0, 0.0), halfH)
        shift = rng.uniform(-0.1, 0.1, size=2) * halfW
        layout.planes = [(n, o + (n[:2].dot(shift) if abs(n[2]) < 1 else 0.0), b)
                         for n, o, b in layout.planes]
    else:
        back = rng.uniform(lo + 0.7 * (hi - lo), hi - 0.05 * (hi - lo))
        layout.addPlane((0.0, 0.0, 1.0), back)
        for i in range(int(rng.integers(3, 7))):
            depth = rng.uniform(lo + 0.25 * (hi - lo), lo + 0.6 * (hi - lo))
            radius = rng.uniform(0.1, 0.25) * depth
            xy = rng.uniform(-0.35, 0.35, size=2) * depth
            layout.addSphere((xy[0], xy[1], depth), radius)
    return layout


def _paired_pose(spec, rng):
    b = rng.uniform(*spec.baseline)
    phi = rng.uniform(0, 2 * np.pi)
    direction = np.array([np.cos(phi), 0.5 * np.sin(phi), rng.uniform(-0.2, 0.2)])
    center = b * direction / np.linalg.norm(direction)
    R = Rotation.from_rotvec(rng.normal(0.0, spec.rotationJitter, size=3)).as_matrix()
    return CameraPose(R, -R.dot(center))


def _pixel_rays(K):
    ys, xs = np.mgrid[0:K.height, 0:K.width].astype(float)
    return np.stack([((xs - K.cx) / K.fx).ravel(), ((ys - K.cy) / K.fy).ravel(),
                     np.ones(xs.size)], axis=1)


def _patch_mask(spec, rng):
    if spec.texturelessSize <= 0:
        return None
    side = spec.texturelessSize * spec.width
    x0 = rng.uniform(0, spec.width - side)
    y0 = rng.uniform(0, spec.height - side)
    return (x0, y0, side)


def cast_view(layout, K, pose):
    """
    Ray casts one view.

    Returns
    -------
    depth : array
        H x W camera-frame depth (inf where nothing is hit)
    ids : array
        H x W index of the primitive hit (-1 where nothing is hit)
    points : array
        H x W x 3 world points

    """
    rays = _pixel_rays(K)
    dirs = rays.dot(pose.R)
    origin = pose.center()
    s, ids = layout.cast(origin, dirs)
    hit = np.isfinite(s)
    points = origin[None] + np.where(hit, s, 0.0)[:, None] * dirs
    shape = (K.height, K.width)
    return s.reshape(shape), ids.reshape(shape), points.reshape(shape + (3,))


def surface_footprints(views, count, fallback):
    """
    Returns the size in meters of one pixel on every primitive.

    The footprint of a primitive is FOOTPRINT_PERCENTILE of the distances
    between the world points of adjacent pixels that both hit it, pooled over
    all views. Primitives never seen by two adjacent pixels get fallback.

    Parameters
    ----------
    views : list of (depth, ids, points)
        As returned by cast_view()
    count : int
        Number of primitives
    fallback : float
        Footprint of unseen primitives

    """
    samples = [[] for i in range(count)]
    for depth, ids, points in views:
        for a, b, pa, pb in ((ids[:, :-1], ids[:, 1:], points[:, :-1], points[:, 1:]),
                             (ids[:-1], ids[1:], points[:-1], points[1:])):
            same = (a == b) & (a >= 0)
            dist = np.linalg.norm(pa - pb, axis=-1)[same]
            owner = a[same]
            for i in np.unique(owner):
                samples[i].append(dist[owner == i])
    footprints = np.full(count, float(fallback))
    for i, s in enumerate(samples):
        if s:
            footprints[i] = np.percentile(np.concatenate(s), FOOTPRINT_PERCENTILE)
    return footprints


def texture_frequencies(spec, footprints):
    """
    First-octave texture frequency of every primitive in cycles per meter.

    The finest octave is held to TEXTURE_PIXELS_PER_CYCLE pixels per cycle, so
    that the rendered images are smooth at the pixel scale and bilinear
    resampling reproduces them.
    """
    top = 1.0 / (TEXTURE_PIXELS_PER_CYCLE * np.asarray(footprints, dtype=float))
    if spec.textureScale is not None:
        top = np.minimum(top, spec.textureScale * 2**(spec.octaves - 1))
    return top / 2**(spec.octaves - 1)


def shade_view(texture, frequencies, K, ids, points, patch=None):
    """
    Intensities of one cast view (0 where nothing is hit).
    """
    hit = ids >= 0
    values = np.zeros(ids.shape)
    values[hit] = texture(points[hit], frequencies[ids[hit]])
    if patch is not None:
        x0, y0, side = patch
        z = np.where(points[..., 2] > _HIT_EPS, points[..., 2], np.nan)
        with np.errstate(invalid='ignore'):
            u = K.fx * points[..., 0] / z + K.cx
            v = K.fy * points[..., 1] / z + K.cy
            flat = hit & (u >= x0) & (u < x0 + side) & (v >= y0) & (v < y0 + side)
        values[flat] = TEXTURELESS_VALUE
    return values


def covisibility_mask(refDepth, refIds, depth, ids, K, pose):
    """
    Reference pixels that a paired view sees on the same surface.

    A pixel qualifies when its projection lands inside the paired image, the
    four paired pixels around the projection hit the same primitive, and the
    paired depth there agrees with the projected depth within
    COVISIBILITY_TOLERANCE (so the point is not occluded).

    Parameters
    ----------
    refDepth, refIds : array
        Reference-view depth and primitive indices
    depth, ids : array
        Paired-view depth and primitive indices
    K : CameraIntrinsics
        Shared intrinsics
    pose : CameraPose
        Reference-to-paired pose

    """
    from .metrics import warp_image

    grid = project_depth_map(K, pose, refDepth)
    inBounds = grid.inBounds[0]
    height, width = ids.shape
    xs = np.where(inBounds, grid.coords[0, ..., 0], 0.0)
    ys = np.where(inBounds, grid.coords[0, ..., 1], 0.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    mask = inBounds.copy()
    for yy in (y0, y1):
        for xx in (x0, x1):
            mask &= ids[yy, xx] == refIds
    inverse, valid = warp_image(1.0 / depth, refDepth, K, pose)
    with np.errstate(invalid='ignore'):
        agree = np.abs(inverse[0] * grid.depth[0] - 1.0) < COVISIBILITY_TOLERANCE
    return mask & valid & agree


def quantize(image):
    """
    Clips to [0, 1] and rounds to the 8-bit levels used on disk.
    """
    return np.round(np.clip(image, 0.0, 1.0) * 255.0) / 255.0


def generate_scene(spec, seed=0):
    """
    Renders a synthetic scene.

    Every ray from every camera must hit the layout with positive depth and the
    reference depth must lie within spec.depthRange; otherwise the layout and
    cameras are redrawn from the next sub-seed, at most MAX_RETRIES times.

    The texture of each surface is band-limited to the pixel footprint it has
    in the views (see texture_frequencies()). Reference depth is stored at
    single precision, as it is written to disk.

    Parameters
    ----------
    spec : SceneSpec
        Scene recipe
    seed : int
        Generation seed

    Returns
    -------
    scene : SyntheticScene

    Examples
    --------
    A single fronto-parallel plane at 2 m::

        >>> spec = SceneSpec(planes=[((0, 0, 1), 2.0)], nViews=1)
        >>> generate_scene(spec, 7).depth.values.min()
        2.0

    """
    K = spec.intrinsics()
    lo, hi = spec.depthRange
    for attempt in range(MAX_RETRIES):
        rng = np.random.default_rng([int(seed), attempt])
        layout = _build_layout(spec, rng)
        texture = SolidTexture(rng, spec.octaves)
        patch = _patch_mask(spec, rng)
        poses = [CameraPose.identity()] + [_paired_pose(spec, rng)
                                           for i in range(spec.nViews)]
        degenerate = any(layout.contains(pose.center()) for pose in poses)
        if not degenerate:
            views = [cast_view(layout, K, pose) for pose in poses]
            refDepth, refIds, refPoints = views[0]
            degenerate = (not all(np.all(np.isfinite(v[0])) for v in views) or
                          refDepth.min() < lo or refDepth.max() > hi)
        if degenerate:
            log.debug('Scene {0}: degenerate layout on attempt {1}, '
                      'retrying'.format(seed, attempt))
            continue
        footprints = surface_footprints(views, len(layout), hi / min(K.fx, K.fy))
        frequencies = texture_frequencies(spec, footprints)
        radiance = [shade_view(texture, frequencies, K, ids, points, patch)
                    for depth, ids, points in views]
        covisible = [covisibility_mask(refDepth, refIds, depth, ids, K, pose)
                     for (depth, ids, points), pose in zip(views[1:], poses[1:])]
        images = radiance
        if spec.noiseSigma > 0:
            images = [im + rng.normal(0.0, spec.noiseSigma, size=im.shape)
                      for im in images]
        images = [quantize(im) for im in images]
        depth = refDepth.astype(np.float32).astype(np.float64)
        log.debug('Generated scene {0} ({1} layout, depth {2:.3f}-{3:.3f} m, '
                  'texture {4:.2f}-{5:.2f} cycles/m)'.format(
                      seed, spec.layout, depth.min(), depth.max(),
                      frequencies.min(), frequencies.max()))
        return SyntheticScene(images, DepthMap(depth), K, poses, seed=seed,
                              spec=spec, radiance=radiance, covisible=covisible)
    raise RuntimeError('Could not generate a valid scene for seed {0} in {1} '
                       'attempts.'.format(seed, MAX_RETRIES))


def generate_dataset(spec, count, seed=0):
    """
    Generates count scenes with seeds seed, seed+1, ...
    """
    if count < 1:
        raise ValueError('Scene count must be at least 1.')
    return [generate_scene(spec, seed + i) for i in range(count)]
