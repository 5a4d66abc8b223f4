# -*- coding: utf-8 -*-
#
# Defines the file formats used by SweepTool:
#   - PFM depth maps (grayscale, little-endian)
#   - 8-bit PGM images
#   - camera files (one K / R / t block per view)
#   - checkpoints (serialized parameter tensors + echoed configuration)
#   - scene directories
#   - astropy.table reader and writer for metric tables ('metrics' format)
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

import glob
import logging
import os
import re
import struct
from collections import OrderedDict

import numpy as np
from astropy.io import registry
from astropy.table import Table

from . import tensor as T
from .geometry import CameraIntrinsics, CameraPose
from .metrics import DepthMetrics
from .network import DepthMap, NetworkConfig
from .parset import Parset

log = logging.getLogger('SweepTool.TABLEIO')

CHECKPOINT_MAGIC = b'SWCKPT01'
CONFIG_FILE = 'model.cfg'
WEIGHTS_FILE = 'weights.bin'
DEPTH_FILE = 'depth.pfm'
CAMERA_FILE = 'cameras.txt'


def _read_token(buf, offset):
    """
    Reads one whitespace-delimited header token and the single whitespace
    character after it.
    """
    start = offset
    while offset < len(buf) and buf[offset:offset+1].isspace():
        offset += 1
    begin = offset
    while offset < len(buf) and not buf[offset:offset+1].isspace():
        offset += 1
    if begin == offset:
        raise IOError('Unexpected end of header at byte {0}.'.format(start))
    token = buf[begin:offset]
    if offset >= len(buf):
        raise IOError('Unexpected end of header at byte {0}.'.format(offset))
    return token, begin, offset + 1


def read_pfm(fileName):
    """
    Reads a grayscale little-endian PFM file.

    Returns
    -------
    depth : DepthMap
        Pixels stored as 0 (or non-finite) are invalid

    """
    with open(fileName, 'rb') as f:
        buf = f.read()
    return parse_pfm(buf, fileName)


def parse_pfm(buf, fileName='<bytes>'):
    token, pos, offset = _read_token(buf, 0)
    if token == b'PF':
        raise IOError('{0}: color PFM files are not supported (byte '
                      '{1}).'.format(fileName, pos))
    if token != b'Pf':
        raise IOError("{0}: bad PFM magic {1!r} at byte {2}; expected "
                      "'Pf'.".format(fileName, token, pos))
    values = []
    for what in ('width', 'height', 'scale'):
        token, pos, offset = _read_token(buf, offset)
        try:
            values.append(float(token) if what == 'scale' else int(token))
        except ValueError:
            raise IOError('{0}: could not parse PFM {1} {2!r} at byte '
                          '{3}.'.format(fileName, what, token, pos))
        if what != 'scale' and values[-1] < 1:
            raise IOError('{0}: PFM {1} must be positive (byte {2}).'.format(
                fileName, what, pos))
    width, height, scale = values
    if scale > 0:
        raise IOError('{0}: big-endian PFM files (positive scale {1} at byte {2}) '
                      'are not supported.'.format(fileName, scale, pos))
    if scale == 0:
        raise IOError('{0}: PFM scale of zero at byte {1}.'.format(fileName, pos))
    expected = 4 * width * height
    if len(buf) - offset < expected:
        raise IOError('{0}: PFM payload truncated at byte {1} (expected {2} bytes, '
                      'found {3}).'.format(fileName, len(buf), expected,
                                           len(buf) - offset))
    data = np.frombuffer(buf, dtype='<f4', count=width * height, offset=offset)
    # Rows are stored bottom to top
    depth = np.flipud(data.reshape(height, width)).astype(np.float64)
    valid = np.isfinite(depth) & (depth > 0)
    return DepthMap(np.where(valid, depth, 0.0), valid)


def write_pfm(fileName, depth):
    """
    Writes a depth map as grayscale little-endian PFM; invalid pixels become 0.
    """
    if isinstance(depth, DepthMap):
        values = depth.asArray()
    else:
        values = np.asarray(depth, dtype=float)
        values = np.where(np.isfinite(values) & (values > 0), values, 0.0)
    values = np.squeeze(values)
    if values.ndim != 2:
        raise ValueError('Depth map must be 2-D (got shape {0}).'.format(values.shape))
    height, width = values.shape
    with open(fileName, 'wb') as f:
        f.write('Pf\n{0} {1}\n-1.0\n'.format(width, height).encode('ascii'))
        f.write(np.ascontiguousarray(np.flipud(values), dtype='<f4').tobytes())


def read_pgm(fileName):
    """
    Reads a binary (P5) PGM image, returning intensities in [0, 1].
    """
    with open(fileName, 'rb') as f:
        buf = f.read()
    # Drop comment lines in the header
    header = []
    offset = 0
    while len(header) < 4:
        token, pos, offset = _read_token(buf, offset)
        if token.startswith(b'#'):
            end = buf.find(b'\n', pos)
            offset = len(buf) if end < 0 else end + 1
            continue
        header.append((token, pos))
    if header[0][0] != b'P5':
        raise IOError("{0}: bad PGM magic {1!r} at byte {2}; expected "
                      "'P5'.".format(fileName, header[0][0], header[0][1]))
    try:
        width, height, maxval = [int(t) for t, p in header[1:]]
    except ValueError:
        raise IOError('{0}: could not parse the PGM header at byte {1}.'.format(
            fileName, header[1][1]))
    if maxval < 1 or maxval > 255:
        raise IOError('{0}: only 8-bit PGM files are supported (maxval {1} at byte '
                      '{2}).'.format(fileName, maxval, header[3][1]))
    if len(buf) - offset < width * height:
        raise IOError('{0}: PGM payload truncated at byte {1}.'.format(fileName,
                                                                       len(buf)))
    data = np.frombuffer(buf, dtype=np.uint8, count=width * height, offset=offset)
    return data.reshape(height, width).astype(np.float64) / maxval


def write_pgm(fileName, image):
    """
    Writes intensities in [0, 1] as an 8-bit binary PGM image.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise ValueError('Only single-channel images can be written as PGM.')
    height, width = image.shape
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(fileName, 'wb') as f:
        f.write('P5\n{0} {1}\n255\n'.format(width, height).encode('ascii'))
        f.write(data.tobytes())


def read_cameras(fileName, worldToCamera=False):
    """
    Reads a camera file.

    Each block holds three lines::

        K fx fy cx cy width height
        R r11 r12 r13 r21 r22 r23 r31 r32 r33
        t tx ty tz

    The first block is the reference view.

    Parameters
    ----------
    fileName : str
        Camera file
    worldToCamera : bool, optional
        If True, the (R, t) of each block map world to camera coordinates and
        are converted to reference-to-view poses. If False (default), the
        poses are already reference-to-view

    Returns
    -------
    intrinsics : list of CameraIntrinsics
    poses : list of CameraPose

    """
    expected = {'K': 6, 'R': 9, 't': 3}
    order = ('K', 'R', 't')
    blocks = []
    current = {}
    with open(fileName) as f:
        for lineno, line in enumerate(f):
            fields = line.split()
            if len(fields) == 0 or fields[0].startswith('#'):
                continue
            key = fields[0]
            if key not in expected:
                raise IOError("{0}, line {1}: unknown camera entry '{2}'".format(
                    fileName, lineno+1, key))
            if key != order[len(current)]:
                raise IOError("{0}, line {1}: expected '{2}' but found "
                              "'{3}'".format(fileName, lineno+1,
                                             order[len(current)], key))
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError:
                raise IOError('{0}, line {1}: could not parse numbers'.format(
                    fileName, lineno+1))
            if len(values) != expected[key]:
                raise IOError("{0}, line {1}: '{2}' needs {3} values, got "
                              "{4}".format(fileName, lineno+1, key, expected[key],
                                           len(values)))
            current[key] = values
            if len(current) == 3:
                blocks.append(current)
                current = {}
    if current:
        raise IOError('{0}: incomplete camera block at end of file'.format(fileName))
    if len(blocks) == 0:
        raise IOError('{0}: no cameras found'.format(fileName))

    intrinsics = []
    rawPoses = []
    for b in blocks:
        fx, fy, cx, cy, width, height = b['K']
        intrinsics.append(CameraIntrinsics(fx, fy, cx, cy, int(round(width)),
                                           int(round(height))))
        rawPoses.append((np.array(b['R']).reshape(3, 3), np.array(b['t'])))
    if worldToCamera:
        refR, refT = rawPoses[0]
        poses = [CameraPose.fromWorldToCamera(refR, refT, R, t) for R, t in rawPoses]
    else:
        poses = [CameraPose(R, t) for R, t in rawPoses]
    return intrinsics, poses


def write_cameras(fileName, intrinsics, poses):
    """
    Writes a camera file (one block per pose, all sharing intrinsics if a
    single CameraIntrinsics is given).
    """
    if isinstance(intrinsics, CameraIntrinsics):
        intrinsics = [intrinsics] * len(poses)
    if len(intrinsics) != len(poses):
        raise ValueError('Got {0} intrinsics but {1} poses.'.format(
            len(intrinsics), len(poses)))
    lines = []
    for K, pose in zip(intrinsics, poses):
        lines.append('K {0!r} {1!r} {2!r} {3!r} {4} {5}'.format(
            float(K.fx), float(K.fy), float(K.cx), float(K.cy), K.width, K.height))
        lines.append('R ' + ' '.join(repr(float(v)) for v in pose.R.ravel()))
        lines.append('t ' + ' '.join(repr(float(v)) for v in pose.t))
        lines.append('')
    with open(fileName, 'w') as f:
        f.write('\n'.join(lines))


def save_checkpoint(outDir, params, config, extra=None):
    """
    Writes parameters and configuration to a checkpoint directory.

    Parameters
    ----------
    outDir : str
        Checkpoint directory (created if needed)
    params : dict
        Parameter name -> Tensor
    config : NetworkConfig
        Network configuration, echoed to model.cfg
    extra : dict, optional
        Additional key = value entries for model.cfg (e.g. training settings)

    """
    if not os.path.isdir(outDir):
        os.makedirs(outDir)
    text = config.toParsetString()
    if extra:
        text += Parset(values=extra).toString()
    with open(os.path.join(outDir, CONFIG_FILE), 'w') as f:
        f.write(text)
    chunks = [CHECKPOINT_MAGIC, struct.pack('<I', len(params))]
    for name, p in params.items():
        encoded = name.encode('utf-8')
        chunks.append(struct.pack('<I', len(encoded)))
        chunks.append(encoded)
        chunks.append(T.tensor_to_bytes(p))
    with open(os.path.join(outDir, WEIGHTS_FILE), 'wb') as f:
        f.write(b''.join(chunks))
    log.debug('Wrote checkpoint with {0} tensors to {1}'.format(len(params), outDir))


def load_checkpoint(inDir):
    """
    Reads a checkpoint directory.

    Returns
    -------
    params : OrderedDict
        Parameter name -> Tensor (requiresGrad=True)
    config : NetworkConfig
    parset : Parset
        Everything found in model.cfg

    """
    cfgFile = os.path.join(inDir, CONFIG_FILE)
    weightsFile = os.path.join(inDir, WEIGHTS_FILE)
    if not os.path.exists(cfgFile) or not os.path.exists(weightsFile):
        raise IOError('{0} is not a checkpoint directory (needs {1} and '
                      '{2}).'.format(inDir, CONFIG_FILE, WEIGHTS_FILE))
    parset = Parset(cfgFile)
    config = NetworkConfig.fromParset(parset)
    with open(weightsFile, 'rb') as f:
        buf = f.read()
    if buf[:8] != CHECKPOINT_MAGIC:
        raise IOError('{0}: bad checkpoint magic at byte 0.'.format(weightsFile))
    if len(buf) < 12:
        raise IOError('{0}: truncated checkpoint header at byte 8.'.format(weightsFile))
    count = struct.unpack_from('<I', buf, 8)[0]
    offset = 12
    params = OrderedDict()
    for i in range(count):
        if len(buf) < offset + 4:
            raise IOError('{0}: truncated entry at byte {1}.'.format(weightsFile,
                                                                    offset))
        nameLength = struct.unpack_from('<I', buf, offset)[0]
        offset += 4
        name = buf[offset:offset+nameLength].decode('utf-8')
        offset += nameLength
        tensor, offset = T.tensor_from_bytes(buf, offset)
        params[name] = T.Tensor(tensor.values, requiresGrad=True)
    return params, config, parset


def scene_dir_name(seed):
    return 'scene_{0}'.format(seed)


def save_scene(scene, outDir):
    """
    Writes a scene directory outDir/scene_<seed>/ and returns its path.

    The directory holds view_<k>.pgm (k = 0 is the reference), depth.pfm and
    cameras.txt.
    """
    path = os.path.join(outDir, scene_dir_name(scene.seed))
    if not os.path.isdir(path):
        os.makedirs(path)
    for k, image in enumerate(scene.images):
        write_pgm(os.path.join(path, 'view_{0}.pgm'.format(k)), image)
    write_pfm(os.path.join(path, DEPTH_FILE), scene.depth)
    write_cameras(os.path.join(path, CAMERA_FILE), scene.intrinsics, scene.poses)
    return path


def _seed_from_name(path):
    match = re.match(r'scene_(-?\d+)$', os.path.basename(os.path.normpath(path)))
    return int(match.group(1)) if match else 0


def load_scene(path, worldToCamera=False):
    """
    Reads a scene directory written by save_scene().
    """
    from .scene import SyntheticScene

    if not os.path.isdir(path):
        raise IOError('Scene directory {0} not found.'.format(path))
    intrinsics, poses = read_cameras(os.path.join(path, CAMERA_FILE), worldToCamera)
    for K in intrinsics[1:]:
        if K != intrinsics[0]:
            raise ValueError('{0}: all views must share one set of '
                             'intrinsics.'.format(path))
    images = []
    for k in range(len(poses)):
        imageFile = os.path.join(path, 'view_{0}.pgm'.format(k))
        if not os.path.exists(imageFile):
            raise IOError('{0}: missing image {1}.'.format(path, imageFile))
        images.append(read_pgm(imageFile))
    depthFile = os.path.join(path, DEPTH_FILE)
    if os.path.exists(depthFile):
        depth = read_pfm(depthFile)
    else:
        depth = None
    return SyntheticScene(images, depth, intrinsics[0], poses,
                          seed=_seed_from_name(path))


def find_scenes(inDir):
    """
    Returns the scene directories below inDir, sorted by seed.
    """
    if os.path.exists(os.path.join(inDir, CAMERA_FILE)):
        return [inDir]
    paths = [p for p in glob.glob(os.path.join(inDir, 'scene_*')) if os.path.isdir(p)]
    return sorted(paths, key=_seed_from_name)


def load_dataset(inDir):
    paths = find_scenes(inDir)
    if len(paths) == 0:
        raise IOError('No scene directories found in {0}.'.format(inDir))
    return [load_scene(p) for p in paths]


def write_meta(fileName, entries):
    with open(fileName, 'w') as f:
        f.write(Parset(values=entries).toString(list(entries.keys())))


def read_meta(fileName):
    return Parset(fileName)


def metricsTable(rows, names=None, aggregate=True):
    """
    Builds a table with a scene column followed by the DepthMetrics fields.

    Parameters
    ----------
    rows : list of DepthMetrics
        One row per scene
    names : list of str, optional
        Scene names
    aggregate : bool, optional
        If True, a final 'mean' row is appended

    """
    if names is None:
        names = ['scene_{0}'.format(i) for i in range(len(rows))]
    table = Table(names=('scene',) + DepthMetrics._fields,
                  dtype=('U64',) + ('f8',) * len(DepthMetrics._fields))
    for name, row in zip(names, rows):
        table.add_row((name,) + tuple(row))
    if aggregate and len(rows) > 0:
        means = [float(np.mean([getattr(r, f) for r in rows]))
                 for f in DepthMetrics._fields]
        table.add_row(['mean'] + means)
    return table


def metricsReader(fileName):
    """
    Reads a metric table written with format='metrics'.
    """
    table = Table.read(fileName, format='ascii.csv')
    missing = [c for c in ('scene',) + DepthMetrics._fields if c not in table.colnames]
    if missing:
        raise IOError('{0}: missing metric columns {1}'.format(fileName,
                                                               ', '.join(missing)))
    return table


def metricsWriter(table, fileName, overwrite=True):
    """
    Writes a metric table as comma-separated text, full precision.
    """
    out = table.copy()
    for name in DepthMetrics._fields:
        if name in out.colnames:
            out[name].info.format = '.17g'
    out.write(fileName, format='ascii.csv', overwrite=overwrite)


def metricsIdentify(origin, *args, **kwargs):
    """
    Identifies metric tables by the header line.
    """
    if isinstance(args[0], str) and os.path.isfile(args[0]):
        with open(args[0]) as f:
            header = f.readline().strip()
        return header.startswith('scene,abs_rel')
    return False


def write_table(table, fileName):
    """
    Writes a table (loss curve, comparison table) as comma-separated text.
    """
    table.write(fileName, format='ascii.csv', overwrite=True)


def read_table(fileName):
    return Table.read(fileName, format='ascii.csv')


registry.register_reader('metrics', Table, metricsReader)
registry.register_identifier('metrics', Table, metricsIdentify)
registry.register_writer('metrics', Table, metricsWriter)
