# -*- coding: utf-8 -*-
#
# This module defines the sweeptool command-line interface
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
from argparse import ArgumentParser

from . import _logging
from . import operations
from .operations_lib import stepKey
from .parset import Parset

log = logging.getLogger('SweepTool.CLI')

# Exit code for usage errors
USAGE_ERROR = 2

# Maps subcommand name to (operation module name, {argument dest: option})
_commands = {
    'generate': ('generate', {'out': 'OutDir', 'spec': 'Spec', 'n_views': 'NViews',
                              'seed': 'Seed', 'count': 'Count', 'size': 'Size',
                              'noise': 'Noise', 'config': 'ConfigFile'}),
    'train': ('train', {'config': 'ConfigFile', 'out': 'OutDir', 'steps': 'Steps',
                        'seed': 'Seed', 'data': 'DataDir'}),
    'infer': ('infer', {'checkpoint': 'Checkpoint', 'scene': 'SceneDir',
                        'out': 'OutDir', 'views': 'Views'}),
    'eval': ('evaluate', {'pred': 'PredDir', 'gt': 'GtDir', 'out': 'OutFile',
                          'threshold': 'Threshold'}),
    'ablate': ('ablate', {'config': 'ConfigFile', 'out': 'OutDir', 'steps': 'Steps',
                          'seed': 'Seed', 'data': 'DataDir',
                          'max_views': 'MaxViews'}),
    'gradcheck': ('gradcheck', {'seed': 'Seed', 'size': 'Size', 'out': 'OutFile'}),
    'plot': ('plot', {'scene': 'SceneDir', 'pred': 'PredDir', 'out': 'OutFile'}),
}


def build_parser():
    """
    Returns the argument parser with one subparser per command.
    """
    parser = ArgumentParser(prog='sweeptool',
                            description='Plane-sweep multi-view depth estimation')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='Print debug messages')
    parser.add_argument('-q', '--quiet', action='store_true',
                        help='Print only warnings and errors')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('generate', help='Generate synthetic scenes')
    p.add_argument('--spec', default='planes',
                   choices=['planes', 'textured-planes', 'box-room', 'sphere-field'],
                   help='Scene layout (default: planes)')
    p.add_argument('--n-views', type=int, default=2,
                   help='Number of paired views (default: 2)')
    p.add_argument('--seed', type=int, default=0, help='Seed of the first scene')
    p.add_argument('--out', required=True, help='Output directory')
    p.add_argument('--count', type=int, default=1, help='Number of scenes')
    p.add_argument('--size', type=int, help='Image width and height in pixels')
    p.add_argument('--noise', type=float, help='Standard deviation of image noise')
    p.add_argument('--config', help='Configuration file')

    p = sub.add_parser('train', help='Train a network')
    p.add_argument('--config', required=True, help='Configuration file')
    p.add_argument('--out', required=True, help='Checkpoint directory')
    p.add_argument('--steps', type=int, required=True, help='Number of steps')
    p.add_argument('--seed', type=int, required=True, help='Training seed')
    p.add_argument('--data', help='Directory of training scenes')

    p = sub.add_parser('infer', help='Predict depth maps')
    p.add_argument('--checkpoint', required=True, help='Checkpoint directory')
    p.add_argument('--scene', required=True,
                   help='Scene directory or directory of scenes')
    p.add_argument('--out', required=True, help='Output directory')
    p.add_argument('--views', type=int, help='Number of paired views to use')

    p = sub.add_parser('eval', help='Evaluate predicted depth maps')
    p.add_argument('--pred', required=True, help='Prediction directory')
    p.add_argument('--gt', required=True, help='Ground-truth scene directory')
    p.add_argument('--out', help='Metric table (CSV)')
    p.add_argument('--threshold', type=float, help='Completeness threshold')

    p = sub.add_parser('ablate', help='Run the ablation study')
    p.add_argument('--config', required=True, help='Configuration file')
    p.add_argument('--out', required=True, help='Output directory')
    p.add_argument('--steps', type=int, required=True,
                   help='Training steps per variant')
    p.add_argument('--seed', type=int, required=True, help='Training seed')
    p.add_argument('--data', help='Directory of training scenes')
    p.add_argument('--max-views', type=int, default=3,
                   help='Largest view count of the view study (default: 3)')

    p = sub.add_parser('gradcheck', help='Check gradients by finite differences')
    p.add_argument('--seed', type=int, default=0, help='Seed of the inputs')
    p.add_argument('--size', type=int, default=16,
                   help='Image size of the pipeline check (default: 16)')
    p.add_argument('--out', help='Result table (CSV)')

    p = sub.add_parser('plot', help='Plot a scene and its predicted depth')
    p.add_argument('--scene', required=True, help='Scene directory')
    p.add_argument('--pred', required=True, help='Prediction directory')
    p.add_argument('--out', required=True, help='Output image')
    return parser


def to_parset(args):
    """
    Converts parsed arguments to a Parset of step options.

    Returns
    -------
    step : str
        Operation module name (also used as step name)
    parset : Parset

    """
    step, options = _commands[args.command]
    parset = Parset()
    for dest, option in options.items():
        value = getattr(args, dest, None)
        if value is not None:
            parset.replace(stepKey(step, option), value)
    return step, parset


def main(argv=None):
    """
    Runs the command given by argv.

    Returns
    -------
    code : int
        0 on success, 1 if the operation failed and 2 on a usage error

    Examples
    --------
    ::

        >>> main(['generate', '--spec', 'planes', '--n-views', '2', '--seed',
        ...       '7', '--out', 'data/'])
        0

    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else USAGE_ERROR

    if args.verbose:
        _logging.setLevel('debug')
    elif args.quiet:
        _logging.setLevel('warning')

    step, parset = to_parset(args)
    log.debug('Running {0} with options:\n{1}'.format(
        step, '\n'.join('{0} = {1}'.format(k, parset.getString(k))
                        for k in parset.keys())))
    return getattr(operations, step).run(step, parset)
