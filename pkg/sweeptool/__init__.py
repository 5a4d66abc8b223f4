# -*- coding: utf-8 -*-
#
# This module initializes the SweepTool module
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

"""The load() convenience function is used to load a checkpoint into a
SweepModel object.

"""

from ._version import changelog, __version__
from . import _logging as logger
logger.setLevel('info')


def load(checkpoint=None, config=None, seed=0):
    """
    Loads a trained network, or creates a new one, and returns a SweepModel.

    Parameters
    ----------
    checkpoint : str, optional
        Checkpoint directory written by the train operation. If not given, a
        new network is initialized
    config : NetworkConfig, optional
        Configuration of a new network (default: the full-size configuration)
    seed : int, optional
        Initialization seed of a new network

    Returns
    -------
    SweepModel object
        A SweepModel object that stores the network and provides methods for
        training, inference and evaluation.

    Examples
    --------
    Load a trained network and predict the depth of a scene::

        >>> import sweeptool
        >>> m = sweeptool.load('run1/')
        >>> initial, refined, volume = m.infer(scene)

    Create an untrained toy-scale network::

        >>> from sweeptool.network import NetworkConfig
        >>> m = sweeptool.load(config=NetworkConfig.toy(), seed=3)

    """
    from .sweepmodel import SweepModel

    return SweepModel(config=config, seed=seed, checkpoint=checkpoint)
