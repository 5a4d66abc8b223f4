# -*- coding: utf-8 -*-
#
# Defines the SweepModel object: a depth network with its parameters and
# history, with methods that run the pipeline operations.
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

from . import network
from . import operations
from . import tableio
from . import trainer


class SweepModel(object):
    """
    Object that stores a depth network and provides methods for using it.
    """
    def __init__(self, config=None, params=None, seed=0, checkpoint=None):
        """
        Initializes SweepModel object.

        Parameters
        ----------
        config : NetworkConfig, optional
            Network configuration (default: the full-size configuration). Ignored
            when checkpoint is given
        params : dict, optional
            Parameter tensors; initialized from seed if not given
        seed : int, optional
            Initialization seed
        checkpoint : str, optional
            Checkpoint directory to load

        Examples
        --------
        Create an untrained toy-scale model::

            >>> m = SweepModel(NetworkConfig.toy(), seed=3)

        Load a trained model::

            >>> m = SweepModel(checkpoint='run1/')

        """
        self.log = logging.getLogger('SweepTool')
        self.history = []
        self.checkpoint = None
        if checkpoint is not None:
            self.params, self.config, parset = tableio.load_checkpoint(checkpoint)
            self.checkpoint = checkpoint
            self._addHistory("LOAD (from checkpoint '{0}')".format(checkpoint))
        else:
            if config is None:
                config = network.NetworkConfig.full()
            self.config = config
            if params is None:
                self.params = network.init_params(config, seed)
                self._addHistory('INIT (seed = {0})'.format(seed))
            else:
                self.params = trainer.copy_params(params)
                self._addHistory('INIT (from given parameters)')
        self._info()

    def __len__(self):
        """
        Returns the number of parameter tensors.
        """
        return len(self.params)

    def _addHistory(self, entry=""):
        """
        Adds entry to the history with current date and time

        Parameters
        ----------
        entry : str, optional
            String to add to history

        """
        import datetime
        current_time = str(datetime.datetime.now()).split('.')[0]
        self.history.append(current_time + ": " + str(entry))

    def _info(self, useLogInfo=False):
        """
        Prints information about the model.
        """
        if useLogInfo:
            logCall = self.log.info
        else:
            logCall = self.log.debug
        nValues = sum(p.size for p in self.params.values())
        c = self.config
        info = 'Model has {0} parameter tensors ({1} values):\n'\
               '      CH = {2}, L = {3}, dMin = {4} m, feature stride {5}\n'\
               '      Cost variant: {6}; aggregation: {7}; sampling: {8}\n'\
               '      Checkpoint: {9}\n\n'\
               '      History:\n'\
               '      {10}'.format(len(self.params), nValues, c.CH, c.L, c.dMin,
                                   c.featureStride, c.costVariant,
                                   'on' if c.aggregation else 'off',
                                   c.samplingMode, self.checkpoint,
                                   '\n      '.join(self.history))
        logCall(info)
        return info

    def info(self):
        """
        Prints information about the model.
        """
        self._info(useLogInfo=True)

    def copy(self):
        """
        Returns a copy of the model.
        """
        import copy

        # Loggers are not deep-copyable
        self.log = None
        modelCopy = copy.deepcopy(self)
        modelCopy.log = logging.getLogger('SweepTool')
        modelCopy.params = trainer.copy_params(self.params)
        modelCopy._addHistory('COPY')
        self.log = logging.getLogger('SweepTool')
        return modelCopy

    def write(self, outDir, extra=None):
        """
        Writes the model to a checkpoint directory.

        Parameters
        ----------
        outDir : str
            Checkpoint directory
        extra : dict, optional
            Additional entries for the echoed configuration

        """
        tableio.save_checkpoint(outDir, self.params, self.config, extra)
        self.checkpoint = outDir
        self._addHistory("WRITE (to '{0}')".format(outDir))

    def train(self, scenes, steps, seed=0, **kwargs):
        """
        Trains the model on a list of scenes.

        Parameters
        ----------
        scenes : list of SyntheticScene
            Training scenes
        steps : int
            Number of optimizer steps
        seed : int, optional
            Sampling seed
        **kwargs
            Passed on to trainer.train() (batchSize, learningRate, lam,
            viewsPerSample, logInterval, checkedMode)

        Returns
        -------
        curve : astropy.table.Table
            Loss curve with columns step, loss, initial, refined

        Examples
        --------
        ::

            >>> scenes = generate_dataset(SceneSpec(), 50, seed=1000)
            >>> curve = m.train(scenes, 1000, seed=0)

        """
        return operations.train.train(self, scenes, steps, seed=seed, **kwargs)

    def infer(self, scene, views=None):
        """
        Predicts the reference-view depth of a scene.

        Parameters
        ----------
        scene : SyntheticScene
            Input scene
        views : int, optional
            Number of paired views to use (default: all)

        Returns
        -------
        initialDepth : DepthMap
        refinedDepth : DepthMap
        volume : CostVolume

        """
        return operations.infer.infer_scene(self, scene, views)

    def evaluate(self, scenes, views=None, threshold=0.1):
        """
        Evaluates the model on scenes with ground truth.

        Returns
        -------
        table : astropy.table.Table
            One row per scene plus a 'mean' row, DepthMetrics columns

        """
        return operations.evaluate.evaluate_model(self, scenes, views=views,
                                                  threshold=threshold)

    def plot(self, scene, fileName=None, views=None):
        """
        Plots the reference image, ground truth, prediction and error of a scene.

        Parameters
        ----------
        scene : SyntheticScene
            Input scene
        fileName : str, optional
            If given, the plot is saved to a file instead of displayed

        """
        initialDepth, refinedDepth, volume = self.infer(scene, views)
        operations.plot.plot(scene, refinedDepth, fileName=fileName,
                             initialDepth=initialDepth)
