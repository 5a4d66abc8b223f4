# -*- coding: utf-8 -*-
#
# This module stores the version and changelog

# Version number
__version__ = '0.3.0'

# Change log
def changelog():
    log = """
    SweepTool Changelog.
    -----------------------------------------------

    2026/10/12 - Version 0.3.0

        Add number-of-views study to the ablate operation

        Add plot operation for depth and error maps

        Append absolute relative inverse error to the metric rows

    2026/09/28 - Version 0.2.0

        Add context-aware cost aggregation and the upsampleCost option

        Checkpoints now echo the network configuration as text

    2026/09/02 - Version 0.1.0 (initial release)
    """

    print(log)
