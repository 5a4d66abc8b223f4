#! /usr/bin/env python
# Tests of the command-line entry point
import os

import pytest

from sweeptool import tableio
from sweeptool.cli import main, build_parser, to_parset, USAGE_ERROR
from sweeptool.network import NetworkConfig
from sweeptool.sweepmodel import SweepModel


def test_generate(tmp_path):
    code = main(['generate', '--spec', 'planes', '--n-views', '2', '--seed', '7',
                 '--size', '16', '--out', str(tmp_path)])
    assert code == 0
    assert sorted(os.listdir(str(tmp_path / 'scene_7'))) == \
        ['cameras.txt', 'depth.pfm', 'view_0.pgm', 'view_1.pgm', 'view_2.pgm']


def test_help():
    assert main(['--help']) == 0
    assert main(['train', '--help']) == 0


@pytest.mark.parametrize('argv', [
    [],
    ['fly'],
    ['train', '--config', 'toy.cfg'],
    ['generate', '--out', 'x', '--n-views', 'two'],
    ['generate', '--out', 'x', '--spec', 'forest'],
])
def test_usage_errors(argv):
    assert main(argv) == USAGE_ERROR


def test_missing_checkpoint(tmp_path):
    assert main(['-q', 'infer', '--checkpoint', str(tmp_path / 'none'), '--scene',
                 str(tmp_path), '--out', str(tmp_path / 'pred')]) == 1


def test_infer_and_eval(tmp_path):
    data = str(tmp_path / 'data')
    assert main(['-q', 'generate', '--seed', '3', '--size', '16', '--out', data]) == 0
    ckpt = str(tmp_path / 'ckpt')
    SweepModel(NetworkConfig.toy(), seed=0).write(ckpt)
    pred = str(tmp_path / 'pred')
    assert main(['-q', 'infer', '--checkpoint', ckpt, '--scene', data, '--out',
                 pred, '--views', '1']) == 0
    metrics = str(tmp_path / 'metrics.csv')
    assert main(['-q', 'eval', '--pred', pred, '--gt', data, '--out', metrics]) == 0
    table = tableio.read_table(metrics)
    assert list(table['scene']) == ['scene_3', 'mean']


def test_to_parset():
    args = build_parser().parse_args(['eval', '--pred', 'p/', '--gt', 'g/'])
    step, parset = to_parset(args)
    assert step == 'evaluate'
    assert parset.getString('SweepTool.Steps.evaluate.PredDir') == 'p/'
    assert parset.getString('SweepTool.Steps.evaluate.GtDir') == 'g/'
    assert not parset.isDefined('SweepTool.Steps.evaluate.OutFile')

    args = build_parser().parse_args(['ablate', '--config', 'c.cfg', '--out', 'o',
                                      '--steps', '5', '--seed', '1'])
    step, parset = to_parset(args)
    assert parset.getInt('SweepTool.Steps.ablate.MaxViews') == 3
    assert parset.getInt('SweepTool.Steps.ablate.Steps') == 5
