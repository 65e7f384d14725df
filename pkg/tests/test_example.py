import mock

from pyGOAT import example
from pyGOAT.Stereo_Matching.metrics import RegionReport


def test_example_reports_a_missing_aggregate(tmp_path, capsys):
    aggregate = RegionReport.empty('aggregate')
    with mock.patch('pyGOAT.generate_dataset'), \
            mock.patch('pyGOAT.train_goat') as train_goat, \
            mock.patch('pyGOAT.evaluate_goat') as evaluate_goat, \
            mock.patch('pyGOAT.estimate_disparity'):
        train_goat.return_value.losses = [0.25]
        train_goat.return_value.checkpoints = [tmp_path / 'model.goat']
        evaluate_goat.return_value.aggregate = aggregate
        evaluate_goat.return_value.reports = [RegionReport.empty('000000')]
        example.main()
    output = capsys.readouterr().out
    assert 'EPE (all pixels): n/a' in output
    assert 'Run failed' not in output
