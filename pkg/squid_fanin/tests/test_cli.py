from __future__ import annotations

import importlib
import io
import json
from pathlib import Path

import pandas as pd
import pytest

from squid_fanin.cli.commands import parse_bias_spec, parse_int_range, parse_range
from squid_fanin.constants import TOOLKIT_VERSION
from squid_fanin.errors import ArgumentError, ConstraintViolationError

# The package re-exports main() as squid_fanin.cli.main, shadowing the submodule.
cli_main = importlib.import_module('squid_fanin.cli.main')


def _read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, comment='#')


def _write_config(tmp_path: Path, payload: dict[str, object]) -> Path:
    path = tmp_path / 'design.json'
    path.write_text(json.dumps(payload), encoding='utf-8')
    return path


def test_parse_bias_spec_includes_both_ends() -> None:
    assert parse_bias_spec('0:1:0.25') == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(parse_bias_spec('0:1:0.01')) == 101
    assert parse_bias_spec('0.7,0.9') == [0.7, 0.9]
    with pytest.raises(ArgumentError):
        parse_bias_spec('0.5:0.1:0.1')
    with pytest.raises(ArgumentError):
        parse_bias_spec('0.5,1.2')


def test_parse_ranges() -> None:
    assert parse_int_range('2:10:4', '--n') == [2, 6, 10]
    assert parse_int_range('3,5', '--n') == [3, 5]
    assert parse_range('0:0.5', '--range') == (0.0, 0.5)
    with pytest.raises(ArgumentError):
        parse_range('1:0', '--range')
    with pytest.raises(ArgumentError):
        parse_int_range('10:2', '--n')


def test_activity_table_values(tmp_path: Path) -> None:
    output = tmp_path / 'activity.csv'
    code = cli_main.main(['activity', '--bias', '0.7,1.0', '--H', '1,5', '--output', str(output)])
    assert code == 0

    frame = _read_csv(output)
    assert list(frame.columns) == ['bias_ratio', 'H', 'activity_fraction', 'unreachable']
    assert len(frame) == 4
    values = {(row.bias_ratio, row.H): row.activity_fraction for row in frame.itertuples()}
    assert values[(0.7, 1)] == pytest.approx(0.5455, abs=1e-4)
    assert values[(0.7, 5)] == pytest.approx(0.0483, abs=1e-4)
    assert values[(1.0, 1)] == 0.0
    assert values[(1.0, 5)] == 0.0


def test_activity_default_bias_grid(tmp_path: Path) -> None:
    output = tmp_path / 'grid.csv'
    assert cli_main.main(['activity', '--H', '1', '--output', str(output)]) == 0
    frame = _read_csv(output)
    assert len(frame) == 101
    assert bool(frame['unreachable'].iloc[0])
    assert not bool(frame['unreachable'].iloc[-1])


def test_activity_output_is_deterministic(tmp_path: Path) -> None:
    argv = ['activity', '--bias', '0:1:0.05', '--H', '1,2,3', '--output', str(tmp_path / 'run.csv')]
    assert cli_main.main(argv) == 0
    first = (tmp_path / 'run.csv').read_bytes()
    assert cli_main.main(argv) == 0
    second = (tmp_path / 'run.csv').read_bytes()

    assert first == second
    assert b'\r\n' not in first
    header = first.decode('utf-8').splitlines()[0]
    assert header.startswith(f'# squid-fanin {TOOLKIT_VERSION} invocation: squid-fanin activity')


def test_activity_integer_mode(tmp_path: Path) -> None:
    output = tmp_path / 'integer.csv'
    code = cli_main.main([
        'activity', '--bias', '0.3,0.7', '--H', '2', '--integer', '--n', '10', '--output', str(output),
    ])
    assert code == 0
    frame = _read_csv(output)
    unreachable = frame[frame['bias_ratio'] == 0.3].iloc[0]
    assert bool(unreachable['unreachable'])
    assert pd.isna(unreachable['activity_fraction'])
    reachable = frame[frame['bias_ratio'] == 0.7].iloc[0]
    assert reachable['activity_fraction'] == pytest.approx(0.36, rel=1e-12)


def test_activity_integer_mode_needs_fan_in(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli_main.main(['activity', '--bias', '0.7', '--integer']) == 2
    assert 'error:' in capsys.readouterr().err


def test_activity_json_format(tmp_path: Path) -> None:
    output = tmp_path / 'activity.json'
    code = cli_main.main(['activity', '--bias', '0.9', '--H', '3', '--format', 'json', '--output', str(output)])
    assert code == 0
    document = json.loads(output.read_text(encoding='utf-8'))
    assert document['version'] == TOOLKIT_VERSION
    assert document['invocation'].startswith('squid-fanin activity')
    assert document['columns'] == ['bias_ratio', 'H', 'activity_fraction', 'unreachable']
    assert document['rows'][0]['activity_fraction'] == pytest.approx(0.00601, abs=1e-5)


def test_response_rows_per_bias(tmp_path: Path) -> None:
    output = tmp_path / 'response.csv'
    code = cli_main.main([
        'response', '--bias', '0.9,0.5,0.7', '--range', '0:1', '--points', '201',
        '--t-settle', '5', '--t-measure', '20', '--output', str(output),
    ])
    assert code == 0
    frame = _read_csv(output)
    assert list(frame.columns) == ['bias_ratio', 'phi_over_phi0', 'r_fq_normalized']
    assert len(frame) == 603
    assert list(frame['bias_ratio'].unique()) == [0.5, 0.7, 0.9]
    assert (frame['r_fq_normalized'] >= 0).all()
    assert frame['phi_over_phi0'].iloc[0] == 0.0
    assert frame['phi_over_phi0'].iloc[200] == 1.0


def test_response_output_is_deterministic(tmp_path: Path) -> None:
    argv = [
        'response', '--bias', '0.7,0.9', '--range', '0:1', '--points', '11',
        '--t-settle', '10', '--t-measure', '60', '--output', str(tmp_path / 'response.csv'),
    ]
    assert cli_main.main(argv) == 0
    first = (tmp_path / 'response.csv').read_bytes()
    assert cli_main.main(argv) == 0
    second = (tmp_path / 'response.csv').read_bytes()

    assert first == second
    assert b'\r\n' not in first
    assert first.decode('utf-8').splitlines()[0].startswith(f'# squid-fanin {TOOLKIT_VERSION} invocation: squid-fanin response')


def test_design_collection_with_sidecar(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {'ic_uA': 300, 'l_dc1_pH': 10, 'k1': 0.5, 'k2': 0.5})
    output = tmp_path / 'design.csv'
    code = cli_main.main(['design', '--mode', 'collection', '--config', str(config), '--n', '2:10', '--output', str(output)])
    assert code == 0

    frame = _read_csv(output)
    assert len(frame) == 9
    assert (frame['mode'] == 'collection').all()
    assert frame['l_di2_pH'].is_monotonic_decreasing
    assert (frame['round_trip_error'] <= 1e-12).all()
    assert not frame['difficult_to_fabricate'].any()

    sidecar = json.loads((tmp_path / 'design.csv.feasibility.json').read_text(encoding='utf-8'))
    assert sidecar['mode'] == 'collection'
    assert sidecar['rows_checked'] == 9
    assert sidecar['l_di2_asymptote_H']['0.5'] > 0


def test_design_no_collection_flags_small_inductances(tmp_path: Path) -> None:
    config = _write_config(tmp_path, {'k_values': [0.5], 'ic_values_uA': [300]})
    report = tmp_path / 'report.json'
    output = tmp_path / 'nc.csv'
    code = cli_main.main([
        'design', '--mode', 'no_collection', '--config', str(config), '--n', '10,1000',
        '--output', str(output), '--report', str(report),
    ])
    assert code == 0
    frame = _read_csv(output)
    assert frame['difficult_to_fabricate'].tolist() == [False, True]
    feasibility = json.loads(report.read_text(encoding='utf-8'))
    assert feasibility['below_fabrication_limit'] == 1
    assert len(feasibility['warnings']) == 1


def test_design_vary_ic_reports_sfq_consistency(tmp_path: Path) -> None:
    output = tmp_path / 'vary.json'
    code = cli_main.main(['design', '--mode', 'vary_ic', '--n', '4,100', '--format', 'json', '--output', str(output)])
    assert code == 0
    document = json.loads(output.read_text(encoding='utf-8'))
    assert [row['ic_di_A'] for row in document['rows']] == pytest.approx([300e-6, 12e-6])
    assert document['feasibility']['sfq_consistency'][0]['ratio'] == pytest.approx(2.0)


@pytest.mark.parametrize('payload', [
    {'ic': 3e-4},
    {'ic_pH': 300},
    {'alpha_pH': 0.1},
    {'k': 0.5},
    {'units': 'imperial'},
    {'n_values': [0, 2]},
])
def test_design_rejects_bad_config(tmp_path: Path, payload: dict[str, object]) -> None:
    config = _write_config(tmp_path, payload)
    assert cli_main.main(['design', '--mode', 'collection', '--config', str(config), '--n', '2,3']) == 2


def test_design_accepts_si_tagged_config(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write_config(tmp_path, {'units': 'SI', 'ic': 3e-4, 'l_dc1': 1e-11})
    assert cli_main.main(['design', '--mode', 'collection', '--config', str(config), '--n', '2,3']) == 0
    captured = capsys.readouterr()
    frame = pd.read_csv(io.StringIO(captured.out), comment='#')
    assert len(frame) == 2

    report_start = captured.err.index('{')
    feasibility = json.loads(captured.err[report_start:])
    assert feasibility['mode'] == 'collection'
    assert feasibility['rows_checked'] == 2


def test_design_missing_config_file(tmp_path: Path) -> None:
    assert cli_main.main(['design', '--config', str(tmp_path / 'absent.json')]) == 2


def test_design_constraint_failure_exit_code(monkeypatch: pytest.MonkeyPatch) -> None:
    def failing(*_args, **_kwargs):
        raise ConstraintViolationError('round trip failed')

    monkeypatch.setattr(cli_main, 'cmd_design', failing)
    assert cli_main.main(['design', '--n', '2,3']) == 4


def test_tree_verify_exhaustive(tmp_path: Path) -> None:
    output = tmp_path / 'verify.json'
    assert cli_main.main(['tree-verify', '3', '2', '0.7', '--output', str(output)]) == 0
    report = json.loads(output.read_text(encoding='utf-8'))
    assert report['agree'] is True
    assert report['p'] == 2
    assert report['P_analytic'] == report['P_bruteforce'] == 4
    assert report['witness'] == [0, 1, 3, 4]
    assert report['witness_minimal'] is True


def test_tree_verify_constructive(tmp_path: Path) -> None:
    output = tmp_path / 'verify.json'
    assert cli_main.main(['tree-verify', '10', '3', '0.7', '--mode', 'constructive', '--output', str(output)]) == 0
    report = json.loads(output.read_text(encoding='utf-8'))
    assert report['agree'] is True
    assert report['P_constructive'] == 216
    assert report['fired_per_level'] == [1, 6, 36, 216]


def test_tree_verify_dynamical_near_unreachable_bias(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setenv('SQUID_FANIN_RESPONSE_POINTS', '11')
    output = tmp_path / 'verify.json'
    code = cli_main.main([
        'tree-verify', '2', '1', '0.47', '--mode', 'dynamical',
        '--t-settle', '50', '--t-measure', '400', '--output', str(output),
    ])
    assert code == 0
    report = json.loads(output.read_text(encoding='utf-8'))
    assert report['agree'] is True
    assert report['beta_l'] < 1.0
    assert report['soma_fired_all_saturated'] == {'binary': True, 'dynamical': True}
    assert report['soma_fired_all_zero'] == {'binary': False, 'dynamical': False}
    assert report['soma_rate_all_saturated'] > 0
    assert report['soma_rate_all_zero'] == 0.0


def test_tree_verify_unreachable_bias() -> None:
    assert cli_main.main(['tree-verify', '3', '2', '0.3']) == 2


def test_tree_verify_disagreement_exit_code(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    monkeypatch.setattr(cli_main, 'cmd_tree_verify', lambda *args, **kwargs: {'agree': False})
    assert cli_main.main(['tree-verify', '2', '2', '0.7', '--output', str(tmp_path / 'out.json')]) == 5


def test_fanin_table(capsys: pytest.CaptureFixture[str]) -> None:
    assert cli_main.main(['fanin', '--synapses', '8,10000,10648', '--H', '3']) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out), comment='#')
    rows = {int(row.n_synapses): row for row in frame.itertuples()}
    assert bool(rows[8].exact)
    assert rows[8].dendrites_integer_n == 6
    assert not bool(rows[10000].exact)
    assert rows[10000].dendrites_integer_n == 506
    assert rows[10000].dendrites_real_n == pytest.approx(485.7, abs=0.5)
    assert rows[10648].dendrites_integer_n == 506


def test_threshold_static_only(tmp_path: Path) -> None:
    output = tmp_path / 'threshold.json'
    assert cli_main.main(['threshold', '--bias', '0.7', '--static-only', '--output', str(output)]) == 0
    payload = json.loads(output.read_text(encoding='utf-8'))
    assert payload['phi_th_static'] == pytest.approx(0.3534, abs=2e-3)
    assert payload['phi_th_analytic'] == pytest.approx(0.2727, abs=1e-4)
    assert 'phi_th_simulated' not in payload


def test_threshold_matched_screening(tmp_path: Path) -> None:
    output = tmp_path / 'threshold.json'
    code = cli_main.main(['threshold', '--bias', '0.6', '--static-only', '--matched-screening', '--output', str(output)])
    assert code == 0
    payload = json.loads(output.read_text(encoding='utf-8'))
    assert payload['beta_l'] < 1.0
    assert payload['phi_th_static'] == pytest.approx(payload['phi_th_analytic'], abs=1e-9)


def test_threshold_missing_exit_code() -> None:
    code = cli_main.main(['threshold', '--bias', '0.3', '--t-settle', '10', '--t-measure', '40'])
    assert code == 3


def test_argument_errors_exit_two() -> None:
    with pytest.raises(SystemExit) as excinfo:
        cli_main.main(['activity', '--format', 'xml'])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        cli_main.main(['--version'])
    assert excinfo.value.code == 0
