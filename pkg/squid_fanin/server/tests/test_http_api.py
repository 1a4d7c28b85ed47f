from __future__ import annotations

import pytest

import squid_fanin.server.app as server_app
import squid_fanin.server.http_api as http_api
from squid_fanin.constants import TOOLKIT_VERSION
from squid_fanin.errors import ConstraintViolationError, SaturationViolationError


@pytest.fixture
def client():
    server_app.app.config['TESTING'] = True
    return server_app.app.test_client()


def test_health(client) -> None:
    response = client.get('/health')
    assert response.status_code == 200
    body = response.get_json()
    assert body['status'] == 'ok'
    assert body['version'] == TOOLKIT_VERSION
    assert isinstance(body['timestamp'], str)


def test_health_response_uses_clock() -> None:
    body, status = http_api.health_response(utc_now_iso=lambda: '2020-01-01T00:00:00+00:00')
    assert status == 200
    assert body['timestamp'] == '2020-01-01T00:00:00+00:00'


def test_activity(client) -> None:
    response = client.post('/api/v1/activity', json={'bias': [0.7, 0.9], 'H': [1, 3]})
    assert response.status_code == 200
    body = response.get_json()
    assert body['ok'] is True
    assert body['columns'] == ['bias_ratio', 'H', 'activity_fraction', 'unreachable']
    assert len(body['rows']) == 4
    assert body['rows'][0]['activity_fraction'] == pytest.approx(0.5455, abs=1e-4)


def test_activity_integer_mode_without_fan_in(client) -> None:
    response = client.post('/api/v1/activity', json={'bias': [0.7], 'integer': True})
    assert response.status_code == 400
    assert response.get_json()['error_code'] == 'invalid_argument'


def test_activity_rejects_bad_body(client) -> None:
    response = client.post('/api/v1/activity', json=[0.7])
    assert response.status_code == 400
    assert response.get_json()['ok'] is False

    response = client.post('/api/v1/activity', json={'bias': 'high'})
    assert response.status_code == 400


def test_design(client) -> None:
    response = client.post('/api/v1/design', json={
        'mode': 'sfq',
        'config': {'ic_uA': 300, 'n_values': [1, 2, 50]},
    })
    assert response.status_code == 200
    body = response.get_json()
    assert [row['n'] for row in body['rows']] == [1, 2, 50]
    assert body['feasibility']['mode'] == 'sfq'
    assert body['feasibility']['rows_checked'] == 3


def test_design_rejects_unitless_current(client) -> None:
    response = client.post('/api/v1/design', json={'mode': 'sfq', 'config': {'ic': 3e-4}})
    assert response.status_code == 400
    assert response.get_json()['error_code'] == 'invalid_argument'


def test_tree_verify(client) -> None:
    response = client.post('/api/v1/tree-verify', json={'n': 2, 'H': 2, 'bias': 0.9})
    assert response.status_code == 200
    body = response.get_json()
    assert body['agree'] is True
    assert body['P_analytic'] == 1


def test_tree_verify_unreachable(client) -> None:
    response = client.post('/api/v1/tree-verify', json={'n': 3, 'H': 2, 'bias': 0.3})
    assert response.status_code == 400
    assert response.get_json()['error_code'] == 'unreachable_threshold'


def test_threshold_static(client) -> None:
    response = client.post('/api/v1/threshold', json={'bias': 0.9})
    assert response.status_code == 200
    body = response.get_json()
    assert body['phi_th_static'] == pytest.approx(0.169, abs=2e-3)
    assert 'phi_th_simulated' not in body


def test_threshold_matched_screening(client) -> None:
    response = client.post('/api/v1/threshold', json={'bias': 0.7, 'matched': True})
    assert response.status_code == 200
    body = response.get_json()
    assert body['beta_l'] < 1.0
    assert body['phi_th_static'] == pytest.approx(body['phi_th_analytic'], abs=1e-9)


def test_threshold_rejects_non_bool_simulate(client) -> None:
    response = client.post('/api/v1/threshold', json={'bias': 0.9, 'simulate': 'yes'})
    assert response.status_code == 400
    response = client.post('/api/v1/threshold', json={'bias': 0.9, 'matched': 1})
    assert response.status_code == 400


def test_error_response_status_codes() -> None:
    body, status = http_api.error_response(SaturationViolationError('too much current'))
    assert status == 400
    assert body == {'ok': False, 'error': 'too much current', 'error_code': 'saturation_violation'}

    body, status = http_api.error_response(ConstraintViolationError('bad l_di2'))
    assert status == 422
    assert body['error_code'] == 'constraint_violation'
