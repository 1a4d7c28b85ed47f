from __future__ import annotations

from typing import Any

from flask import Flask, request

from ..config import env_bool, load_config
from ..logging import log_http
from .http_api import handle_activity, handle_design, handle_threshold, handle_tree_verify, health_response

SERVER_DEBUG = env_bool('SQUID_FANIN_DEBUG', False)

app = Flask(__name__)


def _respond(result: tuple[dict[str, Any], int]) -> Any:
    body, status = result
    log_http(request.method, request.path, status, error_code=body.get('error_code'))
    return body, status


@app.route('/health', methods=['GET'])
def health() -> Any:
    return _respond(health_response())


@app.route('/api/v1/activity', methods=['POST'])
def activity() -> Any:
    return _respond(handle_activity(request.get_json(silent=True)))


@app.route('/api/v1/design', methods=['POST'])
def design() -> Any:
    return _respond(handle_design(request.get_json(silent=True)))


@app.route('/api/v1/tree-verify', methods=['POST'])
def tree_verify() -> Any:
    return _respond(handle_tree_verify(request.get_json(silent=True)))


@app.route('/api/v1/threshold', methods=['POST'])
def threshold() -> Any:
    return _respond(handle_threshold(request.get_json(silent=True)))


if __name__ == '__main__':
    config = load_config()
    app.run(host=config.host, port=config.port, debug=SERVER_DEBUG, use_reloader=False)
