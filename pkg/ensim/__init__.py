"""
Exposure notification simulator.

Simulates devices running the decentralized exposure notification service,
a health-authority key server, honest and malicious apps, beacons and a
ground-truth oracle, all driven deterministically from a scenario file.
"""

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Optional

from flask import Flask


CONSOLE_FORMAT = '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'
FILE_FORMAT = '[%(asctime)s] %(levelname)s [%(name)s.%(funcName)s:%(lineno)d] %(message)s'


def configure_logging(app: Optional[Flask] = None, level: Optional[int] = None, log_dir: Optional[str] = None):
    """
    Configure package logging.

    Args:
        app: Flask app whose logger gets the same handlers (optional)
        level: Logging level; defaults to ENSIM_LOG
        log_dir: Directory for the rotating log file; none if omitted
    """
    from ensim.config import log_level_from_env

    if level is None:
        level = app.config['LOG_LEVEL'] if app is not None else log_level_from_env()
    if log_dir is None and app is not None:
        log_dir = app.config.get('LOG_DIR')

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    handlers = [console_handler]

    # File handler
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = RotatingFileHandler(
            os.path.join(log_dir, 'ensim.log'),
            maxBytes=10485760,  # 10MB
            backupCount=10
        )
        file_handler.setLevel(level)
        file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
        handlers.append(file_handler)

    package_logger = logging.getLogger('ensim')
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)
    package_logger.setLevel(level)
    for handler in handlers:
        package_logger.addHandler(handler)
    package_logger.propagate = False

    if app is not None:
        app.logger.setLevel(level)
        for handler in handlers:
            app.logger.addHandler(handler)

    package_logger.debug(f"Logging configured (level: {logging.getLevelName(level)})")


def create_app(config_name: Optional[str] = None, server=None) -> Flask:
    """
    Flask application factory for the authority HTTP facade.

    Args:
        config_name: Key into ensim.config.config; defaults to ENSIM_ENV
        server: DiagnosisKeyServer to expose; a fresh one if omitted
    """
    app = Flask(__name__)

    # Load configuration
    if config_name is None:
        config_name = os.environ.get('ENSIM_ENV', 'production')

    from ensim.config import config
    app.config.from_object(config[config_name])

    configure_logging(app)

    from ensim.protocol.authority import DiagnosisKeyServer
    app.extensions['authority'] = server if server is not None else DiagnosisKeyServer()

    # Register blueprints
    from ensim.routes import authority_routes
    app.register_blueprint(authority_routes.bp)

    # Health check endpoint
    @app.route('/health')
    def health():
        return {'status': 'healthy'}, 200

    return app
